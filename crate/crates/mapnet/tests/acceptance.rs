//! End-to-end acceptance checks. Each test prints one PASS line; tolerances
//! and runtime budgets are pinned in the assertions.

use std::time::Instant;

use mapnet::detect::{
    bell_state, product_basis_state, run_contraction_test, run_positive_map_test, werner_state,
    Mode, Verdict,
};
use mapnet::linmaps::{
    extend_with_identity, identity_map, map_from_kraus_pairs, realignment_map, reduction_map,
    transpose_map, KrausPairDecomposition, LinearMap,
};
use mapnet::network::{
    binary_povm, dilation_unitary, mean_from_visibility, visibility_exact, visibility_with_uprime,
};
use mapnet::observables::{
    collective_observable, moment_exact, moment_with_observable, MomentVector, Observable,
};
use mapnet::spectra::spectrum_from_moments;
use mapnet::tensor::{
    cyclic_permutation_operator, hermitian_part, partial_transpose, permutation_operator, realign,
    trace_norm, CMatrix, DensityMatrix,
};
use mapnet::testkit::{random_density_dims, random_hermitian, random_matrix, random_unitary, rng};
use rand::Rng;

/// 1: the collective-observable mean reproduces Tr[Theta(rho)^k] across map
/// families, 50 (Theta, rho) pairs, k <= 4, at 1e-8; runtime < 30 s.
#[test]
fn criterion_1_observable_identity() {
    let start = Instant::now();
    let families: Vec<(&str, LinearMap, Vec<usize>, usize)> = vec![
        ("I⊗T 2x2", extend_with_identity(&transpose_map(2), 2).unwrap(), vec![2, 2], 20),
        ("I⊗T 2x3", extend_with_identity(&transpose_map(3), 2).unwrap(), vec![2, 3], 8),
        ("I⊗red 2x2", extend_with_identity(&reduction_map(2), 2).unwrap(), vec![2, 2], 12),
        (
            "kraus dim3",
            map_from_kraus_pairs(&KrausPairDecomposition {
                weights: vec![0.8, -0.6, 0.3],
                operators: vec![
                    random_matrix(3, 3, 301),
                    random_matrix(3, 3, 302),
                    random_matrix(3, 3, 303),
                ],
            })
            .unwrap(),
            vec![3],
            10,
        ),
    ];
    let mut cases = 0usize;
    for (fi, (name, theta, dims, count)) in families.iter().enumerate() {
        // the observable depends only on (Theta, k); build once per family
        let observables: Vec<Observable> =
            (1..=4).map(|k| collective_observable(theta, k).unwrap()).collect();
        for c in 0..*count {
            let rho = random_density_dims(dims, 10_000 + 100 * fi as u64 + c as u64);
            for (ki, obs) in observables.iter().enumerate() {
                let k = ki + 1;
                let exact = moment_exact(theta, &rho, k).unwrap();
                let via = moment_with_observable(obs, &rho).unwrap();
                assert!(
                    (exact - via).abs() < 1e-8,
                    "{name} case {c} k={k}: {exact} vs {via}"
                );
            }
            cases += 1;
        }
    }
    assert_eq!(cases, 50);
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 30.0, "runtime {secs:.1}s exceeds 30s");
    println!("ACCEPTANCE 1 observable identity (50 pairs, k<=4, 1e-8): PASS ({secs:.1}s)");
}

/// 2: closed forms of the partial-transpose observables for k = 2, 3, 4.
#[test]
fn criterion_2_partial_transpose_observables() {
    let theta = extend_with_identity(&transpose_map(2), 2).unwrap();
    let k2 = collective_observable(&theta, 2).unwrap();
    // O^(2) = V1^(2) ⊗ V2^(2): both local pairs swapped
    let swap_pairs = permutation_operator(&[2, 2, 2, 2], &[2, 3, 0, 1]).unwrap();
    assert!(k2.mat().max_abs_diff(&swap_pairs) < 1e-12);

    for k in [3usize, 4] {
        let obs = collective_observable(&theta, k).unwrap();
        let dims = vec![2usize; 2 * k];
        let mut fwd = vec![0usize; 2 * k];
        let mut bwd = vec![0usize; 2 * k];
        for i in 0..k {
            fwd[2 * i] = 2 * ((i + k - 1) % k);
            fwd[2 * i + 1] = 2 * ((i + 1) % k) + 1;
            bwd[2 * i] = 2 * ((i + 1) % k);
            bwd[2 * i + 1] = 2 * ((i + k - 1) % k) + 1;
        }
        let va_vbdag = permutation_operator(&dims, &fwd).unwrap();
        let vadag_vb = permutation_operator(&dims, &bwd).unwrap();
        let expected = va_vbdag.add(&vadag_vb).scale_re(0.5);
        assert!(obs.mat().max_abs_diff(&expected) < 1e-12, "k={k}");
    }
    println!("ACCEPTANCE 2 partial-transpose observable closed forms (k=2,3,4): PASS");
}

/// 3: Tr[(rho^{T_B})^2] = Tr[rho^2] on 100 random two-qubit states at 1e-10.
#[test]
fn criterion_3_purity_identity() {
    let theta = extend_with_identity(&transpose_map(2), 2).unwrap();
    for seed in 0..100 {
        let rho = random_density_dims(&[2, 2], 20_000 + seed);
        let pt_purity = moment_exact(&theta, &rho, 2).unwrap();
        let purity = rho.mat().matmul(rho.mat()).trace().re;
        assert!((pt_purity - purity).abs() < 1e-10, "seed {seed}");
    }
    println!("ACCEPTANCE 3 purity identity (100 states, 1e-10): PASS");
}

/// 4: every synthesized network satisfies the POVM/dilation contracts.
#[test]
fn criterion_4_network_contracts() {
    let mut observables: Vec<(String, Observable)> = Vec::new();
    let pt = extend_with_identity(&transpose_map(2), 2).unwrap();
    for k in [1usize, 2, 3] {
        observables.push((format!("I⊗T k={k}"), collective_observable(&pt, k).unwrap()));
    }
    let red = extend_with_identity(&reduction_map(2), 2).unwrap();
    observables.push(("I⊗red k=2".into(), collective_observable(&red, 2).unwrap()));
    observables.push(("id k=2".into(), collective_observable(&identity_map(2), 2).unwrap()));
    for seed in 0..5 {
        let dim = 2 + (seed as usize % 3);
        observables.push((
            format!("random herm {seed}"),
            Observable::from_matrix(random_hermitian(dim, 30_000 + seed), 1).unwrap(),
        ));
    }

    for (name, obs) in &observables {
        let n = obs.dim();
        let povm = binary_povm(obs).unwrap();
        let eye = CMatrix::identity(n);
        let completeness = povm
            .v0
            .matmul(&povm.v0)
            .add(&povm.v1.matmul(&povm.v1))
            .max_abs_diff(&eye);
        assert!(completeness < 1e-8, "{name}: completeness {completeness}");
        let comm = povm
            .v0
            .matmul(&povm.v1)
            .max_abs_diff(&povm.v1.matmul(&povm.v0));
        assert!(comm < 1e-8, "{name}: [V0,V1] residue {comm}");

        let d = dilation_unitary(&povm).unwrap();
        assert!(d.u_a.is_unitary(1e-8), "{name}: U_A not unitary");

        let sigma = {
            let g = random_matrix(n, n, 31_000);
            let gg = g.matmul(&g.adjoint());
            let tr = gg.trace().re;
            hermitian_part(&gg.scale_re(1.0 / tr))
        };
        let v = visibility_exact(&d, &sigma).unwrap();
        let mean = mean_from_visibility(v, &povm).unwrap();
        let direct = obs.mat().trace_product(&sigma).re;
        assert!((mean - direct).abs() < 1e-8, "{name}: mean {mean} vs {direct}");

        for s in 0..3 {
            let u = random_unitary(n, 32_000 + s);
            let v_sub = visibility_with_uprime(&d, &u, &sigma).unwrap();
            assert!((v_sub - v).abs() < 1e-10, "{name}: visibility moved under U'");
        }
    }
    println!(
        "ACCEPTANCE 4 network contracts ({} networks: completeness, commutation, unitarity, \
         mean round-trip, U' invariance): PASS",
        observables.len()
    );
}

/// 5: exact PPT pipeline on the Werner sweep reproduces (1-3p)/4 at 1e-7 and
/// flips the verdict at p = 1/3; runtime < 10 s.
#[test]
fn criterion_5_ppt_pipeline_exact() {
    let start = Instant::now();
    let lambda = transpose_map(2);
    let mut flips = 0;
    let mut last = None;
    for i in 0..=10 {
        let p = i as f64 / 10.0;
        let report = run_positive_map_test(
            &werner_state(p).unwrap(),
            &lambda,
            "partial_transpose",
            Mode::Exact,
        )
        .unwrap();
        let expect = (1.0 - 3.0 * p) / 4.0;
        assert!(
            (report.statistic - expect).abs() < 1e-7,
            "p={p}: {} vs {expect}",
            report.statistic
        );
        let detected = report.verdict == Verdict::Entangled;
        assert_eq!(detected, p > 1.0 / 3.0, "p={p}");
        if let Some(prev) = last {
            if prev != detected {
                flips += 1;
            }
        }
        last = Some(detected);
    }
    assert_eq!(flips, 1, "verdict must flip exactly once across the sweep");
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 10.0, "runtime {secs:.1}s exceeds 10s");
    println!("ACCEPTANCE 5 PPT Werner sweep exact (1e-7, flip at p=1/3): PASS ({secs:.1}s)");
}

/// 6: shot-limited PPT pipeline, Werner p = 0.8, 1e6 shots per moment:
/// min eigenvalue within 5 combined sigma of -0.35, verdict entangled;
/// runtime < 60 s.
#[test]
fn criterion_6_ppt_pipeline_shots() {
    let start = Instant::now();
    let report = run_positive_map_test(
        &werner_state(0.8).unwrap(),
        &transpose_map(2),
        "partial_transpose",
        Mode::Shots { shots: 1_000_000, seed: 42 },
    )
    .unwrap();
    assert!(report.std_error > 0.0, "combined sigma must be propagated");
    assert!(
        (report.statistic + 0.35).abs() < 5.0 * report.std_error,
        "min eigenvalue {} not within 5 sigma ({}) of -0.35",
        report.statistic,
        report.std_error
    );
    assert_eq!(report.verdict, Verdict::Entangled);
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 60.0, "runtime {secs:.1}s exceeds 60s");
    println!(
        "ACCEPTANCE 6 PPT shots 1e6 (within 5 sigma of -0.35, entangled): PASS ({secs:.1}s)"
    );
}

/// 7: contraction pipeline: Bell statistic 2 and product statistic 1 at 1e-7,
/// 100 random states match the SVD oracle at 1e-7, and the primed-map lemma
/// holds at 1e-10.
#[test]
fn criterion_7_contraction_pipeline() {
    let r = realignment_map(2, 2);
    let bell = run_contraction_test(&bell_state(0).unwrap(), &r, "realignment", Mode::Exact)
        .unwrap();
    assert!((bell.statistic - 2.0).abs() < 1e-7, "bell: {}", bell.statistic);
    assert_eq!(bell.verdict, Verdict::Entangled);

    let product = run_contraction_test(
        &product_basis_state(&[2, 2]).unwrap(),
        &r,
        "realignment",
        Mode::Exact,
    )
    .unwrap();
    assert!((product.statistic - 1.0).abs() < 1e-7, "product: {}", product.statistic);
    assert_eq!(product.verdict, Verdict::NotDetected);

    for seed in 0..100 {
        let rho = random_density_dims(&[2, 2], 40_000 + seed);
        let report = run_contraction_test(&rho, &r, "realignment", Mode::Exact).unwrap();
        let oracle = trace_norm(&realign(&rho).unwrap());
        assert!(
            (report.statistic - oracle).abs() < 1e-7,
            "seed {seed}: {} vs {oracle}",
            report.statistic
        );
    }

    // primed-map lemma on the Hermitian cone (the conjugate transpose is
    // antilinear, so the identity is stated there); plus the general form
    // primed(R)(X) = R(X^dag)^dag
    let rp = r.primed();
    for seed in 0..100 {
        let h = random_hermitian(4, 41_000 + seed);
        let lhs = rp.apply(&h).unwrap();
        let rhs = r.apply(&h).unwrap().adjoint();
        assert!(lhs.max_abs_diff(&rhs) < 1e-10, "hermitian seed {seed}");
        let x = random_matrix(4, 4, 42_000 + seed);
        let general = rp.apply(&x).unwrap();
        let expect = r.apply(&x.adjoint()).unwrap().adjoint();
        assert!(general.max_abs_diff(&expect) < 1e-10, "general seed {seed}");
    }
    println!(
        "ACCEPTANCE 7 contraction pipeline (Bell 2, product 1, 100-state SVD oracle, lemma): PASS"
    );
}

/// 8: 500 random real spectra (m <= 8, |lambda| <= 1) recovered from exact
/// power sums within 1e-6 sorted-elementwise.
#[test]
fn criterion_8_moment_round_trip() {
    let mut gen = rng(4242);
    for case in 0..500 {
        let m = 1 + (gen.gen::<u64>() % 8) as usize;
        let mut eigs: Vec<f64> = (0..m).map(|_| gen.gen_range(-1.0..1.0)).collect();
        eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let moments: Vec<f64> = (1..=m)
            .map(|k| eigs.iter().map(|l| l.powi(k as i32)).sum())
            .collect();
        let spectrum = spectrum_from_moments(&MomentVector { values: moments }, 1e-6)
            .unwrap_or_else(|e| panic!("case {case} ({eigs:?}): {e}"));
        for (a, b) in spectrum.eigenvalues.iter().zip(eigs.iter()) {
            assert!((a - b).abs() < 1e-6, "case {case}: {:?} vs {eigs:?}", spectrum.eigenvalues);
        }
    }
    println!("ACCEPTANCE 8 moment-to-spectrum round trip (500 spectra, 1e-6): PASS");
}

/// 9: identical CLI invocations with fixed seeds produce byte-identical JSON.
#[test]
fn criterion_9_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("werner.json");
    let bin = env!("CARGO_BIN_EXE_mapnet");
    let gen = std::process::Command::new(bin)
        .args(["generate", "--family", "werner", "--p", "0.8"])
        .args(["--out", state.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));

    let run = || {
        let out = std::process::Command::new(bin)
            .args(["detect", "--criterion", "ppt", "--shots", "200000", "--seed", "7"])
            .args(["--state", state.to_str().unwrap(), "--json"])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let first = run();
    let second = run();
    assert_eq!(first, second, "reports must be byte-identical");
    assert!(!first.is_empty());
    serde_json::from_slice::<serde_json::Value>(&first).expect("stdout must be valid JSON");
    println!("ACCEPTANCE 9 CLI determinism (fixed seed, byte-identical JSON): PASS");
}

/// Exact-mode equivalence spot check tying the pipeline to the direct
/// eigensolver across criteria families (supports criterion 5's oracle).
#[test]
fn ppt_direct_oracle_equivalence() {
    let lambda = transpose_map(2);
    for seed in 0..100 {
        let rho = random_density_dims(&[2, 2], 50_000 + seed);
        let report =
            run_positive_map_test(&rho, &lambda, "partial_transpose", Mode::Exact).unwrap();
        let pt = partial_transpose(&rho, 1).unwrap();
        let (vals, _) = mapnet::tensor::hermitian_eig(&pt).unwrap();
        let oracle_detected = vals[0] < -1e-8;
        assert_eq!(
            report.verdict == Verdict::Entangled,
            oracle_detected,
            "seed {seed}: pipeline {} vs oracle {}",
            report.statistic,
            vals[0]
        );
    }
    println!("SUPPLEMENT PPT pipeline/oracle verdict agreement (100 states): PASS");
}

/// The cyclic-shift operator contracts tensor powers to matrix powers; the
/// identity underlying every moment measurement.
#[test]
fn cyclic_shift_trace_identity() {
    for (m, k) in [(2usize, 3usize), (3, 2), (2, 4)] {
        let v = cyclic_permutation_operator(m, k).unwrap();
        let a = random_matrix(m, m, 60_000 + (m * 10 + k) as u64);
        let mut pw = a.clone();
        for _ in 1..k {
            pw = pw.matmul(&a);
        }
        let mut ak = a.clone();
        for _ in 1..k {
            ak = mapnet::tensor::kron(&ak, &a);
        }
        let lhs = v.trace_product(&ak);
        let rhs = pw.trace();
        assert!((lhs - rhs).norm() < 1e-9, "m={m} k={k}");
    }
    println!("SUPPLEMENT cyclic-shift trace identity: PASS");
}

#[test]
fn density_matrix_validation_is_strict() {
    // trace-normalized but non-PSD input must fail loudly
    let bad = mapnet::tensor::sigma_z()
        .scale_re(1.0)
        .add(&CMatrix::identity(2).scale_re(0.0))
        .add(&CMatrix::identity(2).scale_re(0.5))
        .sub(&CMatrix::identity(2).scale_re(0.0));
    // eigenvalues {1.5, -0.5}: trace 1, not PSD
    let err = DensityMatrix::new(bad, vec![2]).unwrap_err();
    assert!(err.to_string().contains("psd"), "got: {err}");
    println!("SUPPLEMENT density-matrix validation: PASS");
}
