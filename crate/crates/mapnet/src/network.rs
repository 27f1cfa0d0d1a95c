//! Single-qubit-measurement network synthesis: the binary POVM {V0, V1},
//! its unitary dilation, the diagonalized controlled-rotation form, exact
//! visibility, the affine mean reconstruction and shot-limited simulation.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::Observable;
use crate::tensor::{kron, rebuild_from_eig, CMatrix};

/// Two-outcome POVM with commuting hermitian PSD elements:
/// V0 = sqrt((a_minus I + O) / a_plus), V1 = sqrt(I - V0^2).
#[derive(Debug, Clone)]
pub struct BinaryPovm {
    pub v0: CMatrix,
    pub v1: CMatrix,
    pub a_minus: f64,
    pub a_plus: f64,
    /// Eigenvalues of V0^2 (descending) and the shared eigenvectors,
    /// reused by the dilation.
    lambdas: Vec<f64>,
    eigvecs: CMatrix,
}

/// Unitary dilation U = 1 ⊗ V0 - i sigma_y ⊗ V1 together with the
/// diagonalizer U' and the controlled-rotation data.
#[derive(Debug, Clone)]
pub struct DilationUnitary {
    pub u_a: CMatrix,
    pub uprime: CMatrix,
    /// Eigenvalues of V0^2, descending; cos(theta_k / 2) = sqrt(lambda_k).
    pub lambdas: Vec<f64>,
    pub thetas: Vec<f64>,
}

/// Outcome of Bernoulli sampling of the control-qubit measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VisibilityEstimate {
    pub p0_hat: f64,
    pub v_hat: f64,
    pub shots: u64,
    pub std_error: f64,
    pub seed: u64,
}

/// Build the POVM of an observable from its exact spectral bounds.
pub fn binary_povm(obs: &Observable) -> Result<BinaryPovm> {
    let (a_min, a_max) = obs.spectrum_bounds();
    let a_minus = (-a_min).max(0.0);
    let a_plus = a_minus + a_max;
    if a_plus <= 1e-12 {
        return Err(Error::DegenerateObservable { a_plus });
    }
    let (vals, vecs) = obs.eig();
    // shared eigenbasis keeps V0 and V1 exactly commuting; order descending
    // so control-register labels are deterministic
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap());
    let n = vals.len();
    let sorted_vecs = CMatrix::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    let lambdas: Vec<f64> = order
        .iter()
        .map(|&i| ((a_minus + vals[i]) / a_plus).clamp(0.0, 1.0))
        .collect();
    let v0 = rebuild_from_eig(&lambdas, &sorted_vecs, |l| l.sqrt());
    let v1 = rebuild_from_eig(&lambdas, &sorted_vecs, |l| (1.0 - l).max(0.0).sqrt());
    Ok(BinaryPovm { v0, v1, a_minus, a_plus, lambdas, eigvecs: sorted_vecs })
}

impl BinaryPovm {
    pub fn dim(&self) -> usize {
        self.v0.rows()
    }

    /// p0 = Tr(V0^dag V0 sigma).
    pub fn outcome_probability(&self, sigma: &CMatrix) -> Result<f64> {
        if sigma.rows() != self.dim() || sigma.cols() != self.dim() {
            return Err(Error::Dimension("state does not match POVM dimension".into()));
        }
        let v0sq = self.v0.matmul(&self.v0);
        Ok(v0sq.trace_product(sigma).re)
    }
}

/// Dilate the POVM to the block unitary of the network.
pub fn dilation_unitary(povm: &BinaryPovm) -> Result<DilationUnitary> {
    let comm = povm
        .v0
        .matmul(&povm.v1)
        .max_abs_diff(&povm.v1.matmul(&povm.v0));
    if comm > 1e-8 {
        return Err(Error::NonCommutingPovm { residue: comm });
    }
    let n = povm.dim();
    // blocks: [[V0, -V1], [V1, V0]]
    let mut u_a = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            u_a[(i, j)] = povm.v0[(i, j)];
            u_a[(i, n + j)] = -povm.v1[(i, j)];
            u_a[(n + i, j)] = povm.v1[(i, j)];
            u_a[(n + i, n + j)] = povm.v0[(i, j)];
        }
    }
    // U' = sum_k |k><phi_k| maps the eigenbasis of V0 to the computational basis
    let uprime = povm.eigvecs.adjoint();
    let thetas: Vec<f64> = povm
        .lambdas
        .iter()
        .map(|&l| 2.0 * l.sqrt().clamp(0.0, 1.0).acos())
        .collect();
    Ok(DilationUnitary { u_a, uprime, lambdas: povm.lambdas.clone(), thetas })
}

/// Uniformly controlled rotation description: for each control basis state
/// |k> (post-diagonalization) rotate the top qubit by R_y(theta_k).
pub fn controlled_form(d: &DilationUnitary) -> Vec<(usize, f64)> {
    d.thetas.iter().copied().enumerate().collect()
}

fn ry(theta: f64) -> CMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 0)] = C64::new(c, 0.0);
    m[(0, 1)] = C64::new(-s, 0.0);
    m[(1, 0)] = C64::new(s, 0.0);
    m[(1, 1)] = C64::new(c, 0.0);
    m
}

/// Rebuild U_A from its controlled-rotation form:
/// (1 ⊗ U')^dag [ sum_k R_y(theta_k) ⊗ |k><k| ] (1 ⊗ U').
pub fn reconstruct_from_controls(d: &DilationUnitary) -> CMatrix {
    let n = d.uprime.rows();
    let mut udet = CMatrix::zeros(2 * n, 2 * n);
    for (k, &theta) in d.thetas.iter().enumerate() {
        let u_k = ry(theta);
        for a in 0..2 {
            for b in 0..2 {
                udet[(a * n + k, b * n + k)] = u_k[(a, b)];
            }
        }
    }
    let lift = kron(&CMatrix::identity(2), &d.uprime);
    lift.adjoint().matmul(&udet).matmul(&lift)
}

/// Exact visibility: sigma_z mean on the control qubit after the network
/// acts on |0><0| ⊗ sigma.
pub fn visibility_exact(d: &DilationUnitary, sigma: &CMatrix) -> Result<f64> {
    visibility_with_uprime(d, &d.uprime, sigma)
}

/// Same with an explicit U' (the visibility does not depend on it).
pub fn visibility_with_uprime(d: &DilationUnitary, uprime: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    let n = d.uprime.rows();
    if sigma.rows() != n || sigma.cols() != n {
        return Err(Error::Dimension("state does not match network dimension".into()));
    }
    let lift = kron(&CMatrix::identity(2), uprime);
    let t = lift.matmul(&d.u_a);
    // input |0><0| ⊗ sigma: only the first n columns of T contribute
    let t00 = CMatrix::from_fn(n, n, |i, j| t[(i, j)]);
    let t10 = CMatrix::from_fn(n, n, |i, j| t[(n + i, j)]);
    let top = t00.matmul(sigma).matmul(&t00.adjoint());
    let bottom = t10.matmul(sigma).matmul(&t10.adjoint());
    let v = top.trace() - bottom.trace();
    if v.im.abs() > 1e-10 {
        return Err(Error::InvalidVisibility { v: v.im });
    }
    Ok(v.re)
}

/// <A>_sigma = a_plus (v + 1)/2 - a_minus, with |v| clamped at 1 inside a
/// 1e-9 jitter band and rejected beyond it.
pub fn mean_from_visibility(v: f64, povm: &BinaryPovm) -> Result<f64> {
    if v.abs() > 1.0 + 1e-9 {
        return Err(Error::InvalidVisibility { v });
    }
    let v = v.clamp(-1.0, 1.0);
    Ok(povm.a_plus * (v + 1.0) / 2.0 - povm.a_minus)
}

/// Visibility window equivalent to c1 <= <A> <= c2.
pub fn visibility_interval(c1: f64, c2: f64, povm: &BinaryPovm) -> Result<(f64, f64)> {
    let a_max = povm.a_plus - povm.a_minus;
    let a_lo = -povm.a_minus;
    if c1 > c2 || c1 < a_lo - 1e-12 || c2 > a_max + 1e-12 {
        return Err(Error::InvalidInterval { c1, c2 });
    }
    let v_lo = 2.0 * (c1 + povm.a_minus) / povm.a_plus - 1.0;
    let v_hi = 2.0 * (c2 + povm.a_minus) / povm.a_plus - 1.0;
    Ok((v_lo, v_hi))
}

/// Bernoulli sampling of the control-qubit outcome with a seeded generator.
pub fn simulate_shots(p0: f64, shots: u64, seed: u64) -> Result<VisibilityEstimate> {
    simulate_shots_stream(p0, shots, seed, 0)
}

/// Stream-separated variant: distinct streams under one seed give
/// statistically independent runs (one stream per moment order).
pub fn simulate_shots_stream(p0: f64, shots: u64, seed: u64, stream: u64) -> Result<VisibilityEstimate> {
    if !(-1e-9..=1.0 + 1e-9).contains(&p0) {
        return Err(Error::InvalidProbability { p0 });
    }
    if shots == 0 {
        return Err(Error::Dimension("shots must be >= 1".into()));
    }
    let p0 = p0.clamp(0.0, 1.0);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut count = 0u64;
    for _ in 0..shots {
        if rng.gen::<f64>() < p0 {
            count += 1;
        }
    }
    let p0_hat = count as f64 / shots as f64;
    let std_error = 2.0 * (p0_hat * (1.0 - p0_hat) / shots as f64).sqrt();
    Ok(VisibilityEstimate { p0_hat, v_hat: 2.0 * p0_hat - 1.0, shots, std_error, seed })
}

// -- export -----------------------------------------------------------------

/// JSON export of a synthesized network; `u_a` is included only for small
/// networks (dimension <= 32).
#[derive(Debug, Serialize, Deserialize)]
pub struct NetworkExport {
    pub a_minus: f64,
    pub a_plus: f64,
    pub lambdas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub uprime: Vec<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_a: Option<Vec<Vec<[f64; 2]>>>,
}

pub fn matrix_to_nested(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_nested(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let rows: Vec<Vec<(f64, f64)>> = rows
        .iter()
        .map(|r| r.iter().map(|p| (p[0], p[1])).collect())
        .collect();
    CMatrix::from_rows(&rows)
}

pub fn export_network(povm: &BinaryPovm, d: &DilationUnitary) -> NetworkExport {
    NetworkExport {
        a_minus: povm.a_minus,
        a_plus: povm.a_plus,
        lambdas: d.lambdas.clone(),
        thetas: d.thetas.clone(),
        uprime: matrix_to_nested(&d.uprime),
        u_a: if d.u_a.rows() <= 32 { Some(matrix_to_nested(&d.u_a)) } else { None },
    }
}

impl NetworkExport {
    /// Rebuild U_A from the exported rotation data.
    pub fn rebuild_u_a(&self) -> Result<CMatrix> {
        let uprime = matrix_from_nested(&self.uprime)?;
        let d = DilationUnitary {
            u_a: CMatrix::identity(2 * uprime.rows()),
            uprime,
            lambdas: self.lambdas.clone(),
            thetas: self.thetas.clone(),
        };
        Ok(reconstruct_from_controls(&d))
    }
}
