//! Deterministic random fixtures used by tests and the state generators.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::tensor::{hermitian_part, psd_sqrt, CMatrix, DensityMatrix};

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Standard normal via Box-Muller.
pub fn normal(rng: &mut ChaCha12Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn complex_normal(rng: &mut ChaCha12Rng) -> C64 {
    C64::new(normal(rng), normal(rng))
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
    let mut r = rng(seed);
    random_matrix_with(rows, cols, &mut r)
}

pub fn random_matrix_with(rows: usize, cols: usize, rng: &mut ChaCha12Rng) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = complex_normal(rng);
        }
    }
    m
}

pub fn random_hermitian(n: usize, seed: u64) -> CMatrix {
    hermitian_part(&random_matrix(n, n, seed))
}

/// Hilbert-Schmidt-flavored random state: normalize G G^dag.
pub fn random_density(n: usize, seed: u64) -> DensityMatrix {
    random_density_dims(&[n], seed)
}

pub fn random_density_dims(dims: &[usize], seed: u64) -> DensityMatrix {
    let n: usize = dims.iter().product();
    let g = random_matrix(n, n, seed);
    let gg = g.matmul(&g.adjoint());
    let tr = gg.trace().re;
    let mat = hermitian_part(&gg.scale_re(1.0 / tr));
    DensityMatrix::new(mat, dims.to_vec()).expect("constructive state must validate")
}

/// Haar-flavored random unitary: Gram-Schmidt on a Gaussian matrix.
pub fn random_unitary(n: usize, seed: u64) -> CMatrix {
    let g = random_matrix(n, n, seed);
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| (0..n).map(|i| g[(i, j)]).collect()).collect();
    for j in 0..n {
        for k in 0..j {
            let dot: C64 = (0..n).map(|i| cols[k][i].conj() * cols[j][i]).sum();
            for i in 0..n {
                let s = cols[k][i];
                cols[j][i] -= dot * s;
            }
        }
        let norm: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in cols[j].iter_mut() {
            *z /= norm;
        }
    }
    CMatrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Random PSD matrix with unit trace is a state; this gives one without
/// subsystem structure, handy as a network input.
pub fn random_psd(n: usize, seed: u64) -> CMatrix {
    let g = random_matrix(n, n, seed);
    psd_sqrt(&g.matmul(&g.adjoint())).unwrap()
}
