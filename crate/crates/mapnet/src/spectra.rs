//! Recover a spectrum from its power sums: Newton-Girard recursion to the
//! characteristic polynomial, companion-matrix roots, and the square-root
//! statistic used by the contraction criterion.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::MomentVector;

/// Reconstructed spectrum, eigenvalues descending, together with the largest
/// imaginary residue discarded during realization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub residual: f64,
}

/// Elementary symmetric polynomials e_0..e_n from power sums p_1..p_n:
/// k e_k = sum_{i=1}^{k} (-1)^{i-1} e_{k-i} p_i.
pub fn newton_girard(power_sums: &[f64]) -> Vec<f64> {
    let n = power_sums.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for k in 1..=n {
        let mut acc = 0.0;
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[k - i] * power_sums[i - 1];
        }
        e[k] = acc / k as f64;
    }
    e
}

/// A multiple root perturbed by coefficient noise eps splits into a cluster
/// of radius eps^(1/multiplicity) around the true value, generically with
/// complex members. The cluster mean is accurate to O(eps), so nearby roots
/// are snapped to their mean before the imaginary-part gate. The merge
/// radius is capped so genuinely complex pairs (O(1) imaginary parts) are
/// never silently realified.
fn realize_roots(raw: &[C64], tol_imag: f64) -> Result<(Vec<f64>, f64)> {
    let n = raw.len();
    let max_im = raw.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let delta = (20.0 * max_im).clamp(1e-9, 1e-2);
    // single-linkage clustering via union-find; n <= 16 at desk scale
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        let mut i = i;
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (raw[i] - raw[j]).norm() <= delta {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut residual = 0.0_f64;
    let mut out = Vec::with_capacity(n);
    for root_id in 0..n {
        if find(&mut parent, root_id) != root_id {
            continue;
        }
        let members: Vec<C64> = (0..n)
            .filter(|&i| find(&mut parent, i) == root_id)
            .map(|i| raw[i])
            .collect();
        let mean = members.iter().sum::<C64>() / members.len() as f64;
        if mean.im.abs() > tol_imag {
            return Err(Error::ReconstructionFailure { root: mean, tol: tol_imag });
        }
        for z in &members {
            residual = residual.max((z - C64::new(mean.re, 0.0)).norm());
            out.push(mean.re);
        }
    }
    Ok((out, residual))
}

fn monic_coeffs(elem: &[f64]) -> Vec<f64> {
    // c_j of x^n + c_1 x^{n-1} + ... + c_n from elementary symmetric e_j
    (1..elem.len())
        .map(|j| if j % 2 == 1 { -elem[j] } else { elem[j] })
        .collect()
}

fn companion_roots(coeffs: &[f64], deg: usize) -> Vec<C64> {
    let mut companion = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = 1.0;
    }
    for j in 0..deg {
        companion[(j, deg - 1)] = -coeffs[deg - 1 - j];
    }
    companion
        .complex_eigenvalues()
        .iter()
        .map(|z| C64::new(z.re, z.im))
        .collect()
}

/// Roots of x^n - e_1 x^{n-1} + e_2 x^{n-2} - ... via the companion matrix.
/// Exact zero roots are deflated first: trailing coefficients below
/// `zero_tol` are dropped and the corresponding roots pinned at 0.
pub fn roots_real(elem: &[f64], tol_imag: f64, zero_tol: f64) -> Result<Vec<f64>> {
    let n = elem.len() - 1;
    let coeffs = monic_coeffs(elem);
    let mut deg = n;
    while deg > 0 && coeffs[deg - 1].abs() <= zero_tol {
        deg -= 1;
    }
    let mut roots = vec![0.0; n - deg];
    if deg == 0 {
        return Ok(roots);
    }
    let (realized, _) = realize_roots(&companion_roots(&coeffs, deg), tol_imag)?;
    roots.extend(realized);
    roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(roots)
}

/// Full pipeline: moments alpha_1..alpha_n -> eigenvalues of the n x n
/// operator they came from.
pub fn spectrum_from_moments(moments: &MomentVector, tol_imag: f64) -> Result<Spectrum> {
    spectrum_from_moments_with(moments, tol_imag, 1e-14)
}

pub fn spectrum_from_moments_with(
    moments: &MomentVector,
    tol_imag: f64,
    zero_tol: f64,
) -> Result<Spectrum> {
    if moments.values.is_empty() {
        return Err(Error::Dimension("need at least one moment".into()));
    }
    let elem = newton_girard(&moments.values);
    let n = moments.values.len();
    let coeffs = monic_coeffs(&elem);
    let mut deg = n;
    while deg > 0 && coeffs[deg - 1].abs() <= zero_tol {
        deg -= 1;
    }
    let mut eigenvalues = vec![0.0; n - deg];
    let mut residual = 0.0_f64;
    if deg > 0 {
        let (realized, r) = realize_roots(&companion_roots(&coeffs, deg), tol_imag)?;
        residual = r;
        eigenvalues.extend(realized);
    }
    eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(Spectrum { eigenvalues, residual })
}

impl Spectrum {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// sum_i sqrt(max(lambda_i, 0)); the gammas are eigenvalues of a PSD
    /// product so small negative values are reconstruction noise.
    pub fn sqrt_sum(&self) -> Result<f64> {
        let mut acc = 0.0;
        for &g in &self.eigenvalues {
            if g < -1e-6 {
                return Err(Error::InvalidGamma { gamma: g });
            }
            acc += g.max(0.0).sqrt();
        }
        Ok(acc)
    }
}

/// Trace-norm statistic straight from a gamma list.
pub fn trace_norm_from_gammas(gammas: &[f64]) -> Result<f64> {
    Spectrum { eigenvalues: gammas.to_vec(), residual: 0.0 }.sqrt_sum()
}
