//! Collective observables whose mean on k state copies equals the k-th
//! moment of the mapped state: alpha_k = Tr[Theta(rho)^k] = Tr[O ρ^{⊗k}].
//!
//! The observable is O = herm((Theta^dual)^{⊗k} applied to herm(V^(k))),
//! with V^(k) the cyclic permutation operator. The moment identity follows
//! by moving the dual map across the trace slot by slot.

use std::sync::OnceLock;


use crate::error::{Error, Result};
use crate::linmaps::LinearMap;
use crate::tensor::{
    cyclic_permutation_operator, hermitian_part, size_cap, tensor_power, CMatrix, DensityMatrix,
};

/// Hermitian collective observable on k copies, with lazily computed
/// spectral data reused by network synthesis.
#[derive(Debug)]
pub struct Observable {
    mat: CMatrix,
    copies: usize,
    /// Set when the raw operator needed symmetrization beyond rounding,
    /// i.e. the source map was not hermiticity-preserving. Means are then
    /// Re(alpha_k) rather than alpha_k.
    hermitized: bool,
    eig: OnceLock<(Vec<f64>, CMatrix)>,
}

/// Power sums alpha_1..alpha_K of Theta(rho).
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MomentVector {
    pub values: Vec<f64>,
}

impl Observable {
    pub fn from_matrix(mat: CMatrix, copies: usize) -> Result<Self> {
        if !mat.is_hermitian(1e-9) {
            return Err(Error::NotHermitian { residue: mat.hermitian_residue(), tol: 1e-9 });
        }
        Ok(Observable { mat: hermitian_part(&mat), copies, hermitized: false, eig: OnceLock::new() })
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn was_hermitized(&self) -> bool {
        self.hermitized
    }

    /// Cached exact eigendecomposition (ascending, deterministic ordering).
    pub fn eig(&self) -> &(Vec<f64>, CMatrix) {
        self.eig.get_or_init(|| {
            crate::tensor::hermitian_eig(&self.mat).expect("observable is hermitian by construction")
        })
    }

    /// Exact extreme eigenvalues (a_min, a_max).
    pub fn spectrum_bounds(&self) -> (f64, f64) {
        let (vals, _) = self.eig();
        (vals[0], vals[vals.len() - 1])
    }

    /// Mean value Tr[O sigma] for a state on the observable's space.
    pub fn mean(&self, sigma: &CMatrix) -> Result<f64> {
        if sigma.rows() != self.dim() || sigma.cols() != self.dim() {
            return Err(Error::Dimension(format!(
                "observable dim {} vs state dim {}",
                self.dim(),
                sigma.rows()
            )));
        }
        let val = self.mat.trace_product(sigma);
        Ok(val.re)
    }
}

/// Apply a map independently to one tensor slot of a multipartite operator.
/// `row_dims`/`col_dims` give the per-slot dimensions of `op`; the map must
/// accept row_dims[slot] x col_dims[slot] inputs.
pub(crate) fn apply_to_slot(
    op: &CMatrix,
    row_dims: &[usize],
    col_dims: &[usize],
    slot: usize,
    map: &LinearMap,
) -> Result<CMatrix> {
    let k = row_dims.len();
    assert_eq!(col_dims.len(), k);
    if map.src_rows() != row_dims[slot] || map.src_cols() != col_dims[slot] {
        return Err(Error::Dimension("slot dimensions do not match the map".into()));
    }
    let pre_r: usize = row_dims[..slot].iter().product();
    let post_r: usize = row_dims[slot + 1..].iter().product();
    let pre_c: usize = col_dims[..slot].iter().product();
    let post_c: usize = col_dims[slot + 1..].iter().product();
    let (sr, sc) = (map.src_rows(), map.src_cols());
    let (dr, dc) = (map.dst_rows(), map.dst_cols());
    let s = map.superop();

    let new_rows = pre_r * dr * post_r;
    let new_cols = pre_c * dc * post_c;
    let mut out = CMatrix::zeros(new_rows, new_cols);
    for a in 0..dr {
        for b in 0..dc {
            let srow = s.row(a * dc + b);
            for p in 0..sr {
                for q in 0..sc {
                    let coeff = srow[p * sc + q];
                    if coeff.re == 0.0 && coeff.im == 0.0 {
                        continue;
                    }
                    for xr in 0..pre_r {
                        for yr in 0..post_r {
                            let old_r = (xr * sr + p) * post_r + yr;
                            let new_r = (xr * dr + a) * post_r + yr;
                            for xc in 0..pre_c {
                                let old_base = old_r * (pre_c * sc * post_c) + (xc * sc + q) * post_c;
                                let new_base = new_r * new_cols + (xc * dc + b) * post_c;
                                for yc in 0..post_c {
                                    let v = op.data()[old_base + yc];
                                    if v.re != 0.0 || v.im != 0.0 {
                                        out.data_mut()[new_base + yc] += coeff * v;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Apply `map` to every one of the k slots of an operator on (C^src)^{⊗k}.
pub(crate) fn apply_slotwise(map: &LinearMap, k: usize, op: &CMatrix) -> Result<CMatrix> {
    let mut cur = op.clone();
    let mut row_dims = vec![map.src_rows(); k];
    let mut col_dims = vec![map.src_cols(); k];
    for slot in 0..k {
        cur = apply_to_slot(&cur, &row_dims, &col_dims, slot, map)?;
        row_dims[slot] = map.dst_rows();
        col_dims[slot] = map.dst_cols();
    }
    Ok(cur)
}

/// Collective observable O^(k) for a square map Theta acting on m x m
/// matrices with square n' x n' output.
pub fn collective_observable(theta: &LinearMap, k: usize) -> Result<Observable> {
    if theta.dst_rows() != theta.dst_cols() || theta.src_rows() != theta.src_cols() {
        return Err(Error::Dimension(
            "collective observables need square source and target".into(),
        ));
    }
    let m = theta.dst_rows();
    let v = cyclic_permutation_operator(m, k)?;
    let w = hermitian_part(&v);
    let dual = theta.dual();
    let mut out_dim = 1usize;
    for _ in 0..k {
        out_dim = out_dim
            .checked_mul(theta.src_rows())
            .ok_or(Error::SizeCap { rows: usize::MAX, cap: size_cap() })?;
    }
    if out_dim > size_cap() {
        return Err(Error::SizeCap { rows: out_dim, cap: size_cap() });
    }
    let raw = apply_slotwise(&dual, k, &w)?;
    let residue = raw.hermitian_residue();
    let mat = hermitian_part(&raw);
    Ok(Observable { mat, copies: k, hermitized: residue > 1e-10, eig: OnceLock::new() })
}

/// alpha_k = Tr[Theta(rho)^k] by direct matrix powers; the independent
/// oracle for the observable route.
pub fn moment_exact(theta: &LinearMap, rho: &DensityMatrix, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Dimension("moment order must be >= 1".into()));
    }
    let a = theta.apply(rho.mat())?;
    if !a.is_square() {
        return Err(Error::Dimension("moments need a square-output map".into()));
    }
    let mut pw = a.clone();
    for _ in 1..k {
        pw = pw.matmul(&a);
    }
    let t = pw.trace();
    Ok(t.re)
}

/// alpha_k = Tr[O^(k) rho^{⊗k}] via the collective observable.
pub fn moment_via_observable(theta: &LinearMap, rho: &DensityMatrix, k: usize) -> Result<f64> {
    let obs = collective_observable(theta, k)?;
    moment_with_observable(&obs, rho)
}

/// Same as [`moment_via_observable`] with a prebuilt observable.
pub fn moment_with_observable(obs: &Observable, rho: &DensityMatrix) -> Result<f64> {
    let copies = tensor_power(rho.mat(), obs.copies())?;
    obs.mean(&copies)
}
