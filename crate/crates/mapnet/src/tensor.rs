//! Dense complex linear algebra: Kronecker products, permutation operators,
//! partial transpose, realignment, Hermitian eigendecomposition and PSD
//! square roots.
//!
//! All composite indices use the row-major convention: for factors of
//! dimensions `(d_0, d_1, ...)` the composite index is
//! `i_0 * d_1 * d_2 * ... + i_1 * d_2 * ... + ...` with the first factor
//! most significant. This convention is used everywhere in the crate.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Default cap on the row count of materialized operators (see
/// [`size_cap`]). Override with the `MAPNET_SIZE_CAP` environment variable.
pub const DEFAULT_SIZE_CAP: usize = 1 << 20;

/// Row cap for materialized operators. `MAPNET_SIZE_CAP` overrides the
/// default of 2^20 rows.
pub fn size_cap() -> usize {
    std::env::var("MAPNET_SIZE_CAP")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_SIZE_CAP)
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        CMatrix { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut m = CMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from nested rows of (re, im) pairs.
    pub fn from_rows(rows: &[Vec<(f64, f64)>]) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::Dimension("empty matrix".into()));
        }
        let c = rows[0].len();
        if c == 0 || rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged or empty matrix rows".into()));
        }
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&(re, im)| C64::new(re, im)))
            .collect();
        Ok(CMatrix { rows: r, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> CMatrix {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// Matrix product, ikj loop over row slices.
    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let arow = self.row(i);
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in arow.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let brow = other.row(k);
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Tr(self * other), without forming the product.
    pub fn trace_product(&self, other: &CMatrix) -> C64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        self.hermitian_residue() <= tol
    }

    /// max |A - A^dag| over entries.
    pub fn hermitian_residue(&self) -> f64 {
        let mut r = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                r = r.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        r
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let prod = self.adjoint().matmul(self);
        prod.max_abs_diff(&CMatrix::identity(self.rows)) <= tol
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        if !self.is_hermitian(tol) {
            return false;
        }
        match hermitian_eig(self) {
            Ok((vals, _)) => vals.first().copied().unwrap_or(0.0) >= -tol,
            Err(_) => false,
        }
    }

    pub(crate) fn to_na(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Density matrix with subsystem-dimension metadata.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: CMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    /// Validates trace 1 (1e-10), hermiticity (1e-12) and positivity (1e-10).
    pub fn new(mat: CMatrix, dims: Vec<usize>) -> Result<Self> {
        let m: usize = dims.iter().product();
        if dims.is_empty() || !mat.is_square() || mat.rows() != m {
            return Err(Error::Dimension(format!(
                "state is {}x{} but subsystem dims {:?} give {}",
                mat.rows(),
                mat.cols(),
                dims,
                m
            )));
        }
        let herm = mat.hermitian_residue();
        if herm > 1e-12 {
            return Err(Error::StateValidation { property: "hermitian".into(), residue: herm });
        }
        let tr = mat.trace();
        let tr_res = (tr - C64::new(1.0, 0.0)).norm();
        if tr_res > 1e-10 {
            return Err(Error::StateValidation { property: "trace".into(), residue: tr_res });
        }
        let (vals, _) = hermitian_eig(&mat)?;
        let min = vals.first().copied().unwrap_or(0.0);
        if min < -1e-10 {
            return Err(Error::StateValidation { property: "psd".into(), residue: -min });
        }
        Ok(DensityMatrix { mat, dims })
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    /// rho ⊗ rho with concatenated subsystem dims.
    pub fn pair_copy(&self) -> DensityMatrix {
        let mat = kron(&self.mat, &self.mat);
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&self.dims);
        DensityMatrix { mat, dims }
    }
}

/// Kronecker product with row-major composite indices.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = (a.rows(), a.cols());
    let (rb, cb) = (b.rows(), b.cols());
    let mut out = CMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            if aij.re == 0.0 && aij.im == 0.0 {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// A ⊗ A ⊗ ... ⊗ A, k factors. Rejects k = 0.
pub fn tensor_power(a: &CMatrix, k: usize) -> Result<CMatrix> {
    if k == 0 {
        return Err(Error::Dimension("tensor_power requires k >= 1".into()));
    }
    let mut out = a.clone();
    for _ in 1..k {
        out = kron(&out, a);
    }
    Ok(out)
}

/// Permutation operator on tensor factors with dimensions `dims`: the
/// output factor at slot `i` carries the input factor `source[i]`.
pub fn permutation_operator(dims: &[usize], source: &[usize]) -> Result<CMatrix> {
    let n = dims.len();
    if source.len() != n {
        return Err(Error::Dimension("permutation length mismatch".into()));
    }
    let mut seen = vec![false; n];
    for &s in source {
        if s >= n || seen[s] {
            return Err(Error::Dimension("not a permutation of tensor slots".into()));
        }
        seen[s] = true;
    }
    let total: usize = dims.iter().product();
    if total > size_cap() {
        return Err(Error::SizeCap { rows: total, cap: size_cap() });
    }
    let out_dims: Vec<usize> = source.iter().map(|&s| dims[s]).collect();
    if out_dims.iter().product::<usize>() != total {
        return Err(Error::Dimension("permutation must preserve total dimension".into()));
    }
    let mut p = CMatrix::zeros(total, total);
    let mut digits = vec![0usize; n];
    for col in 0..total {
        // decode col into input digits (row-major, first factor most significant)
        let mut rem = col;
        for s in (0..n).rev() {
            digits[s] = rem % dims[s];
            rem /= dims[s];
        }
        let mut row = 0usize;
        for (i, &s) in source.iter().enumerate() {
            row = row * out_dims[i] + digits[s];
        }
        p[(row, col)] = C64::new(1.0, 0.0);
    }
    Ok(p)
}

/// Cyclic permutation operator V^(k) on (C^m)^{⊗k}:
/// V |e_1>|e_2>...|e_k> = |e_k>|e_1>...|e_{k-1}>. V^(1) = identity.
pub fn cyclic_permutation_operator(m: usize, k: usize) -> Result<CMatrix> {
    cyclic_permutation_operator_capped(m, k, size_cap())
}

pub(crate) fn cyclic_permutation_operator_capped(m: usize, k: usize, cap: usize) -> Result<CMatrix> {
    if m == 0 || k == 0 {
        return Err(Error::Dimension("m >= 1 and k >= 1 required".into()));
    }
    let mut rows = 1usize;
    for _ in 0..k {
        rows = rows
            .checked_mul(m)
            .ok_or(Error::SizeCap { rows: usize::MAX, cap })?;
        if rows > cap {
            return Err(Error::SizeCap { rows, cap });
        }
    }
    let dims = vec![m; k];
    // output slot 0 takes input slot k-1, output slot i takes input slot i-1
    let mut source = vec![0usize; k];
    source[0] = k - 1;
    for i in 1..k {
        source[i] = i - 1;
    }
    permutation_operator(&dims, &source)
}

/// Transpose of the chosen tensor factor only.
pub fn partial_transpose(rho: &DensityMatrix, subsystem: usize) -> Result<CMatrix> {
    let dims = rho.dims();
    if subsystem >= dims.len() {
        return Err(Error::Dimension(format!(
            "subsystem {} out of range for dims {:?}",
            subsystem, dims
        )));
    }
    Ok(partial_transpose_raw(rho.mat(), dims, subsystem))
}

pub(crate) fn partial_transpose_raw(mat: &CMatrix, dims: &[usize], subsystem: usize) -> CMatrix {
    let n = dims.len();
    let total = mat.rows();
    let mut out = CMatrix::zeros(total, total);
    let mut rdig = vec![0usize; n];
    let mut cdig = vec![0usize; n];
    for r in 0..total {
        decode(r, dims, &mut rdig);
        for c in 0..total {
            decode(c, dims, &mut cdig);
            // swap the row/col digits of the transposed factor
            let (mut rd, mut cd) = (rdig.clone(), cdig.clone());
            std::mem::swap(&mut rd[subsystem], &mut cd[subsystem]);
            out[(encode(&rd, dims), encode(&cd, dims))] = mat[(r, c)];
        }
    }
    out
}

fn decode(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for s in (0..dims.len()).rev() {
        out[s] = idx % dims[s];
        idx /= dims[s];
    }
}

fn encode(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&d, &m)| acc * m + d)
}

/// Realignment of a bipartite state: R(rho)[(i,j),(k,l)] = rho[(i,k),(j,l)]
/// with i,j over A and k,l over B; output is dA^2 x dB^2.
pub fn realign(rho: &DensityMatrix) -> Result<CMatrix> {
    let dims = rho.dims();
    if dims.len() != 2 {
        return Err(Error::Dimension(format!(
            "realignment needs exactly two subsystems, got dims {:?}",
            dims
        )));
    }
    Ok(realign_raw(rho.mat(), dims[0], dims[1]))
}

pub(crate) fn realign_raw(mat: &CMatrix, da: usize, db: usize) -> CMatrix {
    let mut out = CMatrix::zeros(da * da, db * db);
    for i in 0..da {
        for j in 0..da {
            for k in 0..db {
                for l in 0..db {
                    out[(i * da + j, k * db + l)] = mat[(i * db + k, j * db + l)];
                }
            }
        }
    }
    out
}

/// Inverse of [`realign`]: recovers the dA*dB square matrix.
pub fn unrealign(mat: &CMatrix, da: usize, db: usize) -> CMatrix {
    let mut out = CMatrix::zeros(da * db, da * db);
    for i in 0..da {
        for j in 0..da {
            for k in 0..db {
                for l in 0..db {
                    out[(i * db + k, j * db + l)] = mat[(i * da + j, k * db + l)];
                }
            }
        }
    }
    out
}

/// Hermitian eigendecomposition with deterministic ordering: eigenvalues
/// ascending, each eigenvector phase-fixed so its first nonzero component
/// is real positive, ties broken lexicographically. Returns (values,
/// matrix of eigenvector columns).
pub fn hermitian_eig(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let res = a.hermitian_residue();
    if res > 1e-9 {
        return Err(Error::NotHermitian { residue: res, tol: 1e-9 });
    }
    let n = a.rows();
    // symmetrize before handing to the solver so tiny asymmetries cannot leak
    let sym = a.add(&a.adjoint()).scale_re(0.5);
    let eig = nalgebra::SymmetricEigen::new(sym.to_na());
    let mut pairs: Vec<(f64, Vec<C64>)> = (0..n)
        .map(|i| {
            let mut v: Vec<C64> = (0..n).map(|r| eig.eigenvectors[(r, i)]).collect();
            phase_fix(&mut v);
            (eig.eigenvalues[i], v)
        })
        .collect();
    pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then_with(|| lex_cmp(&a.1, &b.1))
    });
    let vals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let vecs = CMatrix::from_fn(n, n, |i, j| pairs[j].1[i]);
    Ok((vals, vecs))
}

fn phase_fix(v: &mut [C64]) {
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        let phase = z / z.norm();
        let inv = phase.conj();
        for x in v.iter_mut() {
            *x *= inv;
        }
    }
}

fn lex_cmp(a: &[C64], b: &[C64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.re.partial_cmp(&y.re).unwrap() {
            std::cmp::Ordering::Equal => {}
            o => return o,
        }
        match x.im.partial_cmp(&y.im).unwrap() {
            std::cmp::Ordering::Equal => {}
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Rebuild V f(Λ) V^dag from a decomposition.
pub fn rebuild_from_eig(vals: &[f64], vecs: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = vecs.rows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        let flam = f(lam);
        if flam == 0.0 {
            continue;
        }
        for i in 0..n {
            let vi = vecs[(i, k)];
            for j in 0..n {
                out[(i, j)] += vi * vecs[(j, k)].conj() * flam;
            }
        }
    }
    out
}

/// Hermitian PSD square root. Eigenvalues in [-1e-8, 0) are clamped to 0;
/// anything below -1e-8 is an error.
pub fn psd_sqrt(a: &CMatrix) -> Result<CMatrix> {
    let (vals, vecs) = hermitian_eig(a)?;
    if let Some(&min) = vals.first() {
        if min < -1e-8 {
            return Err(Error::NotPsd { min_eig: min, tol: 1e-8 });
        }
    }
    Ok(rebuild_from_eig(&vals, &vecs, |l| l.max(0.0).sqrt()))
}

/// (A + A^dag) / 2.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    assert!(a.is_square(), "hermitian_part needs a square matrix");
    a.add(&a.adjoint()).scale_re(0.5)
}

/// Sum of singular values; rectangular inputs allowed.
pub fn trace_norm(a: &CMatrix) -> f64 {
    let svd = a.to_na().svd(false, false);
    svd.singular_values.iter().sum()
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_rows(&[vec![(0.0, 0.0), (1.0, 0.0)], vec![(1.0, 0.0), (0.0, 0.0)]]).unwrap()
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_rows(&[vec![(0.0, 0.0), (0.0, -1.0)], vec![(0.0, 1.0), (0.0, 0.0)]]).unwrap()
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_rows(&[vec![(1.0, 0.0), (0.0, 0.0)], vec![(0.0, 0.0), (-1.0, 0.0)]]).unwrap()
}
