//! Matrix product states and tensor trains.
//!
//! * [`Mps`]: complex statevector MPS, one qubit per site.
//! * [`TensorTrain`]: real coefficient array over the trig3 basis, one core
//!   per encoding leg.
//! * [`extract_function_mps`]: Heisenberg propagation of the observable as a
//!   Pauli-basis operator MPS, with each encoding gate opening a trig3 leg.

mod extract;
mod mps;
mod train;

pub use extract::{extract_function_mps, ExtractOptions, Extraction};
pub use mps::{simulate, Mps};
pub use train::TensorTrain;

use nalgebra::{ComplexField, DMatrix};

use crate::error::{Error, Result};

pub const DEFAULT_SVD_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_CHI: usize = 256;

/// A 3-index array `(left bond, physical, right bond)`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Core<T> {
    pub l: usize,
    pub d: usize,
    pub r: usize,
    data: Vec<T>,
}

impl<T: ComplexField + Copy> Core<T> {
    pub fn new(l: usize, d: usize, r: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != l * d * r {
            return Err(Error::Dimension(format!("core {l}x{d}x{r} given {} entries", data.len())));
        }
        Ok(Core { l, d, r, data })
    }

    pub fn zeros(l: usize, d: usize, r: usize) -> Self {
        Core { l, d, r, data: vec![T::zero(); l * d * r] }
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn at(&self, a: usize, s: usize, b: usize) -> T {
        self.data[(a * self.d + s) * self.r + b]
    }

    #[inline]
    pub fn at_mut(&mut self, a: usize, s: usize, b: usize) -> &mut T {
        &mut self.data[(a * self.d + s) * self.r + b]
    }

    /// Rows `(a, s)`, columns `b`.
    pub fn left_matrix(&self) -> DMatrix<T> {
        DMatrix::from_row_slice(self.l * self.d, self.r, &self.data)
    }

    /// Rows `a`, columns `(s, b)`.
    pub fn right_matrix(&self) -> DMatrix<T> {
        DMatrix::from_row_slice(self.l, self.d * self.r, &self.data)
    }

    pub fn from_left_matrix(m: &DMatrix<T>, d: usize) -> Self {
        let l = m.nrows() / d;
        Core { l, d, r: m.ncols(), data: row_major(m) }
    }

    pub fn from_right_matrix(m: &DMatrix<T>, d: usize) -> Self {
        Core { l: m.nrows(), d, r: m.ncols() / d, data: row_major(m) }
    }
}

pub(crate) fn row_major<T: ComplexField + Copy>(m: &DMatrix<T>) -> Vec<T> {
    let mut v = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        v.extend(m.row(i).iter().copied());
    }
    v
}

/// Result of a truncated SVD `m ≈ u · diag(s) · vt`.
pub(crate) struct Split<T: ComplexField> {
    pub u: DMatrix<T>,
    pub s: Vec<f64>,
    pub vt: DMatrix<T>,
    /// Sum of squared discarded singular values.
    pub discarded: f64,
}

impl<T: ComplexField<RealField = f64> + Copy> Split<T> {
    /// `diag(s) · vt`.
    pub fn s_vt(&self) -> DMatrix<T> {
        let mut m = self.vt.clone();
        for (i, &s) in self.s.iter().enumerate() {
            m.row_mut(i).scale_mut(s);
        }
        m
    }
}

/// `‖m − u·diag(s)·vt‖` and `‖uᴴu − I‖` are both at rounding level.
fn svd_holds<T>(m: &DMatrix<T>, u: &DMatrix<T>, s: &[f64], vt: &DMatrix<T>) -> bool
where
    T: ComplexField<RealField = f64> + Copy,
{
    let mut us = u.clone();
    for (j, &sj) in s.iter().enumerate() {
        us.column_mut(j).scale_mut(sj);
    }
    let k = u.ncols();
    let tol = 64.0 * f64::EPSILON * m.nrows().max(m.ncols()) as f64;
    (&us * vt - m).norm() <= tol * m.norm().max(f64::MIN_POSITIVE) && (u.adjoint() * u - DMatrix::identity(k, k)).norm() <= tol
}

/// nalgebra's bidiagonal SVD occasionally returns inaccurate vectors for
/// nearly rank-deficient inputs; such results fail [`svd_holds`] and are
/// recomputed by one-sided Jacobi.
fn full_svd<T>(m: DMatrix<T>) -> Result<(DMatrix<T>, Vec<f64>, DMatrix<T>)>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let svd = m.clone().svd(true, true);
    if let (Some(u), Some(vt)) = (svd.u, svd.v_t) {
        let s: Vec<f64> = svd.singular_values.iter().copied().collect();
        if svd_holds(&m, &u, &s, &vt) {
            return Ok((u, s, vt));
        }
    }
    if m.nrows() >= m.ncols() {
        jacobi_svd(m)
    } else {
        let (u, s, vt) = jacobi_svd(m.adjoint())?;
        Ok((vt.adjoint(), s, u.adjoint()))
    }
}

/// One-sided (Hestenes) Jacobi SVD of a tall matrix.
fn jacobi_svd<T>(mut a: DMatrix<T>) -> Result<(DMatrix<T>, Vec<f64>, DMatrix<T>)>
where
    T: ComplexField<RealField = f64> + Copy,
{
    const MAX_SWEEPS: usize = 80;
    let (rows, n) = a.shape();
    let mut v = DMatrix::<T>::identity(n, n);
    let tol = f64::EPSILON * rows.max(1) as f64;
    let floor = f64::EPSILON * f64::EPSILON * a.norm_squared();
    let rotate = |x: &mut DMatrix<T>, p: usize, q: usize, c: f64, s: f64, phase: T| {
        for i in 0..x.nrows() {
            let (xp, xq) = (x[(i, p)], x[(i, q)]);
            x[(i, p)] = xp.scale(c) - xq * phase.conjugate().scale(s);
            x[(i, q)] = xp * phase.scale(s) + xq.scale(c);
        }
    };
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, T::zero());
                for i in 0..rows {
                    alpha += a[(i, p)].modulus_squared();
                    beta += a[(i, q)].modulus_squared();
                    gamma += a[(i, p)].conjugate() * a[(i, q)];
                }
                let g = gamma.modulus();
                // the inner product itself carries rounding of order rows·ε·√(αβ);
                // couplings far below the matrix's own scale are noise
                if g <= tol * alpha.sqrt() * beta.sqrt() || g <= floor {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let phase = gamma.unscale(g);
                rotate(&mut a, p, q, c, c * t, phase);
                rotate(&mut v, p, q, c, c * t, phase);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric("Jacobi SVD did not converge".into()));
    }
    let s: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let mut u = a;
    for (j, &sj) in s.iter().enumerate() {
        if sj > 0.0 {
            u.column_mut(j).unscale_mut(sj);
        }
    }
    Ok((u, s, v.adjoint()))
}

/// SVD keeping at most `max_chi` values above `σ_max · max(rtol, ε·dim)`.
/// Ties in the ordering break by the original index.
pub(crate) fn truncated_svd<T>(m: DMatrix<T>, max_chi: usize, rtol: f64) -> Result<Split<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension("SVD of an empty matrix".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite entry before SVD".into()));
    }
    let (u, sv, vt) = full_svd(m)?;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));
    let smax = sv[order[0]];
    let cutoff = smax * rtol.max(f64::EPSILON * rows.max(cols) as f64);
    let mut keep: Vec<usize> = order.iter().copied().filter(|&i| sv[i] > cutoff).take(max_chi.max(1)).collect();
    if keep.is_empty() {
        keep.push(order[0]);
    }
    let discarded = order.iter().filter(|i| !keep.contains(i)).map(|&i| sv[i] * sv[i]).sum();
    let u = DMatrix::from_fn(rows, keep.len(), |r, c| u[(r, keep[c])]);
    let vt = DMatrix::from_fn(keep.len(), cols, |r, c| vt[(keep[r], c)]);
    Ok(Split { u, s: keep.iter().map(|&i| sv[i]).collect(), vt, discarded })
}
