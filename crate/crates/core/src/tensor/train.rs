use nalgebra::DMatrix;

use super::{truncated_svd, Core};
use crate::error::{Error, Result};

/// Real tensor train over the trig3 basis `(1, cos πx, sin πx)`.
///
/// The coefficient array is `A[α₁…α_m] = scale · G₁[α₁]⋯G_m[α_m]`, and the
/// function value at `x` is its contraction with the per-leg basis vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorTrain {
    cores: Vec<Core<f64>>,
    scale: f64,
    coefficient_error: f64,
}

pub const LEG_DIM: usize = 3;

impl TensorTrain {
    pub fn new(cores: Vec<Core<f64>>, scale: f64) -> Result<TensorTrain> {
        let mut prev = 1;
        for (k, c) in cores.iter().enumerate() {
            if c.d != LEG_DIM || c.l != prev {
                return Err(Error::Dimension(format!("core {k} has shape {}x{}x{}", c.l, c.d, c.r)));
            }
            prev = c.r;
        }
        if prev != 1 {
            return Err(Error::Dimension("last core must close with bond 1".into()));
        }
        Ok(TensorTrain { cores, scale, coefficient_error: 0.0 })
    }

    /// A train with no legs: the constant function `value`.
    pub fn constant(value: f64) -> TensorTrain {
        TensorTrain { cores: vec![], scale: value, coefficient_error: 0.0 }
    }

    pub(crate) fn from_flat(bond_dims: &[usize], floats: &[f64], scale: f64, coefficient_error: f64) -> Result<TensorTrain> {
        let mut cores = Vec::new();
        let mut at = 0;
        for w in bond_dims.windows(2) {
            let len = w[0] * LEG_DIM * w[1];
            let chunk = floats.get(at..at + len).ok_or_else(|| Error::Parse("train payload too short".into()))?;
            cores.push(Core::new(w[0], LEG_DIM, w[1], chunk.to_vec())?);
            at += len;
        }
        if at != floats.len() {
            return Err(Error::Parse("train payload has trailing data".into()));
        }
        let mut t = TensorTrain::new(cores, scale)?;
        t.coefficient_error = coefficient_error;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.cores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cores.is_empty()
    }

    pub fn cores(&self) -> &[Core<f64>] {
        &self.cores
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Upper bound on the Frobenius distance of the coefficient array to the
    /// untruncated one.
    pub fn coefficient_error(&self) -> f64 {
        self.coefficient_error
    }

    /// `|f(x) − f_exact(x)| ≤ ‖ΔA‖ · Π‖(1, cos, sin)‖ = ‖ΔA‖ · 2^{m/2}`.
    pub fn evaluation_error_bound(&self) -> f64 {
        self.coefficient_error * 2f64.powf(self.len() as f64 / 2.0)
    }

    /// All bond dimensions, boundaries included.
    pub fn bond_dims(&self) -> Vec<usize> {
        std::iter::once(1).chain(self.cores.iter().map(|c| c.r)).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn num_parameters(&self) -> usize {
        self.cores.iter().map(|c| c.data().len()).sum::<usize>().max(1)
    }

    /// Contracts with per-leg `(cos πx, sin πx)` pairs.
    pub fn evaluate(&self, legs: &[(f64, f64)]) -> Result<f64> {
        if legs.len() != self.len() {
            return Err(Error::Dimension(format!("{} leg values for a train of length {}", legs.len(), self.len())));
        }
        let mut v = vec![self.scale];
        for (c, &(cs, sn)) in self.cores.iter().zip(legs) {
            let basis = [1.0, cs, sn];
            let mut next = vec![0.0; c.r];
            for (a, &va) in v.iter().enumerate() {
                if va == 0.0 {
                    continue;
                }
                for (s, &bs) in basis.iter().enumerate() {
                    let w = va * bs;
                    for (b, nb) in next.iter_mut().enumerate() {
                        *nb += w * c.at(a, s, b);
                    }
                }
            }
            v = next;
        }
        Ok(v[0])
    }

    /// Dense coefficient array, first leg most significant.
    pub fn to_full(&self) -> Result<Vec<f64>> {
        if self.len() > 12 {
            return Err(Error::Capacity(format!("3^{} coefficients", self.len())));
        }
        let mut acc = DMatrix::from_element(1, 1, self.scale);
        for c in &self.cores {
            // (prefix, l) · (l, d·r) → (prefix·d, r)
            let m = &acc * c.right_matrix();
            let prefix = acc.nrows();
            acc = DMatrix::from_fn(prefix * c.d, c.r, |i, b| m[(i / c.d, (i % c.d) * c.r + b)]);
        }
        Ok(acc.column(0).iter().copied().collect())
    }

    /// Kronecker product of the per-leg basis vectors, ordered as [`to_full`](Self::to_full).
    pub fn full_features(&self, legs: &[(f64, f64)]) -> Result<Vec<f64>> {
        if self.len() > 12 {
            return Err(Error::Capacity(format!("3^{} features", self.len())));
        }
        let mut f = vec![1.0];
        for &(cs, sn) in legs {
            f = f.iter().flat_map(|&v| [v, v * cs, v * sn]).collect();
        }
        Ok(f)
    }

    /// Rounds the train to bond dimension `max_chi`, dropping singular values
    /// below `tol` relative to the largest at each cut.
    pub fn truncate(&self, max_chi: usize, tol: f64) -> Result<TensorTrain> {
        if self.len() < 2 || (tol == 0.0 && self.max_bond() <= max_chi) {
            return Ok(self.clone());
        }
        let mut cores = self.cores.clone();
        cores[0] = scaled(&cores[0], self.scale);
        // right-orthogonalize cores 1..m
        for k in (1..cores.len()).rev() {
            let m = cores[k].right_matrix();
            let qr = m.transpose().qr();
            let (q, r) = (qr.q(), qr.r());
            cores[k] = Core::from_right_matrix(&q.transpose(), LEG_DIM);
            let prev = cores[k - 1].left_matrix() * r.transpose();
            cores[k - 1] = Core::from_left_matrix(&prev, LEG_DIM);
        }
        let mut discarded = 0.0;
        for k in 0..cores.len() - 1 {
            let split = truncated_svd(cores[k].left_matrix(), max_chi, tol)?;
            discarded += split.discarded;
            cores[k] = Core::from_left_matrix(&split.u, LEG_DIM);
            let next = split.s_vt() * cores[k + 1].right_matrix();
            cores[k + 1] = Core::from_right_matrix(&next, LEG_DIM);
        }
        let mut t = TensorTrain::new(cores, 1.0)?;
        t.coefficient_error = self.coefficient_error + discarded.sqrt();
        Ok(t)
    }
}

fn scaled(c: &Core<f64>, s: f64) -> Core<f64> {
    Core::new(c.l, c.d, c.r, c.data().iter().map(|v| v * s).collect()).expect("same shape")
}
