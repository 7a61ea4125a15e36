use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{truncated_svd, Core};
use crate::circuit::{CircuitIR, Gate, InitialState};
use crate::error::{Error, Result};
use crate::oracle::DenseState;
use crate::pauli::{Pauli, WeightedPauliSum};

type C = Complex64;

/// Statevector MPS; site `i` is qubit `i`, physical index is the qubit bit.
#[derive(Clone, Debug, PartialEq)]
pub struct Mps {
    cores: Vec<Core<C>>,
    discarded_weight: f64,
}

impl Mps {
    pub fn zero(n: usize) -> Mps {
        let cores = (0..n)
            .map(|_| Core::new(1, 2, 1, vec![C::new(1.0, 0.0), C::new(0.0, 0.0)]).unwrap())
            .collect();
        Mps { cores, discarded_weight: 0.0 }
    }

    pub fn from_dense(s: &DenseState, max_chi: usize, svd_tol: f64) -> Result<Mps> {
        let n = s.num_qubits();
        // reverse the bit order so site 0 is the most significant row index
        let dim = 1usize << n;
        let mut v = vec![C::new(0.0, 0.0); dim];
        for (b, a) in s.amplitudes().iter().enumerate() {
            let rev = (0..n).fold(0usize, |acc, q| acc | ((b >> q) & 1) << (n - 1 - q));
            v[rev] = *a;
        }
        let mut cores = Vec::with_capacity(n);
        let mut rest = DMatrix::from_row_slice(1, dim, &v);
        let mut discarded = 0.0;
        for _ in 0..n.saturating_sub(1) {
            let l = rest.nrows();
            let cols = rest.ncols() / 2;
            let m = DMatrix::from_fn(l * 2, cols, |i, j| rest[(i / 2, (i % 2) * cols + j)]);
            let split = truncated_svd(m, max_chi, svd_tol)?;
            discarded += split.discarded;
            cores.push(Core::from_left_matrix(&split.u, 2));
            rest = split.s_vt();
        }
        if n > 0 {
            cores.push(Core::from_right_matrix(&rest, 2));
        }
        Ok(Mps { cores, discarded_weight: discarded })
    }

    pub fn num_sites(&self) -> usize {
        self.cores.len()
    }

    pub fn cores(&self) -> &[Core<C>] {
        &self.cores
    }

    /// Internal bond dimensions (one per cut).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.cores.iter().take(self.cores.len().saturating_sub(1)).map(|c| c.r).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Total squared singular-value weight discarded so far.
    pub fn discarded_weight(&self) -> f64 {
        self.discarded_weight
    }

    pub fn to_dense(&self) -> Result<DenseState> {
        let n = self.num_sites();
        if n > crate::oracle::DEFAULT_CAPACITY {
            return Err(Error::Capacity(format!("{n} sites")));
        }
        // acc rows enumerate bits of sites 0..k with site 0 least significant
        let mut acc = DMatrix::from_element(1, 1, C::new(1.0, 0.0));
        for (k, c) in self.cores.iter().enumerate() {
            let m = &acc * c.right_matrix();
            let prefix = acc.nrows();
            acc = DMatrix::from_fn(prefix * 2, c.r, |i, b| {
                let (low, s) = (i & ((1 << k) - 1), i >> k);
                m[(low, s * c.r + b)]
            });
        }
        DenseState::from_amplitudes(n, acc.column(0).iter().copied().collect())
    }

    /// Left-orthonormalizes sites `< center` and right-orthonormalizes sites `> center`.
    pub fn canonicalize(&mut self, center: usize) {
        let n = self.cores.len();
        for k in 0..center.min(n.saturating_sub(1)) {
            let qr = self.cores[k].left_matrix().qr();
            let (q, r) = (qr.q(), qr.r());
            self.cores[k] = Core::from_left_matrix(&q, 2);
            let next = r * self.cores[k + 1].right_matrix();
            self.cores[k + 1] = Core::from_right_matrix(&next, 2);
        }
        for k in (center + 1..n).rev() {
            let qr = self.cores[k].right_matrix().adjoint().qr();
            let (q, r) = (qr.q(), qr.r());
            self.cores[k] = Core::from_right_matrix(&q.adjoint(), 2);
            let prev = self.cores[k - 1].left_matrix() * r.adjoint();
            self.cores[k - 1] = Core::from_left_matrix(&prev, 2);
        }
    }

    /// Applies a one-qubit or nearest-neighbour gate; returns the squared
    /// weight discarded by truncation.
    pub fn apply(&mut self, g: &Gate, x: &[f64], theta: &[f64], max_chi: usize, svd_tol: f64) -> Result<f64> {
        let n = self.num_sites();
        if let Some(&q) = g.qubits.iter().find(|&&q| q >= n) {
            return Err(Error::Dimension(format!("gate on qubit {q} for {n} sites")));
        }
        let u = g.unitary(x, theta)?;
        match *g.qubits.as_slice() {
            [q] => {
                let c = &self.cores[q];
                let mut out = Core::zeros(c.l, 2, c.r);
                for a in 0..c.l {
                    for b in 0..c.r {
                        for s in 0..2 {
                            *out.at_mut(a, s, b) = u[(s, 0)] * c.at(a, 0, b) + u[(s, 1)] * c.at(a, 1, b);
                        }
                    }
                }
                self.cores[q] = out;
                Ok(0.0)
            }
            [a, b] => {
                if a.abs_diff(b) != 1 {
                    return Err(Error::Routing(a, b));
                }
                let left = a.min(b);
                self.canonicalize(left);
                let (cl, cr) = (&self.cores[left], &self.cores[left + 1]);
                // θ[(α, sL), (sR, β)]
                let theta_m = cl.left_matrix() * cr.right_matrix();
                let local = |sl: usize, sr: usize| if a == left { sl + 2 * sr } else { sr + 2 * sl };
                let (l, r) = (cl.l, cr.r);
                let mut out = DMatrix::zeros(l * 2, 2 * r);
                for al in 0..l {
                    for be in 0..r {
                        for sl in 0..2 {
                            for sr in 0..2 {
                                let mut acc = C::new(0.0, 0.0);
                                for tl in 0..2 {
                                    for tr in 0..2 {
                                        acc += u[(local(sl, sr), local(tl, tr))] * theta_m[(al * 2 + tl, tr * r + be)];
                                    }
                                }
                                out[(al * 2 + sl, sr * r + be)] = acc;
                            }
                        }
                    }
                }
                let split = truncated_svd(out, max_chi, svd_tol)?;
                self.cores[left] = Core::from_left_matrix(&split.u, 2);
                self.cores[left + 1] = Core::from_right_matrix(&split.s_vt(), 2);
                self.discarded_weight += split.discarded;
                Ok(split.discarded)
            }
            _ => Err(Error::GateSet(format!("{:?} on {} qubits", g.tag, g.qubits.len()))),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.overlap_with(|_| None).re
    }

    /// `⟨ψ|⊗_i M_i|ψ⟩` where `local(i)` gives `M_i` (identity when `None`).
    fn overlap_with(&self, local: impl Fn(usize) -> Option<[[C; 2]; 2]>) -> C {
        let mut env = DMatrix::from_element(1, 1, C::new(1.0, 0.0));
        for (i, c) in self.cores.iter().enumerate() {
            let m = local(i);
            let mut next = DMatrix::zeros(c.r, c.r);
            for a in 0..c.l {
                for a2 in 0..c.l {
                    let e = env[(a, a2)];
                    if e == C::new(0.0, 0.0) {
                        continue;
                    }
                    for s in 0..2 {
                        for s2 in 0..2 {
                            let w = match m {
                                Some(mm) => mm[s][s2],
                                None if s == s2 => C::new(1.0, 0.0),
                                None => continue,
                            };
                            if w == C::new(0.0, 0.0) {
                                continue;
                            }
                            for b in 0..c.r {
                                let bra = c.at(a, s, b).conj() * e * w;
                                for b2 in 0..c.r {
                                    next[(b, b2)] += bra * c.at(a2, s2, b2);
                                }
                            }
                        }
                    }
                }
            }
            env = next;
        }
        env[(0, 0)]
    }

    pub fn expect(&self, o: &WeightedPauliSum) -> Result<f64> {
        if o.num_qubits() != self.num_sites() {
            return Err(Error::Dimension("observable size differs from MPS".into()));
        }
        let o0 = C::new(0.0, 0.0);
        let o1 = C::new(1.0, 0.0);
        let i1 = C::new(0.0, 1.0);
        let mut total = C::new(0.0, 0.0);
        for (w, p) in o.iter() {
            let v = self.overlap_with(|q| match p.get(q) {
                Pauli::I => None,
                Pauli::X => Some([[o0, o1], [o1, o0]]),
                Pauli::Y => Some([[o0, -i1], [i1, o0]]),
                Pauli::Z => Some([[o1, o0], [o0, -o1]]),
            });
            total += w * v;
        }
        if total.im.abs() > crate::oracle::IMAG_TOL {
            return Err(Error::Numeric(format!("expectation has imaginary part {}", total.im)));
        }
        Ok(total.re)
    }
}

/// Runs a circuit on an MPS, SWAP-routing non-adjacent gates.
pub fn simulate(c: &CircuitIR, x: &[f64], theta: &[f64], max_chi: usize, svd_tol: f64) -> Result<Mps> {
    let mut m = match &c.initial_state {
        InitialState::Zero => Mps::zero(c.n),
        InitialState::Dense(a) => Mps::from_dense(&DenseState::from_amplitudes(c.n, a.clone())?, max_chi, svd_tol)?,
    };
    for g in super::extract::route(c.gates()) {
        m.apply(&g, x, theta, max_chi, svd_tol)?;
    }
    Ok(m)
}
