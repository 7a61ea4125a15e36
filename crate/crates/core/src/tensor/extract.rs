//! Function-MPS extraction.
//!
//! The observable is written as an MPS over the Hermitian Pauli basis
//! `(I, X, Y, Z)` and propagated backwards through the circuit. Fixed and
//! trainable gates act as real Pauli transfer matrices; every encoding gate
//! `S(x) = exp(i·π/2·x·Z)` splits its site into three components
//! `(commuting part, cos πx part, sin πx part)` and keeps that index as an
//! open leg. Contracting the Pauli legs with the initial state leaves a
//! tensor network over the open legs only, which is cut into a train ordered
//! qubit by qubit and, within a qubit, by time.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{truncated_svd, Core, TensorTrain, DEFAULT_MAX_CHI};
use crate::circuit::{assess, CircuitIR, ClassifierConfig, Gate, GateTag, InitialState, Param, Rule};
use crate::error::{Error, Result};
use crate::oracle::DenseState;
use crate::pauli::{conjugate_encoding, Pauli, PauliString};
use crate::surrogate::{Basis, FunctionSurrogate, Representation};

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractOptions {
    pub max_chi: usize,
    /// Relative singular-value cutoff; 0 keeps everything above rounding level.
    pub svd_tol: f64,
    pub classifier: ClassifierConfig,
    /// Refuse circuits that are not shallow under the classifier's depth budget.
    pub require_shallow: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { max_chi: DEFAULT_MAX_CHI, svd_tol: 0.0, classifier: ClassifierConfig::default(), require_shallow: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    pub surrogate: FunctionSurrogate,
    /// Largest bond of the operator MPS during propagation.
    pub operator_max_bond: usize,
    /// Squared singular values dropped from the operator MPS.
    pub operator_discarded: f64,
}

impl Extraction {
    pub fn train(&self) -> &TensorTrain {
        match &self.surrogate.representation {
            Representation::TensorTrain(t) => t,
            _ => unreachable!("extraction always yields a train"),
        }
    }
}

/// Inserts SWAP chains so every two-qubit gate acts on neighbours.
pub(crate) fn route<'a>(gates: impl IntoIterator<Item = &'a Gate>) -> Vec<Gate> {
    let mut out = Vec::new();
    for g in gates {
        match *g.qubits.as_slice() {
            [a, b] if a.abs_diff(b) > 1 => {
                let (lo, hi) = (a.min(b), a.max(b));
                let swaps: Vec<Gate> = (lo + 1..hi).rev().map(|k| Gate::swap(k, k + 1)).collect();
                out.extend(swaps.iter().cloned());
                let map = |q: usize| if q == hi { lo + 1 } else { q };
                out.push(Gate { qubits: vec![map(a), map(b)], ..g.clone() });
                out.extend(swaps.into_iter().rev());
            }
            _ => out.push(g.clone()),
        }
    }
    out
}

fn sigma(p: usize) -> DMatrix<Complex64> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let v = match p {
        0 => [c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)],
        1 => [c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)],
        2 => [c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)],
        _ => [c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)],
    };
    DMatrix::from_row_slice(2, 2, &v)
}

/// `M[p', p]` = coefficient of `σ_{p'}` in `U† σ_p U`.
fn transfer_matrix(u: &DMatrix<Complex64>) -> DMatrix<f64> {
    let k = if u.nrows() == 2 { 1 } else { 2 };
    let dim = 4usize.pow(k);
    let basis: Vec<DMatrix<Complex64>> = (0..dim)
        // two-qubit index p = 4·p_left + p_right; the left site is bit 0
        .map(|p| if k == 1 { sigma(p) } else { sigma(p % 4).kronecker(&sigma(p / 4)) })
        .collect();
    let norm = (1usize << k) as f64;
    let mut m = DMatrix::zeros(dim, dim);
    for p in 0..dim {
        let img = u.adjoint() * &basis[p] * u;
        for q in 0..dim {
            m[(q, p)] = (&basis[q] * &img).trace().re / norm;
        }
    }
    m
}

fn pauli_index(p: Pauli) -> usize {
    match p {
        Pauli::I => 0,
        Pauli::X => 1,
        Pauli::Y => 2,
        Pauli::Z => 3,
    }
}

/// `(commuting, cos, sin)` components of the encoding conjugation.
fn encoding_components() -> [DMatrix<f64>; 3] {
    let mut a = [DMatrix::zeros(4, 4), DMatrix::zeros(4, 4), DMatrix::zeros(4, 4)];
    for p in [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z] {
        let s = PauliString::single(1, 0, p).expect("one qubit");
        let split = conjugate_encoding(0, &s).expect("qubit 0 exists");
        let col = pauli_index(p);
        match split.odd {
            None => a[0][(col, col)] = 1.0,
            Some(odd) => {
                a[1][(col, col)] = 1.0;
                a[2][(pauli_index(odd.get(0)), col)] = odd.phase().sign().expect("Hermitian image");
            }
        }
    }
    a
}

/// Operator site `(l, pauli, legs, r)`; the open-leg index is a mixed-radix
/// number with `legs[0]` most significant.
#[derive(Clone, Debug)]
struct OpSite {
    l: usize,
    a: usize,
    r: usize,
    data: Vec<f64>,
    legs: Vec<usize>,
}

impl OpSite {
    fn idx(&self, li: usize, p: usize, al: usize, ri: usize) -> usize {
        ((li * 4 + p) * self.a + al) * self.r + ri
    }

    fn apply(&mut self, m: &DMatrix<f64>) {
        let mut out = vec![0.0; self.data.len()];
        for li in 0..self.l {
            for al in 0..self.a {
                for ri in 0..self.r {
                    for p in 0..4 {
                        let v = self.data[self.idx(li, p, al, ri)];
                        if v == 0.0 {
                            continue;
                        }
                        for q in 0..4 {
                            out[self.idx(li, q, al, ri)] += m[(q, p)] * v;
                        }
                    }
                }
            }
        }
        self.data = out;
    }

    fn open_leg(&mut self, comps: &[DMatrix<f64>; 3], leg: usize) {
        let a2 = self.a * 3;
        let mut out = vec![0.0; self.l * 4 * a2 * self.r];
        for li in 0..self.l {
            for al in 0..self.a {
                for ri in 0..self.r {
                    for p in 0..4 {
                        let v = self.data[self.idx(li, p, al, ri)];
                        if v == 0.0 {
                            continue;
                        }
                        for (alpha, m) in comps.iter().enumerate() {
                            for q in 0..4 {
                                out[((li * 4 + q) * a2 + alpha * self.a + al) * self.r + ri] += m[(q, p)] * v;
                            }
                        }
                    }
                }
            }
        }
        self.a = a2;
        self.data = out;
        self.legs.insert(0, leg);
    }
}

struct OperatorMps {
    sites: Vec<OpSite>,
    max_bond: usize,
    discarded: f64,
}

impl OperatorMps {
    fn from_observable(c: &CircuitIR) -> Result<OperatorMps> {
        let terms = c.observable.real_terms(1e-12)?;
        let (n, k) = (c.n, terms.len());
        let mut sites = Vec::with_capacity(n);
        for q in 0..n {
            let l = if q == 0 { 1 } else { k };
            let r = if q + 1 == n { 1 } else { k };
            let mut s = OpSite { l, a: 1, r, data: vec![0.0; l * 4 * r], legs: vec![] };
            for (t, (w, p)) in terms.iter().enumerate() {
                let (li, ri) = (if l == 1 { 0 } else { t }, if r == 1 { 0 } else { t });
                let v = if q + 1 == n { *w } else { 1.0 };
                let at = s.idx(li, pauli_index(p.get(q)), 0, ri);
                s.data[at] = v;
            }
            sites.push(s);
        }
        let mut m = OperatorMps { sites, max_bond: k, discarded: 0.0 };
        for q in 0..n.saturating_sub(1) {
            m.apply_pair(q, &DMatrix::identity(16, 16), usize::MAX, 0.0)?;
        }
        Ok(m)
    }

    /// Applies a 16×16 transfer matrix to sites `(q, q+1)` and re-splits.
    fn apply_pair(&mut self, q: usize, m: &DMatrix<f64>, max_chi: usize, tol: f64) -> Result<()> {
        let (sl, sr) = (&self.sites[q], &self.sites[q + 1]);
        let (l, al, mid, ar, r) = (sl.l, sl.a, sl.r, sr.a, sr.r);
        let lm = DMatrix::from_row_slice(l * 4 * al, mid, &sl.data);
        let rm = DMatrix::from_row_slice(mid, 4 * ar * r, &sr.data);
        let theta = lm * rm;
        let cols = ar * r;
        let mut out = DMatrix::zeros(l * 4 * al, 4 * cols);
        for li in 0..l {
            for a in 0..al {
                for pl in 0..4 {
                    let row = (li * 4 + pl) * al + a;
                    for pr in 0..4 {
                        for j in 0..cols {
                            let v = theta[(row, pr * cols + j)];
                            if v == 0.0 {
                                continue;
                            }
                            for ql in 0..4 {
                                let orow = (li * 4 + ql) * al + a;
                                for qr in 0..4 {
                                    let w = m[(ql * 4 + qr, pl * 4 + pr)];
                                    if w != 0.0 {
                                        out[(orow, qr * cols + j)] += w * v;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        let split = truncated_svd(out, max_chi, tol)?;
        let chi = split.s.len();
        self.discarded += split.discarded;
        self.max_bond = self.max_bond.max(chi);
        self.sites[q].r = chi;
        self.sites[q].data = super::row_major(&split.u);
        self.sites[q + 1].l = chi;
        self.sites[q + 1].data = super::row_major(&split.s_vt());
        Ok(())
    }
}

/// Real MPS of `⟨ψ|σ_{p₀}⊗…⊗σ_{p_{n−1}}|ψ⟩` over the Pauli index of each site.
fn pauli_expectation_mps(s: &DenseState) -> Result<Vec<Core<f64>>> {
    let n = s.num_qubits();
    if n > 10 {
        return Err(Error::Capacity(format!("dense initial state on {n} qubits (function-MPS limit 10)")));
    }
    let psi = s.amplitudes();
    let dim = 1usize << n;
    // t[(s_{n-1}, s'_{n-1}), …] with site 0 most significant: index Σ_i (2 s_i + s'_i)·4^{n−1−i}
    let mut t = vec![Complex64::new(0.0, 0.0); dim * dim];
    for (b, &pb) in psi.iter().enumerate() {
        for (b2, &pb2) in psi.iter().enumerate() {
            let mut idx = 0;
            for i in 0..n {
                idx = idx * 4 + 2 * ((b >> i) & 1) + ((b2 >> i) & 1);
            }
            // Σ_{s,s'} σ[s, s'] ψ[s'] ψ̄[s]
            t[idx] = pb.conj() * pb2;
        }
    }
    let w: Vec<DMatrix<Complex64>> = (0..4).map(sigma).collect();
    for i in 0..n {
        let stride = 4usize.pow((n - 1 - i) as u32);
        let mut out = vec![Complex64::new(0.0, 0.0); t.len()];
        for hi in 0..4usize.pow(i as u32) {
            for lo in 0..stride {
                for (p, wp) in w.iter().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for ss in 0..4 {
                        acc += wp[(ss / 2, ss % 2)] * t[(hi * 4 + ss) * stride + lo];
                    }
                    out[(hi * 4 + p) * stride + lo] = acc;
                }
            }
        }
        t = out;
    }
    let real: Vec<f64> = t.iter().map(|z| z.re).collect();
    let mut cores = Vec::with_capacity(n);
    let mut rest = DMatrix::from_row_slice(1, real.len(), &real);
    for _ in 0..n - 1 {
        let l = rest.nrows();
        let cols = rest.ncols() / 4;
        let m = DMatrix::from_fn(l * 4, cols, |i, j| rest[(i / 4, (i % 4) * cols + j)]);
        let split = truncated_svd(m, usize::MAX, 0.0)?;
        cores.push(Core::from_left_matrix(&split.u, 4));
        rest = split.s_vt();
    }
    cores.push(Core::from_right_matrix(&rest, 4));
    Ok(cores)
}

/// Extracts `x ↦ f_θ(x)` as a trig3 tensor train with one leg per encoding gate.
pub fn extract_function_mps(c: &CircuitIR, theta: &[f64], opts: &ExtractOptions) -> Result<Extraction> {
    if opts.require_shallow {
        let a = assess(c, &opts.classifier);
        if !a.matched.contains(&Rule::Observation1) {
            return Err(Error::Classification(format!(
                "routed depth {} exceeds the depth budget {}",
                a.profile.depth_total, a.depth_budget
            )));
        }
    }
    let data_gates: Vec<&Gate> = c.gates().filter(|g| g.is_data()).collect();
    if let Some(g) = data_gates.iter().find(|g| g.tag != GateTag::EncRz) {
        return Err(Error::Basis(format!("encoding gate {:?} is not of the diagonal S(x) form", g.tag)));
    }
    let leg_slot: Vec<usize> = data_gates
        .iter()
        .map(|g| match g.param() {
            Param::Data(j) => j,
            _ => unreachable!(),
        })
        .collect();

    let comps = encoding_components();
    let mut op = OperatorMps::from_observable(c)?;
    let routed = route(c.gates());
    let mut leg = data_gates.len();
    for g in routed.iter().rev() {
        match *g.qubits.as_slice() {
            [q] if g.is_data() => {
                leg -= 1;
                op.sites[q].open_leg(&comps, leg);
            }
            [q] => {
                let m = transfer_matrix(&g.unitary(&[], theta)?);
                op.sites[q].apply(&m);
            }
            [a, b] => {
                let left = a.min(b);
                let mut u = g.unitary(&[], theta)?;
                if a != left {
                    let s = Gate::swap(0, 1).unitary(&[], &[])?;
                    u = &s * u * &s;
                }
                op.apply_pair(left, &transfer_matrix(&u), opts.max_chi, opts.svd_tol)?;
            }
            _ => return Err(Error::GateSet(format!("{:?}", g.tag))),
        }
    }

    // contract Pauli legs with the initial state: sites become (l, a, r)
    let sites: Vec<(usize, usize, usize, Vec<f64>, Vec<usize>)> = match &c.initial_state {
        InitialState::Zero => op
            .sites
            .iter()
            .map(|s| {
                let mut d = vec![0.0; s.l * s.a * s.r];
                for li in 0..s.l {
                    for al in 0..s.a {
                        for ri in 0..s.r {
                            d[(li * s.a + al) * s.r + ri] = s.data[s.idx(li, 0, al, ri)] + s.data[s.idx(li, 3, al, ri)];
                        }
                    }
                }
                (s.l, s.a, s.r, d, s.legs.clone())
            })
            .collect(),
        InitialState::Dense(amps) => {
            let e = pauli_expectation_mps(&DenseState::from_amplitudes(c.n, amps.clone())?)?;
            op.sites
                .iter()
                .zip(&e)
                .map(|(s, ec)| {
                    let (l, r) = (s.l * ec.l, s.r * ec.r);
                    let mut d = vec![0.0; l * s.a * r];
                    for li in 0..s.l {
                        for le in 0..ec.l {
                            for al in 0..s.a {
                                for ri in 0..s.r {
                                    for re in 0..ec.r {
                                        let v: f64 = (0..4).map(|p| s.data[s.idx(li, p, al, ri)] * ec.at(le, p, re)).sum();
                                        d[((li * ec.l + le) * s.a + al) * r + ri * ec.r + re] = v;
                                    }
                                }
                            }
                        }
                    }
                    (l, s.a, r, d, s.legs.clone())
                })
                .collect()
        }
    };

    let mut cores: Vec<Core<f64>> = Vec::new();
    let mut order: Vec<usize> = Vec::new();
    let mut carry = DMatrix::<f64>::identity(1, 1);
    for (l, a, r, d, legs) in sites {
        let m = DMatrix::from_row_slice(l, a * r, &d);
        let mut rest = &carry * m;
        if legs.is_empty() {
            carry = rest;
            continue;
        }
        let mut remaining = a;
        for (k, &leg) in legs.iter().enumerate() {
            remaining /= 3;
            let rows = rest.nrows();
            let cols = remaining * r;
            let split_m = DMatrix::from_fn(rows * 3, cols, |i, j| rest[(i / 3, (i % 3) * cols + j)]);
            if k + 1 == legs.len() {
                cores.push(Core::from_left_matrix(&split_m, 3));
            } else {
                let split = truncated_svd(split_m, usize::MAX, opts.svd_tol)?;
                cores.push(Core::from_left_matrix(&split.u, 3));
                rest = split.s_vt();
            }
            order.push(leg);
        }
        carry = DMatrix::identity(r, r);
    }
    let train = if cores.is_empty() {
        TensorTrain::constant(carry[(0, 0)])
    } else {
        let last = cores.pop().expect("non-empty");
        let closed = last.left_matrix() * &carry;
        cores.push(Core::from_left_matrix(&closed, 3));
        TensorTrain::new(cores, 1.0)?.truncate(opts.max_chi, opts.svd_tol.max(f64::EPSILON))?
    };
    let leg_inputs = order.iter().map(|&k| leg_slot[k]).collect();
    let surrogate = FunctionSurrogate {
        basis: Basis::Trig3,
        n_inputs: c.num_inputs(),
        leg_inputs,
        representation: Representation::TensorTrain(train),
        coverage: crate::surrogate::DEFAULT_COVERAGE,
    };
    Ok(Extraction { surrogate, operator_max_bond: op.max_bond, operator_discarded: op.discarded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Architecture, Block};
    use crate::oracle;
    use crate::pauli::WeightedPauliSum;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn obs(s: &str) -> WeightedPauliSum {
        WeightedPauliSum::from_pauli(s.parse().unwrap())
    }

    fn coefficients(e: &Extraction) -> Vec<f64> {
        e.train().to_full().unwrap()
    }

    #[test]
    fn commuting_observable_gives_constant_leg() {
        let c = CircuitIR::new(1, Architecture::EncodingFirst, vec![Block::encoding(vec![Gate::enc_rz(0, 0)]), Block::trainable(vec![])], obs("Z"), InitialState::Zero)
            .unwrap();
        let e = extract_function_mps(&c, &[], &ExtractOptions::default()).unwrap();
        let v = coefficients(&e);
        assert!((v[0] - 1.0).abs() < 1e-14 && v[1].abs() < 1e-14 && v[2].abs() < 1e-14);
    }

    #[test]
    fn hadamard_sandwich_gives_cosine() {
        let c = CircuitIR::new(
            1,
            Architecture::EncodingFirst,
            vec![Block::encoding(vec![Gate::h(0), Gate::enc_rz(0, 0), Gate::h(0)]), Block::trainable(vec![])],
            obs("Z"),
            InitialState::Zero,
        )
        .unwrap();
        let e = extract_function_mps(&c, &[], &ExtractOptions::default()).unwrap();
        let v = coefficients(&e);
        assert!(v[0].abs() < 1e-14 && (v[1] - 1.0).abs() < 1e-14 && v[2].abs() < 1e-14, "{v:?}");
        let f = e.surrogate.evaluate(&[0.25]).unwrap();
        assert!((f - (PI / 4.0).cos()).abs() < 1e-14);
        // independent check: least squares of the oracle table onto (1, cos, sin)
        let xs: Vec<f64> = (0..9).map(|k| k as f64 / 9.0).collect();
        let a = DMatrix::from_fn(xs.len(), 3, |i, j| [1.0, (PI * xs[i]).cos(), (PI * xs[i]).sin()][j]);
        let y = nalgebra::DVector::from_iterator(xs.len(), xs.iter().map(|&x| oracle::expectation(&c, &[x], &[]).unwrap()));
        let fit = a.clone().svd(true, true).solve(&y, 1e-14).unwrap();
        assert!((fit[1] - 1.0).abs() < 1e-12 && fit[0].abs() < 1e-12 && fit[2].abs() < 1e-12);
    }

    #[test]
    fn rotations_on_both_sides_of_an_entangler() {
        let enc = vec![Gate::h(0), Gate::h(1), Gate::enc_rz(0, 0), Gate::enc_rz(1, 1)];
        let w = vec![Gate::rx(0, 0), Gate::cnot(0, 1), Gate::rx(0, 1)];
        let c = CircuitIR::new(2, Architecture::EncodingFirst, vec![Block::encoding(enc), Block::trainable(w)], obs("ZI"), InitialState::Zero).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let theta = [rng.random_range(-PI..PI), rng.random_range(-PI..PI)];
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let opts = ExtractOptions { require_shallow: false, ..Default::default() };
            let f = extract_function_mps(&c, &theta, &opts).unwrap().surrogate.evaluate(&x).unwrap();
            assert!((f - oracle::expectation(&c, &x, &theta).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn encoding_components_reproduce_conjugation() {
        let comps = encoding_components();
        let x = 0.37;
        let u = Gate::enc_rz(0, 0).unitary(&[x], &[]).unwrap();
        let direct = transfer_matrix(&u);
        let combined = &comps[0] + &comps[1] * (PI * x).cos() + &comps[2] * (PI * x).sin();
        assert!((direct - combined).norm() < 1e-14);
    }

    fn brickwork_circuit(n: usize, layers: usize, rng: &mut ChaCha8Rng, obs_terms: WeightedPauliSum) -> CircuitIR {
        let enc: Vec<Gate> = (0..n).map(|q| Gate::enc_rz(q, q)).collect();
        let mut w = Vec::new();
        let mut slot = 0;
        for l in 0..layers {
            for q in 0..n {
                w.push(Gate::rx(q, slot));
                slot += 1;
            }
            for q in (l % 2..n - 1).step_by(2) {
                w.push(if rng.random_bool(0.5) { Gate::cnot(q, q + 1) } else { Gate::cz(q, q + 1) });
            }
        }
        let mut pre: Vec<Gate> = (0..n).map(Gate::h).collect();
        pre.extend(enc);
        CircuitIR::new(n, Architecture::EncodingFirst, vec![Block::encoding(pre), Block::trainable(w)], obs_terms, InitialState::Zero).unwrap()
    }

    #[test]
    fn brickwork_surrogate_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let n = 6;
        let o = WeightedPauliSum::from_signed_terms(n, vec![(1.0, "IIZIII".parse().unwrap()), (0.5, "IXXIII".parse().unwrap())]);
        let c = brickwork_circuit(n, 2, &mut rng, o);
        let theta: Vec<f64> = (0..c.num_params()).map(|_| rng.random_range(-PI..PI)).collect();
        let e = extract_function_mps(&c, &theta, &ExtractOptions::default()).unwrap();
        assert_eq!(e.surrogate.leg_inputs.len(), n);
        for _ in 0..200 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let want = oracle::expectation(&c, &x, &theta).unwrap();
            assert!((e.surrogate.evaluate(&x).unwrap() - want).abs() < 1e-9);
        }
        // the observable's back-propagated light cone covers at most 4 qubits
        assert!(e.train().max_bond() <= 4usize.pow(4));
    }

    #[test]
    fn repeated_uploads_open_separate_legs() {
        let c = CircuitIR::new(
            2,
            Architecture::Alternating,
            vec![
                Block::encoding(vec![Gate::h(0), Gate::h(1), Gate::enc_rz(0, 0), Gate::enc_rz(1, 0)]),
                Block::trainable(vec![Gate::cnot(0, 1), Gate::rx(0, 0)]),
                Block::encoding(vec![Gate::enc_rz(0, 0)]),
                Block::trainable(vec![Gate::h(0)]),
            ],
            obs("ZI"),
            InitialState::Zero,
        )
        .unwrap();
        let e = extract_function_mps(&c, &[0.4], &ExtractOptions { require_shallow: false, ..Default::default() }).unwrap();
        assert_eq!(e.surrogate.leg_inputs, vec![0, 0, 0]);
        for &x in &[0.0, 0.2, 0.61, -0.3] {
            let want = oracle::expectation(&c, &[x], &[0.4]).unwrap();
            assert!((e.surrogate.evaluate(&[x]).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_initial_state_and_routing() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let n = 4;
        let amps: Vec<Complex64> = (0..16).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let amps = amps.into_iter().map(|a| a / norm).collect();
        let c = CircuitIR::new(
            n,
            Architecture::EncodingFirst,
            vec![
                Block::encoding(vec![Gate::enc_rz(0, 0), Gate::enc_rz(3, 1)]),
                Block::trainable(vec![Gate::cnot(0, 3), Gate::rx(1, 0)]),
            ],
            WeightedPauliSum::from_signed_terms(n, vec![(1.0, "XIIY".parse().unwrap()), (0.3, "ZZII".parse().unwrap())]),
            InitialState::Dense(amps),
        )
        .unwrap();
        let e = extract_function_mps(&c, &[0.9], &ExtractOptions { require_shallow: false, ..Default::default() }).unwrap();
        for _ in 0..20 {
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let want = oracle::expectation(&c, &x, &[0.9]).unwrap();
            assert!((e.surrogate.evaluate(&x).unwrap() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn deep_circuit_is_refused() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let c = brickwork_circuit(4, 8, &mut rng, obs("ZIII"));
        let theta = vec![0.1; c.num_params()];
        assert!(matches!(extract_function_mps(&c, &theta, &ExtractOptions::default()), Err(Error::Classification(_))));
    }

    #[test]
    fn routing_keeps_gates_local() {
        let r = route([Gate::cnot(3, 0)].iter());
        assert!(r.iter().all(|g| g.qubits.len() < 2 || g.qubits[0].abs_diff(g.qubits[1]) == 1));
        assert_eq!(r.len(), 5);
    }
}
