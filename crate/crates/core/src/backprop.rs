//! Heisenberg back-propagation of observables with exact sparse term
//! tracking.
//!
//! A term is `coefficient · T_α(x) · P` with `T_α` a basis function of the
//! inputs and `P` a Hermitian Pauli string. Gates are applied in reverse
//! time order; Clifford gates permute terms, non-Clifford rotations split a
//! term in two, and encoding gates attach basis-function labels. Duplicate
//! `(α, P)` pairs merge after every gate, in `(α, z, x)` order.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;

use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitIR, Gate, GateAction, GateTag, InitialState, InputDomain, Param};
use crate::error::{Error, Result};
use crate::oracle::{self, DenseState};
use crate::pauli::{conjugate_clifford, conjugate_encoding, conjugate_rotation, PauliString, WeightedPauliSum};
use crate::surrogate::{Basis, BasisIndex, CoefficientSource, FunctionSurrogate, SparseTerm};

pub const DEFAULT_TERM_CAP: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackpropOptions {
    pub input_domain: InputDomain,
    /// Resource error once any intermediate expansion exceeds this many terms.
    pub term_cap: usize,
}

impl Default for BackpropOptions {
    fn default() -> Self {
        BackpropOptions { input_domain: InputDomain::Binary, term_cap: DEFAULT_TERM_CAP }
    }
}

type TermKey = (BasisIndex, (u64, u64));

/// `O(x) = Σ_k c_k T_k(x) P_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableExpansion {
    n: usize,
    input_domain: InputDomain,
    n_inputs: usize,
    /// Input coordinate of each encoding leg (continuous domain).
    leg_inputs: Vec<usize>,
    terms: BTreeMap<TermKey, f64>,
}

impl ObservableExpansion {
    fn from_sum(o: &WeightedPauliSum, input_domain: InputDomain, n_inputs: usize, leg_inputs: Vec<usize>) -> Result<Self> {
        let constant = match input_domain {
            InputDomain::Binary => BasisIndex::Parity(0),
            InputDomain::Continuous => BasisIndex::CONSTANT_TRIG,
        };
        let mut terms = BTreeMap::new();
        for (c, p) in o.real_terms(1e-12)? {
            if c != 0.0 {
                terms.insert((constant, p.key()), c);
            }
        }
        Ok(ObservableExpansion { n: o.num_qubits(), input_domain, n_inputs, leg_inputs, terms })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn input_domain(&self) -> InputDomain {
        self.input_domain
    }

    pub fn basis(&self) -> Basis {
        match self.input_domain {
            InputDomain::Binary => Basis::FourierBinary,
            InputDomain::Continuous => Basis::Trig3,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn pauli(&self, key: (u64, u64)) -> PauliString {
        PauliString::new(self.n, key.0, key.1, crate::pauli::Phase::ONE).expect("key within register")
    }

    /// Terms in `(α, z, x)` order.
    pub fn iter(&self) -> impl Iterator<Item = (BasisIndex, PauliString, f64)> + '_ {
        self.terms.iter().map(|(&(a, k), &c)| (a, self.pauli(k), c))
    }

    /// The operator `O(x)` at a fixed input.
    pub fn at(&self, x: &[f64]) -> Result<WeightedPauliSum> {
        if x.len() < self.n_inputs {
            return Err(Error::Dimension(format!("{} inputs given, expansion reads {}", x.len(), self.n_inputs)));
        }
        let legs: Vec<(f64, f64)> = self.leg_inputs.iter().map(|&j| ((PI * x[j]).cos(), (PI * x[j]).sin())).collect();
        let mut out = WeightedPauliSum::zero(self.n);
        for (a, p, c) in self.iter() {
            out.add_term(Complex64::new(c * a.value(x, &legs), 0.0), &p);
        }
        Ok(out)
    }

    fn step(&mut self, g: &Gate, theta: &[f64], leg: Option<usize>, cap: usize) -> Result<()> {
        let mut next: BTreeMap<TermKey, f64> = BTreeMap::new();
        let mut push = |a: BasisIndex, w: f64, p: PauliString| {
            let sign = p.phase().sign().expect("Hermitian images");
            *next.entry((a, p.key())).or_insert(0.0) += w * sign;
        };
        if g.is_data() {
            let q = g.qubits[0];
            let j = match g.param() {
                Param::Data(j) => j,
                _ => unreachable!("data gates carry a coordinate"),
            };
            for (&(a, k), &c) in &self.terms {
                let split = conjugate_encoding(q, &self.pauli(k))?;
                match (split.odd, a) {
                    (None, _) => push(a, c, split.even),
                    // cos(πx) = (−1)^x and sin(πx) = 0 on {0, 1}
                    (Some(_), BasisIndex::Parity(m)) => push(BasisIndex::Parity(m ^ (1 << j)), c, split.even),
                    (Some(odd), BasisIndex::Trig { cos, sin }) => {
                        let bit = 1u64 << leg.expect("continuous domain assigns legs");
                        push(BasisIndex::Trig { cos: cos | bit, sin }, c, split.even);
                        push(BasisIndex::Trig { cos, sin: sin | bit }, c, odd);
                    }
                }
            }
        } else {
            match g.action(self.n)? {
                GateAction::Clifford(cg) => {
                    for (&(a, k), &c) in &self.terms {
                        push(a, c, conjugate_clifford(cg, &self.pauli(k))?);
                    }
                }
                GateAction::Rotation { terms: gens, .. } => {
                    let v = g.value(&[], theta)?;
                    let mut cur: Vec<(BasisIndex, f64, PauliString)> = self.terms.iter().map(|(&(a, k), &c)| (a, c, self.pauli(k))).collect();
                    for t in gens {
                        let mut out = Vec::with_capacity(cur.len() * 2);
                        for (a, c, p) in cur {
                            for (w, img) in conjugate_rotation(&t.generator, t.scale * v, &p)? {
                                let s = img.phase().sign().expect("Hermitian images");
                                out.push((a, c * w * s, img.unsigned()));
                            }
                        }
                        cur = out;
                    }
                    for (a, c, p) in cur {
                        push(a, c, p);
                    }
                }
            }
        }
        next.retain(|_, c| *c != 0.0);
        if next.len() > cap {
            return Err(Error::Resource(format!("{} terms exceed the cap of {cap}", next.len())));
        }
        self.terms = next;
        Ok(())
    }

    /// `⟨P⟩`-weighted collapse to a sparse surrogate; `bind` gives
    /// `(⟨P⟩, standard error)` per string.
    pub fn bind(&self, mut bind: impl FnMut(&PauliString) -> Result<(f64, f64)>) -> Result<FunctionSurrogate> {
        let mut cache: BTreeMap<(u64, u64), (f64, f64)> = BTreeMap::new();
        let mut acc: BTreeMap<BasisIndex, (f64, f64)> = BTreeMap::new();
        for (&(a, k), &c) in &self.terms {
            let (v, se) = match cache.get(&k) {
                Some(&e) => e,
                None => {
                    let e = bind(&self.pauli(k))?;
                    cache.insert(k, e);
                    e
                }
            };
            let slot = acc.entry(a).or_insert((0.0, 0.0));
            slot.0 += c * v;
            slot.1 += c.abs() * se;
        }
        let terms = acc
            .into_iter()
            .filter(|(_, (v, se))| *v != 0.0 || *se != 0.0)
            .map(|(index, (coefficient, std_error))| SparseTerm { index, coefficient, std_error })
            .collect();
        FunctionSurrogate::sparse(self.basis(), self.n_inputs, self.leg_inputs.clone(), terms)
    }

    /// One line per term: `coefficient TAB basis-index(hex) TAB pauli`.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        for (a, p, c) in self.iter() {
            writeln!(w, "{c:e}\t{a}\t{p}")?;
        }
        Ok(())
    }

    /// Reads a dump back as `(coefficient, index, pauli)` triples.
    pub fn read_dump<R: BufRead>(r: R) -> Result<Vec<(f64, BasisIndex, PauliString)>> {
        r.lines()
            .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
            .map(|line| {
                let line = line?;
                let mut f = line.split('\t');
                let (Some(c), Some(a), Some(p), None) = (f.next(), f.next(), f.next(), f.next()) else {
                    return Err(Error::Parse(format!("malformed dump line {line:?}")));
                };
                let c = c.parse::<f64>().map_err(|e| Error::Parse(format!("coefficient {c:?}: {e}")))?;
                Ok((c, a.parse()?, p.parse()?))
            })
            .collect()
    }
}

/// Summary of an expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermCensus {
    pub term_count: usize,
    pub max_abs_coefficient: f64,
    /// Distinct basis indices in ascending order, as hex text.
    pub fourier_support: Vec<String>,
}

pub fn term_census(e: &ObservableExpansion) -> TermCensus {
    let mut support: Vec<BasisIndex> = e.terms.keys().map(|&(a, _)| a).collect();
    support.dedup();
    TermCensus {
        term_count: e.len(),
        max_abs_coefficient: e.terms.values().fold(0.0, |m, c| m.max(c.abs())),
        fourier_support: support.iter().map(|a| a.to_string()).collect(),
    }
}

/// Back-propagates `o` through `gates` (given in time order).
pub fn backpropagate_gates<'a, I>(
    n: usize,
    gates: I,
    o: &WeightedPauliSum,
    theta: &[f64],
    opts: &BackpropOptions,
) -> Result<ObservableExpansion>
where
    I: IntoIterator<Item = &'a Gate>,
    I::IntoIter: DoubleEndedIterator,
{
    if o.num_qubits() != n {
        return Err(Error::Dimension(format!("observable on {} qubits, circuit has {n}", o.num_qubits())));
    }
    let gates: Vec<&Gate> = gates.into_iter().collect();
    let mut leg_inputs = Vec::new();
    let mut n_inputs = 0;
    for g in &gates {
        if let Param::Data(j) = g.param() {
            if g.tag != GateTag::EncRz {
                return Err(Error::GateSet(format!("{:?} cannot carry data", g.tag)));
            }
            leg_inputs.push(j);
            n_inputs = n_inputs.max(j + 1);
        }
    }
    let continuous = opts.input_domain == InputDomain::Continuous;
    if (continuous && leg_inputs.len() > 64) || n_inputs > 64 {
        return Err(Error::Capacity("more than 64 encoding legs or inputs".into()));
    }
    let mut e = ObservableExpansion::from_sum(o, opts.input_domain, n_inputs, if continuous { leg_inputs.clone() } else { vec![] })?;
    let mut leg = leg_inputs.len();
    for g in gates.into_iter().rev() {
        let this_leg = if g.is_data() {
            leg -= 1;
            Some(leg)
        } else {
            None
        };
        e.step(g, theta, this_leg.filter(|_| continuous), opts.term_cap)?;
    }
    Ok(e)
}

/// `U(x, θ)† O U(x, θ)` over the whole circuit, with `θ` bound numerically.
pub fn backpropagate(c: &CircuitIR, o: &WeightedPauliSum, theta: &[f64], opts: &BackpropOptions) -> Result<ObservableExpansion> {
    let mut e = backpropagate_gates(c.n, c.gates(), o, theta, opts)?;
    e.n_inputs = e.n_inputs.max(c.num_inputs());
    Ok(e)
}

fn initial_expectation(c: &CircuitIR) -> Result<impl Fn(&PauliString) -> f64> {
    let dense = match &c.initial_state {
        InitialState::Zero => None,
        InitialState::Dense(_) => Some(DenseState::initial(c, oracle::DEFAULT_CAPACITY)?),
    };
    Ok(move |p: &PauliString| match &dense {
        None => {
            if p.x_bits() == 0 {
                1.0
            } else {
                0.0
            }
        }
        Some(s) => s.pauli_expectation(p).re,
    })
}

/// Full-circuit surrogate: back-propagation bound to the initial state.
pub fn backprop_surrogate(c: &CircuitIR, theta: &[f64], opts: &BackpropOptions) -> Result<FunctionSurrogate> {
    let e = backpropagate(c, &c.observable, theta, opts)?;
    let ev = initial_expectation(c)?;
    e.bind(|p| Ok((ev(p), 0.0)))
}

/// Surrogate of a flipped circuit: `O` is propagated through the encoding
/// block only and each remaining Pauli is weighted by `⟨P⟩` on `W(θ)|ψ₀⟩`.
pub fn flipped_surrogate(c: &CircuitIR, theta: &[f64], source: CoefficientSource<'_>, opts: &BackpropOptions) -> Result<FunctionSurrogate> {
    let (w, enc) = c.flipped_blocks()?;
    let mut e = backpropagate_gates(c.n, &enc.gates, &c.observable, theta, opts)?;
    e.n_inputs = e.n_inputs.max(c.num_inputs());
    match source {
        CoefficientSource::Oracle => {
            let state = oracle::run_gates(&DenseState::initial(c, oracle::DEFAULT_CAPACITY)?, &w.gates, &[], theta)?;
            e.bind(|p| Ok((state.pauli_expectation(p).re, 0.0)))
        }
        CoefficientSource::Estimates(table) => e.bind(|p| table.get(p).map(|est| (est.value, est.std_error))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Architecture, Block};
    use crate::surrogate::{CoefficientEstimates, Estimate, Representation};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn obs(s: &str) -> WeightedPauliSum {
        WeightedPauliSum::from_pauli(s.parse().unwrap())
    }

    fn circuit(n: usize, gates: Vec<Gate>, o: WeightedPauliSum) -> CircuitIR {
        CircuitIR::new(n, Architecture::Alternating, vec![Block::encoding(gates)], o, InitialState::Zero).unwrap()
    }

    /// Clifford+T circuit with `t` T gates and a layer of binary encodings.
    fn random_doped(n: usize, t: usize, len: usize, rng: &mut ChaCha8Rng) -> Vec<Gate> {
        let mut gates: Vec<Gate> = (0..n).map(Gate::h).collect();
        gates.extend((0..n).map(|q| Gate::enc_rz(q, q)));
        let mut t_left = t;
        for k in 0..len {
            let q = rng.random_range(0..n);
            let r = (q + 1 + rng.random_range(0..n - 1)) % n;
            let slots_left = len - k;
            if t_left > 0 && rng.random_range(0..slots_left) < t_left {
                gates.push(Gate::t(q));
                t_left -= 1;
                continue;
            }
            gates.push(match rng.random_range(0..4) {
                0 => Gate::h(q),
                1 => Gate::s(q),
                2 => Gate::cnot(q, r),
                _ => Gate::cz(q, r),
            });
        }
        gates
    }

    #[test]
    fn clifford_circuit_keeps_one_term() {
        let c = circuit(3, vec![Gate::h(0), Gate::cnot(0, 1), Gate::s(2), Gate::cz(1, 2)], obs("ZZX"));
        let e = backpropagate(&c, &c.observable, &[], &BackpropOptions::default()).unwrap();
        assert_eq!(e.len(), 1);
    }

    #[test]
    fn single_t_splits_into_two() {
        let c = circuit(1, vec![Gate::t(0)], obs("X"));
        let e = backpropagate(&c, &c.observable, &[], &BackpropOptions::default()).unwrap();
        let terms: Vec<_> = e.iter().map(|(_, p, c)| (p.to_string(), c)).collect();
        assert_eq!(terms.len(), 2);
        // dense oracle: T† X T
        let t = Gate::t(0).unitary(&[], &[]).unwrap();
        let conj = t.adjoint() * obs("X").to_dense() * &t;
        for (p, c) in terms {
            let want = (obs(&p).to_dense() * &conj).trace().re / 2.0;
            assert!((c - want).abs() < 1e-15 && (c.abs() - FRAC_1_SQRT_2).abs() < 1e-15);
        }
    }

    #[test]
    fn doped_circuit_matches_oracle_on_binary_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let n = 6;
        let c = circuit(n, random_doped(n, 4, 40, &mut rng), obs("ZIIXII"));
        let e = backpropagate(&c, &c.observable, &[], &BackpropOptions::default()).unwrap();
        assert!(e.len() <= 16);
        let s = backprop_surrogate(&c, &[], &BackpropOptions::default()).unwrap();
        for (x, want) in oracle::tabulate(&c, &[], &oracle::binary_grid(n)).unwrap() {
            assert!((s.evaluate(&x).unwrap() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn continuous_domain_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let n = 3;
        let mut gates = random_doped(n, 2, 12, &mut rng);
        gates.extend([Gate::h(1), Gate::enc_rz(1, 0)]);
        let c = circuit(n, gates, obs("XYZ"));
        let opts = BackpropOptions { input_domain: InputDomain::Continuous, ..Default::default() };
        let s = backprop_surrogate(&c, &[], &opts).unwrap();
        assert_eq!(s.basis, Basis::Trig3);
        for _ in 0..50 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert!((s.evaluate(&x).unwrap() - oracle::expectation(&c, &x, &[]).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn numeric_theta_rotations() {
        let c = CircuitIR::new(
            2,
            Architecture::EncodingFirst,
            vec![Block::encoding(vec![Gate::h(0), Gate::enc_rz(0, 0)]), Block::trainable(vec![Gate::rx(0, 0), Gate::givens(0, 1, 1), Gate::rxx(0, 1, 2)])],
            obs("ZX"),
            InitialState::Zero,
        )
        .unwrap();
        let theta = [0.3, -1.1, 0.8];
        let s = backprop_surrogate(&c, &theta, &BackpropOptions::default()).unwrap();
        for x in [[0.0], [1.0]] {
            assert!((s.evaluate(&x).unwrap() - oracle::expectation(&c, &x, &theta).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn explosion_cap_is_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let c = circuit(4, random_doped(4, 12, 40, &mut rng), obs("XXXX"));
        let opts = BackpropOptions { term_cap: 4, ..Default::default() };
        assert!(matches!(backpropagate(&c, &c.observable, &[], &opts), Err(Error::Resource(_))));
    }

    fn flipped(n: usize, w: Vec<Gate>, e: Vec<Gate>, o: WeightedPauliSum) -> CircuitIR {
        CircuitIR::new(n, Architecture::Flipped, vec![Block::trainable(w), Block::encoding(e)], o, InitialState::Zero).unwrap()
    }

    fn deep_trainable(n: usize, layers: usize) -> Vec<Gate> {
        let mut w = Vec::new();
        let mut slot = 0;
        for l in 0..layers {
            for q in 0..n {
                w.push(Gate::rx(q, slot));
                w.push(Gate::rz(q, slot + 1));
                slot += 2;
            }
            for q in (l % 2..n - 1).step_by(2) {
                w.push(Gate::cnot(q, q + 1));
            }
        }
        w
    }

    #[test]
    fn commuting_encoding_gives_constant_term() {
        let n = 2;
        let c = flipped(n, deep_trainable(n, 2), (0..n).map(|q| Gate::enc_rz(q, q)).collect(), obs("ZI"));
        let theta: Vec<f64> = (0..c.num_params()).map(|k| 0.1 * k as f64).collect();
        let s = flipped_surrogate(&c, &theta, CoefficientSource::Oracle, &BackpropOptions::default()).unwrap();
        let Representation::Sparse(terms) = &s.representation else { unreachable!() };
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].index, BasisIndex::Parity(0));
        let rho = oracle::run_gates(&DenseState::zero(n), &c.layers[0].gates, &[], &theta).unwrap();
        assert!((terms[0].coefficient - rho.pauli_expectation(&"ZI".parse().unwrap()).re).abs() < 1e-15);
    }

    #[test]
    fn hadamard_before_encoding_gives_parity() {
        let n = 2;
        let mut e = vec![Gate::h(0)];
        e.extend((0..n).map(|q| Gate::enc_rz(q, q)));
        e.push(Gate::h(0));
        let c = flipped(n, deep_trainable(n, 2), e, obs("ZI"));
        let theta: Vec<f64> = (0..c.num_params()).map(|k| 0.3 + 0.2 * k as f64).collect();
        let s = flipped_surrogate(&c, &theta, CoefficientSource::Oracle, &BackpropOptions::default()).unwrap();
        let Representation::Sparse(terms) = &s.representation else { unreachable!() };
        assert_eq!(terms.iter().map(|t| t.index).collect::<Vec<_>>(), vec![BasisIndex::Parity(1)]);
        for (x, want) in oracle::tabulate(&c, &theta, &oracle::binary_grid(n)).unwrap() {
            assert!((s.evaluate(&x).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn flipped_with_doped_encoding_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let n = 5;
        let c = flipped(n, deep_trainable(n, 6), random_doped(n, 3, 25, &mut rng), obs("ZIXIZ"));
        let theta: Vec<f64> = (0..c.num_params()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let s = flipped_surrogate(&c, &theta, CoefficientSource::Oracle, &BackpropOptions::default()).unwrap();
        for (x, want) in oracle::tabulate(&c, &theta, &oracle::binary_grid(n)).unwrap() {
            assert!((s.evaluate(&x).unwrap() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn estimates_propagate_standard_errors() {
        let c = flipped(1, vec![Gate::rx(0, 0)], vec![Gate::t(0), Gate::enc_rz(0, 0)], obs("X"));
        let mut table = CoefficientEstimates::new();
        table.insert(&"X".parse().unwrap(), Estimate { value: 0.5, std_error: 0.01 });
        assert!(matches!(
            flipped_surrogate(&c, &[0.2], CoefficientSource::Estimates(&table), &BackpropOptions::default()),
            Err(Error::Binding(_))
        ));
        table.insert(&"Y".parse().unwrap(), Estimate { value: -0.5, std_error: 0.02 });
        let s = flipped_surrogate(&c, &[0.2], CoefficientSource::Estimates(&table), &BackpropOptions::default()).unwrap();
        let bound = s.error_bound(&[1.0]).unwrap();
        assert!((bound - 3.0 * FRAC_1_SQRT_2 * 0.03).abs() < 1e-14);
        assert!(matches!(flipped_surrogate(&circuit(1, vec![], obs("X")), &[], CoefficientSource::Oracle, &BackpropOptions::default()), Err(Error::Classification(_))));
    }

    #[test]
    fn dump_round_trip_and_census() {
        let c = circuit(2, vec![Gate::h(0), Gate::enc_rz(0, 1), Gate::t(0), Gate::cnot(0, 1)], obs("XZ"));
        let e = backpropagate(&c, &c.observable, &[], &BackpropOptions::default()).unwrap();
        let mut buf = Vec::new();
        e.write_dump(&mut buf).unwrap();
        let back = ObservableExpansion::read_dump(buf.as_slice()).unwrap();
        assert_eq!(back.len(), e.len());
        for ((c1, a1, p1), (a2, p2, c2)) in back.iter().zip(e.iter()) {
            assert_eq!((*c1, *a1, *p1), (c2, a2, p2));
        }
        let census = term_census(&e);
        assert_eq!(census.term_count, e.len());
        assert!(census.max_abs_coefficient <= 1.0);
    }

    #[test]
    fn duplicate_terms_merge() {
        let o = WeightedPauliSum::from_terms(1, vec![(Complex64::new(0.5, 0.0), "Z".parse().unwrap()), (Complex64::new(0.5, 0.0), "Z".parse().unwrap())]);
        let c = circuit(1, vec![Gate::h(0)], o.clone());
        let e = backpropagate(&c, &o, &[], &BackpropOptions::default()).unwrap();
        let single = backpropagate(&c, &obs("Z"), &[], &BackpropOptions::default()).unwrap();
        assert_eq!(term_census(&e), term_census(&single));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn growth_bound_and_isometry(seed in 0u64..10_000, t in 0usize..6, start in 0usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 4;
            let label: String = (0..n).map(|q| ['X', 'Y', 'Z', 'I'][(start + q) % 4]).collect();
            let c = circuit(n, random_doped(n, t, 30, &mut rng), obs(&label));
            let e = backpropagate(&c, &c.observable, &[], &BackpropOptions::default()).unwrap();
            prop_assert!(e.len() <= 1 << t);
            for x in oracle::binary_grid(n).iter().take(4) {
                let at = e.at(x).unwrap();
                prop_assert!((at.squared_norm() - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn linearity_over_sums(seed in 0u64..10_000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 3;
            let c = circuit(n, random_doped(n, 3, 20, &mut rng), obs("XII"));
            let opts = BackpropOptions::default();
            let sum = WeightedPauliSum::from_signed_terms(n, vec![(a, "XII".parse().unwrap()), (b, "IZY".parse().unwrap())]);
            let whole = backpropagate(&c, &sum, &[], &opts).unwrap();
            let pa = backpropagate(&c, &obs("XII"), &[], &opts).unwrap();
            let pb = backpropagate(&c, &obs("IZY"), &[], &opts).unwrap();
            let mut merged: BTreeMap<(BasisIndex, String), f64> = BTreeMap::new();
            for (idx, p, v) in pa.iter() { *merged.entry((idx, p.to_string())).or_default() += a * v; }
            for (idx, p, v) in pb.iter() { *merged.entry((idx, p.to_string())).or_default() += b * v; }
            merged.retain(|_, v| v.abs() > 1e-14);
            let got: BTreeMap<(BasisIndex, String), f64> = whole.iter().filter(|t| t.2.abs() > 1e-14).map(|(i, p, v)| ((i, p.to_string()), v)).collect();
            prop_assert_eq!(got.len(), merged.len());
            for (k, v) in got {
                prop_assert!((merged[&k] - v).abs() < 1e-12);
            }
        }
    }
}
