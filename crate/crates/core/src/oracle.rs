//! Brute-force statevector simulation.
//!
//! Gates are applied in place with stride arithmetic; Pauli observables act
//! through bit masks. Nothing here ever builds a `2^n × 2^n` matrix.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::circuit::{CircuitIR, Gate, InitialState, Param};
use crate::error::{Error, Result};
use crate::pauli::{PauliString, WeightedPauliSum};

pub const DEFAULT_CAPACITY: usize = 14;

/// Imaginary residue tolerated (and discarded) in expectation values.
pub const IMAG_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    n: usize,
    amps: Vec<Complex64>,
}

impl DenseState {
    pub fn zero(n: usize) -> DenseState {
        let mut amps = vec![Complex64::default(); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        DenseState { n, amps }
    }

    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<DenseState> {
        if amps.len() != 1 << n {
            return Err(Error::Dimension(format!("{} amplitudes for {n} qubits", amps.len())));
        }
        Ok(DenseState { n, amps })
    }

    pub fn initial(c: &CircuitIR, capacity: usize) -> Result<DenseState> {
        if c.n > capacity {
            return Err(Error::Capacity(format!("{} qubits exceeds the oracle cap of {capacity}", c.n)));
        }
        match &c.initial_state {
            InitialState::Zero => Ok(DenseState::zero(c.n)),
            InitialState::Dense(a) => DenseState::from_amplitudes(c.n, a.clone()),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `|self⟩ ⊗ |other⟩` with `self` on the low qubits.
    pub fn tensor(&self, other: &DenseState) -> DenseState {
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for b in &other.amps {
            amps.extend(self.amps.iter().map(|a| a * b));
        }
        DenseState { n: self.n + other.n, amps }
    }

    pub fn apply_single(&mut self, q: usize, m: &DMatrix<Complex64>) {
        let stride = 1usize << q;
        let (m00, m01, m10, m11) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        for base in (0..self.amps.len()).step_by(2 * stride) {
            for i in base..base + stride {
                let (a0, a1) = (self.amps[i], self.amps[i + stride]);
                self.amps[i] = m00 * a0 + m01 * a1;
                self.amps[i + stride] = m10 * a0 + m11 * a1;
            }
        }
    }

    /// Applies a 4×4 matrix whose bit 0 is qubit `a` and bit 1 is qubit `b`.
    pub fn apply_pair(&mut self, a: usize, b: usize, m: &DMatrix<Complex64>) {
        let (ma, mb) = (1usize << a, 1usize << b);
        let mut v = [Complex64::default(); 4];
        for i in 0..self.amps.len() {
            if i & (ma | mb) != 0 {
                continue;
            }
            let idx = [i, i | ma, i | mb, i | ma | mb];
            for (k, &j) in idx.iter().enumerate() {
                v[k] = self.amps[j];
            }
            for (r, &j) in idx.iter().enumerate() {
                self.amps[j] = (0..4).map(|k| m[(r, k)] * v[k]).sum();
            }
        }
    }

    pub fn apply_gate(&mut self, g: &Gate, x: &[f64], theta: &[f64]) -> Result<()> {
        if let Some(&q) = g.qubits.iter().find(|&&q| q >= self.n) {
            return Err(Error::Dimension(format!("gate on qubit {q} for n={}", self.n)));
        }
        let u = g.unitary(x, theta)?;
        match g.qubits.as_slice() {
            [q] => self.apply_single(*q, &u),
            [a, b] => self.apply_pair(*a, *b, &u),
            _ => return Err(Error::GateSet(format!("{:?} with {} qubits", g.tag, g.qubits.len()))),
        }
        Ok(())
    }

    /// `P|ψ⟩`.
    pub fn apply_pauli(&self, p: &PauliString) -> DenseState {
        let mut out = vec![Complex64::default(); self.amps.len()];
        for (b, &a) in self.amps.iter().enumerate() {
            let (b2, c) = p.apply_to_basis(b as u64);
            out[b2 as usize] = c * a;
        }
        DenseState { n: self.n, amps: out }
    }

    /// `⟨ψ|P|ψ⟩` (complex for non-Hermitian phases).
    pub fn pauli_expectation(&self, p: &PauliString) -> Complex64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(b, &a)| {
                let (b2, c) = p.apply_to_basis(b as u64);
                self.amps[b2 as usize].conj() * c * a
            })
            .sum()
    }

    /// `⟨ψ|O|ψ⟩` for a Hermitian sum, with the imaginary residue checked.
    pub fn expect(&self, o: &WeightedPauliSum) -> Result<f64> {
        if o.num_qubits() != self.n {
            return Err(Error::Dimension(format!("observable on {} qubits, state on {}", o.num_qubits(), self.n)));
        }
        if !o.is_hermitian(1e-12) {
            return Err(Error::Validation("observable is not Hermitian".into()));
        }
        let v: Complex64 = o.iter().map(|(c, p)| c * self.pauli_expectation(&p)).sum();
        if v.im.abs() > IMAG_TOL {
            return Err(Error::Numeric(format!("expectation has imaginary part {}", v.im)));
        }
        Ok(v.re)
    }

    /// Writes `n` (u64) then `2^n` pairs `(re, im)`, all little-endian.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n as u64).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<DenseState> {
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let n = u64::from_le_bytes(word) as usize;
        if n > 30 {
            return Err(Error::Parse(format!("state dump claims {n} qubits")));
        }
        let mut amps = Vec::with_capacity(1 << n);
        for _ in 0..1usize << n {
            r.read_exact(&mut word)?;
            let re = f64::from_le_bytes(word);
            r.read_exact(&mut word)?;
            amps.push(Complex64::new(re, f64::from_le_bytes(word)));
        }
        DenseState::from_amplitudes(n, amps)
    }
}

/// Applies `gates` in order to a copy of `start`.
pub fn run_gates<'a>(start: &DenseState, gates: impl IntoIterator<Item = &'a Gate>, x: &[f64], theta: &[f64]) -> Result<DenseState> {
    let mut s = start.clone();
    for g in gates {
        s.apply_gate(g, x, theta)?;
    }
    Ok(s)
}

pub fn run_capped(c: &CircuitIR, x: &[f64], theta: &[f64], capacity: usize) -> Result<DenseState> {
    run_gates(&DenseState::initial(c, capacity)?, c.gates(), x, theta)
}

/// `U(x, θ)|ψ₀⟩`.
pub fn run(c: &CircuitIR, x: &[f64], theta: &[f64]) -> Result<DenseState> {
    run_capped(c, x, theta, DEFAULT_CAPACITY)
}

/// `f_θ(x) = ⟨ψ₀|U† O U|ψ₀⟩`.
pub fn expectation(c: &CircuitIR, x: &[f64], theta: &[f64]) -> Result<f64> {
    run(c, x, theta)?.expect(&c.observable)
}

/// `f_θ` at every grid point; grid points are evaluated in parallel, each
/// on its own state, and the gates that do not read `x` are simulated once.
pub fn tabulate(c: &CircuitIR, theta: &[f64], grid: &[Vec<f64>]) -> Result<Vec<(Vec<f64>, f64)>> {
    if grid.is_empty() {
        return Err(Error::Validation("empty grid".into()));
    }
    let gates: Vec<&Gate> = c.gates().collect();
    let split = gates.iter().position(|g| matches!(g.param(), Param::Data(_))).unwrap_or(gates.len());
    let prefix = run_gates(&DenseState::initial(c, DEFAULT_CAPACITY)?, gates[..split].iter().copied(), &[], theta)?;
    grid.par_iter()
        .map(|x| {
            let s = run_gates(&prefix, gates[split..].iter().copied(), x, theta)?;
            Ok((x.clone(), s.expect(&c.observable)?))
        })
        .collect()
}

/// Values only, in grid order.
pub fn evaluate_many(c: &CircuitIR, theta: &[f64], grid: &[Vec<f64>]) -> Result<Vec<f64>> {
    Ok(tabulate(c, theta, grid)?.into_iter().map(|(_, v)| v).collect())
}

/// `{0,1}^d` in counting order (coordinate 0 is the low bit).
pub fn binary_grid(d: usize) -> Vec<Vec<f64>> {
    (0..1u64 << d).map(|b| (0..d).map(|j| ((b >> j) & 1) as f64).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Architecture, Block, GateTag};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn obs(s: &str) -> WeightedPauliSum {
        WeightedPauliSum::from_pauli(s.parse().unwrap())
    }

    fn circuit(n: usize, gates: Vec<Gate>, o: &str) -> CircuitIR {
        CircuitIR::new_unchecked(n, Architecture::Alternating, vec![Block::trainable(gates)], obs(o), InitialState::Zero)
    }

    fn random_gates(n: usize, len: usize, rng: &mut ChaCha8Rng) -> Vec<Gate> {
        (0..len)
            .map(|_| {
                let q = rng.random_range(0..n);
                let r = (q + rng.random_range(1..n)) % n;
                match rng.random_range(0..7) {
                    0 => Gate::h(q),
                    1 => Gate::t(q),
                    2 => Gate::s(q),
                    3 => Gate::cnot(q, r),
                    4 => Gate::fixed(GateTag::Rx, &[q], rng.random_range(-PI..PI)),
                    5 => Gate::fixed(GateTag::Givens, &[q, r], rng.random_range(-PI..PI)),
                    _ => Gate::cz(q, r),
                }
            })
            .collect()
    }

    #[test]
    fn empty_circuit_gives_zero_state() {
        let s = run(&circuit(3, vec![], "ZII"), &[], &[]).unwrap();
        assert_eq!(s, DenseState::zero(3));
    }

    #[test]
    fn hadamard_on_one_qubit() {
        let s = run(&circuit(1, vec![Gate::h(0)], "Z"), &[], &[]).unwrap();
        for a in s.amplitudes() {
            assert!((a.re - FRAC_1_SQRT_2).abs() < 1e-15 && a.im == 0.0);
        }
    }

    #[test]
    fn random_circuit_keeps_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = circuit(6, random_gates(6, 10_000, &mut rng), "ZIIIII");
        let s = run(&c, &[], &[]).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn expectation_basics() {
        assert_eq!(expectation(&circuit(2, vec![], "ZI"), &[], &[]).unwrap(), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = circuit(3, random_gates(3, 40, &mut rng), "III");
        assert!((expectation(&c, &[], &[]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn encoding_after_hadamard_gives_cosine() {
        let c = CircuitIR::new_unchecked(
            1,
            Architecture::EncodingFirst,
            vec![Block::encoding(vec![Gate::h(0), Gate::enc_rz(0, 0)]), Block::trainable(vec![])],
            obs("X"),
            InitialState::Zero,
        );
        for &x in &[0.0, 0.1, 0.25, 0.5, 0.77, 1.0, 1.3] {
            let f = expectation(&c, &[x], &[]).unwrap();
            assert!((f - (PI * x).cos()).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn expectation_rejects_non_hermitian() {
        let o = WeightedPauliSum::from_terms(1, vec![(Complex64::new(0.0, 1.0), "Z".parse().unwrap())]);
        let c = CircuitIR::new_unchecked(1, Architecture::Alternating, vec![Block::trainable(vec![])], o, InitialState::Zero);
        assert!(matches!(expectation(&c, &[], &[]), Err(Error::Validation(_))));
    }

    #[test]
    fn capacity_and_binding_errors() {
        let c = circuit(15, vec![], &"Z".repeat(15));
        assert!(matches!(run(&c, &[], &[]), Err(Error::Capacity(_))));
        let c = circuit(1, vec![Gate::rx(0, 0)], "Z");
        assert!(matches!(run(&c, &[], &[]), Err(Error::Binding(_))));
    }

    #[test]
    fn pauli_expectations_reconstruct_density_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..=3 {
            let c = circuit(n, random_gates(n.max(2), 30, &mut rng).into_iter().filter(|g| g.qubits.iter().all(|&q| q < n)).collect(), &"Z".repeat(n));
            let s = run(&c, &[], &[]).unwrap();
            let dim = 1 << n;
            let psi = nalgebra::DVector::from_column_slice(s.amplitudes());
            let rho = &psi * psi.adjoint();
            let mut rec = DMatrix::<Complex64>::zeros(dim, dim);
            for z in 0..dim as u64 {
                for x in 0..dim as u64 {
                    let p = PauliString::new(n, z, x, crate::pauli::Phase::ONE).unwrap();
                    let e = s.pauli_expectation(&p);
                    assert!(e.im.abs() < 1e-10);
                    rec += p.to_dense() * Complex64::new(e.re / dim as f64, 0.0);
                }
            }
            assert!((rec - rho).iter().all(|z| z.norm() < 1e-10));
        }
    }

    #[test]
    fn tabulate_matches_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut enc: Vec<Gate> = (0..4).map(Gate::h).collect();
        enc.extend((0..4).map(|q| Gate::enc_rz(q, q)));
        let mut gates = random_gates(4, 30, &mut rng);
        gates.retain(|g| !g.is_data());
        let c = CircuitIR::new_unchecked(
            4,
            Architecture::Alternating,
            vec![Block::trainable(gates), Block::encoding(enc), Block::trainable(random_gates(4, 20, &mut rng))],
            WeightedPauliSum::from_signed_terms(4, vec![(0.5, "ZIXI".parse().unwrap()), (0.25, "IYYI".parse().unwrap())]),
            InitialState::Zero,
        );
        let grid: Vec<Vec<f64>> = (0..16).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
        let table = tabulate(&c, &[], &grid).unwrap();
        assert_eq!(table.len(), 16);
        for k in [0, 7, 15] {
            assert_eq!(table[k].1, expectation(&c, &grid[k], &[]).unwrap());
        }
        assert_eq!(binary_grid(3).len(), 8);
    }

    #[test]
    fn commuting_observable_gives_constant_table() {
        let c = CircuitIR::new_unchecked(
            2,
            Architecture::EncodingFirst,
            vec![Block::encoding(vec![Gate::enc_rz(0, 0), Gate::enc_rz(1, 1)]), Block::trainable(vec![Gate::cz(0, 1)])],
            obs("ZZ"),
            InitialState::Zero,
        );
        let t = tabulate(&c, &[], &binary_grid(2)).unwrap();
        assert!(t.iter().all(|(_, v)| (*v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn dump_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = run(&circuit(3, random_gates(3, 20, &mut rng), "ZII"), &[], &[]).unwrap();
        let mut buf = Vec::new();
        s.write_dump(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 16 * 8);
        assert_eq!(DenseState::read_dump(buf.as_slice()).unwrap(), s);
    }
}
