//! Exact algebra of n-qubit Pauli strings.
//!
//! A string is stored as two bit masks plus a phase counter:
//!
//! ```text
//! P = i^phase · ⊗_k (−i)^{z_k x_k} Z_k^{z_k} X_k^{x_k}
//! ```
//!
//! so `(z, x) = (1, 1)` with phase 0 is exactly `Y`. Bit `k` of each mask
//! refers to qubit `k`. Phases are tracked as an integer modulo 4 and never
//! as floating point.
//!
//! Conjugation always means the Heisenberg map `P ↦ U† P U`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register a single [`PauliString`] can describe.
pub const MAX_QUBITS: usize = 64;

/// A power of `i`, stored modulo 4.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: i64) -> Phase {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn mul(self, other: Phase) -> Phase {
        Phase((self.0 + other.0) & 3)
    }

    pub fn is_real(self) -> bool {
        self.0 & 1 == 0
    }

    /// `+1.0` or `-1.0` for real phases.
    pub fn sign(self) -> Option<f64> {
        match self.0 {
            0 => Some(1.0),
            2 => Some(-1.0),
            _ => None,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

/// Single-qubit Pauli label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// `(z, x)` bit pair.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (false, true),
            Pauli::Y => (true, true),
            Pauli::Z => (true, false),
        }
    }

    pub fn from_bits(z: bool, x: bool) -> Pauli {
        match (z, x) {
            (false, false) => Pauli::I,
            (false, true) => Pauli::X,
            (true, true) => Pauli::Y,
            (true, false) => Pauli::Z,
        }
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// An n-qubit Pauli operator with an exact phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    z: u64,
    x: u64,
    phase: Phase,
}

impl PauliString {
    pub fn identity(n: usize) -> PauliString {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        PauliString { n, z: 0, x: 0, phase: Phase::ONE }
    }

    pub fn new(n: usize, z: u64, x: u64, phase: Phase) -> Result<PauliString> {
        if n > MAX_QUBITS {
            return Err(Error::Capacity(format!("{n} qubits exceeds {MAX_QUBITS}")));
        }
        if (z | x) & !mask(n) != 0 {
            return Err(Error::Dimension(format!("bit masks exceed {n} qubits")));
        }
        Ok(PauliString { n, z, x, phase })
    }

    /// A single-qubit Pauli embedded at `qubit`.
    pub fn single(n: usize, qubit: usize, p: Pauli) -> Result<PauliString> {
        if qubit >= n {
            return Err(Error::Dimension(format!("qubit {qubit} out of range for n={n}")));
        }
        let (z, x) = p.bits();
        PauliString::new(n, (z as u64) << qubit, (x as u64) << qubit, Phase::ONE)
    }

    /// Builds a string from per-qubit labels (qubit 0 first).
    pub fn from_paulis(ps: &[Pauli]) -> Result<PauliString> {
        let mut z = 0u64;
        let mut x = 0u64;
        for (k, p) in ps.iter().enumerate() {
            let (zb, xb) = p.bits();
            z |= (zb as u64) << k;
            x |= (xb as u64) << k;
        }
        PauliString::new(ps.len(), z, x, Phase::ONE)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn z_bits(&self) -> u64 {
        self.z
    }

    pub fn x_bits(&self) -> u64 {
        self.x
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn with_phase(mut self, phase: Phase) -> PauliString {
        self.phase = phase;
        self
    }

    /// Same operator content with phase `+1` (always Hermitian).
    pub fn unsigned(self) -> PauliString {
        self.with_phase(Phase::ONE)
    }

    pub fn key(&self) -> (u64, u64) {
        (self.z, self.x)
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        Pauli::from_bits(self.z >> qubit & 1 == 1, self.x >> qubit & 1 == 1)
    }

    pub fn weight(&self) -> u32 {
        (self.z | self.x).count_ones()
    }

    pub fn support(&self) -> u64 {
        self.z | self.x
    }

    pub fn is_identity(&self) -> bool {
        self.z == 0 && self.x == 0
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    /// Diagonal in the computational basis.
    pub fn is_z_type(&self) -> bool {
        self.x == 0
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// Whether this string anticommutes with `Z` on `qubit`.
    pub fn anticommutes_with_z(&self, qubit: usize) -> bool {
        self.x >> qubit & 1 == 1
    }

    /// Group product `self · other` with exact phase.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "cannot multiply {}-qubit and {}-qubit strings",
                self.n, other.n
            )));
        }
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &PauliString) -> PauliString {
        let w1 = (self.z & self.x).count_ones() as i64;
        let w2 = (other.z & other.x).count_ones() as i64;
        // X^{x1} Z^{z2} = (−1)^{|x1∧z2|} Z^{z2} X^{x1}
        let swap = (self.x & other.z).count_ones() as i64;
        let z = self.z ^ other.z;
        let x = self.x ^ other.x;
        let w3 = (z & x).count_ones() as i64;
        let k = self.phase.0 as i64 + other.phase.0 as i64 - w1 - w2 + 2 * swap + w3;
        PauliString { n: self.n, z, x, phase: Phase::from_power(k) }
    }

    /// `self ⊗ other`, with `self` on the low qubits.
    pub fn tensor(&self, other: &PauliString) -> Result<PauliString> {
        let n = self.n + other.n;
        if n > MAX_QUBITS {
            return Err(Error::Capacity(format!("{n} qubits exceeds {MAX_QUBITS}")));
        }
        PauliString::new(
            n,
            self.z | other.z << self.n,
            self.x | other.x << self.n,
            self.phase.mul(other.phase),
        )
    }

    /// Action on a computational basis state: `P|b⟩ = c |b'⟩`.
    pub fn apply_to_basis(&self, b: u64) -> (u64, Complex64) {
        let w = (self.z & self.x).count_ones() as i64;
        let flipped = b ^ self.x;
        let sign = 2 * ((self.z & flipped).count_ones() as i64 % 2);
        let phase = Phase::from_power(self.phase.0 as i64 - w + sign);
        (flipped, phase.to_complex())
    }

    /// Dense `2^n × 2^n` matrix, little-endian in qubit index.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n;
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            let (b2, c) = self.apply_to_basis(b as u64);
            m[(b2 as usize, b)] = c;
        }
        m
    }

    /// Restriction of this string's content to the qubits in `qubits`,
    /// returned as the per-qubit labels.
    fn labels_on(&self, qubits: &[usize]) -> Vec<Pauli> {
        qubits.iter().map(|&q| self.get(q)).collect()
    }

    fn clear(&self, qubits: &[usize]) -> PauliString {
        let m = qubits.iter().fold(0u64, |acc, &q| acc | 1 << q);
        PauliString { n: self.n, z: self.z & !m, x: self.x & !m, phase: self.phase }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase.0 {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        f.write_str(prefix)?;
        for k in 0..self.n {
            write!(f, "{}", self.get(k).letter())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<PauliString> {
        let s = s.trim();
        let (phase, body) = if let Some(r) = s.strip_prefix("+i") {
            (Phase::I, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (Phase::MINUS_I, r)
        } else if let Some(r) = s.strip_prefix('i') {
            (Phase::I, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (Phase::ONE, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (Phase::MINUS_ONE, r)
        } else {
            (Phase::ONE, s)
        };
        let labels = body
            .chars()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::Parse(format!("invalid Pauli character {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if labels.is_empty() {
            return Err(Error::Parse("empty Pauli string".into()));
        }
        Ok(PauliString::from_paulis(&labels)?.with_phase(phase))
    }
}

/// Gates whose Heisenberg action maps every Pauli string to a single
/// signed Pauli string.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CliffordGate {
    Identity,
    H(usize),
    S(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Cnot { control: usize, target: usize },
    Cz(usize, usize),
    Swap(usize, usize),
}

impl CliffordGate {
    fn qubits(&self) -> Vec<usize> {
        match *self {
            CliffordGate::Identity => vec![],
            CliffordGate::H(q) | CliffordGate::S(q) | CliffordGate::X(q) | CliffordGate::Y(q) | CliffordGate::Z(q) => {
                vec![q]
            }
            CliffordGate::Cnot { control, target } => vec![control, target],
            CliffordGate::Cz(a, b) | CliffordGate::Swap(a, b) => vec![a, b],
        }
    }

    /// Images `(U† X_q U, U† Z_q U)` of the generators on qubit `q`.
    fn generator_images(&self, n: usize, q: usize) -> (PauliString, PauliString) {
        let s = |p: &[(usize, Pauli)], phase: Phase| {
            let mut out = PauliString::identity(n);
            for &(k, l) in p {
                let (zb, xb) = l.bits();
                out.z |= (zb as u64) << k;
                out.x |= (xb as u64) << k;
            }
            out.phase = phase;
            out
        };
        use Pauli::*;
        let plus = Phase::ONE;
        let minus = Phase::MINUS_ONE;
        match *self {
            CliffordGate::Identity => (s(&[(q, X)], plus), s(&[(q, Z)], plus)),
            CliffordGate::H(_) => (s(&[(q, Z)], plus), s(&[(q, X)], plus)),
            CliffordGate::S(_) => (s(&[(q, Y)], minus), s(&[(q, Z)], plus)),
            CliffordGate::X(_) => (s(&[(q, X)], plus), s(&[(q, Z)], minus)),
            CliffordGate::Y(_) => (s(&[(q, X)], minus), s(&[(q, Z)], minus)),
            CliffordGate::Z(_) => (s(&[(q, X)], minus), s(&[(q, Z)], plus)),
            CliffordGate::Cnot { control, target } => {
                if q == control {
                    (s(&[(control, X), (target, X)], plus), s(&[(control, Z)], plus))
                } else {
                    (s(&[(target, X)], plus), s(&[(control, Z), (target, Z)], plus))
                }
            }
            CliffordGate::Cz(a, b) => {
                let other = if q == a { b } else { a };
                (s(&[(q, X), (other, Z)], plus), s(&[(q, Z)], plus))
            }
            CliffordGate::Swap(a, b) => {
                let other = if q == a { b } else { a };
                (s(&[(other, X)], plus), s(&[(other, Z)], plus))
            }
        }
    }
}

/// `U† P U` for a Clifford gate `U`.
pub fn conjugate_clifford(gate: CliffordGate, p: &PauliString) -> Result<PauliString> {
    let qubits = gate.qubits();
    if let Some(&q) = qubits.iter().find(|&&q| q >= p.n) {
        return Err(Error::Dimension(format!("gate qubit {q} out of range for n={}", p.n)));
    }
    if qubits.len() == 2 && qubits[0] == qubits[1] {
        return Err(Error::GateSet(format!("two-qubit gate {gate:?} repeats a qubit")));
    }
    let mut out = p.clear(&qubits);
    for (&q, label) in qubits.iter().zip(p.labels_on(&qubits)) {
        let (zb, xb) = label.bits();
        if !zb && !xb {
            continue;
        }
        let (img_x, img_z) = gate.generator_images(p.n, q);
        // σ = (−i)^{zx} Z^z X^x
        let mut img = PauliString::identity(p.n);
        if zb {
            img = img.mul_unchecked(&img_z);
        }
        if xb {
            img = img.mul_unchecked(&img_x);
        }
        if zb && xb {
            img.phase = img.phase.mul(Phase::MINUS_I);
        }
        out = out.mul_unchecked(&img);
    }
    Ok(out)
}

/// `U† P U` for the Pauli rotation `U = exp(−i·angle·G/2)`, where `G` is a
/// Hermitian Pauli string. Returns one term if `P` commutes with `G`,
/// otherwise `cos(angle)·P + sin(angle)·(i G P)`. Coefficients are real;
/// the returned strings carry the exact phase.
pub fn conjugate_rotation(generator: &PauliString, angle: f64, p: &PauliString) -> Result<Vec<(f64, PauliString)>> {
    if generator.n != p.n {
        return Err(Error::Dimension("rotation generator size differs from operand".into()));
    }
    if p.commutes_with(generator) {
        return Ok(vec![(1.0, *p)]);
    }
    let mut gp = generator.mul_unchecked(p);
    gp.phase = gp.phase.mul(Phase::I);
    Ok(vec![(angle.cos(), *p), (angle.sin(), gp)])
}

/// `T† P T` with `T = diag(1, e^{iπ/4})` on `qubit`.
pub fn conjugate_t(qubit: usize, p: &PauliString) -> Result<WeightedPauliSum> {
    let z = PauliString::single(p.n, qubit, Pauli::Z)?;
    let terms = conjugate_rotation(&z, FRAC_PI_4, p)?;
    Ok(WeightedPauliSum::from_signed_terms(p.n, terms))
}

/// Data-dependent split of `S(x)† P S(x)` for `S(x) = exp(i·π/2·x·Z)`:
///
/// ```text
/// S(x)† P S(x) = cos(πx)·even + sin(πx)·odd
/// ```
///
/// When `P` commutes with `Z` on the qubit, `odd` is `None` and `even = P`
/// holds for every `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncodingSplit {
    pub even: PauliString,
    pub odd: Option<PauliString>,
}

impl EncodingSplit {
    /// Numeric value of the conjugated operator at `x`.
    pub fn at(&self, x: f64) -> WeightedPauliSum {
        let n = self.even.n;
        match self.odd {
            None => WeightedPauliSum::from_signed_terms(n, vec![(1.0, self.even)]),
            Some(odd) => WeightedPauliSum::from_signed_terms(n, vec![((PI * x).cos(), self.even), ((PI * x).sin(), odd)]),
        }
    }
}

pub fn conjugate_encoding(qubit: usize, p: &PauliString) -> Result<EncodingSplit> {
    if qubit >= p.n {
        return Err(Error::Dimension(format!("qubit {qubit} out of range for n={}", p.n)));
    }
    if !p.anticommutes_with_z(qubit) {
        return Ok(EncodingSplit { even: *p, odd: None });
    }
    // S(x) = exp(−i·(−πx)·Z/2): odd part is −i·Z·P
    let z = PauliString::single(p.n, qubit, Pauli::Z)?;
    let mut odd = z.mul_unchecked(p);
    odd.phase = odd.phase.mul(Phase::MINUS_I);
    Ok(EncodingSplit { even: *p, odd: Some(odd) })
}

/// A finite linear combination of Pauli strings with distinct operator
/// content. Strings are stored phase-free; phases live in the coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPauliSum {
    n: usize,
    terms: BTreeMap<(u64, u64), Complex64>,
}

impl WeightedPauliSum {
    pub fn zero(n: usize) -> WeightedPauliSum {
        WeightedPauliSum { n, terms: BTreeMap::new() }
    }

    pub fn from_pauli(p: PauliString) -> WeightedPauliSum {
        let mut s = WeightedPauliSum::zero(p.n);
        s.add_term(Complex64::new(1.0, 0.0), &p);
        s
    }

    /// Merges duplicates exactly; zero coefficients are kept until
    /// [`normalize`](Self::normalize) is called.
    pub fn from_terms<I>(n: usize, terms: I) -> WeightedPauliSum
    where
        I: IntoIterator<Item = (Complex64, PauliString)>,
    {
        let mut s = WeightedPauliSum::zero(n);
        for (c, p) in terms {
            s.add_term(c, &p);
        }
        s
    }

    pub fn from_signed_terms<I>(n: usize, terms: I) -> WeightedPauliSum
    where
        I: IntoIterator<Item = (f64, PauliString)>,
    {
        WeightedPauliSum::from_terms(n, terms.into_iter().map(|(c, p)| (Complex64::new(c, 0.0), p)))
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `c·p`; panics if `p` has a different qubit count.
    pub fn add_term(&mut self, c: Complex64, p: &PauliString) {
        assert_eq!(p.n, self.n, "qubit count mismatch in WeightedPauliSum");
        *self.terms.entry(p.key()).or_default() += c * p.phase.to_complex();
    }

    pub fn add_sum(&mut self, other: &WeightedPauliSum, scale: Complex64) -> Result<()> {
        if other.n != self.n {
            return Err(Error::Dimension("adding sums of different sizes".into()));
        }
        for (&k, &c) in &other.terms {
            *self.terms.entry(k).or_default() += c * scale;
        }
        Ok(())
    }

    /// Iterates `(coefficient, phase-free string)` in `(z, x)` order.
    pub fn iter(&self) -> impl Iterator<Item = (Complex64, PauliString)> + '_ {
        self.terms
            .iter()
            .map(move |(&(z, x), &c)| (c, PauliString { n: self.n, z, x, phase: Phase::ONE }))
    }

    pub fn coefficient(&self, p: &PauliString) -> Complex64 {
        self.terms.get(&p.key()).copied().unwrap_or_default() * p.phase.to_complex().conj()
    }

    /// Merges duplicates and removes terms with `|c| ≤ drop_below`.
    pub fn normalize(&self, drop_below: f64) -> WeightedPauliSum {
        let terms = self
            .terms
            .iter()
            .filter(|(_, c)| c.norm() > drop_below)
            .map(|(&k, &c)| (k, c))
            .collect();
        WeightedPauliSum { n: self.n, terms }
    }

    pub fn squared_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    /// Hermitian iff every coefficient is real (up to `tol`).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    /// Real coefficient view; errors if any coefficient has an imaginary
    /// part above `tol`.
    pub fn real_terms(&self, tol: f64) -> Result<Vec<(f64, PauliString)>> {
        self.iter()
            .map(|(c, p)| {
                if c.im.abs() > tol {
                    Err(Error::Validation(format!("non-Hermitian coefficient {c} on {p}")))
                } else {
                    Ok((c.re, p))
                }
            })
            .collect()
    }

    /// `self ⊗ other` on `n_self + n_other` qubits.
    pub fn tensor(&self, other: &WeightedPauliSum) -> Result<WeightedPauliSum> {
        let mut out = WeightedPauliSum::zero(self.n + other.n);
        for (a, pa) in self.iter() {
            for (b, pb) in other.iter() {
                out.add_term(a * b, &pa.tensor(&pb)?);
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n;
        let mut m = DMatrix::zeros(dim, dim);
        for (c, p) in self.iter() {
            m += p.to_dense() * c;
        }
        m
    }

    /// Applies `U† · U` for a Clifford gate to every term.
    pub fn conjugate_clifford(&self, gate: CliffordGate) -> Result<WeightedPauliSum> {
        let mut out = WeightedPauliSum::zero(self.n);
        for (c, p) in self.iter() {
            out.add_term(c, &conjugate_clifford(gate, &p)?);
        }
        Ok(out)
    }

    pub fn conjugate_rotation(&self, generator: &PauliString, angle: f64) -> Result<WeightedPauliSum> {
        let mut out = WeightedPauliSum::zero(self.n);
        for (c, p) in self.iter() {
            for (w, q) in conjugate_rotation(generator, angle, &p)? {
                out.add_term(c * w, &q);
            }
        }
        Ok(out)
    }
}
