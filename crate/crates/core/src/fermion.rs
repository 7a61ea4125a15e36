//! Matchgate circuits as orthogonal rotations of Majorana modes.
//!
//! Jordan-Wigner with 0-indexed modes: `γ_{2j} = Z_0⋯Z_{j−1} X_j` and
//! `γ_{2j+1} = Z_0⋯Z_{j−1} Y_j`. A matchgate circuit `U` acts as
//! `U† γ_p U = Σ_r R_pr γ_r` with `R ∈ SO(2n)`, and the covariance matrix
//! `Γ_pq = i⟨γ_p γ_q⟩` (p ≠ q) evolves as `Γ ← R Γ Rᵀ`.
//!
//! Monomials carry the prefactor `(−i)^{d/2}`, which makes them Hermitian;
//! with it `(−i) γ_{2j} γ_{2j+1} = Z_j`.

use nalgebra::DMatrix;

use crate::circuit::{BlockKind, CircuitIR, Gate, Param};
use crate::error::{Error, Result};
use crate::oracle::{self, DenseState};
use crate::pauli::{Pauli, PauliString, WeightedPauliSum, MAX_QUBITS};
use crate::surrogate::{Basis, CoefficientSource, FunctionSurrogate, QuadraticFeatures, Representation, DEFAULT_COVERAGE};

const ORTHO_TOL: f64 = 1e-10;
/// Generic data value used to find the structural support of `R(x)`.
const GENERIC_X: f64 = 0.37;

/// The Majorana operator `γ_p` on `n` qubits.
pub fn majorana(n: usize, p: usize) -> Result<PauliString> {
    if p >= 2 * n {
        return Err(Error::Dimension(format!("Majorana index {p} out of range for {n} modes")));
    }
    let j = p / 2;
    let mut labels = vec![Pauli::I; n];
    labels[..j].fill(Pauli::Z);
    labels[j] = if p.is_multiple_of(2) { Pauli::X } else { Pauli::Y };
    PauliString::from_paulis(&labels)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MajoranaMonomial {
    indices: Vec<usize>,
}

impl MajoranaMonomial {
    pub fn new(indices: &[usize]) -> Result<MajoranaMonomial> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!("Majorana indices {indices:?} must be strictly increasing")));
        }
        match indices.len() {
            2 | 4 => Ok(MajoranaMonomial { indices: indices.to_vec() }),
            d => Err(Error::UnsupportedDegree(d)),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn degree(&self) -> usize {
        self.indices.len()
    }

    /// `(−i)^{d/2} γ_{p₁}⋯γ_{p_d}` as a signed Pauli string.
    pub fn to_pauli(&self, n: usize) -> Result<PauliString> {
        let mut p = PauliString::identity(n);
        for &k in &self.indices {
            p = p.mul(&majorana(n, k)?)?;
        }
        let phase = crate::pauli::Phase::from_power(-(self.degree() as i64 / 2));
        Ok(p.with_phase(p.phase().mul(phase)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceState {
    gamma: DMatrix<f64>,
}

impl CovarianceState {
    /// `|0…0⟩`: `Γ_{2j,2j+1} = −1`.
    pub fn vacuum(n: usize) -> CovarianceState {
        let mut g = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            g[(2 * j, 2 * j + 1)] = -1.0;
            g[(2 * j + 1, 2 * j)] = 1.0;
        }
        CovarianceState { gamma: g }
    }

    pub fn from_gamma(gamma: DMatrix<f64>) -> Result<CovarianceState> {
        if !gamma.is_square() || gamma.nrows() % 2 == 1 {
            return Err(Error::Dimension(format!("covariance matrix of shape {:?}", gamma.shape())));
        }
        if (&gamma + gamma.transpose()).amax() > 1e-12 {
            return Err(Error::Validation("covariance matrix is not antisymmetric".into()));
        }
        let s = CovarianceState { gamma };
        if s.singular_values().iter().any(|&v| v > 1.0 + 1e-10) {
            return Err(Error::Validation("covariance matrix has a singular value above 1".into()));
        }
        Ok(s)
    }

    /// Quadratic correlations of an arbitrary statevector.
    pub fn from_state(s: &DenseState) -> Result<CovarianceState> {
        let n = s.num_qubits();
        let mut g = DMatrix::zeros(2 * n, 2 * n);
        for p in 0..2 * n {
            for q in p + 1..2 * n {
                let m = MajoranaMonomial::new(&[p, q])?.to_pauli(n)?;
                let v = -s.pauli_expectation(&m).re;
                g[(p, q)] = v;
                g[(q, p)] = -v;
            }
        }
        Ok(CovarianceState { gamma: g })
    }

    pub fn n_modes(&self) -> usize {
        self.gamma.nrows() / 2
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn evolve(&self, r: &DMatrix<f64>) -> Result<CovarianceState> {
        if r.shape() != self.gamma.shape() {
            return Err(Error::Dimension(format!("rotation {:?} for covariance {:?}", r.shape(), self.gamma.shape())));
        }
        let residue = (r * r.transpose() - DMatrix::identity(r.nrows(), r.nrows())).amax();
        if residue > ORTHO_TOL {
            return Err(Error::Validation(format!("rotation is not orthogonal (residue {residue:.3e})")));
        }
        let g = r * &self.gamma * r.transpose();
        // restore exact antisymmetry lost to rounding
        let g = (&g - g.transpose()) * 0.5;
        Ok(CovarianceState { gamma: g })
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.gamma.clone().svd(false, false).singular_values.iter().copied().collect()
    }

    /// `⟨M⟩ = (−1)^{d/2} Pf(Γ restricted to M's indices)`, exact for Gaussian states.
    pub fn expect_monomial(&self, m: &MajoranaMonomial) -> Result<f64> {
        if let Some(&k) = m.indices.iter().find(|&&k| k >= self.gamma.nrows()) {
            return Err(Error::Dimension(format!("Majorana index {k} out of range")));
        }
        let g = |a: usize, b: usize| self.gamma[(m.indices[a], m.indices[b])];
        Ok(match m.degree() {
            2 => -g(0, 1),
            4 => g(0, 1) * g(2, 3) - g(0, 2) * g(1, 3) + g(0, 3) * g(1, 2),
            d => return Err(Error::UnsupportedDegree(d)),
        })
    }

    pub fn expect_quadratic(&self, o: &QuadraticObservable) -> Result<f64> {
        if o.n != self.n_modes() {
            return Err(Error::Dimension(format!("observable on {} modes, state has {}", o.n, self.n_modes())));
        }
        Ok(o.constant + pair_sum(&o.a, |p, q| -self.gamma[(p, q)]))
    }
}

fn pair_sum(a: &DMatrix<f64>, f: impl Fn(usize, usize) -> f64) -> f64 {
    let mut s = 0.0;
    for p in 0..a.nrows() {
        for q in p + 1..a.ncols() {
            if a[(p, q)] != 0.0 {
                s += a[(p, q)] * f(p, q);
            }
        }
    }
    s
}

/// `O = c₀ + Σ_{p<q} A_pq (−i γ_p γ_q)` with `A` antisymmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticObservable {
    pub n: usize,
    pub constant: f64,
    pub a: DMatrix<f64>,
}

impl QuadraticObservable {
    pub fn from_pauli_sum(o: &WeightedPauliSum) -> Result<QuadraticObservable> {
        let n = o.num_qubits();
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        let mut constant = 0.0;
        for (c, p) in o.real_terms(1e-12)? {
            if p.is_identity() {
                constant += c;
                continue;
            }
            let (p_idx, q_idx) = quadratic_pair(&p)
                .ok_or_else(|| Error::Validation(format!("{p} is not quadratic in Majorana operators")))?;
            let m = MajoranaMonomial::new(&[p_idx, q_idx])?.to_pauli(n)?;
            debug_assert_eq!(m.key(), p.key());
            let sign = m.phase().sign().expect("quadratic monomials are Hermitian");
            a[(p_idx, q_idx)] += c * sign;
            a[(q_idx, p_idx)] -= c * sign;
        }
        Ok(QuadraticObservable { n, constant, a })
    }

    pub fn expectation(&self, s: &CovarianceState) -> Result<f64> {
        s.expect_quadratic(self)
    }
}

/// Majorana pair whose product is proportional to `p`, if any.
fn quadratic_pair(p: &PauliString) -> Option<(usize, usize)> {
    let support = p.support();
    let (j, k) = (support.trailing_zeros() as usize, 63 - support.leading_zeros() as usize);
    if j == k {
        return (p.get(j) == Pauli::Z).then_some((2 * j, 2 * j + 1));
    }
    if (j + 1..k).any(|m| p.get(m) != Pauli::Z) {
        return None;
    }
    // X_j·Z_j ∝ Y_j, so a Y at the low end comes from γ_{2j}
    let lo = match p.get(j) {
        Pauli::Y => 2 * j,
        Pauli::X => 2 * j + 1,
        _ => return None,
    };
    let hi = match p.get(k) {
        Pauli::X => 2 * k,
        Pauli::Y => 2 * k + 1,
        _ => return None,
    };
    Some((lo, hi))
}

/// Majorana modes a gate touches.
fn gate_modes(g: &Gate) -> Vec<usize> {
    let lo = *g.qubits.iter().min().expect("gate has qubits");
    let hi = *g.qubits.iter().max().expect("gate has qubits");
    (2 * lo..2 * hi + 2).collect()
}

/// Local rotation block of a matchgate: `U† γ_p U = Σ_r R_pr γ_r` for
/// `p, r` in [`gate_modes`].
fn gate_block(n: usize, g: &Gate, x: &[f64], theta: &[f64]) -> Result<DMatrix<f64>> {
    if !g.is_matchgate() {
        return Err(Error::GateSet(format!("{:?} on {:?} is not a matchgate", g.tag, g.qubits)));
    }
    let modes = gate_modes(g);
    let mut r = DMatrix::zeros(modes.len(), modes.len());
    for (i, &p) in modes.iter().enumerate() {
        let img = g.conjugate_sum(&WeightedPauliSum::from_pauli(majorana(n, p)?), x, theta)?;
        let mut captured = 0.0;
        for (k, &q) in modes.iter().enumerate() {
            let c = img.coefficient(&majorana(n, q)?);
            r[(i, k)] = c.re;
            captured += c.norm_sqr();
        }
        if (captured - img.squared_norm()).abs() > 1e-12 {
            return Err(Error::GateSet(format!("{:?} maps γ_{p} outside the Majorana span", g.tag)));
        }
    }
    Ok(r)
}

/// `R = R_m ⋯ R_1` for gates `g_1 … g_m` in time order.
pub fn compile_gates<'a>(n: usize, gates: impl IntoIterator<Item = &'a Gate>, x: &[f64], theta: &[f64]) -> Result<DMatrix<f64>> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Dimension(format!("{n} modes")));
    }
    let mut r = DMatrix::<f64>::identity(2 * n, 2 * n);
    for g in gates {
        let block = gate_block(n, g, x, theta)?;
        let modes = gate_modes(g);
        let rows: Vec<_> = modes.iter().map(|&m| r.row(m).clone_owned()).collect();
        for (i, &m) in modes.iter().enumerate() {
            let mut row = rows[0].clone() * block[(i, 0)];
            for (k, rk) in rows.iter().enumerate().skip(1) {
                row += rk * block[(i, k)];
            }
            r.set_row(m, &row);
        }
    }
    Ok(r)
}

/// Adjoint action of the whole circuit on the Majorana modes.
pub fn compile_rotation(c: &CircuitIR, x: &[f64], theta: &[f64]) -> Result<DMatrix<f64>> {
    compile_gates(c.n, c.gates(), x, theta)
}

/// Replaces every trainable slot by a fixed angle.
pub fn bind_theta<'a>(gates: impl IntoIterator<Item = &'a Gate>, theta: &[f64]) -> Result<Vec<Gate>> {
    gates
        .into_iter()
        .map(|g| match g.param() {
            Param::Theta(_) => Ok(Gate::fixed(g.tag, &g.qubits, g.value(&[], theta)?)),
            _ => Ok(g.clone()),
        })
        .collect()
}

/// Pairs `(r, s)` with `B_rs(x) = (R(x)ᵀ A R(x))_rs` not identically zero.
fn structural_pairs(n: usize, gates: &[Gate], a: &DMatrix<f64>, x_dim: usize) -> Result<Vec<(usize, usize)>> {
    let generic = vec![GENERIC_X; x_dim];
    let mut r = DMatrix::<f64>::identity(2 * n, 2 * n);
    for g in gates {
        let block = gate_block(n, g, &generic, &[])?.abs();
        let modes = gate_modes(g);
        let mut full = DMatrix::<f64>::identity(2 * n, 2 * n);
        for (i, &p) in modes.iter().enumerate() {
            for (k, &q) in modes.iter().enumerate() {
                full[(p, q)] = block[(i, k)];
            }
        }
        r = full * r;
    }
    let b = r.transpose() * a.abs() * r;
    let mut pairs = Vec::new();
    for p in 0..2 * n {
        for q in p + 1..2 * n {
            if b[(p, q)] > 0.0 {
                pairs.push((p, q));
            }
        }
    }
    Ok(pairs)
}

fn data_legs(gates: &[Gate]) -> Vec<usize> {
    gates
        .iter()
        .filter_map(|g| match g.param() {
            Param::Data(j) => Some(j),
            _ => None,
        })
        .collect()
}

fn quadratic_surrogate(
    n: usize,
    n_inputs: usize,
    gates: Vec<Gate>,
    o: QuadraticObservable,
    pairs: Vec<(usize, usize)>,
    coefficients: Vec<f64>,
    std_errors: Vec<f64>,
) -> FunctionSurrogate {
    let leg_inputs = data_legs(&gates);
    FunctionSurrogate {
        basis: Basis::Trig3,
        n_inputs,
        leg_inputs,
        representation: Representation::Quadratic(QuadraticFeatures {
            n,
            gates,
            constant: o.constant,
            observable: o.a,
            pairs,
            coefficients,
            std_errors,
        }),
        coverage: DEFAULT_COVERAGE,
    }
}

/// Surrogate of a flipped circuit whose encoding block is matchgate:
/// `f(x) = c₀ + Σ_{r<s} B_rs(x) ⟨−i γ_r γ_s⟩_{W(θ)|ψ₀⟩}`.
pub fn fermion_flipped_surrogate(c: &CircuitIR, theta: &[f64], source: CoefficientSource<'_>) -> Result<FunctionSurrogate> {
    let (w, e) = c.flipped_blocks()?;
    let o = QuadraticObservable::from_pauli_sum(&c.observable)?;
    let gates = bind_theta(&e.gates, theta)?;
    let pairs = structural_pairs(c.n, &gates, &o.a, c.num_inputs())?;
    let monomials = pairs
        .iter()
        .map(|&(r, s)| MajoranaMonomial::new(&[r, s])?.to_pauli(c.n))
        .collect::<Result<Vec<_>>>()?;
    let (coefficients, std_errors) = match source {
        CoefficientSource::Oracle => {
            let state = oracle::run_gates(&DenseState::initial(c, oracle::DEFAULT_CAPACITY)?, &w.gates, &[], theta)?;
            (monomials.iter().map(|m| state.pauli_expectation(m).re).collect(), vec![0.0; pairs.len()])
        }
        CoefficientSource::Estimates(table) => {
            let est = monomials.iter().map(|m| table.get(m)).collect::<Result<Vec<_>>>()?;
            (est.iter().map(|e| e.value).collect(), est.iter().map(|e| e.std_error).collect())
        }
    };
    Ok(quadratic_surrogate(c.n, c.num_inputs(), gates, o, pairs, coefficients, std_errors))
}

/// Surrogate of a fully matchgate circuit; the correlations are those of
/// the initial state and every gate stays inside the `x`-dependent rotation.
pub fn fermion_surrogate(c: &CircuitIR, theta: &[f64]) -> Result<FunctionSurrogate> {
    let o = QuadraticObservable::from_pauli_sum(&c.observable)?;
    let gates = bind_theta(c.gates(), theta)?;
    let init = match &c.initial_state {
        crate::circuit::InitialState::Zero => CovarianceState::vacuum(c.n),
        _ => CovarianceState::from_state(&DenseState::initial(c, oracle::DEFAULT_CAPACITY)?)?,
    };
    let pairs: Vec<_> = structural_pairs(c.n, &gates, &o.a, c.num_inputs())?
        .into_iter()
        .filter(|&(r, s)| init.gamma[(r, s)] != 0.0)
        .collect();
    let coefficients = pairs.iter().map(|&(r, s)| -init.gamma[(r, s)]).collect();
    let zeros = vec![0.0; pairs.len()];
    Ok(quadratic_surrogate(c.n, c.num_inputs(), gates, o, pairs, coefficients, zeros))
}

/// `⟨O⟩` after the whole circuit by covariance evolution from the initial state.
pub fn evolve_expectation(c: &CircuitIR, x: &[f64], theta: &[f64]) -> Result<f64> {
    let o = QuadraticObservable::from_pauli_sum(&c.observable)?;
    let init = match &c.initial_state {
        crate::circuit::InitialState::Zero => CovarianceState::vacuum(c.n),
        _ => CovarianceState::from_state(&DenseState::initial(c, oracle::DEFAULT_CAPACITY)?)?,
    };
    // Heisenberg rotation R maps to the Schrödinger update Γ ← R Γ Rᵀ
    let r = compile_rotation(c, x, theta)?;
    init.evolve(&r)?.expect_quadratic(&o)
}

/// True when every gate of the encoding blocks is a matchgate.
pub fn encoding_is_matchgate(c: &CircuitIR) -> bool {
    c.blocks_of(BlockKind::Encoding).flat_map(|b| b.gates.iter()).all(Gate::is_matchgate)
}
