//! Empirical risk as an energy on two copies of the trained state.
//!
//! With `A_i = O(x_i) − y_i I`, the data Hamiltonian
//! `H = (1/N) Σ_i A_i ⊗ A_i` satisfies `Tr[(ρ ⊗ ρ) H] = (1/N) Σ_i (Tr[ρ O(x_i)] − y_i)²`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TrainingSet;
use crate::backprop::{backpropagate_gates, BackpropOptions};
use crate::circuit::CircuitIR;
use crate::error::{Error, Result};
use crate::oracle::{self, DenseState};
use crate::pauli::{PauliString, WeightedPauliSum};

/// Largest single-copy register for which the doubled state is simulated.
const MAX_REDUCTION_QUBITS: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct DataHamiltonian {
    /// Operator on `2n` qubits; the first copy occupies the low qubits.
    pub h: WeightedPauliSum,
    pub n: usize,
}

impl DataHamiltonian {
    /// `Tr[(σ ⊗ σ) H]` computed from single-copy expectations.
    pub fn factorized_energy(&self, state: &DenseState) -> Result<f64> {
        if state.num_qubits() != self.n {
            return Err(Error::Dimension(format!("state on {} qubits, Hamiltonian copy has {}", state.num_qubits(), self.n)));
        }
        let mask = (1u64 << self.n) - 1;
        let mut e = Complex64::new(0.0, 0.0);
        for (c, p) in self.h.iter() {
            let (z, x) = p.key();
            let lo = PauliString::new(self.n, z & mask, x & mask, Default::default())?;
            let hi = PauliString::new(self.n, z >> self.n, x >> self.n, Default::default())?;
            e += c * state.pauli_expectation(&lo) * state.pauli_expectation(&hi);
        }
        Ok(e.re)
    }

    /// `Tr[(σ ⊗ σ) H]` on the explicit doubled state.
    pub fn doubled_energy(&self, state: &DenseState) -> Result<f64> {
        state.tensor(state).expect(&self.h)
    }
}

/// Builds `H` from the samples and a map `x ↦ O(x)`.
pub fn build_data_hamiltonian<F>(s: &TrainingSet, family: F) -> Result<DataHamiltonian>
where
    F: Fn(&[f64]) -> Result<WeightedPauliSum>,
{
    let mut n = None;
    let mut h: Option<WeightedPauliSum> = None;
    let scale = Complex64::new(1.0 / s.len() as f64, 0.0);
    for (i, sample) in s.samples.iter().enumerate() {
        let o = family(&sample.x)?;
        if !o.is_hermitian(1e-12) {
            return Err(Error::Validation(format!("O(x) for sample {i} is not Hermitian")));
        }
        let k = *n.get_or_insert(o.num_qubits());
        if o.num_qubits() != k {
            return Err(Error::Dimension(format!("O(x) for sample {i} acts on {} qubits, expected {k}", o.num_qubits())));
        }
        let mut a = o;
        a.add_term(Complex64::new(-sample.y, 0.0), &PauliString::identity(k));
        let aa = a.tensor(&a)?;
        match &mut h {
            Some(acc) => acc.add_sum(&aa, scale)?,
            None => {
                let mut acc = WeightedPauliSum::zero(2 * k);
                acc.add_sum(&aa, scale)?;
                h = Some(acc);
            }
        }
    }
    let n = n.expect("training sets are non-empty");
    Ok(DataHamiltonian { h: h.expect("training sets are non-empty").normalize(0.0), n })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionRow {
    pub risk: f64,
    pub energy_doubled: f64,
    pub energy_factorized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub max_discrepancy: f64,
    pub rows: Vec<ReductionRow>,
}

/// Checks `risk(θ) = ⟨H⟩` on `W(θ)|ψ₀⟩ ⊗ W(θ)|ψ₀⟩` for each `θ` of a
/// flipped circuit.
pub fn verify_reduction(c: &CircuitIR, s: &TrainingSet, thetas: &[Vec<f64>], opts: &BackpropOptions) -> Result<ReductionReport> {
    if c.n > MAX_REDUCTION_QUBITS {
        return Err(Error::Capacity(format!("doubled register of {} qubits exceeds {}", 2 * c.n, 2 * MAX_REDUCTION_QUBITS)));
    }
    let (w, enc) = c.flipped_blocks()?;
    let expansion = backpropagate_gates(c.n, &enc.gates, &c.observable, &[], opts)?;
    let h = build_data_hamiltonian(s, |x| expansion.at(x))?;
    let start = DenseState::initial(c, MAX_REDUCTION_QUBITS)?;
    let xs = s.inputs();
    let ys = s.labels();
    let rows = thetas
        .par_iter()
        .map(|theta| {
            let f = oracle::evaluate_many(c, theta, &xs)?;
            let risk = f.iter().zip(&ys).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / ys.len() as f64;
            let state = oracle::run_gates(&start, &w.gates, &[], theta)?;
            Ok(ReductionRow { risk, energy_doubled: h.doubled_energy(&state)?, energy_factorized: h.factorized_energy(&state)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_discrepancy = rows
        .iter()
        .map(|r| (r.risk - r.energy_doubled).abs().max((r.risk - r.energy_factorized).abs()))
        .fold(0.0, f64::max);
    Ok(ReductionReport { max_discrepancy, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Architecture, Block, Gate, InitialState, InputDomain};
    use crate::erm::Sample;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z1() -> WeightedPauliSum {
        WeightedPauliSum::from_pauli("Z".parse().unwrap())
    }

    fn one_sample(y: f64) -> TrainingSet {
        TrainingSet::new(vec![Sample { x: vec![0.0], y }], InputDomain::Binary).unwrap()
    }

    #[test]
    fn single_qubit_hand_cases() {
        // O = Z, y = 0: H = Z⊗Z, energy on |0⟩|0⟩ is 1, on |+⟩|+⟩ is 0.
        let h = build_data_hamiltonian(&one_sample(0.0), |_| Ok(z1())).unwrap();
        let zz = WeightedPauliSum::from_pauli("ZZ".parse().unwrap());
        assert_eq!(h.h, zz);
        let zero = DenseState::zero(1);
        assert!((h.doubled_energy(&zero).unwrap() - 1.0).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DenseState::from_amplitudes(1, vec![Complex64::new(r, 0.0); 2]).unwrap();
        assert!(h.doubled_energy(&plus).unwrap().abs() < 1e-14);
        assert!(h.factorized_energy(&plus).unwrap().abs() < 1e-14);
    }

    #[test]
    fn label_shift_expands_as_a_square() {
        // (Z − I) ⊗ (Z − I) = ZZ − ZI − IZ + II
        let h = build_data_hamiltonian(&one_sample(1.0), |_| Ok(z1())).unwrap();
        for (label, c) in [("ZZ", 1.0), ("ZI", -1.0), ("IZ", -1.0), ("II", 1.0)] {
            assert!((h.h.coefficient(&label.parse().unwrap()) - Complex64::new(c, 0.0)).norm() < 1e-14, "{label}");
        }
        assert_eq!(h.h.len(), 4);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DenseState::from_amplitudes(1, vec![Complex64::new(r, 0.0); 2]).unwrap();
        assert!((h.doubled_energy(&plus).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn non_hermitian_family_is_rejected() {
        let mut o = z1();
        o.add_term(Complex64::new(0.0, 1.0), &"X".parse().unwrap());
        assert!(matches!(build_data_hamiltonian(&one_sample(0.0), |_| Ok(o.clone())), Err(Error::Validation(_))));
    }

    #[test]
    fn energies_match_risk_on_a_flipped_circuit() {
        let n = 3;
        let w = Block::trainable(vec![Gate::rx(0, 0), Gate::rx(1, 1), Gate::rx(2, 2), Gate::cnot(0, 1), Gate::cnot(1, 2), Gate::rz(2, 3)]);
        let e = Block::encoding(vec![Gate::h(0), Gate::enc_rz(0, 0), Gate::cnot(0, 1), Gate::enc_rz(1, 1), Gate::h(2), Gate::enc_rz(2, 0)]);
        let obs = WeightedPauliSum::from_terms(3, [(Complex64::new(0.7, 0.0), "ZZI".parse().unwrap()), (Complex64::new(-0.4, 0.0), "IXX".parse().unwrap())]);
        let c = CircuitIR::new(n, Architecture::Flipped, vec![w, e], obs, InitialState::Zero).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let samples = oracle::binary_grid(2).into_iter().map(|x| Sample { x, y: rng.random_range(-1.0..1.0) }).collect();
        let s = TrainingSet::new(samples, InputDomain::Binary).unwrap();
        let thetas: Vec<Vec<f64>> = (0..5).map(|_| (0..4).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let report = verify_reduction(&c, &s, &thetas, &BackpropOptions::default()).unwrap();
        assert_eq!(report.rows.len(), 5);
        assert!(report.max_discrepancy < 1e-10, "{}", report.max_discrepancy);
    }

    #[test]
    fn wide_registers_are_refused() {
        let c = CircuitIR::new(
            7,
            Architecture::Flipped,
            vec![Block::trainable(vec![Gate::rx(0, 0)]), Block::encoding(vec![Gate::enc_rz(0, 0)])],
            WeightedPauliSum::from_pauli("ZIIIIII".parse().unwrap()),
            InitialState::Zero,
        )
        .unwrap();
        assert!(matches!(verify_reduction(&c, &one_sample(0.0), &[vec![0.0]], &BackpropOptions::default()), Err(Error::Capacity(_))));
    }
}
