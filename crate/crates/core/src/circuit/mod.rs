//! Layered description of a parametrized circuit and its JSON file format.
//!
//! A circuit is an ordered list of blocks; each block is either an encoding
//! block (gates that read the input `x`) or a trainable block (gates that
//! read the parameters `θ`). Fixed gates may appear in either kind.
//!
//! Amplitude ordering everywhere is little-endian: qubit 0 is the least
//! significant bit of a basis index, and for a two-qubit gate the first
//! listed qubit is bit 0 of the local 4×4 matrix.

mod classify;
mod profile;

pub use classify::{assess, classify, Assessment, ClassLabel, ClassifierConfig, Engine, HypothesisClass, InputDomain, Rule};
pub use profile::{profile, routed_depth, validate, Diagnostic, DiagnosticKind, ResourceProfile};

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{CliffordGate, Pauli, PauliString, WeightedPauliSum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GateTag {
    H,
    S,
    Cnot,
    Cz,
    X,
    Y,
    Z,
    T,
    Rz,
    Rx,
    EncRz,
    Givens,
    Rxx,
    Swap,
}

impl GateTag {
    pub fn arity(self) -> usize {
        match self {
            GateTag::Cnot | GateTag::Cz | GateTag::Givens | GateTag::Rxx | GateTag::Swap => 2,
            _ => 1,
        }
    }

    pub fn is_clifford(self) -> bool {
        matches!(
            self,
            GateTag::H | GateTag::S | GateTag::Cnot | GateTag::Cz | GateTag::X | GateTag::Y | GateTag::Z | GateTag::Swap
        )
    }

    /// Gates that accept a parameter (`slot` or fixed `angle`).
    pub fn is_rotation(self) -> bool {
        matches!(self, GateTag::Rz | GateTag::Rx | GateTag::Givens | GateTag::Rxx)
    }

    pub fn is_data(self) -> bool {
        self == GateTag::EncRz
    }

    /// Number of non-Clifford Pauli rotations the gate contributes to the
    /// doping count. Data gates are accounted separately.
    pub fn non_clifford_weight(self) -> usize {
        match self {
            GateTag::T | GateTag::Rz | GateTag::Rx | GateTag::Rxx => 1,
            GateTag::Givens => 2,
            _ => 0,
        }
    }

    /// Quadratic in Majorana operators under Jordan-Wigner (two-qubit tags
    /// only when the qubits are adjacent; checked by [`Gate::is_matchgate`]).
    fn is_matchgate_tag(self) -> bool {
        matches!(self, GateTag::Z | GateTag::S | GateTag::Rz | GateTag::EncRz | GateTag::Givens | GateTag::Rxx)
    }
}

/// Where a gate's angle comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Param {
    None,
    Theta(usize),
    Data(usize),
    Fixed(f64),
}

/// One Pauli rotation `exp(−i·scale·v·G/2)` inside a gate, where `v` is the
/// gate's parameter value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationTerm {
    pub generator: PauliString,
    pub scale: f64,
}

/// Heisenberg action of a gate, in the form the propagation engines use.
#[derive(Clone, Debug, PartialEq)]
pub enum GateAction {
    Clifford(CliffordGate),
    Rotation { terms: Vec<RotationTerm>, param: Param },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub tag: GateTag,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

impl Gate {
    pub fn new(tag: GateTag, qubits: &[usize]) -> Gate {
        Gate { tag, qubits: qubits.to_vec(), slot: None, angle: None }
    }

    pub fn h(q: usize) -> Gate {
        Gate::new(GateTag::H, &[q])
    }
    pub fn s(q: usize) -> Gate {
        Gate::new(GateTag::S, &[q])
    }
    pub fn x(q: usize) -> Gate {
        Gate::new(GateTag::X, &[q])
    }
    pub fn y(q: usize) -> Gate {
        Gate::new(GateTag::Y, &[q])
    }
    pub fn z(q: usize) -> Gate {
        Gate::new(GateTag::Z, &[q])
    }
    pub fn t(q: usize) -> Gate {
        Gate::new(GateTag::T, &[q])
    }
    pub fn cnot(control: usize, target: usize) -> Gate {
        Gate::new(GateTag::Cnot, &[control, target])
    }
    pub fn cz(a: usize, b: usize) -> Gate {
        Gate::new(GateTag::Cz, &[a, b])
    }
    pub fn swap(a: usize, b: usize) -> Gate {
        Gate::new(GateTag::Swap, &[a, b])
    }
    pub fn rz(q: usize, slot: usize) -> Gate {
        Gate { slot: Some(slot), ..Gate::new(GateTag::Rz, &[q]) }
    }
    pub fn rx(q: usize, slot: usize) -> Gate {
        Gate { slot: Some(slot), ..Gate::new(GateTag::Rx, &[q]) }
    }
    pub fn givens(a: usize, b: usize, slot: usize) -> Gate {
        Gate { slot: Some(slot), ..Gate::new(GateTag::Givens, &[a, b]) }
    }
    /// `exp(−i·θ/2·X_a X_b)`.
    pub fn rxx(a: usize, b: usize, slot: usize) -> Gate {
        Gate { slot: Some(slot), ..Gate::new(GateTag::Rxx, &[a, b]) }
    }
    /// `S(x_coord) = exp(i·π/2·x·Z)` on qubit `q`.
    pub fn enc_rz(q: usize, coord: usize) -> Gate {
        Gate { slot: Some(coord), ..Gate::new(GateTag::EncRz, &[q]) }
    }
    /// Rotation gate with a fixed angle instead of a trainable slot.
    pub fn fixed(tag: GateTag, qubits: &[usize], angle: f64) -> Gate {
        Gate { angle: Some(angle), ..Gate::new(tag, qubits) }
    }

    pub fn param(&self) -> Param {
        match (self.tag, self.slot, self.angle) {
            (GateTag::EncRz, Some(j), _) => Param::Data(j),
            (GateTag::T, _, _) => Param::Fixed(FRAC_PI_4),
            (t, Some(k), None) if t.is_rotation() => Param::Theta(k),
            (t, None, Some(a)) if t.is_rotation() => Param::Fixed(a),
            _ => Param::None,
        }
    }

    pub fn is_data(&self) -> bool {
        self.tag.is_data()
    }

    pub fn is_trainable(&self) -> bool {
        matches!(self.param(), Param::Theta(_))
    }

    pub fn is_matchgate(&self) -> bool {
        self.tag.is_matchgate_tag() && (self.qubits.len() < 2 || self.qubits[0].abs_diff(self.qubits[1]) == 1)
    }

    /// Resolves the gate's parameter value.
    pub fn value(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        match self.param() {
            Param::None => Ok(0.0),
            Param::Fixed(a) => Ok(a),
            Param::Theta(k) => theta
                .get(k)
                .copied()
                .ok_or_else(|| Error::Binding(format!("θ slot {k} not bound ({} supplied)", theta.len()))),
            Param::Data(j) => x
                .get(j)
                .copied()
                .ok_or_else(|| Error::Binding(format!("x coordinate {j} not bound ({} supplied)", x.len()))),
        }
    }

    /// Dense unitary (2×2 or 4×4) at the given bindings.
    pub fn unitary(&self, x: &[f64], theta: &[f64]) -> Result<DMatrix<Complex64>> {
        let v = self.value(x, theta)?;
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        let m2 = |a: [Complex64; 4]| DMatrix::from_row_slice(2, 2, &a);
        let perm4 = |map: [usize; 4], signs: [f64; 4]| {
            let mut m = DMatrix::zeros(4, 4);
            for (b, (&to, &s)) in map.iter().zip(signs.iter()).enumerate() {
                m[(to, b)] = c(s, 0.0);
            }
            m
        };
        let s = FRAC_1_SQRT_2;
        Ok(match self.tag {
            GateTag::H => m2([c(s, 0.), c(s, 0.), c(s, 0.), c(-s, 0.)]),
            GateTag::S => m2([o, z, z, c(0., 1.)]),
            GateTag::X => m2([z, o, o, z]),
            GateTag::Y => m2([z, c(0., -1.), c(0., 1.), z]),
            GateTag::Z => m2([o, z, z, -o]),
            GateTag::T => m2([o, z, z, Complex64::from_polar(1.0, FRAC_PI_4)]),
            GateTag::Rz => m2([Complex64::from_polar(1.0, -v / 2.0), z, z, Complex64::from_polar(1.0, v / 2.0)]),
            GateTag::Rx => {
                let (cs, sn) = ((v / 2.0).cos(), (v / 2.0).sin());
                m2([c(cs, 0.), c(0., -sn), c(0., -sn), c(cs, 0.)])
            }
            GateTag::EncRz => {
                m2([Complex64::from_polar(1.0, PI * v / 2.0), z, z, Complex64::from_polar(1.0, -PI * v / 2.0)])
            }
            GateTag::Cnot => perm4([0, 3, 2, 1], [1.0; 4]),
            GateTag::Cz => perm4([0, 1, 2, 3], [1.0, 1.0, 1.0, -1.0]),
            GateTag::Swap => perm4([0, 2, 1, 3], [1.0; 4]),
            GateTag::Rxx => {
                let (cs, sn) = ((v / 2.0).cos(), (v / 2.0).sin());
                let mut m = DMatrix::zeros(4, 4);
                for b in 0..4 {
                    m[(b, b)] = c(cs, 0.);
                    m[(b ^ 3, b)] = c(0., -sn);
                }
                m
            }
            GateTag::Givens => {
                // real rotation on span{|a=1,b=0⟩, |a=0,b=1⟩}
                let (cs, sn) = (v.cos(), v.sin());
                let mut m = DMatrix::zeros(4, 4);
                m[(0, 0)] = o;
                m[(3, 3)] = o;
                m[(1, 1)] = c(cs, 0.);
                m[(2, 2)] = c(cs, 0.);
                m[(1, 2)] = c(-sn, 0.);
                m[(2, 1)] = c(sn, 0.);
                m
            }
        })
    }

    /// Heisenberg action on an `n`-qubit register.
    pub fn action(&self, n: usize) -> Result<GateAction> {
        let q = self.qubits[0];
        let single = |p: Pauli| PauliString::single(n, q, p);
        let pair = |a: Pauli, b: Pauli| -> Result<PauliString> { single(a)?.mul(&PauliString::single(n, self.qubits[1], b)?) };
        Ok(match self.tag {
            GateTag::H => GateAction::Clifford(CliffordGate::H(q)),
            GateTag::S => GateAction::Clifford(CliffordGate::S(q)),
            GateTag::X => GateAction::Clifford(CliffordGate::X(q)),
            GateTag::Y => GateAction::Clifford(CliffordGate::Y(q)),
            GateTag::Z => GateAction::Clifford(CliffordGate::Z(q)),
            GateTag::Cnot => GateAction::Clifford(CliffordGate::Cnot { control: q, target: self.qubits[1] }),
            GateTag::Cz => GateAction::Clifford(CliffordGate::Cz(q, self.qubits[1])),
            GateTag::Swap => GateAction::Clifford(CliffordGate::Swap(q, self.qubits[1])),
            GateTag::T => GateAction::Rotation {
                terms: vec![RotationTerm { generator: single(Pauli::Z)?, scale: 1.0 }],
                param: self.param(),
            },
            GateTag::Rz => GateAction::Rotation {
                terms: vec![RotationTerm { generator: single(Pauli::Z)?, scale: 1.0 }],
                param: self.param(),
            },
            GateTag::Rx => GateAction::Rotation {
                terms: vec![RotationTerm { generator: single(Pauli::X)?, scale: 1.0 }],
                param: self.param(),
            },
            GateTag::EncRz => GateAction::Rotation {
                terms: vec![RotationTerm { generator: single(Pauli::Z)?, scale: -PI }],
                param: self.param(),
            },
            GateTag::Rxx => GateAction::Rotation {
                terms: vec![RotationTerm { generator: pair(Pauli::X, Pauli::X)?, scale: 1.0 }],
                param: self.param(),
            },
            // exp(−iθ(X_a Y_b − Y_a X_b)/2); the two generators commute
            GateTag::Givens => GateAction::Rotation {
                terms: vec![
                    RotationTerm { generator: pair(Pauli::X, Pauli::Y)?, scale: 1.0 },
                    RotationTerm { generator: pair(Pauli::Y, Pauli::X)?, scale: -1.0 },
                ],
                param: self.param(),
            },
        })
    }

    /// Numeric `U† O U` at the given bindings.
    pub fn conjugate_sum(&self, o: &WeightedPauliSum, x: &[f64], theta: &[f64]) -> Result<WeightedPauliSum> {
        match self.action(o.num_qubits())? {
            GateAction::Clifford(g) => o.conjugate_clifford(g),
            GateAction::Rotation { terms, .. } => {
                let v = self.value(x, theta)?;
                let mut out = o.clone();
                for t in terms {
                    out = out.conjugate_rotation(&t.generator, t.scale * v)?;
                }
                Ok(out)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Encoding,
    Trainable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub kind: BlockKind,
    pub gates: Vec<Gate>,
}

impl Block {
    pub fn encoding(gates: Vec<Gate>) -> Block {
        Block { kind: BlockKind::Encoding, gates }
    }

    pub fn trainable(gates: Vec<Gate>) -> Block {
        Block { kind: BlockKind::Trainable, gates }
    }

    /// Greedy nearest-neighbour layering depth of this block alone.
    pub fn depth(&self, n: usize) -> usize {
        routed_depth(n, self.gates.iter())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    Alternating,
    EncodingFirst,
    Flipped,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Zero,
    Dense(Vec<Complex64>),
}

/// A parametrized circuit `U(x, θ)` with initial state and measured
/// observable. Construct through [`CircuitIR::new`] or JSON; both paths
/// run [`validate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "wire::CircuitFile", into = "wire::CircuitFile")]
pub struct CircuitIR {
    pub n: usize,
    pub architecture: Architecture,
    pub layers: Vec<Block>,
    pub observable: WeightedPauliSum,
    pub initial_state: InitialState,
}

impl CircuitIR {
    pub fn new(
        n: usize,
        architecture: Architecture,
        layers: Vec<Block>,
        observable: WeightedPauliSum,
        initial_state: InitialState,
    ) -> Result<CircuitIR> {
        let c = CircuitIR { n, architecture, layers, observable, initial_state };
        let diags = validate(&c);
        if diags.is_empty() {
            Ok(c)
        } else {
            Err(Error::Validation(diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")))
        }
    }

    /// Builds without validation; used by tests that need malformed input.
    pub fn new_unchecked(
        n: usize,
        architecture: Architecture,
        layers: Vec<Block>,
        observable: WeightedPauliSum,
        initial_state: InitialState,
    ) -> CircuitIR {
        CircuitIR { n, architecture, layers, observable, initial_state }
    }

    /// Gates in time order.
    pub fn gates(&self) -> impl DoubleEndedIterator<Item = &Gate> + '_ {
        self.layers.iter().flat_map(|b| b.gates.iter())
    }

    pub fn blocks_of(&self, kind: BlockKind) -> impl Iterator<Item = &Block> + '_ {
        self.layers.iter().filter(move |b| b.kind == kind)
    }

    /// Number of input coordinates referenced (max slot + 1).
    pub fn num_inputs(&self) -> usize {
        self.gates()
            .filter_map(|g| match g.param() {
                Param::Data(j) => Some(j + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Number of θ slots referenced (max slot + 1).
    pub fn num_params(&self) -> usize {
        self.gates()
            .filter_map(|g| match g.param() {
                Param::Theta(k) => Some(k + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Number of data-encoding gates (function legs).
    pub fn num_data_gates(&self) -> usize {
        self.gates().filter(|g| g.is_data()).count()
    }

    /// For flipped circuits: (trainable block, encoding block).
    pub fn flipped_blocks(&self) -> Result<(&Block, &Block)> {
        match (self.architecture, self.layers.as_slice()) {
            (Architecture::Flipped, [w, e]) if w.kind == BlockKind::Trainable && e.kind == BlockKind::Encoding => Ok((w, e)),
            _ => Err(Error::Classification("circuit is not a flipped (trainable, encoding) pair".into())),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<CircuitIR> {
        Ok(serde_json::from_str(s)?)
    }
}

mod wire {
    //! JSON layout of a circuit file.
    use super::*;

    #[derive(Clone, Debug, Serialize, Deserialize)]
    pub struct ObservableTerm {
        pub coefficient: f64,
        pub pauli: String,
    }

    #[derive(Clone, Debug, Serialize, Deserialize)]
    #[serde(untagged)]
    pub enum InitialStateFile {
        Tag(String),
        Dense { amplitudes: Vec<[f64; 2]> },
    }

    #[derive(Clone, Debug, Serialize, Deserialize)]
    pub struct CircuitFile {
        pub n: usize,
        pub architecture: Architecture,
        pub layers: Vec<Block>,
        pub observable: Vec<ObservableTerm>,
        #[serde(default = "zero_state")]
        pub initial_state: InitialStateFile,
    }

    fn zero_state() -> InitialStateFile {
        InitialStateFile::Tag("zero".into())
    }

    impl TryFrom<CircuitFile> for CircuitIR {
        type Error = Error;

        fn try_from(f: CircuitFile) -> Result<CircuitIR> {
            let mut obs = WeightedPauliSum::zero(f.n);
            for t in &f.observable {
                let p: PauliString = t.pauli.parse()?;
                if p.num_qubits() != f.n {
                    return Err(Error::Validation(format!("observable term {} is not on {} qubits", t.pauli, f.n)));
                }
                obs.add_term(Complex64::new(t.coefficient, 0.0), &p);
            }
            let initial_state = match f.initial_state {
                InitialStateFile::Tag(t) if t == "zero" => InitialState::Zero,
                InitialStateFile::Tag(t) => return Err(Error::Parse(format!("unknown initial state {t:?}"))),
                InitialStateFile::Dense { amplitudes } => {
                    InitialState::Dense(amplitudes.iter().map(|a| Complex64::new(a[0], a[1])).collect())
                }
            };
            CircuitIR::new(f.n, f.architecture, f.layers, obs.normalize(0.0), initial_state)
        }
    }

    impl From<CircuitIR> for CircuitFile {
        fn from(c: CircuitIR) -> CircuitFile {
            let observable = c
                .observable
                .iter()
                .map(|(w, p)| ObservableTerm { coefficient: w.re, pauli: p.to_string().trim_start_matches('+').to_string() })
                .collect();
            let initial_state = match c.initial_state {
                InitialState::Zero => zero_state(),
                InitialState::Dense(a) => InitialStateFile::Dense { amplitudes: a.iter().map(|z| [z.re, z.im]).collect() },
            };
            CircuitFile { n: c.n, architecture: c.architecture, layers: c.layers, observable, initial_state }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(s: &str) -> WeightedPauliSum {
        WeightedPauliSum::from_pauli(s.parse().unwrap())
    }

    #[test]
    fn json_round_trip_is_byte_stable() {
        let c = CircuitIR::new(
            3,
            Architecture::Flipped,
            vec![
                Block::trainable(vec![Gate::rx(0, 0), Gate::cnot(0, 1), Gate::fixed(GateTag::Rz, &[2], 0.25)]),
                Block::encoding(vec![Gate::h(1), Gate::enc_rz(0, 0), Gate::enc_rz(1, 1)]),
            ],
            WeightedPauliSum::from_signed_terms(3, vec![(0.5, "ZII".parse().unwrap()), (-1.0, "IXX".parse().unwrap())]),
            InitialState::Zero,
        )
        .unwrap();
        let a = c.to_json().unwrap();
        let back = CircuitIR::from_json(&a).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json().unwrap(), a);
        assert!(a.contains("\"ENC_RZ\""));
        assert!(a.contains("\"flipped\""));
    }

    #[test]
    fn parses_hand_written_file() {
        let src = r#"{
            "n": 2, "architecture": "encoding-first",
            "layers": [
              {"kind": "encoding", "gates": [{"tag": "ENC_RZ", "qubits": [0], "slot": 0}]},
              {"kind": "trainable", "gates": [{"tag": "GIVENS", "qubits": [0, 1], "slot": 3}]}
            ],
            "observable": [{"coefficient": 1.0, "pauli": "-ZI"}, {"coefficient": 2.0, "pauli": "ZI"}]
        }"#;
        let c = CircuitIR::from_json(src).unwrap();
        assert_eq!(c.initial_state, InitialState::Zero);
        assert_eq!(c.num_params(), 4);
        assert_eq!(c.num_inputs(), 1);
        // duplicate observable terms merge on load
        assert_eq!(c.observable.len(), 1);
        assert!((c.observable.coefficient(&"ZI".parse().unwrap()).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_malformed_file() {
        let src = r#"{"n": 1, "architecture": "flipped",
            "layers": [{"kind": "encoding", "gates": []}, {"kind": "trainable", "gates": []}],
            "observable": [{"coefficient": 1.0, "pauli": "Z"}]}"#;
        assert!(CircuitIR::from_json(src).is_err());
    }

    fn dense_rotation(g: &PauliString, angle: f64) -> DMatrix<Complex64> {
        let dim = 1 << g.num_qubits();
        DMatrix::<Complex64>::identity(dim, dim) * Complex64::new((angle / 2.0).cos(), 0.0)
            - g.to_dense() * Complex64::new(0.0, (angle / 2.0).sin())
    }

    #[test]
    fn rotation_actions_reproduce_unitaries() {
        // the gate matrices and the Pauli-rotation decompositions agree
        let v = 0.731;
        for g in [
            Gate::rz(0, 0),
            Gate::rx(0, 0),
            Gate::enc_rz(0, 0),
            Gate::t(0),
            Gate::givens(0, 1, 0),
        ] {
            let n = g.qubits.len();
            let u = g.unitary(&[v], &[v]).unwrap();
            let GateAction::Rotation { terms, .. } = g.action(n).unwrap() else { panic!() };
            let value = g.value(&[v], &[v]).unwrap();
            let mut w = DMatrix::<Complex64>::identity(1 << n, 1 << n);
            for t in &terms {
                w *= dense_rotation(&t.generator, t.scale * value);
            }
            // equal up to global phase
            let k = (0..u.nrows()).find(|&i| u[(i, i)].norm() > 1e-6).unwrap();
            let ph = u[(k, k)] / w[(k, k)];
            assert!((ph.norm() - 1.0).abs() < 1e-12);
            assert!((u - w * ph).iter().all(|z| z.norm() < 1e-12), "{:?}", g.tag);
        }
    }

    #[test]
    fn givens_rotates_single_excitations() {
        let g = Gate::givens(0, 1, 0).unitary(&[], &[0.3]).unwrap();
        // |a=1,b=0⟩ is local index 1
        assert!((g[(1, 1)].re - 0.3f64.cos()).abs() < 1e-15);
        assert!((g[(2, 1)].re - 0.3f64.sin()).abs() < 1e-15);
        assert!((g[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn conjugate_sum_matches_dense() {
        let o = obs("XY");
        for g in [Gate::cnot(1, 0), Gate::givens(0, 1, 0), Gate::rx(1, 0), Gate::enc_rz(0, 0)] {
            let u2 = g.unitary(&[0.4], &[1.1]).unwrap();
            // embed: two-qubit gates already act on (0, 1) or (1, 0)
            let u = if g.qubits.len() == 2 {
                if g.qubits == vec![0, 1] {
                    u2
                } else {
                    let s = Gate::swap(0, 1).unitary(&[], &[]).unwrap();
                    &s * u2 * &s
                }
            } else if g.qubits[0] == 0 {
                DMatrix::<Complex64>::identity(2, 2).kronecker(&u2)
            } else {
                u2.kronecker(&DMatrix::<Complex64>::identity(2, 2))
            };
            let got = g.conjugate_sum(&o, &[0.4], &[1.1]).unwrap().to_dense();
            let want = u.adjoint() * o.to_dense() * &u;
            assert!((got - want).iter().all(|z| z.norm() < 1e-12), "{:?}", g.tag);
        }
    }

    #[test]
    fn unbound_slots_are_binding_errors() {
        assert!(matches!(Gate::rx(0, 2).value(&[], &[0.1]), Err(Error::Binding(_))));
        assert!(matches!(Gate::enc_rz(0, 1).value(&[0.0], &[]), Err(Error::Binding(_))));
    }
}
