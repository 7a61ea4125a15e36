use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Architecture, BlockKind, CircuitIR, Gate, InitialState, Param};

/// Resource counters of a circuit, all recomputable from the IR.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceProfile {
    pub n: usize,
    pub architecture: Architecture,
    /// Non-Clifford rotations in trainable blocks (T = 1, RZ/RX = 1, Givens = 2).
    pub t_count_trainable: usize,
    /// Non-Clifford rotations among the fixed gates of encoding blocks.
    pub t_count_encoding: usize,
    /// Data-encoding gates; these are Clifford only for binary inputs.
    pub encoding_gate_count: usize,
    pub depth_encoding: usize,
    pub depth_trainable: usize,
    pub depth_total: usize,
    pub is_matchgate: bool,
    pub encoding_is_matchgate: bool,
}

impl ResourceProfile {
    pub fn t_count(&self) -> usize {
        self.t_count_trainable + self.t_count_encoding
    }
}

/// Depth under greedy as-soon-as-possible layering on a 1-D line.
///
/// A two-qubit gate at distance `d > 1` is charged `2(d−1) + 1` layers
/// (SWAP in, gate, SWAP out) and blocks every qubit between its endpoints.
pub fn routed_depth<'a>(n: usize, gates: impl Iterator<Item = &'a Gate>) -> usize {
    let mut level = vec![0usize; n];
    for g in gates {
        if g.qubits.iter().any(|&q| q >= n) {
            continue;
        }
        let (lo, hi) = match g.qubits.as_slice() {
            [a] => (*a, *a),
            [a, b] => ((*a).min(*b), (*a).max(*b)),
            _ => continue,
        };
        let dist = hi - lo;
        let cost = if dist > 1 { 2 * (dist - 1) + 1 } else { 1 };
        let start = level[lo..=hi].iter().copied().max().unwrap_or(0);
        for l in &mut level[lo..=hi] {
            *l = start + cost;
        }
    }
    level.into_iter().max().unwrap_or(0)
}

pub fn profile(c: &CircuitIR) -> ResourceProfile {
    let mut t_train = 0;
    let mut t_enc = 0;
    let mut enc_gates = 0;
    for b in &c.layers {
        for g in &b.gates {
            let w = match g.param() {
                // Clifford angles would not branch, but classification stays syntactic
                Param::Data(_) => {
                    enc_gates += 1;
                    0
                }
                _ => g.tag.non_clifford_weight(),
            };
            match b.kind {
                BlockKind::Trainable => t_train += w,
                BlockKind::Encoding => t_enc += w,
            }
        }
    }
    let depth_of = |kind| c.blocks_of(kind).map(|b| b.depth(c.n)).sum();
    ResourceProfile {
        n: c.n,
        architecture: c.architecture,
        t_count_trainable: t_train,
        t_count_encoding: t_enc,
        encoding_gate_count: enc_gates,
        depth_encoding: depth_of(BlockKind::Encoding),
        depth_trainable: depth_of(BlockKind::Trainable),
        depth_total: routed_depth(c.n, c.gates()),
        is_matchgate: c.gates().all(Gate::is_matchgate),
        encoding_is_matchgate: c.blocks_of(BlockKind::Encoding).flat_map(|b| b.gates.iter()).all(Gate::is_matchgate),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagnosticKind {
    Size,
    Range,
    Arity,
    Parameter,
    BlockContent,
    Architecture,
    DuplicateSlot,
    Observable,
    InitialState,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

/// All structural problems of a circuit; empty means well-formed.
pub fn validate(c: &CircuitIR) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut diag = |kind, message: String| out.push(Diagnostic { kind, message });

    if c.n == 0 || c.n > crate::pauli::MAX_QUBITS {
        diag(DiagnosticKind::Size, format!("qubit count {} outside 1..={}", c.n, crate::pauli::MAX_QUBITS));
    }

    let mut theta_slots: HashMap<usize, (usize, usize)> = HashMap::new();
    for (bi, b) in c.layers.iter().enumerate() {
        for (gi, g) in b.gates.iter().enumerate() {
            let at = format!("block {bi} gate {gi} ({:?})", g.tag);
            if g.qubits.len() != g.tag.arity() {
                diag(DiagnosticKind::Arity, format!("{at}: expects {} qubits, got {}", g.tag.arity(), g.qubits.len()));
            }
            for &q in &g.qubits {
                if q >= c.n {
                    diag(DiagnosticKind::Range, format!("{at}: qubit {q} out of range for n={}", c.n));
                }
            }
            if g.qubits.len() == 2 && g.qubits[0] == g.qubits[1] {
                diag(DiagnosticKind::Arity, format!("{at}: repeated qubit {}", g.qubits[0]));
            }
            let param_ok = match g.tag {
                t if t.is_rotation() => g.slot.is_some() != g.angle.is_some(),
                t if t.is_data() => g.slot.is_some() && g.angle.is_none(),
                _ => g.slot.is_none() && g.angle.is_none(),
            };
            if !param_ok {
                diag(DiagnosticKind::Parameter, format!("{at}: slot/angle fields do not match the tag"));
            }
            match (b.kind, g.param()) {
                (BlockKind::Encoding, Param::Theta(_)) => {
                    diag(DiagnosticKind::BlockContent, format!("{at}: trainable parameter inside an encoding block"))
                }
                (BlockKind::Trainable, Param::Data(_)) => {
                    diag(DiagnosticKind::BlockContent, format!("{at}: data gate inside a trainable block"))
                }
                _ => {}
            }
            if let Param::Theta(k) = g.param() {
                if let Some((pb, pg)) = theta_slots.insert(k, (bi, gi)) {
                    diag(DiagnosticKind::DuplicateSlot, format!("{at}: θ slot {k} already used by block {pb} gate {pg}"));
                }
            }
        }
    }

    let kinds: Vec<BlockKind> = c.layers.iter().map(|b| b.kind).collect();
    let arch_ok = match c.architecture {
        Architecture::Flipped => kinds == [BlockKind::Trainable, BlockKind::Encoding],
        Architecture::EncodingFirst => kinds == [BlockKind::Encoding, BlockKind::Trainable],
        Architecture::Alternating => !kinds.is_empty() && kinds.windows(2).all(|w| w[0] != w[1]),
    };
    if !arch_ok {
        diag(DiagnosticKind::Architecture, format!("block sequence {kinds:?} does not match {:?}", c.architecture));
    }

    if c.observable.num_qubits() != c.n {
        diag(DiagnosticKind::Observable, format!("observable acts on {} qubits, circuit has {}", c.observable.num_qubits(), c.n));
    }
    if c.observable.is_empty() {
        diag(DiagnosticKind::Observable, "observable has no terms".into());
    }
    if !c.observable.is_hermitian(1e-12) {
        diag(DiagnosticKind::Observable, "observable is not Hermitian".into());
    }

    if let InitialState::Dense(a) = &c.initial_state {
        if c.n < 64 && a.len() != 1usize << c.n {
            diag(DiagnosticKind::InitialState, format!("dense initial state has {} amplitudes, expected 2^{}", a.len(), c.n));
        }
        let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            diag(DiagnosticKind::InitialState, format!("dense initial state has norm² {norm}"));
        }
    }
    out
}
