//! Syntactic classification of circuits by simulability resources.
//!
//! Rules are tried in a fixed order and the first match wins:
//!
//! | rule | condition | class | engine |
//! |------|-----------|-------|--------|
//! | Observation 1  | total routed depth ≤ depth budget | 1 | mps |
//! | Observation 2  | total doping ≤ t budget, binary inputs | 1 | pauli_backprop |
//! | Observation 4a | every gate matchgate, quadratic Majorana observable, zero state | 1 | free_fermion |
//! | Observation 3  | flipped, encoding doping ≤ t budget | 2 | pauli_backprop |
//! | Observation 4b | flipped, matchgate encoding, quadratic Majorana observable | 2 | free_fermion |
//! | fallback       | otherwise | 3 | none |
//!
//! Budgets are `ceil(c·log2 n)`, floored by a configurable minimum.

use serde::{Deserialize, Serialize};

use super::{profile, Architecture, CircuitIR, InitialState, ResourceProfile};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputDomain {
    #[default]
    Binary,
    Continuous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub c_depth: f64,
    pub c_t: f64,
    pub depth_floor: usize,
    pub t_floor: usize,
    pub input_domain: InputDomain,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig { c_depth: 2.0, c_t: 2.0, depth_floor: 3, t_floor: 0, input_domain: InputDomain::Binary }
    }
}

impl ClassifierConfig {
    pub fn with_domain(domain: InputDomain) -> Self {
        ClassifierConfig { input_domain: domain, ..Default::default() }
    }

    fn budget(c: f64, n: usize, floor: usize) -> usize {
        let raw = if n <= 1 { 0.0 } else { (c * (n as f64).log2()).ceil() };
        (raw as usize).max(floor)
    }

    pub fn depth_budget(&self, n: usize) -> usize {
        Self::budget(self.c_depth, n, self.depth_floor)
    }

    pub fn t_budget(&self, n: usize) -> usize {
        Self::budget(self.c_t, n, self.t_floor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HypothesisClass {
    Class1,
    Class2,
    Class3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    Observation1,
    Observation2,
    Observation3,
    Observation4a,
    Observation4b,
    Fallback,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Mps,
    PauliBackprop,
    FreeFermion,
    None,
}

impl Rule {
    pub fn label(self) -> HypothesisClass {
        match self {
            Rule::Observation1 | Rule::Observation2 | Rule::Observation4a => HypothesisClass::Class1,
            Rule::Observation3 | Rule::Observation4b => HypothesisClass::Class2,
            Rule::Fallback => HypothesisClass::Class3,
        }
    }

    pub fn engine(self) -> Engine {
        match self {
            Rule::Observation1 => Engine::Mps,
            Rule::Observation2 | Rule::Observation3 => Engine::PauliBackprop,
            Rule::Observation4a | Rule::Observation4b => Engine::FreeFermion,
            Rule::Fallback => Engine::None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassLabel {
    pub label: HypothesisClass,
    pub justification: Rule,
    pub recommended_engine: Engine,
}

/// Every rule's verdict, in evaluation order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assessment {
    pub profile: ResourceProfile,
    pub depth_budget: usize,
    pub t_budget: usize,
    pub matched: Vec<Rule>,
}

impl Assessment {
    pub fn first(&self) -> Rule {
        self.matched.first().copied().unwrap_or(Rule::Fallback)
    }

    pub fn label(&self) -> ClassLabel {
        let r = self.first();
        ClassLabel { label: r.label(), justification: r, recommended_engine: r.engine() }
    }

    /// The first matching rule that names `engine`, if any.
    pub fn admits(&self, engine: Engine) -> Option<Rule> {
        self.matched.iter().copied().find(|r| r.engine() == engine)
    }
}

const ORDER: [Rule; 5] = [Rule::Observation1, Rule::Observation2, Rule::Observation4a, Rule::Observation3, Rule::Observation4b];

pub fn assess(c: &CircuitIR, cfg: &ClassifierConfig) -> Assessment {
    let p = profile(c);
    let depth_budget = cfg.depth_budget(c.n);
    let t_budget = cfg.t_budget(c.n);
    let binary = cfg.input_domain == InputDomain::Binary;
    let quadratic = crate::fermion::QuadraticObservable::from_pauli_sum(&c.observable).is_ok();
    let flipped = c.architecture == Architecture::Flipped;
    let encoding_doping = p.t_count_encoding + if binary { 0 } else { p.encoding_gate_count };

    let holds = |r: Rule| match r {
        Rule::Observation1 => p.depth_total <= depth_budget,
        Rule::Observation2 => binary && p.t_count() <= t_budget,
        Rule::Observation4a => p.is_matchgate && quadratic && c.initial_state == InitialState::Zero,
        Rule::Observation3 => flipped && encoding_doping <= t_budget,
        Rule::Observation4b => flipped && p.encoding_is_matchgate && quadratic,
        Rule::Fallback => true,
    };
    let matched = ORDER.iter().copied().filter(|&r| holds(r)).collect();
    Assessment { profile: p, depth_budget, t_budget, matched }
}

pub fn classify(c: &CircuitIR, cfg: &ClassifierConfig) -> ClassLabel {
    assess(c, cfg).label()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Block, Gate};
    use crate::pauli::WeightedPauliSum;

    fn z(n: usize, q: usize) -> WeightedPauliSum {
        let s: String = (0..n).map(|k| if k == q { 'Z' } else { 'I' }).collect();
        WeightedPauliSum::from_pauli(s.parse().unwrap())
    }

    fn brickwork(n: usize, layers: usize, slot: &mut usize) -> Vec<Gate> {
        let mut g = Vec::new();
        for l in 0..layers {
            for q in (l % 2..n - 1).step_by(2) {
                g.push(Gate::cnot(q, q + 1));
            }
            for q in 0..n {
                g.push(Gate::rx(q, *slot));
                *slot += 1;
            }
        }
        g
    }

    #[test]
    fn budgets_follow_log_scaling() {
        let cfg = ClassifierConfig::default();
        assert_eq!(cfg.depth_budget(8), 6);
        assert_eq!(cfg.depth_budget(4), 4);
        assert_eq!(cfg.depth_budget(1), 3);
        assert_eq!(cfg.t_budget(16), 8);
        assert_eq!(cfg.t_budget(1), 0);
    }

    #[test]
    fn shallow_alternating_is_class1_by_depth() {
        let n = 8;
        let enc: Vec<Gate> = (0..n).map(|q| Gate::enc_rz(q, q)).collect();
        let train: Vec<Gate> = (0..n - 1).step_by(2).map(|q| Gate::cnot(q, q + 1)).chain((0..n).map(|q| Gate::rx(q, q))).collect();
        let c = CircuitIR::new(n, Architecture::EncodingFirst, vec![Block::encoding(enc), Block::trainable(train)], z(n, 0), InitialState::Zero)
            .unwrap();
        assert_eq!(profile(&c).depth_total, 3);
        let l = classify(&c, &ClassifierConfig::default());
        assert_eq!(l.label, HypothesisClass::Class1);
        assert_eq!(l.justification, Rule::Observation1);
        assert_eq!(l.recommended_engine, Engine::Mps);
    }

    #[test]
    fn flipped_clifford_encoding_is_class2() {
        let n = 6;
        let mut slot = 0;
        let w = brickwork(n, 10, &mut slot);
        let mut e: Vec<Gate> = (0..n).map(Gate::h).collect();
        e.extend((0..n).map(|q| Gate::enc_rz(q, q)));
        e.push(Gate::cnot(0, 1));
        let c = CircuitIR::new(n, Architecture::Flipped, vec![Block::trainable(w), Block::encoding(e)], z(n, 1), InitialState::Zero).unwrap();
        let l = classify(&c, &ClassifierConfig::default());
        assert_eq!(l.label, HypothesisClass::Class2);
        assert_eq!(l.justification, Rule::Observation3);
    }

    #[test]
    fn deep_doped_alternating_is_class3() {
        let n = 6;
        let mut slot = 0;
        let mut layers = Vec::new();
        for _ in 0..3 {
            let mut e: Vec<Gate> = (0..n).map(|q| Gate::enc_rz(q, q)).collect();
            e.extend((0..n).map(Gate::t));
            layers.push(Block::encoding(e));
            let mut w = brickwork(n, 3, &mut slot);
            w.extend((0..n).map(Gate::t));
            layers.push(Block::trainable(w));
        }
        let c = CircuitIR::new(n, Architecture::Alternating, layers, z(n, 0), InitialState::Zero).unwrap();
        let l = classify(&c, &ClassifierConfig::default());
        assert_eq!(l.label, HypothesisClass::Class3);
        assert_eq!(l.justification, Rule::Fallback);
        assert_eq!(l.recommended_engine, Engine::None);
    }

    #[test]
    fn continuous_inputs_disqualify_low_doping() {
        let n = 4;
        let mut w = vec![];
        for _ in 0..6 {
            w.extend((0..n).map(Gate::h));
            w.push(Gate::cnot(0, 1));
            w.push(Gate::cnot(2, 3));
        }
        let e: Vec<Gate> = (0..n).map(|q| Gate::enc_rz(q, q)).collect();
        let c = CircuitIR::new(n, Architecture::EncodingFirst, vec![Block::encoding(e), Block::trainable(w)], z(n, 0), InitialState::Zero).unwrap();
        assert_eq!(classify(&c, &ClassifierConfig::with_domain(InputDomain::Binary)).justification, Rule::Observation2);
        assert_eq!(classify(&c, &ClassifierConfig::with_domain(InputDomain::Continuous)).justification, Rule::Fallback);
    }

    #[test]
    fn adding_t_gates_never_promotes_via_low_doping() {
        let n = 4;
        let mut slot = 0;
        let mut w = brickwork(n, 4, &mut slot);
        let e: Vec<Gate> = (0..n).map(|q| Gate::enc_rz(q, q)).collect();
        let build = |w: Vec<Gate>| {
            CircuitIR::new(n, Architecture::Alternating, vec![Block::encoding(e.clone()), Block::trainable(w)], z(n, 0), InitialState::Zero)
                .unwrap()
        };
        let cfg = ClassifierConfig::default();
        assert_eq!(classify(&build(w.clone()), &cfg).label, HypothesisClass::Class3);
        for k in 0..5 {
            w.push(Gate::t(k % n));
            let a = assess(&build(w.clone()), &cfg);
            assert!(a.admits(Engine::PauliBackprop).is_none());
            assert_ne!(a.first(), Rule::Observation2);
        }
    }

    #[test]
    fn matchgate_rules() {
        let n = 4;
        let mut w = Vec::new();
        let mut slot = 0;
        for l in 0..6 {
            for q in (l % 2..n - 1).step_by(2) {
                w.push(Gate::givens(q, q + 1, slot));
                slot += 1;
            }
            w.push(Gate::rz(l % n, slot));
            slot += 1;
        }
        let e: Vec<Gate> = (0..n).map(|q| Gate::enc_rz(q, q)).collect();
        let c = CircuitIR::new(n, Architecture::EncodingFirst, vec![Block::encoding(e.clone()), Block::trainable(w.clone())], z(n, 2), InitialState::Zero)
            .unwrap();
        let cfg = ClassifierConfig::with_domain(InputDomain::Continuous);
        assert_eq!(classify(&c, &cfg).justification, Rule::Observation4a);

        // flipped with a non-matchgate trainable block and a wide continuous encoding
        let mut w2 = w.clone();
        w2.push(Gate::h(0));
        let mut e2 = e.clone();
        e2.extend((0..n).map(|q| Gate::enc_rz(q, q)));
        let c = CircuitIR::new(n, Architecture::Flipped, vec![Block::trainable(w2), Block::encoding(e2)], z(n, 2), InitialState::Zero).unwrap();
        let a = assess(&c, &cfg);
        assert_eq!(a.first(), Rule::Observation4b);
        assert_eq!(a.label().label, HypothesisClass::Class2);
    }
}
