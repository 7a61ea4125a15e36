//! Seeded circuit families and synthetic training tasks.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::circuit::{Architecture, Block, CircuitIR, Gate, GateTag, InitialState, InputDomain};
use crate::erm::{Sample, TrainingSet};
use crate::error::{Error, Result};
use crate::oracle;
use crate::pauli::{PauliString, WeightedPauliSum};
use crate::surrogate::BasisIndex;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    pub coefficient: f64,
    pub pauli: String,
}

/// Parameters of a generated circuit. Fields a family does not use are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSpec {
    /// `brickwork`, `low-doping`, `flipped`, `matchgate` or `matchgate-flipped`.
    pub name: String,
    pub n: usize,
    /// Total layered depth (`brickwork`) or number of trainable layers.
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// Non-Clifford rotations (`low-doping`) or encoding T gates (`flipped`).
    #[serde(default)]
    pub t_count: usize,
    /// Random Clifford gates per block; defaults to `4n`.
    #[serde(default)]
    pub clifford_gates: Option<usize>,
    /// Defaults to `Z` on qubit 0.
    #[serde(default)]
    pub observable: Vec<ObservableSpec>,
}

fn default_depth() -> usize {
    4
}

/// Builds the circuit described by `spec`.
pub fn generate_circuit(spec: &CircuitSpec, seed: u64) -> Result<CircuitIR> {
    let n = spec.n;
    if n == 0 || n > 20 {
        return Err(Error::Config(format!("generated circuits need 1 ≤ n ≤ 20, got {n}")));
    }
    let obs = observable(n, &spec.observable)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cliffords = spec.clifford_gates.unwrap_or(4 * n);
    match spec.name.as_str() {
        "brickwork" => brickwork(n, spec.depth, &mut rng, obs),
        "low-doping" => low_doping(n, cliffords, spec.t_count, &mut rng, obs),
        "flipped" => flipped(n, spec.depth, cliffords, spec.t_count, &mut rng, obs),
        "matchgate" => matchgate(n, spec.depth, &mut rng, obs),
        "matchgate-flipped" => matchgate_flipped(n, spec.depth, &mut rng, obs),
        other => Err(Error::Config(format!("unknown circuit generator {other:?}"))),
    }
}

fn observable(n: usize, terms: &[ObservableSpec]) -> Result<WeightedPauliSum> {
    if terms.is_empty() {
        return Ok(WeightedPauliSum::from_pauli(PauliString::single(n, 0, crate::pauli::Pauli::Z)?));
    }
    let mut o = WeightedPauliSum::zero(n);
    for t in terms {
        let p: PauliString = t.pauli.parse()?;
        if p.num_qubits() != n {
            return Err(Error::Config(format!("observable term {} is not on {n} qubits", t.pauli)));
        }
        o.add_term(Complex64::new(t.coefficient, 0.0), &p);
    }
    Ok(o.normalize(0.0))
}

fn entangler(rng: &mut ChaCha8Rng, q: usize) -> Gate {
    if rng.random_bool(0.5) {
        Gate::cnot(q, q + 1)
    } else {
        Gate::cz(q, q + 1)
    }
}

/// `H` and `S(x_q)` on every qubit, then alternating `Rx` and brick layers.
/// Every layer has depth one, so the circuit's depth is exactly `depth`.
pub fn brickwork(n: usize, depth: usize, rng: &mut ChaCha8Rng, obs: WeightedPauliSum) -> Result<CircuitIR> {
    if depth < 2 {
        return Err(Error::Config("brickwork depth must be at least 2".into()));
    }
    let enc: Vec<Gate> = (0..n).map(Gate::h).chain((0..n).map(|q| Gate::enc_rz(q, q))).collect();
    let mut w = Vec::new();
    let mut slot = 0;
    for layer in 0..depth - 2 {
        if layer % 2 == 0 {
            for q in 0..n {
                w.push(Gate::rx(q, slot));
                slot += 1;
            }
        } else {
            for q in ((layer / 2) % 2..n.saturating_sub(1)).step_by(2) {
                w.push(entangler(rng, q));
            }
        }
    }
    let blocks = if w.is_empty() { vec![Block::encoding(enc)] } else { vec![Block::encoding(enc), Block::trainable(w)] };
    let arch = if blocks.len() == 1 { Architecture::Alternating } else { Architecture::EncodingFirst };
    CircuitIR::new(n, arch, blocks, obs, InitialState::Zero)
}

fn random_clifford(n: usize, rng: &mut ChaCha8Rng) -> Gate {
    let q = rng.random_range(0..n);
    match (rng.random_range(0..4), n > 1) {
        (0, _) | (2, false) | (3, false) => Gate::h(q),
        (1, _) => Gate::s(q),
        (2, true) => {
            let a = rng.random_range(0..n - 1);
            Gate::cnot(a, a + 1)
        }
        _ => {
            let a = rng.random_range(0..n - 1);
            Gate::cz(a, a + 1)
        }
    }
}

/// Random single-qubit states, multiplied out little-endian.
fn random_product_state(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let mut amps = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..n {
        let polar = rng.random_range(0.0..PI);
        let azimuth = rng.random_range(-PI..PI);
        let (a0, a1) = (Complex64::new((polar / 2.0).cos(), 0.0), Complex64::from_polar((polar / 2.0).sin(), azimuth));
        amps = [a0, a1].iter().flat_map(|b| amps.iter().map(move |a| a * b)).collect();
    }
    amps
}

/// Binary encoding followed by a Clifford block carrying `t` trainable
/// rotations (`Rx` and `Rz` at random) at random positions. The circuit
/// starts from a random product state so that the propagated Paulis have
/// generic expectations.
pub fn low_doping(n: usize, cliffords: usize, t: usize, rng: &mut ChaCha8Rng, obs: WeightedPauliSum) -> Result<CircuitIR> {
    if n > oracle::DEFAULT_CAPACITY {
        return Err(Error::Config(format!("low-doping circuits start from a dense state; n ≤ {}", oracle::DEFAULT_CAPACITY)));
    }
    let start = random_product_state(n, rng);
    let enc: Vec<Gate> = (0..n).map(|q| Gate::enc_rz(q, q)).collect();
    let mut w: Vec<Gate> = (0..cliffords).map(|_| random_clifford(n, rng)).collect();
    for slot in 0..t {
        let at = rng.random_range(0..=w.len());
        let q = rng.random_range(0..n);
        w.insert(at, if rng.random_bool(0.5) { Gate::rx(q, slot) } else { Gate::rz(q, slot) });
    }
    CircuitIR::new(n, Architecture::EncodingFirst, vec![Block::encoding(enc), Block::trainable(w)], obs, InitialState::Dense(start))
}

fn deep_trainable(n: usize, layers: usize, rng: &mut ChaCha8Rng) -> Vec<Gate> {
    let mut w = Vec::new();
    let mut slot = 0;
    for l in 0..layers {
        for q in 0..n {
            w.push(Gate::rx(q, slot));
            w.push(Gate::rz(q, slot + 1));
            slot += 2;
        }
        for q in (l % 2..n.saturating_sub(1)).step_by(2) {
            w.push(entangler(rng, q));
        }
    }
    w
}

/// Deep trainable block followed by a binary encoding block made of
/// Clifford gates and `t` T gates.
pub fn flipped(n: usize, layers: usize, cliffords: usize, t: usize, rng: &mut ChaCha8Rng, obs: WeightedPauliSum) -> Result<CircuitIR> {
    let w = deep_trainable(n, layers, rng);
    let mut e: Vec<Gate> = (0..n).map(Gate::h).chain((0..n).map(|q| Gate::enc_rz(q, q))).collect();
    let mut tail: Vec<Gate> = (0..cliffords).map(|_| random_clifford(n, rng)).collect();
    for _ in 0..t {
        let at = rng.random_range(0..=tail.len());
        tail.insert(at, Gate::t(rng.random_range(0..n)));
    }
    e.extend(tail);
    CircuitIR::new(n, Architecture::Flipped, vec![Block::trainable(w), Block::encoding(e)], obs, InitialState::Zero)
}

fn matchgate_layer(n: usize, l: usize, slot: &mut usize, out: &mut Vec<Gate>) {
    for q in (l % 2..n.saturating_sub(1)).step_by(2) {
        out.push(Gate::givens(q, q + 1, *slot));
        out.push(Gate::rxx(q, q + 1, *slot + 1));
        *slot += 2;
    }
    for q in 0..n {
        out.push(Gate::rz(q, *slot));
        *slot += 1;
    }
}

/// Nearest-neighbour matchgate circuit: trainable layers, an `S(x_q)` on
/// every qubit, then trainable layers again.
pub fn matchgate(n: usize, layers: usize, _rng: &mut ChaCha8Rng, obs: WeightedPauliSum) -> Result<CircuitIR> {
    if n < 2 {
        return Err(Error::Config("matchgate circuits need n ≥ 2".into()));
    }
    let mut slot = 0;
    let (mut pre, mut post) = (Vec::new(), Vec::new());
    for l in 0..layers.max(1) {
        matchgate_layer(n, l, &mut slot, &mut pre);
        matchgate_layer(n, l, &mut slot, &mut post);
    }
    let enc: Vec<Gate> = (0..n).map(|q| Gate::enc_rz(q, q)).collect();
    CircuitIR::new(
        n,
        Architecture::Alternating,
        vec![Block::trainable(pre), Block::encoding(enc), Block::trainable(post)],
        obs,
        InitialState::Zero,
    )
}

/// Generic deep trainable block followed by a matchgate encoding block.
pub fn matchgate_flipped(n: usize, layers: usize, rng: &mut ChaCha8Rng, obs: WeightedPauliSum) -> Result<CircuitIR> {
    if n < 2 {
        return Err(Error::Config("matchgate circuits need n ≥ 2".into()));
    }
    let w = deep_trainable(n, layers, rng);
    let mut e = Vec::new();
    for l in 0..2 {
        for q in (l % 2..n - 1).step_by(2) {
            e.push(Gate::fixed(GateTag::Givens, &[q, q + 1], rng.random_range(-PI..PI)));
            e.push(Gate::fixed(GateTag::Rxx, &[q, q + 1], rng.random_range(-PI..PI)));
        }
        for q in 0..n {
            e.push(Gate::enc_rz(q, q));
        }
    }
    CircuitIR::new(n, Architecture::Flipped, vec![Block::trainable(w), Block::encoding(e)], obs, InitialState::Zero)
}

/// How labels of a synthetic task are produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    /// `teacher` (the circuit at random parameters) or `sparse-fourier`.
    pub generator: String,
    pub n_samples: usize,
    /// Standard deviation of Gaussian label noise.
    #[serde(default)]
    pub noise: f64,
    /// Draw binary inputs with replacement even when distinct ones suffice.
    #[serde(default)]
    pub replacement: bool,
    /// Number of basis functions of a `sparse-fourier` target.
    #[serde(default = "default_terms")]
    pub terms: usize,
}

fn default_terms() -> usize {
    4
}

/// What produced the labels, persisted alongside the dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Teacher {
    Circuit { theta: Vec<f64> },
    SparseFourier { terms: Vec<FourierTerm> },
}

/// `coefficient · T(x)`; `index` uses the surrogate basis notation with
/// one leg per input coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub index: String,
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedTask {
    pub set: TrainingSet,
    pub teacher: Teacher,
}

fn sample_inputs(d: usize, count: usize, domain: InputDomain, replacement: bool, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let bits = |b: u64| (0..d).map(|j| ((b >> j) & 1) as f64).collect::<Vec<_>>();
    match domain {
        InputDomain::Continuous => (0..count).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect(),
        InputDomain::Binary if !replacement && d < 64 && (count as u64) <= 1u64 << d => {
            if d <= 24 {
                let mut picked: Vec<usize> = index::sample(rng, 1usize << d, count).into_vec();
                picked.sort_unstable();
                picked.into_iter().map(|b| bits(b as u64)).collect()
            } else {
                let mut seen = BTreeSet::new();
                while seen.len() < count {
                    seen.insert(rng.random::<u64>() & ((1u64 << d) - 1));
                }
                seen.into_iter().map(bits).collect()
            }
        }
        InputDomain::Binary => (0..count).map(|_| (0..d).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }).collect()).collect(),
    }
}

fn fourier_value(index: BasisIndex, x: &[f64]) -> f64 {
    match index {
        BasisIndex::Parity(a) => {
            let ones = x.iter().enumerate().filter(|&(j, &v)| (a >> j) & 1 == 1 && v != 0.0).count();
            if ones % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }
        BasisIndex::Trig { cos, sin } => x
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                if (cos >> j) & 1 == 1 {
                    (PI * v).cos()
                } else if (sin >> j) & 1 == 1 {
                    (PI * v).sin()
                } else {
                    1.0
                }
            })
            .product(),
    }
}

/// Evaluates a persisted sparse-Fourier teacher.
pub fn fourier_teacher_value(terms: &[FourierTerm], x: &[f64]) -> Result<f64> {
    let mut v = 0.0;
    for t in terms {
        v += t.coefficient * fourier_value(t.index.parse()?, x);
    }
    Ok(v)
}

/// Draws a dataset for `c`'s inputs. Deterministic in `seed`.
pub fn generate_task(spec: &TaskSpec, c: &CircuitIR, domain: InputDomain, seed: u64) -> Result<GeneratedTask> {
    if spec.n_samples == 0 {
        return Err(Error::Config("n_samples must be positive".into()));
    }
    if !(spec.noise >= 0.0 && spec.noise.is_finite()) {
        return Err(Error::Config(format!("noise {} must be finite and non-negative", spec.noise)));
    }
    let d = c.num_inputs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::Config(e.to_string()))?;
    let (teacher, clean): (Teacher, Box<dyn Fn(&[Vec<f64>]) -> Result<Vec<f64>>>) = match spec.generator.as_str() {
        "teacher" => {
            let theta: Vec<f64> = (0..c.num_params()).map(|_| rng.random_range(-PI..PI)).collect();
            let t = theta.clone();
            let c = c.clone();
            (Teacher::Circuit { theta }, Box::new(move |xs| oracle::evaluate_many(&c, &t, xs)))
        }
        "sparse-fourier" => {
            if d > 64 {
                return Err(Error::Config("sparse-fourier targets support at most 64 inputs".into()));
            }
            let mask = if d == 64 { u64::MAX } else { (1u64 << d) - 1 };
            let scale = 1.0 / (spec.terms.max(1) as f64).sqrt();
            let std = Normal::new(0.0, 1.0).expect("unit normal");
            let mut seen = BTreeSet::new();
            let mut terms = Vec::new();
            for _ in 0..spec.terms {
                let index = match domain {
                    InputDomain::Binary => BasisIndex::Parity(rng.random::<u64>() & mask),
                    InputDomain::Continuous => {
                        let active = rng.random::<u64>() & mask;
                        let cos = rng.random::<u64>() & active;
                        BasisIndex::Trig { cos, sin: active & !cos }
                    }
                };
                if seen.insert(index) {
                    terms.push(FourierTerm { index: index.to_string(), coefficient: scale * std.sample(&mut rng) });
                }
            }
            let t = terms.clone();
            (Teacher::SparseFourier { terms }, Box::new(move |xs| xs.iter().map(|x| fourier_teacher_value(&t, x)).collect()))
        }
        other => return Err(Error::Config(format!("unknown task generator {other:?}"))),
    };
    let xs = sample_inputs(d, spec.n_samples, domain, spec.replacement, &mut rng);
    let ys = clean(&xs)?;
    let samples = xs
        .into_iter()
        .zip(ys)
        .map(|(x, y)| {
            let eps = if spec.noise > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            Sample { x, y: y + eps }
        })
        .collect();
    Ok(GeneratedTask { set: TrainingSet::new(samples, domain)?, teacher })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{assess, ClassifierConfig, Rule};

    fn spec(name: &str, n: usize) -> CircuitSpec {
        CircuitSpec { name: name.into(), n, depth: 4, t_count: 2, clifford_gates: None, observable: vec![] }
    }

    #[test]
    fn families_land_on_their_rules() {
        let cases = [
            ("brickwork", InputDomain::Continuous, Rule::Observation1),
            ("low-doping", InputDomain::Binary, Rule::Observation2),
            ("flipped", InputDomain::Binary, Rule::Observation3),
            ("matchgate", InputDomain::Continuous, Rule::Observation4a),
            ("matchgate-flipped", InputDomain::Continuous, Rule::Observation4b),
        ];
        for (name, domain, rule) in cases {
            let mut s = spec(name, 4);
            if name != "brickwork" {
                s.depth = 6;
            }
            let c = generate_circuit(&s, 3).unwrap();
            let a = assess(&c, &ClassifierConfig::with_domain(domain));
            assert_eq!(a.first(), rule, "{name}: {:?}", a.profile);
        }
    }

    #[test]
    fn brickwork_depth_is_exact() {
        for depth in 2..8 {
            let c = generate_circuit(&CircuitSpec { depth, ..spec("brickwork", 5) }, 1).unwrap();
            assert_eq!(crate::circuit::profile(&c).depth_total, depth);
        }
    }

    #[test]
    fn unknown_generators_are_configuration_errors() {
        assert!(matches!(generate_circuit(&spec("bogus", 3), 0), Err(Error::Config(_))));
        let c = generate_circuit(&spec("low-doping", 3), 0).unwrap();
        let t = TaskSpec { generator: "bogus".into(), n_samples: 4, noise: 0.0, replacement: false, terms: 4 };
        assert!(matches!(generate_task(&t, &c, InputDomain::Binary, 0), Err(Error::Config(_))));
    }

    #[test]
    fn noiseless_teacher_is_realizable() {
        let c = generate_circuit(&spec("low-doping", 4), 5).unwrap();
        let t = TaskSpec { generator: "teacher".into(), n_samples: 16, noise: 0.0, replacement: false, terms: 4 };
        let g = generate_task(&t, &c, InputDomain::Binary, 11).unwrap();
        let Teacher::Circuit { theta } = &g.teacher else { panic!() };
        let f = oracle::evaluate_many(&c, theta, &g.set.inputs()).unwrap();
        for (fi, s) in f.iter().zip(&g.set.samples) {
            assert_eq!(*fi, s.y);
        }
        // all of {0,1}^4, no duplicates
        let distinct: BTreeSet<Vec<u64>> = g.set.samples.iter().map(|s| s.x.iter().map(|v| v.to_bits()).collect()).collect();
        assert_eq!(distinct.len(), 16);
    }

    #[test]
    fn label_noise_has_the_requested_variance() {
        let c = generate_circuit(&spec("low-doping", 3), 2).unwrap();
        let sigma = 0.1;
        let t = TaskSpec { generator: "teacher".into(), n_samples: 1000, noise: sigma, replacement: true, terms: 4 };
        let g = generate_task(&t, &c, InputDomain::Binary, 4).unwrap();
        let Teacher::Circuit { theta } = &g.teacher else { panic!() };
        let clean = oracle::evaluate_many(&c, theta, &g.set.inputs()).unwrap();
        let r: Vec<f64> = g.set.samples.iter().zip(&clean).map(|(s, f)| s.y - f).collect();
        let var = r.iter().map(|e| e * e).sum::<f64>() / r.len() as f64;
        // the sample variance of N(0, σ²) has standard error σ²·sqrt(2/N)
        let se = sigma * sigma * (2.0 / r.len() as f64).sqrt();
        assert!((var - sigma * sigma).abs() < 3.0 * se, "{var}");
    }

    #[test]
    fn sparse_fourier_labels_match_their_terms() {
        let c = generate_circuit(&spec("brickwork", 3), 0).unwrap();
        let t = TaskSpec { generator: "sparse-fourier".into(), n_samples: 20, noise: 0.0, replacement: false, terms: 3 };
        let g = generate_task(&t, &c, InputDomain::Continuous, 8).unwrap();
        let Teacher::SparseFourier { terms } = &g.teacher else { panic!() };
        for s in &g.set.samples {
            assert_eq!(fourier_teacher_value(terms, &s.x).unwrap(), s.y);
        }
        assert_eq!(g, generate_task(&t, &c, InputDomain::Continuous, 8).unwrap());
    }
}
