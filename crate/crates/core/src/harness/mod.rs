//! End-to-end experiment runner: classify, extract, train, verify.
//!
//! A run reads one TOML configuration and writes its artifacts into an
//! output directory:
//!
//! | file | content |
//! |---|---|
//! | `config.toml` | effective configuration |
//! | `circuit.json` | the circuit |
//! | `dataset.csv` | training samples |
//! | `teacher.json` | label generator, for synthetic tasks |
//! | `restricted.json` | parameter-optimizer result |
//! | `surrogate.json`, `surrogate.bin` | extracted surrogate |
//! | `solution.json` | convex solution over the surrogate features |
//! | `report.json` | [`RunReport`] |
//!
//! Configuration keys:
//!
//! ```toml
//! name = "demo"              # optional, defaults to the file stem
//! seed = 7                   # required when anything is drawn at random
//! engine = "auto"            # auto | mps | pauli_backprop | free_fermion
//! input_domain = "binary"    # binary | continuous
//! out_dir = "runs/demo"      # relative to the configuration file
//! circuit = "circuit.json"   # or a [circuit_generator] table
//! dataset = "data.csv"       # or a [task] table
//!
//! [circuit_generator]        # see CircuitSpec
//! name = "low-doping"
//! n = 4
//!
//! [task]                     # see TaskSpec
//! generator = "teacher"
//! n_samples = 16
//!
//! [classifier]               # c_depth, c_t, depth_floor, t_floor
//! [solver]                   # ridge, method (auto | direct | kernel), max_features
//! [optimizer]                # method, max_iters, step, fd_step, tol, initial
//! [limits]                   # max_chi, svd_tol, term_cap
//! [tolerances]               # surrogate, reduction
//! ```

mod generate;
mod report;

pub use generate::{
    brickwork, flipped, fourier_teacher_value, generate_circuit, generate_task, low_doping, matchgate, matchgate_flipped, CircuitSpec,
    FourierTerm, GeneratedTask, ObservableSpec, TaskSpec, Teacher,
};
pub use report::{
    emit_report, render, Artifacts, ClassificationSection, ReportFormat, Residuals, Risks, RunReport, SurrogateSection, Tolerances,
    REPORT_SCHEMA_VERSION, SUMMARY_COLUMNS,
};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backprop::{backprop_surrogate, flipped_surrogate, BackpropOptions, DEFAULT_TERM_CAP};
use crate::circuit::{assess, Assessment, ClassifierConfig, Engine, Rule};
use crate::circuit::{Architecture, CircuitIR, InputDomain};
use crate::erm::{
    build_quadratic, empirical_risk, restricted_optimize, solve_direct, solve_kernel, verify_reduction, ErmSolution, OptimizerConfig,
    RestrictedResult, Solver, TrainingSet,
};
use crate::error::{Error, Result};
use crate::fermion::{fermion_flipped_surrogate, fermion_surrogate};
use crate::io::atomic_write;
use crate::oracle;
use crate::surrogate::{CoefficientSource, FeatureMap, FunctionSurrogate};
use crate::tensor::{extract_function_mps, ExtractOptions, DEFAULT_MAX_CHI};

/// Largest doubled-state register checked by the reduction residual.
const REDUCTION_MAX_QUBITS: usize = 6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineChoice {
    #[default]
    Auto,
    Mps,
    PauliBackprop,
    FreeFermion,
}

impl EngineChoice {
    fn engine(self) -> Option<Engine> {
        match self {
            EngineChoice::Auto => None,
            EngineChoice::Mps => Some(Engine::Mps),
            EngineChoice::PauliBackprop => Some(Engine::PauliBackprop),
            EngineChoice::FreeFermion => Some(Engine::FreeFermion),
        }
    }
}

impl std::str::FromStr for EngineChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<EngineChoice> {
        match s {
            "auto" => Ok(EngineChoice::Auto),
            "mps" => Ok(EngineChoice::Mps),
            "pauli_backprop" | "pauli-backprop" => Ok(EngineChoice::PauliBackprop),
            "free_fermion" | "free-fermion" => Ok(EngineChoice::FreeFermion),
            other => Err(Error::Config(format!("unknown engine {other:?} (auto, mps, pauli_backprop, free_fermion)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSettings {
    pub c_depth: f64,
    pub c_t: f64,
    pub depth_floor: usize,
    pub t_floor: usize,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        let d = ClassifierConfig::default();
        ClassifierSettings { c_depth: d.c_depth, c_t: d.c_t, depth_floor: d.depth_floor, t_floor: d.t_floor }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    /// Kernel dual when there are more features than samples.
    #[default]
    Auto,
    Direct,
    Kernel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub ridge: f64,
    pub method: SolverMethod,
    /// Convex training is skipped above this many features.
    pub max_features: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { ridge: 0.0, method: SolverMethod::Auto, max_features: 4096 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    pub max_chi: usize,
    pub svd_tol: f64,
    pub term_cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_chi: DEFAULT_MAX_CHI, svd_tol: 0.0, term_cap: DEFAULT_TERM_CAP }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub engine: EngineChoice,
    #[serde(default)]
    pub input_domain: InputDomain,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub circuit: Option<PathBuf>,
    #[serde(default)]
    pub circuit_generator: Option<CircuitSpec>,
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub task: Option<TaskSpec>,
    #[serde(default)]
    pub classifier: ClassifierSettings,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub limits: Limits,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    /// Reads a configuration; relative paths resolve against its directory
    /// and the name defaults to the file stem.
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut cfg = ExperimentConfig::from_toml(&text, &base)?;
        if cfg.name.is_none() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| "run".into())
    }

    pub fn classifier_config(&self) -> ClassifierConfig {
        let s = &self.classifier;
        ClassifierConfig { c_depth: s.c_depth, c_t: s.c_t, depth_floor: s.depth_floor, t_floor: s.t_floor, input_domain: self.input_domain }
    }

    fn randomized(&self) -> bool {
        self.circuit_generator.is_some() || self.task.is_some() || self.optimizer.initial.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        if self.randomized() && self.seed.is_none() {
            return Err(Error::Config("a seed is required: generators or random initial parameters are in use".into()));
        }
        match (&self.circuit, &self.circuit_generator) {
            (Some(_), Some(_)) => return Err(Error::Config("give either circuit or circuit_generator, not both".into())),
            (None, None) => return Err(Error::Config("no circuit: set circuit or circuit_generator".into())),
            (Some(p), None) if !self.resolve(p).is_file() => {
                return Err(Error::Config(format!("circuit file {} does not exist", self.resolve(p).display())))
            }
            _ => {}
        }
        match (&self.dataset, &self.task) {
            (Some(_), Some(_)) => return Err(Error::Config("give either dataset or task, not both".into())),
            (None, None) => return Err(Error::Config("no data: set dataset or task".into())),
            (Some(p), None) if !self.resolve(p).is_file() => {
                return Err(Error::Config(format!("dataset file {} does not exist", self.resolve(p).display())))
            }
            _ => {}
        }
        if self.out_dir.is_none() {
            return Err(Error::Config("out_dir is not set".into()));
        }
        let t = &self.tolerances;
        if !(t.surrogate >= 0.0 && t.reduction >= 0.0) {
            return Err(Error::Config("tolerances must be non-negative".into()));
        }
        Ok(())
    }

    /// SHA-256 of the configuration, ignoring where outputs go.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.out_dir = None;
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(&c)?)))
    }

    /// Independent seed for one pipeline stage.
    fn stage_seed(&self, stage: u64) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.unwrap_or(0));
        rng.set_stream(stage);
        rng.next_u64()
    }

    fn out(&self) -> PathBuf {
        self.resolve(self.out_dir.as_deref().unwrap_or(Path::new(".")))
    }
}

/// Circuit, dataset and (for synthetic tasks) the label generator.
#[derive(Clone, Debug, PartialEq)]
pub struct Inputs {
    pub circuit: CircuitIR,
    pub set: TrainingSet,
    pub teacher: Option<Teacher>,
}

/// Loads or generates the circuit and the dataset.
pub fn prepare_inputs(cfg: &ExperimentConfig) -> Result<Inputs> {
    cfg.validate()?;
    let circuit = match (&cfg.circuit, &cfg.circuit_generator) {
        (Some(p), _) => CircuitIR::from_json(&std::fs::read_to_string(cfg.resolve(p))?)?,
        (None, Some(spec)) => generate_circuit(spec, cfg.stage_seed(1))?,
        (None, None) => unreachable!("validated"),
    };
    let (set, teacher) = match (&cfg.dataset, &cfg.task) {
        (Some(p), _) => (TrainingSet::load(&cfg.resolve(p), cfg.input_domain)?, None),
        (None, Some(spec)) => {
            let g = generate_task(spec, &circuit, cfg.input_domain, cfg.stage_seed(2))?;
            (g.set, Some(g.teacher))
        }
        (None, None) => unreachable!("validated"),
    };
    if set.dim() != circuit.num_inputs() {
        return Err(Error::Config(format!("dataset has {} inputs, circuit reads {}", set.dim(), circuit.num_inputs())));
    }
    Ok(Inputs { circuit, set, teacher })
}

/// Writes circuit, dataset and teacher into `dir`.
pub fn write_inputs(inputs: &Inputs, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    atomic_write(&dir.join("circuit.json"), inputs.circuit.to_json()?.as_bytes())?;
    let mut csv = Vec::new();
    inputs.set.write_csv(&mut csv)?;
    atomic_write(&dir.join("dataset.csv"), &csv)?;
    if let Some(t) = &inputs.teacher {
        atomic_write(&dir.join("teacher.json"), serde_json::to_string_pretty(t)?.as_bytes())?;
    }
    Ok(())
}

/// Picks the engine and the rule it relies on. An override the classifier
/// does not admit is a configuration error.
pub fn choose_engine(a: &Assessment, choice: EngineChoice) -> Result<(Engine, Rule)> {
    match choice.engine() {
        None => {
            let r = a.first();
            Ok((r.engine(), r))
        }
        Some(e) => match a.admits(e) {
            Some(r) => Ok((e, r)),
            None => {
                let l = a.label();
                Err(Error::Config(format!(
                    "engine {e:?} is not admitted for this circuit; classifier: {:?} by {:?} (depth {} of {}, T-count {} of {}), recommends {:?}",
                    l.label,
                    l.justification,
                    a.profile.depth_total,
                    a.depth_budget,
                    a.profile.t_count(),
                    a.t_budget,
                    l.recommended_engine
                )))
            }
        },
    }
}

/// Surrogate of `c` at `theta` by the given engine and rule.
pub fn extract_surrogate(c: &CircuitIR, theta: &[f64], engine: Engine, rule: Rule, cfg: &ExperimentConfig) -> Result<FunctionSurrogate> {
    let bp = BackpropOptions { input_domain: cfg.input_domain, term_cap: cfg.limits.term_cap };
    match (engine, rule) {
        (Engine::Mps, _) => {
            let opts = ExtractOptions { max_chi: cfg.limits.max_chi, svd_tol: cfg.limits.svd_tol, classifier: cfg.classifier_config(), require_shallow: true };
            Ok(extract_function_mps(c, theta, &opts)?.surrogate)
        }
        (Engine::PauliBackprop, Rule::Observation3) => flipped_surrogate(c, theta, CoefficientSource::Oracle, &bp),
        (Engine::PauliBackprop, _) => backprop_surrogate(c, theta, &bp),
        (Engine::FreeFermion, Rule::Observation4b) => fermion_flipped_surrogate(c, theta, CoefficientSource::Oracle),
        (Engine::FreeFermion, _) => fermion_surrogate(c, theta),
        (Engine::None, _) => Err(Error::Classification("no engine applies".into())),
    }
}

/// `(1/N) Σ (f_θ(x_i) − y_i)²` through the batched oracle, summed in sample order.
pub fn oracle_risk(c: &CircuitIR, theta: &[f64], s: &TrainingSet) -> Result<f64> {
    let f = oracle::evaluate_many(c, theta, &s.inputs())?;
    Ok(f.iter().zip(&s.labels()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / s.len() as f64)
}

/// Risk of a point-by-point oracle evaluation, independent of the batched path.
fn pointwise_oracle_risk(c: &CircuitIR, theta: &[f64], s: &TrainingSet) -> Result<f64> {
    empirical_risk(s, |x| oracle::expectation(c, x, theta))
}

fn teacher_risk(t: &Teacher, c: &CircuitIR, s: &TrainingSet) -> Result<f64> {
    match t {
        Teacher::Circuit { theta } => oracle_risk(c, theta, s),
        Teacher::SparseFourier { terms } => empirical_risk(s, |x| fourier_teacher_value(terms, x)),
    }
}

fn surrogate_residual(f: &FunctionSurrogate, c: &CircuitIR, theta: &[f64], s: &TrainingSet) -> Result<f64> {
    let xs = s.inputs();
    let exact = oracle::evaluate_many(c, theta, &xs)?;
    let mut worst = 0.0f64;
    for (x, e) in xs.iter().zip(exact) {
        worst = worst.max((f.evaluate(x)? - e).abs());
    }
    Ok(worst)
}

fn reduction_residual(c: &CircuitIR, theta: &[f64], s: &TrainingSet, domain: InputDomain, term_cap: usize) -> Result<Option<f64>> {
    if c.architecture != Architecture::Flipped || c.n > REDUCTION_MAX_QUBITS {
        return Ok(None);
    }
    let opts = BackpropOptions { input_domain: domain, term_cap };
    Ok(Some(verify_reduction(c, s, &[theta.to_vec()], &opts)?.max_discrepancy))
}

fn solve_convex(f: &FunctionSurrogate, s: &TrainingSet, settings: &SolverSettings) -> Result<ErmSolution> {
    if f.dim() == 0 {
        // the surrogate is identically zero; so is the only model in its span
        let risk = s.labels().iter().map(|y| y * y).sum::<f64>() / s.len() as f64;
        return Ok(ErmSolution { coefficients: vec![], risk, solver: Solver::Direct, ridge: settings.ridge, dual_alphas: None, degenerate: false });
    }
    let kernel = match settings.method {
        SolverMethod::Direct => false,
        SolverMethod::Kernel => true,
        SolverMethod::Auto => f.dim() > s.len(),
    };
    if kernel {
        solve_kernel(f, s, settings.ridge)
    } else {
        solve_direct(&build_quadratic(f, s)?, settings.ridge)
    }
}

fn convex_risk(sol: &ErmSolution, f: &FunctionSurrogate, s: &TrainingSet) -> Result<f64> {
    empirical_risk(s, |x| sol.predict(f, x))
}

fn ms(t: Instant) -> f64 {
    (t.elapsed().as_secs_f64() * 1e6).round() / 1e3
}

/// Runs the whole pipeline and persists every artifact in the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let t_total = Instant::now();
    let mut timings = BTreeMap::new();
    let mut notes = Vec::new();
    let t = Instant::now();
    let inputs = prepare_inputs(cfg)?;
    let config_hash = cfg.hash()?;
    let Inputs { circuit: c, set: s, teacher } = &inputs;
    let dir = cfg.out();
    write_inputs(&inputs, &dir)?;
    atomic_write(&dir.join("config.toml"), cfg.to_toml()?.as_bytes())?;
    timings.insert("prepare".to_string(), ms(t));

    let t = Instant::now();
    let assessment = assess(c, &cfg.classifier_config());
    let (engine, rule) = choose_engine(&assessment, cfg.engine)?;
    timings.insert("classify".to_string(), ms(t));

    let t = Instant::now();
    let restricted = restricted_optimize(c, s, &cfg.optimizer, cfg.stage_seed(3))?;
    atomic_write(&dir.join("restricted.json"), serde_json::to_string_pretty(&restricted)?.as_bytes())?;
    if !restricted.converged {
        notes.push(format!("parameter optimizer stopped after {} iterations without converging", restricted.iterations));
    }
    timings.insert("restricted".to_string(), ms(t));
    let theta = &restricted.theta;

    let mut surrogate_section = None;
    let mut convex = None;
    let mut surrogate_vs_oracle = None;
    let mut artifacts = Artifacts {
        circuit: "circuit.json".into(),
        dataset: "dataset.csv".into(),
        restricted: "restricted.json".into(),
        teacher: teacher.as_ref().map(|_| "teacher.json".into()),
        surrogate: None,
        solution: None,
    };
    if engine != Engine::None {
        let t = Instant::now();
        let f = extract_surrogate(c, theta, engine, rule, cfg)?;
        f.save(&dir.join("surrogate"))?;
        artifacts.surrogate = Some("surrogate".into());
        timings.insert("extract".to_string(), ms(t));
        surrogate_section = Some(SurrogateSection {
            kind: f.kind().into(),
            basis: f.basis.to_string(),
            term_count: f.num_terms(),
            feature_dim: f.dim(),
            bond_dims: f.bond_dims(),
        });

        let t = Instant::now();
        if f.dim() <= cfg.solver.max_features {
            let sol = solve_convex(&f, s, &cfg.solver)?;
            atomic_write(&dir.join("solution.json"), serde_json::to_string_pretty(&sol)?.as_bytes())?;
            artifacts.solution = Some("solution.json".into());
            if sol.degenerate {
                notes.push("convex system was singular; minimum-norm solution taken".into());
            }
            convex = Some(convex_risk(&sol, &f, s)?);
        } else {
            notes.push(format!("convex training skipped: {} features exceed {}", f.dim(), cfg.solver.max_features));
        }
        timings.insert("convex".to_string(), ms(t));

        let t = Instant::now();
        surrogate_vs_oracle = Some(surrogate_residual(&f, c, theta, s)?);
        timings.insert("verify_surrogate".to_string(), ms(t));
    }

    let t = Instant::now();
    let oracle = pointwise_oracle_risk(c, theta, s)?;
    let teacher_r = teacher.as_ref().map(|tch| teacher_risk(tch, c, s)).transpose()?;
    let reduction = reduction_residual(c, theta, s, cfg.input_domain, cfg.limits.term_cap)?;
    timings.insert("verify_risks".to_string(), ms(t));

    let tol = &cfg.tolerances;
    let within_tolerance = surrogate_vs_oracle.is_none_or(|r| r <= tol.surrogate) && reduction.is_none_or(|r| r <= tol.reduction);
    let label = assessment.label();
    timings.insert("total".to_string(), ms(t_total));
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        name: cfg.name(),
        config_hash,
        seed: cfg.seed,
        input_domain: cfg.input_domain,
        n_qubits: c.n,
        n_samples: s.len(),
        classification: ClassificationSection {
            label: label.label,
            justification: label.justification,
            recommended_engine: label.recommended_engine,
            matched: assessment.matched.clone(),
            engine_used: engine,
            depth_total: assessment.profile.depth_total,
            depth_budget: assessment.depth_budget,
            t_count: assessment.profile.t_count(),
            t_budget: assessment.t_budget,
        },
        surrogate: surrogate_section,
        risks: Risks { convex, restricted: restricted.risk, oracle, teacher: teacher_r },
        residuals: Residuals { surrogate_vs_oracle, reduction },
        tolerances: tol.clone(),
        within_tolerance,
        artifacts,
        notes,
        timings_ms: timings,
    };
    atomic_write(&dir.join("report.json"), report.to_json()?.as_bytes())?;
    Ok(report)
}

/// Runs independent experiments on a pool of `jobs` threads; results keep
/// the input order.
pub fn run_batch(cfgs: &[ExperimentConfig], jobs: usize) -> Result<Vec<Result<RunReport>>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(|| cfgs.par_iter().map(run_experiment).collect()))
}

/// One reported number against its recomputation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub field: String,
    pub reported: f64,
    pub recomputed: f64,
    /// Equal when both are printed as `{:.12e}`.
    pub agrees: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub rows: Vec<VerifyRow>,
    pub all_agree: bool,
    pub within_tolerance: bool,
}

fn row(field: &str, reported: f64, recomputed: f64) -> VerifyRow {
    VerifyRow { field: field.into(), reported, recomputed, agrees: format!("{reported:.12e}") == format!("{recomputed:.12e}") }
}

/// Recomputes every reported number of a run from its directory.
/// `tolerance`, when given, replaces both stored residual tolerances.
pub fn verify_run(dir: &Path, tolerance: Option<f64>) -> Result<VerifyOutcome> {
    let report = RunReport::from_json(&std::fs::read_to_string(dir.join("report.json"))?)?;
    let a = &report.artifacts;
    let c = CircuitIR::from_json(&std::fs::read_to_string(dir.join(&a.circuit))?)?;
    let s = TrainingSet::load(&dir.join(&a.dataset), report.input_domain)?;
    let restricted: RestrictedResult = serde_json::from_str(&std::fs::read_to_string(dir.join(&a.restricted))?)?;
    let theta = &restricted.theta;
    let cfg_text = std::fs::read_to_string(dir.join("config.toml")).unwrap_or_default();
    let term_cap = ExperimentConfig::from_toml(&cfg_text, dir).map(|c| c.limits.term_cap).unwrap_or(DEFAULT_TERM_CAP);

    let mut rows = vec![
        row("risks.restricted", report.risks.restricted, oracle_risk(&c, theta, &s)?),
        row("risks.oracle", report.risks.oracle, pointwise_oracle_risk(&c, theta, &s)?),
    ];
    if let (Some(name), Some(v)) = (&a.teacher, report.risks.teacher) {
        let t: Teacher = serde_json::from_str(&std::fs::read_to_string(dir.join(name))?)?;
        rows.push(row("risks.teacher", v, teacher_risk(&t, &c, &s)?));
    }
    let surrogate = a.surrogate.as_ref().map(|stem| FunctionSurrogate::load(&dir.join(stem))).transpose()?;
    if let (Some(f), Some(v)) = (&surrogate, report.residuals.surrogate_vs_oracle) {
        rows.push(row("residuals.surrogate_vs_oracle", v, surrogate_residual(f, &c, theta, &s)?));
    }
    if let (Some(f), Some(name), Some(v)) = (&surrogate, &a.solution, report.risks.convex) {
        let sol: ErmSolution = serde_json::from_str(&std::fs::read_to_string(dir.join(name))?)?;
        rows.push(row("risks.convex", v, convex_risk(&sol, f, &s)?));
    }
    if let Some(v) = report.residuals.reduction {
        let r = reduction_residual(&c, theta, &s, report.input_domain, term_cap)?
            .ok_or_else(|| Error::Validation("report carries a reduction residual the circuit does not admit".into()))?;
        rows.push(row("residuals.reduction", v, r));
    }
    let tol_s = tolerance.unwrap_or(report.tolerances.surrogate);
    let tol_r = tolerance.unwrap_or(report.tolerances.reduction);
    let within_tolerance = report.residuals.surrogate_vs_oracle.is_none_or(|r| r <= tol_s) && report.residuals.reduction.is_none_or(|r| r <= tol_r);
    let all_agree = rows.iter().all(|r| r.agrees);
    Ok(VerifyOutcome { rows, all_agree, within_tolerance })
}

/// Timing and accuracy of every admitted engine on one circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub engine: Engine,
    pub rule: Option<Rule>,
    pub extract_ms: f64,
    pub evaluate_ms: f64,
    pub points: usize,
    pub max_error: f64,
}

/// Compares every engine the classifier admits against the oracle on
/// `points` random inputs (the full grid for small binary inputs).
pub fn bench(c: &CircuitIR, cfg: &ExperimentConfig, points: usize) -> Result<Vec<BenchRow>> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.stage_seed(4));
    let theta: Vec<f64> = (0..c.num_params()).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
    let d = c.num_inputs();
    let grid: Vec<Vec<f64>> = match cfg.input_domain {
        InputDomain::Binary if d <= 12 => oracle::binary_grid(d),
        InputDomain::Binary => (0..points).map(|_| (0..d).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }).collect()).collect(),
        InputDomain::Continuous => (0..points).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect(),
    };
    let t = Instant::now();
    let exact = oracle::evaluate_many(c, &theta, &grid)?;
    let mut rows = vec![BenchRow { engine: Engine::None, rule: None, extract_ms: 0.0, evaluate_ms: ms(t), points: grid.len(), max_error: 0.0 }];
    let assessment = assess(c, &cfg.classifier_config());
    for &rule in &assessment.matched {
        let t = Instant::now();
        let f = extract_surrogate(c, &theta, rule.engine(), rule, cfg)?;
        let extract_ms = ms(t);
        let t = Instant::now();
        let vals: Vec<f64> = grid.iter().map(|x| f.evaluate(x)).collect::<Result<_>>()?;
        let evaluate_ms = ms(t);
        let max_error = vals.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        rows.push(BenchRow { engine: rule.engine(), rule: Some(rule), extract_ms, evaluate_ms, points: grid.len(), max_error });
    }
    Ok(rows)
}
