//! `pqcs`: classify circuits, extract surrogates, train and verify.
//!
//! Exit status: 0 success, 2 tolerance violation or failed verification,
//! 3 configuration error, 1 any other failure.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pqc_surrogate::circuit::{assess, CircuitIR, ClassifierConfig, InputDomain};
use pqc_surrogate::erm::{build_quadratic, empirical_risk, solve_direct, solve_kernel, TrainingSet};
use pqc_surrogate::harness::{self, EngineChoice, ExperimentConfig, ReportFormat, RunReport};
use pqc_surrogate::io::atomic_write;
use pqc_surrogate::surrogate::{FeatureMap, FunctionSurrogate};
use pqc_surrogate::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

#[derive(Parser)]
#[command(name = "pqcs", version, about = "Classical surrogates for parametrized quantum circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Experiment configuration (TOML); repeat for a batch.
    #[arg(long = "config", value_name = "PATH")]
    configs: Vec<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// auto, mps, pauli_backprop or free_fermion.
    #[arg(long)]
    engine: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for batches.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Replaces every residual tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the resource profile and hypothesis class of a circuit.
    Classify {
        circuit: PathBuf,
        #[arg(long, default_value = "binary")]
        input_domain: String,
    },
    /// Extract a surrogate at fixed parameters and save it.
    Extract {
        circuit: PathBuf,
        /// Comma-separated parameters; drawn from --seed when absent.
        #[arg(long)]
        theta: Option<String>,
        #[arg(long, default_value = "binary")]
        input_domain: String,
        #[command(flatten)]
        o: Overrides,
    },
    /// Write the circuit and dataset a configuration describes.
    Generate {
        #[command(flatten)]
        o: Overrides,
    },
    /// Fit a linear model over a saved surrogate's features.
    Train {
        /// Surrogate path without extension.
        surrogate: PathBuf,
        dataset: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        ridge: f64,
        /// direct or kernel.
        #[arg(long, default_value = "direct")]
        solver: String,
        #[arg(long, default_value = "binary")]
        input_domain: String,
        #[command(flatten)]
        o: Overrides,
    },
    /// Recompute every number of a finished run from its artifacts.
    Verify {
        run_dir: PathBuf,
        #[command(flatten)]
        o: Overrides,
    },
    /// Time every admitted engine against the oracle on one circuit.
    Bench {
        circuit: PathBuf,
        #[arg(long, default_value_t = 256)]
        points: usize,
        #[arg(long, default_value = "binary")]
        input_domain: String,
        #[command(flatten)]
        o: Overrides,
    },
    /// Run configured experiments end to end.
    Run {
        /// json (single run), csv-summary or markdown.
        #[arg(long)]
        format: Option<String>,
        #[command(flatten)]
        o: Overrides,
    },
}

/// Outcome of a command that completed.
enum Status {
    Ok,
    Violation,
}

fn domain(s: &str) -> Result<InputDomain, Error> {
    match s {
        "binary" => Ok(InputDomain::Binary),
        "continuous" => Ok(InputDomain::Continuous),
        other => Err(Error::Config(format!("unknown input domain {other:?}"))),
    }
}

fn read_circuit(p: &Path) -> Result<CircuitIR, Error> {
    let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
    CircuitIR::from_json(&text)
}

fn load_configs(o: &Overrides) -> Result<Vec<ExperimentConfig>, Error> {
    if o.configs.is_empty() {
        return Err(Error::Config("no --config given".into()));
    }
    let engine = o.engine.as_deref().map(str::parse::<EngineChoice>).transpose()?;
    let batch = o.configs.len() > 1;
    let mut cfgs = Vec::new();
    for path in &o.configs {
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(s) = o.seed {
            cfg.seed = Some(s);
        }
        if let Some(e) = engine {
            cfg.engine = e;
        }
        if let Some(t) = o.tolerance {
            cfg.tolerances.surrogate = t;
            cfg.tolerances.reduction = t;
        }
        if let Some(out) = &o.out {
            let dir = if batch { out.join(cfg.name()) } else { out.clone() };
            cfg.out_dir = Some(std::path::absolute(dir)?);
        }
        cfgs.push(cfg);
    }
    Ok(cfgs)
}

fn print_json(v: &impl serde::Serialize) -> Result<(), Error> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn classify(circuit: &Path, input_domain: &str) -> Result<Status, Error> {
    let c = read_circuit(circuit)?;
    let a = assess(&c, &ClassifierConfig::with_domain(domain(input_domain)?));
    let l = a.label();
    print_json(&json!({
        "label": l.label,
        "justification": l.justification,
        "recommended_engine": l.recommended_engine,
        "matched": a.matched,
        "depth_budget": a.depth_budget,
        "t_budget": a.t_budget,
        "profile": a.profile,
    }))?;
    Ok(Status::Ok)
}

fn parse_theta(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Config(format!("theta entry {t:?}: {e}"))))
        .collect()
}

fn extract(circuit: &Path, theta: Option<&str>, input_domain: &str, o: &Overrides) -> Result<Status, Error> {
    let c = read_circuit(circuit)?;
    let theta = match (theta, o.seed) {
        (Some(t), _) => parse_theta(t)?,
        (None, Some(seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..c.num_params()).map(|_| rng.random_range(-PI..PI)).collect()
        }
        (None, None) => return Err(Error::Config("give --theta or --seed".into())),
    };
    let out = o.out.clone().ok_or_else(|| Error::Config("--out is required".into()))?;
    let mut cfg = ExperimentConfig::from_toml("", Path::new("."))?;
    cfg.input_domain = domain(input_domain)?;
    if let Some(e) = &o.engine {
        cfg.engine = e.parse()?;
    }
    let a = assess(&c, &cfg.classifier_config());
    let (engine, rule) = harness::choose_engine(&a, cfg.engine)?;
    let f = harness::extract_surrogate(&c, &theta, engine, rule, &cfg)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    f.save(&out)?;
    print_json(&json!({
        "engine": engine,
        "rule": rule,
        "kind": f.kind(),
        "basis": f.basis.to_string(),
        "terms": f.num_terms(),
        "bond_dims": f.bond_dims(),
        "theta": theta,
    }))?;
    Ok(Status::Ok)
}

fn generate(o: &Overrides) -> Result<Status, Error> {
    for cfg in load_configs(o)? {
        let inputs = harness::prepare_inputs(&cfg)?;
        let dir = cfg.resolve(cfg.out_dir.as_deref().unwrap_or(Path::new(".")));
        harness::write_inputs(&inputs, &dir)?;
        eprintln!("{}: {} samples, {} qubits -> {}", cfg.name(), inputs.set.len(), inputs.circuit.n, dir.display());
    }
    Ok(Status::Ok)
}

fn train(surrogate: &Path, dataset: &Path, ridge: f64, solver: &str, input_domain: &str, o: &Overrides) -> Result<Status, Error> {
    let f = FunctionSurrogate::load(surrogate)?;
    let s = TrainingSet::load(dataset, domain(input_domain)?)?;
    let sol = match solver {
        "direct" => solve_direct(&build_quadratic(&f, &s)?, ridge)?,
        "kernel" => solve_kernel(&f, &s, ridge)?,
        other => return Err(Error::Config(format!("unknown solver {other:?} (direct, kernel)"))),
    };
    let risk = empirical_risk(&s, |x| sol.predict(&f, x))?;
    if let Some(out) = &o.out {
        std::fs::create_dir_all(out)?;
        atomic_write(&out.join("solution.json"), serde_json::to_string_pretty(&sol)?.as_bytes())?;
    }
    print_json(&json!({ "features": f.dim(), "risk": risk, "degenerate": sol.degenerate, "solver": sol.solver }))?;
    Ok(Status::Ok)
}

fn verify(run_dir: &Path, o: &Overrides) -> Result<Status, Error> {
    let v = harness::verify_run(run_dir, o.tolerance)?;
    for r in &v.rows {
        println!("{:<32} {:>20.12e} {:>20.12e} {}", r.field, r.reported, r.recomputed, if r.agrees { "ok" } else { "MISMATCH" });
    }
    println!("within tolerance: {}", v.within_tolerance);
    Ok(if v.all_agree && v.within_tolerance { Status::Ok } else { Status::Violation })
}

fn bench(circuit: &Path, points: usize, input_domain: &str, o: &Overrides) -> Result<Status, Error> {
    let c = read_circuit(circuit)?;
    let mut cfg = ExperimentConfig::from_toml("", Path::new("."))?;
    cfg.seed = o.seed;
    cfg.input_domain = domain(input_domain)?;
    let rows = harness::bench(&c, &cfg, points)?;
    println!("engine,rule,extract_ms,evaluate_ms,points,max_error");
    for r in rows {
        let engine = serde_json::to_value(r.engine)?;
        let rule = r.rule.map(|x| format!("{x:?}")).unwrap_or_default();
        println!("{},{rule},{:.3},{:.3},{},{:.3e}", engine.as_str().unwrap_or(""), r.extract_ms, r.evaluate_ms, r.points, r.max_error);
    }
    Ok(Status::Ok)
}

fn run(format: Option<&str>, o: &Overrides) -> Result<Status, Error> {
    let cfgs = load_configs(o)?;
    let results = harness::run_batch(&cfgs, o.jobs)?;
    let mut reports: Vec<RunReport> = Vec::new();
    let mut first_err = None;
    for (cfg, r) in cfgs.iter().zip(results) {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => {
                if cfgs.len() > 1 {
                    eprintln!("error: {}: {e}", cfg.name());
                }
                first_err.get_or_insert(e);
            }
        }
    }
    let format: ReportFormat = match format {
        Some(f) => f.parse()?,
        None if reports.len() == 1 => ReportFormat::Json,
        None => ReportFormat::CsvSummary,
    };
    if cfgs.len() > 1 {
        if let Some(out) = &o.out {
            harness::emit_report(&reports, ReportFormat::CsvSummary, &out.join("summary.csv"))?;
            harness::emit_report(&reports, ReportFormat::Markdown, &out.join("summary.md"))?;
        }
    }
    if !reports.is_empty() {
        print!("{}", harness::render(&reports, format)?);
        if format == ReportFormat::Json {
            println!();
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }
    Ok(if reports.iter().all(|r| r.within_tolerance) { Status::Ok } else { Status::Violation })
}

fn dispatch(cmd: Command) -> Result<Status, Error> {
    match cmd {
        Command::Classify { circuit, input_domain } => classify(&circuit, &input_domain),
        Command::Extract { circuit, theta, input_domain, o } => extract(&circuit, theta.as_deref(), &input_domain, &o),
        Command::Generate { o } => generate(&o),
        Command::Train { surrogate, dataset, ridge, solver, input_domain, o } => train(&surrogate, &dataset, ridge, &solver, &input_domain, &o),
        Command::Verify { run_dir, o } => verify(&run_dir, &o),
        Command::Bench { circuit, points, input_domain, o } => bench(&circuit, points, &input_domain, &o),
        Command::Run { format, o } => run(format.as_deref(), &o),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(3);
        }
    };
    match dispatch(cli.command) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Violation) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Config(_)) { 3 } else { 1 })
        }
    }
}
