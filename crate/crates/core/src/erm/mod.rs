//! Empirical risk minimization over surrogate features.
//!
//! With features `T_k` and labels `y_i`, the mean squared error of the linear
//! model `f = Σ_k C_k T_k` is the quadratic form
//! `Q(C) = Cᵀ M C − 2 Vᵀ C + Z` with `M = TᵀT/N`, `V = Tᵀy/N`, `Z = yᵀy/N`.
//! Losses are normalized by `1/N` throughout.

mod reduction;
mod restricted;

pub use reduction::{build_data_hamiltonian, verify_reduction, DataHamiltonian, ReductionReport, ReductionRow};
pub use restricted::{restricted_optimize, Method, OptimizerConfig, RestrictedResult};

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::InputDomain;
use crate::error::{Error, Result};
use crate::surrogate::{FeatureMap, FunctionSurrogate};

/// Ridge used by the kernel path when none is given.
pub const DEFAULT_KERNEL_RIDGE: f64 = 1e-10;
/// Relative eigenvalue floor of the pseudo-inverse.
const PINV_RTOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrainingSetFile")]
pub struct TrainingSet {
    pub input_domain: InputDomain,
    pub samples: Vec<Sample>,
}

#[derive(Deserialize)]
struct TrainingSetFile {
    #[serde(default)]
    input_domain: InputDomain,
    samples: Vec<Sample>,
}

impl TryFrom<TrainingSetFile> for TrainingSet {
    type Error = Error;

    fn try_from(f: TrainingSetFile) -> Result<TrainingSet> {
        TrainingSet::new(f.samples, f.input_domain)
    }
}

impl TrainingSet {
    pub fn new(samples: Vec<Sample>, input_domain: InputDomain) -> Result<TrainingSet> {
        let Some(first) = samples.first() else {
            return Err(Error::Validation("training set is empty".into()));
        };
        let d = first.x.len();
        for (i, s) in samples.iter().enumerate() {
            if s.x.len() != d {
                return Err(Error::Dimension(format!("sample {i} has {} inputs, sample 0 has {d}", s.x.len())));
            }
            if !s.y.is_finite() || s.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("sample {i} is not finite")));
            }
            if input_domain == InputDomain::Binary && s.x.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(Error::Domain(format!("sample {i} is not binary")));
            }
        }
        Ok(TrainingSet { input_domain, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].x.len()
    }

    pub fn inputs(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.x.clone()).collect()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.y).collect()
    }

    /// Columns `x_1 … x_d, y` with a header row.
    pub fn read_csv<R: Read>(r: R, input_domain: InputDomain) -> Result<TrainingSet> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers().map_err(csv_err)?.clone();
        if headers.iter().next_back() != Some("y") {
            return Err(Error::Parse("last CSV column must be named y".into()));
        }
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let vals = rec
                .iter()
                .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Parse(format!("CSV field {f:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let (y, x) = vals.split_last().ok_or_else(|| Error::Parse("empty CSV record".into()))?;
            samples.push(Sample { x: x.to_vec(), y: *y });
        }
        TrainingSet::new(samples, input_domain)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.dim()).map(|j| format!("x_{j}")).collect();
        header.push("y".into());
        wtr.write_record(&header).map_err(csv_err)?;
        for s in &self.samples {
            let row: Vec<String> = s.x.iter().chain(std::iter::once(&s.y)).map(|v| format!("{v:e}")).collect();
            wtr.write_record(&row).map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Loads `.csv` or `.json` by extension.
    pub fn load(path: &Path, input_domain: InputDomain) -> Result<TrainingSet> {
        let f = std::fs::File::open(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => TrainingSet::read_csv(f, input_domain),
            Some("json") => Ok(serde_json::from_reader(std::io::BufReader::new(f))?),
            _ => Err(Error::Config(format!("unknown training set format: {}", path.display()))),
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("CSV: {e}"))
}

/// Feature matrix `T[i, k] = T_k(x_i)`.
pub fn feature_matrix(basis: &dyn FeatureMap, xs: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let m = basis.dim();
    let rows: Vec<Vec<f64>> = xs.par_iter().map(|x| basis.features(x)).collect::<Result<_>>()?;
    let mut t = DMatrix::zeros(xs.len(), m);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != m {
            return Err(Error::Dimension(format!("basis returned {} features, declared {m}", r.len())));
        }
        if let Some(v) = r.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("basis evaluated to {v} at sample {i}")));
        }
        t.row_mut(i).copy_from_slice(r);
    }
    Ok(t)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    pub m: DMatrix<f64>,
    pub v: DVector<f64>,
    pub z: f64,
    pub n_samples: usize,
}

type Partial = (DMatrix<f64>, DVector<f64>, f64);

/// Sum over rows `lo..hi` by recursive halving, so the reduction tree
/// depends only on the sample count.
fn pairwise(t: &DMatrix<f64>, y: &[f64], lo: usize, hi: usize) -> Partial {
    const LEAF: usize = 16;
    if hi - lo <= LEAF {
        let m = t.ncols();
        let mut mm = DMatrix::zeros(m, m);
        let mut v = DVector::zeros(m);
        let mut z = 0.0;
        for i in lo..hi {
            let row = t.row(i).transpose();
            mm += &row * row.transpose();
            v += &row * y[i];
            z += y[i] * y[i];
        }
        return (mm, v, z);
    }
    let mid = lo + (hi - lo) / 2;
    let (a, b) = rayon::join(|| pairwise(t, y, lo, mid), || pairwise(t, y, mid, hi));
    (a.0 + b.0, a.1 + b.1, a.2 + b.2)
}

impl QuadraticForm {
    pub fn from_features(t: &DMatrix<f64>, y: &[f64]) -> Result<QuadraticForm> {
        if t.nrows() != y.len() || y.is_empty() {
            return Err(Error::Dimension(format!("{} feature rows for {} labels", t.nrows(), y.len())));
        }
        if t.ncols() == 0 {
            return Err(Error::Dimension("empty basis".into()));
        }
        let (mm, v, z) = pairwise(t, y, 0, y.len());
        let n = y.len() as f64;
        let mut mm = mm / n;
        // exact symmetry
        mm = (&mm + mm.transpose()) * 0.5;
        Ok(QuadraticForm { m: mm, v: v / n, z: z / n, n_samples: y.len() })
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// `Q(C) = Cᵀ M C − 2 Vᵀ C + Z`, clamped at zero against rounding.
    pub fn risk(&self, c: &[f64]) -> f64 {
        let c = DVector::from_column_slice(c);
        ((&self.m * &c).dot(&c) - 2.0 * self.v.dot(&c) + self.z).max(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.m.clone().symmetric_eigen().eigenvalues.min()
    }
}

pub fn build_quadratic(basis: &dyn FeatureMap, s: &TrainingSet) -> Result<QuadraticForm> {
    QuadraticForm::from_features(&feature_matrix(basis, &s.inputs())?, &s.labels())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    Direct,
    KernelDual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErmSolution {
    pub coefficients: Vec<f64>,
    pub risk: f64,
    pub solver: Solver,
    pub ridge: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_alphas: Option<Vec<f64>>,
    /// The system was singular and the minimum-norm solution was taken.
    pub degenerate: bool,
}

impl ErmSolution {
    pub fn predict(&self, basis: &dyn FeatureMap, x: &[f64]) -> Result<f64> {
        Ok(basis.features(x)?.iter().zip(&self.coefficients).map(|(t, c)| t * c).sum())
    }
}

/// `A⁺ b` for symmetric PSD `A`, with a flag when eigenvalues were dropped.
fn psd_solve(a: DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, bool) {
    let eig = a.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = top * PINV_RTOL.max(f64::EPSILON * eig.eigenvalues.len() as f64);
    let coords = eig.eigenvectors.transpose() * b;
    let mut degenerate = false;
    let scaled = DVector::from_iterator(
        coords.len(),
        coords.iter().zip(eig.eigenvalues.iter()).map(|(&c, &l)| {
            if l > floor {
                c / l
            } else {
                degenerate = true;
                0.0
            }
        }),
    );
    (&eig.eigenvectors * scaled, degenerate)
}

/// Minimizes `Q(C) + λ‖C‖²`.
pub fn solve_direct(q: &QuadraticForm, ridge: f64) -> Result<ErmSolution> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::Validation(format!("ridge {ridge} must be finite and non-negative")));
    }
    let a = &q.m + DMatrix::identity(q.dim(), q.dim()) * ridge;
    let (c, degenerate) = psd_solve(a, &q.v);
    let coefficients: Vec<f64> = c.iter().copied().collect();
    Ok(ErmSolution { risk: q.risk(&coefficients), coefficients, solver: Solver::Direct, ridge, dual_alphas: None, degenerate })
}

/// Ridge regression in the dual: `α = (K + NλI)⁻¹ y`, `C = Tᵀα`.
pub fn solve_kernel(basis: &dyn FeatureMap, s: &TrainingSet, ridge: f64) -> Result<ErmSolution> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::Validation(format!("ridge {ridge} must be finite and non-negative")));
    }
    let t = feature_matrix(basis, &s.inputs())?;
    let y = DVector::from_vec(s.labels());
    let n = s.len();
    let k = &t * t.transpose() + DMatrix::identity(n, n) * (n as f64 * ridge);
    let (alpha, degenerate) = psd_solve(k, &y);
    let c = t.transpose() * &alpha;
    let residual = &t * &c - &y;
    Ok(ErmSolution {
        coefficients: c.iter().copied().collect(),
        risk: residual.norm_squared() / n as f64,
        solver: Solver::KernelDual,
        ridge,
        dual_alphas: Some(alpha.iter().copied().collect()),
        degenerate,
    })
}

/// `(1/N) Σ (f(x_i) − y_i)²`.
pub fn empirical_risk(s: &TrainingSet, f: impl Fn(&[f64]) -> Result<f64> + Sync) -> Result<f64> {
    let sq: Vec<f64> = s.samples.par_iter().map(|smp| f(&smp.x).map(|v| (v - smp.y).powi(2))).collect::<Result<_>>()?;
    Ok(sq.iter().sum::<f64>() / s.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskInterval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl RiskInterval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// Interval for the risk of the exact function, given a surrogate whose
/// predictions carry per-point error bounds.
pub fn risk_interval(f: &FunctionSurrogate, s: &TrainingSet) -> Result<RiskInterval> {
    let per: Vec<(f64, f64, f64)> = s
        .samples
        .par_iter()
        .map(|smp| {
            let r = (f.evaluate(&smp.x)? - smp.y).abs();
            let b = f.error_bound(&smp.x)?;
            Ok((r * r, (r - b).max(0.0).powi(2), (r + b).powi(2)))
        })
        .collect::<Result<_>>()?;
    let n = s.len() as f64;
    let sum = |k: fn(&(f64, f64, f64)) -> f64| per.iter().map(k).sum::<f64>() / n;
    Ok(RiskInterval { estimate: sum(|p| p.0), lower: sum(|p| p.1), upper: sum(|p| p.2) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::FnFeatures;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    type Feat = Box<dyn Fn(&[f64]) -> f64 + Sync>;

    fn trig_basis(m: usize) -> FnFeatures<Feat> {
        FnFeatures(
            (0..m)
                .map(|k| -> Feat {
                    match k % 3 {
                        0 => Box::new(move |x: &[f64]| (PI * x[0] * (k / 3) as f64).cos()),
                        1 => Box::new(move |x: &[f64]| (PI * x[0] * (k / 3 + 1) as f64).cos()),
                        _ => Box::new(move |x: &[f64]| (PI * x[0] * (k / 3 + 1) as f64).sin() * x[1]),
                    }
                })
                .collect(),
        )
    }

    fn random_set(n: usize, rng: &mut ChaCha8Rng) -> TrainingSet {
        let samples = (0..n)
            .map(|_| Sample { x: vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], y: rng.random_range(-1.0..1.0) })
            .collect();
        TrainingSet::new(samples, InputDomain::Continuous).unwrap()
    }

    #[test]
    fn constant_basis() {
        let b = FnFeatures(vec![|_: &[f64]| 1.0]);
        let s = TrainingSet::new(vec![Sample { x: vec![0.3], y: 0.7 }], InputDomain::Continuous).unwrap();
        let q = build_quadratic(&b, &s).unwrap();
        assert_eq!(q.m[(0, 0)], 1.0);
        assert_eq!(q.v[0], 0.7);
        assert!((q.z - 0.49).abs() < 1e-16);
        let sol = solve_direct(&q, 0.0).unwrap();
        assert!((sol.coefficients[0] - 0.7).abs() < 1e-15 && sol.risk < 1e-15);
        let dual = solve_kernel(&b, &s, 0.5).unwrap();
        assert!((dual.dual_alphas.unwrap()[0] - 0.7 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn quadratic_matches_double_loop() {
        let b = trig_basis(2);
        let s = TrainingSet::new(
            vec![
                Sample { x: vec![0.1, 1.0], y: 0.5 },
                Sample { x: vec![0.4, -0.3], y: -1.0 },
                Sample { x: vec![-0.7, 0.2], y: 0.25 },
            ],
            InputDomain::Continuous,
        )
        .unwrap();
        let q = build_quadratic(&b, &s).unwrap();
        for k in 0..2 {
            let mut v = 0.0;
            for smp in &s.samples {
                v += smp.y * (b.0[k])(&smp.x);
            }
            assert!((q.v[k] - v / 3.0).abs() < 1e-14);
            for l in 0..2 {
                let mut m = 0.0;
                for smp in &s.samples {
                    m += (b.0[k])(&smp.x) * (b.0[l])(&smp.x);
                }
                assert!((q.m[(k, l)] - m / 3.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn duplicated_samples_give_the_same_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let s = random_set(37, &mut rng);
        let doubled = TrainingSet::new(s.samples.iter().chain(&s.samples).cloned().collect(), InputDomain::Continuous).unwrap();
        let b = trig_basis(5);
        let (q1, q2) = (build_quadratic(&b, &s).unwrap(), build_quadratic(&b, &doubled).unwrap());
        assert!((q1.m - q2.m).amax() < 1e-14 && (q1.v - q2.v).amax() < 1e-14 && (q1.z - q2.z).abs() < 1e-14);
    }

    #[test]
    fn direct_solution_is_optimal_and_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let s = random_set(20, &mut rng);
        let b = trig_basis(6);
        let q = build_quadratic(&b, &s).unwrap();
        assert!(q.min_eigenvalue() >= -1e-10);
        let sol = solve_direct(&q, 0.0).unwrap();
        let raw = empirical_risk(&s, |x| sol.predict(&b, x)).unwrap();
        assert!((raw - sol.risk).abs() < 1e-10);
        for _ in 0..1000 {
            let c: Vec<f64> = sol.coefficients.iter().map(|c| c + rng.random_range(-0.1..0.1)).collect();
            assert!(q.risk(&c) >= sol.risk - 1e-12);
        }
        let heavy = solve_direct(&q, 1e8).unwrap();
        assert!(heavy.coefficients.iter().all(|c| c.abs() < 1e-6));
        assert!((heavy.risk - q.z).abs() < 1e-6);
    }

    #[test]
    fn singular_system_takes_minimum_norm() {
        // duplicated feature: M is rank one
        let b = FnFeatures(vec![|x: &[f64]| x[0], |x: &[f64]| x[0]]);
        let s = TrainingSet::new(vec![Sample { x: vec![1.0], y: 2.0 }, Sample { x: vec![2.0], y: 4.0 }], InputDomain::Continuous).unwrap();
        let sol = solve_direct(&build_quadratic(&b, &s).unwrap(), 0.0).unwrap();
        assert!(sol.degenerate);
        assert!((sol.coefficients[0] - 1.0).abs() < 1e-12 && (sol.coefficients[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn primal_and_dual_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let s = random_set(30, &mut rng);
        let b = trig_basis(7);
        let ridge = 1e-3;
        let p = solve_direct(&build_quadratic(&b, &s).unwrap(), ridge).unwrap();
        let d = solve_kernel(&b, &s, ridge).unwrap();
        for x in s.inputs().into_iter().chain((0..100).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])) {
            assert!((p.predict(&b, &x).unwrap() - d.predict(&b, &x).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn fourier_gram_on_full_grid() {
        // parity features on {0,1}²: K(x, x') = Σ_a (−1)^{a·(x⊕x')} = 4·[x = x']
        let b = FnFeatures(
            (0..4u32)
                .map(|a| move |x: &[f64]| if (0..2).filter(|&j| a >> j & 1 == 1 && x[j] == 1.0).count() % 2 == 0 { 1.0 } else { -1.0 })
                .collect(),
        );
        let xs = crate::oracle::binary_grid(2);
        let t = feature_matrix(&b, &xs).unwrap();
        let k = &t * t.transpose();
        for i in 0..4 {
            for j in 0..4 {
                let brute: f64 = (0..4).map(|a| (b.0[a])(&xs[i]) * (b.0[a])(&xs[j])).sum();
                assert_eq!(k[(i, j)], brute);
                assert_eq!(k[(i, j)], if i == j { 4.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn csv_and_json_round_trip() {
        let s = TrainingSet::new(vec![Sample { x: vec![0.0, 1.0], y: 0.5 }, Sample { x: vec![1.0, 1.0], y: -0.25 }], InputDomain::Binary).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("x_1,x_2,y"));
        assert_eq!(TrainingSet::read_csv(buf.as_slice(), InputDomain::Binary).unwrap(), s);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<TrainingSet>(&json).unwrap(), s);
        assert!(serde_json::from_str::<TrainingSet>(r#"{"samples": []}"#).is_err());
        assert!(matches!(
            TrainingSet::new(vec![Sample { x: vec![0.5], y: 0.0 }], InputDomain::Binary),
            Err(Error::Domain(_))
        ));
    }
}
