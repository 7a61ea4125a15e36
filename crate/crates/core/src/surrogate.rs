//! Classically evaluatable representations of `x ↦ f_θ(x)`.
//!
//! Every representation is linear in a fixed set of input features:
//! `f(x) = Σ_k C_k · T_k(x)`. The features come from one of two bases:
//!
//! * `trig3`: products over encoding legs of `{1, cos πx, sin πx}`, where
//!   each leg is one encoding gate bound to an input coordinate;
//! * `fourier-binary`: parities `(−1)^{α·x}` over coordinates, for `x ∈ {0,1}^d`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::Gate;
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::tensor::TensorTrain;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    Trig3,
    FourierBinary,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Trig3 => "trig3",
            Basis::FourierBinary => "fourier-binary",
        })
    }
}

/// Label of one basis function.
///
/// `Parity(α)` is `(−1)^{α·x}` with `α` a mask over coordinates. `Trig`
/// selects `cos` on the legs in `cos`, `sin` on the legs in `sin`, and the
/// constant on every other leg.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BasisIndex {
    Parity(u64),
    Trig { cos: u64, sin: u64 },
}

impl BasisIndex {
    pub const CONSTANT_TRIG: BasisIndex = BasisIndex::Trig { cos: 0, sin: 0 };

    pub fn is_constant(&self) -> bool {
        matches!(self, BasisIndex::Parity(0) | BasisIndex::Trig { cos: 0, sin: 0 })
    }

    /// `T(x)`; `legs` holds `(cos πx, sin πx)` per leg for trig indices.
    pub(crate) fn value(&self, x: &[f64], legs: &[(f64, f64)]) -> f64 {
        match *self {
            BasisIndex::Parity(a) => {
                let ones = (0..x.len()).filter(|&j| a >> j & 1 == 1 && x[j] != 0.0).count();
                if ones % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            BasisIndex::Trig { cos, sin } => {
                let mut v = 1.0;
                for (l, &(c, s)) in legs.iter().enumerate() {
                    if cos >> l & 1 == 1 {
                        v *= c;
                    } else if sin >> l & 1 == 1 {
                        v *= s;
                    }
                }
                v
            }
        }
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisIndex::Parity(a) => write!(f, "{a:x}"),
            BasisIndex::Trig { cos, sin } => write!(f, "{cos:x}:{sin:x}"),
        }
    }
}

impl std::str::FromStr for BasisIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<BasisIndex> {
        let hex = |t: &str| u64::from_str_radix(t, 16).map_err(|e| Error::Parse(format!("basis index {s:?}: {e}")));
        match s.split_once(':') {
            Some((c, sn)) => Ok(BasisIndex::Trig { cos: hex(c)?, sin: hex(sn)? }),
            None => Ok(BasisIndex::Parity(hex(s)?)),
        }
    }
}

/// A measured `⟨P⟩` with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Externally supplied Pauli expectation values, keyed by the phase-free
/// Hermitian string.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoefficientEstimates {
    table: BTreeMap<(u64, u64), Estimate>,
}

impl CoefficientEstimates {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, p: &PauliString, e: Estimate) {
        let sign = p.phase().sign().unwrap_or(1.0);
        self.table.insert(p.key(), Estimate { value: sign * e.value, std_error: e.std_error });
    }

    /// Estimate of `⟨p⟩`, sign-adjusted for `p`'s phase.
    pub fn get(&self, p: &PauliString) -> Result<Estimate> {
        let sign = p
            .phase()
            .sign()
            .ok_or_else(|| Error::Validation(format!("{p} is not Hermitian")))?;
        self.table
            .get(&p.key())
            .map(|e| Estimate { value: sign * e.value, std_error: e.std_error })
            .ok_or_else(|| Error::Binding(format!("no coefficient estimate for {}", p.unsigned())))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// Where the `θ`-dependent coefficients of a surrogate come from.
#[derive(Clone, Copy, Debug)]
pub enum CoefficientSource<'a> {
    /// Exact statevector simulation of the trainable block.
    Oracle,
    /// Measured values with standard errors.
    Estimates(&'a CoefficientEstimates),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparseTerm {
    pub index: BasisIndex,
    pub coefficient: f64,
    /// Zero when the coefficient is exact.
    pub std_error: f64,
}

/// `f(x) = c₀ + Σ_{r<s} B_rs(x)·C_rs` where `B(x) = R(x)ᵀ A R(x)` is the
/// observable's Majorana matrix pulled back through the matchgate gates and
/// `C_rs = ⟨−i γ_r γ_s⟩` on the pre-encoding state.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticFeatures {
    pub n: usize,
    /// Gates with every trainable slot already bound to a fixed angle.
    pub gates: Vec<Gate>,
    pub constant: f64,
    pub observable: DMatrix<f64>,
    pub pairs: Vec<(usize, usize)>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
}

impl QuadraticFeatures {
    fn pulled_back(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let r = crate::fermion::compile_gates(self.n, self.gates.iter(), x, &[])?;
        Ok(r.transpose() * &self.observable * r)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Representation {
    Sparse(Vec<SparseTerm>),
    TensorTrain(TensorTrain),
    Quadratic(QuadraticFeatures),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionSurrogate {
    pub basis: Basis,
    pub n_inputs: usize,
    /// Coordinate read by each encoding leg (trig3 sparse terms and trains).
    pub leg_inputs: Vec<usize>,
    pub representation: Representation,
    /// Multiplier turning standard errors into the reported error bound.
    pub coverage: f64,
}

pub const DEFAULT_COVERAGE: f64 = 3.0;

impl FunctionSurrogate {
    pub fn sparse(basis: Basis, n_inputs: usize, leg_inputs: Vec<usize>, terms: Vec<SparseTerm>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for t in &terms {
            let ok = match (basis, t.index) {
                (Basis::FourierBinary, BasisIndex::Parity(a)) => n_inputs >= 64 || a >> n_inputs == 0,
                (Basis::Trig3, BasisIndex::Trig { cos, sin }) => {
                    cos & sin == 0 && (leg_inputs.len() >= 64 || (cos | sin) >> leg_inputs.len() == 0)
                }
                _ => false,
            };
            if !ok {
                return Err(Error::Basis(format!("index {} does not fit basis {basis}", t.index)));
            }
            if !seen.insert(t.index) {
                return Err(Error::Validation(format!("duplicate basis index {}", t.index)));
            }
        }
        if leg_inputs.iter().any(|&j| j >= n_inputs) {
            return Err(Error::Dimension("leg bound to a coordinate beyond n_inputs".into()));
        }
        Ok(FunctionSurrogate { basis, n_inputs, leg_inputs, representation: Representation::Sparse(terms), coverage: DEFAULT_COVERAGE })
    }

    pub fn kind(&self) -> &'static str {
        match self.representation {
            Representation::Sparse(_) => "sparse-terms",
            Representation::TensorTrain(_) => "tensor-train",
            Representation::Quadratic(_) => "quadratic-majorana",
        }
    }

    /// Number of stored coefficients (terms, pairs, or train entries).
    pub fn num_terms(&self) -> usize {
        match &self.representation {
            Representation::Sparse(t) => t.len(),
            Representation::TensorTrain(tt) => tt.num_parameters(),
            Representation::Quadratic(q) => q.pairs.len() + 1,
        }
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        match &self.representation {
            Representation::TensorTrain(tt) => tt.bond_dims(),
            _ => vec![],
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_inputs {
            return Err(Error::Dimension(format!("{} inputs given, surrogate takes {}", x.len(), self.n_inputs)));
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite input {v}")));
        }
        if self.basis == Basis::FourierBinary {
            if let Some(v) = x.iter().find(|&&v| v != 0.0 && v != 1.0) {
                return Err(Error::Domain(format!("{v} is not binary")));
            }
        }
        Ok(())
    }

    fn legs(&self, x: &[f64]) -> Vec<(f64, f64)> {
        self.leg_inputs.iter().map(|&j| ((PI * x[j]).cos(), (PI * x[j]).sin())).collect()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        match &self.representation {
            Representation::Sparse(terms) => {
                let legs = self.legs(x);
                Ok(terms.iter().map(|t| t.coefficient * t.index.value(x, &legs)).sum())
            }
            Representation::TensorTrain(tt) => tt.evaluate(&self.legs(x)),
            Representation::Quadratic(q) => {
                let b = q.pulled_back(x)?;
                Ok(q.constant + q.pairs.iter().zip(&q.coefficients).map(|(&(r, s), c)| b[(r, s)] * c).sum::<f64>())
            }
        }
    }

    /// Evaluation error bound at `x`: `coverage · Σ_k |T_k(x)|·se_k` for
    /// estimated coefficients, and the truncation bound for trains.
    pub fn error_bound(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        match &self.representation {
            Representation::Sparse(terms) => {
                let legs = self.legs(x);
                Ok(self.coverage * terms.iter().map(|t| t.std_error * t.index.value(x, &legs).abs()).sum::<f64>())
            }
            Representation::TensorTrain(tt) => Ok(tt.evaluation_error_bound()),
            Representation::Quadratic(q) => {
                if q.std_errors.iter().all(|&s| s == 0.0) {
                    return Ok(0.0);
                }
                let b = q.pulled_back(x)?;
                Ok(self.coverage * q.pairs.iter().zip(&q.std_errors).map(|(&(r, s), se)| b[(r, s)].abs() * se).sum::<f64>())
            }
        }
    }

    /// Coefficients of the linear view `f = Σ C_k T_k`, matching [`FeatureMap::features`].
    pub fn coefficients(&self) -> Vec<f64> {
        match &self.representation {
            Representation::Sparse(t) => t.iter().map(|t| t.coefficient).collect(),
            Representation::TensorTrain(tt) => tt.to_full().unwrap_or_default(),
            Representation::Quadratic(q) => std::iter::once(q.constant).chain(q.coefficients.iter().copied()).collect(),
        }
    }

    pub fn save(&self, stem: &Path) -> Result<()> {
        let (header, payload) = wire::encode(self)?;
        let bin = with_extension(stem, "bin");
        let mut header = header;
        header.payload = wire::PayloadRef {
            file: bin.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            sha256: hex::encode(Sha256::digest(&payload)),
            floats: payload.len() / 8,
        };
        crate::io::atomic_write(&bin, &payload)?;
        crate::io::atomic_write(&with_extension(stem, "json"), serde_json::to_string_pretty(&header)?.as_bytes())
    }

    pub fn load(stem: &Path) -> Result<FunctionSurrogate> {
        let header: wire::Header = serde_json::from_slice(&std::fs::read(with_extension(stem, "json"))?)?;
        let bin = stem.with_file_name(&header.payload.file);
        let payload = std::fs::read(bin)?;
        if hex::encode(Sha256::digest(&payload)) != header.payload.sha256 {
            return Err(Error::Parse("surrogate payload checksum mismatch".into()));
        }
        wire::decode(header, &payload)
    }
}

fn with_extension(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// A fixed list of input features `x ↦ (T_1(x), …, T_m(x))`.
pub trait FeatureMap: Sync {
    fn dim(&self) -> usize;
    fn features(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl FeatureMap for FunctionSurrogate {
    fn dim(&self) -> usize {
        match &self.representation {
            Representation::Sparse(t) => t.len(),
            Representation::TensorTrain(tt) => 3usize.pow(tt.len() as u32),
            Representation::Quadratic(q) => q.pairs.len() + 1,
        }
    }

    fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        match &self.representation {
            Representation::Sparse(terms) => {
                let legs = self.legs(x);
                Ok(terms.iter().map(|t| t.index.value(x, &legs)).collect())
            }
            Representation::TensorTrain(tt) => tt.full_features(&self.legs(x)),
            Representation::Quadratic(q) => {
                let b = q.pulled_back(x)?;
                Ok(std::iter::once(1.0).chain(q.pairs.iter().map(|&(r, s)| b[(r, s)])).collect())
            }
        }
    }
}

/// Features given by plain functions.
pub struct FnFeatures<F>(pub Vec<F>);

impl<F> FeatureMap for FnFeatures<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.0.iter().map(|f| f(x)).collect())
    }
}

mod wire {
    use super::*;

    #[derive(Clone, Debug, Default, Serialize, Deserialize)]
    pub struct PayloadRef {
        pub file: String,
        pub sha256: String,
        pub floats: usize,
    }

    #[derive(Clone, Debug, Serialize, Deserialize)]
    #[serde(tag = "kind", rename_all = "kebab-case")]
    pub enum Body {
        SparseTerms { indices: Vec<String> },
        TensorTrain { scale: f64, coefficient_error: f64 },
        QuadraticMajorana { n: usize, gates: Vec<Gate>, constant: f64, pairs: Vec<(usize, usize)> },
    }

    #[derive(Clone, Debug, Serialize, Deserialize)]
    pub struct Header {
        pub format_version: u32,
        pub basis: Basis,
        pub n_inputs: usize,
        pub representation: String,
        pub bond_dims: Vec<usize>,
        pub leg_inputs: Vec<usize>,
        pub coverage: f64,
        pub body: Body,
        pub payload: PayloadRef,
    }

    pub fn encode(s: &FunctionSurrogate) -> Result<(Header, Vec<u8>)> {
        let mut floats: Vec<f64> = Vec::new();
        let body = match &s.representation {
            Representation::Sparse(terms) => {
                floats.extend(terms.iter().map(|t| t.coefficient));
                floats.extend(terms.iter().map(|t| t.std_error));
                Body::SparseTerms { indices: terms.iter().map(|t| t.index.to_string()).collect() }
            }
            Representation::TensorTrain(tt) => {
                for c in tt.cores() {
                    floats.extend_from_slice(c.data());
                }
                Body::TensorTrain { scale: tt.scale(), coefficient_error: tt.coefficient_error() }
            }
            Representation::Quadratic(q) => {
                // row-major
                for r in 0..q.observable.nrows() {
                    floats.extend(q.observable.row(r).iter());
                }
                floats.extend_from_slice(&q.coefficients);
                floats.extend_from_slice(&q.std_errors);
                Body::QuadraticMajorana { n: q.n, gates: q.gates.clone(), constant: q.constant, pairs: q.pairs.clone() }
            }
        };
        let header = Header {
            format_version: 1,
            basis: s.basis,
            n_inputs: s.n_inputs,
            representation: s.kind().into(),
            bond_dims: s.bond_dims(),
            leg_inputs: s.leg_inputs.clone(),
            coverage: s.coverage,
            body,
            payload: PayloadRef::default(),
        };
        Ok((header, floats.iter().flat_map(|v| v.to_le_bytes()).collect()))
    }

    pub fn decode(h: Header, payload: &[u8]) -> Result<FunctionSurrogate> {
        if !payload.len().is_multiple_of(8) {
            return Err(Error::Parse("payload length is not a multiple of 8".into()));
        }
        let floats: Vec<f64> = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let short = || Error::Parse("payload too short".into());
        let representation = match h.body {
            Body::SparseTerms { indices } => {
                let m = indices.len();
                if floats.len() != 2 * m {
                    return Err(short());
                }
                let terms = indices
                    .iter()
                    .enumerate()
                    .map(|(k, s)| Ok(SparseTerm { index: s.parse()?, coefficient: floats[k], std_error: floats[m + k] }))
                    .collect::<Result<Vec<_>>>()?;
                let mut s = FunctionSurrogate::sparse(h.basis, h.n_inputs, h.leg_inputs, terms)?;
                s.coverage = h.coverage;
                return Ok(s);
            }
            Body::TensorTrain { scale, coefficient_error } => Representation::TensorTrain(TensorTrain::from_flat(
                &h.bond_dims,
                &floats,
                scale,
                coefficient_error,
            )?),
            Body::QuadraticMajorana { n, gates, constant, pairs } => {
                let d = 2 * n;
                let p = pairs.len();
                if floats.len() != d * d + 2 * p {
                    return Err(short());
                }
                Representation::Quadratic(QuadraticFeatures {
                    n,
                    gates,
                    constant,
                    observable: DMatrix::from_row_slice(d, d, &floats[..d * d]),
                    pairs,
                    coefficients: floats[d * d..d * d + p].to_vec(),
                    std_errors: floats[d * d + p..].to_vec(),
                })
            }
        };
        Ok(FunctionSurrogate { basis: h.basis, n_inputs: h.n_inputs, leg_inputs: h.leg_inputs, representation, coverage: h.coverage })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn term(index: BasisIndex, c: f64) -> SparseTerm {
        SparseTerm { index, coefficient: c, std_error: 0.0 }
    }

    #[test]
    fn constant_term_evaluates_everywhere() {
        let s = FunctionSurrogate::sparse(Basis::Trig3, 2, vec![0, 1], vec![term(BasisIndex::CONSTANT_TRIG, 0.7)]).unwrap();
        assert_eq!(s.evaluate(&[0.3, -1.2]).unwrap(), 0.7);
        let s = FunctionSurrogate::sparse(Basis::FourierBinary, 3, vec![], vec![term(BasisIndex::Parity(0), 0.7)]).unwrap();
        assert_eq!(s.evaluate(&[1.0, 0.0, 1.0]).unwrap(), 0.7);
    }

    #[test]
    fn single_parity_flips_sign() {
        let s = FunctionSurrogate::sparse(Basis::FourierBinary, 3, vec![], vec![term(BasisIndex::Parity(0b001), 1.0)]).unwrap();
        assert_eq!(s.evaluate(&[1.0, 0.0, 0.0]).unwrap(), -1.0);
        assert_eq!(s.evaluate(&[0.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!(matches!(s.evaluate(&[0.5, 0.0, 0.0]), Err(Error::Domain(_))));
        assert!(matches!(s.evaluate(&[0.0, 0.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn trig_terms_bind_legs_to_coordinates() {
        // two legs both reading x_0
        let s = FunctionSurrogate::sparse(
            Basis::Trig3,
            1,
            vec![0, 0],
            vec![term(BasisIndex::Trig { cos: 0b01, sin: 0b10 }, 2.0), term(BasisIndex::Trig { cos: 0b11, sin: 0 }, 1.0)],
        )
        .unwrap();
        let x = 0.3;
        let want = 2.0 * (PI * x).cos() * (PI * x).sin() + (PI * x).cos().powi(2);
        assert!((s.evaluate(&[x]).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn rejects_duplicates_and_foreign_indices() {
        let dup = vec![term(BasisIndex::Parity(1), 1.0), term(BasisIndex::Parity(1), 2.0)];
        assert!(FunctionSurrogate::sparse(Basis::FourierBinary, 1, vec![], dup).is_err());
        let wrong = vec![term(BasisIndex::Parity(1), 1.0)];
        assert!(matches!(FunctionSurrogate::sparse(Basis::Trig3, 1, vec![0], wrong), Err(Error::Basis(_))));
        let overlap = vec![term(BasisIndex::Trig { cos: 1, sin: 1 }, 1.0)];
        assert!(FunctionSurrogate::sparse(Basis::Trig3, 1, vec![0], overlap).is_err());
    }

    #[test]
    fn index_text_round_trip() {
        for i in [BasisIndex::Parity(0x1f), BasisIndex::Trig { cos: 0xa, sin: 0x5 }] {
            assert_eq!(i.to_string().parse::<BasisIndex>().unwrap(), i);
        }
    }

    #[test]
    fn estimates_follow_string_phase() {
        let mut e = CoefficientEstimates::new();
        e.insert(&"XZ".parse().unwrap(), Estimate { value: 0.25, std_error: 1e-3 });
        assert_eq!(e.get(&"-XZ".parse().unwrap()).unwrap().value, -0.25);
        assert!(matches!(e.get(&"ZZ".parse().unwrap()), Err(Error::Binding(_))));
    }

    #[test]
    fn error_bound_scales_standard_errors() {
        let s = FunctionSurrogate::sparse(
            Basis::FourierBinary,
            2,
            vec![],
            vec![
                SparseTerm { index: BasisIndex::Parity(1), coefficient: 0.5, std_error: 0.01 },
                SparseTerm { index: BasisIndex::Parity(2), coefficient: -0.5, std_error: 0.02 },
            ],
        )
        .unwrap();
        assert!((s.error_bound(&[1.0, 1.0]).unwrap() - DEFAULT_COVERAGE * 0.03).abs() < 1e-15);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = FunctionSurrogate::sparse(
            Basis::Trig3,
            2,
            vec![1, 0],
            vec![
                SparseTerm { index: BasisIndex::Trig { cos: 1, sin: 2 }, coefficient: 0.1 + 0.2, std_error: 1e-3 },
                term(BasisIndex::CONSTANT_TRIG, -1.0 / 3.0),
            ],
        )
        .unwrap();
        let stem = dir.path().join("s");
        s.save(&stem).unwrap();
        assert_eq!(FunctionSurrogate::load(&stem).unwrap(), s);
    }
}
