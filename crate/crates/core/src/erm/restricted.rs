//! Training restricted to the circuit's own parametrization `θ ↦ f_θ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainingSet;
use crate::circuit::CircuitIR;
use crate::error::{Error, Result};
use crate::oracle;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    GradientDescent,
    CoordinateSearch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub method: Method,
    pub max_iters: usize,
    /// Central-difference step for gradients.
    pub fd_step: f64,
    /// Initial step (line search start, or coordinate step).
    pub step: f64,
    /// Stop once the risk or the gradient norm falls below this.
    pub tol: f64,
    /// Starting point; drawn uniformly from `[−π, π)` when absent.
    pub initial: Option<Vec<f64>>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { method: Method::GradientDescent, max_iters: 200, fd_step: 1e-5, step: 1.0, tol: 1e-12, initial: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictedResult {
    pub theta: Vec<f64>,
    pub risk: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Risk after each accepted step, starting with the initial point.
    pub trajectory: Vec<f64>,
}

struct Objective<'a> {
    c: &'a CircuitIR,
    xs: Vec<Vec<f64>>,
    ys: Vec<f64>,
}

impl Objective<'_> {
    fn risk(&self, theta: &[f64]) -> Result<f64> {
        let f = oracle::evaluate_many(self.c, theta, &self.xs)?;
        Ok(f.iter().zip(&self.ys).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / self.ys.len() as f64)
    }

    fn gradient(&self, theta: &[f64], h: f64) -> Result<Vec<f64>> {
        let mut g = vec![0.0; theta.len()];
        let mut t = theta.to_vec();
        for k in 0..theta.len() {
            t[k] = theta[k] + h;
            let up = self.risk(&t)?;
            t[k] = theta[k] - h;
            let down = self.risk(&t)?;
            t[k] = theta[k];
            g[k] = (up - down) / (2.0 * h);
        }
        Ok(g)
    }
}

/// Minimizes the empirical risk over `θ` with oracle evaluations.
/// Exhausting the budget is not an error; `converged` reports it.
pub fn restricted_optimize(c: &CircuitIR, s: &TrainingSet, cfg: &OptimizerConfig, seed: u64) -> Result<RestrictedResult> {
    let p = c.num_params();
    let mut theta = match &cfg.initial {
        Some(t) if t.len() == p => t.clone(),
        Some(t) => return Err(Error::Dimension(format!("{} initial parameters for {p} slots", t.len()))),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..p).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
        }
    };
    let obj = Objective { c, xs: s.inputs(), ys: s.labels() };
    let mut risk = obj.risk(&theta)?;
    let mut trajectory = vec![risk];
    let mut iterations = 0;
    let mut converged = risk <= cfg.tol || p == 0;
    let mut step = cfg.step;
    while !converged && iterations < cfg.max_iters {
        iterations += 1;
        match cfg.method {
            Method::GradientDescent => {
                let g = obj.gradient(&theta, cfg.fd_step)?;
                let gn2: f64 = g.iter().map(|v| v * v).sum();
                if gn2.sqrt() <= cfg.tol {
                    converged = true;
                    break;
                }
                // Armijo backtracking from the configured step
                let mut a = cfg.step;
                let mut accepted = None;
                while a > 1e-12 {
                    let trial: Vec<f64> = theta.iter().zip(&g).map(|(t, d)| t - a * d).collect();
                    let r = obj.risk(&trial)?;
                    if r <= risk - 1e-4 * a * gn2 {
                        accepted = Some((trial, r));
                        break;
                    }
                    a *= 0.5;
                }
                match accepted {
                    Some((t, r)) => {
                        theta = t;
                        risk = r;
                    }
                    None => converged = true,
                }
            }
            Method::CoordinateSearch => {
                let mut improved = false;
                for k in 0..p {
                    for dir in [1.0, -1.0] {
                        let mut trial = theta.clone();
                        trial[k] += dir * step;
                        let r = obj.risk(&trial)?;
                        if r < risk {
                            theta = trial;
                            risk = r;
                            improved = true;
                            break;
                        }
                    }
                }
                if !improved {
                    step *= 0.5;
                    converged = step < 1e-8;
                }
            }
        }
        trajectory.push(risk);
        converged |= risk <= cfg.tol;
    }
    Ok(RestrictedResult { theta, risk, iterations, converged, trajectory })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Architecture, Block, Gate, InitialState, InputDomain};
    use crate::erm::Sample;
    use crate::pauli::WeightedPauliSum;

    fn circuit() -> CircuitIR {
        CircuitIR::new(
            2,
            Architecture::Flipped,
            vec![Block::trainable(vec![Gate::rx(0, 0), Gate::rx(1, 1), Gate::cnot(0, 1)]), Block::encoding(vec![Gate::h(1), Gate::enc_rz(1, 0), Gate::h(1)])],
            WeightedPauliSum::from_pauli("IZ".parse().unwrap()),
            InitialState::Zero,
        )
        .unwrap()
    }

    fn task(theta0: &[f64]) -> TrainingSet {
        let c = circuit();
        let samples = (0..8)
            .map(|k| {
                let x = vec![k as f64 / 8.0];
                let y = oracle::expectation(&c, &x, theta0).unwrap();
                Sample { x, y }
            })
            .collect();
        TrainingSet::new(samples, InputDomain::Continuous).unwrap()
    }

    #[test]
    fn realizable_start_needs_no_iterations() {
        let theta0 = vec![0.4, -1.2];
        let s = task(&theta0);
        let cfg = OptimizerConfig { initial: Some(theta0.clone()), ..Default::default() };
        let r = restricted_optimize(&circuit(), &s, &cfg, 0).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.risk <= 1e-10 && r.converged);
    }

    #[test]
    fn optimizers_reduce_risk_deterministically() {
        let s = task(&[0.4, -1.2]);
        for method in [Method::GradientDescent, Method::CoordinateSearch] {
            let cfg = OptimizerConfig { method, max_iters: 60, ..Default::default() };
            let a = restricted_optimize(&circuit(), &s, &cfg, 9).unwrap();
            let b = restricted_optimize(&circuit(), &s, &cfg, 9).unwrap();
            assert_eq!(a, b);
            assert!(a.risk <= a.trajectory[0]);
            assert!(a.trajectory.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}
