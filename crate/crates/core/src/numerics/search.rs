//! Multi-start search for ensembles that beat the Gaussian value.
//!
//! Each candidate has a few base states `S(r)(cos θ|0⟩ + sin θ|1⟩)`, shared by
//! many displaced members. The average-state constraint enters as a quadratic
//! penalty on the raw second moments. Each start runs block-coordinate
//! Nelder–Mead: one block per base `(r, θ)` and one per member `(a, b, logit)`.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::ensemble::{gaussian_ensemble_discretized, mutual_information, BaseState, DiscreteEnsemble, EnsembleMember};
use super::quadrature::QuadratureGrid;
use crate::capacity::{capacity_alpha, classify_regime, optimal_squeezing, GaussianEnsembleSpec, Regime};
use crate::error::{Error, Result};
use crate::gaussian::{MeasurementNoise, NoiseKind, OneModeCovariance};
use crate::optimize::{nelder_mead, NelderMeadOptions};

const PENALTY_WEIGHT: f64 = 1e3;
const MAX_SQUEEZE: f64 = 1.5;

#[derive(Clone, Debug, Serialize)]
pub struct SearchConfig {
    /// Distinct base states per candidate.
    pub bases: usize,
    /// Members per displaced axis of the starting skeleton.
    pub displacement_nodes: usize,
    pub starts: usize,
    pub seed: u64,
    /// Objective evaluations per start.
    pub budget: usize,
    pub sweeps: usize,
    pub search_grid: QuadratureGrid,
    pub final_grid: QuadratureGrid,
    /// Also score the discretized optimal Gaussian ensemble.
    pub gaussian_seed: bool,
    pub gaussian_nodes: usize,
    /// Largest raw-moment mismatch for an ensemble to count.
    pub covariance_tolerance: f64,
    /// Excess over the ceiling reported as a candidate violation.
    pub violation_tolerance: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            bases: 2,
            displacement_nodes: 3,
            starts: 16,
            seed: 0,
            budget: 300,
            sweeps: 2,
            search_grid: QuadratureGrid::coarse().with_nodes(48),
            final_grid: QuadratureGrid::default(),
            gaussian_seed: false,
            gaussian_nodes: 15,
            covariance_tolerance: 5e-3,
            violation_tolerance: 2e-2,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bases == 0 || self.displacement_nodes == 0 {
            return Err(Error::InvalidArgument("search needs at least one base and one node".into()));
        }
        if self.starts == 0 && !self.gaussian_seed {
            return Err(Error::InvalidArgument("search needs a start or the Gaussian seed".into()));
        }
        if self.starts > 0 && self.budget < 4 {
            return Err(Error::InvalidArgument("budget must be at least 4".into()));
        }
        self.search_grid.validate()?;
        self.final_grid.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemberReport {
    pub weight: f64,
    pub squeeze: f64,
    pub angle: f64,
    pub shift: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleReport {
    pub origin: String,
    pub value_nats: f64,
    pub covariance_error: f64,
    pub members: Vec<MemberReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchReport {
    pub best_value_nats: f64,
    pub ceiling_nats: f64,
    pub gap: f64,
    pub regime: Regime,
    pub hypothetical: bool,
    pub seed: u64,
    pub ensemble: Option<EnsembleReport>,
    pub covariance_error: f64,
    pub evaluations: usize,
    /// Best value exceeds the ceiling by more than the tolerance.
    pub candidate_violation: bool,
    pub budget_exhausted: bool,
}

/// Parameter vector layout: `2·bases` base entries, then 3 per member.
#[derive(Clone, Copy)]
struct Layout {
    bases: usize,
    members: usize,
}

impl Layout {
    fn blocks(&self) -> Vec<std::ops::Range<usize>> {
        let b = (0..self.bases).map(|i| 2 * i..2 * i + 2);
        let off = 2 * self.bases;
        let m = (0..self.members).map(move |j| off + 3 * j..off + 3 * j + 3);
        b.chain(m).collect()
    }

    fn decode(&self, x: &[f64]) -> DiscreteEnsemble {
        let off = 2 * self.bases;
        let logit = |j: usize| x[off + 3 * j + 2];
        let top = (0..self.members).map(logit).fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = (0..self.members).map(|j| (logit(j) - top).exp()).collect();
        let total: f64 = raw.iter().sum();
        let bases = (0..self.bases)
            .map(|i| BaseState::SqueezedSuperposition {
                r: MAX_SQUEEZE * x[2 * i].tanh(),
                theta: x[2 * i + 1],
            })
            .collect();
        let members = (0..self.members)
            .map(|j| EnsembleMember {
                weight: raw[j] / total,
                base: j % self.bases,
                shift: (x[off + 3 * j], x[off + 3 * j + 1]),
            })
            .collect();
        DiscreteEnsemble::new(bases, members).expect("softmax weights are normalized")
    }
}

fn covariance_error(ens: &DiscreteEnsemble, alpha: &OneModeCovariance) -> f64 {
    let m = ens.average_moments();
    (m.qq - alpha.q()).abs().max((m.pp - alpha.p()).abs()).max(m.qp.abs())
}

fn penalty(ens: &DiscreteEnsemble, alpha: &OneModeCovariance) -> f64 {
    let m = ens.average_moments();
    PENALTY_WEIGHT * ((m.qq - alpha.q()).powi(2) + (m.pp - alpha.p()).powi(2) + m.qp.powi(2))
}

fn describe(ens: &DiscreteEnsemble, origin: String, value_nats: f64, alpha: &OneModeCovariance) -> EnsembleReport {
    let members = ens
        .members()
        .iter()
        .map(|m| {
            let (squeeze, angle) = match ens.bases()[m.base] {
                BaseState::SqueezedSuperposition { r, theta } => (r, theta),
                BaseState::Fock(_) => (f64::NAN, f64::NAN),
            };
            MemberReport {
                weight: m.weight,
                squeeze,
                angle,
                shift: m.shift,
            }
        })
        .collect();
    EnsembleReport {
        origin,
        value_nats,
        covariance_error: covariance_error(ens, alpha),
        members,
    }
}

struct StartOutcome {
    x: Vec<f64>,
    evals: usize,
    exhausted: bool,
}

/// Skeleton of the Gaussian optimum: `(δ, shifts, weights)`.
fn skeleton(alpha: &OneModeCovariance, beta: &MeasurementNoise, nodes: usize) -> Result<(f64, Vec<(f64, f64)>, Vec<f64>)> {
    let spec: GaussianEnsembleSpec = GaussianEnsembleSpec::for_alpha(alpha, optimal_squeezing(alpha, beta))?;
    let (ens, _) = gaussian_ensemble_discretized(alpha, beta, nodes)?;
    let shifts = ens.members().iter().map(|m| m.shift).collect();
    let weights = ens.members().iter().map(|m| m.weight).collect();
    Ok((spec.delta, shifts, weights))
}

fn initial_point(
    rng: &mut ChaCha8Rng,
    layout: Layout,
    delta: f64,
    shifts: &[(f64, f64)],
    weights: &[f64],
    alpha: &OneModeCovariance,
) -> Vec<f64> {
    let (sq, sp) = (alpha.q().sqrt(), alpha.p().sqrt());
    let r0 = 0.5 * (2.0 * delta).ln();
    let mut x = Vec::new();
    for _ in 0..layout.bases {
        let r = (r0 + rng.random_range(-0.3..0.3)) / MAX_SQUEEZE;
        x.push(r.clamp(-0.95, 0.95).atanh());
        x.push(rng.random_range(0.0..0.8));
    }
    for (&(a, b), &w) in shifts.iter().zip(weights) {
        x.push(a * rng.random_range(0.7..1.3) + 0.2 * sq * rng.random_range(-1.0..1.0));
        x.push(b * rng.random_range(0.7..1.3) + 0.2 * sp * rng.random_range(-1.0..1.0));
        x.push(w.ln() + rng.random_range(-0.3..0.3));
    }
    x
}

fn run_start(
    alpha: &OneModeCovariance,
    beta: &MeasurementNoise,
    config: &SearchConfig,
    skel: &(f64, Vec<(f64, f64)>, Vec<f64>),
    start: usize,
) -> StartOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(start as u64));
    let layout = Layout {
        bases: config.bases,
        members: skel.1.len(),
    };
    let mut x = initial_point(&mut rng, layout, skel.0, &skel.1, &skel.2, alpha);
    let objective = |x: &[f64]| -> f64 {
        let ens = layout.decode(x);
        match mutual_information(&ens, beta, &config.search_grid) {
            Ok(i) => -i + penalty(&ens, alpha),
            // unresolvable parameter sets are walls for the simplex
            Err(_) => 1e6,
        }
    };

    let blocks = layout.blocks();
    let sweeps = config.sweeps.max(1);
    let per_block = (config.budget / (blocks.len() * sweeps)).max(4);
    let mut evals = 0;
    let mut exhausted = false;
    'outer: for _ in 0..sweeps {
        for range in &blocks {
            let left = config.budget.saturating_sub(evals);
            if left < range.len() + 1 {
                exhausted = true;
                break 'outer;
            }
            let opts = NelderMeadOptions {
                max_evals: per_block.min(left),
                f_tol: 1e-9,
                x_tol: 1e-6,
            };
            let x0 = x[range.clone()].to_vec();
            let step: Vec<f64> = if range.len() == 2 { vec![0.15, 0.3] } else { vec![0.2, 0.2, 0.3] };
            let mut full = x.clone();
            let r = nelder_mead(
                |v: &[f64]| {
                    full[range.clone()].copy_from_slice(v);
                    objective(&full)
                },
                &x0,
                &step,
                &opts,
            );
            evals += r.evals;
            exhausted |= !r.converged;
            x[range.clone()].copy_from_slice(&r.x);
        }
    }
    StartOutcome { x, evals, exhausted }
}

/// Best mutual information over searched ensembles whose average state
/// matches `alpha`, against the Gaussian value `capacity_alpha(alpha, beta)`.
///
/// An excess over the ceiling is flagged in the report, never treated as an error.
pub fn hgm_search(alpha: &OneModeCovariance, beta: &MeasurementNoise, config: &SearchConfig) -> Result<SearchReport> {
    config.validate()?;
    if beta.kind() == NoiseKind::SharpPosition {
        return Err(Error::UnsupportedNoise(
            "ensemble search needs an outcome density; sharp position has none",
        ));
    }
    let ceiling = capacity_alpha(alpha, beta);
    let regime = classify_regime(alpha, beta);

    let skel = skeleton(alpha, beta, config.displacement_nodes)?;
    let layout = Layout {
        bases: config.bases,
        members: skel.1.len(),
    };
    let outcomes: Vec<StartOutcome> = (0..config.starts)
        .into_par_iter()
        .map(|s| run_start(alpha, beta, config, &skel, s))
        .collect();

    let mut candidates: Vec<(DiscreteEnsemble, String)> = Vec::new();
    let mut evaluations = 0;
    let mut budget_exhausted = false;
    for (s, o) in outcomes.into_iter().enumerate() {
        evaluations += o.evals;
        budget_exhausted |= o.exhausted;
        candidates.push((layout.decode(&o.x), format!("start {s}")));
    }
    if config.gaussian_seed {
        let (ens, _) = gaussian_ensemble_discretized(alpha, beta, config.gaussian_nodes)?;
        candidates.push((ens, "gaussian".to_string()));
    }

    let scored: Vec<(f64, f64)> = candidates
        .par_iter()
        .map(|(ens, _)| {
            let err = covariance_error(ens, alpha);
            let value = mutual_information(ens, beta, &config.final_grid).unwrap_or(f64::NEG_INFINITY);
            (value, err)
        })
        .collect();
    evaluations += scored.len();

    let best = scored
        .iter()
        .enumerate()
        .filter(|(_, (v, err))| v.is_finite() && *err <= config.covariance_tolerance)
        .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .map(|(i, _)| i);

    let (best_value, ensemble, cov_err) = match best {
        Some(i) => {
            let (ens, origin) = &candidates[i];
            let (v, err) = scored[i];
            (v, Some(describe(ens, origin.clone(), v, alpha)), err)
        }
        None => (f64::NAN, None, f64::NAN),
    };
    let gap = best_value - ceiling;
    Ok(SearchReport {
        best_value_nats: best_value,
        ceiling_nats: ceiling,
        gap,
        regime,
        hypothetical: regime.is_hypothetical(),
        seed: config.seed,
        ensemble,
        covariance_error: cov_err,
        evaluations,
        candidate_violation: gap > config.violation_tolerance,
        budget_exhausted,
    })
}
