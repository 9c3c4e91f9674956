//! Column generation over the compact master LP.
//!
//! Each iteration solves the restricted master problem from scratch, reads
//! the attacker marginals and the convexity dual from its rows, and asks a
//! best-response oracle for a new defender placement. The loop stops as soon
//! as the priced column has reduced cost at least `-epsilon`, whether or not
//! that column is already in the master.

use std::collections::HashSet;
use std::time::Instant;

use crate::best_response::{
    best_response, binomial, exact_best_response, forward_greedy, reverse_greedy_factor, BestResponseMode,
    DEFAULT_ENUMERATION_CAP,
};
use crate::error::{Error, Result, ValidationError};
use crate::game::{DetectorSet, InspectionInstance, MarginalAttackVector, MixedDefenderStrategy};
use crate::lp::{build_rmp, solve_lp, LpStatus};

/// Slack added to `epsilon` in the stopping test to absorb LP round-off.
const PRICING_TOL: f64 = 1e-9;
const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum InitialColumns {
    /// The empty placement and forward greedy against the uniform marginal.
    #[default]
    GreedyUniform,
    EmptyOnly,
    Custom(Vec<DetectorSet>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColGenConfig {
    pub pricing: BestResponseMode,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub initial_columns: InitialColumns,
}

impl ColGenConfig {
    pub fn new(pricing: BestResponseMode, epsilon: f64) -> Self {
        Self {
            pricing,
            epsilon,
            max_iterations: 10_000,
            initial_columns: InitialColumns::default(),
        }
    }

    pub fn exact() -> Self {
        Self::new(BestResponseMode::exact(), 0.0)
    }

    fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(ValidationError::Config(format!("epsilon must be >= 0, got {}", self.epsilon)).into());
        }
        if self.max_iterations == 0 {
            return Err(ValidationError::Config("max_iterations must be positive".into()).into());
        }
        Ok(())
    }
}

/// Quality evidence attached to a solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificates {
    /// `max_rho U(sigma_D, rho)`: what a best-responding attacker achieves.
    pub attacker_best_response: f64,
    /// `min_S U(S, rho_A)` when it could be computed.
    pub defender_best_response: Option<f64>,
    /// `defender_best_response` is a lower bound rather than the exact minimum.
    pub defender_bound_only: bool,
    /// The run met the conditions under which the approximation guarantee holds.
    pub guaranteed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub sigma_d: MixedDefenderStrategy,
    pub rho_a: MarginalAttackVector,
    /// Solver's own value estimate: the master optimum for column generation,
    /// `U(sigma_D, rho_A)` for multiplicative weights.
    pub value: f64,
    /// Approximation factor of the pricing oracle; infinite when unbounded.
    pub alpha_used: f64,
    pub epsilon_used: f64,
    pub iterations: usize,
    pub columns_generated: usize,
    pub certificates: Certificates,
    pub wall_ms: Option<f64>,
}

/// One pass of the loop, as reported to a trace callback.
#[derive(Debug, Clone, PartialEq)]
pub struct ColGenIteration {
    pub iteration: usize,
    pub master_value: f64,
    pub reduced_cost: f64,
    pub columns: usize,
}

/// `c_S = U(S, rho) - nu`.
pub fn reduced_cost(instance: &InspectionInstance, set: &DetectorSet, rho: &[f64], nu: f64) -> f64 {
    instance.placement_value(set, rho) - nu
}

/// Approximation factor used for certificates under a given oracle.
pub fn pricing_alpha(instance: &InspectionInstance, mode: BestResponseMode) -> f64 {
    match mode {
        BestResponseMode::Exact { .. } => 1.0,
        BestResponseMode::ForwardGreedy | BestResponseMode::ReverseGreedy => reverse_greedy_factor(instance),
    }
}

pub fn solve_colgen(instance: &InspectionInstance, config: &ColGenConfig) -> Result<EquilibriumResult> {
    solve_colgen_traced(instance, config, |_| {})
}

pub fn solve_colgen_traced(
    instance: &InspectionInstance,
    config: &ColGenConfig,
    mut trace: impl FnMut(&ColGenIteration),
) -> Result<EquilibriumResult> {
    config.validate()?;
    let start = Instant::now();
    let m = instance.m();

    let mut columns: Vec<DetectorSet> = Vec::new();
    let mut known: HashSet<DetectorSet> = HashSet::new();
    let seed = match &config.initial_columns {
        InitialColumns::GreedyUniform => vec![
            DetectorSet::empty(),
            forward_greedy(instance, MarginalAttackVector::uniform(m, instance.r_a()).values()),
        ],
        InitialColumns::EmptyOnly => vec![DetectorSet::empty()],
        InitialColumns::Custom(cols) => cols.clone(),
    };
    for col in seed {
        instance.check_detector_set(&col, true)?;
        if known.insert(col.clone()) {
            columns.push(col);
        }
    }
    let initial = columns.len();

    let mut iteration = 0;
    loop {
        iteration += 1;
        let master = solve_master(instance, &columns)?;
        let (candidate, value) = best_response(instance, &master.rho, config.pricing)?;
        let rc = value - master.nu;
        trace(&ColGenIteration {
            iteration,
            master_value: master.value,
            reduced_cost: rc,
            columns: columns.len(),
        });

        let converged = rc >= -config.epsilon - PRICING_TOL;
        if converged || iteration >= config.max_iterations {
            let result = finish(instance, config, &columns, master, iteration, columns.len() - initial, start)?;
            if converged {
                return Ok(result);
            }
            return Err(Error::NonConvergence {
                iterations: iteration,
                incumbent: Box::new(result),
            });
        }
        if known.contains(&candidate) {
            return Err(Error::NumericalInconsistency(format!(
                "column {:?} already in the master prices at {rc}",
                candidate.members()
            )));
        }
        known.insert(candidate.clone());
        columns.push(candidate);
    }
}

struct MasterSolution {
    value: f64,
    weights: Vec<f64>,
    rho: Vec<f64>,
    nu: f64,
}

fn solve_master(instance: &InspectionInstance, columns: &[DetectorSet]) -> Result<MasterSolution> {
    let (lp, layout) = build_rmp(instance, columns)?;
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::SolverFailure {
            pivots: sol.pivots,
            reason: format!("master problem reported {:?}", sol.status),
        });
    }
    let mut rho: Vec<f64> = sol.duals[..layout.m].iter().map(|y| y.clamp(0.0, 1.0)).collect();
    let total: f64 = rho.iter().sum();
    let cap = instance.r_a() as f64;
    if total > cap {
        rho.iter_mut().for_each(|x| *x *= cap / total);
    }
    Ok(MasterSolution {
        value: sol.objective,
        weights: (0..columns.len()).map(|k| sol.primal[layout.sigma(k)]).collect(),
        rho,
        nu: sol.duals[layout.convexity_row()],
    })
}

fn finish(
    instance: &InspectionInstance,
    config: &ColGenConfig,
    columns: &[DetectorSet],
    master: MasterSolution,
    iterations: usize,
    columns_generated: usize,
    start: Instant,
) -> Result<EquilibriumResult> {
    let sigma_d = normalize_weights(columns, &master.weights)?;
    let rho_a = MarginalAttackVector::new(master.rho, instance.r_a())?;
    let alpha = pricing_alpha(instance, config.pricing);
    let certificates = certify(instance, &sigma_d, &rho_a, alpha.is_finite())?;
    Ok(EquilibriumResult {
        sigma_d,
        rho_a,
        value: master.value,
        alpha_used: alpha,
        epsilon_used: config.epsilon,
        iterations,
        columns_generated,
        certificates,
        wall_ms: Some(start.elapsed().as_secs_f64() * 1e3),
    })
}

fn normalize_weights(columns: &[DetectorSet], weights: &[f64]) -> Result<MixedDefenderStrategy> {
    let kept: Vec<(DetectorSet, f64)> = columns
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > WEIGHT_FLOOR)
        .map(|(s, &w)| (s.clone(), w))
        .collect();
    let total: f64 = kept.iter().map(|(_, w)| w).sum();
    if kept.is_empty() || total <= 0.0 {
        return Err(Error::NumericalInconsistency("master solution has no positive weight".into()));
    }
    MixedDefenderStrategy::new(kept.into_iter().map(|(s, w)| (s, w / total)).collect())
}

/// Attacker best response against `sigma`, plus the exact defender best
/// response against `rho` whenever enumeration fits the default cap.
pub fn certify(
    instance: &InspectionInstance,
    sigma: &MixedDefenderStrategy,
    rho: &MarginalAttackVector,
    guaranteed: bool,
) -> Result<Certificates> {
    let (attacker, _) = instance.worst_case_attack_value(sigma)?;
    let defender = if binomial(instance.n(), instance.r_d()) <= DEFAULT_ENUMERATION_CAP {
        Some(exact_best_response(instance, rho.values(), DEFAULT_ENUMERATION_CAP)?.1)
    } else {
        None
    };
    Ok(Certificates {
        attacker_best_response: attacker,
        defender_best_response: defender,
        defender_bound_only: false,
        guaranteed,
    })
}
