//! Multiplicative weights for the attacker against best-responding defenders.
//!
//! Starting from the uniform marginal `r_A / m`, every round the defender
//! best-responds to the current marginal, the attacker multiplies each entry
//! by `exp(eta * u(S, e))`, and the result is projected back onto the capped
//! simplex. The defender's empirical play and the attacker's average iterate
//! form the returned profile.

use std::time::Instant;

use crate::best_response::{best_response, BestResponseMode};
use crate::colgen::{certify, pricing_alpha, EquilibriumResult};
use crate::error::{Error, Result, ValidationError};
use crate::game::{top_k_sum, DetectorSet, InspectionInstance, MarginalAttackVector, MixedDefenderStrategy};
use crate::projection::{project_linear_detailed, PositiveVector};

/// How many rounds to run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// Enough rounds for an additive error of `epsilon`.
    Epsilon(f64),
    /// A fixed number of rounds.
    Rounds(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MwuConfig {
    pub schedule: Schedule,
    /// Step size; derived from the number of rounds when `None`.
    pub eta: Option<f64>,
    pub best_response: BestResponseMode,
}

impl MwuConfig {
    pub fn new(epsilon: f64, best_response: BestResponseMode) -> Self {
        Self {
            schedule: Schedule::Epsilon(epsilon),
            eta: None,
            best_response,
        }
    }
}

/// `max{ln(m / r_A), 1}`.
pub fn log_term(m: usize, r_a: usize) -> f64 {
    (m as f64 / r_a as f64).ln().max(1.0)
}

/// Rounds needed for additive error `epsilon`: `ceil(4 r_A^2 L / epsilon^2)`.
pub fn rounds_for(m: usize, r_a: usize, epsilon: f64) -> usize {
    let r = r_a as f64;
    (4.0 * r * r * log_term(m, r_a) / (epsilon * epsilon)).ceil() as usize
}

/// `sqrt(L / tau)`.
pub fn step_size(m: usize, r_a: usize, tau: usize) -> f64 {
    (log_term(m, r_a) / tau as f64).sqrt()
}

/// Additive error guaranteed by `tau` rounds, the inverse of [`rounds_for`].
pub fn epsilon_for(m: usize, r_a: usize, tau: usize) -> f64 {
    2.0 * r_a as f64 * (log_term(m, r_a) / tau as f64).sqrt()
}

/// Right-hand side of the regret inequality:
/// `r_A L / eta + eta tau r_A`.
pub fn regret_bound(m: usize, r_a: usize, eta: f64, tau: usize) -> f64 {
    let r = r_a as f64;
    r * log_term(m, r_a) / eta + eta * tau as f64 * r
}

/// One round, as reported to a trace callback.
#[derive(Debug, Clone, PartialEq)]
pub struct MwuIteration {
    pub iteration: usize,
    pub set: DetectorSet,
    /// `U(S_t, rho_t)`.
    pub value: f64,
    pub mu: f64,
    pub k_star: usize,
    pub clipped_only: bool,
}

/// The sequence of rounds of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MwuTrace {
    pub rounds: Vec<MwuIteration>,
}

impl MwuTrace {
    /// `max_rho sum_t U(S_t, rho) - sum_t U(S_t, rho_t)`.
    pub fn regret(&self, instance: &InspectionInstance) -> f64 {
        let mut coeffs = vec![0.0; instance.m()];
        let mut realized = 0.0;
        for round in &self.rounds {
            for (c, u) in coeffs.iter_mut().zip(instance.undetection_vector(&round.set)) {
                *c += u;
            }
            realized += round.value;
        }
        top_k_sum(&coeffs, instance.r_a()) - realized
    }
}

/// One update: best response to `rho_t`, multiplicative step, projection.
pub fn mwu_step(
    instance: &InspectionInstance,
    rho_t: &MarginalAttackVector,
    eta: f64,
    mode: BestResponseMode,
) -> Result<(DetectorSet, MarginalAttackVector)> {
    let (set, _, next) = step(instance, rho_t.values(), eta, mode)?;
    Ok((set, next.rho))
}

fn step(
    instance: &InspectionInstance,
    rho: &[f64],
    eta: f64,
    mode: BestResponseMode,
) -> Result<(DetectorSet, f64, crate::projection::Projection)> {
    if rho.len() != instance.m() {
        return Err(ValidationError::LengthMismatch {
            expected: instance.m(),
            actual: rho.len(),
        }
        .into());
    }
    if let Some(e) = rho.iter().position(|&x| x <= 0.0) {
        return Err(Error::Domain(format!("marginal entry {e} is not strictly positive")));
    }
    let (set, value) = best_response(instance, rho, mode)?;
    let u = instance.undetection_vector(&set);
    let tilde: Vec<f64> = rho.iter().zip(&u).map(|(r, u)| r * (eta * u).exp()).collect();
    let projection = project_linear_detailed(&PositiveVector::new(tilde)?, instance.r_a())?;
    Ok((set, value, projection))
}

pub fn solve_mwu(instance: &InspectionInstance, config: &MwuConfig) -> Result<EquilibriumResult> {
    solve_mwu_traced(instance, config, |_| {})
}

pub fn solve_mwu_traced(
    instance: &InspectionInstance,
    config: &MwuConfig,
    mut trace: impl FnMut(&MwuIteration),
) -> Result<EquilibriumResult> {
    let start = Instant::now();
    let (m, r_a) = (instance.m(), instance.r_a());
    let (tau, target) = match config.schedule {
        Schedule::Epsilon(eps) => {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(ValidationError::Config(format!("epsilon must be > 0, got {eps}")).into());
            }
            (rounds_for(m, r_a, eps).max(1), Some(eps))
        }
        Schedule::Rounds(0) => return Err(ValidationError::Config("at least one round is required".into()).into()),
        Schedule::Rounds(tau) => (tau, None),
    };
    // Fewer than L rounds would call for a step above one; such short runs
    // are allowed with the step capped, but carry no guarantee.
    let scheduled_eta = step_size(m, r_a, tau);
    let eta = match config.eta {
        Some(eta) if !(eta.is_finite() && (0.0..=1.0).contains(&eta)) => {
            return Err(ValidationError::Config(format!("eta must lie in [0, 1], got {eta}")).into());
        }
        Some(eta) => eta,
        None => scheduled_eta.min(1.0),
    };

    let mut rho = MarginalAttackVector::uniform(m, r_a).into_values();
    let mut rho_sum = vec![0.0; m];
    let mut plays = Vec::with_capacity(tau);
    for t in 1..=tau {
        for (acc, x) in rho_sum.iter_mut().zip(&rho) {
            *acc += x;
        }
        let (set, value, projection) = step(instance, &rho, eta, config.best_response)?;
        trace(&MwuIteration {
            iteration: t,
            set: set.clone(),
            value,
            mu: projection.mu,
            k_star: projection.k_star,
            clipped_only: projection.clipped_only,
        });
        plays.push(set);
        rho = projection.rho.into_values();
    }

    let sigma_d = MixedDefenderStrategy::from_plays(&plays)?;
    let rho_hat: Vec<f64> = rho_sum.iter().map(|x| (x / tau as f64).clamp(0.0, 1.0)).collect();
    let rho_a = MarginalAttackVector::new(rho_hat, r_a)?;
    let value = instance.expected_undetection(&sigma_d, &rho_a)?;
    let alpha = pricing_alpha(instance, config.best_response);
    let epsilon_used = target.unwrap_or_else(|| epsilon_for(m, r_a, tau));
    let guaranteed = alpha.is_finite() && eta == scheduled_eta;
    let certificates = certify(instance, &sigma_d, &rho_a, guaranteed)?;
    Ok(EquilibriumResult {
        sigma_d,
        rho_a,
        value,
        alpha_used: alpha,
        epsilon_used,
        iterations: tau,
        columns_generated: plays.len(),
        certificates,
        wall_ms: Some(start.elapsed().as_secs_f64() * 1e3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::tests::fig1;

    fn single(p: f64) -> InspectionInstance {
        InspectionInstance::from_indices(1, vec![vec![0]], vec![p], 1, 1).unwrap()
    }

    fn matching_pennies() -> InspectionInstance {
        InspectionInstance::from_indices(2, vec![vec![0], vec![1]], vec![1.0, 1.0], 1, 1).unwrap()
    }

    #[test]
    fn schedule_formulas() {
        assert_eq!(rounds_for(2, 1, 0.1), 400);
        assert!((step_size(2, 1, 400) - 0.05).abs() < 1e-15);
        assert!((epsilon_for(2, 1, 400) - 0.1).abs() < 1e-12);
        // ln(50) > 1 dominates for the large smoke-test shape.
        assert_eq!(rounds_for(1500, 30, 3.0), (400.0 * 50f64.ln()).ceil() as usize);
    }

    #[test]
    fn hand_traced_step() {
        // The best response is location 0, which catches every attack on
        // component 1 and none on component 0, so u(S, .) = (1, 0).
        let inst = InspectionInstance::from_indices(2, vec![vec![1], vec![0]], vec![1.0, 0.5], 1, 1).unwrap();
        let rho = MarginalAttackVector::uniform(2, 1);
        let (s, next) = mwu_step(&inst, &rho, 2f64.ln(), BestResponseMode::exact()).unwrap();
        assert_eq!(s, DetectorSet::new([0]));
        assert!((next.values()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((next.values()[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_step_and_perfect_detection_are_stationary() {
        let inst = fig1(2, 2);
        let rho = MarginalAttackVector::new(vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.2, 0.1], 2).unwrap();
        let (_, next) = mwu_step(&inst, &rho, 0.0, BestResponseMode::ForwardGreedy).unwrap();
        assert_eq!(next.values(), rho.values());

        let inst = InspectionInstance::from_indices(3, vec![vec![0, 1, 2]], vec![1.0], 1, 2).unwrap();
        let rho = MarginalAttackVector::new(vec![0.5, 0.7, 0.3], 2).unwrap();
        let (s, next) = mwu_step(&inst, &rho, 0.7, BestResponseMode::exact()).unwrap();
        assert_eq!(s, DetectorSet::new([0]));
        assert_eq!(next.values(), rho.values());
    }

    #[test]
    fn zero_entry_is_a_domain_error() {
        let rho = MarginalAttackVector::new(vec![0.0, 1.0], 1).unwrap();
        let r = mwu_step(&matching_pennies(), &rho, 0.1, BestResponseMode::exact());
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn matching_pennies_band() {
        let inst = matching_pennies();
        let mut trace = MwuTrace::default();
        let cfg = MwuConfig::new(0.1, BestResponseMode::exact());
        let r = solve_mwu_traced(&inst, &cfg, |it| trace.rounds.push(it.clone())).unwrap();
        let w = r.certificates.attacker_best_response;
        assert!((0.5..=0.6 + 1e-6).contains(&w), "{w}");
        assert_eq!(trace.rounds.len(), r.iterations);
        let eta = step_size(2, 1, r.iterations);
        assert!(trace.regret(&inst) <= regret_bound(2, 1, eta, r.iterations) + 1e-9);
        assert!(r.certificates.guaranteed);
    }

    #[test]
    fn single_location_band() {
        let r = solve_mwu(&single(0.6), &MwuConfig::new(0.05, BestResponseMode::exact())).unwrap();
        let w = r.certificates.attacker_best_response;
        assert!((0.4 - 1e-9..=0.45).contains(&w), "{w}");
        assert!((0.4 - 1e-9..=0.45).contains(&r.value), "{}", r.value);
    }

    #[test]
    fn single_round_plays_best_response_to_uniform() {
        let inst = fig1(2, 2);
        for mode in [BestResponseMode::exact(), BestResponseMode::ForwardGreedy, BestResponseMode::ReverseGreedy] {
            let cfg = MwuConfig {
                schedule: Schedule::Rounds(1),
                eta: None,
                best_response: mode,
            };
            let r = solve_mwu(&inst, &cfg).unwrap();
            let uniform = MarginalAttackVector::uniform(7, 2);
            let (expected, _) = best_response(&inst, uniform.values(), mode).unwrap();
            assert_eq!(r.sigma_d.support(), &[(expected, 1.0)]);
            assert_eq!(r.rho_a.values(), uniform.values());
        }
    }

    #[test]
    fn iterates_stay_positive() {
        let inst = fig1(1, 3);
        let mut rho = MarginalAttackVector::uniform(7, 3);
        for _ in 0..200 {
            rho = mwu_step(&inst, &rho, 1.0, BestResponseMode::ForwardGreedy).unwrap().1;
            assert!(rho.values().iter().all(|&x| x > 0.0));
            assert!(rho.total() <= 3.0 + 1e-9);
        }
    }

    #[test]
    fn rejects_large_step() {
        let cfg = MwuConfig {
            schedule: Schedule::Rounds(10),
            eta: Some(1.5),
            best_response: BestResponseMode::ForwardGreedy,
        };
        assert!(matches!(solve_mwu(&fig1(1, 1), &cfg), Err(Error::Validation(_))));
    }
}
