//! Relative entropy projection onto the capped simplex
//! `{rho in [0,1]^m : sum rho <= r_A}`.
//!
//! The minimizer of `D(rho || rho~)` is `min(mu * rho~_e, 1)` for a single
//! scale `mu`. When clipping alone is feasible, `mu = 1`. Otherwise let
//! `rho~` be sorted decreasingly and
//!
//! ```text
//! g(k) = k + (1 / rho~_k) * sum_{j > k} rho~_j,   g(0) = 0,
//! ```
//!
//! then with `k* = max{k <= r_A : g(k) <= r_A}` the scale is
//! `mu = (r_A - k*) / sum_{j > k*} rho~_j`: the `k*` largest entries saturate
//! at one and the rest share the remaining budget proportionally.

use crate::error::{Error, Result, ValidationError};
use crate::game::MarginalAttackVector;
use crate::select::{kth_largest, VisitCounter};

/// Tolerance for routing the boundary `sum min(rho~, 1) = r_A` to the
/// clipping case.
const CLIP_TOL: f64 = 1e-12;

/// A vector with strictly positive finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveVector(Vec<f64>);

impl PositiveVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((e, x)) = values.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::Domain(format!("entry {e} = {x} is not strictly positive")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Unnormalized relative entropy `sum_e rho_e ln(rho_e / rho~_e) + rho~_e - rho_e`,
/// with `0 ln 0 = 0`.
pub fn divergence(rho: &[f64], rho_tilde: &PositiveVector) -> Result<f64> {
    if rho.len() != rho_tilde.len() {
        return Err(ValidationError::LengthMismatch {
            expected: rho_tilde.len(),
            actual: rho.len(),
        }
        .into());
    }
    let mut total = 0.0;
    for (e, (&x, &y)) in rho.iter().zip(rho_tilde.values()).enumerate() {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::Domain(format!("entry {e} = {x} is negative")));
        }
        let entropy = if x == 0.0 { 0.0 } else { x * (x / y).ln() };
        total += entropy + y - x;
    }
    Ok(total)
}

/// A projection together with the quantities that determined it.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub rho: MarginalAttackVector,
    pub mu: f64,
    /// Number of entries forced to one by the budget; zero in the clipping case.
    pub k_star: usize,
    /// `true` when clipping to the box already satisfied the budget.
    pub clipped_only: bool,
    /// Element touches spent locating `mu` (linear variant only).
    pub visits: usize,
}

fn clipping_suffices(rho_tilde: &[f64], r_a: usize) -> bool {
    rho_tilde.iter().map(|x| x.min(1.0)).sum::<f64>() <= r_a as f64 + CLIP_TOL
}

fn scaled(rho_tilde: &[f64], mu: f64) -> MarginalAttackVector {
    MarginalAttackVector::from_values_unchecked(rho_tilde.iter().map(|x| (mu * x).min(1.0)).collect())
}

fn check_budget(rho_tilde: &PositiveVector, r_a: usize) -> Result<()> {
    if r_a == 0 {
        return Err(Error::Domain("r_A must be positive".into()));
    }
    if rho_tilde.is_empty() {
        return Err(Error::Domain("empty vector".into()));
    }
    Ok(())
}

/// Reference projection via a full sort.
pub fn project_sorted(rho_tilde: &PositiveVector, r_a: usize) -> Result<MarginalAttackVector> {
    project_sorted_detailed(rho_tilde, r_a).map(|p| p.rho)
}

pub fn project_sorted_detailed(rho_tilde: &PositiveVector, r_a: usize) -> Result<Projection> {
    check_budget(rho_tilde, r_a)?;
    let x = rho_tilde.values();
    if clipping_suffices(x, r_a) {
        return Ok(Projection {
            rho: scaled(x, 1.0),
            mu: 1.0,
            k_star: 0,
            clipped_only: true,
            visits: 0,
        });
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    // tail[k] = sum of sorted[k..]
    let mut tail = vec![0.0; sorted.len() + 1];
    for k in (0..sorted.len()).rev() {
        tail[k] = tail[k + 1] + sorted[k];
    }
    let budget = r_a as f64;
    let mut k_star = 0;
    for k in 1..=r_a.min(sorted.len()) {
        if k as f64 + tail[k] / sorted[k - 1] <= budget {
            k_star = k;
        } else {
            break;
        }
    }
    let mu = (budget - k_star as f64) / tail[k_star];
    Ok(Projection {
        rho: scaled(x, mu),
        mu,
        k_star,
        clipped_only: false,
        visits: 0,
    })
}

/// Linear-time projection: a binary search for `k*` over value classes,
/// splitting at the upper median found by deterministic selection.
pub fn project_linear(rho_tilde: &PositiveVector, r_a: usize) -> Result<MarginalAttackVector> {
    project_linear_detailed(rho_tilde, r_a).map(|p| p.rho)
}

pub fn project_linear_detailed(rho_tilde: &PositiveVector, r_a: usize) -> Result<Projection> {
    check_budget(rho_tilde, r_a)?;
    let x = rho_tilde.values();
    let mut visits = VisitCounter(x.len());
    if clipping_suffices(x, r_a) {
        return Ok(Projection {
            rho: scaled(x, 1.0),
            mu: 1.0,
            k_star: 0,
            clipped_only: true,
            visits: visits.0,
        });
    }

    let budget = r_a as f64;
    let mut free = x.to_vec();
    let mut k = 0usize;
    let mut s = 0.0;
    while !free.is_empty() {
        let split = kth_largest(&free, free.len().div_ceil(2), &mut visits);
        let mut high = Vec::new();
        let mut low = Vec::new();
        let mut equal = 0usize;
        let mut low_sum = 0.0;
        for &v in &free {
            if v > split {
                high.push(v);
            } else if v < split {
                low_sum += v;
                low.push(v);
            } else {
                equal += 1;
            }
        }
        visits.0 += free.len();
        let upto = k + high.len() + equal;
        if upto as f64 + (low_sum + s) / split <= budget {
            k = upto;
            free = low;
        } else {
            s += split * equal as f64 + low_sum;
            free = high;
        }
    }
    let mu = (budget - k as f64) / s;
    Ok(Projection {
        rho: scaled(x, mu),
        mu,
        k_star: k,
        clipped_only: false,
        visits: visits.0,
    })
}
