//! Conversion between mixed attack strategies and marginal attack vectors.

use crate::error::{Error, Result};
use crate::game::{MarginalAttackVector, MixedAttackStrategy, BOX_TOL, SUM_TOL};

const ZERO_TOL: f64 = 1e-12;

/// `rho_e = sum of the probabilities of the support sets containing e`.
pub fn marginals_of(attack: &MixedAttackStrategy, m: usize) -> MarginalAttackVector {
    let mut rho = vec![0.0; m];
    for (set, p) in attack.support() {
        for &e in set {
            rho[e] += p;
        }
    }
    MarginalAttackVector::from_values_unchecked(rho)
}

/// Box and budget membership test with a `1e-9` tolerance.
pub fn is_feasible_marginal(rho: &[f64], r_a: usize) -> bool {
    rho.iter().all(|&x| (-SUM_TOL..=1.0 + SUM_TOL).contains(&x))
        && rho.iter().sum::<f64>() <= r_a as f64 + SUM_TOL
}

/// Writes a marginal vector as a distribution over attack sets of size at
/// most `r_a`, with at most `m + 1` atoms.
///
/// Peels off one set per step. With `w` the probability mass still to be
/// assigned, the residual always satisfies `residual_e <= w` and
/// `sum residual <= r_a * w`. Each step takes the `min(r_a, #positive)`
/// largest residuals as the set and gives it the largest weight that keeps
/// every residual nonnegative and every excluded residual `<= w`. Every step
/// either zeroes a residual or makes an excluded residual tight, and both
/// states persist, so the loop runs at most `m` times before the leftover
/// mass goes to the empty set.
pub fn decompose(rho: &[f64], r_a: usize) -> Result<MixedAttackStrategy> {
    let m = rho.len();
    let mut residual = Vec::with_capacity(m);
    for (e, &x) in rho.iter().enumerate() {
        let x = if (-BOX_TOL..0.0).contains(&x) {
            0.0
        } else if x > 1.0 && x <= 1.0 + BOX_TOL {
            1.0
        } else {
            x
        };
        if !x.is_finite() || !(0.0..=1.0).contains(&x) {
            return Err(Error::InfeasibleMarginal(format!("entry {e} = {} outside [0,1]", rho[e])));
        }
        residual.push(x);
    }
    let total: f64 = residual.iter().sum();
    if r_a == 0 || total > r_a as f64 + SUM_TOL {
        return Err(Error::InfeasibleMarginal(format!("sum {total} exceeds r_A = {r_a}")));
    }

    let mut support: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut mass = 1.0;
    let mut order: Vec<usize> = (0..m).collect();
    for _ in 0..=m {
        for x in residual.iter_mut() {
            if *x < ZERO_TOL {
                *x = 0.0;
            }
        }
        let positive = residual.iter().filter(|&&x| x > 0.0).count();
        if positive == 0 || mass <= ZERO_TOL {
            break;
        }
        order.sort_by(|&a, &b| residual[b].total_cmp(&residual[a]).then(a.cmp(&b)));
        let take = r_a.min(positive);
        let chosen = &order[..take];
        let smallest_included = residual[chosen[take - 1]];
        let largest_excluded = order[take..].first().map_or(0.0, |&e| residual[e]);
        let weight = smallest_included.min(mass - largest_excluded).min(mass).max(0.0);
        if weight <= ZERO_TOL {
            // Residual violates the invariant only through rounding; stop peeling.
            break;
        }
        for &e in chosen {
            residual[e] -= weight;
        }
        mass -= weight;
        let mut set = chosen.to_vec();
        set.sort_unstable();
        support.push((set, weight));
    }
    if mass > ZERO_TOL || support.is_empty() {
        support.push((Vec::new(), mass.max(0.0)));
    }
    Ok(MixedAttackStrategy::from_support_unchecked(support))
}
