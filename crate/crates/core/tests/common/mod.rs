//! Independent oracles and instance pools shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use inspection_game::game::InspectionInstance;
use inspection_game::io::{generate_random_sets, RandomSetsConfig};
use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// `u(S, T)` straight from the monitoring sets.
pub fn brute_undetection(inst: &InspectionInstance, placement: &[usize], attack: &[usize]) -> f64 {
    attack
        .iter()
        .map(|&e| {
            placement
                .iter()
                .filter(|&&v| inst.monitoring_set(v).contains(&e))
                .map(|&v| 1.0 - inst.detection_prob(v))
                .product::<f64>()
        })
        .sum()
}

/// Payoff matrix over placements of size `r_D` (rows) and attack sets of
/// size `r_A` (columns). Larger sets weakly dominate smaller ones on both
/// sides, so these pure strategies suffice.
pub fn payoff_matrix(inst: &InspectionInstance) -> Vec<Vec<f64>> {
    let rows = subsets_of_size(inst.n(), inst.r_d());
    let cols = subsets_of_size(inst.m(), inst.r_a());
    rows.iter()
        .map(|s| cols.iter().map(|t| brute_undetection(inst, s, t)).collect())
        .collect()
}

/// `(min_x max_j, max_y min_i)` of the full matrix game, each solved as its
/// own LP with an external solver.
pub fn matrix_game_values(inst: &InspectionInstance) -> (f64, f64) {
    let a = payoff_matrix(inst);
    let (rows, cols) = (a.len(), a[0].len());

    let mut p = Problem::new(OptimizationDirection::Minimize);
    let x: Vec<_> = (0..rows).map(|_| p.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let v = p.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    for j in 0..cols {
        let mut expr: LinearExpr = (0..rows).map(|i| (x[i], a[i][j])).collect();
        expr.add(v, -1.0);
        p.add_constraint(expr, ComparisonOp::Le, 0.0);
    }
    p.add_constraint(x.iter().map(|&xi| (xi, 1.0)).collect::<LinearExpr>(), ComparisonOp::Eq, 1.0);
    let minmax = p.solve().expect("minmax LP solves").objective();

    let mut d = Problem::new(OptimizationDirection::Maximize);
    let y: Vec<_> = (0..cols).map(|_| d.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let w = d.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    for row in &a {
        let mut expr: LinearExpr = (0..cols).map(|j| (y[j], row[j])).collect();
        expr.add(w, -1.0);
        d.add_constraint(expr, ComparisonOp::Ge, 0.0);
    }
    d.add_constraint(y.iter().map(|&yj| (yj, 1.0)).collect::<LinearExpr>(), ComparisonOp::Eq, 1.0);
    let maxmin = d.solve().expect("maxmin LP solves").objective();
    (minmax, maxmin)
}

/// Minimum of `U(S, rho)` over all placements of size `r_D`, by brute force.
pub fn brute_best_response(inst: &InspectionInstance, rho: &[f64]) -> f64 {
    subsets_of_size(inst.n(), inst.r_d())
        .iter()
        .map(|s| (0..inst.m()).map(|e| rho[e] * brute_undetection(inst, s, &[e])).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Small random instances: `n <= 8`, `m <= 10`, `r_D <= 3`, `r_A <= 2`,
/// detection probabilities in `[p_low, p_high]`.
pub fn small_pool(count: usize, p_low: f64, p_high: f64, seed: u64) -> Vec<InspectionInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = rng.gen_range(2..=8);
            let m = rng.gen_range(2..=10);
            let cfg = RandomSetsConfig {
                n,
                m,
                density: rng.gen_range(0.15..0.5),
                p_low,
                p_high,
                r_d: rng.gen_range(1..=n.min(3)),
                r_a: rng.gen_range(1..=m.min(2)),
                seed: seed.wrapping_mul(1000).wrapping_add(i as u64),
            };
            generate_random_sets(&cfg).expect("pool instances are valid")
        })
        .collect()
}

/// A random point of the capped simplex with budget `r_a`.
pub fn random_marginal(rng: &mut ChaCha8Rng, m: usize, r_a: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let cap = r_a as f64;
    if total > cap || rng.gen_bool(0.3) {
        let f = rng.gen_range(0.5..1.0) * cap / total;
        raw.iter().map(|x| (x * f).min(1.0)).collect()
    } else {
        raw
    }
}

/// Euclidean projection onto `{x in [lo,1]^m : sum x <= r}` by bisection on
/// the shift.
fn euclidean_projection(y: &[f64], r: f64, lo: f64) -> Vec<f64> {
    let clip = |t: f64| -> Vec<f64> { y.iter().map(|v| (v - t).clamp(lo, 1.0)).collect() };
    let first = clip(0.0);
    if first.iter().sum::<f64>() <= r {
        return first;
    }
    let (mut a, mut b) = (0.0, y.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if clip(mid).iter().sum::<f64>() > r {
            a = mid;
        } else {
            b = mid;
        }
    }
    clip(b)
}

pub fn divergence(rho: &[f64], tilde: &[f64]) -> f64 {
    rho.iter()
        .zip(tilde)
        .map(|(&x, &y)| if x == 0.0 { y } else { x * (x / y).ln() + y - x })
        .sum()
}

/// Minimizes the relative entropy to `tilde` over the capped simplex by
/// projected gradient descent with backtracking.
pub fn projected_gradient_minimum(tilde: &[f64], r_a: usize) -> f64 {
    const FLOOR: f64 = 1e-12;
    let r = r_a as f64;
    let mut x = euclidean_projection(&vec![r / tilde.len() as f64; tilde.len()], r, FLOOR);
    let mut fx = divergence(&x, tilde);
    let mut step = 1.0;
    for _ in 0..100_000 {
        let grad: Vec<f64> = x.iter().zip(tilde).map(|(a, b)| (a / b).ln()).collect();
        let mut improved = false;
        while step > 1e-14 {
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
            let z = euclidean_projection(&trial, r, FLOOR);
            let fz = divergence(&z, tilde);
            let moved: f64 = z.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
            if fz <= fx - 1e-4 * moved / step {
                let gain = fx - fz;
                x = z;
                fx = fz;
                improved = gain > 1e-16;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    fx
}
