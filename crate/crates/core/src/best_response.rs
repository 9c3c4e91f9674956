//! Defender best responses against a marginal attack vector.
//!
//! `U(., rho)` is nonincreasing and supermodular in the placement, so the
//! greedy heuristics come with curvature-dependent guarantees. The exact
//! oracle enumerates every placement of size `r_D` and is only meant for
//! small instances.

use crate::error::{Error, Result};
use crate::game::{DetectorSet, InspectionInstance};

/// Default cap on the number of placements the exact oracle may enumerate.
pub const DEFAULT_ENUMERATION_CAP: u128 = 2_000_000;

const CURVATURE_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BestResponseMode {
    Exact { cap: u128 },
    ForwardGreedy,
    ReverseGreedy,
}

impl BestResponseMode {
    pub fn exact() -> Self {
        Self::Exact { cap: DEFAULT_ENUMERATION_CAP }
    }
}

/// Curvature of `U(., rho)` together with the approximation factors it implies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureReport {
    pub c: f64,
    /// Maximum number of locations monitoring a single component.
    pub d: usize,
    /// `1 - (1 - max p)^d`, an upper bound on `c`.
    pub bound: f64,
    /// `1 / (1 - c)`; infinite when `c = 1`.
    pub alpha_reverse: f64,
    /// Forward greedy guarantee `U <= multiplier * OPT + additive`.
    pub forward_multiplier: f64,
    pub forward_additive: f64,
}

impl CurvatureReport {
    /// No polynomial-time approximation exists when the curvature is one.
    pub fn inapproximable(&self) -> bool {
        self.alpha_reverse.is_infinite()
    }
}

/// `(1 - e^{-c}) / c`, with the limit 1 at `c = 0`.
pub fn forward_multiplier(c: f64) -> f64 {
    if c < CURVATURE_ZERO {
        1.0
    } else {
        -(-c).exp_m1() / c
    }
}

/// `C(n, k)` computed without overflow for the sizes we care about; saturates.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

pub fn best_response(
    instance: &InspectionInstance,
    rho: &[f64],
    mode: BestResponseMode,
) -> Result<(DetectorSet, f64)> {
    match mode {
        BestResponseMode::Exact { cap } => exact_best_response(instance, rho, cap),
        BestResponseMode::ForwardGreedy => {
            let s = forward_greedy(instance, rho);
            let value = instance.placement_value(&s, rho);
            Ok((s, value))
        }
        BestResponseMode::ReverseGreedy => {
            let s = reverse_greedy(instance, rho);
            let value = instance.placement_value(&s, rho);
            Ok((s, value))
        }
    }
}

/// Minimizes `U(S, rho)` over all `|S| = r_D` by enumeration in
/// lexicographic order; the first minimizer wins ties.
pub fn exact_best_response(instance: &InspectionInstance, rho: &[f64], cap: u128) -> Result<(DetectorSet, f64)> {
    let n = instance.n();
    let k = instance.r_d().min(n);
    let count = binomial(n, k);
    if count > cap {
        return Err(Error::SizeLimit { count, cap });
    }

    let mut combo: Vec<usize> = (0..k).collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut prod = vec![1.0; instance.m()];
    loop {
        prod.iter_mut().for_each(|x| *x = 1.0);
        for &v in &combo {
            let q = 1.0 - instance.detection_prob(v);
            for &e in instance.monitoring_set(v) {
                prod[e] *= q;
            }
        }
        let value: f64 = prod.iter().zip(rho).map(|(u, r)| u * r).sum();
        if best.as_ref().is_none_or(|(_, b)| value < *b) {
            best = Some((combo.clone(), value));
        }
        if !next_combination(&mut combo, n) {
            break;
        }
    }
    let (set, value) = best.expect("at least one combination");
    Ok((DetectorSet::new(set), value))
}

fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Adds, `r_D` times, the location with the largest marginal decrease.
pub fn forward_greedy(instance: &InspectionInstance, rho: &[f64]) -> DetectorSet {
    let n = instance.n();
    // prod[e] = u(S, e) for the current S.
    let mut prod = vec![1.0; instance.m()];
    let mut chosen = vec![false; n];
    let mut members = Vec::with_capacity(instance.r_d());
    for _ in 0..instance.r_d() {
        let mut best: Option<(usize, f64)> = None;
        for v in (0..n).filter(|&v| !chosen[v]) {
            let p = instance.detection_prob(v);
            let gain: f64 = instance.monitoring_set(v).iter().map(|&e| rho[e] * prod[e]).sum::<f64>() * p;
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((v, gain));
            }
        }
        let Some((v, _)) = best else { break };
        chosen[v] = true;
        members.push(v);
        let q = 1.0 - instance.detection_prob(v);
        for &e in instance.monitoring_set(v) {
            prod[e] *= q;
        }
    }
    DetectorSet::new(members)
}

/// Per-component product over the current placement, tracked as the number
/// of perfect detectors plus the product of the remaining factors so that a
/// single detector can be divided back out.
struct CoverageProducts {
    perfect: Vec<u32>,
    partial: Vec<f64>,
}

impl CoverageProducts {
    fn full(instance: &InspectionInstance) -> Self {
        let mut perfect = vec![0; instance.m()];
        let mut partial = vec![1.0; instance.m()];
        for v in 0..instance.n() {
            let p = instance.detection_prob(v);
            for &e in instance.monitoring_set(v) {
                if p >= 1.0 {
                    perfect[e] += 1;
                } else {
                    partial[e] *= 1.0 - p;
                }
            }
        }
        Self { perfect, partial }
    }

    /// `u(S \ {v}, e)` where `v` is in the current placement and monitors `e`.
    fn without(&self, e: usize, p: f64) -> f64 {
        if p >= 1.0 {
            if self.perfect[e] == 1 {
                self.partial[e]
            } else {
                0.0
            }
        } else if self.perfect[e] > 0 {
            0.0
        } else {
            self.partial[e] / (1.0 - p)
        }
    }

    fn remove(&mut self, e: usize, p: f64) {
        if p >= 1.0 {
            self.perfect[e] -= 1;
        } else {
            self.partial[e] /= 1.0 - p;
        }
    }
}

/// Starts from every location and removes, while more than `r_D` remain,
/// the one whose removal increases `U` the least.
pub fn reverse_greedy(instance: &InspectionInstance, rho: &[f64]) -> DetectorSet {
    let n = instance.n();
    let mut products = CoverageProducts::full(instance);
    let mut present = vec![true; n];
    let mut remaining = n;
    while remaining > instance.r_d() {
        let mut best: Option<(usize, f64)> = None;
        for v in (0..n).filter(|&v| present[v]) {
            let p = instance.detection_prob(v);
            let loss: f64 = instance
                .monitoring_set(v)
                .iter()
                .map(|&e| rho[e] * products.without(e, p))
                .sum::<f64>()
                * p;
            if best.is_none_or(|(_, l)| loss < l) {
                best = Some((v, loss));
            }
        }
        let (v, _) = best.expect("nonempty placement");
        present[v] = false;
        remaining -= 1;
        let p = instance.detection_prob(v);
        for &e in instance.monitoring_set(v) {
            products.remove(e, p);
        }
    }
    DetectorSet::new((0..n).filter(|&v| present[v]))
}

/// Curvature from the closed forms of the first and last marginal decrease.
pub fn curvature(instance: &InspectionInstance, rho: &[f64]) -> CurvatureReport {
    let products = CoverageProducts::full(instance);
    let mut min_ratio: Option<f64> = None;
    for v in 0..instance.n() {
        let p = instance.detection_prob(v);
        let first: f64 = p * instance.monitoring_set(v).iter().map(|&e| rho[e]).sum::<f64>();
        if first <= 0.0 {
            continue;
        }
        let last: f64 = p * instance
            .monitoring_set(v)
            .iter()
            .map(|&e| rho[e] * products.without(e, p))
            .sum::<f64>();
        let ratio = last / first;
        min_ratio = Some(min_ratio.map_or(ratio, |r: f64| r.min(ratio)));
    }
    let c = min_ratio.map_or(0.0, |r| (1.0 - r).clamp(0.0, 1.0));
    let d = instance.max_monitor_degree();
    let bound = 1.0 - (1.0 - instance.max_detection_prob()).powi(d as i32);
    let alpha_reverse = if c >= 1.0 { f64::INFINITY } else { 1.0 / (1.0 - c) };
    let forward_multiplier = forward_multiplier(c);
    CurvatureReport {
        c,
        d,
        bound,
        alpha_reverse,
        forward_multiplier,
        forward_additive: (1.0 - forward_multiplier) * instance.r_a() as f64,
    }
}

/// Worst-case reverse greedy factor `1 / (1 - max p)^d`, infinite when some
/// location detects perfectly.
pub fn reverse_greedy_factor(instance: &InspectionInstance) -> f64 {
    let base = (1.0 - instance.max_detection_prob()).powi(instance.max_monitor_degree() as i32);
    if base <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / base
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::tests::fig1;

    const UNIFORM: f64 = 2.0 / 7.0;

    fn naive_gain(instance: &InspectionInstance, s: &DetectorSet, v: usize, rho: &[f64]) -> f64 {
        let with: DetectorSet = s.members().iter().copied().chain([v]).collect();
        instance.placement_value(s, rho) - instance.placement_value(&with, rho)
    }

    #[test]
    fn exact_examples() {
        let inst = fig1(1, 2);
        let rho = vec![UNIFORM; 7];
        let (s, value) = exact_best_response(&inst, &rho, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(s, DetectorSet::new([2]));
        assert!((value - (2.0 - 5.0 / 7.0)).abs() < 1e-12);

        let (_, value) = exact_best_response(&inst, &[0.0; 7], DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(value, 0.0);

        let disjoint = InspectionInstance::from_indices(2, vec![vec![0], vec![1]], vec![1.0, 1.0], 1, 1).unwrap();
        let (s, value) = exact_best_response(&disjoint, &[0.6, 0.4], DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(s, DetectorSet::new([0]));
        assert!((value - 0.4).abs() < 1e-15);
    }

    #[test]
    fn exact_respects_cap() {
        let inst = fig1(2, 2);
        let err = exact_best_response(&inst, &[0.1; 7], 5).unwrap_err();
        assert!(matches!(err, Error::SizeLimit { count: 6, cap: 5 }));
    }

    #[test]
    fn forward_examples() {
        let inst = fig1(1, 2);
        assert_eq!(forward_greedy(&inst, &[UNIFORM; 7]), DetectorSet::new([2]));
        let inst2 = fig1(2, 2);
        assert_eq!(forward_greedy(&inst2, &[UNIFORM; 7]), DetectorSet::new([0, 2]));
        assert_eq!(forward_greedy(&inst2, &[0.0; 7]), DetectorSet::new([0, 1]));
    }

    #[test]
    fn reverse_examples() {
        let inst = fig1(3, 2);
        assert_eq!(reverse_greedy(&inst, &[UNIFORM; 7]), DetectorSet::new([0, 1, 2]));
        let all = fig1(4, 2);
        assert_eq!(reverse_greedy(&all, &[UNIFORM; 7]), DetectorSet::new([0, 1, 2, 3]));
        let two = fig1(2, 2);
        assert_eq!(reverse_greedy(&two, &[0.0; 7]), DetectorSet::new([2, 3]));
    }

    #[test]
    fn greedy_gains_match_naive_recomputation() {
        let inst = InspectionInstance::from_indices(
            5,
            vec![vec![0, 1], vec![1, 2, 3], vec![3, 4], vec![0, 4], vec![2]],
            vec![0.3, 1.0, 0.7, 0.45, 0.9],
            2,
            2,
        )
        .unwrap();
        let rho = [0.4, 0.3, 0.5, 0.2, 0.6];
        // Forward: recompute the greedy sequence naively.
        let mut s = DetectorSet::empty();
        for _ in 0..inst.r_d() {
            let v = (0..inst.n())
                .filter(|v| !s.contains(*v))
                .fold(None::<(usize, f64)>, |best, v| {
                    let g = naive_gain(&inst, &s, v, &rho);
                    match best {
                        Some((_, bg)) if g <= bg => best,
                        _ => Some((v, g)),
                    }
                })
                .unwrap()
                .0;
            s = s.members().iter().copied().chain([v]).collect();
        }
        assert_eq!(forward_greedy(&inst, &rho), s);

        let mut s: DetectorSet = (0..inst.n()).collect();
        while s.len() > inst.r_d() {
            let v = s
                .members()
                .iter()
                .fold(None::<(usize, f64)>, |best, &v| {
                    let without: DetectorSet = s.members().iter().copied().filter(|&w| w != v).collect();
                    let l = naive_gain(&inst, &without, v, &rho);
                    match best {
                        Some((_, bl)) if l >= bl => best,
                        _ => Some((v, l)),
                    }
                })
                .unwrap()
                .0;
            s = s.members().iter().copied().filter(|&w| w != v).collect();
        }
        assert_eq!(reverse_greedy(&inst, &rho), s);
    }

    #[test]
    fn curvature_examples() {
        let inst = fig1(2, 2);
        let report = curvature(&inst, &[UNIFORM; 7]);
        assert!((report.c - 0.5).abs() < 1e-12);
        assert_eq!(report.d, 2);
        assert!((report.bound - 0.75).abs() < 1e-15);
        assert!((report.alpha_reverse - 2.0).abs() < 1e-12);
        assert!(report.c <= report.bound + 1e-9);

        let disjoint =
            InspectionInstance::from_indices(3, vec![vec![0], vec![1, 2]], vec![0.7, 0.4], 1, 1).unwrap();
        assert_eq!(curvature(&disjoint, &[0.2, 0.3, 0.1]).c, 0.0);
        let zero = curvature(&inst, &[0.0; 7]);
        assert_eq!(zero.c, 0.0);
        assert_eq!(zero.forward_multiplier, 1.0);
        assert_eq!(zero.forward_additive, 0.0);
    }

    #[test]
    fn curvature_one_is_flagged() {
        let inst = InspectionInstance::from_indices(1, vec![vec![0], vec![0]], vec![1.0, 1.0], 1, 1).unwrap();
        let report = curvature(&inst, &[1.0]);
        assert_eq!(report.c, 1.0);
        assert!(report.inapproximable());
        assert!(reverse_greedy_factor(&inst).is_infinite());
    }

    #[test]
    fn forward_multiplier_is_stable() {
        assert_eq!(forward_multiplier(0.0), 1.0);
        let small = forward_multiplier(1e-9);
        assert!((small - (1.0 - 5e-10)).abs() < 1e-15);
        assert!((forward_multiplier(1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(8, 3), 56);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(5, 5), 1);
        assert_eq!(binomial(200, 20), 1_613_587_787_967_350_073_386_147_640_u128);
    }
}
