//! Game model: instances, pure and mixed strategies, and the undetection payoff.
//!
//! Locations and components are addressed by dense 0-based indices. The
//! external names given at construction are kept for serialization only.
//!
//! The undetection function of a placement `S` and an attack set `T` is
//!
//! ```text
//! u(S, T) = sum_{e in T} prod_{v in S : e in C_v} (1 - p_v)
//! ```
//!
//! and every mixed or marginal payoff in this crate reduces to the
//! per-component coefficients `u(S, e)`.

use std::collections::BTreeSet;

use serde_json::Value;

use crate::error::{Error, Result, ValidationError};

/// Tolerance for probability sums and marginal budget checks.
pub const SUM_TOL: f64 = 1e-9;
/// Tolerance for the unit box of marginal vectors.
pub const BOX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct InspectionInstance {
    location_names: Vec<String>,
    component_names: Vec<String>,
    monitoring: Vec<Vec<usize>>,
    detection: Vec<f64>,
    monitors: Vec<Vec<usize>>,
    r_d: usize,
    r_a: usize,
    metadata: Option<Value>,
}

impl InspectionInstance {
    /// Builds and validates an instance.
    ///
    /// `monitoring[v]` lists the component indices observable from location
    /// `v`; duplicates are removed and the lists are stored sorted.
    pub fn new(
        location_names: Vec<String>,
        component_names: Vec<String>,
        monitoring: Vec<Vec<usize>>,
        detection: Vec<f64>,
        r_d: usize,
        r_a: usize,
    ) -> Result<Self> {
        let n = location_names.len();
        let m = component_names.len();
        if n == 0 {
            return Err(ValidationError::NoLocations.into());
        }
        if m == 0 {
            return Err(ValidationError::NoComponents.into());
        }
        check_unique(&location_names)?;
        check_unique(&component_names)?;
        if monitoring.len() != n {
            return Err(ValidationError::LengthMismatch { expected: n, actual: monitoring.len() }.into());
        }
        if detection.len() != n {
            return Err(ValidationError::LengthMismatch { expected: n, actual: detection.len() }.into());
        }

        let mut sets = Vec::with_capacity(n);
        let mut monitors = vec![Vec::new(); m];
        for (v, raw) in monitoring.into_iter().enumerate() {
            let set: BTreeSet<usize> = raw.into_iter().collect();
            if set.is_empty() {
                return Err(ValidationError::EmptyMonitoringSet(location_names[v].clone()).into());
            }
            if let Some(&bad) = set.iter().find(|&&e| e >= m) {
                return Err(ValidationError::UnknownComponent(bad).into());
            }
            for &e in &set {
                monitors[e].push(v);
            }
            sets.push(set.into_iter().collect::<Vec<_>>());
        }
        if let Some(e) = monitors.iter().position(Vec::is_empty) {
            return Err(ValidationError::UnmonitoredComponent(component_names[e].clone()).into());
        }
        for (v, &p) in detection.iter().enumerate() {
            if !(p > 0.0 && p <= 1.0) {
                return Err(ValidationError::DetectionProbability {
                    location: location_names[v].clone(),
                    value: p,
                }
                .into());
            }
        }
        if r_d == 0 || r_d > n {
            return Err(ValidationError::DefenderBudget { r_d, n }.into());
        }
        if r_a == 0 || r_a > m {
            return Err(ValidationError::AttackerBudget { r_a, m }.into());
        }

        Ok(Self {
            location_names,
            component_names,
            monitoring: sets,
            detection,
            monitors,
            r_d,
            r_a,
            metadata: None,
        })
    }

    /// Same as [`new`](Self::new) with generated names `v1..vn` and `e1..em`.
    pub fn from_indices(
        m: usize,
        monitoring: Vec<Vec<usize>>,
        detection: Vec<f64>,
        r_d: usize,
        r_a: usize,
    ) -> Result<Self> {
        let locations = (1..=monitoring.len()).map(|i| format!("v{i}")).collect();
        let components = (1..=m).map(|i| format!("e{i}")).collect();
        Self::new(locations, components, monitoring, detection, r_d, r_a)
    }

    pub fn with_metadata(mut self, metadata: Value) -> Self {
        self.metadata = Some(metadata);
        self
    }

    /// Returns a copy with different budgets.
    pub fn with_budgets(&self, r_d: usize, r_a: usize) -> Result<Self> {
        if r_d == 0 || r_d > self.n() {
            return Err(ValidationError::DefenderBudget { r_d, n: self.n() }.into());
        }
        if r_a == 0 || r_a > self.m() {
            return Err(ValidationError::AttackerBudget { r_a, m: self.m() }.into());
        }
        let mut out = self.clone();
        out.r_d = r_d;
        out.r_a = r_a;
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.location_names.len()
    }

    pub fn m(&self) -> usize {
        self.component_names.len()
    }

    pub fn r_d(&self) -> usize {
        self.r_d
    }

    pub fn r_a(&self) -> usize {
        self.r_a
    }

    pub fn location_names(&self) -> &[String] {
        &self.location_names
    }

    pub fn component_names(&self) -> &[String] {
        &self.component_names
    }

    pub fn metadata(&self) -> Option<&Value> {
        self.metadata.as_ref()
    }

    /// Monitoring set `C_v` as sorted component indices.
    pub fn monitoring_set(&self, v: usize) -> &[usize] {
        &self.monitoring[v]
    }

    /// Locations able to monitor component `e`, ascending.
    pub fn monitors_of(&self, e: usize) -> &[usize] {
        &self.monitors[e]
    }

    pub fn detection_prob(&self, v: usize) -> f64 {
        self.detection[v]
    }

    pub fn detection_probs(&self) -> &[f64] {
        &self.detection
    }

    pub fn max_detection_prob(&self) -> f64 {
        self.detection.iter().copied().fold(0.0, f64::max)
    }

    /// Maximum number of locations monitoring a single component.
    pub fn max_monitor_degree(&self) -> usize {
        self.monitors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn check_detector_set(&self, set: &DetectorSet, enforce_budget: bool) -> Result<()> {
        if let Some(&v) = set.members().iter().find(|&&v| v >= self.n()) {
            return Err(ValidationError::UnknownLocation(v).into());
        }
        if enforce_budget && set.len() > self.r_d {
            return Err(ValidationError::DefenderSetTooLarge { size: set.len(), r_d: self.r_d }.into());
        }
        Ok(())
    }

    /// `u(S, e)` for every component `e`. Indices in `set` must be valid.
    pub fn undetection_vector(&self, set: &DetectorSet) -> Vec<f64> {
        let mut out = vec![1.0; self.m()];
        for &v in set.members() {
            let q = 1.0 - self.detection[v];
            for &e in &self.monitoring[v] {
                out[e] *= q;
            }
        }
        out
    }

    /// `u(S, T)` on arbitrary subsets; budgets are not enforced here.
    pub fn undetection(&self, set: &DetectorSet, targets: &[usize]) -> Result<f64> {
        self.check_detector_set(set, false)?;
        if let Some(&e) = targets.iter().find(|&&e| e >= self.m()) {
            return Err(ValidationError::UnknownComponent(e).into());
        }
        let targets: BTreeSet<usize> = targets.iter().copied().collect();
        let u = self.undetection_vector(set);
        Ok(targets.iter().map(|&e| u[e]).sum())
    }

    /// `U(S, rho) = sum_e rho_e u(S, e)` for a pure placement.
    pub fn placement_value(&self, set: &DetectorSet, rho: &[f64]) -> f64 {
        dot(&self.undetection_vector(set), rho)
    }

    /// Per-component coefficients `U(sigma, e) = sum_S sigma_S u(S, e)`.
    pub fn strategy_coefficients(&self, sigma: &MixedDefenderStrategy) -> Vec<f64> {
        let mut coeffs = vec![0.0; self.m()];
        for (set, prob) in sigma.support() {
            for (c, u) in coeffs.iter_mut().zip(self.undetection_vector(set)) {
                *c += prob * u;
            }
        }
        coeffs
    }

    fn check_sigma(&self, sigma: &MixedDefenderStrategy) -> Result<()> {
        sigma.support().iter().try_for_each(|(s, _)| self.check_detector_set(s, true))
    }

    fn check_rho(&self, rho: &MarginalAttackVector) -> Result<()> {
        if rho.len() != self.m() {
            return Err(ValidationError::LengthMismatch { expected: self.m(), actual: rho.len() }.into());
        }
        if rho.total() > self.r_a as f64 + SUM_TOL {
            return Err(ValidationError::Marginal(format!(
                "sum {} exceeds r_A = {}",
                rho.total(),
                self.r_a
            ))
            .into());
        }
        Ok(())
    }

    /// Expected number of undetected attacks `U(sigma, rho)`.
    pub fn expected_undetection(&self, sigma: &MixedDefenderStrategy, rho: &MarginalAttackVector) -> Result<f64> {
        self.check_sigma(sigma)?;
        self.check_rho(rho)?;
        Ok(dot(&self.strategy_coefficients(sigma), rho.values()))
    }

    /// `U(sigma_D, sigma_A)` evaluated directly over both supports.
    pub fn expected_undetection_mixed(
        &self,
        sigma: &MixedDefenderStrategy,
        attack: &MixedAttackStrategy,
    ) -> Result<f64> {
        self.check_sigma(sigma)?;
        attack.check(self.m(), self.r_a)?;
        let mut total = 0.0;
        for (set, ps) in sigma.support() {
            for (targets, pt) in attack.support() {
                total += ps * pt * self.undetection(set, targets)?;
            }
        }
        Ok(total)
    }

    /// Attacker best response against `sigma`: the `r_A` components with the
    /// largest undetection coefficient, ties to the lowest index.
    pub fn worst_case_attack_value(&self, sigma: &MixedDefenderStrategy) -> Result<(f64, MarginalAttackVector)> {
        self.check_sigma(sigma)?;
        let coeffs = self.strategy_coefficients(sigma);
        let top = top_k_indices(&coeffs, self.r_a);
        let mut rho = vec![0.0; self.m()];
        let mut value = 0.0;
        for &e in &top {
            rho[e] = 1.0;
            value += coeffs[e];
        }
        Ok((value, MarginalAttackVector::from_values_unchecked(rho)))
    }
}

fn check_unique(names: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(ValidationError::DuplicateName(name.clone()).into());
        }
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Indices of the `k` largest values, ties broken by lowest index, returned
/// in descending value order.
pub fn top_k_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Sum of the `k` largest values.
pub fn top_k_sum(values: &[f64], k: usize) -> f64 {
    top_k_indices(values, k).iter().map(|&i| values[i]).sum()
}

/// A pure defender action: a set of location indices, stored sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct DetectorSet(Vec<usize>);

impl DetectorSet {
    pub fn new(members: impl IntoIterator<Item = usize>) -> Self {
        let set: BTreeSet<usize> = members.into_iter().collect();
        Self(set.into_iter().collect())
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }
}

impl FromIterator<usize> for DetectorSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::new(iter)
    }
}

/// Sparse distribution over detector sets.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedDefenderStrategy {
    support: Vec<(DetectorSet, f64)>,
}

impl MixedDefenderStrategy {
    pub fn new(support: Vec<(DetectorSet, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(ValidationError::Distribution("empty support".into()).into());
        }
        let mut seen = BTreeSet::new();
        let mut total = 0.0;
        for (set, p) in &support {
            if !p.is_finite() || *p < 0.0 {
                return Err(ValidationError::Distribution(format!("negative or non-finite probability {p}")).into());
            }
            if !seen.insert(set.clone()) {
                return Err(ValidationError::Distribution(format!("repeated set {:?}", set.members())).into());
            }
            total += p;
        }
        if (total - 1.0).abs() > SUM_TOL {
            return Err(ValidationError::Distribution(format!("probabilities sum to {total}")).into());
        }
        Ok(Self { support })
    }

    pub fn pure(set: DetectorSet) -> Self {
        Self { support: vec![(set, 1.0)] }
    }

    /// Empirical distribution of a sequence of plays, merged by set and
    /// ordered by first appearance.
    pub fn from_plays<'a>(plays: impl IntoIterator<Item = &'a DetectorSet>) -> Result<Self> {
        let mut order: Vec<(DetectorSet, usize)> = Vec::new();
        let mut index: std::collections::HashMap<DetectorSet, usize> = std::collections::HashMap::new();
        let mut total = 0usize;
        for set in plays {
            total += 1;
            match index.get(set) {
                Some(&i) => order[i].1 += 1,
                None => {
                    index.insert(set.clone(), order.len());
                    order.push((set.clone(), 1));
                }
            }
        }
        if total == 0 {
            return Err(ValidationError::Distribution("no plays".into()).into());
        }
        let support = order.into_iter().map(|(s, c)| (s, c as f64 / total as f64)).collect();
        Self::new(support)
    }

    pub fn support(&self) -> &[(DetectorSet, f64)] {
        &self.support
    }
}

/// A point of the capped simplex `{rho in [0,1]^m : sum rho <= r_A}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalAttackVector(Vec<f64>);

impl MarginalAttackVector {
    pub fn new(values: Vec<f64>, r_a: usize) -> Result<Self> {
        for (e, &x) in values.iter().enumerate() {
            if !(0.0..=1.0 + BOX_TOL).contains(&x) {
                return Err(ValidationError::Marginal(format!("entry {e} = {x} outside [0,1]")).into());
            }
        }
        let total: f64 = values.iter().sum();
        if total > r_a as f64 + SUM_TOL {
            return Err(ValidationError::Marginal(format!("sum {total} exceeds r_A = {r_a}")).into());
        }
        Ok(Self(values))
    }

    pub(crate) fn from_values_unchecked(values: Vec<f64>) -> Self {
        Self(values)
    }

    /// `r_A / m` in every entry.
    pub fn uniform(m: usize, r_a: usize) -> Self {
        Self(vec![r_a as f64 / m as f64; m])
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Sparse distribution over attack sets (sorted component indices).
#[derive(Debug, Clone, PartialEq)]
pub struct MixedAttackStrategy {
    support: Vec<(Vec<usize>, f64)>,
}

impl MixedAttackStrategy {
    pub fn new(support: Vec<(Vec<usize>, f64)>, m: usize, r_a: usize) -> Result<Self> {
        let support = support
            .into_iter()
            .map(|(t, p)| {
                let set: BTreeSet<usize> = t.into_iter().collect();
                (set.into_iter().collect(), p)
            })
            .collect();
        let out = Self { support };
        out.check(m, r_a)?;
        Ok(out)
    }

    pub(crate) fn from_support_unchecked(support: Vec<(Vec<usize>, f64)>) -> Self {
        Self { support }
    }

    pub fn support(&self) -> &[(Vec<usize>, f64)] {
        &self.support
    }

    pub fn check(&self, m: usize, r_a: usize) -> Result<()> {
        if self.support.is_empty() {
            return Err(ValidationError::Distribution("empty support".into()).into());
        }
        let mut total = 0.0;
        for (set, p) in &self.support {
            if !p.is_finite() || *p < 0.0 {
                return Err(ValidationError::Distribution(format!("negative or non-finite probability {p}")).into());
            }
            if let Some(&e) = set.iter().find(|&&e| e >= m) {
                return Err(Error::Validation(ValidationError::UnknownComponent(e)));
            }
            if set.len() > r_a {
                return Err(ValidationError::AttackSetTooLarge { size: set.len(), r_a }.into());
            }
            total += p;
        }
        if (total - 1.0).abs() > SUM_TOL {
            return Err(ValidationError::Distribution(format!("probabilities sum to {total}")).into());
        }
        Ok(())
    }
}
