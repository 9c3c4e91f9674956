use crate::error::{Result, ValidationError};
use crate::game::{DetectorSet, InspectionInstance};

use super::simplex::{DenseLP, RowSense};

/// Variable and row positions inside a master LP built by [`build_rmp`].
///
/// Variables are ordered `sigma_S` (one per column), then `lambda_e`, then
/// `gamma`. Rows `0..m` are the coverage rows whose duals are the attacker
/// marginals; row `m` is the convexity row whose dual is `nu`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MasterLayout {
    pub columns: usize,
    pub m: usize,
}

impl MasterLayout {
    pub fn sigma(&self, k: usize) -> usize {
        k
    }

    pub fn lambda(&self, e: usize) -> usize {
        self.columns + e
    }

    pub fn gamma(&self) -> usize {
        self.columns + self.m
    }

    pub fn convexity_row(&self) -> usize {
        self.m
    }
}

/// Master LP over the given defender columns:
///
/// ```text
/// min  r_A * gamma + sum_e lambda_e
/// s.t. gamma + lambda_e - sum_S sigma_S u(S, e) >= 0   for every component e
///      sum_S sigma_S = 1
///      sigma, lambda, gamma >= 0
/// ```
pub fn build_rmp(instance: &InspectionInstance, columns: &[DetectorSet]) -> Result<(DenseLP, MasterLayout)> {
    if columns.is_empty() {
        return Err(ValidationError::Config("master problem needs at least one column".into()).into());
    }
    let m = instance.m();
    let layout = MasterLayout {
        columns: columns.len(),
        m,
    };
    let nvars = layout.gamma() + 1;

    let mut objective = vec![0.0; nvars];
    objective[layout.lambda(0)..layout.gamma()].fill(1.0);
    objective[layout.gamma()] = instance.r_a() as f64;
    let mut lp = DenseLP::minimize(objective);

    let mut coverage = vec![vec![0.0; nvars]; m];
    for (k, set) in columns.iter().enumerate() {
        instance.check_detector_set(set, true)?;
        for (e, u) in instance.undetection_vector(set).into_iter().enumerate() {
            coverage[e][layout.sigma(k)] = -u;
        }
    }
    for (e, mut row) in coverage.into_iter().enumerate() {
        row[layout.lambda(e)] = 1.0;
        row[layout.gamma()] = 1.0;
        lp.add_row(row, RowSense::Ge, 0.0);
    }
    let mut convexity = vec![0.0; nvars];
    convexity[..columns.len()].fill(1.0);
    lp.add_row(convexity, RowSense::Eq, 1.0);
    Ok((lp, layout))
}
