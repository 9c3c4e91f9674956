//! Dense bounded-variable revised simplex.
//!
//! Rows are turned into equalities with one slack per inequality. The start
//! basis takes every slack whose value is feasible at the initial nonbasic
//! point and an artificial for every other row; phase one only runs when an
//! artificial is basic. The basis inverse is kept explicitly and updated by
//! Gauss-Jordan pivots, with a fresh inversion every `REFACTOR_EVERY` pivots.
//!
//! Duals follow the usual minimization convention: `y_i >= 0` on `>=` rows,
//! `y_i <= 0` on `<=` rows, free on equalities.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-7;
const OPT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const REFACTOR_EVERY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

/// `min c.x` subject to `rows[i].x (sense_i) rhs_i` and `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLP {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub senses: Vec<RowSense>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DenseLP {
    /// An LP with nonnegative variables and no rows yet.
    pub fn minimize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            rows: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: RowSense, rhs: f64) -> &mut Self {
        self.rows.push(coeffs);
        self.senses.push(sense);
        self.rhs.push(rhs);
        self
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    fn check(&self) -> Result<()> {
        let n = self.num_vars();
        let bad = |reason: String| Err(Error::SolverFailure { pivots: 0, reason });
        if self.senses.len() != self.rows.len() || self.rhs.len() != self.rows.len() {
            return bad("row metadata length mismatch".into());
        }
        if self.lower.len() != n || self.upper.len() != n {
            return bad("bound length mismatch".into());
        }
        if let Some(i) = self.rows.iter().position(|r| r.len() != n) {
            return bad(format!("row {i} has wrong length"));
        }
        let finite_or_inf = self
            .objective
            .iter()
            .chain(self.rhs.iter())
            .chain(self.rows.iter().flatten())
            .all(|x| x.is_finite());
        if !finite_or_inf {
            return bad("NaN or infinite coefficient".into());
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return bad(format!("invalid bounds on variable {j}"));
            }
            if self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return bad(format!("invalid bounds on variable {j}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    /// One dual per row; empty unless optimal.
    pub duals: Vec<f64>,
    pub objective: f64,
    /// `b.y` plus the bound terms of the nonbasic reduced costs.
    pub dual_objective: f64,
    /// Largest row or bound violation of `primal`.
    pub primal_infeasibility: f64,
    /// Largest reduced-cost sign violation at the final basis.
    pub dual_infeasibility: f64,
    pub pivots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable resting at zero.
    Zero,
}

struct Tableau {
    rows: usize,
    /// Columns of the equality form: structurals, slacks, artificials.
    cols: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    first_artificial: usize,
    pivots: usize,
    pivot_cap: usize,
    bland: bool,
    degenerate_run: usize,
    since_refactor: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl Tableau {
    fn new(lp: &DenseLP) -> Self {
        let m = lp.num_rows();
        let nv = lp.num_vars();
        let mut cols: Vec<Vec<f64>> = (0..nv).map(|j| lp.rows.iter().map(|r| r[j]).collect()).collect();
        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        let mut slack_of = vec![None; m];
        for (i, sense) in lp.senses.iter().enumerate() {
            let sign = match sense {
                RowSense::Le => 1.0,
                RowSense::Ge => -1.0,
                RowSense::Eq => continue,
            };
            let mut col = vec![0.0; m];
            col[i] = sign;
            slack_of[i] = Some((cols.len(), sign));
            cols.push(col);
            lower.push(0.0);
            upper.push(f64::INFINITY);
        }
        let first_artificial = cols.len();

        let mut x = vec![0.0; first_artificial];
        let mut state = vec![State::Lower; first_artificial];
        for j in 0..nv {
            (x[j], state[j]) = if lower[j].is_finite() {
                (lower[j], State::Lower)
            } else if upper[j].is_finite() {
                (upper[j], State::Upper)
            } else {
                (0.0, State::Zero)
            };
        }
        let mut residual = lp.rhs.clone();
        for j in 0..nv {
            if x[j] != 0.0 {
                for i in 0..m {
                    residual[i] -= cols[j][i] * x[j];
                }
            }
        }

        let mut basis = vec![0; m];
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            let art = cols.len();
            let sign = if residual[i] < 0.0 { -1.0 } else { 1.0 };
            let mut col = vec![0.0; m];
            col[i] = sign;
            cols.push(col);
            lower.push(0.0);
            match slack_of[i] {
                Some((s, s_sign)) if residual[i] * s_sign >= 0.0 => {
                    x[s] = residual[i] * s_sign;
                    state[s] = State::Basic;
                    basis[i] = s;
                    binv[i * m + i] = s_sign;
                    upper.push(0.0);
                    x.push(0.0);
                    state.push(State::Lower);
                }
                _ => {
                    basis[i] = art;
                    binv[i * m + i] = sign;
                    upper.push(f64::INFINITY);
                    x.push(residual[i].abs());
                    state.push(State::Basic);
                }
            }
        }

        let pivot_cap = 50 * (m + cols.len()) + 1000;
        Self {
            rows: m,
            cols,
            rhs: lp.rhs.clone(),
            lower,
            upper,
            x,
            state,
            basis,
            binv,
            first_artificial,
            pivots: 0,
            pivot_cap,
            bland: false,
            degenerate_run: 0,
            since_refactor: 0,
        }
    }

    fn ncols(&self) -> usize {
        self.cols.len()
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.rows;
        let mut y = vec![0.0; m];
        for (k, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for i in 0..m {
                    y[i] += cb * self.binv[k * m + i];
                }
            }
        }
        y
    }

    fn reduced_cost(&self, cost: &[f64], y: &[f64], j: usize) -> f64 {
        cost[j] - self.cols[j].iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.rows;
        let col = &self.cols[j];
        (0..m)
            .map(|k| (0..m).map(|i| self.binv[k * m + i] * col[i]).sum())
            .collect()
    }

    /// Direction in which nonbasic `j` improves the objective, if any.
    fn improving_direction(&self, j: usize, d: f64) -> Option<f64> {
        if self.lower[j] == self.upper[j] {
            return None;
        }
        match self.state[j] {
            State::Basic => None,
            State::Lower if d < -OPT_TOL => Some(1.0),
            State::Upper if d > OPT_TOL => Some(-1.0),
            State::Zero if d.abs() > OPT_TOL => Some(-d.signum()),
            _ => None,
        }
    }

    fn iterate(&mut self, cost: &[f64]) -> Result<Step> {
        let y = self.duals(cost);
        let mut entering: Option<(usize, f64, f64)> = None;
        for j in 0..self.ncols() {
            if self.state[j] == State::Basic {
                continue;
            }
            let d = self.reduced_cost(cost, &y, j);
            if let Some(dir) = self.improving_direction(j, d) {
                if self.bland {
                    entering = Some((j, dir, d));
                    break;
                }
                if entering.is_none_or(|(_, _, best)| d.abs() > best.abs()) {
                    entering = Some((j, dir, d));
                }
            }
        }
        let Some((q, dir, _)) = entering else {
            return Ok(Step::Optimal);
        };

        let alpha = self.ftran(q);
        let mut step = self.upper[q] - self.lower[q];
        let mut leaving: Option<usize> = None;
        for k in 0..self.rows {
            let rate = -dir * alpha[k];
            if rate.abs() <= PIVOT_TOL {
                continue;
            }
            let b = self.basis[k];
            let room = if rate < 0.0 {
                (self.x[b] - self.lower[b]) / -rate
            } else {
                (self.upper[b] - self.x[b]) / rate
            };
            if !room.is_finite() && room > 0.0 {
                continue;
            }
            let room = room.max(0.0);
            let better = match leaving {
                None => room < step,
                Some(l) => {
                    if room < step - 1e-12 {
                        true
                    } else if room <= step + 1e-12 {
                        if self.bland {
                            b < self.basis[l]
                        } else {
                            alpha[k].abs() > alpha[l].abs()
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                step = if leaving.is_none() { room } else { room.min(step) };
                leaving = Some(k);
            }
        }
        if !step.is_finite() {
            return Ok(Step::Unbounded);
        }

        self.pivots += 1;
        if self.pivots > self.pivot_cap {
            return Err(Error::SolverFailure {
                pivots: self.pivots,
                reason: "pivot cap exceeded".into(),
            });
        }
        if step < DEGENERATE_STEP {
            self.degenerate_run += 1;
            if self.degenerate_run > 5 * (self.rows + self.ncols()) {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
        }

        self.x[q] += dir * step;
        for k in 0..self.rows {
            let b = self.basis[k];
            self.x[b] -= dir * step * alpha[k];
        }

        match leaving {
            None => {
                // Bound flip.
                self.state[q] = if dir > 0.0 { State::Upper } else { State::Lower };
                self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
            }
            Some(r) => {
                let b = self.basis[r];
                let rate = -dir * alpha[r];
                if rate < 0.0 {
                    self.x[b] = self.lower[b];
                    self.state[b] = State::Lower;
                } else {
                    self.x[b] = self.upper[b];
                    self.state[b] = State::Upper;
                }
                self.state[q] = State::Basic;
                self.basis[r] = q;
                self.pivot_inverse(r, &alpha);
                self.since_refactor += 1;
                if self.since_refactor >= REFACTOR_EVERY {
                    self.refactor()?;
                }
            }
        }
        Ok(Step::Moved)
    }

    fn pivot_inverse(&mut self, r: usize, alpha: &[f64]) {
        let m = self.rows;
        let piv = alpha[r];
        for i in 0..m {
            self.binv[r * m + i] /= piv;
        }
        for k in 0..m {
            if k == r || alpha[k] == 0.0 {
                continue;
            }
            let f = alpha[k];
            for i in 0..m {
                self.binv[k * m + i] -= f * self.binv[r * m + i];
            }
        }
    }

    /// Re-inverts the basis and recomputes basic values from the nonbasics.
    fn refactor(&mut self) -> Result<()> {
        let m = self.rows;
        let mut a = vec![0.0; m * m];
        for (k, &b) in self.basis.iter().enumerate() {
            for i in 0..m {
                a[i * m + k] = self.cols[b][i];
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&i, &j| a[i * m + c].abs().total_cmp(&a[j * m + c].abs()))
                .unwrap();
            if a[p * m + c].abs() <= PIVOT_TOL {
                return Err(Error::SolverFailure {
                    pivots: self.pivots,
                    reason: "singular basis during refactorization".into(),
                });
            }
            if p != c {
                for i in 0..m {
                    a.swap(p * m + i, c * m + i);
                    inv.swap(p * m + i, c * m + i);
                }
            }
            let piv = a[c * m + c];
            for i in 0..m {
                a[c * m + i] /= piv;
                inv[c * m + i] /= piv;
            }
            for r in 0..m {
                if r != c {
                    let f = a[r * m + c];
                    if f != 0.0 {
                        for i in 0..m {
                            a[r * m + i] -= f * a[c * m + i];
                            inv[r * m + i] -= f * inv[c * m + i];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        self.since_refactor = 0;

        let mut residual = self.rhs.clone();
        for j in 0..self.ncols() {
            if self.state[j] != State::Basic && self.x[j] != 0.0 {
                for i in 0..m {
                    residual[i] -= self.cols[j][i] * self.x[j];
                }
            }
        }
        for k in 0..m {
            let b = self.basis[k];
            self.x[b] = (0..m).map(|i| self.binv[k * m + i] * residual[i]).sum();
        }
        Ok(())
    }

    fn run(&mut self, cost: &[f64]) -> Result<Step> {
        self.bland = false;
        self.degenerate_run = 0;
        loop {
            match self.iterate(cost)? {
                Step::Moved => continue,
                done => return Ok(done),
            }
        }
    }

    /// Pins every artificial at zero and pivots the basic ones out where a
    /// replacement column exists.
    fn retire_artificials(&mut self) {
        for j in self.first_artificial..self.ncols() {
            self.upper[j] = 0.0;
            if self.state[j] != State::Basic {
                self.x[j] = 0.0;
                self.state[j] = State::Lower;
            }
        }
        for r in 0..self.rows {
            let b = self.basis[r];
            if b < self.first_artificial {
                continue;
            }
            let m = self.rows;
            let replacement = (0..self.first_artificial).find(|&j| {
                self.state[j] != State::Basic && {
                    let row_r = &self.binv[r * m..(r + 1) * m];
                    let v: f64 = row_r.iter().zip(&self.cols[j]).map(|(a, c)| a * c).sum();
                    v.abs() > 1e-7
                }
            });
            if let Some(q) = replacement {
                let alpha = self.ftran(q);
                // Degenerate exchange: the artificial sits at (numerically) zero.
                self.x[b] = 0.0;
                self.state[b] = State::Lower;
                self.state[q] = State::Basic;
                self.basis[r] = q;
                self.pivot_inverse(r, &alpha);
            }
        }
    }
}

/// Solves `lp` to optimality or reports infeasibility or unboundedness.
pub fn solve_lp(lp: &DenseLP) -> Result<LpSolution> {
    lp.check()?;
    let nv = lp.num_vars();
    let mut t = Tableau::new(lp);

    let needs_phase_one = t.basis.iter().any(|&b| b >= t.first_artificial);
    if needs_phase_one {
        let mut cost = vec![0.0; t.ncols()];
        cost[t.first_artificial..].iter_mut().for_each(|c| *c = 1.0);
        t.run(&cost)?;
        let infeasibility: f64 = (t.first_artificial..t.ncols()).map(|j| t.x[j]).sum();
        let scale = 1.0 + lp.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if infeasibility > FEAS_TOL * scale {
            return Ok(finish(lp, &t, LpStatus::Infeasible, &[]));
        }
        t.retire_artificials();
        t.refactor()?;
    } else {
        t.retire_artificials();
    }

    let mut cost = vec![0.0; t.ncols()];
    cost[..nv].copy_from_slice(&lp.objective);
    match t.run(&cost)? {
        Step::Unbounded => Ok(finish(lp, &t, LpStatus::Unbounded, &[])),
        _ => {
            t.refactor()?;
            Ok(finish(lp, &t, LpStatus::Optimal, &cost))
        }
    }
}

fn finish(lp: &DenseLP, t: &Tableau, status: LpStatus, cost: &[f64]) -> LpSolution {
    let nv = lp.num_vars();
    let primal: Vec<f64> = t.x[..nv].to_vec();
    let objective: f64 = primal.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();

    let mut primal_infeasibility: f64 = 0.0;
    for (i, row) in lp.rows.iter().enumerate() {
        let ax: f64 = row.iter().zip(&primal).map(|(a, b)| a * b).sum();
        let viol = match lp.senses[i] {
            RowSense::Le => ax - lp.rhs[i],
            RowSense::Ge => lp.rhs[i] - ax,
            RowSense::Eq => (ax - lp.rhs[i]).abs(),
        };
        primal_infeasibility = primal_infeasibility.max(viol);
    }
    for j in 0..nv {
        primal_infeasibility = primal_infeasibility
            .max(lp.lower[j] - primal[j])
            .max(primal[j] - lp.upper[j]);
    }

    if status != LpStatus::Optimal {
        return LpSolution {
            status,
            primal,
            duals: Vec::new(),
            objective,
            dual_objective: f64::NAN,
            primal_infeasibility,
            dual_infeasibility: f64::NAN,
            pivots: t.pivots,
        };
    }

    let duals = t.duals(cost);
    let mut dual_objective: f64 = lp.rhs.iter().zip(&duals).map(|(b, y)| b * y).sum();
    let mut dual_infeasibility: f64 = 0.0;
    for j in 0..t.first_artificial {
        if t.state[j] == State::Basic {
            continue;
        }
        let d = t.reduced_cost(cost, &duals, j);
        dual_objective += d * t.x[j];
        let viol = match t.state[j] {
            State::Lower if t.lower[j] < t.upper[j] => -d,
            State::Upper if t.lower[j] < t.upper[j] => d,
            State::Zero => d.abs(),
            _ => 0.0,
        };
        dual_infeasibility = dual_infeasibility.max(viol);
    }

    LpSolution {
        status,
        primal,
        duals,
        objective,
        dual_objective,
        primal_infeasibility,
        dual_infeasibility,
        pivots: t.pivots,
    }
}
