//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Solves `min cᵀz  s.t.  A z ≥ b` where each variable is either free or
//! bounded below by zero. Problems here are small (a few hundred rows at
//! most), so a full tableau is kept.

use serde::{Deserialize, Serialize};

use super::matrix::{dot, DenseMatrix};
use super::NumericsError;

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-10;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    /// Per variable: `true` adds `z_j ≥ 0`, `false` leaves it free.
    pub nonnegative: Vec<bool>,
}

impl LinearProgram {
    /// All variables free.
    pub fn new(objective: Vec<f64>, a: DenseMatrix, b: Vec<f64>) -> Result<Self, NumericsError> {
        let n = objective.len();
        Self::with_bounds(objective, a, b, vec![false; n])
    }

    pub fn with_bounds(
        objective: Vec<f64>,
        a: DenseMatrix,
        b: Vec<f64>,
        nonnegative: Vec<bool>,
    ) -> Result<Self, NumericsError> {
        if a.rows() != b.len() {
            return Err(NumericsError::DimensionMismatch {
                expected: a.rows(),
                found: b.len(),
            });
        }
        if a.cols() != objective.len() || nonnegative.len() != objective.len() {
            return Err(NumericsError::DimensionMismatch {
                expected: a.cols(),
                found: objective.len(),
            });
        }
        if objective.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite);
        }
        Ok(Self {
            objective,
            a,
            b,
            nonnegative,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpSolution {
    pub z: Vec<f64>,
    pub objective: f64,
    /// Multipliers of the `A z ≥ b` rows (nonnegative at optimality).
    pub duals: Vec<f64>,
}

impl LpSolution {
    /// Largest violation among primal feasibility, dual feasibility,
    /// stationarity and complementary slackness. Zero for an exact optimum.
    pub fn kkt_residual(&self, lp: &LinearProgram) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..lp.num_rows() {
            let slack = dot(lp.a.row(i), &self.z) - lp.b[i];
            worst = worst.max(-slack);
            worst = worst.max(-self.duals[i]);
            worst = worst.max((self.duals[i] * slack).abs());
        }
        let aty = lp.a.vec_mul(&self.duals);
        for j in 0..lp.num_vars() {
            let reduced = lp.objective[j] - aty[j];
            if lp.nonnegative[j] {
                worst = worst.max(-self.z[j]);
                worst = worst.max(-reduced);
                worst = worst.max((reduced * self.z[j]).abs());
            } else {
                worst = worst.max(reduced.abs());
            }
        }
        worst
    }
}

/// Column bookkeeping for the standard-form tableau.
#[derive(Debug, Clone, Copy)]
enum Column {
    Plus(usize),
    Minus(usize),
    Slack(usize),
    Artificial,
}

struct Tableau {
    /// `m` rows of `ncols + 1` entries, last entry is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    kinds: Vec<Column>,
    blocked: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    fn ncols(&self) -> usize {
        self.kinds.len()
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.ncols()]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.ncols() + 1;
        let p = self.t[r][c];
        for j in 0..width {
            self.t[r][j] /= p;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for j in 0..width {
                    row[j] -= f * prow[j];
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (i, &bi) in self.basis.iter().enumerate() {
            let cb = cost[bi];
            if cb != 0.0 {
                for (dj, tij) in d.iter_mut().zip(&self.t[i]) {
                    *dj -= cb * tij;
                }
            }
        }
        d
    }

    /// Runs primal simplex on `cost` with Bland's rule. Returns `false` on unboundedness.
    fn optimize(&mut self, cost: &[f64]) -> Result<bool, NumericsError> {
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(NumericsError::IterationLimit(MAX_PIVOTS));
            }
            let d = self.reduced_costs(cost);
            let scale = 1.0 + cost.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let entering = (0..self.ncols()).find(|&j| !self.blocked[j] && d[j] < -COST_EPS * scale);
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][c];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i).max(0.0) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                            if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return Ok(false),
            }
        }
    }
}

/// Solves the LP; `Infeasible` and `Unbounded` come back as distinct errors.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution, NumericsError> {
    let m = lp.num_rows();
    let nv = lp.num_vars();

    let mut kinds = Vec::new();
    for j in 0..nv {
        kinds.push(Column::Plus(j));
        if !lp.nonnegative[j] {
            kinds.push(Column::Minus(j));
        }
    }
    let first_slack = kinds.len();
    kinds.extend((0..m).map(Column::Slack));
    let first_art = kinds.len();
    kinds.extend((0..m).map(|_| Column::Artificial));
    let ncols = kinds.len();

    // Row i: a_i z - s_i = b_i, negated when b_i < 0 so the artificial basis is feasible.
    let mut t = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if lp.b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; ncols + 1];
        for (c, kind) in kinds.iter().enumerate() {
            row[c] = match *kind {
                Column::Plus(j) => sign * lp.a[(i, j)],
                Column::Minus(j) => -sign * lp.a[(i, j)],
                Column::Slack(k) if k == i => -sign,
                _ => 0.0,
            };
        }
        row[first_art + i] = 1.0;
        row[ncols] = sign * lp.b[i];
        t.push(row);
    }

    let mut tab = Tableau {
        t,
        basis: (first_art..first_art + m).collect(),
        kinds,
        blocked: vec![false; ncols],
        pivots: 0,
    };

    // Phase 1: drive the artificials to zero.
    let phase1: Vec<f64> = (0..ncols).map(|c| if c >= first_art { 1.0 } else { 0.0 }).collect();
    tab.optimize(&phase1)?;
    let infeas: f64 = (0..m).filter(|&i| tab.basis[i] >= first_art).map(|i| tab.rhs(i)).sum();
    let bscale = 1.0 + lp.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if infeas > 1e-9 * bscale {
        return Err(NumericsError::Infeasible);
    }
    for c in first_art..ncols {
        tab.blocked[c] = true;
    }
    for i in 0..m {
        if tab.basis[i] >= first_art {
            if let Some(c) = (0..first_art).find(|&c| tab.t[i][c].abs() > PIVOT_EPS) {
                tab.pivot(i, c);
            }
            // otherwise the row is redundant and its artificial stays basic at zero
        }
    }

    // Phase 2.
    let cost: Vec<f64> = tab
        .kinds
        .iter()
        .map(|k| match *k {
            Column::Plus(j) => lp.objective[j],
            Column::Minus(j) => -lp.objective[j],
            _ => 0.0,
        })
        .collect();
    if !tab.optimize(&cost)? {
        return Err(NumericsError::Unbounded);
    }

    let mut z = vec![0.0; nv];
    for (i, &bc) in tab.basis.iter().enumerate() {
        let val = tab.rhs(i);
        match tab.kinds[bc] {
            Column::Plus(j) => z[j] += val,
            Column::Minus(j) => z[j] -= val,
            _ => {}
        }
    }
    let d = tab.reduced_costs(&cost);
    let duals = (0..m).map(|i| d[first_slack + i]).collect();
    let objective = dot(&lp.objective, &z);
    Ok(LpSolution { z, objective, duals })
}
