//! Periodic orbits: the block-circulant lifted system whose fixed points are
//! period-`h` orbits, simulation-based cycle detection and limit
//! classification of non-critical trajectories.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibria::candidate_equilibrium;
use crate::netmodel::{indicator, orthant_of, ShiftedModel, StateVector, Trajectory};
use crate::numerics::matrix::max_abs_diff;
use crate::numerics::{DenseMatrix, LuFactors, NumericsError};

pub const DEFAULT_HMAX: usize = 64;
pub const DEFAULT_TOL: f64 = 1e-9;
/// Tolerance for comparisons against four-decimal reference orbits.
pub const FIXTURE_TOL: f64 = 1e-3;
pub const DEFAULT_RHO: f64 = 1e-6;
pub const DEFAULT_HORIZON: usize = 10_000;
/// Largest lifted dimension `n·h` whose sign patterns are enumerated.
pub const MAX_LIFTED_DIM: usize = 20;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CycleError {
    #[error("trajectory has {have} states, {need} needed")]
    InsufficientLength { have: usize, need: usize },
    #[error("period hypothesis h = {0} must be at least 2")]
    PeriodTooSmall(usize),
    #[error("lifted dimension {0} too large to enumerate")]
    LiftTooLarge(usize),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// `Z = C̃ Z + 𝟙_h ⊗ r − B̃ φ(Z)` for `Z = (z_0, …, z_{h−1})`, where block row
/// `i` maps `z_{i−1}` (cyclically) to `z_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedSystem {
    pub h: usize,
    pub n: usize,
    pub c_tilde: DenseMatrix,
    pub b_tilde: DenseMatrix,
    pub offset: Vec<f64>,
}

pub fn build_lifted(model: &ShiftedModel, h: usize) -> Result<LiftedSystem, CycleError> {
    if h < 2 {
        return Err(CycleError::PeriodTooSmall(h));
    }
    let n = model.n();
    let c = model.c();
    let beta = model.beta();
    let prev = |bi: usize| (bi + h - 1) % h;
    let c_tilde = DenseMatrix::from_fn(n * h, n * h, |row, col| {
        let (bi, i) = (row / n, row % n);
        let (bj, j) = (col / n, col % n);
        if bj == prev(bi) {
            c[(i, j)]
        } else {
            0.0
        }
    });
    let b_tilde = DenseMatrix::from_fn(n * h, n * h, |row, col| {
        let (bi, i) = (row / n, row % n);
        let (bj, j) = (col / n, col % n);
        if bj == prev(bi) && i == j {
            beta[i]
        } else {
            0.0
        }
    });
    let offset = (0..h).flat_map(|_| model.r().iter().copied()).collect();
    Ok(LiftedSystem {
        h,
        n,
        c_tilde,
        b_tilde,
        offset,
    })
}

impl LiftedSystem {
    pub fn dim(&self) -> usize {
        self.n * self.h
    }

    /// `‖C̃Z + offset − B̃φ(Z) − Z‖∞`.
    pub fn residual(&self, z: &[f64]) -> f64 {
        let phi: Vec<f64> = indicator(z).into_iter().map(f64::from).collect();
        let cz = self.c_tilde.mul_vec(z);
        let bphi = self.b_tilde.mul_vec(&phi);
        (0..self.dim())
            .map(|i| (cz[i] + self.offset[i] - bphi[i] - z[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Concatenates `h` consecutive states.
    pub fn stack(states: &[impl AsRef<[f64]>]) -> Vec<f64> {
        states.iter().flat_map(|s| s.as_ref().iter().copied()).collect()
    }

    pub fn block<'a>(&self, z: &'a [f64], i: usize) -> &'a [f64] {
        &z[i * self.n..(i + 1) * self.n]
    }

    /// All blocks equal: the lift of an equilibrium.
    pub fn is_equilibrium_lift(&self, z: &[f64], tol: f64) -> bool {
        (1..self.h).all(|i| max_abs_diff(self.block(z, i), self.block(z, 0)) <= tol)
    }

    /// Every solution of the lifted equation, by solving the linear system of
    /// each of the `2^{nh}` sign patterns and keeping the self-consistent ones.
    pub fn solutions(&self) -> Result<Vec<Vec<f64>>, CycleError> {
        let d = self.dim();
        if d > MAX_LIFTED_DIM {
            return Err(CycleError::LiftTooLarge(d));
        }
        let lu = LuFactors::factorize(&DenseMatrix::identity(d).sub(&self.c_tilde))?;
        let mut out = Vec::new();
        for mask in 0u64..(1u64 << d) {
            let phi: Vec<u8> = (0..d).map(|i| ((mask >> (d - 1 - i)) & 1) as u8).collect();
            let phif: Vec<f64> = phi.iter().map(|&p| f64::from(p)).collect();
            let bphi = self.b_tilde.mul_vec(&phif);
            let rhs: Vec<f64> = (0..d).map(|i| self.offset[i] - bphi[i]).collect();
            let z = lu.solve(&rhs);
            if indicator(&z) == phi {
                out.push(z);
            }
        }
        Ok(out)
    }

    /// Solutions that are not equilibrium lifts.
    pub fn periodic_solutions(&self, tol: f64) -> Result<Vec<Vec<f64>>, CycleError> {
        Ok(self
            .solutions()?
            .into_iter()
            .filter(|z| !self.is_equilibrium_lift(z, tol))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleDetection {
    pub period: usize,
    /// First index from which `x(t + h) ≈ x(t)` holds through the end.
    pub phase: usize,
    /// The last `h` states; `orbit[j]` is `x(orbit_start + j)`.
    pub orbit_start: usize,
    pub orbit: Vec<Vec<f64>>,
}

fn detect_in(states: &[StateVector], tol: f64, h_max: usize) -> Result<Option<CycleDetection>, CycleError> {
    let need = 2 * h_max + 1;
    let len = states.len();
    if len < need {
        return Err(CycleError::InsufficientLength { have: len, need });
    }
    let orthants: Vec<u64> = states[len - need..].iter().map(|s| orthant_of(s).k()).collect();
    let base = len - need;
    for h in 1..=h_max {
        let window = (len - 1 - h - h_max + 1)..=(len - 1 - h);
        if !window.clone().all(|t| orthants[t + h - base] == orthants[t - base]) {
            continue;
        }
        if !window.clone().all(|t| states[t + h].dist_inf(&states[t]) <= tol) {
            continue;
        }
        // a shorter period already fits the final orbit: still converging to it
        let last = len - 1;
        if (1..h)
            .filter(|d| h % d == 0)
            .any(|d| (0..h).all(|j| states[last - j].dist_inf(&states[last - j - d]) <= tol))
        {
            return Ok(None);
        }
        let mut phase = *window.start();
        while phase > 0 && states[phase - 1 + h].dist_inf(&states[phase - 1]) <= tol {
            phase -= 1;
        }
        let orbit_start = len - h;
        return Ok(Some(CycleDetection {
            period: h,
            phase,
            orbit_start,
            orbit: states[orbit_start..].iter().map(|s| s.0.clone()).collect(),
        }));
    }
    Ok(None)
}

/// Smallest `h ≤ h_max` with `‖x(t+h) − x(t)‖∞ ≤ tol` over the last `h_max`
/// admissible `t`. Needs at least `2·h_max + 1` states.
pub fn detect_cycle(traj: &Trajectory, tol: f64, h_max: usize) -> Result<Option<CycleDetection>, CycleError> {
    detect_in(&traj.states, tol, h_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitKind {
    /// `|x_i(t)| < ρ` happened; the convergence result does not apply.
    Critical {
        t: usize,
        component: usize,
    },
    Equilibrium {
        x_bar: Vec<f64>,
    },
    Cycle {
        period: usize,
        orbit: Vec<Vec<f64>>,
    },
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitClassification {
    pub kind: LimitKind,
    pub transient: usize,
    pub steps: usize,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub rho: f64,
    pub horizon: usize,
    pub tol: f64,
    pub h_max: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            rho: DEFAULT_RHO,
            horizon: DEFAULT_HORIZON,
            tol: DEFAULT_TOL,
            h_max: DEFAULT_HMAX,
        }
    }
}

fn critical_at(x: &[f64], rho: f64) -> Option<usize> {
    x.iter().position(|v| v.abs() < rho)
}

/// Simulates up to `opts.horizon` steps, stopping as soon as a cycle or
/// equilibrium is detected.
pub fn classify_limit(model: &ShiftedModel, x0: &[f64], opts: &ClassifyOptions) -> LimitClassification {
    assert!(opts.rho > 0.0, "rho must be positive");
    let done = |kind, transient, steps| LimitClassification {
        kind,
        transient,
        steps,
        rho: opts.rho,
    };
    let need = 2 * opts.h_max + 1;
    let mut states = vec![StateVector(x0.to_vec())];
    if let Some(component) = critical_at(x0, opts.rho) {
        return done(LimitKind::Critical { t: 0, component }, 0, 0);
    }
    for t in 1..=opts.horizon {
        let next = model.step(&states[t - 1]);
        if let Some(component) = critical_at(&next, opts.rho) {
            return done(LimitKind::Critical { t, component }, t, t);
        }
        states.push(next);
        let last = t == opts.horizon;
        if states.len() >= need && (t % opts.h_max == 0 || last) {
            if let Ok(Some(c)) = detect_in(&states, opts.tol, opts.h_max) {
                let kind = if c.period == 1 {
                    let end = states.last().expect("nonempty");
                    let snapped = candidate_equilibrium(model, orthant_of(end))
                        .ok()
                        .filter(|e| e.consistent && e.x_bar.dist_inf(end) <= opts.tol)
                        .map(|e| e.x_bar.0);
                    LimitKind::Equilibrium {
                        x_bar: snapped.unwrap_or_else(|| end.0.clone()),
                    }
                } else {
                    LimitKind::Cycle {
                        period: c.period,
                        orbit: c.orbit,
                    }
                };
                return done(kind, c.phase, t);
            }
        }
    }
    done(LimitKind::Undetermined, opts.horizon, opts.horizon)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Period2Report {
    pub trials: usize,
    /// Initial states whose trajectories settled on a period-2 orbit.
    pub witnesses: Vec<Vec<f64>>,
    /// Count of detected periods (1 for equilibria).
    pub periods: BTreeMap<usize, usize>,
    pub critical: usize,
    pub undetermined: usize,
    /// Exhaustive check of the `h = 2` lifted equation when `2n` is small enough.
    pub lifted_has_period2: Option<bool>,
}

impl Period2Report {
    pub fn passed(&self) -> bool {
        self.witnesses.is_empty() && self.lifted_has_period2 != Some(true)
    }
}

/// Half-width of the box that contains every per-orthant equilibrium.
pub fn state_scale(model: &ShiftedModel) -> f64 {
    let n = model.n();
    let rhs: Vec<f64> = model.r().iter().zip(model.beta()).map(|(r, b)| r.abs() + b).collect();
    let bound = crate::numerics::solve_linear(&DenseMatrix::identity(n).sub(model.c()), &rhs)
        .map(|v| v.iter().fold(0.0f64, |a, x| a.max(x.abs())))
        .unwrap_or(1.0);
    1.0 + 2.0 * bound
}

/// Simulates `trials` random initial states and reports any period-2 orbit.
pub fn verify_no_period2(model: &ShiftedModel, trials: usize, seed: u64, opts: &ClassifyOptions) -> Period2Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.n();
    let s = state_scale(model);
    let mut report = Period2Report {
        trials,
        witnesses: Vec::new(),
        periods: BTreeMap::new(),
        critical: 0,
        undetermined: 0,
        lifted_has_period2: None,
    };
    for _ in 0..trials {
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-s..s)).collect();
        match classify_limit(model, &x0, opts).kind {
            LimitKind::Critical { .. } => report.critical += 1,
            LimitKind::Undetermined => report.undetermined += 1,
            LimitKind::Equilibrium { .. } => *report.periods.entry(1).or_default() += 1,
            LimitKind::Cycle { period, .. } => {
                *report.periods.entry(period).or_default() += 1;
                if period == 2 {
                    report.witnesses.push(x0);
                }
            }
        }
    }
    if 2 * n <= MAX_LIFTED_DIM {
        report.lifted_has_period2 = build_lifted(model, 2)
            .and_then(|l| l.periodic_solutions(DEFAULT_TOL))
            .map(|s| !s.is_empty())
            .ok();
    }
    report
}
