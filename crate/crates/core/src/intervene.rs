//! Cash injection into the maximal healthy invariant region `ℳ⁺`, asset
//! reallocation toward a target income, and the closed loop that alternates
//! the two.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::invariance::{maximal_invariant_region, InvarianceError, Polyhedron};
use crate::netmodel::{ModelError, OrthantIndex, ShiftedModel, StateVector, Trajectory};
use crate::numerics::convex::Evaluation;
use crate::numerics::matrix::{dot, norm2};
use crate::numerics::{
    convex_solve, dykstra, lp_solve, ConvexProgram, ConvexSet, DenseMatrix, HalfSpace, LinearProgram, LuFactors,
    NonNegative, NumericsError, OPTIMALITY_TOL, STRICT_MARGIN,
};

pub const DEFAULT_ITERATION_CAP: usize = 1000;
/// Post-check tolerance for the reallocation constraints.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Extra tightening inside the projector so the post-check holds with room to spare.
const INNER_MARGIN: f64 = 1e-10;
const SMOOTHING: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-6, 1e-8];

#[derive(Debug, Clone, Error)]
pub enum InterveneError {
    #[error("injection LP is unbounded; the target region is not bounded below in the sum direction")]
    UnboundedInjection,
    #[error("target region is empty")]
    EmptyTarget,
    #[error("reallocation infeasible: {constraint} violated by {violation:e}")]
    InfeasibleReallocation { constraint: String, violation: f64 },
    #[error("iteration cap {cap} reached before entering the target region")]
    IterationCapReached { cap: usize, plan: Box<InterventionPlan> },
    #[error(transparent)]
    Invariance(#[from] InvarianceError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub v: Vec<f64>,
    /// `𝟙ᵀv`
    pub objective: f64,
    pub kkt_residual: f64,
}

/// `min 𝟙ᵀv  s.t.  x + v ∈ region`, optionally with `v ≥ 0`.
pub fn minimal_injection(x: &[f64], region: &Polyhedron, nonnegative: bool) -> Result<Injection, InterveneError> {
    let n = x.len();
    let ax = region.a.mul_vec(x);
    let b: Vec<f64> = region.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let lp = LinearProgram::with_bounds(vec![1.0; n], region.a.clone(), b, vec![nonnegative; n])?;
    let sol = match lp_solve(&lp) {
        Ok(s) => s,
        Err(NumericsError::Unbounded) => return Err(InterveneError::UnboundedInjection),
        Err(NumericsError::Infeasible) => return Err(InterveneError::EmptyTarget),
        Err(e) => return Err(e.into()),
    };
    Ok(Injection {
        kkt_residual: sol.kkt_residual(&lp),
        objective: sol.objective,
        v: sol.z,
    })
}

/// Violations of the reallocation constraints for a candidate `D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReallocationCheck {
    /// Largest `max(0, Σᵢ Dᵢₖ − 1)`.
    pub column_sum: f64,
    /// Largest `max(0, −Dᵢₖ)`.
    pub negativity: f64,
    /// Largest `max(0, ε − ((I − C)⁻¹Dp − V̲)ᵢ)`.
    pub margin: f64,
}

impl ReallocationCheck {
    pub fn worst(&self) -> f64 {
        self.column_sum.max(self.negativity).max(self.margin)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.worst() <= tol
    }
}

/// Asset matrix search for a target income `v`.
pub struct Reallocation<'a> {
    model: &'a ShiftedModel,
    leontief: DenseMatrix,
    pub epsilon: f64,
}

impl<'a> Reallocation<'a> {
    pub fn new(model: &'a ShiftedModel, epsilon: f64) -> Result<Self, InterveneError> {
        let n = model.n();
        let leontief = LuFactors::factorize(&DenseMatrix::identity(n).sub(model.c()))?.inverse();
        Ok(Self {
            model,
            leontief,
            epsilon,
        })
    }

    fn dims(&self) -> (usize, usize) {
        (self.model.n(), self.model.network().m())
    }

    pub fn check(&self, d: &DenseMatrix) -> ReallocationCheck {
        let net = self.model.network();
        let column_sum = d.column_sums().iter().fold(0.0f64, |a, s| a.max(s - 1.0));
        let negativity = d.as_slice().iter().fold(0.0f64, |a, v| a.max(-v));
        let vbar = self.leontief.mul_vec(&d.mul_vec(&net.p));
        let margin = vbar
            .iter()
            .zip(&net.threshold)
            .fold(0.0f64, |a, (v, t)| a.max(self.epsilon - (v - t)));
        ReallocationCheck {
            column_sum,
            negativity,
            margin,
        }
    }

    /// `‖Dp − v‖₂ + ‖𝟙ᵀD‖₂` and a subgradient, with `D` flattened row-major.
    pub fn objective(&self, v: &[f64], z: &[f64]) -> Evaluation {
        self.smoothed_objective(v, z, 0.0)
    }

    /// The objective with each norm replaced by `√(‖·‖² + μ²)`, differentiable for `μ > 0`.
    pub fn smoothed_objective(&self, v: &[f64], z: &[f64], mu: f64) -> Evaluation {
        let (n, m) = self.dims();
        let p = &self.model.network().p;
        let e: Vec<f64> = (0..n).map(|i| dot(&z[i * m..(i + 1) * m], p) - v[i]).collect();
        let s: Vec<f64> = (0..m).map(|k| (0..n).map(|i| z[i * m + k]).sum()).collect();
        let smooth = |x: &[f64]| (dot(x, x) + mu * mu).sqrt();
        let (ne, ns) = (smooth(&e), smooth(&s));
        let mut g = vec![0.0; n * m];
        for i in 0..n {
            for k in 0..m {
                let mut gi = 0.0;
                if ne > 0.0 {
                    gi += e[i] * p[k] / ne;
                }
                if ns > 0.0 {
                    gi += s[k] / ns;
                }
                g[i * m + k] = gi;
            }
        }
        (ne + ns - 2.0 * mu, g)
    }

    fn constraint_sets(&self) -> Vec<HalfSpace> {
        let (n, m) = self.dims();
        let net = self.model.network();
        let mut sets = Vec::with_capacity(n + m);
        for k in 0..m {
            sets.push(HalfSpace::new(
                (0..n).map(|i| (i * m + k, -1.0)).collect(),
                -1.0 + INNER_MARGIN,
            ));
        }
        for i in 0..n {
            let mut coeffs = Vec::with_capacity(n * m);
            for j in 0..n {
                for k in 0..m {
                    coeffs.push((j * m + k, self.leontief[(i, j)] * net.p[k]));
                }
            }
            sets.push(HalfSpace::new(coeffs, net.threshold[i] + self.epsilon + INNER_MARGIN));
        }
        sets
    }

    /// `‖Dp − v‖₂` alone, the first stage of [`solve`](Self::solve).
    pub fn income_mismatch(&self, v: &[f64], z: &[f64]) -> Evaluation {
        let (n, m) = self.dims();
        let p = &self.model.network().p;
        let e: Vec<f64> = (0..n).map(|i| dot(&z[i * m..(i + 1) * m], p) - v[i]).collect();
        let ne = norm2(&e);
        let mut g = vec![0.0; n * m];
        if ne > 0.0 {
            for i in 0..n {
                for k in 0..m {
                    g[i * m + k] = e[i] * p[k] / ne;
                }
            }
        }
        (ne, g)
    }

    /// Minimizes the objective over `D ≥ 0`, `𝟙ᵀD ≤ 𝟙ᵀ`, `(I − C)⁻¹Dp − V̲ ≥ ε`.
    ///
    /// The objective is flat along directions where `Dp` and `𝟙ᵀD` grow
    /// together, so the minimizer is generally not unique. Descent starts from
    /// the feasible `D` closest to realizing `Dp = v` (itself found by
    /// projected gradient from `start`), which selects the optimal `D` that
    /// best matches the target income. The second stage descends on the
    /// smoothed objective with decreasing `μ`; plain subgradient steps stall
    /// at the kink `Dp = v`.
    pub fn solve(&self, v: &[f64], start: &DenseMatrix) -> Result<ReallocationResult, InterveneError> {
        let (n, m) = self.dims();
        let halves = self.constraint_sets();
        let mut sets: Vec<&dyn ConvexSet> = vec![&NonNegative];
        sets.extend(halves.iter().map(|h| h as &dyn ConvexSet));
        let project = |z: &[f64]| dykstra(z, &sets, 1e-12, 20_000).0;
        let mut matching = ConvexProgram::new(|z: &[f64]| self.income_mismatch(v, z), project);
        matching.tolerance = 1e-10;
        matching.max_iterations = 20_000;
        let first = convex_solve(&matching, start.as_slice());
        let mut z = first.z;
        let mut iterations = first.iterations;
        let mut converged = first.converged;
        for mu in SMOOTHING {
            let mut prog = ConvexProgram::new(|z: &[f64]| self.smoothed_objective(v, z, mu), &project);
            prog.tolerance = 1e-10;
            prog.max_iterations = 20_000;
            let sol = convex_solve(&prog, &z);
            iterations += sol.iterations;
            converged = sol.converged;
            z = sol.z;
        }
        let value = self.objective(v, &z).0;
        let d = DenseMatrix::from_row_major(n, m, z)?;
        let check = self.check(&d);
        if !check.passes(FEASIBILITY_TOL) {
            let (constraint, violation) = [
                ("column sums <= 1", check.column_sum),
                ("D >= 0", check.negativity),
                ("healthy equilibrium margin", check.margin),
            ]
            .into_iter()
            .fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a });
            return Err(InterveneError::InfeasibleReallocation {
                constraint: constraint.to_string(),
                violation,
            });
        }
        Ok(ReallocationResult {
            d,
            objective: value,
            iterations,
            converged,
            check,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReallocationResult {
    pub d: DenseMatrix,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub check: ReallocationCheck,
}

/// One-shot reallocation starting from the model's current `D`.
pub fn asset_reallocation(model: &ShiftedModel, v: &[f64], epsilon: f64) -> Result<ReallocationResult, InterveneError> {
    Reallocation::new(model, epsilon)?.solve(v, &model.network().d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VUpdate {
    /// `v ← v − x(t)`
    Verbatim,
    /// `v ← max(v − x(t), 0)`
    Clamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveOptions {
    pub update: VUpdate,
    pub epsilon: f64,
    pub cap: usize,
    pub nonnegative_injection: bool,
}

impl Default for DriveOptions {
    fn default() -> Self {
        Self {
            update: VUpdate::Verbatim,
            epsilon: STRICT_MARGIN,
            cap: DEFAULT_ITERATION_CAP,
            nonnegative_injection: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub t: usize,
    pub d: DenseMatrix,
    pub reallocation_objective: f64,
    pub check: ReallocationCheck,
    /// State after stepping under `d`.
    pub x: Vec<f64>,
    /// `v` after the update.
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionPlan {
    pub x0: Vec<f64>,
    pub target: Polyhedron,
    pub initial_injection: Option<Injection>,
    pub steps: Vec<PlanStep>,
    pub success: bool,
    pub options: DriveOptions,
}

impl InterventionPlan {
    pub fn final_state(&self) -> &[f64] {
        self.steps.last().map_or(&self.x0, |s| &s.x)
    }

    pub fn trajectory(&self) -> Trajectory {
        let mut states = vec![StateVector(self.x0.clone())];
        states.extend(self.steps.iter().map(|s| StateVector(s.x.clone())));
        Trajectory { states }
    }
}

/// The closed loop: inject, reallocate, step, update `v`, until the state is in `ℳ⁺`.
pub fn drive_to_invariant(
    model: &ShiftedModel,
    x0: &[f64],
    opts: &DriveOptions,
) -> Result<InterventionPlan, InterveneError> {
    if x0.len() != model.n() {
        return Err(ModelError::Dimension {
            what: "x0",
            expected: model.n(),
            found: x0.len(),
        }
        .into());
    }
    let target = maximal_invariant_region(model, &OrthantIndex::healthy(model.n()))?;
    let mut plan = InterventionPlan {
        x0: x0.to_vec(),
        target,
        initial_injection: None,
        steps: Vec::new(),
        success: false,
        options: *opts,
    };
    if plan.target.contains(x0) {
        plan.success = true;
        return Ok(plan);
    }
    let inj = minimal_injection(x0, &plan.target, opts.nonnegative_injection)?;
    let mut v = inj.v.clone();
    plan.initial_injection = Some(inj);
    let mut current = model.clone();
    let mut x = x0.to_vec();
    for t in 1..=opts.cap {
        let res = Reallocation::new(&current, opts.epsilon)?.solve(&v, &current.network().d)?;
        current = current.with_assets(res.d.clone())?;
        x = current.step(&x).0;
        for (vi, xi) in v.iter_mut().zip(&x) {
            *vi -= xi;
            if opts.update == VUpdate::Clamped {
                *vi = vi.max(0.0);
            }
        }
        let inside = plan.target.contains(&x);
        plan.steps.push(PlanStep {
            t,
            d: res.d,
            reallocation_objective: res.objective,
            check: res.check,
            x: x.clone(),
            v: v.clone(),
        });
        if inside {
            plan.success = true;
            return Ok(plan);
        }
    }
    Err(InterveneError::IterationCapReached {
        cap: opts.cap,
        plan: Box::new(plan),
    })
}

/// Injection post-check: largest violation of the region rows at `x + v`.
pub fn injection_violation(x: &[f64], inj: &Injection, region: &Polyhedron) -> f64 {
    let y: Vec<f64> = x.iter().zip(&inj.v).map(|(a, b)| a + b).collect();
    region.violation(&y).max(0.0)
}

/// `true` when `x + v` satisfies the region within [`OPTIMALITY_TOL`].
pub fn injection_feasible(x: &[f64], inj: &Injection, region: &Polyhedron) -> bool {
    injection_violation(x, inj, region) <= OPTIMALITY_TOL
}
