//! Projected gradient descent over a convex feasible set.
//!
//! The feasible set is reached through a projector. For intersections of
//! simple sets (orthant, halfspaces) [`dykstra`] builds that projector from
//! the exact projections onto each piece.

use super::matrix::{dot, norm2};
use super::NumericsError;

/// A closed convex set with a cheap exact projection.
pub trait ConvexSet {
    fn project(&self, x: &mut [f64]);
    /// Distance-like measure of how far `x` is outside the set; `0` inside.
    fn violation(&self, x: &[f64]) -> f64;
}

/// `{x : x ≥ 0}`
#[derive(Debug, Clone, Copy, Default)]
pub struct NonNegative;

impl ConvexSet for NonNegative {
    fn project(&self, x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = v.max(0.0));
    }

    fn violation(&self, x: &[f64]) -> f64 {
        x.iter().fold(0.0, |m, &v| m.max(-v))
    }
}

/// `{x : aᵀx ≥ b}`, with `a` given sparsely as `(index, coefficient)` pairs.
#[derive(Debug, Clone)]
pub struct HalfSpace {
    coeffs: Vec<(usize, f64)>,
    bound: f64,
    norm_sq: f64,
}

impl HalfSpace {
    pub fn new(coeffs: Vec<(usize, f64)>, bound: f64) -> Self {
        let coeffs: Vec<_> = coeffs.into_iter().filter(|&(_, c)| c != 0.0).collect();
        let norm_sq = coeffs.iter().map(|&(_, c)| c * c).sum();
        Self { coeffs, bound, norm_sq }
    }

    pub fn dense(a: &[f64], bound: f64) -> Self {
        Self::new(a.iter().copied().enumerate().collect(), bound)
    }

    fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, c)| c * x[i]).sum()
    }
}

impl ConvexSet for HalfSpace {
    fn project(&self, x: &mut [f64]) {
        let gap = self.bound - self.lhs(x);
        if gap > 0.0 && self.norm_sq > 0.0 {
            let step = gap / self.norm_sq;
            for &(i, c) in &self.coeffs {
                x[i] += step * c;
            }
        }
    }

    fn violation(&self, x: &[f64]) -> f64 {
        (self.bound - self.lhs(x)).max(0.0)
    }
}

/// Dykstra's alternating projection onto the intersection of `sets`.
///
/// Stops once a full sweep leaves every set violated by at most `tol`, or after
/// `max_sweeps`. Returns the projected point and whether the tolerance was met.
pub fn dykstra(start: &[f64], sets: &[&dyn ConvexSet], tol: f64, max_sweeps: usize) -> (Vec<f64>, bool) {
    let mut x = start.to_vec();
    let mut increments = vec![vec![0.0; x.len()]; sets.len()];
    let mut y = vec![0.0; x.len()];
    for _ in 0..max_sweeps {
        let mut moved: f64 = 0.0;
        for (set, inc) in sets.iter().zip(increments.iter_mut()) {
            for ((yi, xi), pi) in y.iter_mut().zip(&x).zip(inc.iter()) {
                *yi = xi + pi;
            }
            let before = x.clone();
            x.copy_from_slice(&y);
            set.project(&mut x);
            for ((pi, yi), xi) in inc.iter_mut().zip(&y).zip(&x) {
                *pi = yi - xi;
            }
            moved = moved.max(before.iter().zip(&x).fold(0.0, |m, (a, b)| m.max((a - b).abs())));
        }
        let worst = sets.iter().fold(0.0f64, |m, s| m.max(s.violation(&x)));
        if worst <= tol && moved <= tol {
            return (x, true);
        }
    }
    let worst = sets.iter().fold(0.0f64, |m, s| m.max(s.violation(&x)));
    (x, worst <= tol)
}

/// Objective value and (sub)gradient at a point.
pub type Evaluation = (f64, Vec<f64>);

pub struct ConvexProgram<F, P>
where
    F: Fn(&[f64]) -> Evaluation,
    P: Fn(&[f64]) -> Vec<f64>,
{
    pub objective: F,
    pub projector: P,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Initial trial step; iteration `k` starts from `step / sqrt(k + 1)`.
    pub step: f64,
}

impl<F, P> ConvexProgram<F, P>
where
    F: Fn(&[f64]) -> Evaluation,
    P: Fn(&[f64]) -> Vec<f64>,
{
    pub fn new(objective: F, projector: P) -> Self {
        Self {
            objective,
            projector,
            tolerance: 1e-9,
            max_iterations: 5000,
            step: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvexSolution {
    pub z: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value after each accepted iterate, starting with the projected start.
    pub history: Vec<f64>,
}

impl ConvexSolution {
    pub fn into_result(self) -> Result<Self, NumericsError> {
        if self.converged {
            Ok(self)
        } else {
            Err(NumericsError::NoConvergence {
                iterations: self.iterations,
                best: self.z,
                value: self.value,
            })
        }
    }
}

/// Projected gradient with a diminishing trial step and backtracking on
/// sufficient decrease, so the objective never increases between iterates.
pub fn convex_solve<F, P>(prog: &ConvexProgram<F, P>, start: &[f64]) -> ConvexSolution
where
    F: Fn(&[f64]) -> Evaluation,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let mut z = (prog.projector)(start);
    let (mut value, mut grad) = (prog.objective)(&z);
    let mut history = vec![value];
    for k in 0..prog.max_iterations {
        let mut step = prog.step / ((k + 1) as f64).sqrt();
        let mut accepted = None;
        loop {
            let trial: Vec<f64> = z.iter().zip(&grad).map(|(zi, gi)| zi - step * gi).collect();
            let cand = (prog.projector)(&trial);
            let delta: Vec<f64> = cand.iter().zip(&z).map(|(a, b)| a - b).collect();
            let moved = norm2(&delta);
            if moved < prog.tolerance {
                break;
            }
            let (cv, cg) = (prog.objective)(&cand);
            // Armijo along the projection arc
            if cv <= value + 1e-4 * dot(&grad, &delta) && cv <= value {
                accepted = Some((cand, cv, cg));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((cand, cv, cg)) => {
                z = cand;
                value = cv;
                grad = cg;
                history.push(value);
            }
            None => {
                return ConvexSolution {
                    z,
                    value,
                    iterations: k,
                    converged: true,
                    history,
                }
            }
        }
    }
    ConvexSolution {
        z,
        value,
        iterations: prog.max_iterations,
        converged: false,
        history,
    }
}

/// `‖z - a‖₂` with the zero subgradient at the kink.
pub fn distance_objective(a: &[f64]) -> impl Fn(&[f64]) -> Evaluation + '_ {
    move |z: &[f64]| {
        let d: Vec<f64> = z.iter().zip(a).map(|(x, y)| x - y).collect();
        let n = norm2(&d);
        let g = if n > 0.0 {
            d.iter().map(|v| v / n).collect()
        } else {
            vec![0.0; d.len()]
        };
        (n, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::max_abs_diff;

    fn orthant(z: &[f64]) -> Vec<f64> {
        z.iter().map(|v| v.max(0.0)).collect()
    }

    #[test]
    fn unconstrained_minimum_is_feasible() {
        let target = [1.0, 1.0];
        let prog = ConvexProgram::new(distance_objective(&target), orthant);
        let sol = convex_solve(&prog, &[3.0, 0.0]);
        assert!(sol.converged);
        assert!(max_abs_diff(&sol.z, &target) < 1e-6, "{:?}", sol.z);
    }

    #[test]
    fn minimum_is_projection_of_target() {
        let target = [-1.0, 2.0];
        let prog = ConvexProgram::new(distance_objective(&target), orthant);
        let sol = convex_solve(&prog, &[0.5, 0.5]);
        assert!(max_abs_diff(&sol.z, &[0.0, 2.0]) < 1e-6, "{:?}", sol.z);
    }

    #[test]
    fn norm_over_halfspace_and_orthant() {
        let origin = [0.0, 0.0];
        let half = HalfSpace::dense(&[1.0, 1.0], 2.0);
        let project = |z: &[f64]| dykstra(z, &[&NonNegative, &half], 1e-12, 10_000).0;
        let prog = ConvexProgram::new(distance_objective(&origin), project);
        let sol = convex_solve(&prog, &[3.0, 0.5]);
        assert!(max_abs_diff(&sol.z, &[1.0, 1.0]) < 1e-5, "{:?}", sol.z);
        assert!(half.violation(&sol.z) < 1e-8);
    }

    #[test]
    fn history_is_monotone() {
        let target = [-2.0, 3.0, 0.5];
        let half = HalfSpace::dense(&[1.0, -1.0, 1.0], 1.0);
        let project = |z: &[f64]| dykstra(z, &[&NonNegative, &half], 1e-12, 10_000).0;
        let prog = ConvexProgram::new(distance_objective(&target), project);
        let sol = convex_solve(&prog, &[5.0, 5.0, 5.0]);
        for w in sol.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn dykstra_lands_in_intersection() {
        let h1 = HalfSpace::dense(&[1.0, 2.0], 4.0);
        let h2 = HalfSpace::dense(&[-1.0, 0.0], -1.0);
        let (x, ok) = dykstra(&[-3.0, -3.0], &[&NonNegative, &h1, &h2], 1e-12, 100_000);
        assert!(ok);
        assert!(NonNegative.violation(&x) <= 1e-12);
        assert!(h1.violation(&x) <= 1e-12 && h2.violation(&x) <= 1e-12);
        // idempotent on its own output
        let (again, _) = dykstra(&x, &[&NonNegative, &h1, &h2], 1e-12, 100_000);
        assert!(max_abs_diff(&x, &again) < 1e-10);
    }

    #[test]
    fn iteration_cap_sets_flag() {
        let target = [100.0];
        let mut prog = ConvexProgram::new(distance_objective(&target), |z: &[f64]| z.to_vec());
        prog.max_iterations = 3;
        prog.step = 1e-3;
        let sol = convex_solve(&prog, &[0.0]);
        assert!(!sol.converged);
        assert!(matches!(sol.into_result(), Err(NumericsError::NoConvergence { .. })));
    }
}
