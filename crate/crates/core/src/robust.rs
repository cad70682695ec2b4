//! Healthy-orthant dynamics `x(t+1) = C(t) x(t) + r` with cross-holdings
//! switching inside an entrywise interval `C⁻ ≤ C(t) ≤ C⁺`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::invariance::{maximal_invariant_set, InvarianceError, Polyhedron};
use crate::netmodel::{FinancialNetwork, OrthantIndex, ShiftedModel};
use crate::numerics::{solve_linear, DenseMatrix, NumericsError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RobustError {
    #[error("invalid interval network: {0}")]
    Invalid(String),
    #[error("fixed point of the lower system has a negative entry: {0:?}")]
    NoPositiveEquilibrium(Vec<f64>),
    #[error("extremal fixed points are not ordered")]
    UnorderedFixedPoints,
    #[error("trajectory left the healthy orthant at t = {t}")]
    LeftHealthyOrthant { t: usize, state: Vec<f64> },
    #[error("switching sequence has {have} matrices, {need} needed")]
    SequenceTooShort { have: usize, need: usize },
    #[error(transparent)]
    Invariance(#[from] InvarianceError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalNetwork {
    pub c_lower: DenseMatrix,
    pub c_upper: DenseMatrix,
    pub r: Vec<f64>,
}

impl IntervalNetwork {
    /// Checks `0 < c⁻ᵢⱼ ≤ c⁺ᵢⱼ` off the diagonal, a zero diagonal and column sums of `C⁺` below one.
    pub fn new(c_lower: DenseMatrix, c_upper: DenseMatrix, r: Vec<f64>) -> Result<Self, RobustError> {
        let n = r.len();
        for m in [&c_lower, &c_upper] {
            if m.rows() != n || m.cols() != n {
                return Err(RobustError::Invalid(format!("bounds must be {n}x{n}")));
            }
        }
        for i in 0..n {
            if c_lower[(i, i)] != 0.0 || c_upper[(i, i)] != 0.0 {
                return Err(RobustError::Invalid(format!("nonzero diagonal at {i}")));
            }
            for j in (0..n).filter(|&j| j != i) {
                let (lo, hi) = (c_lower[(i, j)], c_upper[(i, j)]);
                if !(lo > 0.0 && lo <= hi) {
                    return Err(RobustError::Invalid(format!(
                        "need 0 < c-[{i}][{j}] = {lo} <= c+[{i}][{j}] = {hi}"
                    )));
                }
            }
        }
        if let Some((j, s)) = c_upper.column_sums().into_iter().enumerate().find(|(_, s)| *s >= 1.0) {
            return Err(RobustError::Invalid(format!(
                "column sum not < 1: column {j} of C+ sums to {s}"
            )));
        }
        Ok(Self { c_lower, c_upper, r })
    }

    /// `C·(1 ∓ rel)` around a nominal network, keeping its `r`.
    pub fn around(net: &FinancialNetwork, rel: f64) -> Result<Self, RobustError> {
        let model = ShiftedModel::new(net.clone()).map_err(|e| RobustError::Invalid(e.to_string()))?;
        Self::new(net.c.scale(1.0 - rel), net.c.scale(1.0 + rel), model.r().to_vec())
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    fn step_with(&self, c: &DenseMatrix, x: &[f64]) -> Vec<f64> {
        let mut y = c.mul_vec(x);
        for (v, r) in y.iter_mut().zip(&self.r) {
            *v += r;
        }
        y
    }
}

fn fixed_point(c: &DenseMatrix, r: &[f64]) -> Result<Vec<f64>, NumericsError> {
    solve_linear(&DenseMatrix::identity(c.rows()).sub(c), r)
}

/// `(x̄⁻, x̄⁺)` with `x̄^± = (I − C^±)⁻¹ r`.
pub fn extremal_fixed_points(inet: &IntervalNetwork) -> Result<(Vec<f64>, Vec<f64>), RobustError> {
    let lo = fixed_point(&inet.c_lower, &inet.r)?;
    let hi = fixed_point(&inet.c_upper, &inet.r)?;
    if lo.iter().zip(&hi).any(|(a, b)| a > &(b + 1e-12 * (1.0 + b.abs()))) {
        return Err(RobustError::UnorderedFixedPoints);
    }
    Ok((lo, hi))
}

fn healthy_set(c: &DenseMatrix, x_bar: &[f64]) -> Result<Polyhedron, RobustError> {
    if x_bar.iter().any(|&v| v < 0.0) {
        return Err(RobustError::NoPositiveEquilibrium(x_bar.to_vec()));
    }
    Ok(maximal_invariant_set(c, x_bar, &OrthantIndex::healthy(x_bar.len()))?)
}

/// Largest set from which every admissible `C(t)` keeps the state healthy:
/// the maximal invariant set of the lower system.
pub fn robust_invariant_set(inet: &IntervalNetwork) -> Result<Polyhedron, RobustError> {
    let lo = fixed_point(&inet.c_lower, &inet.r)?;
    healthy_set(&inet.c_lower, &lo)
}

/// Maximal invariant set of the upper system; outside it some organization
/// fails whatever `C(t)` is realized.
pub fn last_hope_set(inet: &IntervalNetwork) -> Result<Polyhedron, RobustError> {
    let hi = fixed_point(&inet.c_upper, &inet.r)?;
    healthy_set(&inet.c_upper, &hi)
}

pub fn last_hope_membership(inet: &IntervalNetwork, x0: &[f64]) -> Result<bool, RobustError> {
    assert!(x0.iter().all(|&v| v >= 0.0), "x0 must be healthy");
    Ok(last_hope_set(inet)?.contains(x0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Switching {
    ConstantLower,
    ConstantUpper,
    /// Every off-diagonal entry drawn uniformly in its interval at every step.
    UniformIid {
        seed: u64,
    },
    Sequence {
        matrices: Vec<DenseMatrix>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: Vec<Vec<f64>>,
    pub actual: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
    pub x_lower_bar: Vec<f64>,
    pub x_upper_bar: Vec<f64>,
}

impl Sandwich {
    /// Largest violation of `x⁻(t) ≤ x(t) ≤ x⁺(t)` over all steps.
    pub fn ordering_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for ((lo, x), hi) in self.lower.iter().zip(&self.actual).zip(&self.upper) {
            for i in 0..x.len() {
                worst = worst.max(lo[i] - x[i]).max(x[i] - hi[i]);
            }
        }
        worst
    }
}

/// Simulates the lower, switched and upper systems from the same `x0`.
/// Fails if the switched trajectory leaves the healthy orthant.
pub fn sandwich_bounds(
    inet: &IntervalNetwork,
    x0: &[f64],
    horizon: usize,
    switching: &Switching,
) -> Result<Sandwich, RobustError> {
    let n = inet.n();
    if let Switching::Sequence { matrices } = switching {
        if matrices.len() < horizon {
            return Err(RobustError::SequenceTooShort {
                have: matrices.len(),
                need: horizon,
            });
        }
    }
    let (x_lower_bar, x_upper_bar) = extremal_fixed_points(inet)?;
    let mut rng = match switching {
        Switching::UniformIid { seed } => Some(ChaCha8Rng::seed_from_u64(*seed)),
        _ => None,
    };
    let mut lower = vec![x0.to_vec()];
    let mut actual = vec![x0.to_vec()];
    let mut upper = vec![x0.to_vec()];
    if x0.iter().any(|&v| v < 0.0) {
        return Err(RobustError::LeftHealthyOrthant {
            t: 0,
            state: x0.to_vec(),
        });
    }
    let mut drawn = DenseMatrix::zeros(n, n);
    for t in 0..horizon {
        let c = match switching {
            Switching::ConstantLower => &inet.c_lower,
            Switching::ConstantUpper => &inet.c_upper,
            Switching::Sequence { matrices } => &matrices[t],
            Switching::UniformIid { .. } => {
                let rng = rng.as_mut().expect("seeded");
                for i in 0..n {
                    for j in (0..n).filter(|&j| j != i) {
                        let (lo, hi) = (inet.c_lower[(i, j)], inet.c_upper[(i, j)]);
                        drawn[(i, j)] = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
                    }
                }
                &drawn
            }
        };
        let next = inet.step_with(c, &actual[t]);
        if next.iter().any(|&v| v < 0.0) {
            return Err(RobustError::LeftHealthyOrthant { t: t + 1, state: next });
        }
        lower.push(inet.step_with(&inet.c_lower, &lower[t]));
        upper.push(inet.step_with(&inet.c_upper, &upper[t]));
        actual.push(next);
    }
    Ok(Sandwich {
        lower,
        actual,
        upper,
        x_lower_bar,
        x_upper_bar,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustReport {
    pub x_lower_bar: Vec<f64>,
    pub x_upper_bar: Vec<f64>,
    pub robust_set: Polyhedron,
    pub last_hope_set: Polyhedron,
}

pub fn robust_report(inet: &IntervalNetwork) -> Result<RobustReport, RobustError> {
    let (x_lower_bar, x_upper_bar) = extremal_fixed_points(inet)?;
    Ok(RobustReport {
        robust_set: robust_invariant_set(inet)?,
        last_hope_set: last_hope_set(inet)?,
        x_lower_bar,
        x_upper_bar,
    })
}
