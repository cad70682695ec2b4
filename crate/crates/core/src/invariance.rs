//! Regions of attraction as stacked halfspaces, orthant invariance tests and
//! finitely determined maximal invariant sets of the extreme orthants.
//!
//! Inside orthant `k` the dynamics are affine, `x ↦ Cx + u` with fixed point
//! `x̄`, so `x(t) = Cᵗ(x(0) − x̄) + x̄`. Staying in the orthant for
//! `t = 0..τ` gives the rows `J Cᵗ x ≥ J (Cᵗ − I) x̄`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibria::{candidate_equilibrium, EquilibriumError, EquilibriumRecord};
use crate::netmodel::{orthant_of, FinancialNetwork, OrthantIndex, ShiftedModel};
use crate::numerics::matrix::dot;
use crate::numerics::{lp_solve, DenseMatrix, LinearProgram, NumericsError};

/// Upper bound on the horizon searched by [`finite_determination_index`].
pub const TAU_CAP: usize = 10_000;
/// Slack allowed by [`Polyhedron::contains`].
pub const MEMBERSHIP_TOL: f64 = 1e-9;
const REDUNDANCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum InvarianceError {
    #[error("stopping condition not met for tau <= {0}")]
    NotDeterminedWithinCap(usize),
    #[error("orthant {0} is neither healthy nor all-failed")]
    NotExtremeOrthant(OrthantIndex),
    #[error("equilibrium candidate of orthant {0} is not consistent")]
    InconsistentEquilibrium(OrthantIndex),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Origin of one constraint row: the power `t` of `C` and the component it bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowTag {
    pub t: usize,
    pub component: usize,
}

/// `{x : A x ≥ b}` in offset coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyhedron {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub provenance: Vec<RowTag>,
    /// Largest power of `C` present.
    pub horizon: usize,
    /// Rows of horizon `horizon + 1` are implied, so the set is invariant.
    pub certified: bool,
}

impl Polyhedron {
    pub fn new(a: DenseMatrix, b: Vec<f64>, provenance: Vec<RowTag>) -> Self {
        assert_eq!(a.rows(), b.len());
        assert_eq!(a.rows(), provenance.len());
        let horizon = provenance.iter().map(|r| r.t).max().unwrap_or(0);
        Self {
            a,
            b,
            provenance,
            horizon,
            certified: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    /// Largest `b_i − a_iᵀx`, zero or negative inside.
    pub fn violation(&self, x: &[f64]) -> f64 {
        (0..self.num_rows())
            .map(|i| self.b[i] - dot(self.a.row(i), x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains_tol(&self, x: &[f64], tol: f64) -> bool {
        self.violation(x) <= tol
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_tol(x, MEMBERSHIP_TOL)
    }

    fn without_row(&self, skip: usize) -> (DenseMatrix, Vec<f64>) {
        let keep: Vec<usize> = (0..self.num_rows()).filter(|&i| i != skip).collect();
        let a = DenseMatrix::from_fn(keep.len(), self.dim(), |r, c| self.a[(keep[r], c)]);
        let b = keep.iter().map(|&i| self.b[i]).collect();
        (a, b)
    }

    /// `min cᵀx` over the set; `None` when unbounded below.
    pub fn minimize(&self, c: &[f64]) -> Result<Option<f64>, NumericsError> {
        minimize_over(&self.a, &self.b, c)
    }

    /// Every point satisfies `aᵀx ≥ bound`. An empty set implies everything.
    pub fn implies_row(&self, a: &[f64], bound: f64) -> Result<bool, NumericsError> {
        implied(&self.a, &self.b, a, bound)
    }

    /// `self ⊆ other`.
    pub fn subset_of(&self, other: &Polyhedron) -> Result<bool, NumericsError> {
        for i in 0..other.num_rows() {
            if !self.implies_row(other.a.row(i), other.b[i])? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Set equality via two-sided LP implication.
    pub fn same_set(&self, other: &Polyhedron) -> Result<bool, NumericsError> {
        Ok(self.subset_of(other)? && other.subset_of(self)?)
    }

    pub fn row_is_redundant(&self, i: usize) -> Result<bool, NumericsError> {
        let (a, b) = self.without_row(i);
        implied(&a, &b, self.a.row(i), self.b[i])
    }

    /// Drops redundant rows one at a time; the set is unchanged.
    pub fn pruned(&self) -> Result<Polyhedron, NumericsError> {
        let mut out = self.clone();
        let mut i = 0;
        while i < out.num_rows() {
            if out.num_rows() > 1 && out.row_is_redundant(i)? {
                let (a, b) = out.without_row(i);
                out.a = a;
                out.b = b;
                out.provenance.remove(i);
            } else {
                i += 1;
            }
        }
        Ok(out)
    }

    pub fn is_empty(&self) -> Result<bool, NumericsError> {
        match self.minimize(&vec![0.0; self.dim()]) {
            Err(NumericsError::Infeasible) => Ok(true),
            Err(e) => Err(e),
            Ok(_) => Ok(false),
        }
    }

    /// Per-coordinate `(min, max)`; infinite where unbounded.
    pub fn bounding_box(&self) -> Result<Vec<(f64, f64)>, NumericsError> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let lo = self.minimize(&e)?.unwrap_or(f64::NEG_INFINITY);
            e[j] = -1.0;
            let hi = self.minimize(&e)?.map_or(f64::INFINITY, |v| -v);
            out.push((lo, hi));
        }
        Ok(out)
    }

    /// The same set in equity coordinates `V = x + V̲`.
    pub fn to_equity(&self, threshold: &[f64]) -> Polyhedron {
        let shift = self.a.mul_vec(threshold);
        Polyhedron {
            b: self.b.iter().zip(&shift).map(|(b, s)| b + s).collect(),
            ..self.clone()
        }
    }
}

fn minimize_over(a: &DenseMatrix, b: &[f64], c: &[f64]) -> Result<Option<f64>, NumericsError> {
    let lp = LinearProgram::new(c.to_vec(), a.clone(), b.to_vec())?;
    match lp_solve(&lp) {
        Ok(sol) => Ok(Some(sol.objective)),
        Err(NumericsError::Unbounded) => Ok(None),
        Err(e) => Err(e),
    }
}

fn implied(a: &DenseMatrix, b: &[f64], row: &[f64], bound: f64) -> Result<bool, NumericsError> {
    if a.rows() == 0 {
        return Ok(row.iter().all(|&v| v == 0.0) && bound <= 0.0);
    }
    match minimize_over(a, b, row) {
        Ok(Some(v)) => Ok(v >= bound - REDUNDANCY_TOL * (1.0 + bound.abs())),
        Ok(None) => Ok(false),
        Err(NumericsError::Infeasible) => Ok(true),
        Err(e) => Err(e),
    }
}

/// Rows `J Cᵗ x ≥ J (Cᵗ − I) x̄` for `t = 0..=tau`.
pub fn attraction_polyhedron(c: &DenseMatrix, x_bar: &[f64], orthant: &OrthantIndex, tau: usize) -> Polyhedron {
    let n = c.rows();
    let signs = orthant.signs();
    let mut rows = Vec::with_capacity(n * (tau + 1));
    let mut b = Vec::with_capacity(n * (tau + 1));
    let mut tags = Vec::with_capacity(n * (tau + 1));
    let mut power = DenseMatrix::identity(n);
    for t in 0..=tau {
        if t > 0 {
            power = power.matmul(c);
        }
        let px = power.mul_vec(x_bar);
        for i in 0..n {
            rows.push(power.row(i).iter().map(|v| signs[i] * v).collect::<Vec<_>>());
            b.push(signs[i] * (px[i] - x_bar[i]));
            tags.push(RowTag { t, component: i });
        }
    }
    let a = DenseMatrix::from_rows(&rows).unwrap_or_else(|_| DenseMatrix::zeros(0, n));
    Polyhedron::new(a, b, tags)
}

/// Appends the rows of horizon `t` to `poly`.
fn extend_rows(poly: &Polyhedron, power: &DenseMatrix, x_bar: &[f64], signs: &[f64], t: usize) -> Polyhedron {
    let n = power.rows();
    let px = power.mul_vec(x_bar);
    let block = DenseMatrix::from_fn(n, n, |i, j| signs[i] * power[(i, j)]);
    let mut b = poly.b.clone();
    b.extend((0..n).map(|i| signs[i] * (px[i] - x_bar[i])));
    let mut tags = poly.provenance.clone();
    tags.extend((0..n).map(|component| RowTag { t, component }));
    Polyhedron::new(poly.a.vstack(&block), b, tags)
}

/// Grows the horizon from `start` until the next block of rows is implied,
/// which makes the set invariant. Returns the last uncertified truncation
/// if `max_tau` is reached first.
pub fn stabilized_polyhedron(
    c: &DenseMatrix,
    x_bar: &[f64],
    orthant: &OrthantIndex,
    start: usize,
    max_tau: usize,
) -> Result<Polyhedron, NumericsError> {
    let n = c.rows();
    let signs = orthant.signs();
    let mut poly = attraction_polyhedron(c, x_bar, orthant, start);
    let mut power = crate::numerics::matrix_power(c, start);
    let mut tau = start;
    loop {
        power = power.matmul(c);
        let px = power.mul_vec(x_bar);
        let mut all = true;
        for i in 0..n {
            let row: Vec<f64> = power.row(i).iter().map(|v| signs[i] * v).collect();
            if !poly.implies_row(&row, signs[i] * (px[i] - x_bar[i]))? {
                all = false;
                break;
            }
        }
        if all {
            poly.certified = true;
            return Ok(poly);
        }
        if tau >= max_tau {
            return Ok(poly);
        }
        tau += 1;
        poly = extend_rows(&poly, &power, x_bar, &signs, tau);
    }
}

/// Smallest `τ ≥ 1` with `x̄ − Cᵗx̄ ≥ 0` (healthy) or `≤ 0` (all failed).
pub fn determination_index(
    c: &DenseMatrix,
    x_bar: &[f64],
    healthy: bool,
    cap: usize,
) -> Result<usize, InvarianceError> {
    let mut cx = x_bar.to_vec();
    for tau in 1..=cap {
        cx = c.mul_vec(&cx);
        let ok = x_bar.iter().zip(&cx).all(|(x, y)| {
            let d = x - y;
            if healthy {
                d >= 0.0
            } else {
                d <= 0.0
            }
        });
        if ok {
            return Ok(tau);
        }
    }
    Err(InvarianceError::NotDeterminedWithinCap(cap))
}

/// Maximal invariant subset of an extreme orthant for `x ↦ Cx + u` with fixed point `x̄`.
pub fn maximal_invariant_set(
    c: &DenseMatrix,
    x_bar: &[f64],
    orthant: &OrthantIndex,
) -> Result<Polyhedron, InvarianceError> {
    let healthy = if orthant.is_healthy() {
        true
    } else if orthant.is_all_failed() {
        false
    } else {
        return Err(InvarianceError::NotExtremeOrthant(*orthant));
    };
    let tau = determination_index(c, x_bar, healthy, TAU_CAP)?;
    let poly = stabilized_polyhedron(c, x_bar, orthant, tau, TAU_CAP)?;
    if !poly.certified {
        return Err(InvarianceError::NotDeterminedWithinCap(TAU_CAP));
    }
    Ok(poly)
}

fn offset_input(net: &FinancialNetwork) -> Vec<f64> {
    let cv = net.c.mul_vec(&net.threshold);
    let dp = net.asset_income();
    (0..net.n()).map(|i| cv[i] - net.threshold[i] + dp[i]).collect()
}

/// `(C − I)V̲ + Dp ≥ 0`.
pub fn orthant0_invariant(net: &FinancialNetwork) -> bool {
    offset_input(net).iter().all(|&r| r >= 0.0)
}

/// `(C − I)V̲ + Dp < β`.
pub fn last_orthant_invariant(net: &FinancialNetwork) -> bool {
    offset_input(net).iter().zip(&net.beta).all(|(r, b)| r < b)
}

/// A state of the orthant whose successor lies in another orthant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Escape {
    pub x0: Vec<f64>,
    pub x1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OrthantVerdict {
    /// All off-diagonal cross-holdings are positive, so no intermediate orthant is invariant.
    NotInvariant { escape: Option<Escape> },
    /// The positivity hypothesis fails; `escape` is the sampled counterexample if one was found.
    Unknown { escape: Option<Escape> },
}

impl OrthantVerdict {
    pub fn escape(&self) -> Option<&Escape> {
        match self {
            OrthantVerdict::NotInvariant { escape } | OrthantVerdict::Unknown { escape } => escape.as_ref(),
        }
    }
}

/// Samples `samples` states of orthant `k` with log-uniform magnitudes and steps each once.
pub fn search_escape(model: &ShiftedModel, k: &OrthantIndex, samples: usize, seed: u64) -> Option<Escape> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signs = k.signs();
    for _ in 0..samples {
        let x0: Vec<f64> = signs
            .iter()
            .map(|s| {
                let mag = 10f64.powf(rng.gen_range(-4.0..3.0));
                s * mag
            })
            .collect();
        let x1 = model.step(&x0);
        if orthant_of(&x1) != *k {
            return Some(Escape { x0, x1: x1.0 });
        }
    }
    None
}

pub fn intermediate_not_invariant(
    net: &FinancialNetwork,
    k: &OrthantIndex,
    seed: u64,
) -> Result<OrthantVerdict, InvarianceError> {
    assert!(!k.is_healthy() && !k.is_all_failed(), "intermediate orthant expected");
    let n = net.n();
    let positive = (0..n).all(|i| (0..n).all(|j| i == j || net.c[(i, j)] > 0.0));
    let model = ShiftedModel::new(net.clone()).map_err(EquilibriumError::from)?;
    let escape = search_escape(&model, k, 2000, seed);
    Ok(if positive {
        OrthantVerdict::NotInvariant { escape }
    } else {
        OrthantVerdict::Unknown { escape }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub orthant0_invariant: bool,
    pub last_orthant_invariant: bool,
    /// `(C − I)V̲ + Dp`.
    pub r: Vec<f64>,
    pub beta: Vec<f64>,
    /// Keyed by orthant number; empty when `n` is too large to enumerate.
    pub intermediate: BTreeMap<u64, OrthantVerdict>,
}

/// Orthant verdicts for every intermediate orthant when `n ≤ max_enumerated`.
pub fn invariance_report(
    net: &FinancialNetwork,
    seed: u64,
    max_enumerated: usize,
) -> Result<InvarianceReport, InvarianceError> {
    let n = net.n();
    let mut intermediate = BTreeMap::new();
    if n <= max_enumerated {
        for k in OrthantIndex::all(n).filter(|k| !k.is_healthy() && !k.is_all_failed()) {
            intermediate.insert(k.k(), intermediate_not_invariant(net, &k, seed ^ k.k())?);
        }
    }
    Ok(InvarianceReport {
        orthant0_invariant: orthant0_invariant(net),
        last_orthant_invariant: last_orthant_invariant(net),
        r: offset_input(net),
        beta: net.beta.clone(),
        intermediate,
    })
}

/// Truncation of the region of attraction of `eq` at horizon `tau`.
pub fn region_of_attraction(model: &ShiftedModel, eq: &EquilibriumRecord, tau: usize) -> Polyhedron {
    attraction_polyhedron(model.c(), &eq.x_bar, &eq.orthant, tau)
}

/// Region of attraction grown until it stops changing, for any orthant.
pub fn stabilized_region(
    model: &ShiftedModel,
    eq: &EquilibriumRecord,
    max_tau: usize,
) -> Result<Polyhedron, InvarianceError> {
    Ok(stabilized_polyhedron(model.c(), &eq.x_bar, &eq.orthant, 0, max_tau)?)
}

fn consistent_extreme(model: &ShiftedModel, k: &OrthantIndex) -> Result<EquilibriumRecord, InvarianceError> {
    if !k.is_healthy() && !k.is_all_failed() {
        return Err(InvarianceError::NotExtremeOrthant(*k));
    }
    let eq = candidate_equilibrium(model, *k)?;
    if !eq.consistent {
        return Err(InvarianceError::InconsistentEquilibrium(*k));
    }
    Ok(eq)
}

pub fn finite_determination_index(model: &ShiftedModel, k: &OrthantIndex) -> Result<usize, InvarianceError> {
    let eq = consistent_extreme(model, k)?;
    determination_index(model.c(), &eq.x_bar, k.is_healthy(), TAU_CAP)
}

/// The maximal invariant subset of orthant 0 (`ℳ⁺`) or of the all-failed orthant.
pub fn maximal_invariant_region(model: &ShiftedModel, k: &OrthantIndex) -> Result<Polyhedron, InvarianceError> {
    let eq = consistent_extreme(model, k)?;
    maximal_invariant_set(model.c(), &eq.x_bar, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::consistent_equilibria;
    use crate::fixtures;
    use crate::netmodel::tests::network_strategy;
    use proptest::prelude::*;

    fn m1() -> ShiftedModel {
        ShiftedModel::new(fixtures::mutual_pair()).unwrap()
    }

    #[test]
    fn extreme_orthant_conditions() {
        assert!(orthant0_invariant(&fixtures::mutual_pair()));
        assert!(orthant0_invariant(&fixtures::ring4()));
        assert!(last_orthant_invariant(&fixtures::mutual_pair()));
        assert!(last_orthant_invariant(&fixtures::ring4()));
        let mut net = fixtures::mutual_pair();
        net.threshold = vec![50.0, 50.0];
        assert!(!orthant0_invariant(&net));
        let mut net = fixtures::mutual_pair();
        net.beta = vec![0.4, 0.4];
        assert!(!last_orthant_invariant(&net));
    }

    #[test]
    fn intermediate_verdicts() {
        let net = fixtures::uniform10();
        let k = OrthantIndex::new(5, 10).unwrap();
        assert!(matches!(
            intermediate_not_invariant(&net, &k, 1).unwrap(),
            OrthantVerdict::NotInvariant { .. }
        ));
        let k = OrthantIndex::new(1, 2).unwrap();
        assert!(matches!(
            intermediate_not_invariant(&fixtures::mutual_pair(), &k, 1).unwrap(),
            OrthantVerdict::NotInvariant { .. }
        ));
        let net = fixtures::ring4();
        let k = OrthantIndex::new(5, 4).unwrap();
        let v = intermediate_not_invariant(&net, &k, 1).unwrap();
        assert!(matches!(v, OrthantVerdict::Unknown { .. }));
        let esc = v.escape().expect("escape found");
        assert_eq!(orthant_of(&esc.x0), k);
        assert_ne!(orthant_of(&esc.x1), k);
    }

    #[test]
    fn first_rows_are_the_orthant() {
        let m = m1();
        let eq = candidate_equilibrium(&m, OrthantIndex::healthy(2)).unwrap();
        let p = region_of_attraction(&m, &eq, 0);
        assert_eq!(p.num_rows(), 2);
        assert!(p.contains(&[0.0, 0.0]));
        assert!(!p.contains(&[-0.1, 0.0]));
        assert!(p.contains(&[0.5, 0.5]));
        assert!(m
            .simulate(&[0.5, 0.5], 100)
            .states
            .iter()
            .all(|s| s.iter().all(|&v| v >= 0.0)));
    }

    #[test]
    fn pair_mixed_quadrant_boxes() {
        let m = m1();
        let thr = &m.network().threshold;
        let want = [(1, [(5.0, 6.0), (4.0, 5.0)]), (2, [(4.0, 5.0), (5.0, 6.0)])];
        for (k, boxes) in want {
            let eq = candidate_equilibrium(&m, OrthantIndex::new(k, 2).unwrap()).unwrap();
            let p = stabilized_region(&m, &eq, 50).unwrap();
            assert!(p.certified);
            let bb = p.to_equity(thr).bounding_box().unwrap();
            for (got, w) in bb.iter().zip(boxes) {
                assert!((got.0 - w.0).abs() < 1e-9 && (got.1 - w.1).abs() < 1e-9, "{k}: {bb:?}");
            }
        }
    }

    #[test]
    fn determination_examples() {
        for net in [fixtures::mutual_pair(), fixtures::ring4()] {
            let m = ShiftedModel::new(net).unwrap();
            let n = m.n();
            for k in [OrthantIndex::healthy(n), OrthantIndex::all_failed(n)] {
                assert_eq!(finite_determination_index(&m, &k).unwrap(), 1);
                let eq = candidate_equilibrium(&m, k).unwrap();
                let p1 = region_of_attraction(&m, &eq, 1);
                let p2 = region_of_attraction(&m, &eq, 2);
                assert!(p1.same_set(&p2).unwrap());
            }
        }
    }

    #[test]
    fn mplus_of_pair_is_the_orthant() {
        let m = m1();
        let p = maximal_invariant_region(&m, &OrthantIndex::healthy(2)).unwrap();
        let orthant = region_of_attraction(&m, &candidate_equilibrium(&m, OrthantIndex::healthy(2)).unwrap(), 0);
        assert!(p.same_set(&orthant).unwrap());
        assert!(p.contains(&[1.0, 1.0]));
        assert_eq!(p.pruned().unwrap().num_rows(), 2);
    }

    #[test]
    fn rejects_intermediate_and_inconsistent() {
        let m = m1();
        assert!(matches!(
            finite_determination_index(&m, &OrthantIndex::new(1, 2).unwrap()),
            Err(InvarianceError::NotExtremeOrthant(_))
        ));
        let mut net = fixtures::mutual_pair();
        net.threshold = vec![50.0, 50.0];
        let m = ShiftedModel::new(net).unwrap();
        assert!(matches!(
            maximal_invariant_region(&m, &OrthantIndex::healthy(2)),
            Err(InvarianceError::InconsistentEquilibrium(_))
        ));
    }

    #[test]
    fn polyhedron_helpers() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0], vec![1.0, 1.0]]).unwrap();
        let p = Polyhedron::new(
            a,
            vec![0.0, 0.0, -1.0, -5.0],
            (0..4).map(|i| RowTag { t: 0, component: i }).collect(),
        );
        assert!(p.row_is_redundant(3).unwrap());
        assert!(!p.row_is_redundant(2).unwrap());
        assert_eq!(p.pruned().unwrap().num_rows(), 3);
        assert_eq!(p.bounding_box().unwrap(), vec![(0.0, 1.0), (0.0, 1.0)]);
        let mut empty = p.clone();
        empty.b[2] = 1.0;
        assert!(empty.is_empty().unwrap());
    }

    fn healthy_model(net: FinancialNetwork) -> Option<ShiftedModel> {
        let m = ShiftedModel::new(net).ok()?;
        let eq = candidate_equilibrium(&m, OrthantIndex::healthy(m.n())).ok()?;
        (eq.consistent && eq.interior).then_some(m)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn mplus_is_invariant_and_maximal(
            net in network_strategy(4),
            pts in proptest::collection::vec(proptest::collection::vec(0.0f64..6.0, 4), 40),
        ) {
            let m = healthy_model(net);
            prop_assume!(m.is_some());
            let m = m.unwrap();
            let n = m.n();
            let p = maximal_invariant_region(&m, &OrthantIndex::healthy(n)).unwrap();
            let eq = candidate_equilibrium(&m, OrthantIndex::healthy(n)).unwrap();
            prop_assert!(p.contains(&eq.x_bar));
            let tau = p.horizon;
            for x in pts {
                let x = &x[..n];
                if p.contains(x) {
                    prop_assert!(p.contains_tol(&m.step(x), 1e-8));
                } else if p.violation(x) > 1e-7 {
                    let traj = m.simulate(x, tau + 1);
                    prop_assert!(traj.states.iter().any(|s| s.iter().any(|&v| v < 0.0)));
                }
            }
        }

        #[test]
        fn positive_offset_gives_the_orthant(net in network_strategy(4), pts in proptest::collection::vec(proptest::collection::vec(-1.0f64..3.0, 4), 40)) {
            prop_assume!(orthant0_invariant(&net));
            let m = ShiftedModel::new(net).unwrap();
            let n = m.n();
            let consistent = consistent_equilibria(&m).unwrap();
            prop_assume!(consistent.iter().any(|e| e.orthant.is_healthy()));
            let p = maximal_invariant_region(&m, &OrthantIndex::healthy(n)).unwrap();
            for x in pts {
                let x = &x[..n];
                prop_assert_eq!(p.contains_tol(x, 0.0), x.iter().all(|&v| v >= 0.0));
            }
        }
    }
}
