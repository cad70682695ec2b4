//! The network, the failure indicator, orthant bookkeeping and the step map
//! `x(t+1) = C x(t) + r − B φ(x(t))` with `x = V − V̲`.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::matrix::{max_abs_diff, sub_vec};
use crate::numerics::{DenseMatrix, LuFactors};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("{what}: expected length {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("orthant index {k} out of range for n = {n}")]
    OrthantOutOfRange { k: u64, n: usize },
    #[error("dimension {0} too large for orthant indexing")]
    TooManyOrganizations(usize),
    #[error("invalid network: {0}")]
    Invalid(ValidationReport),
}

/// The static model `(C, D, p, B = diag(β), V̲)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinancialNetwork {
    /// Cross-holdings: `c[(i, j)]` is the fraction of organization `j` held by `i`.
    pub c: DenseMatrix,
    /// Asset shares, `n × m`.
    pub d: DenseMatrix,
    /// Asset prices, length `m`.
    pub p: Vec<f64>,
    /// Failure costs, the diagonal of `B`.
    pub beta: Vec<f64>,
    /// Failure thresholds `V̲`.
    pub threshold: Vec<f64>,
}

impl FinancialNetwork {
    /// Checks shapes only; semantic constraints are reported by [`validate`](Self::validate).
    pub fn new(
        c: DenseMatrix,
        d: DenseMatrix,
        p: Vec<f64>,
        beta: Vec<f64>,
        threshold: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let net = Self {
            c,
            d,
            p,
            beta,
            threshold,
        };
        net.check_shapes()?;
        Ok(net)
    }

    pub fn check_shapes(&self) -> Result<(), ModelError> {
        let n = self.c.rows();
        let dim = |what, expected, found| {
            if expected == found {
                Ok(())
            } else {
                Err(ModelError::Dimension { what, expected, found })
            }
        };
        dim("C columns", n, self.c.cols())?;
        dim("D rows", n, self.d.rows())?;
        dim("p", self.d.cols(), self.p.len())?;
        dim("beta", n, self.beta.len())?;
        dim("threshold", n, self.threshold.len())?;
        if self
            .p
            .iter()
            .chain(&self.beta)
            .chain(&self.threshold)
            .any(|v| !v.is_finite())
        {
            return Err(ModelError::NonFinite("network vectors"));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.c.rows()
    }

    pub fn m(&self) -> usize {
        self.d.cols()
    }

    /// `D p`
    pub fn asset_income(&self) -> Vec<f64> {
        self.d.mul_vec(&self.p)
    }

    pub fn with_assets(&self, d: DenseMatrix) -> Self {
        Self { d, ..self.clone() }
    }

    pub fn validate(&self) -> ValidationReport {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = self.c[(i, j)];
                if i == j && v != 0.0 {
                    out.push(Violation::NonzeroDiagonal { i, value: v });
                } else if v < 0.0 {
                    out.push(Violation::NegativeCrossHolding { i, j, value: v });
                }
            }
        }
        for (j, s) in self.c.column_sums().into_iter().enumerate() {
            if s >= 1.0 {
                out.push(Violation::ColumnSumNotBelowOne { j, sum: s });
            }
        }
        if LuFactors::factorize(&self.c).is_err() {
            out.push(Violation::SingularCrossHoldings);
        }
        for i in 0..n {
            for k in 0..self.m() {
                if self.d[(i, k)] < 0.0 {
                    out.push(Violation::NegativeAssetShare {
                        i,
                        k,
                        value: self.d[(i, k)],
                    });
                }
            }
        }
        for (k, &pk) in self.p.iter().enumerate() {
            if pk < 0.0 {
                out.push(Violation::NegativePrice { k, value: pk });
            }
        }
        if !self.p.iter().any(|&pk| pk > 0.0) {
            out.push(Violation::NoPositivePrice);
        }
        for (i, &b) in self.beta.iter().enumerate() {
            if b <= 0.0 {
                out.push(Violation::NonPositiveFailureCost { i, value: b });
            }
        }
        ValidationReport { violations: out }
    }

    /// `Dp − β ≥ 0`: trajectories started at `V(0) ≥ 0` keep `V(t) ≥ 0`.
    pub fn positivity_holds(&self) -> bool {
        self.asset_income().iter().zip(&self.beta).all(|(dp, b)| dp - b >= 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonzeroDiagonal {
        i: usize,
        value: f64,
    },
    NegativeCrossHolding {
        i: usize,
        j: usize,
        value: f64,
    },
    ColumnSumNotBelowOne {
        j: usize,
        sum: f64,
    },
    /// Reported but not fatal: nothing downstream inverts `C`.
    SingularCrossHoldings,
    NegativeAssetShare {
        i: usize,
        k: usize,
        value: f64,
    },
    NegativePrice {
        k: usize,
        value: f64,
    },
    NoPositivePrice,
    NonPositiveFailureCost {
        i: usize,
        value: f64,
    },
}

impl Violation {
    pub fn is_fatal(&self) -> bool {
        !matches!(self, Violation::SingularCrossHoldings)
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonzeroDiagonal { i, value } => write!(f, "nonzero diagonal C[{i}][{i}] = {value}"),
            Violation::NegativeCrossHolding { i, j, value } => {
                write!(f, "negative cross-holding C[{i}][{j}] = {value}")
            }
            Violation::ColumnSumNotBelowOne { j, sum } => {
                write!(f, "column sum not < 1: column {j} sums to {sum}")
            }
            Violation::SingularCrossHoldings => write!(f, "cross-holdings matrix C is singular"),
            Violation::NegativeAssetShare { i, k, value } => write!(f, "negative asset share D[{i}][{k}] = {value}"),
            Violation::NegativePrice { k, value } => write!(f, "negative price p[{k}] = {value}"),
            Violation::NoPositivePrice => write!(f, "price vector has no positive entry"),
            Violation::NonPositiveFailureCost { i, value } => write!(f, "failure cost beta[{i}] = {value} is not > 0"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        !self.violations.iter().any(Violation::is_fatal)
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

/// Equity offset `x = V − V̲`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn new(x: Vec<f64>) -> Self {
        Self(x)
    }

    pub fn from_equity(v: &[f64], threshold: &[f64]) -> Self {
        Self(sub_vec(v, threshold))
    }

    pub fn to_equity(&self, threshold: &[f64]) -> Vec<f64> {
        self.0.iter().zip(threshold).map(|(x, t)| x + t).collect()
    }

    pub fn dist_inf(&self, other: &Self) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }
}

impl Deref for StateVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(x: Vec<f64>) -> Self {
        Self(x)
    }
}

/// `φ(x)_i = 1` iff `x_i < 0`; zero counts as healthy.
pub fn indicator(x: &[f64]) -> Vec<u8> {
    x.iter().map(|&v| u8::from(v < 0.0)).collect()
}

/// Orthant `k` of `ℝⁿ`. Bit `i` of `φ^[k]` (most significant first) flags organization `i` as failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrthantIndex {
    k: u64,
    n: usize,
}

impl OrthantIndex {
    pub const MAX_DIM: usize = 63;

    pub fn new(k: u64, n: usize) -> Result<Self, ModelError> {
        if n > Self::MAX_DIM {
            return Err(ModelError::TooManyOrganizations(n));
        }
        if k >= 1u64 << n {
            return Err(ModelError::OrthantOutOfRange { k, n });
        }
        Ok(Self { k, n })
    }

    /// All organizations healthy.
    pub fn healthy(n: usize) -> Self {
        Self { k: 0, n }
    }

    /// All organizations failed, `k = 2ⁿ − 1`.
    pub fn all_failed(n: usize) -> Self {
        Self { k: (1u64 << n) - 1, n }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let n = bits.len();
        assert!(n <= Self::MAX_DIM);
        let k = bits.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b != 0));
        Self { k, n }
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_healthy(&self) -> bool {
        self.k == 0
    }

    pub fn is_all_failed(&self) -> bool {
        self.k == (1u64 << self.n) - 1
    }

    /// `φ^[k]`
    pub fn characteristic(&self) -> Vec<u8> {
        (0..self.n).map(|i| ((self.k >> (self.n - 1 - i)) & 1) as u8).collect()
    }

    /// Diagonal of `J^[k] = diag(𝟙 − 2φ^[k])`.
    pub fn signs(&self) -> Vec<f64> {
        self.characteristic()
            .iter()
            .map(|&b| 1.0 - 2.0 * f64::from(b))
            .collect()
    }

    /// Membership under the indicator convention (zero entries are healthy).
    pub fn contains(&self, x: &[f64]) -> bool {
        indicator(x) == self.characteristic()
    }

    pub fn all(n: usize) -> impl Iterator<Item = OrthantIndex> {
        assert!(n <= Self::MAX_DIM);
        (0..(1u64 << n)).map(move |k| OrthantIndex { k, n })
    }
}

impl fmt::Display for OrthantIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.k)
    }
}

pub fn orthant_of(x: &[f64]) -> OrthantIndex {
    OrthantIndex::from_bits(&indicator(x))
}

/// The network in offset coordinates with `r = (C − I) V̲ + D p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedModel {
    network: FinancialNetwork,
    r: Vec<f64>,
}

impl ShiftedModel {
    pub fn new(network: FinancialNetwork) -> Result<Self, ModelError> {
        network.check_shapes()?;
        let cv = network.c.mul_vec(&network.threshold);
        let dp = network.asset_income();
        let r = cv
            .iter()
            .zip(&network.threshold)
            .zip(&dp)
            .map(|((cv, v), dp)| cv - v + dp)
            .collect();
        Ok(Self { network, r })
    }

    /// Like [`new`](Self::new) but refuses networks with fatal violations.
    pub fn validated(network: FinancialNetwork) -> Result<Self, ModelError> {
        let report = network.validate();
        if !report.is_valid() {
            return Err(ModelError::Invalid(report));
        }
        Self::new(network)
    }

    pub fn network(&self) -> &FinancialNetwork {
        &self.network
    }

    pub fn n(&self) -> usize {
        self.network.n()
    }

    pub fn c(&self) -> &DenseMatrix {
        &self.network.c
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn beta(&self) -> &[f64] {
        &self.network.beta
    }

    /// `r − B φ^[k]`, the constant input while the state stays in orthant `k`.
    pub fn orthant_input(&self, k: &OrthantIndex) -> Vec<f64> {
        self.r
            .iter()
            .zip(&self.network.beta)
            .zip(k.characteristic())
            .map(|((r, b), phi)| r - b * f64::from(phi))
            .collect()
    }

    pub fn step(&self, x: &[f64]) -> StateVector {
        let mut next = self.network.c.mul_vec(x);
        for (i, v) in next.iter_mut().enumerate() {
            *v += self.r[i];
            if x[i] < 0.0 {
                *v -= self.network.beta[i];
            }
        }
        StateVector(next)
    }

    pub fn simulate(&self, x0: &[f64], horizon: usize) -> Trajectory {
        let mut states = Vec::with_capacity(horizon + 1);
        states.push(StateVector(x0.to_vec()));
        for t in 0..horizon {
            let next = self.step(&states[t]);
            states.push(next);
        }
        Trajectory { states }
    }

    /// Same model with the asset matrix replaced.
    pub fn with_assets(&self, d: DenseMatrix) -> Result<Self, ModelError> {
        Self::new(self.network.with_assets(d))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<StateVector>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &StateVector {
        self.states.last().expect("trajectory always holds x(0)")
    }

    pub fn orthant_sequence(&self) -> Vec<OrthantIndex> {
        self.states.iter().map(|s| orthant_of(s)).collect()
    }

    /// Header `t,x_1,…,x_n`, one row per step, 9 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, |s| s.len());
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",x_{i}"));
        }
        out.push('\n');
        for (t, s) in self.states.iter().enumerate() {
            out.push_str(&t.to_string());
            for v in s.iter() {
                out.push(',');
                out.push_str(&sig9(*v));
            }
            out.push('\n');
        }
        out
    }

    /// Every transition equals the model's step exactly.
    pub fn replays(&self, model: &ShiftedModel) -> bool {
        self.states.windows(2).all(|w| model.step(&w[0]) == w[1])
    }
}

/// `v` rounded to 9 significant digits, printed in shortest form.
pub fn sig9(v: f64) -> String {
    let rounded: f64 = format!("{v:.8e}").parse().unwrap_or(v);
    format!("{rounded}")
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    #[test]
    fn pair_is_valid() {
        let report = fixtures::mutual_pair().validate();
        assert!(report.is_empty(), "{report}");
    }

    #[test]
    fn nonzero_diagonal_reported() {
        let mut net = fixtures::mutual_pair();
        net.c[(0, 0)] = 0.1;
        let report = net.validate();
        assert!(!report.is_valid());
        assert!(report.to_string().contains("nonzero diagonal"));
    }

    #[test]
    fn column_sum_of_one_reported() {
        let mut net = fixtures::mutual_pair();
        net.c[(1, 0)] = 1.0;
        let report = net.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::ColumnSumNotBelowOne { j: 0, .. })));
        assert!(report.to_string().contains("column sum not < 1"));
    }

    #[test]
    fn singular_c_is_not_fatal() {
        let mut net = fixtures::mutual_pair();
        net.c = DenseMatrix::zeros(2, 2);
        let report = net.validate();
        assert_eq!(report.violations, vec![Violation::SingularCrossHoldings]);
        assert!(report.is_valid());
    }

    #[test]
    fn indicator_cases() {
        assert_eq!(indicator(&[1.0, -1.0]), vec![0, 1]);
        assert_eq!(indicator(&[0.0, 0.0]), vec![0, 0]);
        assert_eq!(indicator(&[-0.2943, -1.0177, -0.0024, 0.4985]), vec![1, 1, 1, 0]);
    }

    #[test]
    fn orthant_numbering() {
        assert_eq!(orthant_of(&[1.0, 1.0]).k(), 0);
        assert_eq!(orthant_of(&[1.0, -1.0]).k(), 1);
        assert_eq!(orthant_of(&[-1.0, -1.0]).k(), 3);
        let k1 = OrthantIndex::new(1, 2).unwrap();
        assert_eq!(k1.characteristic(), vec![0, 1]);
        assert_eq!(k1.signs(), vec![1.0, -1.0]);
        assert!(OrthantIndex::new(4, 2).is_err());
        assert!(OrthantIndex::all_failed(2).is_all_failed());
    }

    #[test]
    fn step_ring_periodic_row() {
        let model = ShiftedModel::new(fixtures::ring4()).unwrap();
        let x = model.step(&fixtures::PERIOD8_ORBIT[0]);
        assert!(max_abs_diff(&x, &fixtures::PERIOD8_ORBIT[1]) < 1e-3);
    }

    #[test]
    fn step_fixed_point_pair() {
        let model = ShiftedModel::new(fixtures::mutual_pair()).unwrap();
        assert!(max_abs_diff(model.r(), &[0.5, 0.5]) < 1e-15);
        let x = model.step(&[1.0, 1.0]);
        assert!(max_abs_diff(&x, &[1.0, 1.0]) < 1e-15);
    }

    #[test]
    fn simulate_cases() {
        let m2 = ShiftedModel::new(fixtures::ring4()).unwrap();
        let traj = m2.simulate(&fixtures::PERIOD8_ORBIT[0], 8);
        assert_eq!(traj.len(), 9);
        assert!(traj.states[8].dist_inf(&traj.states[0]) < 1e-3);
        assert!(traj.replays(&m2));

        let zero = m2.simulate(&[1.0, 2.0, 3.0, 4.0], 0);
        assert_eq!(zero.states, vec![StateVector(vec![1.0, 2.0, 3.0, 4.0])]);

        let m1 = ShiftedModel::new(fixtures::mutual_pair()).unwrap();
        let traj = m1.simulate(&[2.0, 2.0], 50);
        assert!(max_abs_diff(traj.last(), &[1.0, 1.0]) < 1e-9);
    }

    #[test]
    fn csv_format() {
        let m = ShiftedModel::new(fixtures::mutual_pair()).unwrap();
        let csv = m.simulate(&[1.0 / 3.0, -2.0], 1).to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,x_1,x_2");
        assert_eq!(lines[1], "0,0.333333333,-2");
        assert_eq!(lines.len(), 3);
        assert_eq!(sig9(123456789012.0), "123456789000");
    }

    #[test]
    fn positivity_cases() {
        assert!(fixtures::mutual_pair().positivity_holds());
        assert!(fixtures::ring4().positivity_holds());
        let mut net = fixtures::mutual_pair();
        net.beta = vec![4.0, 4.0];
        assert!(!net.positivity_holds());
    }

    /// Random network with column sums of `C` below 0.95.
    pub(crate) fn network_strategy(max_n: usize) -> impl Strategy<Value = FinancialNetwork> {
        (2usize..=max_n).prop_flat_map(|n| {
            (
                proptest::collection::vec(0.0f64..1.0, n * n),
                proptest::collection::vec(0.0f64..1.0, n),
                proptest::collection::vec(0.1f64..2.0, n),
                proptest::collection::vec(-2.0f64..2.0, n),
                0.3f64..0.95,
            )
                .prop_map(move |(raw, dp, beta, thr, colsum)| {
                    let mut c = DenseMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { raw[i * n + j] });
                    for (j, s) in c.column_sums().into_iter().enumerate() {
                        for i in 0..n {
                            if s > 0.0 {
                                c[(i, j)] *= colsum / s;
                            }
                        }
                    }
                    FinancialNetwork::new(
                        c,
                        DenseMatrix::identity(n),
                        dp.iter().map(|v| v * 3.0).collect(),
                        beta,
                        thr,
                    )
                    .unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn monotone_in_initial_state(
            net in network_strategy(6),
            base in proptest::collection::vec(-3.0f64..3.0, 6),
            bump in proptest::collection::vec(0.0f64..1.0, 6),
        ) {
            let model = ShiftedModel::new(net).unwrap();
            let n = model.n();
            let lo: Vec<f64> = base[..n].to_vec();
            let hi: Vec<f64> = lo.iter().zip(&bump).map(|(a, b)| a + b).collect();
            let tl = model.simulate(&lo, 50);
            let th = model.simulate(&hi, 50);
            for (a, b) in tl.states.iter().zip(&th.states) {
                for (x, y) in a.iter().zip(b.iter()) {
                    prop_assert!(y >= x);
                }
            }
        }

        #[test]
        fn positivity_preserved(
            net in network_strategy(6),
            v0 in proptest::collection::vec(0.0f64..5.0, 6),
        ) {
            let mut net = net;
            // make Dp − β ≥ 0
            let n = net.n();
            net.p = net.p.iter().zip(&net.beta).map(|(p, b)| p + b).collect();
            prop_assume!(net.positivity_holds());
            let model = ShiftedModel::new(net.clone()).unwrap();
            let x0 = StateVector::from_equity(&v0[..n], &net.threshold);
            for s in model.simulate(&x0, 50).states {
                prop_assert!(s.to_equity(&net.threshold).iter().all(|&v| v >= -1e-12));
            }
        }

        #[test]
        fn one_norm_contracts_within_orthant(
            net in network_strategy(5),
            a in proptest::collection::vec(-3.0f64..3.0, 5),
            delta in proptest::collection::vec(-0.05f64..0.05, 5),
        ) {
            let model = ShiftedModel::new(net).unwrap();
            let n = model.n();
            let mut x = a[..n].to_vec();
            let mut y: Vec<f64> = x.iter().zip(&delta).map(|(p, q)| p + q).collect();
            let mut prev = crate::numerics::matrix::norm1(&sub_vec(&x, &y));
            for _ in 0..30 {
                if orthant_of(&x) != orthant_of(&y) {
                    break;
                }
                x = model.step(&x).0;
                y = model.step(&y).0;
                let d = crate::numerics::matrix::norm1(&sub_vec(&x, &y));
                prop_assert!(d <= prev + 1e-12);
                prev = d;
            }
        }

        #[test]
        fn orthant_round_trip(n in 1usize..=8, k in 0u64..256, mags in proptest::collection::vec(0.01f64..5.0, 8)) {
            let k = k % (1u64 << n);
            let o = OrthantIndex::new(k, n).unwrap();
            let x: Vec<f64> = o.signs().iter().zip(&mags).map(|(s, m)| s * m).collect();
            prop_assert_eq!(orthant_of(&x), o);
        }
    }
}
