//! Per-orthant equilibria `x̄^[k] = (I − C)⁻¹(r − Bφ^[k])` and the sign
//! conditions for existence and uniqueness of healthy/failed equilibria.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::{indicator, ModelError, OrthantIndex, ShiftedModel, StateVector};
use crate::numerics::{DenseMatrix, LuFactors, NumericsError};

/// Largest `n` for which all `2ⁿ` orthants are enumerated.
pub const MAX_ENUMERATION_DIM: usize = 24;
/// Entries closer than this to zero make an equilibrium fragile.
pub const INTERIOR_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EquilibriumError {
    #[error("n = {n} exceeds the enumeration limit {max}")]
    DimensionTooLarge { n: usize, max: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub orthant: OrthantIndex,
    pub x_bar: StateVector,
    /// `x̄ + V̲`.
    pub v_bar: Vec<f64>,
    /// The sign pattern of `x̄` is `φ^[k]`.
    pub consistent: bool,
    /// No entry within [`INTERIOR_MARGIN`] of zero.
    pub interior: bool,
}

fn identity_minus_c(model: &ShiftedModel) -> Result<LuFactors, NumericsError> {
    let n = model.n();
    LuFactors::factorize(&DenseMatrix::identity(n).sub(model.c()))
}

fn record(model: &ShiftedModel, lu: &LuFactors, k: OrthantIndex) -> EquilibriumRecord {
    let x_bar = lu.solve(&model.orthant_input(&k));
    let consistent = indicator(&x_bar) == k.characteristic();
    let interior = x_bar.iter().all(|v| v.abs() > INTERIOR_MARGIN);
    let v_bar = x_bar
        .iter()
        .zip(&model.network().threshold)
        .map(|(x, t)| x + t)
        .collect();
    EquilibriumRecord {
        orthant: k,
        x_bar: StateVector(x_bar),
        v_bar,
        consistent,
        interior,
    }
}

pub fn candidate_equilibrium(model: &ShiftedModel, k: OrthantIndex) -> Result<EquilibriumRecord, EquilibriumError> {
    if k.n() != model.n() {
        return Err(ModelError::Dimension {
            what: "orthant",
            expected: model.n(),
            found: k.n(),
        }
        .into());
    }
    let lu = identity_minus_c(model)?;
    Ok(record(model, &lu, k))
}

/// All `2ⁿ` candidates in orthant order, consistent or not.
pub fn enumerate_equilibria(model: &ShiftedModel) -> Result<Vec<EquilibriumRecord>, EquilibriumError> {
    let n = model.n();
    if n > MAX_ENUMERATION_DIM {
        return Err(EquilibriumError::DimensionTooLarge {
            n,
            max: MAX_ENUMERATION_DIM,
        });
    }
    let lu = identity_minus_c(model)?;
    Ok(OrthantIndex::all(n).map(|k| record(model, &lu, k)).collect())
}

pub fn consistent_equilibria(model: &ShiftedModel) -> Result<Vec<EquilibriumRecord>, EquilibriumError> {
    Ok(enumerate_equilibria(model)?
        .into_iter()
        .filter(|e| e.consistent)
        .collect())
}

/// Sign conditions on `(I − C)⁻¹r` and `(I − C)⁻¹(r − β)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceReport {
    /// `(I − C)⁻¹r ≥ 0`: a healthy equilibrium exists.
    pub healthy_exists: bool,
    /// `(I − C)⁻¹(r − β) ≥ 0`: the healthy equilibrium is the only one.
    pub healthy_unique: bool,
    /// `(I − C)⁻¹(r − β) < 0`: an all-failed equilibrium exists.
    pub failed_exists: bool,
    /// `(I − C)⁻¹r < 0`: the all-failed equilibrium is the only one.
    pub failed_unique: bool,
    pub healthy_witness: Vec<f64>,
    pub failed_witness: Vec<f64>,
}

pub fn existence_conditions(model: &ShiftedModel) -> Result<ExistenceReport, EquilibriumError> {
    let lu = identity_minus_c(model)?;
    let healthy_witness = lu.solve(model.r());
    let failed_witness = lu.solve(&model.orthant_input(&OrthantIndex::all_failed(model.n())));
    Ok(ExistenceReport {
        healthy_exists: healthy_witness.iter().all(|&v| v >= 0.0),
        healthy_unique: failed_witness.iter().all(|&v| v >= 0.0),
        failed_exists: failed_witness.iter().all(|&v| v < 0.0),
        failed_unique: healthy_witness.iter().all(|&v| v < 0.0),
        healthy_witness,
        failed_witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::netmodel::tests::network_strategy;
    use crate::netmodel::FinancialNetwork;
    use crate::numerics::matrix::max_abs_diff;
    use proptest::prelude::*;

    fn scalar(r: f64, beta: f64) -> ShiftedModel {
        let net = FinancialNetwork::new(
            DenseMatrix::zeros(1, 1),
            DenseMatrix::identity(1),
            vec![r],
            vec![beta],
            vec![0.0],
        )
        .unwrap();
        ShiftedModel::new(net).unwrap()
    }

    #[test]
    fn ring_extreme_orthants() {
        let m = ShiftedModel::new(fixtures::ring4()).unwrap();
        let e0 = candidate_equilibrium(&m, OrthantIndex::healthy(4)).unwrap();
        assert!(e0.consistent && e0.interior);
        assert!(max_abs_diff(&e0.x_bar, &[5.0; 4]) < 1e-12);
        let e15 = candidate_equilibrium(&m, OrthantIndex::all_failed(4)).unwrap();
        assert!(e15.consistent);
        assert!(max_abs_diff(&e15.x_bar, &[-5.0; 4]) < 1e-12);
    }

    #[test]
    fn pair_healthy_equity() {
        let m = ShiftedModel::new(fixtures::mutual_pair()).unwrap();
        let e = candidate_equilibrium(&m, OrthantIndex::healthy(2)).unwrap();
        assert!(max_abs_diff(&e.v_bar, &[6.0, 6.0]) < 1e-12);
    }

    #[test]
    fn ring_has_eight() {
        let m = ShiftedModel::new(fixtures::ring4()).unwrap();
        let found = consistent_equilibria(&m).unwrap();
        assert_eq!(found.len(), 8);
        for want in fixtures::ring_equilibria() {
            assert!(found.iter().any(|e| max_abs_diff(&e.x_bar, &want) < 1e-3), "{want:?}");
        }
    }

    #[test]
    fn pair_one_per_quadrant() {
        let m = ShiftedModel::new(fixtures::mutual_pair()).unwrap();
        let all = enumerate_equilibria(&m).unwrap();
        assert_eq!(all.len(), 4);
        for (e, want) in all.iter().zip(fixtures::PAIR_EQUITY_EQUILIBRIA) {
            assert!(e.consistent);
            assert!(max_abs_diff(&e.v_bar, &want) < 1e-12);
        }
    }

    #[test]
    fn scalar_inconsistent_candidate() {
        let m = scalar(1.0, 0.5);
        let all = enumerate_equilibria(&m).unwrap();
        assert!(all[0].consistent);
        assert!((all[0].x_bar[0] - 1.0).abs() < 1e-15);
        assert!(!all[1].consistent);
        assert!((all[1].x_bar[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dimension_guard() {
        let n = MAX_ENUMERATION_DIM + 1;
        let net = FinancialNetwork::new(
            DenseMatrix::zeros(n, n),
            DenseMatrix::identity(n),
            vec![1.0; n],
            vec![1.0; n],
            vec![0.0; n],
        )
        .unwrap();
        let m = ShiftedModel::new(net).unwrap();
        assert!(matches!(
            enumerate_equilibria(&m),
            Err(EquilibriumError::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn existence_ring() {
        let m = ShiftedModel::new(fixtures::ring4()).unwrap();
        let rep = existence_conditions(&m).unwrap();
        assert!(rep.healthy_exists && rep.failed_exists);
        assert!(!rep.healthy_unique && !rep.failed_unique);
    }

    #[test]
    fn existence_scalar_cases() {
        // r = β/2: both extreme equilibria exist.
        let rep = existence_conditions(&scalar(0.5, 1.0)).unwrap();
        assert!(rep.healthy_exists && rep.failed_exists);
        // r = 2β: only the healthy one.
        let rep = existence_conditions(&scalar(2.0, 1.0)).unwrap();
        assert!(rep.healthy_exists && rep.healthy_unique && !rep.failed_exists);
        let all = consistent_equilibria(&scalar(2.0, 1.0)).unwrap();
        assert_eq!(all.len(), 1);
        assert!(all[0].orthant.is_healthy());
    }

    #[test]
    fn local_stability_ring() {
        let m = ShiftedModel::new(fixtures::ring4()).unwrap();
        for e in consistent_equilibria(&m).unwrap() {
            let x0: Vec<f64> = e
                .x_bar
                .iter()
                .enumerate()
                .map(|(i, v)| v + if i % 2 == 0 { 1e-3 } else { -1e-3 })
                .collect();
            let traj = m.simulate(&x0, 400);
            assert!(max_abs_diff(traj.last(), &e.x_bar) < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn consistent_records_are_fixed_points(net in network_strategy(6)) {
            let m = ShiftedModel::new(net).unwrap();
            let all = enumerate_equilibria(&m).unwrap();
            let mut seen = std::collections::HashSet::new();
            for e in all.iter().filter(|e| e.consistent) {
                prop_assert!(max_abs_diff(&m.step(&e.x_bar), &e.x_bar) <= 1e-9);
                prop_assert!(seen.insert(e.orthant.k()));
            }
            let rep = existence_conditions(&m).unwrap();
            prop_assert!(!rep.healthy_unique || rep.healthy_exists);
            prop_assert!(!rep.failed_unique || rep.failed_exists);
            let consistent: Vec<_> = all.iter().filter(|e| e.consistent).collect();
            if rep.healthy_unique {
                prop_assert_eq!(consistent.len(), 1);
                prop_assert!(consistent[0].orthant.is_healthy());
            }
            if rep.failed_unique {
                prop_assert_eq!(consistent.len(), 1);
                prop_assert!(consistent[0].orthant.is_all_failed());
            }
        }
    }
}
