//! Analysis toolkit for the discrete-time financial network model
//! `V(t+1) = C V(t) + D p − B φ(V(t) − V̲)`.
//!
//! The crate enumerates equilibria per orthant, builds regions of attraction
//! and finitely determined invariant polyhedra, handles interval-uncertain
//! cross-holdings, detects periodic orbits and computes minimal cash
//! injections that steer the system into the maximal healthy invariant
//! region.

pub mod cli;
pub mod cycles;
pub mod equilibria;
pub mod fixtures;
pub mod intervene;
pub mod invariance;
pub mod netmodel;
pub mod numerics;
pub mod robust;

pub use netmodel::{FinancialNetwork, OrthantIndex, ShiftedModel, StateVector, Trajectory};
pub use numerics::DenseMatrix;
