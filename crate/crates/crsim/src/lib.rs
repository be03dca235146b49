//! Pulse-level simulator and calibration toolkit for the two-transmon
//! cross-resonance (CR) gate.
//!
//! The crate predicts CNOT-equivalent gate durations, the compensating
//! single-qubit rotations and the intrinsic infidelity of the gate, and
//! decomposes the infidelity into a physical error budget (leakage channels
//! versus imperfect target-qubit unitaries). Two engines are provided: a
//! fast semi-analytical one built on the driven control-qubit eigenproblem
//! ([`semianalytic`]) and a full Magnus-expansion propagator for the 7x5
//! level system ([`propagator`]).

pub mod calibration;
pub mod echo;
pub mod error;
pub mod errorbudget;
pub mod linalg;
pub mod model;
pub mod propagator;
pub mod semianalytic;
pub mod sweep;
pub mod units;

pub use calibration::{GateReport, GateType, ShapeSpec};
pub use error::{Error, Result};
pub use errorbudget::BudgetReport;
pub use model::{Config, DecoherenceParams, DeviceParams, DriveFrame, Pulse};
pub use propagator::{EvolutionResult, Propagator};
pub use sweep::{SweepSpec, SweepTable};
