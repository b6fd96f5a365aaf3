//! Exact minimum-uncertainty spin squeezing curves, the dynamics that
//! generate squeezed states, and entanglement-depth certification from
//! collective-spin measurements.

pub mod certify;
pub mod curves;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod par;
pub mod spin;
pub mod tolerances;
pub mod tridiag;
pub mod variational;

pub use curves::{
    analytic_bound, compute_curve, ground_state_of, lower_envelope_eval, CurveGrid, CurvePoint,
    CurveTable,
};
pub use error::{Error, Result};
pub use par::Execution;
pub use spin::{
    build_operators, check_heisenberg, moments, squeezing_parameter, Spin, SpinMoments, StateVector,
};
