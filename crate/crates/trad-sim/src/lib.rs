//! Deterministic discrete-event simulator and protocol library for data
//! dissemination in vehicular ad hoc networks.

pub mod geo;
pub mod baselines;
pub mod ident;
pub mod metrics;
pub mod mobility;
pub mod radio;
pub mod scenario;
pub mod simcore;
pub mod trad;
