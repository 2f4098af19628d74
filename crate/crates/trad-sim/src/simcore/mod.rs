//! Deterministic discrete-event machinery: integer-microsecond clock,
//! cancellable time-ordered event queue, and labeled random streams.

mod queue;
mod rng;
mod time;

pub use queue::{EventHandle, EventQueue, ScheduleError};
pub use rng::{derive_rng, RngStream};
pub use time::SimTime;
