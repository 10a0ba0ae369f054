//! Continuous-time machinery: jump chains, reversible measures, electrical
//! networks, hitting times and simulation.

mod hitting;
mod jump;
pub mod linalg;
mod resistance;
mod reversible;
mod simulate;

pub use hitting::{hitting_times, hitting_times_with, HitMode, HittingTimeReport};
pub use jump::{jump_chain, JumpChain};
pub use resistance::{effective_resistance, resistance_between, ResistanceSolution};
pub use reversible::{
    detailed_balance_residual, reversible_measure, reversible_measure_with, ReversibleStructure,
    REVERSIBILITY_TOLERANCE,
};
pub use simulate::{
    mc_speed, replica_rng, simulate, simulate_replica, write_speed_csv, write_traces_csv, McOptions, Provenance,
    SpeedReport, Trace,
};
