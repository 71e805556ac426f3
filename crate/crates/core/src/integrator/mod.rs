//! Implicit midpoint time stepping with Newton's method, discrete power
//! audit, transient driver and step-halving studies.

mod audit;
mod convergence;
mod midpoint;
mod newton;
mod transient;

pub use audit::power_audit;
pub use convergence::{
    balance_defect_fd, convergence_study, ConvergenceConfig, ConvergenceTable, EocRow, DEFAULT_REFERENCE_LEVELS,
};
pub use midpoint::{midpoint_step, MidpointStepper, StepRecord};
pub use newton::{newton_solve, newton_solve_dense, DenseNewton, NewtonConfig, NewtonStats, NewtonSystem};
pub use transient::{
    run_transient, run_transient_from, Probe, ProbeSpec, ProbeTarget, TimeGrid, TransientAbort,
    TransientResult, INITIAL_CONSISTENCY_TOL,
};
