//! Method-of-steps integration and trajectory-level system checks.

mod analysis;
mod integrate;
mod system;
mod track;

pub use analysis::{
    check_continuity_bound, check_rfc, check_system_invariants, estimate_lipschitz_moduli,
    CheckVerdict, ContinuityReport, LipschitzModuli, Region, RfcReport, RfcVerdict, RfcWitness,
    SystemInvariantReport, CONTINUITY_RATIO_TOLERANCE, MODULI_INFLATION,
};
pub(crate) use integrate::SlidingMax;
pub use integrate::{integrate, IntegrateOptions, Trajectory, TrajectoryStatus};
pub use system::{Dynamics, FiniteOutput, FunctionalMap, OutputMap, PointMap, RfdeSystem};

#[cfg(test)]
mod tests;
