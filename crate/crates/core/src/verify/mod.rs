//! Trajectory-level checks: KL envelopes, the comparison lemma, periodic
//! reduction, and closing the input channel.

mod comparison;
mod envelope;
mod fit;
mod iosify;
mod periodic;


pub use comparison::{
    check_comparison_implication, ComparisonReport, ComparisonVerdict, COMPARISON_TOLERANCE,
    MAX_COMPARISON_STEP,
};
pub use envelope::{
    max_state_norm, verify_ios_envelope, verify_rgaos_envelope, verify_v_decay_estimate,
    EnvelopeCheck, EnvelopeWitness, OutputNorm, TrajectorySlack, ENVELOPE_TOLERANCE,
};
pub use fit::{fit_kl_envelope, FIT_BINS, FIT_INFLATION, FIT_TIME_POINTS};
pub use iosify::{iosify_system, IosifyMode};
pub use periodic::{check_periodic_reduction, PeriodicReport, PERIODIC_TOLERANCE};
