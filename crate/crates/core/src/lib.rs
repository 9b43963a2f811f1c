//! Simulation and stability certification for uncertain time-varying
//! retarded functional differential equations
//!
//! ```text
//! ẋ(t) = f(t, T_r(t)x, u(t), d(t)),    Y(t) = H(t, T_r(t)x)
//! ```
//!
//! The crate integrates such systems by the method of steps, evaluates
//! Dini derivatives of Lyapunov functionals and Razumikhin functions,
//! searches for counterexamples to decay inequalities by sampling, and
//! checks KL output envelopes along simulated trajectories.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

// `!(x > 0)` is how NaN gets rejected along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod compfn;
pub mod error;
pub mod examples;
pub mod history;
pub mod lyapunov;
pub mod rng;
pub mod scalar;
pub mod signals;
pub mod simulator;
pub mod verify;

pub use compfn::{ClassTag, ComparisonFn, KlFn};
pub use error::{Error, Result};
pub use history::{HistoryAccess, HistorySampler, HistorySegment};
pub use lyapunov::{FalsificationReport, LyapunovFunctional, RazumikhinFunction, Verdict};
pub use scalar::Real;
pub use signals::{DomainBox, PiecewiseSignal, SignalSpec};
pub use simulator::{IntegrateOptions, OutputMap, RfdeSystem, Trajectory, TrajectoryStatus};

/// `f64` history segment.
pub type History = HistorySegment<f64>;
/// `f64` piecewise-constant signal.
pub type Signal = PiecewiseSignal<f64>;
/// `f64` system.
pub type System = RfdeSystem<f64>;
/// `f64` trajectory.
pub type Traj = Trajectory<f64>;
/// `f64` comparison function.
pub type Cmp = ComparisonFn<f64>;
/// `f64` KL function.
pub type Kl = KlFn<f64>;
