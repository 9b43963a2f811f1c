//! Reduction of periodic systems to initial times in `[0, T)`.

use serde::{Deserialize, Serialize};

use crate::compfn::periodic_wrap;
use crate::error::{Error, Result};
use crate::history::HistorySegment;
use crate::scalar::{self, Real};
use crate::signals::PiecewiseSignal;
use crate::simulator::{integrate, IntegrateOptions, RfdeSystem};

/// Relative tolerance `1e-8·(1 + |x|)` of [`check_periodic_reduction`].
pub const PERIODIC_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicReport {
    pub pass: bool,
    /// Number of whole periods removed from the initial time.
    pub shift_periods: i64,
    /// Largest `|x(t) − x̃(t − kT)| / (1 + |x(t)|)`.
    pub worst_defect: f64,
    /// First grid time with a defect above tolerance.
    pub witness_t: Option<f64>,
}

/// Integrates from `(t0, x0)` with `(u, d)` and from `(t0 − kT, x0)` with
/// `(P_{kT}u, P_{kT}d)`, `k = ⌊t0/T⌋`, and compares the states on the grid
/// of the first solution.
#[allow(clippy::too_many_arguments)]
pub fn check_periodic_reduction<T: Real>(
    sys: &RfdeSystem<T>,
    t0: T,
    x0: &HistorySegment<T>,
    u: &PiecewiseSignal<T>,
    d: &PiecewiseSignal<T>,
    horizon: T,
    opts: &IntegrateOptions,
) -> Result<PeriodicReport> {
    let period = sys
        .period()
        .ok_or_else(|| Error::Config(format!("system `{}` declares no period", sys.name())))?;
    let (k, t0_wrapped) = periodic_wrap(t0, period)?;
    let shift = t0 - t0_wrapped;
    let a = integrate(sys, t0, x0, u, d, t0 + horizon, opts)?;
    let b = integrate(
        sys,
        t0_wrapped,
        x0,
        &u.shift(shift),
        &d.shift(shift),
        t0_wrapped + horizon,
        opts,
    )?;
    let mut report = PeriodicReport {
        pass: true,
        shift_periods: k,
        worst_defect: 0.0,
        witness_t: None,
    };
    let end = b.last_time() + shift;
    for (i, &t) in a.times().iter().enumerate() {
        if t > end {
            break;
        }
        let x = a.state(i);
        let y = b.state_at(t - shift);
        let defect = (scalar::distance(x, &y) / (T::one() + scalar::norm(x))).as_f64();
        report.worst_defect = report.worst_defect.max(defect);
        if !(defect <= PERIODIC_TOLERANCE) && report.witness_t.is_none() {
            report.witness_t = Some(t.as_f64());
            report.pass = false;
        }
    }
    if a.completed() != b.completed() {
        report.pass = false;
    }
    Ok(report)
}
