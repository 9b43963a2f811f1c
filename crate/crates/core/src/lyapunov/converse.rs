//! Truncated converse functional `U_q`.

use serde::{Deserialize, Serialize};

use crate::compfn::ComparisonFn;
use crate::error::{Error, Result};
use crate::history::HistorySegment;
use crate::scalar::Real;
use crate::signals::PiecewiseSignal;
use crate::simulator::{integrate, IntegrateOptions, RfdeSystem, TrajectoryStatus};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct UqOptions {
    pub integrate: IntegrateOptions,
}

/// `T̃ = max{0, ½ log(1 + q·ã₂(β(R)·R))}` with `R = max{t, ‖x‖_r}`.
pub fn uq_horizon<T: Real>(
    q: u32,
    a2: &ComparisonFn<T>,
    beta: &ComparisonFn<T>,
    t: T,
    x_norm: T,
) -> T {
    let big = t.max(x_norm);
    let arg = T::one() + T::lit(q as f64) * a2.eval(beta.eval(big) * big);
    (T::lit(0.5) * arg.ln()).max(T::zero())
}

/// `U_q(t, x) = sup_{τ ≥ t, d} max{0, ã₁(‖H(τ)‖) − 1/q}·e^{τ−t}`, with the
/// supremum over `d` restricted to `ensemble` and over `τ` to the
/// integration grid on `[t, t + T̃]`.
///
/// Ensemble members are read relative to the start time: member `e` drives
/// the solution with `d(τ) = e(τ − t)`. The `τ = t` term is evaluated
/// directly, so the result is never below `max{0, ã₁(‖H(t, x)‖) − 1/q}`.
/// The value is a lower bound on the functional over all disturbances.
#[allow(clippy::too_many_arguments)]
pub fn converse_functional_uq<T: Real>(
    sys: &RfdeSystem<T>,
    q: u32,
    a1: &ComparisonFn<T>,
    a2: &ComparisonFn<T>,
    beta: &ComparisonFn<T>,
    ensemble: &[PiecewiseSignal<T>],
    t: T,
    x: &HistorySegment<T>,
    opts: &UqOptions,
) -> Result<T> {
    if q == 0 {
        return Err(Error::Domain {
            what: "q",
            value: 0.0,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    if ensemble.is_empty() {
        return Err(Error::Empty("disturbance ensemble"));
    }
    let inv_q = T::one() / T::lit(q as f64);
    let excess = |norm: T| (a1.eval(norm) - inv_q).max(T::zero());
    let mut best = excess(sys.output_norm(t, x));
    let horizon = uq_horizon(q, a2, beta, t, x.sup_norm());
    if horizon <= T::zero() {
        return Ok(best);
    }
    let u = PiecewiseSignal::nominal(sys.u_box().clone());
    for e in ensemble {
        let d = e.shift(-t);
        let tr = integrate(sys, t, x, &u, &d, t + horizon, &opts.integrate)?;
        match tr.status() {
            TrajectoryStatus::Completed => {}
            TrajectoryStatus::BlewUp { t } => return Err(Error::BlowUp { t }),
            TrajectoryStatus::StepFailure { t } => return Err(Error::StepFailure { t }),
        }
        for (tau, norm) in tr.times().iter().zip(tr.output_norms()) {
            best = best.max(excess(*norm) * (*tau - t).exp());
        }
    }
    Ok(best)
}
