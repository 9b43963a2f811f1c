//! Upper Dini derivatives along the extension operator.

use serde::{Deserialize, Serialize};

use super::{LyapunovFunctional, RazumikhinFunction};
use crate::error::{Error, Result};
use crate::history::{random_vector, HistorySegment};
use crate::rng;
use crate::scalar::Real;

pub const DEFAULT_LADDER: [f64; 3] = [1e-2, 1e-3, 1e-4];
pub const SPHERE_PROBES: usize = 8;

/// Step ladder and probe count of the numeric estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiniOptions {
    /// Decreasing steps `h`.
    pub ladder: Vec<f64>,
    /// Directions `y` on the sphere of radius `h` tried at the two smallest
    /// steps.
    pub probes: usize,
}

impl Default for DiniOptions {
    fn default() -> Self {
        Self {
            ladder: DEFAULT_LADDER.to_vec(),
            probes: SPHERE_PROBES,
        }
    }
}

impl DiniOptions {
    fn validate(&self) -> Result<()> {
        let ok = !self.ladder.is_empty()
            && self.ladder.iter().all(|h| *h > 0.0 && h.is_finite())
            && self.ladder.windows(2).all(|w| w[1] < w[0]);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "Dini ladder must be positive and strictly decreasing, got {:?}",
                self.ladder
            )))
        }
    }
}

/// Numeric Dini estimate with its ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct DiniEstimate<T> {
    pub value: T,
    /// Difference quotients with `y = 0`, one per ladder step.
    pub quotients: Vec<T>,
    /// `max(0, max_y q(h, y) − q(h, 0))`, extrapolated to `h = 0` when the
    /// excess shrinks with the step.
    pub probe_excess: T,
    /// Whether the last two quotients were combined by Richardson
    /// extrapolation.
    pub extrapolated: bool,
}

/// Combines the y = 0 ladder into one estimate.
///
/// Quotients of a smooth function behave like `q₀ + c·h`. When the last two
/// increments shrink in proportion to the step, the first-order term is
/// eliminated; otherwise (kinks, noise) the quotient at the smallest step is
/// returned unchanged.
fn combine<T: Real>(ladder: &[f64], q: &[T], scale: T) -> (T, bool) {
    let m = q.len() - 1;
    if m < 2 {
        return (q[m], false);
    }
    let noise = T::lit(100.0) * T::epsilon() * (T::one() + scale.abs()) / T::lit(ladder[m]);
    let d1 = q[m - 1] - q[m - 2];
    let d2 = q[m] - q[m - 1];
    if d2.abs() <= noise {
        return (q[m], false);
    }
    let ratio = d2 / d1;
    if d1 != T::zero() && ratio >= T::lit(0.02) && ratio <= T::lit(0.5) {
        let k = T::lit(ladder[m - 1] / ladder[m]);
        ((k * q[m] - q[m - 1]) / (k - T::one()), true)
    } else {
        (q[m], false)
    }
}

fn finite<T: Real>(x: T, what: &str, t: T) -> Result<T> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Evaluation {
            what: what.to_string(),
            at: t.as_f64(),
        })
    }
}

/// `V⁰(t, x; v)`: the analytic derivative when one is attached, otherwise
/// [`dini_functional_numeric`].
pub fn dini_functional<T: Real>(
    v: &LyapunovFunctional<T>,
    t: T,
    x: &HistorySegment<T>,
    dir: &[T],
    opts: &DiniOptions,
) -> Result<T> {
    check_args(t, x.dim(), dir)?;
    match v.analytic_dini(t, x, dir) {
        Some(d) => finite(d, v.name(), t),
        None => dini_functional_numeric(v, t, x, dir, opts).map(|e| e.value),
    }
}

fn check_args<T: Real>(t: T, dim: usize, dir: &[T]) -> Result<()> {
    if !(t >= T::zero()) {
        return Err(Error::Domain {
            what: "t",
            value: t.as_f64(),
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if dir.len() != dim {
        return Err(Error::Dimension {
            what: "Dini direction",
            expected: dim,
            got: dir.len(),
        });
    }
    Ok(())
}

/// Difference quotients `[V(t+h, E_h(x; v) + h·y) − V(t, x)] / h` over the
/// step ladder with `y = 0`, plus constant perturbations `y` of norm `h` at
/// the two smallest steps.
///
/// The perturbation directions are fixed per dimension, so the estimate is
/// deterministic.
pub fn dini_functional_numeric<T: Real>(
    v: &LyapunovFunctional<T>,
    t: T,
    x: &HistorySegment<T>,
    dir: &[T],
    opts: &DiniOptions,
) -> Result<DiniEstimate<T>> {
    check_args(t, x.dim(), dir)?;
    opts.validate()?;
    let base = finite(v.eval(t, x), v.name(), t)?;
    let mut quotients = Vec::with_capacity(opts.ladder.len());
    for &h in &opts.ladder {
        let ht = T::lit(h);
        let ext = x.extend(dir, ht)?;
        let vh = finite(v.eval(t + ht, &ext), v.name(), t + ht)?;
        quotients.push((vh - base) / ht);
    }
    let m = opts.ladder.len() - 1;
    let mut g = rng::stream(0x5eed_d1a1, x.dim() as u64);
    let mut excess = T::zero();
    for _ in 0..opts.probes {
        let dirn: Vec<T> = random_vector(x.dim(), 1.0, &mut g)
            .into_iter()
            .map(T::lit)
            .collect();
        let probe = |k: usize| -> Result<T> {
            let ht = T::lit(opts.ladder[k]);
            let ext = x.extend(dir, ht)?;
            let shifted = ext.map(x.dim(), |_, z| {
                z.iter()
                    .zip(&dirn)
                    .map(|(a, b)| *a + ht * ht * *b)
                    .collect()
            })?;
            let vy = finite(v.eval(t + ht, &shifted), v.name(), t + ht)?;
            Ok((vy - base) / ht - quotients[k])
        };
        let fine = probe(m)?;
        let e = if m == 0 {
            fine
        } else {
            // The excess of a locally Lipschitz V is O(h); extrapolate it to
            // h = 0 when it shrinks with the step, keep it otherwise.
            let coarse = probe(m - 1)?;
            let k = T::lit(opts.ladder[m - 1] / opts.ladder[m]);
            if fine.abs() <= T::lit(0.5) * coarse.abs() {
                (k * fine - coarse) / (k - T::one())
            } else {
                fine
            }
        };
        excess = excess.max(e);
    }
    let (value, extrapolated) = combine(&opts.ladder, &quotients, base);
    Ok(DiniEstimate {
        value: value + excess,
        quotients,
        probe_excess: excess,
        extrapolated,
    })
}

/// `D⁺V(t, x; v)`: the analytic derivative when one is attached, otherwise
/// [`dini_pointwise_numeric`].
pub fn dini_pointwise<T: Real>(
    v: &RazumikhinFunction<T>,
    t: T,
    x: &[T],
    dir: &[T],
    opts: &DiniOptions,
) -> Result<T> {
    check_args(t, x.len(), dir)?;
    match v.analytic_dini(t, x, dir) {
        Some(d) => finite(d, v.name(), t),
        None => dini_pointwise_numeric(v, t, x, dir, opts).map(|e| e.value),
    }
}

/// Ladder of quotients `[V(t+h, x+hv) − V(t, x)] / h`.
pub fn dini_pointwise_numeric<T: Real>(
    v: &RazumikhinFunction<T>,
    t: T,
    x: &[T],
    dir: &[T],
    opts: &DiniOptions,
) -> Result<DiniEstimate<T>> {
    check_args(t, x.len(), dir)?;
    opts.validate()?;
    let base = finite(v.eval(t, x), v.name(), t)?;
    let mut y = vec![T::zero(); x.len()];
    let mut quotients = Vec::with_capacity(opts.ladder.len());
    for &h in &opts.ladder {
        let ht = T::lit(h);
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(dir) {
            *yi = *xi + ht * *di;
        }
        let vh = finite(v.eval(t + ht, &y), v.name(), t + ht)?;
        quotients.push((vh - base) / ht);
    }
    let (value, extrapolated) = combine(&opts.ladder, &quotients, base);
    Ok(DiniEstimate {
        value,
        quotients,
        probe_excess: T::zero(),
        extrapolated,
    })
}
