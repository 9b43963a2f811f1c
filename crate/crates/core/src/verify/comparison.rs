//! Trajectory form of the comparison lemma.

use serde::{Deserialize, Serialize};

use crate::compfn::{kl_from_rate, ComparisonFn, KlFn};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest grid spacing for which finite-difference derivatives are trusted.
pub const MAX_COMPARISON_STEP: f64 = 1e-3;

/// Tolerance `1e-6·(1 + |y|)` of both halves of the check.
pub const COMPARISON_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonVerdict {
    Pass,
    HypothesisFails,
    ConclusionFails,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub verdict: ComparisonVerdict,
    /// Smallest `−ρ(y) − ẏ` over grid points with `y ≥ u`.
    pub hypothesis_slack: Option<f64>,
    pub hypothesis_witness: Option<f64>,
    /// Smallest `bound − y`; absent when the hypothesis fails.
    pub conclusion_slack: Option<f64>,
    pub conclusion_witness: Option<f64>,
}

/// Central differences inside, second-order one-sided at the ends.
fn derivative<T: Real>(times: &[T], y: &[T]) -> Vec<T> {
    let n = times.len();
    if n == 1 {
        return vec![T::zero()];
    }
    if n == 2 {
        let d = (y[1] - y[0]) / (times[1] - times[0]);
        return vec![d, d];
    }
    let mut out = Vec::with_capacity(n);
    let one_sided = |a: usize, b: usize, c: usize| {
        // quadratic through (t_a, t_b, t_c), differentiated at t_a
        let (ta, tb, tc) = (times[a], times[b], times[c]);
        let (ya, yb, yc) = (y[a], y[b], y[c]);
        ya * ((ta - tb) + (ta - tc)) / ((ta - tb) * (ta - tc))
            + yb * (ta - tc) / ((tb - ta) * (tb - tc))
            + yc * (ta - tb) / ((tc - ta) * (tc - tb))
    };
    out.push(one_sided(0, 1, 2));
    for i in 1..n - 1 {
        out.push(one_sided(i, i - 1, i + 1));
    }
    out.push(one_sided(n - 1, n - 2, n - 3));
    out
}

/// Checks the implication `y(t) ≥ u(t) ⇒ ẏ(t) ≤ −ρ(y(t))` on the grid
/// (points listed in `exceptions` are skipped), then the estimate
/// `y(t) ≤ max{σ(y(t₀), t − t₀), sup_{s ≤ t} σ(u(s), t − s)}` with
/// `σ = kl_from_rate(ρ)`.
///
/// The guard `y ≥ u` is inclusive, so equality with `ẏ = 0` and `ρ > 0`
/// fails the hypothesis.
pub fn check_comparison_implication<T: Real>(
    times: &[T],
    y: &[T],
    u: &[T],
    rho: &ComparisonFn<T>,
    exceptions: &[usize],
) -> Result<ComparisonReport> {
    let n = times.len();
    if n == 0 {
        return Err(Error::Empty("comparison series"));
    }
    if y.len() != n || u.len() != n {
        return Err(Error::Dimension {
            what: "comparison series",
            expected: n,
            got: if y.len() != n { y.len() } else { u.len() },
        });
    }
    if let Some(w) = times
        .windows(2)
        .find(|w| !(w[1] > w[0]) || (w[1] - w[0]).as_f64() > MAX_COMPARISON_STEP * (1.0 + 1e-9))
    {
        return Err(Error::Malformed {
            what: "comparison grid",
            reason: format!(
                "times must increase with spacing at most {MAX_COMPARISON_STEP}, got {} -> {}",
                w[0], w[1]
            ),
        });
    }
    let tol = |v: T| T::lit(COMPARISON_TOLERANCE) * (T::one() + v.abs());
    let dy = derivative(times, y);
    let mut report = ComparisonReport {
        verdict: ComparisonVerdict::Pass,
        hypothesis_slack: None,
        hypothesis_witness: None,
        conclusion_slack: None,
        conclusion_witness: None,
    };
    let mut worst: Option<(T, usize)> = None;
    for i in 0..n {
        if exceptions.contains(&i) || !(y[i] >= u[i]) {
            continue;
        }
        let slack = -rho.eval(y[i]) - dy[i];
        let scaled = slack / (T::one() + y[i].abs());
        if worst.is_none_or(|(w, _)| scaled < w) {
            worst = Some((scaled, i));
        }
        if slack < -tol(y[i]) && report.hypothesis_witness.is_none() {
            report.hypothesis_witness = Some(times[i].as_f64());
        }
    }
    if let Some((_, i)) = worst {
        report.hypothesis_slack = Some((-rho.eval(y[i]) - dy[i]).as_f64());
    }
    if report.hypothesis_witness.is_some() {
        report.verdict = ComparisonVerdict::HypothesisFails;
        return Ok(report);
    }

    let sigma = envelope_for(rho, y, u, times[n - 1] - times[0])?;
    let mut stack: Vec<(T, T)> = Vec::new();
    let mut slack_min: Option<(T, usize)> = None;
    for i in 0..n {
        let t = times[i];
        if u[i] > T::zero() {
            while stack.last().is_some_and(|(_, w)| *w <= u[i]) {
                stack.pop();
            }
            stack.push((t, u[i]));
        }
        let sup = stack
            .iter()
            .map(|&(s, w)| sigma.eval(w, t - s))
            .fold(T::zero(), T::max);
        let bound = sigma.eval(y[0].max(T::zero()), t - times[0]).max(sup);
        let slack = bound - y[i];
        if slack_min.is_none_or(|(m, _)| slack < m) {
            slack_min = Some((slack, i));
        }
        if slack < -tol(y[i]) && report.conclusion_witness.is_none() {
            report.conclusion_witness = Some(t.as_f64());
        }
    }
    report.conclusion_slack = slack_min.map(|(s, _)| s.as_f64());
    if report.conclusion_witness.is_some() {
        report.verdict = ComparisonVerdict::ConclusionFails;
    }
    Ok(report)
}

/// `kl_from_rate(ρ)` on a grid spanning the data, with its pinch far below.
fn envelope_for<T: Real>(rho: &ComparisonFn<T>, y: &[T], u: &[T], span: T) -> Result<KlFn<T>> {
    let top = y
        .iter()
        .chain(u)
        .fold(T::zero(), |m, v| m.max(v.abs()))
        .max(T::lit(1e-6));
    let lo = top * T::lit(1e-9);
    kl_from_rate(rho, &[lo, top], span.max(T::lit(1e-3)) + T::one())
}
