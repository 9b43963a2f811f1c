//! Sampled check of the small-gain estimate.
//!
//! Hypothesis, for every grid time `t_j`:
//! `y(t_j) ≤ min_{i ≤ j} max{σ(M, t_j − t_i), a(max_{i ≤ k ≤ j} y_k), u_j}`.
//! Conclusion shape: `y(t) ≤ max{E(t − t0), sup_{τ ≤ t} u(τ)}` with `E` a
//! nonincreasing envelope fitted to the excess of `y` over the running sup
//! of `u`.

use serde::{Deserialize, Serialize};

use super::{ComparisonFn, KlFn};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallGainReport {
    pub hypothesis_holds: bool,
    /// Smallest `rhs − y` of the hypothesis (negative on violation).
    pub hypothesis_slack: f64,
    pub hypothesis_witness: Option<usize>,
    /// `None` when the hypothesis fails.
    pub conclusion_holds: Option<bool>,
    pub conclusion_slack: f64,
    /// Fitted envelope `E` on the series' time grid.
    pub envelope: Vec<f64>,
    /// `E` strictly decreases over the window (or is identically zero).
    pub fading: bool,
}

pub fn check_small_gain<T: Real>(
    times: &[T],
    y: &[T],
    u: &[T],
    sigma: &KlFn<T>,
    a: &ComparisonFn<T>,
    m: T,
) -> Result<SmallGainReport> {
    let n = times.len();
    if n == 0 {
        return Err(Error::Empty("small-gain series"));
    }
    if y.len() != n || u.len() != n {
        return Err(Error::Dimension {
            what: "small-gain series",
            expected: n,
            got: if y.len() != n { y.len() } else { u.len() },
        });
    }
    let tol = |v: T| T::lit(1e-9) * (T::one() + v.abs());

    let mut slack = T::infinity();
    let mut witness = None;
    for j in 0..n {
        let mut run = T::neg_infinity();
        let mut best = T::infinity();
        for i in (0..=j).rev() {
            run = run.max(y[i]);
            let rhs = sigma
                .eval(m, times[j] - times[i])
                .max(a.eval(run))
                .max(u[j]);
            best = best.min(rhs);
        }
        let s = best - y[j];
        if s < slack {
            slack = s;
            if s < -tol(y[j]) {
                witness = Some(j);
            }
        }
    }
    if let Some(j) = witness {
        return Ok(SmallGainReport {
            hypothesis_holds: false,
            hypothesis_slack: slack.as_f64(),
            hypothesis_witness: Some(j),
            conclusion_holds: None,
            conclusion_slack: f64::NAN,
            envelope: Vec::new(),
            fading: false,
        });
    }

    let mut sup_u = Vec::with_capacity(n);
    let mut run = T::neg_infinity();
    for &v in u {
        run = run.max(v);
        sup_u.push(run);
    }
    let mut envelope = vec![T::zero(); n];
    let mut tail = T::zero();
    for j in (0..n).rev() {
        tail = tail.max(y[j] - sup_u[j]);
        envelope[j] = tail;
    }
    let mut c_slack = T::infinity();
    for j in 0..n {
        c_slack = c_slack.min(envelope[j].max(sup_u[j]) - y[j]);
    }
    let fading = envelope[0] == T::zero() || envelope[n - 1] < envelope[0];
    Ok(SmallGainReport {
        hypothesis_holds: true,
        hypothesis_slack: slack.as_f64(),
        hypothesis_witness: None,
        conclusion_holds: Some(c_slack >= -tol(T::zero())),
        conclusion_slack: c_slack.as_f64(),
        envelope: envelope.into_iter().map(|e| e.as_f64()).collect(),
        fading,
    })
}
