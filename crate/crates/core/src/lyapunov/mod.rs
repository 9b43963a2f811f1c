//! Lyapunov functionals, Razumikhin functions and sampled falsification of
//! their decay inequalities.

mod converse;
mod dini;
mod falsify;
mod regularity;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{random_vector, HistorySampler, HistorySegment};
use crate::rng;
use crate::scalar::Real;

pub use converse::{converse_functional_uq, uq_horizon, UqOptions};
pub use dini::{
    dini_functional, dini_functional_numeric, dini_pointwise, dini_pointwise_numeric, DiniEstimate,
    DiniOptions, DEFAULT_LADDER, SPHERE_PROBES,
};
pub use falsify::{
    check_dissipation, check_lyapunov_decay, check_lyapunov_ios, check_razumikhin,
    check_razumikhin_with, decay_bound, DecayBound, InputGuard,
};
pub use regularity::{check_almost_lipschitz, AlmostLipschitzReport};

pub type FunctionalFn<T> = Arc<dyn Fn(T, &HistorySegment<T>) -> T + Send + Sync>;
pub type FunctionalDiniFn<T> = Arc<dyn Fn(T, &HistorySegment<T>, &[T]) -> T + Send + Sync>;
pub type PointFn<T> = Arc<dyn Fn(T, &[T]) -> T + Send + Sync>;
pub type PointDiniFn<T> = Arc<dyn Fn(T, &[T], &[T]) -> T + Send + Sync>;

/// `V(t, x)` on `R⁺ × C⁰([-r, 0]; Rⁿ)`, optionally with a hand-coded upper
/// Dini derivative `V⁰(t, x; v)`.
#[derive(Clone)]
pub struct LyapunovFunctional<T: Real> {
    name: String,
    params: BTreeMap<String, f64>,
    eval: FunctionalFn<T>,
    dini: Option<FunctionalDiniFn<T>>,
    zero_at_zero: bool,
}

impl<T: Real> fmt::Debug for LyapunovFunctional<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LyapunovFunctional")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("analytic_dini", &self.dini.is_some())
            .finish()
    }
}

impl<T: Real> LyapunovFunctional<T> {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(T, &HistorySegment<T>) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            params: BTreeMap::new(),
            eval: Arc::new(eval),
            dini: None,
            zero_at_zero: false,
        }
    }

    pub fn with_analytic_dini(
        mut self,
        dini: impl Fn(T, &HistorySegment<T>, &[T]) -> T + Send + Sync + 'static,
    ) -> Self {
        self.dini = Some(Arc::new(dini));
        self
    }

    pub fn with_param(mut self, key: impl Into<String>, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    /// Declares `V(t, 0) = 0`, which [`validate`](Self::validate) then checks.
    pub fn zero_at_zero(mut self) -> Self {
        self.zero_at_zero = true;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    /// Drops the hand-coded derivative so checks fall back to the numeric
    /// ladder.
    pub fn without_analytic_dini(mut self) -> Self {
        self.dini = None;
        self
    }

    pub fn has_analytic_dini(&self) -> bool {
        self.dini.is_some()
    }

    pub fn declares_zero_at_zero(&self) -> bool {
        self.zero_at_zero
    }

    pub fn eval(&self, t: T, x: &HistorySegment<T>) -> T {
        (self.eval)(t, x)
    }

    pub fn analytic_dini(&self, t: T, x: &HistorySegment<T>, v: &[T]) -> Option<T> {
        self.dini.as_ref().map(|d| d(t, x, v))
    }

    /// Samples nonnegativity (and `V(t, 0) = 0` when declared) on random
    /// histories.
    pub fn validate(&self, delay: T, dim: usize, spec: &SamplerSpec) -> Result<()> {
        let zero = HistorySegment::zeros(delay, dim)?;
        for i in 0..spec.samples {
            let mut g = rng::stream(spec.seed, i as u64);
            let t = T::lit(spec.sample_t(&mut g));
            if self.zero_at_zero {
                let v0 = self.eval(t, &zero);
                if v0 != T::zero() {
                    return Err(self.class_error(format!("V({t}, 0) = {v0}")));
                }
            }
            let x: HistorySegment<T> = spec.history.sample(delay, dim, &mut g);
            let v = self.eval(t, &x);
            if !v.is_finite() {
                return Err(Error::Evaluation {
                    what: self.name.clone(),
                    at: t.as_f64(),
                });
            }
            if v < T::zero() {
                return Err(self.class_error(format!("V = {v} < 0 at t = {t}")));
            }
        }
        Ok(())
    }

    fn class_error(&self, reason: String) -> Error {
        Error::Class {
            name: self.name.clone(),
            class: "lyapunov functional".into(),
            reason,
        }
    }
}

/// Pointwise `V: [-r, ∞) × Rⁿ → R⁺` used in Razumikhin conditions.
#[derive(Clone)]
pub struct RazumikhinFunction<T: Real> {
    name: String,
    params: BTreeMap<String, f64>,
    eval: PointFn<T>,
    dini: Option<PointDiniFn<T>>,
}

impl<T: Real> fmt::Debug for RazumikhinFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RazumikhinFunction")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("analytic_dini", &self.dini.is_some())
            .finish()
    }
}

impl<T: Real> RazumikhinFunction<T> {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(T, &[T]) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            params: BTreeMap::new(),
            eval: Arc::new(eval),
            dini: None,
        }
    }

    /// Hand-coded `D⁺V(t, x; v)`.
    pub fn with_analytic_dini(
        mut self,
        dini: impl Fn(T, &[T], &[T]) -> T + Send + Sync + 'static,
    ) -> Self {
        self.dini = Some(Arc::new(dini));
        self
    }

    pub fn with_param(mut self, key: impl Into<String>, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    /// Drops the hand-coded derivative so checks fall back to the numeric
    /// ladder.
    pub fn without_analytic_dini(mut self) -> Self {
        self.dini = None;
        self
    }

    pub fn has_analytic_dini(&self) -> bool {
        self.dini.is_some()
    }

    pub fn eval(&self, t: T, x: &[T]) -> T {
        (self.eval)(t, x)
    }

    pub fn analytic_dini(&self, t: T, x: &[T], v: &[T]) -> Option<T> {
        self.dini.as_ref().map(|d| d(t, x, v))
    }

    /// Largest sampled difference quotient `|V(t,y) − V(t,x)| / |y − x|`
    /// over pairs in the ball of radius `spec.history.norm_bound`.
    pub fn lipschitz_probe(&self, dim: usize, spec: &SamplerSpec) -> f64 {
        let bound = spec.history.norm_bound;
        (0..spec.samples)
            .map(|i| {
                let mut g = rng::stream(spec.seed, i as u64);
                let t = T::lit(spec.sample_t(&mut g));
                let radius = bound * g.random::<f64>();
                let x: Vec<T> = random_vector(dim, radius, &mut g)
                    .into_iter()
                    .map(T::lit)
                    .collect();
                let step = bound.max(1e-12) * 1e-3;
                let dx = random_vector(dim, step, &mut g);
                let y: Vec<T> = x.iter().zip(&dx).map(|(a, b)| *a + T::lit(*b)).collect();
                let q = (self.eval(t, &y) - self.eval(t, &x)).abs() / T::lit(step);
                q.as_f64()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NoCounterexample,
    Counterexample,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::NoCounterexample => "no_counterexample",
            Verdict::Counterexample => "counterexample",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Sample at which a decay inequality failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t: f64,
    pub history: HistorySegment<f64>,
    pub u: Vec<f64>,
    pub d: Vec<f64>,
    pub residual: f64,
}

/// Outcome of a sampled search for a counterexample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsificationReport {
    pub verdict: Verdict,
    /// Samples that passed the guard and were evaluated.
    pub samples: usize,
    /// Samples skipped because the guard of the implication was false.
    pub guard_skipped: usize,
    /// Samples whose evaluation produced a non-finite value.
    pub failures: usize,
    /// Largest residual over the evaluated samples.
    pub worst_residual: Option<f64>,
    pub witness: Option<Witness>,
    pub tolerance: f64,
    pub rel_tolerance: f64,
    pub seed: u64,
}

/// Residual tolerance `abs + rel·|derivative|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    /// Used with numerically estimated Dini derivatives.
    pub const NUMERIC: Tolerance = Tolerance {
        abs: 1e-6,
        rel: 1e-6,
    };
    /// Used with hand-coded Dini derivatives.
    pub const ANALYTIC: Tolerance = Tolerance {
        abs: 1e-9,
        rel: 1e-9,
    };

    pub fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }
}

/// Where falsifiers draw `(t, x, u, d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerSpec {
    pub t_lo: f64,
    pub t_hi: f64,
    pub history: HistorySampler,
    pub samples: usize,
    pub seed: u64,
    /// Overrides the default residual tolerance.
    pub tolerance: Option<Tolerance>,
    pub dini: DiniOptions,
    /// Fraction of failed evaluations above which the verdict is
    /// inconclusive.
    pub max_failure_fraction: f64,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        Self {
            t_lo: 0.0,
            t_hi: 5.0,
            history: HistorySampler::default(),
            samples: 10_000,
            seed: 0,
            tolerance: None,
            dini: DiniOptions::default(),
            max_failure_fraction: 0.1,
        }
    }
}

impl SamplerSpec {
    pub fn new(t_lo: f64, t_hi: f64, norm_bound: f64, samples: usize, seed: u64) -> Self {
        Self {
            t_lo,
            t_hi,
            history: HistorySampler::new(norm_bound),
            samples,
            seed,
            ..Self::default()
        }
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tolerance = Some(tol);
        self
    }

    pub fn with_dini(mut self, dini: DiniOptions) -> Self {
        self.dini = dini;
        self
    }

    pub(crate) fn sample_t<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.t_hi > self.t_lo {
            self.t_lo + (self.t_hi - self.t_lo) * rng.random::<f64>()
        } else {
            self.t_lo
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_lo >= 0.0 && self.t_hi >= self.t_lo && self.t_hi.is_finite()) {
            return Err(Error::Config(format!(
                "sampling window [{}, {}] must satisfy 0 ≤ t_lo ≤ t_hi < ∞",
                self.t_lo, self.t_hi
            )));
        }
        if !(self.history.norm_bound >= 0.0 && self.history.norm_bound.is_finite()) {
            return Err(Error::Config(format!(
                "history norm bound must be finite and nonnegative, got {}",
                self.history.norm_bound
            )));
        }
        if self.samples == 0 {
            return Err(Error::Empty("sample set"));
        }
        Ok(())
    }
}
