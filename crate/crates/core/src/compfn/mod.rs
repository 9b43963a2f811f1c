//! Comparison functions: classes K, K∞, K⁺, positive definite and KL.
//!
//! Class membership is checked on sampled grids, never proved.

mod kl;
mod registry;
mod small_gain;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use kl::{check_kl, kl_from_rate, KlFn, KlGrid};
pub use registry::FnSpec;
pub use small_gain::{check_small_gain, SmallGainReport};

/// Threshold the K∞ unboundedness probe must exceed at `s = 1e6`.
pub const UNBOUNDED_THRESHOLD: f64 = 10.0;
/// Abscissa of the K∞ unboundedness probe.
pub const UNBOUNDED_PROBE: f64 = 1e6;
/// Largest `|f(0)|` accepted as "zero at zero".
pub const ZERO_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassTag {
    K,
    #[serde(rename = "k_inf")]
    KInf,
    KPlus,
    PositiveDefinite,
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassTag::K => "K",
            ClassTag::KInf => "K∞",
            ClassTag::KPlus => "K+",
            ClassTag::PositiveDefinite => "positive definite",
        })
    }
}

type Scalar1<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Tagged scalar function `ℝ⁺ → ℝ⁺`.
#[derive(Clone)]
pub struct ComparisonFn<T: Real> {
    name: String,
    class: ClassTag,
    eval: Scalar1<T>,
    inverse: Option<Scalar1<T>>,
}

impl<T: Real> fmt::Debug for ComparisonFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComparisonFn")
            .field("name", &self.name)
            .field("class", &self.class)
            .field("inverse", &self.inverse.is_some())
            .finish()
    }
}

impl<T: Real> ComparisonFn<T> {
    pub fn new(
        name: impl Into<String>,
        class: ClassTag,
        f: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            class,
            eval: Arc::new(f),
            inverse: None,
        }
    }

    pub fn with_inverse(mut self, inv: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        self.inverse = Some(Arc::new(inv));
        self
    }

    pub fn with_class(mut self, class: ClassTag) -> Self {
        self.class = class;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    #[inline]
    pub fn eval(&self, s: T) -> T {
        (self.eval)(s)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn class(&self) -> ClassTag {
        self.class
    }

    pub fn has_inverse(&self) -> bool {
        self.inverse.is_some()
    }

    /// `f⁻¹(y)`: the stored inverse, or bisection for increasing classes.
    pub fn inverse(&self, y: T) -> Option<T> {
        if let Some(inv) = &self.inverse {
            return Some(inv(y));
        }
        if !matches!(self.class, ClassTag::K | ClassTag::KInf) || y < T::zero() {
            return None;
        }
        let mut hi = T::one();
        let mut guard = 0;
        while self.eval(hi) < y {
            hi = hi + hi;
            guard += 1;
            if guard > 2000 || !hi.is_finite() {
                return None;
            }
        }
        let mut lo = T::zero();
        for _ in 0..200 {
            let mid = (lo + hi) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(hi)
    }

    /// `s ↦ s` (K∞).
    pub fn identity() -> Self {
        Self::new("identity", ClassTag::KInf, |s| s).with_inverse(|y| y)
    }

    /// `s ↦ c·s`.
    pub fn linear(c: T) -> Self {
        Self::new(format!("{c}*s"), ClassTag::KInf, move |s| c * s).with_inverse(move |y| y / c)
    }

    /// `s ↦ c·s^p`.
    pub fn power(c: T, p: T) -> Self {
        Self::new(format!("{c}*s^{p}"), ClassTag::KInf, move |s: T| {
            c * s.powf(p)
        })
        .with_inverse(move |y: T| (y / c).powf(p.recip()))
    }

    /// Weight `t ↦ e^{c·t}` (K⁺).
    pub fn exp_weight(c: T) -> Self {
        Self::new(format!("exp({c}*t)"), ClassTag::KPlus, move |t: T| {
            (c * t).exp()
        })
    }

    /// Constant weight (K⁺ when positive).
    pub fn constant(c: T) -> Self {
        Self::new(format!("{c}"), ClassTag::KPlus, move |_| c)
    }

    pub fn min(a: Self, b: Self) -> Self {
        let (fa, fb) = (a.eval.clone(), b.eval.clone());
        Self::new(format!("min({}, {})", a.name, b.name), a.class, move |s| {
            fa(s).min(fb(s))
        })
    }

    pub fn max(a: Self, b: Self) -> Self {
        let (fa, fb) = (a.eval.clone(), b.eval.clone());
        Self::new(format!("max({}, {})", a.name, b.name), a.class, move |s| {
            fa(s).max(fb(s))
        })
    }

    /// `s ↦ self(other(s))`.
    pub fn compose(&self, other: &Self) -> Self {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        let mut out = Self::new(
            format!("{}∘{}", self.name, other.name),
            self.class,
            move |s| f(g(s)),
        );
        if let (Some(fi), Some(gi)) = (self.inverse.clone(), other.inverse.clone()) {
            out.inverse = Some(Arc::new(move |y| gi(fi(y))));
        }
        out
    }

    /// `s ↦ k·self(s)`.
    pub fn scaled(&self, k: T) -> Self {
        let f = self.eval.clone();
        Self::new(format!("{k}*{}", self.name), self.class, move |s| k * f(s))
    }

    /// Nondecreasing majorant `t ↦ max_{0 ≤ τ ≤ t} self(τ)`, sampled with
    /// `points` subintervals. Turns an arbitrary K⁺ weight into a
    /// nondecreasing one.
    pub fn running_max(&self, points: usize) -> Self {
        let f = self.eval.clone();
        let points = points.max(1);
        Self::new(
            format!("runmax({})", self.name),
            ClassTag::KPlus,
            move |t: T| {
                (0..=points).fold(T::neg_infinity(), |m, i| {
                    m.max(f(t * T::count(i) / T::count(points)))
                })
            },
        )
    }
}

/// Sampling grid for class checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub log_spaced: bool,
}

impl ClassGrid {
    /// 64 log-spaced points in `[1e-9, 1e6]`.
    pub fn comparison() -> Self {
        Self {
            lo: 1e-9,
            hi: 1e6,
            points: 64,
            log_spaced: true,
        }
    }

    /// 64 uniform points in `[0, 50]`; exponential weights overflow on the
    /// comparison grid.
    pub fn weight() -> Self {
        Self {
            lo: 0.0,
            hi: 50.0,
            points: 64,
            log_spaced: false,
        }
    }

    pub fn default_for(class: ClassTag) -> Self {
        match class {
            ClassTag::KPlus => Self::weight(),
            _ => Self::comparison(),
        }
    }

    pub fn samples<T: Real>(&self) -> Vec<T> {
        let n = self.points.max(2);
        (0..n)
            .map(|i| {
                let w = i as f64 / (n - 1) as f64;
                let s = if self.log_spaced {
                    (self.lo.ln() + w * (self.hi.ln() - self.lo.ln())).exp()
                } else {
                    self.lo + w * (self.hi - self.lo)
                };
                T::lit(s)
            })
            .collect()
    }
}

/// Outcome of one sampled invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub invariant: String,
    pub pass: bool,
    /// Sample with the largest violation (or the tightest sample on pass).
    pub worst_at: Vec<f64>,
    pub worst_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub name: String,
    pub class: String,
    pub pass: bool,
    pub checks: Vec<InvariantCheck>,
}

impl ClassReport {
    pub(crate) fn new(name: &str, class: impl fmt::Display, checks: Vec<InvariantCheck>) -> Self {
        Self {
            name: name.to_string(),
            class: class.to_string(),
            pass: checks.iter().all(|c| c.pass),
            checks,
        }
    }

    pub fn check(&self, invariant: &str) -> Option<&InvariantCheck> {
        self.checks.iter().find(|c| c.invariant == invariant)
    }
}

fn finite<T: Real>(f: &ComparisonFn<T>, s: T) -> Result<T> {
    let v = f.eval(s);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation {
            what: f.name.clone(),
            at: s.as_f64(),
        })
    }
}

/// Checks the invariants of `f`'s class tag on `grid`.
pub fn check_class<T: Real>(f: &ComparisonFn<T>, grid: &ClassGrid) -> Result<ClassReport> {
    let samples: Vec<T> = grid.samples();
    let values = samples
        .iter()
        .map(|&s| finite(f, s))
        .collect::<Result<Vec<T>>>()?;
    let mut checks = Vec::new();

    let zero_at_zero = |checks: &mut Vec<InvariantCheck>| -> Result<()> {
        let z = finite(f, T::zero())?.abs().as_f64();
        checks.push(InvariantCheck {
            invariant: "zero_at_zero".into(),
            pass: z <= ZERO_TOLERANCE,
            worst_at: vec![0.0],
            worst_value: z,
        });
        Ok(())
    };
    let positive = |checks: &mut Vec<InvariantCheck>, skip_zero: bool| {
        let (i, v) = samples
            .iter()
            .zip(&values)
            .enumerate()
            .filter(|(_, (s, _))| !(skip_zero && **s == T::zero()))
            .map(|(i, (_, v))| (i, *v))
            .fold(
                (0, T::infinity()),
                |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
            );
        checks.push(InvariantCheck {
            invariant: "positive".into(),
            pass: v > T::zero(),
            worst_at: vec![samples[i].as_f64()],
            worst_value: v.as_f64(),
        });
    };

    match f.class {
        ClassTag::K | ClassTag::KInf => {
            zero_at_zero(&mut checks)?;
            let mut worst = (0usize, f64::INFINITY);
            for i in 0..values.len() - 1 {
                let gap = (values[i + 1] - values[i]).as_f64();
                if gap < worst.1 {
                    worst = (i, gap);
                }
            }
            checks.push(InvariantCheck {
                invariant: "strictly_increasing".into(),
                pass: worst.1 > 0.0,
                worst_at: vec![samples[worst.0].as_f64(), samples[worst.0 + 1].as_f64()],
                worst_value: worst.1,
            });
            if f.class == ClassTag::KInf {
                let v = finite(f, T::lit(UNBOUNDED_PROBE))?.as_f64();
                checks.push(InvariantCheck {
                    invariant: "unbounded".into(),
                    pass: v > UNBOUNDED_THRESHOLD,
                    worst_at: vec![UNBOUNDED_PROBE],
                    worst_value: v,
                });
            }
        }
        ClassTag::KPlus => positive(&mut checks, false),
        ClassTag::PositiveDefinite => {
            zero_at_zero(&mut checks)?;
            positive(&mut checks, true);
        }
    }
    Ok(ClassReport::new(&f.name, f.class, checks))
}

/// `(k, t0 − kT)` with `k = ⌊t0/T⌋` and remainder in `[0, T)`.
pub fn periodic_wrap<T: Real>(t0: T, period: T) -> Result<(i64, T)> {
    if !(period > T::zero()) || !period.is_finite() {
        return Err(Error::Domain {
            what: "period",
            value: period.as_f64(),
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let mut k = (t0 / period).floor().to_i64().unwrap_or(0);
    let mut rem = t0 - T::lit(k as f64) * period;
    if rem < T::zero() {
        k -= 1;
        rem = t0 - T::lit(k as f64) * period;
    } else if rem >= period {
        k += 1;
        rem = t0 - T::lit(k as f64) * period;
    }
    Ok((k, rem.max(T::zero())))
}
