//! Sampled falsification of dissipation and Razumikhin inequalities.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use super::dini::{dini_functional, dini_pointwise};
use super::{
    FalsificationReport, LyapunovFunctional, RazumikhinFunction, SamplerSpec, Tolerance, Verdict,
    Witness,
};
use crate::compfn::{ClassGrid, ComparisonFn};
use crate::error::{Error, Result};
use crate::history::{HistoryAccess, HistorySegment};
use crate::rng::{self, Stream};
use crate::scalar::{self, Real};
use crate::signals::DomainBox;
use crate::simulator::RfdeSystem;

/// Upper bound `(t, V, u) ↦ b` that the derivative of `V` must not exceed.
pub type DecayBound<T> = Arc<dyn Fn(T, T, &[T]) -> T + Send + Sync>;

/// `−ρ(V)`.
pub fn decay_bound<T: Real>(rho: &ComparisonFn<T>) -> DecayBound<T> {
    let rho = rho.clone();
    Arc::new(move |_, v, _| -rho.eval(v))
}

/// Guard `ζ(δ(t)|u|) ≤ V` of input-to-output decay conditions.
#[derive(Debug, Clone)]
pub struct InputGuard<T: Real> {
    pub zeta: ComparisonFn<T>,
    pub delta: ComparisonFn<T>,
}

impl<T: Real> InputGuard<T> {
    pub fn new(zeta: ComparisonFn<T>, delta: ComparisonFn<T>) -> Self {
        Self { zeta, delta }
    }

    pub fn holds(&self, t: T, u: &[T], v: T) -> bool {
        self.zeta.eval(self.delta.eval(t) * scalar::norm(u)) <= v
    }
}

enum Outcome<T: Real> {
    Skipped,
    Failed,
    Evaluated {
        t: T,
        x: HistorySegment<T>,
        u: Vec<T>,
        d: Vec<T>,
        residual: T,
        scale: T,
    },
}

/// Box draw that lands on a corner a quarter of the time.
fn sample_point<T: Real>(b: &DomainBox<T>, g: &mut Stream) -> Vec<T> {
    if b.dim() > 0 && g.random::<f64>() < 0.25 {
        let corners = b.corners();
        let k = g.random_range(0..corners.len());
        corners[k].clone()
    } else {
        b.sample(g)
    }
}

fn to_f64_segment<T: Real>(x: &HistorySegment<T>) -> HistorySegment<f64> {
    let grid = x.grid().iter().map(|g| g.as_f64()).collect();
    let values = x.flat_values().iter().map(|v| v.as_f64()).collect();
    HistorySegment::from_flat(x.delay().as_f64(), x.dim(), grid, values)
        .expect("converted segment keeps a valid grid")
}

fn reduce<T: Real>(
    outcomes: Vec<Outcome<T>>,
    spec: &SamplerSpec,
    tol: Tolerance,
) -> FalsificationReport {
    let (mut samples, mut skipped, mut failures) = (0usize, 0usize, 0usize);
    let mut worst: Option<f64> = None;
    let mut witness: Option<(f64, Witness)> = None;
    for o in outcomes {
        match o {
            Outcome::Skipped => skipped += 1,
            Outcome::Failed => failures += 1,
            Outcome::Evaluated {
                t,
                x,
                u,
                d,
                residual,
                scale,
            } => {
                samples += 1;
                let r = residual.as_f64();
                worst = Some(worst.map_or(r, |w| w.max(r)));
                let excess = r - (tol.abs + tol.rel * scale.as_f64());
                if excess > 0.0 && witness.as_ref().is_none_or(|(e, _)| excess > *e) {
                    witness = Some((
                        excess,
                        Witness {
                            t: t.as_f64(),
                            history: to_f64_segment(&x),
                            u: u.iter().map(|v| v.as_f64()).collect(),
                            d: d.iter().map(|v| v.as_f64()).collect(),
                            residual: r,
                        },
                    ));
                }
            }
        }
    }
    let total = samples + skipped + failures;
    let verdict = if witness.is_some() {
        Verdict::Counterexample
    } else if samples == 0 || failures as f64 > spec.max_failure_fraction * total as f64 {
        Verdict::Inconclusive
    } else {
        Verdict::NoCounterexample
    };
    FalsificationReport {
        verdict,
        samples,
        guard_skipped: skipped,
        failures,
        worst_residual: worst,
        witness: witness.map(|(_, w)| w),
        tolerance: tol.abs,
        rel_tolerance: tol.rel,
        seed: spec.seed,
    }
}

#[derive(Clone, Copy)]
enum Inputs {
    Nominal,
    Sampled,
}

fn falsify_functional<T: Real>(
    sys: &RfdeSystem<T>,
    v: &LyapunovFunctional<T>,
    bound: &DecayBound<T>,
    guard: Option<&InputGuard<T>>,
    inputs: Inputs,
    spec: &SamplerSpec,
) -> Result<FalsificationReport> {
    spec.validate()?;
    let tol = spec.tolerance.unwrap_or(if v.has_analytic_dini() {
        Tolerance::ANALYTIC
    } else {
        Tolerance::NUMERIC
    });
    let (r, n) = (sys.delay(), sys.dim());
    let outcomes: Vec<Outcome<T>> = (0..spec.samples)
        .into_par_iter()
        .map(|i| {
            let mut g = rng::stream(spec.seed, i as u64);
            let t = T::lit(spec.sample_t(&mut g));
            let x: HistorySegment<T> = spec.history.sample(r, n, &mut g);
            let u = match inputs {
                Inputs::Nominal => sys.u_box().nominal(),
                Inputs::Sampled => sample_point(sys.u_box(), &mut g),
            };
            let d = sample_point(sys.d_box(), &mut g);
            let val = v.eval(t, &x);
            if !val.is_finite() {
                return Outcome::Failed;
            }
            if guard.is_some_and(|gd| !gd.holds(t, &u, val)) {
                return Outcome::Skipped;
            }
            let f = sys.eval(t, &x, &u, &d);
            if !scalar::all_finite(&f) {
                return Outcome::Failed;
            }
            let Ok(dv) = dini_functional(v, t, &x, &f, &spec.dini) else {
                return Outcome::Failed;
            };
            let residual = dv - bound(t, val, &u);
            if !residual.is_finite() {
                return Outcome::Failed;
            }
            Outcome::Evaluated {
                t,
                x,
                u,
                d,
                residual,
                scale: dv.abs(),
            }
        })
        .collect();
    Ok(reduce(outcomes, spec, tol))
}

/// Searches for `(t, x, u, d)` with `V⁰(t, x; f(t, x, u, d)) > bound(t, V, u)`
/// (and the guard, if given, satisfied).
pub fn check_dissipation<T: Real>(
    sys: &RfdeSystem<T>,
    v: &LyapunovFunctional<T>,
    bound: &DecayBound<T>,
    guard: Option<&InputGuard<T>>,
    spec: &SamplerSpec,
) -> Result<FalsificationReport> {
    falsify_functional(sys, v, bound, guard, Inputs::Sampled, spec)
}

/// `V⁰(t, x; f(t, x, d)) ≤ −ρ(V(t, x))` with the input held at its nominal
/// value.
pub fn check_lyapunov_decay<T: Real>(
    sys: &RfdeSystem<T>,
    v: &LyapunovFunctional<T>,
    rho: &ComparisonFn<T>,
    spec: &SamplerSpec,
) -> Result<FalsificationReport> {
    falsify_functional(sys, v, &decay_bound(rho), None, Inputs::Nominal, spec)
}

/// `ζ(δ(t)|u|) ≤ V(t, x) ⇒ V⁰(t, x; f(t, x, u, d)) ≤ −ρ(V(t, x))`.
pub fn check_lyapunov_ios<T: Real>(
    sys: &RfdeSystem<T>,
    v: &LyapunovFunctional<T>,
    zeta: &ComparisonFn<T>,
    delta: &ComparisonFn<T>,
    rho: &ComparisonFn<T>,
    spec: &SamplerSpec,
) -> Result<FalsificationReport> {
    let guard = InputGuard::new(zeta.clone(), delta.clone());
    falsify_functional(
        sys,
        v,
        &decay_bound(rho),
        Some(&guard),
        Inputs::Sampled,
        spec,
    )
}

/// Razumikhin condition with decay `−ρ(V)`; see [`check_razumikhin_with`].
pub fn check_razumikhin<T: Real>(
    sys: &RfdeSystem<T>,
    vr: &RazumikhinFunction<T>,
    a: &ComparisonFn<T>,
    rho: &ComparisonFn<T>,
    inputs: Option<&InputGuard<T>>,
    spec: &SamplerSpec,
) -> Result<FalsificationReport> {
    check_razumikhin_with(sys, vr, a, &decay_bound(rho), inputs, spec)
}

/// Points per history piece at which the guard supremum is evaluated.
const GUARD_REFINEMENT: usize = 4;

fn guard_sup<T: Real>(vr: &RazumikhinFunction<T>, t: T, x: &HistorySegment<T>) -> T {
    let knots = x.knots();
    let mut best = T::neg_infinity();
    let mut buf = vec![T::zero(); x.dim()];
    for w in knots.windows(2) {
        for j in 0..GUARD_REFINEMENT {
            let th = w[0] + (w[1] - w[0]) * T::count(j) / T::count(GUARD_REFINEMENT);
            x.eval_into(th, &mut buf);
            best = best.max(vr.eval(t + th, &buf));
        }
    }
    best.max(vr.eval(t, x.head()))
}

/// Searches for samples where
/// `a(sup_θ V(t+θ, x(θ))) ≤ V(t, x(0))` (and `ζ(δ(t)|u|) ≤ V(t, x(0))` when
/// an input guard is given) but `D⁺V(t, x(0); f(t, x, u, d)) > bound`.
///
/// The supremum is taken over the history knots refined four times.
/// Samples failing a guard are skipped and never reported.
pub fn check_razumikhin_with<T: Real>(
    sys: &RfdeSystem<T>,
    vr: &RazumikhinFunction<T>,
    a: &ComparisonFn<T>,
    bound: &DecayBound<T>,
    inputs: Option<&InputGuard<T>>,
    spec: &SamplerSpec,
) -> Result<FalsificationReport> {
    spec.validate()?;
    if let Some(s) = ClassGrid::comparison()
        .samples::<T>()
        .into_iter()
        .find(|&s| s > T::zero() && !(a.eval(s) < s))
    {
        return Err(Error::Class {
            name: a.name().to_string(),
            class: "a(s) < s".into(),
            reason: format!("a({s}) = {}", a.eval(s)),
        });
    }
    let tol = spec.tolerance.unwrap_or(if vr.has_analytic_dini() {
        Tolerance::ANALYTIC
    } else {
        Tolerance::NUMERIC
    });
    let (r, n) = (sys.delay(), sys.dim());
    let outcomes: Vec<Outcome<T>> = (0..spec.samples)
        .into_par_iter()
        .map(|i| {
            let mut g = rng::stream(spec.seed, i as u64);
            let t = T::lit(spec.sample_t(&mut g));
            let x: HistorySegment<T> = spec.history.sample(r, n, &mut g);
            let u = match inputs {
                Some(_) => sample_point(sys.u_box(), &mut g),
                None => sys.u_box().nominal(),
            };
            let d = sample_point(sys.d_box(), &mut g);
            let now = vr.eval(t, x.head());
            let sup = guard_sup(vr, t, &x);
            if !(now.is_finite() && sup.is_finite()) {
                return Outcome::Failed;
            }
            if a.eval(sup) > now || inputs.is_some_and(|gd| !gd.holds(t, &u, now)) {
                return Outcome::Skipped;
            }
            let f = sys.eval(t, &x, &u, &d);
            if !scalar::all_finite(&f) {
                return Outcome::Failed;
            }
            let Ok(dv) = dini_pointwise(vr, t, x.head(), &f, &spec.dini) else {
                return Outcome::Failed;
            };
            let residual = dv - bound(t, now, &u);
            if !residual.is_finite() {
                return Outcome::Failed;
            }
            Outcome::Evaluated {
                t,
                x,
                u,
                d,
                residual,
                scale: dv.abs(),
            }
        })
        .collect();
    Ok(reduce(outcomes, spec, tol))
}
