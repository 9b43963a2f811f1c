//! The three worked examples, with their certificates and expected
//! verdicts, and a registry selecting them by name.

mod catalog;
mod registry;

#[cfg(test)]
mod tests;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compfn::ComparisonFn;
use crate::error::Result;
use crate::history::HistorySegment;
use crate::lyapunov::{
    check_dissipation, check_lyapunov_ios, check_razumikhin_with, DecayBound, InputGuard,
    LyapunovFunctional, RazumikhinFunction, SamplerSpec, Verdict,
};
use crate::rng;
use crate::scalar::Real;
use crate::signals::{PiecewiseSignal, SignalSpec};
use crate::simulator::{
    integrate, CheckVerdict, IntegrateOptions, RfdeSystem, SlidingMax, Trajectory,
};
use crate::verify::{fit_kl_envelope, verify_ios_envelope};

pub use catalog::{
    constants_5_2, example_4_8, example_4_8_boxed, example_5_2, example_5_2_default, example_5_4,
    example_5_4_with, output_5_4, razumikhin_5_2, scalar_contraction, scalar_contraction_bundle,
    Constants52, DELAY_BOUND_5_2, STIFF_STEP_FACTOR,
};
pub use registry::{
    build_example, ContractionParams, Example48Params, Example52Params, Example54Params, REGISTRY,
};

/// Fixed initial data and constant signals.
#[derive(Debug, Clone)]
pub struct Scenario<T: Real> {
    pub x0: HistorySegment<T>,
    pub u: Vec<T>,
    pub d: Vec<T>,
}

impl<T: Real> Scenario<T> {
    pub fn run(
        &self,
        sys: &RfdeSystem<T>,
        t_end: T,
        opts: &IntegrateOptions,
    ) -> Result<Trajectory<T>> {
        let u = PiecewiseSignal::constant(self.u.clone(), sys.u_box().clone())?;
        let d = PiecewiseSignal::constant(self.d.clone(), sys.d_box().clone())?;
        integrate(sys, T::zero(), &self.x0, &u, &d, t_end, opts)
    }
}

/// A claim about an example together with the checker that tests it.
#[derive(Clone)]
pub enum Certificate<T: Real> {
    /// `check_lyapunov_ios`.
    LyapunovIos {
        label: String,
        v: LyapunovFunctional<T>,
        rho: ComparisonFn<T>,
        zeta: ComparisonFn<T>,
        delta: ComparisonFn<T>,
        expected: Verdict,
    },
    /// `check_dissipation` with an unguarded bound.
    Dissipation {
        label: String,
        v: LyapunovFunctional<T>,
        bound: DecayBound<T>,
        expected: Verdict,
    },
    /// `check_razumikhin_with`.
    Razumikhin {
        label: String,
        vr: RazumikhinFunction<T>,
        a: ComparisonFn<T>,
        bound: DecayBound<T>,
        guard: Option<InputGuard<T>>,
        expected: Verdict,
    },
    /// `verify_ios_envelope` on sampled solutions (plus `extra`), with `σ`
    /// fitted on a separate zero-input ensemble and `β ≡ 1`.
    IosEnvelope {
        label: String,
        gamma: ComparisonFn<T>,
        delta: ComparisonFn<T>,
        extra: Option<Scenario<T>>,
        expected: CheckVerdict,
    },
    /// `|Y(t)| > threshold` for some `t ≤ by` along the scenario.
    Divergence {
        label: String,
        scenario: Scenario<T>,
        threshold: f64,
        by: f64,
    },
    /// Along sampled solutions, `V(t, x(t))` decreases on every step that
    /// starts where the guard `a(sup_θ V) ≤ V` holds, and the window
    /// supremum of `V` is nonincreasing.
    Nonincreasing {
        label: String,
        vr: RazumikhinFunction<T>,
        a: ComparisonFn<T>,
        rel_slack: f64,
    },
}

impl<T: Real> Certificate<T> {
    pub fn checker(&self) -> &'static str {
        match self {
            Certificate::LyapunovIos { .. } => "check_lyapunov_ios",
            Certificate::Dissipation { .. } => "check_dissipation",
            Certificate::Razumikhin { .. } => "check_razumikhin",
            Certificate::IosEnvelope { .. } => "verify_ios_envelope",
            Certificate::Divergence { .. } => "divergence",
            Certificate::Nonincreasing { .. } => "nonincreasing",
        }
    }

    /// Whether the certificate is checked by sampling `(t, x, u, d)`
    /// rather than by simulating solutions.
    pub fn is_sampled(&self) -> bool {
        matches!(
            self,
            Certificate::LyapunovIos { .. }
                | Certificate::Dissipation { .. }
                | Certificate::Razumikhin { .. }
        )
    }

    pub fn label(&self) -> &str {
        match self {
            Certificate::LyapunovIos { label, .. }
            | Certificate::Dissipation { label, .. }
            | Certificate::Razumikhin { label, .. }
            | Certificate::IosEnvelope { label, .. }
            | Certificate::Divergence { label, .. }
            | Certificate::Nonincreasing { label, .. } => label,
        }
    }

    pub fn expected(&self) -> String {
        match self {
            Certificate::LyapunovIos { expected, .. }
            | Certificate::Dissipation { expected, .. }
            | Certificate::Razumikhin { expected, .. } => expected.to_string(),
            Certificate::IosEnvelope { expected, .. } => verdict_name(*expected).into(),
            Certificate::Divergence { .. } => "diverged".into(),
            Certificate::Nonincreasing { .. } => "nonincreasing".into(),
        }
    }
}

fn verdict_name(v: CheckVerdict) -> &'static str {
    match v {
        CheckVerdict::Pass => "pass",
        CheckVerdict::Fail => "fail",
        CheckVerdict::Inconclusive => "inconclusive",
    }
}

/// Sampling and integration settings for checking a bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckContext {
    /// Falsification sampler; its seed is replaced per certificate.
    pub sampler: SamplerSpec,
    /// Trajectories per simulated ensemble.
    pub trajectories: usize,
    pub horizon: f64,
    pub integrate: IntegrateOptions,
}

/// Result of checking one certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateOutcome {
    pub index: usize,
    pub checker: String,
    pub label: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
    pub report: serde_json::Value,
}

/// A worked example: the system, what is claimed about it, and default
/// settings for checking the claims.
#[derive(Clone)]
pub struct ExampleBundle<T: Real> {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub system: RfdeSystem<T>,
    pub certificates: Vec<Certificate<T>>,
    pub context: CheckContext,
    pub notes: String,
}

impl<T: Real> std::fmt::Debug for ExampleBundle<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let certs: Vec<(&str, &str)> = self
            .certificates
            .iter()
            .map(|c| (c.checker(), c.label()))
            .collect();
        f.debug_struct("ExampleBundle")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("certificates", &certs)
            .field("context", &self.context)
            .finish()
    }
}

/// Mean dwell time of sampled disturbance and input signals.
pub const MEAN_DWELL: f64 = 1.0;

const SALT_CALIBRATION: u64 = 0xca1b;
const SALT_VALIDATION: u64 = 0x7a1d;
const SALT_DISTURBANCE: u64 = 0xd157;
const SALT_INPUT: u64 = 0x1b0d;

/// `n` solutions from `t = 0` with sampled initial segments and
/// disturbances, and sampled inputs when `inputs` is set (nominal
/// otherwise).
pub fn sample_ensemble<T: Real>(
    sys: &RfdeSystem<T>,
    ctx: &CheckContext,
    seed: u64,
    inputs: bool,
) -> Result<Vec<Trajectory<T>>> {
    let horizon = T::lit(ctx.horizon);
    let signal = |domain: &crate::signals::DomainBox<T>,
                  salt: u64,
                  i: usize|
     -> Result<PiecewiseSignal<T>> {
        if domain.dim() == 0 {
            return Ok(PiecewiseSignal::nominal(domain.clone()));
        }
        Ok(SignalSpec::new(
            domain.clone(),
            horizon,
            T::lit(MEAN_DWELL),
            rng::derive(seed, salt),
        )?
        .sample_nth(i as u64))
    };
    (0..ctx.trajectories)
        .into_par_iter()
        .map(|i| {
            let mut g = rng::stream(seed, i as u64);
            let x0 = ctx.sampler.history.sample(sys.delay(), sys.dim(), &mut g);
            let d = signal(sys.d_box(), SALT_DISTURBANCE, i)?;
            let u = if inputs {
                signal(sys.u_box(), SALT_INPUT, i)?
            } else {
                PiecewiseSignal::nominal(sys.u_box().clone())
            };
            integrate(sys, T::zero(), &x0, &u, &d, horizon, &ctx.integrate)
        })
        .collect()
}

/// Increases of `V(t, x(t))` and of its window supremum along solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub trajectories: usize,
    pub nodes: usize,
    pub rel_slack: f64,
    /// Steps with `V_{i+1} > (1 + rel_slack)·V_i`, guard or not.
    pub pointwise_increases: usize,
    /// `max (V_{i+1} − V_i) / |V_i|` over all steps (infinite when
    /// `V_i = 0 < V_{i+1}`).
    pub pointwise_worst: f64,
    pub pointwise_witness: Option<MonotonicityWitness>,
    /// Steps starting where the Razumikhin guard `a(sup_θ V) ≤ V` holds.
    pub guarded_steps: usize,
    pub guarded_increases: usize,
    pub guarded_worst: f64,
    pub guarded_witness: Option<MonotonicityWitness>,
    /// Same statistics for `W(t) = sup_{θ∈[-r,0]} V(t+θ, x(t+θ))`.
    pub window_increases: usize,
    pub window_worst: f64,
    pub window_witness: Option<MonotonicityWitness>,
    pub blew_up: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityWitness {
    pub trajectory: usize,
    pub t: f64,
    pub before: f64,
    pub after: f64,
    /// `W(t) / V(t)` at the start of the step.
    pub window_ratio: f64,
}

fn rel_increase(prev: f64, cur: f64) -> f64 {
    if prev == 0.0 {
        if cur > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        (cur - prev) / prev.abs()
    }
}

struct Tally {
    count: usize,
    worst: f64,
    witness: Option<(f64, MonotonicityWitness)>,
}

impl Tally {
    fn new() -> Self {
        Self {
            count: 0,
            worst: f64::NEG_INFINITY,
            witness: None,
        }
    }

    fn add(&mut self, inc: f64, slack: f64, w: impl FnOnce() -> MonotonicityWitness) {
        self.worst = self.worst.max(inc);
        if inc > slack {
            self.count += 1;
            if self.witness.as_ref().is_none_or(|(e, _)| inc > *e) {
                self.witness = Some((inc, w()));
            }
        }
    }
}

/// Checks `V(t_{i+1}, x(t_{i+1})) ≤ (1 + rel_slack)·V(t_i, x(t_i))` on
/// every step of every trajectory, separately on the steps where the guard
/// `a(W(t_i)) ≤ V(t_i, x(t_i))` holds, and the same inequality for the
/// window supremum `W`. `W` is taken over the grid nodes (and the grid of
/// the initial segment).
pub fn check_nonincreasing<T: Real>(
    vr: &RazumikhinFunction<T>,
    a: &ComparisonFn<T>,
    trajs: &[Trajectory<T>],
    rel_slack: f64,
) -> MonotonicityReport {
    let mut point = Tally::new();
    let mut guarded = Tally::new();
    let mut window = Tally::new();
    let mut guarded_steps = 0;
    let mut nodes = 0;
    let mut blew_up = 0;
    for (k, tr) in trajs.iter().enumerate() {
        if !tr.completed() {
            blew_up += 1;
        }
        let times = tr.times();
        let t0 = tr.t0();
        let x0 = tr.initial();
        let mut win = SlidingMax::new(tr.delay());
        for (j, &g) in x0.grid().iter().enumerate() {
            if g < T::zero() {
                win.push(t0 + g, vr.eval(t0 + g, x0.value(j)));
            }
        }
        let mut prev = vr.eval(times[0], tr.state(0));
        let mut prev_w = win.push(times[0], prev);
        for i in 1..tr.len() {
            let cur = vr.eval(times[i], tr.state(i));
            let cur_w = win.push(times[i], cur);
            let (p, c, pw) = (prev.as_f64(), cur.as_f64(), prev_w.as_f64());
            let ratio = if p > 0.0 { pw / p } else { f64::INFINITY };
            let witness = || MonotonicityWitness {
                trajectory: k,
                t: times[i - 1].as_f64(),
                before: p,
                after: c,
                window_ratio: ratio,
            };
            let inc = rel_increase(p, c);
            point.add(inc, rel_slack, witness);
            if a.eval(prev_w) <= prev {
                guarded_steps += 1;
                guarded.add(inc, rel_slack, witness);
            }
            window.add(rel_increase(pw, cur_w.as_f64()), rel_slack, || {
                MonotonicityWitness {
                    trajectory: k,
                    t: times[i - 1].as_f64(),
                    before: pw,
                    after: cur_w.as_f64(),
                    window_ratio: ratio,
                }
            });
            prev = cur;
            prev_w = cur_w;
        }
        nodes += tr.len();
    }
    MonotonicityReport {
        trajectories: trajs.len(),
        nodes,
        rel_slack,
        pointwise_increases: point.count,
        pointwise_worst: point.worst,
        pointwise_witness: point.witness.map(|(_, w)| w),
        guarded_steps,
        guarded_increases: guarded.count,
        guarded_worst: guarded.worst,
        guarded_witness: guarded.witness.map(|(_, w)| w),
        window_increases: window.count,
        window_worst: window.worst,
        window_witness: window.witness.map(|(_, w)| w),
        blew_up,
    }
}

impl<T: Real> ExampleBundle<T> {
    /// Checks every certificate with the bundle's own context.
    pub fn check_all(&self, seed: u64) -> Result<Vec<CertificateOutcome>> {
        self.check_all_with(&self.context, seed)
    }

    pub fn check_all_with(&self, ctx: &CheckContext, seed: u64) -> Result<Vec<CertificateOutcome>> {
        (0..self.certificates.len())
            .map(|i| self.check(i, ctx, seed))
            .collect()
    }

    /// Checks certificate `index`; the seed for it is derived from `seed`
    /// and the index.
    pub fn check(&self, index: usize, ctx: &CheckContext, seed: u64) -> Result<CertificateOutcome> {
        let cert = &self.certificates[index];
        let seed = rng::derive(seed, index as u64);
        let mut spec = ctx.sampler.clone();
        spec.seed = seed;
        let sys = &self.system;
        let (observed, pass, report) = match cert {
            Certificate::LyapunovIos {
                v,
                rho,
                zeta,
                delta,
                expected,
                ..
            } => {
                let rep = check_lyapunov_ios(sys, v, zeta, delta, rho, &spec)?;
                (
                    rep.verdict.to_string(),
                    rep.verdict == *expected,
                    serde_json::to_value(&rep),
                )
            }
            Certificate::Dissipation {
                v, bound, expected, ..
            } => {
                let rep = check_dissipation(sys, v, bound, None, &spec)?;
                (
                    rep.verdict.to_string(),
                    rep.verdict == *expected,
                    serde_json::to_value(&rep),
                )
            }
            Certificate::Razumikhin {
                vr,
                a,
                bound,
                guard,
                expected,
                ..
            } => {
                let rep = check_razumikhin_with(sys, vr, a, bound, guard.as_ref(), &spec)?;
                (
                    rep.verdict.to_string(),
                    rep.verdict == *expected,
                    serde_json::to_value(&rep),
                )
            }
            Certificate::IosEnvelope {
                gamma,
                delta,
                extra,
                expected,
                ..
            } => {
                let calib = sample_ensemble(sys, ctx, rng::derive(seed, SALT_CALIBRATION), false)?;
                let one = ComparisonFn::constant(T::one());
                let sigma = fit_kl_envelope(&calib, &one)?;
                let mut valid =
                    sample_ensemble(sys, ctx, rng::derive(seed, SALT_VALIDATION), true)?;
                if let Some(sc) = extra {
                    valid.push(sc.run(sys, T::lit(ctx.horizon), &ctx.integrate)?);
                }
                let chk = verify_ios_envelope(&valid, &sigma, &one, gamma, delta);
                let ok = chk.verdict == *expected
                    && (chk.verdict != CheckVerdict::Fail || chk.witness.is_some());
                (
                    verdict_name(chk.verdict).to_string(),
                    ok,
                    serde_json::to_value(&chk),
                )
            }
            Certificate::Divergence {
                scenario,
                threshold,
                by,
                ..
            } => {
                let tr = scenario.run(sys, T::lit(*by), &ctx.integrate)?;
                let crossing = (0..tr.len())
                    .find(|&i| tr.output_norm(i).as_f64() > *threshold)
                    .map(|i| tr.times()[i].as_f64());
                let peak = tr
                    .output_norms()
                    .iter()
                    .fold(0.0f64, |m, y| m.max(y.as_f64()));
                let observed = if crossing.is_some() {
                    "diverged"
                } else {
                    "bounded"
                };
                (
                    observed.to_string(),
                    crossing.is_some(),
                    Ok(serde_json::json!({
                        "threshold": threshold,
                        "by": by,
                        "crossing_time": crossing,
                        "peak_output": peak,
                        "status": tr.status(),
                    })),
                )
            }
            Certificate::Nonincreasing {
                vr, a, rel_slack, ..
            } => {
                let trajs = sample_ensemble(sys, ctx, seed, false)?;
                let rep = check_nonincreasing(vr, a, &trajs, *rel_slack);
                let ok =
                    rep.guarded_increases == 0 && rep.window_increases == 0 && rep.blew_up == 0;
                let observed = if ok { "nonincreasing" } else { "increase" };
                (observed.to_string(), ok, serde_json::to_value(&rep))
            }
        };
        Ok(CertificateOutcome {
            index,
            checker: cert.checker().into(),
            label: cert.label().into(),
            expected: cert.expected(),
            observed,
            pass,
            report: report
                .map_err(|e| crate::error::Error::Config(format!("report encoding: {e}")))?,
        })
    }
}
