//! KL output envelopes and the max-form estimates along trajectories.

use serde::{Deserialize, Serialize};

use crate::compfn::{ComparisonFn, KlFn};
use crate::error::{Error, Result};
use crate::lyapunov::LyapunovFunctional;
use crate::scalar::{self, Real};
use crate::simulator::{CheckVerdict, Trajectory, TrajectoryStatus};

/// Slack below which an envelope check fails: `−1e-9·(1 + bound)`.
pub const ENVELOPE_TOLERANCE: f64 = 1e-9;

/// Worst point of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySlack {
    pub index: usize,
    pub t0: f64,
    /// Smallest `bound − value` over the grid.
    pub worst_slack: f64,
    pub t_worst: f64,
    pub blew_up: bool,
}

/// Grid point where an estimate failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeWitness {
    pub trajectory: usize,
    pub t0: f64,
    pub t: f64,
    pub value: f64,
    pub bound: f64,
    pub blew_up: bool,
}

/// Outcome of checking an estimate on a set of trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub verdict: CheckVerdict,
    pub sigma: String,
    pub beta: String,
    pub gamma: Option<String>,
    pub delta: Option<String>,
    pub trajectories: Vec<TrajectorySlack>,
    /// Smallest slack over all trajectories.
    pub worst_slack: f64,
    pub witness: Option<EnvelopeWitness>,
    pub tolerance: f64,
}

fn fails(slack: f64, bound: f64) -> bool {
    slack < -ENVELOPE_TOLERANCE * (1.0 + bound.abs())
}

/// Running `sup_{τ ≤ t} w(τ)` for piecewise-constant inputs sampled on the
/// trajectory grid; the value active on `[t_{i-1}, t_i)` is weighted at both
/// ends.
struct InputSup<'a, T: Real> {
    tr: &'a Trajectory<T>,
    weight: Box<dyn Fn(T, T) -> T + 'a>,
    current: T,
}

impl<'a, T: Real> InputSup<'a, T> {
    fn new(tr: &'a Trajectory<T>, weight: impl Fn(T, T) -> T + 'a) -> Self {
        Self {
            tr,
            weight: Box::new(weight),
            current: T::zero(),
        }
    }

    fn at(&mut self, i: usize) -> T {
        let times = self.tr.times();
        let u = self.tr.input();
        let t = times[i];
        let now = (self.weight)(t, scalar::norm(u.eval(t)));
        self.current = self.current.max(now);
        if i > 0 {
            let left = scalar::norm(u.eval(times[i - 1]));
            self.current = self.current.max((self.weight)(t, left));
        }
        self.current
    }
}

struct Accumulator {
    trajectories: Vec<TrajectorySlack>,
    witness: Option<(f64, EnvelopeWitness)>,
}

impl Accumulator {
    fn new() -> Self {
        Self {
            trajectories: Vec::new(),
            witness: None,
        }
    }

    /// Records the trajectory's `(t, value, bound)` triples.
    fn add(
        &mut self,
        index: usize,
        t0: f64,
        status: TrajectoryStatus,
        points: impl Iterator<Item = (f64, f64, f64)>,
    ) {
        let mut slack = TrajectorySlack {
            index,
            t0,
            worst_slack: f64::INFINITY,
            t_worst: t0,
            blew_up: false,
        };
        let mut last = None;
        for (t, value, bound) in points {
            let s = bound - value;
            if s < slack.worst_slack {
                slack.worst_slack = s;
                slack.t_worst = t;
            }
            if fails(s, bound) {
                let excess = -s / (1.0 + bound.abs());
                if self.witness.as_ref().is_none_or(|(e, _)| excess > *e) {
                    self.witness = Some((
                        excess,
                        EnvelopeWitness {
                            trajectory: index,
                            t0,
                            t,
                            value,
                            bound,
                            blew_up: false,
                        },
                    ));
                }
            }
            last = Some((t, value, bound));
        }
        if let TrajectoryStatus::BlewUp { t } | TrajectoryStatus::StepFailure { t } = status {
            slack.blew_up = true;
            let (value, bound) = last.map_or((f64::INFINITY, 0.0), |(_, v, b)| (v, b));
            if self.witness.as_ref().is_none_or(|(_, w)| !w.blew_up) {
                self.witness = Some((
                    f64::INFINITY,
                    EnvelopeWitness {
                        trajectory: index,
                        t0,
                        t,
                        value,
                        bound,
                        blew_up: true,
                    },
                ));
            }
        }
        self.trajectories.push(slack);
    }

    fn finish(
        self,
        sigma: String,
        beta: String,
        gamma: Option<String>,
        delta: Option<String>,
    ) -> EnvelopeCheck {
        let worst_slack = self
            .trajectories
            .iter()
            .map(|s| s.worst_slack)
            .fold(f64::INFINITY, f64::min);
        EnvelopeCheck {
            verdict: if self.witness.is_some() {
                CheckVerdict::Fail
            } else {
                CheckVerdict::Pass
            },
            sigma,
            beta,
            gamma,
            delta,
            trajectories: self.trajectories,
            worst_slack: if worst_slack.is_finite() {
                worst_slack
            } else {
                0.0
            },
            witness: self.witness.map(|(_, w)| w),
            tolerance: ENVELOPE_TOLERANCE,
        }
    }
}

/// Output norm at grid index `i`, replacing the recorded one.
pub type OutputNorm<'a, T> = &'a dyn Fn(&Trajectory<T>, usize) -> T;

/// `‖H(t)‖ ≤ σ(β(t₀)‖x₀‖_r, t − t₀)` at every grid time.
///
/// `output_norm` overrides the trajectory's recorded output norms when
/// given. A trajectory that did not complete fails with a blow-up witness.
pub fn verify_rgaos_envelope<T: Real>(
    trajs: &[Trajectory<T>],
    sigma: &KlFn<T>,
    beta: &ComparisonFn<T>,
    output_norm: Option<OutputNorm<'_, T>>,
) -> EnvelopeCheck {
    let mut acc = Accumulator::new();
    for (k, tr) in trajs.iter().enumerate() {
        let t0 = tr.t0();
        let s = beta.eval(t0) * tr.initial().sup_norm();
        let points = (0..tr.len()).map(|i| {
            let t = tr.times()[i];
            let y = output_norm.map_or_else(|| tr.output_norm(i), |f| f(tr, i));
            (t.as_f64(), y.as_f64(), sigma.eval(s, t - t0).as_f64())
        });
        acc.add(k, t0.as_f64(), tr.status(), points);
    }
    acc.finish(sigma.name().into(), beta.name().into(), None, None)
}

/// `‖H(t)‖ ≤ max{σ(β(t₀)‖x₀‖_r, t − t₀), sup_{t₀≤τ≤t} γ(δ(τ)|u(τ)|)}` at
/// every grid time, with the input recorded on each trajectory.
pub fn verify_ios_envelope<T: Real>(
    trajs: &[Trajectory<T>],
    sigma: &KlFn<T>,
    beta: &ComparisonFn<T>,
    gamma: &ComparisonFn<T>,
    delta: &ComparisonFn<T>,
) -> EnvelopeCheck {
    let mut acc = Accumulator::new();
    for (k, tr) in trajs.iter().enumerate() {
        let t0 = tr.t0();
        let s = beta.eval(t0) * tr.initial().sup_norm();
        let mut sup = InputSup::new(tr, |t, u| gamma.eval(delta.eval(t) * u));
        let points: Vec<(f64, f64, f64)> = (0..tr.len())
            .map(|i| {
                let t = tr.times()[i];
                let bound = sigma.eval(s, t - t0).max(sup.at(i));
                (t.as_f64(), tr.output_norm(i).as_f64(), bound.as_f64())
            })
            .collect();
        acc.add(k, t0.as_f64(), tr.status(), points.into_iter());
    }
    acc.finish(
        sigma.name().into(),
        beta.name().into(),
        Some(gamma.name().into()),
        Some(delta.name().into()),
    )
}

/// Pieces `(τ, w)` whose term `σ(w, t − τ)` is not dominated by a later
/// piece with at least the same weight.
struct Dominant<T: Real> {
    stack: Vec<(T, T)>,
}

impl<T: Real> Dominant<T> {
    fn push(&mut self, tau: T, w: T) {
        if w <= T::zero() {
            return;
        }
        while self.stack.last().is_some_and(|(_, v)| *v <= w) {
            self.stack.pop();
        }
        self.stack.push((tau, w));
    }

    fn sup(&self, sigma: &KlFn<T>, t: T) -> T {
        self.stack
            .iter()
            .map(|&(tau, w)| sigma.eval(w, t - tau))
            .fold(T::zero(), T::max)
    }
}

/// `V(t, T_r(t)x) ≤ max{σ(a(β(t₀)‖x₀‖_r), t − t₀), sup_τ σ(ζ(δ(τ)|u(τ)|), t − τ)}`
/// at every grid time.
#[allow(clippy::too_many_arguments)]
pub fn verify_v_decay_estimate<T: Real>(
    v: &LyapunovFunctional<T>,
    a: &ComparisonFn<T>,
    beta: &ComparisonFn<T>,
    zeta: &ComparisonFn<T>,
    delta: &ComparisonFn<T>,
    sigma: &KlFn<T>,
    trajs: &[Trajectory<T>],
) -> Result<EnvelopeCheck> {
    let mut acc = Accumulator::new();
    for (k, tr) in trajs.iter().enumerate() {
        let t0 = tr.t0();
        let s = a.eval(beta.eval(t0) * tr.initial().sup_norm());
        let mut dom = Dominant { stack: Vec::new() };
        let times = tr.times();
        let u = tr.input();
        let mut points = Vec::with_capacity(tr.len());
        for i in 0..tr.len() {
            let t = times[i];
            dom.push(t, zeta.eval(delta.eval(t) * scalar::norm(u.eval(t))));
            if i > 0 {
                let left = scalar::norm(u.eval(times[i - 1]));
                dom.push(t, zeta.eval(delta.eval(t) * left));
            }
            let x = tr.history_at(t)?;
            let val = v.eval(t, &x);
            if !val.is_finite() {
                return Err(Error::Evaluation {
                    what: v.name().to_string(),
                    at: t.as_f64(),
                });
            }
            let bound = sigma.eval(s, t - t0).max(dom.sup(sigma, t));
            points.push((t.as_f64(), val.as_f64(), bound.as_f64()));
        }
        acc.add(k, t0.as_f64(), tr.status(), points.into_iter());
    }
    Ok(acc.finish(
        sigma.name().into(),
        beta.name().into(),
        Some(zeta.name().into()),
        Some(delta.name().into()),
    ))
}

/// `max_i ‖x(t_i)‖` over a trajectory, the initial segment included.
pub fn max_state_norm<T: Real>(tr: &Trajectory<T>) -> T {
    tr.states()
        .map(scalar::norm)
        .fold(tr.initial().sup_norm(), T::max)
}
