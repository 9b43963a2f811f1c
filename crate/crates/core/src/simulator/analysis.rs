//! Sampled regularity and completeness checks on systems.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrate::{integrate, IntegrateOptions, SlidingMax, Trajectory};
use super::system::RfdeSystem;
use crate::error::Result;
use crate::history::{HistoryAccess, HistorySampler, HistorySegment};
use crate::rng;
use crate::scalar::{self, Real};
use crate::signals::{PiecewiseSignal, SignalSpec};

/// Safety factor applied to sampled Lipschitz quotients.
pub const MODULI_INFLATION: f64 = 1.5;

/// Time window and history-norm bound of a sampling region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub t_lo: f64,
    pub t_hi: f64,
    pub norm_bound: f64,
}

impl Region {
    pub fn new(t_lo: f64, t_hi: f64, norm_bound: f64) -> Self {
        Self {
            t_lo,
            t_hi,
            norm_bound,
        }
    }

    pub(crate) fn sample_t<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.t_hi > self.t_lo {
            self.t_lo + (self.t_hi - self.t_lo) * rng.random::<f64>()
        } else {
            self.t_lo
        }
    }
}

/// Sampled estimates of the one-sided Lipschitz constant of `f`, the
/// Lipschitz constant of `H`, and the input Lipschitz constant of `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzModuli {
    pub l_hat: f64,
    pub l_h_hat: f64,
    pub l_u_hat: f64,
    pub region: Region,
    pub samples: usize,
    /// No usable pair was drawn; the moduli are placeholders.
    pub low_confidence: bool,
}

fn quotient<T: Real>(num: T, den: T) -> f64 {
    if den > T::zero() {
        (num / den).as_f64()
    } else {
        0.0
    }
}

/// Perturbation of `x` by a small random history.
fn nearby<T: Real, R: Rng + ?Sized>(
    x: &HistorySegment<T>,
    scale: f64,
    rng: &mut R,
) -> HistorySegment<T> {
    let sampler = HistorySampler::new(scale);
    let p: HistorySegment<T> = sampler.sample(x.delay(), x.dim(), rng);
    let grid: Vec<T> = {
        let mut g: Vec<T> = x.grid().iter().chain(p.grid()).copied().collect();
        g.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        g.dedup();
        g
    };
    let mut values = Vec::with_capacity(grid.len() * x.dim());
    for &th in &grid {
        let a = x.eval(th).expect("grid inside window");
        let b = p.eval(th).expect("grid inside window");
        values.extend(a.iter().zip(&b).map(|(u, v)| *u + *v));
    }
    HistorySegment::from_flat(x.delay(), x.dim(), grid, values).expect("valid perturbation")
}

/// Maximum sampled quotients over `samples` random pairs in `region`,
/// inflated by [`MODULI_INFLATION`].
///
/// Half of the pairs are independent draws from the ball, half are a draw
/// and a perturbation of relative size `1e-3`.
pub fn estimate_lipschitz_moduli<T: Real>(
    sys: &RfdeSystem<T>,
    region: Region,
    samples: usize,
    seed: u64,
) -> LipschitzModuli {
    let sampler = HistorySampler::new(region.norm_bound);
    let r = sys.delay();
    let n = sys.dim();
    let results: Vec<Option<(f64, f64, f64)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut g = rng::stream(seed, i as u64);
            let x: HistorySegment<T> = sampler.sample(r, n, &mut g);
            let y = if i % 2 == 0 {
                sampler.sample(r, n, &mut g)
            } else {
                nearby(&x, 1e-3 * region.norm_bound.max(1e-12), &mut g)
            };
            let t = T::lit(region.sample_t(&mut g));
            let tau = if i % 4 < 2 {
                t
            } else {
                T::lit(region.sample_t(&mut g))
            };
            let u = sys.u_box().sample(&mut g);
            let v = sys.u_box().sample(&mut g);
            let d = sys.d_box().sample(&mut g);
            let dist = x.distance(&y).ok()?;
            let fx = sys.eval(t, &x, &u, &d);
            let fy = sys.eval(t, &y, &u, &d);
            let fv = sys.eval(t, &x, &v, &d);
            if !(scalar::all_finite(&fx) && scalar::all_finite(&fy) && scalar::all_finite(&fv)) {
                return None;
            }
            let dx0: Vec<T> = x
                .head()
                .iter()
                .zip(y.head())
                .map(|(a, b)| *a - *b)
                .collect();
            let df: Vec<T> = fx.iter().zip(&fy).map(|(a, b)| *a - *b).collect();
            let l = quotient(scalar::dot(&dx0, &df), dist * dist);
            let hd = sys.output().distance(t, &x, tau, &y);
            let lh = quotient(hd, (t - tau).abs() + dist);
            let lu = quotient(scalar::distance(&fx, &fv), scalar::distance(&u, &v));
            Some((l, lh, lu))
        })
        .collect();
    let used: Vec<(f64, f64, f64)> = results.into_iter().flatten().collect();
    let fold = |f: fn(&(f64, f64, f64)) -> f64| {
        used.iter().map(f).fold(0.0f64, f64::max) * MODULI_INFLATION
    };
    LipschitzModuli {
        l_hat: fold(|q| q.0),
        l_h_hat: fold(|q| q.1),
        l_u_hat: fold(|q| q.2),
        region,
        samples: used.len(),
        low_confidence: used.is_empty(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckVerdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub verdict: CheckVerdict,
    /// Largest `∥T_r(t)(x − y)∥_r / (∥x0 − y0∥_r e^{L̂(t − t0)})`.
    pub worst_ratio: f64,
    pub worst_t: f64,
    pub initial_distance: f64,
    pub l_hat: f64,
}

/// Ratio tolerance absorbing rounding in the continuity check.
pub const CONTINUITY_RATIO_TOLERANCE: f64 = 1e-9;

/// Checks `∥T_r(t)(x − y)∥_r ≤ ∥x0 − y0∥_r exp(L̂ (t − t0))` on the common
/// grid of two trajectories driven by the same signals.
#[allow(clippy::too_many_arguments)]
pub fn check_continuity_bound<T: Real>(
    sys: &RfdeSystem<T>,
    t0: T,
    x0: &HistorySegment<T>,
    y0: &HistorySegment<T>,
    u: &PiecewiseSignal<T>,
    d: &PiecewiseSignal<T>,
    t1: T,
    moduli: &LipschitzModuli,
    opts: &IntegrateOptions,
) -> Result<ContinuityReport> {
    let x = integrate(sys, t0, x0, u, d, t1, opts)?;
    let y = integrate(sys, t0, y0, u, d, t1, opts)?;
    let initial_distance = x0.distance(y0)?;
    let mut report = ContinuityReport {
        verdict: CheckVerdict::Inconclusive,
        worst_ratio: 0.0,
        worst_t: t0.as_f64(),
        initial_distance: initial_distance.as_f64(),
        l_hat: moduli.l_hat,
    };
    if !(x.completed() && y.completed()) || x.len() != y.len() {
        return Ok(report);
    }
    report.verdict = CheckVerdict::Pass;
    let r = sys.delay();
    let mut win = SlidingMax::new(r);
    let mut a = vec![T::zero(); sys.dim()];
    let mut b = vec![T::zero(); sys.dim()];
    let mut thetas: Vec<T> = x0.grid().iter().chain(y0.grid()).copied().collect();
    thetas.sort_by(|p, q| p.partial_cmp(q).expect("finite"));
    thetas.dedup();
    for &th in &thetas {
        if th < T::zero() {
            x0.eval_into(th, &mut a);
            y0.eval_into(th, &mut b);
            win.push(t0 + th, scalar::distance(&a, &b));
        }
    }
    for i in 0..x.len() {
        let t = x.times()[i];
        let diff = win.push(t, scalar::distance(x.state(i), y.state(i)));
        let bound = initial_distance * (T::lit(moduli.l_hat) * (t - t0)).exp();
        let ratio = if bound > T::zero() {
            (diff / bound).as_f64()
        } else if diff == T::zero() {
            0.0
        } else {
            f64::INFINITY
        };
        if ratio > report.worst_ratio {
            report.worst_ratio = ratio;
            report.worst_t = t.as_f64();
        }
    }
    if report.worst_ratio > 1.0 + CONTINUITY_RATIO_TOLERANCE {
        report.verdict = CheckVerdict::Fail;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RfcVerdict {
    NoCounterexample,
    BlowUpWitness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfcWitness {
    pub member: usize,
    pub t0: f64,
    pub initial_norm: f64,
    /// Time of the blow-up or step failure.
    pub t_fail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfcReport {
    pub verdict: RfcVerdict,
    /// Largest `∥T_r(t0 + ξ)x∥_r` observed, `ξ ∈ [0, T]`, over completed runs.
    pub max_norm: f64,
    pub runs: usize,
    pub witness: Option<RfcWitness>,
}

/// Integrates an ensemble with `∥x0∥_r ≤ s`, `t0 ∈ [0, T]` over `[t0, t0 + T]`
/// and reports the largest history norm or a finite-escape witness.
///
/// The first members use constant initial segments of norm `s` along
/// `±e_k` with constant corner signals; the rest are random.
pub fn check_rfc<T: Real>(
    sys: &RfdeSystem<T>,
    s: T,
    horizon: T,
    ensemble: usize,
    seed: u64,
    opts: &IntegrateOptions,
) -> Result<RfcReport> {
    let n = sys.dim();
    let r = sys.delay();
    let d_corners = PiecewiseSignal::corners(sys.d_box());
    let u_corners = PiecewiseSignal::corners(sys.u_box());
    let sampler = HistorySampler::new(s.as_f64());
    let dwell = T::lit((horizon.as_f64() / 4.0).max(r.as_f64()));
    let span = horizon.max(r);
    let members: Vec<Result<(Option<RfcWitness>, f64)>> = (0..ensemble.max(1))
        .into_par_iter()
        .map(|i| {
            let mut g = rng::stream(seed, i as u64);
            let structured = 2 * n;
            let (x0, d, u) = if i < structured {
                let mut v = vec![T::zero(); n];
                v[i / 2] = if i % 2 == 0 { s } else { -s };
                (
                    HistorySegment::constant(r, &v)?,
                    d_corners[i % d_corners.len()].clone(),
                    u_corners[i % u_corners.len()].clone(),
                )
            } else {
                let dspec = SignalSpec {
                    domain: sys.d_box().clone(),
                    horizon: T::lit(2.0) * span + T::one(),
                    mean_dwell: dwell,
                    seed: rng::derive(seed, 1),
                };
                let uspec = SignalSpec {
                    domain: sys.u_box().clone(),
                    ..dspec.clone()
                };
                let uspec = SignalSpec {
                    seed: rng::derive(seed, 2),
                    ..uspec
                };
                (
                    sampler.sample(r, n, &mut g),
                    dspec.sample_nth(i as u64),
                    uspec.sample_nth(i as u64),
                )
            };
            let t0 = if i == 0 {
                T::zero()
            } else {
                horizon * T::lit(g.random::<f64>())
            };
            let init_norm = x0.sup_norm();
            if horizon <= T::zero() {
                return Ok((None, init_norm.as_f64()));
            }
            let traj: Trajectory<T> = integrate(sys, t0, &x0, &u, &d, t0 + horizon, opts)?;
            let peak = traj
                .history_norms()
                .into_iter()
                .fold(T::zero(), T::max)
                .as_f64();
            let witness = match traj.status() {
                super::TrajectoryStatus::Completed => None,
                super::TrajectoryStatus::BlewUp { t }
                | super::TrajectoryStatus::StepFailure { t } => Some(RfcWitness {
                    member: i,
                    t0: t0.as_f64(),
                    initial_norm: init_norm.as_f64(),
                    t_fail: t,
                }),
            };
            Ok((witness, peak))
        })
        .collect();
    let mut report = RfcReport {
        verdict: RfcVerdict::NoCounterexample,
        max_norm: 0.0,
        runs: 0,
        witness: None,
    };
    for m in members {
        let (w, peak) = m?;
        report.runs += 1;
        match w {
            Some(w) if report.witness.is_none() => {
                report.verdict = RfcVerdict::BlowUpWitness;
                report.witness = Some(w);
            }
            Some(_) => {}
            None => report.max_norm = report.max_norm.max(peak),
        }
    }
    Ok(report)
}

/// Worst sampled violations of the structural assumptions on a system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemInvariantReport {
    /// `max |f(t, 0, 0, d)|`.
    pub zero_dynamics: f64,
    /// `max ‖H(t, 0)‖`.
    pub zero_output: f64,
    /// Largest relative periodicity defect, when a period is declared.
    pub periodicity: Option<f64>,
    pub pass: bool,
}

/// Tolerance of [`check_system_invariants`].
pub const SYSTEM_INVARIANT_TOLERANCE: f64 = 1e-9;

/// Samples `t ∈ [0, 10]`, disturbances and histories to check that zero is
/// an equilibrium with zero output and, if declared, `T`-periodicity.
pub fn check_system_invariants<T: Real>(
    sys: &RfdeSystem<T>,
    samples: usize,
    seed: u64,
) -> Result<SystemInvariantReport> {
    let r = sys.delay();
    let n = sys.dim();
    let zero = HistorySegment::zeros(r, n)?;
    let u0 = vec![T::zero(); sys.u_box().dim()];
    let sampler = HistorySampler::new(1.0);
    let mut report = SystemInvariantReport {
        zero_dynamics: 0.0,
        zero_output: 0.0,
        periodicity: sys.period().map(|_| 0.0),
        pass: true,
    };
    for i in 0..samples {
        let mut g = rng::stream(seed, i as u64);
        let t = T::lit(10.0 * g.random::<f64>());
        let d = sys.d_box().sample(&mut g);
        let f0 = sys.eval(t, &zero, &u0, &d);
        report.zero_dynamics = report.zero_dynamics.max(scalar::norm(&f0).as_f64());
        report.zero_output = report.zero_output.max(sys.output_norm(t, &zero).as_f64());
        if let Some(p) = sys.period() {
            let x: HistorySegment<T> = sampler.sample(r, n, &mut g);
            let u = sys.u_box().sample(&mut g);
            let a = sys.eval(t, &x, &u, &d);
            let b = sys.eval(t + p, &x, &u, &d);
            let defect = scalar::distance(&a, &b) / (T::one() + scalar::norm(&a));
            let ha = sys.output_norm(t, &x);
            let hb = sys.output_norm(t + p, &x);
            let hdef = (ha - hb).abs() / (T::one() + ha);
            let worst = defect.max(hdef).as_f64();
            report.periodicity = Some(report.periodicity.unwrap_or(0.0).max(worst));
        }
    }
    report.pass = report.zero_dynamics <= SYSTEM_INVARIANT_TOLERANCE
        && report.zero_output <= SYSTEM_INVARIANT_TOLERANCE
        && report
            .periodicity
            .is_none_or(|p| p <= SYSTEM_INVARIANT_TOLERANCE);
    Ok(report)
}
