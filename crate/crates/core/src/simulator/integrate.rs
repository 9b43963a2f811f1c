use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::system::{OutputMap, RfdeSystem};
use super::track::{Track, View};
use crate::error::{Error, Result};
use crate::history::{HistoryAccess, HistorySegment};
use crate::scalar::{self, Real};
use crate::signals::PiecewiseSignal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrateOptions {
    /// Requested step; the step used is `r / ceil(r / step)`.
    pub step: f64,
    /// `|x(t)|` above which integration stops with a blow-up status.
    pub blowup_norm: f64,
    /// When positive, the step at time `t` is `h·e^{−step_decay·(t − t₀)}`
    /// with `h` as above, for systems whose stiffness grows like
    /// `e^{step_decay·t}`. The grid is then no longer commensurate with `r`.
    pub step_decay: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            step: 1e-2,
            blowup_norm: 1e9,
            step_decay: 0.0,
        }
    }
}

impl IntegrateOptions {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Completed,
    BlewUp { t: f64 },
    StepFailure { t: f64 },
}

/// Integrated solution with its dense history.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    t0: T,
    delay: T,
    initial: HistorySegment<T>,
    track: Track<T>,
    output_dim: usize,
    history_output: bool,
    /// Row-major vector outputs (empty for history-valued outputs).
    outputs: Vec<T>,
    output_norms: Vec<T>,
    u: PiecewiseSignal<T>,
    d: PiecewiseSignal<T>,
    status: TrajectoryStatus,
}

/// Monotone-deque sliding maximum over a window of fixed length.
pub(crate) struct SlidingMax<T: Real> {
    width: T,
    q: VecDeque<(T, T)>,
}

impl<T: Real> SlidingMax<T> {
    pub fn new(width: T) -> Self {
        Self {
            width,
            q: VecDeque::new(),
        }
    }

    /// Adds the sample `(time, value)` and returns the maximum over
    /// `[time − width, time]`. Times must be nondecreasing.
    pub fn push(&mut self, time: T, value: T) -> T {
        while self.q.back().is_some_and(|(_, v)| *v <= value) {
            self.q.pop_back();
        }
        self.q.push_back((time, value));
        let cutoff = time - self.width - T::lit(1e-12) * (T::one() + time.abs());
        while self.q.front().is_some_and(|(s, _)| *s < cutoff) {
            self.q.pop_front();
        }
        self.q.front().map(|(_, v)| *v).unwrap_or(value)
    }
}

/// Time grid: the delay-commensurate lattice from `t0` (or the decaying
/// schedule) merged with the signal switch times.
fn time_grid<T: Real>(
    t0: T,
    t_end: T,
    h: T,
    decay: T,
    u: &PiecewiseSignal<T>,
    d: &PiecewiseSignal<T>,
) -> Vec<T> {
    let mut grid = Vec::new();
    if decay > T::zero() {
        let mut t = t0;
        while t < t_end {
            grid.push(t);
            t = t + h * (-decay * (t - t0)).exp();
        }
    } else {
        let mut k = 0usize;
        loop {
            let t = t0 + h * T::count(k);
            if t >= t_end {
                break;
            }
            grid.push(t);
            k += 1;
        }
    }
    grid.push(t_end);
    let switches: Vec<T> = u
        .switches_between(t0, t_end)
        .chain(d.switches_between(t0, t_end))
        .collect();
    if !switches.is_empty() {
        grid.extend(switches);
        grid.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        let tol = T::lit(1e-12) * (T::one() + t_end.abs());
        grid.dedup_by(|a, b| *a - *b <= tol);
        if let Some(last) = grid.last_mut() {
            *last = t_end;
        }
    }
    grid
}

/// Integrates `sys` from the initial segment `x0` at `t0` to `t_end` with
/// classical RK4 (method of steps).
///
/// The step is `r / ceil(r / opts.step)`, and signal switch times are
/// added to the grid so the signals are constant on every step. Delayed
/// values are read from the cubic Hermite interpolant of the accepted
/// steps, or from `x0` before `t0`.
pub fn integrate<T: Real>(
    sys: &RfdeSystem<T>,
    t0: T,
    x0: &HistorySegment<T>,
    u: &PiecewiseSignal<T>,
    d: &PiecewiseSignal<T>,
    t_end: T,
    opts: &IntegrateOptions,
) -> Result<Trajectory<T>> {
    sys.check_history(x0)?;
    if u.dim() != sys.u_box().dim() {
        return Err(Error::Dimension {
            what: "input signal",
            expected: sys.u_box().dim(),
            got: u.dim(),
        });
    }
    if d.dim() != sys.d_box().dim() {
        return Err(Error::Dimension {
            what: "disturbance signal",
            expected: sys.d_box().dim(),
            got: d.dim(),
        });
    }
    if let Some(v) = u.values().iter().find(|v| !sys.u_box().contains(v)) {
        return Err(Error::Malformed {
            what: "input signal",
            reason: format!("value {v:?} outside the system's input box"),
        });
    }
    if let Some(v) = d.values().iter().find(|v| !sys.d_box().contains(v)) {
        return Err(Error::Malformed {
            what: "disturbance signal",
            reason: format!("value {v:?} outside the system's disturbance box"),
        });
    }
    if !(t_end > t0) || !t_end.is_finite() || !t0.is_finite() {
        return Err(Error::Domain {
            what: "t_end",
            value: t_end.as_f64(),
            lo: t0.as_f64(),
            hi: f64::INFINITY,
        });
    }
    if !(opts.step > 0.0) {
        return Err(Error::Config(format!(
            "step must be positive, got {}",
            opts.step
        )));
    }
    if !(opts.step_decay >= 0.0) || !opts.step_decay.is_finite() {
        return Err(Error::Config(format!(
            "step_decay must be finite and nonnegative, got {}",
            opts.step_decay
        )));
    }

    let r = sys.delay();
    let n = sys.dim();
    let steps_per_delay = (r.as_f64() / opts.step).ceil().max(1.0);
    let h = r / T::lit(steps_per_delay);
    let grid = time_grid(t0, t_end, h, T::lit(opts.step_decay), u, d);
    let blowup = T::lit(opts.blowup_norm);

    let mut track = Track::new(t0, x0.head());
    let output = sys.output().clone();
    let output_dim = output.dim();
    let history_output = output.is_history_valued();
    let mut outputs = Vec::new();
    let mut output_norms = Vec::with_capacity(grid.len());
    let mut window = SlidingMax::new(r);

    // Pointwise output norms along the initial segment feed the window.
    if let OutputMap::HistoryPointwise { map, .. } = &output {
        for (i, &g) in x0.grid().iter().enumerate() {
            if g < T::zero() {
                window.push(t0 + g, scalar::norm(&map(t0 + g, x0.value(i))));
            }
        }
    }
    let record = |track: &Track<T>,
                  t: T,
                  outputs: &mut Vec<T>,
                  norms: &mut Vec<T>,
                  window: &mut SlidingMax<T>| {
        let view = View {
            track,
            initial: x0,
            t0,
            t,
            delay: r,
            head: track.last_x().to_vec(),
            live: false,
        };
        match &output {
            OutputMap::HistoryPointwise { map, .. } => {
                norms.push(window.push(t, scalar::norm(&map(t, track.last_x()))));
            }
            other => {
                let y = other.value(t, &view).expect("vector output");
                norms.push(scalar::norm(&y));
                outputs.extend(y);
            }
        }
    };
    record(&track, t0, &mut outputs, &mut output_norms, &mut window);

    let mut status = TrajectoryStatus::Completed;
    let mut k1 = vec![T::zero(); n];
    let mut k2 = vec![T::zero(); n];
    let mut k3 = vec![T::zero(); n];
    let mut k4 = vec![T::zero(); n];
    let mut fe = vec![T::zero(); n];
    let mut y = vec![T::zero(); n];
    let half = T::lit(0.5);
    let sixth = T::lit(1.0 / 6.0);
    let two = T::lit(2.0);

    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let hs = b - a;
        let ua = u.eval(a).to_vec();
        let da = d.eval(a).to_vec();
        let xn = track.last_x().to_vec();

        let stage = |t: T, head: &[T], live: bool, out: &mut [T]| {
            let view = View {
                track: &track,
                initial: x0,
                t0,
                t,
                delay: r,
                head: head.to_vec(),
                live,
            };
            sys.eval_into(t, &view, &ua, &da, out);
        };
        let check = |v: &[T], t: T| -> Option<TrajectoryStatus> {
            if v.iter().any(|x| x.is_nan()) {
                Some(TrajectoryStatus::StepFailure { t: t.as_f64() })
            } else if v.iter().any(|x| x.is_infinite()) || scalar::norm(v) > blowup {
                Some(TrajectoryStatus::BlewUp { t: t.as_f64() })
            } else {
                None
            }
        };
        let nan_status = |v: &[T]| v.iter().any(|x| !x.is_finite());

        stage(a, &xn, false, &mut k1);
        if nan_status(&k1) {
            status = check(&k1, a).unwrap_or(TrajectoryStatus::StepFailure { t: a.as_f64() });
            break;
        }
        for i in 0..n {
            y[i] = xn[i] + half * hs * k1[i];
        }
        if let Some(s) = check(&y, a + half * hs) {
            status = s;
            break;
        }
        stage(a + half * hs, &y, true, &mut k2);
        for i in 0..n {
            y[i] = xn[i] + half * hs * k2[i];
        }
        if let Some(s) = check(&y, a + half * hs) {
            status = s;
            break;
        }
        stage(a + half * hs, &y, true, &mut k3);
        for i in 0..n {
            y[i] = xn[i] + hs * k3[i];
        }
        if let Some(s) = check(&y, b) {
            status = s;
            break;
        }
        stage(b, &y, true, &mut k4);
        for i in 0..n {
            y[i] = xn[i] + hs * sixth * (k1[i] + two * (k2[i] + k3[i]) + k4[i]);
        }
        if let Some(s) = check(&y, b) {
            if matches!(s, TrajectoryStatus::BlewUp { .. }) && y.iter().all(|v| v.is_finite()) {
                stage(b, &y, true, &mut fe);
                track.push(b, &y, &k1, &fe);
                record(&track, b, &mut outputs, &mut output_norms, &mut window);
            }
            status = s;
            break;
        }
        stage(b, &y, true, &mut fe);
        if fe.iter().any(|v| v.is_nan()) {
            status = TrajectoryStatus::StepFailure { t: b.as_f64() };
            break;
        }
        track.push(b, &y, &k1, &fe);
        record(&track, b, &mut outputs, &mut output_norms, &mut window);
    }

    Ok(Trajectory {
        t0,
        delay: r,
        initial: x0.clone(),
        track,
        output_dim,
        history_output,
        outputs,
        output_norms,
        u: u.clone(),
        d: d.clone(),
        status,
    })
}

impl<T: Real> Trajectory<T> {
    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn delay(&self) -> T {
        self.delay
    }

    pub fn dim(&self) -> usize {
        self.track.dim
    }

    pub fn len(&self) -> usize {
        self.track.len()
    }

    pub fn is_empty(&self) -> bool {
        self.track.len() == 0
    }

    pub fn times(&self) -> &[T] {
        &self.track.times
    }

    pub fn state(&self, i: usize) -> &[T] {
        self.track.x(i)
    }

    pub fn states(&self) -> impl Iterator<Item = &[T]> {
        self.track.xs.chunks(self.track.dim)
    }

    pub fn last_time(&self) -> T {
        self.track.last_time()
    }

    pub fn status(&self) -> TrajectoryStatus {
        self.status
    }

    pub fn completed(&self) -> bool {
        self.status == TrajectoryStatus::Completed
    }

    pub fn initial(&self) -> &HistorySegment<T> {
        &self.initial
    }

    pub fn input(&self) -> &PiecewiseSignal<T> {
        &self.u
    }

    pub fn disturbance(&self) -> &PiecewiseSignal<T> {
        &self.d
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn has_history_output(&self) -> bool {
        self.history_output
    }

    /// Vector output at node `i` (`None` for history-valued outputs).
    pub fn output(&self, i: usize) -> Option<&[T]> {
        if self.history_output {
            None
        } else {
            Some(&self.outputs[i * self.output_dim..(i + 1) * self.output_dim])
        }
    }

    /// `‖Y(t_i)‖` at node `i`; for history-valued outputs the maximum over
    /// the nodes in the window.
    pub fn output_norm(&self, i: usize) -> T {
        self.output_norms[i]
    }

    pub fn output_norms(&self) -> &[T] {
        &self.output_norms
    }

    /// `x(s)` for `t0 − r ≤ s ≤ last time`.
    pub fn state_at(&self, s: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        if s <= self.t0 {
            self.initial.eval_into(s - self.t0, &mut out);
        } else {
            self.track.eval_into(s.min(self.last_time()), &mut out);
        }
        out
    }

    /// History view `T_r(t)x` backed by the dense trajectory.
    pub fn view_at(&self, t: T) -> impl HistoryAccess<T> + '_ {
        View {
            track: &self.track,
            initial: &self.initial,
            t0: self.t0,
            t,
            delay: self.delay,
            head: self.state_at(t),
            live: false,
        }
    }

    /// `T_r(t)x` as a piecewise-linear segment through the trajectory nodes
    /// and the initial-segment knots in the window.
    pub fn history_at(&self, t: T) -> Result<HistorySegment<T>> {
        let view = self.view_at(t);
        let knots = view.knots();
        let mut values = Vec::with_capacity(knots.len() * self.dim());
        let mut buf = vec![T::zero(); self.dim()];
        for &th in &knots {
            view.eval_into(th, &mut buf);
            values.extend_from_slice(&buf);
        }
        HistorySegment::from_flat(self.delay, self.dim(), knots, values)
    }

    /// `∥T_r(t_i)x∥_r` at every node, from node values and initial knots.
    pub fn history_norms(&self) -> Vec<T> {
        let mut win = SlidingMax::new(self.delay);
        for (i, &g) in self.initial.grid().iter().enumerate() {
            if g < T::zero() {
                win.push(self.t0 + g, scalar::norm(self.initial.value(i)));
            }
        }
        (0..self.len())
            .map(|i| win.push(self.track.times[i], scalar::norm(self.track.x(i))))
            .collect()
    }

    /// CSV with columns `t, x_1..x_n, |x|, out_1..out_p` (or `out_norm`
    /// for history-valued outputs).
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",x_{i}"));
        }
        out.push_str(",|x|");
        if self.history_output {
            out.push_str(",out_norm");
        } else {
            for i in 1..=self.output_dim {
                out.push_str(&format!(",out_{i}"));
            }
        }
        out.push('\n');
        for i in 0..self.len() {
            out.push_str(&format!("{}", self.track.times[i]));
            let x = self.state(i);
            for v in x {
                out.push_str(&format!(",{v}"));
            }
            out.push_str(&format!(",{}", scalar::norm(x)));
            if self.history_output {
                out.push_str(&format!(",{}", self.output_norms[i]));
            } else {
                for v in self.output(i).expect("vector output") {
                    out.push_str(&format!(",{v}"));
                }
            }
            out.push('\n');
        }
        out
    }
}
