//! Dense storage of an integrated trajectory and history views onto it.
//!
//! Between accepted nodes the solution is represented by the cubic Hermite
//! interpolant built from the node values and the one-sided derivatives
//! computed by the integrator. Linear interpolation would cap the global
//! order of the method at two as soon as the dynamics read delayed values
//! between nodes.

use crate::history::{HistoryAccess, HistorySegment};
use crate::scalar::Real;

/// Fan-out of the cached interval-integral sums.
const BLOCK: usize = 32;

const GAUSS2: f64 = 0.577_350_269_189_625_8;

#[derive(Debug, Clone)]
pub(crate) struct Track<T: Real> {
    pub dim: usize,
    pub times: Vec<T>,
    /// Row-major node values.
    pub xs: Vec<T>,
    /// Left derivative at each node (unused at node 0).
    pub dl: Vec<T>,
    /// Right derivative at each node (unused at the last node).
    pub dr: Vec<T>,
    /// `levels[0]` holds `∫ x_k` over each interval, row-major by interval;
    /// entry `j` of `levels[l + 1]` is the sum of entries
    /// `jB..(j + 1)B` of `levels[l]`. Range sums only touch values inside the
    /// range, so no cancellation against earlier parts of the trajectory.
    levels: Vec<Vec<T>>,
}

impl<T: Real> Track<T> {
    pub fn new(t0: T, x0: &[T]) -> Self {
        let dim = x0.len();
        Self {
            dim,
            times: vec![t0],
            xs: x0.to_vec(),
            dl: vec![T::zero(); dim],
            dr: vec![T::zero(); dim],
            levels: vec![Vec::new()],
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn last_time(&self) -> T {
        *self.times.last().expect("track is never empty")
    }

    pub fn x(&self, i: usize) -> &[T] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    fn d_left(&self, i: usize) -> &[T] {
        &self.dl[i * self.dim..(i + 1) * self.dim]
    }

    fn d_right(&self, i: usize) -> &[T] {
        &self.dr[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last_x(&self) -> &[T] {
        self.x(self.len() - 1)
    }

    /// Appends a node reached from the previous one with right derivative
    /// `d_start` (at the previous node) and left derivative `d_end`.
    pub fn push(&mut self, t: T, x: &[T], d_start: &[T], d_end: &[T]) {
        let n = self.len();
        self.dr[(n - 1) * self.dim..n * self.dim].copy_from_slice(d_start);
        self.times.push(t);
        self.xs.extend_from_slice(x);
        self.dl.extend_from_slice(d_end);
        self.dr.extend(std::iter::repeat_n(T::zero(), self.dim));

        let i = n - 1;
        let h = t - self.times[i];
        let twelfth = T::lit(1.0 / 12.0);
        let half = T::lit(0.5);
        for k in 0..self.dim {
            let full = h * half * (self.x(i)[k] + self.x(i + 1)[k])
                + h * h * twelfth * (self.d_right(i)[k] - self.d_left(i + 1)[k]);
            self.levels[0].push(full);
        }
        let dim = self.dim;
        let mut l = 0;
        loop {
            let len = self.levels[l].len() / dim;
            if !len.is_multiple_of(BLOCK) {
                break;
            }
            if self.levels.len() == l + 1 {
                self.levels.push(Vec::new());
            }
            let start = len - BLOCK;
            for k in 0..dim {
                let s = (start..len).fold(T::zero(), |acc, j| acc + self.levels[l][j * dim + k]);
                self.levels[l + 1].push(s);
            }
            l += 1;
        }
    }

    /// Interval `i` with `times[i] ≤ s ≤ times[i+1]` (requires two nodes).
    fn interval(&self, s: T) -> usize {
        let n = self.len();
        self.times
            .partition_point(|t| *t <= s)
            .saturating_sub(1)
            .min(n - 2)
    }

    /// Hermite value of component `k` at `s` inside interval `i`.
    fn hermite(&self, i: usize, s: T, k: usize) -> T {
        let (a, b) = (self.times[i], self.times[i + 1]);
        if s == a {
            return self.x(i)[k];
        }
        if s == b {
            return self.x(i + 1)[k];
        }
        let h = b - a;
        let u = (s - a) / h;
        let u2 = u * u;
        let u3 = u2 * u;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * u3 - three * u2 + T::one();
        let h10 = u3 - two * u2 + u;
        let h01 = three * u2 - two * u3;
        let h11 = u3 - u2;
        h00 * self.x(i)[k]
            + h10 * h * self.d_right(i)[k]
            + h01 * self.x(i + 1)[k]
            + h11 * h * self.d_left(i + 1)[k]
    }

    pub fn eval_into(&self, s: T, out: &mut [T]) {
        if self.len() < 2 {
            out.copy_from_slice(self.x(0));
            return;
        }
        let i = self.interval(s);
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.hermite(i, s, k);
        }
    }

    /// `∫_a^b x_k` for `a ≤ b` inside one interval, two-point Gauss (exact
    /// for the cubic interpolant).
    fn partial(&self, i: usize, a: T, b: T, k: usize) -> T {
        if b <= a {
            return T::zero();
        }
        let half = T::lit(0.5);
        let mid = (a + b) * half;
        let rad = (b - a) * half;
        let g = T::lit(GAUSS2);
        rad * (self.hermite(i, mid - rad * g, k) + self.hermite(i, mid + rad * g, k))
    }

    /// Sum of full interval integrals `lo..hi`.
    fn sum_intervals(&self, lo: usize, hi: usize, k: usize) -> T {
        self.level_sum(0, lo, hi, k)
    }

    fn level_sum(&self, l: usize, lo: usize, hi: usize, k: usize) -> T {
        let v = &self.levels[l];
        let mut acc = T::zero();
        let mut j = lo;
        while j < hi && !j.is_multiple_of(BLOCK) {
            acc = acc + v[j * self.dim + k];
            j += 1;
        }
        let (bl, bh) = (j / BLOCK, hi / BLOCK);
        if bh > bl && l + 1 < self.levels.len() {
            acc = acc + self.level_sum(l + 1, bl, bh, k);
            j = bh * BLOCK;
        }
        while j < hi {
            acc = acc + v[j * self.dim + k];
            j += 1;
        }
        acc
    }

    /// `∫_a^b x_k` for `times[0] ≤ a ≤ b ≤ last_time`.
    pub fn integrate(&self, a: T, b: T, k: usize) -> T {
        if self.len() < 2 || b <= a {
            return T::zero();
        }
        let ia = self.interval(a);
        let ib = self.interval(b);
        if ia == ib {
            return self.partial(ia, a, b, k);
        }
        self.partial(ia, a, self.times[ia + 1], k)
            + self.sum_intervals(ia + 1, ib, k)
            + self.partial(ib, self.times[ib], b, k)
    }

    /// Indices of nodes with time in `(lo, hi)`.
    pub fn nodes_between(&self, lo: T, hi: T) -> std::ops::Range<usize> {
        let a = self.times.partition_point(|t| *t <= lo);
        let b = self.times.partition_point(|t| *t < hi);
        a..b.max(a)
    }
}

/// `T_r(t)x` for a trajectory under construction or completed.
///
/// When `live` is set, the solution on `(last node, t]` is the straight
/// line from the last node to `head` (an integrator stage value).
pub(crate) struct View<'a, T: Real> {
    pub track: &'a Track<T>,
    pub initial: &'a HistorySegment<T>,
    pub t0: T,
    pub t: T,
    pub delay: T,
    pub head: Vec<T>,
    pub live: bool,
}

impl<T: Real> View<'_, T> {
    fn linear_tail(&self, s: T, out: &mut [T]) {
        let a = self.track.last_time();
        let w = if self.t > a {
            (s - a) / (self.t - a)
        } else {
            T::one()
        };
        let base = self.track.last_x();
        for k in 0..out.len() {
            out[k] = base[k] + w * (self.head[k] - base[k]);
        }
    }
}

impl<T: Real> HistoryAccess<T> for View<'_, T> {
    fn delay(&self) -> T {
        self.delay
    }

    fn dim(&self) -> usize {
        self.track.dim
    }

    fn eval_into(&self, theta: T, out: &mut [T]) {
        let theta = theta.max(-self.delay).min(T::zero());
        if theta == T::zero() {
            out.copy_from_slice(&self.head);
            return;
        }
        let s = self.t + theta;
        if s <= self.t0 {
            self.initial.eval_into(s - self.t0, out);
        } else if self.live && s > self.track.last_time() {
            self.linear_tail(s, out);
        } else {
            self.track.eval_into(s, out);
        }
    }

    fn head(&self) -> &[T] {
        &self.head
    }

    fn knots(&self) -> Vec<T> {
        let lower = self.t - self.delay;
        let mut out = vec![-self.delay];
        if lower < self.t0 {
            for &g in self.initial.grid() {
                let th = g + self.t0 - self.t;
                if th > -self.delay && th < T::zero() {
                    out.push(th);
                }
            }
        }
        for i in self.track.nodes_between(lower.max(self.t0), self.t) {
            let th = self.track.times[i] - self.t;
            if th > -self.delay && th < T::zero() {
                out.push(th);
            }
        }
        out.push(T::zero());
        out.dedup_by(|a, b| !(*a > *b));
        out
    }

    fn integrate_component(&self, k: usize) -> T {
        let lower = self.t - self.delay;
        let mut acc = T::zero();
        if lower < self.t0 {
            acc = acc + initial_integral(self.initial, lower - self.t0, k);
        }
        let a = lower.max(self.t0);
        let last = self.track.last_time();
        let b = if self.live { self.t.min(last) } else { self.t };
        acc = acc + self.track.integrate(a, b, k);
        if self.live && self.t > last {
            let start = last.max(a);
            let half = T::lit(0.5);
            let mut lo = vec![T::zero(); self.track.dim];
            self.linear_tail(start, &mut lo);
            acc = acc + (self.t - start) * half * (lo[k] + self.head[k]);
        }
        acc
    }
}

/// `∫_{θa}^{0} x_k(θ) dθ` of a piecewise-linear segment.
fn initial_integral<T: Real>(seg: &HistorySegment<T>, theta_a: T, k: usize) -> T {
    let theta_a = theta_a.max(-seg.delay());
    let grid = seg.grid();
    let half = T::lit(0.5);
    let mut acc = T::zero();
    for i in 0..grid.len() - 1 {
        let (a, b) = (grid[i], grid[i + 1]);
        if b <= theta_a {
            continue;
        }
        let lo = a.max(theta_a);
        let va = seg.value(i)[k];
        let vb = seg.value(i + 1)[k];
        let w = (lo - a) / (b - a);
        let vlo = va + w * (vb - va);
        acc = acc + (b - lo) * half * (vlo + vb);
    }
    acc
}
