//! State histories on the delay window `[-r, 0]`.
//!
//! A [`HistorySegment`] stores a continuous function `[-r, 0] -> R^n` as a
//! strictly increasing grid of offsets with one vector per offset and linear
//! interpolation in between. The integrator exposes its dense trajectory
//! through the same [`HistoryAccess`] trait, so system dynamics and output
//! maps are written once against the trait.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{self, Real};

/// Number of uniform grid points used by the convenience constructors.
pub const DEFAULT_POINTS: usize = 64;

/// Slack allowed when checking that an offset lies inside `[-r, 0]`.
pub const OFFSET_TOLERANCE: f64 = 1e-12;

const GAUSS2: f64 = 0.577_350_269_189_625_8;
const GAUSS3_NODE: f64 = 0.774_596_669_241_483_4;

/// Read access to an r-history `x(θ), θ ∈ [-r, 0]`.
pub trait HistoryAccess<T: Real> {
    fn delay(&self) -> T;

    fn dim(&self) -> usize;

    /// Writes `x(θ)` into `out`. Offsets outside `[-r, 0]` are clamped.
    fn eval_into(&self, theta: T, out: &mut [T]);

    /// The current value `x(0)`.
    fn head(&self) -> &[T];

    /// Breakpoints of the representation, increasing, from `-r` to `0`.
    fn knots(&self) -> Vec<T>;

    fn at(&self, theta: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        self.eval_into(theta, &mut out);
        out
    }

    fn component_at(&self, theta: T, k: usize) -> T {
        self.at(theta)[k]
    }

    /// `∫_{-r}^{0} x_k(θ) dθ`, exact for piecewise polynomials of degree ≤ 3
    /// between knots.
    fn integrate_component(&self, k: usize) -> T {
        let knots = self.knots();
        let half = T::lit(0.5);
        let g = T::lit(GAUSS2);
        let mut acc = T::zero();
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = (a + b) * half;
            let rad = (b - a) * half;
            acc = acc
                + rad * (self.component_at(mid - rad * g, k) + self.component_at(mid + rad * g, k));
        }
        acc
    }

    /// `‖x‖_r`, the maximum Euclidean norm over the window (evaluated at
    /// the knots).
    fn sup_norm(&self) -> T {
        let mut buf = vec![T::zero(); self.dim()];
        self.knots().into_iter().fold(T::zero(), |m, th| {
            self.eval_into(th, &mut buf);
            m.max(scalar::norm(&buf))
        })
    }
}

/// Piecewise-linear r-history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SegmentWire<T>", into = "SegmentWire<T>")]
#[serde(bound = "")]
pub struct HistorySegment<T: Real> {
    delay: T,
    dim: usize,
    grid: Vec<T>,
    /// Row-major, `dim` entries per grid point.
    values: Vec<T>,
}

/// JSON form `{r, n, grid, values}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentWire<T> {
    pub r: T,
    pub n: usize,
    pub grid: Vec<T>,
    pub values: Vec<Vec<T>>,
}

impl<T: Real> TryFrom<SegmentWire<T>> for HistorySegment<T> {
    type Error = Error;

    fn try_from(w: SegmentWire<T>) -> Result<Self> {
        let seg = HistorySegment::new(w.r, w.grid, w.values)?;
        if seg.dim != w.n {
            return Err(Error::Dimension {
                what: "history values",
                expected: w.n,
                got: seg.dim,
            });
        }
        Ok(seg)
    }
}

impl<T: Real> From<HistorySegment<T>> for SegmentWire<T> {
    fn from(h: HistorySegment<T>) -> Self {
        let values = h.values.chunks(h.dim).map(|c| c.to_vec()).collect();
        SegmentWire {
            r: h.delay,
            n: h.dim,
            grid: h.grid,
            values,
        }
    }
}

/// `points` uniform offsets from `-r` to `0`, both endpoints exact.
pub fn uniform_grid<T: Real>(delay: T, points: usize) -> Vec<T> {
    let points = points.max(2);
    let last = points - 1;
    (0..points)
        .map(|i| {
            if i == last {
                T::zero()
            } else if i == 0 {
                -delay
            } else {
                -delay + delay * T::count(i) / T::count(last)
            }
        })
        .collect()
}

impl<T: Real> HistorySegment<T> {
    pub fn new(delay: T, grid: Vec<T>, values: Vec<Vec<T>>) -> Result<Self> {
        let dim = values.first().map(Vec::len).unwrap_or(0);
        if values.len() != grid.len() {
            return Err(Error::Dimension {
                what: "history grid/values",
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| v.len() != dim) {
            return Err(Error::Dimension {
                what: "history value vector",
                expected: dim,
                got: bad.len(),
            });
        }
        let flat = values.into_iter().flatten().collect();
        Self::from_flat(delay, dim, grid, flat)
    }

    /// Builds a segment from row-major values.
    pub fn from_flat(delay: T, dim: usize, mut grid: Vec<T>, values: Vec<T>) -> Result<Self> {
        if !(delay > T::zero()) || !delay.is_finite() {
            return Err(Error::Malformed {
                what: "history",
                reason: format!("delay must be positive, got {delay}"),
            });
        }
        if dim == 0 {
            return Err(Error::Malformed {
                what: "history",
                reason: "dimension must be positive".into(),
            });
        }
        if grid.len() < 2 {
            return Err(Error::Malformed {
                what: "history",
                reason: "grid needs at least two points".into(),
            });
        }
        if values.len() != grid.len() * dim {
            return Err(Error::Dimension {
                what: "history values",
                expected: grid.len() * dim,
                got: values.len(),
            });
        }
        let tol = T::lit(OFFSET_TOLERANCE) * delay.max(T::one());
        let last = grid.len() - 1;
        if (grid[0] + delay).abs() > tol {
            return Err(Error::Malformed {
                what: "history",
                reason: format!("first grid offset {} must equal -r = {}", grid[0], -delay),
            });
        }
        if grid[last].abs() > tol {
            return Err(Error::Malformed {
                what: "history",
                reason: format!("last grid offset {} must equal 0", grid[last]),
            });
        }
        grid[0] = -delay;
        grid[last] = T::zero();
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Malformed {
                what: "history",
                reason: "grid offsets must be strictly increasing".into(),
            });
        }
        if !scalar::all_finite(&values) {
            return Err(Error::Malformed {
                what: "history",
                reason: "values must be finite".into(),
            });
        }
        Ok(Self {
            delay,
            dim,
            grid,
            values,
        })
    }

    /// Samples `f` on a uniform grid of `points` offsets.
    pub fn from_fn(delay: T, dim: usize, points: usize, f: impl Fn(T) -> Vec<T>) -> Result<Self> {
        Self::from_fn_with_knots(delay, dim, points, &[], f)
    }

    /// Samples `f` on a uniform grid augmented with the given knots.
    pub fn from_fn_with_knots(
        delay: T,
        dim: usize,
        points: usize,
        knots: &[T],
        f: impl Fn(T) -> Vec<T>,
    ) -> Result<Self> {
        let mut grid = uniform_grid(delay, points);
        grid.extend(
            knots
                .iter()
                .copied()
                .filter(|k| *k > -delay && *k < T::zero()),
        );
        grid.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));
        grid.dedup();
        let mut values = Vec::with_capacity(grid.len() * dim);
        for &th in &grid {
            let v = f(th);
            if v.len() != dim {
                return Err(Error::Dimension {
                    what: "history value vector",
                    expected: dim,
                    got: v.len(),
                });
            }
            values.extend(v);
        }
        Self::from_flat(delay, dim, grid, values)
    }

    /// Constant history `x(θ) ≡ value` on the default grid.
    pub fn constant(delay: T, value: &[T]) -> Result<Self> {
        Self::from_fn(delay, value.len(), DEFAULT_POINTS, |_| value.to_vec())
    }

    pub fn zeros(delay: T, dim: usize) -> Result<Self> {
        Self::constant(delay, &vec![T::zero(); dim])
    }

    pub fn delay(&self) -> T {
        self.delay
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Stored vector at grid index `i`.
    pub fn value(&self, i: usize) -> &[T] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn flat_values(&self) -> &[T] {
        &self.values
    }

    /// `x(0)`.
    pub fn head(&self) -> &[T] {
        self.value(self.len() - 1)
    }

    /// `x(-r)`.
    pub fn tail(&self) -> &[T] {
        self.value(0)
    }

    /// Interval index `i` with `grid[i] ≤ θ ≤ grid[i+1]`, θ already clamped.
    fn locate(&self, theta: T) -> usize {
        let n = self.grid.len();
        match self
            .grid
            .binary_search_by(|g| g.partial_cmp(&theta).expect("finite offsets"))
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// `x(θ)`; errors when θ is outside `[-r, 0]` beyond the tolerance.
    pub fn eval(&self, theta: T) -> Result<Vec<T>> {
        let tol = T::lit(OFFSET_TOLERANCE);
        if !(theta >= -self.delay - tol && theta <= tol) {
            return Err(Error::Domain {
                what: "history offset θ",
                value: theta.as_f64(),
                lo: -self.delay.as_f64(),
                hi: 0.0,
            });
        }
        let mut out = vec![T::zero(); self.dim];
        self.eval_into(theta, &mut out);
        Ok(out)
    }

    /// Maximum Euclidean norm over the segment.
    ///
    /// Norms are taken at the grid points; where adjacent grid norms differ
    /// by more than `1e-9·(1 + norm)` the interval midpoint is also checked.
    pub fn sup_norm(&self) -> T {
        let norms: Vec<T> = (0..self.len())
            .map(|i| scalar::norm(self.value(i)))
            .collect();
        let mut best = norms.iter().copied().fold(T::zero(), T::max);
        let thresh = T::lit(1e-9);
        let half = T::lit(0.5);
        let mut mid = vec![T::zero(); self.dim];
        for i in 0..norms.len() - 1 {
            let big = norms[i].max(norms[i + 1]);
            if (norms[i] - norms[i + 1]).abs() > thresh * (T::one() + big) {
                for (k, m) in mid.iter_mut().enumerate() {
                    *m = (self.value(i)[k] + self.value(i + 1)[k]) * half;
                }
                best = best.max(scalar::norm(&mid));
            }
        }
        best
    }

    /// The extension operator `E_h(x; v)`: the segment shifted left by
    /// `step`, continued on `(-step, 0]` by the ray `x(0) + (θ + step)·v`.
    pub fn extend(&self, v: &[T], step: T) -> Result<Self> {
        if v.len() != self.dim {
            return Err(Error::Dimension {
                what: "extension direction",
                expected: self.dim,
                got: v.len(),
            });
        }
        if !(step >= T::zero() && step < self.delay) {
            return Err(Error::Domain {
                what: "extension step",
                value: step.as_f64(),
                lo: 0.0,
                hi: self.delay.as_f64(),
            });
        }
        if step == T::zero() {
            return Ok(self.clone());
        }
        let n = self.dim;
        let lower = -self.delay;
        let mut grid = Vec::with_capacity(self.len() + 2);
        let mut values = Vec::with_capacity((self.len() + 2) * n);
        grid.push(lower);
        values.extend(self.at(lower + step));
        for (i, &th) in self.grid.iter().enumerate() {
            let shifted = th - step;
            if shifted > *grid.last().expect("nonempty") {
                grid.push(shifted);
                values.extend_from_slice(self.value(i));
            }
        }
        let head = self.head();
        grid.push(T::zero());
        values.extend(head.iter().zip(v).map(|(&x, &d)| x + step * d));
        Self::from_flat(self.delay, n, grid, values)
    }

    /// `‖self − other‖_r`, exact for the piecewise-linear representations.
    pub fn distance(&self, other: &Self) -> Result<T> {
        if self.dim != other.dim {
            return Err(Error::Dimension {
                what: "history distance",
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut a = vec![T::zero(); self.dim];
        let mut b = vec![T::zero(); self.dim];
        let mut best = T::zero();
        for &th in self.grid.iter().chain(other.grid.iter()) {
            let th = th.max(-self.delay.min(other.delay));
            self.eval_into(th, &mut a);
            other.eval_into(th, &mut b);
            best = best.max(scalar::distance(&a, &b));
        }
        Ok(best)
    }

    /// `∫_{-r}^{0} g(x(θ)) dθ` by three-point Gauss–Legendre on every grid
    /// interval; exact when `g` is a polynomial of degree ≤ 5.
    pub fn integrate_with(&self, g: impl Fn(&[T]) -> T) -> T {
        let half = T::lit(0.5);
        let node = T::lit(GAUSS3_NODE);
        let (w_mid, w_side) = (T::lit(8.0 / 9.0), T::lit(5.0 / 9.0));
        let mut buf = vec![T::zero(); self.dim];
        let mut acc = T::zero();
        for i in 0..self.len() - 1 {
            let rad = (self.grid[i + 1] - self.grid[i]) * half;
            let mut sum = T::zero();
            for (off, w) in [(-node, w_side), (T::zero(), w_mid), (node, w_side)] {
                let s = (off + T::one()) * half;
                for (k, out) in buf.iter_mut().enumerate() {
                    *out = self.value(i)[k] + s * (self.value(i + 1)[k] - self.value(i)[k]);
                }
                sum = sum + w * g(&buf);
            }
            acc = acc + rad * sum;
        }
        acc
    }

    /// Applies `f(θ, x(θ))` at every grid point.
    pub fn map(&self, out_dim: usize, f: impl Fn(T, &[T]) -> Vec<T>) -> Result<Self> {
        let mut values = Vec::with_capacity(self.len() * out_dim);
        for (i, &th) in self.grid.iter().enumerate() {
            let y = f(th, self.value(i));
            if y.len() != out_dim {
                return Err(Error::Dimension {
                    what: "mapped history value",
                    expected: out_dim,
                    got: y.len(),
                });
            }
            values.extend(y);
        }
        Self::from_flat(self.delay, out_dim, self.grid.clone(), values)
    }

    /// Multiplies every stored value by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|x| *x = *x * factor);
        out
    }

    pub fn to_wire(&self) -> SegmentWire<T> {
        self.clone().into()
    }
}

impl<T: Real> HistoryAccess<T> for HistorySegment<T> {
    fn delay(&self) -> T {
        self.delay
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_into(&self, theta: T, out: &mut [T]) {
        let theta = theta.max(-self.delay).min(T::zero());
        let i = self.locate(theta);
        let (a, b) = (self.grid[i], self.grid[i + 1]);
        if theta == a {
            out.copy_from_slice(self.value(i));
            return;
        }
        if theta == b {
            out.copy_from_slice(self.value(i + 1));
            return;
        }
        let w = (theta - a) / (b - a);
        let (lo, hi) = (self.value(i), self.value(i + 1));
        for k in 0..self.dim {
            out[k] = lo[k] + w * (hi[k] - lo[k]);
        }
    }

    fn head(&self) -> &[T] {
        HistorySegment::head(self)
    }

    fn knots(&self) -> Vec<T> {
        self.grid.clone()
    }

    fn integrate_component(&self, k: usize) -> T {
        let half = T::lit(0.5);
        (0..self.len() - 1).fold(T::zero(), |acc, i| {
            acc + (self.grid[i + 1] - self.grid[i])
                * (self.value(i)[k] + self.value(i + 1)[k])
                * half
        })
    }

    fn sup_norm(&self) -> T {
        HistorySegment::sup_norm(self)
    }
}

/// Random piecewise-linear histories with bounded norm and slope.
///
/// Each sample has one to `max_knots` interior breakpoints, values drawn
/// inside the ball of radius `norm_bound`, and successive values pulled
/// together until every slope is at most `slope_cap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistorySampler {
    pub norm_bound: f64,
    pub slope_cap: f64,
    pub max_knots: usize,
}

impl Default for HistorySampler {
    fn default() -> Self {
        Self {
            norm_bound: 1.0,
            slope_cap: 10.0,
            max_knots: 4,
        }
    }
}

impl HistorySampler {
    pub fn new(norm_bound: f64) -> Self {
        Self {
            norm_bound,
            ..Self::default()
        }
    }

    pub fn sample<T: Real, R: Rng + ?Sized>(
        &self,
        delay: T,
        dim: usize,
        rng: &mut R,
    ) -> HistorySegment<T> {
        let r = delay.as_f64();
        let knots = rng.random_range(1..=self.max_knots.max(1));
        let mut grid: Vec<f64> = (0..knots).map(|_| -r * rng.random::<f64>()).collect();
        grid.push(-r);
        grid.push(0.0);
        grid.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        grid.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * r.max(1.0));
        if grid.len() < 2 || grid[0] != -r || *grid.last().expect("nonempty") != 0.0 {
            grid = vec![-r, 0.0];
        }

        // Scale: a fifth of the samples sit on the boundary of the ball.
        let scale = if rng.random::<f64>() < 0.2 {
            self.norm_bound
        } else {
            self.norm_bound * rng.random::<f64>()
        };
        let constant = rng.random::<f64>() < 0.15;
        let mut values: Vec<Vec<f64>> = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            if constant && i > 0 {
                values.push(values[0].clone());
                continue;
            }
            let radius = if i == grid.len() - 1 && rng.random::<f64>() < 0.5 {
                scale
            } else {
                scale * rng.random::<f64>()
            };
            values.push(random_vector(dim, radius, rng));
        }
        for i in (0..grid.len() - 1).rev() {
            let span = grid[i + 1] - grid[i];
            let gap: f64 = values[i]
                .iter()
                .zip(&values[i + 1])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let cap = self.slope_cap * span;
            if gap > cap && gap > 0.0 {
                let lam = cap / gap;
                let next = values[i + 1].clone();
                for (v, n) in values[i].iter_mut().zip(next) {
                    *v = n + lam * (*v - n);
                }
            }
        }
        let grid_t: Vec<T> = grid.into_iter().map(T::lit).collect();
        let flat: Vec<T> = values.into_iter().flatten().map(T::lit).collect();
        HistorySegment::from_flat(delay, dim, grid_t, flat).expect("sampler builds valid segments")
    }
}

/// Vector with uniformly random direction and Euclidean norm `radius`.
pub(crate) fn random_vector<R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x * radius / n).collect();
        }
    }
}
