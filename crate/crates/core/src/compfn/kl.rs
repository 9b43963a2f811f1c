//! Two-argument KL functions and the flow envelope of `ẏ = −ρ(y)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ClassReport, ComparisonFn, InvariantCheck};
use crate::error::{Error, Result};
use crate::scalar::Real;

type Scalar2<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// `σ: ℝ⁺ × ℝ⁺ → ℝ⁺`, closed form or tabulated.
#[derive(Clone)]
pub struct KlFn<T: Real> {
    name: String,
    repr: Repr<T>,
}

#[derive(Clone)]
enum Repr<T: Real> {
    Closed(Scalar2<T>),
    Flow(Arc<Flow<T>>),
    Table(Arc<Table<T>>),
}

impl<T: Real> fmt::Debug for KlFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.repr {
            Repr::Closed(_) => "closed",
            Repr::Flow(_) => "flow",
            Repr::Table(_) => "table",
        };
        f.debug_struct("KlFn")
            .field("name", &self.name)
            .field("repr", &kind)
            .finish()
    }
}

impl<T: Real> KlFn<T> {
    pub fn closed(name: impl Into<String>, f: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            repr: Repr::Closed(Arc::new(f)),
        }
    }

    /// `σ(s, t) = s·e^{−c t}`.
    pub fn exponential(c: T) -> Self {
        Self::closed(format!("s*exp(-{c}*t)"), move |s, t| s * (-c * t).exp())
    }

    /// Envelope tabulated on bins in `s` and a grid in `t`.
    ///
    /// `bin_upper[k]` is the upper edge of bin `k`; `values[k][j]` the
    /// envelope for `s` in bin `k` at elapsed time `t_grid[j]`. Below
    /// `bin_lower` the first bin is pinched linearly to zero; above the last
    /// edge the last bin is scaled linearly. Between `t` grid points the
    /// left value is held.
    pub fn from_table(
        name: impl Into<String>,
        bin_lower: T,
        bin_upper: Vec<T>,
        t_grid: Vec<T>,
        values: Vec<Vec<T>>,
    ) -> Result<Self> {
        if bin_upper.is_empty() || t_grid.is_empty() {
            return Err(Error::Empty("envelope table"));
        }
        if values.len() != bin_upper.len() || values.iter().any(|row| row.len() != t_grid.len()) {
            return Err(Error::Dimension {
                what: "envelope table rows",
                expected: bin_upper.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            name: name.into(),
            repr: Repr::Table(Arc::new(Table {
                bin_lower,
                bin_upper,
                t_grid,
                values,
            })),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, s: T, t: T) -> T {
        match &self.repr {
            Repr::Closed(f) => f(s, t),
            Repr::Flow(flow) => flow.sigma(s, t),
            Repr::Table(tab) => tab.eval(s, t),
        }
    }

    /// `(s, t, σ(s, t))` over the product grid.
    pub fn table(&self, s_grid: &[T], t_grid: &[T]) -> Vec<(T, T, T)> {
        s_grid
            .iter()
            .flat_map(|&s| t_grid.iter().map(move |&t| (s, t, self.eval(s, t))))
            .collect()
    }

    /// The table as CSV with header `s,t,sigma`.
    pub fn to_csv(&self, s_grid: &[T], t_grid: &[T]) -> String {
        let mut out = String::from("s,t,sigma\n");
        for (s, t, v) in self.table(s_grid, t_grid) {
            out.push_str(&format!("{s},{t},{v}\n"));
        }
        out
    }
}

struct Table<T: Real> {
    bin_lower: T,
    bin_upper: Vec<T>,
    t_grid: Vec<T>,
    values: Vec<Vec<T>>,
}

impl<T: Real> Table<T> {
    fn column(&self, t: T) -> usize {
        self.t_grid.partition_point(|g| *g <= t).saturating_sub(1)
    }

    fn eval(&self, s: T, t: T) -> T {
        if s <= T::zero() {
            return T::zero();
        }
        let j = self.column(t);
        if s < self.bin_lower {
            return self.values[0][j] * s / self.bin_lower;
        }
        let k = self.bin_upper.partition_point(|u| *u < s);
        if k < self.bin_upper.len() {
            self.values[k][j]
        } else {
            let last = self.bin_upper.len() - 1;
            self.values[last][j] * s / self.bin_upper[last]
        }
    }
}

/// One RK4 step of `ẏ = −ρ(y)`.
fn rk4<T: Real>(rho: &ComparisonFn<T>, y: T, h: T) -> T {
    let half = T::lit(0.5);
    let k1 = -rho.eval(y);
    let k2 = -rho.eval(y + half * h * k1);
    let k3 = -rho.eval(y + half * h * k2);
    let k4 = -rho.eval(y + h * k3);
    y + h / T::lit(6.0) * (k1 + T::lit(2.0) * (k2 + k3) + k4)
}

const MAX_FLOW_STEPS: usize = 2_000_000;

/// Decreasing solution of `ẏ = −ρ(y)` stored at adaptive nodes.
struct Path<T: Real> {
    tau: Vec<T>,
    y: Vec<T>,
}

impl<T: Real> Path<T> {
    /// Integrates from `y0` until `stop(τ, y)`, with step-doubling error
    /// control at absolute tolerance `tol` and local extrapolation.
    fn integrate(
        rho: &ComparisonFn<T>,
        y0: T,
        tol: T,
        mut stop: impl FnMut(T, T) -> bool,
    ) -> Result<Self> {
        let mut tau = vec![T::zero()];
        let mut y = vec![y0];
        let r0 = rho.eval(y0);
        let mut h = if r0 > T::zero() {
            (T::lit(1e-3) * y0 / r0).min(T::lit(1e-2))
        } else {
            T::lit(1e-3)
        };
        let half = T::lit(0.5);
        let fifteen = T::lit(15.0);
        let min_step = T::epsilon() * T::lit(16.0);
        for _ in 0..MAX_FLOW_STEPS {
            let (tc, yc) = (*tau.last().expect("nonempty"), *y.last().expect("nonempty"));
            if stop(tc, yc) {
                return Ok(Self { tau, y });
            }
            let full = rk4(rho, yc, h);
            let halfway = rk4(rho, yc, h * half);
            let fine = rk4(rho, halfway, h * half);
            if !(full.is_finite() && fine.is_finite()) {
                return Err(Error::Evaluation {
                    what: format!("flow of {}", rho.name()),
                    at: yc.as_f64(),
                });
            }
            let err = (fine - full).abs() / fifteen;
            let accept = err <= tol || h <= min_step;
            if accept {
                let next = (fine + (fine - full) / fifteen).min(yc).max(T::zero());
                tau.push(tc + h);
                y.push(next);
            }
            let factor = if err > T::zero() {
                (T::lit(0.9) * (tol / err).powf(T::lit(0.2)))
                    .min(T::lit(4.0))
                    .max(T::lit(0.1))
            } else {
                T::lit(4.0)
            };
            h = (h * factor).max(min_step);
        }
        Err(Error::Evaluation {
            what: format!("flow of {} did not finish", rho.name()),
            at: y0.as_f64(),
        })
    }

    fn end(&self) -> T {
        *self.tau.last().expect("nonempty")
    }

    /// `Y(τ)` for `0 ≤ τ ≤ end`.
    fn at(&self, rho: &ComparisonFn<T>, tau: T) -> T {
        let n = self.tau.len();
        let i = self.tau.partition_point(|x| *x <= tau);
        if i == 0 {
            return self.y[0];
        }
        let i = i - 1;
        if i >= n - 1 {
            return self.y[n - 1];
        }
        if tau == self.tau[i] {
            return self.y[i];
        }
        rk4(rho, self.y[i], tau - self.tau[i])
            .min(self.y[i])
            .max(self.y[i + 1])
    }

    /// `τ` with `Y(τ) = s`, for `Y(end) ≤ s ≤ Y(0)`.
    fn invert(&self, rho: &ComparisonFn<T>, s: T) -> T {
        let idx = self.y.partition_point(|v| *v > s);
        if idx == 0 {
            return T::zero();
        }
        if idx >= self.y.len() {
            return self.end();
        }
        if self.y[idx] == s {
            return self.tau[idx];
        }
        let (mut lo, mut hi) = (self.tau[idx - 1], self.tau[idx]);
        for _ in 0..200 {
            let mid = (lo + hi) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.at(rho, mid) > s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) * T::lit(0.5)
    }
}

struct Flow<T: Real> {
    rho: ComparisonFn<T>,
    master: Path<T>,
    s_min: T,
    s_top: T,
    tau_star: T,
    t_max: T,
    q: T,
    tol: T,
}

impl<T: Real> Flow<T> {
    /// `σ(s_min, t)/s_min`, extended past `t_max` multiplicatively.
    fn pinch(&self, t: T) -> T {
        let mut k = 0i32;
        let mut rem = t;
        if t > self.t_max {
            let kk = (t / self.t_max).floor();
            rem = t - kk * self.t_max;
            k = kk.to_i32().unwrap_or(i32::MAX);
        }
        let base = self.master.at(&self.rho, self.tau_star + rem) / self.s_min;
        if k == 0 {
            base
        } else {
            base * self.q.powi(k)
        }
    }

    fn tabulated(&self, s: T, t: T) -> T {
        let elapsed = self.master.invert(&self.rho, s) + t;
        if elapsed <= self.tau_star {
            self.master.at(&self.rho, elapsed)
        } else {
            self.s_min * self.pinch(elapsed - self.tau_star)
        }
    }

    fn sigma(&self, s: T, t: T) -> T {
        if s <= T::zero() {
            return T::zero();
        }
        if t <= T::zero() {
            return s;
        }
        if s <= self.s_min {
            return s * self.pinch(t);
        }
        if s <= self.s_top {
            return self.tabulated(s, t);
        }
        let s_top = self.s_top;
        let path = match Path::integrate(&self.rho, s, self.tol, |_, y| y <= s_top) {
            Ok(p) => p,
            Err(_) => return T::nan(),
        };
        let tau0 = path.invert(&self.rho, s_top);
        if t <= tau0 {
            path.at(&self.rho, t)
        } else {
            self.tabulated(s_top, t - tau0)
        }
    }
}

/// KL envelope generated by the flow of `ẏ = −ρ(y)`, `y(0) = s`.
///
/// A single trajectory is integrated from `max(s_grid)`; since the ODE is
/// autonomous, `σ(s, t) = Y(τ(s) + t)` where `τ(s)` is the time that
/// trajectory needs to reach `s`. Below `min(s_grid)` the envelope is
/// pinched linearly to zero, and above `max(s_grid)` the flow is integrated
/// on demand. `σ(s, 0) = s` exactly.
pub fn kl_from_rate<T: Real>(rho: &ComparisonFn<T>, s_grid: &[T], t_max: T) -> Result<KlFn<T>> {
    if s_grid.is_empty() {
        return Err(Error::Empty("s grid"));
    }
    if s_grid.iter().any(|s| !(*s > T::zero())) || s_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Malformed {
            what: "s grid",
            reason: "must be positive and strictly increasing".into(),
        });
    }
    if !(t_max > T::zero()) {
        return Err(Error::Domain {
            what: "t_max",
            value: t_max.as_f64(),
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    for &s in s_grid {
        let v = rho.eval(s);
        if !v.is_finite() {
            return Err(Error::Evaluation {
                what: rho.name().to_string(),
                at: s.as_f64(),
            });
        }
        if !(v > T::zero()) {
            return Err(Error::Class {
                name: rho.name().to_string(),
                class: "positive definite".into(),
                reason: format!("ρ({s}) = {v} is not positive"),
            });
        }
    }
    let s_min = s_grid[0];
    let s_top = *s_grid.last().expect("nonempty");
    let tol = (T::lit(1e-12) * s_top.max(T::one())).max(T::epsilon() * T::lit(64.0) * s_top);

    let mut tau_star = None;
    let master = Path::integrate(rho, s_top, tol, |tau, y| {
        if tau_star.is_none() && y <= s_min {
            tau_star = Some(tau);
        }
        tau_star.is_some_and(|ts| tau >= ts + t_max)
    })?;
    let tau_star = master.invert(rho, s_min);
    let mut flow = Flow {
        rho: rho.clone(),
        master,
        s_min,
        s_top,
        tau_star,
        t_max,
        q: T::one(),
        tol,
    };
    flow.q = flow.master.at(rho, tau_star + t_max) / s_min;
    Ok(KlFn {
        name: format!("flow({})", rho.name()),
        repr: Repr::Flow(Arc::new(flow)),
    })
}

/// Probe grid for KL checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlGrid {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
}

impl KlGrid {
    /// `n` uniform values of `s` in `[s_lo, s_hi]` and of `t` in `[0, t_hi]`.
    pub fn uniform(s_lo: f64, s_hi: f64, t_hi: f64, n: usize) -> Self {
        let n = n.max(2);
        let lin = |a: f64, b: f64| -> Vec<f64> {
            (0..n)
                .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
                .collect()
        };
        Self {
            s: lin(s_lo, s_hi),
            t: lin(0.0, t_hi),
        }
    }
}

impl Default for KlGrid {
    fn default() -> Self {
        Self::uniform(0.05, 5.0, 10.0, 20)
    }
}

/// Sampled KL invariants: `σ(0, t) = 0`, nondecreasing in `s`,
/// nonincreasing in `t`, and strict decay over the probe window.
pub fn check_kl<T: Real>(sigma: &KlFn<T>, grid: &KlGrid) -> Result<ClassReport> {
    let s: Vec<T> = grid.s.iter().map(|x| T::lit(*x)).collect();
    let t: Vec<T> = grid.t.iter().map(|x| T::lit(*x)).collect();
    if s.is_empty() || t.is_empty() {
        return Err(Error::Empty("KL probe grid"));
    }
    let mut vals = vec![vec![T::zero(); t.len()]; s.len()];
    for (i, &si) in s.iter().enumerate() {
        for (j, &tj) in t.iter().enumerate() {
            let v = sigma.eval(si, tj);
            if !v.is_finite() {
                return Err(Error::Evaluation {
                    what: sigma.name.clone(),
                    at: si.as_f64(),
                });
            }
            vals[i][j] = v;
        }
    }
    let slack = |v: T| T::lit(1e-12) * (T::one() + v.abs());
    let mut checks = Vec::new();

    let mut worst = (0.0f64, 0.0f64);
    for &tj in &t {
        let z = sigma.eval(T::zero(), tj).abs().as_f64();
        if z >= worst.1 {
            worst = (tj.as_f64(), z);
        }
    }
    checks.push(InvariantCheck {
        invariant: "zero_at_zero".into(),
        pass: worst.1 <= super::ZERO_TOLERANCE,
        worst_at: vec![0.0, worst.0],
        worst_value: worst.1,
    });

    let mut worst = (vec![], f64::INFINITY);
    for j in 0..t.len() {
        for i in 0..s.len().saturating_sub(1) {
            let gap = vals[i + 1][j] - vals[i][j] + slack(vals[i][j]);
            if gap.as_f64() < worst.1 {
                worst = (vec![s[i].as_f64(), t[j].as_f64()], gap.as_f64());
            }
        }
    }
    checks.push(InvariantCheck {
        invariant: "nondecreasing_in_s".into(),
        pass: worst.1 >= 0.0,
        worst_at: worst.0,
        worst_value: worst.1,
    });

    let mut worst = (vec![], f64::INFINITY);
    for i in 0..s.len() {
        for j in 0..t.len().saturating_sub(1) {
            let gap = vals[i][j] - vals[i][j + 1] + slack(vals[i][j]);
            if gap.as_f64() < worst.1 {
                worst = (vec![s[i].as_f64(), t[j].as_f64()], gap.as_f64());
            }
        }
    }
    checks.push(InvariantCheck {
        invariant: "nonincreasing_in_t".into(),
        pass: worst.1 >= 0.0,
        worst_at: worst.0,
        worst_value: worst.1,
    });

    let last = t.len() - 1;
    let mut worst = (vec![], f64::INFINITY);
    for i in 0..s.len() {
        if s[i] > T::zero() {
            let drop = (vals[i][0] - vals[i][last]).as_f64();
            if drop < worst.1 {
                worst = (vec![s[i].as_f64(), t[last].as_f64()], drop);
            }
        }
    }
    checks.push(InvariantCheck {
        invariant: "decays".into(),
        pass: worst.1 > 0.0 || worst.0.is_empty(),
        worst_at: worst.0,
        worst_value: if worst.1.is_finite() { worst.1 } else { 0.0 },
    });

    Ok(ClassReport::new(&sigma.name, "KL", checks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compfn::ClassTag;

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }

    #[test]
    fn linear_rate_matches_exponential() {
        let rho = ComparisonFn::new("s", ClassTag::PositiveDefinite, |s: f64| s);
        let sigma = kl_from_rate(&rho, &log_grid(1e-3, 10.0, 32), 20.0).unwrap();
        let v = sigma.eval(2.0, 1.0);
        assert!((v - 2.0 * (-1.0f64).exp()).abs() < 1e-8, "{v}");
        assert_eq!(sigma.eval(2.0, 0.0), 2.0);
        assert_eq!(sigma.eval(0.0, 3.0), 0.0);
    }

    #[test]
    fn quadratic_rate_matches_closed_form() {
        let rho = ComparisonFn::new("s^2", ClassTag::PositiveDefinite, |s: f64| s * s);
        let sigma = kl_from_rate(&rho, &log_grid(1e-2, 10.0, 32), 50.0).unwrap();
        assert!((sigma.eval(2.0, 1.0) - 2.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn beyond_grid_in_s_and_t() {
        let rho = ComparisonFn::new("s", ClassTag::PositiveDefinite, |s: f64| s);
        let sigma = kl_from_rate(&rho, &[0.1, 1.0], 5.0).unwrap();
        assert!((sigma.eval(50.0, 2.0) - 50.0 * (-2.0f64).exp()).abs() < 1e-8);
        // pinch below s_min is exact for a linear rate
        assert!((sigma.eval(0.01, 30.0) - 0.01 * (-30.0f64).exp()).abs() < 1e-15);
        assert!(check_kl(&sigma, &KlGrid::default()).unwrap().pass);
    }

    #[test]
    fn negative_rate_is_a_class_error() {
        let rho = ComparisonFn::new("-s", ClassTag::PositiveDefinite, |s: f64| -s);
        assert!(matches!(
            kl_from_rate(&rho, &[0.5, 1.0], 1.0),
            Err(Error::Class { .. })
        ));
    }

    #[test]
    fn table_lookup() {
        let k = KlFn::from_table(
            "tab",
            1.0,
            vec![2.0, 4.0],
            vec![0.0, 1.0],
            vec![vec![2.0, 1.0], vec![4.0, 2.0]],
        )
        .unwrap();
        assert_eq!(k.eval(0.5, 0.0), 1.0);
        assert_eq!(k.eval(3.0, 0.5), 4.0);
        assert_eq!(k.eval(3.0, 1.5), 2.0);
        assert_eq!(k.eval(8.0, 0.0), 8.0);
        assert_eq!(k.eval(0.0, 0.0), 0.0);
    }
}
