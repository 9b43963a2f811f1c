use std::fmt;
use std::sync::Arc;

use crate::compfn::ComparisonFn;
use crate::error::{Error, Result};
use crate::history::{HistoryAccess, HistorySegment};
use crate::scalar::{self, Real};
use crate::signals::DomainBox;

/// `f(t, x, u, d, out)`: writes `ẋ(t)` for history `x = T_r(t)x`.
pub type Dynamics<T> = Arc<dyn Fn(T, &dyn HistoryAccess<T>, &[T], &[T], &mut [T]) + Send + Sync>;

/// Pointwise map `(t, x) ↦ h(t, x)`.
pub type PointMap<T> = Arc<dyn Fn(T, &[T]) -> Vec<T> + Send + Sync>;

/// History functional `(t, x) ↦ H(t, x) ∈ ℝᵖ`.
pub type FunctionalMap<T> = Arc<dyn Fn(T, &dyn HistoryAccess<T>) -> Vec<T> + Send + Sync>;

/// Output `Y(t) = H(t, T_r(t)x)`.
#[derive(Clone)]
pub enum OutputMap<T: Real> {
    /// `H(t, x) = h(t, x(0)) ∈ ℝᵖ`.
    State { dim: usize, map: PointMap<T> },
    /// Functional output `H(t, x)(θ) = h(t + θ, x(θ))`, valued in
    /// `C⁰([-r, 0]; ℝᵖ)` with the sup norm.
    HistoryPointwise { dim: usize, map: PointMap<T> },
    /// General functional with values in `ℝᵖ`.
    Functional { dim: usize, map: FunctionalMap<T> },
}

impl<T: Real> fmt::Debug for OutputMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, dim) = match self {
            OutputMap::State { dim, .. } => ("state", dim),
            OutputMap::HistoryPointwise { dim, .. } => ("history_pointwise", dim),
            OutputMap::Functional { dim, .. } => ("functional", dim),
        };
        write!(f, "OutputMap::{kind}({dim})")
    }
}

impl<T: Real> OutputMap<T> {
    /// `Y = x(t)`.
    pub fn state_identity(n: usize) -> Self {
        OutputMap::State {
            dim: n,
            map: Arc::new(|_, x| x.to_vec()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            OutputMap::State { dim, .. }
            | OutputMap::HistoryPointwise { dim, .. }
            | OutputMap::Functional { dim, .. } => *dim,
        }
    }

    /// Whether outputs are history segments (reported through their norm).
    pub fn is_history_valued(&self) -> bool {
        matches!(self, OutputMap::HistoryPointwise { .. })
    }

    /// Vector value of the output; `None` for history-valued outputs.
    pub fn value(&self, t: T, x: &dyn HistoryAccess<T>) -> Option<Vec<T>> {
        match self {
            OutputMap::State { map, .. } => Some(map(t, x.head())),
            OutputMap::HistoryPointwise { .. } => None,
            OutputMap::Functional { map, .. } => Some(map(t, x)),
        }
    }

    /// `‖H(t, x)‖_Y`.
    pub fn norm(&self, t: T, x: &dyn HistoryAccess<T>) -> T {
        match self {
            OutputMap::State { map, .. } => scalar::norm(&map(t, x.head())),
            OutputMap::Functional { map, .. } => scalar::norm(&map(t, x)),
            OutputMap::HistoryPointwise { map, .. } => {
                let mut buf = vec![T::zero(); x.dim()];
                x.knots().into_iter().fold(T::zero(), |m, th| {
                    x.eval_into(th, &mut buf);
                    m.max(scalar::norm(&map(t + th, &buf)))
                })
            }
        }
    }

    /// `‖H(t, x) − H(τ, y)‖_Y`.
    pub fn distance(&self, t: T, x: &HistorySegment<T>, tau: T, y: &HistorySegment<T>) -> T {
        match self {
            OutputMap::State { map, .. } => {
                scalar::distance(&map(t, x.head()), &map(tau, y.head()))
            }
            OutputMap::Functional { map, .. } => scalar::distance(&map(t, x), &map(tau, y)),
            OutputMap::HistoryPointwise { map, .. } => {
                let mut a = vec![T::zero(); x.dim()];
                let mut b = vec![T::zero(); y.dim()];
                x.grid().iter().chain(y.grid()).fold(T::zero(), |m, &th| {
                    x.eval_into(th, &mut a);
                    y.eval_into(th, &mut b);
                    m.max(scalar::distance(&map(t + th, &a), &map(tau + th, &b)))
                })
            }
        }
    }
}

/// Sandwich data for an output equivalent to a finite-dimensional map:
/// `a1(|h(t, x)|) ≤ V(t, x) ≤ a2(β(t)|x|)` style bounds are expressed in
/// terms of `h`.
#[derive(Clone)]
pub struct FiniteOutput<T: Real> {
    pub h: PointMap<T>,
    pub a1: ComparisonFn<T>,
    pub a2: ComparisonFn<T>,
}

/// `ẋ(t) = f(t, T_r(t)x, u(t), d(t))`, `Y(t) = H(t, T_r(t)x)`.
#[derive(Clone)]
pub struct RfdeSystem<T: Real> {
    name: String,
    delay: T,
    dim: usize,
    dynamics: Dynamics<T>,
    output: OutputMap<T>,
    d_box: DomainBox<T>,
    u_box: DomainBox<T>,
    period: Option<T>,
    finite_output: Option<FiniteOutput<T>>,
}

impl<T: Real> fmt::Debug for RfdeSystem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RfdeSystem")
            .field("name", &self.name)
            .field("delay", &self.delay)
            .field("dim", &self.dim)
            .field("output", &self.output)
            .field("d_box", &self.d_box)
            .field("u_box", &self.u_box)
            .field("period", &self.period)
            .finish()
    }
}

impl<T: Real> RfdeSystem<T> {
    /// System with no input or disturbance channels and output `Y = x(t)`.
    pub fn new(
        name: impl Into<String>,
        delay: T,
        dim: usize,
        dynamics: impl Fn(T, &dyn HistoryAccess<T>, &[T], &[T], &mut [T]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(delay > T::zero()) || !delay.is_finite() {
            return Err(Error::Domain {
                what: "delay r",
                value: delay.as_f64(),
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        if dim == 0 {
            return Err(Error::Malformed {
                what: "system",
                reason: "state dimension must be positive".into(),
            });
        }
        Ok(Self {
            name: name.into(),
            delay,
            dim,
            dynamics: Arc::new(dynamics),
            output: OutputMap::state_identity(dim),
            d_box: DomainBox::empty(),
            u_box: DomainBox::empty(),
            period: None,
            finite_output: None,
        })
    }

    pub fn with_output(mut self, output: OutputMap<T>) -> Self {
        self.output = output;
        self
    }

    pub fn with_d_box(mut self, d_box: DomainBox<T>) -> Self {
        self.d_box = d_box;
        self
    }

    pub fn with_u_box(mut self, u_box: DomainBox<T>) -> Self {
        self.u_box = u_box;
        self
    }

    pub fn with_period(mut self, period: T) -> Result<Self> {
        if !(period > T::zero()) {
            return Err(Error::Domain {
                what: "period T",
                value: period.as_f64(),
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        self.period = Some(period);
        Ok(self)
    }

    pub fn with_finite_output(mut self, fo: FiniteOutput<T>) -> Self {
        self.finite_output = Some(fo);
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn delay(&self) -> T {
        self.delay
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn output(&self) -> &OutputMap<T> {
        &self.output
    }

    pub fn d_box(&self) -> &DomainBox<T> {
        &self.d_box
    }

    pub fn u_box(&self) -> &DomainBox<T> {
        &self.u_box
    }

    pub fn period(&self) -> Option<T> {
        self.period
    }

    pub fn finite_output(&self) -> Option<&FiniteOutput<T>> {
        self.finite_output.as_ref()
    }

    pub fn dynamics(&self) -> &Dynamics<T> {
        &self.dynamics
    }

    #[inline]
    pub fn eval_into(&self, t: T, x: &dyn HistoryAccess<T>, u: &[T], d: &[T], out: &mut [T]) {
        (self.dynamics)(t, x, u, d, out)
    }

    pub fn eval(&self, t: T, x: &dyn HistoryAccess<T>, u: &[T], d: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        self.eval_into(t, x, u, d, &mut out);
        out
    }

    pub fn output_norm(&self, t: T, x: &dyn HistoryAccess<T>) -> T {
        self.output.norm(t, x)
    }

    pub(crate) fn check_history(&self, x: &HistorySegment<T>) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::Dimension {
                what: "initial segment",
                expected: self.dim,
                got: x.dim(),
            });
        }
        let tol = T::lit(1e-12) * (T::one() + self.delay);
        if (x.delay() - self.delay).abs() > tol {
            return Err(Error::Domain {
                what: "initial segment delay",
                value: x.delay().as_f64(),
                lo: self.delay.as_f64(),
                hi: self.delay.as_f64(),
            });
        }
        Ok(())
    }
}
