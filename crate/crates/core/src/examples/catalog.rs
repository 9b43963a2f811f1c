//! Constructors for the three worked examples.

use std::sync::Arc;

use crate::compfn::{ClassTag, ComparisonFn};
use crate::error::{Error, Result};
use crate::history::{HistoryAccess, HistorySegment};
use crate::lyapunov::{
    DecayBound, InputGuard, LyapunovFunctional, RazumikhinFunction, SamplerSpec, Verdict,
};
use crate::scalar::Real;
use crate::signals::DomainBox;
use crate::simulator::{CheckVerdict, IntegrateOptions, OutputMap, RfdeSystem};

use super::{Certificate, CheckContext, ExampleBundle, Scenario};

/// `3√2/2`, the bound on `r·e^r` for the distributed-delay example.
pub const DELAY_BOUND_5_2: f64 = 2.121_320_343_559_642_4;

fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

/// Delayed bilinear system with output `x₂`, with `u` boxed to `[-1, 1]`.
pub fn example_4_8<T: Real>(r: f64) -> Result<ExampleBundle<T>> {
    example_4_8_boxed(r, 1.0)
}

/// ```text
/// ẋ₁ = d x₁,   ẋ₂ = −x₂ + x₁(t−r) u,   Y = x₂,   d ∈ [-1, 1]
/// ```
/// with `u ∈ [-u_max, u_max]`, and the functional
/// `V = e^{-8t}x₁⁴(0) + e^{-4t}x₁²(0) + ½x₂²(0) + ¼e^{-8t}∫x₁⁴`.
pub fn example_4_8_boxed<T: Real>(r: f64, u_max: f64) -> Result<ExampleBundle<T>> {
    positive("r", r)?;
    positive("u_max", u_max)?;
    let system = RfdeSystem::new(
        "example-4.8",
        lit::<T>(r),
        2,
        |_, x: &dyn HistoryAccess<T>, u: &[T], d: &[T], out: &mut [T]| {
            let head = x.head();
            out[0] = d[0] * head[0];
            out[1] = -head[1] + x.component_at(-x.delay(), 0) * u[0];
        },
    )?
    .with_d_box(DomainBox::symmetric(1, T::one())?)
    .with_u_box(DomainBox::symmetric(1, lit(u_max))?)
    .with_output(OutputMap::State {
        dim: 1,
        map: Arc::new(|_, x: &[T]| vec![x[1]]),
    });

    let quarter = lit::<T>(0.25);
    let v = LyapunovFunctional::new("V_4.8", move |t: T, x: &HistorySegment<T>| {
        let h = x.head();
        let (x1, x2) = (h[0], h[1]);
        let e8 = (lit::<T>(-8.0) * t).exp();
        let e4 = (lit::<T>(-4.0) * t).exp();
        let int = x.integrate_with(|v| v[0].powi(4));
        e8 * x1.powi(4) + e4 * x1 * x1 + lit::<T>(0.5) * x2 * x2 + quarter * e8 * int
    })
    .with_analytic_dini(move |t: T, x: &HistorySegment<T>, v: &[T]| {
        let h = x.head();
        let (x1, x2) = (h[0], h[1]);
        let tail = x.tail()[0];
        let e8 = (lit::<T>(-8.0) * t).exp();
        let e4 = (lit::<T>(-4.0) * t).exp();
        let int = x.integrate_with(|w| w[0].powi(4));
        lit::<T>(-8.0) * e8 * x1.powi(4) + lit::<T>(4.0) * e8 * x1.powi(3) * v[0]
            - lit::<T>(4.0) * e4 * x1 * x1
            + lit::<T>(2.0) * e4 * x1 * v[0]
            + x2 * v[1]
            - lit::<T>(2.0) * e8 * int
            + quarter * e8 * (x1.powi(4) - tail.powi(4))
    })
    .with_param("r", r)
    .zero_at_zero();

    // V⁰ ≤ −V + ¼e^{8t}u⁴
    let dissipation: DecayBound<T> = Arc::new(move |t: T, val: T, u: &[T]| {
        -val + quarter * (lit::<T>(8.0) * t).exp() * u[0].powi(4)
    });

    let x0 = HistorySegment::constant(lit(r), &[T::one(), T::zero()])?;
    let blowup = Scenario {
        x0,
        u: vec![T::one()],
        d: vec![T::one()],
    };
    let certificates = vec![
        Certificate::LyapunovIos {
            label: "IOS decay with rho = s/2, zeta = s^4/2, delta = exp(2t)".into(),
            v: v.clone(),
            rho: ComparisonFn::linear(lit(0.5)),
            zeta: ComparisonFn::power(lit(0.5), lit(4.0)),
            delta: ComparisonFn::exp_weight(lit(2.0)),
            expected: Verdict::NoCounterexample,
        },
        Certificate::Dissipation {
            label: "V0 <= -V + exp(8t) u^4 / 4".into(),
            v,
            bound: dissipation,
            expected: Verdict::NoCounterexample,
        },
        Certificate::Divergence {
            label: "d = 1, u = 1, x1 = 1: |Y| > 1e3 before t = 10 + r".into(),
            scenario: blowup.clone(),
            threshold: 1e3,
            by: 10.0 + r,
        },
        Certificate::IosEnvelope {
            label: "uniform IOS with gamma = s^2, delta = 1 fails".into(),
            gamma: ComparisonFn::power(T::one(), lit(2.0)),
            delta: ComparisonFn::constant(T::one()),
            extra: Some(blowup),
            expected: CheckVerdict::Fail,
        },
    ];
    let context = CheckContext {
        sampler: SamplerSpec::new(0.0, 3.0, 2.0, 10_000, 0),
        trajectories: 16,
        horizon: 10.0 + r,
        integrate: IntegrateOptions::with_step(1e-2),
    };
    Ok(ExampleBundle {
        name: "example-4.8".into(),
        params: [("r".into(), r), ("u_max".into(), u_max)].into(),
        system,
        certificates,
        context,
        notes: "Non-uniform IOS from u with gain s^2 and weight exp(2t); not uniformly IOS, since \
                d = 1, u = 1 gives an unbounded output."
            .into(),
    })
}

/// Constants of the distributed-delay example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants52 {
    /// `K = r·e^r`.
    pub k: f64,
    /// `c = 99/2 − (33/√2 + (√33 + 4√2)/(2ε))·K`.
    pub c: f64,
    /// Smallest admissible feedback gain.
    pub l_min: f64,
    /// Decay rate: `D⁺V ≤ −(4c/33)e^t V` under the Razumikhin guard.
    pub rate: f64,
}

/// Checks the preconditions and computes the constants.
pub fn constants_5_2(r: f64, epsilon: f64) -> Result<Constants52> {
    positive("r", r)?;
    positive("epsilon", epsilon)?;
    let k = r * r.exp();
    if !(DELAY_BOUND_5_2 > k) {
        return Err(Error::Precondition {
            inequality: "3√2/2 > r exp(r)",
            lhs: DELAY_BOUND_5_2,
            rhs: k,
        });
    }
    let s33 = 33f64.sqrt();
    let s2 = 2f64.sqrt();
    let c = 49.5 - (33.0 / s2 + (s33 + 4.0 * s2) / (2.0 * epsilon)) * k;
    if !(c > 0.0) {
        return Err(Error::Precondition {
            inequality: "c = 99/2 − (33/√2 + (√33+4√2)/(2ε))·r exp(r) > 0",
            lhs: c,
            rhs: 0.0,
        });
    }
    let l_min = (8.0 / s33 + epsilon * (s33 + 4.0 * s2) / 2.0) * k + c;
    Ok(Constants52 {
        k,
        c,
        l_min,
        rate: 4.0 * c / 33.0,
    })
}

/// The pointwise function `33/4 e^{2t}x₁² + ½(x₂ + 4e^t x₁)²` with its
/// derivative.
pub fn razumikhin_5_2<T: Real>() -> RazumikhinFunction<T> {
    let a = lit::<T>(33.0 / 4.0);
    RazumikhinFunction::new("V_5.2", move |t: T, x: &[T]| {
        let z = x[1] + lit::<T>(4.0) * t.exp() * x[0];
        a * (lit::<T>(2.0) * t).exp() * x[0] * x[0] + lit::<T>(0.5) * z * z
    })
    .with_analytic_dini(move |t: T, x: &[T], v: &[T]| {
        let et = t.exp();
        let four = lit::<T>(4.0);
        let two = lit::<T>(2.0);
        let z = x[1] + four * et * x[0];
        let dt = two * a * et * et * x[0] * x[0] + z * four * et * x[0];
        let g0 = two * a * et * et * x[0] + four * et * z;
        dt + g0 * v[0] + z * v[1]
    })
}

/// Default `L`: the smallest admissible gain plus one.
pub fn example_5_2_default<T: Real>(r: f64) -> Result<ExampleBundle<T>> {
    example_5_2(r, 1.0, None)
}

/// Closed loop of
/// ```text
/// ẋ₁ = d e^t ∫_{t−r}^t x₁ + x₂,   ẋ₂ = u,   Y = T_r(t)x,   d ∈ [-1, 1]
/// ```
/// with `u = −4e^t x₁ − 33/2 e^{2t}x₁ − 4e^t x₂ − L e^t(x₂ + 4e^t x₁)`.
///
/// Refuses `r·e^r ≥ 3√2/2`, a nonpositive `c`, and `L` below its minimum,
/// naming the inequality with both sides. `gain = None` picks
/// `L_min + 1`.
pub fn example_5_2<T: Real>(r: f64, epsilon: f64, gain: Option<f64>) -> Result<ExampleBundle<T>> {
    let k = constants_5_2(r, epsilon)?;
    let l = gain.unwrap_or(k.l_min + 1.0);
    if !(l >= k.l_min) {
        return Err(Error::Precondition {
            inequality: "L ≥ (8/√33 + ε(√33+4√2)/2)·r exp(r) + c",
            lhs: l,
            rhs: k.l_min,
        });
    }
    let lt = lit::<T>(l);
    let system = RfdeSystem::new(
        "example-5.2",
        lit::<T>(r),
        2,
        move |t: T, x: &dyn HistoryAccess<T>, _u: &[T], d: &[T], out: &mut [T]| {
            let h = x.head();
            let (x1, x2) = (h[0], h[1]);
            let et = t.exp();
            let four = lit::<T>(4.0);
            let int = x.integrate_component(0);
            let u = -four * et * x1
                - lit::<T>(16.5) * et * et * x1
                - four * et * x2
                - lt * et * (x2 + four * et * x1);
            out[0] = d[0] * et * int + x2;
            out[1] = u;
        },
    )?
    .with_d_box(DomainBox::symmetric(1, T::one())?)
    .with_output(OutputMap::HistoryPointwise {
        dim: 2,
        map: Arc::new(|_, x: &[T]| x.to_vec()),
    });

    let rate = lit::<T>(k.rate);
    let bound: DecayBound<T> = Arc::new(move |t: T, v: T, _: &[T]| -rate * t.exp() * v);
    let vr = razumikhin_5_2::<T>()
        .with_param("r", r)
        .with_param("epsilon", epsilon)
        .with_param("L", l);
    let certificates = vec![
        Certificate::Razumikhin {
            label: format!("a = s/2, D+V <= -{:.6} exp(t) V", k.rate),
            vr: vr.clone(),
            a: ComparisonFn::linear(lit(0.5)),
            bound,
            guard: None,
            expected: Verdict::NoCounterexample,
        },
        Certificate::Nonincreasing {
            label: "V decreases where a(sup V) <= V; sup over the window nonincreasing".into(),
            vr,
            a: ComparisonFn::linear(lit(0.5)),
            rel_slack: 1e-6,
        },
    ];
    // The fast closed-loop mode scales like λ₀e^t; the step follows it.
    let lambda0 = spectral_radius([[-4.0, 1.0], [-16.5, -l]]);
    let integrate = IntegrateOptions {
        step: STIFF_STEP_FACTOR / lambda0,
        step_decay: 1.0,
        ..IntegrateOptions::default()
    };
    let context = CheckContext {
        sampler: SamplerSpec::new(0.0, 3.0, 1.0, 10_000, 0),
        trajectories: 20,
        horizon: 10.0,
        integrate,
    };
    Ok(ExampleBundle {
        name: "example-5.2".into(),
        params: [
            ("r".into(), r),
            ("epsilon".into(), epsilon),
            ("L".into(), l),
            ("c".into(), k.c),
            ("L_min".into(), k.l_min),
        ]
        .into(),
        system,
        certificates,
        context,
        notes: format!(
            "r exp(r) = {:.5} < 3√2/2 = {:.5}; c = {:.6}; non-uniformly RGAS closed loop with \
             D+V <= -(4c/33) exp(t) V under the Razumikhin guard a = s/2.",
            k.k, DELAY_BOUND_5_2, k.c
        ),
    })
}

/// `|λ| · h` for the fast mode of the distributed-delay closed loop.
pub const STIFF_STEP_FACTOR: f64 = 1.0;

fn spectral_radius(m: [[f64; 2]; 2]) -> f64 {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        (tr.abs() + disc.sqrt()) / 2.0
    } else {
        det.abs().sqrt()
    }
}

/// `h(x) = x(1 − 2√R/|x|)` outside `|x| ≤ 2√R`, zero inside.
pub fn output_5_4<T: Real>(big_r: T, x: T) -> T {
    let edge = lit::<T>(2.0) * big_r.sqrt();
    if x.abs() <= edge {
        T::zero()
    } else {
        x * (T::one() - edge / x.abs())
    }
}

/// Cubic system with delayed disturbance gain, delay 1 and `u ∈ [-1, 1]`.
pub fn example_5_4<T: Real>(big_r: f64) -> Result<ExampleBundle<T>> {
    example_5_4_with(big_r, 1.0, 1.0)
}

/// ```text
/// ẋ = d x(t−r) − x³ + u,   Y = h(x(t+θ)), θ ∈ [-r, 0],   d ∈ [-R, R]
/// ```
/// with `u ∈ [-u_max, u_max]` and `V = max{0, x² − 4R}`.
pub fn example_5_4_with<T: Real>(big_r: f64, r: f64, u_max: f64) -> Result<ExampleBundle<T>> {
    positive("R", big_r)?;
    positive("r", r)?;
    positive("u_max", u_max)?;
    let br = lit::<T>(big_r);
    let system = RfdeSystem::new(
        "example-5.4",
        lit::<T>(r),
        1,
        |_, x: &dyn HistoryAccess<T>, u: &[T], d: &[T], out: &mut [T]| {
            let x0 = x.head()[0];
            out[0] = d[0] * x.component_at(-x.delay(), 0) - x0 * x0 * x0 + u[0];
        },
    )?
    .with_d_box(DomainBox::symmetric(1, br)?)
    .with_u_box(DomainBox::symmetric(1, lit(u_max))?)
    .with_output(OutputMap::HistoryPointwise {
        dim: 1,
        map: Arc::new(move |_, x: &[T]| vec![output_5_4(br, x[0])]),
    });

    let four_r = lit::<T>(4.0 * big_r);
    let vr = RazumikhinFunction::new("V_5.4", move |_, x: &[T]| {
        (x[0] * x[0] - four_r).max(T::zero())
    })
    .with_analytic_dini(move |_, x: &[T], v: &[T]| {
        let gap = x[0] * x[0] - four_r;
        let slope = lit::<T>(2.0) * x[0] * v[0];
        if gap > T::zero() {
            slope
        } else if gap < T::zero() {
            T::zero()
        } else {
            slope.max(T::zero())
        }
    })
    .with_param("R", big_r);
    let zeta = ComparisonFn::power(lit(3.0 / (2.0 * big_r)), lit(4.0 / 3.0));
    let gamma = ComparisonFn::power(lit((3.0 / (2.0 * big_r)).sqrt()), lit(2.0 / 3.0))
        .with_class(ClassTag::KInf);
    let certificates = vec![
        Certificate::Razumikhin {
            label: "a = s/4, rho = 2Rs, zeta = 3/(2R) s^(4/3), delta = 1".into(),
            vr,
            a: ComparisonFn::linear(lit(0.25)),
            bound: crate::lyapunov::decay_bound(&ComparisonFn::linear(lit(2.0 * big_r))),
            guard: Some(InputGuard::new(zeta, ComparisonFn::constant(T::one()))),
            expected: Verdict::NoCounterexample,
        },
        Certificate::IosEnvelope {
            label: "uniform IOS with gamma = sqrt(3/(2R)) s^(2/3), delta = 1".into(),
            gamma,
            delta: ComparisonFn::constant(T::one()),
            extra: None,
            expected: CheckVerdict::Pass,
        },
    ];
    let context = CheckContext {
        sampler: SamplerSpec::new(0.0, 5.0, 2.0 + 2.0 * big_r.sqrt(), 10_000, 0),
        trajectories: 32,
        horizon: 10.0,
        integrate: IntegrateOptions::with_step(5e-3),
    };
    Ok(ExampleBundle {
        name: "example-5.4".into(),
        params: [
            ("R".into(), big_r),
            ("r".into(), r),
            ("u_max".into(), u_max),
        ]
        .into(),
        system,
        certificates,
        context,
        notes: "Uniformly IOS from u with gain sqrt(3/(2R)) s^(2/3) and unit weight; the output \
                vanishes inside |x| <= 2 sqrt(R)."
            .into(),
    })
}

fn positive(what: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: v,
            lo: 0.0,
            hi: f64::INFINITY,
        })
    }
}

/// `ẋ = −x(t)` with delay `r`, output `x(t)`.
pub fn scalar_contraction<T: Real>(r: f64) -> Result<RfdeSystem<T>> {
    positive("r", r)?;
    RfdeSystem::new(
        "scalar-contraction",
        lit::<T>(r),
        1,
        |_, x: &dyn HistoryAccess<T>, _: &[T], _: &[T], out: &mut [T]| out[0] = -x.head()[0],
    )
}

/// The scalar contraction with `V = x(0)²` and the claim
/// `D⁺V ≤ −2·rate·V`, true exactly for `rate ≤ 1`.
pub fn scalar_contraction_bundle<T: Real>(r: f64, rate: f64) -> Result<ExampleBundle<T>> {
    if !rate.is_finite() {
        return Err(Error::Domain {
            what: "rate",
            value: rate,
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        });
    }
    let system = scalar_contraction(r)?;
    let v = LyapunovFunctional::new("x(0)^2", |_, x: &HistorySegment<T>| {
        let h = x.head()[0];
        h * h
    })
    .with_analytic_dini(|_, x: &HistorySegment<T>, v: &[T]| lit::<T>(2.0) * x.head()[0] * v[0])
    .zero_at_zero();
    let k = lit::<T>(2.0 * rate);
    let bound: DecayBound<T> = Arc::new(move |_, v, _| -k * v);
    let certificates = vec![Certificate::Dissipation {
        label: format!("D+V <= -{} V", 2.0 * rate),
        v,
        bound,
        expected: Verdict::NoCounterexample,
    }];
    Ok(ExampleBundle {
        name: "scalar-contraction".into(),
        params: [("r".to_string(), r), ("rate".to_string(), rate)]
            .into_iter()
            .collect(),
        system,
        certificates,
        context: CheckContext {
            sampler: SamplerSpec::new(0.0, 3.0, 2.0, 10_000, 0),
            trajectories: 16,
            horizon: 10.0,
            integrate: IntegrateOptions::with_step(1e-2),
        },
        notes: "x' = -x(t); V = x(0)^2 decays at rate 2 along solutions".into(),
    })
}
