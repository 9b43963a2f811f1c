//! Closing the input channel with a state- or output-scaled disturbance.

use crate::compfn::ComparisonFn;
use crate::error::{Error, Result};
use crate::history::HistoryAccess;
use crate::scalar::{self, Real};
use crate::signals::DomainBox;
use crate::simulator::RfdeSystem;

/// How the synthesized input is scaled.
#[derive(Debug, Clone)]
pub enum IosifyMode<T: Real> {
    /// `u = θ(‖T_r(t)x‖_r) / φ(t) · d′`; `phi` is required.
    StateScaled { phi: Option<ComparisonFn<T>> },
    /// `u = θ(‖H(t, T_r(t)x)‖) · d′`.
    OutputScaled,
}

/// Replaces the input of `sys` by `θ(·)·d′` with `d′` a new disturbance in
/// the unit ball of the input space.
///
/// The returned system has disturbance `(d′, d)` on the box
/// `[-1, 1]^m × D`; a `d′` outside the unit ball is scaled onto it before
/// use. The input box of the result is empty.
pub fn iosify_system<T: Real>(
    sys: &RfdeSystem<T>,
    theta: &ComparisonFn<T>,
    mode: IosifyMode<T>,
) -> Result<RfdeSystem<T>> {
    let m = sys.u_box().dim();
    if m == 0 {
        return Err(Error::Config(format!(
            "system `{}` has no input channel",
            sys.name()
        )));
    }
    if theta.eval(T::zero()) != T::zero() {
        return Err(Error::Class {
            name: theta.name().to_string(),
            class: "θ(0) = 0".into(),
            reason: format!("θ(0) = {}", theta.eval(T::zero())),
        });
    }
    let phi = match &mode {
        IosifyMode::StateScaled { phi: None } => {
            return Err(Error::Config("state-scaled mode needs the weight φ".into()))
        }
        IosifyMode::StateScaled { phi: Some(p) } => Some(p.clone()),
        IosifyMode::OutputScaled => None,
    };
    let mut bounds = vec![[-T::one(), T::one()]; m];
    bounds.extend_from_slice(sys.d_box().bounds());
    let d_box = DomainBox::new(bounds)?;
    let base = sys.clone();
    let theta = theta.clone();
    let tag = match &phi {
        Some(p) => format!("state_scaled({}, {})", theta.name(), p.name()),
        None => format!("output_scaled({})", theta.name()),
    };
    let mut out = RfdeSystem::new(
        format!("iosify[{tag}]({})", sys.name()),
        sys.delay(),
        sys.dim(),
        move |t, x: &dyn HistoryAccess<T>, _u: &[T], d: &[T], out: &mut [T]| {
            let (dp, rest) = d.split_at(m);
            let norm = scalar::norm(dp);
            let clip = if norm > T::one() {
                T::one() / norm
            } else {
                T::one()
            };
            let gain = match &phi {
                Some(p) => theta.eval(x.sup_norm()) / p.eval(t),
                None => theta.eval(base.output_norm(t, x)),
            };
            let u: Vec<T> = dp.iter().map(|v| *v * clip * gain).collect();
            base.eval_into(t, x, &u, rest, out);
        },
    )?
    .with_output(sys.output().clone())
    .with_d_box(d_box);
    if let Some(p) = sys.period() {
        out = out.with_period(p)?;
    }
    Ok(out)
}
