use super::*;
use crate::history::{HistoryAccess, HistorySegment};
use crate::signals::{DomainBox, PiecewiseSignal};

fn none() -> PiecewiseSignal<f64> {
    PiecewiseSignal::nominal(DomainBox::empty())
}

fn delayed_decay() -> RfdeSystem<f64> {
    RfdeSystem::new("x' = -x(t-1)", 1.0, 1, |_, x, _, _, out| {
        out[0] = -x.at(-1.0)[0];
    })
    .unwrap()
}

#[test]
fn first_delay_interval_is_linear() {
    let sys = delayed_decay();
    let x0 = HistorySegment::constant(1.0, &[1.0]).unwrap();
    let tr = integrate(
        &sys,
        0.0,
        &x0,
        &none(),
        &none(),
        1.0,
        &IntegrateOptions::with_step(1e-2),
    )
    .unwrap();
    for (i, &t) in tr.times().iter().enumerate() {
        assert!((tr.state(i)[0] - (1.0 - t)).abs() < 1e-13);
    }
    // second interval: x = 1 - t + (t-1)^2/2
    let tr = integrate(
        &sys,
        0.0,
        &x0,
        &none(),
        &none(),
        2.0,
        &IntegrateOptions::with_step(1e-2),
    )
    .unwrap();
    let last = tr.state(tr.len() - 1)[0];
    assert!((last - (1.0 - 2.0 + 0.5)).abs() < 1e-12, "{last}");
}

#[test]
fn exponential_growth() {
    let sys = RfdeSystem::new("x' = x", 1.0, 1, |_, x, _, _, out| out[0] = x.head()[0]).unwrap();
    let x0 = HistorySegment::constant(1.0, &[1.0]).unwrap();
    let tr = integrate(
        &sys,
        0.0,
        &x0,
        &none(),
        &none(),
        1.0,
        &IntegrateOptions::with_step(1e-3),
    )
    .unwrap();
    assert!((tr.state(tr.len() - 1)[0] - std::f64::consts::E).abs() < 1e-6);
    assert!(tr.completed());
}

#[test]
fn zero_is_preserved() {
    let sys = delayed_decay();
    let x0 = HistorySegment::zeros(1.0, 1).unwrap();
    let tr = integrate(
        &sys,
        0.0,
        &x0,
        &none(),
        &none(),
        10.0,
        &IntegrateOptions::default(),
    )
    .unwrap();
    assert!(tr.states().all(|x| x[0] == 0.0));
}

#[test]
fn switch_times_are_grid_points() {
    let b = DomainBox::new(vec![[0.0, 1.0]]).unwrap();
    let d = PiecewiseSignal::new(vec![0.123_456], vec![vec![0.0], vec![1.0]], b.clone()).unwrap();
    let sys = RfdeSystem::new("x' = d", 1.0, 1, |_, _, _, d, out| out[0] = d[0])
        .unwrap()
        .with_d_box(b);
    let x0 = HistorySegment::zeros(1.0, 1).unwrap();
    let tr = integrate(
        &sys,
        0.0,
        &x0,
        &none(),
        &d,
        1.0,
        &IntegrateOptions::with_step(0.1),
    )
    .unwrap();
    assert!(tr.times().contains(&0.123_456));
    let last = tr.state(tr.len() - 1)[0];
    assert!((last - (1.0 - 0.123_456)).abs() < 1e-12);
}

#[test]
fn blow_up_is_reported() {
    let sys = RfdeSystem::new("x' = x^2", 1.0, 1, |_, x, _, _, out| {
        out[0] = x.head()[0] * x.head()[0]
    })
    .unwrap();
    let x0 = HistorySegment::constant(1.0, &[2.0]).unwrap();
    let tr = integrate(
        &sys,
        0.0,
        &x0,
        &none(),
        &none(),
        1.0,
        &IntegrateOptions::with_step(1e-3),
    )
    .unwrap();
    match tr.status() {
        TrajectoryStatus::BlewUp { t } => assert!(t < 0.6 && t > 0.4, "{t}"),
        s => panic!("{s:?}"),
    }
}

#[test]
fn nan_dynamics_fail_the_step() {
    let sys = RfdeSystem::new("nan", 1.0, 1, |t, _, _, _, out| {
        out[0] = if t > 0.5 { f64::NAN } else { 0.0 }
    })
    .unwrap();
    let x0 = HistorySegment::zeros(1.0, 1).unwrap();
    let tr = integrate(
        &sys,
        0.0,
        &x0,
        &none(),
        &none(),
        1.0,
        &IntegrateOptions::with_step(0.1),
    )
    .unwrap();
    assert!(matches!(tr.status(), TrajectoryStatus::StepFailure { .. }));
}

#[test]
fn mismatched_dimensions_are_rejected() {
    let sys = delayed_decay();
    let x0 = HistorySegment::zeros(1.0, 2).unwrap();
    assert!(integrate(
        &sys,
        0.0,
        &x0,
        &none(),
        &none(),
        1.0,
        &IntegrateOptions::default()
    )
    .is_err());
    let x0 = HistorySegment::zeros(2.0, 1).unwrap();
    assert!(integrate(
        &sys,
        0.0,
        &x0,
        &none(),
        &none(),
        1.0,
        &IntegrateOptions::default()
    )
    .is_err());
}

#[test]
fn history_view_reproduces_initial_segment() {
    let sys = delayed_decay();
    let x0 = HistorySegment::from_fn(1.0, 1, 9, |th: f64| vec![th.cos()]).unwrap();
    let tr = integrate(
        &sys,
        2.0,
        &x0,
        &none(),
        &none(),
        3.0,
        &IntegrateOptions::default(),
    )
    .unwrap();
    let h = tr.history_at(2.0).unwrap();
    for (i, &g) in x0.grid().iter().enumerate() {
        assert_eq!(h.eval(g).unwrap(), x0.value(i));
    }
}

#[test]
fn distributed_integral_matches_quadrature() {
    // x' = ∫_{-r}^0 x; with x0 ≡ 1, x(t) on [0, r] satisfies x'' = x(t) - x(t - r)
    let sys = RfdeSystem::new("int", 0.5, 1, |_, x, _, _, out| {
        out[0] = x.integrate_component(0)
    })
    .unwrap();
    let x0 = HistorySegment::constant(0.5, &[1.0]).unwrap();
    let fine = integrate(
        &sys,
        0.0,
        &x0,
        &none(),
        &none(),
        2.0,
        &IntegrateOptions::with_step(1e-3),
    )
    .unwrap();
    let tr = integrate(
        &sys,
        0.0,
        &x0,
        &none(),
        &none(),
        2.0,
        &IntegrateOptions::with_step(1e-2),
    )
    .unwrap();
    let a = tr.state(tr.len() - 1)[0];
    let b = fine.state(fine.len() - 1)[0];
    assert!((a - b).abs() < 1e-7, "{a} {b}");
    // Compare the window integral with direct quadrature of the view.
    let v = fine.view_at(1.7);
    let direct = {
        let n = 20_000;
        let h = 0.5 / n as f64;
        (0..n)
            .map(|i| v.at(-0.5 + (i as f64 + 0.5) * h)[0] * h)
            .sum::<f64>()
    };
    assert!((v.integrate_component(0) - direct).abs() < 1e-9);
}

#[test]
fn integration_is_deterministic() {
    let sys = delayed_decay();
    let x0 = HistorySegment::from_fn(1.0, 1, 5, |th: f64| vec![th.sin() + 0.3]).unwrap();
    let a = integrate(
        &sys,
        0.0,
        &x0,
        &none(),
        &none(),
        5.0,
        &IntegrateOptions::default(),
    )
    .unwrap();
    let b = integrate(
        &sys,
        0.0,
        &x0,
        &none(),
        &none(),
        5.0,
        &IntegrateOptions::default(),
    )
    .unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
}

#[test]
fn moduli_examples() {
    let zero = RfdeSystem::new("0", 1.0, 2, |_, _, _, _, out: &mut [f64]| out.fill(0.0)).unwrap();
    let m = estimate_lipschitz_moduli(&zero, Region::new(0.0, 1.0, 1.0), 200, 1);
    assert_eq!(m.l_hat, 0.0);
    assert!(!m.low_confidence);
    let id = zero.clone().with_output(OutputMap::HistoryPointwise {
        dim: 2,
        map: std::sync::Arc::new(|_, x| x.to_vec()),
    });
    let m = estimate_lipschitz_moduli(&id, Region::new(0.0, 1.0, 1.0), 500, 2);
    assert!(m.l_h_hat <= 1.5 + 1e-12 && m.l_h_hat > 1.0, "{}", m.l_h_hat);
    let empty = estimate_lipschitz_moduli(&zero, Region::new(0.0, 1.0, 1.0), 0, 2);
    assert!(empty.low_confidence);
}

#[test]
fn rfc_examples() {
    let zero = RfdeSystem::new("0", 1.0, 1, |_, _, _, _, out: &mut [f64]| out.fill(0.0)).unwrap();
    let rep = check_rfc(&zero, 2.0, 1.0, 8, 3, &IntegrateOptions::default()).unwrap();
    assert_eq!(rep.verdict, RfcVerdict::NoCounterexample);
    assert!((rep.max_norm - 2.0).abs() < 1e-12);
    let sq = RfdeSystem::new("x^2", 1.0, 1, |_, x, _, _, out| {
        out[0] = x.head()[0] * x.head()[0]
    })
    .unwrap();
    let rep = check_rfc(&sq, 2.0, 1.0, 4, 3, &IntegrateOptions::with_step(1e-3)).unwrap();
    assert_eq!(rep.verdict, RfcVerdict::BlowUpWitness);
    let w = rep.witness.unwrap();
    assert!(w.t_fail - w.t0 < 0.6);
}

#[test]
fn system_invariants() {
    let sys = delayed_decay().with_period(1.0).unwrap();
    let rep = check_system_invariants(&sys, 50, 1).unwrap();
    assert!(rep.pass);
    let drift = RfdeSystem::new("drift", 1.0, 1, |t, x, _, _, out| {
        out[0] = -x.head()[0] + 0.1 * t
    })
    .unwrap()
    .with_period(1.0)
    .unwrap();
    let rep = check_system_invariants(&drift, 50, 1).unwrap();
    assert!(!rep.pass);
}
