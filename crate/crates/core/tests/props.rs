use proptest::prelude::*;
use rand::Rng;
use rfde::compfn::{check_class, kl_from_rate, ClassGrid};
use rfde::history::uniform_grid;
use rfde::signals::DomainBox;
use rfde::simulator::integrate;
use rfde::{rng, Cmp, History, HistorySampler, IntegrateOptions, Signal, System};

fn segment(delay: f64, values: &[f64]) -> History {
    let grid = uniform_grid(delay, values.len());
    History::new(delay, grid, values.iter().map(|v| vec![*v]).collect()).unwrap()
}

fn lag_system(a: f64, b: f64, r: f64) -> System {
    System::new("lag", r, 1, move |_, x, _, _, out: &mut [f64]| {
        out[0] = -a * x.component_at(0.0, 0) + b * x.component_at(-r, 0)
    })
    .unwrap()
}

fn run(sys: &System, x0: &History, t1: f64, h: f64) -> rfde::Traj {
    let u = Signal::nominal(sys.u_box().clone());
    let d = Signal::nominal(sys.d_box().clone());
    integrate(sys, 0.0, x0, &u, &d, t1, &IntegrateOptions::with_step(h)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn history_json_round_trip(delay in 0.1f64..5.0, values in prop::collection::vec(-1e3f64..1e3, 2..12)) {
        let seg = segment(delay, &values);
        let json = serde_json::to_string(&seg).unwrap();
        let back: History = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, seg);
    }

    #[test]
    fn history_interpolates_its_knots(delay in 0.1f64..5.0, values in prop::collection::vec(-10f64..10.0, 2..12)) {
        let seg = segment(delay, &values);
        for (i, theta) in seg.grid().iter().enumerate() {
            prop_assert_eq!(seg.eval(*theta).unwrap()[0], values[i]);
        }
        let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(seg.sup_norm() >= sup * (1.0 - 1e-12));
        prop_assert!(seg.eval(-delay - 1.0).is_err());
    }

    #[test]
    fn sampled_histories_respect_the_bound(seed in any::<u64>(), bound in 0.01f64..10.0, dim in 1usize..4) {
        let seg: History = HistorySampler::new(bound).sample(2.0, dim, &mut rng::stream(seed, 0));
        prop_assert_eq!(seg.dim(), dim);
        prop_assert!(seg.sup_norm() <= bound * (1.0 + 1e-9));
        prop_assert_eq!(seg.grid()[0], -2.0);
        prop_assert_eq!(*seg.grid().last().unwrap(), 0.0);
    }

    #[test]
    fn scaling_scales_the_norm(values in prop::collection::vec(-10f64..10.0, 2..8), k in -5f64..5.0) {
        let seg = segment(1.0, &values);
        let scaled = seg.scaled(k).sup_norm();
        prop_assert!((scaled - k.abs() * seg.sup_norm()).abs() <= 1e-12 * (1.0 + scaled));
    }

    #[test]
    fn power_functions_are_k_infinity(c in 0.01f64..100.0, p in 0.2f64..4.0) {
        let f = Cmp::power(c, p);
        let report = check_class(&f, &ClassGrid::comparison()).unwrap();
        prop_assert!(report.pass, "{:?}", report);
        let y = f.eval(1.7);
        prop_assert!((f.inverse(y).unwrap() - 1.7).abs() <= 1e-9);
    }

    #[test]
    fn linear_rate_gives_exponential_decay(c in 0.1f64..3.0, s in 1e-3f64..10.0, t in 0.0f64..5.0) {
        let sigma = kl_from_rate(&Cmp::linear(c), &[1e-4, 10.0], 20.0).unwrap();
        prop_assert_eq!(sigma.eval(s, 0.0), s);
        let exact = s * (-c * t).exp();
        prop_assert!((sigma.eval(s, t) - exact).abs() <= 1e-8 * (1.0 + s));
        prop_assert!(sigma.eval(s, t + 0.5) <= sigma.eval(s, t));
        prop_assert!(sigma.eval(s * 1.1, t) >= sigma.eval(s, t));
    }

    #[test]
    fn signals_are_right_continuous(gaps in prop::collection::vec(0.01f64..2.0, 1..6), seed in any::<u64>()) {
        let domain = DomainBox::symmetric(1, 1.0).unwrap();
        let mut r = rng::stream(seed, 0);
        let mut t = 0.0;
        let switches: Vec<f64> = gaps.iter().map(|g| { t += g; t }).collect();
        let values: Vec<Vec<f64>> = (0..=switches.len()).map(|_| vec![r.random_range(-1.0..=1.0)]).collect();
        let sig = Signal::new(switches.clone(), values.clone(), domain).unwrap();
        prop_assert_eq!(sig.eval(0.0), &values[0][..]);
        for (k, s) in switches.iter().enumerate() {
            prop_assert_eq!(sig.eval(*s), &values[k + 1][..]);
        }
        let shift = switches[0];
        let shifted = sig.shift(shift);
        prop_assert_eq!(shifted.eval(0.0), sig.eval(shift));
    }

    #[test]
    fn streams_are_reproducible(seed in any::<u64>(), index in any::<u64>(), salt in 1u64..1000) {
        let a: [u64; 4] = rng::stream(seed, index).random();
        let b: [u64; 4] = rng::stream(seed, index).random();
        prop_assert_eq!(a, b);
        prop_assert_eq!(rng::derive(seed, salt), rng::derive(seed, salt));
        prop_assert_ne!(rng::derive(seed, salt), rng::derive(seed, salt + 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn zero_history_stays_zero(a in 0.0f64..3.0, b in -2.0f64..2.0, r in 0.2f64..2.0) {
        let sys = lag_system(a, b, r);
        let tr = run(&sys, &History::zeros(r, 1).unwrap(), 5.0, 0.05);
        prop_assert!(tr.completed());
        prop_assert!(tr.states().all(|x| x[0] == 0.0));
    }

    #[test]
    fn integration_is_deterministic(seed in any::<u64>(), b in -1.5f64..1.5) {
        let sys = lag_system(1.0, b, 1.0);
        let x0: History = HistorySampler::new(1.0).sample(1.0, 1, &mut rng::stream(seed, 0));
        let p = run(&sys, &x0, 4.0, 0.02);
        let q = run(&sys, &x0, 4.0, 0.02);
        prop_assert_eq!(p.to_csv(), q.to_csv());
    }

    #[test]
    fn solutions_are_linear_in_the_history(seed in any::<u64>(), k in -3.0f64..3.0) {
        let sys = lag_system(0.5, -1.0, 1.0);
        let x0: History = HistorySampler::new(1.0).sample(1.0, 1, &mut rng::stream(seed, 0));
        let p = run(&sys, &x0, 3.0, 0.05);
        let q = run(&sys, &x0.scaled(k), 3.0, 0.05);
        for (x, y) in p.states().zip(q.states()) {
            prop_assert!((k * x[0] - y[0]).abs() <= 1e-12 * (1.0 + y[0].abs()));
        }
    }

    #[test]
    fn trajectory_history_matches_the_solution(seed in any::<u64>(), t in 1.0f64..3.0) {
        let sys = lag_system(1.0, 0.5, 1.0);
        let x0: History = HistorySampler::new(1.0).sample(1.0, 1, &mut rng::stream(seed, 0));
        let tr = run(&sys, &x0, 3.0, 0.05);
        let seg = tr.history_at(t).unwrap();
        prop_assert!((seg.head()[0] - tr.state_at(t)[0]).abs() <= 1e-12);
        prop_assert!((seg.tail()[0] - tr.state_at(t - 1.0)[0]).abs() <= 1e-12);
    }
}
