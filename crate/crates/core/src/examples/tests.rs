use super::*;
use crate::history::HistorySegment;

#[test]
fn v48_at_unit_segment() {
    for r in [0.5, 1.0, 2.0] {
        let b = example_4_8::<f64>(r).unwrap();
        let Certificate::LyapunovIos { v, .. } = &b.certificates[0] else {
            panic!("first certificate is the IOS one")
        };
        let x = HistorySegment::constant(r, &[1.0, 1.0]).unwrap();
        assert!((v.eval(0.0, &x) - (2.5 + r / 4.0)).abs() < 1e-12);
        let z = HistorySegment::zeros(r, 2).unwrap();
        assert_eq!(v.eval(0.7, &z), 0.0);
    }
}

#[test]
fn constants_52() {
    let k = constants_5_2(0.5, 1.0).unwrap();
    assert_eq!(format!("{:.5}", k.k), "0.82436");
    assert_eq!(format!("{:.5}", DELAY_BOUND_5_2), "2.12132");
    assert!(k.c > 0.0 && k.l_min > k.c);
    let err = example_5_2::<f64>(1.2, 1.0, None).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("3√2/2 > r exp(r)"), "{msg}");
    assert!(msg.contains("2.12132") && msg.contains("3.98414"), "{msg}");
    assert!(example_5_2::<f64>(0.5, 1.0, Some(k.l_min - 1.0)).is_err());
    assert!(example_5_2::<f64>(0.5, 1e-3, None).is_err());
}

#[test]
fn v52_dini_matches_hand_value() {
    let v = razumikhin_5_2::<f64>();
    assert_eq!(v.eval(0.0, &[1.0, 0.0]), 33.0 / 4.0 + 8.0);
    assert_eq!(
        v.analytic_dini(0.0, &[1.0, 0.0], &[0.0, 0.0]).unwrap(),
        32.5
    );
    let num = crate::lyapunov::dini_pointwise_numeric(
        &v.clone().without_analytic_dini(),
        0.3,
        &[0.4, -1.1],
        &[0.7, 2.0],
        &Default::default(),
    )
    .unwrap();
    let exact = v.analytic_dini(0.3, &[0.4, -1.1], &[0.7, 2.0]).unwrap();
    assert!(
        (num.value - exact).abs() < 1e-6 * (1.0 + exact.abs()),
        "{} vs {exact}",
        num.value
    );
}

#[test]
fn zero_segment_stays_zero_52() {
    let b = example_5_2_default::<f64>(0.5).unwrap();
    let sc = Scenario {
        x0: HistorySegment::zeros(0.5, 2).unwrap(),
        u: vec![],
        d: vec![1.0],
    };
    let tr = sc.run(&b.system, 2.0, &b.context.integrate).unwrap();
    assert!(tr.states().all(|x| x == [0.0, 0.0]));
}

#[test]
fn v54_and_output() {
    let b = example_5_4::<f64>(1.0).unwrap();
    let Certificate::Razumikhin { vr, .. } = &b.certificates[0] else {
        panic!()
    };
    assert_eq!(vr.eval(0.0, &[2.0]), 0.0);
    assert_eq!(vr.eval(0.0, &[3.0]), 5.0);
    assert_eq!(output_5_4(1.0, 1.5), 0.0);
    assert_eq!(output_5_4(1.0, 4.0), 2.0);
    assert_eq!(output_5_4(1.0, -4.0), -2.0);
}

#[test]
fn registry_names() {
    for name in REGISTRY {
        let b = build_example::<f64>(name, &serde_json::Value::Null).unwrap();
        assert_eq!(b.name, name);
        assert_eq!(b.system.name(), name);
    }
    assert!(matches!(
        build_example::<f64>("example-9.9", &serde_json::Value::Null),
        Err(crate::Error::UnknownName(n)) if n == "example-9.9"
    ));
    let p = serde_json::json!({"r": 1.2});
    assert!(matches!(
        build_example::<f64>("example-5.2", &p),
        Err(crate::Error::Precondition { .. })
    ));
    let bad = serde_json::json!({"radius": 1.0});
    assert!(matches!(
        build_example::<f64>("example-4.8", &bad),
        Err(crate::Error::Config(_))
    ));
}

#[test]
fn divergence_demo_48() {
    let b = example_4_8::<f64>(1.0).unwrap();
    let ctx = b.context.clone();
    let out = b.check(2, &ctx, 0).unwrap();
    assert!(out.pass, "{out:?}");
    let t = out.report["crossing_time"].as_f64().unwrap();
    // x₂ ≈ e^{t−r}/2 for large t
    let oracle = 1.0 + (2.0e3f64).ln();
    assert!((t - oracle).abs() < 0.05, "{t} vs {oracle}");
}
