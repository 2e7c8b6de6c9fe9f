use proptest::prelude::*;
use waveguide_spectra::twist::*;

fn trig_terms() -> impl Strategy<Value = Vec<TrigTerm>> {
    prop::collection::vec(
        (0u32..5, -2.0f64..2.0, -2.0f64..2.0).prop_map(|(freq, sin, cos)| TrigTerm { freq, sin, cos }),
        1..4,
    )
}

fn periodic(period: f64, trig: Vec<TrigTerm>) -> TwistProfile {
    make_twist(&TwistSpec::Periodic { period, trig }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn potential_is_linear_in_each_term(
        trig in trig_terms(), period in 0.5f64..3.0, c1 in 0.0f64..5.0, c2 in -3.0f64..3.0,
    ) {
        let p = periodic(period, trig);
        let g = UniformGrid::periodic(period, 128).unwrap();
        let both = effective_potential(&p, c1, c2, &g).unwrap();
        let first = effective_potential(&p, c1, 0.0, &g).unwrap();
        let second = effective_potential(&p, 0.0, c2, &g).unwrap();
        for i in 0..g.len {
            prop_assert_eq!(first.values[i] + second.values[i], both.values[i]);
        }
    }

    #[test]
    fn scaling_law(
        trig in trig_terms(), gamma in -3.0f64..3.0, c1 in 0.0f64..5.0, c2 in -3.0f64..3.0,
    ) {
        let p = periodic(1.0, trig);
        let scaled = p.scaled(gamma);
        let g = UniformGrid::periodic(1.0, 128).unwrap();
        let v = effective_potential(&scaled, c1, c2, &g).unwrap();
        for (i, s) in g.points().into_iter().enumerate() {
            let (d, dd) = (p.dalpha(s), p.ddalpha(s));
            let expected = gamma * gamma * c1 * d * d - gamma * c2 * dd;
            let scale = 1.0 + gamma * gamma * c1 * d * d + (gamma * c2 * dd).abs();
            prop_assert!((v.values[i] - expected).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn periodic_second_derivative_has_zero_mean(
        trig in trig_terms(), period in 0.5f64..3.0, c1 in 0.0f64..5.0, c2 in -3.0f64..3.0,
    ) {
        let p = periodic(period, trig);
        let g = UniformGrid::periodic(period, 256).unwrap();
        let dd: Vec<f64> = g.points().iter().map(|&s| p.ddalpha(s)).collect();
        let amp = dd.iter().map(|x| x.abs()).fold(1.0, f64::max);
        let integral: f64 = dd.iter().sum::<f64>() * g.step;
        prop_assert!(integral.abs() < 1e-10 * amp);
        let v = effective_potential(&p, c1, c2, &g).unwrap();
        let w = w_potential(&p, c1, &g).unwrap();
        prop_assert!((v.mean() - w.mean()).abs() < 1e-10 * (1.0 + w.mean().abs() + c2.abs() * amp));
    }

    #[test]
    fn w_is_nonnegative(trig in trig_terms(), c1 in 0.0f64..5.0) {
        let p = periodic(1.0, trig);
        let w = w_potential(&p, c1, &UniformGrid::periodic(1.0, 64).unwrap()).unwrap();
        prop_assert!(w.values.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn fourier_symmetry_and_parseval(trig in trig_terms(), period in 0.5f64..3.0, c1 in 0.1f64..5.0) {
        // α' has frequencies ≤ 4, so W = C1 α'² is band limited to 8
        let p = periodic(period, trig);
        let g = UniformGrid::periodic(period, 64).unwrap();
        let w = w_potential(&p, c1, &g).unwrap();
        let f = fourier_coefficients(&w, 16).unwrap();
        let scale = w.values.iter().map(|x| x.abs()).fold(1.0, f64::max);
        prop_assert!(f.conjugate_symmetry_defect() < 1e-12 * scale * period.sqrt());
        let l2: f64 = w.values.iter().map(|x| x * x).sum::<f64>() * g.step;
        prop_assert!((f.energy() - l2).abs() < 1e-10 * (1.0 + l2));
    }

    #[test]
    fn consistency_probe_holds(trig in trig_terms(), period in 0.5f64..3.0) {
        let d = periodic(period, trig).consistency_defects();
        prop_assert!(d.periodicity < 1e-10);
    }
}

#[test]
fn interval_grid_must_fit() {
    let p = make_twist(&TwistSpec::Interval {
        a: 0.0,
        b: 1.0,
        poly: Some(vec![0.0, 1.0]),
        trig: None,
        period: None,
    })
    .unwrap();
    let outside = UniformGrid::interval(0.0, 1.5, 64).unwrap();
    assert!(effective_potential(&p, 1.0, 1.0, &outside).is_err());
    let periodic_grid = UniformGrid::periodic(1.0, 64).unwrap();
    assert!(w_potential(&p, 1.0, &periodic_grid).is_err());
}
