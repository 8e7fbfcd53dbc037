use proptest::prelude::*;

use hitrun::geometry::ConvexBody;
use hitrun::schedules::{mse_bound, schedule_bounded, tv_bound_mixed};
use hitrun::special::r_star;
use hitrun::{har_step, ClassParams, ClassVariant, Density, RandomStream};

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 1e-3).then(|| v.iter().map(|x| x / n).collect())
}

proptest! {
    #[test]
    fn chord_endpoints_lie_on_the_boundary(
        x in prop::collection::vec(-0.5f64..0.5, 3),
        u in prop::collection::vec(-1f64..1.0, 3),
    ) {
        let Some(u) = unit(&u) else { return Ok(()) };
        let bodies = [
            ConvexBody::unit_ball(3),
            ConvexBody::new_box(vec![-1.0, -0.6, -0.7], vec![0.8, 1.0, 0.9]).unwrap(),
        ];
        for k in &bodies {
            let c = k.chord(&x, &u).unwrap();
            prop_assert!(c.lo <= 0.0 && c.hi >= 0.0);
            for (s, inward) in [(c.lo, 1e-9), (c.hi, -1e-9)] {
                let at = |t: f64| -> Vec<f64> { x.iter().zip(&u).map(|(xi, ui)| xi + t * ui).collect() };
                prop_assert!(k.contains(&at(s + inward)).unwrap());
                prop_assert!(!k.contains(&at(s - 1e3 * inward)).unwrap());
            }
            let neg: Vec<f64> = u.iter().map(|v| -v).collect();
            let f = k.chord(&x, &neg).unwrap();
            prop_assert!((f.lo + c.hi).abs() < 1e-12 && (f.hi + c.lo).abs() < 1e-12);
        }
    }

    #[test]
    fn steps_stay_in_the_support(seed in any::<u64>(), x in prop::collection::vec(-0.6f64..0.6, 2)) {
        let rho = Density::linear_tilt(vec![3.0, -1.0], ConvexBody::unit_ball(2)).unwrap();
        let mut rng = RandomStream::new(seed);
        let mut y = x;
        for _ in 0..20 {
            y = har_step(&rho, &y, &mut rng).unwrap();
            prop_assert!(rho.support().contains(&y).unwrap());
        }
    }

    #[test]
    fn gaussian_line_restriction_matches_log_density(
        x in prop::collection::vec(-3f64..3.0, 2),
        u in prop::collection::vec(-1f64..1.0, 2),
        s in -4f64..4.0,
    ) {
        let Some(u) = unit(&u) else { return Ok(()) };
        let rho = Density::gaussian_from_covariance(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let ld = rho.restrict_to_line(&x, &u).unwrap();
        let y: Vec<f64> = x.iter().zip(&u).map(|(xi, ui)| xi + s * ui).collect();
        let shift = ld.log_eval(0.0) - rho.log_density(&x).unwrap();
        prop_assert!((ld.log_eval(s) - rho.log_density(&y).unwrap() - shift).abs() < 1e-9);
    }

    #[test]
    fn schedule_grows_as_epsilon_shrinks(e1 in 0.001f64..0.49, e2 in 0.001f64..0.49, kappa in 3f64..1e6) {
        let p = ClassParams::new(4, 0.5, 2.0, kappa.ln(), ClassVariant::Bounded, ConvexBody::unit_ball(4)).unwrap();
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let a = schedule_bounded(lo, &p).unwrap();
        let b = schedule_bounded(hi, &p).unwrap();
        prop_assert!(a.n0.value >= b.n0.value && a.n >= b.n);
        prop_assert!(a.n as f64 >= 1.0 / (lo * lo));
    }

    #[test]
    fn bounds_are_probabilities_and_monotone(n in 0f64..1e35, big_d in 1f64..1e3, eps in 0.001f64..0.49) {
        let a = tv_bound_mixed(n, 3, 1.0, 2.0, big_d, eps).unwrap();
        let b = tv_bound_mixed(2.0 * n, 3, 1.0, 2.0, big_d, eps).unwrap();
        prop_assert!((0.0..=1.0).contains(&a.value) && b.value <= a.value);
        prop_assert!(mse_bound(10, a.value, 1.0).unwrap() >= mse_bound(20, a.value, 1.0).unwrap());
    }

    #[test]
    fn substreams_are_reproducible(seed in any::<u64>(), i in 0u64..1000) {
        let a = RandomStream::new(seed).substream(i).uniform();
        let b = RandomStream::new(seed).substream(i).uniform();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn class_params_round_trip(d in 1usize..50, r in 0.1f64..1.0, scale in 1f64..10.0, kappa in 3f64..1e9) {
        let big_r = (r * scale).max(3.0 * r / d as f64);
        let p = ClassParams::new(d, r, big_r, kappa.ln(), ClassVariant::Average, ConvexBody::unit_ball(d)).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        let q: ClassParams = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(p, q);
    }
}

#[test]
fn r_star_increases_with_dimension() {
    let mut prev = 0.0;
    for d in 1..=200 {
        let r = r_star(d).unwrap().r_star;
        assert!(r > prev);
        prev = r;
    }
}
