use proptest::prelude::*;

use critlab_core::evolution::ss::Classification;
use critlab_core::profiles::{
    gauge_mode_f0, gauge_mode_jet, mode_residual, ode_blowup, profile_residual, u_star_jet, unstable_mode_d7_jet,
    unstable_pair_d7, Dimension,
};
use critlab_core::real::{BigReal, DoubleDouble, Real};
use critlab_core::spectrum::cf::{Limiting, ThreeTermRecurrence};
use critlab_core::spectrum::shoot::Branches;
use critlab_core::spectrum::HeunProblem;
use critlab_core::threshold::{bisect, fit_modes, FitOptions, Probe};

fn dim(d: i64) -> Dimension {
    Dimension::new(d).unwrap()
}

fn big(x: f64, digits: u32) -> BigReal {
    BigReal::from_f64(x, &BigReal::ctx_for_digits(digits))
}

const DIGITS: u32 = 50;

fn tol() -> f64 {
    10f64.powi(-(DIGITS as i32 - 10))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn u_star_solves_the_profile_equation(d in 5i64..=12, rho in 0.0f64..=2.0) {
        let r = big(rho, DIGITS);
        let res = profile_residual(dim(d), &r, &u_star_jet(dim(d), &r)).abs().to_f64();
        prop_assert!(res < tol(), "{res}");
    }

    #[test]
    fn known_modes_solve_the_mode_equation(d in 5i64..=12, rho in 0.0f64..=1.0) {
        let r = big(rho, DIGITS);
        let one = r.int(1);
        let res = mode_residual(dim(d), &one, &r, &gauge_mode_jet(dim(d), &r)).abs().to_f64();
        prop_assert!(res < tol(), "f0: {res}");
        let three = r.int(3);
        let res = mode_residual(dim(7), &three, &r, &unstable_mode_d7_jet(&r)).abs().to_f64();
        prop_assert!(res < tol(), "f1: {res}");
    }

    #[test]
    fn gauge_mode_over_light_cone_factor_is_f1_at_d7(rho in 0.0f64..0.999) {
        let r = big(rho, DIGITS);
        let f0 = gauge_mode_f0(dim(7), &r).unwrap();
        let norm = gauge_mode_f0(dim(7), &r.int(0)).unwrap();
        let (f1, _) = unstable_pair_d7(&r).unwrap();
        let lhs = f0 / ((r.int(1) - r.square()) * norm);
        prop_assert!((lhs - f1).abs().to_f64() < 1e-45);
    }

    #[test]
    fn ode_blowup_scales_covariantly(big_t in 0.1f64..10.0, frac in 0.0f64..0.999, k in 0.01f64..100.0) {
        let t = big_t * frac;
        let lhs = ode_blowup(&(k * big_t), &(k * t)).unwrap();
        let rhs = ode_blowup(&big_t, &t).unwrap() / k;
        prop_assert!(((lhs - rhs) / rhs).abs() < 1e-13);
    }

    #[test]
    fn double_double_tracks_high_precision(x in -300.0f64..300.0, y in 0.001f64..1e3) {
        let xd = DoubleDouble::from_f64(x, &());
        let yd = DoubleDouble::from_f64(y, &());
        let (xb, yb) = (big(x, 60), big(y, 60));
        let dd = ((xd.clone() * &yd + yd.sqrt()) / &yd - xd.exp().ln()).to_decimal();
        let bb = (xb.clone() * &yb + yb.sqrt()) / &yb - xb.exp().ln();
        let err = (BigReal::parse_decimal(&dd, &BigReal::ctx_for_digits(60)).unwrap() - bb).abs().to_f64();
        prop_assert!(err < 1e-27 * (1.0 + x.abs()), "{err}");
    }
}

/// y, y′, y″ of Σ aₙzⁿ.
fn poly_jet(a: &[BigReal], z: &BigReal) -> (BigReal, BigReal, BigReal) {
    let zero = z.int(0);
    let (mut y, mut y1, mut y2) = (zero.clone(), zero.clone(), zero);
    for (n, c) in a.iter().enumerate().rev() {
        y2 = y2 * z + c.clone().mul_int((n * n.saturating_sub(1)) as i64);
        y1 = y1 * z + c.clone().mul_int(n as i64);
        y = y * z + c;
    }
    // y1 and y2 were accumulated one and two powers too high
    (y, y1 / z, y2 / z.square())
}

fn limiting_series(lam: &BigReal, n: usize) -> Vec<BigReal> {
    let rec = Limiting { lambda: lam.clone() };
    let mut a = vec![lam.int(1), rec.a(-1)];
    for k in 0..n as i64 - 2 {
        let next = rec.a(k) * &a[k as usize + 1] + rec.b(k) * &a[k as usize];
        a.push(next);
    }
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // The d → ∞ equation in its original rational form, evaluated on the
    // truncated series close to z = 0.
    #[test]
    fn limiting_recurrence_solves_the_limiting_equation(lam in -4.0f64..3.0) {
        let lam = big(lam, 80);
        let a = limiting_series(&lam, 30);
        let z = BigReal::parse_decimal("0.001", &lam.ctx()).unwrap();
        let (y, y1, y2) = poly_jet(&a, &z);
        let one = z.int(1);
        let three_z1 = z.clone().mul_int(3) + &one;
        let drift = -(one.clone() / z.clone().mul_int(2)) + z.int(4) / &three_z1 + &lam - z.int(3) / z.int(2);
        let pot = (lam.clone() - z.int(2)) / z.int(4)
            * ((lam.clone() - z.int(3)) * &z * z.int(3) + &lam + z.int(5))
            / (z.clone() * &three_z1);
        let terms = [z.clone() * &y2, drift * &y1, pot * &y];
        let scale = terms.iter().map(|t| t.abs().to_f64()).fold(1.0, f64::max);
        let res: BigReal = terms.into_iter().fold(z.int(0), |s, t| s + t);
        prop_assert!(res.abs().to_f64() < 1e-35 * scale, "{}", res);
    }

    #[test]
    fn generic_lambda_gives_factorial_growth(lam in -3.9f64..2.9) {
        // stay off the roots of the table row
        prop_assume!([2.0, 1.0, -0.55593, -2.13344, -3.76974].iter().all(|e| (lam - e).abs() > 0.01));
        let a = limiting_series(&big(lam, 60), 402);
        let n = 400;
        let stat = (a[n + 1].clone() / &a[n]).to_f64() / (2.0 * n as f64);
        prop_assert!((stat - 1.0).abs() < 0.1, "{stat}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn shooting_branches_are_proportional_at_lambda_one(d in prop::sample::select(vec![5i64, 6, 8, 10, 12])) {
        let ctx = BigReal::ctx_for_digits(40);
        let b = Branches::new(HeunProblem::new(dim(d), BigReal::one(&ctx)), 150).unwrap();
        let ratio = |x: f64| {
            let x = BigReal::from_f64(x, &ctx);
            let (y0, _, _) = b.y0(&x).unwrap();
            let (y1, _, _) = b.y1(&x);
            (y0 / y1).to_f64()
        };
        let r = ratio(0.5);
        for x in [0.3, 0.7] {
            prop_assert!((ratio(x) - r).abs() < 1e-8);
        }
    }
}

fn step(threshold: f64) -> impl Fn(&f64, u32) -> Result<Probe<()>, String> + Sync {
    move |a: &f64, _| {
        Ok(Probe {
            class: if *a < threshold { Classification::Subcritical } else { Classification::Supercritical },
            s_end: "0".into(),
            diagnostics: None,
            detail: (),
        })
    }
}

proptest! {
    #[test]
    fn bisection_keeps_its_labels_and_ignores_scheduling(
        lo in 0.0f64..2.0,
        width in 0.5f64..3.0,
        frac in 0.01f64..0.99,
        eps_exp in 3i32..12,
        workers in 1usize..20,
    ) {
        let hi = lo + width;
        let theta = lo + frac * width;
        let eps = 10f64.powi(-eps_exp);
        let serial = bisect(lo, hi, &eps, 1, step(theta)).unwrap();
        let b = bisect(lo, hi, &eps, workers, step(theta)).unwrap();
        prop_assert_eq!(b.lo.to_bits(), serial.lo.to_bits());
        prop_assert_eq!(b.hi.to_bits(), serial.hi.to_bits());
        prop_assert!(b.lo < theta && theta <= b.hi && b.hi - b.lo <= eps);
        prop_assert_eq!(b.lo_probe.class, Classification::Subcritical);
        prop_assert_eq!(b.hi_probe.class, Classification::Supercritical);
        for p in &b.probes {
            let a: f64 = p.a.parse().unwrap();
            let expect = if a < theta { Classification::Subcritical } else { Classification::Supercritical };
            prop_assert_eq!(p.class, expect);
        }
    }

    #[test]
    fn mode_fit_recovers_synthetic_parameters(
        c in 2.0f64..6.0,
        a1 in -1e-20f64..1e-20,
        a_m1 in 0.1f64..1.0,
        lm in -0.9f64..-0.3,
    ) {
        prop_assume!(a1.abs() > 1e-23);
        let (lo, hi) = (2.0, 14.0);
        let samples: Vec<(f64, f64)> = (0..1200)
            .map(|k| {
                let tau = lo + (hi - lo) * k as f64 / 1199.0;
                (tau, c + a1 * (3.0 * tau).exp() + a_m1 * (lm * tau).exp())
            })
            .collect();
        let mut opts = FitOptions::new(c * 1.01, lm + 0.05);
        opts.window = Some((lo, hi));
        let f = fit_modes(&samples, 3.0, &opts).unwrap();
        prop_assert!((f.c - c).abs() < 1e-8, "{f:?}");
        prop_assert!((f.lambda_minus1 - lm).abs() < 1e-7, "{f:?}");
        prop_assert!((f.a_minus1 - a_m1).abs() < 1e-7, "{f:?}");
        prop_assert!((f.a1 - a1).abs() < 1e-6 * a1.abs(), "{f:?}");
        prop_assert!((f.a0 * hi.exp()).abs() < 1e-8, "{f:?}");
    }
}
