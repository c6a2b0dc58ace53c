use proptest::prelude::*;

use bbmlab::data::{bump_at, random_trig, SpectralLaw, Stream};
use bbmlab::diagnostics::{gained_index, predicted_gain, spectral_slope};
use bbmlab::grid::{holder_norm_estimate, inverse, lp_norm, sobolev_norm, transform, Domain};
use bbmlab::operators::{apply_multiplier, line_green_deriv, periodic_green_deriv, Multiplier};
use bbmlab::unique_continuation::{
    conjugate_level, f_map, kernel_check, level_set_verdict, Branch, Verdict,
};
use bbmlab::{Grid, GridFunction};

fn trig(n: usize, k_max: usize, seed: u64) -> GridFunction {
    random_trig(Grid::circle(n).unwrap(), k_max, &mut Stream::new(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transform_round_trip(seed in any::<u64>(), half in 4usize..64) {
        let n = 2 * half;
        let g = Grid::circle(n).unwrap();
        let mut s = Stream::new(seed);
        let f = GridFunction::new(g, (0..n).map(|_| s.range(-3.0, 3.0)).collect()).unwrap();
        let back = inverse(&transform(&f).unwrap());
        prop_assert!(back.sup_distance(&f).unwrap() <= 1e-13 * (1.0 + f.sup_norm()));
    }

    #[test]
    fn parseval(seed in any::<u64>()) {
        let f = trig(128, 63, seed);
        let s = transform(&f).unwrap();
        let l2 = lp_norm(&f, 2.0).unwrap();
        let h0 = sobolev_norm(&s, 0.0);
        // Top mode excluded by the band, so Parseval holds exactly for this data.
        prop_assert!((l2 - h0).abs() <= 1e-12 * l2);
    }

    #[test]
    fn sobolev_norm_is_monotone_in_order(seed in any::<u64>(), s1 in -2.0f64..2.0, ds in 0.0f64..2.0) {
        let s = transform(&trig(64, 20, seed)).unwrap();
        prop_assert!(sobolev_norm(&s, s1) <= sobolev_norm(&s, s1 + ds) * (1.0 + 1e-14));
    }

    #[test]
    fn group_preserves_l2_and_composes(seed in any::<u64>(), t in -20.0f64..20.0, r in -20.0f64..20.0) {
        let f = trig(128, 50, seed);
        let ut = apply_multiplier(&f, Multiplier::Group { t }).unwrap();
        let n0 = lp_norm(&f, 2.0).unwrap();
        prop_assert!((lp_norm(&ut, 2.0).unwrap() - n0).abs() <= 1e-12 * n0);
        let composed = apply_multiplier(&ut, Multiplier::Group { t: r }).unwrap();
        let direct = apply_multiplier(&f, Multiplier::Group { t: t + r }).unwrap();
        prop_assert!(composed.sup_distance(&direct).unwrap() <= 1e-12 * (1.0 + f.sup_norm()));
    }

    #[test]
    fn group_inverse_is_reverse_time(seed in any::<u64>(), t in -50.0f64..50.0) {
        let f = trig(64, 30, seed);
        let there = apply_multiplier(&f, Multiplier::Group { t }).unwrap();
        let back = apply_multiplier(&there, Multiplier::Group { t: -t }).unwrap();
        prop_assert!(back.sup_distance(&f).unwrap() <= 1e-12 * (1.0 + f.sup_norm()));
    }

    #[test]
    fn phi_symbol_is_bounded_by_one_half(xi in -1e6f64..1e6) {
        prop_assert!(Multiplier::Phi.symbol(xi).norm() <= 0.5 + 1e-15);
    }

    #[test]
    fn green_derivatives_are_bounded_and_odd(x in -40.0f64..40.0) {
        prop_assert!(line_green_deriv(x).abs() <= 0.5);
        prop_assert!((line_green_deriv(x) + line_green_deriv(-x)).abs() <= 1e-15);
        let y = x - x.floor();
        if y > 1e-9 && y < 1.0 - 1e-9 {
            prop_assert!((periodic_green_deriv(y) + periodic_green_deriv(1.0 - y)).abs() <= 1e-14);
        }
    }

    #[test]
    fn conjugate_level_is_an_involution(c in -1e3f64..1e3) {
        prop_assert!((conjugate_level(conjugate_level(c)) - c).abs() <= 4.0 * f64::EPSILON * (2.0 + c.abs()));
        let d = conjugate_level(c);
        prop_assert!((f_map(c) - f_map(d)).abs() <= 1e-12 * (1.0 + f_map(c).abs()));
    }

    #[test]
    fn f_map_minimum_is_at_minus_one(y in -1e3f64..1e3) {
        prop_assert!(f_map(y) >= -0.5);
    }

    #[test]
    fn kernel_signs_on_the_line(a in -5.0f64..4.0, w in 0.05f64..4.0, ys in proptest::collection::vec(-20.0f64..20.0, 1..64)) {
        let line = Domain::Line { left: -30.0, right: 30.0 };
        prop_assert!(kernel_check(line, a, a + w, &ys).unwrap().holds());
    }

    #[test]
    fn kernel_signs_on_the_circle(a in 0.0f64..0.9, w in 0.01f64..0.09, ys in proptest::collection::vec(0.0f64..1.0, 1..64)) {
        prop_assert!(kernel_check(Domain::Circle, a, a + w, &ys).unwrap().holds());
    }

    #[test]
    fn holder_estimate_grows_with_theta(seed in any::<u64>(), k in 0usize..3, t1 in 0.0f64..1.0, dt in 0.0f64..0.5) {
        let f = trig(128, 8, seed);
        let t2 = (t1 + dt).min(1.0);
        let lo = holder_norm_estimate(&f, k, t1).unwrap();
        let hi = holder_norm_estimate(&f, k, t2).unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-14));
    }

    #[test]
    fn predicted_gain_is_positive(s in -0.49f64..5.0) {
        prop_assert!(predicted_gain(s) > 0.0);
        prop_assert!(gained_index(s) > s);
    }

    #[test]
    fn sampled_law_has_the_requested_slope(slope in 0.5f64..3.0, seed in any::<u64>()) {
        let law = SpectralLaw::new(slope, seed, 1.0);
        let s = law.spectrum(Grid::circle(256).unwrap()).unwrap();
        let fitted = spectral_slope(&s, 4, 100).unwrap();
        prop_assert!((fitted - slope).abs() <= 1e-10);
    }

    #[test]
    fn nonstationary_data_is_never_forced(c0 in -4.0f64..3.0, h in 0.05f64..1.5, sign in prop::bool::ANY) {
        // Non-stationary data sitting at c0 on [a, b] is never forced constant
        // by either branch.
        let g = Grid::line(-12.0, 12.0, 1024).unwrap();
        let (a, b) = (g.x(g.nearest_index(-1.0)), g.x(g.nearest_index(1.0)));
        let s = if sign { 1.0 } else { -1.0 };
        let u = GridFunction::from_fn(g, |x| {
            if x >= a && x <= b { c0 } else { c0 + s * h * bump_at(x, 4.0, 1.5) }
        })
        .unwrap();
        let r1 = level_set_verdict(&u, a, b, c0, Branch::Cond1).unwrap();
        let r2 = level_set_verdict(&u, a, b, c0, Branch::Cond2).unwrap();
        prop_assert_ne!(r1.verdict, Verdict::ForcedConstant);
        prop_assert_ne!(r2.verdict, Verdict::ForcedConstant);
    }
}

#[test]
fn random_trig_band_is_respected() {
    let f = trig(64, 5, 3);
    let s = transform(&f).unwrap();
    for (k, c) in s.modes() {
        if k.unsigned_abs() > 5 {
            assert!(c.norm() <= 1e-14, "mode {k} = {c}");
        }
    }
    assert!((f.values()[0] - s.eval_at(0.0)).abs() < 1e-12);
}
