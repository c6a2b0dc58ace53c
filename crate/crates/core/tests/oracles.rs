//! Independent closed-form and brute-force checks of the core operators.

use std::f64::consts::PI;

use bbmlab::data::{bump_at, SpectralLaw};
use bbmlab::diagnostics::{data_norm_sweep, gained_index, refinement_sweep};
use bbmlab::evolution::{ch_rhs, evolve, peakon, time_derivative, Method, SolverConfig};
use bbmlab::operators::{
    bessel_kernel_line, exp_convolve_line, line_green, line_green_deriv, Warning,
};
use bbmlab::quad;
use bbmlab::unique_continuation::{
    a_decomposition, level_set_verdict, q_functional, stationary_step, Branch, UcCheck, Verdict,
};
use bbmlab::{Error, Grid, GridFunction};

#[test]
fn bessel_kernel_of_order_two_is_the_exponential() {
    for x in [0.05, 0.3, 1.0, 2.5, 6.0] {
        let g = bessel_kernel_line(2.0, x).unwrap();
        assert!(
            (g - line_green(x)).abs() < 1e-10 * line_green(x),
            "x = {x}: {g}"
        );
    }
}

#[test]
fn bessel_kernel_has_unit_mass() {
    for s in [1.0, 1.5, 3.0] {
        let half = quad::adaptive(
            |x| bessel_kernel_line(s, x).unwrap(),
            1e-12,
            40.0,
            1e-10,
            40,
        );
        // G_1 has a logarithmic singularity at 0 which the graded panels absorb.
        assert!(
            (2.0 * half - 1.0).abs() < 1e-6,
            "s = {s}: mass {}",
            2.0 * half
        );
    }
}

#[test]
fn bessel_kernel_rejects_bad_order() {
    assert!(matches!(
        bessel_kernel_line(0.0, 1.0),
        Err(Error::InvalidParameter(_))
    ));
    assert!(matches!(
        bessel_kernel_line(-1.0, 1.0),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn line_convolution_converges_to_direct_quadrature_at_fourth_order() {
    let profile = |x: f64| (-x * x).exp() * (1.0 + 0.5 * (3.0 * x).sin());
    let probes = [-2.0, -0.5, 0.0, 0.75, 1.5, 3.0];
    // Adaptive quadrature of the exact profile, split at the kernel jump.
    let exact: Vec<f64> = probes
        .iter()
        .map(|&x| {
            let k = |y: f64| line_green_deriv(x - y) * profile(y);
            quad::adaptive(k, -10.0, x, 1e-13, 64) + quad::adaptive(k, x, 10.0, 1e-13, 64)
        })
        .collect();
    let error = |n: usize| {
        let g = Grid::line(-10.0, 10.0, n).unwrap();
        let fast = exp_convolve_line(&GridFunction::from_fn(g, profile).unwrap()).unwrap();
        probes
            .iter()
            .zip(&exact)
            .map(|(&x, e)| (fast.deriv_part.values()[g.nearest_index(x)] - e).abs())
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (error(801), error(1601));
    assert!(fine < 2e-8, "error {fine}");
    assert!(coarse / fine > 12.0, "order ratio {}", coarse / fine);
}

#[test]
fn narrow_bump_convolution_is_accurate() {
    let g = Grid::line(-8.0, 8.0, 4097).unwrap();
    let f = GridFunction::from_fn(g, |x| bump_at(x, 0.0, 0.05)).unwrap();
    let fast = exp_convolve_line(&f).unwrap();
    for &x in &[-3.0, -1.0, 0.5, 2.0] {
        let exact = quad::adaptive(
            |y| line_green(x - y) * bump_at(y, 0.0, 0.05),
            -0.05,
            0.05,
            1e-13,
            16,
        );
        let got = fast.smooth_part.values()[g.nearest_index(x)];
        assert!(
            (got - exact).abs() < 1e-4 * exact.abs().max(1e-6),
            "x = {x}: {got} vs {exact}"
        );
    }
}

#[test]
fn support_touching_the_window_is_reported() {
    let g = Grid::line(-4.0, 4.0, 256).unwrap();
    let f = GridFunction::from_fn(g, |x| (x / 4.0).cos()).unwrap();
    let w = exp_convolve_line(&f).unwrap().warnings;
    assert!(w
        .iter()
        .any(|w| matches!(w, Warning::BoundarySupport { .. })));
    let quiet = GridFunction::from_fn(g, |x| bump_at(x, 0.0, 1.0)).unwrap();
    assert!(exp_convolve_line(&quiet).unwrap().warnings.is_empty());
}

#[test]
fn peakon_transport_in_the_ch_vector_field() {
    let g = Grid::line(-30.0, 30.0, 8192).unwrap();
    let u = peakon(1.0, 0.0, &g).unwrap();
    let rhs = ch_rhs(&u).unwrap();
    // d_t u = -c d_x u for a travelling wave; away from the crest this is sgn(x) e^{-|x|}.
    let worst = (0..g.n_points())
        .filter(|&i| g.x(i).abs() > 0.05 && g.x(i).abs() < 20.0)
        .map(|i| {
            let x = g.x(i);
            (rhs.values()[i] - x.signum() * (-x.abs()).exp()).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst < 5e-2, "transport error {worst}");
}

#[test]
fn difference_is_smoother_than_data() {
    // s = 0.4 data: its H^{s + 0.75} norm blows up under refinement while the
    // H^{s + gain - 0.05} norm of u(t) - u0 stays bounded.
    let law = SpectralLaw::new(0.9, 5, 0.5);
    let sizes = [256, 512, 1024];
    let data = data_norm_sweep(&law, 0.4 + 0.75, &sizes).unwrap();
    let cfg = SolverConfig::new(Method::RungeKutta4, 1e-3, 0.25).with_stride(250);
    let diff = refinement_sweep(&law, &cfg, gained_index(0.4) - 0.05, &sizes).unwrap();
    for w in data.windows(2) {
        assert!(
            w[1].norm / w[0].norm >= 1.5,
            "data ratio {}",
            w[1].norm / w[0].norm
        );
    }
    for w in diff.windows(2) {
        assert!(
            w[1].norm / w[0].norm <= 1.1,
            "difference ratio {}",
            w[1].norm / w[0].norm
        );
    }
}

#[test]
fn stationary_step_is_forced_constant_by_its_branch() {
    let g = Grid::circle(512).unwrap();
    let (a, b) = (g.x(100), g.x(300));
    let u = stationary_step(0.5, a, b, &g).unwrap();
    assert_eq!(time_derivative(&u).unwrap().sup_norm(), 0.0);
    let r = level_set_verdict(&u, a, b, 0.5, Branch::Cond1).unwrap();
    assert!(matches!(r.check, UcCheck::LevelSet { .. }));
    assert_ne!(
        r.verdict,
        Verdict::HypothesisFails,
        "{:?}",
        r.failed_hypothesis
    );
}

#[test]
fn minus_one_slice_with_bump_fails_the_hypothesis() {
    let g = Grid::line(-12.0, 12.0, 2048).unwrap();
    let (a, b) = (g.x(g.nearest_index(-1.0)), g.x(g.nearest_index(1.0)));
    let u = GridFunction::from_fn(g, |x| -1.0 + 0.3 * bump_at(x, 3.0, 1.0)).unwrap();
    let r = a_decomposition(&u, a, b).unwrap();
    assert!(r.A1 < -1e-6, "A1 = {}", r.A1);
    assert!(r.identity_residual.abs() < 1e-10);
    assert_eq!(r.verdict, Verdict::HypothesisFails);
}

#[test]
fn q_vanishes_on_a_stationary_step() {
    let g = Grid::circle(256).unwrap();
    let (a, b) = (g.x(64), g.x(160));
    let u = stationary_step(1.5, a, b, &g).unwrap();
    assert!(q_functional(&u, a, b, 1.5).unwrap().abs() < 1e-12);
}

#[test]
fn evolution_of_a_wave_packet_stays_bounded() {
    let g = Grid::circle(256).unwrap();
    let u = GridFunction::from_fn(g, |x| {
        0.5 * (2.0 * PI * x).cos() * (-(x - 0.5).powi(2) * 20.0).exp()
    })
    .unwrap();
    let traj = evolve(
        &u,
        &SolverConfig::new(Method::RungeKutta4, 1e-2, 2.0).with_stride(50),
    )
    .unwrap();
    assert!(traj.states.iter().all(|s| s.sup_norm() < 2.0));
}
