//! Cross-module oracles: independent routes to the same quantity must agree.

use nh_sta::biorthogonal::{
    adiabatic_frame_generic, counterdiabatic_generic, left_right_derivative_identity, DerivativeScheme, EigenPath,
    DEFAULT_DEGENERACY_THRESHOLD,
};
use nh_sta::gauge::{adiabatic_frame_h0, gauge_shortcut, gauge_simple_real, shortcut_rate};
use nh_sta::grid::TimeGrid;
use nh_sta::matrix::ComplexMatrix;
use nh_sta::pipeline::{run_shortcut, ShortcutOptions};
use nh_sta::propagator::{amplitudes, integrate, InitialCondition};
use nh_sta::synthesis::{naive_cd, AnglePoint, SupplementRule, TrappedState};
use nh_sta::two_level::{
    eigenvalue_of_plus, eigenvalue_path, eigenvalues, hamiltonian, mixing_angle_path, two_level_system, AllenEberly,
    AllenEberlyParams, EigenvaluePath, MixingAnglePath, Pulse,
};
use num_complex::Complex64 as C;

struct Setup {
    pulse: AllenEberly<f64>,
    grid: TimeGrid<f64>,
    eigs: EigenvaluePath<f64>,
    theta: MixingAnglePath<f64>,
}

fn setup(gamma: f64, steps: usize) -> Setup {
    let pulse = AllenEberly::new(AllenEberlyParams::standard(gamma)).unwrap();
    let grid = pulse.params().grid(steps).unwrap();
    let eigs = eigenvalue_path(&pulse, &grid).unwrap();
    let theta = mixing_angle_path(&pulse, &grid).unwrap();
    Setup { pulse, grid, eigs, theta }
}

fn eigen_path(s: &Setup, scheme: DerivativeScheme) -> EigenPath<f64> {
    let hams: Vec<_> = s.grid.times().map(|t| hamiltonian(&s.pulse, t).unwrap()).collect();
    let anchor = two_level_system(s.theta.theta[0], s.eigs.e_plus[0], s.eigs.e_minus[0]).unwrap();
    EigenPath::build(s.grid, &hams, DEFAULT_DEGENERACY_THRESHOLD, Some(anchor))
        .unwrap()
        .with_scheme(scheme)
}

/// Composite 5-point Gauss–Legendre rule.
fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let r = (10.0f64 / 7.0).sqrt();
    let (x1, x2) = ((5.0 - 2.0 * r).sqrt() / 3.0, (5.0 + 2.0 * r).sqrt() / 3.0);
    let s70 = 70.0f64.sqrt();
    let (w0, w1, w2) = (128.0 / 225.0, (322.0 + 13.0 * s70) / 900.0, (322.0 - 13.0 * s70) / 900.0);
    let nodes = [(0.0, w0), (x1, w1), (-x1, w1), (x2, w2), (-x2, w2)];
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = a + (p as f64 + 0.5) * h;
            nodes.iter().map(|(x, w)| w * f(mid + x * h / 2.0)).sum::<f64>() * h / 2.0
        })
        .sum()
}

#[test]
fn shortcut_gauge_endpoint_matches_high_order_quadrature() {
    for gamma in [0.3, 1.0] {
        let s = setup(gamma, 4000);
        let gauges = gauge_shortcut(&s.eigs, &s.theta, TrappedState::Plus).unwrap();
        let rate = |t: f64| {
            let (th, dth) = s.theta.evaluate(&s.pulse, t).unwrap();
            let (ep, _) = eigenvalues(&s.pulse, t, s.eigs.regime).unwrap();
            shortcut_rate(ep, &AnglePoint { t, theta: th, dtheta: dth }, TrappedState::Plus).unwrap()
        };
        let want = gauss_legendre(rate, -1.0, 1.0, 400).exp();
        let got = gauges.f_plus[4000];
        assert!(got.im == 0.0 && ((got.re - want) / want).abs() <= 1e-8, "γ={gamma}: {got} vs {want}");
        // interior point: ordinary trapezoid accuracy
        let want_mid = gauss_legendre(rate, -1.0, 0.5, 300).exp();
        let got_mid = gauges.f_plus[3000].re;
        assert!(((got_mid - want_mid) / want_mid).abs() <= 1e-5, "γ={gamma}: {got_mid} vs {want_mid}");
    }
}

#[test]
fn eigenvalue_labels_follow_the_mixing_angle_in_both_regimes() {
    for gamma in [0.0, 0.3, 1.0, 3.0] {
        let s = setup(gamma, 2000);
        for (k, t) in s.grid.times().enumerate() {
            let from_vector = eigenvalue_of_plus(&s.pulse.controls(t), s.theta.theta[k]);
            assert!((from_vector - s.eigs.e_plus[k]).norm() <= 1e-9, "γ={gamma}, t={t}");
        }
    }
}

#[test]
fn derivative_identity_on_a_transported_path() {
    let s = setup(0.3, 4000);
    let path = eigen_path(&s, DerivativeScheme::Central);
    let h = s.grid.step();
    let mut worst = 0.0f64;
    let mut conjugate = 0.0f64;
    for k in 1..4000 {
        for (n, m) in [(0, 1), (1, 0)] {
            let id = left_right_derivative_identity(&path, k, n, m).unwrap();
            worst = worst.max(id.partner_gap());
            conjugate = conjugate.max(id.conjugate_gap());
        }
    }
    println!("partner gap {worst:e}, conjugate gap {conjugate:e}, 10h² = {:e}", 10.0 * h * h);
    assert!(worst <= 10.0 * h * h);
    // the conjugated form is an identity only on Hermitian paths
    assert!(conjugate > 1e-2);
    let hermitian = setup(0.0, 4000);
    let path = eigen_path(&hermitian, DerivativeScheme::Central);
    for k in 1..4000 {
        let id = left_right_derivative_identity(&path, k, 0, 1).unwrap();
        assert!(id.partner_gap() <= 10.0 * h * h && id.conjugate_gap() <= 10.0 * h * h, "k={k}");
    }
}

#[test]
fn generic_counterdiabatic_term_matches_the_two_level_formula() {
    let s = setup(0.3, 4000);
    let path = eigen_path(&s, DerivativeScheme::Richardson);
    let zero = |_: f64| C::new(0.0, 0.0);
    let analytic = naive_cd(&s.theta, zero, zero);
    let mut worst = 0.0f64;
    for k in 2..=3998 {
        let generic = counterdiabatic_generic(&path, k).unwrap();
        worst = worst.max(generic.max_abs_diff(&analytic[k]));
    }
    println!("generic vs analytic counterdiabatic: {worst:e}");
    assert!(worst <= 1e-6);
}

#[test]
fn analytic_frame_matches_the_generic_frame() {
    let s = setup(0.3, 4000);
    let gauges = gauge_simple_real(&s.eigs).unwrap();
    let path = eigen_path(&s, DerivativeScheme::Richardson)
        .rescaled(|k, n| if n == 0 { gauges.f_plus[k] } else { gauges.f_minus[k] })
        .unwrap();
    let (mut off, mut diag) = (0.0f64, 0.0f64);
    for k in 2..=3998 {
        let analytic = adiabatic_frame_h0(&s.eigs, &s.theta, &gauges, k).unwrap();
        let generic = adiabatic_frame_generic(&path, k).unwrap();
        off = off.max((analytic[(0, 1)] - generic[(0, 1)]).norm()).max((analytic[(1, 0)] - generic[(1, 0)]).norm());
        diag = diag.max((analytic[(0, 0)] - generic[(0, 0)]).norm()).max((analytic[(1, 1)] - generic[(1, 1)]).norm());
    }
    println!("frame: off-diagonal {off:e}, diagonal {diag:e}");
    assert!(off <= 1e-6 && diag <= 1e-6);
}

#[test]
fn adiabatic_regime_keeps_modified_amplitude_near_one() {
    // coupling |∂tθ|/2 stays below 1% of the gap
    let params = AllenEberlyParams { omega0: 200.0, delta0: 200.0, tau: 1.0, gamma: 0.5, t0: -4.0, t_f: 4.0 };
    let pulse = AllenEberly::new(params).unwrap();
    let grid = params.grid(40000).unwrap();
    let eigs = eigenvalue_path(&pulse, &grid).unwrap();
    let theta = mixing_angle_path(&pulse, &grid).unwrap();
    let gauges = gauge_simple_real(&eigs).unwrap();
    let psi0 = InitialCondition::EigenPlus.state(theta.theta[0]);
    let traj = integrate(|t| hamiltonian(&pulse, t), &psi0, &grid).unwrap();
    let amp = amplitudes(&traj, &theta, &gauges).unwrap();
    let worst = amp.g_plus.iter().map(|g: &C| (g.norm() - 1.0).abs()).fold(0.0f64, f64::max);
    println!("adiabatic |g₊| deviation {worst:e}");
    assert!(worst <= 0.02);
}

#[test]
fn single_precision_pipeline_agrees_with_double() {
    let p32 = AllenEberly::new(AllenEberlyParams::<f32>::standard(0.3)).unwrap();
    let p64 = AllenEberly::new(AllenEberlyParams::<f64>::standard(0.3)).unwrap();
    let opts32 = ShortcutOptions::<f32> { check_convergence: false, ..Default::default() };
    let opts64 = ShortcutOptions::<f64> { check_convergence: false, ..Default::default() };
    let r32 = run_shortcut(&p32, &p32.params().grid(400).unwrap(), &opts32).unwrap();
    let r64 = run_shortcut(&p64, &p64.params().grid(400).unwrap(), &opts64).unwrap();
    for k in 0..=400 {
        let a = r32.amplitudes.pop_phi_plus[k] as f64;
        assert!((a - r64.amplitudes.pop_phi_plus[k]).abs() <= 1e-3);
    }
    assert!(r32.max_abs_g_minus() <= 1e-3);
}

#[test]
fn supplement_with_constant_matrix_route_matches_pipeline() {
    // the pipeline's H₀ + H₁ evaluated on the grid equals direct assembly
    let s = setup(1.0, 400);
    let rule = SupplementRule::HermitianRealizable { common_shift: 0.0 };
    let coeffs = rule.coefficients(&s.theta, TrappedState::Plus).unwrap().unwrap();
    for k in 0..=400 {
        let direct = coeffs.point(k).matrix();
        let via_rule = rule.matrix(&AnglePoint::from_path(&s.theta, k), TrappedState::Plus).unwrap();
        assert!(direct.max_abs_diff(&via_rule) <= 1e-14);
        let _: ComplexMatrix<f64> = direct;
    }
}
