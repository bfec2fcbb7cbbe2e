use hardy_blowup::barriers::{BarrierRole, BarrierSpec};
use hardy_blowup::geometry::Geometry;
use hardy_blowup::integrator::StepControl;
use hardy_blowup::ode_engine::{
    detect_blowup_radius, integrate_left, integrate_left_with, kappa_sweep, ko_ode_supersolution, ode_comparison_check,
    solve_bvp_eps, ComparisonMode, OdeProblem, Terminal,
};
use hardy_blowup::{Error, ProblemParams};

fn params(mu: f64, p: f64, s: f64) -> ProblemParams {
    ProblemParams::new(mu, p, s).unwrap()
}

/// Classical RK4 for `v'' = -(2 beta / r) v' + r^{beta (p-1) - s} v_+^p`
/// (weight `r^beta`, no curvature), stepping left from `rho`.
fn rk4_power_weight(beta: f64, p: f64, s: f64, rho: f64, kappa: f64, r_end: f64, steps: usize) -> f64 {
    let f = |r: f64, v: f64, w: f64| -> (f64, f64) {
        (w, -2.0 * beta / r * w + r.powf(beta * (p - 1.0) - s) * v.max(0.0).powf(p))
    };
    let h = -(rho - r_end) / steps as f64;
    let (mut r, mut v, mut w) = (rho, 0.0, -kappa);
    for _ in 0..steps {
        let k1 = f(r, v, w);
        let k2 = f(r + h / 2.0, v + h / 2.0 * k1.0, w + h / 2.0 * k1.1);
        let k3 = f(r + h / 2.0, v + h / 2.0 * k2.0, w + h / 2.0 * k2.1);
        let k4 = f(r + h, v + h * k3.0, w + h * k3.1);
        v += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        w += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        r += h;
    }
    v
}

#[test]
fn adaptive_integrator_matches_fixed_step_oracle() {
    let prm = params(0.0, 2.0, 0.0);
    let eta = BarrierSpec::pure_power(0.5, BarrierRole::SuperHarmonic);
    let problem = OdeProblem::new(prm, eta, 0.0, 0.5, 2.0).unwrap();
    let traj = integrate_left(&problem, 0.05, 1e8).unwrap();
    assert_eq!(traj.terminal, Terminal::ReachedRMin);
    for r_end in [0.3, 0.1, 0.05] {
        let oracle = rk4_power_weight(0.5, 2.0, 0.0, 0.5, 2.0, r_end, 200_000);
        let v = traj.value_at(r_end).unwrap();
        assert!((v - oracle).abs() < 1e-7 * oracle.abs().max(1.0), "r={r_end}: {v} vs {oracle}");
    }
}

#[test]
fn zero_slope_gives_zero_trajectory() {
    let problem = OdeProblem::standard(params(0.0, 3.0, 2.0), Geometry::Slab, 0.0).unwrap();
    let traj = integrate_left(&problem, 1e-6, 1e8).unwrap();
    assert_eq!(traj.terminal, Terminal::ReachedRMin);
    assert!(traj.samples.iter().all(|s| s.v == 0.0 && s.v_dot == 0.0));
}

#[test]
fn critical_case_blows_up_and_is_tolerance_stable() {
    let problem = OdeProblem::standard(params(0.0, 3.0, 2.0), Geometry::Slab, 1.0).unwrap();
    let a = integrate_left(&problem, 1e-6, 1e8).unwrap();
    let b = integrate_left_with(&problem, 1e-6, 1e8, &StepControl::default().halved()).unwrap();
    let (ra, rb) = (a.r_kappa().unwrap(), b.r_kappa().unwrap());
    assert!(ra > 0.0 && ra < problem.rho());
    assert!((ra - rb).abs() < 1e-4 * ra);
    // The solution stays nonnegative and increases towards the boundary.
    assert!(a.samples.windows(2).all(|w| w[1].v >= w[0].v));
}

#[test]
fn subcritical_case_reaches_the_floor_below_the_ko_bound() {
    let problem = OdeProblem::with_defaults(params(0.0, 3.0, 0.0), Geometry::Slab, 0.6, 1.0).unwrap();
    let traj = integrate_left(&problem, 1e-6, 1e8).unwrap();
    assert_eq!(traj.terminal, Terminal::ReachedRMin);
    let bound = ko_ode_supersolution(&problem, 0.0).unwrap();
    for s in traj.samples.iter().filter(|s| s.r < problem.rho()) {
        assert!(s.v <= bound.eval(s.r).unwrap() * (1.0 + 1e-9), "r={} v={}", s.r, s.v);
    }
}

#[test]
fn blowup_radius_detection() {
    let problem = OdeProblem::standard(params(0.0, 3.0, 2.0), Geometry::Slab, 1.0).unwrap();
    let est = detect_blowup_radius(&problem, &[1e4, 1e6, 1e8]).unwrap();
    let direct = integrate_left(&problem, 1e-6, 1e8).unwrap().r_kappa().unwrap();
    assert!(est.radius <= direct && (est.radius - direct).abs() < 1e-3 * direct);
    assert!(est.termination_radii.windows(2).all(|w| w[1] <= w[0]));
    assert!(est.error_estimate < 1e-3 * est.radius);

    assert!(matches!(detect_blowup_radius(&problem, &[1e6, 1e4]), Err(Error::Precondition(_))));
    assert!(matches!(detect_blowup_radius(&problem, &[1e6]), Err(Error::Precondition(_))));
    let sub = OdeProblem::with_defaults(params(0.0, 3.0, 0.0), Geometry::Slab, 0.6, 1.0).unwrap();
    assert!(matches!(detect_blowup_radius(&sub, &[1e4, 1e8]), Err(Error::NotBlowingUp { .. })));
}

#[test]
fn sweep_radii_and_suprema_decrease() {
    let problem = OdeProblem::standard(params(0.0, 3.0, 2.0), Geometry::Slab, 1.0).unwrap();
    let sweep = kappa_sweep(&problem, &[1.0, 0.5, 0.3], 0.25).unwrap();
    assert!(sweep.iter().all(|e| e.resolved));
    assert!(sweep.windows(2).all(|w| w[1].r_kappa < w[0].r_kappa && w[1].sup_v < w[0].sup_v));
    assert!(kappa_sweep(&problem, &[0.5, 1.0], 0.25).is_err());
    assert!(kappa_sweep(&problem, &[1.0], 0.6).is_err());
}

#[test]
fn boundary_value_shooting() {
    let problem = OdeProblem::standard(params(0.0, 3.0, 2.0), Geometry::Slab, 1.0).unwrap();
    let r_star = 0.1;
    let mut last_kappa = f64::INFINITY;
    for eps in [1.0, 1e-1, 1e-2] {
        let (kappa, traj) = solve_bvp_eps(&problem, r_star, eps).unwrap();
        assert!(kappa < last_kappa);
        last_kappa = kappa;
        let end = traj.samples.last().unwrap();
        assert!((end.r - r_star).abs() < 1e-12 && (end.v - eps).abs() < 1e-6 * eps);
        assert!(traj.samples.iter().all(|s| s.v <= eps * (1.0 + 1e-6)));
        // Re-shooting with the returned slope reproduces the end value.
        let again = integrate_left(&problem.with_kappa(kappa).unwrap(), r_star, 1e8).unwrap();
        assert!((again.samples.last().unwrap().v - eps).abs() < 1e-5 * eps);
    }
    assert!(solve_bvp_eps(&problem, 0.0, 1.0).is_err());
    assert!(solve_bvp_eps(&problem, r_star, -1.0).is_err());
}

#[test]
fn comparison_orders_trajectories_by_slope() {
    let problem = OdeProblem::standard(params(0.0, 3.0, 0.0), Geometry::Slab, 0.5).unwrap();
    let small = integrate_left(&problem, 1e-3, 1e8).unwrap();
    let large = integrate_left(&problem.with_kappa(1.0).unwrap(), 1e-3, 1e8).unwrap();
    assert!(ode_comparison_check(&small, &large, ComparisonMode::Ivp).unwrap());
    assert!(ode_comparison_check(&small, &large, ComparisonMode::Bvp).unwrap());
    let other = OdeProblem::standard(params(0.0, 2.0, 0.0), Geometry::Slab, 0.5).unwrap();
    let foreign = integrate_left(&other, 1e-3, 1e8).unwrap();
    assert!(matches!(ode_comparison_check(&small, &foreign, ComparisonMode::Ivp), Err(Error::IncompatibleProblems)));
}
