use hardy_blowup::geometry::Geometry;
use hardy_blowup::grid::Grid;
use hardy_blowup::radial_solver::{
    build_subsuper_pair, discrete_comparison_check, discretize, exhaustion_solve, ko_grid_supersolution, sample,
    solve_bvp, ExhaustionOptions, GridSolution, InnerBoundary, PairTarget, SolveOptions,
};
use hardy_blowup::{Error, ProblemParams};
use proptest::prelude::*;

fn params(mu: f64, p: f64, s: f64) -> ProblemParams {
    ProblemParams::new(mu, p, s).unwrap()
}

#[test]
fn laplacian_of_a_ball_paraboloid() {
    let grid = Grid::<f64>::with_delta_min(1e-3).unwrap();
    for dim in [2usize, 3] {
        let op = discretize(Geometry::Ball { dim }, params(0.0, 2.0, 0.0), grid.clone(), InnerBoundary::DirichletValue { value: 0.0 }, 0.0)
            .unwrap();
        let u = sample(&grid, |d: f64| 1.0 - (1.0 - d).powi(2));
        for i in op.unknowns() {
            let expected = 2.0 * dim as f64;
            assert!((op.laplacian_at(&u, i) - expected).abs() < 1e-6 * (1.0 + grid.nodes()[i].powi(-2)));
        }
    }
}

#[test]
fn zero_data_gives_zero_solution() {
    let grid = Grid::<f64>::with_delta_min(1e-3).unwrap();
    for geometry in [Geometry::Slab, Geometry::Ball { dim: 3 }] {
        let op = discretize(geometry, params(0.2, 2.0, 0.0), grid.clone(), InnerBoundary::DirichletValue { value: 0.0 }, 0.0).unwrap();
        let sol = solve_bvp(&op, &vec![0.0; grid.len()], &SolveOptions::default()).unwrap();
        assert!(sol.values.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn cubic_slab_reproduces_the_explicit_blowup_profile() {
    // -u'' + u^3 = 0 has the exact solution sqrt(2)/delta.
    let exact = |d: f64| 2f64.sqrt() / d;
    let grid = Grid::<f64>::with_delta_min(1e-4).unwrap();
    let op = discretize(Geometry::Slab, params(0.0, 3.0, 0.0), grid.clone(), InnerBoundary::DirichletValue { value: exact(1e-4) }, exact(1.0))
        .unwrap();
    let sol = solve_bvp(&op, &vec![0.0; grid.len()], &SolveOptions::default()).unwrap();
    assert!(sol.residual_norm <= 1e-10);
    for (&d, &u) in grid.nodes().iter().zip(&sol.values) {
        assert!((u - exact(d)).abs() < 1e-3 * exact(d), "delta={d}: {u} vs {}", exact(d));
    }
}

#[test]
fn large_inner_data_approach_the_sharp_profile() {
    let grid = Grid::<f64>::with_delta_min(1e-6).unwrap();
    let op = discretize(Geometry::Slab, params(0.0, 3.0, 0.0), grid.clone(), InnerBoundary::DirichletValue { value: 1e6 }, 0.0).unwrap();
    let (_, ko) = ko_grid_supersolution(Geometry::Slab, params(0.0, 3.0, 0.0), &grid).unwrap();
    let initial: Vec<f64> = ko.values.iter().map(|&v| v.min(1e6)).collect();
    let sol = solve_bvp(&op, &initial, &SolveOptions::default()).unwrap();
    for (&d, &u) in grid.nodes().iter().zip(&sol.values).filter(|(&d, _)| (1e-3..=1e-2).contains(&d)) {
        let sharp = 2f64.sqrt() / d;
        assert!((u - sharp).abs() < 0.02 * sharp, "delta={d}: {u} vs {sharp}");
    }
}

#[test]
fn reference_pairs_are_ordered_and_bracket_a_solution() {
    let grid = Grid::<f64>::with_delta_min(1e-3).unwrap();
    for (prm, target) in [(params(0.0, 3.0, 0.0), PairTarget::Xxl), (params(0.25, 2.0, 1.0), PairTarget::Ml)] {
        let pair = build_subsuper_pair(Geometry::Slab, prm, &grid, target).unwrap();
        assert!(pair.ordered);
        assert!(discrete_comparison_check(&pair.sub, &pair.sup).unwrap());
        let u = pair.solve(&SolveOptions::default()).unwrap();
        assert!(u.values.iter().zip(&pair.sub.values).zip(&pair.sup.values).all(|((&u, &a), &b)| a <= u && u <= b));
    }
}

#[test]
fn pairs_need_the_existence_regime() {
    let grid = Grid::<f64>::with_delta_min(1e-3).unwrap();
    let err = build_subsuper_pair(Geometry::Slab, params(0.0, 3.0, 2.0), &grid, PairTarget::Xxl).unwrap_err();
    assert!(matches!(err, Error::Regime(_)));
}

#[test]
fn zero_sub_solution_against_ko_super_solution() {
    let grid = Grid::<f64>::with_delta_min(1e-3).unwrap();
    let prm = params(0.0, 3.0, 0.0);
    let (_, sup) = ko_grid_supersolution(Geometry::Slab, prm, &grid).unwrap();
    let op = sup.operator().unwrap().with_inner_value(0.0);
    let mut zero = GridSolution::from_values(&op, vec![0.0; grid.len()]);
    zero.bc_outer = 0.0;
    assert!(discrete_comparison_check(&zero, &sup).unwrap());
}

#[test]
fn exhaustion_levels_increase_with_the_boundary_value() {
    let options = ExhaustionOptions { max_boundary_value: 1e6, ..Default::default() };
    let run = exhaustion_solve(params(0.0, 3.0, 0.0), Geometry::Slab, &[1e-3], &[1e4, 1e6], &options).unwrap();
    let level = &run.levels[0];
    assert!(level.monotone_in_m);
    let (lo, hi) = (&level.solutions[0], &level.solutions[1]);
    assert!(lo.values.iter().zip(&hi.values).all(|(&a, &b)| a <= b * (1.0 + 1e-9)));
    assert!(exhaustion_solve(params(0.0, 3.0, 0.0), Geometry::Slab, &[1e-3, 1e-2], &[1e4], &options).is_err());
}

/// `theta * u` for a sub-solution (`theta <= 1`) or `Theta * u` for a super-solution
/// (`Theta >= 1`) keeps its residual sign when `p > 1`.
fn scaled(sol: &GridSolution, factor: f64) -> GridSolution {
    let values: Vec<f64> = sol.values.iter().map(|v| v * factor).collect();
    let grid = sol.grid.clone();
    let n = values.len();
    let outer = if sol.geometry == Geometry::Slab { values[n - 1] } else { 0.0 };
    let op = discretize(sol.geometry, sol.params, grid, InnerBoundary::DirichletValue { value: values[0] }, outer).unwrap();
    GridSolution::from_values(&op, values)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]
    #[test]
    fn scaled_xxl_pairs_satisfy_comparison(
        theta in 0.3f64..1.0,
        big in 1.0f64..3.0,
        p in 2.0f64..4.0,
        ball in any::<bool>(),
    ) {
        let prm = params(0.0, p, 0.0);
        let geometry = if ball { Geometry::Ball { dim: 3 } } else { Geometry::Slab };
        let grid = Grid::<f64>::with_delta_min(1e-3).unwrap();
        let pair = build_subsuper_pair(geometry, prm, &grid, PairTarget::Xxl).unwrap();
        let (sub, sup) = (scaled(&pair.sub, theta), scaled(&pair.sup, big));
        prop_assert!(discrete_comparison_check(&sub, &sup).unwrap());
    }
}
