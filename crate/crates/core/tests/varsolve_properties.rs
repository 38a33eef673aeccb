mod common;

use common::{random_balanced_flux, random_feasible_path, random_field, random_generator, random_simplex, rng};
use proptest::prelude::*;
use rand::Rng;
use sijump::ldp::{fixed_point_pi_star, stationary_distribution};
use sijump::varsolve::{
    convert_to_theta_with, jtheta, jtilde, jtilde_with, m_evolution_defect, m_from_rho, residuals, solve_rate,
    ControlPath, MEval, SolveStatus, SolverOptions, TimeGrid,
};
use sijump::{GeneratorMatrix, RateField, SimplexVector};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn relaxed_control_identity(seed in any::<u64>(), d in 2usize..=4, midpoint in any::<bool>(), cells in 2usize..=16) {
        let mut r = rng(seed);
        let sparse = r.random::<bool>();
        let field = random_field(&mut r, d, sparse);
        let grid = TimeGrid::new(r.random_range(1.0..10.0), cells).unwrap();
        let path = random_feasible_path(&mut r, &field, grid);
        let mode = if midpoint { MEval::Midpoint } else { MEval::LeftNode };
        let a = jtilde_with(&path, &field, mode);
        let b = jtheta(&convert_to_theta_with(&path, &field, mode), &field);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
    }

    #[test]
    fn m_nodes_follow_the_discount_recursion(seed in any::<u64>(), d in 2usize..=5, cells in 2usize..=64) {
        let mut r = rng(seed);
        let field = random_field(&mut r, d, false);
        let grid = TimeGrid::new(r.random_range(1.0..12.0), cells).unwrap();
        let path = random_feasible_path(&mut r, &field, grid);
        prop_assert!(m_evolution_defect(&path) <= 1e-10);
        let m = m_from_rho(&path);
        for node in &m {
            prop_assert!((node.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        // M_0 is the discounted marginal.
        let gamma = path.marginal();
        for x in 0..d {
            prop_assert!((m[0].get(x) - gamma.get(x)).abs() <= 1e-12);
        }
    }

    #[test]
    fn cost_vanishes_only_on_equilibrium_controls(seed in any::<u64>(), d in 2usize..=4, factor in 1.1f64..3.0) {
        let mut r = rng(seed);
        let field = random_field(&mut r, d, false);
        let grid = TimeGrid::new(4.0, 8).unwrap();
        let pi = fixed_point_pi_star(&field, 1e-14, 100_000).unwrap().pi;
        let q = field.eval(&pi).unwrap();
        let equilibrium = ControlPath::constant(grid.clone(), pi.clone(), q.clone()).unwrap();
        prop_assert!(jtilde(&equilibrium, &field) <= 1e-12);
        let res = residuals(&equilibrium, &field, &pi, &equilibrium.discounted_flux());
        prop_assert!(res.stationarity <= 1e-10);

        // Speeding up every rate keeps pi stationary but leaves H = Q(M).
        let faster: Vec<f64> = q.edge_rates().iter().map(|v| v * factor).collect();
        let h = GeneratorMatrix::from_edge_rates(q.space(), &faster).unwrap();
        let sped = ControlPath::constant(grid.clone(), pi.clone(), h).unwrap();
        prop_assert!(jtilde(&sped, &field) > 0.0);

        // Random stationary pairs are away from Q(M) almost surely.
        let path = random_feasible_path(&mut r, &field, grid);
        prop_assert!(jtilde(&path, &field) > 0.0);
    }
}

fn dv_suite() -> Vec<(RateField, SimplexVector, sijump::FluxVector)> {
    let mut r = rng(404);
    (0..4)
        .map(|i| {
            let d = 2 + i % 2;
            let q0 = random_generator(&mut r, d, 0.3, 2.0, false);
            (RateField::constant(q0).unwrap(), random_simplex(&mut r, d, 0.1), random_balanced_flux(&mut r, d))
        })
        .collect()
}

/// A converged result is certified by its own path: the value is the cost of
/// the returned path and every residual is below tolerance.
#[test]
fn solver_results_are_certified_by_their_path() {
    for (field, gamma, flux) in dv_suite() {
        let opts = SolverOptions { horizon: 4.0, cells: 16, multistarts: 3, ..Default::default() };
        let result = solve_rate(&gamma, &flux, &field, &opts).unwrap();
        assert_eq!(result.status, SolveStatus::Converged);
        let path = result.path.as_ref().unwrap();
        assert_eq!(result.value, jtilde(path, &field));
        let res = residuals(path, &field, &gamma, &flux);
        assert!(res.marginal <= opts.tol && res.stationarity <= opts.tol && res.flux <= opts.tol);
        assert_eq!(res.support, 0);
    }
}

/// Doubling the horizon and the cell count never raises the value beyond
/// the discretization slack.
#[test]
fn refinement_does_not_raise_the_value() {
    for (field, gamma, flux) in dv_suite() {
        let coarse = SolverOptions { horizon: 4.0, cells: 16, multistarts: 3, ..Default::default() };
        let fine = SolverOptions { horizon: 8.0, cells: 32, ..coarse.clone() };
        let a = solve_rate(&gamma, &flux, &field, &coarse).unwrap();
        let b = solve_rate(&gamma, &flux, &field, &fine).unwrap();
        assert_eq!(a.status, SolveStatus::Converged);
        assert_eq!(b.status, SolveStatus::Converged);
        assert!(b.value <= a.value + 1e-3, "fine {} vs coarse {}", b.value, a.value);
    }
}

#[test]
fn stationary_pieces_have_zero_stationarity_residual() {
    let mut r = rng(8);
    let field = random_field(&mut r, 3, false);
    let grid = TimeGrid::new(3.0, 5).unwrap();
    let path = random_feasible_path(&mut r, &field, grid);
    for (rho, h) in path.rho().iter().zip(path.h()) {
        let pi = stationary_distribution(h).unwrap();
        assert!(sijump::l1_distance(rho, &pi) <= 1e-12);
    }
    let res = residuals(&path, &field, &path.marginal(), &path.discounted_flux());
    assert!(res.stationarity <= 1e-12 && res.marginal <= 1e-12 && res.flux <= 1e-12);
}
