use rand::Rng;
use rayon::prelude::*;

use super::lbfgs::{minimize, LbfgsOptions};
use super::objective::{Objective, Target};
use super::path::{jtilde_with, residuals, stationarity_residual, support_violations};
use super::{ControlPath, MEval, Residuals, TimeGrid, VarSolveError};
use crate::ldp::{equilibrium_flux, fixed_point_pi_star, BALANCE_TOL};
use crate::model::{CurrentVector, FluxVector, GeneratorMatrix, ModelError, RateField, SimplexVector};
use crate::rng::{derive_seed, path_stream};

/// Settings of the penalized multistart minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Grid horizon `T_h`.
    pub horizon: f64,
    /// Number of cells `K`.
    pub cells: usize,
    pub multistarts: usize,
    /// Outer penalty rounds; the weight grows by `mu_growth` per round.
    pub rounds: usize,
    pub mu0: f64,
    pub mu_growth: f64,
    /// L-BFGS iteration cap per round.
    pub inner_max_iter: usize,
    /// Bound on every residual for a solve to count as converged.
    pub tol: f64,
    pub eps_rho: f64,
    pub eps_h: f64,
    /// Floor applied to zero coordinates of a boundary target.
    pub boundary_floor: f64,
    /// Half-width of the uniform perturbation applied to random starts.
    pub perturbation: f64,
    pub m_eval: MEval,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            horizon: 8.0,
            cells: 64,
            multistarts: 8,
            rounds: 6,
            mu0: 10.0,
            mu_growth: 10.0,
            inner_max_iter: 1000,
            tol: 1e-6,
            eps_rho: 1e-6,
            eps_h: 1e-8,
            boundary_floor: 1e-3,
            perturbation: 1.0,
            m_eval: MEval::LeftNode,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    /// The constraints cannot be met; the value is `+inf`.
    Infeasible,
    /// No start met the tolerances; the value is from the least violating one.
    MaxIter,
    /// The target was on the simplex boundary and was solved on a floored
    /// interior copy.
    Boundary,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::Infeasible => "infeasible",
            Self::MaxIter => "max_iter",
            Self::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    /// `jtilde` of `path`, or `+inf` when infeasible.
    pub value: f64,
    pub status: SolveStatus,
    pub path: Option<ControlPath>,
    pub residuals: Residuals,
    /// Discounted flux read off `path`.
    pub flux: Option<FluxVector>,
    /// Whether the tolerances were met (also for boundary solves).
    pub feasible_to_tol: bool,
    pub best_start: Option<usize>,
    pub starts_converged: usize,
    /// Inner L-BFGS iterations summed over rounds and starts.
    pub iterations: usize,
    pub note: Option<String>,
}

impl RateResult {
    fn infeasible(note: impl Into<String>) -> Self {
        Self {
            value: f64::INFINITY,
            status: SolveStatus::Infeasible,
            path: None,
            residuals: Residuals::default(),
            flux: None,
            feasible_to_tol: false,
            best_start: None,
            starts_converged: 0,
            iterations: 0,
            note: Some(note.into()),
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<TimeGrid, VarSolveError> {
        let bad = |what: &str| Err(VarSolveError::InvalidOptions(what.to_string()));
        if self.multistarts == 0 {
            return bad("multistarts must be positive");
        }
        if self.rounds == 0 || !(self.mu0 > 0.0) || !(self.mu_growth >= 1.0) {
            return bad("penalty schedule needs rounds > 0, mu0 > 0, mu_growth >= 1");
        }
        if !(self.tol > 0.0) || !(self.eps_rho > 0.0) || !(self.eps_h > 0.0) {
            return bad("tolerances and floors must be positive");
        }
        if !(self.boundary_floor >= self.eps_rho) || self.boundary_floor >= 0.5 {
            return bad("boundary_floor must lie in [eps_rho, 0.5)");
        }
        TimeGrid::new(self.horizon, self.cells)
    }
}

fn check_dim(field: &RateField, got: usize) -> Result<(), VarSolveError> {
    if got != field.dim() {
        return Err(ModelError::DimensionMismatch { expected: field.dim(), got }.into());
    }
    Ok(())
}

fn equilibrium(field: &RateField) -> SimplexVector {
    fixed_point_pi_star(field, 1e-12, 10_000).map(|fp| fp.pi).unwrap_or_else(|_| SimplexVector::uniform(field.dim()))
}

fn equilibrium_path(field: &RateField, grid: &TimeGrid) -> Result<ControlPath, VarSolveError> {
    let pi = equilibrium(field);
    let h = field.eval(&pi)?;
    ControlPath::constant(grid.clone(), pi, h)
}

/// Returns the floored target and whether flooring was needed.
fn floor_target(gamma: &SimplexVector, opts: &SolverOptions) -> (SimplexVector, bool) {
    if gamma.min_component() >= opts.boundary_floor {
        (gamma.clone(), false)
    } else {
        (gamma.floored(opts.boundary_floor), gamma.min_component() <= 0.0)
    }
}

/// Minimum of the discounted cost over paths with marginal `gamma` and
/// discounted flux `flux`.
pub fn solve_rate(
    gamma: &SimplexVector,
    flux: &FluxVector,
    field: &RateField,
    opts: &SolverOptions,
) -> Result<RateResult, VarSolveError> {
    let grid = opts.validate()?;
    check_dim(field, gamma.dim())?;
    check_dim(field, flux.space().dim())?;
    let scale = flux.values().iter().fold(1.0f64, |m, v| m.max(*v));
    if flux.divergence().iter().any(|d| d.abs() > BALANCE_TOL * scale) {
        return Ok(RateResult::infeasible("flux balance violated"));
    }
    let space = field.space();
    if let Some((e, _)) = flux.values().iter().enumerate().find(|&(e, v)| *v > 0.0 && !field.in_support(e)) {
        let (x, y) = space.edge(e);
        return Ok(RateResult::infeasible(format!("positive flux on edge ({}, {}) outside the support", x + 1, y + 1)));
    }
    if let Some(x) = (0..gamma.dim())
        .find(|&x| gamma.get(x) <= 0.0 && space.edges().enumerate().any(|(e, (a, _))| a == x && flux.values()[e] > 0.0))
    {
        return Ok(RateResult::infeasible(format!("flux leaves state {} which has zero occupation", x + 1)));
    }
    let (target_gamma, boundary) = floor_target(gamma, opts);
    let support: Vec<usize> = (0..space.num_edges()).filter(|&e| field.in_support(e)).collect();
    let target = Target::Fixed {
        gamma: target_gamma.as_slice().to_vec(),
        flux: support.iter().map(|&e| flux.values()[e]).collect(),
    };
    let seeds = vec![
        equilibrium_path(field, &grid)?,
        ControlPath::constant_for_target(grid.clone(), field, &target_gamma, flux)?,
    ];
    let mut result = run(field, &grid, target, seeds, opts, |path| residuals(path, field, &target_gamma, flux));
    mark_boundary(&mut result, boundary);
    Ok(result)
}

/// Rate of the occupation measure alone: the flux is left free.
pub fn occupation_rate(
    gamma: &SimplexVector,
    field: &RateField,
    opts: &SolverOptions,
) -> Result<RateResult, VarSolveError> {
    let grid = opts.validate()?;
    check_dim(field, gamma.dim())?;
    let (target_gamma, boundary) = floor_target(gamma, opts);
    let space = field.space();
    let q = field.edge_rates(&target_gamma)?;
    // Symmetrized guess: flux sqrt(g_x q_xy g_y q_yx) on two-way edges.
    let rates: Vec<f64> = space
        .edges()
        .enumerate()
        .map(|(e, (x, y))| {
            let back = q[space.reverse(e)];
            if q[e] > 0.0 && back > 0.0 {
                (q[e] * back * target_gamma.get(y) / target_gamma.get(x)).sqrt()
            } else {
                q[e]
            }
        })
        .collect();
    let guess = GeneratorMatrix::from_edge_rates(space, &rates)?;
    let seeds =
        vec![equilibrium_path(field, &grid)?, ControlPath::constant(grid.clone(), target_gamma.clone(), guess)?];
    let target = Target::Occupation { gamma: target_gamma.as_slice().to_vec() };
    let mut result = run(field, &grid, target, seeds, opts, |path| Residuals {
        marginal: crate::model::l1_distance(&path.marginal(), &target_gamma),
        stationarity: stationarity_residual(path),
        flux: 0.0,
        current: 0.0,
        support: support_violations(path, field),
    });
    mark_boundary(&mut result, boundary);
    Ok(result)
}

/// Rate of the discounted current `J^xy = flux_xy - flux_yx`.
pub fn current_rate(
    current: &CurrentVector,
    field: &RateField,
    opts: &SolverOptions,
) -> Result<RateResult, VarSolveError> {
    let grid = opts.validate()?;
    check_dim(field, current.space().dim())?;
    let space = field.space();
    let d = space.dim();
    let j = current.values();
    let scale = j.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for x in 0..d {
        let div: f64 = (0..d).filter(|&y| y != x).map(|y| j[space.edge_index(x, y)]).sum();
        if div.abs() > BALANCE_TOL * scale {
            return Ok(RateResult::infeasible(format!("current has nonzero divergence {div} at state {}", x + 1)));
        }
    }
    if let Some(e) = (0..space.num_edges()).find(|&e| j[e] > 0.0 && !field.in_support(e)) {
        let (x, y) = space.edge(e);
        return Ok(RateResult::infeasible(format!(
            "positive current on edge ({}, {}) outside the support",
            x + 1,
            y + 1
        )));
    }
    let support: Vec<usize> = (0..space.num_edges()).filter(|&e| field.in_support(e)).collect();
    let local = |e: usize| support.iter().position(|&s| s == e);
    let mut pairs = Vec::new();
    for x in 0..d {
        for y in x + 1..d {
            let (fwd, bwd) = (space.edge_index(x, y), space.edge_index(y, x));
            if field.in_support(fwd) || field.in_support(bwd) {
                pairs.push((local(fwd), local(bwd), j[fwd]));
            }
        }
    }

    // Seed: equilibrium flux plus the missing current routed along its sign.
    let pi = equilibrium(field);
    let eq_flux = equilibrium_flux(field, &pi)?;
    let q = field.edge_rates(&pi)?;
    let rates: Vec<f64> = space
        .edges()
        .enumerate()
        .map(|(e, (x, _))| {
            let missing = j[e] - (eq_flux.values()[e] - eq_flux.values()[space.reverse(e)]);
            if field.in_support(e) {
                q[e] + missing.max(0.0) / pi.get(x)
            } else {
                0.0
            }
        })
        .collect();
    let guess = GeneratorMatrix::from_edge_rates(space, &rates)?;
    let seeds = vec![equilibrium_path(field, &grid)?, ControlPath::constant(grid.clone(), pi, guess)?];
    let target = Target::Current { pairs };
    let result = run(field, &grid, target, seeds, opts, |path| {
        let f = path.discounted_flux();
        let worst = space
            .edges()
            .enumerate()
            .map(|(e, _)| (f.values()[e] - f.values()[space.reverse(e)] - j[e]).abs())
            .fold(0.0, f64::max);
        Residuals {
            marginal: 0.0,
            stationarity: stationarity_residual(path),
            flux: 0.0,
            current: worst,
            support: support_violations(path, field),
        }
    });
    Ok(result)
}

fn mark_boundary(result: &mut RateResult, boundary: bool) {
    if boundary && result.status != SolveStatus::Infeasible {
        result.status = SolveStatus::Boundary;
        result.note = Some("target has a zero coordinate; solved on the floored interior".into());
    }
}

struct StartOutcome {
    iterations: usize,
    path: ControlPath,
    value: f64,
    residuals: Residuals,
}

fn within_tol(r: &Residuals, tol: f64) -> bool {
    r.marginal <= tol && r.stationarity <= tol && r.flux <= tol && r.current <= tol && r.support == 0
}

fn violation(r: &Residuals) -> f64 {
    r.marginal.max(r.stationarity).max(r.flux).max(r.current) + r.support as f64
}

fn run<R>(
    field: &RateField,
    grid: &TimeGrid,
    target: Target,
    seeds: Vec<ControlPath>,
    opts: &SolverOptions,
    measure: R,
) -> RateResult
where
    R: Fn(&ControlPath) -> Residuals + Sync,
{
    let template = Objective::new(field, grid, opts.m_eval, target, opts.eps_rho, opts.eps_h);
    let base = template.encode(&seeds[0]);
    let mut starts: Vec<Vec<f64>> = seeds.iter().take(opts.multistarts).map(|p| template.encode(p)).collect();
    let stream_seed = derive_seed(opts.seed, "varsolve-starts");
    for i in starts.len()..opts.multistarts {
        let mut rng = path_stream(stream_seed, i as u64);
        starts.push(base.iter().map(|v| v + rng.random_range(-opts.perturbation..=opts.perturbation)).collect());
    }

    let outcomes: Vec<StartOutcome> = starts
        .into_par_iter()
        .map(|mut x| {
            let mut obj = template.clone();
            let mut lambda = obj.multiplier_estimate(&x);
            let mut mu = opts.mu0;
            let inner = LbfgsOptions { max_iter: opts.inner_max_iter, ..Default::default() };
            let mut iterations = 0;
            for _ in 0..opts.rounds {
                iterations += minimize(|x, g| obj.eval(x, &lambda, mu, g), &mut x, inner).iterations;
                let c = obj.constraint_values(&x);
                lambda.iter_mut().zip(&c).for_each(|(l, ci)| *l += mu * ci);
                mu *= opts.mu_growth;
            }
            let path = obj.path(&x);
            let value = jtilde_with(&path, field, opts.m_eval);
            let residuals = measure(&path);
            StartOutcome { iterations, path, value, residuals }
        })
        .collect();

    let converged: Vec<usize> = (0..outcomes.len())
        .filter(|&i| outcomes[i].value.is_finite() && within_tol(&outcomes[i].residuals, opts.tol))
        .collect();
    let (best, status) = match converged.iter().copied().reduce(|a, b| {
        if outcomes[b].value < outcomes[a].value {
            b
        } else {
            a
        }
    }) {
        Some(i) => (i, SolveStatus::Converged),
        None => {
            let i = (0..outcomes.len())
                .reduce(
                    |a, b| if violation(&outcomes[b].residuals) < violation(&outcomes[a].residuals) { b } else { a },
                )
                .expect("at least one start");
            (i, SolveStatus::MaxIter)
        }
    };
    let chosen = &outcomes[best];
    RateResult {
        value: chosen.value,
        status,
        flux: Some(chosen.path.discounted_flux()),
        path: Some(chosen.path.clone()),
        residuals: chosen.residuals,
        feasible_to_tol: status == SolveStatus::Converged,
        best_start: Some(best),
        starts_converged: converged.len(),
        iterations: outcomes.iter().map(|o| o.iterations).sum(),
        note: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldp::{dv_occupation_rate_2state, dv_rate, DvRateInput};

    fn unit() -> GeneratorMatrix {
        GeneratorMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap()
    }

    #[test]
    fn dv_two_state() {
        let q0 = unit();
        let field = RateField::constant(q0.clone()).unwrap();
        let gamma = SimplexVector::uniform(2);
        let flux = FluxVector::new(field.space(), vec![1.0, 1.0]).unwrap();
        let r = solve_rate(&gamma, &flux, &field, &SolverOptions::default()).unwrap();
        let dv = dv_rate(&DvRateInput::new(q0, gamma, flux).unwrap());
        assert_eq!(r.status, SolveStatus::Converged);
        assert!((r.value - dv).abs() <= (0.02 * dv).max(5e-3));
    }

    #[test]
    fn dv_three_state() {
        let q0 =
            GeneratorMatrix::from_rows(&[vec![-2.0, 1.0, 1.0], vec![0.5, -1.5, 1.0], vec![2.0, 0.5, -2.5]]).unwrap();
        let field = RateField::constant(q0.clone()).unwrap();
        let gamma = SimplexVector::new(vec![0.2, 0.5, 0.3]).unwrap();
        // cycle 1->2->3->1 of size 0.4 plus symmetric parts
        let flux = FluxVector::from_matrix(&[vec![0.0, 0.7, 0.2], vec![0.3, 0.0, 0.6], vec![0.6, 0.2, 0.0]]).unwrap();
        let r = solve_rate(&gamma, &flux, &field, &SolverOptions::default()).unwrap();
        let dv = dv_rate(&DvRateInput::new(q0, gamma, flux).unwrap());
        assert_eq!(r.status, SolveStatus::Converged);
        assert!((r.value - dv).abs() <= (0.02 * dv).max(5e-3));
    }

    #[test]
    fn occupation_two_state() {
        let q0 = GeneratorMatrix::from_rows(&[vec![-2.0, 2.0], vec![0.5, -0.5]]).unwrap();
        let field = RateField::constant(q0.clone()).unwrap();
        let gamma = SimplexVector::new(vec![0.6, 0.4]).unwrap();
        let r = occupation_rate(&gamma, &field, &SolverOptions::default()).unwrap();
        let exact = dv_occupation_rate_2state(&q0, &gamma).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!((r.value - exact).abs() <= (0.02 * exact).max(5e-3));
    }

    #[test]
    fn zero_at_equilibrium() {
        let q0 =
            GeneratorMatrix::from_rows(&[vec![-2.0, 1.0, 1.0], vec![0.5, -1.5, 1.0], vec![2.0, 0.5, -2.5]]).unwrap();
        let field = RateField::autochemotaxis(q0, 2.0).unwrap();
        let pi = equilibrium(&field);
        let flux = equilibrium_flux(&field, &pi).unwrap();
        let r = solve_rate(&pi, &flux, &field, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!(r.value <= 1e-3);
    }

    fn current_grid_oracle(q: &GeneratorMatrix, j: &CurrentVector) -> f64 {
        let n = 200;
        let mut best = f64::INFINITY;
        for a in 1..n {
            for b in 1..n - a {
                let g = [a as f64 / n as f64, b as f64 / n as f64, (n - a - b) as f64 / n as f64];
                let mut total = 0.0;
                for x in 0..3 {
                    for y in x + 1..3 {
                        let (p, r) = (g[x] * q.get(x, y), g[y] * q.get(y, x));
                        let cur = j.get(x, y);
                        let back = (-cur + (cur * cur + 4.0 * p * r).sqrt()) / 2.0;
                        total += crate::ldp::scaled_ell(p, back + cur) + crate::ldp::scaled_ell(r, back);
                    }
                }
                best = best.min(total);
            }
        }
        best
    }

    #[test]
    fn current_cycle() {
        let q0 =
            GeneratorMatrix::from_rows(&[vec![-2.0, 1.0, 1.0], vec![0.5, -1.5, 1.0], vec![2.0, 0.5, -2.5]]).unwrap();
        let field = RateField::constant(q0.clone()).unwrap();
        let j =
            CurrentVector::from_matrix(&[vec![0.0, 0.3, -0.3], vec![-0.3, 0.0, 0.3], vec![0.3, -0.3, 0.0]]).unwrap();
        let r = current_rate(&j, &field, &SolverOptions::default()).unwrap();
        let oracle = current_grid_oracle(&q0, &j);
        assert_eq!(r.status, SolveStatus::Converged);
        assert!((r.value - oracle).abs() <= 0.05 * oracle);
    }

    #[test]
    fn infeasible_targets() {
        let field = RateField::constant(unit()).unwrap();
        let opts = SolverOptions::default();
        let imbalanced = FluxVector::new(field.space(), vec![1.0, 0.5]).unwrap();
        let r = solve_rate(&SimplexVector::uniform(2), &imbalanced, &field, &opts).unwrap();
        assert_eq!((r.status, r.value), (SolveStatus::Infeasible, f64::INFINITY));
        let j = CurrentVector::from_matrix(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let r = current_rate(&j, &field, &opts).unwrap();
        assert_eq!((r.status, r.value), (SolveStatus::Infeasible, f64::INFINITY));
    }

    #[test]
    fn zero_current_on_symmetric_pair() {
        let field = RateField::constant(unit()).unwrap();
        let j = CurrentVector::from_matrix(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let r = current_rate(&j, &field, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!(r.value <= 1e-6);
    }

    #[test]
    fn boundary_target_is_flagged() {
        let field = RateField::constant(unit()).unwrap();
        let opts = SolverOptions::default();
        let r = occupation_rate(&SimplexVector::dirac(2, 0), &field, &opts).unwrap();
        assert_eq!(r.status, SolveStatus::Boundary);
        assert!(r.feasible_to_tol, "{:?} {}", r.residuals, r.value);
        let floored = SimplexVector::dirac(2, 0).floored(opts.boundary_floor);
        let exact = dv_occupation_rate_2state(&unit(), &floored).unwrap();
        assert!((r.value - exact).abs() <= (0.02 * exact).max(5e-3));
    }

    #[test]
    fn deterministic_given_seed() {
        let field = RateField::constant(unit()).unwrap();
        let gamma = SimplexVector::new(vec![0.7, 0.3]).unwrap();
        let opts = SolverOptions { multistarts: 3, cells: 8, seed: 11, ..Default::default() };
        let a = occupation_rate(&gamma, &field, &opts).unwrap();
        let b = occupation_rate(&gamma, &field, &opts).unwrap();
        assert_eq!(a, b);
    }
}
