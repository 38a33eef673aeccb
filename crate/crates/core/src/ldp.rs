//! Closed-form large-deviation primitives: the Poisson cost, the level-2.5
//! Donsker–Varadhan rate, stationary distributions and the self-consistent
//! fixed point `pi* Q(pi*) = 0`.
//!
//! Rates take values in `[0, +inf]`; `+inf` is `f64::INFINITY`, which
//! propagates through the nonnegative sums used here.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::model::{l1_distance, FluxVector, GeneratorMatrix, ModelError, RateField, SimplexVector};

/// Balance tolerance used by [`dv_rate`].
pub const BALANCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LdpError {
    #[error("argument {0} is negative")]
    NegativeInput(f64),
    #[error("generator is reducible")]
    Reducible,
    #[error("fixed-point iteration did not converge in {iterations} steps (residual {residual})")]
    NoConvergence { best: SimplexVector, residual: f64, iterations: usize },
    #[error("operation needs d = 2, got d = {0}")]
    WrongDimension(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `l(x) = x ln x - x + 1`, with `l(0) = 1`.
pub fn ell(x: f64) -> Result<f64, LdpError> {
    if !(x >= 0.0) {
        return Err(LdpError::NegativeInput(x));
    }
    Ok(ell_unchecked(x))
}

#[inline]
pub(crate) fn ell_unchecked(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (x * x.ln() - x + 1.0).max(0.0)
    }
}

/// `q l(h / q)` with the conventions `0 l(h/0) = +inf` for `h > 0` and
/// `0` for `h = 0`.
#[inline]
pub fn scaled_ell(q: f64, h: f64) -> f64 {
    if q == 0.0 {
        return if h == 0.0 { 0.0 } else { f64::INFINITY };
    }
    if h == 0.0 {
        return q;
    }
    (h * (h / q).ln() - h + q).max(0.0)
}

/// Whether total outflow equals total inflow at every state within `tol`.
pub fn flux_balanced(flux: &FluxVector, tol: f64) -> bool {
    flux.divergence().iter().all(|d| d.abs() <= tol)
}

/// Inputs of the Donsker–Varadhan level-2.5 rate.
#[derive(Debug, Clone)]
pub struct DvRateInput {
    q0: GeneratorMatrix,
    gamma: SimplexVector,
    flux: FluxVector,
}

impl DvRateInput {
    pub fn new(q0: GeneratorMatrix, gamma: SimplexVector, flux: FluxVector) -> Result<Self, LdpError> {
        let d = q0.dim();
        for got in [gamma.dim(), flux.space().dim()] {
            if got != d {
                return Err(ModelError::DimensionMismatch { expected: d, got }.into());
            }
        }
        if !q0.is_irreducible() {
            return Err(LdpError::Reducible);
        }
        Ok(Self { q0, gamma, flux })
    }

    pub fn q0(&self) -> &GeneratorMatrix {
        &self.q0
    }

    pub fn gamma(&self) -> &SimplexVector {
        &self.gamma
    }

    pub fn flux(&self) -> &FluxVector {
        &self.flux
    }
}

/// `sum_{x != y} gamma_x Q0_xy l(flux_xy / (gamma_x Q0_xy))` when the flux is
/// balanced, `+inf` otherwise.
pub fn dv_rate(input: &DvRateInput) -> f64 {
    if !flux_balanced(&input.flux, BALANCE_TOL) {
        return f64::INFINITY;
    }
    let space = input.q0.space();
    space
        .edges()
        .enumerate()
        .map(|(e, (x, y))| scaled_ell(input.gamma.get(x) * input.q0.get(x, y), input.flux.values()[e]))
        .sum()
}

/// Unique `pi` with `pi Q = 0`, `sum pi = 1`, for irreducible `Q`.
///
/// Solves the transposed system with the last equation replaced by the
/// normalization, by LU with partial pivoting.
pub fn stationary_distribution(q: &GeneratorMatrix) -> Result<SimplexVector, LdpError> {
    if !q.is_irreducible() {
        return Err(LdpError::Reducible);
    }
    let d = q.dim();
    let mut a = DMatrix::from_fn(d, d, |i, j| q.get(j, i));
    a.row_mut(d - 1).fill(1.0);
    let mut b = DVector::zeros(d);
    b[d - 1] = 1.0;
    let pi = a.lu().solve(&b).ok_or(LdpError::Reducible)?;
    if pi.iter().any(|p| !(*p > 0.0)) {
        return Err(LdpError::Reducible);
    }
    Ok(SimplexVector::from_unnormalized(pi.iter().copied().collect()))
}

/// Outcome of a converged fixed-point search.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub pi: SimplexVector,
    /// `l1_distance(pi, G(pi))`.
    pub residual: f64,
    pub iterations: usize,
    /// Whether damping was switched on after an oscillation.
    pub damped: bool,
}

/// `G(m)`: the stationary distribution of `Q(m)`.
pub fn stationary_map(field: &RateField, m: &SimplexVector) -> Result<SimplexVector, LdpError> {
    stationary_distribution(&field.eval(m)?)
}

/// Searches `pi = G(pi)` from the uniform distribution.
pub fn fixed_point_pi_star(field: &RateField, tol: f64, max_iter: usize) -> Result<FixedPoint, LdpError> {
    fixed_point_from(field, SimplexVector::uniform(field.dim()), tol, max_iter)
}

/// Picard iteration `m <- G(m)`, switching to `m <- (m + G(m)) / 2` for the
/// rest of the run once two successive increments point in opposite
/// directions.
pub fn fixed_point_from(
    field: &RateField,
    start: SimplexVector,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPoint, LdpError> {
    let mut m = start;
    let mut image = stationary_map(field, &m)?;
    let mut residual = l1_distance(&m, &image);
    let mut best = (m.clone(), residual);
    let mut damping = 1.0;
    let mut previous_step: Option<Vec<f64>> = None;
    for iteration in 0..=max_iter {
        if residual <= tol {
            return Ok(FixedPoint { pi: m, residual, iterations: iteration, damped: damping < 1.0 });
        }
        if iteration == max_iter {
            break;
        }
        let step: Vec<f64> = image.as_slice().iter().zip(m.as_slice()).map(|(g, x)| g - x).collect();
        if let Some(prev) = &previous_step {
            let dot: f64 = prev.iter().zip(&step).map(|(a, b)| a * b).sum();
            if dot < 0.0 {
                damping = 0.5;
            }
        }
        m = m.mix(&image, 1.0 - damping);
        previous_step = Some(step);
        image = stationary_map(field, &m)?;
        residual = l1_distance(&m, &image);
        if residual < best.1 {
            best = (m.clone(), residual);
        }
    }
    Err(LdpError::NoConvergence { best: best.0, residual: best.1, iterations: max_iter })
}

/// Runs the fixed-point search from every start and returns the distinct
/// fixed points found (pairwise `l1` separation above `100 tol`), in order of
/// first discovery. More than one entry means the limit depends on the
/// starting point.
pub fn fixed_point_multistart(
    field: &RateField,
    starts: &[SimplexVector],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<FixedPoint>, LdpError> {
    let mut found: Vec<FixedPoint> = Vec::new();
    for start in starts {
        let fp = fixed_point_from(field, start.clone(), tol, max_iter)?;
        if found.iter().all(|f| l1_distance(&f.pi, &fp.pi) > 100.0 * tol) {
            found.push(fp);
        }
    }
    Ok(found)
}

/// `flux_xy = pi_x Q_xy(pi)`.
pub fn equilibrium_flux(field: &RateField, pi: &SimplexVector) -> Result<FluxVector, LdpError> {
    let rates = field.edge_rates(pi)?;
    let space = field.space();
    let values = space.edges().enumerate().map(|(e, (x, _))| pi.get(x) * rates[e]).collect();
    Ok(FluxVector::new(space, values)?)
}

/// Occupation-only rate of a two-state chain,
/// `(sqrt(gamma_1 Q0_12) - sqrt(gamma_2 Q0_21))^2`.
pub fn dv_occupation_rate_2state(q0: &GeneratorMatrix, gamma: &SimplexVector) -> Result<f64, LdpError> {
    if q0.dim() != 2 {
        return Err(LdpError::WrongDimension(q0.dim()));
    }
    if gamma.dim() != 2 {
        return Err(ModelError::DimensionMismatch { expected: 2, got: gamma.dim() }.into());
    }
    if !q0.is_irreducible() {
        return Err(LdpError::Reducible);
    }
    let a = (gamma.get(0) * q0.get(0, 1)).sqrt();
    let b = (gamma.get(1) * q0.get(1, 0)).sqrt();
    Ok((a - b).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(rows: &[&[f64]]) -> GeneratorMatrix {
        GeneratorMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn unit() -> GeneratorMatrix {
        g(&[&[-1.0, 1.0], &[1.0, -1.0]])
    }

    #[test]
    fn ell_values() {
        assert_eq!(ell(1.0).unwrap(), 0.0);
        assert_eq!(ell(0.0).unwrap(), 1.0);
        assert!((ell(2.0).unwrap() - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
        assert!((ell(2.0).unwrap() - 0.3862944).abs() < 1e-7);
        assert_eq!(ell(-0.5), Err(LdpError::NegativeInput(-0.5)));
    }

    #[test]
    fn scaled_ell_conventions() {
        assert_eq!(scaled_ell(0.0, 0.0), 0.0);
        assert_eq!(scaled_ell(0.0, 1.0), f64::INFINITY);
        assert_eq!(scaled_ell(2.0, 2.0), 0.0);
        assert_eq!(scaled_ell(1.5, 0.0), 1.5);
    }

    #[test]
    fn balance_examples() {
        let s = unit().space();
        assert!(flux_balanced(&FluxVector::zeros(s), 0.0));
        assert!(flux_balanced(&FluxVector::new(s, vec![0.7, 0.7]).unwrap(), 1e-12));
        assert!(!flux_balanced(&FluxVector::new(s, vec![1.0, 0.0]).unwrap(), 1e-12));
    }

    #[test]
    fn dv_rate_examples() {
        let half = SimplexVector::uniform(2);
        let s = unit().space();
        let at_eq = DvRateInput::new(unit(), half.clone(), FluxVector::new(s, vec![0.5, 0.5]).unwrap()).unwrap();
        assert_eq!(dv_rate(&at_eq), 0.0);
        let imbalanced = DvRateInput::new(unit(), half.clone(), FluxVector::new(s, vec![1.0, 0.5]).unwrap()).unwrap();
        assert_eq!(dv_rate(&imbalanced), f64::INFINITY);
        let doubled = DvRateInput::new(unit(), half, FluxVector::new(s, vec![1.0, 1.0]).unwrap()).unwrap();
        assert!((dv_rate(&doubled) - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn dv_rate_off_support_flux_is_infinite() {
        let q0 = g(&[&[-1.0, 1.0, 0.0], &[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0]]);
        let flux = FluxVector::from_matrix(&[vec![0.0, 0.3, 0.1], vec![0.0, 0.0, 0.4], vec![0.4, 0.1, 0.0]]).unwrap();
        assert!(flux_balanced(&flux, 1e-12));
        let input = DvRateInput::new(q0, SimplexVector::uniform(3), flux).unwrap();
        assert_eq!(dv_rate(&input), f64::INFINITY);
    }

    #[test]
    fn dv_input_rejects_reducible() {
        let q0 = g(&[&[-1.0, 1.0], &[0.0, 0.0]]);
        let s = q0.space();
        assert!(matches!(
            DvRateInput::new(q0, SimplexVector::uniform(2), FluxVector::zeros(s)),
            Err(LdpError::Reducible)
        ));
    }

    #[test]
    fn stationary_examples() {
        let pi = stationary_distribution(&unit()).unwrap();
        assert!((pi.get(0) - 0.5).abs() < 1e-15);
        let pi = stationary_distribution(&g(&[&[-1.0, 1.0], &[3.0, -3.0]])).unwrap();
        assert!((pi.get(0) - 0.75).abs() < 1e-15 && (pi.get(1) - 0.25).abs() < 1e-15);
        assert_eq!(stationary_distribution(&GeneratorMatrix::zero(3)), Err(LdpError::Reducible));
    }

    #[test]
    fn fixed_point_of_constant_field_takes_one_step() {
        let q0 = g(&[&[-1.0, 1.0], &[3.0, -3.0]]);
        let f = RateField::constant(q0.clone()).unwrap();
        let fp = fixed_point_pi_star(&f, 1e-12, 100).unwrap();
        assert_eq!(fp.iterations, 1);
        assert_eq!(fp.pi, stationary_distribution(&q0).unwrap());
    }

    #[test]
    fn symmetric_autochemotaxis_fixed_point_is_uniform() {
        let f = RateField::autochemotaxis(unit(), 2.0).unwrap();
        let fp = fixed_point_pi_star(&f, 1e-12, 100).unwrap();
        assert!((fp.pi.get(0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn no_convergence_returns_best_iterate() {
        let f = RateField::autochemotaxis(g(&[&[-2.0, 2.0], &[1.0, -1.0]]), 1.0).unwrap();
        match fixed_point_pi_star(&f, 1e-15, 1) {
            Err(LdpError::NoConvergence { best, residual, iterations }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
                assert_eq!(best.dim(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn equilibrium_flux_examples() {
        let f = RateField::constant(unit()).unwrap();
        let flux = equilibrium_flux(&f, &SimplexVector::uniform(2)).unwrap();
        assert_eq!(flux.values(), &[0.5, 0.5]);
        let zero = RateField::constant(GeneratorMatrix::zero(2)).unwrap();
        assert!(equilibrium_flux(&zero, &SimplexVector::uniform(2)).unwrap().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn two_state_occupation_rate_examples() {
        assert_eq!(dv_occupation_rate_2state(&unit(), &SimplexVector::dirac(2, 0)).unwrap(), 1.0);
        let r = dv_occupation_rate_2state(&unit(), &SimplexVector::new(vec![0.75, 0.25]).unwrap()).unwrap();
        assert!((r - 0.1339746).abs() < 1e-7);
        let q0 = g(&[&[-2.0, 2.0], &[5.0, -5.0]]);
        let pi = stationary_distribution(&q0).unwrap();
        assert!(dv_occupation_rate_2state(&q0, &pi).unwrap() < 1e-15);
        let q3 = g(&[&[-2.0, 1.0, 1.0], &[1.0, -2.0, 1.0], &[1.0, 1.0, -2.0]]);
        assert_eq!(dv_occupation_rate_2state(&q3, &SimplexVector::uniform(3)), Err(LdpError::WrongDimension(3)));
    }
}
