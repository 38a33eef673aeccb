use super::path::piece_points;
use super::{ControlPath, MEval, TimeGrid};
use crate::ldp::ell_unchecked;
use crate::model::{RateField, SimplexVector};

/// Relaxed-control form of a path: per piece, the marginal `rho` times a
/// point mass at the jump-intensity ratios `v_xy`, with the auxiliary
/// coordinate uniform on `[0, c]`.
///
/// `v_xy = H_xy / Q_xy(M)` where `Q_xy(M) > 0` and `1` otherwise, except that
/// `H_xy > 0` against a zero rate is recorded as `v_xy = inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaPath {
    grid: TimeGrid,
    marginals: Vec<SimplexVector>,
    controls: Vec<Vec<f64>>,
    bound: f64,
    mode: MEval,
}

impl ThetaPath {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn marginals(&self) -> &[SimplexVector] {
        &self.marginals
    }

    /// Per piece, `v` indexed by edge.
    pub fn controls(&self) -> &[Vec<f64>] {
        &self.controls
    }

    /// Height `c` of the auxiliary coordinate.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn mode(&self) -> MEval {
        self.mode
    }

    /// `int e^{-s} rho_s(x) Q_xy(M_s) v_xy(s) ds` per edge.
    pub fn discounted_flux(&self, field: &RateField) -> Vec<f64> {
        let space = field.space();
        let points = piece_points(&self.grid, &self.marginals, self.mode);
        let mut rates = vec![0.0; space.num_edges()];
        let mut flux = vec![0.0; space.num_edges()];
        for (k, w) in self.grid.weights().iter().enumerate() {
            field.edge_rates_into(&points[k], &mut rates);
            for (e, (x, _)) in space.edges().enumerate() {
                if rates[e] > 0.0 {
                    flux[e] += w * self.marginals[k].get(x) * rates[e].min(self.bound) * self.controls[k][e];
                }
            }
        }
        flux
    }
}

pub fn convert_to_theta(path: &ControlPath, field: &RateField) -> ThetaPath {
    convert_to_theta_with(path, field, MEval::LeftNode)
}

pub fn convert_to_theta_with(path: &ControlPath, field: &RateField, mode: MEval) -> ThetaPath {
    let space = field.space();
    let points = piece_points(path.grid(), path.rho(), mode);
    let mut rates = vec![0.0; space.num_edges()];
    let controls = path
        .h()
        .iter()
        .enumerate()
        .map(|(k, h)| {
            field.edge_rates_into(&points[k], &mut rates);
            space
                .edges()
                .enumerate()
                .map(|(e, (x, y))| {
                    let hv = h.get(x, y);
                    if rates[e] > 0.0 {
                        hv / rates[e]
                    } else if hv > 0.0 {
                        f64::INFINITY
                    } else {
                        1.0
                    }
                })
                .collect()
        })
        .collect();
    ThetaPath { grid: path.grid().clone(), marginals: path.rho().to_vec(), controls, bound: field.rate_bound(), mode }
}

/// `c sum_k w_k sum_x rho_k(x) sum_y int_0^c 1{u <= Q_xy(M_k)} l(v_xy) du / c`.
///
/// `M` is rebuilt from the marginals, so the cost depends on the relaxed
/// path alone.
pub fn jtheta(theta: &ThetaPath, field: &RateField) -> f64 {
    let space = field.space();
    let points = piece_points(&theta.grid, &theta.marginals, theta.mode);
    let c = theta.bound;
    let mut rates = vec![0.0; space.num_edges()];
    let mut total = 0.0;
    for (k, w) in theta.grid.weights().iter().enumerate() {
        field.edge_rates_into(&points[k], &mut rates);
        let mut piece = 0.0;
        for (e, (x, _)) in space.edges().enumerate() {
            let rho = theta.marginals[k].get(x);
            if rho == 0.0 {
                continue;
            }
            let v = theta.controls[k][e];
            if v.is_infinite() {
                return f64::INFINITY;
            }
            if rates[e] > 0.0 {
                let covered = if c > 0.0 { rates[e].min(c) / c } else { 0.0 };
                piece += rho * c * covered * ell_unchecked(v);
            }
        }
        total += w * piece;
    }
    total
}
