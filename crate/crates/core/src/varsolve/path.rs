use super::{TimeGrid, VarSolveError};
use crate::ldp::scaled_ell;
use crate::model::{l1_distance, FluxVector, GeneratorMatrix, ModelError, RateField, SimplexVector};

/// Where inside a cell the environment `M` is read when evaluating the cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MEval {
    /// `M(s_k)` at the cell's left node.
    #[default]
    LeftNode,
    /// `M((s_k + s_{k+1}) / 2)`, exactly integrated.
    Midpoint,
}

/// Piecewise-constant occupation/rate pair `(rho, H)` on a [`TimeGrid`],
/// constant on each cell and on the tail.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPath {
    grid: TimeGrid,
    rho: Vec<SimplexVector>,
    h: Vec<GeneratorMatrix>,
}

impl ControlPath {
    pub fn new(grid: TimeGrid, rho: Vec<SimplexVector>, h: Vec<GeneratorMatrix>) -> Result<Self, VarSolveError> {
        let pieces = grid.pieces();
        if rho.len() != pieces || h.len() != pieces {
            return Err(VarSolveError::InvalidPath(format!(
                "expected {pieces} pieces, got {} rho and {} H",
                rho.len(),
                h.len()
            )));
        }
        let d = rho[0].dim();
        if let Some(bad) = rho.iter().map(|r| r.dim()).chain(h.iter().map(|m| m.dim())).find(|&n| n != d) {
            return Err(ModelError::DimensionMismatch { expected: d, got: bad }.into());
        }
        Ok(Self { grid, rho, h })
    }

    /// The same pair on every piece.
    pub fn constant(grid: TimeGrid, rho: SimplexVector, h: GeneratorMatrix) -> Result<Self, VarSolveError> {
        let pieces = grid.pieces();
        Self::new(grid, vec![rho; pieces], vec![h; pieces])
    }

    /// The time-constant path `rho = gamma`, `H_xy = flux_xy / gamma_x`
    /// (rows with `gamma_x = 0` copy `Q(gamma)`).
    pub fn constant_for_target(
        grid: TimeGrid,
        field: &RateField,
        gamma: &SimplexVector,
        flux: &FluxVector,
    ) -> Result<Self, VarSolveError> {
        let space = field.space();
        let fallback = field.edge_rates(gamma)?;
        let rates: Vec<f64> = space
            .edges()
            .enumerate()
            .map(|(e, (x, _))| if gamma.get(x) > 0.0 { flux.values()[e] / gamma.get(x) } else { fallback[e] })
            .collect();
        let h = GeneratorMatrix::from_edge_rates(space, &rates)?;
        Self::constant(grid, gamma.clone(), h)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn rho(&self) -> &[SimplexVector] {
        &self.rho
    }

    pub fn h(&self) -> &[GeneratorMatrix] {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.rho[0].dim()
    }

    /// `M(0) = int_0^inf e^{-s} rho(s) ds`.
    pub fn marginal(&self) -> SimplexVector {
        let d = self.dim();
        let mut m = vec![0.0; d];
        for (w, r) in self.grid.weights().iter().zip(&self.rho) {
            for (mx, rx) in m.iter_mut().zip(r.as_slice()) {
                *mx += w * rx;
            }
        }
        SimplexVector::from_unnormalized(m)
    }

    /// `int_0^inf e^{-s} rho_s(x) H_s(x, y) ds` per edge.
    pub fn discounted_flux(&self) -> FluxVector {
        let space = self.h[0].space();
        let mut flux = vec![0.0; space.num_edges()];
        for ((w, r), h) in self.grid.weights().iter().zip(&self.rho).zip(&self.h) {
            for (e, (x, y)) in space.edges().enumerate() {
                flux[e] += w * r.get(x) * h.get(x, y);
            }
        }
        FluxVector::new(space, flux).expect("nonnegative rates")
    }

    /// `M` at the points used for the cost of each piece; the tail always
    /// reads `rho_tail`.
    pub fn piece_environment(&self, mode: MEval) -> Vec<SimplexVector> {
        piece_points(&self.grid, &self.rho, mode).into_iter().map(SimplexVector::from_unnormalized).collect()
    }
}

pub(crate) fn m_nodes(grid: &TimeGrid, rho: &[SimplexVector]) -> Vec<Vec<f64>> {
    let nodes = grid.nodes();
    let k_cells = grid.cells();
    let d = rho[0].dim();
    (0..=k_cells)
        .map(|k| {
            let mut m = vec![0.0; d];
            for (j, r) in rho.iter().enumerate().skip(k) {
                // e^{s_k} w_j, written to avoid overflow of e^{s_k}.
                let coeff = if j < k_cells {
                    (-(nodes[j] - nodes[k])).exp() * -(-grid.cell_width(j)).exp_m1()
                } else {
                    (-(grid.horizon() - nodes[k])).exp()
                };
                for (mx, rx) in m.iter_mut().zip(r.as_slice()) {
                    *mx += coeff * rx;
                }
            }
            m
        })
        .collect()
}

pub(crate) fn piece_points(grid: &TimeGrid, rho: &[SimplexVector], mode: MEval) -> Vec<Vec<f64>> {
    let nodes = m_nodes(grid, rho);
    let k_cells = grid.cells();
    (0..grid.pieces())
        .map(|k| match mode {
            MEval::LeftNode => nodes[k].clone(),
            MEval::Midpoint if k < k_cells => {
                let decay = (-0.5 * grid.cell_width(k)).exp();
                rho[k].as_slice().iter().zip(&nodes[k + 1]).map(|(r, m)| (1.0 - decay) * r + decay * m).collect()
            }
            MEval::Midpoint => rho[k].as_slice().to_vec(),
        })
        .collect()
}

/// `M(s_k) = e^{s_k} int_{s_k}^inf e^{-s} rho(s) ds` at every grid node,
/// integrated exactly against the piecewise-constant `rho`.
pub fn m_from_rho(path: &ControlPath) -> Vec<SimplexVector> {
    m_nodes(path.grid(), path.rho()).into_iter().map(SimplexVector::from_unnormalized).collect()
}

/// Largest defect of the node sequence against the exact one-cell solution
/// of `M' = M - rho`, i.e. `e^{-h} M_{k+1} - M_k + (1 - e^{-h}) rho_k`.
pub fn m_evolution_defect(path: &ControlPath) -> f64 {
    let nodes = m_from_rho(path);
    let grid = path.grid();
    let mut worst: f64 = 0.0;
    for k in 0..grid.cells() {
        let decay = (-grid.cell_width(k)).exp();
        for x in 0..path.dim() {
            let defect = decay * nodes[k + 1].get(x) - nodes[k].get(x) + (1.0 - decay) * path.rho()[k].get(x);
            worst = worst.max(defect.abs());
        }
    }
    worst
}

/// The discounted cost
/// `sum_k w_k sum_x rho_k(x) sum_y Q_xy(M_k) l(H_k(x,y) / Q_xy(M_k))`
/// with `M` read at cell left nodes.
pub fn jtilde(path: &ControlPath, field: &RateField) -> f64 {
    jtilde_with(path, field, MEval::LeftNode)
}

pub fn jtilde_with(path: &ControlPath, field: &RateField, mode: MEval) -> f64 {
    let space = field.space();
    let env = piece_points(path.grid(), path.rho(), mode);
    let mut rates = vec![0.0; space.num_edges()];
    let mut total = 0.0;
    for (k, w) in path.grid().weights().iter().enumerate() {
        field.edge_rates_into(&env[k], &mut rates);
        let rho = &path.rho()[k];
        let h = &path.h()[k];
        let mut piece = 0.0;
        for (e, (x, y)) in space.edges().enumerate() {
            if rho.get(x) > 0.0 {
                piece += rho.get(x) * scaled_ell(rates[e], h.get(x, y));
            }
        }
        total += w * piece;
    }
    total
}

/// Constraint residuals of a path against a target `(gamma, flux)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    /// `l1_distance(M(0), gamma)`.
    pub marginal: f64,
    /// `max_k || rho_k H_k ||_inf`.
    pub stationarity: f64,
    /// `max_e |discounted flux_e - target_e|`.
    pub flux: f64,
    /// `max |J - j|` for current-constrained problems, zero otherwise.
    pub current: f64,
    /// Number of `(piece, edge)` pairs with `H > 0` where the field's rate
    /// is zero.
    pub support: usize,
}

pub(crate) fn stationarity_residual(path: &ControlPath) -> f64 {
    path.rho()
        .iter()
        .zip(path.h())
        .map(|(r, h)| h.left_mul(r.as_slice()).iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .fold(0.0, f64::max)
}

pub(crate) fn support_violations(path: &ControlPath, field: &RateField) -> usize {
    let space = field.space();
    let env = piece_points(path.grid(), path.rho(), MEval::LeftNode);
    let mut rates = vec![0.0; space.num_edges()];
    let mut count = 0;
    for (k, h) in path.h().iter().enumerate() {
        field.edge_rates_into(&env[k], &mut rates);
        count += space
            .edges()
            .enumerate()
            .filter(|&(e, (x, y))| h.get(x, y) > 0.0 && (!field.in_support(e) || rates[e] == 0.0))
            .count();
    }
    count
}

/// Residuals of Property-style constraints for the target `(gamma, flux)`.
pub fn residuals(path: &ControlPath, field: &RateField, gamma: &SimplexVector, flux: &FluxVector) -> Residuals {
    let achieved = path.discounted_flux();
    Residuals {
        marginal: l1_distance(&path.marginal(), gamma),
        stationarity: stationarity_residual(path),
        flux: achieved.values().iter().zip(flux.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        current: 0.0,
        support: support_violations(path, field),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> GeneratorMatrix {
        GeneratorMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap()
    }

    #[test]
    fn constant_rho_gives_constant_m() {
        let grid = TimeGrid::new(8.0, 16).unwrap();
        let gamma = SimplexVector::new(vec![0.3, 0.7]).unwrap();
        let p = ControlPath::constant(grid, gamma.clone(), unit()).unwrap();
        for m in m_from_rho(&p) {
            assert!(l1_distance(&m, &gamma) < 1e-14);
        }
    }

    #[test]
    fn two_phase_marginal() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let g1 = SimplexVector::new(vec![0.9, 0.1]).unwrap();
        let g2 = SimplexVector::new(vec![0.2, 0.8]).unwrap();
        let mut rho = vec![g1.clone(); 4];
        rho.push(g2.clone());
        let p = ControlPath::new(grid, rho, vec![unit(); 5]).unwrap();
        let e = (-1.0f64).exp();
        let m0 = &m_from_rho(&p)[0];
        for x in 0..2 {
            assert!((m0.get(x) - ((1.0 - e) * g1.get(x) + e * g2.get(x))).abs() < 1e-14);
        }
        assert!(l1_distance(m0, &p.marginal()) < 1e-15);
    }

    #[test]
    fn dv_path_cost_and_residuals() {
        let field = RateField::constant(unit()).unwrap();
        let grid = TimeGrid::new(8.0, 64).unwrap();
        let gamma = SimplexVector::uniform(2);
        let flux = FluxVector::new(field.space(), vec![1.0, 1.0]).unwrap();
        let p = ControlPath::constant_for_target(grid, &field, &gamma, &flux).unwrap();
        assert!((jtilde(&p, &field) - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-12);
        let r = residuals(&p, &field, &gamma, &flux);
        assert!(r.marginal <= 1e-12 && r.stationarity <= 1e-12 && r.flux <= 1e-12);
        assert_eq!(r.support, 0);
        let doubled = flux.scaled(2.0).unwrap();
        let r2 = residuals(&p, &field, &gamma, &doubled);
        assert!((r2.flux - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stationarity_residual_is_rho_h() {
        let grid = TimeGrid::new(2.0, 2).unwrap();
        let rho = SimplexVector::new(vec![0.25, 0.75]).unwrap();
        let h = GeneratorMatrix::from_rows(&[vec![-2.0, 2.0], vec![1.0, -1.0]]).unwrap();
        // rho H = (-0.5 + 0.75, 0.5 - 0.75) = (0.25, -0.25)
        let p = ControlPath::constant(grid, rho, h).unwrap();
        assert!((stationarity_residual(&p) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rate_on_zero_edge_is_infinite() {
        let q0 =
            GeneratorMatrix::from_rows(&[vec![-1.0, 1.0, 0.0], vec![0.0, -1.0, 1.0], vec![1.0, 0.0, -1.0]]).unwrap();
        let field = RateField::constant(q0).unwrap();
        let h =
            GeneratorMatrix::from_rows(&[vec![-2.0, 1.0, 1.0], vec![0.0, -1.0, 1.0], vec![1.0, 0.0, -1.0]]).unwrap();
        let p = ControlPath::constant(TimeGrid::new(2.0, 2).unwrap(), SimplexVector::uniform(3), h).unwrap();
        assert_eq!(jtilde(&p, &field), f64::INFINITY);
        assert_eq!(support_violations(&p, &field), 3);
    }

    #[test]
    fn midpoint_and_left_agree_for_constant_paths() {
        let field = RateField::autochemotaxis(unit(), 1.5).unwrap();
        let gamma = SimplexVector::new(vec![0.4, 0.6]).unwrap();
        let h = GeneratorMatrix::from_rows(&[vec![-3.0, 3.0], vec![2.0, -2.0]]).unwrap();
        let p = ControlPath::constant(TimeGrid::new(4.0, 8).unwrap(), gamma, h).unwrap();
        assert!((jtilde_with(&p, &field, MEval::Midpoint) - jtilde(&p, &field)).abs() < 1e-13);
    }
}
