use super::VarSolveError;

/// Uniform grid `0 = s_0 < .. < s_K = T_h` with discount weights
/// `w_k = e^{-s_k} - e^{-s_{k+1}}` per cell and `e^{-T_h}` for the tail
/// `[T_h, inf)`.
///
/// Cells and the tail together are the `K + 1` pieces of a
/// [`ControlPath`](super::ControlPath); piece `K` is the tail.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TimeGrid {
    pub fn new(horizon: f64, cells: usize) -> Result<Self, VarSolveError> {
        if !(horizon >= 1.0) || !horizon.is_finite() {
            return Err(VarSolveError::InvalidGrid(format!("horizon {horizon} must be >= 1")));
        }
        if cells < 2 {
            return Err(VarSolveError::InvalidGrid(format!("need at least 2 cells, got {cells}")));
        }
        let h = horizon / cells as f64;
        let nodes: Vec<f64> = (0..=cells).map(|k| if k == cells { horizon } else { k as f64 * h }).collect();
        // e^{-a} - e^{-b} = e^{-a} (1 - e^{-(b - a)}), accurate for small cells.
        let mut weights: Vec<f64> = nodes.windows(2).map(|w| (-w[0]).exp() * -(-(w[1] - w[0])).exp_m1()).collect();
        weights.push((-horizon).exp());
        Ok(Self { nodes, weights })
    }

    /// Number of cells `K` (excluding the tail).
    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Number of pieces, `K + 1`.
    pub fn pieces(&self) -> usize {
        self.nodes.len()
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().expect("grid has nodes")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Cell weights followed by the tail weight.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cell_weights(&self) -> &[f64] {
        &self.weights[..self.cells()]
    }

    pub fn tail_weight(&self) -> f64 {
        self.weights[self.cells()]
    }

    /// `[s_left, s_right)` of piece `k`; the tail ends at infinity.
    pub fn piece_bounds(&self, k: usize) -> (f64, f64) {
        if k < self.cells() {
            (self.nodes[k], self.nodes[k + 1])
        } else {
            (self.horizon(), f64::INFINITY)
        }
    }

    pub(crate) fn cell_width(&self, k: usize) -> f64 {
        self.nodes[k + 1] - self.nodes[k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for (th, k) in [(1.0, 2), (8.0, 64), (16.0, 128), (3.5, 7)] {
            let g = TimeGrid::new(th, k).unwrap();
            let total: f64 = g.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert_eq!(g.pieces(), k + 1);
            assert!((g.tail_weight() - (-th).exp()).abs() < 1e-18);
        }
    }

    #[test]
    fn rejects_small_grids() {
        assert!(TimeGrid::new(0.5, 10).is_err());
        assert!(TimeGrid::new(8.0, 1).is_err());
    }
}
