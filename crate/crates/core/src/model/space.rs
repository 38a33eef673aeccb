use super::ModelError;

/// The finite state space `{0, .., d-1}` together with its ordered edge set
/// `{(x, y): x != y}`.
///
/// Edges are ordered lexicographically, so edge `(x, y)` has index
/// `x * (d - 1) + y` when `y < x` and `x * (d - 1) + y - 1` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    d: usize,
}

impl StateSpace {
    pub fn new(d: usize) -> Result<Self, ModelError> {
        if d < 2 {
            return Err(ModelError::TooFewStates(d));
        }
        Ok(Self { d })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of ordered edges, `d (d - 1)`.
    pub fn num_edges(&self) -> usize {
        self.d * (self.d - 1)
    }

    pub fn edge_index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x != y && x < self.d && y < self.d);
        x * (self.d - 1) + if y < x { y } else { y - 1 }
    }

    pub fn edge(&self, index: usize) -> (usize, usize) {
        let x = index / (self.d - 1);
        let r = index % (self.d - 1);
        (x, if r < x { r } else { r + 1 })
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_edges()).map(move |e| self.edge(e))
    }

    /// Index of the reversed edge `(y, x)`.
    pub fn reverse(&self, index: usize) -> usize {
        let (x, y) = self.edge(index);
        self.edge_index(y, x)
    }

    pub fn check_state(&self, x: usize) -> Result<(), ModelError> {
        if x < self.d {
            Ok(())
        } else {
            Err(ModelError::InvalidState(x))
        }
    }
}

/// Nonnegative per-edge values: an empirical flux or a flux target.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxVector {
    space: StateSpace,
    values: Vec<f64>,
}

impl FluxVector {
    pub fn new(space: StateSpace, values: Vec<f64>) -> Result<Self, ModelError> {
        if values.len() != space.num_edges() {
            return Err(ModelError::DimensionMismatch { expected: space.num_edges(), got: values.len() });
        }
        if let Some((edge, &value)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
            return Err(ModelError::NegativeFlux { edge, value });
        }
        Ok(Self { space, values })
    }

    pub fn zeros(space: StateSpace) -> Self {
        Self { space, values: vec![0.0; space.num_edges()] }
    }

    /// Build from a dense `d x d` matrix; the diagonal is ignored.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let space = StateSpace::new(rows.len())?;
        let mut values = vec![0.0; space.num_edges()];
        for (e, (x, y)) in space.edges().enumerate() {
            if rows[x].len() != space.dim() {
                return Err(ModelError::NotSquare { row: x, len: rows[x].len(), expected: space.dim() });
            }
            values[e] = rows[x][y];
        }
        Self::new(space, values)
    }

    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        let d = self.space.dim();
        let mut rows = vec![vec![0.0; d]; d];
        for (e, (x, y)) in self.space.edges().enumerate() {
            rows[x][y] = self.values[e];
        }
        rows
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[self.space.edge_index(x, y)]
    }

    /// Per-state `out - in` totals.
    pub fn divergence(&self) -> Vec<f64> {
        let mut div = vec![0.0; self.space.dim()];
        for (e, (x, y)) in self.space.edges().enumerate() {
            div[x] += self.values[e];
            div[y] -= self.values[e];
        }
        div
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        Self::new(self.space, self.values.iter().map(|v| v * factor).collect())
    }
}

/// Antisymmetric per-edge values, `J^{xy} = R^{xy} - R^{yx}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentVector {
    space: StateSpace,
    values: Vec<f64>,
}

impl CurrentVector {
    pub fn new(space: StateSpace, values: Vec<f64>) -> Result<Self, ModelError> {
        if values.len() != space.num_edges() {
            return Err(ModelError::DimensionMismatch { expected: space.num_edges(), got: values.len() });
        }
        for (e, (x, y)) in space.edges().enumerate() {
            let r = space.reverse(e);
            if !values[e].is_finite() || (values[e] + values[r]).abs() > 1e-12 {
                return Err(ModelError::NotAntisymmetric { from: x, to: y });
            }
        }
        Ok(Self { space, values })
    }

    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let space = StateSpace::new(rows.len())?;
        let mut values = vec![0.0; space.num_edges()];
        for (e, (x, y)) in space.edges().enumerate() {
            if rows[x].len() != space.dim() {
                return Err(ModelError::NotSquare { row: x, len: rows[x].len(), expected: space.dim() });
            }
            values[e] = rows[x][y];
        }
        Self::new(space, values)
    }

    pub fn from_flux(flux: &FluxVector) -> Self {
        let space = flux.space();
        let v = flux.values();
        let values = (0..space.num_edges()).map(|e| v[e] - v[space.reverse(e)]).collect();
        Self { space, values }
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[self.space.edge_index(x, y)]
    }
}
