use super::{ModelError, StateSpace};

const ROW_SUM_TOL: f64 = 1e-12;

/// A `d x d` rate matrix: nonnegative off-diagonal entries, zero row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    d: usize,
    entries: Vec<f64>,
}

/// Certifies a dense square matrix as a generator.
pub fn validate_generator(rows: &[Vec<f64>]) -> Result<GeneratorMatrix, ModelError> {
    let d = rows.len();
    StateSpace::new(d)?;
    let mut entries = Vec::with_capacity(d * d);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(ModelError::NotSquare { row: i, len: row.len(), expected: d });
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(ModelError::NonFinite { row: i, col: j });
            }
            if i != j && v < 0.0 {
                return Err(ModelError::NegativeOffDiagonal { row: i, col: j, value: v });
            }
        }
        let sum: f64 = row.iter().sum();
        if sum.abs() > ROW_SUM_TOL {
            return Err(ModelError::RowSumNonzero { row: i, sum });
        }
        entries.extend_from_slice(row);
    }
    Ok(GeneratorMatrix { d, entries })
}

impl GeneratorMatrix {
    pub fn zero(d: usize) -> Self {
        Self { d, entries: vec![0.0; d * d] }
    }

    /// Builds a generator from per-edge rates (indexed as in [`StateSpace`]),
    /// filling the diagonal so rows sum to zero.
    pub fn from_edge_rates(space: StateSpace, rates: &[f64]) -> Result<Self, ModelError> {
        let d = space.dim();
        let mut entries = vec![0.0; d * d];
        for (e, (x, y)) in space.edges().enumerate() {
            let r = rates[e];
            if !r.is_finite() {
                return Err(ModelError::NonFinite { row: x, col: y });
            }
            if r < 0.0 {
                return Err(ModelError::NegativeRate { from: x, to: y, value: r });
            }
            entries[x * d + y] = r;
        }
        for x in 0..d {
            let out: f64 = (0..d).filter(|&y| y != x).map(|y| entries[x * d + y]).sum();
            entries[x * d + x] = -out;
        }
        Ok(Self { d, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        validate_generator(rows)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn space(&self) -> StateSpace {
        StateSpace::new(self.d).expect("generator has d >= 2")
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.entries[x * self.d + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.entries[x * self.d..(x + 1) * self.d]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.d).map(|x| self.row(x).to_vec()).collect()
    }

    /// Off-diagonal entries in edge order.
    pub fn edge_rates(&self) -> Vec<f64> {
        self.space().edges().map(|(x, y)| self.get(x, y)).collect()
    }

    pub fn max_off_diagonal(&self) -> f64 {
        self.space().edges().map(|(x, y)| self.get(x, y)).fold(0.0, f64::max)
    }

    /// Total jump rate out of `x`.
    pub fn exit_rate(&self, x: usize) -> f64 {
        -self.get(x, x)
    }

    /// Row vector product `p Q`.
    pub fn left_mul(&self, p: &[f64]) -> Vec<f64> {
        let d = self.d;
        let mut out = vec![0.0; d];
        for x in 0..d {
            if p[x] == 0.0 {
                continue;
            }
            for y in 0..d {
                out[y] += p[x] * self.entries[x * d + y];
            }
        }
        out
    }

    /// Structural irreducibility: the directed graph of positive
    /// off-diagonal entries is strongly connected.
    pub fn is_irreducible(&self) -> bool {
        let d = self.d;
        let adjacency: Vec<Vec<bool>> =
            (0..d).map(|x| (0..d).map(|y| x != y && self.get(x, y) > 0.0).collect()).collect();
        pattern_is_irreducible(&adjacency)
    }
}

/// Transitive closure (Warshall) on a boolean adjacency matrix.
pub(crate) fn pattern_is_irreducible(adjacency: &[Vec<bool>]) -> bool {
    let d = adjacency.len();
    let mut reach = adjacency.to_vec();
    for k in 0..d {
        for i in 0..d {
            if reach[i][k] {
                for j in 0..d {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    (0..d).all(|i| (0..d).all(|j| i == j || reach[i][j]))
}
