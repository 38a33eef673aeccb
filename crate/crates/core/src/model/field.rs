use std::fmt;
use std::sync::Arc;

use super::generator::pattern_is_irreducible;
use super::{GeneratorMatrix, ModelError, SimplexVector, StateSpace};

/// Closure writing per-edge rates (edge order of [`StateSpace`]) for a point
/// of the simplex.
pub type EdgeRateFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A user-supplied continuous rate field with a declared uniform bound.
///
/// Only available through the library API; configuration files describe
/// affine families exclusively.
#[derive(Clone)]
pub struct CustomRates {
    pub rates: Arc<EdgeRateFn>,
    pub bound: f64,
}

impl fmt::Debug for CustomRates {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomRates").field("bound", &self.bound).finish_non_exhaustive()
    }
}

/// The named families of maps `gamma -> Q(gamma)`.
#[derive(Debug, Clone)]
pub enum RateFamily {
    /// `Q(gamma) = Q0`.
    Constant {
        q0: GeneratorMatrix,
    },
    /// `Q(gamma) = sum_x gamma(x) V_x` for vertex matrices `V_x = Q(delta_x)`.
    Affine {
        vertices: Vec<GeneratorMatrix>,
    },
    /// `Q_ij(gamma) = Q0_ij (K gamma(j) + 1)`.
    Autochemotaxis {
        q0: GeneratorMatrix,
        k: f64,
    },
    /// `Q_ij(gamma) = (1 - alpha_i gamma(i) - beta_j gamma(j)) Q0_ij`.
    Congestion {
        q0: GeneratorMatrix,
        alpha: Vec<f64>,
        beta: Vec<f64>,
    },
    /// `Q_ij(gamma) = sum_k gamma(k) Q^(k)_ij`.
    Catalytic {
        channels: Vec<GeneratorMatrix>,
    },
    Custom(CustomRates),
}

impl RateFamily {
    pub fn name(&self) -> &'static str {
        match self {
            RateFamily::Constant { .. } => "constant",
            RateFamily::Affine { .. } => "affine",
            RateFamily::Autochemotaxis { .. } => "autochemotaxis",
            RateFamily::Congestion { .. } => "congestion",
            RateFamily::Catalytic { .. } => "catalytic",
            RateFamily::Custom(_) => "custom",
        }
    }
}

/// A rate field together with its support set `A_0`, the uniform bound
/// `c_Q` and the lower coefficient `k_Q`.
///
/// Immutable once built; cheap to clone and safe to share across threads.
#[derive(Debug, Clone)]
pub struct RateField {
    space: StateSpace,
    family: RateFamily,
    support: Vec<bool>,
    /// Per-vertex edge rates `Q_e(delta_z)`, `None` for custom fields.
    vertex_rates: Option<Vec<Vec<f64>>>,
    rate_upper: f64,
    rate_lower_coeff: f64,
}

impl RateField {
    pub fn constant(q0: GeneratorMatrix) -> Result<Self, ModelError> {
        Self::from_family(RateFamily::Constant { q0 })
    }

    pub fn affine(vertices: Vec<GeneratorMatrix>) -> Result<Self, ModelError> {
        Self::from_family(RateFamily::Affine { vertices })
    }

    pub fn autochemotaxis(q0: GeneratorMatrix, k: f64) -> Result<Self, ModelError> {
        Self::from_family(RateFamily::Autochemotaxis { q0, k })
    }

    pub fn congestion(q0: GeneratorMatrix, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self, ModelError> {
        Self::from_family(RateFamily::Congestion { q0, alpha, beta })
    }

    pub fn catalytic(channels: Vec<GeneratorMatrix>) -> Result<Self, ModelError> {
        Self::from_family(RateFamily::Catalytic { channels })
    }

    /// A continuous, possibly non-affine field. `support` lists the edges
    /// (0-based) on which `rates` may be positive and `bound` must dominate
    /// every rate on the simplex.
    pub fn custom(
        d: usize,
        support: &[(usize, usize)],
        bound: f64,
        rates: Arc<EdgeRateFn>,
    ) -> Result<Self, ModelError> {
        let space = StateSpace::new(d)?;
        if !(bound >= 0.0) || !bound.is_finite() {
            return Err(ModelError::InvalidParameter(format!("custom rate bound {bound}")));
        }
        let mut mask = vec![false; space.num_edges()];
        for &(x, y) in support {
            check_edge(space, x, y)?;
            mask[space.edge_index(x, y)] = true;
        }
        Ok(Self {
            space,
            family: RateFamily::Custom(CustomRates { rates, bound }),
            support: mask,
            vertex_rates: None,
            rate_upper: bound,
            rate_lower_coeff: 0.0,
        })
    }

    /// Builds an affine family, deriving `A_0` from the positive pattern of
    /// the vertex matrices.
    pub fn from_family(family: RateFamily) -> Result<Self, ModelError> {
        let (space, vertex_rates) = vertex_rates(&family)?;
        let support: Vec<bool> = (0..space.num_edges()).map(|e| vertex_rates.iter().any(|v| v[e] > 0.0)).collect();
        Ok(Self::assemble(space, family, support, vertex_rates))
    }

    /// Replaces the support with an explicit edge list (0-based) and
    /// cross-checks it against the vertex matrices: every vertex must vanish
    /// off the support, and every support edge must be positive at some
    /// vertex.
    pub fn with_support(self, edges: &[(usize, usize)]) -> Result<Self, ModelError> {
        let space = self.space;
        let mut mask = vec![false; space.num_edges()];
        for &(x, y) in edges {
            check_edge(space, x, y)?;
            mask[space.edge_index(x, y)] = true;
        }
        match self.vertex_rates.clone() {
            None => Ok(Self { support: mask, ..self }),
            Some(vertex_rates) => {
                for e in 0..space.num_edges() {
                    let (x, y) = space.edge(e);
                    let positive = vertex_rates.iter().any(|v| v[e] > 0.0);
                    if positive && !mask[e] {
                        return Err(ModelError::SupportMismatch(format!(
                            "edge ({}, {}) has positive rate but is not declared",
                            x + 1,
                            y + 1
                        )));
                    }
                    if !positive && mask[e] {
                        return Err(ModelError::SupportMismatch(format!(
                            "declared edge ({}, {}) has zero rate at every vertex",
                            x + 1,
                            y + 1
                        )));
                    }
                }
                Ok(Self::assemble(space, self.family, mask, vertex_rates))
            }
        }
    }

    fn assemble(space: StateSpace, family: RateFamily, support: Vec<bool>, vertex_rates: Vec<Vec<f64>>) -> Self {
        // Affine maps on the simplex attain their extrema at vertices.
        let rate_upper = vertex_rates.iter().flat_map(|v| v.iter().copied()).fold(0.0, f64::max);
        let rate_lower_coeff = (0..space.num_edges())
            .filter(|&e| support[e])
            .map(|e| vertex_rates.iter().map(|v| v[e]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        Self {
            space,
            family,
            support,
            vertex_rates: Some(vertex_rates),
            rate_upper,
            rate_lower_coeff: if rate_lower_coeff.is_finite() { rate_lower_coeff } else { 0.0 },
        }
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn family(&self) -> &RateFamily {
        &self.family
    }

    /// `c_Q`: uniform bound on every off-diagonal rate over the simplex.
    pub fn rate_bound(&self) -> f64 {
        self.rate_upper
    }

    /// `k_Q` with `Q_ij(m) >= k_Q min_x m(x)` on the support; zero when not
    /// declared (custom fields).
    pub fn rate_lower_coeff(&self) -> f64 {
        self.rate_lower_coeff
    }

    pub fn support_mask(&self) -> &[bool] {
        &self.support
    }

    pub fn in_support(&self, edge: usize) -> bool {
        self.support[edge]
    }

    pub fn support_edges(&self) -> Vec<(usize, usize)> {
        self.space.edges().enumerate().filter(|(e, _)| self.support[*e]).map(|(_, xy)| xy).collect()
    }

    /// Whether the support graph is strongly connected.
    pub fn support_irreducible(&self) -> bool {
        let d = self.dim();
        let mut adjacency = vec![vec![false; d]; d];
        for (x, y) in self.support_edges() {
            adjacency[x][y] = true;
        }
        pattern_is_irreducible(&adjacency)
    }

    pub fn is_affine(&self) -> bool {
        self.vertex_rates.is_some()
    }

    /// Edge rates at the vertices `delta_z`, indexed `[z][edge]`.
    pub fn vertex_rates(&self) -> Result<&[Vec<f64>], ModelError> {
        self.vertex_rates.as_deref().ok_or(ModelError::NotAffine)
    }

    /// Vertex matrices `Q(delta_z)`.
    pub fn vertices(&self) -> Result<Vec<GeneratorMatrix>, ModelError> {
        self.vertex_rates()?.iter().map(|v| GeneratorMatrix::from_edge_rates(self.space, v)).collect()
    }

    /// Writes the edge rates at `m` into `out` without validation.
    pub fn edge_rates_into(&self, m: &[f64], out: &mut [f64]) {
        let space = self.space;
        match &self.family {
            RateFamily::Constant { q0 } => {
                for (e, (x, y)) in space.edges().enumerate() {
                    out[e] = q0.get(x, y);
                }
            }
            RateFamily::Autochemotaxis { q0, k } => {
                for (e, (x, y)) in space.edges().enumerate() {
                    out[e] = q0.get(x, y) * (m[y] * k + 1.0);
                }
            }
            RateFamily::Congestion { q0, alpha, beta } => {
                for (e, (x, y)) in space.edges().enumerate() {
                    out[e] = (1.0 - alpha[x] * m[x] - beta[y] * m[y]) * q0.get(x, y);
                }
            }
            RateFamily::Affine { .. } | RateFamily::Catalytic { .. } => {
                let vertex_rates = self.vertex_rates.as_ref().expect("affine family");
                out.iter_mut().for_each(|o| *o = 0.0);
                for (mz, vz) in m.iter().zip(vertex_rates) {
                    if *mz != 0.0 {
                        for (o, v) in out.iter_mut().zip(vz) {
                            *o += mz * v;
                        }
                    }
                }
            }
            RateFamily::Custom(c) => {
                (c.rates)(m, out);
                for (o, s) in out.iter_mut().zip(&self.support) {
                    if !s {
                        *o = 0.0;
                    }
                }
            }
        }
    }

    /// Per-edge rates at `gamma`, validated.
    pub fn edge_rates(&self, gamma: &SimplexVector) -> Result<Vec<f64>, ModelError> {
        if gamma.dim() != self.dim() {
            return Err(ModelError::DimensionMismatch { expected: self.dim(), got: gamma.dim() });
        }
        let mut out = vec![0.0; self.space.num_edges()];
        self.edge_rates_into(gamma.as_slice(), &mut out);
        for (e, &r) in out.iter().enumerate() {
            let (x, y) = self.space.edge(e);
            if !r.is_finite() {
                return Err(ModelError::NonFinite { row: x, col: y });
            }
            if r < 0.0 {
                return Err(ModelError::NegativeRate { from: x, to: y, value: r });
            }
        }
        Ok(out)
    }

    /// `Q(gamma)`.
    pub fn eval(&self, gamma: &SimplexVector) -> Result<GeneratorMatrix, ModelError> {
        let rates = self.edge_rates(gamma)?;
        GeneratorMatrix::from_edge_rates(self.space, &rates)
    }

    /// Sensitivities of the edge rates to moving `m` toward each vertex,
    /// written as `out[z * a + e]`.
    ///
    /// Only combinations with zero total weight are meaningful (perturbations
    /// tangent to the simplex); for affine fields the vertex rates are
    /// returned, which differ from the directional derivatives by a shift
    /// common to every `z`.
    pub fn edge_rate_sensitivities(&self, m: &[f64], out: &mut [f64]) {
        let a = self.space.num_edges();
        match &self.vertex_rates {
            Some(vertex_rates) => {
                for (z, vz) in vertex_rates.iter().enumerate() {
                    out[z * a..(z + 1) * a].copy_from_slice(vz);
                }
            }
            None => {
                const STEP: f64 = 1e-7;
                let mut base = vec![0.0; a];
                let mut shifted = vec![0.0; a];
                self.edge_rates_into(m, &mut base);
                let mut point = m.to_vec();
                for z in 0..self.dim() {
                    for (x, p) in point.iter_mut().enumerate() {
                        let target = if x == z { 1.0 } else { 0.0 };
                        *p = m[x] + STEP * (target - m[x]);
                    }
                    self.edge_rates_into(&point, &mut shifted);
                    for e in 0..a {
                        out[z * a + e] = (shifted[e] - base[e]) / STEP;
                    }
                }
            }
        }
    }
}

fn check_edge(space: StateSpace, x: usize, y: usize) -> Result<(), ModelError> {
    space.check_state(x)?;
    space.check_state(y)?;
    if x == y {
        return Err(ModelError::InvalidParameter(format!("support edge ({x}, {x}) is a loop")));
    }
    Ok(())
}

fn vertex_rates(family: &RateFamily) -> Result<(StateSpace, Vec<Vec<f64>>), ModelError> {
    match family {
        RateFamily::Constant { q0 } => {
            let space = q0.space();
            Ok((space, vec![q0.edge_rates(); space.dim()]))
        }
        RateFamily::Affine { vertices } | RateFamily::Catalytic { channels: vertices } => {
            let d = vertices.first().map(|v| v.dim()).unwrap_or(0);
            let space = StateSpace::new(d)?;
            if vertices.len() != d {
                return Err(ModelError::DimensionMismatch { expected: d, got: vertices.len() });
            }
            if let Some(v) = vertices.iter().find(|v| v.dim() != d) {
                return Err(ModelError::DimensionMismatch { expected: d, got: v.dim() });
            }
            Ok((space, vertices.iter().map(|v| v.edge_rates()).collect()))
        }
        RateFamily::Autochemotaxis { q0, k } => {
            if !(*k >= 0.0) || !k.is_finite() {
                return Err(ModelError::InvalidParameter(format!("autochemotaxis K = {k} must be >= 0")));
            }
            let space = q0.space();
            let rates = (0..space.dim())
                .map(|z| space.edges().map(|(x, y)| q0.get(x, y) * (if y == z { *k } else { 0.0 } + 1.0)).collect())
                .collect();
            Ok((space, rates))
        }
        RateFamily::Congestion { q0, alpha, beta } => {
            let space = q0.space();
            let d = space.dim();
            for v in [alpha, beta] {
                if v.len() != d {
                    return Err(ModelError::DimensionMismatch { expected: d, got: v.len() });
                }
                if let Some(p) = v.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
                    return Err(ModelError::InvalidParameter(format!("congestion parameter {p} must be >= 0")));
                }
            }
            for (x, y) in space.edges() {
                let sum = alpha[x] + beta[y];
                if q0.get(x, y) > 0.0 && sum >= 1.0 {
                    return Err(ModelError::CongestionMargin { from: x, to: y, sum });
                }
            }
            let rates = (0..d)
                .map(|z| {
                    space
                        .edges()
                        .map(|(x, y)| {
                            let a = if x == z { alpha[x] } else { 0.0 };
                            let b = if y == z { beta[y] } else { 0.0 };
                            (1.0 - a - b) * q0.get(x, y)
                        })
                        .collect()
                })
                .collect();
            Ok((space, rates))
        }
        RateFamily::Custom(_) => Err(ModelError::NotAffine),
    }
}
