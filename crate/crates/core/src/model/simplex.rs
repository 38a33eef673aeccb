use super::ModelError;

/// Absolute tolerance on the component sum of a probability vector.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Largest deviation from the simplex that [`SimplexVector::renormalized`]
/// will silently repair.
const REPAIR_TOL: f64 = 1e-9;

/// A probability vector on `{0, .., d-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexVector {
    weights: Vec<f64>,
}

impl SimplexVector {
    /// Strict constructor: nonnegative entries summing to one within
    /// [`SIMPLEX_TOL`].
    pub fn new(weights: Vec<f64>) -> Result<Self, ModelError> {
        if weights.len() < 2 {
            return Err(ModelError::TooFewStates(weights.len()));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0) || !w.is_finite()) {
            return Err(ModelError::NotInSimplex(format!("component {i} is {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(ModelError::NotInSimplex(format!("components sum to {sum}")));
        }
        Ok(Self { weights })
    }

    /// Accepts vectors within `1e-9` of the simplex (rounding noise from
    /// files), clamps tiny negatives and renormalizes.
    pub fn renormalized(weights: Vec<f64>) -> Result<Self, ModelError> {
        if weights.len() < 2 {
            return Err(ModelError::TooFewStates(weights.len()));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w >= -REPAIR_TOL) || !w.is_finite()) {
            return Err(ModelError::NotInSimplex(format!("component {i} is {w}")));
        }
        let clamped: Vec<f64> = weights.iter().map(|w| w.max(0.0)).collect();
        let sum: f64 = clamped.iter().sum();
        if (sum - 1.0).abs() > REPAIR_TOL {
            return Err(ModelError::NotInSimplex(format!("components sum to {sum}")));
        }
        Ok(Self { weights: clamped.into_iter().map(|w| w / sum).collect() })
    }

    /// Normalizes any nonnegative vector with positive mass.
    pub(crate) fn from_unnormalized(weights: Vec<f64>) -> Self {
        let sum: f64 = weights.iter().sum();
        Self { weights: weights.into_iter().map(|w| w / sum).collect() }
    }

    pub fn dirac(d: usize, x: usize) -> Self {
        let mut weights = vec![0.0; d];
        weights[x] = 1.0;
        Self { weights }
    }

    pub fn uniform(d: usize) -> Self {
        Self { weights: vec![1.0 / d as f64; d] }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.weights
    }

    pub fn get(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn min_component(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `kappa * self + (1 - kappa) * other`.
    pub fn mix(&self, other: &Self, kappa: f64) -> Self {
        Self::from_unnormalized(
            self.weights.iter().zip(&other.weights).map(|(a, b)| kappa * a + (1.0 - kappa) * b).collect(),
        )
    }

    /// Pulls every component up to at least `floor` by mixing with the
    /// uniform vector; returns the input unchanged when already interior.
    pub fn floored(&self, floor: f64) -> Self {
        let d = self.dim() as f64;
        if self.min_component() >= floor {
            return self.clone();
        }
        Self::from_unnormalized(self.weights.iter().map(|w| (1.0 - d * floor) * w + floor).collect())
    }
}

/// `sum_i |a_i - b_i|`.
pub fn l1_distance(a: &SimplexVector, b: &SimplexVector) -> f64 {
    a.weights.iter().zip(&b.weights).map(|(x, y)| (x - y).abs()).sum()
}
