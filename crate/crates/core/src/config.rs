//! TOML run configuration.
//!
//! States and edges are 1-based here and 0-based everywhere else. Matrices
//! are row-major nested arrays; edges are `[from, to]` pairs.
//!
//! ```toml
//! seed = 7
//! initial_state = 1
//!
//! [field]
//! family = "autochemotaxis"
//! q0 = [[-1.0, 1.0], [2.0, -2.0]]
//! k = 1.5
//! support = [[1, 2], [2, 1]]
//!
//! [simulate]
//! horizon = 100.0
//! paths = 16
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mc::{BallTarget, McError};
use crate::model::{CurrentVector, FluxVector, GeneratorMatrix, ModelError, RateFamily, RateField, SimplexVector};
use crate::sim::Sampler;
use crate::varsolve::{MEval, SolverOptions};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl ToString) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), message: message.to_string() }
}

type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Constant,
    Affine,
    Autochemotaxis,
    Congestion,
    Catalytic,
}

/// `[field]`: family name, its parameters and the declared support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub family: FamilyName,
    /// Declared `A_0` as 1-based `[from, to]` pairs.
    pub support: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Matrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<Matrix>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerName {
    #[default]
    Thinning,
    ExactAffine,
}

impl From<SamplerName> for Sampler {
    fn from(s: SamplerName) -> Self {
        match s {
            SamplerName::Thinning => Sampler::Thinning,
            SamplerName::ExactAffine => Sampler::ExactAffine,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub horizon: f64,
    #[serde(default = "one")]
    pub paths: usize,
    #[serde(default)]
    pub sampler: SamplerName,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MEvalName {
    #[default]
    Left,
    Midpoint,
}

/// `[rate]`: the target and solver settings. `gamma` with `flux` is the
/// joint problem, `gamma` alone the occupation problem, `current` alone the
/// current problem. Missing solver settings take library defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multistarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_eval: Option<MEvalName>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub center: Vec<f64>,
    pub radius: f64,
    pub times: Vec<f64>,
    pub n: u64,
    /// Per-edge `[lo, hi]` bounds on the empirical flux, edges in row-major
    /// order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux_window: Option<Vec<[f64; 2]>>,
    /// Rate value to compare the curve against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_rate: Option<f64>,
    #[serde(default)]
    pub sampler: SamplerName,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointConfig {
    #[serde(default = "default_fp_tol")]
    pub tol: f64,
    #[serde(default = "default_fp_iter")]
    pub max_iter: usize,
    /// Extra starting points; the uniform distribution and all Dirac masses
    /// are always tried.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub starts: Vec<Vec<f64>>,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self { tol: default_fp_tol(), max_iter: default_fp_iter(), starts: Vec::new() }
    }
}

fn default_fp_tol() -> f64 {
    1e-12
}

fn default_fp_iter() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// 1-based starting state.
    #[serde(default = "one")]
    pub initial_state: usize,
    pub field: FieldConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_point: Option<FixedPointConfig>,
}

fn generator(name: &str, rows: &Matrix) -> Result<GeneratorMatrix, ConfigError> {
    GeneratorMatrix::from_rows(rows).map_err(|e| invalid(name, e))
}

fn required<'a, T>(value: &'a Option<T>, name: &str, family: FamilyName) -> Result<&'a T, ConfigError> {
    value.as_ref().ok_or_else(|| invalid(name, format!("required by family {family:?}")))
}

impl FieldConfig {
    pub fn build(&self) -> Result<RateField, ConfigError> {
        use FamilyName::*;
        let f = self.family;
        let allowed: &[&str] = match f {
            Constant => &["q0"],
            Affine => &["vertices"],
            Autochemotaxis => &["q0", "k"],
            Congestion => &["q0", "alpha", "beta"],
            Catalytic => &["channels"],
        };
        let present = [
            ("q0", self.q0.is_some()),
            ("k", self.k.is_some()),
            ("alpha", self.alpha.is_some()),
            ("beta", self.beta.is_some()),
            ("vertices", self.vertices.is_some()),
            ("channels", self.channels.is_some()),
        ];
        for (name, set) in present {
            if set && !allowed.contains(&name) {
                return Err(invalid(&format!("field.{name}"), format!("not a parameter of family {f:?}")));
            }
        }
        let family = match f {
            Constant => RateFamily::Constant { q0: generator("field.q0", required(&self.q0, "field.q0", f)?)? },
            Affine => RateFamily::Affine {
                vertices: required(&self.vertices, "field.vertices", f)?
                    .iter()
                    .enumerate()
                    .map(|(i, m)| generator(&format!("field.vertices[{}]", i + 1), m))
                    .collect::<Result<_, _>>()?,
            },
            Autochemotaxis => RateFamily::Autochemotaxis {
                q0: generator("field.q0", required(&self.q0, "field.q0", f)?)?,
                k: *required(&self.k, "field.k", f)?,
            },
            Congestion => RateFamily::Congestion {
                q0: generator("field.q0", required(&self.q0, "field.q0", f)?)?,
                alpha: required(&self.alpha, "field.alpha", f)?.clone(),
                beta: required(&self.beta, "field.beta", f)?.clone(),
            },
            Catalytic => RateFamily::Catalytic {
                channels: required(&self.channels, "field.channels", f)?
                    .iter()
                    .enumerate()
                    .map(|(i, m)| generator(&format!("field.channels[{}]", i + 1), m))
                    .collect::<Result<_, _>>()?,
            },
        };
        let field = RateField::from_family(family).map_err(|e| invalid("field", e))?;
        let d = field.dim();
        let edges = self
            .support
            .iter()
            .map(|&[x, y]| {
                if x == 0 || y == 0 || x > d || y > d || x == y {
                    Err(invalid("field.support", format!("[{x}, {y}] is not an edge of a {d}-state space")))
                } else {
                    Ok((x - 1, y - 1))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        field.with_support(&edges).map_err(|e| invalid("field.support", e))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    /// Checks everything that can be checked without running a command.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let field = self.field.build()?;
        self.initial_state_index(&field)?;
        if let Some(sim) = &self.simulate {
            if !(sim.horizon > 0.0) || !sim.horizon.is_finite() {
                return Err(invalid("simulate.horizon", "must be positive and finite"));
            }
            if sim.paths == 0 {
                return Err(invalid("simulate.paths", "must be positive"));
            }
        }
        if let Some(rate) = &self.rate {
            self.solver_options()?;
            if let Some(g) = &rate.gamma {
                simplex("rate.gamma", g, field.dim())?;
            }
            if let Some(f) = &rate.flux {
                flux_matrix("rate.flux", f, field.dim())?;
            }
            if let Some(c) = &rate.current {
                current_matrix("rate.current", c, field.dim())?;
            }
        }
        if self.mc.is_some() {
            self.ball_target(&field)?;
        }
        if let Some(fp) = &self.fixed_point {
            for (i, s) in fp.starts.iter().enumerate() {
                simplex(&format!("fixed_point.starts[{}]", i + 1), s, field.dim())?;
            }
        }
        Ok(())
    }

    pub fn rate_field(&self) -> Result<RateField, ConfigError> {
        self.field.build()
    }

    pub fn initial_state_index(&self, field: &RateField) -> Result<usize, ConfigError> {
        if self.initial_state == 0 || self.initial_state > field.dim() {
            return Err(invalid("initial_state", format!("must lie in 1..={}", field.dim())));
        }
        Ok(self.initial_state - 1)
    }

    pub fn solver_options(&self) -> Result<SolverOptions, ConfigError> {
        let mut opts = SolverOptions::default();
        if let Some(r) = &self.rate {
            if let Some(v) = r.horizon {
                opts.horizon = v;
            }
            if let Some(v) = r.cells {
                opts.cells = v;
            }
            if let Some(v) = r.multistarts {
                opts.multistarts = v;
            }
            if let Some(v) = r.rounds {
                opts.rounds = v;
            }
            if let Some(v) = r.tol {
                opts.tol = v;
            }
            opts.m_eval = match r.m_eval.unwrap_or_default() {
                MEvalName::Left => MEval::LeftNode,
                MEvalName::Midpoint => MEval::Midpoint,
            };
        }
        if !(opts.horizon >= 1.0) || opts.cells < 2 || opts.multistarts == 0 || opts.rounds == 0 || !(opts.tol > 0.0) {
            return Err(invalid("rate", "need horizon >= 1, cells >= 2, multistarts >= 1, rounds >= 1, tol > 0"));
        }
        Ok(opts)
    }

    pub fn ball_target(&self, field: &RateField) -> Result<BallTarget, ConfigError> {
        let mc = self.mc.as_ref().ok_or_else(|| invalid("mc", "section missing"))?;
        let center = simplex("mc.center", &mc.center, field.dim())?;
        let mut target = BallTarget::new(center, mc.radius).map_err(|e| invalid("mc.radius", e))?;
        if let Some(w) = &mc.flux_window {
            target = target
                .with_flux_window(w.iter().map(|&[lo, hi]| (lo, hi)).collect())
                .map_err(|e: McError| invalid("mc.flux_window", e))?;
        }
        if mc.n == 0 {
            return Err(invalid("mc.n", "must be positive"));
        }
        if mc.times.is_empty() || mc.times[0] <= 0.0 || mc.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("mc.times", "must be positive and strictly increasing"));
        }
        Ok(target)
    }
}

pub(crate) fn simplex(name: &str, v: &[f64], d: usize) -> Result<SimplexVector, ConfigError> {
    if v.len() != d {
        return Err(invalid(name, ModelError::DimensionMismatch { expected: d, got: v.len() }));
    }
    SimplexVector::renormalized(v.to_vec()).map_err(|e| invalid(name, e))
}

pub(crate) fn flux_matrix(name: &str, m: &Matrix, d: usize) -> Result<FluxVector, ConfigError> {
    if m.len() != d {
        return Err(invalid(name, ModelError::DimensionMismatch { expected: d, got: m.len() }));
    }
    FluxVector::from_matrix(m).map_err(|e| invalid(name, e))
}

pub(crate) fn current_matrix(name: &str, m: &Matrix, d: usize) -> Result<CurrentVector, ConfigError> {
    if m.len() != d {
        return Err(invalid(name, ModelError::DimensionMismatch { expected: d, got: m.len() }));
    }
    CurrentVector::from_matrix(m).map_err(|e| invalid(name, e))
}
