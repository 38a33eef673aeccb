//! Monte Carlo estimates of `P((L_t, R_t) in B)` for balls `B` around a
//! target occupation measure, and the empirical decay `-(1/t) log P`.
//!
//! Path `i` always runs on stream `(seed, i)` and is simulated once to the
//! largest requested time, so estimates for different radii and times share
//! their random numbers.

use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{ModelError, RateField, SimplexVector};
use crate::rng::path_stream;
use crate::sim::{simulate, Sampler, SimError};
use crate::stats::{wilson_interval, Z95};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("sample count must be positive")]
    ZeroSamples,
    #[error("radius {0} outside (0, 2]")]
    InvalidRadius(f64),
    #[error("invalid flux window: {0}")]
    InvalidWindow(String),
    #[error("times must be positive and increasing")]
    InvalidTimes,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// `{ (m, r) : |m - center|_1 <= radius, lo_e <= r_e <= hi_e }`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallTarget {
    center: SimplexVector,
    radius: f64,
    flux_window: Option<Vec<(f64, f64)>>,
}

impl BallTarget {
    pub fn new(center: SimplexVector, radius: f64) -> Result<Self, McError> {
        if !(radius > 0.0 && radius <= 2.0) {
            return Err(McError::InvalidRadius(radius));
        }
        Ok(Self { center, radius, flux_window: None })
    }

    /// Adds a per-edge interval constraint on the empirical flux.
    pub fn with_flux_window(mut self, window: Vec<(f64, f64)>) -> Result<Self, McError> {
        let edges = self.center.dim() * (self.center.dim() - 1);
        if window.len() != edges {
            return Err(McError::InvalidWindow(format!("expected {edges} intervals, got {}", window.len())));
        }
        if let Some((lo, hi)) = window.iter().find(|(lo, hi)| !(lo <= hi) || lo.is_nan()) {
            return Err(McError::InvalidWindow(format!("empty interval [{lo}, {hi}]")));
        }
        self.flux_window = Some(window);
        Ok(self)
    }

    pub fn center(&self) -> &SimplexVector {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn flux_window(&self) -> Option<&[(f64, f64)]> {
        self.flux_window.as_deref()
    }

    pub fn with_radius(&self, radius: f64) -> Result<Self, McError> {
        let mut t = Self::new(self.center.clone(), radius)?;
        t.flux_window = self.flux_window.clone();
        Ok(t)
    }

    pub fn contains(&self, occupation: &[f64], flux: &[f64]) -> bool {
        let dist: f64 = occupation.iter().zip(self.center.as_slice()).map(|(a, b)| (a - b).abs()).sum();
        dist <= self.radius
            && self.flux_window.as_ref().is_none_or(|w| w.iter().zip(flux).all(|(&(lo, hi), &r)| lo <= r && r <= hi))
    }
}

/// One estimated probability with its Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayPoint {
    pub t: f64,
    pub hits: u64,
    pub n: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// No hits: `neg_log_rate` is the lower bound `-(1/t) log(1/n)`.
    pub censored: bool,
    /// `-(1/t) log p_hat`.
    pub neg_log_rate: f64,
}

impl DecayPoint {
    pub fn from_counts(t: f64, hits: u64, n: u64) -> Self {
        let p_hat = hits as f64 / n as f64;
        let (lo, hi) = wilson_interval(hits, n, Z95);
        let censored = hits == 0;
        let neg_log_rate = if censored { (n as f64).ln() / t } else { -p_hat.ln() / t };
        Self { t, hits, n, p_hat, ci_low: lo.min(p_hat), ci_high: hi.max(p_hat), censored, neg_log_rate }
    }
}

/// Monte Carlo run settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub n: u64,
    pub seed: u64,
    pub sampler: Sampler,
}

/// Hit counts `[target][time]` over `n` paths sharing their random numbers.
pub fn hit_counts(
    field: &RateField,
    x0: usize,
    targets: &[BallTarget],
    times: &[f64],
    opts: McOptions,
) -> Result<Vec<Vec<u64>>, McError> {
    if opts.n == 0 {
        return Err(McError::ZeroSamples);
    }
    if times.is_empty()
        || times[0] <= 0.0
        || times.windows(2).any(|w| w[1] <= w[0])
        || !times.iter().all(|t| t.is_finite())
    {
        return Err(McError::InvalidTimes);
    }
    for t in targets {
        if t.center.dim() != field.dim() {
            return Err(ModelError::DimensionMismatch { expected: field.dim(), got: t.center.dim() }.into());
        }
    }
    let horizon = *times.last().expect("nonempty");
    let zero = || vec![vec![0u64; times.len()]; targets.len()];
    let counts = (0..opts.n)
        .into_par_iter()
        .map(|i| -> Result<Vec<Vec<u64>>, McError> {
            let traj = simulate(opts.sampler, field, x0, horizon, &mut path_stream(opts.seed, i))?;
            let mut hits = zero();
            for (ti, &t) in times.iter().enumerate() {
                let occ = traj.occupation_unchecked(t);
                let flux = traj.flux_unchecked(t);
                for (k, target) in targets.iter().enumerate() {
                    hits[k][ti] = target.contains(occ.as_slice(), flux.values()) as u64;
                }
            }
            Ok(hits)
        })
        .try_reduce(zero, |mut a, b| {
            for (ra, rb) in a.iter_mut().zip(b) {
                ra.iter_mut().zip(rb).for_each(|(x, y)| *x += y);
            }
            Ok(a)
        })?;
    Ok(counts)
}

/// `P((L_t, R_t) in target)` from `n` paths started at `x0`.
pub fn estimate_ball_probability(
    field: &RateField,
    x0: usize,
    target: &BallTarget,
    t: f64,
    opts: McOptions,
) -> Result<DecayPoint, McError> {
    let hits = hit_counts(field, x0, std::slice::from_ref(target), &[t], opts)?;
    Ok(DecayPoint::from_counts(t, hits[0][0], opts.n))
}

/// Estimates at every time in `times` (positive, increasing) from one set
/// of paths.
pub fn decay_curve(
    field: &RateField,
    x0: usize,
    target: &BallTarget,
    times: &[f64],
    opts: McOptions,
) -> Result<Vec<DecayPoint>, McError> {
    let hits = hit_counts(field, x0, std::slice::from_ref(target), times, opts)?;
    Ok(times.iter().zip(&hits[0]).map(|(&t, &h)| DecayPoint::from_counts(t, h, opts.n)).collect())
}

/// CSV `t,p_hat,ci_low,ci_high,n,censored,neg_log_rate`.
pub fn write_curve_csv<W: Write>(curve: &[DecayPoint], mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,p_hat,ci_low,ci_high,n,censored,neg_log_rate")?;
    for p in curve {
        writeln!(w, "{},{},{},{},{},{},{}", p.t, p.p_hat, p.ci_low, p.ci_high, p.n, p.censored, p.neg_log_rate)?;
    }
    Ok(())
}

/// Direction of the uncensored `neg_log_rate` values as `t` grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    /// Fewer than two uncensored points, or all equal.
    Flat,
    Increasing,
    Decreasing,
    Mixed,
}

impl Trend {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Flat => "flat",
            Self::Increasing => "increasing",
            Self::Decreasing => "decreasing",
            Self::Mixed => "mixed",
        }
    }
}

/// Gaps between an empirical decay curve and a rate value.
#[derive(Debug, Clone, PartialEq)]
pub struct RateComparison {
    pub rate: f64,
    /// `neg_log_rate - rate` per point.
    pub gaps: Vec<f64>,
    pub censored: usize,
    pub trend: Trend,
    /// `|gap| / rate` at the last uncensored point (`|gap|` if the rate is 0).
    pub terminal_relative_gap: Option<f64>,
    /// Every point is censored, so the curve says nothing about the rate.
    pub inconclusive: bool,
}

pub fn compare_to_rate(curve: &[DecayPoint], rate: f64) -> RateComparison {
    let gaps = curve.iter().map(|p| p.neg_log_rate - rate).collect();
    let observed: Vec<&DecayPoint> = curve.iter().filter(|p| !p.censored).collect();
    let up = observed.windows(2).any(|w| w[1].neg_log_rate > w[0].neg_log_rate);
    let down = observed.windows(2).any(|w| w[1].neg_log_rate < w[0].neg_log_rate);
    let trend = match (up, down) {
        (false, false) => Trend::Flat,
        (true, false) => Trend::Increasing,
        (false, true) => Trend::Decreasing,
        (true, true) => Trend::Mixed,
    };
    let terminal_relative_gap = observed.last().map(|p| {
        let gap = (p.neg_log_rate - rate).abs();
        if rate > 0.0 {
            gap / rate
        } else {
            gap
        }
    });
    RateComparison {
        rate,
        gaps,
        censored: curve.len() - observed.len(),
        trend,
        terminal_relative_gap,
        inconclusive: observed.is_empty(),
    }
}
