use rand::Rng;

use super::{JumpEvent, OccupationAnchor, SimError, Trajectory};
use crate::model::{ModelError, RateField};
use crate::rng::{path_stream, PathRng};

/// Which exact sampler to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampler {
    #[default]
    Thinning,
    ExactAffine,
}

fn check_inputs(field: &RateField, x0: usize, horizon: f64) -> Result<(), SimError> {
    if x0 >= field.dim() {
        return Err(SimError::InvalidState(x0));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(SimError::InvalidHorizon(horizon));
    }
    Ok(())
}

fn exp1<R: Rng>(rng: &mut R) -> f64 {
    -(1.0 - rng.random::<f64>()).ln()
}

fn checked_rate(field: &RateField, rates: &[f64], from: usize, to: usize) -> Result<f64, SimError> {
    let rate = rates[field.space().edge_index(from, to)];
    if !(rate >= 0.0) {
        return Err(ModelError::NegativeRate { from, to, value: rate }.into());
    }
    Ok(rate)
}

/// Poisson-thinning sampler on stream `(seed, 0)`.
pub fn simulate_thinning(field: &RateField, x0: usize, horizon: f64, seed: u64) -> Result<Trajectory, SimError> {
    simulate_thinning_with(field, x0, horizon, &mut path_stream(seed, 0))
}

/// Poisson-thinning sampler driven by a caller-supplied stream.
///
/// Candidates arrive at total rate `(d - 1) c_Q`, each assigned uniformly to
/// one of the `d - 1` edges out of the current state. A candidate is accepted
/// with probability `Q_xy(L_t) / c_Q`, where `L_t` is evaluated from the
/// anchor before the jump is applied.
pub fn simulate_thinning_with(
    field: &RateField,
    x0: usize,
    horizon: f64,
    rng: &mut PathRng,
) -> Result<Trajectory, SimError> {
    check_inputs(field, x0, horizon)?;
    let space = field.space();
    let d = space.dim();
    let bound = field.rate_bound();
    let mut events = Vec::new();
    if bound == 0.0 {
        return Ok(Trajectory::from_parts(space, x0, horizon, events));
    }
    let total = (d - 1) as f64 * bound;
    let mut anchor = OccupationAnchor::start(d, x0);
    let mut occupation = vec![0.0; d];
    let mut rates = vec![0.0; space.num_edges()];
    let mut t = 0.0;
    loop {
        t += exp1(rng) / total;
        if t > horizon {
            break;
        }
        let x = anchor.state();
        let slot = rng.random_range(0..d - 1);
        let y = if slot >= x { slot + 1 } else { slot };
        let u: f64 = rng.random();
        anchor.occupation_into(t, &mut occupation);
        field.edge_rates_into(&occupation, &mut rates);
        let rate = checked_rate(field, &rates, x, y)?;
        if rate > bound * (1.0 + 1e-12) {
            return Err(SimError::BoundExceeded { from: x, to: y, rate, bound });
        }
        if u * bound < rate {
            events.push(JumpEvent { time: t, from: x, to: y });
            anchor.advance(t, y);
        }
    }
    Ok(Trajectory::from_parts(space, x0, horizon, events))
}

/// Exact-affine sampler on stream `(seed, 0)`.
pub fn simulate_exact_affine(field: &RateField, x0: usize, horizon: f64, seed: u64) -> Result<Trajectory, SimError> {
    simulate_exact_affine_with(field, x0, horizon, &mut path_stream(seed, 0))
}

/// Integrated total hazard from the anchor time `s` to `t`:
/// `q1 (t - s) + s (q0 - q1) ln(t / s)`.
fn integrated_hazard(s: f64, q0: f64, q1: f64, t: f64) -> f64 {
    let log_term = if s > 0.0 { s * (q0 - q1) * ((t - s) / s).ln_1p() } else { 0.0 };
    q1 * (t - s) + log_term
}

/// Solves `integrated_hazard(t) = target` on `[s, hi]`, where the left side
/// is nondecreasing in `t`. Newton from the constant-hazard guess, with
/// bisection whenever Newton leaves the bracket or stalls.
fn invert_hazard(s: f64, q0: f64, q1: f64, target: f64, hi: f64) -> f64 {
    let f = |t: f64| integrated_hazard(s, q0, q1, t) - target;
    let hazard = |t: f64| if s > 0.0 { q1 + s * (q0 - q1) / t } else { q1 };
    let (mut lo, mut hi) = (s, hi);
    let initial_rate = if s > 0.0 { q0 } else { q1 };
    let mut t = if initial_rate > 0.0 { (s + target / initial_rate).clamp(lo, hi) } else { 0.5 * (lo + hi) };
    let tol = 1e-12 * hi.max(1.0);
    for _ in 0..64 {
        let v = f(t);
        if v > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        if v.abs() <= 1e-13 * target.max(1.0) || hi - lo <= tol {
            return t;
        }
        let slope = hazard(t);
        let next = t - v / slope;
        t = if slope > 0.0 && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact sampler for affine fields by inversion of the closed-form hazard.
///
/// Between jumps, with anchor `(s, L_s, x)`, the rate to `y` is
/// `(s/t) Q_xy(L_s) + (1 - s/t) Q_xy(delta_x)`; the next jump time solves
/// `int_s^t hazard = E` for a unit exponential `E`, and the target is drawn
/// proportionally to the per-edge rates at that time.
pub fn simulate_exact_affine_with(
    field: &RateField,
    x0: usize,
    horizon: f64,
    rng: &mut PathRng,
) -> Result<Trajectory, SimError> {
    check_inputs(field, x0, horizon)?;
    let vertex_rates = field.vertex_rates().map_err(|_| SimError::NotAffine)?;
    let space = field.space();
    let d = space.dim();
    let mut anchor = OccupationAnchor::start(d, x0);
    let mut events = Vec::new();
    let mut occupation = vec![0.0; d];
    let mut rates = vec![0.0; space.num_edges()];
    let mut at_anchor = vec![0.0; d];
    let mut at_vertex = vec![0.0; d];
    loop {
        let s = anchor.time();
        let x = anchor.state();
        anchor.occupation_into(s, &mut occupation);
        field.edge_rates_into(&occupation, &mut rates);
        for y in (0..d).filter(|&y| y != x) {
            let e = space.edge_index(x, y);
            at_anchor[y] = checked_rate(field, &rates, x, y)?;
            at_vertex[y] = vertex_rates[x][e];
            if at_vertex[y] < 0.0 {
                return Err(ModelError::NegativeRate { from: x, to: y, value: at_vertex[y] }.into());
            }
        }
        at_anchor[x] = 0.0;
        at_vertex[x] = 0.0;
        let q0: f64 = at_anchor.iter().sum();
        let q1: f64 = at_vertex.iter().sum();
        let target = exp1(rng);
        if integrated_hazard(s, q0, q1, horizon) < target {
            break;
        }
        let t = invert_hazard(s, q0, q1, target, horizon);
        if !(t > s) {
            // The hazard mass sits below floating resolution of the clock.
            break;
        }
        let w = s / t;
        let total = w * q0 + (1.0 - w) * q1;
        let mut pick = rng.random::<f64>() * total;
        let mut y_next = None;
        for y in (0..d).filter(|&y| y != x) {
            let lambda = w * at_anchor[y] + (1.0 - w) * at_vertex[y];
            if lambda > 0.0 {
                y_next = Some(y);
                if pick < lambda {
                    break;
                }
                pick -= lambda;
            }
        }
        let y = y_next.expect("positive total hazard has a positive edge");
        events.push(JumpEvent { time: t, from: x, to: y });
        anchor.advance(t, y);
    }
    Ok(Trajectory::from_parts(space, x0, horizon, events))
}

/// Dispatches on the sampler.
pub fn simulate(
    sampler: Sampler,
    field: &RateField,
    x0: usize,
    horizon: f64,
    rng: &mut PathRng,
) -> Result<Trajectory, SimError> {
    match sampler {
        Sampler::Thinning => simulate_thinning_with(field, x0, horizon, rng),
        Sampler::ExactAffine => simulate_exact_affine_with(field, x0, horizon, rng),
    }
}
