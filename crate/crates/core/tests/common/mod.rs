#![allow(dead_code, clippy::needless_range_loop)]

use rand::Rng;
use sijump::ldp::stationary_distribution;
use sijump::model::{FluxVector, GeneratorMatrix, RateField, SimplexVector, StateSpace};
use sijump::rng::{path_stream, PathRng};
use sijump::varsolve::{ControlPath, TimeGrid};

pub fn rng(seed: u64) -> PathRng {
    path_stream(seed, 0)
}

/// Off-diagonal rates uniform in `[lo, hi]`; with `sparse`, each edge is
/// dropped with probability 1/3 except for the cycle `0 -> 1 -> .. -> 0`.
pub fn random_generator(rng: &mut PathRng, d: usize, lo: f64, hi: f64, sparse: bool) -> GeneratorMatrix {
    let space = StateSpace::new(d).unwrap();
    let rates: Vec<f64> = space
        .edges()
        .map(|(x, y)| {
            let on_cycle = y == (x + 1) % d;
            if sparse && !on_cycle && rng.random::<f64>() < 1.0 / 3.0 {
                0.0
            } else {
                rng.random_range(lo..=hi)
            }
        })
        .collect();
    GeneratorMatrix::from_edge_rates(space, &rates).unwrap()
}

/// A point of the simplex with every coordinate at least `min`.
pub fn random_simplex(rng: &mut PathRng, d: usize, min: f64) -> SimplexVector {
    let raw: Vec<f64> = (0..d).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = raw.iter().sum();
    let scale = 1.0 - d as f64 * min;
    let mut v: Vec<f64> = raw.iter().map(|r| min + scale * r / total).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    SimplexVector::new(v).unwrap()
}

pub fn random_simplex_any(rng: &mut PathRng, d: usize) -> SimplexVector {
    random_simplex(rng, d, 0.0)
}

/// One of the built-in families with random parameters.
pub fn random_field(rng: &mut PathRng, d: usize, sparse: bool) -> RateField {
    let q0 = random_generator(rng, d, 0.2, 2.0, sparse);
    match rng.random_range(0..5) {
        0 => RateField::constant(q0).unwrap(),
        1 => RateField::autochemotaxis(q0, rng.random_range(0.0..3.0)).unwrap(),
        2 => {
            let alpha: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..0.45)).collect();
            let beta: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..0.45)).collect();
            RateField::congestion(q0, alpha, beta).unwrap()
        }
        3 => {
            // Channels share the pattern of q0 so the support is stable.
            let channels = (0..d)
                .map(|_| {
                    let space = q0.space();
                    let rates: Vec<f64> = q0
                        .edge_rates()
                        .iter()
                        .map(|&r| if r > 0.0 { rng.random_range(0.1..2.0) } else { 0.0 })
                        .collect();
                    GeneratorMatrix::from_edge_rates(space, &rates).unwrap()
                })
                .collect();
            RateField::catalytic(channels).unwrap()
        }
        _ => {
            let vertices = (0..d)
                .map(|_| {
                    let rates: Vec<f64> = q0
                        .edge_rates()
                        .iter()
                        .map(|&r| if r > 0.0 { rng.random_range(0.1..2.0) } else { 0.0 })
                        .collect();
                    GeneratorMatrix::from_edge_rates(q0.space(), &rates).unwrap()
                })
                .collect();
            RateField::affine(vertices).unwrap()
        }
    }
}

/// Balanced flux on the full edge set: symmetric parts plus, for `d = 3`,
/// a cycle current.
pub fn random_balanced_flux(rng: &mut PathRng, d: usize) -> FluxVector {
    let mut m = vec![vec![0.0; d]; d];
    for x in 0..d {
        for y in x + 1..d {
            let s = rng.random_range(0.2..2.0);
            m[x][y] = s;
            m[y][x] = s;
        }
    }
    if d == 3 {
        let min_sym = (0..3).map(|x| m[x][(x + 1) % 3]).fold(f64::INFINITY, f64::min);
        let c = rng.random_range(-0.8..0.8) * min_sym;
        for x in 0..3 {
            m[x][(x + 1) % 3] += c;
            m[(x + 1) % 3][x] -= c;
        }
    }
    FluxVector::from_matrix(&m).unwrap()
}

/// A path whose every piece is a random generator on the field's support
/// together with its stationary distribution.
pub fn random_feasible_path(rng: &mut PathRng, field: &RateField, grid: TimeGrid) -> ControlPath {
    let space = field.space();
    let mut rhos = Vec::new();
    let mut hs = Vec::new();
    for _ in 0..grid.pieces() {
        let rates: Vec<f64> = (0..space.num_edges())
            .map(|e| if field.in_support(e) { rng.random_range(0.05..3.0) } else { 0.0 })
            .collect();
        let h = GeneratorMatrix::from_edge_rates(space, &rates).unwrap();
        rhos.push(stationary_distribution(&h).unwrap());
        hs.push(h);
    }
    ControlPath::new(grid, rhos, hs).unwrap()
}
