//! Simulates a two-state autochemotactic walker with both exact samplers and
//! prints the terminal occupation next to the self-consistent fixed point.

use sijump::ldp::fixed_point_pi_star;
use sijump::sim::{batch_simulate, simulate_exact_affine, Sampler};
use sijump::{GeneratorMatrix, RateField};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q0 = GeneratorMatrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, -2.0]])?;
    let field = RateField::autochemotaxis(q0, 1.5)?;

    let traj = simulate_exact_affine(&field, 0, 50.0, 7)?;
    println!("single path: {} jumps by t = 50", traj.events().len());
    for t in [1.0, 10.0, 50.0] {
        println!("  L_{t:<4} = {:?}", traj.occupation_at(t)?.as_slice());
    }

    let pi = fixed_point_pi_star(&field, 1e-12, 10_000)?;
    println!("fixed point pi* = {:?}", pi.pi.as_slice());
    for sampler in [Sampler::Thinning, Sampler::ExactAffine] {
        let batch = batch_simulate(&field, 0, 2000.0, 64, 42, sampler)?;
        println!("{sampler:?}: mean L_T over 64 paths = {:?}", batch.occupation_mean);
    }
    Ok(())
}
