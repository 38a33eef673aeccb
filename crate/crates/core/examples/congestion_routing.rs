//! Congestion field: rates into crowded states drop with their occupation.
//! Compares simulated long-run occupation with the fixed point and prices a
//! detour to an uncrowded profile.

use sijump::ldp::fixed_point_pi_star;
use sijump::sim::{batch_simulate, Sampler};
use sijump::varsolve::{occupation_rate, SolverOptions};
use sijump::{l1_distance, GeneratorMatrix, RateField, SimplexVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q0 = GeneratorMatrix::from_rows(&[vec![-2.0, 1.0, 1.0], vec![1.0, -2.0, 1.0], vec![1.0, 1.0, -2.0]])?;
    let field = RateField::congestion(q0, vec![0.2, 0.3, 0.1], vec![0.4, 0.1, 0.3])?;

    let pi = fixed_point_pi_star(&field, 1e-12, 10_000)?.pi;
    let batch = batch_simulate(&field, 0, 1000.0, 32, 3, Sampler::ExactAffine)?;
    let mean = SimplexVector::renormalized(batch.occupation_mean.clone())?;
    println!("pi*        {:?}", pi.as_slice());
    println!("simulated  {:?}  (l1 gap {:.4})", mean.as_slice(), l1_distance(&pi, &mean));

    let opts = SolverOptions { multistarts: 4, ..Default::default() };
    for gamma in [vec![1.0 / 3.0; 3], vec![0.5, 0.25, 0.25], vec![0.2, 0.2, 0.6]] {
        let gamma = SimplexVector::renormalized(gamma)?;
        let r = occupation_rate(&gamma, &field, &opts)?;
        println!("rate at {:?} = {:.5} ({})", gamma.as_slice(), r.value, r.status.as_str());
    }
    Ok(())
}
