//! Self-consistent stationary points `pi = G(pi)` from several starts.

use sijump::ldp::{fixed_point_multistart, stationary_map};
use sijump::{GeneratorMatrix, RateField, SimplexVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q0 = GeneratorMatrix::from_rows(&[vec![-1.0, 1.0], vec![3.0, -3.0]])?;
    for k in [0.5, 2.0, 8.0] {
        let field = RateField::autochemotaxis(q0.clone(), k)?;
        let starts = [SimplexVector::uniform(2), SimplexVector::dirac(2, 0), SimplexVector::new(vec![0.9, 0.1])?];
        let found = fixed_point_multistart(&field, &starts, 1e-12, 10_000)?;
        println!("K = {k}: {} fixed point(s)", found.len());
        for fp in &found {
            let image = stationary_map(&field, &fp.pi)?;
            println!(
                "  pi = {:?}  G(pi) = {:?}  iterations {} damped {}",
                fp.pi.as_slice(),
                image.as_slice(),
                fp.iterations,
                fp.damped
            );
        }
    }
    Ok(())
}
