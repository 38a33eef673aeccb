//! Cost of sustaining a net probability current around a three-cycle.

use sijump::varsolve::{current_rate, SolverOptions};
use sijump::{CurrentVector, GeneratorMatrix, RateField};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q0 = GeneratorMatrix::from_rows(&[vec![-2.0, 1.0, 1.0], vec![1.0, -2.0, 1.0], vec![1.0, 1.0, -2.0]])?;
    let field = RateField::autochemotaxis(q0, 1.0)?;
    let opts = SolverOptions { multistarts: 4, ..Default::default() };
    for j in [0.0, 0.1, 0.25, 0.5] {
        let current = CurrentVector::from_matrix(&[vec![0.0, j, -j], vec![-j, 0.0, j], vec![j, -j, 0.0]])?;
        let r = current_rate(&current, &field, &opts)?;
        println!("J = {j:<5} rate {:.6} ({})", r.value, r.status.as_str());
    }
    // A current that does not balance at a vertex has infinite cost.
    let bad = CurrentVector::from_matrix(&[vec![0.0, 0.2, 0.0], vec![-0.2, 0.0, 0.0], vec![0.0, 0.0, 0.0]])?;
    let r = current_rate(&bad, &field, &opts)?;
    println!("unbalanced: {} ({})", r.value, r.note.unwrap_or_default());
    Ok(())
}
