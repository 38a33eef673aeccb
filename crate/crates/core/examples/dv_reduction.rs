//! For a constant field the dynamical rate reduces to the level-2.5
//! Donsker-Varadhan formula. Solves the discretized control problem and
//! compares it with the closed form.

use sijump::ldp::{dv_rate, DvRateInput};
use sijump::varsolve::{solve_rate, SolverOptions};
use sijump::{FluxVector, GeneratorMatrix, RateField, SimplexVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q0 = GeneratorMatrix::from_rows(&[vec![-2.0, 1.0, 1.0], vec![0.5, -1.5, 1.0], vec![1.0, 1.0, -2.0]])?;
    let field = RateField::constant(q0.clone())?;
    let gamma = SimplexVector::new(vec![0.5, 0.3, 0.2])?;
    // Symmetric exchange plus a clockwise cycle of strength 0.1.
    let flux = FluxVector::from_matrix(&[vec![0.0, 0.4, 0.1], vec![0.3, 0.0, 0.3], vec![0.2, 0.2, 0.0]])?;

    let closed = dv_rate(&DvRateInput::new(q0, gamma.clone(), flux.clone())?);
    let solved = solve_rate(&gamma, &flux, &field, &SolverOptions::default())?;
    println!("closed form  {closed:.8}");
    println!("solver       {:.8} ({})", solved.value, solved.status.as_str());
    println!("residuals    {:?}", solved.residuals);
    Ok(())
}
