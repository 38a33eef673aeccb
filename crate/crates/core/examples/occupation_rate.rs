//! Occupation-level rate: the flux is free and only the discounted marginal
//! is pinned. Checked against the two-state closed form on a constant
//! field, then evaluated on a self-interacting one.

use sijump::ldp::dv_occupation_rate_2state;
use sijump::varsolve::{occupation_rate, SolverOptions};
use sijump::{GeneratorMatrix, RateField, SimplexVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q0 = GeneratorMatrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, -2.0]])?;
    let opts = SolverOptions::default();
    let constant = RateField::constant(q0.clone())?;
    let chemo = RateField::autochemotaxis(q0.clone(), 1.5)?;

    println!("{:>6} {:>12} {:>12} {:>14}", "gamma1", "closed", "constant", "autochemotaxis");
    for g in [0.3, 0.5, 0.67, 0.8, 0.9] {
        let gamma = SimplexVector::new(vec![g, 1.0 - g])?;
        let exact = dv_occupation_rate_2state(&q0, &gamma)?;
        let a = occupation_rate(&gamma, &constant, &opts)?;
        let b = occupation_rate(&gamma, &chemo, &opts)?;
        println!("{g:>6.2} {exact:>12.6} {:>12.6} {:>14.6}", a.value, b.value);
    }
    Ok(())
}
