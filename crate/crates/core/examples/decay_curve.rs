//! Monte Carlo decay of `P(L_t in B(gamma, r))` and the empirical exponent
//! `-(1/t) log p`, compared with the occupation rate of the ball center.

use sijump::mc::{compare_to_rate, decay_curve, write_curve_csv, BallTarget, McOptions};
use sijump::sim::Sampler;
use sijump::varsolve::{occupation_rate, SolverOptions};
use sijump::{GeneratorMatrix, RateField, SimplexVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q0 = GeneratorMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]])?;
    let field = RateField::constant(q0)?;
    let center = SimplexVector::new(vec![0.75, 0.25])?;
    let target = BallTarget::new(center.clone(), 0.1)?;
    let opts = McOptions { n: 20_000, seed: 1, sampler: Sampler::ExactAffine };
    let curve = decay_curve(&field, 0, &target, &[5.0, 10.0, 20.0, 40.0], opts)?;
    write_curve_csv(&curve, std::io::stdout())?;

    let rate = occupation_rate(&center, &field, &SolverOptions::default())?.value;
    let cmp = compare_to_rate(&curve, rate);
    println!("center rate {rate:.4}, trend {}, censored {}", cmp.trend.as_str(), cmp.censored);
    Ok(())
}
