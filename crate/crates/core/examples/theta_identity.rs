//! A control path and its relaxed-control representation carry the same
//! cost whenever the path stays inside the rate bound.

use sijump::varsolve::{convert_to_theta, jtheta, jtilde, ControlPath, TimeGrid};
use sijump::{GeneratorMatrix, RateField, SimplexVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q0 = GeneratorMatrix::from_rows(&[vec![-1.0, 0.5, 0.5], vec![1.0, -2.0, 1.0], vec![0.5, 0.5, -1.0]])?;
    let field = RateField::autochemotaxis(q0, 2.0)?;
    let grid = TimeGrid::new(4.0, 3)?;
    let rho = vec![
        SimplexVector::new(vec![0.6, 0.2, 0.2])?,
        SimplexVector::new(vec![0.3, 0.4, 0.3])?,
        SimplexVector::new(vec![0.2, 0.2, 0.6])?,
        SimplexVector::new(vec![0.2, 0.3, 0.5])?,
    ];
    let h = vec![GeneratorMatrix::from_rows(&[vec![-1.0, 0.5, 0.5], vec![1.5, -2.0, 0.5], vec![0.5, 1.0, -1.5]])?; 4];
    let path = ControlPath::new(grid, rho, h)?;
    let theta = convert_to_theta(&path, &field);
    println!("jtilde = {:.15}", jtilde(&path, &field));
    println!("jtheta = {:.15}", jtheta(&theta, &field));
    println!("control ratios H/Q on the first piece: {:?}", theta.controls()[0]);
    Ok(())
}
