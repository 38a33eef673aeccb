use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use super::{ControlPath, RateResult};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Toml(#[from] toml::ser::Error),
}

#[derive(Serialize)]
struct Residuals {
    marginal: f64,
    stationarity: f64,
    flux: f64,
    current: f64,
    support: usize,
}

#[derive(Serialize)]
struct Piece {
    s_left: f64,
    s_right: f64,
    weight: f64,
    rho: Vec<f64>,
    h: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct Document {
    value: f64,
    status: &'static str,
    feasible_to_tol: bool,
    starts_converged: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    best_start: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    residuals: Residuals,
    #[serde(skip_serializing_if = "Option::is_none")]
    flux: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    piece: Vec<Piece>,
}

/// Writes `result` as TOML: value, status, residuals, the read-off flux
/// matrix and one `[[piece]]` table per grid piece. The tail piece has
/// `s_right = inf`.
pub fn write_result_toml<W: Write>(result: &RateResult, mut w: W) -> Result<(), ExportError> {
    let r = &result.residuals;
    let doc = Document {
        value: result.value,
        status: result.status.as_str(),
        feasible_to_tol: result.feasible_to_tol,
        starts_converged: result.starts_converged,
        best_start: result.best_start,
        note: result.note.clone(),
        residuals: Residuals {
            marginal: r.marginal,
            stationarity: r.stationarity,
            flux: r.flux,
            current: r.current,
            support: r.support,
        },
        flux: result.flux.as_ref().map(|f| f.to_matrix()),
        piece: result.path.as_ref().map(pieces).unwrap_or_default(),
    };
    w.write_all(toml::to_string(&doc)?.as_bytes())?;
    Ok(())
}

fn pieces(path: &ControlPath) -> Vec<Piece> {
    let grid = path.grid();
    (0..grid.pieces())
        .map(|k| {
            let (s_left, s_right) = grid.piece_bounds(k);
            Piece {
                s_left,
                s_right,
                weight: grid.weights()[k],
                rho: path.rho()[k].as_slice().to_vec(),
                h: path.h()[k].to_rows(),
            }
        })
        .collect()
}

/// One CSV row per piece: `s_left,s_right,rho_1..rho_d,H_x_y..` with
/// 1-based state labels and edges in row-major order.
pub fn write_path_csv<W: Write>(path: &ControlPath, mut w: W) -> std::io::Result<()> {
    let space = path.h()[0].space();
    let mut header = vec!["s_left".to_string(), "s_right".to_string()];
    header.extend((1..=space.dim()).map(|x| format!("rho_{x}")));
    header.extend(space.edges().map(|(x, y)| format!("H_{}_{}", x + 1, y + 1)));
    writeln!(w, "{}", header.join(","))?;
    for (k, piece) in pieces(path).into_iter().enumerate() {
        let mut row = vec![piece.s_left.to_string(), piece.s_right.to_string()];
        row.extend(piece.rho.iter().map(|v| v.to_string()));
        row.extend(space.edges().map(|(x, y)| path.h()[k].get(x, y).to_string()));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GeneratorMatrix, SimplexVector};
    use crate::varsolve::TimeGrid;

    #[test]
    fn csv_layout() {
        let h = GeneratorMatrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, -2.0]]).unwrap();
        let p = ControlPath::constant(TimeGrid::new(2.0, 2).unwrap(), SimplexVector::uniform(2), h).unwrap();
        let mut out = Vec::new();
        write_path_csv(&p, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "s_left,s_right,rho_1,rho_2,H_1_2,H_2_1");
        assert_eq!(lines[1], "0,1,0.5,0.5,1,2");
        assert_eq!(lines[3], "2,inf,0.5,0.5,1,2");
    }
}
