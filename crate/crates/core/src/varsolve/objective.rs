//! Augmented-Lagrangian objective over unconstrained path parameters.
//!
//! Per piece `k` the parameters are logits `a_k` (length `d`) and log-rates
//! `b_k` (one per support edge):
//! `rho_k = eps_rho + (1 - d eps_rho) softmax(a_k)`,
//! `H_k,e = eps_h + exp(b_k,e)`.

use nalgebra::{DMatrix, DVector};

use super::{ControlPath, MEval, TimeGrid};
use crate::ldp::ell_unchecked;
use crate::model::{GeneratorMatrix, RateField, SimplexVector};

#[derive(Debug, Clone)]
pub(crate) enum Target {
    /// Marginal and flux on support edges.
    Fixed { gamma: Vec<f64>, flux: Vec<f64> },
    /// Marginal only.
    Occupation { gamma: Vec<f64> },
    /// `F(e_fwd) - F(e_bwd) = j` per pair; `None` where the edge is off support.
    Current { pairs: Vec<(Option<usize>, Option<usize>, f64)> },
}

#[derive(Debug, Clone)]
pub(crate) struct Objective {
    field: RateField,
    grid: TimeGrid,
    mode: MEval,
    d: usize,
    num_edges: usize,
    /// Global edge index of each support edge.
    support: Vec<usize>,
    from: Vec<usize>,
    to: Vec<usize>,
    target: Target,
    eps_rho: f64,
    eps_h: f64,
    // Per-cell exact one-step coefficients, full and half step.
    step_a: Vec<f64>,
    step_b: Vec<f64>,
    half_a: Vec<f64>,
    half_b: Vec<f64>,
    // Workspace.
    rho: Vec<f64>,
    soft: Vec<f64>,
    h: Vec<f64>,
    exp_b: Vec<f64>,
    m: Vec<f64>,
    points: Vec<f64>,
    rates: Vec<f64>,
    sens: Vec<f64>,
    d_rho: Vec<f64>,
    d_h: Vec<f64>,
    g_m: Vec<f64>,
    d_point: Vec<f64>,
    psi: Vec<f64>,
    pub(crate) constraints: Vec<f64>,
}

impl Objective {
    pub(crate) fn new(
        field: &RateField,
        grid: &TimeGrid,
        mode: MEval,
        target: Target,
        eps_rho: f64,
        eps_h: f64,
    ) -> Self {
        let space = field.space();
        let d = space.dim();
        let support: Vec<usize> = (0..space.num_edges()).filter(|&e| field.in_support(e)).collect();
        let from = support.iter().map(|&e| space.edge(e).0).collect();
        let to = support.iter().map(|&e| space.edge(e).1).collect();
        let cells = grid.cells();
        let widths: Vec<f64> = (0..cells).map(|k| grid.cell_width(k)).collect();
        let pieces = grid.pieces();
        let n0 = support.len();
        let mut obj = Self {
            field: field.clone(),
            grid: grid.clone(),
            mode,
            d,
            num_edges: space.num_edges(),
            support,
            from,
            to,
            target,
            eps_rho,
            eps_h,
            step_a: widths.iter().map(|w| -(-w).exp_m1()).collect(),
            step_b: widths.iter().map(|w| (-w).exp()).collect(),
            half_a: widths.iter().map(|w| -(-0.5 * w).exp_m1()).collect(),
            half_b: widths.iter().map(|w| (-0.5 * w).exp()).collect(),
            rho: vec![0.0; pieces * d],
            soft: vec![0.0; pieces * d],
            h: vec![0.0; pieces * n0],
            exp_b: vec![0.0; pieces * n0],
            m: vec![0.0; pieces * d],
            points: vec![0.0; pieces * d],
            rates: vec![0.0; space.num_edges()],
            sens: vec![0.0; d * space.num_edges()],
            d_rho: vec![0.0; pieces * d],
            d_h: vec![0.0; pieces * n0],
            g_m: vec![0.0; pieces * d],
            d_point: vec![0.0; d],
            psi: Vec::new(),
            constraints: Vec::new(),
        };
        let nc = obj.num_constraints();
        obj.psi = vec![0.0; nc];
        obj.constraints = vec![0.0; nc];
        obj
    }

    fn pieces(&self) -> usize {
        self.grid.pieces()
    }

    fn stride(&self) -> usize {
        self.d + self.support.len()
    }

    pub(crate) fn num_params(&self) -> usize {
        self.pieces() * self.stride()
    }

    fn num_target_constraints(&self) -> usize {
        match &self.target {
            Target::Fixed { gamma, flux } => gamma.len() + flux.len(),
            Target::Occupation { gamma } => gamma.len(),
            Target::Current { pairs } => pairs.len(),
        }
    }

    pub(crate) fn num_constraints(&self) -> usize {
        self.num_target_constraints() + self.pieces() * self.d
    }

    /// Parameters reproducing `path` as closely as the floors allow.
    pub(crate) fn encode(&self, path: &ControlPath) -> Vec<f64> {
        let scale = 1.0 - self.d as f64 * self.eps_rho;
        let stride = self.stride();
        let mut x = vec![0.0; self.num_params()];
        for k in 0..self.pieces() {
            let base = k * stride;
            for i in 0..self.d {
                let p = ((path.rho()[k].get(i) - self.eps_rho) / scale).max(1e-12);
                x[base + i] = p.ln();
            }
            for (j, &e) in self.support.iter().enumerate() {
                let (a, b) = (self.from[j], self.to[j]);
                debug_assert_eq!(self.field.space().edge_index(a, b), e);
                let v = (path.h()[k].get(a, b) - self.eps_h).max(1e-12);
                x[base + self.d + j] = v.ln();
            }
        }
        x
    }

    fn decode(&mut self, x: &[f64]) {
        let d = self.d;
        let n0 = self.support.len();
        let stride = self.stride();
        let scale = 1.0 - d as f64 * self.eps_rho;
        for k in 0..self.pieces() {
            let a = &x[k * stride..k * stride + d];
            let top = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for i in 0..d {
                let v = (a[i] - top).exp();
                self.soft[k * d + i] = v;
                z += v;
            }
            for i in 0..d {
                self.soft[k * d + i] /= z;
                self.rho[k * d + i] = self.eps_rho + scale * self.soft[k * d + i];
            }
            for j in 0..n0 {
                let v = x[k * stride + d + j].exp();
                self.exp_b[k * n0 + j] = v;
                self.h[k * n0 + j] = self.eps_h + v;
            }
        }
    }

    fn environment(&mut self) {
        let d = self.d;
        let kc = self.grid.cells();
        self.m[kc * d..].copy_from_slice(&self.rho[kc * d..]);
        for k in (0..kc).rev() {
            for i in 0..d {
                self.m[k * d + i] = self.step_a[k] * self.rho[k * d + i] + self.step_b[k] * self.m[(k + 1) * d + i];
            }
        }
        match self.mode {
            MEval::LeftNode => self.points.copy_from_slice(&self.m),
            MEval::Midpoint => {
                for k in 0..kc {
                    for i in 0..d {
                        self.points[k * d + i] =
                            self.half_a[k] * self.rho[k * d + i] + self.half_b[k] * self.m[(k + 1) * d + i];
                    }
                }
                self.points[kc * d..].copy_from_slice(&self.rho[kc * d..]);
            }
        }
    }

    /// Fills `self.constraints` from the decoded state.
    fn evaluate_constraints(&mut self) {
        let d = self.d;
        let n0 = self.support.len();
        let w = self.grid.weights();
        let mut c = 0;
        let flux_on = |rho: &[f64], h: &[f64], from: &[usize], j: usize| -> f64 {
            w.iter().enumerate().map(|(k, wk)| wk * rho[k * d + from[j]] * h[k * n0 + j]).sum()
        };
        match &self.target {
            Target::Fixed { gamma, flux } => {
                for (i, g) in gamma.iter().enumerate() {
                    let m0: f64 = w.iter().enumerate().map(|(k, wk)| wk * self.rho[k * d + i]).sum();
                    self.constraints[c] = m0 - g;
                    c += 1;
                }
                for (j, s) in flux.iter().enumerate() {
                    self.constraints[c] = flux_on(&self.rho, &self.h, &self.from, j) - s;
                    c += 1;
                }
            }
            Target::Occupation { gamma } => {
                for (i, g) in gamma.iter().enumerate() {
                    let m0: f64 = w.iter().enumerate().map(|(k, wk)| wk * self.rho[k * d + i]).sum();
                    self.constraints[c] = m0 - g;
                    c += 1;
                }
            }
            Target::Current { pairs } => {
                for &(fwd, bwd, j) in pairs {
                    let f = fwd.map_or(0.0, |e| flux_on(&self.rho, &self.h, &self.from, e));
                    let b = bwd.map_or(0.0, |e| flux_on(&self.rho, &self.h, &self.from, e));
                    self.constraints[c] = f - b - j;
                    c += 1;
                }
            }
        }
        for k in 0..self.pieces() {
            let row = &mut self.constraints[c..c + d];
            row.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..n0 {
                let q = self.rho[k * d + self.from[j]] * self.h[k * n0 + j];
                row[self.to[j]] += q;
                row[self.from[j]] -= q;
            }
            c += d;
        }
    }

    /// Unpenalized cost and, into `d_rho`/`d_h`, its gradient with respect
    /// to `rho` and `H`.
    fn cost(&mut self) -> f64 {
        let d = self.d;
        let n0 = self.support.len();
        let a = self.num_edges;
        let kc = self.grid.cells();
        self.g_m.iter_mut().for_each(|v| *v = 0.0);
        let mut total = 0.0;
        for k in 0..self.pieces() {
            let wk = self.grid.weights()[k];
            let point = &self.points[k * d..(k + 1) * d];
            self.field.edge_rates_into(point, &mut self.rates);
            self.field.edge_rate_sensitivities(point, &mut self.sens);
            self.d_point.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..n0 {
                let e = self.support[j];
                let q = self.rates[e];
                let hv = self.h[k * n0 + j];
                if !(q > 0.0) {
                    return f64::INFINITY;
                }
                let r = self.rho[k * d + self.from[j]];
                let ratio = hv / q;
                let phi = q * ell_unchecked(ratio);
                total += wk * r * phi;
                self.d_rho[k * d + self.from[j]] += wk * phi;
                self.d_h[k * n0 + j] += wk * r * ratio.ln();
                let dq = wk * r * (1.0 - ratio);
                for z in 0..d {
                    self.d_point[z] += dq * self.sens[z * a + e];
                }
            }
            match self.mode {
                MEval::LeftNode => {
                    for z in 0..d {
                        self.g_m[k * d + z] += self.d_point[z];
                    }
                }
                MEval::Midpoint if k < kc => {
                    for z in 0..d {
                        self.d_rho[k * d + z] += self.half_a[k] * self.d_point[z];
                        self.g_m[(k + 1) * d + z] += self.half_b[k] * self.d_point[z];
                    }
                }
                MEval::Midpoint => {
                    for z in 0..d {
                        self.g_m[k * d + z] += self.d_point[z];
                    }
                }
            }
        }
        // Adjoint of M_k = a_k rho_k + b_k M_{k+1}, M_K = rho_K.
        for k in 0..kc {
            for z in 0..d {
                let g = self.g_m[k * d + z];
                self.d_rho[k * d + z] += self.step_a[k] * g;
                self.g_m[(k + 1) * d + z] += self.step_b[k] * g;
            }
        }
        for z in 0..d {
            self.d_rho[kc * d + z] += self.g_m[kc * d + z];
        }
        total
    }

    /// Augmented Lagrangian `J + lambda.c + mu/2 |c|^2` and its gradient.
    pub(crate) fn eval(&mut self, x: &[f64], lambda: &[f64], mu: f64, grad: &mut [f64]) -> f64 {
        self.decode(x);
        self.environment();
        self.d_rho.iter_mut().for_each(|v| *v = 0.0);
        self.d_h.iter_mut().for_each(|v| *v = 0.0);
        let j = self.cost();
        if !j.is_finite() {
            return f64::INFINITY;
        }
        self.evaluate_constraints();
        let mut value = j;
        for (i, c) in self.constraints.iter().enumerate() {
            value += lambda[i] * c + 0.5 * mu * c * c;
            self.psi[i] = lambda[i] + mu * c;
        }
        self.constraint_gradient();
        self.chain(grad);
        value
    }

    /// Adds `sum_i psi_i grad c_i` into `d_rho`/`d_h`.
    fn constraint_gradient(&mut self) {
        let d = self.d;
        let n0 = self.support.len();
        let w = self.grid.weights().to_vec();
        let mut c = 0;
        let mut flux_weight = vec![0.0; n0];
        match &self.target {
            Target::Fixed { gamma, .. } | Target::Occupation { gamma } => {
                for i in 0..gamma.len() {
                    for (k, wk) in w.iter().enumerate() {
                        self.d_rho[k * d + i] += wk * self.psi[c + i];
                    }
                }
                c += gamma.len();
                if let Target::Fixed { flux, .. } = &self.target {
                    flux_weight.copy_from_slice(&self.psi[c..c + flux.len()]);
                    c += flux.len();
                }
            }
            Target::Current { pairs } => {
                for (p, &(fwd, bwd, _)) in pairs.iter().enumerate() {
                    if let Some(e) = fwd {
                        flux_weight[e] += self.psi[c + p];
                    }
                    if let Some(e) = bwd {
                        flux_weight[e] -= self.psi[c + p];
                    }
                }
                c += pairs.len();
            }
        }
        for (k, wk) in w.iter().enumerate() {
            for j in 0..n0 {
                let eta = flux_weight[j];
                if eta != 0.0 {
                    let x = self.from[j];
                    self.d_rho[k * d + x] += wk * self.h[k * n0 + j] * eta;
                    self.d_h[k * n0 + j] += wk * self.rho[k * d + x] * eta;
                }
            }
        }
        for k in 0..self.pieces() {
            let psi = &self.psi[c + k * d..c + (k + 1) * d];
            for j in 0..n0 {
                let (x, y) = (self.from[j], self.to[j]);
                let diff = psi[y] - psi[x];
                self.d_rho[k * d + x] += self.h[k * n0 + j] * diff;
                self.d_h[k * n0 + j] += self.rho[k * d + x] * diff;
            }
        }
    }

    fn chain(&self, grad: &mut [f64]) {
        let d = self.d;
        let n0 = self.support.len();
        let stride = self.stride();
        let scale = 1.0 - d as f64 * self.eps_rho;
        for k in 0..self.pieces() {
            let p = &self.soft[k * d..(k + 1) * d];
            let dr = &self.d_rho[k * d..(k + 1) * d];
            let mean: f64 = p.iter().zip(dr).map(|(a, b)| a * b).sum();
            for i in 0..d {
                grad[k * stride + i] = scale * p[i] * (dr[i] - mean);
            }
            for j in 0..n0 {
                grad[k * stride + d + j] = self.d_h[k * n0 + j] * self.exp_b[k * n0 + j];
            }
        }
    }

    /// Least-squares multipliers minimizing `|grad J + J_c^T lambda|` at `x`.
    pub(crate) fn multiplier_estimate(&mut self, x: &[f64]) -> Vec<f64> {
        let n = self.num_params();
        let m = self.num_constraints();
        let mut g = vec![0.0; n];
        if !self.eval(x, &vec![0.0; m], 0.0, &mut g).is_finite() {
            return vec![0.0; m];
        }
        let mut jac = DMatrix::<f64>::zeros(m, n);
        let mut row = vec![0.0; n];
        for i in 0..m {
            self.psi.iter_mut().for_each(|v| *v = 0.0);
            self.psi[i] = 1.0;
            self.d_rho.iter_mut().for_each(|v| *v = 0.0);
            self.d_h.iter_mut().for_each(|v| *v = 0.0);
            self.constraint_gradient();
            self.chain(&mut row);
            jac.row_mut(i).copy_from_slice(&row);
        }
        let mut normal = &jac * jac.transpose();
        let ridge = 1e-10 * normal.diagonal().max().max(1.0);
        for i in 0..m {
            normal[(i, i)] += ridge;
        }
        let rhs = -(&jac * DVector::from_vec(g));
        match normal.cholesky() {
            Some(chol) => chol.solve(&rhs).iter().copied().collect(),
            None => vec![0.0; m],
        }
    }

    /// Constraint values at `x`.
    pub(crate) fn constraint_values(&mut self, x: &[f64]) -> Vec<f64> {
        self.decode(x);
        self.evaluate_constraints();
        self.constraints.clone()
    }

    /// The path encoded by `x`, with exact zeros off the support.
    pub(crate) fn path(&mut self, x: &[f64]) -> ControlPath {
        self.decode(x);
        let d = self.d;
        let n0 = self.support.len();
        let space = self.field.space();
        let mut rhos = Vec::with_capacity(self.pieces());
        let mut hs = Vec::with_capacity(self.pieces());
        for k in 0..self.pieces() {
            rhos.push(SimplexVector::from_unnormalized(self.rho[k * d..(k + 1) * d].to_vec()));
            let mut rates = vec![0.0; self.num_edges];
            for j in 0..n0 {
                rates[self.support[j]] = self.h[k * n0 + j];
            }
            hs.push(GeneratorMatrix::from_edge_rates(space, &rates).expect("positive rates"));
        }
        ControlPath::new(self.grid.clone(), rhos, hs).expect("consistent shapes")
    }
}
