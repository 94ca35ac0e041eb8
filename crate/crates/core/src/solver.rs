//! Matrix-free iterative kernels: deflated conjugate gradients in a weighted
//! inner product, and a short Lanczos recurrence for inverse-square-root
//! applications.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::Error;
use crate::linalg::{sym_eigen, DenseMat};

/// Conjugate-gradient controls. `tol` is relative to the deflated
/// right-hand side norm.
#[derive(Debug, Clone, Copy)]
pub struct CgConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl CgConfig {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self { tol, max_iter }
    }
}

/// Convergence record of a CG solve.
#[derive(Debug, Clone, Copy)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Final residual relative to the (deflated) right-hand side.
    pub residual: f64,
}

fn dot_g(x: &[f64], y: &[f64], gram: Option<&[f64]>) -> f64 {
    match gram {
        None => x.iter().zip(y).map(|(a, b)| a * b).sum(),
        Some(g) => x.iter().zip(y).zip(g).map(|((a, b), w)| a * b * w).sum(),
    }
}

fn project_out(v: &mut [f64], deflate: &[Vec<f64>], gram: Option<&[f64]>) {
    for k in deflate {
        let c = dot_g(v, k, gram);
        for (vi, ki) in v.iter_mut().zip(k) {
            *vi -= c * ki;
        }
    }
}

/// Solve A x = b by CG for an operator symmetric positive semi-definite in
/// the (optionally weighted) inner product.
///
/// Starting from x = 0 keeps the iterates in the Krylov space of the
/// right-hand side, so on a consistent singular system the limit is the
/// minimum-norm solution. `deflate` holds gram-orthonormal kernel vectors;
/// the right-hand side and (periodically) the residual are projected off
/// them to stop rounding drift.
pub fn conjugate_gradient(
    apply: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    gram: Option<&[f64]>,
    deflate: &[Vec<f64>],
    cfg: CgConfig,
) -> Result<(Vec<f64>, CgOutcome), Error> {
    let n = b.len();
    let mut rhs = b.to_vec();
    project_out(&mut rhs, deflate, gram);
    let rhs_norm = dot_g(&rhs, &rhs, gram).sqrt();
    let mut x = vec![0.0; n];
    if rhs_norm == 0.0 {
        return Ok((x, CgOutcome { iterations: 0, residual: 0.0 }));
    }
    let mut r = rhs;
    let mut p = r.clone();
    let mut rs = dot_g(&r, &r, gram);
    for it in 0..cfg.max_iter {
        let res = rs.sqrt() / rhs_norm;
        if res <= cfg.tol {
            return Ok((x, CgOutcome { iterations: it, residual: res }));
        }
        let mut ap = apply(&p);
        if !deflate.is_empty() {
            project_out(&mut ap, deflate, gram);
        }
        let pap = dot_g(&p, &ap, gram);
        if pap <= 0.0 {
            return Err(Error::SolverDiverged { iterations: it, residual: res });
        }
        let alpha = rs / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if !deflate.is_empty() && it % 50 == 49 {
            project_out(&mut r, deflate, gram);
        }
        let rs_new = dot_g(&r, &r, gram);
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    let res = rs.sqrt() / rhs_norm;
    if res <= cfg.tol {
        Ok((x, CgOutcome { iterations: cfg.max_iter, residual: res }))
    } else {
        Err(Error::SolverDiverged { iterations: cfg.max_iter, residual: res })
    }
}

/// Apply A^{-1/2} approximately via a k-step Lanczos recurrence (A symmetric
/// positive definite in the weighted inner product).
///
/// Returns the approximation of A^{-1/2} b. If the Krylov space closes early
/// (breakdown), the value is exact on that invariant subspace.
pub fn lanczos_inv_sqrt(
    apply: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    gram: Option<&[f64]>,
    steps: usize,
) -> Vec<f64> {
    let n = b.len();
    let b_norm = dot_g(b, b, gram).sqrt();
    if b_norm == 0.0 {
        return vec![0.0; n];
    }
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alphas = Vec::with_capacity(steps);
    let mut betas: Vec<f64> = Vec::new();
    let v1: Vec<f64> = b.iter().map(|x| x / b_norm).collect();
    vs.push(v1);
    for j in 0..steps {
        let vj = vs[j].clone();
        let mut w = apply(&vj);
        let alpha = dot_g(&vj, &w, gram);
        alphas.push(alpha);
        for i in 0..n {
            w[i] -= alpha * vj[i];
        }
        if j > 0 {
            let beta_prev = betas[j - 1];
            let vprev = &vs[j - 1];
            for i in 0..n {
                w[i] -= beta_prev * vprev[i];
            }
        }
        // full reorthogonalization: step counts are tiny
        for v in &vs {
            let c = dot_g(&w, v, gram);
            for i in 0..n {
                w[i] -= c * v[i];
            }
        }
        let beta = dot_g(&w, &w, gram).sqrt();
        if j + 1 == steps || beta < 1e-14 * b_norm.max(1.0) {
            break;
        }
        betas.push(beta);
        vs.push(w.iter().map(|x| x / beta).collect());
    }
    let k = alphas.len();
    let mut t = DenseMat::zeros(k, k);
    for j in 0..k {
        t[(j, j)] = alphas[j];
        if j + 1 < k {
            t[(j, j + 1)] = betas[j];
            t[(j + 1, j)] = betas[j];
        }
    }
    let (evals, evecs) = sym_eigen(&t);
    // f(T) e1 with f = x^{-1/2}; T inherits positive definiteness from A
    let mut fte1 = vec![0.0; k];
    for (idx, lam) in evals.iter().enumerate() {
        let f = 1.0 / lam.max(1e-300).sqrt();
        let coeff = evecs[(0, idx)] * f;
        for (row, out) in fte1.iter_mut().enumerate() {
            *out += evecs[(row, idx)] * coeff;
        }
    }
    let mut out = vec![0.0; n];
    for (j, v) in vs.iter().enumerate() {
        let c = b_norm * fte1[j];
        for i in 0..n {
            out[i] += c * v[i];
        }
    }
    out
}
