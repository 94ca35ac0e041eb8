//! Finite-dimensional operator pairs (S, T) from a common inner-product
//! space, with explicit diagonal Grams and a compact-embedding weight:
//! orthogonality certification, the block generalized Laplacian, kernel
//! bases, element decomposition, coercivity, and the compensated pairing
//! diagnostics.
//!
//! Adjoints are inner-product transposes against the Grams, which is what
//! makes a duality-pairing adjoint concrete at finite scale. Pre-compactness
//! of sequences is never decided here: the pairing report carries norm
//! diagnostics and the caller reads them (non-reflexive counterexample
//! territory has no finite-dimensional analogue, so none is emulated).

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::Error;
use crate::grid::PeriodicGrid;
use crate::hodge::gram_vector;
use crate::linalg::{jacobi_svd, sym_eigen, DenseMat};
use crate::solver::{conjugate_gradient, CgConfig};
use crate::sparse::CsrMatrix;
use crate::util::{fitted_order, SplitMix64};

/// Relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-8;
/// Gap-ratio below which a rank decision is flagged ambiguous.
pub const RANK_GAP_RATIO: f64 = 10.0;
/// Largest dim_H the dense kernel route accepts.
pub const DENSE_DIM_CAP: usize = 5000;

/// Compact-embedding weight defining the auxiliary norm ||W h||.
#[derive(Debug, Clone)]
pub enum EmbedWeight {
    Diagonal(Vec<f64>),
    Dense(DenseMat),
}

impl EmbedWeight {
    pub fn identity(n: usize) -> Self {
        EmbedWeight::Diagonal(vec![1.0; n])
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            EmbedWeight::Diagonal(d) => x.iter().zip(d).map(|(a, w)| a * w).collect(),
            EmbedWeight::Dense(m) => m.mul_vec(x),
        }
    }

    fn dim(&self) -> usize {
        match self {
            EmbedWeight::Diagonal(d) => d.len(),
            EmbedWeight::Dense(m) => m.cols,
        }
    }

    fn check_positive_definite(&self) -> Result<(), Error> {
        match self {
            EmbedWeight::Diagonal(d) => {
                if d.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
                    Err(Error::SingularWeight)
                } else {
                    Ok(())
                }
            }
            EmbedWeight::Dense(m) => {
                if m.rows != m.cols {
                    return Err(Error::ShapeMismatch { expected: m.rows, got: m.cols });
                }
                // W enters through W^T W; full column rank is what matters
                let svd = jacobi_svd(m);
                let smax = svd.sigma[0];
                if smax == 0.0 || svd.sigma[m.cols - 1] <= RANK_TOL * smax {
                    Err(Error::SingularWeight)
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Two sparse maps S: H -> Y and T: H -> Z with diagonal Grams on the three
/// spaces and a compact-embedding weight on H.
#[derive(Debug, Clone)]
pub struct OperatorPair {
    s: CsrMatrix,
    t: CsrMatrix,
    gram_h: Vec<f64>,
    gram_y: Vec<f64>,
    gram_z: Vec<f64>,
    embed: EmbedWeight,
}

impl OperatorPair {
    /// Build a pair with identity Grams.
    pub fn new(s: CsrMatrix, t: CsrMatrix, embed: EmbedWeight) -> Result<Self, Error> {
        let dim_h = s.cols;
        Self::with_grams(s, t, vec![1.0; dim_h], None, None, embed)
    }

    /// Full constructor; `gram_y`/`gram_z` default to identity when `None`.
    pub fn with_grams(
        s: CsrMatrix,
        t: CsrMatrix,
        gram_h: Vec<f64>,
        gram_y: Option<Vec<f64>>,
        gram_z: Option<Vec<f64>>,
        embed: EmbedWeight,
    ) -> Result<Self, Error> {
        if t.cols != s.cols {
            return Err(Error::ShapeMismatch { expected: s.cols, got: t.cols });
        }
        if gram_h.len() != s.cols {
            return Err(Error::ShapeMismatch { expected: s.cols, got: gram_h.len() });
        }
        if embed.dim() != s.cols {
            return Err(Error::ShapeMismatch { expected: s.cols, got: embed.dim() });
        }
        embed.check_positive_definite()?;
        if gram_h.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::SingularWeight);
        }
        let gram_y = gram_y.unwrap_or_else(|| vec![1.0; s.rows]);
        let gram_z = gram_z.unwrap_or_else(|| vec![1.0; t.rows]);
        if gram_y.len() != s.rows {
            return Err(Error::ShapeMismatch { expected: s.rows, got: gram_y.len() });
        }
        if gram_z.len() != t.rows {
            return Err(Error::ShapeMismatch { expected: t.rows, got: gram_z.len() });
        }
        Ok(Self { s, t, gram_h, gram_y, gram_z, embed })
    }

    /// The grid pair on 1-cochains: S = codifferential, T = exterior
    /// derivative, Grams from the cell weights, embedding weight the
    /// diagonal (I + Laplacian)^{-1/2} approximation.
    pub fn grid_pair(grid: &PeriodicGrid) -> Self {
        let s = codifferential_matrix(grid, 1);
        let t = exterior_derivative_matrix(grid, 1);
        let gram_h = gram_vector(grid, 1);
        let gram_y = gram_vector(grid, 0);
        let gram_z = gram_vector(grid, 2);
        let lap_diag = laplacian_matrix(grid, 1).diag();
        let embed =
            EmbedWeight::Diagonal(lap_diag.iter().map(|d| 1.0 / (1.0 + d).sqrt()).collect());
        Self::with_grams(s, t, gram_h, Some(gram_y), Some(gram_z), embed)
            .expect("grid pair shapes are consistent")
    }

    pub fn dim_h(&self) -> usize {
        self.s.cols
    }

    pub fn dim_y(&self) -> usize {
        self.s.rows
    }

    pub fn dim_z(&self) -> usize {
        self.t.rows
    }

    pub fn s_matrix(&self) -> &CsrMatrix {
        &self.s
    }

    pub fn t_matrix(&self) -> &CsrMatrix {
        &self.t
    }

    pub fn embed(&self) -> &EmbedWeight {
        &self.embed
    }

    pub fn apply_s(&self, h: &[f64]) -> Vec<f64> {
        self.s.mul_vec(h)
    }

    pub fn apply_t(&self, h: &[f64]) -> Vec<f64> {
        self.t.mul_vec(h)
    }

    /// S-dagger: Gram_H^{-1} S^T Gram_Y.
    pub fn apply_s_dagger(&self, y: &[f64]) -> Vec<f64> {
        let wy: Vec<f64> = y.iter().zip(&self.gram_y).map(|(a, w)| a * w).collect();
        let mut h = self.s.transpose().mul_vec(&wy);
        for (hi, w) in h.iter_mut().zip(&self.gram_h) {
            *hi /= w;
        }
        h
    }

    pub fn apply_t_dagger(&self, z: &[f64]) -> Vec<f64> {
        let wz: Vec<f64> = z.iter().zip(&self.gram_z).map(|(a, w)| a * w).collect();
        let mut h = self.t.transpose().mul_vec(&wz);
        for (hi, w) in h.iter_mut().zip(&self.gram_h) {
            *hi /= w;
        }
        h
    }

    /// S-dagger as an explicit sparse matrix.
    pub fn s_dagger_matrix(&self) -> CsrMatrix {
        let inv_h: Vec<f64> = self.gram_h.iter().map(|w| 1.0 / w).collect();
        self.s.transpose().scaled(Some(&inv_h), Some(&self.gram_y))
    }

    pub fn t_dagger_matrix(&self) -> CsrMatrix {
        let inv_h: Vec<f64> = self.gram_h.iter().map(|w| 1.0 / w).collect();
        self.t.transpose().scaled(Some(&inv_h), Some(&self.gram_z))
    }

    pub fn inner_h(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.gram_h).map(|((x, y), w)| x * y * w).sum()
    }

    pub fn norm_h(&self, a: &[f64]) -> f64 {
        self.inner_h(a, a).sqrt()
    }

    pub fn inner_y(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.gram_y).map(|((x, y), w)| x * y * w).sum()
    }

    pub fn norm_y(&self, a: &[f64]) -> f64 {
        self.inner_y(a, a).sqrt()
    }

    pub fn inner_z(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.gram_z).map(|((x, y), w)| x * y * w).sum()
    }

    pub fn norm_z(&self, a: &[f64]) -> f64 {
        self.inner_z(a, a).sqrt()
    }

    /// The auxiliary-space norm ||embed_weight h||.
    pub fn norm_embedded(&self, h: &[f64]) -> f64 {
        let w = self.embed.apply(h);
        w.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Max-entry norm of S T-dagger and T S-dagger; zero certifies the
/// algebraic orthogonality of the pair.
pub fn check_orthogonality(pair: &OperatorPair) -> f64 {
    let st = pair.s.matmul(&pair.t_dagger_matrix());
    let ts = pair.t.matmul(&pair.s_dagger_matrix());
    st.max_abs().max(ts.max_abs())
}

/// Block-diagonal generalized Laplacian diag(S S-dagger, T T-dagger) on
/// the product space Y + Z.
#[derive(Debug, Clone)]
pub struct GeneralizedLaplacian {
    pub ss_block: CsrMatrix,
    pub tt_block: CsrMatrix,
}

impl GeneralizedLaplacian {
    pub fn apply(&self, y: &[f64], z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (self.ss_block.mul_vec(y), self.tt_block.mul_vec(z))
    }

    pub fn to_dense(&self) -> DenseMat {
        let ny = self.ss_block.rows;
        let nz = self.tt_block.rows;
        let mut m = DenseMat::zeros(ny + nz, ny + nz);
        let a = self.ss_block.to_dense();
        let b = self.tt_block.to_dense();
        for r in 0..ny {
            for c in 0..ny {
                m[(r, c)] = a[(r, c)];
            }
        }
        for r in 0..nz {
            for c in 0..nz {
                m[(ny + r, ny + c)] = b[(r, c)];
            }
        }
        m
    }
}

pub fn generalized_laplacian(pair: &OperatorPair) -> GeneralizedLaplacian {
    GeneralizedLaplacian {
        ss_block: pair.s.matmul(&pair.s_dagger_matrix()),
        tt_block: pair.t.matmul(&pair.t_dagger_matrix()),
    }
}

/// How kernel_basis factorizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelMode {
    /// Dense SVD of the stacked map (dim_H capped at DENSE_DIM_CAP).
    Dense,
    /// Kernel projection of random probes through decompose_element.
    Iterative { probes: usize, seed: u64 },
    /// Dense below 600 unknowns, iterative above.
    Auto { seed: u64 },
}

/// Orthonormal kernel basis with its certification diagnostics.
#[derive(Debug, Clone)]
pub struct KernelBasis {
    pub vectors: Vec<Vec<f64>>,
    /// max over basis vectors of ||S h|| + ||T h||, the range-orthogonality
    /// certificate.
    pub certificate: f64,
    /// Set when the singular-value gap around the threshold is below
    /// RANK_GAP_RATIO; carries the observed ratio.
    pub gap_warning: Option<f64>,
}

/// Orthonormal basis of ker(S + T) = {h : Sh = 0, Th = 0} at relative
/// threshold `tol`, certified against the range of the adjoints.
pub fn kernel_basis(pair: &OperatorPair, tol: f64, mode: KernelMode) -> Result<KernelBasis, Error> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive"));
    }
    let n = pair.dim_h();
    let resolved = match mode {
        KernelMode::Auto { seed } => {
            if n <= 600 {
                KernelMode::Dense
            } else {
                KernelMode::Iterative { probes: 8, seed }
            }
        }
        m => m,
    };
    let mut basis = match resolved {
        KernelMode::Dense => {
            if n > DENSE_DIM_CAP {
                return Err(Error::InvalidParameter("dense kernel route capped at 5000 unknowns"));
            }
            dense_kernel(pair, tol)?
        }
        KernelMode::Iterative { probes, seed } => iterative_kernel(pair, tol, probes, seed)?,
        KernelMode::Auto { .. } => unreachable!(),
    };
    // certificate: each basis vector annihilated by both maps
    let mut cert = 0.0f64;
    for h in &basis.vectors {
        let s = pair.norm_y(&pair.apply_s(h));
        let t = pair.norm_z(&pair.apply_t(h));
        cert = cert.max(s + t);
    }
    basis.certificate = cert;
    Ok(basis)
}

fn stacked_operator(pair: &OperatorPair) -> DenseMat {
    // rows: sqrt(gram_Y) S then sqrt(gram_Z) T; columns whitened by
    // 1/sqrt(gram_H) so plain singular values measure the right quotient
    let n = pair.dim_h();
    let ny = pair.dim_y();
    let nz = pair.dim_z();
    let mut m = DenseMat::zeros(ny + nz, n);
    let sqrt_y: Vec<f64> = pair.gram_y.iter().map(|w| w.sqrt()).collect();
    let sqrt_z: Vec<f64> = pair.gram_z.iter().map(|w| w.sqrt()).collect();
    let inv_sqrt_h: Vec<f64> = pair.gram_h.iter().map(|w| 1.0 / w.sqrt()).collect();
    for r in 0..ny {
        for k in pair.s.row_ptr[r]..pair.s.row_ptr[r + 1] {
            let c = pair.s.col_idx[k];
            m[(r, c)] = sqrt_y[r] * pair.s.values[k] * inv_sqrt_h[c];
        }
    }
    for r in 0..nz {
        for k in pair.t.row_ptr[r]..pair.t.row_ptr[r + 1] {
            let c = pair.t.col_idx[k];
            m[(ny + r, c)] = sqrt_z[r] * pair.t.values[k] * inv_sqrt_h[c];
        }
    }
    m
}

fn dense_kernel(pair: &OperatorPair, tol: f64) -> Result<KernelBasis, Error> {
    let n = pair.dim_h();
    let svd = jacobi_svd(&stacked_operator(pair));
    let smax = svd.sigma[0].max(1e-300);
    let mut kernel_cols: Vec<usize> = Vec::new();
    for (i, &s) in svd.sigma.iter().enumerate() {
        if s <= tol * smax {
            kernel_cols.push(i);
        }
    }
    // gap around the threshold: smallest kept-out vs largest kernel value
    let gap_warning = {
        let smallest_out = svd
            .sigma
            .iter()
            .enumerate()
            .filter(|(i, _)| !kernel_cols.contains(i))
            .map(|(_, &s)| s)
            .fold(f64::INFINITY, f64::min);
        let largest_in = kernel_cols.iter().map(|&i| svd.sigma[i]).fold(0.0f64, f64::max);
        if smallest_out.is_finite() && smallest_out < RANK_GAP_RATIO * tol * smax {
            Some(smallest_out / largest_in.max(tol * smax))
        } else {
            None
        }
    };
    let inv_sqrt_h: Vec<f64> = pair.gram_h.iter().map(|w| 1.0 / w.sqrt()).collect();
    let vectors: Vec<Vec<f64>> = kernel_cols
        .iter()
        .map(|&c| (0..n).map(|r| svd.v[(r, c)] * inv_sqrt_h[r]).collect())
        .collect();
    Ok(KernelBasis { vectors, certificate: 0.0, gap_warning })
}

fn iterative_kernel(
    pair: &OperatorPair,
    tol: f64,
    probes: usize,
    seed: u64,
) -> Result<KernelBasis, Error> {
    let n = pair.dim_h();
    let mut rng = SplitMix64::new(seed);
    let mut parts: Vec<Vec<f64>> = Vec::with_capacity(probes);
    for _ in 0..probes {
        let u = rng.fill_symmetric(n);
        let norm = pair.norm_h(&u).max(1e-300);
        let dec = decompose_element(pair, &u, tol)?;
        parts.push(dec.kernel_part.iter().map(|x| x / norm).collect());
    }
    // rank-reveal the normalized kernel parts through their Gram matrix
    let m = parts.len();
    let mut gram = DenseMat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            gram[(i, j)] = pair.inner_h(&parts[i], &parts[j]);
        }
    }
    let (evals, evecs) = sym_eigen(&gram);
    let noise = (100.0 * tol).powi(2);
    let mut vectors: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    for (idx, &lam) in evals.iter().enumerate() {
        if lam > noise {
            kept.push(lam);
            let scale = 1.0 / lam.sqrt();
            let mut v = vec![0.0; n];
            for (pi, part) in parts.iter().enumerate() {
                let c = evecs[(pi, idx)] * scale;
                for (vi, xi) in v.iter_mut().zip(part) {
                    *vi += c * xi;
                }
            }
            vectors.push(v);
        }
    }
    let gap_warning = {
        let largest_below =
            evals.iter().filter(|&&l| l <= noise).fold(0.0f64, |a, &b| a.max(b));
        let smallest_above = kept.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        if smallest_above.is_finite() && largest_below > 0.0 {
            let ratio = smallest_above / largest_below;
            if ratio < RANK_GAP_RATIO {
                Some(ratio)
            } else {
                None
            }
        } else {
            None
        }
    };
    Ok(KernelBasis { vectors, certificate: 0.0, gap_warning })
}

/// The three-way split of an element of H along the pair.
#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub kernel_part: Vec<f64>,
    /// Potential in Y with S S-dagger a = S u (minimum norm).
    pub a: Vec<f64>,
    /// Potential in Z with T T-dagger b = T u (minimum norm).
    pub b: Vec<f64>,
    /// Reassembly residual ||u - kernel_part - S-dagger a - T-dagger b||_H.
    pub residual: f64,
    pub iterations: (usize, usize),
}

/// Split u into kernel_part + S-dagger a + T-dagger b by two CG solves
/// started at zero (minimum-norm solutions on the consistent normal
/// systems).
pub fn decompose_element(
    pair: &OperatorPair,
    u: &[f64],
    tol: f64,
) -> Result<DecompositionResult, Error> {
    if u.len() != pair.dim_h() {
        return Err(Error::ShapeMismatch { expected: pair.dim_h(), got: u.len() });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive"));
    }
    let u_norm = pair.norm_h(u);
    let su = pair.apply_s(u);
    let tu = pair.apply_t(u);
    let su_norm = pair.norm_y(&su);
    let tu_norm = pair.norm_z(&tu);
    let max_iter = 60 * pair.dim_h().max(64);

    let (a, it_a) = if su_norm == 0.0 {
        (vec![0.0; pair.dim_y()], 0)
    } else {
        let rel_tol = (0.4 * tol * u_norm / su_norm).min(1e-6).max(1e-15);
        let mut apply = |y: &[f64]| pair.apply_s(&pair.apply_s_dagger(y));
        let (a, out) = conjugate_gradient(
            &mut apply,
            &su,
            Some(&pair.gram_y),
            &[],
            CgConfig::new(rel_tol, max_iter),
        )?;
        (a, out.iterations)
    };
    let (b, it_b) = if tu_norm == 0.0 {
        (vec![0.0; pair.dim_z()], 0)
    } else {
        let rel_tol = (0.4 * tol * u_norm / tu_norm).min(1e-6).max(1e-15);
        let mut apply = |z: &[f64]| pair.apply_t(&pair.apply_t_dagger(z));
        let (b, out) = conjugate_gradient(
            &mut apply,
            &tu,
            Some(&pair.gram_z),
            &[],
            CgConfig::new(rel_tol, max_iter),
        )?;
        (b, out.iterations)
    };

    let sa = pair.apply_s_dagger(&a);
    let tb = pair.apply_t_dagger(&b);
    let kernel_part: Vec<f64> =
        u.iter().zip(&sa).zip(&tb).map(|((ui, x), y)| ui - x - y).collect();
    let back: Vec<f64> = kernel_part
        .iter()
        .zip(&sa)
        .zip(&tb)
        .zip(u)
        .map(|(((k, x), y), ui)| k + x + y - ui)
        .collect();
    let residual = pair.norm_h(&back);
    Ok(DecompositionResult { kernel_part, a, b, residual, iterations: (it_a, it_b) })
}

/// Smallest C with ||h|| <= C (||Sh|| + ||Th|| + ||embed h||), evaluated as
/// 1/sigma_min of the stacked map h -> (Sh, Th, embed h).
///
/// The sum norm dominates the stacked quadratic norm, so the returned C is
/// always a valid constant for the sum-norm inequality; the S = T = 0
/// scaling cases are exact.
pub fn coercivity_constant(pair: &OperatorPair) -> Result<f64, Error> {
    let n = pair.dim_h();
    if n > DENSE_DIM_CAP {
        return Err(Error::InvalidParameter("coercivity route capped at 5000 unknowns"));
    }
    pair.embed.check_positive_definite()?;
    // normal matrix S^T Gy S + T^T Gz T + W^T W, whitened by Gram_H
    let mut normal = DenseMat::zeros(n, n);
    let accumulate = |normal: &mut DenseMat, mat: &CsrMatrix, gram: &[f64]| {
        for r in 0..mat.rows {
            let w = gram[r];
            for k1 in mat.row_ptr[r]..mat.row_ptr[r + 1] {
                for k2 in mat.row_ptr[r]..mat.row_ptr[r + 1] {
                    let (c1, c2) = (mat.col_idx[k1], mat.col_idx[k2]);
                    normal[(c1, c2)] += w * mat.values[k1] * mat.values[k2];
                }
            }
        }
    };
    accumulate(&mut normal, &pair.s, &pair.gram_y);
    accumulate(&mut normal, &pair.t, &pair.gram_z);
    match &pair.embed {
        EmbedWeight::Diagonal(d) => {
            for i in 0..n {
                normal[(i, i)] += d[i] * d[i];
            }
        }
        EmbedWeight::Dense(m) => {
            let wtw = m.transpose().matmul(m);
            for i in 0..n {
                for j in 0..n {
                    normal[(i, j)] += wtw[(i, j)];
                }
            }
        }
    }
    let inv_sqrt_h: Vec<f64> = pair.gram_h.iter().map(|w| 1.0 / w.sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            normal[(i, j)] *= inv_sqrt_h[i] * inv_sqrt_h[j];
        }
    }
    let (evals, _) = sym_eigen(&normal);
    let lam_min = evals[0];
    if !(lam_min > 0.0) {
        return Err(Error::SingularWeight);
    }
    Ok(1.0 / lam_min.sqrt())
}

/// One row of the compensated pairing report.
#[derive(Debug, Clone)]
pub struct PairingRow {
    pub index: usize,
    /// <u, v> in H.
    pub pairing: f64,
    /// |<u, v> - <u_bar, v_bar>|.
    pub gap: f64,
    /// ||S(u - u_bar)||_Y.
    pub s_drift: f64,
    /// ||T(v - v_bar)||_Z.
    pub t_drift: f64,
    /// ||embed (u - u_bar)||.
    pub embed_drift: f64,
}

/// Pairing diagnostics along a sequence; never decides weak convergence
/// (the caller supplies the limits).
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub rows: Vec<PairingRow>,
    pub limit_pairing: f64,
    /// Empirical order of the gap against the index schedule.
    pub fitted_order: f64,
}

/// Pair the two sequences against each other and their limits, reporting
/// per-index norms and the fitted gap order against `eps_schedule` (defaults
/// to 2^-k when absent).
pub fn compensated_pairing_test(
    pair: &OperatorPair,
    u_seq: &[Vec<f64>],
    v_seq: &[Vec<f64>],
    limits: (&[f64], &[f64]),
    eps_schedule: Option<&[f64]>,
) -> Result<ConvergenceReport, Error> {
    if u_seq.len() != v_seq.len() {
        return Err(Error::ShapeMismatch { expected: u_seq.len(), got: v_seq.len() });
    }
    if u_seq.len() < 3 {
        return Err(Error::InvalidParameter("sequence length must be at least 3"));
    }
    let (u_bar, v_bar) = limits;
    for w in u_seq.iter().chain(v_seq.iter()) {
        if w.len() != pair.dim_h() {
            return Err(Error::ShapeMismatch { expected: pair.dim_h(), got: w.len() });
        }
    }
    if let Some(eps) = eps_schedule {
        if eps.len() != u_seq.len() {
            return Err(Error::ShapeMismatch { expected: u_seq.len(), got: eps.len() });
        }
    }
    let limit_pairing = pair.inner_h(u_bar, v_bar);
    let s_bar = pair.apply_s(u_bar);
    let t_bar = pair.apply_t(v_bar);
    let mut rows = Vec::with_capacity(u_seq.len());
    for (i, (u, v)) in u_seq.iter().zip(v_seq).enumerate() {
        let pairing = pair.inner_h(u, v);
        let su = pair.apply_s(u);
        let tv = pair.apply_t(v);
        let s_drift = {
            let d: Vec<f64> = su.iter().zip(&s_bar).map(|(a, b)| a - b).collect();
            pair.norm_y(&d)
        };
        let t_drift = {
            let d: Vec<f64> = tv.iter().zip(&t_bar).map(|(a, b)| a - b).collect();
            pair.norm_z(&d)
        };
        let embed_drift = {
            let d: Vec<f64> = u.iter().zip(u_bar).map(|(a, b)| a - b).collect();
            pair.norm_embedded(&d)
        };
        rows.push(PairingRow {
            index: i,
            pairing,
            gap: (pairing - limit_pairing).abs(),
            s_drift,
            t_drift,
            embed_drift,
        });
    }
    let eps_default: Vec<f64>;
    let eps = match eps_schedule {
        Some(e) => e,
        None => {
            eps_default = (0..u_seq.len()).map(|k| 0.5f64.powi(k as i32 + 1)).collect();
            &eps_default
        }
    };
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    let scale = limit_pairing.abs().max(1.0);
    let fitted = fitted_order(eps, &gaps, 1e-14 * scale);
    Ok(ConvergenceReport { rows, limit_pairing, fitted_order: fitted })
}

/// Assemble the exterior derivative on degree-q cochains as a sparse matrix
/// (rows indexed by (q+1)-cells, columns by q-cells, storage order).
pub fn exterior_derivative_matrix(grid: &PeriodicGrid, degree: usize) -> CsrMatrix {
    assert!(degree < grid.dim());
    let nodes = grid.node_count();
    let out_sets = grid.axis_sets(degree + 1);
    let in_sets = grid.axis_sets(degree);
    let mut trip = Vec::new();
    for (oi, &set) in out_sets.iter().enumerate() {
        for a in 0..grid.dim() {
            if set & (1 << a) == 0 {
                continue;
            }
            let face = set & !(1 << a);
            let fi = in_sets.iter().position(|&s| s == face).unwrap();
            let sign = grid.boundary_sign(set, a);
            for node in 0..nodes {
                let up = grid.shift(node, a, 1);
                trip.push((oi * nodes + node, fi * nodes + up, sign));
                trip.push((oi * nodes + node, fi * nodes + node, -sign));
            }
        }
    }
    CsrMatrix::from_triplets(grid.cell_count(degree + 1), grid.cell_count(degree), &trip)
}

/// Assemble the codifferential on degree-q cochains as a sparse matrix.
pub fn codifferential_matrix(grid: &PeriodicGrid, degree: usize) -> CsrMatrix {
    assert!(degree > 0);
    let nodes = grid.node_count();
    let out_sets = grid.axis_sets(degree - 1);
    let in_sets = grid.axis_sets(degree);
    let mut trip = Vec::new();
    for (oi, &set) in out_sets.iter().enumerate() {
        for a in 0..grid.dim() {
            if set & (1 << a) != 0 {
                continue;
            }
            let parent = set | (1 << a);
            let pi = in_sets.iter().position(|&s| s == parent).unwrap();
            let h = grid.spacing(a);
            let w = grid.boundary_sign(parent, a) / (h * h);
            for node in 0..nodes {
                let down = grid.shift(node, a, -1);
                trip.push((oi * nodes + node, pi * nodes + down, w));
                trip.push((oi * nodes + node, pi * nodes + node, -w));
            }
        }
    }
    CsrMatrix::from_triplets(grid.cell_count(degree - 1), grid.cell_count(degree), &trip)
}

/// The Hodge Laplacian on degree-q cochains as a sparse matrix.
pub fn laplacian_matrix(grid: &PeriodicGrid, degree: usize) -> CsrMatrix {
    let n = grid.cell_count(degree);
    let mut trip: Vec<(usize, usize, f64)> = Vec::new();
    let push_product = |trip: &mut Vec<(usize, usize, f64)>, left: &CsrMatrix, right: &CsrMatrix| {
        let prod = left.matmul(right);
        for r in 0..prod.rows {
            for k in prod.row_ptr[r]..prod.row_ptr[r + 1] {
                trip.push((r, prod.col_idx[k], prod.values[k]));
            }
        }
    };
    if degree > 0 {
        let d_down = exterior_derivative_matrix(grid, degree - 1);
        let delta = codifferential_matrix(grid, degree);
        push_product(&mut trip, &d_down, &delta);
    }
    if degree < grid.dim() {
        let d_up = exterior_derivative_matrix(grid, degree);
        let delta_up = codifferential_matrix(grid, degree + 1);
        push_product(&mut trip, &delta_up, &d_up);
    }
    CsrMatrix::from_triplets(n, n, &trip)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cochain::{exterior_derivative, laplace_beltrami, Cochain};

    fn grid_pair_8() -> (PeriodicGrid, OperatorPair) {
        let grid = PeriodicGrid::unit(2, 8).unwrap();
        let pair = OperatorPair::grid_pair(&grid);
        (grid, pair)
    }

    #[test]
    fn matrices_match_cochain_operators() {
        let grid = PeriodicGrid::new(2, &[6, 4], &[1.0, 2.0]).unwrap();
        let mut rng = SplitMix64::new(3);
        for q in 0..2usize {
            let vals = rng.fill_symmetric(grid.cell_count(q));
            let c = Cochain::from_values(grid, q, vals.clone()).unwrap();
            let via_matrix = exterior_derivative_matrix(&grid, q).mul_vec(&vals);
            let direct = exterior_derivative(&c).unwrap();
            for (a, b) in via_matrix.iter().zip(direct.values()) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        let vals = rng.fill_symmetric(grid.cell_count(1));
        let c = Cochain::from_values(grid, 1, vals.clone()).unwrap();
        let via_matrix = laplacian_matrix(&grid, 1).mul_vec(&vals);
        let direct = laplace_beltrami(&c);
        for (a, b) in via_matrix.iter().zip(direct.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_pair_orthogonality_is_exact() {
        let (_, pair) = grid_pair_8();
        assert_eq!(check_orthogonality(&pair), 0.0);
    }

    #[test]
    fn adjoint_of_grid_codifferential_is_d() {
        // S-dagger must reproduce the degree-0 exterior derivative
        let grid = PeriodicGrid::unit(2, 8).unwrap();
        let pair = OperatorPair::grid_pair(&grid);
        let sd = pair.s_dagger_matrix().to_dense();
        let d0 = exterior_derivative_matrix(&grid, 0).to_dense();
        for r in 0..sd.rows {
            for c in 0..sd.cols {
                assert!((sd[(r, c)] - d0[(r, c)]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn identity_pair_violates_orthogonality() {
        let s = CsrMatrix::identity(4);
        let t = CsrMatrix::identity(4);
        let pair = OperatorPair::new(s, t, EmbedWeight::identity(4)).unwrap();
        assert!((check_orthogonality(&pair) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orthogonality_of_null_space_built_pair() {
        // random sparse S, T spanned by an orthonormal basis of ker(S)
        let mut rng = SplitMix64::new(17);
        let n = 40;
        let mut trip = Vec::new();
        for r in 0..12 {
            for _ in 0..3 {
                let c = (rng.next_u64() as usize) % n;
                trip.push((r, c, rng.next_symmetric()));
            }
        }
        let s = CsrMatrix::from_triplets(12, n, &trip);
        // dense SVD oracle for the null space
        let svd = jacobi_svd(&s.to_dense());
        let smax = svd.sigma[0];
        let mut t_rows = Vec::new();
        let mut row = 0usize;
        for (i, &sig) in svd.sigma.iter().enumerate() {
            if sig <= 1e-10 * smax {
                for r in 0..n {
                    t_rows.push((row, r, svd.v[(r, i)]));
                }
                row += 1;
            }
        }
        let t = CsrMatrix::from_triplets(row, n, &t_rows);
        let pair = OperatorPair::new(s, t, EmbedWeight::identity(n)).unwrap();
        assert!(check_orthogonality(&pair) <= 1e-12);
    }

    #[test]
    fn generalized_laplacian_matches_hodge_laplacians() {
        // SS-dagger is the degree-0 Laplacian, TT-dagger the degree-2 one
        let (grid, pair) = grid_pair_8();
        let gl = generalized_laplacian(&pair);
        let lap0 = laplacian_matrix(&grid, 0).to_dense();
        let lap2 = laplacian_matrix(&grid, 2).to_dense();
        let ss = gl.ss_block.to_dense();
        let tt = gl.tt_block.to_dense();
        for r in 0..ss.rows {
            for c in 0..ss.cols {
                assert!((ss[(r, c)] - lap0[(r, c)]).abs() <= 1e-12);
            }
        }
        for r in 0..tt.rows {
            for c in 0..tt.cols {
                assert!((tt[(r, c)] - lap2[(r, c)]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn generalized_laplacian_degenerate_blocks() {
        let s = CsrMatrix::zeros(3, 5);
        let t = CsrMatrix::zeros(2, 5);
        let pair = OperatorPair::new(s, t, EmbedWeight::identity(5)).unwrap();
        let gl = generalized_laplacian(&pair);
        assert_eq!(gl.ss_block.nnz(), 0);
        assert_eq!(gl.tt_block.nnz(), 0);
        // scalar square: S = (2) gives block (4)
        let s = CsrMatrix::from_triplets(1, 1, &[(0, 0, 2.0)]);
        let t = CsrMatrix::zeros(0, 1);
        let pair = OperatorPair::new(s, t, EmbedWeight::identity(1)).unwrap();
        let gl = generalized_laplacian(&pair);
        assert!((gl.ss_block.to_dense()[(0, 0)] - 4.0).abs() < 1e-15);
    }

    #[test]
    fn kernel_dimension_is_the_betti_number() {
        for (dim, n, expect) in [(2usize, 8usize, 2usize), (3, 4, 3)] {
            let grid = PeriodicGrid::unit(dim, n).unwrap();
            let pair = OperatorPair::grid_pair(&grid);
            let basis = kernel_basis(&pair, RANK_TOL, KernelMode::Dense).unwrap();
            assert_eq!(basis.vectors.len(), expect, "dim {dim}");
            assert!(basis.gap_warning.is_none());
            assert!(basis.certificate <= 1e-10);
            // orthonormal in the H inner product
            for (i, a) in basis.vectors.iter().enumerate() {
                for (j, b) in basis.vectors.iter().enumerate() {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((pair.inner_h(a, b) - target).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn iterative_kernel_matches_dense() {
        let grid = PeriodicGrid::unit(2, 8).unwrap();
        let pair = OperatorPair::grid_pair(&grid);
        let dense = kernel_basis(&pair, RANK_TOL, KernelMode::Dense).unwrap();
        let iter = kernel_basis(
            &pair,
            RANK_TOL,
            KernelMode::Iterative { probes: 8, seed: 99 },
        )
        .unwrap();
        assert_eq!(dense.vectors.len(), iter.vectors.len());
        assert!(iter.certificate <= 1e-8);
    }

    #[test]
    fn invertible_s_means_trivial_kernel() {
        let s = CsrMatrix::diagonal(&[1.0, 2.0, 3.0]);
        let t = CsrMatrix::zeros(0, 3);
        let pair = OperatorPair::new(s, t, EmbedWeight::identity(3)).unwrap();
        let basis = kernel_basis(&pair, RANK_TOL, KernelMode::Dense).unwrap();
        assert!(basis.vectors.is_empty());
    }

    #[test]
    fn decompose_kernel_element_stays_put() {
        let (grid, pair) = grid_pair_8();
        let harmonic = Cochain::parallel(grid, 1, 0, 1.0);
        let u = harmonic.values().to_vec();
        let dec = decompose_element(&pair, &u, 1e-10).unwrap();
        let a_norm = pair.norm_h(&pair.apply_s_dagger(&dec.a));
        let b_norm = pair.norm_h(&pair.apply_t_dagger(&dec.b));
        assert!(a_norm <= 1e-10);
        assert!(b_norm <= 1e-10);
        for (k, ui) in dec.kernel_part.iter().zip(&u) {
            assert!((k - ui).abs() <= 1e-10);
        }
    }

    #[test]
    fn decompose_pure_range_element() {
        let (_, pair) = grid_pair_8();
        let mut rng = SplitMix64::new(8);
        let y = rng.fill_symmetric(pair.dim_y());
        let u = pair.apply_s_dagger(&y);
        let dec = decompose_element(&pair, &u, 1e-10).unwrap();
        assert!(pair.norm_h(&dec.kernel_part) <= 1e-9 * pair.norm_h(&u));
        assert!(pair.norm_h(&pair.apply_t_dagger(&dec.b)) <= 1e-9 * pair.norm_h(&u));
        assert!(dec.residual <= 1e-10 * pair.norm_h(&u));
    }

    #[test]
    fn decomposition_parts_are_mutually_orthogonal() {
        let (_, pair) = grid_pair_8();
        let mut rng = SplitMix64::new(9);
        let u = rng.fill_symmetric(pair.dim_h());
        let tol = 1e-8;
        let dec = decompose_element(&pair, &u, tol).unwrap();
        let u_norm = pair.norm_h(&u);
        // the split respects the pair
        let s_k = pair.norm_y(&pair.apply_s(&dec.kernel_part));
        let t_k = pair.norm_z(&pair.apply_t(&dec.kernel_part));
        assert!(s_k + t_k <= tol * u_norm, "{}", s_k + t_k);
        let p1 = pair.apply_s_dagger(&dec.a);
        let p2 = pair.apply_t_dagger(&dec.b);
        let ortho_tol = 1e-6 * u_norm * u_norm;
        assert!(pair.inner_h(&p1, &p2).abs() <= ortho_tol);
        assert!(pair.inner_h(&p1, &dec.kernel_part).abs() <= ortho_tol);
        assert!(pair.inner_h(&p2, &dec.kernel_part).abs() <= ortho_tol);
    }

    #[test]
    fn adjoint_ranges_are_orthogonal_under_op1() {
        let (_, pair) = grid_pair_8();
        assert_eq!(check_orthogonality(&pair), 0.0);
        let mut rng = SplitMix64::new(10);
        for _ in 0..8 {
            let a = rng.fill_symmetric(pair.dim_y());
            let b = rng.fill_symmetric(pair.dim_z());
            let sa = pair.apply_s_dagger(&a);
            let tb = pair.apply_t_dagger(&b);
            let denom = pair.norm_h(&sa) * pair.norm_h(&tb);
            assert!(pair.inner_h(&sa, &tb).abs() <= 1e-12 * denom.max(1.0));
        }
    }

    #[test]
    fn coercivity_of_trivial_pairs() {
        let s = CsrMatrix::zeros(0, 6);
        let t = CsrMatrix::zeros(0, 6);
        let pair = OperatorPair::new(s.clone(), t.clone(), EmbedWeight::identity(6)).unwrap();
        assert!((coercivity_constant(&pair).unwrap() - 1.0).abs() < 1e-12);
        let pair2 = OperatorPair::new(s, t, EmbedWeight::Diagonal(vec![2.0; 6])).unwrap();
        assert!((coercivity_constant(&pair2).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn coercivity_certified_by_random_probes() {
        let (_, pair) = grid_pair_8();
        let c = coercivity_constant(&pair).unwrap();
        assert!(c.is_finite() && c > 0.0);
        let mut rng = SplitMix64::new(11);
        for _ in 0..10_000 {
            let h = rng.fill_symmetric(pair.dim_h());
            let lhs = pair.norm_h(&h);
            let rhs = pair.norm_y(&pair.apply_s(&h))
                + pair.norm_z(&pair.apply_t(&h))
                + pair.norm_embedded(&h);
            assert!(lhs <= c * rhs * (1.0 + 1e-8));
        }
    }

    #[test]
    fn embed_weight_must_be_positive() {
        let s = CsrMatrix::zeros(0, 3);
        let t = CsrMatrix::zeros(0, 3);
        let r = OperatorPair::new(s, t, EmbedWeight::Diagonal(vec![1.0, 0.0, 1.0]));
        assert!(matches!(r, Err(Error::SingularWeight)));
    }

    #[test]
    fn pairing_report_constant_sequence_has_zero_gap() {
        let (_, pair) = grid_pair_8();
        let mut rng = SplitMix64::new(12);
        let u = rng.fill_symmetric(pair.dim_h());
        let v = rng.fill_symmetric(pair.dim_h());
        let seq_u = vec![u.clone(), u.clone(), u.clone(), u.clone()];
        let seq_v = vec![v.clone(), v.clone(), v.clone(), v.clone()];
        let report = compensated_pairing_test(&pair, &seq_u, &seq_v, (&u, &v), None).unwrap();
        for row in &report.rows {
            assert_eq!(row.gap, 0.0);
            assert_eq!(row.s_drift, 0.0);
        }
        assert!(report.fitted_order.is_infinite());
    }

    #[test]
    fn pairing_report_rejects_bad_shapes() {
        let (_, pair) = grid_pair_8();
        let u = vec![0.0; pair.dim_h()];
        let short = vec![u.clone(), u.clone()];
        assert!(compensated_pairing_test(&pair, &short, &short, (&u, &u), None).is_err());
    }
}
