//! Cochains on flat periodic grids: exterior derivative, Hodge star,
//! codifferential, inner products, test-function pairings, and the Hodge
//! Laplacian.
//!
//! Values are cell integrals (integrated DEC), so `d` is a pure signed sum
//! of stored values and the chain condition d(d c) = 0 is a cancellation of
//! identical terms, not an approximation. The codifferential is implemented
//! as the exact inner-product adjoint of `d`; on the staggered grid this is
//! the Hodge-star conjugate of `d` with the sign (and dual-cell anchoring)
//! fixed by the adjointness identity <d a, b> = <a, delta b>.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::Error;
use crate::grid::PeriodicGrid;
use crate::util::GAUSS4;

/// A degree-q differential form sampled as integrals over oriented q-cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    grid: PeriodicGrid,
    degree: usize,
    values: Vec<f64>,
}

impl Cochain {
    pub fn zero(grid: PeriodicGrid, degree: usize) -> Self {
        assert!(degree <= grid.dim(), "degree out of range");
        let len = grid.cell_count(degree);
        Self { grid, degree, values: vec![0.0; len] }
    }

    /// Wrap raw values (length must match the cell count; all finite).
    pub fn from_values(grid: PeriodicGrid, degree: usize, values: Vec<f64>) -> Result<Self, Error> {
        if degree > grid.dim() {
            return Err(Error::InvalidParameter("degree out of range"));
        }
        if values.len() != grid.cell_count(degree) {
            return Err(Error::ShapeMismatch {
                expected: grid.cell_count(degree),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite cochain value"));
        }
        Ok(Self { grid, degree, values })
    }

    /// Degree-0 cochain sampling a function of position (0-cells are points).
    pub fn sample_nodes(grid: PeriodicGrid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.node_count()).map(|i| f(grid.node_position(i))).collect();
        Self { grid, degree: 0, values }
    }

    /// Degree-q cochain with coefficient function `coeff(set, x)` integrated
    /// over each cell by tensor-product 4-point Gauss quadrature.
    ///
    /// `coeff(set, x)` is the coefficient of the form on the `dx`-monomial of
    /// the axis set, evaluated at position `x`.
    pub fn from_coefficient_fn(
        grid: PeriodicGrid,
        degree: usize,
        coeff: impl Fn(u8, [f64; 3]) -> f64,
    ) -> Self {
        let mut c = Cochain::zero(grid, degree);
        let sets = grid.axis_sets(degree);
        let nodes = grid.node_count();
        for (si, &set) in sets.iter().enumerate() {
            let axes: Vec<usize> = (0..grid.dim()).filter(|a| set & (1 << a) != 0).collect();
            let vol = grid.cell_volume(set);
            for node in 0..nodes {
                let base = grid.node_position(node);
                // tensor Gauss product over the cell's axes
                let mut acc = 0.0;
                match axes.len() {
                    0 => acc = coeff(set, base),
                    1 => {
                        let a = axes[0];
                        let h = grid.spacing(a);
                        for &(t, w) in GAUSS4.iter() {
                            let mut x = base;
                            x[a] += t * h;
                            acc += w * coeff(set, x);
                        }
                    }
                    2 => {
                        for &(t0, w0) in GAUSS4.iter() {
                            for &(t1, w1) in GAUSS4.iter() {
                                let mut x = base;
                                x[axes[0]] += t0 * grid.spacing(axes[0]);
                                x[axes[1]] += t1 * grid.spacing(axes[1]);
                                acc += w0 * w1 * coeff(set, x);
                            }
                        }
                    }
                    _ => {
                        for &(t0, w0) in GAUSS4.iter() {
                            for &(t1, w1) in GAUSS4.iter() {
                                for &(t2, w2) in GAUSS4.iter() {
                                    let mut x = base;
                                    x[axes[0]] += t0 * grid.spacing(axes[0]);
                                    x[axes[1]] += t1 * grid.spacing(axes[1]);
                                    x[axes[2]] += t2 * grid.spacing(axes[2]);
                                    acc += w0 * w1 * w2 * coeff(set, x);
                                }
                            }
                        }
                    }
                }
                c.values[si * nodes + node] = acc * vol;
            }
        }
        c
    }

    /// Parallel (constant-coefficient) form on one axis set: the discrete
    /// harmonic representatives on the torus. `coefficient` is the smooth
    /// coefficient, so stored values are coefficient * cell volume.
    pub fn parallel(grid: PeriodicGrid, degree: usize, set_index: usize, coefficient: f64) -> Self {
        let mut c = Cochain::zero(grid, degree);
        let nodes = grid.node_count();
        let set = grid.axis_sets(degree)[set_index];
        let v = coefficient * grid.cell_volume(set);
        for node in 0..nodes {
            c.values[set_index * nodes + node] = v;
        }
        c
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, set_index: usize, node: usize) -> f64 {
        self.values[set_index * self.grid.node_count() + node]
    }

    fn check_compatible(&self, other: &Cochain) -> Result<(), Error> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch { left: self.degree, right: other.degree });
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Cochain {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &Cochain) -> Result<Cochain, Error> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Cochain) -> Result<Cochain, Error> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a -= b;
        }
        Ok(out)
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Exterior derivative: value on each (q+1)-cell is the signed sum of its
/// boundary q-cell values (integral Stokes form). Errors at top degree.
pub fn exterior_derivative(c: &Cochain) -> Result<Cochain, Error> {
    let grid = c.grid;
    let q = c.degree;
    if q >= grid.dim() {
        return Err(Error::DegreeOverflow { degree: q, dim: grid.dim() });
    }
    let mut out = Cochain::zero(grid, q + 1);
    let out_sets = grid.axis_sets(q + 1);
    let in_sets = grid.axis_sets(q);
    let nodes = grid.node_count();
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
                let delta = c.values[fi * nodes + up] - c.values[fi * nodes + node];
                out.values[oi * nodes + node] += sign * delta;
            }
        }
    }
    Ok(out)
}

/// Diagonal Hodge star on the flat grid: scales by dual/primal volume and
/// places the value on the complementary axis set with the permutation sign.
pub fn hodge_star(c: &Cochain) -> Cochain {
    let grid = c.grid;
    let q = c.degree;
    let mut out = Cochain::zero(grid, grid.dim() - q);
    let in_sets = grid.axis_sets(q);
    let out_sets = grid.axis_sets(grid.dim() - q);
    let nodes = grid.node_count();
    for (si, &set) in in_sets.iter().enumerate() {
        let comp = grid.complement(set);
        let oi = out_sets.iter().position(|&s| s == comp).unwrap();
        let factor = grid.star_sign(set) * grid.hodge_weight(set);
        for node in 0..nodes {
            out.values[oi * nodes + node] = factor * c.values[si * nodes + node];
        }
    }
    out
}

/// Codifferential: the exact L2 adjoint of the exterior derivative.
///
/// On the flat staggered grid the per-incidence weight collapses to 1/h_a^2,
/// so delta is a signed stencil with one scalar per axis.
pub fn codifferential(c: &Cochain) -> Result<Cochain, Error> {
    let grid = c.grid;
    let q = c.degree;
    if q == 0 {
        return Err(Error::DegreeUnderflow);
    }
    let mut out = Cochain::zero(grid, q - 1);
    let out_sets = grid.axis_sets(q - 1);
    let in_sets = grid.axis_sets(q);
    let nodes = grid.node_count();
    for (oi, &set) in out_sets.iter().enumerate() {
        for a in 0..grid.dim() {
            if set & (1 << a) != 0 {
                continue;
            }
            let parent = set | (1 << a);
            let pi = in_sets.iter().position(|&s| s == parent).unwrap();
            let sign = grid.boundary_sign(parent, a);
            let h = grid.spacing(a);
            let w = sign / (h * h);
            for node in 0..nodes {
                let down = grid.shift(node, a, -1);
                let delta = c.values[pi * nodes + down] - c.values[pi * nodes + node];
                out.values[oi * nodes + node] += w * delta;
            }
        }
    }
    Ok(out)
}

/// L2 inner product: sum over cells of a*b weighted by dual/primal volume.
pub fn l2_inner(a: &Cochain, b: &Cochain) -> Result<f64, Error> {
    a.check_compatible(b)?;
    let grid = a.grid;
    let nodes = grid.node_count();
    let mut acc = 0.0;
    for (si, &set) in grid.axis_sets(a.degree).iter().enumerate() {
        let w = grid.hodge_weight(set);
        let mut block = 0.0;
        for node in 0..nodes {
            block += a.values[si * nodes + node] * b.values[si * nodes + node];
        }
        acc += w * block;
    }
    Ok(acc)
}

pub fn l2_norm(c: &Cochain) -> f64 {
    l2_inner(c, c).expect("self inner product").sqrt()
}

/// Average the 2^q cells incident to a node into a pointwise coefficient
/// for each axis set (value / cell volume, corner-averaged).
pub fn node_coefficients(c: &Cochain) -> Vec<Vec<f64>> {
    let grid = c.grid;
    let q = c.degree;
    let nodes = grid.node_count();
    let sets = grid.axis_sets(q);
    let mut out = Vec::with_capacity(sets.len());
    for (si, &set) in sets.iter().enumerate() {
        let axes: Vec<usize> = (0..grid.dim()).filter(|a| set & (1 << a) != 0).collect();
        let vol = grid.cell_volume(set);
        let corners = 1usize << axes.len();
        let mut field = vec![0.0; nodes];
        for node in 0..nodes {
            let mut acc = 0.0;
            for corner in 0..corners {
                let mut anchor = node;
                for (bit, &a) in axes.iter().enumerate() {
                    if corner & (1 << bit) != 0 {
                        anchor = grid.shift(anchor, a, -1);
                    }
                }
                acc += c.values[si * nodes + anchor];
            }
            field[node] = acc / (corners as f64 * vol);
        }
        out.push(field);
    }
    out
}

/// Distributional pairing against a test function: sum over nodes of the
/// reconstructed pointwise inner product of `a` and `b`, times psi, times
/// the node cell volume.
pub fn pair_with_test(a: &Cochain, b: &Cochain, psi: &Cochain) -> Result<f64, Error> {
    a.check_compatible(b)?;
    if psi.degree != 0 {
        return Err(Error::DegreeMismatch { left: psi.degree, right: 0 });
    }
    if *psi.grid() != a.grid {
        return Err(Error::GridMismatch);
    }
    let grid = a.grid;
    let nodes = grid.node_count();
    let ca = node_coefficients(a);
    let cb = node_coefficients(b);
    let node_vol: f64 = (0..grid.dim()).map(|i| grid.spacing(i)).product();
    let mut acc = 0.0;
    for node in 0..nodes {
        let mut inner = 0.0;
        for si in 0..ca.len() {
            inner += ca[si][node] * cb[si][node];
        }
        acc += inner * psi.values[node] * node_vol;
    }
    Ok(acc)
}

/// Hodge Laplacian d delta + delta d, with the missing term at the end
/// degrees contributing zero. Symmetric positive semi-definite.
pub fn laplace_beltrami(c: &Cochain) -> Cochain {
    let grid = c.grid;
    let q = c.degree;
    let mut out = Cochain::zero(grid, q);
    if q > 0 {
        let down = codifferential(c).expect("q > 0");
        let up = exterior_derivative(&down).expect("q - 1 < dim");
        for (o, v) in out.values.iter_mut().zip(&up.values) {
            *o += v;
        }
    }
    if q < grid.dim() {
        let up = exterior_derivative(c).expect("q < dim");
        let down = codifferential(&up).expect("q + 1 > 0");
        for (o, v) in out.values.iter_mut().zip(&down.values) {
            *o += v;
        }
    }
    out
}
