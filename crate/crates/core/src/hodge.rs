//! Hodge decomposition of cochains by deflated conjugate-gradient solves of
//! the degree-(q-1) and degree-(q+1) Laplacians.
//!
//! On the flat torus the harmonic space of each degree is spanned by the
//! parallel forms (one per axis set), which is what the solves deflate.

use alloc::vec::Vec;
use num_traits::Float;

use crate::cochain::{
    codifferential, exterior_derivative, l2_inner, l2_norm, laplace_beltrami, Cochain,
};
use crate::error::Error;
use crate::grid::PeriodicGrid;
use crate::solver::{conjugate_gradient, CgConfig};

/// Diagonal Gram vector of the degree-q inner product: the Hodge weight of
/// each cell, in storage order.
pub fn gram_vector(grid: &PeriodicGrid, degree: usize) -> Vec<f64> {
    let nodes = grid.node_count();
    let mut g = Vec::with_capacity(grid.cell_count(degree));
    for &set in &grid.axis_sets(degree) {
        let w = grid.hodge_weight(set);
        g.extend(core::iter::repeat(w).take(nodes));
    }
    g
}

/// L2-orthonormal basis of the discrete harmonic q-cochains on the torus:
/// one normalized parallel form per axis set. Its size is the q-th Betti
/// number binom(dim, q).
pub fn harmonic_basis(grid: &PeriodicGrid, degree: usize) -> Vec<Cochain> {
    let coeff = 1.0 / grid.volume().sqrt();
    (0..grid.set_count(degree))
        .map(|si| Cochain::parallel(*grid, degree, si, coeff))
        .collect()
}

/// The three Hodge summands of a cochain: c = d(alpha) + delta(beta) + h.
///
/// Potentials at the end degrees do not exist and are `None` (their image
/// contribution is zero there).
#[derive(Debug, Clone)]
pub struct HodgeParts {
    pub alpha: Option<Cochain>,
    pub beta: Option<Cochain>,
    pub harmonic: Cochain,
    /// CG iterations spent on the (alpha, beta) solves.
    pub iterations: (usize, usize),
    /// max of the two relative CG residuals.
    pub residual: f64,
}

impl HodgeParts {
    /// d(alpha), the exact part.
    pub fn exact_part(&self) -> Cochain {
        match &self.alpha {
            Some(a) => exterior_derivative(a).expect("alpha has degree q-1 < dim"),
            None => Cochain::zero(*self.harmonic.grid(), self.harmonic.degree()),
        }
    }

    /// delta(beta), the coexact part.
    pub fn coexact_part(&self) -> Cochain {
        match &self.beta {
            Some(b) => codifferential(b).expect("beta has degree q+1 > 0"),
            None => Cochain::zero(*self.harmonic.grid(), self.harmonic.degree()),
        }
    }
}

/// Hodge-decompose a cochain: solve the neighbouring-degree Laplacians for
/// the potentials, take the harmonic remainder, and certify ||L h|| and the
/// reassembly residual against `tol * ||c||`.
///
/// Starting CG from zero keeps each potential inside the image of the
/// matching differential (the Laplacian commutes with d and delta), which is
/// what makes the remainder genuinely harmonic.
pub fn hodge_decompose(c: &Cochain, tol: f64) -> Result<HodgeParts, Error> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive"));
    }
    let grid = *c.grid();
    let q = c.degree();
    let c_norm = l2_norm(c);
    // The harmonic certificate sees the CG residual amplified by one more
    // application of d or delta, so aim the inner solves below tol divided
    // by the Laplacian norm bound 4 * sum(1/h_i^2).
    let lap_bound: f64 = 4.0 * (0..grid.dim()).map(|i| grid.spacing(i).powi(-2)).sum::<f64>();
    let cg_tol = (0.1 * tol / lap_bound).max(5e-16);
    let max_iter = 40 * grid.node_count().max(64);

    let mut iter_a = 0usize;
    let mut iter_b = 0usize;
    let mut worst_res = 0.0f64;

    let alpha = if q > 0 {
        let rhs = codifferential(c)?;
        let deg = q - 1;
        let gram = gram_vector(&grid, deg);
        let deflate: Vec<Vec<f64>> =
            harmonic_basis(&grid, deg).into_iter().map(|h| h.into_values()).collect();
        let mut apply = |x: &[f64]| {
            let xc = Cochain::from_values(grid, deg, x.to_vec()).expect("shape fixed");
            laplace_beltrami(&xc).into_values()
        };
        let (sol, out) = conjugate_gradient(
            &mut apply,
            rhs.values(),
            Some(&gram),
            &deflate,
            CgConfig::new(cg_tol, max_iter),
        )?;
        iter_a = out.iterations;
        worst_res = worst_res.max(out.residual);
        Some(Cochain::from_values(grid, deg, sol)?)
    } else {
        None
    };

    let beta = if q < grid.dim() {
        let rhs = exterior_derivative(c)?;
        let deg = q + 1;
        let gram = gram_vector(&grid, deg);
        let deflate: Vec<Vec<f64>> =
            harmonic_basis(&grid, deg).into_iter().map(|h| h.into_values()).collect();
        let mut apply = |x: &[f64]| {
            let xc = Cochain::from_values(grid, deg, x.to_vec()).expect("shape fixed");
            laplace_beltrami(&xc).into_values()
        };
        let (sol, out) = conjugate_gradient(
            &mut apply,
            rhs.values(),
            Some(&gram),
            &deflate,
            CgConfig::new(cg_tol, max_iter),
        )?;
        iter_b = out.iterations;
        worst_res = worst_res.max(out.residual);
        Some(Cochain::from_values(grid, deg, sol)?)
    } else {
        None
    };

    let parts = HodgeParts {
        alpha,
        beta,
        harmonic: Cochain::zero(grid, q),
        iterations: (iter_a, iter_b),
        residual: worst_res,
    };
    let harmonic = c.sub(&parts.exact_part())?.sub(&parts.coexact_part())?;
    let parts = HodgeParts { harmonic, ..parts };

    // certification: the remainder must be harmonic at the requested level
    let lh = laplace_beltrami(&parts.harmonic);
    let lh_norm = l2_norm(&lh);
    if c_norm > 0.0 && lh_norm > tol * c_norm {
        return Err(Error::SolverDiverged { iterations: iter_a + iter_b, residual: lh_norm / c_norm });
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::SplitMix64;

    fn random_cochain(grid: PeriodicGrid, degree: usize, seed: u64) -> Cochain {
        let mut rng = SplitMix64::new(seed);
        let values = rng.fill_symmetric(grid.cell_count(degree));
        Cochain::from_values(grid, degree, values).unwrap()
    }

    #[test]
    fn harmonic_basis_is_orthonormal_and_harmonic() {
        for dim in [2usize, 3] {
            let grid = PeriodicGrid::unit(dim, 4).unwrap();
            for q in 0..=dim {
                let basis = harmonic_basis(&grid, q);
                for (i, a) in basis.iter().enumerate() {
                    assert!(laplace_beltrami(a).linf_norm() == 0.0);
                    for (j, b) in basis.iter().enumerate() {
                        let target = if i == j { 1.0 } else { 0.0 };
                        assert!((l2_inner(a, b).unwrap() - target).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn exact_input_stays_exact() {
        let grid = PeriodicGrid::unit(2, 16).unwrap();
        let u = random_cochain(grid, 0, 5);
        let c = exterior_derivative(&u).unwrap();
        let parts = hodge_decompose(&c, 1e-8).unwrap();
        let tol = 1e-6 * l2_norm(&c);
        assert!(l2_norm(&parts.coexact_part()) <= tol);
        assert!(l2_norm(&parts.harmonic) <= tol);
        let resid = c.sub(&parts.exact_part()).unwrap();
        assert!(l2_norm(&resid.sub(&parts.coexact_part()).unwrap().sub(&parts.harmonic).unwrap())
            <= 1e-8 * l2_norm(&c));
    }

    #[test]
    fn parallel_form_is_its_own_harmonic_part() {
        let grid = PeriodicGrid::unit(2, 8).unwrap();
        let c = Cochain::parallel(grid, 1, 0, 1.0);
        let parts = hodge_decompose(&c, 1e-10).unwrap();
        assert!(l2_norm(&parts.exact_part()) <= 1e-10);
        assert!(l2_norm(&parts.coexact_part()) <= 1e-10);
        assert!(l2_norm(&parts.harmonic.sub(&c).unwrap()) <= 1e-10);
    }

    #[test]
    fn parts_are_mutually_orthogonal_on_random_input() {
        let grid = PeriodicGrid::unit(2, 32).unwrap();
        let c = random_cochain(grid, 1, 7);
        let parts = hodge_decompose(&c, 1e-8).unwrap();
        let e = parts.exact_part();
        let x = parts.coexact_part();
        let h = &parts.harmonic;
        let scale = l2_norm(&c) * l2_norm(&c);
        assert!(l2_inner(&e, &x).unwrap().abs() <= 1e-6 * scale);
        assert!(l2_inner(&e, h).unwrap().abs() <= 1e-6 * scale);
        assert!(l2_inner(&x, h).unwrap().abs() <= 1e-6 * scale);
        // reassembly
        let back = e.add(&x).unwrap().add(h).unwrap();
        assert!(l2_norm(&back.sub(&c).unwrap()) <= 1e-8 * l2_norm(&c));
        // harmonic part sits in the parallel span
        let basis = harmonic_basis(&grid, 1);
        let mut proj = Cochain::zero(grid, 1);
        for b in &basis {
            let coeff = l2_inner(h, b).unwrap();
            proj = proj.add(&b.scaled(coeff)).unwrap();
        }
        assert!(l2_norm(&proj.sub(h).unwrap()) <= 1e-6 * l2_norm(&c));
    }

    #[test]
    fn rejects_bad_tolerance() {
        let grid = PeriodicGrid::unit(2, 8).unwrap();
        let c = Cochain::zero(grid, 1);
        assert!(hodge_decompose(&c, 0.0).is_err());
    }

    #[test]
    fn three_dimensional_decomposition() {
        let grid = PeriodicGrid::unit(3, 8).unwrap();
        let c = random_cochain(grid, 2, 9);
        let parts = hodge_decompose(&c, 1e-8).unwrap();
        let back = parts
            .exact_part()
            .add(&parts.coexact_part())
            .unwrap()
            .add(&parts.harmonic)
            .unwrap();
        assert!(l2_norm(&back.sub(&c).unwrap()) <= 1e-8 * l2_norm(&c));
    }
}
