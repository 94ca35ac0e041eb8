//! Deterministic RNG, finite-difference weight generation, quadrature nodes,
//! and the empirical-order fit shared by the convergence reports.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

/// SplitMix64: tiny, seedable, identical output on every platform.
///
/// Used for randomized probes and test data so that artifacts are
/// byte-identical across runs with the same seed.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [-1, 1).
    pub fn next_symmetric(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }

    pub fn fill_symmetric(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_symmetric()).collect()
    }
}

/// 4-point Gauss-Legendre nodes and weights on [0, 1].
pub const GAUSS4: [(f64, f64); 4] = [
    (0.5 - 0.430_568_155_797_026_3, 0.173_927_422_568_726_93),
    (0.5 - 0.169_990_521_792_428_13, 0.326_072_577_431_273_05),
    (0.5 + 0.169_990_521_792_428_13, 0.326_072_577_431_273_05),
    (0.5 + 0.430_568_155_797_026_3, 0.173_927_422_568_726_93),
];

/// Finite-difference weights for the `m`-th derivative at evaluation point
/// `x0`, given sample offsets `grid` (Fornberg's recurrence).
///
/// Offsets are in units of the spacing; the caller divides by `h^m`.
pub fn fd_weights(x0: f64, grid: &[f64], m: usize) -> Vec<f64> {
    let n = grid.len();
    assert!(m < n, "need more than {m} sample points");
    // c[j][k]: weight of sample j for the k-th derivative (Fornberg 1988)
    let mut c = vec![vec![0.0f64; m + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0f64;
    let mut c4 = grid[0] - x0;
    for i in 1..n {
        let mn = m.min(i);
        let mut c2 = 1.0f64;
        let c5 = c4;
        c4 = grid[i] - x0;
        for j in 0..i {
            let c3 = grid[i] - grid[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    (0..n).map(|j| c[j][m]).collect()
}

/// Least-squares slope of ln(value) against ln(eps): the empirical
/// convergence order of a gap schedule.
///
/// Values at or below `floor` are treated as converged past measurability;
/// if everything sits at the floor the order is reported as infinite.
pub fn fitted_order(eps: &[f64], values: &[f64], floor: f64) -> f64 {
    assert_eq!(eps.len(), values.len());
    let clamped: Vec<f64> = values.iter().map(|v| v.abs().max(floor)).collect();
    if clamped.iter().all(|&v| v <= floor * (1.0 + 1e-12)) {
        return f64::INFINITY;
    }
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = clamped.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Observed order between two refinements: log2(coarse/fine) for a halved step.
pub fn refinement_order(err_coarse: f64, err_fine: f64) -> f64 {
    if err_fine == 0.0 {
        return f64::INFINITY;
    }
    (err_coarse / err_fine).abs().log2()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_weights_reproduce_standard_stencils() {
        // central first derivative, 4th order
        let w = fd_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let expect = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
        // central second derivative, 2nd order
        let w = fd_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        for (a, b) in w.iter().zip([1.0, -2.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        // midpoint cubic interpolation
        let w = fd_weights(0.5, &[-1.0, 0.0, 1.0, 2.0], 0);
        for (a, b) in w.iter().zip([-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn fd_weights_differentiate_polynomials_exactly() {
        // one-sided 4th-order first derivative at the left end
        let grid = [0.0, 1.0, 2.0, 3.0, 4.0];
        let w = fd_weights(0.0, &grid, 1);
        let f = |x: f64| 1.0 + 2.0 * x - 3.0 * x * x + 0.5 * x * x * x * x;
        let df0 = 2.0;
        let approx: f64 = grid.iter().zip(&w).map(|(x, c)| c * f(*x)).sum();
        assert!((approx - df0).abs() < 1e-12);
    }

    #[test]
    fn gauss4_integrates_degree_seven() {
        // exact for polynomials of degree <= 7 on [0,1]
        let f = |x: f64| 7.0 * x.powi(7) - x.powi(3) + 2.0;
        let exact = 7.0 / 8.0 - 0.25 + 2.0;
        let quad: f64 = GAUSS4.iter().map(|(x, w)| w * f(*x)).sum();
        assert!((quad - exact).abs() < 1e-14);
    }

    #[test]
    fn order_fit_recovers_slope() {
        let eps = [0.1, 0.05, 0.025, 0.0125];
        let vals: Vec<f64> = eps.iter().map(|e| 3.0 * e * e).collect();
        let p = fitted_order(&eps, &vals, 1e-300);
        assert!((p - 2.0).abs() < 1e-10);
    }

    #[test]
    fn order_fit_handles_converged_schedules() {
        let eps = [0.1, 0.05, 0.025];
        assert!(fitted_order(&eps, &[0.0, 0.0, 0.0], 1e-16).is_infinite());
    }

    #[test]
    fn splitmix_is_reproducible() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let x = SplitMix64::new(7).next_f64();
        assert!((0.0..1.0).contains(&x));
    }
}
