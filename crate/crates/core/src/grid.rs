//! Flat periodic grids in dimension 2 or 3 and the cell bookkeeping for
//! staggered cochains.
//!
//! A degree-q cell is identified by an axis set (which q axes it extends
//! along, as a bitmask) and an anchor node; every axis set has one cell per
//! node, so the q-cell count is binom(dim, q) * prod(N_i).

use alloc::vec::Vec;

use crate::error::Error;

/// Discrete flat n-torus, n in {2, 3}. Copyable value type; cochains embed
/// a copy so grid compatibility is a cheap equality check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    dim: usize,
    resolution: [usize; 3],
    period: [f64; 3],
}

impl PeriodicGrid {
    /// A grid with `resolution[i]` cells and period `period[i]` along each
    /// axis. Requires all N_i >= 4 and L_i > 0.
    pub fn new(dim: usize, resolution: &[usize], period: &[f64]) -> Result<Self, Error> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidParameter("dim must be 2 or 3"));
        }
        if resolution.len() != dim || period.len() != dim {
            return Err(Error::InvalidParameter("resolution/period length must equal dim"));
        }
        let mut res = [1usize; 3];
        let mut per = [1.0f64; 3];
        for i in 0..dim {
            if resolution[i] < 4 {
                return Err(Error::InvalidParameter("resolution must be >= 4 per axis"));
            }
            if !(period[i] > 0.0) || !period[i].is_finite() {
                return Err(Error::InvalidParameter("period must be positive and finite"));
            }
            res[i] = resolution[i];
            per[i] = period[i];
        }
        Ok(Self { dim, resolution: res, period: per })
    }

    /// Unit torus with equal resolution on every axis.
    pub fn unit(dim: usize, n: usize) -> Result<Self, Error> {
        match dim {
            2 => Self::new(2, &[n, n], &[1.0, 1.0]),
            3 => Self::new(3, &[n, n, n], &[1.0, 1.0, 1.0]),
            _ => Err(Error::InvalidParameter("dim must be 2 or 3")),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self, axis: usize) -> usize {
        self.resolution[axis]
    }

    pub fn period(&self, axis: usize) -> f64 {
        self.period[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.period[axis] / self.resolution[axis] as f64
    }

    /// Total node count (= cells per axis set).
    pub fn node_count(&self) -> usize {
        self.resolution[0] * self.resolution[1] * self.resolution[2]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|i| self.period[i]).product()
    }

    /// Axis sets (bitmasks) of a given degree, ascending; ascending mask
    /// order coincides with lexicographic order of the axis tuples.
    pub fn axis_sets(&self, degree: usize) -> Vec<u8> {
        (0u8..(1 << self.dim))
            .filter(|m| m.count_ones() as usize == degree)
            .collect()
    }

    pub fn set_count(&self, degree: usize) -> usize {
        self.axis_sets(degree).len()
    }

    /// Number of degree-q cells: binom(dim, q) * node_count.
    pub fn cell_count(&self, degree: usize) -> usize {
        self.set_count(degree) * self.node_count()
    }

    /// Volume of a cell with the given axis set: prod of spacings in the set.
    pub fn cell_volume(&self, set: u8) -> f64 {
        (0..self.dim)
            .filter(|i| set & (1 << i) != 0)
            .map(|i| self.spacing(i))
            .product()
    }

    /// Hodge weight of an axis set: dual-cell volume / primal-cell volume.
    pub fn hodge_weight(&self, set: u8) -> f64 {
        let primal = self.cell_volume(set);
        let dual = self.cell_volume(self.complement(set));
        dual / primal
    }

    pub fn complement(&self, set: u8) -> u8 {
        !set & ((1 << self.dim) - 1)
    }

    /// Sign of the permutation sorting (set, complement) into (0..dim):
    /// (-1)^inversions with inversions counted across the split.
    pub fn star_sign(&self, set: u8) -> f64 {
        let comp = self.complement(set);
        let mut inversions = 0usize;
        for a in 0..self.dim {
            if set & (1 << a) == 0 {
                continue;
            }
            for b in 0..a {
                if comp & (1 << b) != 0 {
                    inversions += 1;
                }
            }
        }
        if inversions % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Sign of axis `a` inside axis set `set`: (-1)^(bits of set below a).
    pub fn boundary_sign(&self, set: u8, a: usize) -> f64 {
        let below = (set & ((1u8 << a) - 1)).count_ones();
        if below % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn node_index(&self, m: [usize; 3]) -> usize {
        (m[2] % self.resolution[2]) * self.resolution[1] * self.resolution[0]
            + (m[1] % self.resolution[1]) * self.resolution[0]
            + (m[0] % self.resolution[0])
    }

    pub fn node_coords(&self, idx: usize) -> [usize; 3] {
        let n0 = self.resolution[0];
        let n1 = self.resolution[1];
        [idx % n0, (idx / n0) % n1, idx / (n0 * n1)]
    }

    /// Node position in physical coordinates.
    pub fn node_position(&self, idx: usize) -> [f64; 3] {
        let m = self.node_coords(idx);
        [
            m[0] as f64 * self.spacing(0),
            m[1] as f64 * self.spacing(1),
            if self.dim > 2 { m[2] as f64 * self.spacing(2) } else { 0.0 },
        ]
    }

    /// Index of the node shifted by `step` along `axis`, with periodic wrap.
    pub fn shift(&self, idx: usize, axis: usize, step: isize) -> usize {
        let n0 = self.resolution[0];
        let n1 = self.resolution[1];
        let n = self.resolution[axis];
        let stride = match axis {
            0 => 1,
            1 => n0,
            _ => n0 * n1,
        };
        let pos = (idx / stride) % n;
        let new_pos = ((pos as isize + step).rem_euclid(n as isize)) as usize;
        (idx as isize + (new_pos as isize - pos as isize) * stride as isize) as usize
    }

    /// The set index (position within `axis_sets(degree)`) of a mask.
    pub fn set_index(&self, degree: usize, set: u8) -> usize {
        self.axis_sets(degree)
            .iter()
            .position(|&s| s == set)
            .expect("axis set not of requested degree")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_counts_match_binomials() {
        let g2 = PeriodicGrid::unit(2, 8).unwrap();
        assert_eq!(g2.cell_count(0), 64);
        assert_eq!(g2.cell_count(1), 128);
        assert_eq!(g2.cell_count(2), 64);
        let g3 = PeriodicGrid::unit(3, 4).unwrap();
        assert_eq!(g3.cell_count(0), 64);
        assert_eq!(g3.cell_count(1), 192);
        assert_eq!(g3.cell_count(2), 192);
        assert_eq!(g3.cell_count(3), 64);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PeriodicGrid::new(2, &[3, 8], &[1.0, 1.0]).is_err());
        assert!(PeriodicGrid::new(2, &[8, 8], &[0.0, 1.0]).is_err());
        assert!(PeriodicGrid::new(4, &[8, 8, 8, 8], &[1.0; 4]).is_err());
    }

    #[test]
    fn shift_wraps_periodically() {
        let g = PeriodicGrid::unit(2, 4).unwrap();
        let idx = g.node_index([3, 2, 0]);
        assert_eq!(g.shift(idx, 0, 1), g.node_index([0, 2, 0]));
        assert_eq!(g.shift(idx, 1, -3), g.node_index([3, 3, 0]));
        let g3 = PeriodicGrid::unit(3, 5).unwrap();
        let idx = g3.node_index([1, 4, 4]);
        assert_eq!(g3.shift(idx, 2, 2), g3.node_index([1, 4, 1]));
    }

    #[test]
    fn star_signs_give_double_dual_identity() {
        for dim in [2usize, 3] {
            let g = PeriodicGrid::unit(dim, 4).unwrap();
            for q in 0..=dim {
                for &set in &g.axis_sets(q) {
                    let sign = g.star_sign(set) * g.star_sign(g.complement(set));
                    let expect = if (q * (dim - q)) % 2 == 0 { 1.0 } else { -1.0 };
                    assert_eq!(sign, expect, "dim {dim} set {set:#b}");
                }
            }
        }
    }

    #[test]
    fn anisotropic_weights() {
        let g = PeriodicGrid::new(2, &[4, 8], &[2.0, 1.0]).unwrap();
        assert_eq!(g.spacing(0), 0.5);
        assert_eq!(g.spacing(1), 0.125);
        // x-edge weight: h2 / h1
        assert_eq!(g.hodge_weight(0b01), 0.125 / 0.5);
        assert_eq!(g.hodge_weight(0b00), 0.5 * 0.125);
        assert_eq!(g.hodge_weight(0b11), 1.0 / (0.5 * 0.125));
    }
}
