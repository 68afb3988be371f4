//! Uniform tensor grid in the transformed (x, y) plane plus the time
//! discretisation.  One mesh width h serves both axes; the time step is tied
//! to h through the parabolic ratio k/h^2 and rounded down so that an integer
//! number of steps lands exactly on the maturity.

use crate::error::{Error, Result};

/// Uniform grid on [-R1, R1] x [L2, R2] with (2N+1) x (M+1) nodes.
///
/// x_i = i h for i in [-N, N]; y_j = L2 + j h for j in [0, M].  Node vectors
/// are stored row-major with x fastest: index = j (2N+1) + (i + N).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    /// Half-width of the x-interval; R1 = N h.
    pub r1: f64,
    /// Lower y-bound, strictly positive.
    pub l2: f64,
    /// Upper y-bound; R2 = L2 + M h.
    pub r2: f64,
    /// Mesh width shared by both axes.
    pub h: f64,
    /// Half node count in x.
    pub n: usize,
    /// Interval count in y.
    pub m: usize,
    /// Time step, adjusted so that n_steps * k equals the maturity.
    pub k: f64,
    /// Number of time steps to reach the maturity.
    pub n_steps: usize,
    /// Actual parabolic ratio k/h^2 after the adjustment.
    pub parabolic_ratio: f64,
}

fn near_integer(x: f64) -> Option<usize> {
    let r = x.round();
    if r >= 0.5 && (x - r).abs() <= 1e-9 * (1.0 + x.abs()) {
        Some(r as usize)
    } else {
        None
    }
}

impl Grid2D {
    /// Builds the grid; `ratio` is the requested parabolic mesh ratio k/h^2.
    ///
    /// The step count is n_steps = ceil(maturity / (ratio h^2)) and
    /// k = maturity / n_steps, so the actual ratio never exceeds the request.
    pub fn build(
        r1: f64,
        l2: f64,
        r2: f64,
        h: f64,
        ratio: f64,
        maturity: f64,
    ) -> Result<Grid2D> {
        if h <= 0.0 {
            return Err(Error::Grid(format!("mesh width must be > 0, got {h}")));
        }
        if l2 <= 0.0 {
            return Err(Error::Grid(format!("L2 must be > 0, got {l2}")));
        }
        if r2 <= l2 {
            return Err(Error::Grid(format!("R2 must exceed L2, got [{l2}, {r2}]")));
        }
        if ratio <= 0.0 {
            return Err(Error::Grid(format!("parabolic ratio must be > 0, got {ratio}")));
        }
        if maturity <= 0.0 {
            return Err(Error::Grid(format!("maturity must be > 0, got {maturity}")));
        }
        let n = near_integer(r1 / h)
            .ok_or_else(|| Error::Grid(format!("R1 = {r1} is not an integer multiple of h = {h}")))?;
        let m = near_integer((r2 - l2) / h)
            .ok_or_else(|| Error::Grid(format!("R2 - L2 = {} is not an integer multiple of h = {h}", r2 - l2)))?;
        let n_steps = ((maturity / (ratio * h * h)) - 1e-9).ceil().max(1.0) as usize;
        let k = maturity / n_steps as f64;
        Ok(Grid2D { r1, l2, r2, h, n, m, k, n_steps, parabolic_ratio: k / (h * h) })
    }

    /// Node count along x.
    #[inline]
    pub fn nx(&self) -> usize {
        2 * self.n + 1
    }

    /// Node count along y.
    #[inline]
    pub fn ny(&self) -> usize {
        self.m + 1
    }

    /// Total node count (2N+1)(M+1).
    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.nx() * self.ny()
    }

    /// x-coordinate of column i in [-N, N].
    #[inline]
    pub fn x(&self, i: isize) -> f64 {
        i as f64 * self.h
    }

    /// y-coordinate of row j in [0, M].
    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.l2 + j as f64 * self.h
    }

    /// Row-major linear index of node (i, j); checked.
    pub fn node_index(&self, i: isize, j: usize) -> Result<usize> {
        if i.unsigned_abs() > self.n || j > self.m {
            return Err(Error::IndexOutOfRange(format!(
                "(i, j) = ({i}, {j}) outside [-{}, {}] x [0, {}]",
                self.n, self.n, self.m
            )));
        }
        Ok(self.idx(i, j))
    }

    /// Inverse of [`node_index`](Self::node_index).
    pub fn node_position(&self, index: usize) -> Result<(isize, usize)> {
        if index >= self.num_nodes() {
            return Err(Error::IndexOutOfRange(format!(
                "linear index {index} outside 0..{}",
                self.num_nodes()
            )));
        }
        let j = index / self.nx();
        let i = (index % self.nx()) as isize - self.n as isize;
        Ok((i, j))
    }

    #[inline]
    pub(crate) fn idx(&self, i: isize, j: usize) -> usize {
        j * self.nx() + (i + self.n as isize) as usize
    }

    /// True on the x-Dirichlet boundary i = -N or i = N.
    #[inline]
    pub fn is_x_boundary(&self, i: isize) -> bool {
        i.unsigned_abs() == self.n
    }

    /// True on the extrapolated y-boundary j = 0 or j = M.
    #[inline]
    pub fn is_y_boundary(&self, j: usize) -> bool {
        j == 0 || j == self.m
    }

    /// Same grid with a different time step; spatial layout unchanged.
    pub(crate) fn with_time_step(&self, k: f64) -> Grid2D {
        Grid2D { k, parabolic_ratio: k / (self.h * self.h), ..self.clone() }
    }

    /// Permutation from the natural (x-fastest) node order to a y-fastest
    /// order under which the stencil operators are banded with bandwidth M+2.
    pub fn banded_permutation(&self) -> Vec<usize> {
        let mut perm = vec![0usize; self.num_nodes()];
        for j in 0..self.ny() {
            for q in 0..self.nx() {
                perm[j * self.nx() + q] = q * self.ny() + j;
            }
        }
        perm
    }

    /// Integer refinement factor h / fine.h, verifying that every node of
    /// `self` coincides with a node of `fine`.
    pub fn refinement_factor(&self, fine: &Grid2D) -> Result<usize> {
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs());
        if !(same(self.r1, fine.r1) && same(self.l2, fine.l2) && same(self.r2, fine.r2)) {
            return Err(Error::NonNested("domains differ".to_string()));
        }
        near_integer(self.h / fine.h)
            .ok_or_else(|| Error::NonNested(format!("h = {} / h_ref = {} is not an integer", self.h, fine.h)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_domain_counts() {
        let g = Grid2D::build(4.0, 0.1, 3.3, 0.4, 0.4, 0.5).unwrap();
        assert_eq!(g.n, 10);
        assert_eq!(g.m, 8);
        assert_eq!(g.nx(), 21);
        assert_eq!(g.ny(), 9);
        assert_eq!(g.num_nodes(), 189);
    }

    #[test]
    fn rejects_non_divisible_extent() {
        assert!(Grid2D::build(4.0, 0.1, 3.3, 0.3, 0.4, 0.5).is_err());
        assert!(Grid2D::build(4.0, 0.1, 3.25, 0.4, 0.4, 0.5).is_err());
    }

    #[test]
    fn rejects_degenerate_geometry() {
        assert!(Grid2D::build(4.0, 0.0, 3.3, 0.4, 0.4, 0.5).is_err());
        assert!(Grid2D::build(4.0, -0.1, 3.3, 0.4, 0.4, 0.5).is_err());
        assert!(Grid2D::build(4.0, 0.1, 3.3, 0.0, 0.4, 0.5).is_err());
        assert!(Grid2D::build(4.0, 0.1, 3.3, 0.4, -1.0, 0.5).is_err());
    }

    #[test]
    fn time_step_division() {
        let g = Grid2D::build(4.0, 0.1, 3.3, 0.1, 0.4, 0.5).unwrap();
        assert_eq!(g.n_steps, 125);
        assert!((g.k - 0.004).abs() < 1e-15);
        assert!((g.n_steps as f64 * g.k - 0.5).abs() < 1e-15);
        assert!(g.parabolic_ratio <= 0.4 + 1e-12);
    }

    #[test]
    fn node_index_corners_and_example() {
        let g = Grid2D::build(4.0, 0.1, 3.3, 0.4, 0.4, 0.5).unwrap();
        assert_eq!(g.node_index(-10, 0).unwrap(), 0);
        assert_eq!(g.node_index(10, 8).unwrap(), 188);
        assert_eq!(g.node_index(0, 1).unwrap(), 31);
        assert!(g.node_index(11, 0).is_err());
        assert!(g.node_index(0, 9).is_err());
    }

    #[test]
    fn node_index_round_trip() {
        let g = Grid2D::build(2.0, 0.5, 1.5, 0.25, 0.4, 0.5).unwrap();
        for idx in 0..g.num_nodes() {
            let (i, j) = g.node_position(idx).unwrap();
            assert_eq!(g.node_index(i, j).unwrap(), idx);
        }
        assert!(g.node_position(g.num_nodes()).is_err());
    }

    #[test]
    fn standard_sweep_nests_in_reference() {
        let fine = Grid2D::build(4.0, 0.1, 3.3, 0.025, 0.4, 0.5).unwrap();
        for (h, factor) in [(0.4, 16), (0.2, 8), (0.1, 4), (0.05, 2)] {
            let g = Grid2D::build(4.0, 0.1, 3.3, h, 0.4, 0.5).unwrap();
            assert_eq!(g.refinement_factor(&fine).unwrap(), factor);
        }
        let shifted = Grid2D::build(4.0, 0.2, 3.4, 0.05, 0.4, 0.5).unwrap();
        assert!(shifted.refinement_factor(&fine).is_err());
    }
}
