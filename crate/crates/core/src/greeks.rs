//! Delta of the priced surface from a fourth-order first derivative in the
//! asset direction, with two columns trimmed at each x-end so no one-sided
//! formulas are needed.

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::solver::SolutionSurface;

/// Nodal Delta values on the x-trimmed grid: columns i in [-N+2, N-2].
#[derive(Debug, Clone)]
pub struct DeltaSurface {
    /// Row-major values, (2N-3) per y-row.
    pub delta: Vec<f64>,
    pub grid: Grid2D,
}

impl DeltaSurface {
    /// Columns of the trimmed grid.
    pub fn nx(&self) -> usize {
        2 * self.grid.n - 3
    }

    /// Delta at trimmed node (i, j), i in [-N+2, N-2].
    pub fn delta_at(&self, i: isize, j: usize) -> f64 {
        let off = (i + self.grid.n as isize - 2) as usize;
        self.delta[j * self.nx() + off]
    }

    /// CSV export: header `x,y,S,sigma,delta`, row-major over the trimmed grid.
    pub fn write_csv<W: std::io::Write>(
        &self,
        w: &mut W,
        surface: &SolutionSurface,
    ) -> std::io::Result<()> {
        use crate::fmt::sig12;
        writeln!(w, "x,y,S,sigma,delta")?;
        let half = self.grid.n as isize;
        for j in 0..=self.grid.m {
            for i in (-half + 2)..=(half - 2) {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    sig12(self.grid.x(i)),
                    sig12(self.grid.y(j)),
                    sig12(surface.spot(i)),
                    sig12(surface.variance(j)),
                    sig12(self.delta_at(i, j)),
                )?;
            }
        }
        Ok(())
    }
}

/// dV/dS via (V_{i-2} - 8 V_{i-1} + 8 V_{i+1} - V_{i+2}) / (12 h S_i),
/// differencing along the asset index on the financial surface.
pub fn delta_surface(surface: &SolutionSurface) -> Result<DeltaSurface> {
    let grid = &surface.grid;
    if grid.n < 3 {
        return Err(Error::Grid(format!(
            "delta needs at least N = 3 columns after trimming, got N = {}",
            grid.n
        )));
    }
    let half = grid.n as isize;
    let nx_trim = 2 * grid.n - 3;
    let mut delta = Vec::with_capacity(nx_trim * grid.ny());
    for j in 0..=grid.m {
        for i in (-half + 2)..=(half - 2) {
            let d = (surface.financial_at(i - 2, j) - 8.0 * surface.financial_at(i - 1, j)
                + 8.0 * surface.financial_at(i + 1, j)
                - surface.financial_at(i + 2, j))
                / (12.0 * grid.h * surface.spot(i));
            delta.push(d);
        }
    }
    Ok(DeltaSurface { delta, grid: grid.clone() })
}
