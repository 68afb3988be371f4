//! Integral operator of the jump part: composite Simpson quadrature over the
//! truncated x-range plus an analytic-payoff correction for the left tail,
//! applied row-wise in x for every y level.

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::model::{payoff_transformed, ModelParams};
use rayon::prelude::*;

/// Composite Simpson value of uniformly spaced samples.
///
/// Requires an odd sample count (even interval count); exact for cubics.
pub fn simpson_integrate(samples: &[f64], spacing: f64) -> Result<f64> {
    if samples.len() < 3 || samples.len() % 2 == 0 {
        return Err(Error::Quadrature(format!(
            "composite Simpson needs an odd sample count >= 3, got {}",
            samples.len()
        )));
    }
    let n = samples.len() - 1;
    let mut odd = 0.0;
    let mut even = 0.0;
    for (q, &s) in samples.iter().enumerate().take(n).skip(1) {
        if q % 2 == 1 {
            odd += s;
        } else {
            even += s;
        }
    }
    Ok(spacing / 3.0 * (samples[0] + 4.0 * odd + 2.0 * even + samples[n]))
}

/// Simpson weight of column q on a grid with n = len-1 intervals: the
/// 1, 4, 2, ..., 2, 4, 1 pattern.
#[inline]
fn simpson_weight(q: usize, n: usize) -> f64 {
    if q == 0 || q == n {
        1.0
    } else if q % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

/// Discrete integral operator: dense quadrature-weight matrix on the x-grid
/// plus the precomputed left-tail vector, both carrying the intensity lambda.
#[derive(Debug, Clone)]
pub struct JumpOperator {
    /// Dense (2N+1) x (2N+1) row-major weight matrix W; row = target node.
    weights: Vec<f64>,
    nx: usize,
    /// Left-tail contribution per target node; the right tail vanishes for
    /// the put payoff.
    pub tail_vector: Vec<f64>,
    /// Jump intensity lambda.
    pub intensity: f64,
}

impl JumpOperator {
    /// Entry W[row, col].
    #[inline]
    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.nx + col]
    }

    /// Columns of the x-grid (2N+1).
    pub fn nx(&self) -> usize {
        self.nx
    }

    /// True when lambda = 0 and the operator contributes nothing.
    pub fn is_zero(&self) -> bool {
        self.intensity == 0.0
    }
}

/// Builds the quadrature matrix with spacing h on the main x-grid and the
/// tail vector via Simpson on the adjacent, equally sized grid to the left.
pub fn build_jump_operator(grid: &Grid2D, params: &ModelParams) -> Result<JumpOperator> {
    if grid.n % 2 != 0 {
        return Err(Error::Quadrature(format!(
            "Simpson pairs need an even half node count N, got {}",
            grid.n
        )));
    }
    params.validate()?;
    let nx = grid.nx();
    let n_int = nx - 1;
    let lam = params.lambda;
    let h = grid.h;

    // density along diagonals: offsets col - row in [-2N, 2N]
    let diag: Vec<f64> = (-(n_int as isize)..=(n_int as isize))
        .map(|m| params.jump_density_logspace(m as f64 * h))
        .collect();
    let mut weights = vec![0.0; nx * nx];
    if lam > 0.0 {
        for row in 0..nx {
            for col in 0..nx {
                let d = diag[(col as isize - row as isize + n_int as isize) as usize];
                weights[row * nx + col] = lam * (h / 3.0) * simpson_weight(col, n_int) * d;
            }
        }
    }

    // left tail on [x_min - 2 R1, x_min]: payoff(z) * density(z - x_row)
    let x_min = -grid.r1;
    let mut tail_vector = vec![0.0; nx];
    if lam > 0.0 {
        let samples: Vec<f64> = (0..nx).map(|q| x_min - (n_int - q) as f64 * h).collect();
        let payoff: Vec<f64> = samples.iter().map(|&z| payoff_transformed(z)).collect();
        for (row, t) in tail_vector.iter_mut().enumerate() {
            let x_row = grid.x(row as isize - grid.n as isize);
            let integrand: Vec<f64> = samples
                .iter()
                .zip(&payoff)
                .map(|(&z, &p)| p * params.jump_density_logspace(z - x_row))
                .collect();
            *t = lam * simpson_integrate(&integrand, h)?;
        }
    }

    Ok(JumpOperator { weights, nx, tail_vector, intensity: lam })
}

/// Applies the integral operator to a nodal vector: for every y-row,
/// out = W u_row + tail.  Rows are independent and processed in parallel.
pub fn apply_jump(u: &[f64], op: &JumpOperator, grid: &Grid2D) -> Result<Vec<f64>> {
    if u.len() != grid.num_nodes() || op.nx != grid.nx() {
        return Err(Error::Dimension(format!(
            "apply_jump: u has {} entries, operator {} columns, grid {} nodes",
            u.len(),
            op.nx,
            grid.num_nodes()
        )));
    }
    let nx = op.nx;
    let mut out = vec![0.0; u.len()];
    out.par_chunks_mut(nx).zip(u.par_chunks(nx)).for_each(|(o_row, u_row)| {
        for (i, o) in o_row.iter_mut().enumerate() {
            let w_row = &op.weights[i * nx..(i + 1) * nx];
            let mut acc = 0.0;
            for (w, uu) in w_row.iter().zip(u_row) {
                acc += w * uu;
            }
            *o = acc + op.tail_vector[i];
        }
    });
    Ok(out)
}
