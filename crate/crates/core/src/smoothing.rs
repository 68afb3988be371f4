//! Fourth-order payoff smoothing.  The mollifier is defined through its
//! Fourier transform; the real-space kernel is obtained once by numeric
//! inversion on a fixed fine frequency grid and cached as Simpson samples
//! over its support [-3, 3] (in units of the mesh width).

use crate::grid::Grid2D;
use crate::jump::simpson_integrate;
use crate::model::payoff_transformed;
use std::sync::OnceLock;

/// Fourier transform of the smoothing kernel:
/// (sin(w/2)/(w/2))^4 [1 + 2/3 sin^2(w/2)], with the removable singularity
/// at w = 0 evaluating to 1.
pub fn phi4_hat(omega: f64) -> f64 {
    let t = 0.5 * omega;
    let sinc = if t.abs() < 1e-4 {
        let t2 = t * t;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        t.sin() / t
    };
    let s = t.sin();
    sinc.powi(4) * (1.0 + 2.0 / 3.0 * s * s)
}

// Frequency cutoff and interval count for the numeric inversion.  phi4_hat
// decays like w^-4, so the tail beyond 256 contributes < 2e-8 pointwise and
// < 1e-9 to the moments; 2^16 Simpson intervals keep the discretisation
// error below 1e-9 as well.
const OMEGA_MAX: f64 = 256.0;
const OMEGA_INTERVALS: usize = 1 << 16;

/// Real-space kernel at `s`, by quadrature of the inverse Fourier integral;
/// identically zero for |s| >= 3.
pub fn phi4_kernel(s: f64) -> f64 {
    if s.abs() >= 3.0 {
        return 0.0;
    }
    let n = OMEGA_INTERVALS + 1;
    let dw = OMEGA_MAX / OMEGA_INTERVALS as f64;
    let samples: Vec<f64> =
        (0..n).map(|q| phi4_hat(q as f64 * dw) * (q as f64 * dw * s).cos()).collect();
    simpson_integrate(&samples, dw).unwrap() / std::f64::consts::PI
}

/// Kernel samples on the Simpson grid used by the payoff convolution.
#[derive(Debug, Clone)]
pub struct SmoothingKernel {
    /// phi4 at s = -3, -3 + spacing, ..., 3.
    pub samples: Vec<f64>,
    /// Sample spacing in kernel units.
    pub spacing: f64,
}

const KERNEL_SAMPLES: usize = 61;

impl SmoothingKernel {
    /// The 61-point table over [-3, 3]; built once and cached.
    pub fn standard() -> &'static SmoothingKernel {
        static KERNEL: OnceLock<SmoothingKernel> = OnceLock::new();
        KERNEL.get_or_init(|| {
            let half = (KERNEL_SAMPLES - 1) / 2;
            let spacing = 3.0 / half as f64;
            let samples = (0..KERNEL_SAMPLES)
                .map(|q| phi4_kernel((q as isize - half as isize) as f64 * spacing))
                .collect();
            SmoothingKernel { samples, spacing }
        })
    }

    /// m-th moment of the sampled kernel by Simpson quadrature.
    pub fn moment(&self, m: u32) -> f64 {
        let half = (self.samples.len() - 1) / 2;
        let weighted: Vec<f64> = self
            .samples
            .iter()
            .enumerate()
            .map(|(q, &k)| ((q as isize - half as isize) as f64 * self.spacing).powi(m as i32) * k)
            .collect();
        simpson_integrate(&weighted, self.spacing).unwrap()
    }
}

/// Smoothed transformed payoff at a single x-coordinate for mesh width h:
/// the convolution integral collapses to one dimension because the payoff
/// does not depend on y.
pub fn smoothed_payoff(x: f64, h: f64) -> f64 {
    let kernel = SmoothingKernel::standard();
    let half = (kernel.samples.len() - 1) / 2;
    let integrand: Vec<f64> = kernel
        .samples
        .iter()
        .enumerate()
        .map(|(q, &k)| {
            let s = (q as isize - half as isize) as f64 * kernel.spacing;
            k * payoff_transformed(x - s * h)
        })
        .collect();
    simpson_integrate(&integrand, kernel.spacing).unwrap()
}

/// Nodal vector of the smoothed initial condition, constant across y-rows.
pub fn smooth_initial(grid: &Grid2D) -> Vec<f64> {
    let row: Vec<f64> = (-(grid.n as isize)..=(grid.n as isize))
        .map(|i| smoothed_payoff(grid.x(i), grid.h))
        .collect();
    replicate_rows(grid, &row)
}

/// Nodal vector of the raw (unsmoothed) transformed payoff.
pub fn raw_initial(grid: &Grid2D) -> Vec<f64> {
    let row: Vec<f64> =
        (-(grid.n as isize)..=(grid.n as isize)).map(|i| payoff_transformed(grid.x(i))).collect();
    replicate_rows(grid, &row)
}

fn replicate_rows(grid: &Grid2D, row: &[f64]) -> Vec<f64> {
    let mut u = Vec::with_capacity(grid.num_nodes());
    for _ in 0..grid.ny() {
        u.extend_from_slice(row);
    }
    u
}
