//! Scratch diagnostic: regime studies on variance-matched y-windows.

use bates_hoc::grid::Grid2D;
use bates_hoc::harness::{error_norms, fit_slope, priced};
use bates_hoc::model::ModelParams;
use bates_hoc::solver::SolverConfig;
use bates_hoc::stencil::Scheme;

fn study(label: &str, params: ModelParams, y_lo: f64, y_hi: f64) {
    let grid = Grid2D::build(4.0, y_lo, y_hi, 0.1, 0.4, 0.5).unwrap();
    let base = SolverConfig::new(grid, params, Scheme::Hoc);
    let reference = priced(&base, 0.025, 0.4).unwrap();
    let hs = [0.2, 0.1, 0.05];
    let mut l2s = Vec::new();
    let mut linfs = Vec::new();
    for &h in &hs {
        let run = priced(&base, h, 0.4).unwrap();
        let (l2, linf) = error_norms(&run.surface, &reference.surface).unwrap();
        l2s.push(l2);
        linfs.push(linf);
    }
    println!(
        "{label}: l2 slope {:.2}, linf slope {:.2}  l2 {l2s:?}",
        fit_slope(&hs, &l2s).unwrap(),
        fit_slope(&hs, &linfs).unwrap()
    );
}

fn main() {
    let v07 = ModelParams { theta: 0.04, vol_of_vol: 0.7, ..ModelParams::default() };
    study("v=0.7 y=[0.3,1.5] ", v07, 0.3, 1.5);
    let v04 = ModelParams { theta: 0.04, vol_of_vol: 0.4, ..ModelParams::default() };
    study("v=0.4 y=[0.5,2.5] ", v04, 0.5, 2.5);
    let v01 = ModelParams { theta: 0.04, vol_of_vol: 0.1, ..ModelParams::default() };
    study("v=0.1 y=[2.0,5.2] ", v01, 2.0, 5.2);
}
