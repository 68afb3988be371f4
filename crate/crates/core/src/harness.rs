//! Experiment driver: nodewise error norms against a fine reference surface,
//! mesh-refinement studies for prices and Delta, the parabolic-ratio
//! stability sweep, the variance-regime study, and the Delta-neutral hedge
//! comparison.  All reports are deterministic given the configuration.

use crate::error::{Error, Result};
use crate::fmt::sig12;
use crate::greeks::{delta_surface, DeltaSurface};
use crate::grid::Grid2D;
use crate::model::ModelParams;
use crate::solver::{price_surface, SolutionSurface, SolverConfig};
use crate::stencil::Scheme;
use rayon::prelude::*;
use std::io::Write;
use std::time::Instant;

/// One mesh width of a refinement study.
#[derive(Debug, Clone, Copy)]
pub struct ErrorRow {
    pub h: f64,
    pub dof: usize,
    pub l2: f64,
    pub linf: f64,
    /// Seconds spent in assembly + factorisation + marching.
    pub wall_time: f64,
}

/// Refinement study rows plus least-squares convergence slopes.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub scheme: Scheme,
    pub rows: Vec<ErrorRow>,
    /// None when fewer than two rows make a fit degenerate.
    pub slope_l2: Option<f64>,
    pub slope_linf: Option<f64>,
}

impl ErrorReport {
    /// CSV: `h,dof,l2_error,linf_error,wall_time_s`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "h,dof,l2_error,linf_error,wall_time_s")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                sig12(row.h),
                row.dof,
                sig12(row.l2),
                sig12(row.linf),
                sig12(row.wall_time)
            )?;
        }
        Ok(())
    }
}

/// Least-squares slope of log(err) against log(h); None for degenerate fits.
pub fn fit_slope(hs: &[f64], errs: &[f64]) -> Option<f64> {
    if hs.len() != errs.len() || hs.len() < 2 {
        return None;
    }
    if errs.iter().any(|&e| e <= 0.0) {
        return None;
    }
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// l2 and max errors of a coarse surface against a nested reference, in
/// financial price units over all coincident nodes; the l2 norm carries the
/// grid scaling sqrt(h^2 sum e^2).
pub fn error_norms(coarse: &SolutionSurface, reference: &SolutionSurface) -> Result<(f64, f64)> {
    let m = coarse.grid.refinement_factor(&reference.grid)? as isize;
    let mut sum_sq = 0.0;
    let mut worst = 0.0f64;
    for j in 0..=coarse.grid.m {
        for i in -(coarse.grid.n as isize)..=(coarse.grid.n as isize) {
            let e = coarse.financial_at(i, j) - reference.financial_at(i * m, j * m as usize);
            sum_sq += e * e;
            worst = worst.max(e.abs());
        }
    }
    Ok((coarse.grid.h * sum_sq.sqrt(), worst))
}

/// Same norms for Delta surfaces over the coarse trimmed nodes (which always
/// lie inside the reference trimmed set).
pub fn delta_error_norms(coarse: &DeltaSurface, reference: &DeltaSurface) -> Result<(f64, f64)> {
    let m = coarse.grid.refinement_factor(&reference.grid)? as isize;
    let half = coarse.grid.n as isize;
    let mut sum_sq = 0.0;
    let mut worst = 0.0f64;
    for j in 0..=coarse.grid.m {
        for i in (-half + 2)..=(half - 2) {
            let e = coarse.delta_at(i, j) - reference.delta_at(i * m, j * m as usize);
            sum_sq += e * e;
            worst = worst.max(e.abs());
        }
    }
    Ok((coarse.grid.h * sum_sq.sqrt(), worst))
}

/// A priced surface with its mesh width and solve time.
pub struct TimedSurface {
    pub h: f64,
    pub surface: SolutionSurface,
    pub seconds: f64,
}

fn rebuild(base: &SolverConfig, h: f64, ratio: f64) -> Result<SolverConfig> {
    let g = &base.grid;
    let grid = Grid2D::build(g.r1, g.l2, g.r2, h, ratio, base.params.maturity)?;
    Ok(SolverConfig { grid, ..base.clone() })
}

/// Prices on the base domain at mesh width `h` and ratio `ratio`, timed
/// around assembly, factorisation and marching.
pub fn priced(base: &SolverConfig, h: f64, ratio: f64) -> Result<TimedSurface> {
    let cfg = rebuild(base, h, ratio)?;
    let start = Instant::now();
    let surface = price_surface(&cfg)?;
    Ok(TimedSurface { h, surface, seconds: start.elapsed().as_secs_f64() })
}

/// Sequentially prices every mesh width of a sweep, keeping the timing
/// column meaningful.
pub fn sweep(base: &SolverConfig, h_set: &[f64], ratio: f64) -> Result<Vec<TimedSurface>> {
    h_set.iter().map(|&h| priced(base, h, ratio)).collect()
}

/// Assembles an error report from already-priced sweep surfaces.
pub fn report_from_surfaces(
    runs: &[TimedSurface],
    reference: &SolutionSurface,
    scheme: Scheme,
) -> Result<ErrorReport> {
    let mut rows = Vec::with_capacity(runs.len());
    for run in runs {
        let (l2, linf) = error_norms(&run.surface, reference)?;
        rows.push(ErrorRow {
            h: run.h,
            dof: run.surface.grid.num_nodes(),
            l2,
            linf,
            wall_time: run.seconds,
        });
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let slope_l2 = fit_slope(&hs, &rows.iter().map(|r| r.l2).collect::<Vec<_>>());
    let slope_linf = fit_slope(&hs, &rows.iter().map(|r| r.linf).collect::<Vec<_>>());
    Ok(ErrorReport { scheme, rows, slope_l2, slope_linf })
}

/// Delta-error analogue of [`report_from_surfaces`].
pub fn delta_report_from_surfaces(
    runs: &[TimedSurface],
    reference: &SolutionSurface,
    scheme: Scheme,
) -> Result<ErrorReport> {
    let d_ref = delta_surface(reference)?;
    let mut rows = Vec::with_capacity(runs.len());
    for run in runs {
        let d = delta_surface(&run.surface)?;
        let (l2, linf) = delta_error_norms(&d, &d_ref)?;
        rows.push(ErrorRow {
            h: run.h,
            dof: run.surface.grid.num_nodes(),
            l2,
            linf,
            wall_time: run.seconds,
        });
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let slope_l2 = fit_slope(&hs, &rows.iter().map(|r| r.l2).collect::<Vec<_>>());
    let slope_linf = fit_slope(&hs, &rows.iter().map(|r| r.linf).collect::<Vec<_>>());
    Ok(ErrorReport { scheme, rows, slope_l2, slope_linf })
}

/// Mesh refinement study: prices at every h in `h_set` and at `h_ref` with
/// identical physical parameters, then reports errors and fitted slopes.
pub fn convergence_study(
    base: &SolverConfig,
    h_set: &[f64],
    h_ref: f64,
) -> Result<ErrorReport> {
    let ratio = base.grid.parabolic_ratio;
    let reference = priced(base, h_ref, ratio)?;
    let runs = sweep(base, h_set, ratio)?;
    report_from_surfaces(&runs, &reference.surface, base.scheme)
}

/// Delta refinement study over the same sweep.
pub fn delta_convergence_study(
    base: &SolverConfig,
    h_set: &[f64],
    h_ref: f64,
) -> Result<ErrorReport> {
    let ratio = base.grid.parabolic_ratio;
    let reference = priced(base, h_ref, ratio)?;
    let runs = sweep(base, h_set, ratio)?;
    delta_report_from_surfaces(&runs, &reference.surface, base.scheme)
}

/// l2-errors over a (parabolic ratio, mesh width) sweep with blow-up flags.
#[derive(Debug, Clone)]
pub struct StabilityTable {
    pub ratios: Vec<f64>,
    pub h_set: Vec<f64>,
    /// l2\[ri\]\[hi\]; NaN where the run blew up.
    pub l2: Vec<Vec<f64>>,
    pub blow_up: Vec<Vec<bool>>,
}

impl StabilityTable {
    /// CSV: `ratio,h,l2_error,blow_up`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "ratio,h,l2_error,blow_up")?;
        for (ri, &ratio) in self.ratios.iter().enumerate() {
            for (hi, &h) in self.h_set.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{}",
                    sig12(ratio),
                    sig12(h),
                    if self.blow_up[ri][hi] { "nan".to_string() } else { sig12(self.l2[ri][hi]) },
                    u8::from(self.blow_up[ri][hi])
                )?;
            }
        }
        Ok(())
    }
}

/// Runs every (ratio, h) cell against one fixed reference computed at
/// `h_ref` with ratio 0.4.  Non-finite blow-ups are recorded, not errors;
/// cells run in parallel.
pub fn stability_sweep(
    base: &SolverConfig,
    ratios: &[f64],
    h_set: &[f64],
    h_ref: f64,
) -> Result<StabilityTable> {
    let reference = priced(base, h_ref, 0.4)?.surface;
    stability_sweep_with_reference(base, ratios, h_set, &reference)
}

/// [`stability_sweep`] against an already-priced reference surface.
pub fn stability_sweep_with_reference(
    base: &SolverConfig,
    ratios: &[f64],
    h_set: &[f64],
    reference: &SolutionSurface,
) -> Result<StabilityTable> {
    let cells: Vec<(usize, usize)> = (0..ratios.len())
        .flat_map(|ri| (0..h_set.len()).map(move |hi| (ri, hi)))
        .collect();
    let results: Vec<Result<(usize, usize, f64, bool)>> = cells
        .par_iter()
        .map(|&(ri, hi)| {
            match priced(base, h_set[hi], ratios[ri]) {
                Ok(run) => {
                    let (l2, _) = error_norms(&run.surface, reference)?;
                    Ok((ri, hi, l2, false))
                }
                Err(Error::NonFinite { .. }) => Ok((ri, hi, f64::NAN, true)),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut l2 = vec![vec![0.0; h_set.len()]; ratios.len()];
    let mut blow_up = vec![vec![false; h_set.len()]; ratios.len()];
    for res in results {
        let (ri, hi, e, b) = res?;
        l2[ri][hi] = e;
        blow_up[ri][hi] = b;
    }
    Ok(StabilityTable { ratios: ratios.to_vec(), h_set: h_set.to_vec(), l2, blow_up })
}

/// One variance regime of the robustness study.
#[derive(Debug, Clone)]
pub struct FellerRegime {
    pub theta: f64,
    pub vol_of_vol: f64,
    pub feller: bool,
    pub report: ErrorReport,
}

/// The three (theta, vol-of-vol) regimes around the positivity condition:
/// (0.04, 0.7) violated, (0.04, 0.4) boundary, (0.04, 0.1) satisfied.
pub const FELLER_REGIMES: [(f64, f64); 3] = [(0.04, 0.7), (0.04, 0.4), (0.04, 0.1)];

/// Refinement study per variance regime, other parameters unchanged; the
/// regimes run concurrently.
pub fn feller_study(
    base: &SolverConfig,
    h_set: &[f64],
    h_ref: f64,
) -> Result<Vec<FellerRegime>> {
    FELLER_REGIMES
        .par_iter()
        .map(|&(theta, vol_of_vol)| {
            let params = ModelParams { theta, vol_of_vol, ..base.params };
            let cfg = SolverConfig { params, ..base.clone() };
            let report = convergence_study(&cfg, h_set, h_ref)?;
            Ok(FellerRegime { theta, vol_of_vol, feller: params.feller_satisfied(), report })
        })
        .collect()
}

/// CSV for the regime study: one row per (regime, h).
pub fn write_feller_csv<W: Write>(regimes: &[FellerRegime], w: &mut W) -> std::io::Result<()> {
    writeln!(w, "theta,vol_of_vol,feller,h,dof,l2_error,linf_error,wall_time_s")?;
    for regime in regimes {
        for row in &regime.report.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                sig12(regime.theta),
                sig12(regime.vol_of_vol),
                u8::from(regime.feller),
                sig12(row.h),
                row.dof,
                sig12(row.l2),
                sig12(row.linf),
                sig12(row.wall_time)
            )?;
        }
    }
    Ok(())
}

/// Portfolio percentage errors per mesh width and bump direction.
#[derive(Debug, Clone)]
pub struct HedgeReport {
    pub bump_fraction: f64,
    /// Evaluation point in transformed coordinates (log-moneyness, scaled variance).
    pub eval_x: f64,
    pub eval_y: f64,
    pub rows: Vec<HedgeRow>,
}

/// One mesh width of the hedge comparison.
#[derive(Debug, Clone, Copy)]
pub struct HedgeRow {
    pub h: f64,
    pub hoc_up: f64,
    pub hoc_down: f64,
    pub fd2_up: f64,
    pub fd2_down: f64,
}

impl HedgeReport {
    /// CSV: `h,hoc_up,hoc_down,fd2_up,fd2_down` (percentage errors).
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "h,hoc_up,hoc_down,fd2_up,fd2_down")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                sig12(row.h),
                sig12(row.hoc_up),
                sig12(row.hoc_down),
                sig12(row.fd2_up),
                sig12(row.fd2_down)
            )?;
        }
        Ok(())
    }
}

/// Price at log-moneyness `x` on y-row `j` by cubic interpolation through
/// the four surrounding columns.
fn interp_price(surface: &SolutionSurface, j: usize, x: f64) -> Result<f64> {
    let grid = &surface.grid;
    let t = x / grid.h;
    let i0 = t.floor() as isize;
    let (lo, hi) = (i0 - 1, i0 + 2);
    if lo < -(grid.n as isize) || hi > grid.n as isize {
        return Err(Error::IndexOutOfRange(format!(
            "interpolation stencil for x = {x} leaves the grid"
        )));
    }
    let mut acc = 0.0;
    for a in lo..=hi {
        let mut weight = 1.0;
        for b in lo..=hi {
            if a != b {
                weight *= (x - grid.x(b)) / (grid.x(a) - grid.x(b));
            }
        }
        acc += weight * surface.financial_at(a, j);
    }
    Ok(acc)
}

fn nearest_row(grid: &Grid2D, y: f64) -> usize {
    (((y - grid.l2) / grid.h).round().max(0.0) as usize).min(grid.m)
}

struct HedgeLeg {
    up: f64,
    down: f64,
}

/// Portfolio value P - Delta S at the at-the-money node, revalued after
/// bumping the spot by +-bump.
fn hedge_leg(surface: &SolutionSurface, bump: f64) -> Result<HedgeLeg> {
    let params = &surface.params;
    let y_eval = params.theta / params.vol_of_vol;
    let j = nearest_row(&surface.grid, y_eval);
    let deltas = delta_surface(surface)?;
    let delta = deltas.delta_at(0, j);
    let spot = surface.spot(0);
    let revalue = |factor: f64| -> Result<f64> {
        let bumped_spot = spot * factor;
        let x = (bumped_spot / params.strike).ln();
        Ok(interp_price(surface, j, x)? - delta * bumped_spot)
    };
    Ok(HedgeLeg { up: revalue(1.0 + bump)?, down: revalue(1.0 - bump)? })
}

/// Hedge comparison from already-priced sweeps; the two sweeps must cover
/// the same mesh widths.
pub fn hedge_report_from_surfaces(
    hoc_runs: &[TimedSurface],
    hoc_ref: &SolutionSurface,
    fd2_runs: &[TimedSurface],
    fd2_ref: &SolutionSurface,
    bump_fraction: f64,
) -> Result<HedgeReport> {
    if bump_fraction < 0.0 {
        return Err(Error::InvalidParams("bump fraction must be >= 0".into()));
    }
    if hoc_runs.len() != fd2_runs.len()
        || hoc_runs.iter().zip(fd2_runs).any(|(a, b)| a.h != b.h)
    {
        return Err(Error::Dimension("hedge sweeps cover different mesh widths".into()));
    }
    let pct = |ours: f64, theirs: f64| (ours - theirs).abs() / theirs.abs() * 100.0;
    let hoc_ref_leg = hedge_leg(hoc_ref, bump_fraction)?;
    let fd2_ref_leg = hedge_leg(fd2_ref, bump_fraction)?;
    let mut rows = Vec::with_capacity(hoc_runs.len());
    for (hoc, fd2) in hoc_runs.iter().zip(fd2_runs) {
        let hoc_leg = hedge_leg(&hoc.surface, bump_fraction)?;
        let fd2_leg = hedge_leg(&fd2.surface, bump_fraction)?;
        rows.push(HedgeRow {
            h: hoc.h,
            hoc_up: pct(hoc_leg.up, hoc_ref_leg.up),
            hoc_down: pct(hoc_leg.down, hoc_ref_leg.down),
            fd2_up: pct(fd2_leg.up, fd2_ref_leg.up),
            fd2_down: pct(fd2_leg.down, fd2_ref_leg.down),
        });
    }
    let params = &hoc_ref.params;
    let grid = &hoc_ref.grid;
    let eval_y = grid.y(nearest_row(grid, params.theta / params.vol_of_vol));
    Ok(HedgeReport { bump_fraction, eval_x: 0.0, eval_y, rows })
}

/// Builds the Delta-neutral portfolio on each grid and on the reference
/// grid, revalues after the spot moves by the bump fraction in both
/// directions, and reports percentage errors against the reference, for the
/// compact scheme and the baseline.
pub fn hedge_experiment(
    base: &SolverConfig,
    h_set: &[f64],
    h_ref: f64,
    bump_fraction: f64,
) -> Result<HedgeReport> {
    let ratio = base.grid.parabolic_ratio;
    let scheme_cfg = |scheme: Scheme| {
        let mut c = SolverConfig::new(base.grid.clone(), base.params, scheme);
        c.dirichlet = base.dirichlet;
        c.y_closure = base.y_closure;
        c.mu = base.mu;
        c
    };
    let hoc_cfg = scheme_cfg(Scheme::Hoc);
    let fd2_cfg = scheme_cfg(Scheme::SecondOrder);
    let hoc_ref = priced(&hoc_cfg, h_ref, ratio)?;
    let fd2_ref = priced(&fd2_cfg, h_ref, ratio)?;
    let hoc_runs = sweep(&hoc_cfg, h_set, ratio)?;
    let fd2_runs = sweep(&fd2_cfg, h_set, ratio)?;
    hedge_report_from_surfaces(
        &hoc_runs,
        &hoc_ref.surface,
        &fd2_runs,
        &fd2_ref.surface,
        bump_fraction,
    )
}
