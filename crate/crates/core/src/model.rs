//! Bates model parameters, the log-jump law, and the transformation between
//! financial variables (S, sigma, t) and computational variables (x, y, tau).
//!
//! The computational problem is posed per unit strike: prices are scaled by
//! `strike` only when mapping back to financial units.

use crate::error::{Error, Result};

/// Choice of the value transform between the computational unknown u and the
/// financial price V.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValueTransform {
    /// u = e^{(r+lambda) tau} V / K, the reading under which the transformed
    /// equation carries no zero-order term.  Default.
    #[default]
    Consistent,
    /// u = e^{(r+lambda)} V / K with a constant factor, kept for debugging.
    Literal,
}

/// All Bates model constants.
///
/// `vol_of_vol` is the volatility of the variance process; `jump_std` is the
/// standard deviation of the log jump size.  The two are distinct parameters
/// even though some formulations reuse one symbol for both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Risk-free rate (per year).
    pub r: f64,
    /// Mean-reversion speed of the variance (per year).
    pub kappa: f64,
    /// Long-run variance level.
    pub theta: f64,
    /// Volatility of variance (per sqrt-year).
    pub vol_of_vol: f64,
    /// Correlation between the asset and variance drivers, in [-1, 1].
    pub rho: f64,
    /// Jump intensity (per year).
    pub lambda: f64,
    /// Mean of the log jump size.
    pub jump_mean: f64,
    /// Standard deviation of the log jump size.
    pub jump_std: f64,
    /// Strike K (currency units).
    pub strike: f64,
    /// Time to maturity T (years).
    pub maturity: f64,
    /// Value transform used when mapping u to V.
    pub transform: ValueTransform,
}

impl Default for ModelParams {
    /// Default simulation parameters: K=100, T=0.5, r=0.05, v=0.1, kappa=2,
    /// theta=0.01, rho=-0.5, lambda=0.2, jump law N(-0.5, 0.4^2).
    fn default() -> Self {
        ModelParams {
            r: 0.05,
            kappa: 2.0,
            theta: 0.01,
            vol_of_vol: 0.1,
            rho: -0.5,
            lambda: 0.2,
            jump_mean: -0.5,
            jump_std: 0.4,
            strike: 100.0,
            maturity: 0.5,
            transform: ValueTransform::Consistent,
        }
    }
}

/// A point in computational coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedPoint {
    /// Log-moneyness log(S/K).
    pub x: f64,
    /// Scaled variance sigma / vol_of_vol.
    pub y: f64,
    /// Time to maturity in years.
    pub tau: f64,
}

impl ModelParams {
    /// Checks all parameter invariants.
    pub fn validate(&self) -> Result<()> {
        fn req(cond: bool, msg: &str) -> Result<()> {
            if cond {
                Ok(())
            } else {
                Err(Error::InvalidParams(msg.to_string()))
            }
        }
        req(self.vol_of_vol > 0.0, "vol_of_vol must be > 0")?;
        req(self.jump_std > 0.0, "jump_std must be > 0")?;
        req(self.kappa >= 0.0, "kappa must be >= 0")?;
        req(self.lambda >= 0.0, "lambda must be >= 0")?;
        req(self.strike > 0.0, "strike must be > 0")?;
        req(self.maturity > 0.0, "maturity must be > 0")?;
        req(self.rho.abs() <= 1.0, "|rho| must be <= 1")?;
        req(self.r.is_finite() && self.theta.is_finite(), "r, theta must be finite")?;
        Ok(())
    }

    /// Whether the variance process stays strictly positive: 2 kappa theta >= v^2.
    ///
    /// The comparison carries a one-ulp-scale tolerance so that parameter
    /// sets sitting exactly on the boundary in decimal (e.g. 2*2*0.04 versus
    /// 0.4^2) classify as satisfied.
    pub fn feller_satisfied(&self) -> bool {
        let lhs = 2.0 * self.kappa * self.theta;
        let rhs = self.vol_of_vol * self.vol_of_vol;
        lhs >= rhs - 1e-12 * rhs.abs()
    }

    /// Jump compensator xi_B = e^{jump_mean + jump_std^2/2} - 1.
    ///
    /// Strictly greater than -1 for any finite jump law.
    pub fn xi_b(&self) -> f64 {
        (self.jump_mean + 0.5 * self.jump_std * self.jump_std).exp() - 1.0
    }

    /// Density of the log jump size at `z`: the substitution z = log(jump)
    /// turns the log-normal jump law into a Gaussian with mean `jump_mean`
    /// and standard deviation `jump_std`.
    pub fn jump_density_logspace(&self, z: f64) -> f64 {
        let t = (z - self.jump_mean) / self.jump_std;
        (-0.5 * t * t).exp() / ((2.0 * std::f64::consts::PI).sqrt() * self.jump_std)
    }

    /// Maps financial coordinates to computational ones:
    /// x = log(S/K), y = sigma / vol_of_vol, tau = T - t.
    pub fn to_transformed(&self, spot: f64, sigma: f64, t: f64) -> Result<TransformedPoint> {
        if spot <= 0.0 {
            return Err(Error::InvalidParams(format!("spot must be > 0, got {spot}")));
        }
        if sigma <= 0.0 {
            return Err(Error::InvalidParams(format!("variance must be > 0, got {sigma}")));
        }
        Ok(TransformedPoint {
            x: (spot / self.strike).ln(),
            y: sigma / self.vol_of_vol,
            tau: self.maturity - t,
        })
    }

    /// Maps a computational value u at time-to-maturity `tau` back to the
    /// financial price V.
    pub fn value_to_financial(&self, u: f64, tau: f64) -> f64 {
        let decay = match self.transform {
            ValueTransform::Consistent => (-(self.r + self.lambda) * tau).exp(),
            ValueTransform::Literal => (-(self.r + self.lambda)).exp(),
        };
        self.strike * decay * u
    }
}

/// Transformed put payoff max(1 - e^x, 0); lies in [0, 1) and vanishes for x >= 0.
pub fn payoff_transformed(x: f64) -> f64 {
    (1.0 - x.exp()).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(jump_mean: f64, jump_std: f64) -> ModelParams {
        ModelParams { jump_mean, jump_std, ..ModelParams::default() }
    }

    #[test]
    fn xi_b_vanishes_for_degenerate_jumps() {
        assert_eq!(params(0.0, 0.0).xi_b(), 0.0);
    }

    #[test]
    fn xi_b_closed_form_values() {
        // e^{-0.42} - 1 and e^{0.1} - 1, evaluated with extended precision
        assert_relative_eq!(params(-0.5, 0.4).xi_b(), -0.34295318018494322, epsilon = 1e-15);
        assert_relative_eq!(params(0.1, 0.0).xi_b(), 0.10517091807564762, epsilon = 1e-15);
    }

    #[test]
    fn xi_b_above_minus_one_for_random_valid_params() {
        use rand::{rngs::StdRng, Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..500 {
            let p = params(rng.gen_range(-5.0..5.0), rng.gen_range(1e-6..3.0));
            assert!(p.xi_b() > -1.0);
        }
    }

    #[test]
    fn jump_density_mode_and_tail() {
        let p = params(-0.5, 0.4);
        assert_relative_eq!(p.jump_density_logspace(-0.5), 0.99735570100358169, epsilon = 1e-15);
        let far = params(0.0, 0.4).jump_density_logspace(10.0);
        assert!(far < 1e-20);
    }

    #[test]
    fn jump_density_integrates_to_one() {
        let p = ModelParams::default();
        let n = 801;
        let lo = p.jump_mean - 10.0 * p.jump_std;
        let hi = p.jump_mean + 10.0 * p.jump_std;
        let dz = (hi - lo) / (n - 1) as f64;
        let samples: Vec<f64> =
            (0..n).map(|q| p.jump_density_logspace(lo + q as f64 * dz)).collect();
        let mass = crate::jump::simpson_integrate(&samples, dz).unwrap();
        assert!((mass - 1.0).abs() < 1e-8, "mass = {mass}");
    }

    #[test]
    fn to_transformed_basic() {
        let p = ModelParams::default();
        let at_the_money = p.to_transformed(p.strike, p.vol_of_vol, p.maturity).unwrap();
        assert_eq!(at_the_money.x, 0.0);
        assert_eq!(at_the_money.y, 1.0);
        assert_eq!(at_the_money.tau, 0.0);

        let pt = p.to_transformed(100.0, 0.01, 0.0).unwrap();
        assert_relative_eq!(pt.x, 0.0, epsilon = 1e-15);
        assert_relative_eq!(pt.y, 0.1, epsilon = 1e-15);
        assert_relative_eq!(pt.tau, 0.5, epsilon = 1e-15);

        let pt = p.to_transformed(p.strike * std::f64::consts::E, 2.0 * p.vol_of_vol, 0.0).unwrap();
        assert_relative_eq!(pt.x, 1.0, epsilon = 1e-14);
        assert_relative_eq!(pt.y, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn to_transformed_rejects_nonpositive_inputs() {
        let p = ModelParams::default();
        assert!(p.to_transformed(0.0, 0.01, 0.0).is_err());
        assert!(p.to_transformed(100.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn value_to_financial_discounting() {
        let p = ModelParams::default();
        assert_eq!(p.value_to_financial(0.0, 0.3), 0.0);
        assert_eq!(p.value_to_financial(1.0, 0.0), 100.0);
        // 100 e^{-(0.05+0.2) * 0.5}
        assert_relative_eq!(p.value_to_financial(1.0, 0.5), 88.249690258459540, epsilon = 1e-12);
    }

    #[test]
    fn payoff_values() {
        assert_eq!(payoff_transformed(0.0), 0.0);
        assert_eq!(payoff_transformed(2.0), 0.0);
        assert_relative_eq!(payoff_transformed(-1.0), 0.63212055882855768, epsilon = 1e-15);
    }

    #[test]
    fn payoff_round_trip_at_expiry() {
        let p = ModelParams::default();
        for &x in &[-2.0f64, -0.7, -0.1, 0.0, 0.4, 1.5] {
            let spot = p.strike * x.exp();
            let direct = (p.strike - spot).max(0.0);
            let via_transform = p.value_to_financial(payoff_transformed(x), 0.0);
            assert_relative_eq!(via_transform, direct, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn feller_regimes() {
        // theta = 0.04 with v in {0.7, 0.4, 0.1}: violated, boundary, satisfied
        let mk = |v: f64| ModelParams { theta: 0.04, vol_of_vol: v, ..ModelParams::default() };
        assert!(!mk(0.7).feller_satisfied());
        assert!(mk(0.4).feller_satisfied());
        assert!(mk(0.1).feller_satisfied());
    }

    #[test]
    fn validate_rejects_bad_params() {
        assert!(ModelParams::default().validate().is_ok());
        assert!(ModelParams { vol_of_vol: 0.0, ..Default::default() }.validate().is_err());
        assert!(ModelParams { jump_std: 0.0, ..Default::default() }.validate().is_err());
        assert!(ModelParams { rho: -1.2, ..Default::default() }.validate().is_err());
        assert!(ModelParams { strike: -5.0, ..Default::default() }.validate().is_err());
        assert!(ModelParams { maturity: 0.0, ..Default::default() }.validate().is_err());
        assert!(ModelParams { lambda: -0.1, ..Default::default() }.validate().is_err());
    }
}
