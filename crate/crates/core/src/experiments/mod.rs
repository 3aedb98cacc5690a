//! Orchestrated Monte Carlo studies: the posterior-approximation bound,
//! design-matrix concentration, the likelihood-ratio denominator event,
//! and the contraction-rate curve, all reproducible from a single seed.
//!
//! Every randomized cell draws its RNG stream from
//! `derive_seed(master, n, rep, purpose)`, so results are independent of
//! worker count and execution order.

mod concentration;
mod denominator;
pub mod persist;
mod rate;
mod smallball;
mod w2;

pub use concentration::{run_concentration_experiment, ConcentrationCell, ConcentrationExperiment, ConcentrationRow};
pub use denominator::{
    run_denominator_experiment, DenominatorArgs, DenominatorCell, DenominatorExperiment,
    DenominatorStats,
};
pub use rate::{run_rate_experiment, ConditionChecks, RateCell, RateCurve, RateExperiment, TailEstimate};
pub use smallball::{run_smallball_experiment, SmallBallRow};
pub use w2::{run_w2_experiment, W2Cell, W2Experiment, W2Row};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Shared experiment configuration.
///
/// `m_const` is the posterior-ball radius multiplier M (the chi-square
/// term in the error bound needs M > 2); `j_tail` is the minimum length
/// of the true coefficient sequence; `mc_posterior_draws` sets the
/// per-cell posterior sample used for exceedance estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub b: f64,
    pub sigma2: f64,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub m_const: f64,
    pub seed: u64,
    pub j_tail: usize,
    pub mc_posterior_draws: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            b: 0.25,
            sigma2: 1.0,
            n_grid: vec![256, 512, 1024, 2048, 4096, 8192],
            reps: 20,
            m_const: 4.0,
            seed: 20_240_817,
            j_tail: 1000,
            mc_posterior_draws: 200,
        }
    }
}

impl ExperimentConfig {
    /// Check the config invariants, naming the offending key on failure.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::Config(format!("b must be positive, got {}", self.b)));
        }
        if self.b >= 0.5 {
            return Err(Error::Config(format!(
                "b must be below 1/2 (the smoothness constraint alpha > 1/(4(1-2b)) \
                 degenerates at b = 1/2), got b={}",
                self.b
            )));
        }
        let alpha_floor = 1.0 / (4.0 * (1.0 - 2.0 * self.b));
        if self.alpha <= alpha_floor {
            return Err(Error::Config(format!(
                "alpha must exceed 1/(4(1-2b)) = {alpha_floor} for b={}, got alpha={}",
                self.b, self.alpha
            )));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::Config(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        if self.n_grid.is_empty() {
            return Err(Error::Config("n_grid must be nonempty".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n_grid must be strictly increasing".into()));
        }
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if !(self.m_const > 0.0 && self.m_const.is_finite()) {
            return Err(Error::Config(format!("m_const must be positive, got {}", self.m_const)));
        }
        if self.j_tail == 0 {
            return Err(Error::Config("j_tail must be at least 1".into()));
        }
        if self.mc_posterior_draws == 0 {
            return Err(Error::Config("mc_posterior_draws must be at least 1".into()));
        }
        Ok(())
    }
}

/// The n-indexed tuning sequences: a_n = n^{1/(2α+1)},
/// k_n = max(2, ⌈a_n (2α/(2α+1)) ln n⌉), ε_n = n^{-α/(2α+1)} ln n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub a: f64,
    pub k: usize,
    pub eps: f64,
}

pub fn scaling_rules(n: usize, alpha: f64) -> Result<Scaling> {
    if n < 8 {
        return Err(Error::InvalidInput(format!("scaling rules need n >= 8, got {n}")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    let nf = n as f64;
    let a = nf.powf(1.0 / (2.0 * alpha + 1.0));
    let k = ((a * (2.0 * alpha / (2.0 * alpha + 1.0)) * nf.ln()).ceil() as usize).max(2);
    let eps = nf.powf(-alpha / (2.0 * alpha + 1.0)) * nf.ln();
    if k >= n {
        return Err(Error::InvalidInput(format!(
            "truncation level k_n = {k} is not below n = {n}; increase n"
        )));
    }
    Ok(Scaling { a, k, eps })
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable per-cell seed: hash(master, n, rep, purpose). Independent of
/// platform, execution order, and worker count.
pub fn derive_seed(master: u64, n: u64, rep: u64, purpose: &str) -> u64 {
    let mut tag = 0xcbf2_9ce4_8422_2325u64;
    for byte in purpose.bytes() {
        tag = (tag ^ byte as u64).wrapping_mul(0x0000_0100_0000_01B3);
    }
    let mut state = master;
    let mut out = splitmix64(&mut state);
    state ^= n;
    out ^= splitmix64(&mut state);
    state ^= rep;
    out ^= splitmix64(&mut state);
    state ^= tag;
    out ^= splitmix64(&mut state);
    out
}

/// Ordinary least squares on (log x, log y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension(format!(
            "slope fit needs equal lengths, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::InvalidInput("slope fit needs at least 3 points".into()));
    }
    if xs.iter().chain(ys).any(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(Error::InvalidInput("slope fit needs strictly positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let fitted = intercept + slope * x;
            (y - fitted) * (y - fitted)
        })
        .sum();
    let r2 = if ss_tot > 1e-300 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(SlopeFit {
        slope,
        intercept,
        r2,
    })
}

/// Mean and standard error of a slice.
pub(crate) fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_rules_reference_point() {
        let s = scaling_rules(1000, 1.0).unwrap();
        assert!((s.a - 10.0).abs() < 1e-9);
        assert_eq!(s.k, 47);
        assert!((s.eps - 0.1 * 1000f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn scaling_rules_trends() {
        let grid = [256usize, 512, 1024, 2048, 4096, 8192];
        let mut last_kn_frac = f64::INFINITY;
        let mut last_eps = f64::INFINITY;
        let mut last_ne2 = 0.0;
        for &n in &grid {
            let s = scaling_rules(n, 1.0).unwrap();
            assert!(s.k < n);
            let frac = s.k as f64 / n as f64;
            assert!(frac < last_kn_frac, "k_n/n decreasing");
            assert!(s.eps < last_eps, "eps decreasing");
            let ne2 = n as f64 * s.eps * s.eps;
            assert!(ne2 > last_ne2, "n eps^2 increasing");
            last_kn_frac = frac;
            last_eps = s.eps;
            last_ne2 = ne2;
        }
        assert!(scaling_rules(4, 1.0).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        cfg.alpha = 0.4;
        assert!(cfg.validate().is_err(), "alpha below 1/(4(1-2b)) rejected");
        cfg.alpha = 1.0;
        cfg.b = 0.5;
        assert!(cfg.validate().is_err(), "b = 1/2 rejected");
        cfg.b = 0.25;
        cfg.n_grid = vec![512, 512];
        assert!(cfg.validate().is_err(), "non-increasing grid rejected");
    }

    #[test]
    fn derived_seeds_are_stable_and_spread() {
        let s1 = derive_seed(7, 256, 3, "rate");
        assert_eq!(s1, derive_seed(7, 256, 3, "rate"));
        assert_ne!(s1, derive_seed(7, 256, 4, "rate"));
        assert_ne!(s1, derive_seed(7, 512, 3, "rate"));
        assert_ne!(s1, derive_seed(8, 256, 3, "rate"));
        assert_ne!(s1, derive_seed(7, 256, 3, "w2"));
    }

    #[test]
    fn slope_fit_oracles() {
        let xs: Vec<f64> = (1..=6).map(|i| (i * i) as f64 * 10.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.powf(-1.0 / 3.0)).collect();
        let fit = fit_loglog_slope(&xs, &ys).unwrap();
        assert!((fit.slope + 1.0 / 3.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);

        let flat = vec![2.5; 6];
        let fit = fit_loglog_slope(&xs, &flat).unwrap();
        assert!(fit.slope.abs() < 1e-12);

        // 1% multiplicative perturbation of a -1/2 power law.
        let noise = [1.01, 0.99, 1.008, 0.995, 1.002, 0.991];
        let ys: Vec<f64> = xs
            .iter()
            .zip(noise)
            .map(|(x, eps)| 2.0 * x.powf(-0.5) * eps)
            .collect();
        let fit = fit_loglog_slope(&xs, &ys).unwrap();
        assert!((fit.slope + 0.5).abs() < 0.02);

        assert!(fit_loglog_slope(&xs[..2], &ys[..2]).is_err());
        assert!(fit_loglog_slope(&[1.0, -2.0, 3.0], &[1.0, 1.0, 1.0]).is_err());
    }
}
