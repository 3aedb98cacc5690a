//! The likelihood-ratio denominator study: frequency of the event
//! D_n ≥ e^{-nε̃²} where D_n integrates the likelihood ratio against the
//! prior restricted (by rejection) to the coefficient ball
//! {‖θ - θ₀ᵗ‖ ≤ ε̃}. Requires unit noise variance.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::spectrum::{kl_sample, KernelSpec, SpectralBasis};
use crate::tgp::{build_design, make_true_function, sample_covariates, TruthMode};
use crate::{Error, Result};

use super::{derive_seed, ExperimentConfig};

/// Arguments specific to the denominator experiment; the data-replication
/// count comes from `cfg.reps`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DenominatorArgs {
    pub n: usize,
    pub eps_tilde: f64,
    pub prior_draws: usize,
    pub k: usize,
    pub a: f64,
}

impl Default for DenominatorArgs {
    fn default() -> Self {
        Self {
            n: 400,
            eps_tilde: 0.3,
            prior_draws: 500,
            k: 4,
            a: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DenominatorStats {
    pub n: usize,
    pub eps_tilde: f64,
    pub empirical_success_freq: f64,
    pub prior_draws_used: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DenominatorCell {
    pub rep: usize,
    pub log_dn: f64,
    pub success: bool,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DenominatorExperiment {
    pub stats: DenominatorStats,
    pub cells: Vec<DenominatorCell>,
}

/// Minimum tolerated rejection acceptance rate before reporting
/// starvation.
const MIN_ACCEPTANCE: f64 = 1e-3;

fn denominator_cell(
    cfg: &ExperimentConfig,
    args: &DenominatorArgs,
    rep: usize,
) -> Result<DenominatorCell> {
    let spec = KernelSpec::new(args.a, cfg.b, cfg.sigma2)?;
    let basis = SpectralBasis::new(spec, args.k)?;
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(
        cfg.seed,
        args.n as u64,
        rep as u64,
        "denominator",
    ));
    let truth = make_true_function(
        cfg.alpha,
        (10 * args.k).max(cfg.j_tail),
        TruthMode::Deterministic,
        &mut rng,
    );
    let theta0 = truth.truncated(args.k).to_vec();

    let xs = sample_covariates(cfg.b, args.n, &mut rng);
    let design = build_design(&basis, &xs)?;
    let f0: Vec<f64> = xs.iter().map(|&x| truth.eval(&spec, x)).collect();
    // Y_i - f0(X_i) is exactly the unit-variance noise.
    let residual: Vec<f64> = (0..args.n)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    // Tail of the truth beyond the prior's truncation level, at the data.
    let theta0_vec = DVector::from_column_slice(&theta0);
    let head = design.phi() * &theta0_vec;
    let tail: Vec<f64> = f0.iter().zip(head.iter()).map(|(f, h)| f - h).collect();

    // Rejection-sample the prior onto the coefficient ball.
    let eps_sq = args.eps_tilde * args.eps_tilde;
    let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(args.prior_draws);
    let mut attempts = 0usize;
    let max_attempts = (args.prior_draws as f64 / MIN_ACCEPTANCE).ceil() as usize;
    while accepted.len() < args.prior_draws {
        if attempts >= max_attempts {
            return Err(Error::Numerical(format!(
                "rejection starvation in the denominator experiment at rep {rep}: \
                 acceptance below {MIN_ACCEPTANCE:e} after {attempts} draws; \
                 enlarge eps_tilde or reduce k"
            )));
        }
        attempts += 1;
        let theta = kl_sample(&basis, &mut rng);
        let dist_sq: f64 = theta
            .iter()
            .zip(&theta0)
            .map(|(t, t0)| (t - t0) * (t - t0))
            .sum();
        if dist_sq <= eps_sq {
            accepted.push(theta);
        }
    }
    let acceptance_rate = accepted.len() as f64 / attempts as f64;

    // log D_n via log-sum-exp of the per-draw log-likelihood ratios
    // Σ_i [g_i (Y_i - f0(X_i)) - g_i²/2], g = f - f0 at the data.
    let mut log_ratios = Vec::with_capacity(accepted.len());
    for theta in &accepted {
        let delta = DVector::from_iterator(
            args.k,
            theta.iter().zip(&theta0).map(|(t, t0)| t - t0),
        );
        let g_head = design.phi() * delta;
        let mut dot = 0.0;
        let mut norm_sq = 0.0;
        for i in 0..args.n {
            let g = g_head[i] - tail[i];
            dot += g * residual[i];
            norm_sq += g * g;
        }
        log_ratios.push(dot - 0.5 * norm_sq);
    }
    let max_lr = log_ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_dn = max_lr
        + (log_ratios.iter().map(|l| (l - max_lr).exp()).sum::<f64>()
            / log_ratios.len() as f64)
            .ln();
    let success = log_dn >= -(args.n as f64) * eps_sq;
    Ok(DenominatorCell {
        rep,
        log_dn,
        success,
        acceptance_rate,
    })
}

pub fn run_denominator_experiment(
    cfg: &ExperimentConfig,
    args: &DenominatorArgs,
) -> Result<DenominatorExperiment> {
    cfg.validate()?;
    if (cfg.sigma2 - 1.0).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "the denominator experiment requires sigma2 = 1 (unit-variance likelihood), got {}",
            cfg.sigma2
        )));
    }
    let n_eps_sq = args.n as f64 * args.eps_tilde * args.eps_tilde;
    if n_eps_sq <= 4.0 {
        return Err(Error::Config(format!(
            "need n·eps_tilde² > 4, got {n_eps_sq}"
        )));
    }
    if args.k == 0 || args.n <= args.k {
        return Err(Error::Config(format!(
            "need 1 <= k < n, got k={}, n={}",
            args.k, args.n
        )));
    }
    if args.prior_draws == 0 {
        return Err(Error::Config("prior_draws must be at least 1".into()));
    }
    if !(args.a > 0.0) {
        return Err(Error::Config(format!("a must be positive, got {}", args.a)));
    }

    let cells: Vec<DenominatorCell> = (0..cfg.reps)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&rep| denominator_cell(cfg, args, rep))
        .collect::<Result<_>>()?;
    let successes = cells.iter().filter(|c| c.success).count();
    Ok(DenominatorExperiment {
        stats: DenominatorStats {
            n: args.n,
            eps_tilde: args.eps_tilde,
            empirical_success_freq: successes as f64 / cells.len() as f64,
            prior_draws_used: args.prior_draws,
        },
        cells,
    })
}
