//! The contraction-rate study: posterior-mean L²_ρ error and posterior
//! exceedance probability along an n-grid with a_n, k_n, ε_n from the
//! scaling rules, plus the per-cell Wasserstein/concentration statistics
//! needed to cross-check the error decomposition.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{an_event_check, truncation_tail_mc, ProbabilityEstimate};
use crate::gaussmetrics::{w2_commuting, GaussianMeasure};
use crate::spectrum::{tail_length_for, KernelSpec, SpectralBasis};
use crate::tgp::{
    build_design, l2rho_error, make_true_function, posterior, posterior_sample, rkhs_norm,
    sample_covariates, TrueFunction, TruthMode,
};
use crate::{Error, Result};

use super::{derive_seed, fit_loglog_slope, mean_stderr, scaling_rules, ExperimentConfig, SlopeFit};

/// One (n, rep) cell of the rate experiment.
#[derive(Debug, Clone, Serialize)]
pub struct RateCell {
    pub n: usize,
    pub rep: usize,
    pub a: f64,
    pub k: usize,
    pub eps: f64,
    /// Posterior-mean error ‖θ̃ - θ₀‖ with the fixed truth tail included.
    pub error: f64,
    /// Posterior mass outside the M·ε_n ball around the truth.
    pub exceedance: f64,
    /// Squared W2 distance to the limit Gaussian N(θ₀ᵗ, σ²/n·I).
    pub w2_sq: f64,
    pub an_holds: bool,
    pub an_deviation: f64,
}

/// Deterministic per-n diagnostics of the rate theorem's side conditions,
/// each expressed as a ratio that should fall below one asymptotically.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionChecks {
    pub n: usize,
    /// ‖Λ⁻¹‖₂ / (n/4).
    pub a1_ratio: f64,
    /// L² k ln k / n.
    pub a2_ratio: f64,
    /// max{k, ‖θ₀ᵗ‖²_H} / (n ε²).
    pub c1_ratio: f64,
    /// Σ_{j>k} θ₀ⱼ² / ε².
    pub c2_ratio: f64,
}

/// Per-n Monte Carlo estimate of the prior truncation tail
/// Π(‖f - fᵗ‖ > M ε_n).
#[derive(Debug, Clone, Serialize)]
pub struct TailEstimate {
    pub n: usize,
    pub estimate: ProbabilityEstimate,
}

/// Aggregated error-versus-n curve.
#[derive(Debug, Clone, Serialize)]
pub struct RateCurve {
    pub n_values: Vec<usize>,
    pub a_values: Vec<f64>,
    pub k_values: Vec<usize>,
    pub eps_values: Vec<f64>,
    pub mean_error: Vec<f64>,
    pub stderr_error: Vec<f64>,
    pub mean_exceedance: Vec<f64>,
    /// Present once the grid has at least three points.
    pub slope_fit: Option<SlopeFit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateExperiment {
    pub cells: Vec<RateCell>,
    pub curve: RateCurve,
    pub condition_checks: Vec<ConditionChecks>,
    pub truncation_tail: Vec<TailEstimate>,
}

fn rate_cell(cfg: &ExperimentConfig, n: usize, rep: usize) -> Result<RateCell> {
    let scaling = scaling_rules(n, cfg.alpha)?;
    let spec = KernelSpec::new(scaling.a, cfg.b, cfg.sigma2)?;
    let basis = SpectralBasis::new(spec, scaling.k)?;
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(cfg.seed, n as u64, rep as u64, "rate"));
    let truth = make_true_function(
        cfg.alpha,
        (10 * scaling.k).max(cfg.j_tail),
        TruthMode::Deterministic,
        &mut rng,
    );

    let xs = sample_covariates(cfg.b, n, &mut rng);
    let design = build_design(&basis, &xs)?;
    let sigma = cfg.sigma2.sqrt();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let noise: f64 = StandardNormal.sample(&mut rng);
            truth.eval(&spec, x) + sigma * noise
        })
        .collect();
    let post = posterior(&design, &ys, &basis)
        .map_err(|e| Error::Numerical(format!("posterior solve failed at n={n}, rep={rep}: {e}")))?;

    let error = l2rho_error(post.theta_tilde().as_slice(), &truth, scaling.k);
    let threshold = cfg.m_const * scaling.eps;
    let mut hits = 0usize;
    for _ in 0..cfg.mc_posterior_draws {
        let draw = posterior_sample(&post, &mut rng);
        if l2rho_error(&draw, &truth, scaling.k) > threshold {
            hits += 1;
        }
    }
    let exceedance = hits as f64 / cfg.mc_posterior_draws as f64;

    let an = an_event_check(&design);
    let q_t = GaussianMeasure::new(post.theta_tilde().clone(), post.sigma_tilde().clone())?;
    let q_a = GaussianMeasure::isotropic(
        DVector::from_column_slice(truth.truncated(scaling.k)),
        cfg.sigma2 / n as f64,
    )?;
    let w2 = w2_commuting(&q_t, &q_a)?;

    Ok(RateCell {
        n,
        rep,
        a: scaling.a,
        k: scaling.k,
        eps: scaling.eps,
        error,
        exceedance,
        w2_sq: w2 * w2,
        an_holds: an.holds,
        an_deviation: an.deviation,
    })
}

fn condition_checks(cfg: &ExperimentConfig, n: usize, truth: &TrueFunction) -> Result<ConditionChecks> {
    let scaling = scaling_rules(n, cfg.alpha)?;
    let spec = KernelSpec::new(scaling.a, cfg.b, cfg.sigma2)?;
    let basis = SpectralBasis::new(spec, scaling.k)?;
    let nf = n as f64;
    let lambda_inv_norm = (-basis.log_lambdas()[scaling.k - 1]).exp();
    let l = crate::spectrum::supnorm_bound(&spec, scaling.k);
    let h2 = rkhs_norm(truth.truncated(scaling.k), &basis).powi(2);
    let ne2 = nf * scaling.eps * scaling.eps;
    Ok(ConditionChecks {
        n,
        a1_ratio: lambda_inv_norm / (nf / 4.0),
        a2_ratio: l * l * scaling.k as f64 * (scaling.k as f64).ln() / nf,
        c1_ratio: (scaling.k as f64).max(h2) / ne2,
        c2_ratio: truth.tail_sq(scaling.k) / (scaling.eps * scaling.eps),
    })
}

pub fn run_rate_experiment(cfg: &ExperimentConfig) -> Result<RateExperiment> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.reps).map(move |rep| (n, rep)))
        .collect();
    let cells: Vec<RateCell> = jobs
        .par_iter()
        .map(|&(n, rep)| rate_cell(cfg, n, rep))
        .collect::<Result<_>>()?;

    let mut n_values = Vec::new();
    let mut a_values = Vec::new();
    let mut k_values = Vec::new();
    let mut eps_values = Vec::new();
    let mut mean_error = Vec::new();
    let mut stderr_error = Vec::new();
    let mut mean_exceedance = Vec::new();
    let mut checks = Vec::new();
    let mut tails = Vec::new();
    for &n in &cfg.n_grid {
        let group: Vec<&RateCell> = cells.iter().filter(|c| c.n == n).collect();
        let errs: Vec<f64> = group.iter().map(|c| c.error).collect();
        let excs: Vec<f64> = group.iter().map(|c| c.exceedance).collect();
        let (me, se) = mean_stderr(&errs);
        let (mx, _) = mean_stderr(&excs);
        let first = group[0];
        n_values.push(n);
        a_values.push(first.a);
        k_values.push(first.k);
        eps_values.push(first.eps);
        mean_error.push(me);
        stderr_error.push(se);
        mean_exceedance.push(mx);

        let scaling = scaling_rules(n, cfg.alpha)?;
        let spec = KernelSpec::new(scaling.a, cfg.b, cfg.sigma2)?;
        let mut rng =
            ChaCha12Rng::seed_from_u64(derive_seed(cfg.seed, n as u64, 0, "rate-truth"));
        let truth = make_true_function(
            cfg.alpha,
            (10 * scaling.k).max(cfg.j_tail),
            TruthMode::Deterministic,
            &mut rng,
        );
        checks.push(condition_checks(cfg, n, &truth)?);

        // Prior truncation tail Π(Σ_{j>k} σ²λ_j Z_j² > (Mε)²), with the
        // infinite sum cut where the geometric remainder is negligible.
        let m_eps = cfg.m_const * scaling.eps;
        let j_cut = tail_length_for(&spec, scaling.k, m_eps);
        let tail_lambdas: Vec<f64> = (scaling.k + 1..=j_cut.max(scaling.k + 1))
            .map(|j| crate::spectrum::eigenvalue(&spec, j))
            .collect();
        let mut tail_rng =
            ChaCha12Rng::seed_from_u64(derive_seed(cfg.seed, n as u64, 0, "rate-tail"));
        tails.push(TailEstimate {
            n,
            estimate: truncation_tail_mc(&tail_lambdas, cfg.sigma2, m_eps, 4000, &mut tail_rng),
        });
    }

    let slope_fit = if n_values.len() >= 3 {
        let ns: Vec<f64> = n_values.iter().map(|&n| n as f64).collect();
        Some(fit_loglog_slope(&ns, &mean_error)?)
    } else {
        None
    };
    Ok(RateExperiment {
        cells,
        curve: RateCurve {
            n_values,
            a_values,
            k_values,
            eps_values,
            mean_error,
            stderr_error,
            mean_exceedance,
            slope_fit,
        },
        condition_checks: checks,
        truncation_tail: tails,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            n_grid: vec![64, 128, 256],
            reps: 3,
            mc_posterior_draws: 50,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn noiseless_zero_function_recovers_zero() {
        // Zero truth and σ² = 1e-12: the posterior mean collapses to zero.
        use crate::tgp::TrueFunction;
        let n = 128usize;
        let sigma2 = 1e-12;
        let scaling = scaling_rules(n, 1.0).unwrap();
        let spec = KernelSpec::new(scaling.a, 0.25, sigma2).unwrap();
        let basis = SpectralBasis::new(spec, scaling.k).unwrap();
        let truth = TrueFunction::from_coefficients(1.0, vec![0.0; 10 * scaling.k]);
        for rep in 0..3u64 {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(9, n as u64, rep, "rate"));
            let xs = sample_covariates(0.25, n, &mut rng);
            let design = build_design(&basis, &xs).unwrap();
            let ys: Vec<f64> = xs
                .iter()
                .map(|_| {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    sigma2.sqrt() * noise
                })
                .collect();
            let post = posterior(&design, &ys, &basis).unwrap();
            let error = l2rho_error(post.theta_tilde().as_slice(), &truth, scaling.k);
            assert!(error < 1e-5, "error={error}");
        }
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let cfg = small_cfg();
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool8 = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
        let r1 = pool1.install(|| run_rate_experiment(&cfg)).unwrap();
        let r8 = pool8.install(|| run_rate_experiment(&cfg)).unwrap();
        let s1 = serde_json::to_string(&r1).unwrap();
        let s8 = serde_json::to_string(&r8).unwrap();
        assert_eq!(s1, s8, "results identical regardless of worker count");
    }

    #[test]
    fn cells_cover_grid_and_are_finite() {
        let cfg = small_cfg();
        let result = run_rate_experiment(&cfg).unwrap();
        assert_eq!(result.cells.len(), 9);
        for cell in &result.cells {
            assert!(cell.error.is_finite() && cell.error > 0.0);
            assert!((0.0..=1.0).contains(&cell.exceedance));
            assert!(cell.w2_sq.is_finite() && cell.w2_sq >= 0.0);
        }
        assert_eq!(result.curve.n_values, vec![64, 128, 256]);
        assert_eq!(result.condition_checks.len(), 3);
        assert_eq!(result.truncation_tail.len(), 3);
    }
}
