//! The posterior Wasserstein-approximation study: Monte Carlo left side
//! E[1_{A_n} W₂²(posterior, N(θ₀ᵗ, σ²/n I))] against the closed-form
//! right side σ²k/n + ‖θ₀ᵗ‖²_H/n + Σ_{j>k}θ₀ⱼ².

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::an_event_check;
use crate::gaussmetrics::{w2_commuting, GaussianMeasure};
use crate::spectrum::{KernelSpec, SpectralBasis};
use crate::tgp::{
    build_design, make_true_function, posterior, rkhs_norm, sample_covariates, TruthMode,
};
use crate::{Error, Result};

use super::{derive_seed, mean_stderr, scaling_rules, ExperimentConfig};

#[derive(Debug, Clone, Serialize)]
pub struct W2Cell {
    pub n: usize,
    pub rep: usize,
    pub an_holds: bool,
    pub w2_sq: f64,
}

/// Per-n summary: the Monte Carlo left side, the three right-side terms,
/// and their ratio.
#[derive(Debug, Clone, Serialize)]
pub struct W2Row {
    pub n: usize,
    pub a: f64,
    pub k: usize,
    pub lhs_mc: f64,
    pub lhs_stderr: f64,
    pub rhs_k_term: f64,
    pub rhs_rkhs_term: f64,
    pub rhs_trunc_term: f64,
    pub rhs_total: f64,
    pub ratio: f64,
    pub an_hold_freq: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct W2Experiment {
    pub cells: Vec<W2Cell>,
    pub rows: Vec<W2Row>,
}

fn w2_cell(cfg: &ExperimentConfig, n: usize, rep: usize) -> Result<W2Cell> {
    let scaling = scaling_rules(n, cfg.alpha)?;
    let spec = KernelSpec::new(scaling.a, cfg.b, cfg.sigma2)?;
    let basis = SpectralBasis::new(spec, scaling.k)?;
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(cfg.seed, n as u64, rep as u64, "w2"));
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
    let an = an_event_check(&design);
    let q_t = GaussianMeasure::new(post.theta_tilde().clone(), post.sigma_tilde().clone())?;
    let q_a = GaussianMeasure::isotropic(
        DVector::from_column_slice(truth.truncated(scaling.k)),
        cfg.sigma2 / n as f64,
    )?;
    let w2 = w2_commuting(&q_t, &q_a)?;
    Ok(W2Cell {
        n,
        rep,
        an_holds: an.holds,
        w2_sq: w2 * w2,
    })
}

pub fn run_w2_experiment(cfg: &ExperimentConfig) -> Result<W2Experiment> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.reps).map(move |rep| (n, rep)))
        .collect();
    let cells: Vec<W2Cell> = jobs
        .par_iter()
        .map(|&(n, rep)| w2_cell(cfg, n, rep))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        let scaling = scaling_rules(n, cfg.alpha)?;
        let spec = KernelSpec::new(scaling.a, cfg.b, cfg.sigma2)?;
        let basis = SpectralBasis::new(spec, scaling.k)?;
        let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(cfg.seed, n as u64, 0, "w2-truth"));
        let truth = make_true_function(
            cfg.alpha,
            (10 * scaling.k).max(cfg.j_tail),
            TruthMode::Deterministic,
            &mut rng,
        );
        let group: Vec<&W2Cell> = cells.iter().filter(|c| c.n == n).collect();
        let masked: Vec<f64> = group
            .iter()
            .map(|c| if c.an_holds { c.w2_sq } else { 0.0 })
            .collect();
        let (lhs_mc, lhs_stderr) = mean_stderr(&masked);
        let an_hold_freq =
            group.iter().filter(|c| c.an_holds).count() as f64 / group.len() as f64;
        let nf = n as f64;
        let rhs_k_term = cfg.sigma2 * scaling.k as f64 / nf;
        let rhs_rkhs_term = rkhs_norm(truth.truncated(scaling.k), &basis).powi(2) / nf;
        let rhs_trunc_term = truth.tail_sq(scaling.k);
        let rhs_total = rhs_k_term + rhs_rkhs_term + rhs_trunc_term;
        rows.push(W2Row {
            n,
            a: scaling.a,
            k: scaling.k,
            lhs_mc,
            lhs_stderr,
            rhs_k_term,
            rhs_rkhs_term,
            rhs_trunc_term,
            rhs_total,
            ratio: lhs_mc / rhs_total,
            an_hold_freq,
        });
    }
    Ok(W2Experiment { cells, rows })
}
