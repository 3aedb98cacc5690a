//! The design-matrix concentration study: empirical failure frequency of
//! the event ‖ΦᵀΦ - nI‖₂ < n/2 against its matrix-Bernstein upper bound,
//! at a fixed kernel scale and truncation level.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{an_event_check, an_failure_bound};
use crate::spectrum::{supnorm_bound, KernelSpec, SpectralBasis};
use crate::tgp::{build_design, sample_covariates};
use crate::Result;

use super::{derive_seed, ExperimentConfig};

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationCell {
    pub n: usize,
    pub rep: usize,
    pub deviation: f64,
    pub rel_deviation: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationRow {
    pub n: usize,
    pub k: usize,
    pub a: f64,
    pub reps: usize,
    pub empirical_fail_freq: f64,
    pub fail_stderr: f64,
    pub bound: f64,
    pub median_rel_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationExperiment {
    pub cells: Vec<ConcentrationCell>,
    pub rows: Vec<ConcentrationRow>,
}

/// Run the concentration study at fixed (a, k) across the config's
/// n-grid. The scaling rules are deliberately not applied here: the
/// event is about the Gram matrix of a fixed basis as n grows.
pub fn run_concentration_experiment(
    cfg: &ExperimentConfig,
    a: f64,
    k: usize,
) -> Result<ConcentrationExperiment> {
    cfg.validate()?;
    let spec = KernelSpec::new(a, cfg.b, cfg.sigma2)?;
    let basis = SpectralBasis::new(spec, k)?;
    let jobs: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.reps).map(move |rep| (n, rep)))
        .collect();
    let cells: Vec<ConcentrationCell> = jobs
        .par_iter()
        .map(|&(n, rep)| -> Result<ConcentrationCell> {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(
                cfg.seed, n as u64, rep as u64, "concentration",
            ));
            let xs = sample_covariates(cfg.b, n, &mut rng);
            let design = build_design(&basis, &xs)?;
            let diag = an_event_check(&design);
            Ok(ConcentrationCell {
                n,
                rep,
                deviation: diag.deviation,
                rel_deviation: diag.deviation / n as f64,
                holds: diag.holds,
            })
        })
        .collect::<Result<_>>()?;

    let l = supnorm_bound(&spec, k);
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        let group: Vec<&ConcentrationCell> = cells.iter().filter(|c| c.n == n).collect();
        let fails = group.iter().filter(|c| !c.holds).count();
        let freq = fails as f64 / group.len() as f64;
        let stderr = (freq * (1.0 - freq) / group.len() as f64).sqrt();
        let mut rel: Vec<f64> = group.iter().map(|c| c.rel_deviation).collect();
        rel.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let median = rel[rel.len() / 2];
        rows.push(ConcentrationRow {
            n,
            k,
            a,
            reps: group.len(),
            empirical_fail_freq: freq,
            fail_stderr: stderr,
            bound: an_failure_bound(n, k, l),
            median_rel_deviation: median,
        });
    }
    Ok(ConcentrationExperiment { cells, rows })
}
