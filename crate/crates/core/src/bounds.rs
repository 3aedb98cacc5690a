//! The theory ledger: the design concentration event
//! A_n = {‖ΦᵀΦ - nI‖₂ < n/2} with its matrix-Bernstein failure bound, the
//! prior truncation-tail bound, and the small-ball machinery (shifted-ball
//! lower bound, Dirichlet integral identity). Every bound is paired with a
//! Monte Carlo estimator so bound versus truth stays checkable.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::gaussmetrics::chi2_tail;
use crate::special::ln_gamma;
use crate::spectrum::{kl_sample, SpectralBasis};
use crate::tgp::DesignSample;

/// Documented default for the sub-exponential norm constant K in the
/// truncation-tail bound.
pub const DEFAULT_SUB_EXP_K: f64 = 4.0;
/// Documented default for the absolute constant in the exponent of the
/// truncation-tail bound.
pub const DEFAULT_BERNSTEIN_C: f64 = 0.125;

/// A Monte Carlo probability estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

impl ProbabilityEstimate {
    pub fn from_indicator(successes: usize, trials: usize) -> Self {
        assert!(trials > 0, "need at least one trial");
        let mean = successes as f64 / trials as f64;
        Self {
            mean,
            stderr: (mean * (1.0 - mean) / trials as f64).sqrt(),
            n_samples: trials,
        }
    }
}

/// Diagnostics of the concentration event for one drawn design.
///
/// `holds` iff deviation = ‖ΦᵀΦ - nI‖₂ < n/2; on that event the Gram
/// matrix satisfies ‖ΦᵀΦ‖₂ ≤ 3n/2, s_min ≥ n/2, κ ≤ 3 and
/// tr[(ΦᵀΦ)⁻¹] ≤ 2k/n.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AnDiagnostics {
    pub holds: bool,
    pub deviation: f64,
    pub op_norm: f64,
    pub smin: f64,
    pub cond: f64,
    pub trace_inv: f64,
}

/// Evaluate the concentration event and the Gram-matrix functionals for a
/// design sample.
pub fn an_event_check(design: &DesignSample) -> AnDiagnostics {
    let n = design.n() as f64;
    let k = design.k();
    let gram = design.phi().transpose() * design.phi();
    let eig = gram.symmetric_eigen();
    let mut op_norm = 0.0f64;
    let mut smin = f64::INFINITY;
    let mut deviation = 0.0f64;
    let mut trace_inv = 0.0f64;
    let mut singular = false;
    for idx in 0..k {
        let ev = eig.eigenvalues[idx];
        op_norm = op_norm.max(ev.abs());
        smin = smin.min(ev);
        deviation = deviation.max((ev - n).abs());
        if ev > 0.0 {
            trace_inv += 1.0 / ev;
        } else {
            singular = true;
        }
    }
    let smin = smin.max(0.0);
    let cond = if smin > 0.0 { op_norm / smin } else { f64::INFINITY };
    let trace_inv = if singular { f64::INFINITY } else { trace_inv };
    AnDiagnostics {
        holds: deviation < n / 2.0,
        deviation,
        op_norm,
        smin,
        cond,
        trace_inv,
    }
}

/// Matrix Bernstein tail: min(1, d·exp(-(t²/2)/(η² + Bt/3))) for a sum of
/// n independent centered self-adjoint d×d matrices with ‖Z_i‖₂ ≤ B and
/// η² = ‖Σ E Z_i²‖₂.
pub fn matrix_bernstein_bound(t: f64, eta2: f64, big_b: f64, d: usize) -> f64 {
    assert!(t > 0.0 && eta2 > 0.0 && big_b > 0.0, "arguments must be positive");
    let exponent = -(t * t / 2.0) / (eta2 + big_b * t / 3.0);
    (d as f64 * exponent.exp()).min(1.0)
}

/// Computable upper bound for P(A_nᶜ): the matrix Bernstein tail at
/// t = n/2, d = k, with the explicit envelopes B = 1 + kL² and
/// η² = n(kL² + 1).
pub fn an_failure_bound(n: usize, k: usize, sup_norm: f64) -> f64 {
    assert!(n > k, "need n > k");
    let kl2 = k as f64 * sup_norm * sup_norm;
    matrix_bernstein_bound(n as f64 / 2.0, n as f64 * (kl2 + 1.0), 1.0 + kl2, k)
}

/// Monte Carlo estimate of the prior tail event
/// Π(Σ_j σ²λ_j Z_j² > ε²) over the supplied tail eigenvalues.
///
/// The caller truncates the infinite tail at J with
/// Σ_{j>J} λ_j < 1e-3 ε² (see `spectrum::tail_length_for`).
pub fn truncation_tail_mc<R: Rng + ?Sized>(
    lambda_tail: &[f64],
    sigma2: f64,
    eps: f64,
    trials: usize,
    rng: &mut R,
) -> ProbabilityEstimate {
    assert!(eps >= 0.0 && sigma2 > 0.0 && trials > 0);
    let threshold = eps * eps;
    let mut hits = 0usize;
    for _ in 0..trials {
        let mut acc = 0.0;
        for &l in lambda_tail {
            let z: f64 = StandardNormal.sample(rng);
            acc += sigma2 * l * z * z;
            if acc > threshold {
                break;
            }
        }
        if acc > threshold {
            hits += 1;
        }
    }
    ProbabilityEstimate::from_indicator(hits, trials)
}

/// Sub-exponential Bernstein bound for the same tail event, after the
/// centering margin ε²/2:
/// min(1, 2·exp(-c·min{m²/(K²Σλ²), m/(K·maxλ)})) with m = ε²/2.
pub fn truncation_tail_bernstein(lambdas: &[f64], eps: f64, sub_exp_k: f64, c_const: f64) -> f64 {
    assert!(eps >= 0.0 && sub_exp_k > 0.0 && c_const > 0.0);
    assert!(!lambdas.is_empty(), "need at least one tail eigenvalue");
    let margin = eps * eps / 2.0;
    let sum_sq: f64 = lambdas.iter().map(|l| l * l).sum();
    let max_l = lambdas.iter().cloned().fold(0.0f64, f64::max);
    let quad = margin * margin / (sub_exp_k * sub_exp_k * sum_sq);
    let lin = margin / (sub_exp_k * max_l);
    (2.0 * (-c_const * quad.min(lin)).exp()).min(1.0)
}

/// Monte Carlo estimate of the small-ball probability
/// Π(‖θ - θ₀‖ ≤ ε) under the prior θ_j ~ N(0, σ²λ_j).
pub fn small_ball_mc<R: Rng + ?Sized>(
    basis: &SpectralBasis,
    theta0: &[f64],
    eps: f64,
    trials: usize,
    rng: &mut R,
) -> ProbabilityEstimate {
    assert!(eps >= 0.0 && trials > 0);
    assert_eq!(theta0.len(), basis.k(), "shift length must equal k");
    let eps_sq = eps * eps;
    let mut hits = 0usize;
    for _ in 0..trials {
        let theta = kl_sample(basis, rng);
        let dist_sq: f64 = theta
            .iter()
            .zip(theta0)
            .map(|(t, t0)| (t - t0) * (t - t0))
            .sum();
        if dist_sq <= eps_sq {
            hits += 1;
        }
    }
    ProbabilityEstimate::from_indicator(hits, trials)
}

/// Shifted-ball lower bound: P(‖θ - θ₀‖ ≤ ε) ≥ e^{-‖θ₀‖²_H/2}·P(‖ξ‖ ≤ ε/2)
/// where ‖θ₀‖²_H = Σ θ_{0j}²/(σ²λ_j) and `centered_half_ball_prob`
/// estimates the centered probability at radius ε/2.
pub fn anderson_lower_bound(
    basis: &SpectralBasis,
    theta0: &[f64],
    centered_half_ball_prob: f64,
) -> f64 {
    assert_eq!(theta0.len(), basis.k(), "shift length must equal k");
    let sigma2 = basis.spec().sigma2();
    let h_sq: f64 = theta0
        .iter()
        .zip(basis.log_lambdas())
        .map(|(t, log_l)| t * t * (-log_l).exp() / sigma2)
        .sum();
    (-0.5 * h_sq).exp() * centered_half_ball_prob
}

/// Both sides of the Dirichlet integral identity
/// ∫_{Σx ≤ 1} ψ(Σx) Π x_j^{α_j - 1} dx
///   = (Π Γ(α_j) / Γ(Σα_j)) ∫₀¹ ψ(t) t^{Σα - 1} dt.
#[derive(Debug, Clone, Copy)]
pub struct DirichletCheck {
    pub lhs_estimate: f64,
    pub lhs_stderr: f64,
    pub rhs_value: f64,
}

/// Estimate the left side by Monte Carlo over the simplex and evaluate
/// the right side by the Γ-ratio times 1-D quadrature.
///
/// Simplex sampling uses exponential spacings: (n+1) i.i.d. Exp(1) draws
/// normalized to the probability simplex give a uniform point of
/// {Σ x_j ≤ 1} after dropping the last coordinate; the integrand weight
/// ψ(Σx)·Πx^{α-1} then reweights for non-uniform α. (A rejection sampler
/// over the unit cube would serve as fallback but mixes far more slowly
/// in dimension.)
pub fn dirichlet_integral_check<R: Rng + ?Sized>(
    alphas: &[f64],
    psi: impl Fn(f64) -> f64,
    mc_trials: usize,
    rng: &mut R,
) -> DirichletCheck {
    let n = alphas.len();
    assert!(n >= 1 && mc_trials > 0);
    assert!(alphas.iter().all(|&a| a > 0.0), "alphas must be positive");

    // Volume of the simplex is 1/n!; uniform density on it is n!.
    let ln_vol = -ln_gamma(n as f64 + 1.0);
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for _ in 0..mc_trials {
        let mut spacings = Vec::with_capacity(n + 1);
        let mut total = 0.0;
        for _ in 0..=n {
            let u: f64 = rng.random::<f64>();
            let e = -(1.0 - u).ln();
            spacings.push(e);
            total += e;
        }
        let mut s = 0.0;
        let mut weight = 1.0;
        for (j, &a) in alphas.iter().enumerate() {
            let xj = spacings[j] / total;
            s += xj;
            weight *= xj.powf(a - 1.0);
        }
        let value = psi(s) * weight;
        sum += value;
        sum_sq += value * value;
    }
    let t = mc_trials as f64;
    let mean = sum / t;
    let var = (sum_sq / t - mean * mean).max(0.0);
    let vol = ln_vol.exp();
    let lhs_estimate = mean * vol;
    let lhs_stderr = (var / t).sqrt() * vol;

    let alpha_sum: f64 = alphas.iter().sum();
    let ln_ratio: f64 = alphas.iter().map(|&a| ln_gamma(a)).sum::<f64>() - ln_gamma(alpha_sum);
    let integral = gauss_legendre_01(64, |t| psi(t) * t.powf(alpha_sum - 1.0));
    DirichletCheck {
        lhs_estimate,
        lhs_stderr,
        rhs_value: ln_ratio.exp() * integral,
    }
}

/// Gauss–Legendre quadrature of f over [0, 1] via the Jacobi-matrix
/// eigenvalue construction.
fn gauss_legendre_01(order: usize, f: impl Fn(f64) -> f64) -> f64 {
    let mut jacobi = DMatrix::<f64>::zeros(order, order);
    for i in 1..order {
        let fi = i as f64;
        let beta = fi / (4.0 * fi * fi - 1.0).sqrt();
        jacobi[(i - 1, i)] = beta;
        jacobi[(i, i - 1)] = beta;
    }
    let eigen = jacobi.symmetric_eigen();
    let mut acc = 0.0;
    for idx in 0..order {
        let node = eigen.eigenvalues[idx]; // in [-1, 1]
        let v0 = eigen.eigenvectors[(0, idx)];
        let weight = 2.0 * v0 * v0;
        acc += weight * f(0.5 * (node + 1.0));
    }
    0.5 * acc
}

/// The three-term assembly of the posterior-approximation error bound:
/// 4·W₂²/(M²ε²) + P(χ²_k > M²nε²/4) + P(A_nᶜ).
pub fn t1n_bound_terms(
    n: usize,
    k: usize,
    eps: f64,
    m_const: f64,
    w2_sq_estimate: f64,
    an_fail: f64,
) -> f64 {
    assert!(eps > 0.0 && m_const > 0.0 && w2_sq_estimate >= 0.0 && an_fail >= 0.0);
    let m2e2 = m_const * m_const * eps * eps;
    4.0 * w2_sq_estimate / m2e2 + chi2_tail(k, m2e2 * n as f64 / 4.0) + an_fail
}
