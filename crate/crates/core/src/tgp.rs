//! Design-matrix construction, the conjugate truncated-GP posterior
//!
//!   θ̃ = (ΦᵀΦ + Λ⁻¹)⁻¹ ΦᵀY,   Σ̃ = σ² (ΦᵀΦ + Λ⁻¹)⁻¹,
//!
//! posterior sampling and prediction, and the coefficient-space norms
//! (L²_ρ via Parseval, RKHS, Sobolev) used throughout the experiments.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::spectrum::{self, SpectralBasis};
use crate::{Error, Result};

/// Covariates X_1..X_n together with the n×k matrix Φ_{ij} = φ_j(X_i).
#[derive(Debug, Clone)]
pub struct DesignSample {
    x: Vec<f64>,
    phi: DMatrix<f64>,
}

impl DesignSample {
    /// Assemble from raw parts, bypassing the basis; synthetic-design
    /// tests only.
    #[cfg(test)]
    pub(crate) fn test_only_from_parts(x: Vec<f64>, phi: DMatrix<f64>) -> Self {
        Self { x, phi }
    }

    pub fn n(&self) -> usize {
        self.phi.nrows()
    }

    pub fn k(&self) -> usize {
        self.phi.ncols()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }
}

/// The posterior N(θ̃, Σ̃) of the truncated coefficients.
#[derive(Debug, Clone)]
pub struct TgpPosterior {
    theta_tilde: DVector<f64>,
    sigma_tilde: DMatrix<f64>,
    factor: DMatrix<f64>, // F with F Fᵀ = Σ̃, for sampling
}

impl TgpPosterior {
    pub fn k(&self) -> usize {
        self.theta_tilde.len()
    }

    pub fn theta_tilde(&self) -> &DVector<f64> {
        &self.theta_tilde
    }

    pub fn sigma_tilde(&self) -> &DMatrix<f64> {
        &self.sigma_tilde
    }
}

/// i.i.d. draws from the covariate density √(2b/π) e^{-2bx²}, i.e.
/// centered Gaussians with variance 1/(4b).
pub fn sample_covariates<R: Rng + ?Sized>(b: f64, n: usize, rng: &mut R) -> Vec<f64> {
    assert!(b > 0.0, "sample_covariates requires b > 0");
    let sd = 1.0 / (2.0 * b.sqrt());
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        })
        .collect()
}

/// Build Φ with Φ_{ij} = φ_j(x_i). Requires n > k.
pub fn build_design(basis: &SpectralBasis, x: &[f64]) -> Result<DesignSample> {
    let n = x.len();
    let k = basis.k();
    if n <= k {
        return Err(Error::Dimension(format!(
            "design needs more rows than basis functions (n={n}, k={k})"
        )));
    }
    let mut phi = DMatrix::zeros(n, k);
    for (i, &xi) in x.iter().enumerate() {
        let row = basis.phi_row(xi);
        for j in 0..k {
            phi[(i, j)] = row[j];
        }
    }
    Ok(DesignSample { x: x.to_vec(), phi })
}

fn cholesky_with_jitter(a: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let k = a.nrows();
    match Cholesky::new(a.clone()) {
        Some(ch) => Ok(ch),
        None => {
            let jitter = 1e-10 * a.trace() / k as f64;
            let retry = a + DMatrix::identity(k, k) * jitter;
            Cholesky::new(retry).ok_or_else(|| {
                Error::Numerical(
                    "posterior precision not positive definite even after jitter".into(),
                )
            })
        }
    }
}

/// Posterior from an explicit prior precision diagonal: the general
/// ridge solve behind [`posterior`]. `lambda_inv[j]` is the j-th diagonal
/// entry of Λ⁻¹; passing zeros recovers ordinary least squares.
pub fn posterior_with_prior_precision(
    phi: &DMatrix<f64>,
    y: &[f64],
    lambda_inv: &[f64],
    sigma2: f64,
) -> Result<TgpPosterior> {
    let (n, k) = (phi.nrows(), phi.ncols());
    if y.len() != n {
        return Err(Error::Dimension(format!(
            "response length {} does not match design rows {n}",
            y.len()
        )));
    }
    if lambda_inv.len() != k {
        return Err(Error::Dimension(format!(
            "prior precision length {} does not match design columns {k}",
            lambda_inv.len()
        )));
    }
    let mut a = phi.transpose() * phi;
    for j in 0..k {
        a[(j, j)] += lambda_inv[j];
    }
    let chol = cholesky_with_jitter(a)?;
    let yv = DVector::from_column_slice(y);
    let theta_tilde = chol.solve(&(phi.transpose() * yv));
    let sigma_tilde = chol.inverse() * sigma2;
    let sigma_tilde = (&sigma_tilde + sigma_tilde.transpose()) * 0.5;
    // F = σ L⁻ᵀ satisfies F Fᵀ = σ² (L Lᵀ)⁻¹ = Σ̃.
    let l_inv_t = chol
        .l()
        .solve_lower_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::Numerical("Cholesky factor not invertible".into()))?
        .transpose();
    let factor = l_inv_t * sigma2.sqrt();
    Ok(TgpPosterior {
        theta_tilde,
        sigma_tilde,
        factor,
    })
}

/// The tGP posterior for a design, responses, and the basis prior
/// Λ = diag(λ_1..λ_k): θ̃ = (ΦᵀΦ + Λ⁻¹)⁻¹ΦᵀY, Σ̃ = σ²(ΦᵀΦ + Λ⁻¹)⁻¹.
pub fn posterior(design: &DesignSample, y: &[f64], basis: &SpectralBasis) -> Result<TgpPosterior> {
    if design.k() != basis.k() {
        return Err(Error::Dimension(format!(
            "design has k={}, basis has k={}",
            design.k(),
            basis.k()
        )));
    }
    let lambda_inv: Vec<f64> = basis.log_lambdas().iter().map(|l| (-l).exp()).collect();
    posterior_with_prior_precision(design.phi(), y, &lambda_inv, basis.spec().sigma2())
}

/// One draw from N(θ̃, Σ̃).
pub fn posterior_sample<R: Rng + ?Sized>(post: &TgpPosterior, rng: &mut R) -> Vec<f64> {
    let k = post.k();
    let z = DVector::from_fn(k, |_, _| StandardNormal.sample(rng));
    let draw = &post.theta_tilde + &post.factor * z;
    draw.as_slice().to_vec()
}

/// Σ_{j ≤ k} θ_j φ_j(x).
pub fn predict(basis: &SpectralBasis, theta: &[f64], x: f64) -> f64 {
    assert_eq!(theta.len(), basis.k(), "coefficient length must equal k");
    basis
        .phi_row(x)
        .iter()
        .zip(theta)
        .map(|(p, t)| p * t)
        .sum()
}

/// The true data-generating function f_0 = Σ_{j ≤ J} θ_{0j} φ_j with a
/// Sobolev-α coefficient sequence.
#[derive(Debug, Clone)]
pub struct TrueFunction {
    alpha: f64,
    coeffs: Vec<f64>,
}

/// Coefficient profile for [`make_true_function`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthMode {
    /// θ_{0j} = j^{-(α+1)}.
    Deterministic,
    /// θ_{0j} = ±j^{-(α+1)} U_j with U_j uniform on [1/2, 1] and
    /// independent random signs.
    Random,
}

impl TrueFunction {
    /// A true function with explicit coefficients.
    pub fn from_coefficients(alpha: f64, coeffs: Vec<f64>) -> Self {
        assert!(alpha > 0.0, "smoothness must be positive");
        assert!(!coeffs.is_empty(), "need at least one coefficient");
        Self { alpha, coeffs }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// First k coefficients θ_0^t.
    pub fn truncated(&self, k: usize) -> &[f64] {
        &self.coeffs[..k.min(self.coeffs.len())]
    }

    /// Squared truncation tail Σ_{j > k} θ_{0j}².
    pub fn tail_sq(&self, k: usize) -> f64 {
        if k >= self.coeffs.len() {
            return 0.0;
        }
        self.coeffs[k..].iter().map(|t| t * t).sum()
    }

    /// f_0(x) by coefficient expansion in the basis of `spec`.
    pub fn eval(&self, spec: &spectrum::KernelSpec, x: f64) -> f64 {
        spectrum::eigenfunctions_upto(spec, self.coeffs.len(), x)
            .iter()
            .zip(&self.coeffs)
            .map(|(p, t)| p * t)
            .sum()
    }
}

/// Build a true function with J coefficients; both modes have finite
/// Sobolev α-norm since Σ j^{2α} j^{-2α-2} = Σ j^{-2}.
pub fn make_true_function<R: Rng + ?Sized>(
    alpha: f64,
    j_len: usize,
    mode: TruthMode,
    rng: &mut R,
) -> TrueFunction {
    assert!(alpha > 0.0, "smoothness must be positive");
    assert!(j_len >= 1, "need at least one coefficient");
    let coeffs = (1..=j_len)
        .map(|j| {
            let base = (j as f64).powf(-(alpha + 1.0));
            match mode {
                TruthMode::Deterministic => base,
                TruthMode::Random => {
                    let u: f64 = rng.random_range(0.5..1.0);
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    sign * base * u
                }
            }
        })
        .collect();
    TrueFunction { alpha, coeffs }
}

/// Parseval form of ‖f̂ - f_0‖_{2,ρ}:
/// √(Σ_{j ≤ k}(θ̂_j - θ_{0j})² + Σ_{k < j ≤ J} θ_{0j}²).
pub fn l2rho_error(theta_hat: &[f64], truth: &TrueFunction, k: usize) -> f64 {
    assert!(theta_hat.len() >= k, "estimate shorter than truncation level");
    assert!(truth.len() >= k, "truth tail shorter than truncation level");
    let head: f64 = (0..k)
        .map(|j| {
            let d = theta_hat[j] - truth.coeffs[j];
            d * d
        })
        .sum();
    (head + truth.tail_sq(k)).sqrt()
}

/// RKHS norm ‖Λ^{-1/2} θ‖ = √(Σ_{j ≤ k} θ_j²/λ_j).
pub fn rkhs_norm(theta0t: &[f64], basis: &SpectralBasis) -> f64 {
    assert_eq!(theta0t.len(), basis.k(), "coefficient length must equal k");
    theta0t
        .iter()
        .zip(basis.log_lambdas())
        .map(|(t, log_l)| t * t * (-log_l).exp())
        .sum::<f64>()
        .sqrt()
}

/// Sobolev sequence norm √(Σ_j j^{2α} θ_j²).
pub fn sobolev_norm(theta: &[f64], alpha: f64) -> f64 {
    theta
        .iter()
        .enumerate()
        .map(|(idx, t)| ((idx + 1) as f64).powf(2.0 * alpha) * t * t)
        .sum::<f64>()
        .sqrt()
}

/// Function-space GP regression oracle with the truncated kernel.
///
/// With prior covariance σ² K_t, (K_t)_{il} = Σ_j λ_j φ_j(x_i) φ_j(x_l),
/// and noise σ², the predictive mean is m(x*) = k_t(x*)ᵀ(K_t + I)⁻¹Y
/// (σ² cancels). By weight-space/function-space duality this must equal
/// Φ(x*)θ̃ from [`posterior`].
pub fn function_space_oracle(
    x_train: &[f64],
    y: &[f64],
    basis: &SpectralBasis,
    x_test: &[f64],
) -> Result<Vec<f64>> {
    let n = x_train.len();
    if n == 0 {
        return Err(Error::InvalidInput("oracle needs at least one point".into()));
    }
    if y.len() != n {
        return Err(Error::Dimension(format!(
            "response length {} does not match inputs {n}",
            y.len()
        )));
    }
    let k = basis.k();
    let lambdas = basis.lambdas();
    let mut phi = DMatrix::zeros(n, k);
    for (i, &xi) in x_train.iter().enumerate() {
        let row = basis.phi_row(xi);
        for j in 0..k {
            phi[(i, j)] = row[j];
        }
    }
    let lam = DMatrix::from_diagonal(&DVector::from_vec(lambdas.clone()));
    let kt = &phi * &lam * phi.transpose() + DMatrix::identity(n, n);
    let chol = cholesky_with_jitter(kt)?;
    let weights = chol.solve(&DVector::from_column_slice(y));
    Ok(x_test
        .iter()
        .map(|&xs| {
            let row = basis.phi_row(xs);
            let kvec = &phi
                * DVector::from_iterator(k, row.iter().zip(&lambdas).map(|(p, l)| p * l));
            kvec.dot(&weights)
        })
        .collect())
}
