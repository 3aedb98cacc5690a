//! Eigenvalues and eigenfunctions of the squared-exponential kernel
//! K_a(x, x') = exp(-a²(x - x')²) with respect to the Gaussian covariate
//! density ρ(x) = √(2b/π) e^{-2bx²}.
//!
//! With c = √(b² + 2ba²) the eigensystem is closed form:
//!
//!   λ_j = (2b/(b + a² + c))^{1/2} (a²/(b + a² + c))^{j-1},
//!   φ_j(x) = (c/b)^{1/4} / √(2^{j-1}(j-1)!) · e^{-(c-b)x²} H_{j-1}(√(2c) x).
//!
//! Eigenvalues are stored as logs. Eigenfunctions are evaluated by a
//! weighted recurrence χ_{m+1} = √(2/(m+1)) √(2c)x χ_m - √(m/(m+1)) χ_{m-1}
//! with χ_0 = e^{-(c-b)x²}, which carries the Gaussian envelope through the
//! recurrence so no 2^j j! factor is ever formed.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::hermite::QuadratureRule;
use crate::{Error, Result};

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Squared-exponential kernel parameters and the derived constant
/// c = √(b² + 2ba²).
///
/// `a` is the inverse bandwidth, `b` parameterizes the covariate density,
/// and `sigma2` scales both the prior and the observation noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    a: f64,
    b: f64,
    sigma2: f64,
    c: f64,
}

impl KernelSpec {
    pub fn new(a: f64, b: f64, sigma2: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidInput(format!("a must be positive, got {a}")));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidInput(format!("b must be positive, got {b}")));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sigma2 must be positive, got {sigma2}"
            )));
        }
        let c = (b * b + 2.0 * b * a * a).sqrt();
        Ok(Self { a, b, sigma2, c })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Geometric decay ratio r = a²/(b + a² + c), always in (0, 1).
    pub fn decay_ratio(&self) -> f64 {
        self.a * self.a / (self.b + self.a * self.a + self.c)
    }

    /// log λ_1 = ½ log(2b/(b + a² + c)).
    pub fn log_lambda1(&self) -> f64 {
        0.5 * ((2.0 * self.b).ln() - (self.b + self.a * self.a + self.c).ln())
    }

    /// log r, the constant difference between consecutive log-eigenvalues.
    pub fn log_decay_ratio(&self) -> f64 {
        2.0 * self.a.ln() - (self.b + self.a * self.a + self.c).ln()
    }
}

/// λ_j for j ≥ 1, computed from the log domain.
///
/// Underflows gracefully to subnormal/zero at extreme j; use
/// [`log_eigenvalue`] when the log is what is needed.
pub fn eigenvalue(spec: &KernelSpec, j: usize) -> f64 {
    log_eigenvalue(spec, j).exp()
}

/// log λ_j for j ≥ 1.
pub fn log_eigenvalue(spec: &KernelSpec, j: usize) -> f64 {
    assert!(j >= 1, "eigenvalue index starts at 1");
    spec.log_lambda1() + (j - 1) as f64 * spec.log_decay_ratio()
}

/// The asymptotic surrogate a⁻¹ e^{-j/a} used in the rate analysis.
pub fn eigenvalue_asymptotic(spec: &KernelSpec, j: usize) -> f64 {
    assert!(j >= 1, "eigenvalue index starts at 1");
    (-(j as f64) / spec.a).exp() / spec.a
}

/// Ratio λ_j / (a⁻¹ e^{-j/a}).
pub fn eigenvalue_asymptotic_ratio(spec: &KernelSpec, j: usize) -> f64 {
    (log_eigenvalue(spec, j) + j as f64 / spec.a + spec.a.ln()).exp()
}

/// φ_j(x) for j ≥ 1, via the stable weighted recurrence.
pub fn eigenfunction(spec: &KernelSpec, j: usize, x: f64) -> f64 {
    assert!(j >= 1, "eigenfunction index starts at 1");
    *eigenfunctions_upto(spec, j, x).last().unwrap()
}

/// (φ_1(x), ..., φ_k(x)) in one pass of the recurrence.
pub fn eigenfunctions_upto(spec: &KernelSpec, k: usize, x: f64) -> Vec<f64> {
    assert!(k >= 1, "need at least one eigenfunction");
    let c = spec.c;
    let b = spec.b;
    let z = (2.0 * c).sqrt() * x;
    let scale = (c / b).powf(0.25);
    let env = (-(c - b) * x * x).exp();

    let mut out = Vec::with_capacity(k);
    let mut prev = env; // χ_0
    out.push(scale * prev);
    if k == 1 {
        return out;
    }
    let mut curr = std::f64::consts::SQRT_2 * z * env; // χ_1
    out.push(scale * curr);
    for m in 1..k - 1 {
        let mf = m as f64;
        let next = z * (2.0 / (mf + 1.0)).sqrt() * curr - (mf / (mf + 1.0)).sqrt() * prev;
        prev = curr;
        curr = next;
        out.push(scale * curr);
    }
    out
}

/// The kernel itself: exp(-a²(x - x')²).
pub fn kernel_exact(spec: &KernelSpec, x: f64, x2: f64) -> f64 {
    let d = x - x2;
    (-spec.a * spec.a * d * d).exp()
}

/// The covariate density ρ(x) = √(2b/π) e^{-2bx²}.
pub fn rho_density(b: f64, x: f64) -> f64 {
    assert!(b > 0.0, "rho_density requires b > 0");
    (2.0 * b / std::f64::consts::PI).sqrt() * (-2.0 * b * x * x).exp()
}

/// Truncated spectral basis: a kernel spec plus the first k log-eigenvalues.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    spec: KernelSpec,
    k: usize,
    log_lambda: Vec<f64>,
}

impl SpectralBasis {
    pub fn new(spec: KernelSpec, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput(
                "truncation level k must be at least 1".into(),
            ));
        }
        let log_lambda = (1..=k).map(|j| log_eigenvalue(&spec, j)).collect();
        Ok(Self {
            spec,
            k,
            log_lambda,
        })
    }

    /// A basis with explicitly supplied log-eigenvalues over the same
    /// eigenfunctions. Surrogate limits (e.g. Λ⁻¹ → 0) and synthetic decay
    /// profiles go through here.
    pub fn with_log_eigenvalues(spec: KernelSpec, log_lambda: Vec<f64>) -> Result<Self> {
        if log_lambda.is_empty() {
            return Err(Error::InvalidInput(
                "truncation level k must be at least 1".into(),
            ));
        }
        Ok(Self {
            spec,
            k: log_lambda.len(),
            log_lambda,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// λ_j, 1-based, j ≤ k.
    pub fn lambda(&self, j: usize) -> f64 {
        self.log_lambda[j - 1].exp()
    }

    pub fn log_lambdas(&self) -> &[f64] {
        &self.log_lambda
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.log_lambda.iter().map(|l| l.exp()).collect()
    }

    /// (φ_1(x), ..., φ_k(x)).
    pub fn phi_row(&self, x: f64) -> Vec<f64> {
        eigenfunctions_upto(&self.spec, self.k, x)
    }
}

/// Σ_{j ≤ k} λ_j φ_j(x) φ_j(x').
pub fn mercer_truncated(basis: &SpectralBasis, x: f64, x2: f64) -> f64 {
    let px = basis.phi_row(x);
    let py = if x == x2 { None } else { Some(basis.phi_row(x2)) };
    let mut acc = 0.0;
    for j in 0..basis.k() {
        let other = py.as_ref().map_or(px[j], |p| p[j]);
        acc += basis.log_lambda[j].exp() * px[j] * other;
    }
    acc
}

/// Closed-form geometric tail Σ_{j > k} λ_j = λ_{k+1} / (1 - r).
pub fn lambda_tail_sum(spec: &KernelSpec, k: usize) -> f64 {
    eigenvalue(spec, k + 1) / (1.0 - spec.decay_ratio())
}

/// Smallest J ≥ k with Σ_{j > J} λ_j < 1e-3 ε², from the geometric closed
/// form.
pub fn tail_length_for(spec: &KernelSpec, k: usize, eps: f64) -> usize {
    assert!(eps > 0.0, "tail_length_for requires eps > 0");
    let target = 1e-3 * eps * eps;
    let log_r = spec.log_decay_ratio();
    let mut j = k;
    // Σ_{j > J} λ_j = λ_1 r^J / (1 - r); solve in the log domain.
    let log_tail = |jj: usize| {
        spec.log_lambda1() + jj as f64 * log_r - (-log_r.exp_m1()).ln()
    };
    while log_tail(j) >= target.ln() {
        j += 1;
    }
    j
}

/// Draw the truncated Karhunen–Loève coefficient vector: independent
/// θ_j ~ N(0, σ² λ_j), j = 1..k.
pub fn kl_sample<R: Rng + ?Sized>(basis: &SpectralBasis, rng: &mut R) -> Vec<f64> {
    let sigma = basis.spec.sigma2.sqrt();
    basis
        .log_lambda
        .iter()
        .map(|log_l| {
            let z: f64 = StandardNormal.sample(rng);
            sigma * (0.5 * log_l).exp() * z
        })
        .collect()
}

/// The sup-norm envelope L = a^{1/4} e^{bk/a} for the first k
/// eigenfunctions.
pub fn supnorm_bound(spec: &KernelSpec, k: usize) -> f64 {
    assert!(k >= 1, "supnorm_bound requires k >= 1");
    spec.a.powf(0.25) * (spec.b * k as f64 / spec.a).exp()
}

/// max_{1 ≤ j ≤ k} max over the grid of |φ_j(x)|.
pub fn empirical_supnorm(spec: &KernelSpec, k: usize, grid: &[f64]) -> f64 {
    assert!(!grid.is_empty(), "empirical_supnorm requires a nonempty grid");
    let mut best = 0.0f64;
    for &x in grid {
        for v in eigenfunctions_upto(spec, k, x) {
            best = best.max(v.abs());
        }
    }
    best
}

/// Default search grid for [`empirical_supnorm`]: 4001 uniform points on
/// [-X*, X*] with X* = √(max(1, (60 + k)·max(1, 1/(c-b)))). Beyond X* the
/// envelope e^{-(c-b)x²} times the polynomial factor √2 (2√(2c)|x|)^k of
/// the Hermite tail bound is below 1e-12, so the sup over the grid is the
/// sup over the line at the tested scales.
pub fn default_supnorm_grid(spec: &KernelSpec, k: usize) -> Vec<f64> {
    let span = (60.0 + k as f64) * (1.0 / (spec.c - spec.b)).max(1.0);
    let x_star = span.max(1.0).sqrt();
    let m = 4001usize;
    (0..m)
        .map(|i| -x_star + 2.0 * x_star * i as f64 / (m - 1) as f64)
        .collect()
}

/// Envelope-free normalized Hermite factors H_m(u)/√(2^m m!), m < k.
///
/// Grows like e^{u²/2} at the rule's outer nodes but stays far inside
/// f64 range for the orders supported here.
fn hermite_normalized_upto(k: usize, u: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(k);
    out.push(1.0);
    if k == 1 {
        return out;
    }
    let mut prev = 1.0;
    let mut curr = std::f64::consts::SQRT_2 * u;
    out.push(curr);
    for m in 1..k - 1 {
        let mf = m as f64;
        let next = u * (2.0 / (mf + 1.0)).sqrt() * curr - (mf / (mf + 1.0)).sqrt() * prev;
        prev = curr;
        curr = next;
        out.push(curr);
    }
    out
}

/// Gram matrix (⟨φ_i, φ_j⟩_ρ)_{i,j ≤ k} via the kernel-adapted
/// substitution u = √(2c) x.
///
/// Under that substitution the Gaussian envelopes of φ_iφ_jρ collapse
/// into the rule's weight exactly, leaving the polynomial
/// h̃_{i-1}(u) h̃_{j-1}(u)/√π, which the rule integrates exactly for
/// k ≤ order. The fixed-substitution [`inner_product_rho`] cannot
/// resolve these integrands once a is large: the Hermite oscillation
/// crosses the rule's alias frequency and the error is O(1).
pub fn orthonormality_gram(
    spec: &KernelSpec,
    k: usize,
    quad: &QuadratureRule,
) -> nalgebra::DMatrix<f64> {
    assert!(k >= 1 && quad.order() >= k, "need quadrature order >= k");
    let _ = spec; // the integrand is parameter-free after the substitution
    let mut gram = nalgebra::DMatrix::zeros(k, k);
    for (&u, &w) in quad.nodes().iter().zip(quad.weights()) {
        let h = hermite_normalized_upto(k, u);
        for i in 0..k {
            for j in i..k {
                gram[(i, j)] += w * h[i] * h[j];
            }
        }
    }
    for i in 0..k {
        for j in i..k {
            gram[(i, j)] /= SQRT_PI;
            gram[(j, i)] = gram[(i, j)];
        }
    }
    gram
}

/// ⟨g1, g2⟩_ρ = ∫ g1 g2 ρ dx via the substitution u = √(2b) x:
/// (1/√π) Σ_m w_m g1(u_m/√(2b)) g2(u_m/√(2b)).
pub fn inner_product_rho(
    g1: impl Fn(f64) -> f64,
    g2: impl Fn(f64) -> f64,
    b: f64,
    quad: &QuadratureRule,
) -> f64 {
    assert!(b > 0.0, "inner_product_rho requires b > 0");
    let s = (2.0 * b).sqrt();
    quad.integrate(|u| g1(u / s) * g2(u / s)) / SQRT_PI
}

/// Residual |∫ K(x, x') φ_j(x') ρ(x') dx' - λ_j φ_j(x)| of the eigenvalue
/// identity, by quadrature.
pub fn eigen_identity_residual(
    spec: &KernelSpec,
    j: usize,
    x: f64,
    quad: &QuadratureRule,
) -> f64 {
    assert!(quad.order() >= 200, "eigen-identity check needs order >= 200");
    let lhs = inner_product_rho(
        |t| kernel_exact(spec, x, t),
        |t| eigenfunction(spec, j, t),
        spec.b,
        quad,
    );
    (lhs - eigenvalue(spec, j) * eigenfunction(spec, j, x)).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::gauss_hermite_rule;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn half_spec() -> KernelSpec {
        KernelSpec::new(1.0, 0.25, 1.0).unwrap()
    }

    #[test]
    fn derived_constant_and_ratio() {
        let spec = half_spec();
        assert!((spec.c() - 0.75).abs() < 1e-15);
        assert!(spec.c() > spec.b());
        let r = spec.decay_ratio();
        assert!((r - 0.5).abs() < 1e-15);
        for a in [0.1, 1.0, 4.0, 64.0] {
            let s = KernelSpec::new(a, 0.25, 1.0).unwrap();
            assert!(s.c() > s.b());
            let r = s.decay_ratio();
            assert!(r > 0.0 && r < 1.0);
        }
    }

    #[test]
    fn spec_rejects_nonpositive_parameters() {
        assert!(KernelSpec::new(0.0, 0.25, 1.0).is_err());
        assert!(KernelSpec::new(1.0, -1.0, 1.0).is_err());
        assert!(KernelSpec::new(1.0, 0.25, 0.0).is_err());
    }

    #[test]
    fn eigenvalues_are_powers_of_two_at_reference_spec() {
        let spec = half_spec();
        assert!((eigenvalue(&spec, 1) - 0.5).abs() < 1e-15);
        for j in 1..=50usize {
            let rel = (eigenvalue(&spec, j) - 0.5f64.powi(j as i32)).abs() / 0.5f64.powi(j as i32);
            assert!(rel < 1e-12, "j={j}");
        }
        let ratio = eigenvalue(&spec, 3) / eigenvalue(&spec, 2);
        assert!((ratio - 0.5).abs() < 1e-14);
    }

    #[test]
    fn eigenvalues_decay_and_sum_finite() {
        for a in [0.5, 1.0, 4.0, 16.0] {
            let spec = KernelSpec::new(a, 0.25, 1.0).unwrap();
            assert!(eigenvalue(&spec, 1) <= 1.0);
            let r = spec.decay_ratio();
            // Log-domain ratio is exact to near machine precision.
            for j in 1..40 {
                let diff = log_eigenvalue(&spec, j + 1) - log_eigenvalue(&spec, j);
                assert!((diff - r.ln()).abs() < 1e-14);
            }
            let total = eigenvalue(&spec, 1) / (1.0 - r);
            assert!(total.is_finite());
        }
    }

    #[test]
    fn decay_ratio_increases_with_a() {
        let mut last = 0.0;
        for a in [1.0, 2.0, 4.0, 8.0] {
            let r = KernelSpec::new(a, 0.25, 1.0).unwrap().decay_ratio();
            assert!(r > last, "ratio must be strictly increasing in a");
            last = r;
        }
    }

    #[test]
    fn asymptotic_eigenvalue_examples() {
        let spec = KernelSpec::new(10.0, 0.25, 1.0).unwrap();
        let want = 0.1 * (-1.0f64).exp();
        assert!((eigenvalue_asymptotic(&spec, 10) - want).abs() < 1e-15);
        for a in [4.0, 16.0, 64.0] {
            let spec = KernelSpec::new(a, 0.25, 1.0).unwrap();
            for j in 1..=(3.0 * a) as usize {
                let ratio = eigenvalue_asymptotic_ratio(&spec, j);
                assert!((0.1..=10.0).contains(&ratio), "a={a} j={j} ratio={ratio}");
            }
        }
    }

    #[test]
    #[should_panic(expected = "index starts at 1")]
    fn asymptotic_rejects_j_zero() {
        eigenvalue_asymptotic(&half_spec(), 0);
    }

    #[test]
    fn eigenfunction_values_at_zero() {
        let spec = half_spec();
        assert!((eigenfunction(&spec, 1, 0.0) - 3.0f64.powf(0.25)).abs() < 1e-12);
        for a in [1.0, 3.0, 9.0] {
            let s = KernelSpec::new(a, 0.25, 1.0).unwrap();
            assert_eq!(eigenfunction(&s, 2, 0.0), 0.0);
        }
    }

    #[test]
    fn eigenfunctions_orthonormal_under_rho() {
        let quad = gauss_hermite_rule(400).unwrap();
        for a in [1.0, 4.0, 16.0] {
            let spec = KernelSpec::new(a, 0.25, 1.0).unwrap();
            let gram = orthonormality_gram(&spec, 40, &quad);
            for i in 0..40usize {
                for j in 0..40usize {
                    let want = if i == j { 1.0 } else { 0.0 };
                    let ip = gram[(i, j)];
                    assert!((ip - want).abs() < 1e-6, "a={a} i={} j={} ip={ip}", i + 1, j + 1);
                }
            }
        }
    }

    #[test]
    fn fixed_substitution_inner_product_agrees_at_reference_scale() {
        // At a = 1 the fixed-substitution quadrature resolves the basis;
        // cross-check it against the adapted Gram entries.
        let quad = gauss_hermite_rule(400).unwrap();
        let spec = half_spec();
        let gram = orthonormality_gram(&spec, 12, &quad);
        for i in 1..=12usize {
            for j in i..=12usize {
                let ip = inner_product_rho(
                    |x| eigenfunction(&spec, i, x),
                    |x| eigenfunction(&spec, j, x),
                    spec.b(),
                    &quad,
                );
                assert!((ip - gram[(i - 1, j - 1)]).abs() < 1e-8, "i={i} j={j}");
            }
        }
    }

    #[test]
    fn kernel_exact_examples() {
        let spec = half_spec();
        assert_eq!(kernel_exact(&spec, 0.3, 0.3), 1.0);
        assert!((kernel_exact(&spec, 0.0, 1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(kernel_exact(&spec, 0.2, -1.4), kernel_exact(&spec, -1.4, 0.2));
    }

    #[test]
    fn mercer_reconstruction_on_grid() {
        // k chosen from log r so that the geometric tail is below 1e-9.
        for a in [1.0, 4.0, 16.0] {
            let spec = KernelSpec::new(a, 0.25, 1.0).unwrap();
            let r = spec.decay_ratio();
            let k = ((1e-10f64.ln() - spec.log_lambda1() + (1.0 - r).ln()) / r.ln()).ceil()
                as usize;
            let basis = SpectralBasis::new(spec, k).unwrap();
            for ix in -4..=4 {
                for iy in -4..=4 {
                    let x = 0.5 * ix as f64;
                    let y = 0.5 * iy as f64;
                    let err = (mercer_truncated(&basis, x, y) - kernel_exact(&spec, x, y)).abs();
                    assert!(err < 1e-6, "a={a} x={x} y={y} err={err}");
                }
            }
        }
    }

    #[test]
    fn mercer_diagonal_bounded_and_monotone_in_k() {
        let spec = half_spec();
        let basis = SpectralBasis::new(spec, 60).unwrap();
        let diff = (mercer_truncated(&basis, 0.0, 0.0) - kernel_exact(&spec, 0.0, 0.0)).abs();
        assert!(diff < 1e-12);
        for x in [-1.5, 0.0, 0.7] {
            let mut prev = 0.0;
            for k in 1..=30usize {
                let b = SpectralBasis::new(spec, k).unwrap();
                let v = mercer_truncated(&b, x, x);
                assert!(v + 1e-12 >= prev, "partial sums increase in k");
                assert!(v <= 1.0 + 1e-9);
                prev = v;
            }
        }
    }

    #[test]
    fn basis_rejects_k_zero() {
        assert!(SpectralBasis::new(half_spec(), 0).is_err());
    }

    #[test]
    fn eigen_identity_residual_sweep() {
        // The fixed-substitution quadrature needs order 600 before the
        // a = 4 integrands are resolved below 1e-6.
        let quad = gauss_hermite_rule(600).unwrap();
        let spec = half_spec();
        assert!(eigen_identity_residual(&spec, 1, 0.0, &quad) < 1e-8);
        assert!(eigen_identity_residual(&spec, 2, 0.0, &quad) < 1e-8);
        for a in [1.0, 4.0] {
            let spec = KernelSpec::new(a, 0.25, 1.0).unwrap();
            for j in 1..=20usize {
                for x in [-2.0, -1.0, 0.0, 1.0, 2.0] {
                    let res = eigen_identity_residual(&spec, j, x, &quad);
                    assert!(res < 1e-6, "a={a} j={j} x={x} res={res}");
                }
            }
        }
    }

    #[test]
    fn rho_density_normalized_with_unit_variance() {
        let quad = gauss_hermite_rule(200).unwrap();
        let b = 0.25;
        assert!((rho_density(b, 0.0) - 0.398_942_280_4).abs() < 1e-9);
        let mass = inner_product_rho(|_| 1.0, |_| 1.0, b, &quad);
        assert!((mass - 1.0).abs() < 1e-10);
        let var = inner_product_rho(|x| x, |x| x, b, &quad);
        assert!((var - 1.0).abs() < 1e-9);
    }

    #[test]
    fn inner_product_orthogonality_example() {
        let quad = gauss_hermite_rule(400).unwrap();
        let spec = half_spec();
        let ip = inner_product_rho(
            |x| eigenfunction(&spec, 2, x),
            |x| eigenfunction(&spec, 3, x),
            spec.b(),
            &quad,
        );
        assert!(ip.abs() < 1e-8);
    }

    #[test]
    fn kl_sample_moments() {
        let spec = half_spec();
        let basis = SpectralBasis::new(spec, 8).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let trials = 100_000usize;
        let mut sums = vec![0.0f64; 8];
        let mut sqs = vec![0.0f64; 8];
        for _ in 0..trials {
            let theta = kl_sample(&basis, &mut rng);
            for j in 0..8 {
                sums[j] += theta[j];
                sqs[j] += theta[j] * theta[j];
            }
        }
        for j in 0..8 {
            let lambda = basis.lambda(j + 1);
            let mean = sums[j] / trials as f64;
            let se = (lambda / trials as f64).sqrt();
            assert!(mean.abs() < 4.0 * se, "j={j}");
            if j < 5 {
                let var = sqs[j] / trials as f64 - mean * mean;
                assert!((var - lambda).abs() / lambda < 0.05, "j={j}");
            }
        }
    }

    #[test]
    fn kl_truncation_mse_matches_tail_sum() {
        // E ||f - f^t||²_{2,ρ} over prior draws equals σ² Σ_{j>k} λ_j;
        // computed in coefficients with a longer basis k' > k.
        let spec = half_spec();
        let (k, k_long) = (4usize, 40usize);
        let basis_long = SpectralBasis::new(spec, k_long).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let trials = 200_000usize;
        let mut acc = 0.0;
        for _ in 0..trials {
            let theta = kl_sample(&basis_long, &mut rng);
            acc += theta[k..].iter().map(|t| t * t).sum::<f64>();
        }
        let got = acc / trials as f64;
        let want: f64 = (k + 1..=k_long).map(|j| eigenvalue(&spec, j)).sum();
        assert!((got - want).abs() / want < 0.02, "got={got} want={want}");
        let closed = lambda_tail_sum(&spec, k) - lambda_tail_sum(&spec, k_long);
        assert!((want - closed).abs() < 1e-15);
    }

    #[test]
    fn supnorm_bound_examples() {
        let spec = KernelSpec::new(16.0, 0.25, 1.0).unwrap();
        let want = 2.0 * 0.25f64.exp();
        assert!((supnorm_bound(&spec, 16) - want).abs() < 1e-12);
        let mut last = 0.0;
        for k in [1usize, 4, 16, 64] {
            let v = supnorm_bound(&spec, k);
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn empirical_supnorm_examples() {
        let spec = half_spec();
        let grid = default_supnorm_grid(&spec, 1);
        let got = empirical_supnorm(&spec, 1, &grid);
        assert!((got - 3.0f64.powf(0.25)).abs() < 1e-6);

        let reflected: Vec<f64> = grid.iter().map(|x| -x).collect();
        let got_r = empirical_supnorm(&spec, 1, &reflected);
        assert!((got - got_r).abs() < 1e-12);

        let mut prev = 0.0;
        for k in 1..=12usize {
            let g = default_supnorm_grid(&spec, k);
            let v = empirical_supnorm(&spec, k, &g);
            assert!(v + 1e-12 >= prev);
            prev = v;
        }
    }

    #[test]
    fn lemma2_style_ratio_bounded() {
        for a in [4.0f64, 16.0, 64.0] {
            let spec = KernelSpec::new(a, 0.25, 1.0).unwrap();
            for t in [0.5, 1.0, 2.0] {
                let k = ((a * t).floor() as usize).max(1);
                let grid = default_supnorm_grid(&spec, k);
                let ratio = empirical_supnorm(&spec, k, &grid) / supnorm_bound(&spec, k);
                assert!(ratio <= 10.0, "a={a} t={t} ratio={ratio}");
            }
        }
    }

    #[test]
    fn tail_length_reaches_target() {
        let spec = half_spec();
        let eps = 0.3;
        let j = tail_length_for(&spec, 4, eps);
        assert!(j >= 4);
        assert!(lambda_tail_sum(&spec, j) < 1e-3 * eps * eps);
        if j > 4 {
            assert!(lambda_tail_sum(&spec, j - 1) >= 1e-3 * eps * eps);
        }
    }
}
