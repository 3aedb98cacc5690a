//! Wasserstein distance between Gaussian measures, PSD matrix square
//! roots and norms, and chi-square tail probabilities.
//!
//! Only the commuting-covariance W2 formula
//! d²(P, Q) = ‖μ₁ - μ₂‖² + ‖Σ₁^{1/2} - Σ₂^{1/2}‖²_F is implemented: every
//! comparison in this crate has one covariance equal to a multiple of the
//! identity, which commutes with everything. Non-commuting inputs are
//! rejected loudly rather than silently approximated.

use nalgebra::{DMatrix, DVector};

use crate::special::ln_gamma;
use crate::{Error, Result};

/// Relative eigenvalue clamp for the PSD projection at construction.
const PSD_CLAMP_REL: f64 = 1e-10;

/// A finite-dimensional Gaussian N(mean, cov) with symmetric PSD
/// covariance.
///
/// Construction symmetrizes within 1e-12, rejects eigenvalues below
/// -1e-10 relative to the largest, and clamps the remaining negatives to
/// zero.
#[derive(Debug, Clone)]
pub struct GaussianMeasure {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianMeasure {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::Dimension(format!(
                "covariance must be {d}x{d}, got {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let scale = cov.amax().max(1.0);
        let mut sym = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let gap = (cov[(i, j)] - cov[(j, i)]).abs();
                if gap > 1e-12 * scale {
                    return Err(Error::InvalidInput(format!(
                        "covariance not symmetric at ({i},{j}): gap {gap:e}"
                    )));
                }
                sym[(i, j)] = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            }
        }
        let mut eigen = sym.symmetric_eigen();
        let max_eig = eigen.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let floor = -PSD_CLAMP_REL * max_eig.max(1.0);
        for ev in eigen.eigenvalues.iter_mut() {
            if *ev < floor {
                return Err(Error::InvalidInput(format!(
                    "covariance not PSD: eigenvalue {ev:e} below clamp threshold"
                )));
            }
            if *ev < 0.0 {
                *ev = 0.0;
            }
        }
        let cov = eigen.recompose();
        Ok(Self { mean, cov })
    }

    /// Convenience constructor from slices with a dense covariance in
    /// row-major order.
    pub fn from_rows(mean: &[f64], cov_rows: &[Vec<f64>]) -> Result<Self> {
        let d = mean.len();
        if cov_rows.len() != d || cov_rows.iter().any(|r| r.len() != d) {
            return Err(Error::Dimension(format!("covariance must be {d}x{d}")));
        }
        let cov = DMatrix::from_fn(d, d, |i, j| cov_rows[i][j]);
        Self::new(DVector::from_column_slice(mean), cov)
    }

    /// One-dimensional N(mean, var).
    pub fn scalar(mean: f64, var: f64) -> Result<Self> {
        Self::new(
            DVector::from_element(1, mean),
            DMatrix::from_element(1, 1, var),
        )
    }

    /// N(mean, scale·I).
    pub fn isotropic(mean: DVector<f64>, scale: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(mean, DMatrix::identity(d, d) * scale)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }
}

/// Unique PSD square root via symmetric eigendecomposition.
///
/// Rejects non-symmetric input and eigenvalues below -1e-8; negatives
/// above that are clamped to zero.
pub fn matrix_sqrt_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension("matrix square root needs a square matrix".into()));
    }
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-9 * scale {
                return Err(Error::InvalidInput(
                    "matrix square root rejected: input not symmetric".into(),
                ));
            }
        }
    }
    let sym = (m + m.transpose()) * 0.5;
    let mut eigen = sym.symmetric_eigen();
    for ev in eigen.eigenvalues.iter_mut() {
        if *ev < -1e-8 {
            return Err(Error::InvalidInput(format!(
                "matrix square root rejected: eigenvalue {ev:e} is negative"
            )));
        }
        *ev = ev.max(0.0).sqrt();
    }
    let root = eigen.recompose();
    Ok((&root + root.transpose()) * 0.5)
}

/// W2 distance between Gaussians with commuting covariances:
/// √(‖μ₁ - μ₂‖² + ‖Σ₁^{1/2} - Σ₂^{1/2}‖²_F).
pub fn w2_commuting(p: &GaussianMeasure, q: &GaussianMeasure) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::Dimension(format!(
            "measures have different dimensions {} and {}",
            p.dim(),
            q.dim()
        )));
    }
    let commutator = p.cov() * q.cov() - q.cov() * p.cov();
    let gap = commutator.norm();
    if gap > 1e-8 {
        return Err(Error::InvalidInput(format!(
            "covariances do not commute (Frobenius gap {gap:e}); \
             the commuting W2 formula does not apply"
        )));
    }
    let s1 = matrix_sqrt_psd(p.cov())?;
    let s2 = matrix_sqrt_psd(q.cov())?;
    let mean_sq = (p.mean() - q.mean()).norm_squared();
    let cov_sq = (s1 - s2).norm_squared();
    Ok((mean_sq + cov_sq).sqrt())
}

/// Empirical 1-D W2 via the comonotone coupling: sort both samples and
/// take the root mean square of paired differences.
pub fn empirical_w2_1d(samples_p: &[f64], samples_q: &[f64]) -> Result<f64> {
    if samples_p.is_empty() || samples_q.is_empty() {
        return Err(Error::InvalidInput("empirical W2 needs nonempty samples".into()));
    }
    if samples_p.len() != samples_q.len() {
        return Err(Error::Dimension(format!(
            "sample counts differ: {} vs {}",
            samples_p.len(),
            samples_q.len()
        )));
    }
    let mut a = samples_p.to_vec();
    let mut b = samples_q.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let ms: f64 = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len() as f64;
    Ok(ms.sqrt())
}

/// P(χ²_k > t) via the regularized upper incomplete gamma function.
///
/// Series expansion for t < k + 1, Lentz continued fraction otherwise;
/// absolute accuracy well below 1e-12 in the tested ranges.
pub fn chi2_tail(k: usize, t: f64) -> f64 {
    assert!(k >= 1, "chi2_tail requires k >= 1");
    assert!(t >= 0.0, "chi2_tail requires t >= 0");
    if t == 0.0 {
        return 1.0;
    }
    let a = k as f64 / 2.0;
    let x = t / 2.0;
    if t < (k + 1) as f64 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

/// Regularized lower incomplete gamma P(a, x) by series, for x < a + 1.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let log_pre = -x + a * x.ln() - ln_gamma(a);
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..500 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    (log_pre.exp() * sum).clamp(0.0, 1.0)
}

/// Regularized upper incomplete gamma Q(a, x) by Lentz's continued
/// fraction, for x ≥ a + 1 (and generally x not too small).
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let log_pre = -x + a * x.ln() - ln_gamma(a);
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (log_pre.exp() * h).clamp(0.0, 1.0)
}

/// Frobenius norm, operator norm, smallest nonzero singular value, and
/// condition number of a matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixNorms {
    pub frobenius: f64,
    pub operator: f64,
    pub smin: f64,
    pub cond: f64,
}

pub fn matrix_norms(m: &DMatrix<f64>) -> MatrixNorms {
    let frobenius = m.norm();
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .filter(|&s| s > smax * 1e-12)
        .fold(f64::INFINITY, f64::min);
    let smin = if smin.is_finite() { smin } else { 0.0 };
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    MatrixNorms {
        frobenius,
        operator: smax,
        smin,
        cond,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_spd(d: usize, rng: &mut ChaCha12Rng) -> DMatrix<f64> {
        let m = DMatrix::from_fn(d, d, |_, _| {
            <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
        });
        &m * m.transpose() + DMatrix::identity(d, d) * 0.1
    }

    #[test]
    fn sqrt_of_identity_and_diagonal() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert!((matrix_sqrt_psd(&id).unwrap() - &id).norm() < 1e-14);

        let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
        let root = matrix_sqrt_psd(&diag).unwrap();
        assert!((root[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((root[(1, 1)] - 3.0).abs() < 1e-12);
        assert!(root[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn sqrt_reconstructs_random_spd() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..10 {
            let m = random_spd(5, &mut rng);
            let root = matrix_sqrt_psd(&m).unwrap();
            let rel = (&root * &root - &m).norm() / m.norm();
            assert!(rel < 1e-9, "rel={rel}");
        }
    }

    #[test]
    fn sqrt_rejects_bad_inputs() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        assert!(matrix_sqrt_psd(&asym).is_err());
        let neg = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.5]));
        assert!(matrix_sqrt_psd(&neg).is_err());
    }

    #[test]
    fn w2_examples() {
        let p = GaussianMeasure::scalar(0.0, 1.0).unwrap();
        assert!(w2_commuting(&p, &p).unwrap().abs() < 1e-14);

        let q = GaussianMeasure::scalar(3.0, 1.0).unwrap();
        assert!((w2_commuting(&p, &q).unwrap() - 3.0).abs() < 1e-12);

        let p2 = GaussianMeasure::isotropic(DVector::zeros(2), 1.0).unwrap();
        let q2 = GaussianMeasure::isotropic(DVector::zeros(2), 4.0).unwrap();
        let d = w2_commuting(&p2, &q2).unwrap();
        assert!((d - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn w2_rejects_noncommuting() {
        let c1 = DMatrix::from_row_slice(2, 2, &[2.0, 0.9, 0.9, 1.0]);
        let c2 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let p = GaussianMeasure::new(DVector::zeros(2), c1).unwrap();
        let q = GaussianMeasure::new(DVector::zeros(2), c2).unwrap();
        assert!(w2_commuting(&p, &q).is_err());
    }

    #[test]
    fn w2_metric_axioms_on_commuting_triples() {
        // Gaussians with diagonal covariances commute pairwise.
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mk = |rng: &mut ChaCha12Rng| {
                let mean = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
                let cov = DMatrix::from_diagonal(&DVector::from_fn(3, |_, _| {
                    rng.random_range(0.2..3.0)
                }));
                GaussianMeasure::new(mean, cov).unwrap()
            };
            let (p, q, r) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
            let dpq = w2_commuting(&p, &q).unwrap();
            let dqp = w2_commuting(&q, &p).unwrap();
            assert_eq!(dpq, dqp, "symmetry is exact");
            let dpr = w2_commuting(&p, &r).unwrap();
            let dqr = w2_commuting(&q, &r).unwrap();
            assert!(dpr <= dpq + dqr + 1e-10, "triangle inequality");
            assert!(w2_commuting(&p, &p).unwrap() < 1e-14);
        }
    }

    #[test]
    fn empirical_w2_examples() {
        let a = [0.4, -1.0, 2.0, 0.1];
        assert!(empirical_w2_1d(&a, &a).unwrap() < 1e-15);
        let b: Vec<f64> = a.iter().map(|x| x + 3.0).collect();
        assert!((empirical_w2_1d(&a, &b).unwrap() - 3.0).abs() < 1e-12);
        assert!(empirical_w2_1d(&a, &[]).is_err());
        assert!(empirical_w2_1d(&a, &[1.0]).is_err());
    }

    #[test]
    fn empirical_w2_matches_closed_form() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let n = 100_000usize;
        let draw = |mu: f64, sd: f64, rng: &mut ChaCha12Rng| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    mu + sd * z
                })
                .collect()
        };
        let sp = draw(0.0, 1.0, &mut rng);
        let sq = draw(1.0, 2.0, &mut rng);
        let est = empirical_w2_1d(&sp, &sq).unwrap();
        let want = 2.0f64.sqrt();
        assert!((est - want).abs() / want < 0.02, "est={est}");
    }

    #[test]
    fn chi2_tail_closed_forms() {
        assert_eq!(chi2_tail(5, 0.0), 1.0);
        // k = 2: P(χ²₂ > t) = e^{-t/2}.
        let t = 2.0 * 2.0f64.ln();
        assert!((chi2_tail(2, t) - 0.5).abs() < 1e-12);
        for t in [0.1, 1.0, 3.0, 10.0, 40.0] {
            let want = (-t / 2.0f64).exp();
            assert!((chi2_tail(2, t) - want).abs() < 1e-12, "t={t}");
        }
        // k = 1: P(χ²₁ > 1) = 2(1 - Φ(1)).
        assert!((chi2_tail(1, 1.0) - 0.317_310_507_862_914).abs() < 1e-5);
    }

    #[test]
    fn chi2_tail_monotonicity() {
        for k in 1..=10usize {
            let mut last = 1.0 + 1e-12;
            for i in 0..60 {
                let t = i as f64 * 0.5;
                let v = chi2_tail(k, t);
                if i > 0 {
                    assert!(v < last, "decreasing in t, k={k} t={t}");
                }
                last = v;
            }
        }
        let t = 12.0;
        let mut last = 0.0;
        for k in 1..=11usize {
            let v = chi2_tail(k, t);
            assert!(v > last, "increasing in k at fixed t > k");
            last = v;
        }
    }

    #[test]
    fn matrix_norms_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        let n = matrix_norms(&id);
        assert!((n.frobenius - 3.0f64.sqrt()).abs() < 1e-12);
        assert!((n.operator - 1.0).abs() < 1e-12);
        assert!((n.smin - 1.0).abs() < 1e-12);
        assert!((n.cond - 1.0).abs() < 1e-12);

        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 4.0]));
        let n = matrix_norms(&d);
        assert!((n.operator - 4.0).abs() < 1e-12);
        assert!((n.smin - 3.0).abs() < 1e-12);
        assert!((n.frobenius - 5.0).abs() < 1e-12);
    }

    #[test]
    fn product_and_difference_inequalities_hold() {
        // s_min(A)‖B‖ ≤ ‖AB‖ ≤ ‖A‖₂‖B‖ in Frobenius and operator norms,
        // and s_min(A - B) ≥ s_min(A) - ‖B‖₂ when s_min(A) ≥ ‖B‖₂.
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let mut difference_cases = 0usize;
        for trial in 0..50 {
            let a = DMatrix::from_fn(6, 6, |_, _| {
                <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            });
            let b = DMatrix::from_fn(6, 6, |_, _| {
                <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            });
            let (na, nb, nab) = (matrix_norms(&a), matrix_norms(&b), matrix_norms(&(&a * &b)));
            let slack = 1e-10 * (1.0 + na.operator * nb.operator);
            assert!(na.smin * nb.frobenius <= nab.frobenius + slack, "trial={trial}");
            assert!(nab.frobenius <= na.operator * nb.frobenius + slack);
            assert!(na.smin * nb.operator <= nab.operator + slack);
            assert!(nab.operator <= na.operator * nb.operator + slack);

            // Rescale so the difference inequality's hypothesis holds.
            let a_big = &a * (2.0 * nb.operator / na.smin.max(1e-12));
            let na_big = matrix_norms(&a_big);
            if na_big.smin >= nb.operator {
                difference_cases += 1;
                let nd = matrix_norms(&(&a_big - &b));
                assert!(nd.smin >= na_big.smin - nb.operator - slack);
            }
        }
        assert!(difference_cases >= 20, "hypothesis held too rarely");
    }

    #[test]
    fn gaussian_measure_validates() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, -0.3, 1.0]);
        assert!(GaussianMeasure::new(DVector::zeros(2), bad).is_err());
        let neg = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(GaussianMeasure::new(DVector::zeros(2), neg).is_err());
        // A tiny negative eigenvalue is clamped to zero.
        let eps = 1e-13;
        let nearly = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -eps]));
        let g = GaussianMeasure::new(DVector::zeros(2), nearly).unwrap();
        assert!(g.cov()[(1, 1)] >= 0.0);
    }
}
