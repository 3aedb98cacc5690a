//! Physicists' Hermite polynomials, their classical bounds, and
//! Gauss–Hermite quadrature for integrals against the weight e^{-u²}.
//!
//! High-degree evaluation goes through the normalized Hermite-function
//! recurrence ψ_{j+1}(z) = z√(2/(j+1)) ψ_j(z) - √(j/(j+1)) ψ_{j-1}(z),
//! which carries the Gaussian envelope along and never forms the raw
//! 2^j j! factors; bound formulas are assembled in the log domain and
//! exponentiated last.

use nalgebra::DMatrix;

use crate::special::ln_factorial;
use crate::{Error, Result};

const SQRT_PI: f64 = 1.772_453_850_905_516;
const LN_2: f64 = std::f64::consts::LN_2;

/// Gauss–Hermite rule: nodes and weights for ∫ f(u) e^{-u²} du.
///
/// Nodes are strictly increasing and symmetric about zero; the weights sum
/// to √π and the rule integrates polynomials of degree ≤ 2·order - 1
/// exactly. Immutable after construction and freely shareable.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Σ_m w_m f(u_m), approximating ∫ f(u) e^{-u²} du.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&u, &w)| w * f(u))
            .sum()
    }
}

/// Build the Gauss–Hermite rule of the given order (1 ≤ order ≤ 1000).
///
/// Golub–Welsch construction: the Jacobi matrix of the Hermite recurrence
/// is symmetric tridiagonal with zero diagonal and off-diagonals √(i/2);
/// its eigenvalues are the nodes. Each node is then polished by Newton
/// iteration on the normalized Hermite function ψ_n (whose zeros are the
/// nodes, with ψ_n'(u) = √(2n)·ψ_{n-1}(u) there) and the weight computed
/// as w_i = e^{-u_i²}/(n·ψ_{n-1}(u_i)²). Dense eigenvectors would lose
/// all relative accuracy in the exponentially small outer weights; the
/// recurrence route keeps every representable weight accurate.
pub fn gauss_hermite_rule(order: usize) -> Result<QuadratureRule> {
    if order == 0 || order > 1000 {
        return Err(Error::InvalidInput(format!(
            "quadrature order must be in 1..=1000, got {order}"
        )));
    }
    let mut jacobi = DMatrix::<f64>::zeros(order, order);
    for i in 1..order {
        let beta = (i as f64 / 2.0).sqrt();
        jacobi[(i - 1, i)] = beta;
        jacobi[(i, i - 1)] = beta;
    }
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().cloned().collect();
    if nodes.iter().any(|n| !n.is_finite()) {
        return Err(Error::Numerical(format!(
            "Gauss-Hermite eigen-solve produced non-finite nodes at order {order}"
        )));
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let slope_scale = (2.0 * order as f64).sqrt();
    for node in nodes.iter_mut() {
        for _ in 0..3 {
            let (value, value_log) = hermite_weighted_scaled(order, *node);
            let (slope, slope_log) = hermite_weighted_scaled(order - 1, *node);
            if slope == 0.0 {
                break;
            }
            let step = value / (slope_scale * slope) * (value_log - slope_log).exp();
            *node -= step;
            if step.abs() < 1e-15 * node.abs().max(1.0) {
                break;
            }
        }
    }
    // Enforce exact ± symmetry of the polished nodes.
    for i in 0..order / 2 {
        let s = 0.5 * (nodes[order - 1 - i] - nodes[i]);
        nodes[order - 1 - i] = s;
        nodes[i] = -s;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }

    let weights: Vec<f64> = nodes
        .iter()
        .map(|&u| {
            let (psi, psi_log) = hermite_weighted_scaled(order - 1, u);
            let log_w = -u * u - (order as f64).ln() - 2.0 * psi_log - (psi * psi).ln();
            log_w.exp()
        })
        .collect();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Numerical(format!(
            "Gauss-Hermite weight computation failed at order {order}"
        )));
    }
    Ok(QuadratureRule {
        order,
        nodes,
        weights,
    })
}

/// H_j(z) by the three-term recurrence H_{j+1} = 2z H_j - 2j H_{j-1}.
///
/// Stable in the documented range j ≤ 500; may overflow to ±∞ at extreme
/// (j, z), which callers needing bounded values avoid via
/// [`hermite_weighted`].
pub fn hermite_eval(j: usize, z: f64) -> f64 {
    if j == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut curr = 2.0 * z;
    for m in 1..j {
        let next = 2.0 * z * curr - 2.0 * (m as f64) * prev;
        prev = curr;
        curr = next;
    }
    curr
}

/// Normalized Hermite function ψ_j(z) = H_j(z) e^{-z²/2} / √(2^j j! √π).
///
/// Never overflows and satisfies |ψ_j(z)| ≤ 1 for all j and z.
pub fn hermite_weighted(j: usize, z: f64) -> f64 {
    let psi0 = (-0.5 * z * z).exp() / SQRT_PI.sqrt();
    if j == 0 {
        return psi0;
    }
    let mut prev = psi0;
    let mut curr = std::f64::consts::SQRT_2 * z * psi0;
    for m in 1..j {
        let mf = m as f64;
        let next = z * (2.0 / (mf + 1.0)).sqrt() * curr - (mf / (mf + 1.0)).sqrt() * prev;
        prev = curr;
        curr = next;
    }
    curr
}

/// ψ_j(z) as (mantissa, log-scale) with ψ_j = mantissa·e^{log-scale}.
///
/// The plain recurrence of [`hermite_weighted`] starts from the envelope
/// e^{-z²/2}, which underflows for |z| beyond ~38 even where ψ_j itself
/// is O(1) (nodes of very high-order rules). Carrying the scale
/// separately keeps every intermediate representable.
fn hermite_weighted_scaled(j: usize, z: f64) -> (f64, f64) {
    let mut log_scale = -0.5 * z * z - 0.25 * std::f64::consts::PI.ln();
    let mut prev = 1.0f64;
    if j == 0 {
        return (prev, log_scale);
    }
    let mut curr = std::f64::consts::SQRT_2 * z;
    for m in 1..j {
        let mf = m as f64;
        let next = z * (2.0 / (mf + 1.0)).sqrt() * curr - (mf / (mf + 1.0)).sqrt() * prev;
        prev = curr;
        curr = next;
        let mag = curr.abs().max(prev.abs());
        if mag > 1e150 || (mag > 0.0 && mag < 1e-150) {
            curr /= mag;
            prev /= mag;
            log_scale += mag.ln();
        }
    }
    (curr, log_scale)
}

/// Cramér's bound 2·√(2^j j!)·e^{z²/2}, valid for every real z.
///
/// Assembled in the log domain; +∞ when the exponent exceeds the
/// representable range.
pub fn cramer_bound(j: usize, z: f64) -> f64 {
    let log = LN_2 + 0.5 * (j as f64 * LN_2 + ln_factorial(j)) + 0.5 * z * z;
    log.exp()
}

/// Polynomial tail bound √2·2^j·|z|^j, valid when z² > j.
pub fn poly_bound(j: usize, z: f64) -> Result<f64> {
    if j == 0 {
        return Err(Error::InvalidInput("poly_bound requires j >= 1".into()));
    }
    if z * z <= j as f64 {
        return Err(Error::InvalidInput(format!(
            "poly_bound requires z^2 > j, got z={z}, j={j}"
        )));
    }
    let log = 0.5 * LN_2 + j as f64 * (LN_2 + z.abs().ln());
    Ok(log.exp())
}

/// H_j(z) through the integral representation
/// (2^j/√π) ∫ (z + it)^j e^{-t²} dt, evaluated by quadrature.
///
/// Only the real part of (z + it)^j survives by symmetry; it is expanded
/// binomially so the whole computation stays in real arithmetic. Requires
/// a rule of order ≥ j + 10.
pub fn integral_representation_eval(j: usize, z: f64, quad: &QuadratureRule) -> f64 {
    assert!(
        quad.order() >= j + 10,
        "integral representation needs quadrature order >= j + 10"
    );
    // Re (z + it)^j = Σ_{m even} (-1)^{m/2} C(j, m) z^{j-m} t^m.
    let mut binom = Vec::with_capacity(j + 1);
    let mut c = 1.0f64;
    for m in 0..=j {
        binom.push(c);
        c = c * (j - m) as f64 / (m + 1) as f64;
    }
    let integral = quad.integrate(|t| {
        let mut acc = 0.0;
        let mut sign = 1.0;
        let mut m = 0;
        while m <= j {
            acc += sign * binom[m] * z.powi((j - m) as i32) * t.powi(m as i32);
            sign = -sign;
            m += 2;
        }
        acc
    });
    (j as f64 * LN_2).exp() / SQRT_PI * integral
}
