//! Exact probabilities for the statistic `V` given the nuisance parameter.
//!
//! Conditionally on the variance-ratio statistic, `V / K` is Student-t with
//! `ν = ν₁ + ν₂` degrees of freedom, so for any criterion `v(θ)`
//!
//! ```text
//! Pr{V ≤ v(Θ) | γ} = E_X[ S_ν( v(c(X)) / K_{X,γ} ) ],   X ~ Beta(ν₁/2, ν₂/2)
//! K²_{x,γ} = ν₁ν₂ / (ν [ν₁(1−γ)(1−x) + ν₂γx]),   c(x) = ν₂γx / [ν₁(1−γ)(1−x) + ν₂γx]
//! ```
//!
//! The beta expectation is integrated in `φ` with `x = sin²φ`, which removes
//! the endpoint singularities of the beta weight for one-degree samples.

use crate::criterion::{Criterion, Negated, TableCriterion};
use crate::design::{theta_of_ratio, Design, Dims, VariancePoint};
use crate::distributions::special::{ln_beta, normal_cdf};
use crate::distributions::{chi2_quantile_upper, student_t_cdf, student_t_pdf, z_density, Dof};
use crate::error::{Error, Result};
use crate::quadrature::{fixed_rule, integrate_pieces, Tolerance};
use std::f64::consts::FRAC_PI_2;

/// Absolute tolerance of every kernel quadrature.
pub const KERNEL_TOL: f64 = 1e-10;

/// Gamma-weight tail mass discarded by the `n₁ = ∞` integrals.
pub const LIMIT_TAIL_MASS: f64 = 1e-13;

/// `K_{z,ζ}` with `K² = (ν₁z/ζ + ν₂)(n₂ζ + n₁) / (ν(n₂z + n₁))`.
pub fn k_factor_z(z: f64, zeta: f64, d: &Design) -> Result<f64> {
    let m = d.dims()?;
    if !(z > 0.0) || !(zeta > 0.0) || zeta.is_infinite() {
        return Err(Error::Domain(format!("k_factor_z needs z > 0 and finite zeta > 0, got z={z}, zeta={zeta}")));
    }
    let k2 = (m.nu1 * z / zeta + m.nu2) * (m.n2 * zeta + m.n1) / (m.nu * (m.n2 * z + m.n1));
    Ok(k2.sqrt())
}

/// `K_{x,γ}` with `K² = ν₁ν₂ / (ν[ν₁(1−γ)(1−x) + ν₂γx])`.
pub fn k_factor_x(x: f64, gamma: f64, d: &Design) -> Result<f64> {
    let m = d.dims()?;
    check_unit("x", x)?;
    check_unit("gamma", gamma)?;
    let bracket = m.nu1 * (1.0 - gamma) * (1.0 - x) + m.nu2 * gamma * x;
    if bracket <= 0.0 {
        return Err(Error::DegenerateCorner { x, gamma });
    }
    Ok((m.nu1 * m.nu2 / (m.nu * bracket)).sqrt())
}

/// `k_{x,γ}` of the statistic `(X̄₁ − X̄₂)/√(f₁S₁² + f₂S₂²) = T_ν / k`:
/// `k² = ν[f₁n₁γx/ν₁ + f₂n₂(1−γ)(1−x)/ν₂]`.
pub fn k_factor_general(x: f64, gamma: f64, f1: f64, f2: f64, d: &Design) -> Result<f64> {
    let m = d.dims()?;
    check_unit("x", x)?;
    check_unit("gamma", gamma)?;
    if !(f1 > 0.0) || !(f2 > 0.0) {
        return Err(Error::Domain(format!("weights must be positive, got f1={f1}, f2={f2}")));
    }
    let k2 = m.nu * (f1 * m.n1 * gamma * x / m.nu1 + f2 * m.n2 * (1.0 - gamma) * (1.0 - x) / m.nu2);
    if k2 <= 0.0 {
        return Err(Error::DegenerateCorner { x, gamma });
    }
    Ok(k2.sqrt())
}

/// Weights `(f₁, f₂)` of the pooled statistic `T(ζ̃)` built with a guessed
/// variance ratio `ζ̃`.
pub fn t_guess_weights(zeta_guess: f64, d: &Design) -> Result<(f64, f64)> {
    let m = d.dims()?;
    if !(zeta_guess > 0.0) || zeta_guess.is_infinite() {
        return Err(Error::Domain(format!("zeta guess must be finite and positive, got {zeta_guess}")));
    }
    let f1 = m.nu1 / m.nu * (1.0 / m.n1 + 1.0 / (m.n2 * zeta_guess));
    let f2 = m.nu2 / m.nu * (zeta_guess / m.n1 + 1.0 / m.n2);
    Ok((f1, f2))
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must lie in [0, 1], got {v}")))
    }
}

/// Precomputed beta-expectation machinery for one finite design.
#[derive(Debug, Clone)]
pub struct FiniteKernel {
    pub dims: Dims,
    nu: Dof,
    ln_norm: f64,
    breaks: [f64; 3],
    tol: Tolerance,
}

impl FiniteKernel {
    pub fn new(d: &Design) -> Result<Self> {
        let dims = d.dims()?;
        // weight in φ: 2 sin^{ν₁−1}φ cos^{ν₂−1}φ / B(ν₁/2, ν₂/2)
        let ln_norm = 2f64.ln() - ln_beta(0.5 * dims.nu1, 0.5 * dims.nu2);
        let mean = dims.nu1 / dims.nu;
        let phi_mid = mean.sqrt().asin();
        Ok(Self {
            dims,
            nu: Dof::Finite(dims.nu),
            ln_norm,
            breaks: [0.0, phi_mid, FRAC_PI_2],
            tol: Tolerance::abs(KERNEL_TOL),
        })
    }

    pub fn with_tolerance(mut self, abs: f64) -> Self {
        self.tol = Tolerance::abs(abs);
        self
    }

    /// `E[g(X, 1 − X)]` for `X ~ Beta(ν₁/2, ν₂/2)`.
    pub fn beta_expectation<G: FnMut(f64, f64) -> f64>(&self, mut g: G) -> Result<f64> {
        let (a1, a2) = (self.dims.nu1 - 1.0, self.dims.nu2 - 1.0);
        let ln_norm = self.ln_norm;
        let integrand = |phi: f64| {
            let (s, c) = phi.sin_cos();
            let w = (a1 * s.ln() + a2 * c.ln() + ln_norm).exp();
            if w == 0.0 {
                return 0.0;
            }
            w * g(s * s, c * c)
        };
        Ok(integrate_pieces(integrand, &self.breaks, self.tol)?.value)
    }

    /// `Pr{V ≤ v(Θ) | γ}`.
    pub fn prob_below<C: Criterion + ?Sized>(&self, crit: &C, gamma: f64) -> Result<f64> {
        check_unit("gamma", gamma)?;
        let m = self.dims;
        let nu = self.nu;
        let scale = m.nu / (m.nu1 * m.nu2);
        let p = self.beta_expectation(|x, y| {
            let bracket = m.nu1 * (1.0 - gamma) * y + m.nu2 * gamma * x;
            if bracket <= 0.0 {
                return 0.5;
            }
            let c = m.nu2 * gamma * x / bracket;
            let v = crit.at_c(c);
            student_t_cdf(v * (scale * bracket).sqrt(), nu)
        })?;
        Ok(p.clamp(0.0, 1.0))
    }

    /// `∂/∂s Pr{V ≤ v(Θ) + s | γ}` at `s = 0`: the response to a uniform shift
    /// of the whole criterion.
    pub fn shift_derivative<C: Criterion + ?Sized>(&self, crit: &C, gamma: f64) -> Result<f64> {
        let m = self.dims;
        let nu = self.nu;
        let scale = m.nu / (m.nu1 * m.nu2);
        self.beta_expectation(|x, y| {
            let bracket = m.nu1 * (1.0 - gamma) * y + m.nu2 * gamma * x;
            if bracket <= 0.0 {
                return 0.0;
            }
            let c = m.nu2 * gamma * x / bracket;
            let inv_k = (scale * bracket).sqrt();
            student_t_pdf(crit.at_c(c) * inv_k, nu) * inv_k
        })
    }
}

impl FiniteKernel {
    /// Fixed quadrature rule in `φ` for [`FiniteKernel::sensitivity`].
    pub fn sensitivity_rule(&self, panels: usize) -> Vec<(f64, f64)> {
        fixed_rule(&self.breaks, panels)
    }

    /// `∂ Pr{V ≤ v(Θ) | γ} / ∂vⱼ` for every node `j` of a table criterion,
    /// accumulated into `row`.
    pub fn sensitivity(&self, crit: &TableCriterion, gamma: f64, rule: &[(f64, f64)], row: &mut [f64]) {
        let m = self.dims;
        let scale = m.nu / (m.nu1 * m.nu2);
        let (a1, a2) = (m.nu1 - 1.0, m.nu2 - 1.0);
        let mut basis = Vec::with_capacity(16);
        row.fill(0.0);
        for &(phi, w) in rule {
            let (s, co) = phi.sin_cos();
            let (x, y) = (s * s, co * co);
            let bracket = m.nu1 * (1.0 - gamma) * y + m.nu2 * gamma * x;
            if bracket <= 0.0 {
                continue;
            }
            let weight = w * (a1 * s.ln() + a2 * co.ln() + self.ln_norm).exp();
            if weight == 0.0 {
                continue;
            }
            let c = m.nu2 * gamma * x / bracket;
            let inv_k = (scale * bracket).sqrt();
            let g = weight * student_t_pdf(crit.at_c(c) * inv_k, self.nu) * inv_k;
            crit.basis_weights_at_c(c, &mut basis);
            for &(j, b) in &basis {
                row[j] += g * b;
            }
        }
    }
}

/// `Pr{V ≤ v(Θ) | ψ}` for a finite design.
pub fn prob_v_below<C: Criterion + ?Sized>(crit: &C, vp: &VariancePoint, d: &Design) -> Result<f64> {
    FiniteKernel::new(d)?.prob_below(crit, vp.gamma)
}

/// Type-I error of the two-tailed test `|V| > v(Θ)`:
/// `1 − [Pr{V ≤ v} − Pr{V ≤ −v}]`.
pub fn prob_v_below_two_tailed<C: Criterion + ?Sized>(crit: &C, vp: &VariancePoint, d: &Design) -> Result<f64> {
    let k = FiniteKernel::new(d)?;
    two_tailed_with(&k, crit, vp.gamma)
}

pub(crate) fn two_tailed_with<C: Criterion + ?Sized>(k: &FiniteKernel, crit: &C, gamma: f64) -> Result<f64> {
    let upper = k.prob_below(crit, gamma)?;
    let lower = k.prob_below(&Negated(crit), gamma)?;
    Ok((1.0 - (upper - lower)).clamp(0.0, 1.0))
}

/// The same probability integrated directly over `z ∈ (0, ∞)` against the
/// scaled-F density of `Z` (in `log z`). Slower; an independent check of the
/// finite-interval form.
pub fn prob_v_below_z_form<C: Criterion + ?Sized>(crit: &C, vp: &VariancePoint, d: &Design) -> Result<f64> {
    let m = d.dims()?;
    let zeta = vp.zeta;
    if !(zeta > 0.0) || zeta.is_infinite() {
        return Err(Error::Domain("z-form needs 0 < zeta < inf".into()));
    }
    let (v1, v2, nu) = (Dof::Finite(m.nu1), Dof::Finite(m.nu2), Dof::Finite(m.nu));
    let centre = zeta.ln();
    let reach = 60.0 / m.nu1.min(m.nu2) + 12.0;
    let integrand = |s: f64| {
        let z = s.exp();
        let dens = match z_density(z, v1, v2, zeta) {
            Ok(f) => f,
            Err(_) => return 0.0,
        };
        if dens == 0.0 {
            return 0.0;
        }
        let k2 = (m.nu1 * z / zeta + m.nu2) * (m.n2 * zeta + m.n1) / (m.nu * (m.n2 * z + m.n1));
        let theta = theta_of_ratio(m.n2 * z / m.n1);
        let c = crate::design::c_of_theta(theta);
        student_t_cdf(crit.at_c(c) / k2.sqrt(), nu) * dens * z
    };
    let breaks = [centre - reach, centre, centre + reach];
    Ok(integrate_pieces(integrand, &breaks, Tolerance::abs(1e-11))?.value)
}

/// Limit kernel for `n₁ → ∞` with `ν₂` finite:
///
/// ```text
/// Pr{V ≤ v_c(C) | γ} = E_t[ Φ( v_c(γ/((1−γ)t + γ)) · √(γ + (1−γ)t) ) ],  t ~ χ²_{ν₂}/ν₂
/// ```
///
/// integrated over the chi variable `s = √(ν₂t)` and truncated where the
/// tail mass falls below [`LIMIT_TAIL_MASS`].
#[derive(Debug, Clone)]
pub struct LimitKernel {
    pub nu2: f64,
    ln_norm: f64,
    breaks: [f64; 3],
    tol: Tolerance,
}

impl LimitKernel {
    pub fn new(nu2: Dof) -> Result<Self> {
        let nu2 = match nu2 {
            Dof::Finite(v) if v > 0.0 => v,
            _ => return Err(Error::Domain("limit kernel needs finite nu2".into())),
        };
        let s_max = chi2_quantile_upper(LIMIT_TAIL_MASS, Dof::Finite(nu2))?.sqrt();
        let ln_norm = -(0.5 * nu2 - 1.0) * 2f64.ln() - crate::distributions::special::ln_gamma(0.5 * nu2);
        let mid = nu2.sqrt().min(0.5 * s_max);
        Ok(Self { nu2, ln_norm, breaks: [0.0, mid, s_max], tol: Tolerance::abs(KERNEL_TOL) })
    }

    /// `E[g(t)]` for `t ~ χ²_{ν₂}/ν₂`.
    pub fn chi_expectation<G: FnMut(f64) -> f64>(&self, mut g: G) -> Result<f64> {
        let (nu2, ln_norm) = (self.nu2, self.ln_norm);
        let integrand = |s: f64| {
            if s <= 0.0 {
                return 0.0;
            }
            let w = ((nu2 - 1.0) * s.ln() - 0.5 * s * s + ln_norm).exp();
            w * g(s * s / nu2)
        };
        Ok(integrate_pieces(integrand, &self.breaks, self.tol)?.value)
    }

    pub fn sensitivity_rule(&self, panels: usize) -> Vec<(f64, f64)> {
        fixed_rule(&self.breaks, panels)
    }

    pub fn sensitivity(&self, crit: &TableCriterion, gamma: f64, rule: &[(f64, f64)], row: &mut [f64]) {
        let mut basis = Vec::with_capacity(16);
        row.fill(0.0);
        for &(s, w) in rule {
            if s <= 0.0 {
                continue;
            }
            let weight = w * ((self.nu2 - 1.0) * s.ln() - 0.5 * s * s + self.ln_norm).exp();
            let t = s * s / self.nu2;
            let denom = (1.0 - gamma) * t + gamma;
            let c = if denom > 0.0 { gamma / denom } else { 0.0 };
            let r = denom.sqrt();
            let g = weight * crate::distributions::normal_pdf(crit.at_c(c) * r) * r;
            crit.basis_weights_at_c(c, &mut basis);
            for &(j, b) in &basis {
                row[j] += g * b;
            }
        }
    }

    pub fn prob_below<C: Criterion + ?Sized>(&self, crit: &C, gamma: f64) -> Result<f64> {
        check_unit("gamma", gamma)?;
        let p = self.chi_expectation(|t| {
            let denom = (1.0 - gamma) * t + gamma;
            let c = if denom > 0.0 { gamma / denom } else { 0.0 };
            normal_cdf(crit.at_c(c) * denom.sqrt())
        })?;
        Ok(p.clamp(0.0, 1.0))
    }

    pub fn shift_derivative<C: Criterion + ?Sized>(&self, crit: &C, gamma: f64) -> Result<f64> {
        self.chi_expectation(|t| {
            let denom = (1.0 - gamma) * t + gamma;
            let c = if denom > 0.0 { gamma / denom } else { 0.0 };
            let r = denom.sqrt();
            crate::distributions::normal_pdf(crit.at_c(c) * r) * r
        })
    }
}

/// `Pr{V ≤ v_c(C) | γ}` in the limit `n₁ → ∞`.
pub fn prob_v_below_inf_n1<C: Criterion + ?Sized>(crit: &C, gamma: f64, nu2: Dof) -> Result<f64> {
    LimitKernel::new(nu2)?.prob_below(crit, gamma)
}

/// `Pr{T(ζ̃) ≤ t | γ} = E_X[S_ν(t · k_{X,γ})]` for the pooled statistic built
/// with a guessed variance ratio `ζ̃`.
pub fn prob_t_guess_below(t_crit: f64, zeta_guess: f64, vp: &VariancePoint, d: &Design) -> Result<f64> {
    let (f1, f2) = t_guess_weights(zeta_guess, d)?;
    let kern = FiniteKernel::new(d)?;
    let m = kern.dims;
    let nu = Dof::Finite(m.nu);
    let gamma = vp.gamma;
    let a = m.nu * f1 * m.n1 * gamma / m.nu1;
    let b = m.nu * f2 * m.n2 * (1.0 - gamma) / m.nu2;
    kern.beta_expectation(|x, y| student_t_cdf(t_crit * (a * x + b * y).sqrt(), nu))
}
