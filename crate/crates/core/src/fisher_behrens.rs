//! Fisher–Behrens criteria: for an observed angle `θ`, the critical value
//! solves
//!
//! ```text
//! (1/B(ν₂/2, ν₁/2)) ∫₀¹ S_ν(v / K(ξ, θ)) ξ^{ν₂/2−1} (1−ξ)^{ν₁/2−1} dξ = 1 − α
//! K²(ξ, θ) = [ν₁ sin²θ / (1 − ξ) + ν₂ cos²θ / ξ] / ν
//! ```

use crate::criterion::{build_psi_lattice, CriterionTable, Family, LatticeKind};
use crate::design::{c_of_theta, Design};
use crate::distributions::special::normal_cdf;
use crate::distributions::{student_t_cdf, Dof};
use crate::error::{Error, Result};
use crate::ideal::upper_t;
use crate::kernel::{FiniteKernel, LimitKernel};
use crate::roots::brent;
use rayon::prelude::*;

/// Root tolerance on the critical value.
const ROOT_XTOL: f64 = 1e-12;

/// A design, an observed angle and a candidate value of `V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbQuery {
    pub design: Design,
    pub theta_deg: f64,
    pub v: f64,
}

fn check_theta(theta_deg: f64) -> Result<()> {
    if (0.0..=90.0).contains(&theta_deg) {
        Ok(())
    } else {
        Err(Error::Domain(format!("theta must lie in [0, 90] degrees, got {theta_deg}")))
    }
}

/// Fisher–Behrens probability `Pr{V < v | Θ = θ}` for a finite design.
pub fn fb_prob(q: &FbQuery) -> Result<f64> {
    check_theta(q.theta_deg)?;
    let k = FiniteKernel::new(&q.design)?;
    fb_prob_with(&k, q.theta_deg, q.v)
}

fn fb_prob_with(k: &FiniteKernel, theta_deg: f64, v: f64) -> Result<f64> {
    let m = k.dims;
    let nu = Dof::Finite(m.nu);
    let s2 = c_of_theta(theta_deg);
    let c2 = 1.0 - s2;
    // 1 − ξ ~ Beta(ν₁/2, ν₂/2), the weight of the kernel's beta expectation
    let p = k.beta_expectation(|x, y| {
        let k2 = (m.nu1 * s2 / x + m.nu2 * c2 / y) / m.nu;
        student_t_cdf(v / k2.sqrt(), nu)
    })?;
    Ok(p.clamp(0.0, 1.0))
}

/// Fisher–Behrens probability in the limit `n₁ → ∞`:
/// `E[Φ(v / √(sin²θ + cos²θ / z′))]`, `z′ ~ χ²_{ν₂}/ν₂`.
pub fn fb_prob_inf_n1(nu2: Dof, theta_deg: f64, v: f64) -> Result<f64> {
    check_theta(theta_deg)?;
    let k = LimitKernel::new(nu2)?;
    fb_prob_limit_with(&k, theta_deg, v)
}

fn fb_prob_limit_with(k: &LimitKernel, theta_deg: f64, v: f64) -> Result<f64> {
    let s2 = c_of_theta(theta_deg);
    let c2 = 1.0 - s2;
    let p = k.chi_expectation(|t| normal_cdf(v / (s2 + c2 / t).sqrt()))?;
    Ok(p.clamp(0.0, 1.0))
}

fn solve_level<F: FnMut(f64) -> Result<f64>>(mut prob: F, target: f64, hi: f64) -> Result<f64> {
    let mut failure = None;
    let root = brent(
        |v| match prob(v) {
            Ok(p) => p - target,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        hi,
        ROOT_XTOL,
        200,
    );
    match failure {
        Some(e) => Err(e),
        None => root,
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must lie in (0, 0.5), got {alpha}")))
    }
}

/// Fisher–Behrens critical value at one angle.
pub fn fb_criterion(d: &Design, theta_deg: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_theta(theta_deg)?;
    let k = FiniteKernel::new(d)?;
    let hi = 10.0 * upper_t(alpha, Dof::Finite(k.dims.nu1.min(k.dims.nu2)))?;
    solve_level(|v| fb_prob_with(&k, theta_deg, v), 1.0 - alpha, hi)
}

/// Fisher–Behrens critical value at one angle for `n₁ = ∞`.
pub fn fb_criterion_inf_n1(nu2: Dof, theta_deg: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_theta(theta_deg)?;
    let k = LimitKernel::new(nu2)?;
    let hi = 10.0 * upper_t(alpha, nu2)?;
    solve_level(|v| fb_prob_limit_with(&k, theta_deg, v), 1.0 - alpha, hi)
}

/// Fisher–Behrens criterion on the ψ-lattice; each node is an independent
/// root solve, endpoints included. Designs with `n₁ = ∞` use the limiting
/// kernel.
pub fn solve_fb_criterion(d: &Design, alpha: f64) -> Result<CriterionTable> {
    check_alpha(alpha)?;
    let nodes = build_psi_lattice().nodes;
    let target = 1.0 - alpha;
    let solved: Result<Vec<(f64, f64)>> = if d.is_finite() {
        let k = FiniteKernel::new(d)?;
        let hi = 10.0 * upper_t(alpha, Dof::Finite(k.dims.nu1.min(k.dims.nu2)))?;
        nodes
            .par_iter()
            .map(|&t| {
                let v = solve_level(|v| fb_prob_with(&k, t, v), target, hi)?;
                Ok((v, fb_prob_with(&k, t, v)? - target))
            })
            .collect()
    } else {
        let k = LimitKernel::new(d.nu2())?;
        let hi = 10.0 * upper_t(alpha, d.nu2())?;
        nodes
            .par_iter()
            .map(|&t| {
                let v = solve_level(|v| fb_prob_limit_with(&k, t, v), target, hi)?;
                Ok((v, fb_prob_limit_with(&k, t, v)? - target))
            })
            .collect()
    };
    let (values, residuals): (Vec<f64>, Vec<f64>) = solved?.into_iter().unzip();
    let tolerance = 1e-9;
    let converged = residuals.iter().all(|r| r.abs() <= tolerance);
    Ok(CriterionTable {
        family: Family::FisherBehrens,
        design: *d,
        alpha,
        lattice: LatticeKind::Psi91,
        nodes,
        values,
        residuals,
        converged,
        tolerance,
    })
}

/// Confidence `1 − 2α` assigned to an observed `(|V|, θ)`:
/// `2 · Pr{V < |v| | θ} − 1`.
pub fn fb_confidence(abs_v: f64, theta_deg: f64, d: &Design) -> Result<f64> {
    if !(abs_v >= 0.0) {
        return Err(Error::Domain(format!("|V| must be non-negative, got {abs_v}")));
    }
    let p = if d.is_finite() {
        fb_prob(&FbQuery { design: *d, theta_deg, v: abs_v })?
    } else {
        fb_prob_inf_n1(d.nu2(), theta_deg, abs_v)?
    };
    Ok((2.0 * p - 1.0).clamp(0.0, 1.0))
}

/// Reusable confidence evaluator for many points of one design.
pub struct FbConfidence {
    kernel: FiniteKernel,
}

impl FbConfidence {
    pub fn new(d: &Design) -> Result<Self> {
        Ok(Self { kernel: FiniteKernel::new(d)? })
    }

    pub fn confidence(&self, abs_v: f64, theta_deg: f64) -> Result<f64> {
        check_theta(theta_deg)?;
        Ok((2.0 * fb_prob_with(&self.kernel, theta_deg, abs_v.abs())? - 1.0).clamp(0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::student_t_quantile;

    #[test]
    fn zero_statistic_is_half() {
        let d = Design::new(4, 6).unwrap();
        for &t in &[0.0, 30.0, 77.0, 90.0] {
            let p = fb_prob(&FbQuery { design: d, theta_deg: t, v: 0.0 }).unwrap();
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn endpoint_degenerates_to_t() {
        let d = Design::new(5, 8).unwrap();
        for &v in &[0.4, 1.3, 2.5] {
            let p = fb_prob(&FbQuery { design: d, theta_deg: 0.0, v }).unwrap();
            assert!((p - student_t_cdf(v, d.nu2())).abs() < 1e-9);
            let p = fb_prob(&FbQuery { design: d, theta_deg: 90.0, v }).unwrap();
            assert!((p - student_t_cdf(v, d.nu1())).abs() < 1e-9);
        }
    }

    #[test]
    fn swap_symmetry_at_45() {
        let a = Design::new(4, 9).unwrap();
        let b = a.swapped().unwrap();
        let pa = fb_prob(&FbQuery { design: a, theta_deg: 30.0, v: 1.7 }).unwrap();
        let pb = fb_prob(&FbQuery { design: b, theta_deg: 60.0, v: 1.7 }).unwrap();
        assert!((pa - pb).abs() < 1e-10);
    }

    #[test]
    fn limit_endpoints() {
        let nu2 = Dof::Finite(10.0);
        let z = fb_criterion_inf_n1(nu2, 90.0, 0.025).unwrap();
        assert!((z - 1.959_963_984_540_054).abs() < 1e-8);
        let t = fb_criterion_inf_n1(nu2, 0.0, 0.025).unwrap();
        assert!((t - student_t_quantile(0.975, nu2).unwrap()).abs() < 1e-6);
        let mid = fb_criterion_inf_n1(nu2, 45.0, 0.025).unwrap();
        assert!(mid > 1.96 && mid < 2.2282);
    }

    #[test]
    fn confidence_round_trip() {
        let d = Design::new(6, 6).unwrap();
        assert!(fb_confidence(0.0, 40.0, &d).unwrap() < 1e-12);
        let v = fb_criterion(&d, 40.0, 0.1).unwrap();
        assert!((fb_confidence(v, 40.0, &d).unwrap() - 0.8).abs() < 1e-8);
        assert!(fb_confidence(1e6, 40.0, &d).unwrap() > 1.0 - 1e-9);
    }
}
