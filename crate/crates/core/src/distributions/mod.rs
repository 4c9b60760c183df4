//! Densities, CDFs and quantiles for the χ², Student-t (central and
//! non-central) distributions and for the variance-ratio statistic `Z`.
//!
//! Every function here is pure. An infinite number of degrees of freedom is
//! a first-class value ([`Dof::Infinite`]) and routes to the normal limit.

pub mod special;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_pieces, Tolerance};
use crate::roots::{brent, expand_upper};
use special::{beta_inc_xy, gamma_inc_lower, gamma_inc_upper, ln_beta, ln_gamma, normal_cdf, normal_quantile};
use std::f64::consts::PI;
use std::fmt;

pub use special::{normal_pdf, normal_sf};

/// Degrees of freedom: a positive real or infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dof {
    Finite(f64),
    Infinite,
}

impl Dof {
    pub fn new(v: f64) -> Result<Self> {
        if v.is_nan() || v <= 0.0 {
            return Err(Error::Domain(format!("degrees of freedom must be positive, got {v}")));
        }
        Ok(if v.is_infinite() { Dof::Infinite } else { Dof::Finite(v) })
    }

    pub fn value(self) -> f64 {
        match self {
            Dof::Finite(v) => v,
            Dof::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Dof::Finite(_))
    }

    fn finite(self, what: &str) -> Result<f64> {
        match self {
            Dof::Finite(v) if v > 0.0 => Ok(v),
            Dof::Finite(v) => Err(Error::Domain(format!("{what}: degrees of freedom must be positive, got {v}"))),
            Dof::Infinite => Err(Error::Domain(format!("{what}: requires finite degrees of freedom"))),
        }
    }
}

impl From<f64> for Dof {
    fn from(v: f64) -> Self {
        if v.is_infinite() {
            Dof::Infinite
        } else {
            Dof::Finite(v)
        }
    }
}

impl fmt::Display for Dof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dof::Finite(v) => write!(f, "{v}"),
            Dof::Infinite => f.write_str("inf"),
        }
    }
}

pub use special::normal_cdf as phi;

pub fn chi2_pdf(y: f64, v: Dof) -> Result<f64> {
    let v = v.finite("chi2_pdf")?;
    if y < 0.0 {
        return Err(Error::Domain(format!("chi2_pdf: y must be >= 0, got {y}")));
    }
    if y == 0.0 {
        return Ok(if v < 2.0 {
            f64::INFINITY
        } else if v == 2.0 {
            0.5
        } else {
            0.0
        });
    }
    let h = 0.5 * v;
    Ok(((h - 1.0) * y.ln() - 0.5 * y - h * 2f64.ln() - ln_gamma(h)).exp())
}

pub fn chi2_cdf(y: f64, v: Dof) -> Result<f64> {
    let v = v.finite("chi2_cdf")?;
    if y.is_nan() || y < 0.0 {
        return Err(Error::Domain(format!("chi2_cdf: y must be >= 0, got {y}")));
    }
    Ok(gamma_inc_lower(0.5 * v, 0.5 * y))
}

pub fn chi2_sf(y: f64, v: Dof) -> Result<f64> {
    let v = v.finite("chi2_sf")?;
    if y.is_nan() || y < 0.0 {
        return Err(Error::Domain(format!("chi2_sf: y must be >= 0, got {y}")));
    }
    Ok(gamma_inc_upper(0.5 * v, 0.5 * y))
}

pub fn chi2_quantile(p: f64, v: Dof) -> Result<f64> {
    check_probability(p, "chi2_quantile")?;
    let nu = v.finite("chi2_quantile")?;
    let g = |y: f64| gamma_inc_lower(0.5 * nu, 0.5 * y) - p;
    let hi = expand_upper(g, 0.0, nu.max(1.0) * 4.0 + 10.0, 200)?;
    brent(g, 0.0, hi, 1e-14 * hi, 500)
}

/// The `y` with upper-tail mass `q`, accurate for tiny `q`.
pub fn chi2_quantile_upper(q: f64, v: Dof) -> Result<f64> {
    check_probability(q, "chi2_quantile_upper")?;
    let nu = v.finite("chi2_quantile_upper")?;
    let lq = q.ln();
    let g = |y: f64| gamma_inc_upper(0.5 * nu, 0.5 * y).max(f64::MIN_POSITIVE).ln() - lq;
    let hi = expand_upper(g, 0.0, nu.max(1.0) * 4.0 + 10.0, 200)?;
    brent(g, 0.0, hi, 1e-14 * hi, 500)
}

pub fn student_t_pdf(t: f64, v: Dof) -> f64 {
    match v {
        Dof::Infinite => normal_pdf(t),
        Dof::Finite(nu) => {
            let ln_norm = -0.5 * nu.ln() - ln_beta(0.5, 0.5 * nu);
            (ln_norm - 0.5 * (nu + 1.0) * (t * t / nu).ln_1p()).exp()
        }
    }
}

/// Upper tail `Pr{T_v > t}`.
pub fn student_t_sf(t: f64, v: Dof) -> f64 {
    match v {
        Dof::Infinite => normal_sf(t),
        Dof::Finite(nu) => {
            if t == 0.0 {
                return 0.5;
            }
            if t.is_infinite() {
                return if t > 0.0 { 0.0 } else { 1.0 };
            }
            let t2 = t * t;
            let (x, y) = if t2 < nu {
                (nu / (nu + t2), t2 / (nu + t2))
            } else {
                (1.0 / (1.0 + t2 / nu), (t2 / nu) / (1.0 + t2 / nu))
            };
            let tail = 0.5 * beta_inc_xy(0.5 * nu, 0.5, x, y);
            if t > 0.0 {
                tail
            } else {
                1.0 - tail
            }
        }
    }
}

/// `S_v(t)`, the Student-t CDF; `Φ(t)` when `v` is infinite.
pub fn student_t_cdf(t: f64, v: Dof) -> f64 {
    match v {
        Dof::Infinite => normal_cdf(t),
        Dof::Finite(_) => {
            if t > 0.0 {
                1.0 - student_t_sf(t, v)
            } else {
                student_t_sf(-t, v)
            }
        }
    }
}

/// Quantile of the Student-t distribution; `student_t_quantile(1 - α, v)`
/// is the one-sided critical value `t_v(α)`.
pub fn student_t_quantile(p: f64, v: Dof) -> Result<f64> {
    check_probability(p, "student_t_quantile")?;
    if p == 0.5 {
        return Ok(0.0);
    }
    let nu = match v {
        Dof::Infinite => return Ok(normal_quantile(p)),
        Dof::Finite(nu) => nu,
    };
    let (q, sign) = if p > 0.5 { (1.0 - p, 1.0) } else { (p, -1.0) };
    let t = if nu == 1.0 {
        1.0 / (PI * q).tan()
    } else if nu == 2.0 {
        (1.0 - 2.0 * q) / (2.0 * q * (1.0 - q)).sqrt()
    } else {
        upper_t_root(q, nu)?
    };
    Ok(sign * t)
}

// Solve sf(t) = q for t > 0 by safeguarded Newton.
fn upper_t_root(q: f64, nu: f64) -> Result<f64> {
    let v = Dof::Finite(nu);
    let z = normal_quantile(1.0 - q);
    let z3 = z * z * z;
    let mut t = z + (z3 + z) / (4.0 * nu) + (5.0 * z3 * z * z + 16.0 * z3 + 3.0 * z) / (96.0 * nu * nu);
    if !(t > 0.0) || !t.is_finite() {
        t = z.max(1.0);
    }
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    for _ in 0..200 {
        let f = student_t_sf(t, v) - q;
        if f > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if f == 0.0 {
            return Ok(t);
        }
        let pdf = student_t_pdf(t, v);
        let mut next = t + f / pdf;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * t.max(1.0) };
        }
        if (next - t).abs() <= 4.0 * f64::EPSILON * t {
            return Ok(next);
        }
        t = next;
    }
    Ok(t)
}

/// Non-central Student-t CDF `S_v(t, δ)`.
///
/// Evaluated as the normal mixture `∫ Φ(t s/√v − δ) χ_v(s) ds` over the chi
/// density, which is a rearrangement of the textbook density integral.
pub fn noncentral_t_cdf(t: f64, v: Dof, delta: f64) -> Result<f64> {
    if !delta.is_finite() {
        return Err(Error::Domain(format!("noncentrality must be finite, got {delta}")));
    }
    if delta.abs() < 1e-12 {
        return Ok(student_t_cdf(t, v));
    }
    let nu = match v {
        Dof::Infinite => return Ok(normal_cdf(t - delta)),
        Dof::Finite(_) => v.finite("noncentral_t_cdf")?,
    };
    if t == 0.0 {
        return Ok(normal_cdf(-delta));
    }
    if t.is_infinite() {
        return Ok(if t > 0.0 { 1.0 } else { 0.0 });
    }
    let ln_norm = -(0.5 * nu - 1.0) * 2f64.ln() - ln_gamma(0.5 * nu);
    let scale = t / nu.sqrt();
    let integrand = |s: f64| {
        if s <= 0.0 {
            return if nu == 1.0 { normal_cdf(-delta) * ln_norm.exp() } else { 0.0 };
        }
        let w = ((nu - 1.0) * s.ln() - 0.5 * s * s + ln_norm).exp();
        normal_cdf(scale * s - delta) * w
    };
    let center = nu.sqrt();
    let lo = (center - 12.0).max(0.0);
    let est = integrate_pieces(integrand, &[lo, center, center + 12.0], Tolerance::abs(1e-12))?;
    Ok(est.value.clamp(0.0, 1.0))
}

/// Density of `Z = S₁²/S₂²` when `σ₁²/σ₂² = ζ`: a scaled `F(ν₁, ν₂)` density.
pub fn z_density(z: f64, v1: Dof, v2: Dof, zeta: f64) -> Result<f64> {
    let n1 = v1.finite("z_density")?;
    let n2 = v2.finite("z_density")?;
    if !(z > 0.0) || !(zeta > 0.0) {
        return Err(Error::Domain(format!("z_density: z and zeta must be positive, got z={z}, zeta={zeta}")));
    }
    let ln = 0.5 * n1 * n1.ln() + 0.5 * n2 * n2.ln() - ln_beta(0.5 * n1, 0.5 * n2)
        + (0.5 * n1 - 1.0) * z.ln()
        + 0.5 * n2 * zeta.ln()
        - 0.5 * (n1 + n2) * (n2 * zeta + n1 * z).ln();
    Ok(ln.exp())
}

/// `E(Z) = ζν₂/(ν₂−2)`, defined for `ν₂ > 2`.
pub fn z_mean(v2: Dof, zeta: f64) -> Result<f64> {
    let n2 = v2.finite("z_mean")?;
    if n2 <= 2.0 {
        return Err(Error::MomentUndefined("E(Z) requires nu2 > 2"));
    }
    Ok(zeta * n2 / (n2 - 2.0))
}

/// `Var(Z) = ν₁/(ν₂−2)·[(ν₁+2)/(ν₂−4) − ν₁/(ν₂−2)]·(ζν₂/ν₁)²`, defined for `ν₂ > 4`.
pub fn z_variance(v1: Dof, v2: Dof, zeta: f64) -> Result<f64> {
    let n1 = v1.finite("z_variance")?;
    let n2 = v2.finite("z_variance")?;
    if n2 <= 4.0 {
        return Err(Error::MomentUndefined("Var(Z) requires nu2 > 4"));
    }
    let scale = zeta * n2 / n1;
    Ok(n1 / (n2 - 2.0) * ((n1 + 2.0) / (n2 - 4.0) - n1 / (n2 - 2.0)) * scale * scale)
}

pub fn z_moments(v1: Dof, v2: Dof, zeta: f64) -> (Result<f64>, Result<f64>) {
    (z_mean(v2, zeta), z_variance(v1, v2, zeta))
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what}: probability must lie in (0, 1), got {p}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    fn f(v: f64) -> Dof {
        Dof::Finite(v)
    }

    #[test]
    fn chi2_basic() {
        assert_eq!(chi2_cdf(0.0, f(3.0)).unwrap(), 0.0);
        assert!(chi2_cdf(-1.0, f(3.0)).is_err());
        assert!(chi2_cdf(1.0, f(0.0)).is_err());
        assert!(chi2_cdf(1.0, Dof::Infinite).is_err());
        for &v in &[1.0, 2.5, 10.0, 80.0] {
            let m = chi2_quantile(0.5, f(v)).unwrap();
            assert!((chi2_cdf(m, f(v)).unwrap() - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn chi2_cdf_at_mean_matches_density_integral() {
        // oracle: quadrature of the density y^{v/2-1} e^{-y/2} / (2^{v/2} Γ(v/2))
        let v = 10.0;
        let dens = |y: f64| chi2_pdf(y, f(v)).unwrap();
        let oracle = integrate(dens, 0.0, v, Tolerance::abs(1e-13)).unwrap().value;
        let got = chi2_cdf(v, f(v)).unwrap();
        assert!((got - oracle).abs() < 1e-12);
        assert!(got > 0.5 && got < 0.6);
    }

    #[test]
    fn chi2_upper_quantile_tiny_tail() {
        let y = chi2_quantile_upper(1e-13, f(10.0)).unwrap();
        let q = chi2_sf(y, f(10.0)).unwrap();
        assert!(((q - 1e-13) / 1e-13).abs() < 1e-8);
    }

    #[test]
    fn t_cdf_reference_points() {
        assert_eq!(student_t_cdf(0.0, f(10.0)), 0.5);
        assert!((student_t_cdf(2.228, f(10.0)) - 0.975).abs() < 5e-4);
        assert!((student_t_cdf(1.960, Dof::Infinite) - 0.975).abs() < 5e-4);
        // Cauchy closed form
        for &t in &[-3.0_f64, -0.2, 0.7, 40.0] {
            let exact = 0.5 + t.atan() / PI;
            assert!((student_t_cdf(t, f(1.0)) - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn t_quantile_table_values() {
        assert_eq!(student_t_quantile(0.5, f(7.0)).unwrap(), 0.0);
        assert!((student_t_quantile(0.975, f(10.0)).unwrap() - 2.228).abs() < 1e-3);
        assert!((student_t_quantile(0.975, f(30.0)).unwrap() - 2.042).abs() < 1e-3);
        assert!(student_t_quantile(1.0, f(3.0)).is_err());
        assert!(student_t_quantile(0.0, f(3.0)).is_err());
    }

    #[test]
    fn noncentral_reduces_to_central() {
        for &t in &[-1.0, 0.0, 2.0] {
            let a = noncentral_t_cdf(t, f(8.0), 0.0).unwrap();
            assert!((a - student_t_cdf(t, f(8.0))).abs() < 1e-9);
            // tiny but non-zero δ takes the quadrature path
            let b = noncentral_t_cdf(t, f(8.0), 1e-9).unwrap();
            assert!((b - student_t_cdf(t, f(8.0))).abs() < 1e-8);
        }
    }

    #[test]
    fn noncentral_at_zero_is_normal_tail() {
        let got = noncentral_t_cdf(0.0, f(500.0), 1.0).unwrap();
        assert!((got - normal_cdf(-1.0)).abs() < 1e-6);
        // and via the quadrature path, tiny t
        let got = noncentral_t_cdf(1e-12, f(500.0), 1.0).unwrap();
        assert!((got - normal_cdf(-1.0)).abs() < 1e-6);
    }

    #[test]
    fn noncentral_decreasing_in_delta() {
        let mut last = 1.0;
        for i in 0..20 {
            let d = -2.0 + 0.3 * i as f64;
            let p = noncentral_t_cdf(1.3, f(6.0), d).unwrap();
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn z_density_scale_equivariance() {
        for &z in &[0.05, 0.7, 3.0, 20.0] {
            let a = z_density(z, f(4.0), f(6.0), 2.0).unwrap();
            let b = z_density(z / 2.0, f(4.0), f(6.0), 1.0).unwrap() / 2.0;
            assert!((a - b).abs() < 1e-14 * a.max(1.0));
        }
        assert!(z_density(0.0, f(4.0), f(6.0), 1.0).is_err());
        assert!(z_density(1.0, f(4.0), f(6.0), -1.0).is_err());
    }

    #[test]
    fn z_moments_thresholds() {
        assert_eq!(z_mean(f(6.0), 1.0).unwrap(), 1.5);
        assert!(matches!(z_mean(f(2.0), 3.0), Err(Error::MomentUndefined(_))));
        assert!(matches!(z_variance(f(4.0), f(4.0), 3.0), Err(Error::MomentUndefined(_))));
        // textbook F variance 2ν₂²(ν₁+ν₂−2)/(ν₁(ν₂−2)²(ν₂−4)) scaled by ζ²
        let (n1, n2, zeta) = (4.0, 8.0, 2.0);
        let textbook = 2.0 * n2 * n2 * (n1 + n2 - 2.0) / (n1 * (n2 - 2.0) * (n2 - 2.0) * (n2 - 4.0)) * zeta * zeta;
        let got = z_variance(f(n1), f(n2), zeta).unwrap();
        assert!((got - textbook).abs() < 1e-12 * textbook);
    }
}
