//! Sample-size design and the equivalent coordinates of the nuisance
//! parameter (`ζ`, `γ`, `ψ`) and of the observed statistic (`z`, `c`, `θ`).

use crate::distributions::Dof;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleSize {
    Finite(u32),
    Infinite,
}

impl SampleSize {
    pub fn value(self) -> f64 {
        match self {
            SampleSize::Finite(n) => n as f64,
            SampleSize::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for SampleSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleSize::Finite(n) => write!(f, "{n}"),
            SampleSize::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for SampleSize {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(SampleSize::Infinite);
        }
        s.parse::<u32>()
            .map(SampleSize::Finite)
            .map_err(|_| Error::Design(format!("sample size must be an integer or \"inf\", got {s:?}")))
    }
}

/// Two sample sizes. Only `n1` may be infinite (the limit tables put the
/// infinite sample first; the relabelled design covers the other case).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Design {
    pub n1: SampleSize,
    pub n2: u32,
}

/// Plain floating-point sizes and degrees of freedom of a finite design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dims {
    pub n1: f64,
    pub n2: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub nu: f64,
}

impl Design {
    pub fn new(n1: u32, n2: u32) -> Result<Self> {
        Self::with_sizes(SampleSize::Finite(n1), n2)
    }

    pub fn with_sizes(n1: SampleSize, n2: u32) -> Result<Self> {
        if let SampleSize::Finite(n) = n1 {
            if n < 2 {
                return Err(Error::Design(format!("n1 must be at least 2, got {n}")));
            }
        }
        if n2 < 2 {
            return Err(Error::Design(format!("n2 must be at least 2, got {n2}")));
        }
        Ok(Self { n1, n2 })
    }

    /// The design with `n1 = ∞`.
    pub fn infinite_n1(n2: u32) -> Result<Self> {
        Self::with_sizes(SampleSize::Infinite, n2)
    }

    /// Design from degrees of freedom (`n = ν + 1`).
    pub fn from_dof(nu1: u32, nu2: u32) -> Result<Self> {
        Self::new(nu1 + 1, nu2 + 1)
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.n1, SampleSize::Finite(_))
    }

    pub fn nu1(&self) -> Dof {
        match self.n1 {
            SampleSize::Finite(n) => Dof::Finite(n as f64 - 1.0),
            SampleSize::Infinite => Dof::Infinite,
        }
    }

    pub fn nu2(&self) -> Dof {
        Dof::Finite(self.n2 as f64 - 1.0)
    }

    pub fn nu(&self) -> Dof {
        match self.n1 {
            SampleSize::Finite(n) => Dof::Finite(n as f64 + self.n2 as f64 - 2.0),
            SampleSize::Infinite => Dof::Infinite,
        }
    }

    pub fn dims(&self) -> Result<Dims> {
        match self.n1 {
            SampleSize::Finite(n1) => {
                let n1 = n1 as f64;
                let n2 = self.n2 as f64;
                Ok(Dims { n1, n2, nu1: n1 - 1.0, nu2: n2 - 1.0, nu: n1 + n2 - 2.0 })
            }
            SampleSize::Infinite => Err(Error::Design("operation requires a finite design".into())),
        }
    }

    /// Relabel the samples. Fails for `n1 = ∞`.
    pub fn swapped(&self) -> Result<Self> {
        match self.n1 {
            SampleSize::Finite(n1) => Self::new(self.n2, n1),
            SampleSize::Infinite => Err(Error::Design("cannot swap a design with n1 = inf".into())),
        }
    }

    /// The variance ratio `ζ = n₁ν₁/(n₂ν₂)` at which `V` is exactly `t_ν`.
    pub fn harmonic_zeta(&self) -> Result<f64> {
        let d = self.dims()?;
        Ok(d.n1 * d.nu1 / (d.n2 * d.nu2))
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n1={}, n2={})", self.n1, self.n2)
    }
}

/// A value of the nuisance parameter in all three coordinates:
/// `γ = n₂ζ/(n₁ + n₂ζ)`, `ψ = atan √(n₂ζ/n₁)`, `γ = sin²ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariancePoint {
    pub zeta: f64,
    pub gamma: f64,
    pub psi_deg: f64,
}

impl VariancePoint {
    pub fn from_zeta(zeta: f64, d: &Design) -> Result<Self> {
        if zeta.is_nan() || zeta < 0.0 {
            return Err(Error::Domain(format!("zeta must be >= 0, got {zeta}")));
        }
        let n2 = d.n2 as f64;
        let (gamma, psi_deg) = match d.n1 {
            SampleSize::Infinite => {
                return Err(Error::Domain("zeta is not a usable coordinate when n1 = inf; use gamma or psi".into()))
            }
            SampleSize::Finite(n1) => {
                let n1 = n1 as f64;
                if zeta.is_infinite() {
                    (1.0, 90.0)
                } else {
                    let r = n2 * zeta / n1;
                    (r / (1.0 + r), r.sqrt().atan().to_degrees())
                }
            }
        };
        Ok(Self { zeta, gamma, psi_deg })
    }

    pub fn from_gamma(gamma: f64, d: &Design) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Domain(format!("gamma must lie in [0, 1], got {gamma}")));
        }
        let psi_deg = if gamma == 1.0 { 90.0 } else { gamma.sqrt().asin().to_degrees() };
        Ok(Self { zeta: zeta_of_gamma(gamma, d), gamma, psi_deg })
    }

    pub fn from_psi_deg(psi_deg: f64, d: &Design) -> Result<Self> {
        if !(0.0..=90.0).contains(&psi_deg) {
            return Err(Error::Domain(format!("psi must lie in [0, 90] degrees, got {psi_deg}")));
        }
        let gamma = if psi_deg == 90.0 {
            1.0
        } else if psi_deg == 0.0 {
            0.0
        } else {
            psi_deg.to_radians().sin().powi(2)
        };
        Ok(Self { zeta: zeta_of_gamma(gamma, d), gamma, psi_deg })
    }
}

fn zeta_of_gamma(gamma: f64, d: &Design) -> f64 {
    match d.n1 {
        SampleSize::Infinite => f64::INFINITY,
        SampleSize::Finite(n1) => {
            if gamma == 1.0 {
                f64::INFINITY
            } else {
                n1 as f64 * gamma / (d.n2 as f64 * (1.0 - gamma))
            }
        }
    }
}

/// An observed `(V, Z)` pair with the bounded forms `c = n₂z/(n₁+n₂z) = sin²θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatPoint {
    pub v: f64,
    pub z: f64,
    pub c: f64,
    pub theta_deg: f64,
}

impl StatPoint {
    pub fn new(v: f64, z: f64, d: &Design) -> Result<Self> {
        let dims = d.dims()?;
        if !(z > 0.0) {
            return Err(Error::Domain(format!("z must be positive, got {z}")));
        }
        let r = dims.n2 * z / dims.n1;
        Ok(Self { v, z, c: r / (1.0 + r), theta_deg: theta_of_ratio(r) })
    }
}

/// `θ = atan √r` in degrees, where `r = n₂z/n₁`.
pub fn theta_of_ratio(r: f64) -> f64 {
    r.sqrt().atan().to_degrees()
}

/// `θ` (degrees) from `c = sin²θ`.
pub fn theta_of_c(c: f64) -> f64 {
    c.clamp(0.0, 1.0).sqrt().asin().to_degrees()
}

/// `c = sin²θ` from `θ` in degrees.
pub fn c_of_theta(theta_deg: f64) -> f64 {
    if theta_deg >= 90.0 {
        1.0
    } else if theta_deg <= 0.0 {
        0.0
    } else {
        theta_deg.to_radians().sin().powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variance_point_identities() {
        let d = Design::new(5, 7).unwrap();
        for &zeta in &[0.01, 0.3, 1.0, 2.5, 40.0] {
            let vp = VariancePoint::from_zeta(zeta, &d).unwrap();
            assert!((vp.gamma - 7.0 * zeta / (5.0 + 7.0 * zeta)).abs() < 1e-12);
            assert!((vp.gamma - vp.psi_deg.to_radians().sin().powi(2)).abs() < 1e-12);
            let back = VariancePoint::from_gamma(vp.gamma, &d).unwrap();
            assert!((back.zeta - zeta).abs() < 1e-12 * zeta.max(1.0));
            let back = VariancePoint::from_psi_deg(vp.psi_deg, &d).unwrap();
            assert!((back.gamma - vp.gamma).abs() < 1e-12);
        }
    }

    #[test]
    fn variance_point_endpoints() {
        let d = Design::new(3, 4).unwrap();
        let a = VariancePoint::from_zeta(0.0, &d).unwrap();
        assert_eq!((a.gamma, a.psi_deg), (0.0, 0.0));
        let b = VariancePoint::from_zeta(f64::INFINITY, &d).unwrap();
        assert_eq!((b.gamma, b.psi_deg), (1.0, 90.0));
        let c = VariancePoint::from_gamma(1.0, &d).unwrap();
        assert!(c.zeta.is_infinite());
        assert_eq!(VariancePoint::from_psi_deg(0.0, &d).unwrap().zeta, 0.0);
    }

    #[test]
    fn stat_point_c_is_sin2_theta() {
        let d = Design::new(4, 9).unwrap();
        for &z in &[0.001, 0.5, 1.0, 17.0] {
            let s = StatPoint::new(0.3, z, &d).unwrap();
            assert!((s.c - c_of_theta(s.theta_deg)).abs() < 1e-12);
            assert!((theta_of_c(s.c) - s.theta_deg).abs() < 1e-9);
        }
    }

    #[test]
    fn design_validation() {
        assert!(Design::new(1, 5).is_err());
        assert!(Design::new(5, 1).is_err());
        let d = Design::from_dof(10, 15).unwrap();
        assert_eq!((d.n1, d.n2), (SampleSize::Finite(11), 16));
        assert_eq!(d.nu().value(), 25.0);
        assert!("inf".parse::<SampleSize>().unwrap() == SampleSize::Infinite);
        assert!(Design::infinite_n1(11).unwrap().dims().is_err());
        assert_eq!(Design::new(5, 7).unwrap().swapped().unwrap(), Design::new(7, 5).unwrap());
    }
}
