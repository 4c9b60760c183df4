//! Power of the two-tailed tests based on `T(ζ̃)` with a correct guess and on
//! `V` with an ideal criterion, as functions of the standardized difference
//! `δ = (μ₁ − μ₂)/√(σ₁²/n₁ + σ₂²/n₂)`.

use crate::criterion::{Criterion, CriterionTable};
use crate::design::{Design, VariancePoint};
use crate::distributions::{noncentral_t_cdf, Dof};
use crate::error::{Error, Result};
use crate::ideal::upper_t;
use crate::kernel::FiniteKernel;
use rayon::prelude::*;

/// Quadrature tolerance of the power integrals.
pub const POWER_TOL: f64 = 1e-9;

/// The default `δ` grid `0.0, 0.5, …, 5.0`.
pub fn default_delta_grid() -> Vec<f64> {
    (0..=10).map(|i| 0.5 * i as f64).collect()
}

#[derive(Debug, Clone)]
pub struct PowerSpec {
    pub design: Design,
    pub alpha: f64,
    pub zeta: f64,
    pub delta_grid: Vec<f64>,
    pub criterion: CriterionTable,
}

impl PowerSpec {
    pub fn new(criterion: CriterionTable, zeta: f64) -> Result<Self> {
        let spec = Self {
            design: criterion.design,
            alpha: criterion.alpha,
            zeta,
            delta_grid: default_delta_grid(),
            criterion,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_deltas(mut self, deltas: Vec<f64>) -> Result<Self> {
        self.delta_grid = deltas;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0) || self.zeta.is_infinite() {
            return Err(Error::Domain(format!("zeta must be finite and positive, got {}", self.zeta)));
        }
        if let Some(d) = self.delta_grid.iter().find(|d| !d.is_finite()) {
            return Err(Error::Domain(format!("delta grid must be finite, got {d}")));
        }
        if !self.design.is_finite() {
            return Err(Error::Design("power of V needs a finite design".into()));
        }
        Ok(())
    }
}

/// `1 + S_ν(−t_ν(α), δ) − S_ν(t_ν(α), δ)`, the power of `T(ζ̃)` when the guess
/// is correct.
pub fn power_t(delta: f64, d: &Design, alpha: f64) -> Result<f64> {
    let nu = d.nu();
    let t = upper_t(alpha, nu)?;
    if delta == 0.0 {
        return Ok(2.0 * alpha);
    }
    let p = 1.0 + noncentral_t_cdf(-t, nu, delta)? - noncentral_t_cdf(t, nu, delta)?;
    Ok(p.clamp(0.0, 1.0))
}

/// `1 + E_X[S_ν(−v/K, δ) − S_ν(v/K, δ)]` over the beta form of `Z`, with
/// `v = v(c(X))` read from the criterion table.
pub fn power_v_ideal(delta: f64, spec: &PowerSpec) -> Result<f64> {
    let k = FiniteKernel::new(&spec.design)?.with_tolerance(POWER_TOL);
    let gamma = VariancePoint::from_zeta(spec.zeta, &spec.design)?.gamma;
    power_v_with(&k, &spec.criterion.interpolant(), gamma, delta)
}

fn power_v_with<C: Criterion + ?Sized>(k: &FiniteKernel, crit: &C, gamma: f64, delta: f64) -> Result<f64> {
    let m = k.dims;
    let nu = Dof::Finite(m.nu);
    let scale = m.nu / (m.nu1 * m.nu2);
    let mut failure = None;
    let accept = k.beta_expectation(|x, y| {
        let bracket = m.nu1 * (1.0 - gamma) * y + m.nu2 * gamma * x;
        if bracket <= 0.0 {
            return 0.0;
        }
        let c = m.nu2 * gamma * x / bracket;
        let u = crit.at_c(c) * (scale * bracket).sqrt();
        match (noncentral_t_cdf(u, nu, delta), noncentral_t_cdf(-u, nu, delta)) {
            (Ok(hi), Ok(lo)) => hi - lo,
            (Err(e), _) | (_, Err(e)) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((1.0 - accept).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRow {
    pub delta: f64,
    pub power_t: f64,
    pub power_v: f64,
    /// `power_T − power_V`.
    pub gap: f64,
}

/// Both power functions on the `δ` grid of `spec`.
pub fn power_table(spec: &PowerSpec) -> Result<Vec<PowerRow>> {
    let k = FiniteKernel::new(&spec.design)?.with_tolerance(POWER_TOL);
    let gamma = VariancePoint::from_zeta(spec.zeta, &spec.design)?.gamma;
    let crit = spec.criterion.interpolant();
    spec.delta_grid
        .par_iter()
        .map(|&delta| {
            let pt = power_t(delta, &spec.design, spec.alpha)?;
            let pv = power_v_with(&k, &crit, gamma, delta)?;
            Ok(PowerRow { delta, power_t: pt, power_v: pv, gap: pt - pv })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criterion::{build_psi_lattice, Family, LatticeKind};

    fn t_table(d: Design, alpha: f64) -> CriterionTable {
        let nodes = build_psi_lattice().nodes;
        let t = upper_t(alpha, d.nu()).unwrap();
        CriterionTable {
            family: Family::Ideal,
            design: d,
            alpha,
            lattice: LatticeKind::Psi91,
            values: vec![t; nodes.len()],
            residuals: vec![0.0; nodes.len()],
            nodes,
            converged: true,
            tolerance: 1e-6,
        }
    }

    #[test]
    fn size_at_null() {
        let d = Design::new(8, 12).unwrap();
        assert!((power_t(0.0, &d, 0.025).unwrap() - 0.05).abs() < 1e-12);
        assert!(power_t(50.0, &d, 0.025).unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn t_power_is_symmetric_and_monotone() {
        let d = Design::new(6, 9).unwrap();
        let mut prev = 0.0;
        for i in 0..=10 {
            let delta = 0.5 * i as f64;
            let p = power_t(delta, &d, 0.05).unwrap();
            assert!(p >= prev - 1e-12);
            assert!((p - power_t(-delta, &d, 0.05).unwrap()).abs() < 1e-9);
            prev = p;
        }
    }

    #[test]
    fn constant_criterion_at_harmonic_zeta_matches_t() {
        // at ζ = n₁ν₁/(n₂ν₂), V is exactly Student-t with ν degrees of freedom
        let d = Design::new(5, 9).unwrap();
        let zeta = d.harmonic_zeta().unwrap();
        let spec = PowerSpec::new(t_table(d, 0.025), zeta).unwrap();
        for row in power_table(&spec).unwrap() {
            assert!(row.gap.abs() < 1e-7, "{row:?}");
        }
    }
}
