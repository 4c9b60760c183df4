//! Test criteria `v(θ)`: constants, and tables on the arctan ψ-lattice or the
//! equidistant c-lattice with C¹ piecewise-cubic interpolation.

use crate::design::{theta_of_c, Design};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Number of nodes on the ψ/θ lattice.
pub const PSI_NODES: usize = 91;
/// Number of nodes on the equidistant c lattice.
pub const C_NODES: usize = 101;

/// A critical-value function evaluated at the bounded statistic `c = sin²θ`.
pub trait Criterion: Sync {
    fn at_c(&self, c: f64) -> f64;
}

/// A criterion that does not depend on `Z`.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl Criterion for Constant {
    fn at_c(&self, _c: f64) -> f64 {
        self.0
    }
}

/// `-v(θ)`, used for the lower tail of two-tailed probabilities.
pub struct Negated<'a, C: Criterion + ?Sized>(pub &'a C);

impl<C: Criterion + ?Sized> Criterion for Negated<'_, C> {
    fn at_c(&self, c: f64) -> f64 {
        -self.0.at_c(c)
    }
}

impl<F: Fn(f64) -> f64 + Sync> Criterion for F {
    fn at_c(&self, c: f64) -> f64 {
        self(c)
    }
}

/// The 91-node lattice `ψᵢ = 45° + atan((i − 45)/45)`, with the endpoints
/// 0° and 90° set exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiLattice {
    pub nodes: Vec<f64>,
}

pub fn build_psi_lattice() -> PsiLattice {
    let mut nodes: Vec<f64> = (0..PSI_NODES).map(|i| 45.0 + ((i as f64 - 45.0) / 45.0).atan().to_degrees()).collect();
    nodes[0] = 0.0;
    nodes[45] = 45.0;
    nodes[PSI_NODES - 1] = 90.0;
    // exact mirror symmetry node[i] + node[90 - i] = 90
    for i in 46..PSI_NODES - 1 {
        nodes[i] = 90.0 - nodes[PSI_NODES - 1 - i];
    }
    PsiLattice { nodes }
}

/// 101 equidistant c values `0.00, 0.01, ..., 1.00`.
pub fn build_c101_lattice() -> Vec<f64> {
    (0..C_NODES).map(|i| i as f64 / 100.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    /// θ nodes (degrees) on the arctan lattice
    Psi91,
    /// c nodes on the equidistant lattice
    C101,
}

impl LatticeKind {
    pub fn nodes(self) -> Vec<f64> {
        match self {
            LatticeKind::Psi91 => build_psi_lattice().nodes,
            LatticeKind::C101 => build_c101_lattice(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LatticeKind::Psi91 => "psi91",
            LatticeKind::C101 => "c101",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "psi91" => Ok(LatticeKind::Psi91),
            "c101" => Ok(LatticeKind::C101),
            other => Err(Error::Schema(format!("unknown lattice kind {other:?}"))),
        }
    }

    /// `c` of node value `x` (θ in degrees, or c itself).
    pub fn c_of_node(self, x: f64) -> f64 {
        match self {
            LatticeKind::Psi91 => crate::design::c_of_theta(x),
            LatticeKind::C101 => x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Ideal,
    FisherBehrens,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Ideal => "ideal",
            Family::FisherBehrens => "fisher-behrens",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(Family::Ideal),
            "fisher-behrens" => Ok(Family::FisherBehrens),
            other => Err(Error::Schema(format!("unknown criterion family {other:?}"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A critical-value curve `v_α` on a fixed lattice, with the signed
/// similarity residual `Pr{V ≤ v | ψᵢ} − (1 − α)` at each node.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionTable {
    pub family: Family,
    pub design: Design,
    pub alpha: f64,
    pub lattice: LatticeKind,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub tolerance: f64,
}

impl CriterionTable {
    pub fn interpolant(&self) -> TableCriterion {
        TableCriterion { lattice: self.lattice, curve: Hermite::new(self.nodes.clone(), self.values.clone()) }
    }

    pub fn value_at_c(&self, c: f64) -> f64 {
        self.interpolant().at_c(c)
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0_f64, |m, r| m.max(r.abs()))
    }
}

/// Interpolated table usable inside integrands.
#[derive(Debug, Clone)]
pub struct TableCriterion {
    lattice: LatticeKind,
    curve: Hermite,
}

impl TableCriterion {
    pub fn from_values(lattice: LatticeKind, nodes: Vec<f64>, values: Vec<f64>) -> Self {
        Self { lattice, curve: Hermite::new(nodes, values) }
    }
}

impl TableCriterion {
    /// Sensitivities of the interpolated value at `c` to the node values.
    pub fn basis_weights_at_c(&self, c: f64, out: &mut Vec<(usize, f64)>) {
        match self.lattice {
            LatticeKind::Psi91 => self.curve.basis_weights(theta_of_c(c), out),
            LatticeKind::C101 => self.curve.basis_weights(c.clamp(0.0, 1.0), out),
        }
    }
}

impl Criterion for TableCriterion {
    fn at_c(&self, c: f64) -> f64 {
        match self.lattice {
            LatticeKind::Psi91 => self.curve.eval(theta_of_c(c)),
            LatticeKind::C101 => self.curve.eval(c.clamp(0.0, 1.0)),
        }
    }
}

/// C¹ cubic Hermite interpolant with three-point (Bessel) slopes; exact at
/// the nodes and for quadratics.
#[derive(Debug, Clone)]
pub struct Hermite {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

/// Node slopes as linear combinations `dᵢ = Σₖ wₖ y_{start+k}` of three values.
fn slope_stencil(x: &[f64], i: usize) -> (usize, [f64; 3]) {
    let n = x.len();
    if n == 2 {
        let h = x[1] - x[0];
        return (0, [-1.0 / h, 1.0 / h, 0.0]);
    }
    if i == 0 {
        let (h0, h1) = (x[1] - x[0], x[2] - x[1]);
        // ((2h0 + h1) s0 − h0 s1)/(h0 + h1)
        let a = (2.0 * h0 + h1) / (h0 + h1);
        let b = h0 / (h0 + h1);
        return (0, [-a / h0, a / h0 + b / h1, -b / h1]);
    }
    if i == n - 1 {
        let (hm, hp) = (x[n - 2] - x[n - 3], x[n - 1] - x[n - 2]);
        let a = (2.0 * hp + hm) / (hp + hm);
        let b = hp / (hp + hm);
        // a s_{n-2} − b s_{n-3}
        return (n - 3, [b / hm, -b / hm - a / hp, a / hp]);
    }
    let (hm, hp) = (x[i] - x[i - 1], x[i + 1] - x[i]);
    // (hp s_{i−1} + hm s_i)/(hm + hp)
    let a = hp / (hm + hp);
    let b = hm / (hm + hp);
    (i - 1, [-a / hm, a / hm - b / hp, b / hp])
}

impl Hermite {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len());
        assert!(x.len() >= 2);
        let n = x.len();
        let mut d = vec![0.0; n];
        if n == 2 {
            let s = (y[1] - y[0]) / (x[1] - x[0]);
            d.fill(s);
            return Self { x, y, d };
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let s: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        for i in 1..n - 1 {
            d[i] = (h[i] * s[i - 1] + h[i - 1] * s[i]) / (h[i - 1] + h[i]);
        }
        // one-sided three-point formulas at the ends
        d[0] = ((2.0 * h[0] + h[1]) * s[0] - h[0] * s[1]) / (h[0] + h[1]);
        d[n - 1] = ((2.0 * h[n - 2] + h[n - 3]) * s[n - 2] - h[n - 2] * s[n - 3]) / (h[n - 2] + h[n - 3]);
        Self { x, y, d }
    }

    /// Sensitivities `∂eval(t)/∂yⱼ` as `(j, weight)` pairs.
    pub fn basis_weights(&self, t: f64, out: &mut Vec<(usize, f64)>) {
        out.clear();
        let n = self.x.len();
        let t = t.clamp(self.x[0], self.x[n - 1]);
        let i = self.x.partition_point(|&xi| xi <= t).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let u = (t - self.x[i]) / h;
        let u2 = u * u;
        let u3 = u2 * u;
        out.push((i, 2.0 * u3 - 3.0 * u2 + 1.0));
        out.push((i + 1, -2.0 * u3 + 3.0 * u2));
        for (node, coef) in [(i, h * (u3 - 2.0 * u2 + u)), (i + 1, h * (u3 - u2))] {
            let (start, w) = slope_stencil(&self.x, node);
            for (k, wk) in w.iter().enumerate() {
                out.push((start + k, coef * wk));
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let t = t.clamp(self.x[0], self.x[n - 1]);
        let i = self.x.partition_point(|&xi| xi <= t).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let u = (t - self.x[i]) / h;
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_lattice_reference_nodes() {
        let l = build_psi_lattice().nodes;
        assert_eq!(l.len(), 91);
        // 0.6437, not 0.635: the closed form is authoritative
        assert!((l[1] - 0.643_746).abs() < 1e-6);
        assert!((l[2] - 1.302).abs() < 1e-3);
        assert!((l[10] - 7.125).abs() < 1e-3);
        assert_eq!(l[45], 45.0);
        assert!((l[80] - 82.875).abs() < 1e-3);
        assert!((l[89] - 89.356_254).abs() < 1e-6);
        assert!((l[5] - 3.367).abs() < 1e-3);
        assert!((l[15] - 11.310).abs() < 1e-3);
        assert_eq!((l[0], l[90]), (0.0, 90.0));
        for i in 0..91 {
            assert!((l[i] + l[90 - i] - 90.0).abs() < 1e-12);
            if i > 0 {
                assert!(l[i] > l[i - 1]);
            }
        }
    }

    #[test]
    fn hermite_exact_at_nodes_and_quadratics() {
        let x = build_psi_lattice().nodes;
        let y: Vec<f64> = x.iter().map(|t| 0.3 * t * t - 2.0 * t + 1.0).collect();
        let h = Hermite::new(x.clone(), y.clone());
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(h.eval(*xi), *yi);
        }
        for k in 0..300 {
            let t = 0.3 * k as f64;
            let exact = 0.3 * t * t - 2.0 * t + 1.0;
            assert!((h.eval(t) - exact).abs() < 1e-9 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn basis_weights_reproduce_eval() {
        let x = build_psi_lattice().nodes;
        let y: Vec<f64> = x.iter().map(|t| (t / 17.0).sin() + 2.0).collect();
        let h = Hermite::new(x.clone(), y.clone());
        let mut w = Vec::new();
        for k in 0..=900 {
            let t = 0.1 * k as f64;
            h.basis_weights(t, &mut w);
            let s: f64 = w.iter().map(|&(j, c)| c * y[j]).sum();
            assert!((s - h.eval(t)).abs() < 1e-12, "{t}");
        }
    }

    #[test]
    fn table_criterion_lookups() {
        let lat = LatticeKind::Psi91;
        let nodes = lat.nodes();
        let values: Vec<f64> = nodes.iter().map(|t| 2.0 + t / 90.0).collect();
        let tc = TableCriterion::from_values(lat, nodes, values);
        assert!((tc.at_c(0.0) - 2.0).abs() < 1e-15);
        assert!((tc.at_c(1.0) - 3.0).abs() < 1e-15);
        assert!((tc.at_c(0.5) - 2.5).abs() < 1e-12);
        let neg = Negated(&tc);
        assert!((neg.at_c(0.5) + 2.5).abs() < 1e-12);
    }
}
