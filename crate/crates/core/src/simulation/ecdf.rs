use super::LevelSet;
use crate::design::VariancePoint;
use crate::error::{Error, Result};
use crate::kernel::{two_tailed_with, FiniteKernel};

/// One horizontal step of the ranked empirical distribution: from
/// `(x_start, y)` to `(x_end, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcdfSegment {
    pub x_start: f64,
    pub x_end: f64,
    pub y: f64,
}

/// Steps between consecutive ranked confidences `ρ₀ = 0 ≤ ρ₁ ≤ … ≤ ρₙ ≤
/// ρₙ₊₁ = 1`, segment `i` at height `i/n`.
pub fn ranked_ecdf(pis: &[f64]) -> Result<Vec<EcdfSegment>> {
    if let Some(p) = pis.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(format!("confidences must lie in [0, 1], got {p}")));
    }
    let n = pis.len();
    let mut rho = Vec::with_capacity(n + 2);
    rho.push(0.0);
    let mut sorted = pis.to_vec();
    sorted.sort_by(f64::total_cmp);
    rho.extend(sorted);
    rho.push(1.0);
    let denom = n.max(1) as f64;
    Ok((0..=n).map(|i| EcdfSegment { x_start: rho[i], x_end: rho[i + 1], y: i as f64 / denom }).collect())
}

/// `sup |F̂(x) − G(x)|` over `x ∈ [0, upper]`, where `F̂` counts assigned
/// confidences out of all records (unassigned records never count as below).
pub fn ks_distance<G: Fn(f64) -> f64>(pis: &[Option<f64>], curve: G, upper: f64) -> f64 {
    let n = pis.len() as f64;
    let mut xs: Vec<f64> = pis.iter().flatten().copied().filter(|&p| p <= upper).collect();
    xs.sort_by(f64::total_cmp);
    let mut sup = curve(0.0).abs();
    let mut below = 0usize;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let g = curve(x);
        sup = sup.max((below as f64 / n - g).abs());
        while i < xs.len() && xs[i] == x {
            i += 1;
        }
        below = i;
        sup = sup.max((below as f64 / n - g).abs());
    }
    sup.max((below as f64 / n - curve(upper)).abs())
}

/// Natural cubic spline through increasing knots.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(Error::Length { expected: n, got: y.len() });
        }
        if n < 2 || x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("spline knots must be at least two and strictly increasing".into()));
        }
        // second derivatives by the Thomas algorithm, m₀ = mₙ₋₁ = 0
        let mut m = vec![0.0; n];
        if n > 2 {
            let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                diag[i] = 2.0 * (h[i] + h[i + 1]);
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h[i + 1] - (y[i + 1] - y[i]) / h[i]);
            }
            for i in 1..k {
                let w = h[i] / diag[i - 1];
                diag[i] -= w * h[i];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - h[i + 1] * m[i + 2]) / diag[i];
            }
        }
        Ok(Self { x, y, m })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Exact acceptance probabilities `Pr{|V| < v(Θ) | γ}` of each criterion in
/// a level set, with `(0, 0)` and `(1, 1)` adjoined and a spline through
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoreticalCurve {
    pub points: Vec<(f64, f64)>,
    pub spline: NaturalSpline,
}

impl TheoreticalCurve {
    pub fn eval(&self, level: f64) -> f64 {
        self.spline.eval(level)
    }
}

pub fn theoretical_curve(ls: &LevelSet, vp: &VariancePoint) -> Result<TheoreticalCurve> {
    let k = FiniteKernel::new(&ls.design)?;
    let mut points = vec![(0.0, 0.0)];
    for (level, table) in ls.levels.iter().zip(&ls.tables) {
        let size = two_tailed_with(&k, &table.interpolant(), vp.gamma)?;
        points.push((*level, 1.0 - size));
    }
    points.push((1.0, 1.0));
    let spline = NaturalSpline::new(points.iter().map(|p| p.0).collect(), points.iter().map(|p| p.1).collect())?;
    Ok(TheoreticalCurve { points, spline })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_ecdf() {
        let s = ranked_ecdf(&[0.5]).unwrap();
        assert_eq!(
            s,
            vec![EcdfSegment { x_start: 0.0, x_end: 0.5, y: 0.0 }, EcdfSegment { x_start: 0.5, x_end: 1.0, y: 1.0 }]
        );
    }

    #[test]
    fn uniform_grid_hugs_diagonal() {
        let n = 400;
        let pis: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        for s in ranked_ecdf(&pis).unwrap() {
            assert!((s.y - s.x_start).abs() <= 1.0 / n as f64 + 1e-12);
        }
        let opt: Vec<Option<f64>> = pis.iter().map(|&p| Some(p)).collect();
        assert!(ks_distance(&opt, |x| x, 1.0) <= 1.0 / n as f64 + 1e-12);
    }

    #[test]
    fn ks_counts_unassigned_in_denominator() {
        let pis = [Some(0.25), Some(0.75), None, None];
        let d = ks_distance(&pis, |x| x, 0.8);
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn spline_interpolates_and_is_linear_on_lines() {
        let x = vec![0.0, 0.3, 0.5, 0.9, 1.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let s = NaturalSpline::new(x.clone(), y.clone()).unwrap();
        for (&a, &b) in x.iter().zip(&y) {
            assert!((s.eval(a) - b).abs() < 1e-12);
        }
        assert!((s.eval(0.71) - 2.42).abs() < 1e-12);
    }
}
