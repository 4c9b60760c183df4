use super::{PiSource, SimulationRun};
use crate::criterion::{Criterion, CriterionTable, TableCriterion};
use crate::design::{c_of_theta, Design};
use crate::error::{Error, Result};
use crate::fisher_behrens::{solve_fb_criterion, FbConfidence};
use crate::ideal::{solve_ideal, InitialGuess, SolveOptions};
use rayon::prelude::*;

/// Criteria of one family at increasing confidence levels `1 − 2α`.
#[derive(Debug, Clone)]
pub struct LevelSet {
    pub design: Design,
    pub levels: Vec<f64>,
    pub tables: Vec<CriterionTable>,
    curves: Vec<TableCriterion>,
}

impl LevelSet {
    pub fn new(mut tables: Vec<CriterionTable>) -> Result<Self> {
        if tables.len() < 2 {
            return Err(Error::Domain("a level set needs at least two criteria".into()));
        }
        let design = tables[0].design;
        if tables.iter().any(|t| t.design != design) {
            return Err(Error::Design("all criteria of a level set must share one design".into()));
        }
        tables.sort_by(|a, b| b.alpha.total_cmp(&a.alpha));
        let levels: Vec<f64> = tables.iter().map(|t| 1.0 - 2.0 * t.alpha).collect();
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("confidence levels must be distinct".into()));
        }
        let curves = tables.iter().map(|t| t.interpolant()).collect();
        Ok(Self { design, levels, tables, curves })
    }

    /// Ideal criteria at each level, solved with the design's default options.
    pub fn solve_ideal(d: &Design, levels: &[f64], opts: &SolveOptions) -> Result<Self> {
        let tables = levels
            .iter()
            .map(|&l| solve_ideal(d, alpha_of_level(l)?, InitialGuess::Auto, opts))
            .collect::<Result<Vec<_>>>()?;
        Self::new(tables)
    }

    /// Fisher–Behrens criteria at each level.
    pub fn solve_fb(d: &Design, levels: &[f64]) -> Result<Self> {
        let tables = levels.iter().map(|&l| solve_fb_criterion(d, alpha_of_level(l)?)).collect::<Result<Vec<_>>>()?;
        Self::new(tables)
    }

    /// Critical values `xᵢ` at `θ`, with the level-0 value `x₀ = 0` first.
    pub fn critical_values(&self, theta_deg: f64) -> Vec<f64> {
        let c = c_of_theta(theta_deg);
        std::iter::once(0.0).chain(self.curves.iter().map(|k| k.at_c(c))).collect()
    }

    /// Levels with `0` first, aligned with [`LevelSet::critical_values`].
    pub fn levels_with_zero(&self) -> Vec<f64> {
        std::iter::once(0.0).chain(self.levels.iter().copied()).collect()
    }
}

/// `α` of the confidence level `1 − 2α`.
pub fn alpha_of_level(level: f64) -> Result<f64> {
    if level > 0.0 && level < 1.0 {
        Ok(0.5 * (1.0 - level))
    } else {
        Err(Error::Domain(format!("confidence level must lie in (0, 1), got {level}")))
    }
}

/// Quadratic through three points, evaluated at `x`.
pub fn lagrange3(xs: [f64; 3], ys: [f64; 3], x: f64) -> f64 {
    let [x0, x1, x2] = xs;
    let [y0, y1, y2] = ys;
    y0 * (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2))
        + y1 * (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2))
        + y2 * (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1))
}

/// Where quadratic interpolation of the level function is trusted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignRule {
    /// How far above the top level extrapolation through the top three
    /// criteria may reach.
    pub window: f64,
    /// Above this `|V|`, interpolate in `1/x` through the top three criteria.
    pub inverse_above: Option<f64>,
}

impl Default for AssignRule {
    fn default() -> Self {
        Self { window: 0.15, inverse_above: None }
    }
}

fn strictly_increasing(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[1] > w[0])
}

/// Level assigned to `|V|` given the critical values `xs` (with `x₀ = 0`) and
/// their levels.
pub fn assign_one(abs_v: f64, xs: &[f64], levels: &[f64], rule: &AssignRule) -> (Option<f64>, PiSource) {
    let m = xs.len() - 1;
    let top = [xs[m - 2], xs[m - 1], xs[m]];
    let top_levels = [levels[m - 2], levels[m - 1], levels[m]];
    if let Some(b) = rule.inverse_above {
        if abs_v > b {
            if !strictly_increasing(&top) {
                return (None, PiSource::Unassignable);
            }
            let inv = [1.0 / top[0], 1.0 / top[1], 1.0 / top[2]];
            return (Some(lagrange3(inv, top_levels, 1.0 / abs_v)), PiSource::Inverse);
        }
    }
    if abs_v > xs[m] {
        if !strictly_increasing(&top) {
            return (None, PiSource::Unassignable);
        }
        let p = lagrange3(top, top_levels, abs_v);
        if !(p >= levels[m] && p <= levels[m] + rule.window) {
            return (None, PiSource::Unassignable);
        }
        return (Some(p), PiSource::Extrapolated);
    }
    let mid = (1..m).min_by(|&a, &b| (xs[a] - abs_v).abs().total_cmp(&(xs[b] - abs_v).abs())).unwrap_or(1);
    let tri = [xs[mid - 1], xs[mid], xs[mid + 1]];
    if !strictly_increasing(&tri) {
        return (None, PiSource::Unassignable);
    }
    (Some(lagrange3(tri, [levels[mid - 1], levels[mid], levels[mid + 1]], abs_v)), PiSource::Interpolated)
}

fn clamp_pi(pi: Option<f64>) -> (Option<f64>, bool) {
    match pi {
        Some(p) if !(0.0..=1.0).contains(&p) => (Some(p.clamp(0.0, 1.0)), true),
        other => (other, false),
    }
}

/// Confidence of every record from quadratic interpolation of the level
/// function across the criteria of `ls`.
pub fn assign_confidence_ideal(run: &mut SimulationRun, ls: &LevelSet, rule: &AssignRule) -> Result<()> {
    if run.design != ls.design {
        return Err(Error::Design(format!("run design {} differs from level-set design {}", run.design, ls.design)));
    }
    let levels = ls.levels_with_zero();
    run.records.par_iter_mut().for_each(|r| {
        let xs = ls.critical_values(r.theta_deg);
        let (pi, source) = assign_one(r.v.abs(), &xs, &levels, rule);
        let (pi, clamped) = clamp_pi(pi);
        r.pi = pi;
        r.source = source;
        r.clamped = clamped;
    });
    Ok(())
}

/// Fisher–Behrens confidence `2 Pr{V < |v| | θ} − 1` of every record.
pub fn assign_confidence_fb(run: &mut SimulationRun) -> Result<()> {
    let eval = FbConfidence::new(&run.design)?;
    run.records.par_iter_mut().try_for_each(|r| {
        r.pi = Some(eval.confidence(r.v.abs(), r.theta_deg)?);
        r.source = PiSource::FisherBehrens;
        r.clamped = false;
        Ok(())
    })
}
