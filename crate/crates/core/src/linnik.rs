//! Intersections between ideal criteria at different significance levels.
//! For `α₁ < α₂` a consistent pair has `v_{α₁}(θ) > v_{α₂}(θ)` everywhere;
//! any θ where the order reverses makes the critical regions non-nested.

use crate::criterion::CriterionTable;
use crate::design::Design;
use crate::error::{Error, Result};
use crate::ideal::{solve_ideal, InitialGuess, SolveOptions, STRICT_TOL};

/// A θ-range (node units of the lattice) where `v_{α₁} < v_{α₂}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingInterval {
    /// Linearly interpolated zero of the gap on the left.
    pub start: f64,
    /// Linearly interpolated zero of the gap on the right.
    pub end: f64,
    /// Most negative `v_{α₁} − v_{α₂}` inside the interval.
    pub min_gap: f64,
    pub node_at_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingReport {
    pub design: Design,
    pub alpha_pair: (f64, f64),
    pub crossing_intervals: Vec<CrossingInterval>,
    /// Largest absolute similarity residual of the two tables.
    pub residual_quality: f64,
    /// Some interval's gap exceeds twice the residual quality.
    pub detected: bool,
    /// No detected crossing, but the smallest gap lies within the noise band.
    pub inconclusive: bool,
    /// At least one table was solved at a tolerance looser than the strict tier.
    pub approximate: bool,
}

/// Sign scan of `v_{α₁} − v_{α₂}` across the shared lattice; the arguments
/// may come in either order.
pub fn detect_crossings(a: &CriterionTable, b: &CriterionTable) -> Result<CrossingReport> {
    if a.design != b.design || a.lattice != b.lattice || a.nodes != b.nodes {
        return Err(Error::Domain("crossing detection needs tables on one design and lattice".into()));
    }
    let (lo, hi) = if a.alpha <= b.alpha { (a, b) } else { (b, a) };
    let gap: Vec<f64> = lo.values.iter().zip(&hi.values).map(|(x, y)| x - y).collect();
    let quality = lo.max_abs_residual().max(hi.max_abs_residual());
    let nodes = &lo.nodes;
    let zero_between = |i: usize, j: usize| {
        let (g0, g1) = (gap[i], gap[j]);
        if g0 == g1 {
            nodes[i]
        } else {
            nodes[i] + (nodes[j] - nodes[i]) * g0 / (g0 - g1)
        }
    };
    let mut intervals = Vec::new();
    let mut i = 0;
    while i < gap.len() {
        if gap[i] >= 0.0 {
            i += 1;
            continue;
        }
        let first = i;
        let mut at_min = i;
        while i < gap.len() && gap[i] < 0.0 {
            if gap[i] < gap[at_min] {
                at_min = i;
            }
            i += 1;
        }
        let start = if first == 0 { nodes[0] } else { zero_between(first - 1, first) };
        let end = if i == gap.len() { nodes[i - 1] } else { zero_between(i - 1, i) };
        intervals.push(CrossingInterval { start, end, min_gap: gap[at_min], node_at_min: nodes[at_min] });
    }
    let min_gap = gap.iter().copied().fold(f64::INFINITY, f64::min);
    let detected = intervals.iter().any(|c| c.min_gap < -2.0 * quality);
    let inconclusive = !detected && min_gap < 2.0 * quality;
    Ok(CrossingReport {
        design: lo.design,
        alpha_pair: (lo.alpha, hi.alpha),
        crossing_intervals: intervals,
        residual_quality: quality,
        detected,
        inconclusive,
        approximate: lo.tolerance > STRICT_TOL || hi.tolerance > STRICT_TOL,
    })
}

/// Where the onset `α_L` of crossings lies relative to a grid of levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaLBracket {
    /// `α_L ∈ (lo, hi)`.
    Between(f64, f64),
    /// No adjacent pair crosses: `α_L` is below the smallest grid level.
    BelowGrid(f64),
    /// The top adjacent pair still crosses: `α_L` lies above this level and
    /// the grid gives no upper bound.
    AboveGrid(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinnikScan {
    pub bracket: AlphaLBracket,
    pub pairs: Vec<CrossingReport>,
}

impl LinnikScan {
    /// Some adjacent pair could be neither confirmed nor ruled out.
    pub fn inconclusive(&self) -> bool {
        self.pairs.iter().any(|p| p.inconclusive)
    }
}

/// Bracket `α_L` from tables at increasing `α`: the largest adjacent pair
/// with a detected crossing gives `(α_i, α_{i+1})`.
pub fn bracket_alpha_l(tables: &[CriterionTable]) -> Result<LinnikScan> {
    if tables.len() < 2 {
        return Err(Error::Domain("need tables at two or more levels".into()));
    }
    if tables.windows(2).any(|w| w[1].alpha <= w[0].alpha) {
        return Err(Error::Domain("alpha grid must be strictly increasing".into()));
    }
    let pairs = tables.windows(2).map(|w| detect_crossings(&w[0], &w[1])).collect::<Result<Vec<_>>>()?;
    let last = pairs.iter().rposition(|p| p.detected);
    let bracket = match last {
        None => AlphaLBracket::BelowGrid(tables[0].alpha),
        Some(i) if i + 1 == pairs.len() => AlphaLBracket::AboveGrid(pairs[i].alpha_pair.0),
        Some(i) => AlphaLBracket::Between(pairs[i].alpha_pair.0, pairs[i].alpha_pair.1),
    };
    Ok(LinnikScan { bracket, pairs })
}

/// Solve ideal tables on `alpha_grid` and bracket `α_L`.
pub fn estimate_alpha_l(
    d: &Design,
    alpha_grid: &[f64],
    opts: &SolveOptions,
) -> Result<(LinnikScan, Vec<CriterionTable>)> {
    let tables = alpha_grid.iter().map(|&a| solve_ideal(d, a, InitialGuess::Auto, opts)).collect::<Result<Vec<_>>>()?;
    Ok((bracket_alpha_l(&tables)?, tables))
}
