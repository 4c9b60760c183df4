//! Ideal (exactly similar) criteria: solve `Pr{V ≤ v(Θ) | ψ} = 1 − α` for
//! every `ψ` on a lattice, either by a smoothness-regularized Gauss–Newton
//! solve or by simultaneous false-position sweeps.

use crate::criterion::{
    build_c101_lattice, build_psi_lattice, CriterionTable, Family, LatticeKind, TableCriterion, PSI_NODES,
};
use crate::design::{c_of_theta, Design, VariancePoint};
use crate::distributions::special::normal_quantile;
use crate::distributions::{student_t_quantile, Dof};
use crate::error::{Error, Result};
use crate::kernel::{FiniteKernel, LimitKernel};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

/// Stop when no node moves by more than this between sweeps.
pub const CHANGE_TOL: f64 = 5e-5;
/// Residual tolerance when both samples have at least 10 degrees of freedom.
pub const STRICT_TOL: f64 = 1e-6;
/// Residual tolerance when the smaller sample has 5 to 9 degrees of freedom.
pub const MODERATE_TOL: f64 = 1e-4;
/// Residual tolerance for very small samples near the non-uniqueness regime.
pub const RELAXED_TOL: f64 = 1e-3;

/// Label of the sign convention used by [`ResidualReport`].
pub const DEFECT_CONVENTION: &str = "one-tailed: d = Pr{V > v(Theta) | gamma} - alpha";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Smoothness-regularized Gauss–Newton: the smoothest table whose
    /// residuals fall below 0.3 times the tolerance.
    Regularized,
    /// Simultaneous false-position sweeps on every interior node.
    FalsePosition,
}

impl SolveMethod {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "regularized" => Ok(SolveMethod::Regularized),
            "false-position" => Ok(SolveMethod::FalsePosition),
            other => Err(Error::Domain(format!("unknown solve method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub method: SolveMethod,
    /// Maximum absolute residual `|Pr − (1 − α)|` accepted at convergence.
    pub tol: f64,
    /// Maximum successive change accepted at convergence.
    pub change_tol: f64,
    pub max_sweeps: usize,
    /// Offset of the initial lower companion `v₋ = v₀ − δ`.
    pub delta: f64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: SolveMethod::Regularized,
            tol: STRICT_TOL,
            change_tol: CHANGE_TOL,
            max_sweeps: 200,
            delta: 0.01,
            threads: None,
        }
    }
}

impl SolveOptions {
    /// Defaults with the residual tolerance matched to the design size.
    pub fn for_design(d: &Design) -> Self {
        let nu_min = match d.dims() {
            Ok(m) => m.nu1.min(m.nu2),
            Err(_) => d.n2 as f64 - 1.0,
        };
        let tol = if nu_min >= 10.0 {
            STRICT_TOL
        } else if nu_min >= 5.0 {
            MODERATE_TOL
        } else {
            RELAXED_TOL
        };
        Self { tol, ..Self::default() }
    }
}

/// Initial guess for [`solve_ideal`].
#[derive(Debug, Clone)]
pub enum InitialGuess {
    /// Linear blend of the endpoint t quantiles in `c`, smoothed three times.
    Auto,
    Table(CriterionTable),
}

/// Three-point moving mean on the interior nodes; endpoints unchanged.
pub fn smooth(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() != PSI_NODES {
        return Err(Error::Length { expected: PSI_NODES, got: values.len() });
    }
    Ok(smooth_any(values))
}

fn smooth_any(values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    for i in 1..values.len() - 1 {
        out[i] = (values[i - 1] + values[i] + values[i + 1]) / 3.0;
    }
    out
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must lie in (0, 0.5), got {alpha}")))
    }
}

/// Upper-α quantile `t_ν(α)`.
pub fn upper_t(alpha: f64, nu: Dof) -> Result<f64> {
    match nu {
        Dof::Infinite => Ok(normal_quantile(1.0 - alpha)),
        _ => student_t_quantile(1.0 - alpha, nu),
    }
}

/// Probability and shift-derivative oracle for one lattice problem.
trait Similarity: Sync {
    fn prob(&self, crit: &TableCriterion, gamma: f64) -> Result<f64>;
    fn slope(&self, crit: &TableCriterion, gamma: f64) -> Result<f64>;
    fn rule(&self) -> Vec<(f64, f64)>;
    fn sensitivity(&self, crit: &TableCriterion, gamma: f64, rule: &[(f64, f64)], row: &mut [f64]);
}

impl Similarity for FiniteKernel {
    fn prob(&self, crit: &TableCriterion, gamma: f64) -> Result<f64> {
        self.prob_below(crit, gamma)
    }
    fn rule(&self) -> Vec<(f64, f64)> {
        self.sensitivity_rule(24)
    }
    fn sensitivity(&self, crit: &TableCriterion, gamma: f64, rule: &[(f64, f64)], row: &mut [f64]) {
        FiniteKernel::sensitivity(self, crit, gamma, rule, row)
    }
    fn slope(&self, crit: &TableCriterion, gamma: f64) -> Result<f64> {
        self.shift_derivative(crit, gamma)
    }
}

impl Similarity for LimitKernel {
    fn prob(&self, crit: &TableCriterion, gamma: f64) -> Result<f64> {
        self.prob_below(crit, gamma)
    }
    fn rule(&self) -> Vec<(f64, f64)> {
        self.sensitivity_rule(24)
    }
    fn sensitivity(&self, crit: &TableCriterion, gamma: f64, rule: &[(f64, f64)], row: &mut [f64]) {
        LimitKernel::sensitivity(self, crit, gamma, rule, row)
    }
    fn slope(&self, crit: &TableCriterion, gamma: f64) -> Result<f64> {
        self.shift_derivative(crit, gamma)
    }
}

struct Problem<'a, S: Similarity> {
    kernel: &'a S,
    lattice: LatticeKind,
    nodes: Vec<f64>,
    gammas: Vec<f64>,
    target: f64,
}

impl<S: Similarity> Problem<'_, S> {
    fn criterion(&self, values: &[f64]) -> TableCriterion {
        TableCriterion::from_values(self.lattice, self.nodes.clone(), values.to_vec())
    }

    /// Signed residuals `Pr − (1 − α)` at the interior nodes (zero at the pins).
    fn residuals(&self, values: &[f64]) -> Result<Vec<f64>> {
        let crit = self.criterion(values);
        let n = self.nodes.len();
        let inner: Result<Vec<f64>> =
            (1..n - 1).into_par_iter().map(|i| Ok(self.kernel.prob(&crit, self.gammas[i])? - self.target)).collect();
        let mut r = vec![0.0; n];
        r[1..n - 1].copy_from_slice(&inner?);
        Ok(r)
    }

    fn slopes(&self, values: &[f64], which: &[usize]) -> Result<Vec<f64>> {
        let crit = self.criterion(values);
        which.par_iter().map(|&i| self.kernel.slope(&crit, self.gammas[i])).collect()
    }
}

/// Largest step taken at one node in one sweep.
const MAX_STEP: f64 = 0.5;

/// Secant slopes outside `[1/5, 5]` times the analytic shift derivative
/// are replaced by the latter.
const SLOPE_BAND: f64 = 5.0;

fn iterate<S: Similarity>(
    p: &Problem<'_, S>,
    init: Vec<f64>,
    opts: &SolveOptions,
) -> Result<(Vec<f64>, Vec<f64>, bool)> {
    let n = init.len();
    let mut cur = init;
    let mut prev: Vec<f64> = cur.iter().map(|v| v - opts.delta).collect();
    let mut y_prev = p.residuals(&prev)?;
    let mut y_cur = p.residuals(&cur)?;
    let mut best = (max_abs(&y_cur), cur.clone(), y_cur.clone());

    for _ in 0..opts.max_sweeps {
        let mut next = cur.clone();
        let interior: Vec<usize> = (1..n - 1).collect();
        let analytic = p.slopes(&cur, &interior)?;
        for &i in &interior {
            let d = analytic[i - 1];
            let dv = cur[i] - prev[i];
            let secant = if dv.abs() > 1e-13 { (y_cur[i] - y_prev[i]) / dv } else { f64::NAN };
            let target = if secant.is_finite() && secant > d / SLOPE_BAND && secant < d * SLOPE_BAND {
                false_position_step(cur[i], prev[i], y_cur[i], y_prev[i])
            } else if d > 0.0 {
                cur[i] - y_cur[i] / d
            } else {
                cur[i]
            };
            next[i] = cur[i] + (target - cur[i]).clamp(-MAX_STEP, MAX_STEP);
        }
        let change = cur.iter().zip(&next).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        prev = std::mem::replace(&mut cur, next);
        y_prev = std::mem::replace(&mut y_cur, p.residuals(&cur)?);
        let res = max_abs(&y_cur);
        if res < best.0 {
            best = (res, cur.clone(), y_cur.clone());
        }
        if change < opts.change_tol && res < opts.tol {
            return Ok((cur, y_cur, true));
        }
    }
    Ok((best.1, best.2, false))
}

/// Rows of `L` with `‖Lv‖² ≈ ∫ v''(c)² dc` on the lattice `c` values.
fn curvature_operator(c: &[f64]) -> DMatrix<f64> {
    let n = c.len();
    let mut l = DMatrix::zeros(n - 2, n);
    for i in 1..n - 1 {
        let (hm, hp) = (c[i] - c[i - 1], c[i + 1] - c[i]);
        let span = 0.5 * (hm + hp);
        let w = span.sqrt();
        l[(i - 1, i - 1)] = w / (hm * span);
        l[(i - 1, i)] = -w * (1.0 / hm + 1.0 / hp) / span;
        l[(i - 1, i + 1)] = w / (hp * span);
    }
    l
}

/// Damped Gauss–Newton on `‖r(v)‖² + λ‖Lv‖²` with the node sensitivities
/// as Jacobian. Returns the iterate, its residuals and the iterations used
/// (`usize::MAX` when the step never settled).
fn gauss_newton<S: Similarity>(
    p: &Problem<'_, S>,
    init: Vec<f64>,
    lam: f64,
    ltl: &DMatrix<f64>,
    rule: &[(f64, f64)],
    max_iter: usize,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let n = init.len();
    let m = n - 2;
    let mut cur = init;
    let mut y = p.residuals(&cur)?;
    for it in 0..max_iter {
        let crit = p.criterion(&cur);
        let rows: Vec<Vec<f64>> = (1..n - 1)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![0.0; n];
                p.kernel.sensitivity(&crit, p.gammas[i], rule, &mut row);
                row
            })
            .collect();
        let j = DMatrix::from_fn(m, m, |r, c| rows[r][c + 1]);
        let normal = j.transpose() * &j + ltl.view((1, 1), (m, m)) * lam;
        let lv = ltl * DVector::from_column_slice(&cur);
        let r = DVector::from_fn(m, |k, _| y[k + 1]);
        let rhs = -(j.transpose() * r) - DVector::from_fn(m, |k, _| lv[k + 1] * lam);
        let step = normal.cholesky().ok_or_else(|| Error::Domain("singular normal equations".into()))?.solve(&rhs);
        let mut change = 0.0_f64;
        for k in 0..m {
            let dk = step[k].clamp(-MAX_STEP, MAX_STEP);
            cur[k + 1] += dk;
            change = change.max(dk.abs());
        }
        y = p.residuals(&cur)?;
        if change < GN_STEP_TOL {
            return Ok((cur, y, it + 1));
        }
    }
    Ok((cur, y, usize::MAX))
}

/// Gauss–Newton steps below this size end an inner solve.
const GN_STEP_TOL: f64 = 1e-8;

/// Regularization weights tried, strongest first.
const LAMBDA_START: f64 = 1e-6;
const LAMBDA_FLOOR: f64 = 1e-16;
const LAMBDA_FACTOR: f64 = 0.316_227_766_016_837_94;

/// Residuals accepted by the smoothness search, relative to the tolerance.
const DISCREPANCY_RATIO: f64 = 0.3;

/// The smoothest table (largest curvature weight) whose residuals stay
/// below `DISCREPANCY_RATIO · tol`.
fn iterate_regularized<S: Similarity>(
    p: &Problem<'_, S>,
    init: Vec<f64>,
    opts: &SolveOptions,
) -> Result<(Vec<f64>, Vec<f64>, bool)> {
    let cs: Vec<f64> = p.nodes.iter().map(|&x| p.lattice.c_of_node(x)).collect();
    let l = curvature_operator(&cs);
    let ltl = l.transpose() * &l;
    let rule = p.kernel.rule();
    let target = DISCREPANCY_RATIO * opts.tol;
    let mut cur = init;
    let mut lam = LAMBDA_START;
    let mut sweeps = 0;
    loop {
        let budget = opts.max_sweeps.saturating_sub(sweeps).clamp(1, GN_MAX_ITER);
        let (v, y, used) = gauss_newton(p, cur, lam, &ltl, &rule, budget)?;
        let settled = used != usize::MAX;
        sweeps += if settled { used } else { budget };
        let res = max_abs(&y);
        if settled && res <= target {
            return Ok((v, y, true));
        }
        cur = v;
        if lam <= LAMBDA_FLOOR || sweeps >= opts.max_sweeps {
            return Ok((cur, y, settled && res <= opts.tol));
        }
        lam *= LAMBDA_FACTOR;
    }
}

const GN_MAX_ITER: usize = 30;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, r| m.max(r.abs()))
}

fn run<S: Similarity>(p: &Problem<'_, S>, init: Vec<f64>, opts: &SolveOptions) -> Result<(Vec<f64>, Vec<f64>, bool)> {
    match opts.method {
        SolveMethod::Regularized => iterate_regularized(p, init, opts),
        SolveMethod::FalsePosition => iterate(p, init, opts),
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// The linear-in-`c` blend of the endpoint quantiles on the ψ-lattice,
/// smoothed three times.
pub fn auto_initial(d: &Design, alpha: f64) -> Result<Vec<f64>> {
    let lo = upper_t(alpha, d.nu2())?;
    let hi = upper_t(alpha, d.nu1())?;
    let mut v: Vec<f64> = build_psi_lattice()
        .nodes
        .iter()
        .map(|&t| {
            let c = c_of_theta(t);
            (1.0 - c) * lo + c * hi
        })
        .collect();
    for _ in 0..3 {
        v = smooth_any(&v);
    }
    Ok(v)
}

/// Solve the similarity equation for a finite design on the ψ-lattice.
/// Non-convergence is reported through `converged = false` with the best
/// table found.
pub fn solve_ideal(d: &Design, alpha: f64, init: InitialGuess, opts: &SolveOptions) -> Result<CriterionTable> {
    check_alpha(alpha)?;
    let kernel = FiniteKernel::new(d)?;
    let nodes = build_psi_lattice().nodes;
    let mut start = match init {
        InitialGuess::Auto => auto_initial(d, alpha)?,
        InitialGuess::Table(t) => {
            if t.lattice != LatticeKind::Psi91 || t.values.len() != PSI_NODES {
                return Err(Error::Length { expected: PSI_NODES, got: t.values.len() });
            }
            t.values
        }
    };
    start[0] = upper_t(alpha, d.nu2())?;
    start[PSI_NODES - 1] = upper_t(alpha, d.nu1())?;
    let gammas = nodes.iter().map(|&t| c_of_theta(t)).collect();
    let problem =
        Problem { kernel: &kernel, lattice: LatticeKind::Psi91, nodes: nodes.clone(), gammas, target: 1.0 - alpha };
    let (values, residuals, converged) = with_threads(opts.threads, || run(&problem, start, opts))??;
    Ok(CriterionTable {
        family: Family::Ideal,
        design: *d,
        alpha,
        lattice: LatticeKind::Psi91,
        nodes,
        values,
        residuals,
        converged,
        tolerance: opts.tol,
    })
}

/// Solve the limiting (`n₁ = ∞`) similarity equation on the 101-point
/// `c` lattice; `c = 0` is pinned at `t_{ν₂}(α)` and `c = 1` at `z_α`.
pub fn solve_ideal_inf_n1(n2: u32, alpha: f64, opts: &SolveOptions) -> Result<CriterionTable> {
    check_alpha(alpha)?;
    let d = Design::infinite_n1(n2)?;
    let kernel = LimitKernel::new(d.nu2())?;
    let nodes = build_c101_lattice();
    let lo = upper_t(alpha, d.nu2())?;
    let hi = normal_quantile(1.0 - alpha);
    let mut start: Vec<f64> = nodes.iter().map(|&c| (1.0 - c) * lo + c * hi).collect();
    for _ in 0..3 {
        start = smooth_any(&start);
    }
    let last = nodes.len() - 1;
    start[0] = lo;
    start[last] = hi;
    let problem = Problem {
        kernel: &kernel,
        lattice: LatticeKind::C101,
        nodes: nodes.clone(),
        gammas: nodes.clone(),
        target: 1.0 - alpha,
    };
    let (values, residuals, converged) = with_threads(opts.threads, || run(&problem, start, opts))??;
    Ok(CriterionTable {
        family: Family::Ideal,
        design: d,
        alpha,
        lattice: LatticeKind::C101,
        nodes,
        values,
        residuals,
        converged,
        tolerance: opts.tol,
    })
}

/// Similarity defect of a table over a grid of nuisance values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub convention: &'static str,
    pub min_d: f64,
    pub gamma_at_min: f64,
    pub max_d: f64,
    pub gamma_at_max: f64,
    pub mean_abs_d: f64,
    pub points: Vec<(f64, f64)>,
}

impl ResidualReport {
    pub fn from_points(points: Vec<(f64, f64)>) -> Self {
        let mut r = ResidualReport {
            convention: DEFECT_CONVENTION,
            min_d: f64::INFINITY,
            gamma_at_min: f64::NAN,
            max_d: f64::NEG_INFINITY,
            gamma_at_max: f64::NAN,
            mean_abs_d: 0.0,
            points: Vec::new(),
        };
        for &(g, d) in &points {
            if d < r.min_d {
                r.min_d = d;
                r.gamma_at_min = g;
            }
            if d > r.max_d {
                r.max_d = d;
                r.gamma_at_max = g;
            }
            r.mean_abs_d += d.abs();
        }
        r.mean_abs_d /= points.len().max(1) as f64;
        r.points = points;
        r
    }

    pub fn max_abs_d(&self) -> f64 {
        self.min_d.abs().max(self.max_d.abs())
    }

    /// The `ν₁ = ν₂ = ∞` case, where `V` is exactly normal and the constant
    /// `z_α` is similar.
    pub fn normal_limit(alpha: f64, gammas: &[f64]) -> Self {
        let z = normal_quantile(1.0 - alpha);
        let d = crate::distributions::normal_sf(z) - alpha;
        Self::from_points(gammas.iter().map(|&g| (g, d)).collect())
    }
}

/// `n` equally spaced `γ` values on `[0, 1]`.
pub fn uniform_gamma_grid(n: usize) -> Vec<f64> {
    let k = n.max(2) - 1;
    (0..=k).map(|i| i as f64 / k as f64).collect()
}

/// Evaluate `d(γ) = (1 − Pr{V ≤ v(Θ) | γ}) − α` over `gamma_grid`.
pub fn residual_report(table: &CriterionTable, gamma_grid: &[f64]) -> Result<ResidualReport> {
    let crit = table.interpolant();
    let alpha = table.alpha;
    let points: Result<Vec<(f64, f64)>> = if table.design.is_finite() {
        let k = FiniteKernel::new(&table.design)?;
        gamma_grid.par_iter().map(|&g| Ok((g, 1.0 - k.prob_below(&crit, g)? - alpha))).collect()
    } else {
        let k = LimitKernel::new(table.design.nu2())?;
        gamma_grid.par_iter().map(|&g| Ok((g, 1.0 - k.prob_below(&crit, g)? - alpha))).collect()
    };
    Ok(ResidualReport::from_points(points?))
}

/// As [`residual_report`] for explicit nuisance points.
pub fn residual_report_at(table: &CriterionTable, points: &[VariancePoint]) -> Result<ResidualReport> {
    let g: Vec<f64> = points.iter().map(|p| p.gamma).collect();
    residual_report(table, &g)
}

/// One false-position update at node `i` from the pair of tables
/// `(current, lower)` and their residuals.
pub fn false_position_step(v: f64, v_lower: f64, y: f64, y_lower: f64) -> f64 {
    if y_lower == y {
        return v;
    }
    (v * y_lower - v_lower * y) / (y_lower - y)
}
