//! The `bfexact` command line. Exit codes: 0 success, 1 invalid input,
//! 2 numerical non-convergence (outputs are still written and flagged).

use crate::criterion::{Constant, CriterionTable, Family};
use crate::design::{Design, SampleSize, VariancePoint};
use crate::error::{Error, Result};
use crate::fisher_behrens::solve_fb_criterion;
use crate::ideal::{
    residual_report, solve_ideal, solve_ideal_inf_n1, uniform_gamma_grid, upper_t, InitialGuess, SolveMethod,
    SolveOptions,
};
use crate::io::{self, PowerFile, RunManifest};
use crate::kernel::{prob_v_below, prob_v_below_inf_n1, prob_v_below_two_tailed};
use crate::linnik::{estimate_alpha_l, AlphaLBracket};
use crate::power::{default_delta_grid, power_table, PowerSpec};
use crate::simulation::{
    assign_confidence_fb, assign_confidence_ideal, ks_distance, ranked_ecdf, run_simulation, theoretical_curve,
    AssignRule, LevelSet, DEFAULT_REPS,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "bfexact", version, about = "Exact similar tests for two normal means with unequal variances")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the ideal criterion for one design and level.
    SolveIdeal(SolveArgs),
    /// Tabulate the Fisher–Behrens criterion on the ψ-lattice.
    SolveFb(FbArgs),
    /// Probability Pr{V ≤ v(Θ) | ψ} for a criterion table or a constant.
    Prob(ProbArgs),
    /// Monte Carlo replicates with assigned confidence levels.
    Simulate(SimulateArgs),
    /// Power of T(ζ̃) and of V with an ideal criterion.
    Power(PowerArgs),
    /// Crossings between ideal criteria and a bracket for α_L.
    Linnik(LinnikArgs),
    /// Upper 2.5% points over (ν₂, ν₁) ∈ {10, 15, 30, ∞}².
    Table2(Table2Args),
    /// Similarity defect of a table over a γ grid.
    Residuals(ResidualsArgs),
    /// Ranked empirical distribution of assigned confidences.
    Ecdf(EcdfArgs),
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// First sample size, an integer ≥ 2 or "inf".
    #[arg(long)]
    pub n1: String,
    /// Second sample size, an integer ≥ 2.
    #[arg(long)]
    pub n2: String,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Residual tolerance; defaults to the tier for the design size.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub max_sweeps: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Regularized)]
    pub method: MethodArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Regularized,
    FalsePosition,
}

#[derive(Debug, Args)]
#[group(required = false, multiple = false)]
pub struct NuisanceArgs {
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// ψ in degrees.
    #[arg(long)]
    pub psi_deg: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long)]
    pub alpha: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct FbArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long)]
    pub alpha: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ProbArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub nuisance: NuisanceArgs,
    /// Criterion table file; without it the criterion is the constant `--v`,
    /// or t_ν(α) when only `--alpha` is given.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub v: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Ideal,
    FisherBehrens,
    None,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub nuisance: NuisanceArgs,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    pub reps: usize,
    /// Criteria used to assign confidence levels.
    #[arg(long, value_enum, default_value_t = FamilyArg::Ideal)]
    pub family: FamilyArg,
    /// Confidence levels 1 − 2α of the criteria, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])]
    pub levels: Vec<f64>,
    /// Extrapolation window above the top level.
    #[arg(long, default_value_t = 0.15)]
    pub window: f64,
    /// Interpolate in 1/x through the top three criteria above this |V|.
    #[arg(long)]
    pub inverse_above: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub zeta: f64,
    /// Noncentralities, comma separated (default 0, 0.5, …, 5).
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Ideal criterion table; solved when absent.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct LinnikArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Increasing significance levels, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub alphas: Vec<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct Table2Args {
    #[arg(long, default_value_t = 0.025)]
    pub alpha: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ResidualsArgs {
    #[arg(long)]
    pub table: PathBuf,
    /// Number of equally spaced γ values on [0, 1].
    #[arg(long, default_value_t = 91)]
    pub grid: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct EcdfArgs {
    #[arg(long)]
    pub records: PathBuf,
    /// Upper end of the range checked against the diagonal.
    #[arg(long, default_value_t = 1.0)]
    pub upper: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Outcome of a command that ran to completion.
enum Status {
    Done,
    NotConverged,
}

/// Parse `args` (program name first) and run; returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let shown: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli.command, shown) {
        Ok(Status::Done) => 0,
        Ok(Status::NotConverged) => {
            eprintln!("warning: not converged; outputs written and flagged");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Quadrature { .. } | Error::Bracket { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn parse_design(a: &DesignArgs) -> Result<Design> {
    let n1: SampleSize = a.n1.parse()?;
    let n2: SampleSize = a.n2.parse()?;
    match n2 {
        SampleSize::Infinite => Err(Error::Design(
            "--n2 inf is not supported; swap the samples and pass --n1 inf (the criterion at c becomes the one at 1 - c)"
                .into(),
        )),
        SampleSize::Finite(n2) => Design::with_sizes(n1, n2),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(Error::Domain(format!("--alpha must lie in (0, 0.5), got {alpha}")))
    }
}

fn nuisance(a: &NuisanceArgs, d: &Design) -> Result<Option<VariancePoint>> {
    match (a.zeta, a.gamma, a.psi_deg) {
        (Some(z), None, None) => VariancePoint::from_zeta(z, d).map(Some),
        (None, Some(g), None) => VariancePoint::from_gamma(g, d).map(Some),
        (None, None, Some(p)) => VariancePoint::from_psi_deg(p, d).map(Some),
        (None, None, None) => Ok(None),
        _ => Err(Error::Domain("give exactly one of --zeta, --gamma, --psi-deg".into())),
    }
}

fn require_nuisance(a: &NuisanceArgs, d: &Design) -> Result<VariancePoint> {
    nuisance(a, d)?.ok_or_else(|| Error::Domain("one of --zeta, --gamma, --psi-deg is required".into()))
}

fn solve_options(s: &SolverArgs, d: &Design, threads: Option<usize>) -> Result<SolveOptions> {
    let mut o = SolveOptions::for_design(d);
    if let Some(t) = s.tol {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("--tol must be positive, got {t}")));
        }
        o.tol = t;
    }
    o.max_sweeps = s.max_sweeps;
    o.method = match s.method {
        MethodArg::Regularized => SolveMethod::Regularized,
        MethodArg::FalsePosition => SolveMethod::FalsePosition,
    };
    o.threads = threads;
    Ok(o)
}

fn method_name(s: &SolverArgs) -> &'static str {
    match s.method {
        MethodArg::Regularized => "regularized",
        MethodArg::FalsePosition => "false-position",
    }
}

fn install_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Domain("--threads must be at least 1".into()));
        }
        // a second call in one process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn out_dir(p: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(p)?;
    Ok(p.to_path_buf())
}

fn table_name(t: &CriterionTable) -> String {
    format!("{}_n1-{}_n2-{}_alpha-{}.csv", t.family.as_str(), t.design.n1, t.design.n2, t.alpha)
}

fn solve_any(d: &Design, alpha: f64, opts: &SolveOptions) -> Result<CriterionTable> {
    if d.is_finite() {
        solve_ideal(d, alpha, InitialGuess::Auto, opts)
    } else {
        solve_ideal_inf_n1(d.n2, alpha, opts)
    }
}

fn status_of(converged: bool) -> Status {
    if converged {
        Status::Done
    } else {
        Status::NotConverged
    }
}

fn execute(cmd: Command, args: Vec<String>) -> Result<Status> {
    match cmd {
        Command::SolveIdeal(a) => cmd_solve_ideal(a, args),
        Command::SolveFb(a) => cmd_solve_fb(a, args),
        Command::Prob(a) => cmd_prob(a),
        Command::Simulate(a) => cmd_simulate(a, args),
        Command::Power(a) => cmd_power(a, args),
        Command::Linnik(a) => cmd_linnik(a, args),
        Command::Table2(a) => cmd_table2(a, args),
        Command::Residuals(a) => cmd_residuals(a, args),
        Command::Ecdf(a) => cmd_ecdf(a, args),
    }
}

fn cmd_solve_ideal(a: SolveArgs, args: Vec<String>) -> Result<Status> {
    let d = parse_design(&a.design)?;
    check_alpha(a.alpha)?;
    install_threads(a.common.threads)?;
    let opts = solve_options(&a.solver, &d, a.common.threads)?;
    let t = solve_any(&d, a.alpha, &opts)?;
    let dir = out_dir(&a.common.out)?;
    let name = table_name(&t);
    io::write_table(&t, &dir.join(&name))?;
    let mut m = RunManifest::new("solve-ideal", args, &d);
    m.alpha = Some(a.alpha);
    m.family = Some(Family::Ideal.as_str().into());
    m.method = Some(method_name(&a.solver).into());
    m.tol = Some(opts.tol);
    m.threads = a.common.threads;
    m.converged = Some(t.converged);
    m.files = vec![name.clone()];
    io::write_manifest(&m, &dir.join("manifest.json"))?;
    println!("design {d}  alpha {}  converged {}  max|residual| {:.3e}", t.alpha, t.converged, t.max_abs_residual());
    println!("v(c=0.5) = {:.3}", t.value_at_c(0.5));
    println!("wrote {}", dir.join(name).display());
    Ok(status_of(t.converged))
}

fn cmd_solve_fb(a: FbArgs, args: Vec<String>) -> Result<Status> {
    let d = parse_design(&a.design)?;
    check_alpha(a.alpha)?;
    install_threads(a.common.threads)?;
    let t = solve_fb_criterion(&d, a.alpha)?;
    let dir = out_dir(&a.common.out)?;
    let name = table_name(&t);
    io::write_table(&t, &dir.join(&name))?;
    let mut m = RunManifest::new("solve-fb", args, &d);
    m.alpha = Some(a.alpha);
    m.family = Some(Family::FisherBehrens.as_str().into());
    m.threads = a.common.threads;
    m.converged = Some(t.converged);
    m.files = vec![name.clone()];
    io::write_manifest(&m, &dir.join("manifest.json"))?;
    println!("design {d}  alpha {}  min v {:.4}", t.alpha, t.values.iter().copied().fold(f64::INFINITY, f64::min));
    println!("wrote {}", dir.join(name).display());
    Ok(status_of(t.converged))
}

fn cmd_prob(a: ProbArgs) -> Result<Status> {
    let d = parse_design(&a.design)?;
    install_threads(a.threads)?;
    let vp = if d.is_finite() { Some(require_nuisance(&a.nuisance, &d)?) } else { None };
    let gamma = match (&vp, a.nuisance.gamma, a.nuisance.psi_deg) {
        (Some(v), _, _) => v.gamma,
        (None, Some(g), None) if a.nuisance.zeta.is_none() => g,
        (None, None, Some(p)) if a.nuisance.zeta.is_none() => VariancePoint::from_psi_deg(p, &d)?.gamma,
        _ => return Err(Error::Domain("with --n1 inf give exactly one of --gamma or --psi-deg".into())),
    };
    let table = a.table.as_deref().map(io::read_table).transpose()?;
    if let Some(t) = &table {
        if t.design != d {
            return Err(Error::Design(format!("table design {} differs from {d}", t.design)));
        }
    }
    let constant = match (a.v, a.alpha) {
        (Some(v), _) => Some(v),
        (None, Some(alpha)) => {
            check_alpha(alpha)?;
            Some(upper_t(alpha, d.nu())?)
        }
        (None, None) => None,
    };
    let p = match (&table, constant, &vp) {
        (Some(t), _, Some(vp)) => prob_v_below(&t.interpolant(), vp, &d)?,
        (Some(t), _, None) => prob_v_below_inf_n1(&t.interpolant(), gamma, d.nu2())?,
        (None, Some(v), Some(vp)) => prob_v_below(&Constant(v), vp, &d)?,
        (None, Some(v), None) => prob_v_below_inf_n1(&Constant(v), gamma, d.nu2())?,
        (None, None, _) => return Err(Error::Domain("give --table, --v or --alpha".into())),
    };
    println!("Pr{{V <= v}} = {p:.10}");
    if let (Some(vp), true) = (&vp, d.is_finite()) {
        let size = match &table {
            Some(t) => prob_v_below_two_tailed(&t.interpolant(), vp, &d)?,
            None => prob_v_below_two_tailed(&Constant(constant.unwrap_or_default()), vp, &d)?,
        };
        println!("Pr{{|V| > v}} = {size:.10}");
    }
    Ok(Status::Done)
}

fn cmd_simulate(a: SimulateArgs, args: Vec<String>) -> Result<Status> {
    let d = parse_design(&a.design)?;
    if !d.is_finite() {
        return Err(Error::Design("simulation needs finite sample sizes".into()));
    }
    install_threads(a.common.threads)?;
    let vp = require_nuisance(&a.nuisance, &d)?;
    let mut run = run_simulation(a.seed, &d, &vp, a.reps)?;
    let dir = out_dir(&a.common.out)?;
    let mut files = vec!["records.csv".to_string()];
    let mut converged = true;
    let mut upper = 1.0;
    let mut curve = None;
    match a.family {
        FamilyArg::None => {}
        FamilyArg::FisherBehrens => {
            assign_confidence_fb(&mut run)?;
            let ls = LevelSet::solve_fb(&d, &a.levels)?;
            let c = theoretical_curve(&ls, &vp)?;
            io::write_atomic(&dir.join("curve.csv"), &io::curve_to_string(&c.points)?)?;
            files.push("curve.csv".into());
            curve = Some(c);
        }
        FamilyArg::Ideal => {
            let opts = solve_options(&a.solver, &d, a.common.threads)?;
            let ls = LevelSet::solve_ideal(&d, &a.levels, &opts)?;
            converged = ls.tables.iter().all(|t| t.converged);
            let rule = AssignRule { window: a.window, inverse_above: a.inverse_above };
            assign_confidence_ideal(&mut run, &ls, &rule)?;
            upper = ls.levels.last().copied().unwrap_or(1.0);
        }
    }
    io::write_atomic(&dir.join("records.csv"), &io::records_to_string(&run)?)?;
    if a.family != FamilyArg::None {
        let pis: Vec<f64> = run.pis().into_iter().flatten().collect();
        io::write_atomic(&dir.join("ecdf.csv"), &io::ecdf_to_string(&ranked_ecdf(&pis)?)?)?;
        files.push("ecdf.csv".into());
        let ks = match &curve {
            Some(c) => ks_distance(&run.pis(), |x| c.eval(x), 1.0),
            None => ks_distance(&run.pis(), |x| x, upper),
        };
        println!("assigned {}  unassignable {}  clamped {}", pis.len(), run.unassignable(), run.clamped());
        println!("KS distance {ks:.4} over [0, {upper}] (95% band {:.4})", 1.36 / (a.reps as f64).sqrt());
    }
    let mut m = RunManifest::new("simulate", args, &d);
    m.seed = Some(a.seed);
    m.n_reps = Some(a.reps);
    m.psi_deg = Some(vp.psi_deg);
    m.zeta = Some(vp.zeta);
    m.gamma = Some(vp.gamma);
    m.family = Some(
        match a.family {
            FamilyArg::Ideal => "ideal",
            FamilyArg::FisherBehrens => "fisher-behrens",
            FamilyArg::None => "none",
        }
        .into(),
    );
    m.threads = a.common.threads;
    m.converged = Some(converged);
    m.files = files;
    io::write_manifest(&m, &dir.join("manifest.json"))?;
    Ok(status_of(converged))
}

fn cmd_power(a: PowerArgs, args: Vec<String>) -> Result<Status> {
    let d = parse_design(&a.design)?;
    check_alpha(a.alpha)?;
    install_threads(a.common.threads)?;
    let table = match &a.table {
        Some(p) => io::read_table(p)?,
        None => solve_ideal(&d, a.alpha, InitialGuess::Auto, &solve_options(&a.solver, &d, a.common.threads)?)?,
    };
    if table.design != d || table.alpha != a.alpha || table.family != Family::Ideal {
        return Err(Error::Domain("the table must be an ideal criterion for this design and alpha".into()));
    }
    let converged = table.converged;
    let spec = PowerSpec::new(table, a.zeta)?.with_deltas(a.deltas.unwrap_or_else(default_delta_grid))?;
    let rows = power_table(&spec)?;
    println!("{:>6} {:>10} {:>10} {:>10}", "delta", "power_T", "power_V", "gap");
    for r in &rows {
        println!("{:>6.2} {:>10.6} {:>10.6} {:>+10.6}", r.delta, r.power_t, r.power_v, r.gap);
    }
    let dir = out_dir(&a.common.out)?;
    let file = PowerFile { design: d, alpha: a.alpha, zeta: a.zeta, rows };
    io::write_atomic(&dir.join("power.csv"), &io::power_to_string(&file)?)?;
    let mut m = RunManifest::new("power", args, &d);
    m.alpha = Some(a.alpha);
    m.zeta = Some(a.zeta);
    m.converged = Some(converged);
    m.threads = a.common.threads;
    m.files = vec!["power.csv".into()];
    io::write_manifest(&m, &dir.join("manifest.json"))?;
    Ok(status_of(converged))
}

fn cmd_linnik(a: LinnikArgs, args: Vec<String>) -> Result<Status> {
    let d = parse_design(&a.design)?;
    if !d.is_finite() {
        return Err(Error::Design("crossing scans need finite sample sizes".into()));
    }
    for &x in &a.alphas {
        check_alpha(x)?;
    }
    install_threads(a.common.threads)?;
    let opts = solve_options(&a.solver, &d, a.common.threads)?;
    let (scan, tables) = estimate_alpha_l(&d, &a.alphas, &opts)?;
    let dir = out_dir(&a.common.out)?;
    let mut files = vec!["crossings.csv".to_string()];
    for t in &tables {
        let name = table_name(t);
        io::write_table(t, &dir.join(&name))?;
        files.push(name);
    }
    io::write_atomic(&dir.join("crossings.csv"), &io::crossings_to_string(&scan.pairs)?)?;
    for p in &scan.pairs {
        println!(
            "alpha {} vs {}: {} interval(s), detected {}, inconclusive {}, quality {:.1e}",
            p.alpha_pair.0,
            p.alpha_pair.1,
            p.crossing_intervals.len(),
            p.detected,
            p.inconclusive,
            p.residual_quality
        );
    }
    match scan.bracket {
        AlphaLBracket::Between(lo, hi) => println!("alpha_L in ({lo}, {hi})"),
        AlphaLBracket::BelowGrid(lo) => println!("alpha_L below grid (< {lo})"),
        AlphaLBracket::AboveGrid(lo) => println!("alpha_L above grid (> {lo})"),
    }
    let converged = tables.iter().all(|t| t.converged);
    let mut m = RunManifest::new("linnik", args, &d);
    m.method = Some(method_name(&a.solver).into());
    m.tol = Some(opts.tol);
    m.threads = a.common.threads;
    m.converged = Some(converged);
    m.files = files;
    io::write_manifest(&m, &dir.join("manifest.json"))?;
    Ok(status_of(converged))
}

fn cmd_table2(a: Table2Args, args: Vec<String>) -> Result<Status> {
    check_alpha(a.alpha)?;
    install_threads(a.common.threads)?;
    let dofs = [10u32, 15, 30];
    let mut designs = Vec::new();
    for &nu1 in &dofs {
        for &nu2 in &dofs {
            designs.push(Design::from_dof(nu1, nu2)?);
        }
    }
    for &nu2 in &dofs {
        designs.push(Design::infinite_n1(nu2 + 1)?);
    }
    let dir = out_dir(&a.common.out)?;
    let mut tables = Vec::new();
    let mut files = Vec::new();
    for d in designs {
        let opts = solve_options(&a.solver, &d, a.common.threads)?;
        let t = solve_any(&d, a.alpha, &opts)?;
        let name = table_name(&t);
        io::write_table(&t, &dir.join(&name))?;
        files.push(name);
        tables.push(t);
    }
    let grid = io::emit_table2(&tables)?;
    print!("{grid}");
    io::write_atomic(&dir.join("table2.txt"), &grid)?;
    files.push("table2.txt".into());
    let converged = tables.iter().all(|t| t.converged);
    let mut m = RunManifest::new("table2", args, &Design::new(2, 2)?);
    m.n1 = "grid".into();
    m.n2 = 0;
    m.alpha = Some(a.alpha);
    m.method = Some(method_name(&a.solver).into());
    m.threads = a.common.threads;
    m.converged = Some(converged);
    m.files = files;
    io::write_manifest(&m, &dir.join("manifest.json"))?;
    Ok(status_of(converged))
}

fn cmd_residuals(a: ResidualsArgs, args: Vec<String>) -> Result<Status> {
    install_threads(a.common.threads)?;
    let t = io::read_table(&a.table)?;
    let r = residual_report(&t, &uniform_gamma_grid(a.grid))?;
    println!("{}", r.convention);
    println!("min d {:+.3e} at gamma {:.4}", r.min_d, r.gamma_at_min);
    println!("max d {:+.3e} at gamma {:.4}", r.max_d, r.gamma_at_max);
    println!("mean |d| {:.3e}", r.mean_abs_d);
    let dir = out_dir(&a.common.out)?;
    io::write_atomic(&dir.join("residuals.csv"), &io::residuals_to_string(&t, &r)?)?;
    let mut m = RunManifest::new("residuals", args, &t.design);
    m.alpha = Some(t.alpha);
    m.family = Some(t.family.as_str().into());
    m.files = vec!["residuals.csv".into()];
    io::write_manifest(&m, &dir.join("manifest.json"))?;
    Ok(Status::Done)
}

fn cmd_ecdf(a: EcdfArgs, args: Vec<String>) -> Result<Status> {
    let run = io::records_from_str(&std::fs::read_to_string(&a.records)?)?;
    let pis: Vec<f64> = run.pis().into_iter().flatten().collect();
    let segments = ranked_ecdf(&pis)?;
    let dir = out_dir(&a.common.out)?;
    io::write_atomic(&dir.join("ecdf.csv"), &io::ecdf_to_string(&segments)?)?;
    println!(
        "records {}  assigned {}  KS distance to diagonal over [0, {}]: {:.4}",
        run.records.len(),
        pis.len(),
        a.upper,
        ks_distance(&run.pis(), |x| x, a.upper)
    );
    let mut m = RunManifest::new("ecdf", args, &run.design);
    m.seed = Some(run.seed);
    m.n_reps = Some(run.n_reps);
    m.files = vec!["ecdf.csv".into()];
    io::write_manifest(&m, &dir.join("manifest.json"))?;
    Ok(Status::Done)
}
