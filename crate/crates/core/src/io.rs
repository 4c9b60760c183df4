//! Self-describing CSV files with a `#` header block, and JSON run manifests.
//!
//! Every numeric field is written with 17 significant digits, so reading a
//! file back reproduces the written values bit for bit. Infinite values are
//! written as `inf`; NaN is rejected on both sides. Files are written to a
//! temporary sibling and renamed into place.

use crate::criterion::{CriterionTable, Family, LatticeKind};
use crate::design::{Design, SampleSize, VariancePoint};
use crate::distributions::special::normal_quantile;
use crate::error::{Error, Result};
use crate::ideal::{upper_t, ResidualReport, DEFECT_CONVENTION};
use crate::linnik::{CrossingInterval, CrossingReport};
use crate::power::PowerRow;
use crate::simulation::{EcdfSegment, PiSource, SimRecord, SimulationRun};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const SCHEMA_VERSION: &str = "1";
pub const GENERATOR: &str = concat!("bfexact ", env!("CARGO_PKG_VERSION"));

/// Boundary values of a table must match the pinned quantiles this closely.
const PIN_TOL: f64 = 1e-8;
/// Lattice nodes must match the built lattice this closely.
const NODE_TOL: f64 = 1e-9;

pub fn fmt_f64(x: f64) -> Result<String> {
    if x.is_nan() {
        return Err(Error::Domain("NaN cannot be written".into()));
    }
    Ok(if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    })
}

fn parse_f64(s: &str, row: usize) -> Result<f64> {
    let v = match s {
        "inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        _ => s.parse::<f64>().map_err(|_| Error::Validation { row, msg: format!("not a number: {s:?}") })?,
    };
    if v.is_nan() {
        return Err(Error::Validation { row, msg: "NaN is not allowed".into() });
    }
    Ok(v)
}

fn parse_bool(s: &str, row: usize) -> Result<bool> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Validation { row, msg: format!("expected true or false, got {s:?}") }),
    }
}

/// A parsed CSV document: kind line, `key: value` metadata, column names and
/// rows with their 1-based line numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Doc {
    pub kind: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<(usize, Vec<String>)>,
}

impl Doc {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        Self {
            kind: kind.into(),
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.meta.push((key.into(), value.into()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        let line = self.rows.len() + 1;
        self.rows.push((line, row));
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Schema(format!("{} file is missing header field {key:?}", self.kind)))
    }

    fn get_f64(&self, key: &str) -> Result<f64> {
        parse_f64(self.get(key)?, 0)
    }

    fn get_bool(&self, key: &str) -> Result<bool> {
        parse_bool(self.get(key)?, 0)
    }

    fn get_design(&self) -> Result<Design> {
        let n1: SampleSize = self.get("n1")?.parse()?;
        let n2 = self.get("n2")?.parse::<u32>().map_err(|_| {
            Error::Schema(format!("n2 must be a finite integer, got {:?}", self.get("n2").unwrap_or("")))
        })?;
        Design::with_sizes(n1, n2)
    }

    fn design_meta(&mut self, d: &Design) -> &mut Self {
        self.meta("n1", d.n1.to_string()).meta("n2", d.n2.to_string())
    }

    pub fn render(&self) -> String {
        let mut out = format!("# bfexact-{} v{}\n", self.kind, SCHEMA_VERSION);
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for (_, r) in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    /// Parse and check the kind, version and column names.
    pub fn parse(text: &str, kind: &str, columns: &[&str]) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, first) = lines.next().ok_or_else(|| Error::Schema("empty file".into()))?;
        let rest = first
            .strip_prefix("# bfexact-")
            .ok_or_else(|| Error::Schema(format!("missing bfexact header line, found {first:?}")))?;
        let (found_kind, version) =
            rest.rsplit_once(" v").ok_or_else(|| Error::Schema(format!("malformed header line {first:?}")))?;
        if found_kind != kind {
            return Err(Error::Schema(format!("expected a {kind} file, found {found_kind}")));
        }
        if version != SCHEMA_VERSION {
            return Err(Error::UnsupportedVersion { found: version.into(), expected: SCHEMA_VERSION.into() });
        }
        let mut doc = Doc::new(kind, &[]);
        let mut header = None;
        for (line, text) in lines.by_ref() {
            if let Some(m) = text.strip_prefix("# ") {
                let (k, v) = m
                    .split_once(": ")
                    .ok_or_else(|| Error::Validation { row: line, msg: format!("malformed header field {m:?}") })?;
                doc.meta.push((k.into(), v.into()));
            } else {
                header = Some(text);
                break;
            }
        }
        let header = header.ok_or_else(|| Error::Schema("missing column header".into()))?;
        let found: Vec<&str> = header.split(',').collect();
        for c in columns {
            if !found.contains(c) {
                return Err(Error::Schema(format!("missing column {c:?}")));
            }
        }
        if found != columns {
            return Err(Error::Schema(format!("expected columns {columns:?}, found {found:?}")));
        }
        doc.columns = found.iter().map(|c| c.to_string()).collect();
        for (line, text) in lines {
            if text.is_empty() {
                continue;
            }
            let fields: Vec<String> = text.split(',').map(str::to_string).collect();
            if fields.len() != columns.len() {
                return Err(Error::Validation {
                    row: line,
                    msg: format!("expected {} fields, found {}", columns.len(), fields.len()),
                });
            }
            doc.rows.push((line, fields));
        }
        Ok(doc)
    }
}

/// Write `contents` to a temporary sibling of `path`, then rename it.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name =
        path.file_name().ok_or_else(|| Error::Io(format!("not a file path: {}", path.display())))?.to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

fn nums(xs: &[f64]) -> Result<Vec<String>> {
    xs.iter().map(|&x| fmt_f64(x)).collect()
}

const TABLE_COLUMNS: [&str; 4] = ["index", "node", "value", "residual"];

pub fn table_doc(t: &CriterionTable) -> Result<Doc> {
    let mut doc = Doc::new("table", &TABLE_COLUMNS);
    doc.meta("family", t.family.as_str())
        .design_meta(&t.design)
        .meta("alpha", fmt_f64(t.alpha)?)
        .meta("lattice", t.lattice.as_str())
        .meta("tolerance", fmt_f64(t.tolerance)?)
        .meta("converged", t.converged.to_string())
        .meta("generator", GENERATOR);
    for i in 0..t.nodes.len() {
        let mut row = vec![i.to_string()];
        row.extend(nums(&[t.nodes[i], t.values[i], t.residuals[i]])?);
        doc.push(row);
    }
    Ok(doc)
}

pub fn table_to_string(t: &CriterionTable) -> Result<String> {
    Ok(table_doc(t)?.render())
}

pub fn write_table(t: &CriterionTable, path: &Path) -> Result<()> {
    write_atomic(path, &table_to_string(t)?)
}

/// Parse and validate a table file: lattice identity and order, finite
/// values, boundary pins at the endpoint quantiles.
pub fn table_from_str(text: &str) -> Result<CriterionTable> {
    let doc = Doc::parse(text, "table", &TABLE_COLUMNS)?;
    let family = Family::parse(doc.get("family")?)?;
    let design = doc.get_design()?;
    let alpha = doc.get_f64("alpha")?;
    let lattice = LatticeKind::parse(doc.get("lattice")?)?;
    let tolerance = doc.get_f64("tolerance")?;
    let converged = doc.get_bool("converged")?;
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::Schema(format!("alpha must lie in (0, 0.5), got {alpha}")));
    }
    if design.is_finite() != (lattice == LatticeKind::Psi91) {
        return Err(Error::Schema("finite designs use psi91 and n1 = inf uses c101".into()));
    }
    let expected = lattice.nodes();
    if doc.rows.len() != expected.len() {
        return Err(Error::Length { expected: expected.len(), got: doc.rows.len() });
    }
    let (mut nodes, mut values, mut residuals) = (Vec::new(), Vec::new(), Vec::new());
    for (i, (line, r)) in doc.rows.iter().enumerate() {
        let line = *line;
        if r[0] != i.to_string() {
            return Err(Error::Validation { row: line, msg: format!("expected index {i}, found {}", r[0]) });
        }
        let node = parse_f64(&r[1], line)?;
        let value = parse_f64(&r[2], line)?;
        let residual = parse_f64(&r[3], line)?;
        if let Some(&prev) = nodes.last() {
            if node <= prev {
                return Err(Error::Validation {
                    row: line,
                    msg: format!("lattice not increasing: {node} after {prev}"),
                });
            }
        }
        if (node - expected[i]).abs() > NODE_TOL {
            return Err(Error::Validation {
                row: line,
                msg: format!("node {node} differs from lattice node {}", expected[i]),
            });
        }
        if !value.is_finite() || !residual.is_finite() {
            return Err(Error::Validation { row: line, msg: "values and residuals must be finite".into() });
        }
        nodes.push(node);
        values.push(value);
        residuals.push(residual);
    }
    let first_pin = upper_t(alpha, design.nu2())?;
    let last_pin = if design.is_finite() { upper_t(alpha, design.nu1())? } else { normal_quantile(1.0 - alpha) };
    let last = values.len() - 1;
    for (i, pin) in [(0, first_pin), (last, last_pin)] {
        if (values[i] - pin).abs() > PIN_TOL {
            return Err(Error::Validation {
                row: doc.rows[i].0,
                msg: format!("boundary value {} differs from the pinned quantile {pin}", values[i]),
            });
        }
    }
    Ok(CriterionTable { family, design, alpha, lattice, nodes, values, residuals, converged, tolerance })
}

pub fn read_table(path: &Path) -> Result<CriterionTable> {
    table_from_str(&fs::read_to_string(path)?)
}

const RESIDUAL_COLUMNS: [&str; 2] = ["gamma", "d"];

pub fn residuals_to_string(t: &CriterionTable, r: &ResidualReport) -> Result<String> {
    let mut doc = Doc::new("residuals", &RESIDUAL_COLUMNS);
    doc.meta("convention", r.convention)
        .design_meta(&t.design)
        .meta("alpha", fmt_f64(t.alpha)?)
        .meta("min_d", fmt_f64(r.min_d)?)
        .meta("max_d", fmt_f64(r.max_d)?)
        .meta("generator", GENERATOR);
    for &(g, d) in &r.points {
        doc.push(nums(&[g, d])?);
    }
    Ok(doc.render())
}

pub fn residuals_from_str(text: &str) -> Result<ResidualReport> {
    let doc = Doc::parse(text, "residuals", &RESIDUAL_COLUMNS)?;
    if doc.get("convention")? != DEFECT_CONVENTION {
        return Err(Error::Schema(format!("unknown residual convention {:?}", doc.get("convention")?)));
    }
    let points =
        doc.rows.iter().map(|(l, r)| Ok((parse_f64(&r[0], *l)?, parse_f64(&r[1], *l)?))).collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::from_points(points))
}

const POWER_COLUMNS: [&str; 4] = ["delta", "power_T", "power_V", "gap"];

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFile {
    pub design: Design,
    pub alpha: f64,
    pub zeta: f64,
    pub rows: Vec<PowerRow>,
}

pub fn power_to_string(p: &PowerFile) -> Result<String> {
    let mut doc = Doc::new("power", &POWER_COLUMNS);
    doc.design_meta(&p.design)
        .meta("alpha", fmt_f64(p.alpha)?)
        .meta("zeta", fmt_f64(p.zeta)?)
        .meta("generator", GENERATOR);
    for r in &p.rows {
        doc.push(nums(&[r.delta, r.power_t, r.power_v, r.gap])?);
    }
    Ok(doc.render())
}

pub fn power_from_str(text: &str) -> Result<PowerFile> {
    let doc = Doc::parse(text, "power", &POWER_COLUMNS)?;
    let rows = doc
        .rows
        .iter()
        .map(|(l, r)| {
            Ok(PowerRow {
                delta: parse_f64(&r[0], *l)?,
                power_t: parse_f64(&r[1], *l)?,
                power_v: parse_f64(&r[2], *l)?,
                gap: parse_f64(&r[3], *l)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PowerFile { design: doc.get_design()?, alpha: doc.get_f64("alpha")?, zeta: doc.get_f64("zeta")?, rows })
}

const RECORD_COLUMNS: [&str; 6] = ["v", "z", "theta_deg", "pi", "flag", "clamped"];

pub fn records_to_string(run: &SimulationRun) -> Result<String> {
    let mut doc = Doc::new("records", &RECORD_COLUMNS);
    doc.meta("seed", run.seed.to_string())
        .design_meta(&run.design)
        .meta("psi_deg", fmt_f64(run.psi.psi_deg)?)
        .meta("zeta", fmt_f64(run.psi.zeta)?)
        .meta("gamma", fmt_f64(run.psi.gamma)?)
        .meta("n_reps", run.n_reps.to_string())
        .meta("generator", GENERATOR);
    for r in &run.records {
        let mut row = nums(&[r.v, r.z, r.theta_deg])?;
        row.push(match r.pi {
            Some(p) => fmt_f64(p)?,
            None => "NA".into(),
        });
        row.push(r.source.as_str().into());
        row.push(r.clamped.to_string());
        doc.push(row);
    }
    Ok(doc.render())
}

pub fn records_from_str(text: &str) -> Result<SimulationRun> {
    let doc = Doc::parse(text, "records", &RECORD_COLUMNS)?;
    let seed = doc.get("seed")?.parse::<u64>().map_err(|_| Error::Schema("seed must be a 64-bit integer".into()))?;
    let n_reps = doc.get("n_reps")?.parse::<usize>().map_err(|_| Error::Schema("n_reps must be an integer".into()))?;
    let psi =
        VariancePoint { zeta: doc.get_f64("zeta")?, gamma: doc.get_f64("gamma")?, psi_deg: doc.get_f64("psi_deg")? };
    let records = doc
        .rows
        .iter()
        .map(|(l, r)| {
            let l = *l;
            Ok(SimRecord {
                v: parse_f64(&r[0], l)?,
                z: parse_f64(&r[1], l)?,
                theta_deg: parse_f64(&r[2], l)?,
                pi: if r[3] == "NA" { None } else { Some(parse_f64(&r[3], l)?) },
                source: PiSource::parse(&r[4]).map_err(|e| Error::Validation { row: l, msg: e.to_string() })?,
                clamped: parse_bool(&r[5], l)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if records.len() != n_reps {
        return Err(Error::Length { expected: n_reps, got: records.len() });
    }
    Ok(SimulationRun { seed, design: doc.get_design()?, psi, n_reps, records })
}

pub fn ecdf_to_string(segments: &[EcdfSegment]) -> Result<String> {
    let mut doc = Doc::new("ecdf", &["x", "y"]);
    doc.meta("generator", GENERATOR);
    for s in segments {
        doc.push(nums(&[s.x_start, s.y])?);
        doc.push(nums(&[s.x_end, s.y])?);
    }
    Ok(doc.render())
}

pub fn ecdf_from_str(text: &str) -> Result<Vec<EcdfSegment>> {
    let doc = Doc::parse(text, "ecdf", &["x", "y"])?;
    if doc.rows.len() % 2 != 0 {
        return Err(Error::Schema("ECDF rows come in pairs".into()));
    }
    doc.rows
        .chunks(2)
        .map(|p| {
            let (l0, a) = (&p[0].0, &p[0].1);
            let (l1, b) = (&p[1].0, &p[1].1);
            let y = parse_f64(&a[1], *l0)?;
            if parse_f64(&b[1], *l1)? != y {
                return Err(Error::Validation { row: *l1, msg: "segment endpoints differ in y".into() });
            }
            Ok(EcdfSegment { x_start: parse_f64(&a[0], *l0)?, x_end: parse_f64(&b[0], *l1)?, y })
        })
        .collect()
}

pub fn curve_to_string(points: &[(f64, f64)]) -> Result<String> {
    let mut doc = Doc::new("curve", &["level", "prob"]);
    doc.meta("generator", GENERATOR);
    for &(l, p) in points {
        doc.push(nums(&[l, p])?);
    }
    Ok(doc.render())
}

pub fn curve_from_str(text: &str) -> Result<Vec<(f64, f64)>> {
    let doc = Doc::parse(text, "curve", &["level", "prob"])?;
    doc.rows.iter().map(|(l, r)| Ok((parse_f64(&r[0], *l)?, parse_f64(&r[1], *l)?))).collect()
}

const CROSSING_COLUMNS: [&str; 10] = [
    "alpha1",
    "alpha2",
    "start",
    "end",
    "min_gap",
    "node_at_min",
    "residual_quality",
    "detected",
    "inconclusive",
    "approximate",
];

/// One row per crossing interval; pairs without crossings get one row with
/// `NA` interval fields.
pub fn crossings_to_string(reports: &[CrossingReport]) -> Result<String> {
    let mut doc = Doc::new("crossings", &CROSSING_COLUMNS);
    if let Some(r) = reports.first() {
        doc.design_meta(&r.design);
    }
    doc.meta("generator", GENERATOR);
    for r in reports {
        let tail = |row: &mut Vec<String>| -> Result<()> {
            row.push(fmt_f64(r.residual_quality)?);
            row.extend([r.detected.to_string(), r.inconclusive.to_string(), r.approximate.to_string()]);
            Ok(())
        };
        if r.crossing_intervals.is_empty() {
            let mut row = nums(&[r.alpha_pair.0, r.alpha_pair.1])?;
            row.extend(["NA", "NA", "NA", "NA"].map(String::from));
            tail(&mut row)?;
            doc.push(row);
        }
        for c in &r.crossing_intervals {
            let mut row = nums(&[r.alpha_pair.0, r.alpha_pair.1, c.start, c.end, c.min_gap, c.node_at_min])?;
            tail(&mut row)?;
            doc.push(row);
        }
    }
    Ok(doc.render())
}

pub fn crossings_from_str(text: &str) -> Result<Vec<CrossingReport>> {
    let doc = Doc::parse(text, "crossings", &CROSSING_COLUMNS)?;
    let mut out: Vec<CrossingReport> = Vec::new();
    if doc.rows.is_empty() {
        return Ok(out);
    }
    let design = doc.get_design()?;
    for (l, r) in &doc.rows {
        let l = *l;
        let pair = (parse_f64(&r[0], l)?, parse_f64(&r[1], l)?);
        let interval = if r[2] == "NA" {
            None
        } else {
            Some(CrossingInterval {
                start: parse_f64(&r[2], l)?,
                end: parse_f64(&r[3], l)?,
                min_gap: parse_f64(&r[4], l)?,
                node_at_min: parse_f64(&r[5], l)?,
            })
        };
        let same = out.last().is_some_and(|p| p.alpha_pair == pair);
        if !same {
            out.push(CrossingReport {
                design,
                alpha_pair: pair,
                crossing_intervals: Vec::new(),
                residual_quality: parse_f64(&r[6], l)?,
                detected: parse_bool(&r[7], l)?,
                inconclusive: parse_bool(&r[8], l)?,
                approximate: parse_bool(&r[9], l)?,
            });
        }
        if let (Some(c), Some(p)) = (interval, out.last_mut()) {
            p.crossing_intervals.push(c);
        }
    }
    Ok(out)
}

/// Everything needed to repeat a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub args: Vec<String>,
    pub n1: String,
    pub n2: u32,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub n_reps: Option<usize>,
    pub psi_deg: Option<f64>,
    pub zeta: Option<f64>,
    pub gamma: Option<f64>,
    pub family: Option<String>,
    pub method: Option<String>,
    pub tol: Option<f64>,
    pub threads: Option<usize>,
    pub converged: Option<bool>,
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>, d: &Design) -> Self {
        Self {
            tool_version: GENERATOR.into(),
            command: command.into(),
            args,
            n1: d.n1.to_string(),
            n2: d.n2,
            alpha: None,
            seed: None,
            n_reps: None,
            psi_deg: None,
            zeta: None,
            gamma: None,
            family: None,
            method: None,
            tol: None,
            threads: None,
            converged: None,
            files: Vec::new(),
        }
    }
}

pub fn write_manifest(m: &RunManifest, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(m).map_err(|e| Error::Schema(e.to_string()))?;
    write_atomic(path, &(text + "\n"))
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Schema(e.to_string()))
}

/// Row of the printed grid: `ν₂`, `ν₁` (`None` for ∞) and the values at
/// `c = 0.00, 0.05, …, 0.50`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table2Row {
    pub nu2: Option<u32>,
    pub nu1: Option<u32>,
    pub values: [f64; 11],
}

pub const TABLE2_DOFS: [Option<u32>; 4] = [Some(10), Some(15), Some(30), None];

/// Assemble the 16-row grid over `(ν₂, ν₁) ∈ {10, 15, 30, ∞}²`. A cell for
/// `(ν₂, ν₁)` at `c` reads the table of design `(ν₁ + 1, ν₂ + 1)` at `c`, or
/// the relabelled design at `1 − c`; `(∞, ∞)` is the normal quantile.
pub fn table2_grid(tables: &[CriterionTable]) -> Result<Vec<Table2Row>> {
    let alpha = tables.first().map(|t| t.alpha).ok_or_else(|| Error::MissingCell("no tables given".into()))?;
    let find = |d: Design| tables.iter().find(|t| t.design == d && t.alpha == alpha);
    let mut rows = Vec::new();
    for nu2 in TABLE2_DOFS {
        for nu1 in TABLE2_DOFS {
            let mut values = [0.0; 11];
            for (k, v) in values.iter_mut().enumerate() {
                let c = 0.05 * k as f64;
                *v = match (nu1, nu2) {
                    (None, None) => Some(normal_quantile(1.0 - alpha)),
                    (None, Some(b)) => find(Design::infinite_n1(b + 1)?).map(|t| t.value_at_c(c)),
                    (Some(a), None) => find(Design::infinite_n1(a + 1)?).map(|t| t.value_at_c(1.0 - c)),
                    (Some(a), Some(b)) => find(Design::from_dof(a, b)?)
                        .map(|t| t.value_at_c(c))
                        .or_else(|| find(Design::from_dof(b, a).ok()?).map(|t| t.value_at_c(1.0 - c))),
                }
                .ok_or_else(|| {
                    let show = |x: Option<u32>| x.map_or("inf".to_string(), |v| v.to_string());
                    Error::MissingCell(format!("nu2={}, nu1={}", show(nu2), show(nu1)))
                })?;
            }
            rows.push(Table2Row { nu2, nu1, values });
        }
    }
    Ok(rows)
}

/// The grid as fixed-width text with three decimals.
pub fn emit_table2(tables: &[CriterionTable]) -> Result<String> {
    let rows = table2_grid(tables)?;
    let show = |x: Option<u32>| x.map_or("inf".to_string(), |v| v.to_string());
    let mut out = String::from("  c =       ");
    for k in 0..11 {
        out.push_str(&format!("{:>7.2}", 0.05 * k as f64));
    }
    out.push_str("\nnu2  nu1    ");
    for k in 0..10 {
        out.push_str(&format!("{:>7.2}", 1.0 - 0.05 * k as f64));
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{:<4} {:<4}   ", show(r.nu2), show(r.nu1)));
        for v in r.values {
            out.push_str(&format!("{v:>7.3}"));
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criterion::build_psi_lattice;

    fn t_table(d: Design, alpha: f64) -> CriterionTable {
        let nodes = build_psi_lattice().nodes;
        let lo = upper_t(alpha, d.nu2()).unwrap();
        let hi = upper_t(alpha, d.nu1()).unwrap();
        let values = nodes.iter().map(|&t| lo + (hi - lo) * t / 90.0).collect();
        CriterionTable {
            family: Family::Ideal,
            design: d,
            alpha,
            lattice: LatticeKind::Psi91,
            residuals: nodes.iter().map(|t| 1e-7 * (t / 7.0).sin()).collect(),
            nodes,
            values,
            converged: true,
            tolerance: 1e-6,
        }
    }

    #[test]
    fn table_round_trip_is_exact() {
        let t = t_table(Design::new(5, 9).unwrap(), 0.1 / 3.0);
        let back = table_from_str(&table_to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn version_and_columns_are_enforced() {
        let s = table_to_string(&t_table(Design::new(4, 4).unwrap(), 0.05)).unwrap();
        let bad = s.replacen(" v1\n", " v9\n", 1);
        assert!(matches!(table_from_str(&bad), Err(Error::UnsupportedVersion { .. })));
        let bad = s.replacen("index,node,value,residual", "index,node,value", 1);
        assert!(matches!(table_from_str(&bad), Err(Error::Schema(m)) if m.contains("residual")));
    }

    #[test]
    fn non_monotone_lattice_names_the_row() {
        let t = t_table(Design::new(4, 4).unwrap(), 0.05);
        let s = table_to_string(&t).unwrap();
        let mut lines: Vec<String> = s.lines().map(String::from).collect();
        let header_lines = lines.iter().take_while(|l| l.starts_with('#')).count() + 1;
        let target = header_lines + 10;
        let mut f: Vec<String> = lines[target].split(',').map(String::from).collect();
        f[1] = fmt_f64(t.nodes[8]).unwrap();
        lines[target] = f.join(",");
        let err = table_from_str(&lines.join("\n")).unwrap_err();
        match err {
            Error::Validation { row, .. } => assert_eq!(row, target + 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_is_rejected() {
        assert!(fmt_f64(f64::NAN).is_err());
        assert!(parse_f64("NaN", 3).is_err());
        assert_eq!(parse_f64("inf", 1).unwrap(), f64::INFINITY);
    }
}
