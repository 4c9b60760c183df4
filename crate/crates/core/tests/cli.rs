use bfexact::io;
use std::path::Path;
use std::process::{Command, Output};

fn bfexact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bfexact")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn centre_value(out: &str) -> f64 {
    let line = out.lines().find(|l| l.starts_with("v(c=0.5) = ")).expect("centre value line");
    line["v(c=0.5) = ".len()..].parse().unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn prob_with_t_criterion_at_harmonic_zeta() {
    // ζ = n₁ν₁/(n₂ν₂) = 5·4/(7·6)
    let zeta = format!("{}", 20.0 / 42.0);
    let o = bfexact(&["prob", "--n1", "5", "--n2", "7", "--alpha", "0.025", "--zeta", &zeta]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("Pr{V <= v} = 0.97500"), "{}", stdout(&o));
}

#[test]
fn solve_ideal_prints_centre_value_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = bfexact(&["solve-ideal", "--n1", "11", "--n2", "11", "--alpha", "0.025", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let centre = centre_value(&stdout(&o));
    assert!((centre - 2.059).abs() <= 0.002, "{centre}");
    let m = io::read_manifest(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(m.command, "solve-ideal");
    assert_eq!(m.converged, Some(true));
    let t = io::read_table(&dir.path().join(&m.files[0])).unwrap();
    assert_eq!(t.design.n2, 11);

    let o = bfexact(&["residuals", "--table", dir.path().join(&m.files[0]).to_str().unwrap(), "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = io::residuals_from_str(&read(&dir.path().join("residuals.csv"))).unwrap();
    assert_eq!(r.points.len(), 91);
    assert!(r.max_abs_d() <= 1e-4);
}

#[test]
fn simulate_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = bfexact(&[
            "simulate",
            "--n1",
            "6",
            "--n2",
            "6",
            "--psi-deg",
            "45",
            "--reps",
            "5000",
            "--seed",
            "1",
            "--family",
            "none",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let ra = read(&a.path().join("records.csv"));
    assert_eq!(ra, read(&b.path().join("records.csv")));
    let run = io::records_from_str(&ra).unwrap();
    assert_eq!(run.records.len(), 5000);
    let m = io::read_manifest(&a.path().join("manifest.json")).unwrap();
    assert_eq!((m.seed, m.n_reps, m.psi_deg), (Some(1), Some(5000), Some(45.0)));
}

#[test]
fn fisher_behrens_simulation_and_ecdf() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = bfexact(&[
        "simulate",
        "--n1",
        "3",
        "--n2",
        "3",
        "--zeta",
        "1",
        "--reps",
        "400",
        "--family",
        "fisher-behrens",
        "--levels",
        "0.2,0.5,0.8",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["records.csv", "ecdf.csv", "curve.csv", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let first = read(&dir.path().join("ecdf.csv"));
    let o = bfexact(&["ecdf", "--records", dir.path().join("records.csv").to_str().unwrap(), "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read(&dir.path().join("ecdf.csv")), first);
}

#[test]
fn validation_errors_exit_with_one() {
    let cases: &[&[&str]] = &[
        &["prob", "--n1", "5", "--n2", "5", "--alpha", "0.05", "--zeta", "1", "--gamma", "0.5"],
        &["prob", "--n1", "5", "--n2", "5", "--alpha", "0.7", "--zeta", "1"],
        &["solve-ideal", "--n1", "1", "--n2", "5", "--alpha", "0.05"],
        &["solve-fb", "--n1", "5", "--n2", "5", "--alpha", "0"],
        &["simulate", "--n1", "5", "--n2", "5"],
        &["frobnicate"],
    ];
    for args in cases {
        let o = bfexact(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn infinite_second_sample_suggests_a_swap() {
    let o = bfexact(&["solve-ideal", "--n1", "5", "--n2", "inf", "--alpha", "0.05"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--n1 inf"), "{}", stderr(&o));
}

#[test]
fn non_convergence_exits_with_two_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = bfexact(&[
        "solve-ideal",
        "--n1",
        "6",
        "--n2",
        "6",
        "--alpha",
        "0.05",
        "--tol",
        "1e-12",
        "--max-sweeps",
        "1",
        "--out",
        out,
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let m = io::read_manifest(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(m.converged, Some(false));
    let t = io::read_table(&dir.path().join(&m.files[0])).unwrap();
    assert!(!t.converged);
}

#[test]
fn limit_design_solves_and_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = bfexact(&["solve-ideal", "--n1", "inf", "--n2", "31", "--alpha", "0.025", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let centre = centre_value(&stdout(&o));
    assert!((centre - 1.981).abs() <= 0.002, "{centre}");
    let m = io::read_manifest(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(m.n1, "inf");
    let table = dir.path().join(&m.files[0]);
    let o = bfexact(&["prob", "--n1", "inf", "--n2", "31", "--table", table.to_str().unwrap(), "--gamma", "0.3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let p: f64 = stdout(&o).trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!((p - 0.975).abs() < 1e-5, "{p}");
}
