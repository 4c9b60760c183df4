use bfexact::ideal::{residual_report, uniform_gamma_grid, SolveOptions};
use bfexact::io::{self, PowerFile, RunManifest};
use bfexact::linnik::{detect_crossings, estimate_alpha_l};
use bfexact::power::{power_table, PowerSpec};
use bfexact::simulation::{
    assign_confidence_fb, assign_confidence_ideal, ranked_ecdf, run_simulation, theoretical_curve, AssignRule, LevelSet,
};
use bfexact::{Design, VariancePoint};
use std::sync::OnceLock;

fn levels_6_6() -> &'static LevelSet {
    static L: OnceLock<LevelSet> = OnceLock::new();
    L.get_or_init(|| {
        let d = Design::new(6, 6).unwrap();
        LevelSet::solve_ideal(&d, &[0.3, 0.5, 0.7, 0.9], &SolveOptions::for_design(&d)).unwrap()
    })
}

#[test]
fn ideal_criteria_are_calibrated_on_replicates() {
    let ls = levels_6_6();
    let d = ls.design;
    let n = 5000;
    for psi in [30.0, 60.0] {
        let run = run_simulation(99, &d, &VariancePoint::from_psi_deg(psi, &d).unwrap(), n).unwrap();
        for (j, &level) in ls.levels.iter().enumerate() {
            let above = run.records.iter().filter(|r| r.v.abs() > ls.critical_values(r.theta_deg)[j + 1]).count()
                as f64
                / n as f64;
            let p = 1.0 - level;
            let band = 3.0 * (p * level / n as f64).sqrt();
            assert!((above - p).abs() < band, "psi {psi} level {level}: {above} vs {p}");
        }
    }
}

#[test]
fn assigned_levels_reproduce_the_criteria() {
    let ls = levels_6_6();
    let d = ls.design;
    let mut run = run_simulation(4, &d, &VariancePoint::from_psi_deg(45.0, &d).unwrap(), 50).unwrap();
    for (k, r) in run.records.iter_mut().enumerate() {
        let xs = ls.critical_values(r.theta_deg);
        r.v = xs[1 + k % ls.levels.len()];
    }
    assign_confidence_ideal(&mut run, ls, &AssignRule::default()).unwrap();
    for (k, r) in run.records.iter().enumerate() {
        assert!((r.pi.unwrap() - ls.levels[k % ls.levels.len()]).abs() < 1e-12);
    }
}

#[test]
fn simulation_outputs_round_trip() {
    let d = Design::new(3, 4).unwrap();
    let vp = VariancePoint::from_zeta(2.0, &d).unwrap();
    let mut run = run_simulation(17, &d, &vp, 300).unwrap();
    assign_confidence_fb(&mut run).unwrap();
    run.records[3].pi = None;
    let back = io::records_from_str(&io::records_to_string(&run).unwrap()).unwrap();
    assert_eq!(back, run);

    let pis: Vec<f64> = run.pis().into_iter().flatten().collect();
    let segs = ranked_ecdf(&pis).unwrap();
    assert_eq!(io::ecdf_from_str(&io::ecdf_to_string(&segs).unwrap()).unwrap(), segs);

    let ls = LevelSet::solve_fb(&d, &[0.2, 0.5, 0.8]).unwrap();
    let curve = theoretical_curve(&ls, &vp).unwrap();
    assert_eq!(curve.points.first(), Some(&(0.0, 0.0)));
    assert_eq!(curve.points.last(), Some(&(1.0, 1.0)));
    assert_eq!(io::curve_from_str(&io::curve_to_string(&curve.points).unwrap()).unwrap(), curve.points);
}

#[test]
fn analysis_outputs_round_trip() {
    let ls = levels_6_6();
    let t = &ls.tables[1];
    let r = residual_report(t, &uniform_gamma_grid(31)).unwrap();
    assert_eq!(io::residuals_from_str(&io::residuals_to_string(t, &r).unwrap()).unwrap(), r);

    let spec = PowerSpec::new(t.clone(), 1.0).unwrap().with_deltas(vec![0.0, 1.0, 2.5]).unwrap();
    let file = PowerFile { design: t.design, alpha: t.alpha, zeta: 1.0, rows: power_table(&spec).unwrap() };
    assert_eq!(io::power_from_str(&io::power_to_string(&file).unwrap()).unwrap(), file);

    let pairs: Vec<_> = ls.tables.windows(2).map(|w| detect_crossings(&w[0], &w[1]).unwrap()).collect();
    assert_eq!(io::crossings_from_str(&io::crossings_to_string(&pairs).unwrap()).unwrap(), pairs);

    let dir = tempfile::tempdir().unwrap();
    let mut m = RunManifest::new("simulate", vec!["--seed".into(), "3".into()], &t.design);
    m.seed = Some(3);
    m.psi_deg = Some(45.0);
    m.files = vec!["records.csv".into()];
    let path = dir.path().join("manifest.json");
    io::write_manifest(&m, &path).unwrap();
    assert_eq!(io::read_manifest(&path).unwrap(), m);
    let tp = dir.path().join("t.csv");
    io::write_table(t, &tp).unwrap();
    assert_eq!(&io::read_table(&tp).unwrap(), t);
}

#[test]
fn records_are_thread_count_independent() {
    let d = Design::new(6, 6).unwrap();
    let vp = VariancePoint::from_psi_deg(45.0, &d).unwrap();
    let a = run_simulation(1, &d, &vp, 2000).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| run_simulation(1, &d, &vp, 2000).unwrap());
    assert_eq!(io::records_to_string(&a).unwrap(), io::records_to_string(&b).unwrap());
}

#[test]
fn consistent_regime_has_no_crossings() {
    let d = Design::new(8, 8).unwrap();
    let (scan, tables) = estimate_alpha_l(&d, &[0.01, 0.05, 0.1], &SolveOptions::for_design(&d)).unwrap();
    assert_eq!(tables.len(), 3);
    for p in &scan.pairs {
        assert!(p.crossing_intervals.is_empty(), "{:?}", p.alpha_pair);
        assert!(!p.detected && !p.inconclusive);
    }
}
