use bfexact::criterion::{Constant, LatticeKind};
use bfexact::distributions::special::normal_quantile;
use bfexact::distributions::{student_t_quantile, Dof};
use bfexact::fisher_behrens::solve_fb_criterion;
use bfexact::ideal::{
    residual_report, solve_ideal, solve_ideal_inf_n1, uniform_gamma_grid, upper_t, InitialGuess, SolveOptions,
};
use bfexact::kernel::{prob_v_below, prob_v_below_two_tailed};
use bfexact::{CriterionTable, Design, VariancePoint};
use std::sync::OnceLock;

fn solved(n1: u32, n2: u32, alpha: f64) -> CriterionTable {
    let d = Design::new(n1, n2).unwrap();
    solve_ideal(&d, alpha, InitialGuess::Auto, &SolveOptions::for_design(&d)).unwrap()
}

fn table_7_9() -> &'static CriterionTable {
    static T: OnceLock<CriterionTable> = OnceLock::new();
    T.get_or_init(|| solved(7, 9, 0.05))
}

#[test]
fn endpoints_are_pinned_t_quantiles() {
    let t = table_7_9();
    assert!(t.converged);
    assert_eq!(t.values[0], student_t_quantile(0.95, Dof::Finite(8.0)).unwrap());
    assert_eq!(t.values[90], student_t_quantile(0.95, Dof::Finite(6.0)).unwrap());
    assert!(t.values.iter().all(|&v| v > 0.0));
}

#[test]
fn similar_at_every_lattice_gamma() {
    let t = table_7_9();
    let crit = t.interpolant();
    for &theta in t.nodes.iter().step_by(5) {
        let vp = VariancePoint::from_psi_deg(theta, &t.design).unwrap();
        let p = prob_v_below(&crit, &vp, &t.design).unwrap();
        assert!((p - 0.95).abs() <= t.tolerance, "psi {theta}: {p}");
        let two = prob_v_below_two_tailed(&crit, &vp, &t.design).unwrap();
        assert!((two - 0.1).abs() <= 2.0 * t.tolerance);
    }
    let r = residual_report(t, &uniform_gamma_grid(91)).unwrap();
    assert!(r.min_d <= 0.0 && r.max_d >= 0.0);
    assert!(r.max_abs_d() <= t.tolerance);
}

#[test]
fn dips_below_pooled_t() {
    let t = table_7_9();
    let pooled = upper_t(0.05, Dof::Finite(14.0)).unwrap();
    assert!(t.values.iter().any(|&v| v < pooled));
}

#[test]
fn swapped_design_reflects_the_table() {
    let a = table_7_9();
    let b = solved(9, 7, 0.05);
    for i in 0..91 {
        assert!((a.values[i] - b.values[90 - i]).abs() <= 2.0 * a.tolerance, "node {i}");
    }
}

#[test]
fn converged_table_is_a_fixed_point() {
    let t = table_7_9();
    let again =
        solve_ideal(&t.design, t.alpha, InitialGuess::Table(t.clone()), &SolveOptions::for_design(&t.design)).unwrap();
    for (a, b) in t.values.iter().zip(&again.values) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn perturbation_raises_the_local_defect() {
    let t = table_7_9();
    let mut bumped = t.clone();
    bumped.values[45] += 0.01;
    let g = VariancePoint::from_psi_deg(t.nodes[45], &t.design).unwrap().gamma;
    let before = residual_report(t, &[g]).unwrap().points[0].1;
    let after = residual_report(&bumped, &[g]).unwrap().points[0].1;
    // a higher criterion accepts more, so the one-tailed defect falls
    assert!(after < before - 2e-5, "before {before}, after {after}");
    assert!(after.abs() > before.abs());
}

#[test]
fn smaller_alpha_lies_above() {
    let d = Design::new(11, 11).unwrap();
    let o = SolveOptions::for_design(&d);
    let lo = solve_ideal(&d, 0.01, InitialGuess::Auto, &o).unwrap();
    let hi = solve_ideal(&d, 0.05, InitialGuess::Auto, &o).unwrap();
    assert!(lo.converged && hi.converged);
    assert!(lo.values.iter().zip(&hi.values).all(|(a, b)| a > b));
}

#[test]
fn limit_table_spans_t_to_normal() {
    let o = SolveOptions { tol: 1e-6, ..SolveOptions::default() };
    let t = solve_ideal_inf_n1(11, 0.025, &o).unwrap();
    assert_eq!(t.lattice, LatticeKind::C101);
    assert!(t.converged);
    assert!((t.value_at_c(0.0) - student_t_quantile(0.975, Dof::Finite(10.0)).unwrap()).abs() < 1e-12);
    assert!((t.value_at_c(1.0) - normal_quantile(0.975)).abs() < 1e-12);
    assert!((t.value_at_c(0.5) - 2.029).abs() < 0.002);
    let r = residual_report(&t, &uniform_gamma_grid(91)).unwrap();
    assert!(r.max_abs_d() <= 1e-4);
}

#[test]
fn fisher_behrens_is_conservative_at_unit_ratio() {
    let d = Design::new(5, 5).unwrap();
    let vp = VariancePoint::from_zeta(1.0, &d).unwrap();
    for alpha in [0.025, 0.1, 0.25] {
        let fb = solve_fb_criterion(&d, alpha).unwrap();
        let size = prob_v_below_two_tailed(&fb.interpolant(), &vp, &d).unwrap();
        assert!(size < 2.0 * alpha, "alpha {alpha}: size {size}");
        let pooled = upper_t(alpha, d.nu()).unwrap();
        assert!(fb.values.iter().all(|&v| v >= pooled - 1e-12));
    }
    let t = upper_t(0.05, d.nu()).unwrap();
    let exact = prob_v_below_two_tailed(&Constant(t), &vp, &d).unwrap();
    assert!((exact - 0.1).abs() < 1e-8);
}
