use crossdep::dgp::{kappa_true, simulate_panel, DgpSpec};
use crossdep::empirical::{defactor, standardize};
use crossdep::estimators::{joint_estimate, marginal_alpha, select_tau};
use crossdep::inference::{confidence_interval, sigma_tau_sq_at};
use crossdep::io::{panel_to_csv, parse_panel, Orientation};
use crossdep::Method;

#[test]
fn simulate_estimate_interval() {
    let spec = DgpSpec::example1(120, 150, 0.8, 21);
    let panel = simulate_panel(&spec).unwrap().panel;
    let j = joint_estimate(&panel, 1).unwrap();
    assert_eq!(j.method, Method::Joint);
    assert!((j.alpha - 0.8).abs() < 0.1, "{}", j.alpha);
    let var = sigma_tau_sq_at(&panel, j.cutoff_n, 1, None).unwrap();
    assert!(var.part1 >= 0.0 && var.total >= var.part2);
    let ci = confidence_interval(j.alpha, j.kappa, var.total, panel.n(), panel.t(), 1, 0.9).unwrap();
    assert!((ci.upper - j.alpha - (j.alpha - ci.lower)).abs() < 1e-12);
    if let Some((lo, hi)) = ci.inverted {
        assert!(lo <= j.alpha && j.alpha <= hi);
    }

    let k = kappa_true(&spec, 1).unwrap().value;
    let m = marginal_alpha(&panel, 1, k).unwrap();
    assert_eq!(m.method, Method::Marginal);
    assert!((m.alpha - 0.8).abs() < 0.1, "{}", m.alpha);
}

#[test]
fn csv_round_trip_preserves_estimate() {
    let panel = simulate_panel(&DgpSpec::example3(40, 60, 0.5, 2)).unwrap().panel;
    let back = parse_panel(&panel_to_csv(&panel, b','), Orientation::SectionsAsRows, false, b',').unwrap();
    assert_eq!(back, panel);
    assert_eq!(joint_estimate(&back, 1).unwrap(), joint_estimate(&panel, 1).unwrap());
}

#[test]
fn selection_is_consistent_with_single_estimates() {
    let panel = simulate_panel(&DgpSpec::example1(60, 80, 0.5, 8)).unwrap().panel;
    let sel = select_tau(&panel, &[1, 2, 3]).unwrap();
    for r in &sel.results {
        assert_eq!(r, &joint_estimate(&panel, r.tau).unwrap());
    }
    let best = sel.selected();
    let ratio = best.kappa / best.objective_value;
    assert!(sel.ratios.iter().all(|&q| q <= ratio));
}

#[test]
fn empirical_pipeline_on_simulated_panel() {
    let panel = simulate_panel(&DgpSpec::example1(30, 100, 0.8, 4)).unwrap().panel;
    let x = standardize(&panel).unwrap();
    let (resid, diag) = defactor(&x, 8).unwrap();
    assert_eq!(diag.acf_xbar.len(), 9);
    assert_eq!(diag.acf_xbar[0], 1.0);
    // persistent factors show up in the cross-sectional mean
    assert!(diag.acf_xbar[1] > 0.5);
    assert!(diag.ubar_vanishes);
    assert_eq!((resid.n(), resid.t()), (30, 100));
}
