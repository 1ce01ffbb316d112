use std::path::Path;

use nonlinear_xva::adjustments::{compute_nva, decompose};
use nonlinear_xva::cashflows::{FundingSpec, Position};
use nonlinear_xva::config::{load_config, Experiment, RunConfig};
use nonlinear_xva::experiments::{fva_comparison, run_experiment, ExperimentOutput, Sweep};
use nonlinear_xva::lsmc::{price_deal, EngineSettings};
use nonlinear_xva::report::{render_text, write_csv};

fn quick(experiment: Experiment) -> RunConfig {
    let mut cfg = RunConfig { experiment, n_paths: 400, ..RunConfig::default() };
    cfg.engine = EngineSettings { steps_per_year: 12, replications: 3, ..cfg.engine };
    cfg
}

fn csv(out: &ExperimentOutput) -> String {
    let mut bytes = Vec::new();
    write_csv(out, &mut bytes).unwrap();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn shipped_config_is_the_default_setup() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.cfg");
    let cfg = load_config(&path).unwrap();
    let default = RunConfig::default();
    assert_eq!(cfg.spec, default.spec);
    assert_eq!(cfg.engine, default.engine);
    assert_eq!((cfg.n_paths, cfg.seed), (default.n_paths, default.seed));
}

#[test]
fn decomposition_identity_holds() {
    let base = quick(Experiment::Single);
    for (position, rehyp, f_pos, f_neg) in
        [(Position::Long, false, 0.03, 0.01), (Position::Short, true, 0.04, 0.01), (Position::Long, true, 0.01, 0.03)]
    {
        let mut spec = base.spec.clone();
        spec.deal.position = position;
        spec.collateral.rehypothecation = rehyp;
        spec.funding = FundingSpec { rate_borrow: f_pos, rate_lend: f_neg, ..spec.funding };
        let res = price_deal(&spec, &base.engine, base.n_paths, 3).unwrap();
        let rep = decompose(&res, &spec).unwrap();
        assert!(rep.identity_holds(3.0), "{} vs {}", rep.identity_residual, rep.identity_std_error);
    }
}

#[test]
fn nva_vanishes_for_symmetric_rates_and_flips_sign_when_swapped() {
    let cfg = quick(Experiment::Single);
    let mut spec = cfg.spec.clone();
    spec.funding = FundingSpec::symmetric(0.02);
    let zero = compute_nva(&spec, &cfg.engine, Some(0.02), cfg.n_paths, 5).unwrap();
    assert_eq!(zero.nva.value, 0.0);

    let mut signs = Vec::new();
    for (f_pos, f_neg) in [(0.03, 0.01), (0.01, 0.03)] {
        spec.funding = FundingSpec { rate_borrow: f_pos, rate_lend: f_neg, ..spec.funding };
        let n = compute_nva(&spec, &cfg.engine, None, 1000, 5).unwrap();
        assert!((n.f_hat - 0.02).abs() < 1e-15);
        assert!(n.nva.value.abs() > 3.0 * n.nva.std_error, "{:?}", n.nva);
        signs.push(n.nva.value.signum());
    }
    assert_eq!(signs, [-1.0, 1.0]);
}

#[test]
fn funding_table_layout_and_monotonicity() {
    let cfg = quick(Experiment::Table1);
    let ExperimentOutput::Table(t) = run_experiment(&cfg).unwrap() else { panic!("wrong output") };
    assert_eq!(t.rows.len(), 10);
    assert!(t.rows[..5].iter().all(|r| r.sweep == Sweep::Borrowing && r.f_neg == cfg.spec.market.rate));
    assert!(t.rows[5..].iter().all(|r| r.sweep == Sweep::Lending && r.f_pos == cfg.spec.market.rate));
    // the 100bps rows of both sweeps are the same symmetric deal
    assert_eq!(t.rows[1].cells, t.rows[6].cells);
    for w in t.rows[..5].windows(2) {
        assert!(w[1].cells[1].value <= w[0].cells[1].value, "short not decreasing in f+");
    }
    for w in t.rows[5..].windows(2) {
        assert!(w[1].cells[0].value >= w[0].cells[0].value, "long not increasing in f-");
    }
    let text = csv(&ExperimentOutput::Table(t));
    assert_eq!(text.lines().count(), 11);
    assert!(text.starts_with("sweep,rate_bps,f_pos,f_neg,low_long,low_long_se"));
}

#[test]
fn fva_methods_agree_in_the_simplified_regime() {
    let points = fva_comparison(&quick(Experiment::Fig1)).unwrap();
    assert_eq!(points.len(), 13);
    assert_eq!(points[0].full.value, 0.0);
    for p in &points {
        assert!((p.method_ii - p.method_iii).abs() <= 0.1, "{p:?}");
    }
    let last = points.last().unwrap();
    assert!(last.method_ii > 0.0 && last.full.value > 0.0);
}

#[test]
fn reruns_are_byte_identical() {
    for e in [Experiment::Single, Experiment::Fig3] {
        let cfg = quick(e);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(csv(&a), csv(&b));
        assert_eq!(render_text(&a), render_text(&b));
    }
}

#[test]
fn every_estimate_has_a_standard_error_column() {
    let out = run_experiment(&quick(Experiment::Fig4)).unwrap();
    let text = csv(&out);
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header, ["f_pos", "f_neg", "fva_low", "fva_low_se", "fva_high", "fva_high_se"]);
    assert_eq!(text.lines().count(), 5);
}
