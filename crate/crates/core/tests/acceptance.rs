//! Acceptance suite: one PASS/FAIL line per criterion with the evidence below it.
//!
//! Runs at the default setup (1000 paths, seed 1, weekly grid, 5 replications)
//! and takes a few minutes. Exits 0 regardless of the verdicts unless
//! `ACCEPTANCE_STRICT=1` is set, in which case any FAIL exits 1.

use std::process::ExitCode;
use std::time::Instant;

use nonlinear_xva::adjustments::{decompose, fva_methods};
use nonlinear_xva::cashflows::{
    close_out_payment, cva_dva_integrands, CollateralPolicy, CollateralSpec, FundingSpec, RecoverySpec,
};
use nonlinear_xva::config::{DistributionChoice, RunConfig};
use nonlinear_xva::credit::{kendall_tau, FirstDefaulter, JointDefaultDistribution};
use nonlinear_xva::experiments::{funding_table, fva_comparison, nva_table, FundingTable, TABLE_COLUMNS};
use nonlinear_xva::lsmc::{price_deal, EngineSettings, PricingSpec};
use nonlinear_xva::market::bs_price;
use nonlinear_xva::pde::{check_r_invariance, solve_predefault_pde, PdeCoefficients, PdeGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Published (value, standard error), rows f⁺ 0..400bps then f⁻ 0..400bps,
/// columns low long, low short, high long, high short.
type Published = [[(f64, f64); 4]; 10];

const TABLE1: Published = [
    [(29.36, 0.12), (-26.20, 0.17), (29.67, 0.22), (-26.60, 0.36)],
    [(28.70, 0.15), (-28.72, 0.15), (29.06, 0.21), (-29.07, 0.21)],
    [(28.05, 0.21), (-31.37, 0.32), (28.45, 0.22), (-31.66, 0.25)],
    [(27.38, 0.29), (-34.26, 0.55), (27.83, 0.23), (-34.48, 0.46)],
    [(26.67, 0.38), (-37.24, 0.86), (27.17, 0.26), (-37.38, 0.80)],
    [(26.17, 0.18), (-29.38, 0.11), (26.59, 0.36), (-29.68, 0.22)],
    [(28.70, 0.15), (-28.72, 0.15), (29.06, 0.21), (-29.07, 0.21)],
    [(31.37, 0.32), (-28.07, 0.22), (31.67, 0.25), (-28.46, 0.22)],
    [(34.28, 0.55), (-27.41, 0.30), (34.51, 0.47), (-27.85, 0.23)],
    [(37.28, 0.88), (-26.69, 0.39), (37.45, 0.82), (-27.17, 0.26)],
];

const TABLE2: Published = [
    [(29.33, 0.12), (-25.56, 0.22), (29.65, 0.22), (-25.96, 0.41)],
    [(28.70, 0.15), (-28.73, 0.15), (29.07, 0.22), (-29.08, 0.22)],
    [(28.07, 0.22), (-32.14, 0.36), (28.47, 0.22), (-32.43, 0.29)],
    [(27.42, 0.30), (-35.93, 0.68), (27.88, 0.24), (-36.16, 0.61)],
    [(26.75, 0.41), (-39.95, 1.14), (27.26, 0.27), (-40.10, 1.09)],
    [(25.53, 0.22), (-29.36, 0.11), (25.95, 0.41), (-29.66, 0.22)],
    [(28.70, 0.15), (-28.73, 0.15), (29.07, 0.22), (-29.08, 0.22)],
    [(32.14, 0.37), (-28.10, 0.22), (32.44, 0.29), (-28.49, 0.22)],
    [(35.94, 0.69), (-27.45, 0.31), (36.19, 0.61), (-27.89, 0.24)],
    [(39.99, 1.17), (-26.77, 0.42), (40.17, 1.12), (-27.27, 0.27)],
];

/// NVA tables, rows (f⁺, f⁻) = (300, 100) and (100, 300) bps: value and percent
/// for every column.
const NVA_NO_REHYP: [[(f64, f64); 4]; 2] = [
    [(-3.27, 11.9), (-3.60, 10.5), (-3.16, 11.4), (-3.50, 10.1)],
    [(3.63, 10.6), (3.25, 11.8), (3.52, 10.2), (3.13, 11.3)],
];
const NVA_REHYP: [[(f64, f64); 4]; 2] = [
    [(-4.02, 14.7), (-4.45, 12.4), (-3.91, 14.0), (-4.35, 12.0)],
    [(4.50, 12.5), (4.03, 14.7), (4.40, 12.2), (3.92, 14.0)],
];

const COLUMN_NAMES: [&str; 4] = ["low long", "low short", "high long", "high short"];

struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "MISS" }));
    }

    fn note(&mut self, line: String) {
        self.lines.push(format!("     {line}"));
    }
}

fn row_label(k: usize) -> String {
    let rate = [0, 100, 200, 300, 400][k % 5];
    if k < 5 { format!("f+ {rate:>3}bps") } else { format!("f- {rate:>3}bps") }
}

fn base() -> RunConfig {
    RunConfig::default()
}

fn closed_form() -> Outcome {
    let mut o = Outcome::new();
    let v = bs_price(100.0, 80.0, 0.01, 0.25, 0.0, 3.0).unwrap();
    o.check((v - 28.9).abs() <= 0.05, format!("bs_price(100, 80, 0.01, 0.25, 0, 3) = {v:.4}, target 28.9 ± 0.05"));
    o
}

fn classical_limit() -> Outcome {
    let mut o = Outcome::new();
    let cfg = base();
    let spec = PricingSpec {
        credit: JointDefaultDistribution::none(),
        funding: FundingSpec::symmetric(cfg.spec.market.rate),
        collateral: CollateralSpec { policy: CollateralPolicy::None, ..cfg.spec.collateral },
        ..cfg.spec.clone()
    };
    let bs = bs_price(100.0, 80.0, 0.01, 0.25, 0.0, 3.0).unwrap();
    for (label, cv) in [("plain estimator", false), ("with control variate", true)] {
        let res = price_deal(&spec, &EngineSettings { control_variate: cv, ..cfg.engine.clone() }, cfg.n_paths, cfg.seed).unwrap();
        let diff = (res.price - bs).abs();
        // the control variate is exact here, so its spread is pure rounding
        let ok = diff <= 3.0 * res.std_error || (cv && diff <= 1e-9);
        o.check(ok, format!("{label}: {:.4} ({:.4}) vs {bs:.4}, |diff| {diff:.2e}", res.price, res.std_error));
    }
    o
}

fn compare_table(table: &FundingTable, published: &Published) -> Outcome {
    let mut o = Outcome::new();
    let mut misses = 0;
    for (k, row) in table.rows.iter().enumerate() {
        for (c, cell) in row.cells.iter().enumerate() {
            let (p, p_se) = published[k][c];
            let tol = 3.0 * p_se.hypot(cell.std_error);
            let diff = cell.value - p;
            if diff.abs() > tol {
                misses += 1;
                o.check(false, format!("{} {:<10} {:7.2} ({:.2}) vs {p:7.2} ({p_se:.2}): diff {diff:+.2} > {tol:.2}", row_label(k), COLUMN_NAMES[c], cell.value, cell.std_error));
            }
        }
    }
    o.note(format!("{} of 40 cells within 3 combined SE", 40 - misses));
    o
}

fn nva_tables() -> Outcome {
    let mut o = Outcome::new();
    let cfg = base();
    for (rehyp, published) in [(false, NVA_NO_REHYP), (true, NVA_REHYP)] {
        let t = nva_table(&cfg, rehyp).unwrap();
        let name = if rehyp { "rehypothecation" } else { "no rehypothecation" };
        for (k, row) in t.rows.iter().enumerate() {
            for (c, cell) in row.cells.iter().enumerate() {
                let (p, pct) = published[k][c];
                let sign_ok = cell.nva.value.signum() == p.signum();
                o.check(sign_ok, format!("{name}, ({:.0}, {:.0})bps {:<10} sign of {:+.2}", row.f_pos * 1e4, row.f_neg * 1e4, COLUMN_NAMES[c], cell.nva.value));
                if c == 0 {
                    let tol = 3.0 * cell.nva.std_error;
                    let diff = cell.nva.value - p;
                    o.check(diff.abs() <= tol, format!("{name}, low long: {:+.2} ({:.2}) vs {p:+.2}, diff {diff:+.2}, limit {tol:.2}", cell.nva.value, cell.nva.std_error));
                    o.check((cell.percent - pct).abs() <= 2.0, format!("{name}, low long: {:.1}% vs {pct:.1}%", cell.percent));
                }
            }
        }
    }
    o
}

fn fva_consistency() -> Outcome {
    let mut o = Outcome::new();
    let points = fva_comparison(&base()).unwrap();
    for p in &points {
        let gap = (p.method_ii - p.method_iii).abs();
        let se = p.full.std_error;
        let near_full = |x: f64| (x - p.full.value).abs() <= 3.0 * se;
        o.check(
            gap <= 0.1 && near_full(p.method_ii) && near_full(p.method_iii),
            format!(
                "{:>3}bps: (i) {:+.3} (ii) {:+.3} (iii) {:+.3} full {:+.3} ({:.3})",
                p.spread_bps, p.method_i, p.method_ii, p.method_iii, p.full.value, se
            ),
        );
    }
    let last = points.last().unwrap();
    let dev = (last.method_i - last.method_ii).abs();
    o.check(dev > last.full.std_error, format!("300bps: |(i) − (ii)| = {dev:.3} exceeds SE {:.3}", last.full.std_error));
    o
}

fn pde_oracle() -> Outcome {
    let mut o = Outcome::new();
    let cfg = base();
    let (market, deal) = (cfg.spec.market, cfg.spec.deal);
    let grid = |n: usize, theta: f64| PdeGrid { s_min: 0.0, s_max: 400.0, n_s: n, n_t: n, theta };
    let f_hat = 0.02;
    let coeffs = PdeCoefficients::plain_call(1.0, deal.strike, market.vol, deal.maturity, f_hat, f_hat);
    let v = solve_predefault_pde(&coeffs, &grid(400, 1.0), market.spot).unwrap().value_at(market.spot);
    let closed = fva_methods(&market, &deal, f_hat).unwrap().method_ii + deal.clean_value(&market, 0.0, market.spot);
    o.check((v - closed).abs() <= 0.05, format!("f̂ = 200bps: PDE {v:.4} vs closed form {closed:.4}"));

    for theta in [1.0, 0.5] {
        let c = PdeCoefficients::plain_call(-1.0, deal.strike, market.vol, deal.maturity, 0.03, 0.01);
        let v: Vec<f64> = [100, 200, 400]
            .iter()
            .map(|&n| solve_predefault_pde(&c, &grid(n, theta), market.spot).unwrap().value_at(market.spot))
            .collect();
        let (d1, d2) = ((v[1] - v[0]).abs(), (v[2] - v[1]).abs());
        o.check(d2 < 0.5 * d1, format!("refinement, theta {theta}: changes {d1:.2e} then {d2:.2e}"));
    }

    let make = |_r: f64| PdeCoefficients::plain_call(-1.0, 80.0, 0.25, 3.0, 0.03, 0.01);
    let spread = check_r_invariance(make, &grid(200, 1.0), market.spot, &[0.005, 0.01, 0.02]).unwrap();
    o.check(spread == 0.0, format!("r in {{0.005, 0.01, 0.02}}: spread {spread:e}"));
    o
}

fn properties(table1: &FundingTable) -> Outcome {
    let mut o = Outcome::new();
    let cfg = base();

    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut reconciled = true;
    let mut nonnegative = true;
    let cases = 20_000;
    for _ in 0..cases {
        let eps = rng.random_range(-200.0..200.0);
        let c = rng.random_range(-200.0..200.0);
        let (li, lc): (f64, f64) = (rng.random(), rng.random());
        let rec = RecoverySpec { lgd_i: li, lgd_c: lc, lgd_coll_i: li * rng.random::<f64>(), lgd_coll_c: lc * rng.random::<f64>() };
        let (cva, dva) = cva_dva_integrands(eps, c, &rec);
        nonnegative &= cva >= 0.0 && dva >= 0.0;
        reconciled &= close_out_payment(FirstDefaulter::Counterparty, eps, c, &rec).unwrap() == eps - cva
            && close_out_payment(FirstDefaulter::Investor, eps, c, &rec).unwrap() == eps + dva;
    }
    o.check(reconciled, format!("close-out equals ε − CVA / ε + DVA integrand exactly on {cases} random cases"));
    o.check(nonnegative, format!("CVA and DVA integrands nonnegative on {cases} random cases"));

    let mut spec = cfg.spec.clone();
    spec.collateral.rehypothecation = true;
    spec.funding = FundingSpec { rate_borrow: 0.03, rate_lend: 0.01, ..spec.funding };
    let kept = price_deal(&spec, &EngineSettings { keep_states: true, replications: 1, ..cfg.engine.clone() }, cfg.n_paths, cfg.seed).unwrap();
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for run in &kept.runs {
        for st in &run.states {
            for i in 0..st.v_bar.len() {
                worst = worst.max((st.v_bar[i] - (st.funding[i] + st.collateral[i] + st.hedge[i])).abs());
                checked += 1;
            }
        }
    }
    o.check(worst == 0.0, format!("V̄ = F + C + H on {checked} solved states, largest gap {worst:e}"));

    for (name, d, target) in [("low", JointDefaultDistribution::d_low(), 0.21), ("high", JointDefaultDistribution::d_high(), 0.83)] {
        let tau = kendall_tau(&d).unwrap();
        o.check((tau - target).abs() <= 0.005, format!("Kendall tau of the {name} matrix {tau:.4} vs {target} ± 0.005"));
    }

    // short values fall with f⁺, long values rise with f⁻
    for (c, first, falling) in [(1, 0, true), (3, 0, true), (0, 5, false), (2, 5, false)] {
        for k in first..first + 4 {
            let (a, b) = (table1.rows[k].cells[c], table1.rows[k + 1].cells[c]);
            let step = b.value - a.value;
            let se = a.std_error.hypot(b.std_error);
            let moved = if falling { -step } else { step };
            o.check(
                moved > 2.0 * se,
                format!("{} {} → {}: step {step:+.2}, 2 SE {:.2}", COLUMN_NAMES[c], row_label(k), row_label(k + 1), 2.0 * se),
            );
        }
    }

    for rehyp in [false, true] {
        for (choice, position) in TABLE_COLUMNS {
            for (f_pos, f_neg) in [(0.03, 0.01), (0.01, 0.03)] {
                let mut s = cfg.spec.clone();
                s.credit = match choice {
                    DistributionChoice::High => JointDefaultDistribution::d_high(),
                    _ => JointDefaultDistribution::d_low(),
                };
                s.deal.position = position;
                s.collateral.rehypothecation = rehyp;
                s.funding = FundingSpec { rate_borrow: f_pos, rate_lend: f_neg, ..s.funding };
                let res = price_deal(&s, &cfg.engine, cfg.n_paths, cfg.seed).unwrap();
                let rep = decompose(&res, &s).unwrap();
                if !rep.identity_holds(3.0) {
                    o.check(
                        false,
                        format!(
                            "decomposition, {choice:?} {position:?} ({:.0}, {:.0})bps{}: residual {:+.3}, 3 SE {:.3}",
                            f_pos * 1e4,
                            f_neg * 1e4,
                            if rehyp { " rehyp" } else { "" },
                            rep.identity_residual,
                            3.0 * rep.identity_std_error
                        ),
                    );
                }
            }
        }
    }
    o.note("decomposition identity checked on 16 configurations".into());
    o
}

fn main() -> ExitCode {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let started = Instant::now();
    let cfg = base();
    let mut verdicts = Vec::new();
    let mut report = |n: usize, name: &str, o: Outcome| {
        println!("criterion {n}: {} {name}", if o.pass { "PASS" } else { "FAIL" });
        for l in &o.lines {
            println!("    {l}");
        }
        verdicts.push(o.pass);
    };

    report(1, "closed-form baseline", closed_form());
    report(2, "classical-limit Monte Carlo", classical_limit());
    let t1 = funding_table(&cfg, false).unwrap();
    report(3, "funding table without rehypothecation", compare_table(&t1, &TABLE1));
    let t2 = funding_table(&cfg, true).unwrap();
    let mut o4 = compare_table(&t2, &TABLE2);
    for (k, c) in [(4, 1), (8, 2)] {
        let cell = t2.rows[k].cells[c];
        o4.note(format!("spot check {} {}: {:.2} ({:.2}) vs {:.2} ({:.2})", row_label(k), COLUMN_NAMES[c], cell.value, cell.std_error, TABLE2[k][c].0, TABLE2[k][c].1));
    }
    report(4, "funding table with rehypothecation", o4);
    report(5, "non-linearity adjustment tables", nva_tables());
    report(6, "simplified funding adjustment methods", fva_consistency());
    report(7, "PDE oracle", pde_oracle());
    report(8, "property suite", properties(&t1));

    let passed = verdicts.iter().filter(|v| **v).count();
    println!("acceptance: {passed}/{} criteria passed in {:.0} s", verdicts.len(), started.elapsed().as_secs_f64());
    if strict && passed < verdicts.len() {
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
