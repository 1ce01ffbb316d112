//! CSV and text rendering of experiment output.
//!
//! CSV cells use six fixed decimals and carry a `_se` column beside every
//! Monte Carlo quantity (closed forms get `0.000000`). Nothing run-dependent
//! such as timings is written, so equal inputs give byte-identical files.

use std::fmt::Write as _;
use std::io::Write;

use crate::adjustments::Estimate;
use crate::credit::FirstDefaulter;
use crate::error::Result;
use crate::experiments::{ExperimentOutput, FundingTable, FvaPoint, NvaTable, ShortSweepPoint, SingleRun, Sweep};
use crate::lsmc::NewtonStats;

pub const NO_RESULTS: &str = "no results";

fn fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    // keep "-0.00" out of the output
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn csv6(v: f64) -> String {
    fixed(v, 6)
}

const COLUMN_NAMES: [&str; 4] = ["low_long", "low_short", "high_long", "high_short"];

pub fn write_csv<W: Write>(out: &ExperimentOutput, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    match out {
        ExperimentOutput::Table(t) => {
            let mut header = vec!["sweep".to_string(), "rate_bps".into(), "f_pos".into(), "f_neg".into()];
            for c in COLUMN_NAMES {
                header.push(c.into());
                header.push(format!("{c}_se"));
            }
            w.write_record(&header)?;
            for row in &t.rows {
                let mut rec = vec![sweep_id(row.sweep).to_string(), row.rate_bps.to_string(), csv6(row.f_pos), csv6(row.f_neg)];
                for e in &row.cells {
                    rec.push(csv6(e.value));
                    rec.push(csv6(e.std_error));
                }
                w.write_record(&rec)?;
            }
        }
        ExperimentOutput::Nva(t) => {
            let mut header = vec!["f_pos".to_string(), "f_neg".into(), "f_hat".into()];
            for c in COLUMN_NAMES {
                for suffix in ["nva", "nva_se", "nva_pct", "v_bar", "v_bar_se", "v_hat", "v_hat_se"] {
                    header.push(format!("{c}_{suffix}"));
                }
            }
            w.write_record(&header)?;
            for row in &t.rows {
                let mut rec = vec![csv6(row.f_pos), csv6(row.f_neg), csv6(row.f_hat)];
                for c in &row.cells {
                    for v in [c.nva.value, c.nva.std_error, c.percent, c.v_bar.value, c.v_bar.std_error, c.v_hat.value, c.v_hat.std_error] {
                        rec.push(csv6(v));
                    }
                }
                w.write_record(&rec)?;
            }
        }
        ExperimentOutput::Fig1(points) => {
            w.write_record([
                "spread_bps", "f_hat", "fva_i", "fva_i_se", "fva_ii", "fva_ii_se", "fva_iii", "fva_iii_se", "fva_full",
                "fva_full_se",
            ])?;
            for p in points {
                let zero = csv6(0.0);
                w.write_record([
                    p.spread_bps.to_string(),
                    csv6(p.f_hat),
                    csv6(p.method_i),
                    zero.clone(),
                    csv6(p.method_ii),
                    zero.clone(),
                    csv6(p.method_iii),
                    zero,
                    csv6(p.full.value),
                    csv6(p.full.std_error),
                ])?;
            }
        }
        ExperimentOutput::Fig3(points) | ExperimentOutput::Fig4(points) => {
            let q = if matches!(out, ExperimentOutput::Fig3(_)) { "value" } else { "fva" };
            w.write_record([
                "f_pos".to_string(),
                "f_neg".into(),
                format!("{q}_low"),
                format!("{q}_low_se"),
                format!("{q}_high"),
                format!("{q}_high_se"),
            ])?;
            for p in points {
                w.write_record([
                    csv6(p.f_pos),
                    csv6(p.f_neg),
                    csv6(p.low.value),
                    csv6(p.low.std_error),
                    csv6(p.high.value),
                    csv6(p.high.std_error),
                ])?;
            }
        }
        ExperimentOutput::Single(s) => {
            w.write_record(["quantity", "value", "std_error"])?;
            let r = &s.report;
            let rows: [(&str, Estimate); 9] = [
                ("v_bar", r.v_bar),
                ("v_clean", Estimate::exact(r.v_clean)),
                ("cva", r.cva),
                ("dva", r.dva),
                ("lva", r.lva),
                ("fva", r.fva),
                ("nva", s.nva.nva),
                ("v_hat", Estimate { value: s.nva.v_hat.price, std_error: s.nva.v_hat.std_error }),
                ("identity_residual", Estimate { value: r.identity_residual, std_error: r.identity_std_error }),
            ];
            for (name, e) in rows {
                w.write_record([name.to_string(), csv6(e.value), csv6(e.std_error)])?;
            }
            w.write_record(["nva_pct".to_string(), csv6(s.nva.percent), csv6(0.0)])?;
            w.write_record(["f_hat".to_string(), csv6(s.nva.f_hat), csv6(0.0)])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn sweep_id(s: Sweep) -> &'static str {
    match s {
        Sweep::Borrowing => "borrowing",
        Sweep::Lending => "lending",
    }
}

/// `value (se)` with two decimals, as in the printed tables.
fn with_se(e: &Estimate) -> String {
    format!("{} ({})", fixed(e.value, 2), fixed(e.std_error, 2))
}

fn newton_block(s: &mut String, stats: &NewtonStats) {
    let _ = writeln!(
        s,
        "Newton: {} solves, median {} / max {} iterations, {} kinks, {} failures",
        stats.solves,
        stats.median_iterations(),
        stats.max_iterations(),
        stats.kinks,
        stats.failures
    );
}

fn table_text(s: &mut String, t: &FundingTable) {
    let title = if t.rehypothecation {
        "Price impact of funding with default risk, collateralization and rehypothecation"
    } else {
        "Price impact of funding with default risk and collateralization"
    };
    let _ = writeln!(s, "{title}\n");
    let _ = writeln!(s, "{:<22}{:^32}{:^32}", "", "Default risk, low", "Default risk, high");
    let _ = writeln!(s, "{:<22}{:>16}{:>16}{:>16}{:>16}", "Funding", "Long", "Short", "Long", "Short");
    for sweep in [Sweep::Borrowing, Sweep::Lending] {
        let label = match sweep {
            Sweep::Borrowing => "Borrowing rate f+",
            Sweep::Lending => "Lending rate f−",
        };
        let _ = writeln!(s, "{label}");
        for row in t.rows.iter().filter(|r| r.sweep == sweep) {
            let _ = write!(s, "{:<22}", format!("   {} bps", row.rate_bps));
            for c in &row.cells {
                let _ = write!(s, "{:>16}", with_se(c));
            }
            s.push('\n');
        }
    }
    s.push('\n');
    newton_block(s, &t.newton);
}

fn nva_text(s: &mut String, t: &NvaTable) {
    let title = if t.rehypothecation {
        "NVA with default risk, collateralization and rehypothecation"
    } else {
        "NVA with default risk and collateralization"
    };
    let _ = writeln!(s, "{title}\n");
    let _ = writeln!(s, "{:<27}{:^44}{:^44}", "", "Default risk, low", "Default risk, high");
    let _ = writeln!(s, "{:>9}{:>9}{:>9}{:>22}{:>22}{:>22}{:>22}", "f+", "f−", "f^", "Long", "Short", "Long", "Short");
    for row in &t.rows {
        let _ = write!(
            s,
            "{:>9}{:>9}{:>9}",
            format!("{} bps", (row.f_pos * 1e4).round()),
            format!("{} bps", (row.f_neg * 1e4).round()),
            format!("{} bps", (row.f_hat * 1e4).round())
        );
        for c in &row.cells {
            let _ = write!(s, "{:>22}", format!("{} {}%", with_se(&c.nva), fixed(c.percent, 1)));
        }
        s.push('\n');
    }
    let _ = writeln!(s, "\nNVA = V̄ − V̂ with standard error in parentheses, then |NVA| as a percentage of V̄.");
    newton_block(s, &t.newton);
}

fn fig1_text(s: &mut String, points: &[FvaPoint]) {
    let _ = writeln!(s, "FVA of a long call, symmetric funding, no credit, no collateral\n");
    let _ = writeln!(s, "{:>12}{:>12}{:>12}{:>12}{:>20}", "spread bps", "FVA(i)", "FVA(ii)", "FVA(iii)", "full");
    for p in points {
        let _ = writeln!(
            s,
            "{:>12}{:>12}{:>12}{:>12}{:>20}",
            p.spread_bps,
            fixed(p.method_i, 4),
            fixed(p.method_ii, 4),
            fixed(p.method_iii, 4),
            format!("{} ({})", fixed(p.full.value, 4), fixed(p.full.std_error, 4))
        );
    }
    let _ = writeln!(
        s,
        "\nFVA(i), FVA(ii) and full are V(k) − V. FVA(iii) is (f^ − r) K e^(−rT) ∫ E[Φ(d2(s))] ds, positive for f^ > r,\n\
         which is the same orientation as FVA(ii) for a long call."
    );
}

fn sweep_text(s: &mut String, points: &[ShortSweepPoint], fva: bool) {
    let title = if fva {
        "FVA of a collateralized short call, f− = r, against funding at r"
    } else {
        "Value of a collateralized short call, f− = r"
    };
    let _ = writeln!(s, "{title}\n");
    let _ = writeln!(s, "{:>8}{:>20}{:>20}", "f+", "Default risk, low", "Default risk, high");
    for p in points {
        let _ = writeln!(s, "{:>8}{:>20}{:>20}", fixed(p.f_pos, 2), with_se(&p.low), with_se(&p.high));
    }
}

fn single_text(s: &mut String, run: &SingleRun) {
    let r = &run.report;
    let res = &run.result;
    let _ = writeln!(s, "Full price V̄ = {}  ({} paths x {} replications, seed {})\n", with_se(&r.v_bar), res.n_paths, res.replications.len(), res.seed);
    let _ = writeln!(s, "Decomposition");
    let rows = [
        ("V (clean)", Estimate::exact(r.v_clean)),
        ("− CVA", Estimate { value: -r.cva.value, ..r.cva }),
        ("+ DVA", r.dva),
        ("+ LVA", r.lva),
        ("+ FVA", r.fva),
    ];
    for (name, e) in rows {
        let _ = writeln!(s, "  {:<12}{:>20}", name, format!("{} ({})", fixed(e.value, 4), fixed(e.std_error, 4)));
    }
    let sum = r.v_clean - r.cva.value + r.dva.value + r.lva.value + r.fva.value;
    let _ = writeln!(s, "  {:<12}{:>20}", "= sum", fixed(sum, 4));
    let _ = writeln!(
        s,
        "  identity residual {} against combined SE {}\n",
        fixed(r.identity_residual, 6),
        fixed(r.identity_std_error, 6)
    );
    let _ = writeln!(
        s,
        "NVA at f^ = {}: {}  ({}% of V̄), V̂ = {}\n",
        fixed(run.nva.f_hat, 4),
        with_se(&run.nva.nva),
        fixed(run.nva.percent, 1),
        fixed(run.nva.v_hat.price, 2)
    );
    let _ = writeln!(s, "Scenarios");
    let _ = writeln!(s, "  {:>6}{:>6}{:>8}{:>10}{:>12}", "tau_I", "tau_C", "weight", "price", "C first");
    let label = |t: Option<f64>| t.map_or("nd".to_string(), |v| format!("{v}y"));
    for sc in &res.scenarios {
        let first = match sc.scenario.first_defaulter {
            FirstDefaulter::Simultaneous => fixed(sc.counterparty_first_share, 2),
            FirstDefaulter::Counterparty => "1".into(),
            FirstDefaulter::Investor | FirstDefaulter::None => "0".into(),
        };
        let _ = writeln!(
            s,
            "  {:>6}{:>6}{:>8}{:>10}{:>12}",
            label(sc.scenario.tau_i),
            label(sc.scenario.tau_c),
            fixed(sc.scenario.weight, 2),
            fixed(sc.price, 2),
            first
        );
    }
    let _ = writeln!(s, "\nDiagnostics");
    newton_block(s, &res.diagnostics.newton);
    let _ = writeln!(s, "mean regression R² {}", fixed(res.diagnostics.mean_r_squared, 4));
    let _ = writeln!(s, "pathwise standard error {}", fixed(res.diagnostics.pathwise_std_error, 4));
}

/// Aligned text report; [`NO_RESULTS`] when there is nothing to show.
pub fn render_text(out: &ExperimentOutput) -> String {
    if out.is_empty() {
        return format!("{NO_RESULTS}\n");
    }
    let mut s = String::new();
    match out {
        ExperimentOutput::Table(t) => table_text(&mut s, t),
        ExperimentOutput::Nva(t) => nva_text(&mut s, t),
        ExperimentOutput::Fig1(p) => fig1_text(&mut s, p),
        ExperimentOutput::Fig3(p) => sweep_text(&mut s, p, false),
        ExperimentOutput::Fig4(p) => sweep_text(&mut s, p, true),
        ExperimentOutput::Single(run) => single_text(&mut s, run),
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::TableRow;

    fn table() -> ExperimentOutput {
        let e = |v| Estimate { value: v, std_error: 0.15 };
        ExperimentOutput::Table(FundingTable {
            rehypothecation: false,
            rows: vec![
                TableRow { sweep: Sweep::Borrowing, rate_bps: 100, f_pos: 0.01, f_neg: 0.01, cells: [e(28.7), e(-28.72), e(29.06), e(-29.07)] },
                TableRow { sweep: Sweep::Lending, rate_bps: 200, f_pos: 0.01, f_neg: 0.02, cells: [e(31.37), e(-28.07), e(31.67), e(-28.46)] },
            ],
            newton: NewtonStats::default(),
        })
    }

    #[test]
    fn table_sections() {
        let text = render_text(&table());
        let b = text.find("Borrowing rate f+").unwrap();
        let l = text.find("Lending rate f−").unwrap();
        assert!(b < l);
        assert!(text.contains("28.70 (0.15)"));
        assert!(text.contains("-28.07 (0.15)"));
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(&table(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].split(',').count(), 12);
        assert!(lines[0].starts_with("sweep,rate_bps,f_pos,f_neg,low_long,low_long_se"));
        assert!(lines[1].starts_with("borrowing,100,0.010000,0.010000,28.700000,0.150000"));
    }

    #[test]
    fn empty_marker() {
        let out = ExperimentOutput::Fig3(Vec::new());
        assert_eq!(render_text(&out).trim(), NO_RESULTS);
    }

    #[test]
    fn negative_zero_is_plain() {
        assert_eq!(fixed(-0.0000001, 6), "0.000000");
        assert_eq!(fixed(-0.5, 1), "-0.5");
    }
}
