//! Funding-rate sweeps, NVA tables and figure data built on [`price_deal`].
//!
//! Every run in one experiment uses the configured seed, so neighbouring cells
//! share random numbers and their differences are much less noisy than the
//! cells themselves.

use crate::adjustments::{
    decompose, default_symmetric_rate, fva_methods, nva_from_runs, paired_difference, AdjustmentReport, Estimate,
    NvaResult,
};
use crate::cashflows::{CloseOutConvention, CollateralPolicy, CollateralSpec, FundingSpec, Position};
use crate::config::{DistributionChoice, Experiment, RunConfig};
use crate::credit::JointDefaultDistribution;
use crate::error::Result;
use crate::lsmc::{price_deal, NewtonStats, PricingSpec, ValuationResult};

/// Sweep points of the funding tables, in basis points.
pub const TABLE_RATES_BPS: [u32; 5] = [0, 100, 200, 300, 400];
/// Symmetric spreads over the risk-free rate for the FVA method comparison.
pub const FIG1_SPREADS_BPS: [u32; 13] = [0, 25, 50, 75, 100, 125, 150, 175, 200, 225, 250, 275, 300];
pub const FIG3_BORROW_RATES: [f64; 4] = [0.01, 0.02, 0.03, 0.04];

/// Column order of every table: low long, low short, high long, high short.
pub const TABLE_COLUMNS: [(DistributionChoice, Position); 4] = [
    (DistributionChoice::Low, Position::Long),
    (DistributionChoice::Low, Position::Short),
    (DistributionChoice::High, Position::Long),
    (DistributionChoice::High, Position::Short),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// `f⁺` varies, `f⁻` fixed at the risk-free rate.
    Borrowing,
    /// `f⁻` varies, `f⁺` fixed at the risk-free rate.
    Lending,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub sweep: Sweep,
    pub rate_bps: u32,
    pub f_pos: f64,
    pub f_neg: f64,
    /// In [`TABLE_COLUMNS`] order.
    pub cells: [Estimate; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundingTable {
    pub rehypothecation: bool,
    pub rows: Vec<TableRow>,
    pub newton: NewtonStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NvaCell {
    pub nva: Estimate,
    pub percent: f64,
    pub v_bar: Estimate,
    pub v_hat: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NvaRow {
    pub f_pos: f64,
    pub f_neg: f64,
    pub f_hat: f64,
    pub cells: [NvaCell; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct NvaTable {
    pub rehypothecation: bool,
    pub rows: Vec<NvaRow>,
    pub newton: NewtonStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FvaPoint {
    pub spread_bps: u32,
    pub f_hat: f64,
    pub method_i: f64,
    pub method_ii: f64,
    pub method_iii: f64,
    /// `V̄(f̂, f̂) − V̄(r, r)` on common paths.
    pub full: Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShortSweepPoint {
    pub f_pos: f64,
    pub f_neg: f64,
    pub low: Estimate,
    pub high: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleRun {
    pub result: ValuationResult,
    pub report: AdjustmentReport,
    pub nva: NvaResult,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentOutput {
    Table(FundingTable),
    Nva(NvaTable),
    Fig1(Vec<FvaPoint>),
    /// Short position values.
    Fig3(Vec<ShortSweepPoint>),
    /// Short position FVA against funding at the risk-free rate.
    Fig4(Vec<ShortSweepPoint>),
    Single(Box<SingleRun>),
}

impl ExperimentOutput {
    pub fn is_empty(&self) -> bool {
        match self {
            ExperimentOutput::Table(t) => t.rows.is_empty(),
            ExperimentOutput::Nva(t) => t.rows.is_empty(),
            ExperimentOutput::Fig1(p) => p.is_empty(),
            ExperimentOutput::Fig3(p) | ExperimentOutput::Fig4(p) => p.is_empty(),
            ExperimentOutput::Single(_) => false,
        }
    }
}

fn estimate(r: &ValuationResult) -> Estimate {
    Estimate { value: r.price, std_error: r.std_error }
}

fn distribution(choice: DistributionChoice, custom: &JointDefaultDistribution) -> JointDefaultDistribution {
    match choice {
        DistributionChoice::Low => JointDefaultDistribution::d_low(),
        DistributionChoice::High => JointDefaultDistribution::d_high(),
        DistributionChoice::None => JointDefaultDistribution::none(),
        DistributionChoice::Custom => custom.clone(),
    }
}

/// The configured deal, collateralized at the risk-free price.
fn collateralized(cfg: &RunConfig, rehypothecation: bool) -> PricingSpec {
    PricingSpec {
        collateral: CollateralSpec { policy: CollateralPolicy::RiskFreePrice, rehypothecation, ..cfg.spec.collateral },
        ..cfg.spec.clone()
    }
}

fn variant(base: &PricingSpec, choice: DistributionChoice, position: Position, f_pos: f64, f_neg: f64) -> PricingSpec {
    let mut s = base.clone();
    s.credit = distribution(choice, &base.credit);
    s.deal.position = position;
    s.funding = FundingSpec { rate_borrow: f_pos, rate_lend: f_neg, ..base.funding };
    s
}

/// Runs one experiment.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentOutput> {
    Ok(match cfg.experiment {
        Experiment::Table1 => ExperimentOutput::Table(funding_table(cfg, false)?),
        Experiment::Table2 => ExperimentOutput::Table(funding_table(cfg, true)?),
        Experiment::Table3 => ExperimentOutput::Nva(nva_table(cfg, false)?),
        Experiment::Table4 => ExperimentOutput::Nva(nva_table(cfg, true)?),
        Experiment::Fig1 => ExperimentOutput::Fig1(fva_comparison(cfg)?),
        Experiment::Fig3 => ExperimentOutput::Fig3(short_sweep(cfg, false)?),
        Experiment::Fig4 => ExperimentOutput::Fig4(short_sweep(cfg, true)?),
        Experiment::Single => ExperimentOutput::Single(Box::new(single(cfg)?)),
    })
}

/// Borrowing then lending sweep over [`TABLE_RATES_BPS`], the other rate held
/// at the risk-free rate.
pub fn funding_table(cfg: &RunConfig, rehypothecation: bool) -> Result<FundingTable> {
    let base = collateralized(cfg, rehypothecation);
    let r = cfg.spec.market.rate;
    let mut newton = NewtonStats::default();
    // identical (f⁺, f⁻) pairs appear in both sweeps
    let mut done: Vec<((u64, u64), [Estimate; 4])> = Vec::new();
    let mut rows = Vec::new();
    for sweep in [Sweep::Borrowing, Sweep::Lending] {
        for bps in TABLE_RATES_BPS {
            let rate = bps as f64 / 10_000.0;
            let (f_pos, f_neg) = match sweep {
                Sweep::Borrowing => (rate, r),
                Sweep::Lending => (r, rate),
            };
            let key = (f_pos.to_bits(), f_neg.to_bits());
            let cells = match done.iter().find(|(k, _)| *k == key) {
                Some((_, c)) => *c,
                None => {
                    let mut cells = [Estimate::default(); 4];
                    for (cell, (choice, position)) in cells.iter_mut().zip(TABLE_COLUMNS) {
                        let run = price_deal(&variant(&base, choice, position, f_pos, f_neg), &cfg.engine, cfg.n_paths, cfg.seed)?;
                        newton.merge(&run.diagnostics.newton);
                        *cell = estimate(&run);
                    }
                    done.push((key, cells));
                    cells
                }
            };
            rows.push(TableRow { sweep, rate_bps: bps, f_pos, f_neg, cells });
        }
    }
    Ok(FundingTable { rehypothecation, rows, newton })
}

/// NVA with rates 300/100 and 100/300 bps around the symmetric rate.
pub fn nva_table(cfg: &RunConfig, rehypothecation: bool) -> Result<NvaTable> {
    let base = collateralized(cfg, rehypothecation);
    let mut newton = NewtonStats::default();
    let mut rows = Vec::new();
    // V̂ only depends on f̂ and the column, so rows sharing f̂ reuse it
    let mut hat_runs: Vec<((u64, usize), ValuationResult)> = Vec::new();
    for (f_pos, f_neg) in [(0.03, 0.01), (0.01, 0.03)] {
        let f_hat = cfg.symmetric_rate.unwrap_or_else(|| 0.5 * (f_pos + f_neg));
        let mut cells = [NvaCell { nva: Estimate::default(), percent: 0.0, v_bar: Estimate::default(), v_hat: Estimate::default() }; 4];
        for (k, (choice, position)) in TABLE_COLUMNS.into_iter().enumerate() {
            let v_bar = price_deal(&variant(&base, choice, position, f_pos, f_neg), &cfg.engine, cfg.n_paths, cfg.seed)?;
            newton.merge(&v_bar.diagnostics.newton);
            let key = (f_hat.to_bits(), k);
            let v_hat = match hat_runs.iter().find(|(h, _)| *h == key) {
                Some((_, run)) => run.clone(),
                None => {
                    let hat_spec =
                        PricingSpec { close_out: CloseOutConvention::RiskFree, ..variant(&base, choice, position, f_hat, f_hat) };
                    let run = price_deal(&hat_spec, &cfg.engine, cfg.n_paths, cfg.seed)?;
                    hat_runs.push((key, run.clone()));
                    run
                }
            };
            let nva = nva_from_runs(f_hat, v_bar, v_hat)?;
            cells[k] = NvaCell { nva: nva.nva, percent: nva.percent, v_bar: estimate(&nva.v_bar), v_hat: estimate(&nva.v_hat) };
        }
        rows.push(NvaRow { f_pos, f_neg, f_hat, cells });
    }
    Ok(NvaTable { rehypothecation, rows, newton })
}

/// Long position, no credit, no collateral: the three simplified FVAs next to
/// the full-method FVA at symmetric spreads.
pub fn fva_comparison(cfg: &RunConfig) -> Result<Vec<FvaPoint>> {
    let r = cfg.spec.market.rate;
    let mut base = cfg.spec.clone();
    base.credit = JointDefaultDistribution::none();
    base.collateral.policy = CollateralPolicy::None;
    base.deal.position = Position::Long;
    let at = |f: f64| PricingSpec { funding: FundingSpec { rate_borrow: f, rate_lend: f, ..base.funding }, ..base.clone() };
    let reference = price_deal(&at(r), &cfg.engine, cfg.n_paths, cfg.seed)?;
    FIG1_SPREADS_BPS
        .iter()
        .map(|&bps| {
            let f_hat = r + bps as f64 / 10_000.0;
            let m = fva_methods(&base.market, &base.deal, f_hat)?;
            let full = if bps == 0 {
                paired_difference(&reference, &reference)?
            } else {
                paired_difference(&price_deal(&at(f_hat), &cfg.engine, cfg.n_paths, cfg.seed)?, &reference)?
            };
            Ok(FvaPoint { spread_bps: bps, f_hat, method_i: m.method_i, method_ii: m.method_ii, method_iii: m.method_iii, full })
        })
        .collect()
}

/// Collateralized short position at `f⁺` in [`FIG3_BORROW_RATES`], `f⁻ = r`.
/// With `as_fva` each value is replaced by its difference to funding at `r`.
pub fn short_sweep(cfg: &RunConfig, as_fva: bool) -> Result<Vec<ShortSweepPoint>> {
    let base = collateralized(cfg, cfg.spec.collateral.rehypothecation);
    let r = cfg.spec.market.rate;
    let reference = [DistributionChoice::Low, DistributionChoice::High]
        .map(|d| price_deal(&variant(&base, d, Position::Short, r, r), &cfg.engine, cfg.n_paths, cfg.seed));
    let [ref_low, ref_high] = reference;
    let (ref_low, ref_high) = (ref_low?, ref_high?);
    FIG3_BORROW_RATES
        .iter()
        .map(|&f_pos| {
            let mut out = [Estimate::default(); 2];
            for (slot, (d, reference)) in out.iter_mut().zip([(DistributionChoice::Low, &ref_low), (DistributionChoice::High, &ref_high)]) {
                let run = if f_pos == r {
                    reference.clone()
                } else {
                    price_deal(&variant(&base, d, Position::Short, f_pos, r), &cfg.engine, cfg.n_paths, cfg.seed)?
                };
                *slot = if as_fva { paired_difference(&run, reference)? } else { estimate(&run) };
            }
            Ok(ShortSweepPoint { f_pos, f_neg: r, low: out[0], high: out[1] })
        })
        .collect()
}

/// The configured deal with its decomposition and NVA.
pub fn single(cfg: &RunConfig) -> Result<SingleRun> {
    let result = price_deal(&cfg.spec, &cfg.engine, cfg.n_paths, cfg.seed)?;
    let mut report = decompose(&result, &cfg.spec)?;
    let f_hat = cfg.symmetric_rate.unwrap_or_else(|| default_symmetric_rate(&cfg.spec.funding));
    let hat_spec = PricingSpec {
        funding: FundingSpec { rate_borrow: f_hat, rate_lend: f_hat, ..cfg.spec.funding },
        close_out: CloseOutConvention::RiskFree,
        ..cfg.spec.clone()
    };
    let v_hat = if hat_spec == cfg.spec { result.clone() } else { price_deal(&hat_spec, &cfg.engine, cfg.n_paths, cfg.seed)? };
    let nva = nva_from_runs(f_hat, result.clone(), v_hat)?;
    report.nva = Some(nva.nva);
    Ok(SingleRun { result, report, nva })
}
