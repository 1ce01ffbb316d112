//! Run configuration: sectioned `key = value` text plus a labeled matrix block.
//!
//! ```text
//! [market]
//! spot = 100
//! rate = 0.01
//! vol = 0.25
//!
//! [deal]
//! position = long        # long | short
//! strike = 80
//! maturity = 3
//!
//! [credit]
//! distribution = custom  # low | high | none | custom
//!
//! [matrix]
//!       1y    2y    nd
//! 1y   0.01  0.01  0.03
//! 2y   0.03  0.01  0.05
//! nd   0.07  0.09  0.70
//! ```
//!
//! Required: `market.spot`, `market.rate`, `market.vol`, `deal.strike`,
//! `deal.maturity`. Everything else has a default:
//!
//! | key | default |
//! |-----|---------|
//! | `deal.position` | `long` |
//! | `funding.borrow`, `funding.lend` | `market.rate` |
//! | `funding.policy` | `treasury` (or `market`) |
//! | `funding.symmetric_rate` | midpoint of borrow and lend |
//! | `collateral.policy` | `risk_free` (or `none`) |
//! | `collateral.rate_pos`, `collateral.rate_neg` | `market.rate` |
//! | `collateral.rehypothecation` | `false` |
//! | `credit.distribution` | `low`, or `custom` when a `[matrix]` is given |
//! | `credit.lgd_investor`, `credit.lgd_counterparty` | `0.5` |
//! | `credit.lgd_coll_investor`, `credit.lgd_coll_counterparty` | the party's LGD |
//! | `credit.close_out` | `risk_free` (or `replacement`) |
//! | `engine.steps_per_year` | `52` |
//! | `engine.basis_order` | `2` |
//! | `engine.hedge_mode` | `full` (or `risk_free`) |
//! | `engine.hedge_estimator` | `regression` (or `pathwise`) |
//! | `engine.carry` | `first_order` (or `bond`) |
//! | `engine.control_variate` | `true` |
//! | `engine.antithetic` | `false` |
//! | `engine.replications` | `5` |
//! | `engine.newton_tol`, `engine.newton_max_iter` | `1e-8`, `50` |
//! | `engine.max_failure_fraction` | `0.001` |
//! | `run.experiment` | `single` |
//! | `run.paths`, `run.seed` | `1000`, `1` |
//!
//! Matrix labels are `<years>y` or `nd`; rows index the investor, columns the
//! counterparty, and `nd` must come last.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::cashflows::{
    CarryForm, CloseOutConvention, CollateralPolicy, CollateralSpec, DealSpec, FundingPolicy, FundingSpec, Position,
    RecoverySpec,
};
use crate::credit::{validate_distribution, JointDefaultDistribution};
use crate::error::{Error, Result};
use crate::lsmc::{EngineSettings, HedgeEstimator, HedgeMode, PricingSpec};
use crate::market::MarketParams;
use crate::newton::NewtonOptions;
use crate::regression::RegressionBasis;

const REQUIRED: [&str; 5] = ["market.spot", "market.rate", "market.vol", "deal.strike", "deal.maturity"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Experiment {
    Table1,
    Table2,
    Table3,
    Table4,
    Fig1,
    Fig3,
    Fig4,
    #[default]
    Single,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Table1,
        Experiment::Table2,
        Experiment::Table3,
        Experiment::Table4,
        Experiment::Fig1,
        Experiment::Fig3,
        Experiment::Fig4,
        Experiment::Single,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::Table1 => "table1",
            Experiment::Table2 => "table2",
            Experiment::Table3 => "table3",
            Experiment::Table4 => "table4",
            Experiment::Fig1 => "fig1",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::Single => "single",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistributionChoice {
    #[default]
    Low,
    High,
    None,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: PricingSpec,
    pub engine: EngineSettings,
    pub distribution: DistributionChoice,
    /// Symmetric rate for NVA; `None` means the borrow/lend midpoint.
    pub symmetric_rate: Option<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub experiment: Experiment,
}

impl Default for RunConfig {
    /// S₀ = 100, K = 80, T = 3, r = 1%, σ = 25%, LGD = 50%, D_low.
    fn default() -> Self {
        load_config_str(PAPER_DEFAULTS).expect("built-in configuration parses")
    }
}

pub const PAPER_DEFAULTS: &str = "\
[market]
spot = 100
rate = 0.01
vol = 0.25

[deal]
position = long
strike = 80
maturity = 3
";

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    load_config_str(&text)
}

struct Entry {
    value: String,
    line: usize,
}

struct MatrixBlock {
    header: Option<(Vec<String>, usize)>,
    rows: Vec<(String, Vec<String>, usize)>,
    line: usize,
}

struct Raw {
    entries: BTreeMap<String, Entry>,
    matrix: Option<MatrixBlock>,
    last_line: usize,
}

const SECTIONS: [&str; 8] = ["market", "deal", "funding", "collateral", "credit", "matrix", "engine", "run"];

fn tokenize(text: &str) -> Result<Raw> {
    let mut entries = BTreeMap::new();
    let mut matrix: Option<MatrixBlock> = None;
    let mut section: Option<String> = None;
    let mut last_line = 0;
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse { line, msg: format!("malformed section header '{content}'") })?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(Error::Parse { line, msg: format!("unknown section [{name}]") });
            }
            if name == "matrix" {
                if matrix.is_some() {
                    return Err(Error::Parse { line, msg: "duplicate [matrix] section".into() });
                }
                matrix = Some(MatrixBlock { header: None, rows: Vec::new(), line });
            }
            section = Some(name.to_string());
            continue;
        }
        let Some(sec) = section.as_deref() else {
            return Err(Error::Parse { line, msg: "entry before any section header".into() });
        };
        if sec == "matrix" {
            let block = matrix.as_mut().expect("matrix block opened with its header");
            let tokens: Vec<String> = content.split_whitespace().map(str::to_string).collect();
            if block.header.is_none() {
                block.header = Some((tokens, line));
            } else {
                let (label, values) = tokens.split_first().expect("non-empty line");
                block.rows.push((label.clone(), values.to_vec(), line));
            }
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::Parse { line, msg: format!("expected 'key = value', got '{content}'") })?;
        let full = format!("{sec}.{}", key.trim());
        let value = value.trim().to_string();
        if value.is_empty() {
            return Err(Error::Parse { line, msg: format!("empty value for '{full}'") });
        }
        if let Some(prev) = entries.insert(full.clone(), Entry { value, line }) {
            return Err(Error::Parse { line, msg: format!("'{full}' already set on line {}", prev.line) });
        }
    }
    Ok(Raw { entries, matrix, last_line })
}

fn parse_label(label: &str, line: usize) -> Result<Option<f64>> {
    if label == "nd" {
        return Ok(None);
    }
    label
        .strip_suffix('y')
        .and_then(|t| t.parse::<f64>().ok())
        .filter(|t| t.is_finite() && *t > 0.0)
        .map(Some)
        .ok_or_else(|| Error::Parse { line, msg: format!("bad matrix label '{label}' (use e.g. 1y, 2.5y or nd)") })
}

fn parse_matrix(block: &MatrixBlock) -> Result<JointDefaultDistribution> {
    let (header, hline) = block
        .header
        .as_ref()
        .ok_or_else(|| Error::Parse { line: block.line, msg: "[matrix] has no header row".into() })?;
    let mut times = Vec::new();
    for (k, label) in header.iter().enumerate() {
        match parse_label(label, *hline)? {
            Some(t) if k + 1 < header.len() => {
                if times.last().is_some_and(|&p| p >= t) {
                    return Err(Error::Parse { line: *hline, msg: "matrix times must increase".into() });
                }
                times.push(t);
            }
            None if k + 1 == header.len() => {}
            _ => return Err(Error::Parse { line: *hline, msg: "the 'nd' label must come last, exactly once".into() }),
        }
    }
    if block.rows.len() != header.len() {
        return Err(Error::Parse {
            line: block.line,
            msg: format!("[matrix] has {} rows for {} columns", block.rows.len(), header.len()),
        });
    }
    let mut probs = Vec::with_capacity(header.len());
    for (k, (label, values, line)) in block.rows.iter().enumerate() {
        if label != &header[k] {
            return Err(Error::Parse { line: *line, msg: format!("row label '{label}' should be '{}'", header[k]) });
        }
        if values.len() != header.len() {
            return Err(Error::Parse {
                line: *line,
                msg: format!("row '{label}' has {} entries, expected {}", values.len(), header.len()),
            });
        }
        let row = values
            .iter()
            .map(|v| v.parse::<f64>().map_err(|_| Error::Parse { line: *line, msg: format!("'{v}' is not a number") }))
            .collect::<Result<Vec<_>>>()?;
        probs.push(row);
    }
    let d = JointDefaultDistribution::new_unchecked(times, probs);
    validate_distribution(&d)?;
    Ok(d)
}

struct Fields {
    raw: BTreeMap<String, Entry>,
    last_line: usize,
}

impl Fields {
    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.raw.remove(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Parse { line: e.line, msg: format!("invalid value '{}' for '{key}'", e.value) }),
        }
    }

    fn num(&mut self, key: &str) -> Result<Option<f64>> {
        let line = self.raw.get(key).map(|e| e.line);
        match self.take::<f64>(key)? {
            Some(v) if !v.is_finite() => Err(Error::Parse { line: line.unwrap_or(0), msg: format!("'{key}' must be finite") }),
            v => Ok(v),
        }
    }

    fn positive(&mut self, key: &str) -> Result<f64> {
        let line = self.line_of(key);
        match self.num(key)? {
            Some(v) if v > 0.0 => Ok(v),
            _ => Err(Error::Parse { line, msg: format!("'{key}' must be positive") }),
        }
    }

    fn choice<T: Copy>(&mut self, key: &str, options: &[(&str, T)]) -> Result<Option<T>> {
        let Some(e) = self.raw.remove(key) else { return Ok(None) };
        options.iter().find(|(name, _)| *name == e.value).map(|(_, v)| Some(*v)).ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            Error::Parse { line: e.line, msg: format!("'{key}' must be one of {}, got '{}'", names.join(" | "), e.value) }
        })
    }

    fn line_of(&self, key: &str) -> usize {
        self.raw.get(key).map_or(self.last_line.max(1), |e| e.line)
    }
}

pub fn load_config_str(text: &str) -> Result<RunConfig> {
    let Raw { entries, matrix, last_line } = tokenize(text)?;
    let missing: Vec<&str> = REQUIRED.iter().copied().filter(|k| !entries.contains_key(*k)).collect();
    if !missing.is_empty() {
        return Err(Error::Parse {
            line: last_line.max(1),
            msg: format!("missing required keys: {}", missing.join(", ")),
        });
    }
    let mut f = Fields { raw: entries, last_line };

    let market = MarketParams {
        spot: f.positive("market.spot")?,
        rate: f.num("market.rate")?.unwrap_or_default(),
        vol: f.positive("market.vol")?,
    };
    let deal = DealSpec {
        position: f.choice("deal.position", &[("long", Position::Long), ("short", Position::Short)])?.unwrap_or(Position::Long),
        strike: f.positive("deal.strike")?,
        maturity: f.positive("deal.maturity")?,
    };

    let funding = FundingSpec {
        rate_borrow: f.num("funding.borrow")?.unwrap_or(market.rate),
        rate_lend: f.num("funding.lend")?.unwrap_or(market.rate),
        policy: f
            .choice("funding.policy", &[("treasury", FundingPolicy::Treasury), ("market", FundingPolicy::Market)])?
            .unwrap_or_default(),
    };
    let symmetric_rate = f.num("funding.symmetric_rate")?;

    let collateral = CollateralSpec {
        policy: f
            .choice("collateral.policy", &[("risk_free", CollateralPolicy::RiskFreePrice), ("none", CollateralPolicy::None)])?
            .unwrap_or_default(),
        rate_pos: f.num("collateral.rate_pos")?.unwrap_or(market.rate),
        rate_neg: f.num("collateral.rate_neg")?.unwrap_or(market.rate),
        rehypothecation: f.take("collateral.rehypothecation")?.unwrap_or(false),
    };

    let dist_line = f.line_of("credit.distribution");
    let distribution = f
        .choice(
            "credit.distribution",
            &[
                ("low", DistributionChoice::Low),
                ("high", DistributionChoice::High),
                ("none", DistributionChoice::None),
                ("custom", DistributionChoice::Custom),
            ],
        )?
        .unwrap_or(if matrix.is_some() { DistributionChoice::Custom } else { DistributionChoice::Low });
    let credit = match (distribution, &matrix) {
        (DistributionChoice::Custom, Some(block)) => parse_matrix(block)?,
        (DistributionChoice::Custom, None) => {
            return Err(Error::Parse { line: dist_line, msg: "custom distribution needs a [matrix] section".into() })
        }
        (_, Some(block)) => {
            return Err(Error::Parse { line: block.line, msg: "[matrix] is only read with distribution = custom".into() })
        }
        (DistributionChoice::Low, None) => JointDefaultDistribution::d_low(),
        (DistributionChoice::High, None) => JointDefaultDistribution::d_high(),
        (DistributionChoice::None, None) => JointDefaultDistribution::none(),
    };

    let rec_line = f.line_of("credit.lgd_investor");
    let lgd_i = f.num("credit.lgd_investor")?.unwrap_or(0.5);
    let lgd_c = f.num("credit.lgd_counterparty")?.unwrap_or(0.5);
    let recovery = RecoverySpec {
        lgd_i,
        lgd_c,
        lgd_coll_i: f.num("credit.lgd_coll_investor")?.unwrap_or(lgd_i),
        lgd_coll_c: f.num("credit.lgd_coll_counterparty")?.unwrap_or(lgd_c),
    };
    recovery.validate().map_err(|e| Error::Parse { line: rec_line, msg: e.to_string() })?;
    let close_out = f
        .choice(
            "credit.close_out",
            &[("risk_free", CloseOutConvention::RiskFree), ("replacement", CloseOutConvention::Replacement)],
        )?
        .unwrap_or_default();

    let defaults = EngineSettings::default();
    let engine_line = f.line_of("engine.steps_per_year");
    let engine = EngineSettings {
        steps_per_year: f.take("engine.steps_per_year")?.unwrap_or(defaults.steps_per_year),
        basis: RegressionBasis { order: f.take("engine.basis_order")?.unwrap_or(defaults.basis.order) },
        hedge_mode: f
            .choice("engine.hedge_mode", &[("full", HedgeMode::Full), ("risk_free", HedgeMode::RiskFree)])?
            .unwrap_or_default(),
        hedge_estimator: f
            .choice(
                "engine.hedge_estimator",
                &[("regression", HedgeEstimator::Regression), ("pathwise", HedgeEstimator::Pathwise)],
            )?
            .unwrap_or_default(),
        carry: f
            .choice("engine.carry", &[("first_order", CarryForm::FirstOrder), ("bond", CarryForm::BondRatio)])?
            .unwrap_or_default(),
        newton: NewtonOptions {
            tol: f.num("engine.newton_tol")?.unwrap_or(defaults.newton.tol),
            max_iter: f.take("engine.newton_max_iter")?.unwrap_or(defaults.newton.max_iter),
            ..defaults.newton
        },
        control_variate: f.take("engine.control_variate")?.unwrap_or(defaults.control_variate),
        antithetic: f.take("engine.antithetic")?.unwrap_or(defaults.antithetic),
        replications: f.take("engine.replications")?.unwrap_or(defaults.replications),
        max_failure_fraction: f.num("engine.max_failure_fraction")?.unwrap_or(defaults.max_failure_fraction),
        keep_states: false,
    };
    if engine.steps_per_year == 0 || engine.replications == 0 || engine.basis.order == 0 || !(engine.newton.tol > 0.0) {
        return Err(Error::Parse {
            line: engine_line,
            msg: "steps_per_year, replications and basis_order must be positive, newton_tol > 0".into(),
        });
    }

    let experiment = f.take("run.experiment")?.unwrap_or_default();
    let paths_line = f.line_of("run.paths");
    let n_paths: usize = f.take("run.paths")?.unwrap_or(1000);
    if n_paths < 2 {
        return Err(Error::Parse { line: paths_line, msg: "run.paths must be at least 2".into() });
    }
    let seed = f.take("run.seed")?.unwrap_or(1);

    if let Some((key, e)) = f.raw.iter().min_by_key(|(_, e)| e.line) {
        return Err(Error::Parse { line: e.line, msg: format!("unknown key '{key}'") });
    }

    let spec = PricingSpec { market, deal, funding, collateral, recovery, close_out, credit };
    spec.validate()?;
    Ok(RunConfig { spec, engine, distribution, symmetric_rate, n_paths, seed, experiment })
}
