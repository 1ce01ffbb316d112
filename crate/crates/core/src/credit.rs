//! Discrete joint default law of investor and counterparty.

use crate::error::{Error, Result};

/// Probability matrix over default times. Rows index the investor default
/// time, columns the counterparty default time; the last row/column is
/// "no default before the horizon".
#[derive(Debug, Clone, PartialEq)]
pub struct JointDefaultDistribution {
    times: Vec<f64>,
    probs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstDefaulter {
    Investor,
    Counterparty,
    /// Both default at the same date and the tie has not been broken yet.
    Simultaneous,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefaultScenario {
    pub tau_i: Option<f64>,
    pub tau_c: Option<f64>,
    pub tau: Option<f64>,
    pub first_defaulter: FirstDefaulter,
    pub weight: f64,
}

impl DefaultScenario {
    pub fn no_default(weight: f64) -> Self {
        Self { tau_i: None, tau_c: None, tau: None, first_defaulter: FirstDefaulter::None, weight }
    }

    pub fn is_simultaneous(&self) -> bool {
        matches!((self.tau_i, self.tau_c), (Some(a), Some(b)) if a == b)
    }
}

impl JointDefaultDistribution {
    /// Builds and validates a distribution. `probs` must be `(times.len()+1)` square.
    pub fn new(times: Vec<f64>, probs: Vec<Vec<f64>>) -> Result<Self> {
        let d = Self { times, probs };
        validate_distribution(&d)?;
        Ok(d)
    }

    /// Builds without validation, for checking foreign input.
    pub fn new_unchecked(times: Vec<f64>, probs: Vec<Vec<f64>>) -> Self {
        Self { times, probs }
    }

    /// Low-dependence matrix on {1y, 2y, no default}.
    pub fn d_low() -> Self {
        Self::new(
            vec![1.0, 2.0],
            vec![vec![0.01, 0.01, 0.03], vec![0.03, 0.01, 0.05], vec![0.07, 0.09, 0.70]],
        )
        .expect("valid built-in matrix")
    }

    /// High-dependence matrix on {1y, 2y, no default}.
    pub fn d_high() -> Self {
        Self::new(
            vec![1.0, 2.0],
            vec![vec![0.09, 0.01, 0.01], vec![0.03, 0.11, 0.01], vec![0.01, 0.03, 0.70]],
        )
        .expect("valid built-in matrix")
    }

    /// Point mass on no default.
    pub fn none() -> Self {
        Self { times: vec![], probs: vec![vec![1.0]] }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    fn time_of(&self, k: usize) -> Option<f64> {
        self.times.get(k).copied()
    }

    /// `P(τ_I > t)`.
    pub fn investor_survival(&self, t: f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(k, _)| self.time_of(*k).is_none_or(|s| s > t))
            .map(|(_, row)| row.iter().sum::<f64>())
            .sum()
    }

    /// `P(τ_C > t)`.
    pub fn counterparty_survival(&self, t: f64) -> f64 {
        let n = self.probs.len();
        (0..n)
            .filter(|&k| self.time_of(k).is_none_or(|s| s > t))
            .map(|k| self.probs.iter().map(|row| row[k]).sum::<f64>())
            .sum()
    }
}

pub fn validate_distribution(d: &JointDefaultDistribution) -> Result<()> {
    let n = d.times.len() + 1;
    if d.probs.len() != n || d.probs.iter().any(|r| r.len() != n) {
        return Err(Error::DistributionSum(format!(
            "expected a {n}x{n} matrix for {} default times",
            d.times.len()
        )));
    }
    if d.times.windows(2).any(|w| w[0] >= w[1]) || d.times.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::DistributionSum("default times must be positive and increasing".into()));
    }
    for (i, row) in d.probs.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::Distribution { row: i, col: j, reason: format!("entry {p} is negative or not finite") });
            }
        }
    }
    let total: f64 = d.probs.iter().flatten().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::DistributionSum(format!("entries sum to {total}, not 1")));
    }
    Ok(())
}

/// One scenario per nonzero cell. Diagonal cells with a finite time are
/// simultaneous defaults awaiting a tie-break.
pub fn enumerate_scenarios(d: &JointDefaultDistribution) -> Vec<DefaultScenario> {
    let mut out = Vec::new();
    for (i, row) in d.probs.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            let tau_i = d.time_of(i);
            let tau_c = d.time_of(j);
            let (tau, first) = match (tau_i, tau_c) {
                (None, None) => (None, FirstDefaulter::None),
                (Some(a), None) => (Some(a), FirstDefaulter::Investor),
                (None, Some(b)) => (Some(b), FirstDefaulter::Counterparty),
                (Some(a), Some(b)) if a < b => (Some(a), FirstDefaulter::Investor),
                (Some(a), Some(b)) if b < a => (Some(b), FirstDefaulter::Counterparty),
                (Some(a), Some(_)) => (Some(a), FirstDefaulter::Simultaneous),
            };
            out.push(DefaultScenario { tau_i, tau_c, tau, first_defaulter: first, weight: w });
        }
    }
    out
}

/// Breaks a simultaneous default: the counterparty is taken to default first when `u > 0.5`.
pub fn resolve_simultaneous(scenario: &DefaultScenario, u: f64) -> Result<DefaultScenario> {
    if !scenario.is_simultaneous() {
        return Err(Error::Precondition(format!(
            "tie-break requested for non-simultaneous defaults ({:?}, {:?})",
            scenario.tau_i, scenario.tau_c
        )));
    }
    let first = if u > 0.5 { FirstDefaulter::Counterparty } else { FirstDefaulter::Investor };
    Ok(DefaultScenario { first_defaulter: first, ..*scenario })
}

/// Population Kendall tau-b of the discrete joint law, with no default ranked
/// after every finite default time.
pub fn kendall_tau(d: &JointDefaultDistribution) -> Result<f64> {
    let n = d.probs.len();
    let row: Vec<f64> = d.probs.iter().map(|r| r.iter().sum()).collect();
    let col: Vec<f64> = (0..n).map(|j| d.probs.iter().map(|r| r[j]).sum()).collect();
    let ties_i: f64 = row.iter().map(|p| p * p).sum();
    let ties_c: f64 = col.iter().map(|p| p * p).sum();
    if ties_i >= 1.0 - 1e-15 || ties_c >= 1.0 - 1e-15 {
        return Err(Error::UndefinedCorrelation("a marginal has a single outcome".into()));
    }
    let mut concordant = 0.0;
    let mut discordant = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in (i + 1)..n {
                for l in 0..n {
                    let p = d.probs[i][j] * d.probs[k][l];
                    if l > j {
                        concordant += p;
                    } else if l < j {
                        discordant += p;
                    }
                }
            }
        }
    }
    // each unordered pair counted once above; probabilities of ordered pairs are twice that
    let diff = 2.0 * (concordant - discordant);
    Ok(diff / ((1.0 - ties_i) * (1.0 - ties_c)).sqrt())
}
