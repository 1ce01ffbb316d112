//! Deal terms and the adjusted cash-flow legs: margining, funding, close-out.

use crate::credit::FirstDefaulter;
use crate::error::{Error, Result};
use crate::market::{bs_call, MarketParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    Long,
    Short,
}

impl Position {
    pub fn sign(self) -> f64 {
        match self {
            Position::Long => 1.0,
            Position::Short => -1.0,
        }
    }
}

/// European call held long or short by the investor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DealSpec {
    pub position: Position,
    pub strike: f64,
    pub maturity: f64,
}

impl DealSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.strike > 0.0) || !(self.maturity > 0.0) {
            return Err(Error::Config(format!(
                "strike and maturity must be positive, got K={}, T={}",
                self.strike, self.maturity
            )));
        }
        Ok(())
    }

    /// Signed terminal cash flow to the investor.
    pub fn payoff(&self, spot: f64) -> f64 {
        self.position.sign() * (spot - self.strike).max(0.0)
    }

    /// Signed default-free price at time `t`.
    pub fn clean_value(&self, market: &MarketParams, t: f64, spot: f64) -> f64 {
        self.position.sign() * bs_call(spot, self.strike, market.rate, market.vol, self.maturity - t)
    }
}

/// How a period's carry on an account is turned into a cash flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CarryForm {
    /// `α (r − ξ)`, the rate-difference form.
    #[default]
    FirstOrder,
    /// `1 − P(t,t+α) / P^ξ(t,t+α)` with a simply compounded `P^ξ`.
    BondRatio,
}

/// Carry per unit of account over a period of length `alpha` at accrual rate `xi`.
pub fn carry_factor(form: CarryForm, r: f64, xi: f64, alpha: f64) -> f64 {
    match form {
        CarryForm::FirstOrder => alpha * (r - xi),
        CarryForm::BondRatio => 1.0 - (-r * alpha).exp() * (1.0 + alpha * xi),
    }
}

/// Carry factor when the accrual bond price `p_xi` is given directly.
pub fn carry_factor_from_bond(form: CarryForm, r: f64, p_xi: f64, alpha: f64) -> f64 {
    match form {
        CarryForm::FirstOrder => alpha * (r + p_xi.ln() / alpha),
        CarryForm::BondRatio => 1.0 - (-r * alpha).exp() / p_xi,
    }
}

/// `c⁺` for a positive account, `c⁻` otherwise (zero goes to the lending side).
pub fn effective_collateral_rate(c_pos: f64, c_neg: f64, collateral: f64) -> f64 {
    if collateral > 0.0 {
        c_pos
    } else {
        c_neg
    }
}

/// `f⁺` when borrowing (`F > 0`), `f⁻` otherwise.
pub fn effective_funding_rate(f_pos: f64, f_neg: f64, funding: f64) -> f64 {
    if funding > 0.0 {
        f_pos
    } else {
        f_neg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CollateralPolicy {
    /// Account equals the signed Black-Scholes value of the position.
    #[default]
    RiskFreePrice,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollateralSpec {
    pub policy: CollateralPolicy,
    pub rate_pos: f64,
    pub rate_neg: f64,
    pub rehypothecation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FundingPolicy {
    #[default]
    Treasury,
    /// Borrowing bond adjusted for the investor's own credit risk.
    Market,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundingSpec {
    pub rate_borrow: f64,
    pub rate_lend: f64,
    pub policy: FundingPolicy,
}

impl FundingSpec {
    pub fn symmetric(rate: f64) -> Self {
        Self { rate_borrow: rate, rate_lend: rate, policy: FundingPolicy::Treasury }
    }
}

/// Loss-given-default figures. The collateral LGDs apply to excess posted
/// collateral and only matter under rehypothecation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoverySpec {
    pub lgd_i: f64,
    pub lgd_c: f64,
    pub lgd_coll_i: f64,
    pub lgd_coll_c: f64,
}

impl RecoverySpec {
    pub fn validate(&self) -> Result<()> {
        let all = [self.lgd_i, self.lgd_c, self.lgd_coll_i, self.lgd_coll_c];
        if all.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Config("loss-given-default values must lie in [0, 1]".into()));
        }
        if self.lgd_coll_i > self.lgd_i || self.lgd_coll_c > self.lgd_c {
            return Err(Error::Config("collateral LGD cannot exceed the party's LGD".into()));
        }
        Ok(())
    }

    /// Collateral losses switched off unless the taker may reuse collateral.
    pub fn for_collateral(&self, rehypothecation: bool) -> Self {
        if rehypothecation {
            *self
        } else {
            Self { lgd_coll_i: 0.0, lgd_coll_c: 0.0, ..*self }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CloseOutConvention {
    /// Close-out at the default-free price.
    #[default]
    RiskFree,
    /// Close-out at the pre-default full price.
    Replacement,
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

fn neg(x: f64) -> f64 {
    x.min(0.0)
}

/// Collateralized CVA and DVA integrands `(Π_CVA, Π_DVA)`, both nonnegative.
pub fn cva_dva_integrands(eps: f64, collateral: f64, rec: &RecoverySpec) -> (f64, f64) {
    let cva = rec.lgd_c * pos(pos(eps) - pos(collateral)) + rec.lgd_coll_c * pos(neg(eps) - neg(collateral));
    let dva = -(rec.lgd_i * neg(neg(eps) - neg(collateral)) + rec.lgd_coll_i * neg(pos(eps) - pos(collateral)));
    (cva, dva)
}

/// On-default cash flow θ given who defaulted first, the close-out amount and
/// the collateral held just before default.
pub fn close_out_payment(first: FirstDefaulter, eps: f64, collateral: f64, rec: &RecoverySpec) -> Result<f64> {
    let (cva, dva) = cva_dva_integrands(eps, collateral, rec);
    match first {
        FirstDefaulter::Counterparty => Ok(eps - cva),
        FirstDefaulter::Investor => Ok(eps + dva),
        other => Err(Error::Precondition(format!("close-out needs a resolved defaulter, got {other:?}"))),
    }
}

/// Borrowing bond adjusted for the investor's credit: `P / (LGD·Q + R)`.
pub fn funding_dva_bond(p_borrow: f64, survival: f64, lgd_i: f64) -> Result<f64> {
    let denom = lgd_i * survival + (1.0 - lgd_i);
    if !(denom > 0.0) {
        return Err(Error::Domain("funding bond adjustment has a zero denominator".into()));
    }
    Ok(p_borrow / denom)
}

/// Collateral account under the configured policy.
pub fn collateral_policy_value(
    policy: CollateralPolicy,
    deal: &DealSpec,
    market: &MarketParams,
    t: f64,
    spot: f64,
) -> Result<f64> {
    if t > deal.maturity {
        return Err(Error::Domain(format!("collateral requested at {t} after maturity")));
    }
    Ok(match policy {
        CollateralPolicy::RiskFreePrice => deal.clean_value(market, t, spot),
        CollateralPolicy::None => 0.0,
    })
}

fn account_leg(
    accounts: &[f64],
    dates: &[f64],
    rate_pos: f64,
    rate_neg: f64,
    r: f64,
    form: CarryForm,
) -> Result<f64> {
    if dates.len() != accounts.len() + 1 {
        return Err(Error::Config(format!(
            "{} account values need {} dates, got {}",
            accounts.len(),
            accounts.len() + 1,
            dates.len()
        )));
    }
    let mut total = 0.0;
    for (k, &a) in accounts.iter().enumerate() {
        let alpha = dates[k + 1] - dates[k];
        let xi = if a > 0.0 { rate_pos } else { rate_neg };
        total += (-r * dates[k]).exp() * a * carry_factor(form, r, xi, alpha);
    }
    Ok(total)
}

/// Discounted margining cash flows `Σ D(0,t_k) C_k κ(c̃_k)` for the account
/// values at `dates[..n]`; the final entry of `dates` closes the last period.
pub fn margining_leg(
    collateral: &[f64],
    dates: &[f64],
    c_pos: f64,
    c_neg: f64,
    r: f64,
    form: CarryForm,
) -> Result<f64> {
    account_leg(collateral, dates, c_pos, c_neg, r, form)
}

/// Discounted funding cash flows `Σ D(0,t_j) F_j κ(f̃_j)`.
pub fn funding_leg(
    funding: &[f64],
    dates: &[f64],
    f_pos: f64,
    f_neg: f64,
    r: f64,
    form: CarryForm,
) -> Result<f64> {
    account_leg(funding, dates, f_pos, f_neg, r, form)
}
