//! Backward-iterative least-squares Monte Carlo for the full deal value.
//!
//! Each default scenario is priced on its own truncated grid. At every step
//! the conditional expectation of the discounted continuation value plus cash
//! flows is regressed on the spot, and the funding account `F`, hedge `H` and
//! value `V̄` are then solved path by path. Funding direction picks the rate:
//! `F > 0` borrows at `f⁺`, otherwise the account lends at `f⁻`.
//!
//! The hedge ratio is the cross-path least-squares projection of the
//! forward-difference ratio `(V̄_{j+1} − g V̄_j)/(X_{j+1} − g X_j)`, i.e. the
//! minimum-variance ratio given `X_j`, where `g = 1/P^{f̃}` is the one-period
//! growth of a funded position. The same-path ratio is available as
//! [`HedgeEstimator::Pathwise`].
//!
//! Prices come from the realized recursion along each path: the policy
//! `(f̃, H)` is taken from the solved system, and the realized continuation
//! replaces the fitted one. The signed Black-Scholes value of the position is
//! used as a control variate; since its discounted value is a martingale, the
//! regression only has to explain the residual.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cashflows::{
    carry_factor, carry_factor_from_bond, close_out_payment, collateral_policy_value, cva_dva_integrands,
    effective_collateral_rate, funding_dva_bond, CarryForm, CloseOutConvention, CollateralPolicy, CollateralSpec,
    DealSpec, FundingPolicy, FundingSpec, RecoverySpec,
};
use crate::credit::{enumerate_scenarios, resolve_simultaneous, DefaultScenario, FirstDefaulter, JointDefaultDistribution};
use crate::error::{Error, Result};
use crate::market::{bs_call_delta, simulate_gbm_stream, substream_seed, MarketParams, PathSet, TimeGrid};
use crate::newton::{newton_solve, NewtonOptions};
use crate::regression::{r_squared, RegressionBasis, Regressor};

/// Stream id for the simultaneous-default tie-break draws.
const TIE_BREAK_STREAM: u64 = 0x7469_6562;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HedgeMode {
    /// Solve the coupled funding/hedging system.
    #[default]
    Full,
    /// Hedge only the default-free price with its Black-Scholes delta.
    RiskFree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HedgeEstimator {
    /// Least-squares projection of the forward-difference ratio on the spot.
    #[default]
    Regression,
    /// Forward-difference ratio on the same path.
    Pathwise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineSettings {
    pub steps_per_year: usize,
    pub basis: RegressionBasis,
    pub hedge_mode: HedgeMode,
    pub hedge_estimator: HedgeEstimator,
    pub carry: CarryForm,
    pub newton: NewtonOptions,
    pub control_variate: bool,
    pub antithetic: bool,
    /// Independent repetitions of the N-path estimator; their spread gives the standard error.
    pub replications: usize,
    /// Largest tolerated share of Newton failures in one step.
    pub max_failure_fraction: f64,
    /// Keep every solved state of the first replication (memory heavy).
    pub keep_states: bool,
}

impl Default for EngineSettings {
    fn default() -> Self {
        Self {
            steps_per_year: 52,
            basis: RegressionBasis::default(),
            hedge_mode: HedgeMode::Full,
            hedge_estimator: HedgeEstimator::Regression,
            carry: CarryForm::FirstOrder,
            newton: NewtonOptions::default(),
            control_variate: true,
            antithetic: false,
            replications: 5,
            max_failure_fraction: 0.001,
            keep_states: false,
        }
    }
}

/// Everything that defines the deal being priced.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingSpec {
    pub market: MarketParams,
    pub deal: DealSpec,
    pub funding: FundingSpec,
    pub collateral: CollateralSpec,
    pub recovery: RecoverySpec,
    pub close_out: CloseOutConvention,
    pub credit: JointDefaultDistribution,
}

impl PricingSpec {
    pub fn validate(&self) -> Result<()> {
        self.market.validate()?;
        self.deal.validate()?;
        self.recovery.validate()?;
        crate::credit::validate_distribution(&self.credit)?;
        for r in [self.funding.rate_borrow, self.funding.rate_lend, self.collateral.rate_pos, self.collateral.rate_neg] {
            if !r.is_finite() {
                return Err(Error::Config("rates must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Solved accounts on one date, one entry per path.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BackwardState {
    pub v_bar: Vec<f64>,
    pub funding: Vec<f64>,
    pub hedge: Vec<f64>,
    pub collateral: Vec<f64>,
    /// Effective funding rate applied over the following period.
    pub funding_rate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NewtonStats {
    /// `histogram[k]` counts solves that took `k` Newton updates.
    pub histogram: Vec<usize>,
    pub failures: usize,
    /// Solves where neither funding branch is self-consistent and `F = 0` is taken.
    pub kinks: usize,
    pub solves: usize,
}

impl NewtonStats {
    fn record(&mut self, iterations: usize) {
        if self.histogram.len() <= iterations {
            self.histogram.resize(iterations + 1, 0);
        }
        self.histogram[iterations] += 1;
        self.solves += 1;
    }

    pub fn merge(&mut self, other: &NewtonStats) {
        if self.histogram.len() < other.histogram.len() {
            self.histogram.resize(other.histogram.len(), 0);
        }
        for (a, b) in self.histogram.iter_mut().zip(&other.histogram) {
            *a += b;
        }
        self.failures += other.failures;
        self.kinks += other.kinks;
        self.solves += other.solves;
    }

    pub fn max_iterations(&self) -> usize {
        self.histogram.iter().rposition(|&c| c > 0).unwrap_or(0)
    }

    pub fn median_iterations(&self) -> usize {
        let half = self.histogram.iter().sum::<usize>().div_ceil(2);
        let mut acc = 0;
        for (k, &c) in self.histogram.iter().enumerate() {
            acc += c;
            if acc >= half && c > 0 {
                return k;
            }
        }
        0
    }
}

/// Constants shared by every step of one scenario run.
#[derive(Debug, Clone)]
pub struct StepContext {
    pub market: MarketParams,
    pub deal: DealSpec,
    pub rehypothecation: bool,
    pub c_pos: f64,
    pub c_neg: f64,
    pub f_neg: f64,
    pub basis: RegressionBasis,
    pub hedge_mode: HedgeMode,
    pub hedge_estimator: HedgeEstimator,
    pub carry: CarryForm,
    pub newton: NewtonOptions,
    pub control_variate: bool,
    pub max_failure_fraction: f64,
}

/// Data for one step `t_j → t_{j+1}`, one entry per path.
#[derive(Debug, Clone, Copy)]
pub struct StepInputs<'a> {
    pub t: f64,
    pub t_next: f64,
    pub x: &'a [f64],
    pub x_next: &'a [f64],
    /// Solved value at `t_{j+1}` (zero at the end of the scenario grid).
    pub v_next: &'a [f64],
    /// Realized value at `t_{j+1}`.
    pub v_next_realized: &'a [f64],
    /// Cash flow paid at `t_{j+1}` (payoff or close-out).
    pub cash_next: &'a [f64],
    /// Collateral account at `t_j`.
    pub collateral: &'a [f64],
    /// Borrowing bond price over the step (credit-adjusted under market funding).
    pub p_borrow: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub state: BackwardState,
    pub v_realized: Vec<f64>,
    /// Realized funding account, used for the funding adjustment.
    pub funding_realized: Vec<f64>,
    /// `κ(f̃)` per path.
    pub funding_carry: Vec<f64>,
    /// Margining cash flow at `t_j` per path.
    pub margin_cash: Vec<f64>,
    pub stats: NewtonStats,
    pub r_squared: f64,
}

#[derive(Clone, Copy)]
struct Branch {
    rate: f64,
    q: f64,
    g: f64,
}

/// `H = α + β V̄` for a fixed branch.
#[derive(Clone, Copy)]
struct HedgeLine {
    alpha: f64,
    beta: f64,
}

impl StepContext {
    fn branch(&self, rate: f64, dt: f64) -> Branch {
        let kappa = carry_factor(self.carry, self.market.rate, rate, dt);
        self.branch_from_kappa(rate, kappa, dt)
    }

    fn branch_from_kappa(&self, rate: f64, kappa: f64, dt: f64) -> Branch {
        let q = 1.0 / (1.0 - kappa);
        let p = (-self.market.rate * dt).exp();
        Branch { rate, q, g: 1.0 / (q * p) }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Conditional expectations of several targets given the spot cross-section.
/// A constant cross-section (the first step) collapses to sample means.
struct Projector {
    reg: Option<Regressor>,
}

impl Projector {
    fn new(x: &[f64], scale: f64, basis: RegressionBasis) -> Result<Self> {
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo <= 1e-12 * scale {
            return Ok(Self { reg: None });
        }
        let xs: Vec<f64> = x.iter().map(|v| v / scale).collect();
        Ok(Self { reg: Some(Regressor::new(&xs, basis)?) })
    }

    fn project(&self, y: &[f64]) -> Vec<f64> {
        match &self.reg {
            Some(r) => r.fitted(y),
            None => vec![mean(y); y.len()],
        }
    }
}

/// Solves one linear branch in closed form: `F = q(E − C − H)`, `H = α + βV̄`, `V̄ = F + C + H`.
fn solve_branch(b: &Branch, l: &HedgeLine, e: f64, cr: f64) -> (f64, f64) {
    let h = (l.alpha + l.beta * (b.q * e + (1.0 - b.q) * cr)) / (1.0 - l.beta * (1.0 - b.q));
    (b.q * (e - cr - h), h)
}

/// One backward step of the recursion for all paths.
pub fn backward_step(ctx: &StepContext, inp: &StepInputs) -> Result<StepOutput> {
    let n = inp.x.len();
    let r = ctx.market.rate;
    let dt = inp.t_next - inp.t;
    let p = (-r * dt).exp();
    let sign = ctx.deal.position.sign();
    let rehyp = |c: f64| if ctx.rehypothecation { c } else { 0.0 };

    let margin_cash: Vec<f64> = inp
        .collateral
        .iter()
        .map(|&c| c * carry_factor(ctx.carry, r, effective_collateral_rate(ctx.c_pos, ctx.c_neg, c), dt))
        .collect();

    // forward value of everything received over the period
    let v_fwd: Vec<f64> = (0..n).map(|i| inp.v_next[i] + inp.cash_next[i]).collect();
    let v_fwd_real: Vec<f64> = (0..n).map(|i| inp.v_next_realized[i] + inp.cash_next[i]).collect();

    let (cv_now, cv_next): (Vec<f64>, Vec<f64>) = if ctx.control_variate {
        (
            inp.x.iter().map(|&x| ctx.deal.clean_value(&ctx.market, inp.t, x)).collect(),
            inp.x_next.iter().map(|&x| p * ctx.deal.clean_value(&ctx.market, inp.t_next, x)).collect(),
        )
    } else {
        (vec![0.0; n], vec![0.0; n])
    };

    let proj = Projector::new(inp.x, ctx.market.spot, ctx.basis)?;
    let target: Vec<f64> = (0..n).map(|i| p * v_fwd[i] + margin_cash[i] - cv_next[i]).collect();
    let fitted = proj.project(&target);
    let cont: Vec<f64> = (0..n).map(|i| fitted[i] + cv_now[i]).collect();
    let rsq = r_squared(&target, &fitted);

    let neg_branch = ctx.branch(ctx.f_neg, dt);
    let pos_branch = {
        let kappa = carry_factor_from_bond(ctx.carry, r, inp.p_borrow, dt);
        let rate = match ctx.carry {
            CarryForm::FirstOrder => -inp.p_borrow.ln() / dt,
            CarryForm::BondRatio => (1.0 / inp.p_borrow - 1.0) / dt,
        };
        ctx.branch_from_kappa(rate, kappa, dt)
    };
    let branches = [pos_branch, neg_branch];
    let pick = |fv: f64| if fv > 0.0 { 0 } else { 1 };

    // regression hedge moments: E[V_{j+1} X_{j+1} | X_j] and E[V_{j+1} X_j | X_j]
    let (a1, a0) = if ctx.hedge_mode == HedgeMode::Full && ctx.hedge_estimator == HedgeEstimator::Regression {
        let y1: Vec<f64> = (0..n).map(|i| v_fwd[i] * inp.x_next[i]).collect();
        let y0: Vec<f64> = (0..n).map(|i| v_fwd[i] * inp.x[i]).collect();
        (proj.project(&y1), proj.project(&y0))
    } else {
        (Vec::new(), Vec::new())
    };
    let er = (r * dt).exp();
    let e2 = ((2.0 * r + ctx.market.vol * ctx.market.vol) * dt).exp();

    let hedge_line = |i: usize, b: &Branch| -> HedgeLine {
        let x = inp.x[i];
        let g = b.g;
        match ctx.hedge_estimator {
            HedgeEstimator::Regression => {
                let m = x * x * (e2 - 2.0 * g * er + g * g);
                let bb = x * (er - g);
                HedgeLine { alpha: x * (a1[i] - g * a0[i]) / m, beta: -x * g * bb / m }
            }
            HedgeEstimator::Pathwise => {
                let d = inp.x_next[i] - g * x;
                HedgeLine { alpha: x * v_fwd[i] / d, beta: -x * g / d }
            }
        }
    };

    let mut state = BackwardState {
        v_bar: vec![0.0; n],
        funding: vec![0.0; n],
        hedge: vec![0.0; n],
        collateral: inp.collateral.to_vec(),
        funding_rate: vec![0.0; n],
    };
    let mut stats = NewtonStats::default();
    let mut v_realized = vec![0.0; n];
    let mut funding_realized = vec![0.0; n];
    let mut funding_carry = vec![0.0; n];
    let mut first_failure = None;

    for i in 0..n {
        let cr = rehyp(inp.collateral[i]);
        let e = cont[i];
        let h_bs = sign * bs_call_delta(inp.x[i], ctx.deal.strike, r, ctx.market.vol, ctx.deal.maturity - inp.t) * inp.x[i];
        let (f, h, k) = match ctx.hedge_mode {
            HedgeMode::RiskFree => {
                let k = pick(e - cr - h_bs);
                (branches[k].q * (e - cr - h_bs), h_bs, k)
            }
            HedgeMode::Full => {
                let lines = [hedge_line(i, &pos_branch), hedge_line(i, &neg_branch)];
                let residual = |z: &[f64; 3]| {
                    let k = pick(z[0]);
                    let (b, l) = (branches[k], lines[k]);
                    [z[0] - b.q * (e - cr - z[1]), z[1] - (l.alpha + l.beta * z[2]), z[2] - z[0] - cr - z[1]]
                };
                // start from a self-consistent branch solution, trying the side the
                // risk-free hedge would fund on first
                let k0 = pick(e - cr - h_bs);
                let (f0, h0) = [k0, 1 - k0]
                    .into_iter()
                    .map(|k| (k, solve_branch(&branches[k], &lines[k], e, cr)))
                    .find(|&(k, (fv, _))| pick(fv) == k)
                    .map_or_else(|| solve_branch(&branches[k0], &lines[k0], e, cr), |(_, sol)| sol);
                let out = newton_solve(residual, [f0, h0, f0 + cr + h0], &ctx.newton);
                if out.converged {
                    stats.record(out.iterations);
                    (out.x[0], out.x[1], pick(out.x[0]))
                } else {
                    let consistent = (0..2).find_map(|k| {
                        let (fv, h) = solve_branch(&branches[k], &lines[k], e, cr);
                        (pick(fv) == k).then_some((fv, h, k))
                    });
                    match consistent {
                        Some(sol) => {
                            stats.failures += 1;
                            first_failure.get_or_insert(i);
                            sol
                        }
                        None => {
                            // the funding equation changes sign across F = 0 without a root on
                            // either side: the account sits at the kink
                            stats.kinks += 1;
                            let l = lines[1];
                            (0.0, (l.alpha + l.beta * cr) / (1.0 - l.beta), 1)
                        }
                    }
                }
            }
        };
        let branch = branches[k];
        state.funding[i] = f;
        state.hedge[i] = h;
        state.v_bar[i] = f + cr + h;
        state.funding_rate[i] = branch.rate;

        let realized = p * v_fwd_real[i] + margin_cash[i] - cv_next[i] + cv_now[i];
        let fr = branch.q * (realized - cr - h);
        funding_realized[i] = fr;
        funding_carry[i] = 1.0 - 1.0 / branch.q;
        v_realized[i] = fr + cr + h;
    }

    if stats.failures as f64 > ctx.max_failure_fraction * n as f64 {
        return Err(Error::Convergence { step: 0, failed: stats.failures, total: n, first_path: first_failure.unwrap_or(0) });
    }
    Ok(StepOutput { state, v_realized, funding_realized, funding_carry, margin_cash, stats, r_squared: rsq })
}

/// Per-path output of one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub scenario: DefaultScenario,
    /// Realized time-0 value per path.
    pub values: Vec<f64>,
    /// Solved time-0 value per path.
    pub solved_values: Vec<f64>,
    /// Discounted Π_CVA paid at τ per path.
    pub cva: Vec<f64>,
    pub dva: Vec<f64>,
    /// Discounted margining cash flows per path.
    pub lva: Vec<f64>,
    /// Discounted funding carry per path.
    pub fva: Vec<f64>,
    /// Solved states by date index, if requested.
    pub states: Vec<BackwardState>,
    pub stats: NewtonStats,
    pub mean_r_squared: f64,
}

fn step_context(spec: &PricingSpec, settings: &EngineSettings) -> StepContext {
    StepContext {
        market: spec.market,
        deal: spec.deal,
        rehypothecation: spec.collateral.rehypothecation,
        c_pos: spec.collateral.rate_pos,
        c_neg: spec.collateral.rate_neg,
        f_neg: spec.funding.rate_lend,
        basis: settings.basis,
        hedge_mode: settings.hedge_mode,
        hedge_estimator: settings.hedge_estimator,
        carry: settings.carry,
        newton: settings.newton,
        control_variate: settings.control_variate,
        max_failure_fraction: settings.max_failure_fraction,
    }
}

/// Borrowing bond price over `[t, t + dt]`, in the compounding of the carry form.
fn borrow_bond(spec: &PricingSpec, carry: CarryForm, t: f64, dt: f64) -> Result<f64> {
    let f = spec.funding.rate_borrow;
    let p = match carry {
        CarryForm::FirstOrder => (-f * dt).exp(),
        CarryForm::BondRatio => 1.0 / (1.0 + f * dt),
    };
    match spec.funding.policy {
        FundingPolicy::Treasury => Ok(p),
        FundingPolicy::Market => {
            let s0 = spec.credit.investor_survival(t);
            let s1 = spec.credit.investor_survival(t + dt);
            let survival = if s0 > 0.0 { s1 / s0 } else { 1.0 };
            funding_dva_bond(p, survival, spec.recovery.lgd_i)
        }
    }
}

/// Backward induction for one resolved scenario on the given paths.
/// `close_out_values` overrides the close-out amount per path (replacement convention).
pub fn run_scenario(
    spec: &PricingSpec,
    settings: &EngineSettings,
    scenario: &DefaultScenario,
    grid: &TimeGrid,
    paths: &PathSet,
    close_out_values: Option<&[f64]>,
) -> Result<ScenarioRun> {
    let ctx = step_context(spec, settings);
    let n = paths.n_paths();
    let dates = grid.dates();
    let r = spec.market.rate;
    let recovery = spec.recovery.for_collateral(spec.collateral.rehypothecation);

    let defaulted = scenario.tau.filter(|&t| t < spec.deal.maturity);
    let end = match defaulted {
        Some(t) => grid
            .index_at_or_after(t)
            .ok_or_else(|| Error::Config(format!("default time {t} beyond the grid")))?,
        None => grid.len(),
    };
    if end == 0 {
        return Err(Error::Config("default at time 0 leaves nothing to price".into()));
    }
    if defaulted.is_some() && scenario.first_defaulter == FirstDefaulter::Simultaneous {
        return Err(Error::Precondition("simultaneous default must be resolved before pricing".into()));
    }

    let mut cva = vec![0.0; n];
    let mut dva = vec![0.0; n];
    let collateral_at = |j: usize| -> Result<Vec<f64>> {
        (0..n)
            .map(|i| collateral_policy_value(spec.collateral.policy, &spec.deal, &spec.market, dates[j], paths.at(i, j)))
            .collect()
    };

    // cash flow at the final date of the scenario grid
    let x_end = paths.column(end);
    let cash_end: Vec<f64> = match defaulted {
        None => x_end.iter().map(|&x| spec.deal.payoff(x)).collect(),
        Some(_) => {
            let c_before = collateral_at(end - 1)?;
            let disc = (-r * dates[end]).exp();
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                let eps = match close_out_values {
                    Some(v) => v[i],
                    None => spec.deal.clean_value(&spec.market, dates[end], x_end[i]),
                };
                let theta = close_out_payment(scenario.first_defaulter, eps, c_before[i], &recovery)?;
                let (pc, pd) = cva_dva_integrands(eps, c_before[i], &recovery);
                match scenario.first_defaulter {
                    FirstDefaulter::Counterparty => cva[i] = disc * pc,
                    _ => dva[i] = disc * pd,
                }
                out.push(theta);
            }
            out
        }
    };

    let zeros = vec![0.0; n];
    let mut v_next = zeros.clone();
    let mut v_next_real = zeros.clone();
    let mut lva = zeros.clone();
    let mut fva = zeros.clone();
    let mut stats = NewtonStats::default();
    let mut rsq_sum = 0.0;
    let mut states = Vec::new();
    if settings.keep_states {
        states = vec![BackwardState::default(); end + 1];
        states[end] = BackwardState {
            v_bar: zeros.clone(),
            funding: zeros.clone(),
            hedge: zeros.clone(),
            collateral: zeros.clone(),
            funding_rate: zeros.clone(),
        };
    }

    let mut x_next = x_end;
    for j in (0..end).rev() {
        let x = paths.column(j);
        let collateral = match spec.collateral.policy {
            CollateralPolicy::None => zeros.clone(),
            _ => collateral_at(j)?,
        };
        let cash = if j + 1 == end { &cash_end[..] } else { &zeros[..] };
        let dt = dates[j + 1] - dates[j];
        let inp = StepInputs {
            t: dates[j],
            t_next: dates[j + 1],
            x: &x,
            x_next: &x_next,
            v_next: &v_next,
            v_next_realized: &v_next_real,
            cash_next: cash,
            collateral: &collateral,
            p_borrow: borrow_bond(spec, settings.carry, dates[j], dt)?,
        };
        let out = backward_step(&ctx, &inp).map_err(|e| match e {
            Error::Convergence { failed, total, first_path, .. } => Error::Convergence { step: j, failed, total, first_path },
            other => other,
        })?;
        let disc = (-r * dates[j]).exp();
        for i in 0..n {
            lva[i] += disc * out.margin_cash[i];
            fva[i] += disc * out.funding_carry[i] * out.funding_realized[i];
        }
        stats.merge(&out.stats);
        rsq_sum += out.r_squared;
        v_next_real = out.v_realized;
        v_next = out.state.v_bar.clone();
        if settings.keep_states {
            states[j] = out.state;
        }
        x_next = x;
    }

    Ok(ScenarioRun {
        scenario: *scenario,
        values: v_next_real,
        solved_values: v_next,
        cva,
        dva,
        lva,
        fva,
        states,
        stats,
        mean_r_squared: rsq_sum / end as f64,
    })
}

/// Mean and sample variance.
fn mean_var(v: &[f64]) -> (f64, f64) {
    let m = mean(v);
    let var = if v.len() > 1 { v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64 } else { 0.0 };
    (m, var)
}

/// Scenario-weighted components of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Components {
    pub price: f64,
    pub cva: f64,
    pub dva: f64,
    pub lva: f64,
    pub fva: f64,
}

impl Components {
    fn add_scaled(&mut self, w: f64, o: &Components) {
        self.price += w * o.price;
        self.cva += w * o.cva;
        self.dva += w * o.dva;
        self.lva += w * o.lva;
        self.fva += w * o.fva;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummary {
    pub scenario: DefaultScenario,
    /// Mean over replications of the scenario's price.
    pub price: f64,
    /// Counterparty-first share of tie-break draws (simultaneous scenarios only).
    pub counterparty_first_share: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub newton: NewtonStats,
    pub mean_r_squared: f64,
    pub elapsed_secs: f64,
    /// Standard error from the within-run path variance, averaged over replications.
    pub pathwise_std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValuationResult {
    pub price: f64,
    pub std_error: f64,
    pub scenarios: Vec<ScenarioSummary>,
    /// One entry per replication.
    pub replications: Vec<Components>,
    pub diagnostics: Diagnostics,
    /// First replication's scenario runs, kept when states are requested.
    pub runs: Vec<ScenarioRun>,
    pub n_paths: usize,
    pub seed: u64,
}

impl ValuationResult {
    /// Mean over replications of a component, with its standard error.
    pub fn component(&self, pick: impl Fn(&Components) -> f64) -> (f64, f64) {
        let v: Vec<f64> = self.replications.iter().map(pick).collect();
        let (m, var) = mean_var(&v);
        (m, (var / v.len() as f64).sqrt())
    }
}

/// Spread-based standard error of a mean over replications; with a single
/// replication the pathwise estimate is the only one available.
fn replication_error(values: &[f64], pathwise: f64) -> f64 {
    if values.len() < 2 {
        return pathwise;
    }
    (mean_var(values).1 / values.len() as f64).sqrt()
}

pub fn hedge_mode(settings: &EngineSettings) -> HedgeMode {
    settings.hedge_mode
}

/// Prices the deal as the probability-weighted sum of scenario prices.
pub fn price_deal(spec: &PricingSpec, settings: &EngineSettings, n_paths: usize, seed: u64) -> Result<ValuationResult> {
    spec.validate()?;
    if settings.replications == 0 {
        return Err(Error::Config("at least one replication is required".into()));
    }
    if n_paths < settings.basis.size() + 1 {
        return Err(Error::Config(format!("{n_paths} paths are too few for the regression basis")));
    }
    let started = Instant::now();
    let grid = TimeGrid::with_frequency(spec.deal.maturity, settings.steps_per_year)?;
    let scenarios = enumerate_scenarios(&spec.credit);
    let mut replications = Vec::with_capacity(settings.replications);
    let mut scenario_prices = vec![0.0; scenarios.len()];
    let mut cpty_first = vec![0usize; scenarios.len()];
    let mut newton = NewtonStats::default();
    let mut rsq = 0.0;
    let mut rsq_count = 0usize;
    let mut pathwise_var_sum = 0.0;
    let mut kept_runs = Vec::new();

    for rep in 0..settings.replications {
        let mut tie_rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, TIE_BREAK_STREAM, rep as u64));
        let mut comp = Components::default();
        let mut var = 0.0;
        for (k, sc) in scenarios.iter().enumerate() {
            let scenario = if sc.first_defaulter == FirstDefaulter::Simultaneous {
                let u: f64 = tie_rng.random();
                let s = resolve_simultaneous(sc, u)?;
                if s.first_defaulter == FirstDefaulter::Counterparty {
                    cpty_first[k] += 1;
                }
                s
            } else {
                *sc
            };
            let stream = 1 + (rep as u64) * 10_000 + k as u64;
            let paths = simulate_gbm_stream(&spec.market, &grid, n_paths, seed, stream, settings.antithetic)?;
            let close_out = match (spec.close_out, scenario.tau) {
                (CloseOutConvention::Replacement, Some(t)) if t < spec.deal.maturity => {
                    let survival = run_scenario(spec, &EngineSettings { keep_states: true, ..settings.clone() }, &DefaultScenario::no_default(1.0), &grid, &paths, None)?;
                    let j = grid.index_at_or_after(t).unwrap_or(grid.len());
                    Some(survival.states[j].v_bar.clone())
                }
                _ => None,
            };
            let run = run_scenario(spec, settings, &scenario, &grid, &paths, close_out.as_deref())?;
            let (m, v) = mean_var(&run.values);
            let c = Components { price: m, cva: mean(&run.cva), dva: mean(&run.dva), lva: mean(&run.lva), fva: mean(&run.fva) };
            comp.add_scaled(sc.weight, &c);
            var += sc.weight * sc.weight * v / n_paths as f64;
            scenario_prices[k] += m / settings.replications as f64;
            newton.merge(&run.stats);
            rsq += run.mean_r_squared;
            rsq_count += 1;
            if rep == 0 && settings.keep_states {
                kept_runs.push(run);
            }
        }
        pathwise_var_sum += var;
        replications.push(comp);
    }

    let prices: Vec<f64> = replications.iter().map(|c| c.price).collect();
    let r_count = settings.replications as f64;
    let pathwise = (pathwise_var_sum / r_count).sqrt() / r_count.sqrt();
    let price = mean(&prices);
    let std_error = replication_error(&prices, pathwise);
    Ok(ValuationResult {
        price,
        std_error,
        scenarios: scenarios
            .iter()
            .zip(scenario_prices.iter().zip(&cpty_first))
            .map(|(s, (&p, &c))| ScenarioSummary {
                scenario: *s,
                price: p,
                counterparty_first_share: if s.first_defaulter == FirstDefaulter::Simultaneous { c as f64 / r_count } else { 0.0 },
            })
            .collect(),
        replications,
        diagnostics: Diagnostics {
            newton,
            mean_r_squared: rsq / rsq_count.max(1) as f64,
            elapsed_secs: started.elapsed().as_secs_f64(),
            pathwise_std_error: pathwise,
        },
        runs: kept_runs,
        n_paths,
        seed,
    })
}
