//! Valuation adjustments: CVA/DVA/LVA/FVA decomposition, simplified FVA
//! approximations and the non-linearity adjustment NVA.

use crate::cashflows::{CloseOutConvention, DealSpec, FundingSpec};
use crate::error::{Error, Result};
use crate::lsmc::{price_deal, Components, EngineSettings, PricingSpec, ValuationResult};
use crate::market::{bs_call, norm_cdf, MarketParams};

/// A value with its Monte Carlo standard error (zero for closed forms).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjustmentReport {
    pub v_clean: f64,
    pub cva: Estimate,
    pub dva: Estimate,
    pub lva: Estimate,
    pub fva: Estimate,
    pub nva: Option<Estimate>,
    pub v_bar: Estimate,
    /// `v_bar − (v_clean − cva + dva + lva + fva)`.
    pub identity_residual: f64,
    /// Combined standard error of the terms in the identity.
    pub identity_std_error: f64,
}

impl AdjustmentReport {
    pub fn identity_holds(&self, multiple: f64) -> bool {
        self.identity_residual.abs() <= multiple * self.identity_std_error + 1e-9
    }
}

fn estimate(result: &ValuationResult, pick: impl Fn(&Components) -> f64) -> Estimate {
    let (value, std_error) = result.component(pick);
    Estimate { value, std_error }
}

/// Splits a completed run into its adjustments.
pub fn decompose(result: &ValuationResult, spec: &PricingSpec) -> Result<AdjustmentReport> {
    if result.replications.is_empty() {
        return Err(Error::Config("run holds no replications to decompose".into()));
    }
    let v_clean = spec.deal.clean_value(&spec.market, 0.0, spec.market.spot);
    let cva = estimate(result, |c| c.cva);
    let dva = estimate(result, |c| c.dva);
    let lva = estimate(result, |c| c.lva);
    let fva = estimate(result, |c| c.fva);
    let v_bar = Estimate { value: result.price, std_error: result.std_error };
    let identity_residual = v_bar.value - (v_clean - cva.value + dva.value + lva.value + fva.value);
    let identity_std_error = [v_bar, cva, dva, lva, fva].iter().map(|e| e.std_error.powi(2)).sum::<f64>().sqrt();
    Ok(AdjustmentReport { v_clean, cva, dva, lva, fva, nva: None, v_bar, identity_residual, identity_std_error })
}

/// Whole Black-Scholes value discounted once more at the symmetric funding rate.
pub fn fva_method_i(market: &MarketParams, deal: &DealSpec, f_hat: f64) -> f64 {
    (-f_hat * deal.maturity).exp() * deal.clean_value(market, 0.0, market.spot)
}

/// Black-Scholes value with growth and discounting both at `f_hat`.
pub fn fva_method_ii(market: &MarketParams, deal: &DealSpec, f_hat: f64) -> f64 {
    deal.position.sign() * bs_call(market.spot, deal.strike, f_hat, market.vol, deal.maturity)
}

/// Gauss-Legendre 4-point rule on [-1, 1].
const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

fn composite_gl(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = a + (p as f64 + 0.5) * h;
            GL4.iter().map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

/// `E₀[Φ(d₂(s))]` over the lognormal law of `S_s`. With `d₂(s) = a + bZ`,
/// `E[Φ(a + bZ)] = Φ(a / √(1 + b²))`.
fn expected_nd2(market: &MarketParams, deal: &DealSpec, s: f64) -> f64 {
    let (r, v, k, t) = (market.rate, market.vol, deal.strike, deal.maturity);
    let mean_log = market.spot.ln() + (r - 0.5 * v * v) * s;
    norm_cdf((mean_log - k.ln() + (r - 0.5 * v * v) * (t - s)) / (v * t.sqrt()))
}

/// `(f̂ − r) K e^{−rT} ∫₀ᵀ E₀[Φ(d₂(s))] ds`, signed by the position. The time
/// integral is refined by doubling the number of panels until two successive
/// estimates agree to `tol`.
pub fn fva_method_iii(market: &MarketParams, deal: &DealSpec, f_hat: f64, panels: usize, tol: f64) -> Result<f64> {
    let integrand = |s: f64| expected_nd2(market, deal, s);
    let mut n = panels.max(1);
    let mut prev = composite_gl(&integrand, 0.0, deal.maturity, n);
    for _ in 0..12 {
        n *= 2;
        let next = composite_gl(&integrand, 0.0, deal.maturity, n);
        if (next - prev).abs() <= tol {
            let scale = (f_hat - market.rate) * deal.strike * (-market.rate * deal.maturity).exp();
            return Ok(deal.position.sign() * scale * next);
        }
        prev = next;
    }
    Err(Error::Quadrature(format!("time integral not settled at {n} panels")))
}

/// Funding adjustments of the three simplified methods at one symmetric rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FvaMethods {
    pub f_hat: f64,
    /// `V^{(i)} − V`.
    pub method_i: f64,
    /// `V^{(ii)} − V`.
    pub method_ii: f64,
    pub method_iii: f64,
}

pub fn fva_methods(market: &MarketParams, deal: &DealSpec, f_hat: f64) -> Result<FvaMethods> {
    let v = deal.clean_value(market, 0.0, market.spot);
    Ok(FvaMethods {
        f_hat,
        method_i: fva_method_i(market, deal, f_hat) - v,
        method_ii: fva_method_ii(market, deal, f_hat) - v,
        method_iii: fva_method_iii(market, deal, f_hat, 8, 1e-10)?,
    })
}

/// Difference of two runs on common random numbers, with the standard error
/// of the per-replication differences.
pub fn paired_difference(a: &ValuationResult, b: &ValuationResult) -> Result<Estimate> {
    if a.n_paths != b.n_paths || a.seed != b.seed || a.replications.len() != b.replications.len() {
        return Err(Error::Config("runs differ in paths, seed or replications".into()));
    }
    let d: Vec<f64> = a.replications.iter().zip(&b.replications).map(|(x, y)| x.price - y.price).collect();
    let n = d.len() as f64;
    let m = d.iter().sum::<f64>() / n;
    let se = if d.len() > 1 {
        (d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        (a.std_error.powi(2) + b.std_error.powi(2)).sqrt()
    };
    Ok(Estimate { value: m, std_error: se })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NvaResult {
    pub f_hat: f64,
    pub v_bar: ValuationResult,
    pub v_hat: ValuationResult,
    pub nva: Estimate,
    /// `|NVA| / |V̄|` in percent.
    pub percent: f64,
}

/// Midpoint of the borrowing and lending rates.
pub fn default_symmetric_rate(funding: &FundingSpec) -> f64 {
    0.5 * (funding.rate_borrow + funding.rate_lend)
}

/// `NVA = V̄ − V̂` where `V̂` uses the symmetric rate `f̂` and a risk-free close-out.
pub fn compute_nva(
    spec: &PricingSpec,
    settings: &EngineSettings,
    f_hat: Option<f64>,
    n_paths: usize,
    seed: u64,
) -> Result<NvaResult> {
    let f_hat = f_hat.unwrap_or_else(|| default_symmetric_rate(&spec.funding));
    let v_bar = price_deal(spec, settings, n_paths, seed)?;
    let simplified = PricingSpec {
        funding: FundingSpec { rate_borrow: f_hat, rate_lend: f_hat, ..spec.funding },
        close_out: CloseOutConvention::RiskFree,
        ..spec.clone()
    };
    let v_hat = if simplified == *spec { v_bar.clone() } else { price_deal(&simplified, settings, n_paths, seed)? };
    nva_from_runs(f_hat, v_bar, v_hat)
}

pub fn nva_from_runs(f_hat: f64, v_bar: ValuationResult, v_hat: ValuationResult) -> Result<NvaResult> {
    let nva = paired_difference(&v_bar, &v_hat)?;
    let percent = if v_bar.price != 0.0 { 100.0 * nva.value.abs() / v_bar.price.abs() } else { 0.0 };
    Ok(NvaResult { f_hat, v_bar, v_hat, nva, percent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cashflows::Position;
    use nalgebra::{DMatrix, SymmetricEigen};

    /// Probabilists' Gauss-Hermite nodes and weights (weights sum to one), by Golub-Welsch.
    fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
        let mut j = DMatrix::<f64>::zeros(order, order);
        for k in 1..order {
            let b = (k as f64).sqrt();
            j[(k, k - 1)] = b;
            j[(k - 1, k)] = b;
        }
        let eig = SymmetricEigen::new(j);
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.into_iter().unzip()
    }

    fn setup() -> (MarketParams, DealSpec) {
        (
            MarketParams { spot: 100.0, rate: 0.01, vol: 0.25 },
            DealSpec { position: Position::Long, strike: 80.0, maturity: 3.0 },
        )
    }

    #[test]
    fn method_i_values() {
        let (m, d) = setup();
        let v = d.clean_value(&m, 0.0, 100.0);
        assert!((fva_method_i(&m, &d, 0.0) - v).abs() < 1e-12);
        assert!((fva_method_i(&m, &d, 0.01) - 28.05).abs() < 0.05);
        assert!((fva_method_i(&m, &d, 0.02) - 27.22).abs() < 0.05);
    }

    #[test]
    fn method_ii_values() {
        let (m, d) = setup();
        assert!((fva_method_ii(&m, &d, 0.01) - d.clean_value(&m, 0.0, 100.0)).abs() < 1e-12);
        assert!(fva_method_ii(&m, &d, 0.02) > fva_method_ii(&m, &d, 0.01));
    }

    #[test]
    fn hermite_rule_moments() {
        let (x, w) = gauss_hermite(20);
        let m0: f64 = w.iter().sum();
        let m2: f64 = x.iter().zip(&w).map(|(a, b)| a * a * b).sum();
        let m4: f64 = x.iter().zip(&w).map(|(a, b)| a.powi(4) * b).sum();
        assert!((m0 - 1.0).abs() < 1e-12 && (m2 - 1.0).abs() < 1e-10 && (m4 - 3.0).abs() < 1e-9);
    }

    #[test]
    fn inner_expectation_matches_nested_quadrature() {
        let (m, d) = setup();
        let (x, w) = gauss_hermite(64);
        let (r, v) = (m.rate, m.vol);
        for s in [0.3, 1.0, 2.0] {
            let rem = d.maturity - s;
            let nested: f64 = x
                .iter()
                .zip(&w)
                .map(|(z, wt)| {
                    let log_s = m.spot.ln() + (r - 0.5 * v * v) * s + v * s.sqrt() * z;
                    wt * norm_cdf((log_s - d.strike.ln() + (r - 0.5 * v * v) * rem) / (v * rem.sqrt()))
                })
                .sum();
            assert!((nested - expected_nd2(&m, &d, s)).abs() < 1e-6);
        }
    }

    #[test]
    fn method_iii_matches_rho_closed_form() {
        // E₀[Φ(d₂(s))] does not depend on s, so the integral is T·Φ(d₂(0)):
        // the adjustment is the spread times the call's rate sensitivity
        let (m, d) = setup();
        let (r, v, k, t) = (m.rate, m.vol, d.strike, d.maturity);
        let d2 = ((m.spot / k).ln() + (r - 0.5 * v * v) * t) / (v * t.sqrt());
        for spread in [0.0, 0.01, 0.03] {
            let exact = spread * k * t * (-r * t).exp() * norm_cdf(d2);
            let got = fva_method_iii(&m, &d, r + spread, 8, 1e-10).unwrap();
            assert!((got - exact).abs() < 1e-6, "{got} vs {exact}");
        }
        assert_eq!(fva_method_iii(&m, &d, r, 8, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn methods_ii_and_iii_close_up_to_300bps() {
        let (m, d) = setup();
        for bps in [50.0, 100.0, 200.0, 300.0] {
            let f = fva_methods(&m, &d, m.rate + bps * 1e-4).unwrap();
            assert!((f.method_ii - f.method_iii).abs() <= 0.1, "{f:?}");
            assert!(f.method_iii > 0.0 && f.method_i < 0.0);
        }
    }

    #[test]
    fn short_position_flips_every_method() {
        let (m, d) = setup();
        let s = DealSpec { position: Position::Short, ..d };
        let a = fva_methods(&m, &d, 0.03).unwrap();
        let b = fva_methods(&m, &s, 0.03).unwrap();
        assert!((a.method_i + b.method_i).abs() < 1e-12);
        assert!((a.method_ii + b.method_ii).abs() < 1e-12);
        assert!((a.method_iii + b.method_iii).abs() < 1e-12);
    }
}
