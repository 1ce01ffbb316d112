use nonlinear_xva::cashflows::*;
use nonlinear_xva::credit::JointDefaultDistribution;
use nonlinear_xva::lsmc::*;
use nonlinear_xva::market::MarketParams;
use nonlinear_xva::adjustments::*;

fn main() {
    let f: f64 = std::env::args().nth(1).unwrap().parse().unwrap();
    let spy: usize = std::env::args().nth(2).unwrap().parse().unwrap();
    let mk = |rate: f64| PricingSpec {
        market: MarketParams { spot: 100.0, rate: 0.01, vol: 0.25 },
        deal: DealSpec { position: Position::Long, strike: 80.0, maturity: 3.0 },
        funding: FundingSpec { rate_borrow: rate, rate_lend: rate, policy: FundingPolicy::Treasury },
        collateral: CollateralSpec { policy: CollateralPolicy::None, rate_pos: 0.01, rate_neg: 0.01, rehypothecation: false },
        recovery: RecoverySpec { lgd_i: 0.5, lgd_c: 0.5, lgd_coll_i: 0.5, lgd_coll_c: 0.5 },
        close_out: CloseOutConvention::RiskFree,
        credit: JointDefaultDistribution::none(),
    };
    let s = EngineSettings { steps_per_year: spy, ..Default::default() };
    let a = price_deal(&mk(f), &s, 1000, 1).unwrap();
    let b = price_deal(&mk(0.01), &s, 1000, 1).unwrap();
    let d = paired_difference(&a, &b).unwrap();
    let m = fva_methods(&mk(f).market, &mk(f).deal, f).unwrap();
    println!("full {:.4} ({:.4}) ii {:.4} iii {:.4} i {:.4}  base {:.4} ({:.4}) t {:.2}", d.value, d.std_error, m.method_ii, m.method_iii, m.method_i, b.price, b.std_error, a.diagnostics.elapsed_secs);
}
