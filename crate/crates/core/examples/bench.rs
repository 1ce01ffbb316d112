use nonlinear_xva::cashflows::*;
use nonlinear_xva::credit::JointDefaultDistribution;
use nonlinear_xva::lsmc::*;
use nonlinear_xva::market::MarketParams;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let fp: f64 = args[1].parse().unwrap();
    let fm: f64 = args[2].parse().unwrap();
    let short = args[3] == "s";
    let high = args[4] == "h";
    let rehyp = args[5] == "r";
    let reps: usize = args[6].parse().unwrap();
    let seed: u64 = args.get(7).map(|s| s.parse().unwrap()).unwrap_or(1);
    let spec = PricingSpec {
        market: MarketParams { spot: 100.0, rate: 0.01, vol: 0.25 },
        deal: DealSpec { position: if short { Position::Short } else { Position::Long }, strike: 80.0, maturity: 3.0 },
        funding: FundingSpec { rate_borrow: fp, rate_lend: fm, policy: FundingPolicy::Treasury },
        collateral: CollateralSpec { policy: CollateralPolicy::RiskFreePrice, rate_pos: 0.01, rate_neg: 0.01, rehypothecation: rehyp },
        recovery: RecoverySpec { lgd_i: 0.5, lgd_c: 0.5, lgd_coll_i: 0.5, lgd_coll_c: 0.5 },
        close_out: CloseOutConvention::RiskFree,
        credit: if high { JointDefaultDistribution::d_high() } else { JointDefaultDistribution::d_low() },
    };
    let settings = EngineSettings { replications: reps, max_failure_fraction: 1.0, ..Default::default() };
    let r = price_deal(&spec, &settings, 1000, seed).unwrap();
    println!("price {:.3} se {:.3} pathse {:.3} t {:.2}s newton med {} max {} fail {} kinks {} solves {}",
        r.price, r.std_error, r.diagnostics.pathwise_std_error, r.diagnostics.elapsed_secs,
        r.diagnostics.newton.median_iterations(), r.diagnostics.newton.max_iterations(),
        r.diagnostics.newton.failures, r.diagnostics.newton.kinks, r.diagnostics.newton.solves);
    for c in &r.replications { print!("{:.3} ", c.price); }
    println!();
}
