//! Underlying dynamics and Black-Scholes closed forms.
//!
//! Paths follow a geometric Brownian motion under the risk-neutral measure and
//! are stepped exactly in log space. Each path draws its normals from its own
//! ChaCha8 stream (ziggurat sampling via `rand_distr::StandardNormal`), seeded
//! from `(seed, stream, path index)` through a splitmix64 mix, so any path can
//! be regenerated independently of the others.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    pub spot: f64,
    pub rate: f64,
    pub vol: f64,
}

impl MarketParams {
    pub fn new(spot: f64, rate: f64, vol: f64) -> Result<Self> {
        let p = Self { spot, rate, vol };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            return Err(Error::Config(format!("spot must be positive, got {}", self.spot)));
        }
        if !(self.vol > 0.0 && self.vol.is_finite()) {
            return Err(Error::Config(format!("vol must be positive, got {}", self.vol)));
        }
        if !self.rate.is_finite() {
            return Err(Error::Config("rate must be finite".into()));
        }
        Ok(())
    }
}

/// Uniform simulation grid `0 = t_0 < ... < t_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    dates: Vec<f64>,
    step: f64,
}

impl TimeGrid {
    /// Grid from 0 to `maturity` with `steps` equal intervals.
    pub fn uniform(maturity: f64, steps: usize) -> Result<Self> {
        if !(maturity > 0.0 && maturity.is_finite()) || steps == 0 {
            return Err(Error::Config(format!(
                "grid needs positive maturity and steps, got T={maturity}, steps={steps}"
            )));
        }
        let step = maturity / steps as f64;
        let mut dates: Vec<f64> = (0..=steps).map(|j| j as f64 * step).collect();
        dates[steps] = maturity;
        Ok(Self { dates, step })
    }

    /// Grid with `steps_per_year` steps per year; the maturity must be a whole number of steps.
    pub fn with_frequency(maturity: f64, steps_per_year: usize) -> Result<Self> {
        let exact = maturity * steps_per_year as f64;
        let steps = exact.round();
        if steps < 1.0 || (exact - steps).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "maturity {maturity} is not a whole number of 1/{steps_per_year} steps"
            )));
        }
        Self::uniform(maturity, steps as usize)
    }

    pub fn dates(&self) -> &[f64] {
        &self.dates
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of intervals.
    pub fn len(&self) -> usize {
        self.dates.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn last(&self) -> f64 {
        self.dates[self.dates.len() - 1]
    }

    /// Index of the first grid date at or after `t` (within a small tolerance).
    pub fn index_at_or_after(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * self.step;
        self.dates.iter().position(|&d| d >= t - tol)
    }

    /// The grid cut at index `k` (inclusive).
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.len() {
            return Err(Error::Config(format!("cannot truncate a {}-step grid at {k}", self.len())));
        }
        Ok(Self { dates: self.dates[..=k].to_vec(), step: self.step })
    }
}

/// Simulated spot prices, `n_paths` rows by `n_dates` columns, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    values: Vec<f64>,
    n_paths: usize,
    n_dates: usize,
    pub seed: u64,
}

impl PathSet {
    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_dates(&self) -> usize {
        self.n_dates
    }

    pub fn path(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_dates..(i + 1) * self.n_dates]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_dates + j]
    }

    /// Cross-section of all paths at date index `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_paths).map(|i| self.at(i, j)).collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for substream `index` of stream `stream` under the master `seed`.
pub fn substream_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index)
}

/// Exact lognormal simulation on `grid`. Stream 0 is used.
pub fn simulate_gbm_paths(
    params: &MarketParams,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathSet> {
    simulate_gbm_stream(params, grid, n_paths, seed, 0, false)
}

/// Exact lognormal simulation with an explicit stream id; with `antithetic`
/// set, odd paths reuse the negated normals of the preceding even path.
pub fn simulate_gbm_stream(
    params: &MarketParams,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
    stream: u64,
    antithetic: bool,
) -> Result<PathSet> {
    params.validate()?;
    if n_paths < 2 {
        return Err(Error::Config(format!("need at least 2 paths, got {n_paths}")));
    }
    let dates = grid.dates();
    let n_dates = dates.len();
    let mut values = vec![0.0; n_paths * n_dates];
    let var_terms: Vec<(f64, f64)> = dates
        .windows(2)
        .map(|w| {
            let dt = w[1] - w[0];
            ((params.rate - 0.5 * params.vol * params.vol) * dt, params.vol * dt.sqrt())
        })
        .collect();
    let mut z = vec![0.0; n_dates - 1];
    for i in 0..n_paths {
        let (source, sign) = if antithetic { (i / 2, if i % 2 == 1 { -1.0 } else { 1.0 }) } else { (i, 1.0) };
        if !antithetic || i % 2 == 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, stream, source as u64));
            for zk in z.iter_mut() {
                *zk = rng.sample(StandardNormal);
            }
        }
        let row = &mut values[i * n_dates..(i + 1) * n_dates];
        row[0] = params.spot;
        let mut log_s = params.spot.ln();
        for (k, &(drift, diff)) in var_terms.iter().enumerate() {
            log_s += drift + diff * sign * z[k];
            row[k + 1] = log_s.exp();
        }
    }
    Ok(PathSet { values, n_paths, n_dates, seed })
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

pub fn norm_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

pub fn norm_pdf(x: f64) -> f64 {
    std_normal().pdf(x)
}

fn check_times(t: f64, maturity: f64) -> Result<()> {
    if t > maturity {
        return Err(Error::Domain(format!("t={t} is after maturity {maturity}")));
    }
    Ok(())
}

fn d1_d2(spot: f64, strike: f64, rate: f64, vol: f64, tau: f64) -> (f64, f64) {
    let sd = vol * tau.sqrt();
    let d1 = ((spot / strike).ln() + (rate + 0.5 * vol * vol) * tau) / sd;
    (d1, d1 - sd)
}

/// Black-Scholes call price at time `t` for expiry `maturity`.
pub fn bs_price(spot: f64, strike: f64, rate: f64, vol: f64, t: f64, maturity: f64) -> Result<f64> {
    check_times(t, maturity)?;
    Ok(bs_call(spot, strike, rate, vol, maturity - t))
}

/// Call delta `Φ(d₁)`; at expiry the intrinsic slope.
pub fn bs_delta(spot: f64, strike: f64, rate: f64, vol: f64, t: f64, maturity: f64) -> Result<f64> {
    check_times(t, maturity)?;
    Ok(bs_call_delta(spot, strike, rate, vol, maturity - t))
}

/// Call price for time to expiry `tau ≥ 0`, no argument checks (hot path).
pub fn bs_call(spot: f64, strike: f64, rate: f64, vol: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return (spot - strike).max(0.0);
    }
    let (d1, d2) = d1_d2(spot, strike, rate, vol, tau);
    spot * norm_cdf(d1) - strike * (-rate * tau).exp() * norm_cdf(d2)
}

pub fn bs_call_delta(spot: f64, strike: f64, rate: f64, vol: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return if spot > strike { 1.0 } else { 0.0 };
    }
    norm_cdf(d1_d2(spot, strike, rate, vol, tau).0)
}

/// `e^{-rate (s - t)}`.
pub fn discount_factor(rate: f64, t: f64, s: f64) -> Result<f64> {
    if t > s {
        return Err(Error::Domain(format!("discounting from {t} back to earlier {s}")));
    }
    Ok((-rate * (s - t)).exp())
}
