//! Finite-difference solver for the pre-default valuation PDE
//!
//! `∂_t V̄ + ½σ²S²∂_SS V̄ + f̃ S ∂_S V̄ − (f̃ + λ) V̄ + (f̃ − c̃) C + λθ = 0`,
//! `V̄(T, S) = π(S)`,
//!
//! where the funding rate `f̃` is `f⁺` on nodes with `V̄ − C − S∂_S V̄ > 0` and
//! `f⁻` elsewhere (collateral available for funding). Time stepping is a
//! theta-scheme; the rate policy at each new time level is found by policy
//! iteration. The short rate does not appear in the equation at all.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeGrid {
    pub s_min: f64,
    pub s_max: f64,
    /// Number of spatial intervals (`n_s + 1` nodes).
    pub n_s: usize,
    /// Number of time steps.
    pub n_t: usize,
    /// 1 is fully implicit, 0.5 Crank-Nicolson.
    pub theta: f64,
}

impl PdeGrid {
    pub fn validate(&self, spot: f64) -> Result<()> {
        if !(self.s_min >= 0.0 && self.s_min < spot && spot < self.s_max) {
            return Err(Error::Config(format!(
                "spot {spot} must lie strictly inside [{}, {}]",
                self.s_min, self.s_max
            )));
        }
        if self.n_s < 16 || self.n_t < 16 {
            return Err(Error::Config("PDE grid needs at least 16 steps in each direction".into()));
        }
        if !(0.5..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!("theta {} outside [0.5, 1]", self.theta)));
        }
        Ok(())
    }
}

type Field = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;

pub struct PdeCoefficients {
    pub vol: f64,
    pub maturity: f64,
    pub f_pos: f64,
    pub f_neg: f64,
    pub c_tilde: f64,
    /// Constant first-to-default intensity.
    pub lambda: f64,
    /// On-default payment `θ(t, S)`.
    pub theta_fn: Field,
    /// Collateral account `C(t, S)`.
    pub collateral_fn: Field,
    /// Terminal payoff `π(S)`.
    pub payoff: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl PdeCoefficients {
    /// Call (`sign = 1`) or short call (`sign = −1`) without collateral or default.
    pub fn plain_call(sign: f64, strike: f64, vol: f64, maturity: f64, f_pos: f64, f_neg: f64) -> Self {
        Self {
            vol,
            maturity,
            f_pos,
            f_neg,
            c_tilde: 0.0,
            lambda: 0.0,
            theta_fn: Box::new(|_, _| 0.0),
            collateral_fn: Box::new(|_, _| 0.0),
            payoff: Box::new(move |s| sign * (s - strike).max(0.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeSolution {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    /// `surface[n]` holds the values at `t[n]`.
    pub surface: Vec<Vec<f64>>,
    /// Largest number of policy sweeps taken by any time step.
    pub max_policy_sweeps: usize,
}

impl PdeSolution {
    pub fn initial(&self) -> &[f64] {
        &self.surface[0]
    }

    /// Time-0 value at `spot`, by quadratic interpolation on the three nearest nodes.
    pub fn value_at(&self, spot: f64) -> f64 {
        interpolate(&self.s, &self.surface[0], spot)
    }
}

fn interpolate(s: &[f64], v: &[f64], x: f64) -> f64 {
    let h = s[1] - s[0];
    let k = (((x - s[0]) / h).round() as usize).clamp(1, s.len() - 2);
    let (x0, x1, x2) = (s[k - 1], s[k], s[k + 1]);
    let l0 = (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2));
    let l1 = (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2));
    let l2 = (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
    l0 * v[k - 1] + l1 * v[k] + l2 * v[k + 1]
}

/// Tridiagonal system `a_i x_{i−1} + b_i x_i + c_i x_{i+1} = d_i`.
fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Spatial operator rows `(lower, diag, upper)` for a given rate per node.
struct Operator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

fn operator(s: &[f64], h: f64, vol: f64, lambda: f64, rates: &[f64]) -> Operator {
    let n = s.len();
    let mut op = Operator { lower: vec![0.0; n], diag: vec![0.0; n], upper: vec![0.0; n] };
    for i in 0..n {
        let f = rates[i];
        let si = s[i];
        if i == 0 {
            // at S = 0 only the decay term survives; above zero the curvature is dropped
            let conv = f * si / h;
            op.upper[0] = conv;
            op.diag[0] = -conv - (f + lambda);
            continue;
        }
        if i == n - 1 {
            // linearity: no curvature, one-sided slope
            let conv = f * si / h;
            op.lower[i] = -conv;
            op.diag[i] = conv - (f + lambda);
            continue;
        }
        let diff = 0.5 * vol * vol * si * si / (h * h);
        let conv = f * si / (2.0 * h);
        if diff >= conv.abs() {
            op.lower[i] = diff - conv;
            op.upper[i] = diff + conv;
        } else {
            // upwind when central differencing would lose monotonicity
            let up = f * si / h;
            op.lower[i] = diff + (-up).max(0.0);
            op.upper[i] = diff + up.max(0.0);
        }
        op.diag[i] = -(op.lower[i] + op.upper[i]) - (f + lambda);
    }
    op
}

fn apply(op: &Operator, v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let mut x = op.diag[i] * v[i];
            if i > 0 {
                x += op.lower[i] * v[i - 1];
            }
            if i + 1 < n {
                x += op.upper[i] * v[i + 1];
            }
            x
        })
        .collect()
}

/// Rate per node from the sign of `V̄ − C − S ∂_S V̄`.
fn policy(s: &[f64], h: f64, v: &[f64], c: &[f64], f_pos: f64, f_neg: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let dv = if i == 0 {
                (v[1] - v[0]) / h
            } else if i == n - 1 {
                (v[i] - v[i - 1]) / h
            } else {
                (v[i + 1] - v[i - 1]) / (2.0 * h)
            };
            if v[i] - c[i] - s[i] * dv > 0.0 {
                f_pos
            } else {
                f_neg
            }
        })
        .collect()
}

const MAX_SWEEPS: usize = 50;

/// Marches the PDE backward from maturity. With `theta < 1` the first two
/// steps are taken fully implicitly to damp the payoff kink.
pub fn solve_predefault_pde(coeffs: &PdeCoefficients, grid: &PdeGrid, spot: f64) -> Result<PdeSolution> {
    grid.validate(spot)?;
    if coeffs.lambda < 0.0 || !(coeffs.vol > 0.0) {
        return Err(Error::Config("PDE needs lambda ≥ 0 and vol > 0".into()));
    }
    let n = grid.n_s + 1;
    let h = (grid.s_max - grid.s_min) / grid.n_s as f64;
    let s: Vec<f64> = (0..n).map(|i| grid.s_min + i as f64 * h).collect();
    let dt = coeffs.maturity / grid.n_t as f64;
    let t: Vec<f64> = (0..=grid.n_t).map(|k| k as f64 * dt).collect();

    let source = |time: f64, rates: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                (rates[i] - coeffs.c_tilde) * (coeffs.collateral_fn)(time, s[i])
                    + coeffs.lambda * (coeffs.theta_fn)(time, s[i])
            })
            .collect()
    };

    let mut surface = vec![Vec::new(); grid.n_t + 1];
    surface[grid.n_t] = s.iter().map(|&x| (coeffs.payoff)(x)).collect();
    let mut max_sweeps = 0;

    for k in (0..grid.n_t).rev() {
        let theta = if grid.theta < 1.0 && k + 2 >= grid.n_t { 1.0 } else { grid.theta };
        let v_old = &surface[k + 1];
        let c_old: Vec<f64> = s.iter().map(|&x| (coeffs.collateral_fn)(t[k + 1], x)).collect();
        let c_new: Vec<f64> = s.iter().map(|&x| (coeffs.collateral_fn)(t[k], x)).collect();
        let rates_old = policy(&s, h, v_old, &c_old, coeffs.f_pos, coeffs.f_neg);
        let explicit: Vec<f64> = if theta < 1.0 {
            let op = operator(&s, h, coeffs.vol, coeffs.lambda, &rates_old);
            let av = apply(&op, v_old);
            let src = source(t[k + 1], &rates_old);
            (0..n).map(|i| v_old[i] + (1.0 - theta) * dt * (av[i] + src[i])).collect()
        } else {
            v_old.clone()
        };

        let mut rates = rates_old;
        let mut sweeps = 0;
        let v_new = loop {
            sweeps += 1;
            let op = operator(&s, h, coeffs.vol, coeffs.lambda, &rates);
            let src = source(t[k], &rates);
            let a: Vec<f64> = op.lower.iter().map(|x| -theta * dt * x).collect();
            let b: Vec<f64> = op.diag.iter().map(|x| 1.0 - theta * dt * x).collect();
            let c: Vec<f64> = op.upper.iter().map(|x| -theta * dt * x).collect();
            let d: Vec<f64> = (0..n).map(|i| explicit[i] + theta * dt * src[i]).collect();
            let v = solve_tridiagonal(&a, &b, &c, &d);
            let next = policy(&s, h, &v, &c_new, coeffs.f_pos, coeffs.f_neg);
            if next == rates {
                break v;
            }
            if sweeps >= MAX_SWEEPS {
                return Err(Error::PolicyIteration(sweeps));
            }
            rates = next;
        };
        max_sweeps = max_sweeps.max(sweeps);
        surface[k] = v_new;
    }
    Ok(PdeSolution { s, t, surface, max_policy_sweeps: max_sweeps })
}

/// Largest deviation of the time-0 value at `spot` across short rates, with
/// every other input held fixed by `make`.
pub fn check_r_invariance(
    make: impl Fn(f64) -> PdeCoefficients,
    grid: &PdeGrid,
    spot: f64,
    r_values: &[f64],
) -> Result<f64> {
    let Some((&r_ref, rest)) = r_values.split_first() else {
        return Ok(0.0);
    };
    let base = solve_predefault_pde(&make(r_ref), grid, spot)?.value_at(spot);
    let mut spread: f64 = 0.0;
    for &r in rest {
        let v = solve_predefault_pde(&make(r), grid, spot)?.value_at(spot);
        spread = spread.max((v - base).abs());
    }
    Ok(spread)
}
