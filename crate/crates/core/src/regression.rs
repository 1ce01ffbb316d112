//! Cross-path least squares on a power-series basis.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegressionBasis {
    pub order: usize,
}

impl Default for RegressionBasis {
    fn default() -> Self {
        Self { order: 2 }
    }
}

impl RegressionBasis {
    pub fn size(&self) -> usize {
        self.order + 1
    }

    fn eval_into(&self, x: f64, out: &mut [f64]) {
        let mut p = 1.0;
        for o in out.iter_mut().take(self.size()) {
            *o = p;
            p *= x;
        }
    }
}

/// Factorized normal equations `ψψ'` for one cross-section, reusable across
/// several targets.
#[derive(Debug, Clone)]
pub struct Regressor {
    basis: RegressionBasis,
    psi: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl Regressor {
    pub fn new(x: &[f64], basis: RegressionBasis) -> Result<Self> {
        if basis.order < 1 {
            return Err(Error::Regression("basis order must be at least 1".into()));
        }
        let k = basis.size();
        if x.len() < k + 1 {
            return Err(Error::Regression(format!("{} observations for {k} coefficients", x.len())));
        }
        let mut psi = DMatrix::<f64>::zeros(k, x.len());
        let mut row = vec![0.0; k];
        for (i, &xi) in x.iter().enumerate() {
            basis.eval_into(xi, &mut row);
            for (b, &v) in row.iter().enumerate() {
                psi[(b, i)] = v;
            }
        }
        let gram = &psi * psi.transpose();
        let scale = (0..k).map(|b| gram[(b, b)]).fold(0.0, f64::max);
        let chol = gram
            .clone()
            .cholesky()
            .filter(|c| {
                let l = c.l_dirty();
                (0..k).all(|b| l[(b, b)] * l[(b, b)] > 1e-12 * scale)
            })
            .ok_or_else(|| Error::Regression(format!("rank-deficient design for order {}; lower the order", basis.order)))?;
        Ok(Self { basis, psi, chol })
    }

    /// `θ̂ = (ψψ')⁻¹ ψ y`.
    pub fn coefficients(&self, y: &[f64]) -> Vec<f64> {
        let rhs = &self.psi * DVector::from_column_slice(y);
        self.chol.solve(&rhs).iter().copied().collect()
    }

    /// Fitted values at the regression sites.
    pub fn fitted(&self, y: &[f64]) -> Vec<f64> {
        let theta = DVector::from_vec(self.coefficients(y));
        (self.psi.transpose() * theta).iter().copied().collect()
    }

    pub fn basis(&self) -> RegressionBasis {
        self.basis
    }
}

/// Least-squares coefficients of `y` on `ψ(x)`.
pub fn fit_regression(x: &[f64], y: &[f64], basis: RegressionBasis) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(Error::Regression(format!("{} regressors vs {} targets", x.len(), y.len())));
    }
    Ok(Regressor::new(x, basis)?.coefficients(y))
}

pub fn predict(coef: &[f64], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Coefficient of determination of fitted values.
pub fn r_squared(y: &[f64], fitted: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let res: f64 = y.iter().zip(fitted).map(|(a, b)| (a - b).powi(2)).sum();
    if tot == 0.0 {
        1.0
    } else {
        1.0 - res / tot
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn recovers_quadratic() {
        let x: Vec<f64> = (0..50).map(|i| 0.5 + i as f64 * 0.03).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.5 - 2.0 * v + 0.75 * v * v).collect();
        let c = fit_regression(&x, &y, RegressionBasis::default()).unwrap();
        assert!((c[0] - 1.5).abs() < 1e-10 && (c[1] + 2.0).abs() < 1e-10 && (c[2] - 0.75).abs() < 1e-10);
        for (xi, yi) in x.iter().zip(&y) {
            assert!((predict(&c, *xi) - yi).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_target() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 / 10.0).collect();
        let c = fit_regression(&x, &[3.0; 20], RegressionBasis::default()).unwrap();
        assert!((c[0] - 3.0).abs() < 1e-10 && c[1].abs() < 1e-10 && c[2].abs() < 1e-10);
    }

    #[test]
    fn slope_within_sampling_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + rng.sample::<f64, _>(StandardNormal)).collect();
        let c = fit_regression(&x, &y, RegressionBasis { order: 1 }).unwrap();
        // OLS slope sd = σ / (sd(x) √n), sd of U(0,2) is 2/√12
        let se = 1.0 / ((2.0 / 12f64.sqrt()) * (n as f64).sqrt());
        assert!((c[1] - 2.0).abs() < 4.0 * se);
    }

    #[test]
    fn degenerate_design_is_an_error() {
        assert!(matches!(
            fit_regression(&[1.0; 10], &[2.0; 10], RegressionBasis::default()),
            Err(Error::Regression(_))
        ));
        assert!(fit_regression(&[1.0, 2.0], &[1.0, 2.0], RegressionBasis::default()).is_err());
        assert!(Regressor::new(&[1.0, 2.0, 3.0], RegressionBasis { order: 0 }).is_err());
    }

    #[test]
    fn r_squared_bounds() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(r_squared(&y, &y), 1.0);
        assert!(r_squared(&y, &[2.0, 2.0, 2.0]).abs() < 1e-15);
    }
}
