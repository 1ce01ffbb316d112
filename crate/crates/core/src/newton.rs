//! Newton-Raphson for small systems with a forward-difference Jacobian.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Relative bump; the absolute bump is `rel_bump · max(1, |x|)`.
    pub rel_bump: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 50, rel_bump: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOutcome<const N: usize> {
    pub x: [f64; N],
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

fn max_norm<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `a·x = b` in place by Gaussian elimination with partial pivoting.
fn solve_linear<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for c in 0..N {
        let p = (c..N).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in (c + 1)..N {
            let f = a[r][c] / a[c][c];
            for k in c..N {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; N];
    for c in (0..N).rev() {
        let s: f64 = ((c + 1)..N).map(|k| a[c][k] * x[k]).sum();
        x[c] = (b[c] - s) / a[c][c];
    }
    Some(x)
}

/// Iterates until the residual max-norm drops below `tol`; `iterations` counts Newton updates.
pub fn newton_solve<const N: usize, F>(residual: F, x0: [f64; N], opts: &NewtonOptions) -> NewtonOutcome<N>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let mut x = x0;
    let mut r = residual(&x);
    for it in 0..=opts.max_iter {
        let norm = max_norm(&r);
        if norm <= opts.tol {
            return NewtonOutcome { x, iterations: it, converged: true, residual: norm };
        }
        if it == opts.max_iter {
            break;
        }
        let mut jac = [[0.0; N]; N];
        for k in 0..N {
            let h = opts.rel_bump * x[k].abs().max(1.0);
            let mut xb = x;
            xb[k] += h;
            let rb = residual(&xb);
            for i in 0..N {
                jac[i][k] = (rb[i] - r[i]) / h;
            }
        }
        let Some(dx) = solve_linear(jac, r) else { break };
        for k in 0..N {
            x[k] -= dx[k];
        }
        r = residual(&x);
    }
    NewtonOutcome { x, iterations: opts.max_iter, converged: false, residual: max_norm(&r) }
}
