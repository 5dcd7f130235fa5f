//! Shared numerical kernels: compensated summation, composite Simpson
//! integration on uniform grids, Gauss-Legendre rules, cubic grid
//! interpolation, and the dense Kronecker-vectorized Sylvester solve used
//! for Lyapunov equations of small models.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("sylvester system is singular (eigenvalue cancellation)")]
    SingularSylvester,
    #[error("dimension {0} exceeds the dense-solver limit {1}")]
    DimensionTooLarge(usize, usize),
}

/// Neumaier-compensated accumulator. Sums with cancellation-prone terms
/// (decomposition remainders, long trajectories) go through this instead of
/// a bare `f64`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator of values.
pub fn csum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Cumulative integral of uniformly sampled `f` with spacing `h`,
/// fourth-order accurate at every node (composite Simpson at even offsets,
/// half-panel Newton-Cotes at odd offsets). Requires an odd number of
/// samples so the final value is the plain composite Simpson integral.
pub fn cumulative_simpson(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 3 && n % 2 == 1, "cumulative_simpson needs an odd sample count >= 3");
    let mut out = vec![0.0; n];
    let mut acc = CompensatedSum::new();
    let mut i = 0;
    while i + 2 < n {
        let half = h * (5.0 * f[i] + 8.0 * f[i + 1] - f[i + 2]) / 12.0;
        let full = h * (f[i] + 4.0 * f[i + 1] + f[i + 2]) / 3.0;
        let mut mid = acc;
        mid.add(half);
        out[i + 1] = mid.value();
        acc.add(full);
        out[i + 2] = acc.value();
        i += 2;
    }
    out
}

/// Composite Simpson integral over a uniform grid (odd sample count).
pub fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    assert!(n >= 3 && n % 2 == 1, "simpson needs an odd sample count >= 3");
    let mut acc = CompensatedSum::new();
    let mut i = 0;
    while i + 2 < n {
        acc.add(h * (f[i] + 4.0 * f[i + 1] + f[i + 2]) / 3.0);
        i += 2;
    }
    acc.value()
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [0, 1],
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre_01(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push(((1.0 + x) / 2.0, w / 2.0));
    }
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Uniformly sampled scalar function with local-cubic (four-point Lagrange)
/// interpolation. Queries outside the grid extend linearly from the nearest
/// edge; trajectories live many standard deviations inside the domain, so
/// the extension only guards against astronomically rare excursions.
#[derive(Debug, Clone)]
pub struct GridFn {
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

impl GridFn {
    pub fn new(lo: f64, step: f64, values: Vec<f64>) -> Self {
        assert!(values.len() >= 4 && step > 0.0);
        Self { lo, step, values }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.step * (self.values.len() - 1) as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let hi = self.hi();
        if x < self.lo {
            let slope = (self.values[1] - self.values[0]) / self.step;
            return self.values[0] + slope * (x - self.lo);
        }
        if x > hi {
            let slope = (self.values[n - 1] - self.values[n - 2]) / self.step;
            return self.values[n - 1] + slope * (x - hi);
        }
        let u = (x - self.lo) / self.step;
        let cell = (u.floor() as usize).min(n - 2);
        // Four-point stencil around the cell, clamped at the edges.
        let j = cell.saturating_sub(1).min(n - 4);
        let s = u - j as f64;
        let f = &self.values[j..j + 4];
        let l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
        let l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
        let l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
        let l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
        f[0] * l0 + f[1] * l1 + f[2] * l2 + f[3] * l3
    }
}

/// Solves `P X + X R = C` for X by vectorizing to the dense
/// `(I (x) P + R^T (x) I) vec(X) = vec(C)` system. Dimensions are capped at
/// 10, so the Kronecker system is at most 100 x 100.
pub fn solve_sylvester(
    p: &DMatrix<f64>,
    r: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> Result<DMatrix<f64>, NumericsError> {
    let d = p.nrows();
    const MAX_DIM: usize = 10;
    if d > MAX_DIM {
        return Err(NumericsError::DimensionTooLarge(d, MAX_DIM));
    }
    assert!(p.is_square() && r.is_square() && r.nrows() == d);
    assert!(c.nrows() == d && c.ncols() == d);
    let eye = DMatrix::<f64>::identity(d, d);
    let k = eye.kronecker(p) + r.transpose().kronecker(&eye);
    let rhs = DVector::from_column_slice(c.as_slice());
    let lu = k.lu();
    let x = lu.solve(&rhs).ok_or(NumericsError::SingularSylvester)?;
    Ok(DMatrix::from_column_slice(d, d, x.as_slice()))
}

/// Solves the Lyapunov equation `A S + S A^T = Q`.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>, NumericsError> {
    solve_sylvester(a, &a.transpose(), q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive() {
        let mut acc = CompensatedSum::new();
        acc.add(1.0);
        for _ in 0..10_000 {
            acc.add(1e-16);
        }
        assert!((acc.value() - (1.0 + 1e-12)).abs() < 1e-17);
    }

    #[test]
    fn cumulative_simpson_cubic_is_exact() {
        // Simpson integrates cubics exactly; check both even and odd nodes.
        let n = 101;
        let h = 0.01;
        let f: Vec<f64> = (0..n).map(|i| {
            let x = i as f64 * h;
            x * x * x - 2.0 * x
        }).collect();
        let cum = cumulative_simpson(&f, h);
        for (i, v) in cum.iter().enumerate() {
            let x = i as f64 * h;
            let exact = x.powi(4) / 4.0 - x * x;
            assert!((v - exact).abs() < 1e-14, "node {i}: {v} vs {exact}");
        }
    }

    #[test]
    fn cumulative_simpson_converges_fourth_order() {
        let integral = |n: usize| {
            let h = 1.0 / (n - 1) as f64;
            let f: Vec<f64> = (0..n).map(|i| (i as f64 * h).exp()).collect();
            cumulative_simpson(&f, h)[n - 1]
        };
        let exact = std::f64::consts::E - 1.0;
        let e1 = (integral(101) - exact).abs();
        let e2 = (integral(201) - exact).abs();
        assert!(e1 < 1e-8);
        assert!(e2 < e1 / 12.0, "expected ~16x reduction, got {e1} -> {e2}");
    }

    #[test]
    fn gauss_legendre_exactness_and_weights() {
        for n in [5, 8, 16] {
            let rule = gauss_legendre_01(n);
            let wsum: f64 = rule.iter().map(|(_, w)| w).sum();
            assert!((wsum - 1.0).abs() < 1e-14);
            // Exact for polynomials through degree 2n-1.
            let deg = 2 * n - 1;
            let quad: f64 = rule.iter().map(|(t, w)| w * t.powi(deg as i32)).sum();
            assert!((quad - 1.0 / (deg as f64 + 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn grid_fn_reproduces_smooth_function() {
        let n = 2001;
        let lo = -4.0;
        let step = 8.0 / (n - 1) as f64;
        let values: Vec<f64> = (0..n).map(|i| (lo + i as f64 * step).sin()).collect();
        let f = GridFn::new(lo, step, values);
        for k in 0..500 {
            let x = -3.9 + 7.8 * (k as f64 / 499.0);
            assert!((f.eval(x) - x.sin()).abs() < 1e-9);
        }
        // Nodes are reproduced exactly.
        assert_eq!(f.eval(lo + 7.0 * step), (lo + 7.0 * step).sin());
    }

    #[test]
    fn sylvester_residual_small() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, -0.1, 1.5, 0.2, 0.0, 0.4, 1.0]);
        let q = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.1, 0.2, 2.0, 0.0, 0.1, 0.0, 1.5]);
        let s = solve_lyapunov(&a, &q).unwrap();
        let resid = &a * &s + &s * a.transpose() - q;
        assert!(resid.amax() < 1e-12);
    }

    #[test]
    fn sylvester_rejects_cancellation() {
        // A and -A share eigenvalues, so A X + X (-A) = C is singular.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let c = DMatrix::identity(2, 2);
        assert!(solve_sylvester(&a, &(-a.clone()), &c).is_err());
    }
}
