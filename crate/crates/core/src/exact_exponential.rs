//! Closed forms for the exponential kernel without nugget.
//!
//! On sorted inputs the exponential correlation matrix is the covariance of a
//! stationary AR(1) sequence, so `R⁻¹ = VᵀV` with a lower-bidiagonal `V`. On
//! the equidistant grid `xᵢ = (i − 1)/(n − 1)` this gives closed forms for the
//! quadratic form and the determinant, and for `y = x − ½` a closed-form
//! profile likelihood whose maximizer has a known large-`n` expansion.

use crate::error::{GpError, Result};
use crate::kernels::check_points;

/// Equidistant grid on `[0, 1]` with `n` points and `λ = exp(−1/((n − 1)ψ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquidistantSpec {
    pub n: usize,
    pub psi: f64,
    pub lambda: f64,
}

impl EquidistantSpec {
    pub fn new(n: usize, psi: f64) -> Result<Self> {
        if n < 2 {
            return Err(GpError::InvalidParameter(format!("equidistant grid needs n >= 2, got {n}")));
        }
        if !(psi > 0.0) {
            return Err(GpError::InvalidParameter(format!("psi must be positive, got {psi}")));
        }
        let lambda = (-1.0 / ((n - 1) as f64 * psi)).exp();
        Ok(Self { n, psi, lambda })
    }

    /// Builds the spec from `λ` directly; `λ = 0` is the independence limit `ψ → 0`.
    pub fn from_lambda(n: usize, lambda: f64) -> Result<Self> {
        if n < 2 {
            return Err(GpError::InvalidParameter(format!("equidistant grid needs n >= 2, got {n}")));
        }
        check_lambda(lambda)?;
        let psi = if lambda == 0.0 { 0.0 } else { -1.0 / ((n - 1) as f64 * lambda.ln()) };
        Ok(Self { n, psi, lambda })
    }

    pub fn points(&self) -> Vec<f64> {
        equidistant_points(self.n)
    }

    /// `1 − λ²`, accurate as `λ → 1`.
    fn one_minus_lambda_sq(&self) -> f64 {
        if self.psi > 0.0 && self.psi.is_finite() {
            -(-2.0 / ((self.n - 1) as f64 * self.psi)).exp_m1()
        } else {
            1.0 - self.lambda * self.lambda
        }
    }
}

/// `xᵢ = (i − 1)/(n − 1)` for `i = 1..n`; a single point sits at 0.
pub fn equidistant_points(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(GpError::InvalidParameter(format!(
            "lambda must lie in [0, 1) (psi = infinity is a boundary case), got {lambda}"
        )));
    }
    Ok(())
}

/// Lower-bidiagonal factor `V` of `R⁻¹` for the exponential kernel.
///
/// Row 1 is `e₁ᵀ`; row `i ≥ 2` holds `−μᵢ/√(1 − μᵢ²)` at column `i − 1` and
/// `1/√(1 − μᵢ²)` at column `i`, with `μᵢ = exp(−(xᵢ − xᵢ₋₁)/ψ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BidiagFactor {
    n: usize,
    /// `μ₂ … μₙ`
    mu: Vec<f64>,
    /// `1 − μᵢ²`, computed without cancellation.
    one_minus_mu_sq: Vec<f64>,
}

/// Builds `V` for arbitrary strictly increasing points.
pub fn v_factor(psi: f64, points: &[f64]) -> Result<BidiagFactor> {
    if !(psi > 0.0) {
        return Err(GpError::InvalidParameter(format!("psi must be positive, got {psi}")));
    }
    check_points(points)?;
    let gaps: Vec<f64> = points.windows(2).map(|w| w[1] - w[0]).collect();
    let mu = gaps.iter().map(|g| (-g / psi).exp()).collect();
    let one_minus_mu_sq = gaps.iter().map(|g| -(-2.0 * g / psi).exp_m1()).collect();
    Ok(BidiagFactor { n: points.len(), mu, one_minus_mu_sq })
}

impl BidiagFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// `(sub, diag)` entries of row `i` (0-based); row 0 is `(0, 1)`.
    pub fn row_entries(&self, i: usize) -> (f64, f64) {
        if i == 0 {
            return (0.0, 1.0);
        }
        let s = self.one_minus_mu_sq[i - 1].sqrt();
        (-self.mu[i - 1] / s, 1.0 / s)
    }

    /// Dense `V`.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut row = vec![0.0; n];
                let (sub, diag) = self.row_entries(i);
                row[i] = diag;
                if i > 0 {
                    row[i - 1] = sub;
                }
                row
            })
            .collect()
    }

    /// Dense `VᵀV`, i.e. `R⁻¹`.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut g = vec![vec![0.0; n]; n];
        for i in 0..n {
            let (sub, diag) = self.row_entries(i);
            g[i][i] += diag * diag;
            if i > 0 {
                g[i - 1][i - 1] += sub * sub;
                g[i - 1][i] += sub * diag;
                g[i][i - 1] += sub * diag;
            }
        }
        g
    }

    /// `yᵀR⁻¹y = ‖Vy‖²`.
    pub fn quad_form(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.n {
            return Err(GpError::DimensionMismatch { expected: self.n, found: y.len() });
        }
        Ok((0..self.n)
            .map(|i| {
                let (sub, diag) = self.row_entries(i);
                let v = diag * y[i] + if i > 0 { sub * y[i - 1] } else { 0.0 };
                v * v
            })
            .sum())
    }

    /// `ln |R|^{−1/2} = ln |V| = −½ Σ ln(1 − μᵢ²)`.
    pub fn log_det_inv_sqrt(&self) -> f64 {
        -0.5 * self.one_minus_mu_sq.iter().map(|v| v.ln()).sum::<f64>()
    }
}

/// Equidistant-grid quadratic form `yᵀR⁻¹y`:
///
/// `(y₁² + yₙ²)/(1 − λ²) + Σᵢ₌₂ⁿ⁻¹ yᵢ²(1 + λ²)/(1 − λ²) − 2 Σᵢ₌₁ⁿ⁻¹ yᵢyᵢ₊₁ λ/(1 − λ²)`.
pub fn quad_form_equidistant(y: &[f64], spec: &EquidistantSpec) -> Result<f64> {
    check_lambda(spec.lambda)?;
    let n = spec.n;
    if y.len() != n {
        return Err(GpError::DimensionMismatch { expected: n, found: y.len() });
    }
    let lam = spec.lambda;
    let denom = spec.one_minus_lambda_sq();
    let ends = y[0] * y[0] + y[n - 1] * y[n - 1];
    let inner: f64 = y[1..n - 1].iter().map(|v| v * v).sum();
    let cross: f64 = y.windows(2).map(|w| w[0] * w[1]).sum();
    Ok((ends + inner * (1.0 + lam * lam) - 2.0 * cross * lam) / denom)
}

/// `|R|^{−1/2} = (1 − λ²)^{−(n−1)/2}` on the equidistant grid.
pub fn det_inv_sqrt_equidistant(spec: &EquidistantSpec) -> Result<f64> {
    Ok(log_det_inv_sqrt_equidistant(spec)?.exp())
}

/// `ln |R|^{−1/2} = −((n − 1)/2) ln(1 − λ²)`.
pub fn log_det_inv_sqrt_equidistant(spec: &EquidistantSpec) -> Result<f64> {
    check_lambda(spec.lambda)?;
    Ok(-0.5 * (spec.n - 1) as f64 * spec.one_minus_lambda_sq().ln())
}

/// Closed-form `yᵀR⁻¹y` for `yᵢ = xᵢ − ½` on the equidistant grid:
///
/// `½/(1 − λ²) + (n² − 5n + 6)/(12(n − 1)) · (1 + λ²)/(1 − λ²) − (n² − 2n − 3)/(6(n − 1)) · λ/(1 − λ²)`.
pub fn quad_form_linear_model(spec: &EquidistantSpec) -> Result<f64> {
    check_lambda(spec.lambda)?;
    let n = spec.n as f64;
    let lam = spec.lambda;
    let denom = spec.one_minus_lambda_sq();
    let a = (n * n - 5.0 * n + 6.0) / (12.0 * (n - 1.0));
    let b = (n * n - 2.0 * n - 3.0) / (6.0 * (n - 1.0));
    Ok((0.5 + a * (1.0 + lam * lam) - b * lam) / denom)
}

/// Profile log-likelihood of the linear model `y = x − ½` (where the GLS mean
/// is exactly zero), built from the two closed forms above.
pub fn linear_model_profile_loglik(spec: &EquidistantSpec) -> Result<f64> {
    let q = quad_form_linear_model(spec)?;
    Ok(log_det_inv_sqrt_equidistant(spec)? - 0.5 * spec.n as f64 * q.ln())
}

/// Large-`n` expansion of the maximizer of [`linear_model_profile_loglik`]:
/// `n/2 − 7/6 − 7/(18n) − 17/(54n²)`.
pub fn psi_hat_expansion(n: usize) -> f64 {
    let n = n as f64;
    n / 2.0 - 7.0 / 6.0 - 7.0 / (18.0 * n) - 17.0 / (54.0 * n * n)
}
