//! Kriging meta-model with a nugget, and its interpolating correction.
//!
//! `m_ν(x) = β + t(x)ᵀ R_ν⁻¹ (y − β)` uses the plain correlation vector
//! `t(x) = (r(x, x₁), …, r(x, xₙ))`, so for `ν > 0` it misses the data by
//! `εᵢ = yᵢ − m_ν(xᵢ)`. The interpolating model adds an inverse-distance
//! weighted blend of those deviations:
//!
//! ```text
//! m(x) = m_ν(x) + Σ εᵢ |x − xᵢ|⁻² / Σ |x − xᵢ|⁻²
//! ```

use crate::error::Result;
use crate::kernels::KernelSpec;
use crate::likelihood::{Dataset, FitResult};
use crate::linalg::{cholesky, dot};

/// Inputs within this relative distance of a design point return that point's output.
pub const NODE_HIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Emulator {
    dataset: Dataset,
    kernel: KernelSpec,
    beta: f64,
    /// `R_ν⁻¹ (y − β)`
    solved_residual: Vec<f64>,
    /// `εᵢ = yᵢ − m_ν(xᵢ)`
    deviations: Vec<f64>,
}

impl Emulator {
    /// Precomputes `R_ν⁻¹(y − β)` and the deviations at the design points.
    pub fn new(dataset: Dataset, kernel: KernelSpec, beta: f64) -> Result<Self> {
        let factor = cholesky(&kernel.corr_matrix(dataset.points())?)?;
        let resid: Vec<f64> = dataset.y().iter().map(|v| v - beta).collect();
        let solved_residual = factor.solve(&resid)?;
        let mut e = Self { dataset, kernel, beta, solved_residual, deviations: Vec::new() };
        e.deviations =
            e.dataset.points().iter().zip(e.dataset.y()).map(|(&x, &y)| y - e.predict_metamodel(x)).collect();
        Ok(e)
    }

    /// Emulator at the parameters of a previous fit (`β̂`, `ψ̂`, `ν`).
    pub fn from_fit(dataset: Dataset, fit: &FitResult) -> Result<Self> {
        let kernel = KernelSpec::new(fit.family, fit.psi_hat, fit.nugget)?;
        Self::new(dataset, kernel, fit.beta_hat)
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn solved_residual(&self) -> &[f64] {
        &self.solved_residual
    }

    pub fn deviations(&self) -> &[f64] {
        &self.deviations
    }

    /// `m_ν(x)`
    pub fn predict_metamodel(&self, x: f64) -> f64 {
        self.beta + dot(&self.kernel.corr_vector(x, self.dataset.points()), &self.solved_residual)
    }

    /// Inverse-distance-weighted blend of the deviations at `x`.
    pub fn idw_correction(&self, x: f64) -> f64 {
        let pts = self.dataset.points();
        if let Some(j) = self.node_hit(x) {
            return self.deviations[j];
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (&p, &eps) in pts.iter().zip(&self.deviations) {
            let w = (x - p).powi(-2);
            num += w * eps;
            den += w;
        }
        if den.is_finite() && den > 0.0 {
            num / den
        } else {
            // far field: weights underflow together, fall back to the plain mean
            self.deviations.iter().sum::<f64>() / self.deviations.len() as f64
        }
    }

    /// `m(x) = m_ν(x) + IDW(ε)(x)`; exact at the design points.
    pub fn predict_interpolating(&self, x: f64) -> f64 {
        if let Some(j) = self.node_hit(x) {
            return self.dataset.y()[j];
        }
        self.predict_metamodel(x) + self.idw_correction(x)
    }

    fn node_hit(&self, x: f64) -> Option<usize> {
        self.dataset.points().iter().position(|&p| (x - p).abs() <= NODE_HIT_TOLERANCE * p.abs().max(x.abs()).max(1.0))
    }
}
