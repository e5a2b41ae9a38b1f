//! Correlation functions and the nugget-augmented correlation matrix.

use serde::{Deserialize, Serialize};

use crate::error::{GpError, Result};
use crate::linalg::SymMatrix;

/// Two inputs closer than this, relative to their magnitude, are treated as the same point.
pub const DUPLICATE_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `exp(-|d| / ψ)`
    Exponential,
    /// `exp(-d² / ψ)`; ψ divides the squared distance, not ψ².
    Gaussian,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Exponential => "exponential",
            Family::Gaussian => "gaussian",
        }
    }

    /// Correlation at signed distance `d` for correlation length `psi`.
    #[inline]
    pub fn corr_at(self, d: f64, psi: f64) -> f64 {
        match self {
            Family::Exponential => (-d.abs() / psi).exp(),
            Family::Gaussian => (-d * d / psi).exp(),
        }
    }

    /// Derivative of [`Family::corr_at`] with respect to `ln ψ`.
    #[inline]
    pub fn corr_dlog_psi(self, d: f64, psi: f64) -> f64 {
        match self {
            Family::Exponential => self.corr_at(d, psi) * d.abs() / psi,
            Family::Gaussian => self.corr_at(d, psi) * d * d / psi,
        }
    }
}

impl std::str::FromStr for Family {
    type Err = GpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" | "exp" => Ok(Family::Exponential),
            "gaussian" | "gauss" => Ok(Family::Gaussian),
            other => Err(GpError::InvalidParameter(format!("unknown kernel family `{other}`"))),
        }
    }
}

/// Correlation family, correlation length `psi` and nugget fraction `nu`.
///
/// The nugget enters as the convex combination `(1 − ν) r(xᵢ − xⱼ) + ν δᵢⱼ`,
/// so the correlation matrix keeps a unit diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: Family,
    pub psi: f64,
    pub nu: f64,
}

impl KernelSpec {
    pub fn new(family: Family, psi: f64, nu: f64) -> Result<Self> {
        if !(psi > 0.0) || !psi.is_finite() {
            return Err(GpError::InvalidParameter(format!("psi must be positive and finite, got {psi}")));
        }
        check_nugget(nu)?;
        Ok(Self { family, psi, nu })
    }

    /// Correlation between two inputs. The nugget is not applied here; it acts
    /// on matrix indices, not on distances.
    #[inline]
    pub fn corr(&self, x: f64, x2: f64) -> f64 {
        self.family.corr_at(x - x2, self.psi)
    }

    /// The correlation matrix `R_ν` on strictly increasing `points`.
    pub fn corr_matrix(&self, points: &[f64]) -> Result<SymMatrix> {
        check_points(points)?;
        let keep = 1.0 - self.nu;
        SymMatrix::from_fn(points.len(), |i, j| if i == j { 1.0 } else { keep * self.corr(points[i], points[j]) })
    }

    /// Entrywise derivative of `R_ν` with respect to `ln ψ`.
    pub fn corr_matrix_dlog_psi(&self, points: &[f64]) -> Result<SymMatrix> {
        let keep = 1.0 - self.nu;
        SymMatrix::from_fn(points.len(), |i, j| {
            if i == j {
                0.0
            } else {
                keep * self.family.corr_dlog_psi(points[i] - points[j], self.psi)
            }
        })
    }

    /// Correlation vector `t(x) = (r(x, x₁), …, r(x, xₙ))` without nugget.
    pub fn corr_vector(&self, x: f64, points: &[f64]) -> Vec<f64> {
        points.iter().map(|&p| self.corr(x, p)).collect()
    }
}

pub(crate) fn check_nugget(nu: f64) -> Result<()> {
    if !(0.0..1.0).contains(&nu) {
        return Err(GpError::InvalidParameter(format!("nugget must lie in [0, 1), got {nu}")));
    }
    Ok(())
}

/// Rejects inputs that are not strictly increasing.
pub fn check_points(points: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(GpError::InvalidParameter("at least one input point is required".into()));
    }
    if let Some(bad) = points.iter().position(|v| !v.is_finite()) {
        return Err(GpError::InvalidParameter(format!("input point {bad} is not finite")));
    }
    for (index, w) in points.windows(2).enumerate() {
        let gap = w[1] - w[0];
        let scale = w[0].abs().max(w[1].abs());
        if gap.abs() <= DUPLICATE_TOLERANCE * scale || gap == 0.0 {
            return Err(GpError::DuplicatePoints { index });
        }
        if gap < 0.0 {
            return Err(GpError::UnsortedPoints { index });
        }
    }
    Ok(())
}

/// Converts additive jitter `R + jI` into the equivalent nugget fraction.
///
/// `R + jI = (1 + j) R_ν` with `ν = j / (1 + j)`; the returned pair is
/// `(ν, 1 + j)`, the nugget and the overall scale factor.
pub fn jitter_to_nugget(jitter: f64) -> (f64, f64) {
    (jitter / (1.0 + jitter), 1.0 + jitter)
}

/// Inverse of [`jitter_to_nugget`]: the jitter `ν / (1 − ν)` such that
/// `R_ν = (1 − ν)(R + jI)`.
pub fn nugget_to_jitter(nu: f64) -> f64 {
    nu / (1.0 - nu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cholesky;
    use approx::assert_relative_eq;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn corr_values() {
        let e = KernelSpec::new(Family::Exponential, 1.0, 0.0).unwrap();
        assert_relative_eq!(e.corr(0.0, 1.0), (-1.0_f64).exp());
        assert_relative_eq!(e.corr(0.3, 0.3), 1.0);
        let g = KernelSpec::new(Family::Gaussian, 2.0, 0.0).unwrap();
        assert_relative_eq!(g.corr(1.0, 0.0), (-0.5_f64).exp());
        assert_relative_eq!(g.corr(0.606531, 0.606531), 1.0);
    }

    #[test]
    fn spec_validation() {
        assert!(KernelSpec::new(Family::Gaussian, 0.0, 0.0).is_err());
        assert!(KernelSpec::new(Family::Gaussian, -1.0, 0.0).is_err());
        assert!(KernelSpec::new(Family::Gaussian, 1.0, 1.0).is_err());
        assert!(KernelSpec::new(Family::Gaussian, 1.0, -0.1).is_err());
        assert!(KernelSpec::new(Family::Gaussian, 1.0, 0.999).is_ok());
    }

    #[test]
    fn plain_matrix_two_points() {
        let k = KernelSpec::new(Family::Exponential, 1.0, 0.0).unwrap();
        let m = k.corr_matrix(&[0.0, 1.0]).unwrap();
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(1, 1), 1.0);
        assert_relative_eq!(m.get(0, 1), (-1.0_f64).exp());
    }

    #[test]
    fn nugget_near_one_is_near_identity() {
        let k = KernelSpec::new(Family::Gaussian, 5.0, 1.0 - 1e-9).unwrap();
        let m = k.corr_matrix(&grid(6)).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((m.get(i, j) - expected).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn nugget_is_convex_combination() {
        let pts = grid(9);
        for family in [Family::Exponential, Family::Gaussian] {
            let plain = KernelSpec::new(family, 0.37, 0.0).unwrap().corr_matrix(&pts).unwrap();
            let nu = 0.05;
            let aug = KernelSpec::new(family, 0.37, nu).unwrap().corr_matrix(&pts).unwrap();
            for i in 0..9 {
                for j in 0..9 {
                    let id = if i == j { 1.0 } else { 0.0 };
                    assert_eq!(aug.get(i, j), aug.get(j, i));
                    assert_relative_eq!(aug.get(i, j), (1.0 - nu) * plain.get(i, j) + nu * id, epsilon = 1e-16);
                }
            }
        }
    }

    #[test]
    fn duplicate_and_unsorted_points() {
        let k = KernelSpec::new(Family::Gaussian, 1.0, 0.0).unwrap();
        assert_eq!(k.corr_matrix(&[0.0, 0.5, 0.5]), Err(GpError::DuplicatePoints { index: 1 }));
        assert_eq!(k.corr_matrix(&[0.0, 0.7, 0.5]), Err(GpError::UnsortedPoints { index: 1 }));
        assert!(k.corr_matrix(&[1.0, 1.0 + 1e-16]).is_err());
        assert!(k.corr_matrix(&[]).is_err());
    }

    #[test]
    fn nugget_keeps_gaussian_factorizable() {
        for n in [5, 20, 50, 100] {
            for psi in [1e-2, 1.0, 1e2, 1e4] {
                let k = KernelSpec::new(Family::Gaussian, psi, 0.001).unwrap();
                assert!(cholesky(&k.corr_matrix(&grid(n)).unwrap()).is_ok(), "n={n} psi={psi}");
            }
        }
    }

    #[test]
    fn nugget_jitter_round_trip() {
        let (nu, scale) = jitter_to_nugget(0.25);
        assert_relative_eq!(nu, 0.2);
        assert_relative_eq!(scale, 1.25);
        assert_relative_eq!(nugget_to_jitter(nu), 0.25);
    }

    #[test]
    fn dlog_psi_matches_finite_difference() {
        for family in [Family::Exponential, Family::Gaussian] {
            let (d, psi) = (0.4, 0.8);
            let h: f64 = 1e-6;

            let fd = (family.corr_at(d, psi * h.exp()) - family.corr_at(d, psi * (-h).exp())) / (2.0 * h);
            assert_relative_eq!(family.corr_dlog_psi(d, psi), fd, max_relative = 1e-8);
        }
    }
}
