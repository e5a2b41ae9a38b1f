//! Profile likelihood of the correlation length.
//!
//! With a constant trend the mean and variance have closed-form maximizers,
//!
//! ```text
//! β̂  = (1ᵀR⁻¹1)⁻¹ 1ᵀR⁻¹y
//! σ̂² = (y − 1β̂)ᵀR⁻¹(y − 1β̂) / n
//! ```
//!
//! and substituting them leaves the one-dimensional profile
//!
//! ```text
//! L(ψ) = ln |R|^{-1/2} − (n/2) ln[(y − 1β̂)ᵀR⁻¹(y − 1β̂)]
//! ```
//!
//! with the likelihood's additive constants dropped. [`fit_mle`] maximizes
//! `L` by a log-spaced scan, golden-section refinement of the best bracket,
//! and a final bisection on the analytic slope `dL/d ln ψ`.
//!
//! Points where the correlation matrix cannot be factored, or where its
//! 1-norm condition number exceeds [`RELIABLE_CONDITION_LIMIT`], are flagged
//! [`PointFlag::NotPd`] and skipped: past that limit the double-precision
//! profile is dominated by rounding and produces spurious local maxima.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GpError, Result};
use crate::kernels::{check_nugget, check_points, Family, KernelSpec};
use crate::linalg::{cholesky, condition_number, dot, CholFactor, Condition};
use crate::optimize::{bisect_root, golden_section_max};

/// Largest 1-norm condition number at which a profile value is trusted.
pub const RELIABLE_CONDITION_LIMIT: f64 = 1e14;

/// Profile values closer than this (relative, floor 1) are treated as equal.
///
/// Where `R` is numerically the identity (tiny `ψ`) the profile is flat and
/// its grid values differ only by rounding; without a margin the argmax there
/// would move under a rescaling of `y`.
pub const PROFILE_TIE_TOLERANCE: f64 = 1e-10;

fn tie_margin(v: f64) -> f64 {
    PROFILE_TIE_TOLERANCE * v.abs().max(1.0)
}

/// Quadratic forms at or below this are treated as an exactly fitted residual.
pub const DEGENERATE_QUAD_FORM: f64 = 1e-300;

/// Design points with the deterministic model outputs observed there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    /// Validates strictly increasing inputs and finite outputs of equal length.
    pub fn new(points: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if points.len() != y.len() {
            return Err(GpError::DimensionMismatch { expected: points.len(), found: y.len() });
        }
        check_points(&points)?;
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(GpError::InvalidParameter(format!("output {i} is not finite")));
        }
        Ok(Self { points, y })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.y.iter().all(|&v| v == self.y[0])
    }

    /// Same inputs, outputs transformed by `f`.
    pub fn map_y(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.points.clone(), self.y.iter().map(|&v| f(v)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointFlag {
    Ok,
    /// Not factorable, or beyond [`RELIABLE_CONDITION_LIMIT`].
    NotPd,
    /// Residual quadratic form vanished; `ln` would diverge.
    Degenerate,
}

impl PointFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            PointFlag::Ok => "ok",
            PointFlag::NotPd => "not_pd",
            PointFlag::Degenerate => "degenerate",
        }
    }
}

/// Profile likelihood value at one `ψ`; `loglik` is NaN unless `flag` is `Ok`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileValue {
    pub loglik: f64,
    pub flag: PointFlag,
}

/// Generalized-least-squares mean `β̂` under the kernel's correlation.
pub fn beta_hat(d: &Dataset, k: &KernelSpec) -> Result<f64> {
    let factor = cholesky(&k.corr_matrix(d.points())?)?;
    gls_mean(&factor, d.y())
}

/// `σ̂² = (y − β)ᵀR_ν⁻¹(y − β) / n`.
pub fn sigma2_hat(d: &Dataset, k: &KernelSpec, beta: f64) -> Result<f64> {
    let factor = cholesky(&k.corr_matrix(d.points())?)?;
    let resid: Vec<f64> = d.y().iter().map(|v| v - beta).collect();
    Ok(factor.quad_form(&resid)? / d.len() as f64)
}

fn gls_mean(factor: &CholFactor, y: &[f64]) -> Result<f64> {
    let ones = vec![1.0; y.len()];
    let z1 = factor.forward(&ones)?;
    let zy = factor.forward(y)?;
    Ok(dot(&z1, &zy) / dot(&z1, &z1))
}

/// Everything computed at one `ψ` when the point is usable.
struct Evaluation {
    loglik: f64,
    beta: f64,
    sigma2: f64,
}

fn evaluate(d: &Dataset, k: &KernelSpec) -> std::result::Result<Evaluation, PointFlag> {
    let r = k.corr_matrix(d.points()).map_err(|_| PointFlag::NotPd)?;
    let factor = cholesky(&r).map_err(|_| PointFlag::NotPd)?;
    if r.norm_1() * factor.inverse().norm_1() > RELIABLE_CONDITION_LIMIT {
        return Err(PointFlag::NotPd);
    }
    let beta = gls_mean(&factor, d.y()).map_err(|_| PointFlag::NotPd)?;
    let resid: Vec<f64> = d.y().iter().map(|v| v - beta).collect();
    let quad = factor.quad_form(&resid).map_err(|_| PointFlag::NotPd)?;
    if !(quad > DEGENERATE_QUAD_FORM) {
        return Err(PointFlag::Degenerate);
    }
    let n = d.len() as f64;
    Ok(Evaluation { loglik: -0.5 * factor.log_det() - 0.5 * n * quad.ln(), beta, sigma2: quad / n })
}

fn check_psi(psi: f64) -> Result<()> {
    if !(psi > 0.0) || !psi.is_finite() {
        return Err(GpError::InvalidParameter(format!("psi must be positive and finite, got {psi}")));
    }
    Ok(())
}

/// Evaluates `L(ψ)` with `β̂` recomputed at this `ψ`.
pub fn profile_loglik(d: &Dataset, family: Family, nu: f64, psi: f64) -> Result<ProfileValue> {
    check_psi(psi)?;
    let k = KernelSpec::new(family, psi, nu)?;
    Ok(match evaluate(d, &k) {
        Ok(e) => ProfileValue { loglik: e.loglik, flag: PointFlag::Ok },
        Err(flag) => ProfileValue { loglik: f64::NAN, flag },
    })
}

/// Analytic `dL/d ln ψ`.
///
/// By the envelope argument `β̂` can be held fixed, giving
/// `−½ tr(R⁻¹Ṙ) + (n/2) αᵀṘα / (rᵀα)` with `r = y − β̂`, `α = R⁻¹r` and
/// `Ṙ = ∂R/∂ln ψ`.
pub fn profile_loglik_slope(d: &Dataset, family: Family, nu: f64, psi: f64) -> Result<f64> {
    check_psi(psi)?;
    let k = KernelSpec::new(family, psi, nu)?;
    let factor = cholesky(&k.corr_matrix(d.points())?)?;
    let dr = k.corr_matrix_dlog_psi(d.points())?;
    let inv = factor.inverse();
    let n = d.len();
    let beta = gls_mean(&factor, d.y())?;
    let resid: Vec<f64> = d.y().iter().map(|v| v - beta).collect();
    let alpha = factor.solve(&resid)?;
    let quad = dot(&resid, &alpha);
    let trace: f64 = (0..n).map(|i| dot(inv.row(i), dr.row(i))).sum();
    let dr_alpha = dr.mul_vec(&alpha)?;
    Ok(-0.5 * trace + 0.5 * n as f64 * dot(&alpha, &dr_alpha) / quad)
}

/// `L(ψ)` on a log-spaced grid with per-point flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LikelihoodProfile {
    pub family: Family,
    pub nu: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub flags: Vec<PointFlag>,
}

impl LikelihoodProfile {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn ok_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.flags[i] == PointFlag::Ok).collect()
    }

    /// Interior grid points above both (usable) neighbours by more than
    /// [`PROFILE_TIE_TOLERANCE`].
    pub fn grid_modes(&self) -> Vec<usize> {
        let ok = |i: usize| self.flags[i] == PointFlag::Ok;
        let above = |i: usize, j: usize| self.values[i] > self.values[j] + tie_margin(self.values[i]);
        (1..self.len().saturating_sub(1))
            .filter(|&i| ok(i - 1) && ok(i) && ok(i + 1) && above(i, i - 1) && above(i, i + 1))
            .collect()
    }

    /// First usable index within [`PROFILE_TIE_TOLERANCE`] of the largest value.
    pub fn argmax(&self) -> Option<usize> {
        let ok = self.ok_indices();
        let top = ok.iter().map(|&i| self.values[i]).fold(f64::NEG_INFINITY, f64::max);
        ok.into_iter().find(|&i| self.values[i] >= top - tie_margin(top))
    }
}

/// Smallest grid accepted by [`scan_profile`].
pub const MIN_GRID_SIZE: usize = 16;

/// `grid_size` log-spaced values from `psi_min` to `psi_max` inclusive.
pub fn log_grid(psi_min: f64, psi_max: f64, grid_size: usize) -> Result<Vec<f64>> {
    if !(psi_min > 0.0 && psi_min < psi_max && psi_max.is_finite()) {
        return Err(GpError::InvalidParameter(format!("need 0 < psi_min < psi_max, got [{psi_min}, {psi_max}]")));
    }
    if grid_size < MIN_GRID_SIZE {
        return Err(GpError::InvalidParameter(format!("grid size must be at least {MIN_GRID_SIZE}, got {grid_size}")));
    }
    let (lo, hi) = (psi_min.ln(), psi_max.ln());
    let step = (hi - lo) / (grid_size - 1) as f64;
    Ok((0..grid_size)
        .map(|i| match i {
            0 => psi_min,
            _ if i + 1 == grid_size => psi_max,
            _ => (lo + step * i as f64).exp(),
        })
        .collect())
}

/// Evaluates the profile on a log grid. Infeasible points are flagged, never fatal.
pub fn scan_profile(
    d: &Dataset,
    family: Family,
    nu: f64,
    psi_min: f64,
    psi_max: f64,
    grid_size: usize,
) -> Result<LikelihoodProfile> {
    check_nugget(nu)?;
    let grid = log_grid(psi_min, psi_max, grid_size)?;
    // grid order is preserved by collect, so output does not depend on scheduling
    let evaluated: Vec<ProfileValue> = grid
        .par_iter()
        .with_min_len(8)
        .map(|&psi| {
            let k = KernelSpec { family, psi, nu };
            match evaluate(d, &k) {
                Ok(e) => ProfileValue { loglik: e.loglik, flag: PointFlag::Ok },
                Err(flag) => ProfileValue { loglik: f64::NAN, flag },
            }
        })
        .collect();
    Ok(LikelihoodProfile {
        family,
        nu,
        grid,
        values: evaluated.iter().map(|v| v.loglik).collect(),
        flags: evaluated.iter().map(|v| v.flag).collect(),
    })
}

/// An interior local maximum of the profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub psi: f64,
    pub loglik: f64,
}

/// Maximizes `L` over `[lo, hi]` (in ψ) by golden section in `ln ψ`, then
/// polishes the result by bisection on the analytic slope.
fn refine_max(d: &Dataset, family: Family, nu: f64, lo: f64, hi: f64, tol: f64) -> Mode {
    let value = |t: f64| {
        let k = KernelSpec { family, psi: t.exp(), nu };
        evaluate(d, &k).map(|e| e.loglik).unwrap_or(f64::NEG_INFINITY)
    };
    let (t_golden, l_golden) = golden_section_max(value, lo.ln(), hi.ln(), tol);
    let slope = |t: f64| profile_loglik_slope(d, family, nu, t.exp()).unwrap_or(f64::NAN);
    let polish = |a: f64, b: f64| {
        bisect_root(slope, a, b, 1e-14 * t_golden.abs().max(1.0))
            .filter(|_| slope(a) > 0.0)
            .map(|t| (t, value(t)))
            .filter(|&(_, l)| l >= l_golden - 1e-9 * l_golden.abs().max(1.0))
    };
    let width = 10.0 * tol;
    let (t, l) =
        polish(t_golden - width, t_golden + width).or_else(|| polish(lo.ln(), hi.ln())).unwrap_or((t_golden, l_golden));
    Mode { psi: t.exp(), loglik: l }
}

/// Refines every strict interior grid maximum of `p`; sorted by `ψ`.
pub fn find_modes(d: &Dataset, p: &LikelihoodProfile) -> Vec<Mode> {
    find_modes_with_tol(d, p, FitOptions::default().log_psi_tol)
}

fn find_modes_with_tol(d: &Dataset, p: &LikelihoodProfile, tol: f64) -> Vec<Mode> {
    p.grid_modes().into_iter().map(|i| refine_max(d, p.family, p.nu, p.grid[i - 1], p.grid[i + 1], tol)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Interior,
    /// The profile still rises at the largest usable `ψ`; the estimate is `∞`
    /// as far as double precision can tell.
    UnboundedUpper,
    BoundaryLower,
    DegenerateResidual,
}

impl FitStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FitStatus::Interior => "interior",
            FitStatus::UnboundedUpper => "unbounded_upper",
            FitStatus::BoundaryLower => "boundary_lower",
            FitStatus::DegenerateResidual => "degenerate_residual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub psi_min: f64,
    pub psi_max: f64,
    pub grid_size: usize,
    /// Golden-section bracket width in `ln ψ`.
    pub log_psi_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { psi_min: 1e-3, psi_max: 1e4, grid_size: 400, log_psi_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub family: Family,
    pub nugget: f64,
    pub beta_hat: f64,
    pub sigma2_hat: f64,
    pub psi_hat: f64,
    /// `L(ψ̂)`
    pub loglik: f64,
    pub status: FitStatus,
    pub modes: Vec<Mode>,
    pub cond_at_psi_hat: Condition,
}

impl FitResult {
    pub fn sigma_hat(&self) -> f64 {
        self.sigma2_hat.sqrt()
    }
}

/// Maximum-likelihood fit of `(β, σ², ψ)` for a fixed nugget.
pub fn fit_mle(d: &Dataset, family: Family, nu: f64, options: &FitOptions) -> Result<FitResult> {
    let profile = scan_profile(d, family, nu, options.psi_min, options.psi_max, options.grid_size)?;
    fit_from_profile(d, &profile, options)
}

/// Finishes a fit from an existing scan (avoids rescanning when the profile is also wanted).
pub fn fit_from_profile(d: &Dataset, profile: &LikelihoodProfile, options: &FitOptions) -> Result<FitResult> {
    if d.len() < 2 {
        return Err(GpError::InvalidParameter(format!("fitting needs n >= 2, got {}", d.len())));
    }
    if d.is_constant() {
        return Err(GpError::DegenerateData);
    }
    let (family, nu) = (profile.family, profile.nu);
    let ok = profile.ok_indices();
    let finish = |psi: f64, status: FitStatus, modes: Vec<Mode>| -> Result<FitResult> {
        let k = KernelSpec::new(family, psi, nu)?;
        let cond = condition_number(&k.corr_matrix(d.points())?);
        let (beta, sigma2, loglik) = match evaluate(d, &k) {
            Ok(e) => (e.beta, e.sigma2, e.loglik),
            Err(_) => {
                let beta = beta_hat(d, &k)?;
                (beta, sigma2_hat(d, &k, beta)?, f64::NAN)
            }
        };
        Ok(FitResult {
            family,
            nugget: nu,
            beta_hat: beta,
            sigma2_hat: sigma2,
            psi_hat: psi,
            loglik,
            status,
            modes,
            cond_at_psi_hat: cond,
        })
    };

    if ok.is_empty() {
        return match profile.flags.iter().position(|&f| f == PointFlag::Degenerate) {
            Some(i) => finish(profile.grid[i], FitStatus::DegenerateResidual, Vec::new()),
            None => Err(GpError::AllInfeasible),
        };
    }

    // ties go to the smaller ψ
    let best = profile.argmax().expect("non-empty");
    let modes = find_modes_with_tol(d, profile, options.log_psi_tol);

    if best == *ok.last().expect("non-empty") {
        return finish(profile.grid[best], FitStatus::UnboundedUpper, modes);
    }
    if best == ok[0] {
        return finish(profile.grid[best], FitStatus::BoundaryLower, modes);
    }

    let pos = ok.iter().position(|&i| i == best).expect("best is usable");
    let (lo, hi) = (profile.grid[ok[pos - 1]], profile.grid[ok[pos + 1]]);
    let refined = match profile.grid_modes().iter().position(|&i| i == best) {
        Some(m) => modes[m],
        None => refine_max(d, family, nu, lo, hi, options.log_psi_tol),
    };
    finish(refined.psi, FitStatus::Interior, modes)
}

/// True when the usable profile values never decrease over the last decade
/// of usable `ψ`.
pub fn upper_tail_nondecreasing(profile: &LikelihoodProfile) -> bool {
    let ok = profile.ok_indices();
    let Some(&last) = ok.last() else { return false };
    let cutoff = profile.grid[last] / 10.0;
    let tail: Vec<f64> = ok.iter().filter(|&&i| profile.grid[i] >= cutoff).map(|&i| profile.values[i]).collect();
    tail.windows(2).all(|w| w[1] >= w[0])
}
