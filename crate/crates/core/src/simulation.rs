//! Monte-Carlo study of the ML estimators on a stationary process plus white noise.
//!
//! Each replicate observes `y(xᵢ) = β + A(σ) ε⁽¹⁾(xᵢ) + A(τ) ε⁽²⁾(xᵢ)` where
//! `ε⁽¹⁾` is a unit-variance Gaussian process with correlation
//! `exp(−d²/ψ)` and `ε⁽²⁾` is standard white noise, then fits the Gaussian
//! family at each requested nugget.
//!
//! Random streams are counter-based: replicate `i` draws its signal from
//! ChaCha8 stream `2i` and its noise from stream `2i + 1` under the study
//! seed, so a replicate's data never depend on scheduling, and two configs
//! that differ only in `τ` see identical `ε⁽¹⁾`, `ε⁽²⁾` draws.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GpError, Result};
use crate::exact_exponential::equidistant_points;
use crate::kernels::{check_nugget, Family, KernelSpec};
use crate::likelihood::{fit_mle, Dataset, FitOptions, FitResult, FitStatus};
use crate::linalg::{cholesky, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeConvention {
    /// `σ` and `τ` multiply the unit processes directly.
    StdDev,
    /// `σ²` and `τ²` multiply the unit processes.
    Variance,
}

impl AmplitudeConvention {
    pub fn amplitude(self, s: f64) -> f64 {
        match self {
            AmplitudeConvention::StdDev => s,
            AmplitudeConvention::Variance => s * s,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AmplitudeConvention::StdDev => "std_dev",
            AmplitudeConvention::Variance => "variance",
        }
    }
}

impl std::str::FromStr for AmplitudeConvention {
    type Err = GpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "std_dev" => Ok(Self::StdDev),
            "variance" => Ok(Self::Variance),
            other => Err(GpError::InvalidParameter(format!("unknown amplitude convention `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub beta: f64,
    pub psi: f64,
    pub sigma: f64,
    pub tau: f64,
    pub amplitude_convention: AmplitudeConvention,
    pub nu_values: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    /// Additive diagonal jitter used only when sampling `ε⁽¹⁾`; zero unless the
    /// signal covariance cannot be factored.
    pub sampling_jitter: f64,
}

impl SimConfig {
    /// `n = 8` equidistant points on `[0, 1]`, `β = 2`, `ψ = 1.5`, `σ = 1`, fits at `ν ∈ {0, 0.01, 0.02}`.
    pub fn table1(tau: f64, replicates: usize, seed: u64, amplitude_convention: AmplitudeConvention) -> Self {
        Self {
            n: 8,
            beta: 2.0,
            psi: 1.5,
            sigma: 1.0,
            tau,
            amplitude_convention,
            nu_values: TABLE1_NUGGETS.to_vec(),
            replicates,
            seed,
            sampling_jitter: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(GpError::InvalidParameter("replicates must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(GpError::InvalidParameter(format!("need at least 2 points, got {}", self.n)));
        }
        if !(self.sigma >= 0.0) || !(self.tau >= 0.0) {
            return Err(GpError::InvalidParameter("sigma and tau must be non-negative".into()));
        }
        if !(self.psi > 0.0) {
            return Err(GpError::InvalidParameter(format!("psi must be positive, got {}", self.psi)));
        }
        if !(self.sampling_jitter >= 0.0) {
            return Err(GpError::InvalidParameter("sampling jitter must be non-negative".into()));
        }
        self.nu_values.iter().try_for_each(|&nu| check_nugget(nu))
    }
}

pub const TABLE1_TAUS: [f64; 2] = [0.0, 0.01];
pub const TABLE1_NUGGETS: [f64; 3] = [0.0, 0.01, 0.02];

/// ψ search range for replicate fits.
pub fn study_fit_options() -> FitOptions {
    FitOptions { psi_max: 1e3, ..FitOptions::default() }
}

/// Role of a random stream within one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Signal = 0,
    Noise = 1,
}

/// The RNG for `(seed, replicate, role)`.
pub fn replicate_rng(seed: u64, replicate: u64, role: StreamRole) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate * 2 + role as u64);
    rng
}

/// Zero-mean, unit-variance Gaussian vector with the kernel's correlation, as
/// `L z` with `L` the Cholesky factor of `R_ν` and `z` standard normal.
pub fn sample_gp_path<R: Rng + ?Sized>(points: &[f64], k: &KernelSpec, rng: &mut R) -> Result<Vec<f64>> {
    sample_with_jitter(points, k, 0.0, rng)
}

fn sample_with_jitter<R: Rng + ?Sized>(points: &[f64], k: &KernelSpec, jitter: f64, rng: &mut R) -> Result<Vec<f64>> {
    let r = k.corr_matrix(points)?;
    let cov = if jitter > 0.0 {
        SymMatrix::from_fn(r.dim(), |i, j| r.get(i, j) + if i == j { jitter } else { 0.0 })?
    } else {
        r
    };
    let factor = cholesky(&cov).map_err(|e| match e {
        GpError::NotPositiveDefinite { pivot } => GpError::InvalidParameter(format!(
            "signal covariance is not factorable (pivot {pivot}); set a simulation-only jitter such as 1e-10"
        )),
        other => other,
    })?;
    let z: Vec<f64> = (0..points.len()).map(|_| rng.sample(StandardNormal)).collect();
    Ok((0..points.len()).map(|i| (0..=i).map(|j| factor.lower(i, j) * z[j]).sum()).collect())
}

/// Mean and standard deviation (divisor `m − 1`) of the included replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub sd: f64,
}

impl Moments {
    /// Compensated two-pass moments over `values` in the given order.
    pub fn of(values: &[f64]) -> Self {
        let m = values.len();
        if m == 0 {
            return Self { mean: f64::NAN, sd: f64::NAN };
        }
        let mean = neumaier_sum(values.iter().copied()) / m as f64;
        let sd = if m > 1 {
            (neumaier_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (m - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, sd }
    }
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Exclusions {
    pub unbounded: usize,
    pub degenerate: usize,
    pub infeasible: usize,
}

impl Exclusions {
    pub fn total(&self) -> usize {
        self.unbounded + self.degenerate + self.infeasible
    }
}

/// One `(τ, ν)` cell: moments of `β̂`, `σ̂ = √σ̂²` and `ψ̂`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub tau: f64,
    pub nu: f64,
    pub beta_hat: Moments,
    pub sigma_hat: Moments,
    pub psi_hat: Moments,
    pub included: usize,
    pub excluded: Exclusions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySummary {
    pub replicates: usize,
    pub seed: u64,
    pub amplitude_convention: AmplitudeConvention,
    pub rows: Vec<CellSummary>,
}

impl StudySummary {
    pub fn cell(&self, tau: f64, nu: f64) -> Option<&CellSummary> {
        self.rows.iter().find(|c| c.tau == tau && c.nu == nu)
    }
}

enum Outcome {
    Included(FitResult),
    Unbounded,
    Degenerate,
    Infeasible,
}

/// Draws the observation vector for one replicate.
pub fn replicate_data(cfg: &SimConfig, replicate: u64) -> Result<Dataset> {
    let points = equidistant_points(cfg.n);
    let signal_kernel = KernelSpec::new(Family::Gaussian, cfg.psi, 0.0)?;
    let signal = sample_with_jitter(
        &points,
        &signal_kernel,
        cfg.sampling_jitter,
        &mut replicate_rng(cfg.seed, replicate, StreamRole::Signal),
    )?;
    let mut noise_rng = replicate_rng(cfg.seed, replicate, StreamRole::Noise);
    let a_sig = cfg.amplitude_convention.amplitude(cfg.sigma);
    let a_tau = cfg.amplitude_convention.amplitude(cfg.tau);
    let y = signal
        .iter()
        .map(|s| {
            let noise: f64 = noise_rng.sample(StandardNormal);
            cfg.beta + a_sig * s + a_tau * noise
        })
        .collect();
    Dataset::new(points, y)
}

/// Runs every replicate and summarizes each nugget value.
pub fn run_study(cfg: &SimConfig) -> Result<StudySummary> {
    cfg.validate()?;
    let options = study_fit_options();
    let per_replicate: Vec<Vec<Outcome>> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let data = replicate_data(cfg, r)?;
            Ok(cfg
                .nu_values
                .iter()
                .map(|&nu| match fit_mle(&data, Family::Gaussian, nu, &options) {
                    Ok(f) => match f.status {
                        FitStatus::UnboundedUpper => Outcome::Unbounded,
                        FitStatus::DegenerateResidual => Outcome::Degenerate,
                        _ => Outcome::Included(f),
                    },
                    Err(GpError::DegenerateData) => Outcome::Degenerate,
                    Err(_) => Outcome::Infeasible,
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let rows = cfg
        .nu_values
        .iter()
        .enumerate()
        .map(|(j, &nu)| {
            let mut excluded = Exclusions::default();
            let mut fits = Vec::new();
            for outcomes in &per_replicate {
                match &outcomes[j] {
                    Outcome::Included(f) => fits.push(f),
                    Outcome::Unbounded => excluded.unbounded += 1,
                    Outcome::Degenerate => excluded.degenerate += 1,
                    Outcome::Infeasible => excluded.infeasible += 1,
                }
            }
            let collect = |g: fn(&FitResult) -> f64| fits.iter().map(|f| g(f)).collect::<Vec<_>>();
            CellSummary {
                tau: cfg.tau,
                nu,
                beta_hat: Moments::of(&collect(|f| f.beta_hat)),
                sigma_hat: Moments::of(&collect(|f| f.sigma_hat())),
                psi_hat: Moments::of(&collect(|f| f.psi_hat)),
                included: fits.len(),
                excluded,
            }
        })
        .collect();

    Ok(StudySummary {
        replicates: cfg.replicates,
        seed: cfg.seed,
        amplitude_convention: cfg.amplitude_convention,
        rows,
    })
}

/// The six `τ ∈ {0, 0.01}` × `ν ∈ {0, 0.01, 0.02}` cells of the nugget study.
pub fn run_table1(replicates: usize, seed: u64, convention: AmplitudeConvention) -> Result<StudySummary> {
    let mut rows = Vec::new();
    for tau in TABLE1_TAUS {
        rows.extend(run_study(&SimConfig::table1(tau, replicates, seed, convention))?.rows);
    }
    Ok(StudySummary { replicates, seed, amplitude_convention: convention, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_correlation_matches_kernel() {
        let pts = [0.0, 0.25, 0.5, 0.75, 1.0];
        let k = KernelSpec::new(Family::Gaussian, 1.5, 0.0).unwrap();
        let draws = 20_000;
        let mut rng = replicate_rng(17, 0, StreamRole::Signal);
        let paths: Vec<Vec<f64>> = (0..draws).map(|_| sample_gp_path(&pts, &k, &mut rng).unwrap()).collect();
        for i in 0..5 {
            for j in 0..5 {
                let c: f64 = paths.iter().map(|p| p[i] * p[j]).sum::<f64>() / draws as f64;
                assert!((c - k.corr(pts[i], pts[j])).abs() <= 0.05, "({i},{j}) {c}");
            }
        }
    }

    #[test]
    fn single_point_is_standard_normal() {
        let k = KernelSpec::new(Family::Gaussian, 1.5, 0.0).unwrap();
        let mut rng = replicate_rng(3, 0, StreamRole::Signal);
        let v: Vec<f64> = (0..20_000).map(|_| sample_gp_path(&[0.4], &k, &mut rng).unwrap()[0]).collect();
        let m = Moments::of(&v);
        assert!(m.mean.abs() < 0.05);
        assert!((m.sd * m.sd - 1.0).abs() <= 0.05);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let pts = equidistant_points(8);
        let k = KernelSpec::new(Family::Gaussian, 1.5, 0.0).unwrap();
        let a = sample_gp_path(&pts, &k, &mut replicate_rng(7, 3, StreamRole::Signal)).unwrap();
        let b = sample_gp_path(&pts, &k, &mut replicate_rng(7, 3, StreamRole::Signal)).unwrap();
        assert_eq!(a, b);
        let c = sample_gp_path(&pts, &k, &mut replicate_rng(7, 4, StreamRole::Signal)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn unfactorable_signal_suggests_jitter() {
        let pts = equidistant_points(20);
        let k = KernelSpec::new(Family::Gaussian, 100.0, 0.0).unwrap();
        let err = sample_gp_path(&pts, &k, &mut replicate_rng(1, 0, StreamRole::Signal)).unwrap_err();
        assert!(err.to_string().contains("jitter"));
        let mut cfg = SimConfig::table1(0.0, 1, 1, AmplitudeConvention::StdDev);
        cfg.n = 20;
        cfg.psi = 100.0;
        assert!(replicate_data(&cfg, 0).is_err());
        cfg.sampling_jitter = 1e-10;
        assert!(replicate_data(&cfg, 0).is_ok());
    }

    #[test]
    fn zero_amplitudes_are_all_degenerate() {
        let mut cfg = SimConfig::table1(0.0, 5, 1, AmplitudeConvention::StdDev);
        cfg.sigma = 0.0;
        let s = run_study(&cfg).unwrap();
        for cell in &s.rows {
            assert_eq!(cell.excluded.degenerate, 5);
            assert_eq!(cell.excluded.total() + cell.included, 5);
        }
    }

    #[test]
    fn study_is_deterministic() {
        let cfg = SimConfig::table1(0.01, 6, 99, AmplitudeConvention::StdDev);
        assert_eq!(run_study(&cfg).unwrap(), run_study(&cfg).unwrap());
    }

    #[test]
    fn replicate_depends_only_on_seed_and_index() {
        let small = SimConfig::table1(0.01, 3, 5, AmplitudeConvention::StdDev);
        let large = SimConfig { replicates: 50, ..small.clone() };
        assert_eq!(replicate_data(&small, 2).unwrap(), replicate_data(&large, 2).unwrap());
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::table1(0.0, 0, 1, AmplitudeConvention::StdDev);
        assert!(run_study(&cfg).is_err());
        cfg.replicates = 1;
        cfg.nu_values = vec![1.0];
        assert!(run_study(&cfg).is_err());
        cfg.nu_values = vec![0.0];
        cfg.tau = -1.0;
        assert!(run_study(&cfg).is_err());
    }

    #[test]
    fn moments_basics() {
        let m = Moments::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.sd - (5.0_f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(Moments::of(&[3.0]).sd, 0.0);
        assert!(Moments::of(&[]).mean.is_nan());
    }
}
