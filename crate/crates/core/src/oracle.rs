//! Monte Carlo check of the perturbative cost.
//!
//! The quantum fluctuations of the driving are replaced by c-number Gaussian
//! initial conditions (ϑ₀, P₀). Each sample perturbs the counterdiabatic
//! frequency, Ω²(t) + (Ω²)′(ϑ₀ + P₀t/M), and the mode equation is integrated
//! exactly. Since the unperturbed drive creates no excitation, all of |β|² is
//! fluctuation-induced.
//!
//! Sample k draws from a ChaCha8 stream selected by k, and every reduction is
//! a fixed-order pairwise sum, so the report does not depend on the number of
//! threads.

use crate::cost::{self, DrivingSpec};
use crate::error::{Error, Result};
use crate::modes::{self, bogoliubov_from, CauchyData, ModeSolverOptions, ReferenceMode, Vacuum};
use crate::oscillatory::{self, Domain, I1Form, OscOptions};
use crate::protocol::{FrequencyProtocol, SystemSpec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Samples per run above which rejections trigger a warning: 1%.
pub const REJECTION_WARNING: f64 = 0.01;

const CHECK_POINTS: usize = 4001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linearization {
    /// Ω² + (Ω²)′·(ϑ₀ + P₀t/M).
    #[default]
    Linear,
    /// Ω² evaluated at the shifted angle Θ + ϑ₀ + P₀t/M.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub n_samples: u64,
    pub seed: u64,
    #[serde(default)]
    pub n_initial: u32,
    #[serde(default)]
    pub linearization: Linearization,
    /// Count samples with Ω²_pert < 0 as rejected instead of integrating them.
    #[serde(default = "yes")]
    pub reject_negative: bool,
}

fn yes() -> bool {
    true
}

impl SampleSpec {
    pub fn new(n_samples: u64, seed: u64, n_initial: u32) -> Self {
        SampleSpec { n_samples, seed, n_initial, linearization: Linearization::Linear, reject_negative: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::config("n_samples must be at least 1"));
        }
        Ok(())
    }
}

/// One sample: the draw, the integrated |β|² and its first-order prediction
/// |ϑ₀I₀ + P₀I₁/M|².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSample {
    pub k: u64,
    pub theta0: f64,
    pub p0: f64,
    pub beta_sq: f64,
    pub beta_lin_sq: f64,
    /// max |Ω²_pert − Ω²|/Ω² over the window.
    pub max_rel_perturbation: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub seed: u64,
    pub n_samples: u64,
    pub n_initial: u32,
    pub linearization: Linearization,
    pub accepted: u64,
    pub rejected: u64,
    /// Mean over accepted samples of |β − β₀|², β₀ being the unperturbed run.
    pub mean_beta_sq: f64,
    /// None when fewer than two samples were accepted.
    pub std_error: Option<f64>,
    /// (2n+1)·mean_beta_sq.
    pub delta_n_mc: f64,
    pub nu: f64,
    /// 2ν(2n+1), the excitation predicted from ν alone.
    pub nu_prediction: f64,
    pub ratio: Option<f64>,
    /// c* = mean|β|² / mean|ϑ₀I₀ + P₀I₁/M|².
    pub calibration_constant: Option<f64>,
    /// Largest per-sample |β|² / (c*|β_lin|²) − 1 over samples with |β_lin|²
    /// above 1% of its mean.
    pub linear_rel_error_max: Option<f64>,
    /// |β₀|² of the unperturbed drive.
    pub baseline_beta_sq: f64,
    pub i0: Complex64,
    pub i1: Complex64,
    pub warning: Option<String>,
}

/// Independent zero-mean Gaussians with the drive's variances.
pub fn sample_fluctuation<R: Rng + ?Sized>(rng: &mut R, drive: &DrivingSpec) -> (f64, f64) {
    let z0: f64 = rng.sample(StandardNormal);
    let z1: f64 = rng.sample(StandardNormal);
    (drive.var_theta0.sqrt() * z0, drive.var_p0.sqrt() * z1)
}

/// The generator for sample `k` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Ω²_pert(t) for the fluctuation (ϑ₀, P₀).
pub fn perturbed_frequency(
    protocol: &FrequencyProtocol,
    drive: &DrivingSpec,
    theta0: f64,
    p0: f64,
    t: f64,
    mode: Linearization,
) -> f64 {
    let shift = theta0 + p0 * t / drive.mass;
    match mode {
        Linearization::Linear => protocol.omega2_cd_unchecked(t) + protocol.rate_unchecked(t) / drive.theta_dot * shift,
        Linearization::Exact => protocol.omega2_cd_unchecked(t + shift / drive.theta_dot),
    }
}

/// Variances for which 1σ fluctuations of ϑ₀ and of P₀ each move Ω² by at
/// most `target`/2 relative to itself over the window.
pub fn linear_response_variances(protocol: &FrequencyProtocol, drive: &DrivingSpec, target: f64) -> Result<DrivingSpec> {
    drive.validate()?;
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::config("target must be positive"));
    }
    protocol.require_valid()?;
    let (mut a, mut b) = (0.0_f64, 0.0_f64);
    for t in protocol.window().uniform_grid(CHECK_POINTS) {
        let g = (protocol.rate_unchecked(t) / drive.theta_dot / protocol.omega2_cd_unchecked(t)).abs();
        a = a.max(g);
        b = b.max(g * t.abs() / drive.mass);
    }
    let mut out = *drive;
    out.var_theta0 = if a > 0.0 { (0.5 * target / a).powi(2) } else { 0.0 };
    out.var_p0 = if b > 0.0 { (0.5 * target / b).powi(2) } else { 0.0 };
    Ok(out)
}

/// Sum in a fixed binary-tree order.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let (l, r) = x.split_at(x.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

struct Context<'a> {
    protocol: &'a FrequencyProtocol,
    drive: &'a DrivingSpec,
    spec: &'a SampleSpec,
    initial: CauchyData,
    reference: ReferenceMode,
    beta0: Complex64,
    i0: Complex64,
    i1: Complex64,
    grid: Vec<f64>,
    opts: ModeSolverOptions,
}

impl Context<'_> {
    fn run(&self, k: u64) -> Result<(OracleSample, Complex64)> {
        let mut rng = sample_rng(self.spec.seed, k);
        let (theta0, p0) = sample_fluctuation(&mut rng, self.drive);
        let lin = (theta0 * self.i0 + p0 / self.drive.mass * self.i1).norm_sqr();
        let w2 = |t: f64| perturbed_frequency(self.protocol, self.drive, theta0, p0, t, self.spec.linearization);
        let mut negative = false;
        let mut rel = 0.0_f64;
        for &t in &self.grid {
            let (a, b) = (w2(t), self.protocol.omega2_cd_unchecked(t));
            negative |= a < 0.0;
            rel = rel.max(((a - b) / b).abs());
        }
        let mut s = OracleSample { k, theta0, p0, beta_sq: 0.0, beta_lin_sq: lin, max_rel_perturbation: rel, rejected: false };
        if self.spec.reject_negative && negative {
            s.rejected = true;
            return Ok((s, Complex64::new(0.0, 0.0)));
        }
        let (f, fdot) = modes::propagate(w2, self.protocol.window(), self.initial, &self.opts)?;
        let beta = bogoliubov_from(f, fdot, &self.reference).beta;
        s.beta_sq = (beta - self.beta0).norm_sqr();
        Ok((s, beta))
    }
}

pub fn run_oracle(
    protocol: &FrequencyProtocol,
    drive: &DrivingSpec,
    system: &SystemSpec,
    spec: &SampleSpec,
) -> Result<OracleReport> {
    run_oracle_with_samples(protocol, drive, system, spec).map(|(r, _)| r)
}

/// As [`run_oracle`], also returning every sample in index order.
pub fn run_oracle_with_samples(
    protocol: &FrequencyProtocol,
    drive: &DrivingSpec,
    system: &SystemSpec,
    spec: &SampleSpec,
) -> Result<(OracleReport, Vec<OracleSample>)> {
    drive.validate()?;
    drive.require_constant_rate()?;
    system.validate()?;
    spec.validate()?;
    protocol.require_valid()?;

    let opts = ModeSolverOptions::default();
    let window = protocol.window();
    let initial = CauchyData::for_protocol(protocol, window.start, Vacuum::Adiabatic)?;
    let reference = ReferenceMode::at_window_end(protocol, Vacuum::Adiabatic)?;
    let (f, fdot) = modes::propagate(|t| protocol.omega2_cd_unchecked(t), window, initial, &opts)?;
    let beta0 = bogoliubov_from(f, fdot, &reference).beta;

    let osc = OscOptions::default();
    let i0 = oscillatory::integral_i0(protocol, drive, Domain::Window, &osc)?.value;
    let i1 = oscillatory::integral_i1(protocol, drive, I1Form::Defining, Domain::Window, &osc)?.value;
    let nm = cost::nu_mu(protocol, drive, system, Domain::Window, &osc)?;

    let ctx = Context {
        protocol,
        drive,
        spec,
        initial,
        reference,
        beta0,
        i0,
        i1,
        grid: window.uniform_grid(CHECK_POINTS),
        opts,
    };
    let samples: Vec<OracleSample> =
        (0..spec.n_samples).into_par_iter().map(|k| ctx.run(k).map(|(s, _)| s)).collect::<Result<_>>()?;

    let accepted: Vec<&OracleSample> = samples.iter().filter(|s| !s.rejected).collect();
    let n_acc = accepted.len();
    let rejected = samples.len() - n_acc;
    let b: Vec<f64> = accepted.iter().map(|s| s.beta_sq).collect();
    let l: Vec<f64> = accepted.iter().map(|s| s.beta_lin_sq).collect();
    let mean = if n_acc > 0 { pairwise_sum(&b) / n_acc as f64 } else { 0.0 };
    let std_error = (n_acc >= 2).then(|| {
        let dev: Vec<f64> = b.iter().map(|x| (x - mean) * (x - mean)).collect();
        (pairwise_sum(&dev) / (n_acc - 1) as f64 / n_acc as f64).sqrt()
    });
    let mean_lin = if n_acc > 0 { pairwise_sum(&l) / n_acc as f64 } else { 0.0 };
    let calibration = (mean_lin > 0.0).then(|| mean / mean_lin);
    let linear_rel_error_max = calibration.map(|c| {
        accepted
            .iter()
            .filter(|s| s.beta_lin_sq >= 0.01 * mean_lin)
            .map(|s| (s.beta_sq / (c * s.beta_lin_sq) - 1.0).abs())
            .fold(0.0, f64::max)
    });

    let n = spec.n_initial;
    let delta_n_mc = (2.0 * n as f64 + 1.0) * mean;
    let nu_prediction = cost::delta_n(nm.nu, 0.0, n);
    let ratio = (nu_prediction > 0.0).then(|| delta_n_mc / nu_prediction);

    let frac = rejected as f64 / samples.len() as f64;
    let warning = (frac > REJECTION_WARNING).then(|| {
        format!(
            "{rejected} of {} samples rejected for negative perturbed frequency; variances are outside the perturbative regime",
            samples.len()
        )
    });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }

    let report = OracleReport {
        seed: spec.seed,
        n_samples: spec.n_samples,
        n_initial: n,
        linearization: spec.linearization,
        accepted: n_acc as u64,
        rejected: rejected as u64,
        mean_beta_sq: mean,
        std_error,
        delta_n_mc,
        nu: nm.nu,
        nu_prediction,
        ratio,
        calibration_constant: calibration,
        linear_rel_error_max,
        baseline_beta_sq: beta0.norm_sqr(),
        i0,
        i1,
        warning,
    };
    Ok((report, samples))
}
