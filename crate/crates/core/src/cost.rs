//! Noise and dissipation kernels, the cost coefficients ν and μ, transition
//! weights, excitation number and injected work.

use num_complex::Complex64;
use crate::error::{Error, Result};
use crate::oscillatory::{self, Domain, I1Form, OscOptions, OscillatoryResult};
use crate::protocol::{FrequencyProtocol, SystemSpec};
use serde::{Deserialize, Serialize};

/// Classical driving parameters and initial fluctuation variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivingSpec {
    /// M = 1/H″_D.
    #[serde(rename = "M")]
    pub mass: f64,
    /// Θ̇ = H′_D.
    pub theta_dot: f64,
    /// Θ̈; only zero is supported.
    #[serde(default)]
    pub theta_ddot: f64,
    /// ⟨ϑ(0)²⟩.
    pub var_theta0: f64,
    /// ⟨P_D(0)²⟩.
    #[serde(rename = "var_P0")]
    pub var_p0: f64,
    /// ⟨{ϑ(0), P_D(0)}⟩; must be zero.
    #[serde(default)]
    pub cross_correlation: f64,
    /// H_D[Ξ̄], used only by the order-of-magnitude estimates.
    #[serde(rename = "H_D", default, skip_serializing_if = "Option::is_none")]
    pub h_d: Option<f64>,
}

impl DrivingSpec {
    pub fn new(mass: f64, theta_dot: f64, var_theta0: f64, var_p0: f64) -> Self {
        DrivingSpec { mass, theta_dot, theta_ddot: 0.0, var_theta0, var_p0, cross_correlation: 0.0, h_d: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::config(format!("M must be finite and positive, got {}", self.mass)));
        }
        if !(self.theta_dot.is_finite() && self.theta_dot != 0.0) {
            return Err(Error::config(format!("theta_dot must be finite and nonzero, got {}", self.theta_dot)));
        }
        if !(self.var_theta0.is_finite() && self.var_theta0 >= 0.0) {
            return Err(Error::config(format!("var_theta0 must be non-negative, got {}", self.var_theta0)));
        }
        if !(self.var_p0.is_finite() && self.var_p0 >= 0.0) {
            return Err(Error::config(format!("var_P0 must be non-negative, got {}", self.var_p0)));
        }
        if self.cross_correlation != 0.0 {
            return Err(Error::config("cross_correlation must be 0"));
        }
        if let Some(h) = self.h_d {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::config(format!("H_D must be positive, got {h}")));
            }
        }
        Ok(())
    }

    /// Rejects a non-constant angular velocity.
    pub fn require_constant_rate(&self) -> Result<()> {
        if self.theta_ddot != 0.0 {
            return Err(Error::Unsupported(format!(
                "theta_ddot = {} (only a constant driving rate is supported)",
                self.theta_ddot
            )));
        }
        Ok(())
    }

    /// N(t, t′) = ⟨ϑ(0)²⟩ + ⟨P_D(0)²⟩ t t′ / M².
    pub fn noise_kernel(&self, t: f64, tp: f64) -> f64 {
        self.var_theta0 + self.var_p0 * t * tp / (self.mass * self.mass)
    }

    /// D(t, t′) = (t − t′) θ(t − t′) / 2M.
    pub fn dissipation_kernel(&self, t: f64, tp: f64) -> f64 {
        if t > tp {
            (t - tp) / (2.0 * self.mass)
        } else {
            0.0
        }
    }
}

/// ν, μ and the integrals they were built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NuMu {
    pub nu: f64,
    pub mu: f64,
    pub i0: OscillatoryResult,
    pub i1: OscillatoryResult,
}

/// ν = 2⟨ϑ²⟩|I₀|² + 2⟨P²⟩|I₁|²/M² and μ = (iħ/8M)(I₁I₀* − I₀I₁*) = −(ħ/4M) Im(I₁I₀*).
pub fn nu_mu(
    protocol: &FrequencyProtocol,
    drive: &DrivingSpec,
    system: &SystemSpec,
    domain: Domain,
    opts: &OscOptions,
) -> Result<NuMu> {
    drive.validate()?;
    system.validate()?;
    let i0 = oscillatory::integral_i0(protocol, drive, domain, opts)?;
    let i1 = oscillatory::integral_i1(protocol, drive, I1Form::Defining, domain, opts)?;
    let (nu, mu) = coefficients_from(&i0, &i1, drive, system);
    Ok(NuMu { nu, mu, i0, i1 })
}

/// ν and μ from given I₀ and I₁.
///
/// For constant Θ̇, I₀ is exponentially small and usually sits below its own
/// error bound; it is then taken as zero so that μ does not pick up quadrature noise.
pub fn coefficients_from(
    i0: &OscillatoryResult,
    i1: &OscillatoryResult,
    drive: &DrivingSpec,
    system: &SystemSpec,
) -> (f64, f64) {
    let m = drive.mass;
    let i0v = if i0.value.norm() <= i0.total_error() { Complex64::new(0.0, 0.0) } else { i0.value };
    let nu = 2.0 * drive.var_theta0 * i0v.norm_sqr() + 2.0 * drive.var_p0 * i1.value.norm_sqr() / (m * m);
    let mu = -system.hbar / (4.0 * m) * (i1.value * i0v.conj()).im;
    (nu, mu)
}

/// First-order weights of the n → n∓2 transitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionWeights {
    pub p_down: f64,
    pub p_up: f64,
    /// p_up + p_down ≤ 0.1.
    pub perturbative_ok: bool,
    /// Both weights are non-negative.
    pub nonnegative: bool,
}

pub const PERTURBATIVE_LIMIT: f64 = 0.1;

/// p_down = ½(ν + μ/2) n(n−1), p_up = ½(ν − μ/2)(n+1)(n+2).
pub fn transition_probabilities(nu: f64, mu: f64, n: u32) -> TransitionWeights {
    let nf = n as f64;
    let p_down = 0.5 * (nu + 0.5 * mu) * nf * n.saturating_sub(1) as f64;
    let p_up = 0.5 * (nu - 0.5 * mu) * (nf + 1.0) * (nf + 2.0);
    let perturbative_ok = p_up + p_down <= PERTURBATIVE_LIMIT;
    let nonnegative = p_up >= 0.0 && p_down >= 0.0;
    if !perturbative_ok {
        log::warn!("transition weights sum to {:.3e}; first-order theory is unreliable", p_up + p_down);
    }
    if !nonnegative {
        log::warn!("negative transition weight (p_down = {p_down:e}, p_up = {p_up:e})");
    }
    TransitionWeights { p_down, p_up, perturbative_ok, nonnegative }
}

/// Δn = 2ν(2n+1) − μ(n²+n+1).
pub fn delta_n(nu: f64, mu: f64, n: u32) -> f64 {
    let nf = n as f64;
    2.0 * nu * (2.0 * nf + 1.0) - mu * (nf * nf + nf + 1.0)
}

/// Adiabaticity needs Δn ≪ 1; this flags Δn ≥ 1.
pub fn is_adiabatic(delta_n: f64) -> bool {
    delta_n < 1.0
}

/// δW = Δn ħ ω(t_end).
pub fn extra_work(delta_n: f64, protocol: &FrequencyProtocol, system: &SystemSpec) -> Result<f64> {
    let w_end = protocol.omega(protocol.window().end)?;
    Ok(delta_n * system.hbar * w_end)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuEstimate {
    /// 2F²[ω₀τ, δ/ω₀](δ/ω₀)² ħ/(H_D τ).
    FCurve,
    /// 2π²(δ/ω₀)² (ħ/(H_D τ)) e^{−4ω₀τ}.
    ClosedForm,
}

/// Order-of-magnitude ν from the uncertainty estimate ⟨P²⟩/2M ≈ ħ/τ.
pub fn nu_estimate(
    protocol: &FrequencyProtocol,
    drive: &DrivingSpec,
    system: &SystemSpec,
    mode: NuEstimate,
) -> Result<f64> {
    let (omega0, delta, tau) = protocol
        .arctan_params()
        .ok_or_else(|| Error::Unsupported("nu estimates need the arctan family".into()))?;
    let h_d = drive.h_d.ok_or_else(|| Error::config("H_D is required for nu estimates"))?;
    if !(h_d > 0.0) {
        return Err(Error::config("H_D must be positive"));
    }
    let (x, y) = (omega0 * tau, delta / omega0);
    let scale = system.hbar / (h_d * tau);
    if y == 0.0 {
        return Ok(0.0);
    }
    Ok(match mode {
        NuEstimate::FCurve => {
            let f = oscillatory::f_curve(x, y.abs())?.value;
            2.0 * f * f * y * y * scale
        }
        NuEstimate::ClosedForm => 2.0 * std::f64::consts::PI.powi(2) * y * y * scale * (-4.0 * x).exp(),
    })
}

/// Integrals behind a report, with their error bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Provenance {
    pub i0: OscillatoryResult,
    pub i1: OscillatoryResult,
    pub domain: Domain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostReport {
    pub n_initial: u32,
    pub nu: f64,
    pub mu: f64,
    pub delta_n: f64,
    #[serde(rename = "delta_W")]
    pub delta_w: f64,
    pub p_up: f64,
    pub p_down: f64,
    pub perturbative_ok: bool,
    pub adiabatic: bool,
    pub provenance: Provenance,
}

/// Full pipeline for an initial number state n.
pub fn cost_report(
    protocol: &FrequencyProtocol,
    drive: &DrivingSpec,
    system: &SystemSpec,
    n: u32,
    domain: Domain,
    opts: &OscOptions,
) -> Result<CostReport> {
    let c = nu_mu(protocol, drive, system, domain, opts)?;
    let w = transition_probabilities(c.nu, c.mu, n);
    let dn = delta_n(c.nu, c.mu, n);
    Ok(CostReport {
        n_initial: n,
        nu: c.nu,
        mu: c.mu,
        delta_n: dn,
        delta_w: extra_work(dn, protocol, system)?,
        p_up: w.p_up,
        p_down: w.p_down,
        perturbative_ok: w.perturbative_ok && w.nonnegative,
        adiabatic: is_adiabatic(dn),
        provenance: Provenance { i0: c.i0, i1: c.i1, domain },
    })
}
