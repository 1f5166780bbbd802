//! Frequency schedules ω(t) and the counterdiabatic frequency Ω²(t).

use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};
use crate::spline::QuinticSpline;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_2_PI;

/// Half-width of the default window in units of τ.
pub const DEFAULT_WINDOW_HALF_WIDTH: f64 = 20.0;
pub const DEFAULT_EDGE_TOLERANCE: f64 = 1e-3;
/// Ω² above −this·ω_ref² counts as non-negative.
pub const OMEGA2_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(Error::config(format!("window [{start}, {end}] must be finite with start < end")));
        }
        Ok(Window { start, end })
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    /// `n ≥ 2` equally spaced times including both ends.
    pub fn uniform_grid(&self, n: usize) -> Vec<f64> {
        let n = n.max(2);
        let h = self.len() / (n - 1) as f64;
        (0..n).map(|i| if i + 1 == n { self.end } else { self.start + h * i as f64 }).collect()
    }

    fn check(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::Domain { t, start: self.start, end: self.end })
        }
    }
}

impl From<[f64; 2]> for Window {
    fn from(w: [f64; 2]) -> Self {
        Window { start: w[0], end: w[1] }
    }
}

impl From<Window> for [f64; 2] {
    fn from(w: Window) -> Self {
        [w.start, w.end]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub hbar: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for SystemSpec {
    fn default() -> Self {
        SystemSpec { mass: 1.0, hbar: 1.0 }
    }
}

impl SystemSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::config(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::config(format!("hbar must be positive, got {}", self.hbar)));
        }
        Ok(())
    }
}

/// JSON form of a protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProtocolSpec {
    Arctan {
        omega0: f64,
        delta: f64,
        tau: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<Window>,
        #[serde(default, skip_serializing_if = "is_false")]
        allow_inverted: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edge_tolerance: Option<f64>,
    },
    Tabulated {
        samples: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<Window>,
        #[serde(default, skip_serializing_if = "is_false")]
        allow_inverted: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edge_tolerance: Option<f64>,
    },
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Arctan { omega0: f64, delta: f64, tau: f64 },
    Tabulated { samples: Vec<[f64; 2]>, spline: QuinticSpline },
}

/// Result of scanning Ω² and the edge rates over the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidityReport {
    pub min_omega2: f64,
    pub t_min: f64,
    /// `min_omega2 ≥ −OMEGA2_TOLERANCE·ω_ref²`.
    pub omega2_nonnegative: bool,
    /// ω₀τ ≥ √(3/4)·δ/ω₀ (arctan only; `true` for tabulated).
    pub closed_form_bound: bool,
    /// Parameters sit on the closed-form bound within 1e-9.
    pub on_closed_form_bound: bool,
    /// Normalised ω̇ at the window edges.
    pub edge_rates: [f64; 2],
    pub edge_tolerance: f64,
    pub edges_settled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyProtocol {
    shape: Shape,
    window: Window,
    allow_inverted: bool,
    edge_tolerance: f64,
    validity: ValidityReport,
}

impl TryFrom<ProtocolSpec> for FrequencyProtocol {
    type Error = Error;
    fn try_from(spec: ProtocolSpec) -> Result<Self> {
        FrequencyProtocol::from_spec(&spec)
    }
}

impl FrequencyProtocol {
    /// Arctan family on the default window [−20τ, 20τ].
    pub fn arctan(omega0: f64, delta: f64, tau: f64) -> Result<Self> {
        Self::build_arctan(omega0, delta, tau, None, false, DEFAULT_EDGE_TOLERANCE)
    }

    pub fn tabulated(samples: &[[f64; 2]]) -> Result<Self> {
        Self::build_tabulated(samples, None, false, DEFAULT_EDGE_TOLERANCE)
    }

    pub fn from_spec(spec: &ProtocolSpec) -> Result<Self> {
        match spec {
            ProtocolSpec::Arctan { omega0, delta, tau, window, allow_inverted, edge_tolerance } => Self::build_arctan(
                *omega0,
                *delta,
                *tau,
                *window,
                *allow_inverted,
                edge_tolerance.unwrap_or(DEFAULT_EDGE_TOLERANCE),
            ),
            ProtocolSpec::Tabulated { samples, window, allow_inverted, edge_tolerance } => Self::build_tabulated(
                samples,
                *window,
                *allow_inverted,
                edge_tolerance.unwrap_or(DEFAULT_EDGE_TOLERANCE),
            ),
        }
    }

    pub fn to_spec(&self) -> ProtocolSpec {
        let edge_tolerance = (self.edge_tolerance != DEFAULT_EDGE_TOLERANCE).then_some(self.edge_tolerance);
        match &self.shape {
            Shape::Arctan { omega0, delta, tau } => ProtocolSpec::Arctan {
                omega0: *omega0,
                delta: *delta,
                tau: *tau,
                window: Some(self.window),
                allow_inverted: self.allow_inverted,
                edge_tolerance,
            },
            Shape::Tabulated { samples, .. } => ProtocolSpec::Tabulated {
                samples: samples.clone(),
                window: Some(self.window),
                allow_inverted: self.allow_inverted,
                edge_tolerance,
            },
        }
    }

    fn build_arctan(
        omega0: f64,
        delta: f64,
        tau: f64,
        window: Option<Window>,
        allow_inverted: bool,
        edge_tolerance: f64,
    ) -> Result<Self> {
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::config(format!("omega0 must be positive, got {omega0}")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::config(format!("tau must be positive, got {tau}")));
        }
        if !delta.is_finite() || delta.abs() / omega0 > FRAC_2_PI {
            return Err(Error::config(format!(
                "|delta|/omega0 = {} exceeds 2/pi; omega would change sign",
                delta.abs() / omega0
            )));
        }
        let window = match window {
            Some(w) => Window::new(w.start, w.end)?,
            None => Window::new(-DEFAULT_WINDOW_HALF_WIDTH * tau, DEFAULT_WINDOW_HALF_WIDTH * tau)?,
        };
        Self::finish(Shape::Arctan { omega0, delta, tau }, window, allow_inverted, edge_tolerance)
    }

    fn build_tabulated(
        samples: &[[f64; 2]],
        window: Option<Window>,
        allow_inverted: bool,
        edge_tolerance: f64,
    ) -> Result<Self> {
        let t: Vec<f64> = samples.iter().map(|s| s[0]).collect();
        let w: Vec<f64> = samples.iter().map(|s| s[1]).collect();
        let spline = QuinticSpline::new(&t, &w)?;
        if w.iter().any(|&v| v <= 0.0) {
            return Err(Error::config("tabulated omega must be positive"));
        }
        let range = Window::new(spline.start(), spline.end())?;
        let window = match window {
            Some(win) => {
                let win = Window::new(win.start, win.end)?;
                if win.start < range.start || win.end > range.end {
                    return Err(Error::config(format!(
                        "window [{}, {}] exceeds the sample range [{}, {}]",
                        win.start, win.end, range.start, range.end
                    )));
                }
                win
            }
            None => range,
        };
        Self::finish(Shape::Tabulated { samples: samples.to_vec(), spline }, window, allow_inverted, edge_tolerance)
    }

    fn finish(shape: Shape, window: Window, allow_inverted: bool, edge_tolerance: f64) -> Result<Self> {
        if !(edge_tolerance > 0.0) {
            return Err(Error::config("edge_tolerance must be positive"));
        }
        let mut p = FrequencyProtocol {
            shape,
            window,
            allow_inverted,
            edge_tolerance,
            validity: ValidityReport {
                min_omega2: f64::NAN,
                t_min: f64::NAN,
                omega2_nonnegative: true,
                closed_form_bound: true,
                on_closed_form_bound: false,
                edge_rates: [0.0; 2],
                edge_tolerance,
                edges_settled: true,
            },
        };
        if let Shape::Tabulated { .. } = p.shape {
            let n = 4000;
            if p.window.uniform_grid(n).iter().any(|&t| p.derivs_unchecked(t)[0] <= 0.0) {
                return Err(Error::config("interpolated omega is not positive on the window"));
            }
        }
        p.validity = p.scan_validity();
        for (edge, rate) in ["start", "end"].iter().zip(p.validity.edge_rates) {
            if rate > edge_tolerance {
                log::warn!(
                    "omega is still changing at the window {edge}: normalised rate {rate:.3e} > {edge_tolerance:.1e}"
                );
            }
        }
        Ok(p)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn allow_inverted(&self) -> bool {
        self.allow_inverted
    }

    pub fn validity(&self) -> &ValidityReport {
        &self.validity
    }

    /// Same schedule on another window.
    pub fn with_window(&self, window: Window) -> Result<Self> {
        let mut spec = self.to_spec();
        match &mut spec {
            ProtocolSpec::Arctan { window: w, .. } | ProtocolSpec::Tabulated { window: w, .. } => *w = Some(window),
        }
        Self::from_spec(&spec)
    }

    pub fn allowing_inverted(mut self, allow: bool) -> Self {
        self.allow_inverted = allow;
        self
    }

    /// (ω₀, δ, τ) for the arctan family.
    pub fn arctan_params(&self) -> Option<(f64, f64, f64)> {
        match self.shape {
            Shape::Arctan { omega0, delta, tau } => Some((omega0, delta, tau)),
            Shape::Tabulated { .. } => None,
        }
    }

    /// Dimensionless (x, y) = (ω₀τ, δ/ω₀) for the arctan family.
    pub fn dimensionless(&self) -> Option<(f64, f64)> {
        self.arctan_params().map(|(w, d, t)| (w * t, d / w))
    }

    /// Frequency scale used for tolerances.
    pub fn reference_omega(&self) -> f64 {
        match &self.shape {
            Shape::Arctan { omega0, .. } => *omega0,
            Shape::Tabulated { samples, .. } => samples.iter().map(|s| s[1]).fold(0.0, f64::max),
        }
    }

    /// (ω, ω̇, ω̈, ω⃛) without the window check.
    #[inline]
    pub fn derivs_unchecked(&self, t: f64) -> [f64; 4] {
        match &self.shape {
            Shape::Arctan { omega0, delta, tau } => {
                let s = t / tau;
                let q = 1.0 + s * s;
                let d1 = delta / (tau * q);
                [
                    omega0 + delta * s.atan(),
                    d1,
                    -2.0 * s * d1 / (tau * q),
                    d1 * (6.0 * s * s - 2.0) / (tau * tau * q * q),
                ]
            }
            Shape::Tabulated { spline, .. } => spline.eval(t),
        }
    }

    #[inline]
    pub fn omega2_cd_unchecked(&self, t: f64) -> f64 {
        let [w, w1, w2, _] = self.derivs_unchecked(t);
        let r = w1 / w;
        w * w + 0.5 * (w2 / w - 1.5 * r * r)
    }

    #[inline]
    pub fn rate_unchecked(&self, t: f64) -> f64 {
        let [w, w1, w2, w3] = self.derivs_unchecked(t);
        let r = w1 / w;
        2.0 * w * w1 + 0.5 * w3 / w - 2.0 * w1 * w2 / (w * w) + 1.5 * r * r * r
    }

    pub fn omega_derivatives(&self, t: f64) -> Result<[f64; 4]> {
        self.window.check(t)?;
        Ok(self.derivs_unchecked(t))
    }

    pub fn omega(&self, t: f64) -> Result<f64> {
        Ok(self.omega_derivatives(t)?[0])
    }

    fn inverted_error(&self) -> Option<Error> {
        let v = &self.validity;
        (!v.omega2_nonnegative && !self.allow_inverted).then_some(Error::Validity { t: v.t_min, value: v.min_omega2 })
    }

    /// Ω² = ω² + ½(ω̈/ω − (3/2)(ω̇/ω)²).
    ///
    /// Fails with [`Error::Validity`] when Ω² dips below zero anywhere on the
    /// window, unless the protocol allows inverted frequencies.
    pub fn counterdiabatic_frequency(&self, t: f64) -> Result<f64> {
        self.window.check(t)?;
        if let Some(e) = self.inverted_error() {
            return Err(e);
        }
        Ok(self.omega2_cd_unchecked(t))
    }

    /// dΩ²/dt in closed form.
    pub fn counterdiabatic_rate(&self, t: f64) -> Result<f64> {
        self.window.check(t)?;
        if let Some(e) = self.inverted_error() {
            return Err(e);
        }
        Ok(self.rate_unchecked(t))
    }

    /// Fails if Ω² is negative somewhere and inversion is not allowed.
    pub fn require_valid(&self) -> Result<&ValidityReport> {
        match self.inverted_error() {
            Some(e) => Err(e),
            None => Ok(&self.validity),
        }
    }

    /// ∫₀ᵗ ω dt′. For tabulated schedules whose range excludes 0 the lower
    /// limit is the first sample.
    pub fn phase_integral(&self, t: f64) -> Result<f64> {
        self.window.check(t)?;
        Ok(self.phase_unchecked(t))
    }

    #[inline]
    pub fn phase_unchecked(&self, t: f64) -> f64 {
        match &self.shape {
            Shape::Arctan { omega0, delta, tau } => {
                let s = t / tau;
                let y = delta / omega0;
                omega0 * tau * ((1.0 + y * s.atan()) * s - 0.5 * y * s.ln_1p_sq())
            }
            Shape::Tabulated { spline, .. } => {
                let origin = if spline.start() <= 0.0 && spline.end() >= 0.0 { 0.0 } else { spline.start() };
                spline.integral_from_start(t) - spline.integral_from_start(origin)
            }
        }
    }

    /// Phase by adaptive quadrature of ω, independent of the closed form.
    pub fn phase_by_quadrature(&self, t: f64) -> Result<f64> {
        self.window.check(t)?;
        let origin = match &self.shape {
            Shape::Tabulated { spline, .. } if !(spline.start() <= 0.0 && spline.end() >= 0.0) => spline.start(),
            _ => 0.0,
        };
        let opts = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-14, max_panels: 100_000 };
        let (v, _, _) = quad::adaptive_real(|u| self.derivs_unchecked(u)[0], origin, t, 8, &opts);
        Ok(v)
    }

    fn scan_validity(&self) -> ValidityReport {
        let w = self.window;
        let grid: Vec<f64> = match self.shape {
            Shape::Arctan { tau, .. } => {
                // dense near the origin where Ω² has structure
                let (ua, ub) = ((w.start / tau).asinh(), (w.end / tau).asinh());
                let n = 6000;
                (0..=n).map(|i| tau * (ua + (ub - ua) * i as f64 / n as f64).sinh()).collect()
            }
            Shape::Tabulated { ref samples, .. } => {
                let n = (samples.len() * 8).clamp(4000, 200_000);
                w.uniform_grid(n)
            }
        };
        let (mut i_min, mut v_min) = (0, f64::INFINITY);
        for (i, &t) in grid.iter().enumerate() {
            let v = self.omega2_cd_unchecked(t);
            if v < v_min {
                v_min = v;
                i_min = i;
            }
        }
        let lo = grid[i_min.saturating_sub(1)];
        let hi = grid[(i_min + 1).min(grid.len() - 1)];
        let (t_min, min_omega2) = golden_min(|t| self.omega2_cd_unchecked(t), lo, hi, grid[i_min], v_min);

        let w_ref = self.reference_omega();
        let omega2_nonnegative = min_omega2 >= -OMEGA2_TOLERANCE * w_ref * w_ref;
        let (closed_form_bound, on_closed_form_bound) = match self.dimensionless() {
            Some((x, y)) => {
                let bound = 0.75_f64.sqrt() * y.abs();
                (x >= bound * (1.0 - 1e-9), (x - bound).abs() <= 1e-9 * x.max(1.0))
            }
            None => (true, false),
        };
        let edge_rate = |t: f64| {
            let [om, om1, ..] = self.derivs_unchecked(t);
            match self.shape {
                Shape::Arctan { omega0, tau, .. } => om1.abs() * tau / omega0,
                Shape::Tabulated { .. } => om1.abs() / (om * om),
            }
        };
        let edge_rates = [edge_rate(w.start), edge_rate(w.end)];
        ValidityReport {
            min_omega2,
            t_min,
            omega2_nonnegative,
            closed_form_bound,
            on_closed_form_bound,
            edge_rates,
            edge_tolerance: self.edge_tolerance,
            edges_settled: edge_rates.iter().all(|&r| r <= self.edge_tolerance),
        }
    }
}

trait Ln1pSq {
    fn ln_1p_sq(self) -> f64;
}

impl Ln1pSq for f64 {
    #[inline]
    fn ln_1p_sq(self) -> f64 {
        (self * self).ln_1p()
    }
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, t0: f64, v0: f64) -> (f64, f64) {
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let (mut best_t, mut best_v) = (t0, v0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    for (t, v) in [(c, fc), (d, fd)] {
        if v < best_v {
            best_t = t;
            best_v = v;
        }
    }
    (best_t, best_v)
}
