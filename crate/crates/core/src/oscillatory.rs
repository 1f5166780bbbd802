//! The oscillatory integrals I₀, I₁ and the shape function F[x, y].
//!
//! For the arctan family the natural domain is the whole real line. The
//! integrands are analytic in the lower half s-plane away from the
//! imaginary axis, and e^{−2ixΦ(s)} decays there, so beyond |s| = S₀ the
//! real-axis tails are replaced by exact integrals along the vertical rays
//! s = ±S₀ − iv, v ∈ [0, ∞). Nothing is discarded; the ray quadrature
//! error is reported as `truncation_bound`.

use crate::cost::DrivingSpec;
use crate::error::{Error, Result};
use crate::protocol::{FrequencyProtocol, Shape, Window};
use crate::quad::{self, QuadOptions, QuadResult};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, PI};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum I1Form {
    /// ∫ t (Ω²)′ f₀² dt.
    Defining,
    /// (1/Θ̇) ∫ [−i ω̇/ω − ¼ ω̇²/ω³] e^{−2i∫ω} dt.
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// t ∈ (−∞, ∞); arctan family only.
    #[default]
    FullLine,
    /// The protocol window.
    Window,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillatoryResult {
    pub value: Complex64,
    pub abs_error_estimate: f64,
    /// Error of the tail integrals (zero on a finite window).
    pub truncation_bound: f64,
}

impl OscillatoryResult {
    pub fn total_error(&self) -> f64 {
        self.abs_error_estimate + self.truncation_bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
    /// S₀: half-width of the real-axis segment, in units of τ.
    pub central_half_width: f64,
}

impl Default for OscOptions {
    fn default() -> Self {
        OscOptions { rel_tol: 1e-12, abs_tol: 1e-15, max_panels: 400_000, central_half_width: 8.0 }
    }
}

impl OscOptions {
    fn quad(&self) -> QuadOptions {
        QuadOptions { abs_tol: self.abs_tol, rel_tol: self.rel_tol, max_panels: self.max_panels }
    }
}

/// Arctan schedule continued to complex s = t/τ.
#[derive(Debug, Clone, Copy)]
struct ComplexArctan {
    omega0: f64,
    delta: f64,
    tau: f64,
    x: f64,
    y: f64,
}

struct PointValues {
    omega: Complex64,
    w1: Complex64,
    rate: Complex64,
    /// e^{−2i∫₀ᵗω}
    carrier: Complex64,
}

impl ComplexArctan {
    fn new(omega0: f64, delta: f64, tau: f64) -> Self {
        ComplexArctan { omega0, delta, tau, x: omega0 * tau, y: delta / omega0 }
    }

    #[inline]
    fn at(&self, s: Complex64) -> PointValues {
        let q = 1.0 + s * s;
        let at = s.atan();
        let a = 1.0 + self.y * at;
        let omega = self.omega0 * a;
        let d = self.delta;
        let w1 = d / (self.tau * q);
        let w2 = -2.0 * s * w1 / (self.tau * q);
        let w3 = w1 * (6.0 * s * s - 2.0) / (self.tau * self.tau * q * q);
        let r = w1 / omega;
        let rate = 2.0 * omega * w1 + 0.5 * w3 / omega - 2.0 * w1 * w2 / (omega * omega) + 1.5 * r * r * r;
        let phi = a * s - 0.5 * self.y * q.ln();
        let carrier = (-2.0 * I * self.x * phi).exp();
        PointValues { omega, w1, rate, carrier }
    }
}

#[derive(Clone, Copy)]
enum Kernel {
    I0,
    I1Defining,
    I1Reduced,
}

fn check_drive(drive: &DrivingSpec) -> Result<()> {
    drive.require_constant_rate()?;
    if !(drive.theta_dot.is_finite() && drive.theta_dot != 0.0) {
        return Err(Error::config("theta_dot must be finite and nonzero"));
    }
    Ok(())
}

/// I₀ = ∫ (Ω²)′ f₀² dt with (Ω²)′ = (dΩ²/dt)/Θ̇ and f₀ the WKB mode of ω.
pub fn integral_i0(
    protocol: &FrequencyProtocol,
    drive: &DrivingSpec,
    domain: Domain,
    opts: &OscOptions,
) -> Result<OscillatoryResult> {
    check_drive(drive)?;
    integrate_kernel(protocol, drive.theta_dot, Kernel::I0, domain, opts, "I0")
}

/// I₁ in either of its two equivalent forms (equal on the full line).
pub fn integral_i1(
    protocol: &FrequencyProtocol,
    drive: &DrivingSpec,
    form: I1Form,
    domain: Domain,
    opts: &OscOptions,
) -> Result<OscillatoryResult> {
    check_drive(drive)?;
    let kernel = match form {
        I1Form::Defining => Kernel::I1Defining,
        I1Form::Reduced => Kernel::I1Reduced,
    };
    integrate_kernel(protocol, drive.theta_dot, kernel, domain, opts, "I1")
}

fn integrate_kernel(
    protocol: &FrequencyProtocol,
    theta_dot: f64,
    kernel: Kernel,
    domain: Domain,
    opts: &OscOptions,
    name: &str,
) -> Result<OscillatoryResult> {
    match domain {
        Domain::FullLine => {
            let Shape::Arctan { omega0, delta, tau } = *protocol.shape() else {
                return Err(Error::Unsupported("full-line integrals need the arctan family".into()));
            };
            if delta == 0.0 {
                return Ok(OscillatoryResult { value: Complex64::new(0.0, 0.0), abs_error_estimate: 0.0, truncation_bound: 0.0 });
            }
            if delta.abs() / omega0 >= FRAC_2_PI {
                return Err(Error::config("full-line integrals need |delta|/omega0 < 2/pi"));
            }
            let c = ComplexArctan::new(omega0, delta, tau);
            let h = move |s: Complex64| {
                let p = c.at(s);
                match kernel {
                    Kernel::I0 => p.rate * p.carrier / (2.0 * p.omega),
                    Kernel::I1Defining => c.tau * s * p.rate * p.carrier / (2.0 * p.omega),
                    Kernel::I1Reduced => {
                        let r = p.w1 / p.omega;
                        (-I * r - 0.25 * r * r / p.omega) * p.carrier
                    }
                }
            };
            let r = full_line(h, c.x, c.y, opts, name)?;
            let scale = tau / theta_dot;
            Ok(OscillatoryResult {
                value: r.value * scale,
                abs_error_estimate: r.abs_error_estimate * scale.abs(),
                truncation_bound: r.truncation_bound * scale.abs(),
            })
        }
        Domain::Window => {
            let w = protocol.window();
            let h = |t: f64| {
                let [om, w1, ..] = protocol.derivs_unchecked(t);
                let carrier = Complex64::from_polar(1.0, -2.0 * protocol.phase_unchecked(t));
                match kernel {
                    Kernel::I0 => carrier * (protocol.rate_unchecked(t) / (2.0 * om)),
                    Kernel::I1Defining => carrier * (t * protocol.rate_unchecked(t) / (2.0 * om)),
                    Kernel::I1Reduced => {
                        let r = w1 / om;
                        carrier * Complex64::new(-0.25 * r * r / om, -r)
                    }
                }
            };
            let r = window_integral(protocol, w, h, opts, name)?;
            Ok(OscillatoryResult {
                value: r.value / theta_dot,
                abs_error_estimate: r.error / theta_dot.abs(),
                truncation_bound: 0.0,
            })
        }
    }
}

fn window_integral<F: Fn(f64) -> Complex64>(
    protocol: &FrequencyProtocol,
    w: Window,
    h: F,
    opts: &OscOptions,
    name: &str,
) -> Result<QuadResult> {
    let total_phase = 2.0 * (protocol.phase_unchecked(w.end) - protocol.phase_unchecked(w.start)).abs();
    let panels = ((total_phase / PI).ceil() as usize + 16).min(opts.max_panels / 4).max(1);
    let r = quad::adaptive(h, w.start, w.end, panels, &opts.quad());
    if !r.converged {
        return Err(Error::Accuracy { what: name.to_string(), value: r.value.norm(), bound: r.error });
    }
    Ok(r)
}

/// ∫ over the real s-line via a central segment and two descending rays.
fn full_line<H: Fn(Complex64) -> Complex64>(
    h: H,
    x: f64,
    y: f64,
    opts: &OscOptions,
    name: &str,
) -> Result<OscillatoryResult> {
    let s0 = opts.central_half_width;
    if !(s0 > 1.0) {
        return Err(Error::config("central half-width must exceed 1"));
    }
    let q = opts.quad();
    let a_max = 1.0 + y.abs() * FRAC_PI_2;
    let a_min = 1.0 - y.abs() * FRAC_PI_2;
    let osc = 2.0 * x * a_max * 2.0 * s0;
    let panels = ((osc / PI).ceil() as usize + 16).min(opts.max_panels / 4);
    let central = quad::adaptive(|s| h(Complex64::new(s, 0.0)), -s0, s0, panels, &q);

    // ray decay rate 2x·Re A(s) is smallest where A → 1 ∓ yπ/2
    let length = |a: f64| (1.0 / (2.0 * x * a)).clamp(1.0, 1e8);
    let (a_right, a_left) = if y >= 0.0 { (a_max, a_min) } else { (a_min, a_max) };
    let right = quad::semi_infinite(|v| h(Complex64::new(s0, -v)), length(a_right), 8, &q);
    let left = quad::semi_infinite(|v| h(Complex64::new(-s0, -v)), length(a_left), 8, &q);

    let value = central.value - I * right.value + I * left.value;
    let abs_error_estimate = central.error;
    let truncation_bound = right.error + left.error;
    let target = opts.abs_tol.max(opts.rel_tol * value.norm());
    let floor = 50.0 * f64::EPSILON * (central.l1 + right.l1 + left.l1);
    let converged = (central.converged && right.converged && left.converged)
        || abs_error_estimate + truncation_bound <= target.max(floor);
    if !converged {
        return Err(Error::Accuracy {
            what: name.to_string(),
            value: value.norm(),
            bound: abs_error_estimate + truncation_bound,
        });
    }
    Ok(OscillatoryResult { value, abs_error_estimate, truncation_bound })
}

/// One point of the shape function F[x, y].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FCurvePoint {
    pub x: f64,
    pub y: f64,
    pub value: f64,
    pub abs_error_estimate: f64,
    pub truncation_bound: f64,
}

/// F[x, y] = |∫ ds [1 − i(y/4x)/((1+s²)A²)] e^{−2ixΦ(s)} / ((1+s²)A)| over
/// the real line, with A = 1 + y·atan s and Φ′ = A.
pub fn f_curve(x: f64, y: f64) -> Result<FCurvePoint> {
    f_curve_with(x, y, &OscOptions::default())
}

pub fn f_curve_with(x: f64, y: f64, opts: &OscOptions) -> Result<FCurvePoint> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::config(format!("x must be positive, got {x}")));
    }
    if !(y >= 0.0 && y < FRAC_2_PI) {
        return Err(Error::config(format!("y must lie in [0, 2/pi), got {y}")));
    }
    let c = ComplexArctan::new(1.0, y, x);
    let k = y / (4.0 * x);
    let h = move |s: Complex64| {
        let q = 1.0 + s * s;
        let a = 1.0 + y * s.atan();
        let phi = a * s - 0.5 * y * q.ln();
        let carrier = (-2.0 * I * c.x * phi).exp();
        (1.0 - I * k / (q * a * a)) * carrier / (q * a)
    };
    let r = full_line(h, x, y, opts, "F[x,y]")?;
    Ok(FCurvePoint {
        x,
        y,
        value: r.value.norm(),
        abs_error_estimate: r.abs_error_estimate,
        truncation_bound: r.truncation_bound,
    })
}

/// π e^{−2x}, the exact value of F[x, 0].
pub fn f_asymptote(x: f64) -> f64 {
    PI * (-2.0 * x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drive(theta_dot: f64) -> DrivingSpec {
        DrivingSpec::new(1.0, theta_dot, 0.0, 1.0)
    }

    #[test]
    fn zero_amplitude_gives_zero() {
        let p = FrequencyProtocol::arctan(1.0, 0.0, 1.0).unwrap();
        let o = OscOptions::default();
        for d in [Domain::FullLine, Domain::Window] {
            assert_eq!(integral_i0(&p, &drive(1.0), d, &o).unwrap().value.norm(), 0.0);
            for f in [I1Form::Defining, I1Form::Reduced] {
                assert_eq!(integral_i1(&p, &drive(1.0), f, d, &o).unwrap().value.norm(), 0.0);
            }
        }
    }

    #[test]
    fn y_zero_law() {
        for &x in &[0.1, 0.2, 0.5, 1.0, 2.0, 4.0] {
            let f = f_curve(x, 0.0).unwrap();
            let exact = f_asymptote(x);
            assert!((f.value / exact - 1.0).abs() < 1e-9, "x={x}: {} vs {exact}", f.value);
        }
    }

    #[test]
    fn i0_vanishes_on_the_full_line() {
        let p = FrequencyProtocol::arctan(1.0, 0.5, 1.0).unwrap();
        let o = OscOptions::default();
        let i0 = integral_i0(&p, &drive(1.0), Domain::FullLine, &o).unwrap();
        let i1 = integral_i1(&p, &drive(1.0), I1Form::Reduced, Domain::FullLine, &o).unwrap();
        assert!(i0.value.norm() <= (1e-8 * i1.value.norm()).max(i0.total_error()), "{}", i0.value);
    }

    #[test]
    fn i1_forms_agree() {
        let p = FrequencyProtocol::arctan(1.0, 0.5, 1.0).unwrap();
        let o = OscOptions::default();
        let a = integral_i1(&p, &drive(1.0), I1Form::Defining, Domain::FullLine, &o).unwrap();
        let b = integral_i1(&p, &drive(1.0), I1Form::Reduced, Domain::FullLine, &o).unwrap();
        assert!((a.value - b.value).norm() < 1e-8 * b.value.norm(), "{} vs {}", a.value, b.value);
    }

    #[test]
    fn i1_factorizes_through_f() {
        let (w0, d, tau, td) = (1.3, 0.4, 0.9, 2.5);
        let p = FrequencyProtocol::arctan(w0, d, tau).unwrap();
        let i1 = integral_i1(&p, &drive(td), I1Form::Reduced, Domain::FullLine, &OscOptions::default()).unwrap();
        let f = f_curve(w0 * tau, d / w0).unwrap();
        let lhs = i1.value.norm() * td * w0 / d;
        assert!((lhs / f.value - 1.0).abs() < 1e-8, "{lhs} vs {}", f.value);
    }

    #[test]
    fn short_window_breaks_the_identity() {
        let p = FrequencyProtocol::arctan(1.0, 0.5, 1.0).unwrap();
        let short = p.with_window(Window::new(-2.0, 2.0).unwrap()).unwrap();
        let o = OscOptions::default();
        let i0 = integral_i0(&short, &drive(1.0), Domain::Window, &o).unwrap();
        let i1 = integral_i1(&short, &drive(1.0), I1Form::Reduced, Domain::Window, &o).unwrap();
        assert!(i0.value.norm() > 1e-2 * i1.value.norm(), "{} vs {}", i0.value, i1.value);
        let long = integral_i0(&p, &drive(1.0), Domain::Window, &o).unwrap();
        assert!(long.value.norm() < i0.value.norm());
    }

    #[test]
    fn non_constant_rate_is_unsupported() {
        let p = FrequencyProtocol::arctan(1.0, 0.5, 1.0).unwrap();
        let mut d = drive(1.0);
        d.theta_ddot = 0.1;
        assert!(matches!(integral_i0(&p, &d, Domain::FullLine, &OscOptions::default()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn full_line_needs_arctan() {
        let s: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, 1.0 + 0.01 * i as f64]).collect();
        let p = FrequencyProtocol::tabulated(&s).unwrap();
        assert!(matches!(
            integral_i0(&p, &drive(1.0), Domain::FullLine, &OscOptions::default()),
            Err(Error::Unsupported(_))
        ));
        assert!(integral_i0(&p, &drive(1.0), Domain::Window, &OscOptions::default()).is_ok());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(f_curve(0.0, 0.1).is_err());
        assert!(f_curve(-1.0, 0.1).is_err());
        assert!(f_curve(1.0, -0.1).is_err());
        assert!(f_curve(1.0, FRAC_2_PI).is_err());
    }

    #[test]
    fn moving_the_ray_changes_f_within_reported_error() {
        let narrow = f_curve_with(0.7, 0.5, &OscOptions::default()).unwrap();
        let wide = f_curve_with(0.7, 0.5, &OscOptions { central_half_width: 16.0, ..OscOptions::default() }).unwrap();
        let diff = (narrow.value - wide.value).abs();
        assert!(diff <= narrow.truncation_bound + wide.truncation_bound + narrow.abs_error_estimate + wide.abs_error_estimate,
            "{diff:e} vs {:e}", narrow.truncation_bound);
    }
}
