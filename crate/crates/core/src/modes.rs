//! Mode functions of f̈ + Ω²(t) f = 0, Bogoliubov coefficients and
//! action-angle variables.

use crate::error::{Error, Result};
use crate::ode::{self, StepControl};
use crate::protocol::{FrequencyProtocol, Window};
use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Which positive-frequency solution defines "no particles".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vacuum {
    /// f = 1/√(2ω), ḟ = −iωf.
    Instantaneous,
    /// First-order adiabatic data, ḟ = (−iω − ω̇/2ω) f; matches the WKB mode
    /// exactly and coincides with `Instantaneous` where ω̇ = 0.
    #[default]
    Adiabatic,
}

/// Which frequency drives the oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Drive {
    /// Ω² = ω².
    Plain,
    /// Counterdiabatic Ω².
    Counterdiabatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchyData {
    pub f: Complex64,
    pub fdot: Complex64,
}

impl CauchyData {
    pub fn new(vacuum: Vacuum, omega: f64, omega_dot: f64) -> Self {
        let f = Complex64::new(1.0 / (2.0 * omega).sqrt(), 0.0);
        let rate = match vacuum {
            Vacuum::Instantaneous => -I * omega,
            Vacuum::Adiabatic => -I * omega - omega_dot / (2.0 * omega),
        };
        CauchyData { f, fdot: rate * f }
    }

    pub fn for_protocol(p: &FrequencyProtocol, t: f64, vacuum: Vacuum) -> Result<Self> {
        let [w, w1, ..] = p.omega_derivatives(t)?;
        Ok(Self::new(vacuum, w, w1))
    }

    pub fn wronskian(&self) -> f64 {
        wronskian(self.f, self.fdot)
    }
}

/// i(f*ḟ − fḟ*), real by construction.
#[inline]
pub fn wronskian(f: Complex64, fdot: Complex64) -> f64 {
    -2.0 * (f.conj() * fdot).im
}

#[derive(Debug, Clone, Copy)]
pub struct ModeSolverOptions {
    pub rtol: f64,
    pub atol: f64,
    pub output_points: usize,
    /// Largest tolerated |W − 1| before the solve is rejected.
    pub wronskian_limit: f64,
    pub max_steps: usize,
}

impl Default for ModeSolverOptions {
    fn default() -> Self {
        ModeSolverOptions { rtol: 1e-12, atol: 1e-14, output_points: 2001, wronskian_limit: 1e-6, max_steps: 2_000_000 }
    }
}

impl ModeSolverOptions {
    fn control(&self) -> Result<StepControl> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::config("mode solver tolerances must be positive"));
        }
        Ok(StepControl { rtol: self.rtol, atol: self.atol, max_steps: self.max_steps, ..StepControl::default() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeFunction {
    pub grid: Vec<f64>,
    pub f: Vec<Complex64>,
    pub fdot: Vec<Complex64>,
    pub wronskian_drift: f64,
}

impl ModeFunction {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn last(&self) -> (f64, Complex64, Complex64) {
        let n = self.len() - 1;
        (self.grid[n], self.f[n], self.fdot[n])
    }

    /// Columns t, Re f, Im f, Re ḟ, Im ḟ, |W−1|.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,re_f,im_f,re_fdot,im_fdot,wronskian_dev")?;
        for ((t, f), fd) in self.grid.iter().zip(&self.f).zip(&self.fdot) {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                t,
                f.re,
                f.im,
                fd.re,
                fd.im,
                (wronskian(*f, *fd) - 1.0).abs()
            )?;
        }
        Ok(())
    }
}

fn rhs<F: Fn(f64) -> f64>(omega2: &F) -> impl FnMut(f64, &[f64; 4], &mut [f64; 4]) + '_ {
    move |t, y, dy| {
        let w2 = omega2(t);
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = -w2 * y[0];
        dy[3] = -w2 * y[1];
    }
}

fn pack(c: &CauchyData) -> [f64; 4] {
    [c.f.re, c.f.im, c.fdot.re, c.fdot.im]
}

/// Integrates the mode equation across `window` and samples it on a uniform
/// grid of `opts.output_points` times.
pub fn solve_mode<F: Fn(f64) -> f64>(
    omega2: F,
    window: Window,
    initial: CauchyData,
    opts: &ModeSolverOptions,
) -> Result<ModeFunction> {
    let ctl = opts.control()?;
    let grid = window.uniform_grid(opts.output_points.max(2));
    let tr = ode::integrate(rhs(&omega2), window.start, pack(&initial), window.end, &grid, &ctl)?;
    let w0 = initial.wronskian();
    let mut f = Vec::with_capacity(grid.len());
    let mut fdot = Vec::with_capacity(grid.len());
    let mut drift = 0.0_f64;
    for y in &tr.dense {
        let (a, b) = (Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3]));
        drift = drift.max((wronskian(a, b) - w0).abs());
        f.push(a);
        fdot.push(b);
    }
    if !(drift <= opts.wronskian_limit) {
        return Err(Error::Accuracy { what: "mode Wronskian".into(), value: drift, bound: opts.wronskian_limit });
    }
    Ok(ModeFunction { grid, f, fdot, wronskian_drift: drift })
}

/// Endpoint-only propagation; returns (f, ḟ) at `window.end`.
pub fn propagate<F: Fn(f64) -> f64>(
    omega2: F,
    window: Window,
    initial: CauchyData,
    opts: &ModeSolverOptions,
) -> Result<(Complex64, Complex64)> {
    let ctl = opts.control()?;
    let tr = ode::integrate(rhs(&omega2), window.start, pack(&initial), window.end, &[], &ctl)?;
    let y = tr.y_end;
    let (f, fdot) = (Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3]));
    let drift = (wronskian(f, fdot) - initial.wronskian()).abs();
    if !(drift <= opts.wronskian_limit) {
        return Err(Error::Accuracy { what: "mode Wronskian".into(), value: drift, bound: opts.wronskian_limit });
    }
    Ok((f, fdot))
}

/// Solves the mode equation for `protocol` driven by ω² or Ω², starting from
/// the requested vacuum at the window start.
pub fn solve_protocol_mode(
    protocol: &FrequencyProtocol,
    drive: Drive,
    vacuum: Vacuum,
    opts: &ModeSolverOptions,
) -> Result<ModeFunction> {
    let window = protocol.window();
    let initial = CauchyData::for_protocol(protocol, window.start, vacuum)?;
    match drive {
        Drive::Plain => solve_mode(
            |t| {
                let w = protocol.derivs_unchecked(t)[0];
                w * w
            },
            window,
            initial,
            opts,
        ),
        Drive::Counterdiabatic => {
            protocol.require_valid()?;
            solve_mode(|t| protocol.omega2_cd_unchecked(t), window, initial, opts)
        }
    }
}

/// WKB mode e^{−i∫ω}/√(2ω) with the phase measured from the window start,
/// and its exact derivative.
pub fn wkb_mode(protocol: &FrequencyProtocol, t: f64) -> Result<(Complex64, Complex64)> {
    let [w, w1, ..] = protocol.omega_derivatives(t)?;
    let phase = protocol.phase_unchecked(t) - protocol.phase_unchecked(protocol.window().start);
    let f = Complex64::from_polar(1.0 / (2.0 * w).sqrt(), -phase);
    Ok((f, (-I * w - w1 / (2.0 * w)) * f))
}

/// Positive-frequency reference solution (u, u̇) at the final time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceMode {
    pub u: Complex64,
    pub udot: Complex64,
    /// |ω̇|/ω² where the reference is taken.
    pub edge_ratio: f64,
}

impl ReferenceMode {
    pub fn new(vacuum: Vacuum, omega: f64, omega_dot: f64) -> Self {
        let c = CauchyData::new(vacuum, omega, omega_dot);
        ReferenceMode { u: c.f, udot: c.fdot, edge_ratio: omega_dot.abs() / (omega * omega) }
    }

    /// Reference at the end of the protocol window. Warns when ω is still
    /// changing there, since the particle notion is then ambiguous.
    pub fn at_window_end(protocol: &FrequencyProtocol, vacuum: Vacuum) -> Result<Self> {
        let t = protocol.window().end;
        let [w, w1, ..] = protocol.omega_derivatives(t)?;
        let r = Self::new(vacuum, w, w1);
        let tol = protocol.validity().edge_tolerance;
        if r.edge_ratio > tol {
            log::warn!(
                "reference vacuum at t = {t} is ill-defined: |omega_dot|/omega^2 = {:.3e} > {tol:.1e}",
                r.edge_ratio
            );
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BogoliubovCoefficients {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl BogoliubovCoefficients {
    /// |α|² − |β|² − 1.
    pub fn normalization_residual(&self) -> f64 {
        self.alpha.norm_sqr() - self.beta.norm_sqr() - 1.0
    }

    pub fn beta_sq(&self) -> f64 {
        self.beta.norm_sqr()
    }
}

/// Projects (f, ḟ) on the reference pair (u, u*): f = αu + βu*.
pub fn bogoliubov_from(f: Complex64, fdot: Complex64, r: &ReferenceMode) -> BogoliubovCoefficients {
    let alpha = I * (r.u.conj() * fdot - r.udot.conj() * f);
    let beta = -I * (r.u * fdot - r.udot * f);
    BogoliubovCoefficients { alpha, beta }
}

/// Bogoliubov coefficients of the final sample of `mode`.
pub fn bogoliubov(mode: &ModeFunction, reference: &ReferenceMode) -> BogoliubovCoefficients {
    let (_, f, fdot) = mode.last();
    bogoliubov_from(f, fdot, reference)
}

/// Mean excitation (2n+1)|β|² for an initial number state n.
pub fn particle_number(b: &BogoliubovCoefficients, n_initial: u32) -> f64 {
    (2.0 * n_initial as f64 + 1.0) * b.beta_sq()
}

/// Action J (physical units, E = ωJ for a static oscillator) and angle φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionAngle {
    pub j: f64,
    pub phi: f64,
    /// J = 0, where φ is undefined and reported as 0.
    pub degenerate: bool,
}

/// Inverts X = (c f + c* f*)/√m, P = √m (c ḟ + c* ḟ*) with c = √J e^{−iφ}.
pub fn action_angle(x: f64, p: f64, f: Complex64, fdot: Complex64, mass: f64) -> ActionAngle {
    let sm = mass.sqrt();
    let c = I * (f.conj() * (p / sm) - fdot.conj() * (sm * x));
    let j = c.norm_sqr();
    if j == 0.0 {
        ActionAngle { j: 0.0, phi: 0.0, degenerate: true }
    } else {
        ActionAngle { j, phi: -c.arg(), degenerate: false }
    }
}

/// (X, P) from (J, φ).
pub fn phase_space_point(aa: &ActionAngle, f: Complex64, fdot: Complex64, mass: f64) -> (f64, f64) {
    let c = Complex64::from_polar(aa.j.sqrt(), -aa.phi);
    let sm = mass.sqrt();
    (2.0 * (c * f).re / sm, 2.0 * sm * (c * fdot).re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn const_window() -> Window {
        Window::new(-3.0, 17.0).unwrap()
    }

    #[test]
    fn constant_frequency_is_a_plane_wave() {
        let w0 = 1.7;
        let win = const_window();
        let init = CauchyData::new(Vacuum::Instantaneous, w0, 0.0);
        let m = solve_mode(|_| w0 * w0, win, init, &ModeSolverOptions::default()).unwrap();
        assert!(m.wronskian_drift < 1e-9);
        assert_eq!(m.len(), 2001);
        for ((t, f), fd) in m.grid.iter().zip(&m.f).zip(&m.fdot) {
            let exact = Complex64::from_polar(1.0 / (2.0 * w0).sqrt(), -w0 * (t - win.start));
            assert!((f - exact).norm() < 1e-9 * exact.norm(), "t={t}");
            assert!((fd + I * w0 * exact).norm() < 1e-9 * w0 * exact.norm());
        }
        let r = ReferenceMode::new(Vacuum::Instantaneous, w0, 0.0);
        let b = bogoliubov(&m, &r);
        assert!((b.alpha.norm() - 1.0).abs() < 1e-10 && b.beta.norm() < 1e-10);
    }

    #[test]
    fn cauchy_data_have_unit_wronskian() {
        for v in [Vacuum::Instantaneous, Vacuum::Adiabatic] {
            let c = CauchyData::new(v, 1.3, 0.4);
            assert!((c.wronskian() - 1.0).abs() < 1e-15);
        }
        let c = CauchyData::new(Vacuum::Instantaneous, 2.0, 0.0);
        assert!((c.f.re - 0.5).abs() < 1e-16 && (c.fdot - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn wkb_mode_identities() {
        let flat = FrequencyProtocol::arctan(1.5, 0.0, 2.0).unwrap();
        let start = flat.window().start;
        for &t in &[start, -3.0, 0.0, 11.0] {
            let (f, _) = wkb_mode(&flat, t).unwrap();
            let exact = Complex64::from_polar(1.0 / 3.0_f64.sqrt(), -1.5 * (t - start));
            assert!((f - exact).norm() < 1e-13);
        }
        let p = FrequencyProtocol::arctan(1.0, 0.5, 2.0).unwrap();
        for t in p.window().uniform_grid(57) {
            let (f, fd) = wkb_mode(&p, t).unwrap();
            assert!((wronskian(f, fd) - 1.0).abs() < 1e-12);
        }
        let (f, fd) = wkb_mode(&flat, start).unwrap();
        let c = CauchyData::for_protocol(&flat, start, Vacuum::Instantaneous).unwrap();
        assert!((f - c.f).norm() < 1e-15 && (fd - c.fdot).norm() < 1e-15);
    }

    #[test]
    fn counterdiabatic_drive_follows_wkb_mode() {
        let p = FrequencyProtocol::arctan(1.0, 0.5, 1.0).unwrap();
        let m = solve_protocol_mode(&p, Drive::Counterdiabatic, Vacuum::Adiabatic, &ModeSolverOptions::default())
            .unwrap();
        assert!(m.wronskian_drift < 1e-9);
        let mut worst = 0.0_f64;
        for (t, f) in m.grid.iter().zip(&m.f) {
            let (fw, _) = wkb_mode(&p, *t).unwrap();
            worst = worst.max((f - fw).norm() / fw.norm());
        }
        assert!(worst < 1e-7, "relative deviation {worst:e}");
        let r = ReferenceMode::at_window_end(&p, Vacuum::Adiabatic).unwrap();
        let b = bogoliubov(&m, &r);
        assert!(b.beta_sq() < 1e-10, "{}", b.beta_sq());
    }

    #[test]
    fn plain_drive_creates_particles() {
        let p = FrequencyProtocol::arctan(1.0, 0.5, 0.5).unwrap();
        let m = solve_protocol_mode(&p, Drive::Plain, Vacuum::Adiabatic, &ModeSolverOptions::default()).unwrap();
        let r = ReferenceMode::at_window_end(&p, Vacuum::Adiabatic).unwrap();
        let b = bogoliubov(&m, &r);
        assert!(b.beta_sq() > 1e-3, "{}", b.beta_sq());
        assert!(b.normalization_residual().abs() < 1e-9);
    }

    #[test]
    fn plain_drive_suppression_is_monotone() {
        let mut prev = f64::INFINITY;
        for k in 0..8 {
            let x = 0.5 * 8.0_f64.powf(k as f64 / 7.0);
            let p = FrequencyProtocol::arctan(1.0, 0.3, x).unwrap();
            let m = solve_protocol_mode(&p, Drive::Plain, Vacuum::Adiabatic, &ModeSolverOptions::default()).unwrap();
            let b = bogoliubov(&m, &ReferenceMode::at_window_end(&p, Vacuum::Adiabatic).unwrap());
            assert!(b.beta_sq() < prev, "x={x}: {} >= {prev}", b.beta_sq());
            prev = b.beta_sq();
        }
    }

    #[test]
    fn particle_number_law() {
        let b = BogoliubovCoefficients { alpha: Complex64::new(1.0, 0.0), beta: Complex64::new(0.0, 0.0) };
        assert_eq!(particle_number(&b, 4), 0.0);
        let b = BogoliubovCoefficients { alpha: Complex64::new(1.005, 0.0), beta: Complex64::new(0.1, 0.0) };
        assert!((particle_number(&b, 0) - 0.01).abs() < 1e-16);
        assert!((particle_number(&b, 3) - 0.07).abs() < 1e-15);
    }

    #[test]
    fn action_angle_round_trip() {
        let c = CauchyData::new(Vacuum::Adiabatic, 1.3, 0.2);
        let (f, fd) = (c.f * Complex64::from_polar(1.0, 0.7), c.fdot * Complex64::from_polar(1.0, 0.7));
        let m: f64 = 2.5;
        let j: f64 = 0.8;
        let x = (j / m).sqrt() * 2.0 * f.re;
        let p = (m * j).sqrt() * 2.0 * fd.re;
        let aa = action_angle(x, p, f, fd, m);
        assert!((aa.j - j).abs() < 1e-14 && aa.phi.abs() < 1e-14);
        for &(x, p) in &[(0.3, -1.1), (-2.0, 0.4), (1e-3, 5.0)] {
            let aa = action_angle(x, p, f, fd, m);
            let (x2, p2) = phase_space_point(&aa, f, fd, m);
            assert!((x2 - x).abs() < 1e-10 * x.abs().max(1.0) && (p2 - p).abs() < 1e-10 * p.abs().max(1.0));
        }
        let aa = action_angle(0.0, 0.0, f, fd, m);
        assert!(aa.degenerate && aa.j == 0.0 && aa.phi == 0.0);
    }

    #[test]
    fn static_energy_is_omega_times_action() {
        let (w, m) = (2.0, 3.0);
        let c = CauchyData::new(Vacuum::Instantaneous, w, 0.0);
        let (x, p) = (0.4, -0.9);
        let aa = action_angle(x, p, c.f, c.fdot, m);
        let e = p * p / (2.0 * m) + 0.5 * m * w * w * x * x;
        assert!((e - w * aa.j).abs() < 1e-14);
    }

    #[test]
    fn action_and_angle_are_conserved_along_trajectories() {
        let p = FrequencyProtocol::arctan(1.0, 0.4, 1.5).unwrap();
        let opts = ModeSolverOptions::default();
        let mode = solve_protocol_mode(&p, Drive::Counterdiabatic, Vacuum::Adiabatic, &opts).unwrap();
        // independent classical trajectory through the same Ω²
        let win = p.window();
        let ctl = StepControl { rtol: 1e-13, atol: 1e-15, ..StepControl::default() };
        let mass = 1.7;
        let traj = ode::integrate(
            |t, y: &[f64; 2], dy: &mut [f64; 2]| {
                dy[0] = y[1] / mass;
                dy[1] = -mass * p.omega2_cd_unchecked(t) * y[0];
            },
            win.start,
            [0.8, -0.3],
            win.end,
            &mode.grid,
            &ctl,
        )
        .unwrap();
        let first = action_angle(traj.dense[0][0], traj.dense[0][1], mode.f[0], mode.fdot[0], mass);
        for (k, y) in traj.dense.iter().enumerate() {
            let aa = action_angle(y[0], y[1], mode.f[k], mode.fdot[k], mass);
            assert!((aa.j / first.j - 1.0).abs() < 1e-8, "J drift at t={}", mode.grid[k]);
            assert!((aa.phi - first.phi).abs() < 1e-7);
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let init = CauchyData::new(Vacuum::Instantaneous, 1.0, 0.0);
        let opts = ModeSolverOptions { output_points: 5, ..ModeSolverOptions::default() };
        let m = solve_mode(|_| 1.0, Window::new(0.0, 1.0).unwrap(), init, &opts).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 6);
        assert!(s.starts_with("t,re_f,im_f,re_fdot,im_fdot,wronskian_dev\n"));
    }

    #[test]
    fn wronskian_violation_is_an_accuracy_error() {
        let init = CauchyData::new(Vacuum::Instantaneous, 1.0, 0.0);
        let opts = ModeSolverOptions { rtol: 1e-3, atol: 1e-3, wronskian_limit: 1e-12, ..Default::default() };
        let r = solve_mode(|t| 1.0 + t * t, Window::new(0.0, 30.0).unwrap(), init, &opts);
        assert!(matches!(r, Err(Error::Accuracy { .. })));
    }
}
