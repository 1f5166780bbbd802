//! Slow reference for ν and μ: direct two-time quadrature of
//!   ν = ∫∫ a(t) a*(t′) N(t, t′) dt dt′ + cc,
//!   μ = (iħ/4) ∫∫_{t>t′} D(t, t′) [a(t) a*(t′) − cc] dt dt′,
//! with a = (Ω²)′ f₀² over the protocol window. The WKB phase is accumulated
//! panel by panel with Gauss–Legendre on ω, not taken from the closed form.

use sta_cost::quad::gauss_legendre;
use sta_cost::{Complex64, DrivingSpec, FrequencyProtocol, SystemSpec};

const ORDER: usize = 16;

pub struct DoubleIntegral {
    pub nu: f64,
    pub mu: f64,
}

struct Panels<'a> {
    p: &'a FrequencyProtocol,
    theta_dot: f64,
    x: Vec<f64>,
    w: Vec<f64>,
    starts: Vec<f64>,
    h: f64,
    phase_at_start: Vec<f64>,
}

impl Panels<'_> {
    fn omega_integral(&self, a: f64, b: f64) -> f64 {
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        self.x.iter().zip(&self.w).map(|(x, w)| w * self.p.derivs_unchecked(m + r * x)[0]).sum::<f64>() * r
    }

    fn a(&self, panel: usize, t: f64) -> Complex64 {
        let phase = self.phase_at_start[panel] + self.omega_integral(self.starts[panel], t);
        let om = self.p.derivs_unchecked(t)[0];
        self.p.rate_unchecked(t) / self.theta_dot * Complex64::from_polar(1.0, -2.0 * phase) / (2.0 * om)
    }

    fn nodes(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        self.x.iter().zip(&self.w).map(move |(x, w)| (m + r * x, w * r))
    }
}

pub fn nu_mu_double(
    protocol: &FrequencyProtocol,
    drive: &DrivingSpec,
    system: &SystemSpec,
    panel_len: f64,
) -> DoubleIntegral {
    let win = protocol.window();
    let n = (win.len() / panel_len).ceil() as usize;
    let h = win.len() / n as f64;
    let (x, w) = gauss_legendre(ORDER);
    let starts: Vec<f64> = (0..n).map(|i| win.start + h * i as f64).collect();
    let mut pan = Panels { p: protocol, theta_dot: drive.theta_dot, x, w, starts, h, phase_at_start: vec![0.0; n] };
    for i in 1..n {
        pan.phase_at_start[i] = pan.phase_at_start[i - 1] + pan.omega_integral(pan.starts[i - 1], pan.starts[i]);
    }

    // outer nodes, panel by panel
    let mut t = Vec::with_capacity(n * ORDER);
    let mut wt = Vec::with_capacity(n * ORDER);
    let mut av = Vec::with_capacity(n * ORDER);
    for p in 0..n {
        for (ti, wi) in pan.nodes(pan.starts[p], pan.starts[p] + pan.h) {
            t.push(ti);
            wt.push(wi);
            av.push(pan.a(p, ti));
        }
    }

    let mut nu_sum = Complex64::new(0.0, 0.0);
    for i in 0..t.len() {
        let mut inner = Complex64::new(0.0, 0.0);
        for j in 0..t.len() {
            inner += wt[j] * av[j].conj() * drive.noise_kernel(t[i], t[j]);
        }
        nu_sum += wt[i] * av[i] * inner;
    }
    let nu = 2.0 * nu_sum.re;

    // μ: inner integral over [start, t], whole panels then a partial one
    let mut x_sum = Complex64::new(0.0, 0.0);
    for p in 0..n {
        for k in 0..ORDER {
            let i = p * ORDER + k;
            let mut inner = Complex64::new(0.0, 0.0);
            for j in 0..p * ORDER {
                inner += wt[j] * drive.dissipation_kernel(t[i], t[j]) * av[j].conj();
            }
            for (tp, wp) in pan.nodes(pan.starts[p], t[i]) {
                inner += wp * drive.dissipation_kernel(t[i], tp) * pan.a(p, tp).conj();
            }
            x_sum += wt[i] * av[i] * inner;
        }
    }
    // (iħ/4)(X − X*) = −(ħ/2) Im X
    let mu = -0.5 * system.hbar * x_sum.im;
    DoubleIntegral { nu, mu }
}
