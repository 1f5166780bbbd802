//! Gauss rules and adaptive panel quadrature for complex integrands.

use num_complex::Complex64;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Gauss–Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

/// Gauss–Laguerre rule for ∫₀^∞ e^{−s} g(s) ds, nodes ascending.
pub fn gauss_laguerre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0;
    for i in 0..n {
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - x[i - 2])
            }
        };
        let mut pp = 0.0;
        let mut p2 = 0.0;
        for _ in 0..200 {
            let mut p1 = 1.0;
            p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0 - z) * p2 - jf * p3) / (jf + 1.0);
            }
            pp = (nf * p1 - nf * p2) / z;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        w[i] = -1.0 / (pp * nf * p2);
    }
    (x, w)
}

const PANEL_ORDER: usize = 16;
// Panel errors are floored at 50ε∫|f|; allow for rounding in the running sums.
const ROUNDOFF_SLACK: f64 = 1.5;

fn panel_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_ORDER))
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-15, rel_tol: 1e-12, max_panels: 200_000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    /// Sum of per-panel error estimates, including a roundoff floor.
    pub error: f64,
    /// Approximation of ∫|f|, used for roundoff floors.
    pub l1: f64,
    pub panels: usize,
    pub converged: bool,
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    l1: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

fn gl_panel<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let (x, w) = panel_rule();
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    let mut s = Complex64::new(0.0, 0.0);
    let mut l1 = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        let v = f(c + r * xi);
        s += v * *wi;
        l1 += v.norm() * wi;
    }
    (s * r, l1 * r)
}

fn make_panel<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Panel {
    let m = 0.5 * (a + b);
    let (whole, _) = gl_panel(f, a, b);
    let (left, l1l) = gl_panel(f, a, m);
    let (right, l1r) = gl_panel(f, m, b);
    let value = left + right;
    let l1 = l1l + l1r;
    let err = (whole - value).norm().max(50.0 * f64::EPSILON * l1);
    Panel { a, b, value, l1, err }
}

/// Adaptive Gauss–Legendre panels on `[a, b]`, starting from `initial`
/// equal panels. Panel sums are accumulated in position order so the
/// result does not depend on refinement history.
pub fn adaptive<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, initial: usize, opts: &QuadOptions) -> QuadResult {
    if a == b {
        return QuadResult { value: Complex64::new(0.0, 0.0), error: 0.0, l1: 0.0, panels: 0, converged: true };
    }
    let n0 = initial.max(1);
    let h = (b - a) / n0 as f64;
    let mut heap: BinaryHeap<Panel> = (0..n0)
        .map(|i| {
            let pa = a + h * i as f64;
            let pb = if i + 1 == n0 { b } else { a + h * (i + 1) as f64 };
            make_panel(&f, pa, pb)
        })
        .collect();
    let mut done: Vec<Panel> = Vec::new();
    let min_width = 1e-13 * (b - a).abs().max(a.abs()).max(b.abs());
    let (mut value, mut err, mut l1) = totals(heap.iter());
    let mut converged;
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * value.norm());
        converged = err <= target || err <= ROUNDOFF_SLACK * 50.0 * f64::EPSILON * l1;
        if converged || heap.is_empty() || heap.len() + done.len() >= opts.max_panels {
            break;
        }
        let worst = heap.pop().expect("non-empty heap");
        if (worst.b - worst.a).abs() < min_width {
            done.push(worst);
            continue;
        }
        let m = 0.5 * (worst.a + worst.b);
        let (left, right) = (make_panel(&f, worst.a, m), make_panel(&f, m, worst.b));
        value += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        l1 += left.l1 + right.l1 - worst.l1;
        heap.push(left);
        heap.push(right);
    }
    let mut all: Vec<Panel> = heap.into_vec();
    all.extend(done);
    all.sort_by(|p, q| p.a.total_cmp(&q.a));
    let (value, err, l1) = totals(all.iter());
    if !converged {
        let target = opts.abs_tol.max(opts.rel_tol * value.norm());
        converged = err <= target || err <= ROUNDOFF_SLACK * 50.0 * f64::EPSILON * l1;
    }
    QuadResult { value, error: err, l1, panels: all.len(), converged }
}

fn totals<'a>(it: impl Iterator<Item = &'a Panel>) -> (Complex64, f64, f64) {
    let mut v = Complex64::new(0.0, 0.0);
    let (mut e, mut l) = (0.0, 0.0);
    for p in it {
        v += p.value;
        e += p.err;
        l += p.l1;
    }
    (v, e, l)
}

/// ∫₀^∞ g(v) dv through the map v = L·u/(1−u).
pub fn semi_infinite<F: Fn(f64) -> Complex64>(g: F, length: f64, initial: usize, opts: &QuadOptions) -> QuadResult {
    adaptive(
        |u: f64| {
            if u >= 1.0 {
                return Complex64::new(0.0, 0.0);
            }
            let om = 1.0 - u;
            let v = length * u / om;
            let gv = g(v);
            if gv == Complex64::new(0.0, 0.0) {
                gv
            } else {
                gv * (length / (om * om))
            }
        },
        0.0,
        1.0,
        initial,
        opts,
    )
}

/// Real-valued convenience wrapper around [`adaptive`].
pub fn adaptive_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, initial: usize, opts: &QuadOptions) -> (f64, f64, bool) {
    let r = adaptive(|t| Complex64::new(f(t), 0.0), a, b, initial, opts);
    (r.value.re, r.error, r.converged)
}
