//! Real-axis reference for F[x, y], coded separately from the library.
//!
//! The line is cut at the zeros of cos/sin of the phase 2xΦ(s). Each
//! half period is integrated with tanh-sinh and the alternating tail series
//! is summed with Wynn's epsilon algorithm.

use std::f64::consts::PI;

fn phi(s: f64, y: f64) -> f64 {
    s + y * (s * s.atan() - 0.5 * (s * s).ln_1p())
}

fn dphi(s: f64, y: f64) -> f64 {
    1.0 + y * s.atan()
}

/// Integrand split into real and imaginary parts.
fn integrand(s: f64, x: f64, y: f64) -> (f64, f64) {
    let q = 1.0 + s * s;
    let a = 1.0 + y * s.atan();
    let k = y / (4.0 * x) / (q * a * a);
    let amp = 1.0 / (q * a);
    let th = -2.0 * x * phi(s, y);
    let (sn, cs) = th.sin_cos();
    // (1 − ik)(cos + i sin)·amp
    (amp * (cs + k * sn), amp * (sn - k * cs))
}

fn tanh_sinh<F: Fn(f64) -> (f64, f64)>(f: &F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let node = |t: f64| {
        let u = 0.5 * PI * t.sinh();
        let ch = u.cosh();
        let x = u.tanh();
        let w = 0.5 * PI * t.cosh() / (ch * ch);
        (x, w)
    };
    let t_max = 3.2;
    let mut h = 0.5;
    let eval = |h: f64, start: usize, stride: usize| {
        let (mut re, mut im) = (0.0, 0.0);
        let n = (t_max / h) as i64;
        for k in (start as i64..=n).step_by(stride) {
            for sign in [-1.0, 1.0] {
                if k == 0 && sign > 0.0 {
                    continue;
                }
                let (u, w) = node(sign * k as f64 * h);
                if w < 1e-300 || u.abs() >= 1.0 {
                    continue;
                }
                let (fr, fi) = f(c + r * u);
                re += w * fr;
                im += w * fi;
            }
        }
        (re, im)
    };
    let (mut sre, mut sim) = eval(h, 0, 1);
    let mut prev = (sre * h * r, sim * h * r);
    for _ in 0..12 {
        h *= 0.5;
        let (are, aim) = eval(h, 1, 2);
        sre += are;
        sim += aim;
        let cur = (sre * h * r, sim * h * r);
        let d = ((cur.0 - prev.0).powi(2) + (cur.1 - prev.1).powi(2)).sqrt();
        prev = cur;
        if d < tol {
            break;
        }
    }
    prev
}

/// Limit of a sequence of partial sums by Wynn's epsilon table.
fn wynn(partial: &[f64]) -> f64 {
    let n = partial.len();
    let mut e_prev = vec![0.0; n + 1];
    let mut e_cur: Vec<f64> = partial.to_vec();
    let mut best = *partial.last().unwrap();
    let mut k = 0;
    while e_cur.len() > 1 {
        let mut next = Vec::with_capacity(e_cur.len() - 1);
        for i in 0..e_cur.len() - 1 {
            let d = e_cur[i + 1] - e_cur[i];
            let v = if d == 0.0 { f64::INFINITY } else { e_prev[i + 1] + 1.0 / d };
            next.push(v);
        }
        e_prev = e_cur;
        e_cur = next;
        k += 1;
        if k % 2 == 0 {
            if let Some(&v) = e_cur.last() {
                if v.is_finite() {
                    best = v;
                }
            }
        }
    }
    best
}

/// Points s_k beyond `start` (in the direction `dir` = ±1) where the
/// phase has advanced by kπ/2.
fn phase_steps(start: f64, dir: f64, x: f64, y: f64, count: usize) -> Vec<f64> {
    let base = 2.0 * x * phi(start, y);
    let mut pts = vec![start];
    let mut s = start;
    for k in 1..=count {
        let target = base + dir * k as f64 * 0.5 * PI;
        let mut z = s + dir * 0.5 * PI / (2.0 * x * dphi(s, y));
        for _ in 0..60 {
            let g = 2.0 * x * phi(z, y) - target;
            let dz = g / (2.0 * x * dphi(z, y));
            z -= dz;
            if dz.abs() < 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        pts.push(z);
        s = z;
    }
    pts
}

/// F[x, y] by real-axis quadrature.
pub fn f_reference(x: f64, y: f64) -> f64 {
    let f = |s: f64| integrand(s, x, y);
    let tol = 1e-15;
    // central part split at quarter periods
    let s1 = 6.0;
    let grid = {
        let mut g = phase_steps(-s1, 1.0, x, y, 100_000);
        g.retain(|&s| s < s1);
        g.push(s1);
        g
    };
    let (mut cre, mut cim) = (0.0, 0.0);
    for w in grid.windows(2) {
        let (a, b) = tanh_sinh(&f, w[0], w[1], tol);
        cre += a;
        cim += b;
    }
    let tail = |dir: f64| {
        let start = dir * s1;
        let pts = phase_steps(start, dir, x, y, 4 * 60);
        // sum whole periods so the partial sums alternate cleanly
        let (mut pre, mut pim) = (vec![0.0], vec![0.0]);
        let (mut are, mut aim) = (0.0, 0.0);
        for (i, w) in pts.windows(2).enumerate() {
            let (lo, hi) = if dir > 0.0 { (w[0], w[1]) } else { (w[1], w[0]) };
            let (a, b) = tanh_sinh(&f, lo, hi, tol);
            are += a;
            aim += b;
            if i % 2 == 1 {
                pre.push(are);
                pim.push(aim);
            }
        }
        (wynn(&pre), wynn(&pim))
    };
    let (rre, rim) = tail(1.0);
    let (lre, lim) = tail(-1.0);
    let re = cre + rre + lre;
    let im = cim + rim + lim;
    (re * re + im * im).sqrt()
}

/// The default figure grid: 40 log-spaced points on [0.1, 4].
pub fn figure_grid() -> Vec<f64> {
    let (a, b) = (0.1_f64.ln(), 4.0_f64.ln());
    (0..40).map(|i| (a + (b - a) * i as f64 / 39.0).exp()).collect()
}
