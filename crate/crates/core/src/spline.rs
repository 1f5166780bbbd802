//! Quintic not-a-knot interpolating B-spline with exact derivatives and
//! antiderivative.

use crate::error::{Error, Result};

const P: usize = 5;

#[derive(Debug, Clone, PartialEq)]
struct BSpline {
    knots: Vec<f64>,
    coef: Vec<f64>,
    degree: usize,
}

impl BSpline {
    fn span(&self, x: f64) -> usize {
        let n = self.coef.len();
        let p = self.degree;
        if x >= self.knots[n] {
            return n - 1;
        }
        // largest l in [p, n-1] with knots[l] <= x
        let slice = &self.knots[p..=n];
        let idx = slice.partition_point(|&k| k <= x);
        (p + idx.saturating_sub(1)).clamp(p, n - 1)
    }

    fn eval(&self, x: f64) -> f64 {
        let p = self.degree;
        let l = self.span(x);
        let t = &self.knots;
        let mut d = [0.0; P + 2];
        d[..=p].copy_from_slice(&self.coef[l - p..=l]);
        for r in 1..=p {
            for j in (r..=p).rev() {
                let lo = t[j + l - p];
                let den = t[j + 1 + l - r] - lo;
                let alpha = if den == 0.0 { 0.0 } else { (x - lo) / den };
                d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j];
            }
        }
        d[p]
    }

    fn derivative(&self) -> BSpline {
        let p = self.degree;
        let t = &self.knots;
        let coef = self
            .coef
            .windows(2)
            .enumerate()
            .map(|(i, c)| {
                let den = t[i + p + 1] - t[i + 1];
                if den == 0.0 {
                    0.0
                } else {
                    p as f64 * (c[1] - c[0]) / den
                }
            })
            .collect();
        BSpline { knots: t[1..t.len() - 1].to_vec(), coef, degree: p - 1 }
    }

    fn antiderivative(&self) -> BSpline {
        let p = self.degree;
        let t = &self.knots;
        let mut coef = Vec::with_capacity(self.coef.len() + 1);
        let mut acc = 0.0;
        coef.push(0.0);
        for (i, c) in self.coef.iter().enumerate() {
            acc += c * (t[i + p + 1] - t[i]) / (p as f64 + 1.0);
            coef.push(acc);
        }
        let mut knots = Vec::with_capacity(t.len() + 2);
        knots.push(t[0]);
        knots.extend_from_slice(t);
        knots.push(*t.last().unwrap());
        BSpline { knots, coef, degree: p + 1 }
    }
}

/// Nonzero B-spline basis values N_{l−p..=l}(x) (Cox–de Boor).
fn basis_funs(knots: &[f64], l: usize, x: f64, p: usize) -> [f64; P + 1] {
    let mut n = [0.0; P + 1];
    let mut left = [0.0; P + 1];
    let mut right = [0.0; P + 1];
    n[0] = 1.0;
    for j in 1..=p {
        left[j] = x - knots[l + 1 - j];
        right[j] = knots[l + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let den = right[r + 1] + left[j - r];
            let tmp = if den == 0.0 { 0.0 } else { n[r] / den };
            n[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        n[j] = saved;
    }
    n
}

/// Quintic interpolant of tabulated samples, C⁴ across knots.
#[derive(Debug, Clone, PartialEq)]
pub struct QuinticSpline {
    levels: [BSpline; 4],
    integral: BSpline,
}

impl QuinticSpline {
    pub const MIN_SAMPLES: usize = 8;

    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(Error::config("spline abscissae and ordinates differ in length"));
        }
        if n < Self::MIN_SAMPLES {
            return Err(Error::config(format!(
                "a tabulated protocol needs at least {} samples, got {n}",
                Self::MIN_SAMPLES
            )));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::config("tabulated samples must be finite"));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("tabulated sample times must be strictly increasing"));
        }

        let mut knots = Vec::with_capacity(n + P + 1);
        knots.extend(std::iter::repeat_n(x[0], P + 1));
        knots.extend_from_slice(&x[3..n - 3]);
        knots.extend(std::iter::repeat_n(x[n - 1], P + 1));
        debug_assert_eq!(knots.len(), n + P + 1);

        // Banded collocation matrix, half bandwidth P. Collocation matrices of
        // B-splines are totally positive, so elimination needs no pivoting.
        const W: usize = 2 * P + 1;
        let mut band = vec![[0.0; W]; n];
        let probe = BSpline { knots: knots.clone(), coef: vec![0.0; n], degree: P };
        for (i, &xi) in x.iter().enumerate() {
            let l = probe.span(xi);
            let vals = basis_funs(&knots, l, xi, P);
            for (k, v) in vals.iter().enumerate() {
                let col = l - P + k;
                if *v == 0.0 {
                    continue;
                }
                let off = col as isize - i as isize + P as isize;
                if !(0..W as isize).contains(&off) {
                    return Err(Error::config("tabulated samples are too irregular for spline collocation"));
                }
                band[i][off as usize] = *v;
            }
        }
        let mut rhs = y.to_vec();
        for j in 0..n {
            let piv = band[j][P];
            if piv.abs() < 1e-300 {
                return Err(Error::config("singular spline collocation system"));
            }
            for i in j + 1..(j + P + 1).min(n) {
                let a_ij = band[i][j + P - i];
                if a_ij == 0.0 {
                    continue;
                }
                let fac = a_ij / piv;
                for c in j..(j + P + 1).min(n) {
                    band[i][c + P - i] -= fac * band[j][c + P - j];
                }
                rhs[i] -= fac * rhs[j];
            }
        }
        let mut coef = vec![0.0; n];
        for j in (0..n).rev() {
            let mut s = rhs[j];
            for c in j + 1..(j + P + 1).min(n) {
                s -= band[j][c + P - j] * coef[c];
            }
            coef[j] = s / band[j][P];
        }

        let s0 = BSpline { knots, coef, degree: P };
        let s1 = s0.derivative();
        let s2 = s1.derivative();
        let s3 = s2.derivative();
        let integral = s0.antiderivative();
        Ok(QuinticSpline { levels: [s0, s1, s2, s3], integral })
    }

    pub fn start(&self) -> f64 {
        self.levels[0].knots[0]
    }

    pub fn end(&self) -> f64 {
        *self.levels[0].knots.last().unwrap()
    }

    /// Value and first three derivatives.
    pub fn eval(&self, x: f64) -> [f64; 4] {
        [self.levels[0].eval(x), self.levels[1].eval(x), self.levels[2].eval(x), self.levels[3].eval(x)]
    }

    pub fn value(&self, x: f64) -> f64 {
        self.levels[0].eval(x)
    }

    /// ∫ from the first sample to `x`.
    pub fn integral_from_start(&self, x: f64) -> f64 {
        self.integral.eval(x)
    }
}
