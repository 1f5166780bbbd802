//! Wigner eigenfunctions of the oscillator on the action variable,
//! f_n(J) = 2(−1)ⁿ e^{−s/2} L_n(s) with s = 4J/ħ.
//!
//! With this normalisation ∫₀^∞ f_m f_k dJ = ħ δ_mk, so projections onto
//! the eigenfunctions use the plain ∫dJ inner product.

use crate::error::{Error, Result};
use crate::quad::gauss_laguerre;
use serde::Serialize;

pub const MAX_ORDER: u32 = 200;

fn check_order(n: u32) -> Result<()> {
    if n > MAX_ORDER {
        return Err(Error::Unsupported(format!("Laguerre order {n} exceeds {MAX_ORDER}")));
    }
    Ok(())
}

/// L_n(s) by the upward three-term recurrence.
pub fn laguerre(n: u32, s: f64) -> Result<f64> {
    check_order(n)?;
    Ok(generalized_laguerre(n as i64, 0, s))
}

/// L_n^{(k)}(s); zero for negative n.
pub fn generalized_laguerre(n: i64, k: u32, s: f64) -> f64 {
    if n < 0 {
        return 0.0;
    }
    let a = k as f64;
    let (mut l0, mut l1) = (1.0, 1.0 + a - s);
    if n == 0 {
        return l0;
    }
    for m in 1..n {
        let m = m as f64;
        let l2 = ((2.0 * m + 1.0 + a - s) * l1 - (m + a) * l0) / (m + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// d^k/ds^k L_n(s) = (−1)^k L_{n−k}^{(k)}(s).
pub fn laguerre_derivative(n: u32, k: u32, s: f64) -> f64 {
    let v = generalized_laguerre(n as i64 - k as i64, k, s);
    if k % 2 == 1 {
        -v
    } else {
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WignerEigenstate {
    pub n: u32,
    pub hbar: f64,
}

impl WignerEigenstate {
    pub fn new(n: u32, hbar: f64) -> Result<Self> {
        check_order(n)?;
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::config("hbar must be positive"));
        }
        Ok(WignerEigenstate { n, hbar })
    }

    fn sign(&self) -> f64 {
        if self.n % 2 == 0 {
            2.0
        } else {
            -2.0
        }
    }

    pub fn evaluate(&self, j: f64) -> f64 {
        let s = 4.0 * j / self.hbar;
        self.sign() * (-0.5 * s).exp() * generalized_laguerre(self.n as i64, 0, s)
    }

    /// Polynomial factor p with F = e^{−s/2} p, and p′, p″, p‴ in s.
    fn poly_s(&self, s: f64) -> [f64; 4] {
        let c = self.sign();
        let l = [
            laguerre_derivative(self.n, 0, s),
            laguerre_derivative(self.n, 1, s),
            laguerre_derivative(self.n, 2, s),
            laguerre_derivative(self.n, 3, s),
        ];
        [c * l[0], c * l[1], c * l[2], c * l[3]]
    }

    /// e^{s/2}·(F, F_s, F_ss, F_sss): derivatives in s without the decaying factor.
    fn scaled_s_derivatives(&self, s: f64) -> [f64; 4] {
        let [p, p1, p2, p3] = self.poly_s(s);
        [p, p1 - 0.5 * p, p2 - p1 + 0.25 * p, p3 - 1.5 * p2 + 0.75 * p1 - 0.125 * p]
    }

    /// (F, F′, F″, F‴) with primes denoting d/dJ.
    pub fn derivatives(&self, j: f64) -> [f64; 4] {
        let s = 4.0 * j / self.hbar;
        let e = (-0.5 * s).exp();
        let k = 4.0 / self.hbar;
        let d = self.scaled_s_derivatives(s);
        [e * d[0], e * k * d[1], e * k * k * d[2], e * k * k * k * d[3]]
    }

    /// (ħ/4)[JF″ + F′] + [n + ½ − J/ħ]F.
    pub fn ode_residual(&self, j: f64) -> f64 {
        let [f, f1, f2, _] = self.derivatives(j);
        0.25 * self.hbar * (j * f2 + f1) + (self.n as f64 + 0.5 - j / self.hbar) * f
    }
}

/// Largest ODE residual over `j_grid`, relative to sup|F| on the grid.
pub fn max_ode_residual(state: &WignerEigenstate, j_grid: &[f64]) -> f64 {
    let sup = j_grid.iter().map(|&j| state.evaluate(j).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    j_grid.iter().map(|&j| state.ode_residual(j).abs()).fold(0.0, f64::max) / sup
}

/// Residuals of the three recursion identities, in units where each is
/// independent of ħ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecursionReport {
    pub n: u32,
    /// JF_n = (ħ/4)[(2n+1)F_n + nF_{n−1} + (n+1)F_{n+1}], divided by ħ.
    pub position: f64,
    /// JF′_n = ½[nF_{n−1} − F_n − (n+1)F_{n+1}].
    pub derivative: f64,
    /// (ħJ/4)F″_n = −(n+½)F_n + (J/ħ)F_n − (ħ/4)F′_n.
    pub second_derivative: f64,
}

impl RecursionReport {
    pub fn max(&self) -> f64 {
        self.position.max(self.derivative).max(self.second_derivative)
    }
}

pub fn verify_recursions(n: u32, j_grid: &[f64], hbar: f64) -> Result<RecursionReport> {
    let f = WignerEigenstate::new(n, hbar)?;
    let up = WignerEigenstate::new(n + 1, hbar)?;
    let down = n.checked_sub(1).map(|m| WignerEigenstate::new(m, hbar)).transpose()?;
    let nf = n as f64;
    let mut r = RecursionReport { n, position: 0.0, derivative: 0.0, second_derivative: 0.0 };
    for &j in j_grid {
        let [fv, f1, f2, _] = f.derivatives(j);
        let fu = up.evaluate(j);
        let fd = down.map_or(0.0, |d| d.evaluate(j));
        let a = (j * fv - 0.25 * hbar * ((2.0 * nf + 1.0) * fv + nf * fd + (nf + 1.0) * fu)) / hbar;
        let b = j * f1 - 0.5 * (nf * fd - fv - (nf + 1.0) * fu);
        let c = 0.25 * hbar * j * f2 - (-(nf + 0.5) * fv + j / hbar * fv - 0.25 * hbar * f1);
        r.position = r.position.max(a.abs());
        r.derivative = r.derivative.max(b.abs());
        r.second_derivative = r.second_derivative.max(c.abs());
    }
    Ok(r)
}

/// Coefficients of the collapsed first-order correction on F_{n−2}, F_n, F_{n+2}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decomposition {
    pub n: u32,
    pub down: f64,
    pub diagonal: f64,
    pub up: f64,
    /// L² norm of the part outside the three-function span.
    pub residual: f64,
    /// L² norm of the correction.
    pub norm: f64,
}

/// Applies νJ[F′ + (JF′)′] + (μJ/ħ)[F + (JF)′ + (ħ²/4)(F″ + (JF″)′)] to F_n
/// and projects the result onto {F_{n−2}, F_n, F_{n+2}} by least squares in
/// ∫dJ. Evaluation uses Gauss–Laguerre nodes, exact for these integrands.
pub fn final_state_decomposition(n: u32, nu: f64, mu: f64, hbar: f64) -> Result<Decomposition> {
    let f = WignerEigenstate::new(n, hbar)?;
    check_order(n + 2)?;
    let mut basis = Vec::with_capacity(3);
    if n >= 2 {
        basis.push(WignerEigenstate::new(n - 2, hbar)?);
    }
    basis.push(f);
    basis.push(WignerEigenstate::new(n + 2, hbar)?);

    let (nodes, weights) = gauss_laguerre(n as usize + 24);
    // everything below carries the common factor e^{−s/2}, absorbed in the weights
    let k = 4.0 / hbar;
    let apply = |s: f64| {
        let j = s / k;
        let d = f.scaled_s_derivatives(s);
        let (f0, f1, f2, f3) = (d[0], k * d[1], k * k * d[2], k * k * k * d[3]);
        nu * j * (2.0 * f1 + j * f2)
            + mu * j / hbar * (2.0 * f0 + j * f1 + 0.25 * hbar * hbar * (2.0 * f2 + j * f3))
    };
    let g: Vec<f64> = nodes.iter().map(|&s| apply(s)).collect();
    let b: Vec<Vec<f64>> = basis.iter().map(|e| nodes.iter().map(|&s| e.poly_s(s)[0]).collect()).collect();
    // ∫ u v dJ = (ħ/4) Σ w u v
    let dot = |u: &[f64], v: &[f64]| -> f64 { 0.25 * hbar * u.iter().zip(v).zip(&weights).map(|((a, b), w)| w * a * b).sum::<f64>() };

    let m = basis.len();
    let mut a = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for i in 0..m {
        rhs[i] = dot(&b[i], &g);
        for jx in 0..m {
            a[i][jx] = dot(&b[i], &b[jx]);
        }
    }
    let c = solve_small(&mut a, &mut rhs, m)?;

    let resid: Vec<f64> = (0..nodes.len())
        .map(|p| g[p] - (0..m).map(|i| c[i] * b[i][p]).sum::<f64>())
        .collect();
    let norm = dot(&g, &g).sqrt();
    let residual = dot(&resid, &resid).max(0.0).sqrt();
    let (down, diagonal, up) = if n >= 2 { (c[0], c[1], c[2]) } else { (0.0, c[0], c[1]) };
    let limit = 1e-6 * norm;
    if residual > limit && norm > 0.0 {
        return Err(Error::Decomposition { residual, limit });
    }
    Ok(Decomposition { n, down, diagonal, up, residual, norm })
}

fn solve_small(a: &mut [[f64; 3]; 3], b: &mut [f64; 3], m: usize) -> Result<[f64; 3]> {
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        if a[col][col].abs() < 1e-300 {
            return Err(Error::Decomposition { residual: f64::INFINITY, limit: 0.0 });
        }
        for r in col + 1..m {
            let fac = a[r][col] / a[col][col];
            for c in col..m {
                a[r][c] -= fac * a[col][c];
            }
            b[r] -= fac * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Ok(x)
}

/// The closed-form weights quoted alongside the operator:
/// ½(ν + μ/2)n(n−1) on F_{n−2}, −(ν(1+n+n²) − μ(2n+1)) on F_n and
/// ½(ν − μ/2)(n+1)(n+2) on F_{n+2}.
pub fn quoted_coefficients(n: u32, nu: f64, mu: f64) -> [f64; 3] {
    let nf = n as f64;
    [
        0.5 * (nu + 0.5 * mu) * nf * n.saturating_sub(1) as f64,
        -(nu * (1.0 + nf + nf * nf) - mu * (2.0 * nf + 1.0)),
        0.5 * (nu - 0.5 * mu) * (nf + 1.0) * (nf + 2.0),
    ]
}

/// The coefficients the operator actually produces:
/// ¼(ν + μ)n(n−1), ¼(ν − μ)(n+1)(n+2) and minus their sum on F_n.
pub fn operator_coefficients(n: u32, nu: f64, mu: f64) -> [f64; 3] {
    let nf = n as f64;
    let down = 0.25 * (nu + mu) * nf * n.saturating_sub(1) as f64;
    let up = 0.25 * (nu - mu) * (nf + 1.0) * (nf + 2.0);
    [down, -(down + up), up]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_grid(hbar: f64) -> Vec<f64> {
        (0..=200).map(|i| hbar * 0.01 * 1000.0_f64.powf(i as f64 / 200.0)).collect()
    }

    #[test]
    fn laguerre_values() {
        for &s in &[0.0, 0.3, 7.0, 40.0] {
            assert_eq!(laguerre(0, s).unwrap(), 1.0);
        }
        for n in 0..=20 {
            assert_eq!(laguerre(n, 0.0).unwrap(), 1.0);
        }
        assert!((laguerre(2, 2.0).unwrap() + 1.0).abs() < 1e-15);
        assert!(laguerre(200, 3.0).is_ok());
        assert!(matches!(laguerre(201, 3.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn derivative_matches_recursion_form() {
        for n in 1..=12 {
            for &s in &[0.4, 1.7, 6.0, 15.0] {
                let d = laguerre_derivative(n, 1, s);
                let r = n as f64 / s * (laguerre(n, s).unwrap() - laguerre(n - 1, s).unwrap());
                assert!((d - r).abs() < 1e-10 * r.abs().max(1.0), "n={n} s={s}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let f = WignerEigenstate::new(4, 0.8).unwrap();
        let h = 1e-4;
        for &j in &[0.05, 0.4, 1.3, 3.0] {
            let d = f.derivatives(j);
            for k in 0..3 {
                let g = |u: f64| f.derivatives(u)[k];
                let fd = (g(j - 2.0 * h) - 8.0 * g(j - h) + 8.0 * g(j + h) - g(j + 2.0 * h)) / (12.0 * h);
                assert!((fd - d[k + 1]).abs() < 1e-5 * d[k + 1].abs().max(1.0), "j={j} k={k}");
            }
        }
    }

    #[test]
    fn normalization_at_origin() {
        for n in 0..=20 {
            let f = WignerEigenstate::new(n, 1.0).unwrap();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(f.evaluate(0.0) * sign, 2.0);
        }
    }

    #[test]
    fn orthonormal_in_action() {
        let hbar = 1.3;
        let (x, w) = gauss_laguerre(40);
        for m in 0..6 {
            for k in 0..6 {
                let (a, b) = (WignerEigenstate::new(m, hbar).unwrap(), WignerEigenstate::new(k, hbar).unwrap());
                let v: f64 = x.iter().zip(&w).map(|(s, w)| w * a.poly_s(*s)[0] * b.poly_s(*s)[0]).sum::<f64>() * hbar / 4.0;
                let want = if m == k { hbar } else { 0.0 };
                assert!((v - want).abs() < 1e-11, "{m},{k}: {v}");
            }
        }
    }

    #[test]
    fn ode_residual_small() {
        for hbar in [1.0, 0.25] {
            let grid = log_grid(hbar);
            for n in 0..=10 {
                let f = WignerEigenstate::new(n, hbar).unwrap();
                assert!(max_ode_residual(&f, &grid) < 1e-9, "n={n}");
            }
        }
    }

    #[test]
    fn recursions_hold() {
        for hbar in [1.0, 0.1] {
            let grid = log_grid(hbar);
            for n in 0..=10 {
                let r = verify_recursions(n, &grid, hbar).unwrap();
                assert!(r.max() < 1e-10, "n={n}: {r:?}");
            }
        }
        // n = 0: JF₀ = (ħ/4)(F₀ + F₁)
        let hbar = 1.0;
        let (f0, f1) = (WignerEigenstate::new(0, hbar).unwrap(), WignerEigenstate::new(1, hbar).unwrap());
        for j in log_grid(hbar) {
            assert!((j * f0.evaluate(j) - 0.25 * hbar * (f0.evaluate(j) + f1.evaluate(j))).abs() < 1e-10);
        }
    }

    #[test]
    fn recursion_residuals_do_not_grow_with_action() {
        let hbar = 1.0;
        for n in 1..=10 {
            let lo = verify_recursions(n, &[hbar / 100.0], hbar).unwrap().max();
            let hi = verify_recursions(n, &[10.0 * hbar], hbar).unwrap().max();
            assert!(hi <= 10.0 * lo.max(1e-14), "n={n}: {lo:e} {hi:e}");
        }
    }

    #[test]
    fn zero_coefficients_give_zero_correction() {
        let d = final_state_decomposition(3, 0.0, 0.0, 1.0).unwrap();
        assert_eq!((d.down, d.diagonal, d.up), (0.0, 0.0, 0.0));
    }

    #[test]
    fn decomposition_is_closed_and_trace_preserving() {
        for hbar in [1.0, 0.37] {
            for n in 0..=5 {
                for &(nu, mu) in &[(1e-3, 0.0), (0.0, 1e-3), (2e-3, -7e-4)] {
                    let d = final_state_decomposition(n, nu, mu, hbar).unwrap();
                    assert!(d.residual <= 1e-10 * d.norm, "n={n}");
                    let want = operator_coefficients(n, nu, mu);
                    for (got, w) in [d.down, d.diagonal, d.up].iter().zip(want) {
                        assert!((got - w).abs() <= 1e-10 * w.abs().max(1e-6 * nu.abs().max(mu.abs())), "n={n}: {got} vs {w}");
                    }
                    assert!((d.diagonal + d.down + d.up).abs() < 1e-12);
                    if n < 2 {
                        assert_eq!(d.down, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn quoted_and_operator_coefficients_differ() {
        let q = quoted_coefficients(3, 1e-3, 2e-4);
        let o = operator_coefficients(3, 1e-3, 2e-4);
        assert!((q[2] / o[2] - 1.0).abs() > 0.5);
        assert_eq!(quoted_coefficients(1, 1.0, 1.0)[0], 0.0);
    }
}
