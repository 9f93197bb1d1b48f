//! Taylor-series integration of y'' = (q − λ)y on [0, 1] together with the
//! first and second λ-variations of the fundamental pair θ, φ.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::Potential;

pub const ORDER: usize = 30;

/// Number of λ-derivative levels integrated alongside θ, φ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Levels {
    Values = 1,
    First = 2,
    Second = 3,
}

/// Values and x-derivatives at x = 1, ordered θ, φ, θ_λ, φ_λ, θ_λλ, φ_λλ.
#[derive(Clone, Debug)]
pub struct Endpoint {
    pub y: Vec<C64>,
    pub dy: Vec<C64>,
    pub est_error: f64,
}

/// Panels needed so that h·K ≤ 1.5 with K = |√λ| + √(|a|+|b|) + 2π.
pub fn panel_count(pot: &Potential, lambda: C64) -> usize {
    let k = lambda.sqrt().norm() + (pot.a.norm() + pot.b.norm()).sqrt() + 2.0 * PI;
    ((k / 1.5).ceil() as usize).max(32)
}

/// Taylor coefficients of q(x0 + s) in s, pre-multiplied by h^j.
fn q_coeffs(pot: &Potential, x0: f64, h: f64, n: usize) -> Vec<C64> {
    let w = 2.0 * PI * x0;
    let mut ta = pot.a * C64::from_polar(1.0, -w);
    let mut tb = pot.b * C64::from_polar(1.0, w);
    let step = C64::new(0.0, 2.0 * PI * h);
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        out.push(ta + tb);
        let jj = (j + 1) as f64;
        ta *= -step / jj;
        tb *= step / jj;
    }
    out
}

/// Scaled Taylor coefficients e_m = c_m h^m of each function on one panel.
fn panel_coeffs(q: &[C64], lambda: C64, h: f64, y: &[C64], dy: &[C64]) -> Vec<[C64; ORDER + 1]> {
    let nf = y.len();
    let zero = C64::new(0.0, 0.0);
    let mut e = vec![[zero; ORDER + 1]; nf];
    let h2 = h * h;
    for f in 0..nf {
        e[f][0] = y[f];
        e[f][1] = dy[f] * h;
    }
    for m in 0..ORDER - 1 {
        let denom = ((m + 1) * (m + 2)) as f64;
        for f in 0..nf {
            let mut s = -lambda * h2 * e[f][m];
            for j in 0..=m {
                s += q[j] * e[f][m - j] * h2;
            }
            if f >= 2 {
                // y_λ'' = (q−λ)y_λ − y and y_λλ'' = (q−λ)y_λλ − 2y_λ
                let w = if f >= 4 { 2.0 } else { 1.0 };
                s -= e[f - 2][m] * (w * h2);
            }
            e[f][m + 2] = s / denom;
        }
    }
    e
}

fn eval(e: &[C64; ORDER + 1], sigma: f64) -> C64 {
    e.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * sigma + c)
}

fn eval_d(e: &[C64; ORDER + 1], h: f64) -> C64 {
    e.iter().enumerate().skip(1).map(|(m, c)| c * m as f64).sum::<C64>() / h
}

/// Integrates on `panels` equal panels; `visit(x0, h, coeffs)` sees each
/// panel's scaled Taylor coefficients.
pub fn integrate_with<V>(pot: &Potential, lambda: C64, levels: Levels, panels: usize, mut visit: V) -> Result<Endpoint>
where
    V: FnMut(f64, f64, &[[C64; ORDER + 1]]),
{
    let nf = 2 * levels as usize;
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let mut y = vec![zero; nf];
    let mut dy = vec![zero; nf];
    y[0] = one;
    dy[1] = one;
    let h = 1.0 / panels as f64;
    let mut err = 0.0;
    for p in 0..panels {
        let x0 = p as f64 * h;
        let q = q_coeffs(pot, x0, h, ORDER + 1);
        let e = panel_coeffs(&q, lambda, h, &y, &dy);
        visit(x0, h, &e);
        for f in 0..nf {
            y[f] = eval(&e[f], 1.0);
            dy[f] = eval_d(&e[f], h);
            let scale = e[f].iter().map(|c| c.norm()).fold(0.0, f64::max);
            err += (e[f][ORDER].norm() + e[f][ORDER - 1].norm()) / scale.max(f64::MIN_POSITIVE);
        }
        if y.iter().chain(&dy).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::StepUnderflow { lambda: format!("{lambda}") });
        }
    }
    let wr = (y[0] * dy[1] - dy[0] * y[1] - one).norm();
    Ok(Endpoint { y, dy, est_error: err + wr })
}

pub fn integrate(pot: &Potential, lambda: C64, levels: Levels) -> Result<Endpoint> {
    integrate_with(pot, lambda, levels, panel_count(pot, lambda), |_, _, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_solutions() {
        let p = Potential::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0)).unwrap();
        let mu = C64::new(7.3, 0.2);
        let e = integrate(&p, mu * mu, Levels::First).unwrap();
        assert!((e.y[0] - mu.cos()).norm() < 1e-12);
        assert!((e.y[1] - mu.sin() / mu).norm() < 1e-12);
        assert!((e.dy[0] + mu * mu.sin()).norm() < 1e-11);
        assert!((e.dy[1] - mu.cos()).norm() < 1e-12);
        // θ_λ(1) = −sin μ/(2μ)
        assert!((e.y[2] + mu.sin() / (2.0 * mu)).norm() < 1e-12);
    }

    #[test]
    fn wronskian_is_one() {
        let p = Potential::new(C64::new(1.0, 0.3), C64::new(-2.0, 1.0)).unwrap();
        for l in [C64::new(-30.0, 0.0), C64::new(5.0, 2.0), C64::new(900.0, -10.0)] {
            let e = integrate(&p, l, Levels::Values).unwrap();
            assert!((e.y[0] * e.dy[1] - e.dy[0] * e.y[1] - 1.0).norm() < 1e-10);
        }
    }
}
