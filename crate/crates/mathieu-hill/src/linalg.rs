//! Tridiagonal helpers: dense conversion, products, pivoted shifted solves,
//! Schur eigenvalues and inverse iteration.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// General tridiagonal matrix; `lo[i] = A[i+1][i]`, `up[i] = A[i][i+1]`.
#[derive(Clone, Debug)]
pub struct Tri {
    pub d: Vec<C64>,
    pub lo: Vec<C64>,
    pub up: Vec<C64>,
}

impl Tri {
    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn dense(&self) -> DMatrix<C64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.d[i];
            if i + 1 < n {
                m[(i + 1, i)] = self.lo[i];
                m[(i, i + 1)] = self.up[i];
            }
        }
        m
    }

    pub fn mul(&self, x: &[C64]) -> Vec<C64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut s = self.d[i] * x[i];
                if i > 0 {
                    s += self.lo[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.up[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Tri {
        Tri {
            d: self.d.iter().map(|z| z.conj()).collect(),
            lo: self.up.iter().map(|z| z.conj()).collect(),
            up: self.lo.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn inf_norm(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut s = self.d[i].norm();
                if i > 0 {
                    s += self.lo[i - 1].norm();
                }
                if i + 1 < n {
                    s += self.up[i].norm();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// Solves (A − σI)x = rhs with partial pivoting; exact zero pivots are
    /// replaced by `tiny` (inverse iteration at an exact eigenvalue).
    pub fn solve_shifted(&self, sigma: C64, rhs: &[C64], tiny: f64) -> Vec<C64> {
        let n = self.n();
        if n == 1 {
            let p = self.d[0] - sigma;
            let p = if p.norm() == 0.0 { C64::new(tiny, 0.0) } else { p };
            return vec![rhs[0] / p];
        }
        // rows stored as (diag, up1, up2) after elimination
        let mut a: Vec<C64> = self.d.iter().map(|z| z - sigma).collect();
        let mut b: Vec<C64> = self.up.clone();
        b.push(C64::new(0.0, 0.0));
        let mut c = vec![C64::new(0.0, 0.0); n];
        let mut l: Vec<C64> = self.lo.clone();
        let mut x: Vec<C64> = rhs.to_vec();
        for i in 0..n - 1 {
            if l[i].norm() > a[i].norm() {
                // swap rows i and i+1
                let (ai, bi, ci) = (a[i], b[i], c[i]);
                a[i] = l[i];
                b[i] = a[i + 1];
                c[i] = b[i + 1];
                l[i] = ai;
                a[i + 1] = bi;
                b[i + 1] = ci;
                x.swap(i, i + 1);
            }
            if a[i].norm() == 0.0 {
                a[i] = C64::new(tiny, 0.0);
            }
            let f = l[i] / a[i];
            a[i + 1] -= f * b[i];
            b[i + 1] -= f * c[i];
            let xi = x[i];
            x[i + 1] -= f * xi;
        }
        if a[n - 1].norm() == 0.0 {
            a[n - 1] = C64::new(tiny, 0.0);
        }
        let mut y = vec![C64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut s = x[i];
            if i + 1 < n {
                s -= b[i] * y[i + 1];
            }
            if i + 2 < n {
                s -= c[i] * y[i + 2];
            }
            y[i] = s / a[i];
        }
        y
    }
}

pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(x: &mut [C64]) {
    let s = norm2(x);
    if s > 0.0 {
        x.iter_mut().for_each(|z| *z /= s);
    }
}

/// Σ x_k conj(y_k).
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

/// All eigenvalues through the complex Schur form.
pub fn schur_eigenvalues(t: &Tri) -> Result<Vec<C64>> {
    let n = t.n();
    let scale = t.inf_norm().max(1.0);
    let schur = nalgebra::linalg::Schur::try_new(t.dense(), 1e-15 * scale, 200 * n.max(10)).ok_or_else(|| {
        Error::EigenNonconvergence { near: format!("{:?}", t.d.first()) }
    })?;
    let ev = schur.eigenvalues().ok_or_else(|| Error::EigenNonconvergence { near: "schur form not triangular".into() })?;
    Ok(ev.iter().copied().collect())
}

/// Inverse iteration for the eigenvector of `t` at `lambda`. Returns (vector, residual).
pub fn inverse_iteration(t: &Tri, lambda: C64, start: &[C64]) -> (Vec<C64>, f64) {
    let scale = t.inf_norm().max(1.0);
    let tiny = 1e-300_f64.max(f64::EPSILON * 1e-3 * scale);
    let mut x = start.to_vec();
    normalize(&mut x);
    let mut best = (x.clone(), f64::INFINITY);
    for _ in 0..4 {
        let mut y = t.solve_shifted(lambda, &x, tiny);
        if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            break;
        }
        normalize(&mut y);
        let r = residual(t, lambda, &y);
        if r < best.1 {
            best = (y.clone(), r);
        }
        x = y;
        if r <= 1e-14 * scale {
            break;
        }
    }
    best
}

/// ‖(A − λI)x‖ for unit x.
pub fn residual(t: &Tri, lambda: C64, x: &[C64]) -> f64 {
    let ax = t.mul(x);
    ax.iter().zip(x).map(|(a, b)| (a - lambda * b).norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues of a complex symmetric tridiagonal matrix (diagonal `d`,
/// off-diagonal `e`) by implicit QL. None on breakdown (a rotation with
/// c² + s² = 1 but |c|, |s| ≫ 1) or no convergence.
pub fn symmetric_tridiagonal_eigenvalues(d: &[C64], e: &[C64]) -> Option<Vec<C64>> {
    let n = d.len();
    let mut d = d.to_vec();
    let mut e: Vec<C64> = e.iter().copied().chain(std::iter::once(C64::new(0.0, 0.0))).collect();
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let scale = d.iter().chain(&e).map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].norm() + d[m + 1].norm();
                if e[m].norm() <= f64::EPSILON * dd.max(1e-3 * scale) {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return None;
            }
            let mut g = (d[l + 1] - d[l]) / (e[l] * 2.0);
            let mut r = (g * g + one).sqrt();
            let den = if (g + r).norm() >= (g - r).norm() { g + r } else { g - r };
            g = d[m] - d[l] + e[l] / den;
            let (mut s, mut c, mut p) = (one, one, zero);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = (f * f + g * g).sqrt();
                e[i + 1] = r;
                if r.norm() <= 1e-300 {
                    if f.norm() + g.norm() > 0.0 {
                        return None;
                    }
                    d[i + 1] -= p;
                    e[m] = zero;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                if s.norm() > 1e6 || c.norm() > 1e6 {
                    return None;
                }
                g = d[i + 1] - p;
                r = (d[i] - g) * s + c * b * 2.0;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = zero;
        }
    }
    d.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample() -> Tri {
        Tri {
            d: vec![c(1.0, 0.0), c(4.0, 1.0), c(9.0, 0.0), c(16.0, -2.0)],
            lo: vec![c(0.5, 0.1), c(2.0, 0.0), c(-1.0, 1.0)],
            up: vec![c(3.0, 0.0), c(0.0, 1.0), c(0.2, 0.2)],
        }
    }

    #[test]
    fn shifted_solve_matches_dense() {
        let t = sample();
        let rhs = vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0), c(0.5, 0.5)];
        let sigma = c(2.0, 0.3);
        let x = t.solve_shifted(sigma, &rhs, 1e-300);
        let ax = t.mul(&x);
        for i in 0..4 {
            assert!((ax[i] - sigma * x[i] - rhs[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn symmetric_ql_matches_schur() {
        let d: Vec<C64> = (-6..=6).map(|k| c((2.0 * std::f64::consts::PI * k as f64 + 0.4).powi(2), 0.0)).collect();
        let e = vec![c(1.3, 0.7); 12];
        let mut ql = symmetric_tridiagonal_eigenvalues(&d, &e).unwrap();
        let t = Tri { d: d.clone(), lo: e.clone(), up: e };
        let mut sc = schur_eigenvalues(&t).unwrap();
        let key = |z: &C64| (z.re, z.im);
        ql.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        sc.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        for (x, y) in ql.iter().zip(&sc) {
            assert!((x - y).norm() < 1e-10 * (1.0 + y.norm()), "{x} {y}");
        }
    }

    #[test]
    fn eigenpairs_have_small_residual() {
        let t = sample();
        let ev = schur_eigenvalues(&t).unwrap();
        assert_eq!(ev.len(), 4);
        let tr: C64 = t.d.iter().sum();
        let s: C64 = ev.iter().sum();
        assert!((tr - s).norm() < 1e-12);
        for l in ev {
            let (_, r) = inverse_iteration(&t, l, &[c(1.0, 0.0); 4]);
            assert!(r < 1e-12, "residual {r}");
        }
    }
}
