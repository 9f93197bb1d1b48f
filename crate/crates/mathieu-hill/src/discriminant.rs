//! Hill discriminant F(λ) = φ'(1,λ) + θ(1,λ), its λ-derivatives, roots of
//! F = 2cos t, critical points of F, and |d_n(t)| through the Wronskian
//! representation of the spectral projection.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::floquet;
use crate::ode::{self, Levels};
use crate::quadrature;
use crate::Potential;

pub const LAMBDA_LIMIT: f64 = 1e8;
pub const NORM_PANELS: usize = 512;
/// |t*| or |t* − π| below this counts as a 2-periodic critical point.
pub const TWO_PERIODIC_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundamentalData {
    pub lambda: C64,
    pub theta1: C64,
    pub dtheta1: C64,
    pub phi1: C64,
    pub dphi1: C64,
    pub est_error: f64,
}

impl FundamentalData {
    pub fn wronskian(&self) -> C64 {
        self.theta1 * self.dphi1 - self.dtheta1 * self.phi1
    }

    pub fn discriminant(&self) -> C64 {
        self.dphi1 + self.theta1
    }
}

/// F, F', F'' at one λ.
#[derive(Clone, Copy, Debug)]
pub struct Discriminant {
    pub f: C64,
    pub df: C64,
    pub d2f: C64,
}

fn check(lambda: C64) -> Result<()> {
    if !(lambda.norm() <= LAMBDA_LIMIT) {
        return Err(Error::Validation(format!("|λ| = {} outside the integrator envelope 1e8", lambda.norm())));
    }
    Ok(())
}

pub fn fundamental_solutions(pot: &Potential, lambda: C64) -> Result<FundamentalData> {
    check(lambda)?;
    let e = ode::integrate(pot, lambda, Levels::Values)?;
    Ok(FundamentalData {
        lambda,
        theta1: e.y[0],
        dtheta1: e.dy[0],
        phi1: e.y[1],
        dphi1: e.dy[1],
        est_error: e.est_error,
    })
}

pub fn discriminant(pot: &Potential, lambda: C64) -> Result<C64> {
    Ok(fundamental_solutions(pot, lambda)?.discriminant())
}

pub fn discriminant_derivative(pot: &Potential, lambda: C64) -> Result<C64> {
    check(lambda)?;
    let e = ode::integrate(pot, lambda, Levels::First)?;
    Ok(e.dy[3] + e.y[2])
}

pub fn discriminant_all(pot: &Potential, lambda: C64) -> Result<Discriminant> {
    check(lambda)?;
    let e = ode::integrate(pot, lambda, Levels::Second)?;
    Ok(Discriminant { f: e.dy[1] + e.y[0], df: e.dy[3] + e.y[2], d2f: e.dy[5] + e.y[4] })
}

/// Rectangle in the λ-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Window {
    pub fn new(re: (f64, f64), im: (f64, f64)) -> Result<Self> {
        if !(re.0 < re.1 && im.0 < im.1) || [re.0, re.1, im.0, im.1].iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation(format!("empty window {re:?} × {im:?}")));
        }
        Ok(Self { re, im })
    }

    /// Real interval thickened to imaginary half-height 1.
    pub fn real(lo: f64, hi: f64) -> Result<Self> {
        Self::new((lo, hi), (-1.0, 1.0))
    }

    pub fn contains(&self, z: C64) -> bool {
        (self.re.0..=self.re.1).contains(&z.re) && (self.im.0..=self.im.1).contains(&z.im)
    }

    fn center(&self) -> C64 {
        C64::new(0.5 * (self.re.0 + self.re.1), 0.5 * (self.im.0 + self.im.1))
    }

    fn grown(&self, f: f64) -> Window {
        let (w, h) = (self.re.1 - self.re.0, self.im.1 - self.im.0);
        Window { re: (self.re.0 - f * w, self.re.1 + f * w), im: (self.im.0 - f * h, self.im.1 + f * h) }
    }

    fn split(&self) -> [Window; 2] {
        let (w, h) = (self.re.1 - self.re.0, self.im.1 - self.im.0);
        if w >= h {
            let m = 0.5 * (self.re.0 + self.re.1);
            [Window { re: (self.re.0, m), im: self.im }, Window { re: (m, self.re.1), im: self.im }]
        } else {
            let m = 0.5 * (self.im.0 + self.im.1);
            [Window { re: self.re, im: (self.im.0, m) }, Window { re: self.re, im: (m, self.im.1) }]
        }
    }

    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re.0, self.im.0),
            C64::new(self.re.1, self.im.0),
            C64::new(self.re.1, self.im.1),
            C64::new(self.re.0, self.im.1),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub lambda: C64,
    pub residual: f64,
    pub dfn: C64,
    /// seeds merged into this root
    pub multiplicity: usize,
    /// F' vanishes at the root to working accuracy
    pub double: bool,
}

fn simple_scale(lambda: C64) -> f64 {
    1.0 / lambda.sqrt().norm().max(1.0)
}

/// Roots of F(λ) = 2cos t inside the window, seeded by matrix eigenvalues and
/// polished by Newton.
pub fn eigenvalues_at(pot: &Potential, t: f64, window: &Window) -> Result<Vec<Root>> {
    let reach = window.re.0.abs().max(window.re.1.abs()).max(window.im.0.abs()).max(window.im.1.abs());
    let m = ((reach.sqrt() / (2.0 * PI)).ceil() as usize + 16).max(32);
    let seeds: Vec<C64> = floquet::eigenvalues(pot, t, m)?.into_iter().filter(|z| window.grown(1e-9).contains(*z)).collect();
    let target = C64::new(2.0 * t.cos(), 0.0);
    let polished: Vec<Result<(C64, C64, f64)>> = seeds
        .par_iter()
        .map(|&z0| {
            let mut z = z0;
            for _ in 0..60 {
                let d = discriminant_all(pot, z)?;
                let r = (d.f - target).norm();
                if r <= 1e-10 {
                    return Ok((z, d.df, r));
                }
                if d.df.norm() == 0.0 {
                    break;
                }
                let step = (d.f - target) / d.df;
                if !step.re.is_finite() || !step.im.is_finite() {
                    break;
                }
                z -= step;
            }
            Err(Error::NewtonDivergence { seed: format!("{z0}") })
        })
        .collect();
    let mut roots: Vec<Root> = Vec::new();
    for p in polished {
        let (z, df, r) = match p {
            Ok(v) => v,
            Err(Error::NewtonDivergence { .. }) => continue,
            Err(e) => return Err(e),
        };
        if let Some(root) = roots.iter_mut().find(|x| (x.lambda - z).norm() <= 1e-8 * z.norm().max(1.0)) {
            root.multiplicity += 1;
            continue;
        }
        roots.push(Root {
            lambda: z,
            residual: r,
            dfn: df,
            multiplicity: 1,
            double: df.norm() <= 1e-5 * simple_scale(z),
        });
    }
    roots.sort_by(|x, y| x.lambda.re.total_cmp(&y.lambda.re));
    Ok(roots)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalFamily {
    Periodic,
    Antiperiodic,
    Interior,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub lambda_star: C64,
    pub t_star: C64,
    pub f_value: C64,
    pub is_two_periodic: bool,
    pub family: CriticalFamily,
    pub n_guess: i64,
}

/// t with 2cos t = F, principal branch, written so that t near 0 or π keeps
/// full relative accuracy.
pub fn t_of(f: C64) -> C64 {
    let half = f / 2.0;
    if half.re < 0.0 {
        let s = ((C64::new(1.0, 0.0) + half) / 2.0).sqrt().asin();
        C64::new(PI, 0.0) - s * 2.0
    } else {
        let s = ((C64::new(1.0, 0.0) - half) / 2.0).sqrt().asin();
        s * 2.0
    }
}

fn n_guess(lambda: C64, family: CriticalFamily) -> i64 {
    let mu = lambda.sqrt().re;
    let periodic = (mu / (2.0 * PI)).round();
    let anti = ((mu - PI) / (2.0 * PI)).round().max(0.0);
    match family {
        CriticalFamily::Periodic => periodic as i64,
        CriticalFamily::Antiperiodic => anti as i64,
        CriticalFamily::Interior => {
            let dp = (mu - 2.0 * PI * periodic).abs();
            let da = (mu - 2.0 * PI * anti - PI).abs();
            if dp <= da {
                periodic as i64
            } else {
                anti as i64
            }
        }
    }
}

fn phase_change(f0: C64, f1: C64) -> f64 {
    (f1 / f0).arg()
}

struct Contour<'a> {
    pot: &'a Potential,
    floor: f64,
}

impl Contour<'_> {
    fn value(&self, z: C64) -> Result<C64> {
        let v = discriminant_derivative(self.pot, z)?;
        if v.norm() <= self.floor * simple_scale(z) {
            return Err(Error::ContourThroughRoot { retries: 0 });
        }
        Ok(v)
    }

    fn edge(&self, z0: C64, f0: C64, z1: C64, f1: C64, depth: usize) -> Result<f64> {
        let d = phase_change(f0, f1);
        if d.abs() < PI / 4.0 || depth > 40 {
            return Ok(d);
        }
        let zm = (z0 + z1) / 2.0;
        let fm = self.value(zm)?;
        Ok(self.edge(z0, f0, zm, fm, depth + 1)? + self.edge(zm, fm, z1, f1, depth + 1)?)
    }

    /// Zeros of F' inside the rectangle.
    fn count(&self, w: &Window) -> Result<usize> {
        let c = w.corners();
        let pieces = 8;
        let mut pts = Vec::with_capacity(4 * pieces);
        for i in 0..4 {
            let (a, b) = (c[i], c[(i + 1) % 4]);
            for j in 0..pieces {
                pts.push(a + (b - a) * (j as f64 / pieces as f64));
            }
        }
        let vals: Vec<Result<C64>> = pts.par_iter().map(|&z| self.value(z)).collect();
        let vals: Vec<C64> = vals.into_iter().collect::<Result<_>>()?;
        let segs: Vec<Result<f64>> = (0..pts.len())
            .into_par_iter()
            .map(|i| {
                let j = (i + 1) % pts.len();
                self.edge(pts[i], vals[i], pts[j], vals[j], 0)
            })
            .collect();
        let total: f64 = segs.into_iter().collect::<Result<Vec<_>>>()?.iter().sum();
        let n = (total / (2.0 * PI)).round();
        Ok(n.max(0.0) as usize)
    }

    fn newton(&self, w: &Window) -> Option<C64> {
        let mut z = w.center();
        let zone = w.grown(0.25);
        for _ in 0..60 {
            let d = discriminant_all(self.pot, z).ok()?;
            if d.d2f.norm() == 0.0 {
                return None;
            }
            let step = d.df / d.d2f;
            z -= step;
            if !zone.contains(z) {
                return None;
            }
            if step.norm() <= 1e-13 * z.norm().max(1.0) {
                return Some(z);
            }
        }
        None
    }

    fn search(&self, w: Window, count: usize, depth: usize, out: &mut Vec<C64>) -> Result<()> {
        if count == 0 {
            return Ok(());
        }
        let small = (w.re.1 - w.re.0).max(w.im.1 - w.im.0) <= 1e-9 * w.center().norm().max(1.0);
        if count == 1 || small || depth > 60 {
            if let Some(z) = self.newton(&w) {
                if w.grown(1e-6).contains(z) || small || depth > 60 {
                    out.push(z);
                    return Ok(());
                }
            }
            if small || depth > 60 {
                out.push(w.center());
                return Ok(());
            }
        }
        let [l, r] = w.split();
        let (cl, cr) = (self.count(&l)?, self.count(&r)?);
        self.search(l, cl, depth + 1, out)?;
        self.search(r, cr, depth + 1, out)
    }
}

fn dedup(mut pts: Vec<C64>) -> Vec<C64> {
    pts.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    let mut out: Vec<C64> = Vec::new();
    for z in pts {
        if out.iter().all(|w| (w - z).norm() > 1e-8 * z.norm().max(1.0)) {
            out.push(z);
        }
    }
    out
}

/// Zeros of F' in the window by argument-principle bisection plus Newton.
pub fn find_critical_points(pot: &Potential, window: &Window) -> Result<Vec<CriticalPoint>> {
    let mut w = *window;
    let mut retries = 0;
    let zeros = loop {
        let c = Contour { pot, floor: 1e-13 };
        let attempt = c.count(&w).and_then(|n| {
            let mut out = Vec::new();
            c.search(w, n, 0, &mut out).map(|_| out)
        });
        match attempt {
            Ok(z) => break z,
            Err(Error::ContourThroughRoot { .. }) if retries < 4 => {
                retries += 1;
                let d = 1e-3 * retries as f64;
                w = Window { re: (w.re.0 - d, w.re.1 + d), im: (w.im.0 - d, w.im.1 + d) };
            }
            Err(Error::ContourThroughRoot { .. }) => return Err(Error::ContourThroughRoot { retries }),
            Err(e) => return Err(e),
        }
    };
    let mut out = Vec::new();
    for z in dedup(zeros) {
        let f = discriminant(pot, z)?;
        let t = t_of(f);
        let periodic = t.norm() <= TWO_PERIODIC_TOL;
        let anti = (t - PI).norm() <= TWO_PERIODIC_TOL;
        let family = if periodic {
            CriticalFamily::Periodic
        } else if anti {
            CriticalFamily::Antiperiodic
        } else {
            CriticalFamily::Interior
        };
        out.push(CriticalPoint {
            lambda_star: z,
            t_star: t,
            f_value: f,
            is_two_periodic: periodic || anti,
            family,
            n_guess: n_guess(z, family),
        });
    }
    Ok(out)
}

/// Gram matrix of θ, φ in L²[0,1] plus the endpoint data.
fn gram(pot: &Potential, lambda: C64) -> Result<([[C64; 2]; 2], FundamentalData)> {
    let rule = quadrature::gauss8();
    let mut g = [[C64::new(0.0, 0.0); 2]; 2];
    let panels = NORM_PANELS.max(ode::panel_count(pot, lambda));
    let e = ode::integrate_with(pot, lambda, Levels::Values, panels, |_, h, c| {
        for (s, w) in rule.on(0.0, 1.0) {
            let th = c[0].iter().rev().fold(C64::new(0.0, 0.0), |acc, x| acc * s + x);
            let ph = c[1].iter().rev().fold(C64::new(0.0, 0.0), |acc, x| acc * s + x);
            let wh = w * h;
            g[0][0] += th * th.conj() * wh;
            g[0][1] += th * ph.conj() * wh;
            g[1][1] += ph * ph.conj() * wh;
        }
    })?;
    g[1][0] = g[0][1].conj();
    let fd = FundamentalData { lambda, theta1: e.y[0], dtheta1: e.dy[0], phi1: e.y[1], dphi1: e.dy[1], est_error: e.est_error };
    Ok((g, fd))
}

/// ‖xθ + yφ‖ from the Gram matrix.
fn combo_norm(g: &[[C64; 2]; 2], x: C64, y: C64) -> f64 {
    let v = x * x.conj() * g[0][0] + x * y.conj() * g[0][1] + y * x.conj() * g[1][0] + y * y.conj() * g[1][1];
    v.re.max(0.0).sqrt()
}

/// |d_n(t)| at the eigenvalue λ = λ_n(t) through the Wronskian representation.
pub fn dn_via_wronskian(pot: &Potential, n: i64, t: f64, lambda: C64) -> Result<f64> {
    let _ = n;
    check(lambda)?;
    let (g, fd) = gram(pot, lambda)?;
    let dfn = discriminant_derivative(pot, lambda)?;
    if dfn.norm() < 1e-12 * simple_scale(lambda) {
        return Err(Error::NotSimple { lambda: format!("{lambda}"), dfn: dfn.norm() });
    }
    let ep = C64::from_polar(1.0, t);
    let em = C64::from_polar(1.0, -t);
    if fd.phi1.norm() >= 1e-3 * fd.dtheta1.norm().max(1.0) {
        // Φ_{±t} = φ(1)θ + (e^{±it} − θ(1))φ
        let a = combo_norm(&g, fd.phi1, ep - fd.theta1);
        let b = combo_norm(&g, fd.phi1, em - fd.theta1);
        Ok((fd.phi1 * dfn).norm() / (a * b))
    } else {
        // G_{±t} = θ'(1)φ + (e^{±it} − φ'(1))θ
        let a = combo_norm(&g, ep - fd.dphi1, fd.dtheta1);
        let b = combo_norm(&g, em - fd.dphi1, fd.dtheta1);
        Ok((fd.dtheta1 * dfn).norm() / (a * b))
    }
}
