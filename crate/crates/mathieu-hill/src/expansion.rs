//! Bloch expansion coefficients of test functions and reconstruction in the
//! elegant, asymptotically elegant and paired (Gasymov) forms.
//!
//! Transform convention: f̂(ξ) = ∫ f(x) e^{−iξx} dx.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::discriminant::Window;
use crate::error::{Error, Result};
use crate::floquet;
use crate::quadrature;
use crate::spectrality::{self, rank_of, ExpansionForm};
use crate::Potential;

pub const DEFAULT_H: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    /// exp(−(x−center)²/(2·width²))
    Gaussian { center: f64, width: f64 },
    /// Gaussian times e^{i·frequency·x}
    GaussianModulated { center: f64, width: f64, frequency: f64 },
    /// cos²(π(x−center)/(2·half_width)) on |x−center| ≤ half_width
    CompactBump { center: f64, half_width: f64 },
}

impl TestFunction {
    pub fn standard() -> Self {
        TestFunction::Gaussian { center: 0.5, width: 0.25 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            TestFunction::Gaussian { center, width } => center.is_finite() && width > 0.0,
            TestFunction::GaussianModulated { center, width, frequency } => center.is_finite() && width > 0.0 && frequency.is_finite(),
            TestFunction::CompactBump { center, half_width } => center.is_finite() && half_width > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("bad test function {self:?}")))
        }
    }

    pub fn eval(&self, x: f64) -> C64 {
        match *self {
            TestFunction::Gaussian { center, width } => C64::new((-(x - center).powi(2) / (2.0 * width * width)).exp(), 0.0),
            TestFunction::GaussianModulated { center, width, frequency } => {
                C64::from_polar((-(x - center).powi(2) / (2.0 * width * width)).exp(), frequency * x)
            }
            TestFunction::CompactBump { center, half_width } => {
                let y = x - center;
                if y.abs() > half_width {
                    C64::new(0.0, 0.0)
                } else {
                    C64::new((PI * y / (2.0 * half_width)).cos().powi(2), 0.0)
                }
            }
        }
    }

    /// f̂(ξ) in closed form.
    pub fn transform(&self, xi: f64) -> C64 {
        match *self {
            TestFunction::Gaussian { center, width } => gaussian_hat(center, width, xi),
            TestFunction::GaussianModulated { center, width, frequency } => gaussian_hat(center, width, xi - frequency),
            TestFunction::CompactBump { center, half_width } => {
                let l = half_width;
                let k = PI / l;
                let shift = C64::from_polar(1.0, -xi * center);
                // removable points ξ = 0, ±k evaluated by direct quadrature
                if xi.abs() < 1e-3 * k || (xi.abs() - k).abs() < 1e-3 * k {
                    let v: C64 = (0..8)
                        .map(|p| {
                            let (a, b) = (-l + 2.0 * l * p as f64 / 8.0, -l + 2.0 * l * (p + 1) as f64 / 8.0);
                            quadrature::gauss16()
                                .on(a, b)
                                .map(|(y, w)| C64::from_polar(w * (PI * y / (2.0 * l)).cos().powi(2), -xi * y))
                                .sum::<C64>()
                        })
                        .sum();
                    return v * shift;
                }
                shift * (k * k * (xi * l).sin() / (xi * (k * k - xi * xi)))
            }
        }
    }

    /// ‖f‖² over the line.
    pub fn norm_sqr(&self) -> f64 {
        match *self {
            TestFunction::Gaussian { width, .. } | TestFunction::GaussianModulated { width, .. } => width * PI.sqrt(),
            TestFunction::CompactBump { half_width, .. } => 0.75 * half_width,
        }
    }
}

fn gaussian_hat(center: f64, width: f64, xi: f64) -> C64 {
    C64::from_polar(width * (2.0 * PI).sqrt() * (-0.5 * width * width * xi * xi).exp(), -xi * center)
}

/// Σ_k conj(c*_k) f̂(2πk+t) divided by d = Σ_k c_k conj(c*_k).
pub fn coefficient_from_vectors(c: &[C64], cstar: &[C64], k_min: i64, t: f64, f: &TestFunction) -> C64 {
    let d: C64 = c.iter().zip(cstar).map(|(x, y)| x * y.conj()).sum();
    let num: C64 = cstar
        .iter()
        .enumerate()
        .map(|(i, y)| y.conj() * f.transform(2.0 * PI * (k_min + i as i64) as f64 + t))
        .sum();
    num / d
}

/// Ψ(x) = Σ_k c_k e^{i(2πk+t)x}.
pub fn bloch_value(c: &[C64], k_min: i64, t: f64, x: f64) -> C64 {
    c.iter()
        .enumerate()
        .map(|(i, z)| z * C64::from_polar(1.0, (2.0 * PI * (k_min + i as i64) as f64 + t) * x))
        .sum()
}

/// a_n(t) for the band of rank-label n.
pub fn bloch_coefficient(pot: &Potential, f: &TestFunction, n: i64, t: f64, m: usize) -> Result<C64> {
    f.validate()?;
    let (sol, i) = spectrality::band_at(pot, n, t, m)?;
    if !sol.is_simple(i) {
        return Err(Error::MultipleEigenvalue { lambda: format!("{}", sol.lambdas[i]) });
    }
    Ok(coefficient_from_vectors(&sol.vectors[i], &sol.adjoint_vectors[i], -(m as i64), t, f))
}

/// Interval of t with the bands whose terms are summed before integrating.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub bands: Vec<i64>,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionPlan {
    pub form: ExpansionForm,
    pub n_max: usize,
    /// Gauss panels per unit length of t
    pub panels_per_unit: usize,
    pub h: Option<f64>,
    /// bands whose Γ_n carry an ESS (window-limited)
    pub s_set: Vec<i64>,
    pub groups: Vec<Group>,
}

fn labels(n_max: usize, extra_rank: bool) -> Vec<i64> {
    let top = 2 * n_max + usize::from(extra_rank);
    let mut v: Vec<i64> = (0..=n_max as i64).flat_map(|n| [n, -n - 1]).filter(|&n| rank_of(n) <= top).collect();
    v.sort();
    v
}

impl ExpansionPlan {
    pub fn elegant(n_max: usize) -> Self {
        let groups = labels(n_max, false)
            .into_iter()
            .flat_map(|n| [Group { bands: vec![n], lo: -PI, hi: 0.0 }, Group { bands: vec![n], lo: 0.0, hi: PI }])
            .collect();
        Self { form: ExpansionForm::Elegant, n_max, panels_per_unit: 4, h: None, s_set: vec![], groups }
    }

    pub fn asymptotically_elegant(n_max: usize, s_set: Vec<i64>) -> Self {
        let all = labels(n_max, false);
        let mut groups = Vec::new();
        let grouped: Vec<i64> = all.iter().copied().filter(|n| s_set.contains(n)).collect();
        for (lo, hi) in [(-PI, 0.0), (0.0, PI)] {
            if !grouped.is_empty() {
                groups.push(Group { bands: grouped.clone(), lo, hi });
            }
            for &n in all.iter().filter(|n| !s_set.contains(n)) {
                groups.push(Group { bands: vec![n], lo, hi });
            }
        }
        Self { form: ExpansionForm::AsymptoticallyElegant, n_max, panels_per_unit: 4, h: None, s_set, groups }
    }

    /// Pairs (n, −n) on [−h, h] and (n, −n−1) on [π−h, π+h]; single bands on B(h).
    pub fn gasymov(n_max: usize, h: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0 / (15.0 * PI)) {
            return Err(Error::Validation(format!("h = {h} outside (0, 1/(15π))")));
        }
        let all = labels(n_max, true);
        let mut groups = Vec::new();
        for &n in all.iter().filter(|&&n| n >= 0) {
            let zero_pair = if n == 0 { vec![0] } else { vec![n, -n] };
            for (lo, hi) in [(-h, 0.0), (0.0, h)] {
                groups.push(Group { bands: zero_pair.iter().copied().filter(|b| all.contains(b)).collect(), lo, hi });
            }
            let pi_pair: Vec<i64> = [n, -n - 1].into_iter().filter(|b| all.contains(b)).collect();
            for (lo, hi) in [(PI - h, PI), (-PI, -PI + h)] {
                groups.push(Group { bands: pi_pair.clone(), lo, hi });
            }
        }
        for &n in &all {
            for (lo, hi) in [(h, PI - h), (-PI + h, -h)] {
                groups.push(Group { bands: vec![n], lo, hi });
            }
        }
        Ok(Self { form: ExpansionForm::Gasymov, n_max, panels_per_unit: 4, h: Some(h), s_set: vec![], groups })
    }

    /// Plan matching the operator's classification; the S-set comes from a
    /// singularity scan up to (2πn_max+π)².
    pub fn for_potential(pot: &Potential, n_max: usize, h: f64) -> Result<Self> {
        match ExpansionForm::of(pot) {
            ExpansionForm::Elegant => Ok(Self::elegant(n_max)),
            ExpansionForm::Gasymov => Self::gasymov(n_max, h),
            ExpansionForm::AsymptoticallyElegant => {
                let hi = (2.0 * PI * n_max as f64 + PI).powi(2) + 10.0;
                let w = Window::real(-1.0 - 2.0 * (pot.a.norm() + pot.b.norm()), hi)?;
                let r = spectrality::detect_singularities(pot, &w)?;
                let mut s: Vec<i64> = r.ess.iter().filter(|e| e.is_ess).flat_map(|e| [e.n, -e.n, -e.n - 1]).collect();
                s.sort();
                s.dedup();
                Ok(Self::asymptotically_elegant(n_max, s))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResidual {
    pub x: f64,
    pub f: C64,
    pub reconstruction: C64,
    pub rel_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub form: ExpansionForm,
    pub n_max: usize,
    pub h: Option<f64>,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub per_point: Vec<PointResidual>,
    /// quadrature nodes skipped because a band was not simple there
    pub excluded_nodes: usize,
}

/// Gauss nodes on [lo, hi], graded geometrically toward both ends.
fn nodes(lo: f64, hi: f64, per_unit: usize) -> Vec<(f64, f64)> {
    let len = hi - lo;
    let p = ((len * per_unit as f64).ceil() as usize).max(2);
    let mut cuts: Vec<f64> = (0..=p).map(|j| lo + len * j as f64 / p as f64).collect();
    let first = len / p as f64;
    for j in 1..=10 {
        let d = first * 0.5f64.powi(j);
        cuts.push(lo + d);
        cuts.push(hi - d);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2).flat_map(|w| quadrature::gauss16().on(w[0], w[1]).collect::<Vec<_>>()).collect()
}

/// Σ over `groups` (all on one interval) of Σ_{n∈group} a_n(t)Ψ_{n,t}(x) at
/// every eval point; one eigen-solve per node.
fn node_terms(pot: &Potential, f: &TestFunction, groups: &[&Group], t: f64, xs: &[f64], m: usize) -> Result<(Vec<C64>, usize)> {
    let sol = floquet::eig(&floquet::assemble(pot, t, m)?)?;
    let k_min = -(m as i64);
    let mut out = vec![C64::new(0.0, 0.0); xs.len()];
    let mut skipped = 0;
    for &n in groups.iter().flat_map(|g| &g.bands) {
        let i = rank_of(n);
        if i >= sol.len() || !sol.is_simple(i) {
            skipped += 1;
            continue;
        }
        let a = coefficient_from_vectors(&sol.vectors[i], &sol.adjoint_vectors[i], k_min, t, f);
        for (o, &x) in out.iter_mut().zip(xs) {
            *o += a * bloch_value(&sol.vectors[i], k_min, t, x);
        }
    }
    Ok((out, skipped))
}

/// f(x) ≈ (1/2π) Σ_groups ∫ Σ_{n∈group} a_n(t)Ψ_{n,t}(x) dt. Each group's
/// bands are summed node by node before the t-quadrature.
pub fn reconstruct_with(pot: &Potential, f: &TestFunction, plan: &ExpansionPlan, xs: &[f64], m: usize) -> Result<ResidualReport> {
    f.validate()?;
    let actual = ExpansionForm::of(pot);
    if actual != plan.form {
        return Err(Error::FormMismatch { plan: format!("{:?}", plan.form), operator: format!("{actual:?}") });
    }
    // groups sharing an interval share its nodes
    let mut intervals: Vec<(f64, f64, Vec<&Group>)> = Vec::new();
    for g in &plan.groups {
        match intervals.iter_mut().find(|(lo, hi, _)| *lo == g.lo && *hi == g.hi) {
            Some(e) => e.2.push(g),
            None => intervals.push((g.lo, g.hi, vec![g])),
        }
    }
    let jobs: Vec<(usize, f64, f64)> = intervals
        .iter()
        .enumerate()
        .flat_map(|(k, (lo, hi, _))| nodes(*lo, *hi, plan.panels_per_unit).into_iter().map(move |(t, w)| (k, t, w)))
        .collect();
    let parts: Vec<Result<(Vec<C64>, usize)>> = jobs
        .par_iter()
        .map(|&(k, t, w)| {
            let (v, s) = node_terms(pot, f, &intervals[k].2, t, xs, m)?;
            Ok((v.into_iter().map(|z| z * w).collect(), s))
        })
        .collect();
    let mut acc = vec![C64::new(0.0, 0.0); xs.len()];
    let mut excluded = 0;
    for p in parts {
        let (v, s) = p?;
        excluded += s;
        for (a, z) in acc.iter_mut().zip(v) {
            *a += z;
        }
    }
    let per_point: Vec<PointResidual> = xs
        .iter()
        .zip(acc)
        .map(|(&x, r)| {
            let r = r / (2.0 * PI);
            let fx = f.eval(x);
            PointResidual { x, f: fx, reconstruction: r, rel_residual: (r - fx).norm() / fx.norm() }
        })
        .collect();
    let max = per_point.iter().map(|p| p.rel_residual).fold(0.0, f64::max);
    let mean = per_point.iter().map(|p| p.rel_residual).sum::<f64>() / per_point.len().max(1) as f64;
    Ok(ResidualReport { form: plan.form, n_max: plan.n_max, h: plan.h, max_residual: max, mean_residual: mean, per_point, excluded_nodes: excluded })
}

pub fn reconstruct(pot: &Potential, f: &TestFunction, plan: &ExpansionPlan, xs: &[f64]) -> Result<ResidualReport> {
    let m = floquet::truncation_size(pot, plan.n_max + 1)?;
    reconstruct_with(pot, f, plan, xs, m)
}

/// Nine evaluation points spread over [0.1, 0.9].
pub fn standard_points() -> Vec<f64> {
    (0..9).map(|i| 0.1 + 0.1 * i as f64).collect()
}

/// Σ_n ∫|a_n(t)|² dt/(2π) over the bands of the plan's label set.
pub fn parseval_sum(pot: &Potential, f: &TestFunction, n_max: usize, m: usize) -> Result<f64> {
    let bands = labels(n_max, false);
    let pts: Vec<(f64, f64)> = nodes(-PI, 0.0, 4).into_iter().chain(nodes(0.0, PI, 4)).collect();
    let vals: Vec<Result<f64>> = pts
        .par_iter()
        .map(|&(t, w)| {
            let sol = floquet::eig(&floquet::assemble(pot, t, m)?)?;
            let mut s = 0.0;
            for &n in &bands {
                let i = rank_of(n);
                s += coefficient_from_vectors(&sol.vectors[i], &sol.adjoint_vectors[i], -(m as i64), t, f).norm_sqr();
            }
            Ok(s * w)
        })
        .collect();
    Ok(vals.into_iter().sum::<Result<f64>>()? / (2.0 * PI))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub t: f64,
    pub combined: f64,
    pub singles: Vec<f64>,
}

/// |Σ a_nΨ_n(x)| over a pair and each |a_nΨ_n(x)| alone at the given t.
pub fn pair_integrand(pot: &Potential, f: &TestFunction, pair: (i64, i64), x: f64, ts: &[f64], m: usize) -> Result<Vec<PairSample>> {
    ts.iter()
        .map(|&t| {
            let sol = floquet::eig(&floquet::assemble(pot, t, m)?)?;
            let k_min = -(m as i64);
            let mut singles = Vec::new();
            let mut sum = C64::new(0.0, 0.0);
            for n in [pair.0, pair.1] {
                let i = rank_of(n);
                let a = coefficient_from_vectors(&sol.vectors[i], &sol.adjoint_vectors[i], k_min, t, f);
                let v = a * bloch_value(&sol.vectors[i], k_min, t, x);
                singles.push(v.norm());
                sum += v;
            }
            Ok(PairSample { t, combined: sum.norm(), singles })
        })
        .collect()
}
