//! Projection norms |d_n(t)|, integrals of |d_n|⁻¹, spectral singularities
//! and the operator classification.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::discriminant::{self, CriticalFamily, CriticalPoint, Window};
use crate::error::{Error, Result};
use crate::floquet::{self, EigenSolution};
use crate::potential::{alpha_input_of, alpha_of, asymptotic_constants, check_diophantine, AlphaInput, DiophantineVerdict};
use crate::quadrature;
use crate::{Potential, TriState};

/// Decade growth that flags a divergent ∫|d|⁻¹.
pub const DIVERGENCE_RATIO: f64 = 1.25;
pub const DIVERGENCE_WIDTH: f64 = 0.05;

/// Position of band n when the spectrum at t ∈ (0, π) is sorted by real part.
pub fn rank_of(n: i64) -> usize {
    if n >= 0 {
        2 * n as usize
    } else {
        2 * n.unsigned_abs() as usize - 1
    }
}

/// Solution at t and the index of band n in it.
pub fn band_at(pot: &Potential, n: i64, t: f64, m: usize) -> Result<(EigenSolution, usize)> {
    let sol = floquet::eig(&floquet::assemble(pot, t, m)?)?;
    let i = rank_of(n);
    if i >= sol.len() {
        return Err(Error::Band { n, reason: format!("rank {i} beyond truncation") });
    }
    Ok((sol, i))
}

/// |d_n(t)| from coefficient vectors, None when the eigenvalue is not simple.
pub fn dn_eigenvector(pot: &Potential, n: i64, t: f64, m: usize) -> Result<(C64, Option<f64>)> {
    let (sol, i) = band_at(pot, n, t, m)?;
    let d = sol.is_simple(i).then(|| sol.projection(i).norm());
    Ok((sol.lambdas[i], d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Eigenvector,
    Wronskian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DnSample {
    pub t: f64,
    pub abs_d: f64,
    pub method: Method,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionProfile {
    pub n: i64,
    pub samples: Vec<DnSample>,
    pub sup_inverse: f64,
    pub excluded: Vec<f64>,
}

impl ProjectionProfile {
    pub fn by_method(&self, method: Method) -> impl Iterator<Item = &DnSample> {
        self.samples.iter().filter(move |s| s.method == method)
    }

    /// (t, eigenvector |d|, Wronskian |d|) where both exist.
    pub fn paired(&self) -> Vec<(f64, f64, f64)> {
        self.by_method(Method::Wronskian)
            .filter_map(|w| self.by_method(Method::Eigenvector).find(|e| e.t == w.t).map(|e| (w.t, e.abs_d, w.abs_d)))
            .collect()
    }
}

/// Eigenvector |d_n| at every grid point; the Wronskian form on every
/// `wronskian_stride`-th point as a cross-check.
pub fn dn_profile_with(pot: &Potential, n: i64, t_grid: &[f64], m: usize, wronskian_stride: usize) -> Result<ProjectionProfile> {
    let stride = wronskian_stride.max(1);
    let rows: Vec<Result<(f64, Option<f64>, Option<f64>)>> = t_grid
        .par_iter()
        .enumerate()
        .map(|(j, &t)| {
            let (lambda, d) = dn_eigenvector(pot, n, t, m)?;
            let w = if j % stride == 0 {
                match discriminant::dn_via_wronskian(pot, n, t, lambda) {
                    Ok(v) if v.is_finite() => Some(v),
                    Ok(_) | Err(Error::NotSimple { .. }) => None,
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            Ok((t, d, w))
        })
        .collect();
    let mut samples = Vec::new();
    let mut excluded = Vec::new();
    let mut sup: f64 = 0.0;
    for r in rows {
        let (t, d, w) = r?;
        match d {
            Some(d) => {
                sup = sup.max(1.0 / d);
                samples.push(DnSample { t, abs_d: d, method: Method::Eigenvector });
            }
            None => excluded.push(t),
        }
        if let Some(w) = w {
            samples.push(DnSample { t, abs_d: w, method: Method::Wronskian });
        }
    }
    Ok(ProjectionProfile { n, samples, sup_inverse: sup, excluded })
}

pub fn dn_profile(pot: &Potential, n: i64, t_grid: &[f64]) -> Result<ProjectionProfile> {
    let m = floquet::truncation_size(pot, n.unsigned_abs() as usize + 1)?;
    dn_profile_with(pot, n, t_grid, m, 4)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceDiagnostic {
    pub anchor: f64,
    /// +1: integrate on the right of the anchor, −1 on the left
    pub side: i8,
    pub epsilons: Vec<f64>,
    pub values: Vec<f64>,
    pub ratios: Vec<f64>,
    pub divergence_flag: bool,
}

struct Integrand<'a> {
    pot: &'a Potential,
    n: i64,
    m: usize,
    excluded: Vec<f64>,
    failure: Option<Error>,
}

impl Integrand<'_> {
    /// Excluded (non-simple) nodes give 0, or NaN when `strict` so that
    /// adaptive refinement stops there.
    fn eval(&mut self, t: f64, strict: bool) -> f64 {
        match dn_eigenvector(self.pot, self.n, t, self.m) {
            Ok((_, Some(d))) => 1.0 / d,
            Ok((_, None)) => {
                self.excluded.push(t);
                if strict {
                    f64::NAN
                } else {
                    0.0
                }
            }
            Err(e) => {
                self.failure.get_or_insert(e);
                0.0
            }
        }
    }

    fn integrate(&mut self, a: f64, b: f64) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let before = self.excluded.len();
        let rough = quadrature::gauss16().integrate(a, b, |t| self.eval(t, false));
        if self.excluded.len() > before {
            // the panel touches a cluster zone: keep the fixed-rule value
            return self.failure.take().map_or(Ok(rough), Err);
        }
        let tol = 1e-6 * rough.abs() + 1e-14;
        let v = match quadrature::adaptive(a, b, tol, 24, &mut |t| self.eval(t, true)) {
            Ok(v) => v,
            Err(_) if self.excluded.len() > before => rough,
            Err(trace) => return Err(Error::QuadratureNonconvergence { trace }),
        };
        if let Some(e) = self.failure.take() {
            return Err(e);
        }
        Ok(v)
    }
}

/// v(ε_k) = ∫|d_n|⁻¹ over [anchor+ε_k, anchor+width] (or the mirror on the
/// left) for ε_k = 10^{−k}, k = 2..=6.
pub fn divergence_diagnostic(pot: &Potential, n: i64, anchor: f64, side: i8, m: usize) -> Result<DivergenceDiagnostic> {
    let s = side.signum() as f64;
    let mut f = Integrand { pot, n, m, excluded: Vec::new(), failure: None };
    let mut edges = vec![DIVERGENCE_WIDTH];
    edges.extend((2..=6).map(|k| 10f64.powi(-k)));
    let mut pieces = Vec::new();
    for w in edges.windows(2) {
        let (near, far) = (w[1], w[0]);
        let (a, b) = if s > 0.0 { (anchor + near, anchor + far) } else { (anchor - far, anchor - near) };
        pieces.push(f.integrate(a, b)?);
    }
    let mut values = Vec::new();
    let mut acc = 0.0;
    for p in &pieces {
        acc += p;
        values.push(acc);
    }
    let ratios: Vec<f64> = values.windows(2).map(|w| w[1] / w[0]).collect();
    let flag = ratios.iter().all(|&r| r >= DIVERGENCE_RATIO);
    Ok(DivergenceDiagnostic {
        anchor,
        side,
        epsilons: (2..=6).map(|k| 10f64.powi(-k)).collect(),
        values,
        ratios,
        divergence_flag: flag,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralReport {
    pub n: i64,
    pub interval: (f64, f64),
    pub epsilon_floor: f64,
    pub value: f64,
    pub divergence_flag: bool,
    pub diagnostics: Vec<DivergenceDiagnostic>,
    pub excluded: Vec<f64>,
}

/// ∫|d_n(t)|⁻¹ over the interval minus ε-neighbourhoods of the 2-periodic
/// points and of `extra` singular points; each such point with room on a side
/// gets a divergence diagnostic.
pub fn integral_inverse_dn_with(
    pot: &Potential,
    n: i64,
    interval: (f64, f64),
    epsilon_floor: f64,
    extra: &[f64],
    m: usize,
) -> Result<IntegralReport> {
    let (lo, hi) = interval;
    if !(lo < hi) || lo < -PI - 1e-12 || hi > PI + 1e-12 || !(epsilon_floor > 0.0) {
        return Err(Error::Validation(format!("bad interval {interval:?} or floor {epsilon_floor}")));
    }
    let mut points: Vec<f64> = [-PI, 0.0, PI].into_iter().chain(extra.iter().copied()).filter(|p| (lo..=hi).contains(p)).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut cuts = vec![lo];
    cuts.extend(points.iter().copied().filter(|&p| p > lo && p < hi));
    cuts.push(hi);
    let mut f = Integrand { pot, n, m, excluded: Vec::new(), failure: None };
    let mut value = 0.0;
    for w in cuts.windows(2) {
        let a = if points.contains(&w[0]) { w[0] + epsilon_floor } else { w[0] };
        let b = if points.contains(&w[1]) { w[1] - epsilon_floor } else { w[1] };
        // grade toward both ends so endpoint singularities get resolved
        let mut grid = vec![a];
        let mid = 0.5 * (a + b);
        let mut d = 0.5 * (b - a);
        while d > 1e-7 {
            d *= 0.1;
            grid.push(a + d);
            grid.push(b - d);
        }
        grid.push(mid);
        grid.push(b);
        grid.retain(|x| *x >= a && *x <= b);
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        for g in grid.windows(2) {
            value += f.integrate(g[0], g[1])?;
        }
    }
    let mut diagnostics = Vec::new();
    for &p in &points {
        for side in [1i8, -1] {
            let far = p + side as f64 * DIVERGENCE_WIDTH;
            if far >= lo && far <= hi {
                diagnostics.push(divergence_diagnostic(pot, n, p, side, m)?);
            }
        }
    }
    Ok(IntegralReport {
        n,
        interval,
        epsilon_floor,
        value,
        divergence_flag: diagnostics.iter().any(|d| d.divergence_flag),
        diagnostics,
        excluded: f.excluded,
    })
}

pub fn integral_inverse_dn(pot: &Potential, n: i64, interval: (f64, f64), epsilon_floor: f64) -> Result<IntegralReport> {
    let m = floquet::truncation_size(pot, n.unsigned_abs() as usize + 1)?;
    integral_inverse_dn_with(pot, n, interval, epsilon_floor, &[], m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EssEntry {
    pub lambda: C64,
    pub t: f64,
    pub family: CriticalFamily,
    pub n: i64,
    pub algebraic_multiplicity: usize,
    pub geometric_multiplicity: usize,
    pub divergence: Option<DivergenceDiagnostic>,
    pub is_ess: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub window: Window,
    pub critical_points: Vec<CriticalPoint>,
    pub singularities: Vec<CriticalPoint>,
    pub ess: Vec<EssEntry>,
}

fn multiplicities(pot: &Potential, lambda: C64, t: f64, m: usize) -> Result<(usize, usize)> {
    let sol = floquet::eig(&floquet::assemble(pot, t, m)?)?;
    let near: Vec<usize> = (0..sol.len()).filter(|&i| (sol.lambdas[i] - lambda).norm() <= 1e-6 * lambda.norm().max(1.0)).collect();
    let alg = near.len();
    let geo = if near.iter().any(|&i| sol.deficiency_flags[i]) { 1 } else { alg };
    Ok((alg, geo))
}

/// Critical points with real t* are singularity candidates; 2-periodic ones
/// get multiplicities from the matrix engine and a divergence test.
pub fn detect_singularities_with(pot: &Potential, window: &Window, m: usize) -> Result<SingularityReport> {
    let cps = discriminant::find_critical_points(pot, window)?;
    let singular: Vec<CriticalPoint> = cps
        .iter()
        .filter(|c| c.t_star.im.abs() <= 1e-6 && c.t_star.re.abs() <= PI + 1e-9)
        .cloned()
        .collect();
    let mut ess = Vec::new();
    for c in &singular {
        let t = c.t_star.re;
        let (alg, geo, anchor, side) = match c.family {
            CriticalFamily::Periodic => {
                let (a, g) = multiplicities(pot, c.lambda_star, 0.0, m)?;
                (a, g, 0.0, 1i8)
            }
            CriticalFamily::Antiperiodic => {
                let (a, g) = multiplicities(pot, c.lambda_star, PI, m)?;
                (a, g, PI, -1i8)
            }
            CriticalFamily::Interior => (2, 1, t, if t > PI / 2.0 { -1 } else { 1 }),
        };
        if alg < 2 {
            continue;
        }
        let div = if geo < alg { Some(divergence_diagnostic(pot, c.n_guess, anchor, side, m)?) } else { None };
        let is_ess = geo < alg && div.as_ref().is_some_and(|d| d.divergence_flag);
        ess.push(EssEntry {
            lambda: c.lambda_star,
            t,
            family: c.family,
            n: c.n_guess,
            algebraic_multiplicity: alg,
            geometric_multiplicity: geo,
            divergence: div,
            is_ess,
        });
    }
    Ok(SingularityReport { window: *window, critical_points: cps, singularities: singular, ess })
}

pub fn detect_singularities(pot: &Potential, window: &Window) -> Result<SingularityReport> {
    let reach = window.re.1.max(0.0).sqrt() / (2.0 * PI);
    let m = floquet::truncation_size(pot, reach.ceil() as usize + 1)?;
    detect_singularities_with(pot, window, m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionDecomposition {
    pub n: i64,
    pub i1: Interval,
    pub i2: Interval,
    pub i3: Interval,
    pub i4: Interval,
    pub i5: Interval,
    /// natural logs of ¼ε_n, ⁵⁄₄ε_n, |β_n| mapped to t
    pub log_boundaries: [f64; 3],
    pub notices: Vec<String>,
}

/// Boundaries ¼ε_n, ⁵⁄₄ε_n, |β_n| and 4πn⁻² mapped by t = x/(4πn), clipped to [0, n⁻³].
pub fn region_decomposition(pot: &Potential, n: i64) -> Result<RegionDecomposition> {
    if pot.is_free() {
        return Err(Error::Validation("regions are undefined for the free operator".into()));
    }
    if n < 2 {
        return Err(Error::Validation(format!("n = {n} < 2")));
    }
    let c = asymptotic_constants(pot, n as u32);
    let top = (n as f64).powi(-3);
    let ln_scale = (4.0 * PI * n as f64).ln();
    let logs = [
        c.epsilon_n.log_magnitude + 0.25f64.ln() - ln_scale,
        c.epsilon_n.log_magnitude + 1.25f64.ln() - ln_scale,
        c.beta_n.log_magnitude - ln_scale,
    ];
    let mut notices = Vec::new();
    let to_t = |l: f64| -> f64 { l.exp().min(top) };
    for (name, l) in ["ε_n/4", "5ε_n/4", "|β_n|"].iter().zip(&logs) {
        if l.exp() == 0.0 {
            notices.push(format!("{name} boundary underflows (ln t = {l:.1}); region collapses to 0"));
        }
    }
    let [t1, t2, tb] = logs.map(to_t);
    let t4 = t2.max(tb);
    Ok(RegionDecomposition {
        n,
        i1: Interval { lo: 0.0, hi: t1 },
        i2: Interval { lo: t1, hi: t2 },
        i3: Interval { lo: t2, hi: top },
        i4: Interval { lo: t2, hi: t4 },
        i5: Interval { lo: t4, hi: top },
        log_boundaries: logs,
        notices,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpansionForm {
    Elegant,
    AsymptoticallyElegant,
    Gasymov,
}

impl ExpansionForm {
    pub fn of(pot: &Potential) -> Self {
        let ab = pot.product().norm();
        if pot.is_free() {
            ExpansionForm::Elegant
        } else if pot.is_degenerate_product() {
            ExpansionForm::Gasymov
        } else if ab < 16.0 / 9.0 {
            ExpansionForm::Elegant
        } else {
            ExpansionForm::AsymptoticallyElegant
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// highest band index used for integral evidence and the singularity window
    pub n_max: usize,
    pub singularities: bool,
    pub search_bound: u64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { n_max: 2, singularities: true, search_bound: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralityReport {
    pub a: C64,
    pub b: C64,
    pub alpha: Option<f64>,
    pub modulus_equal: bool,
    pub self_adjoint: bool,
    pub diophantine: Option<DiophantineVerdict>,
    pub asymptotically_spectral: TriState,
    pub singularities: Vec<CriticalPoint>,
    pub ess: Vec<EssEntry>,
    pub ess_at_infinity: TriState,
    pub ess_evidence: Vec<IntegralReport>,
    pub expansion_form: ExpansionForm,
    pub notes: Vec<String>,
}

pub fn classify_operator(pot: &Potential, alpha_input: Option<AlphaInput>) -> Result<SpectralityReport> {
    classify_with(pot, alpha_input, &ClassifyOptions::default())
}

pub fn classify_with(pot: &Potential, alpha_input: Option<AlphaInput>, opts: &ClassifyOptions) -> Result<SpectralityReport> {
    let modulus_equal = pot.modulus_equal();
    let form = ExpansionForm::of(pot);
    let mut notes = Vec::new();
    let (alpha, diophantine) = if pot.is_degenerate_product() {
        if alpha_input.is_some() {
            notes.push("alpha input ignored: ab = 0".into());
        }
        (None, None)
    } else {
        let input = match alpha_input {
            Some(a) => a,
            None => alpha_input_of(pot)?,
        };
        (Some(alpha_of(pot)?), Some(check_diophantine(input, opts.search_bound)?))
    };
    let asymptotically_spectral = match (&diophantine, modulus_equal) {
        (_, false) => TriState::Fails,
        (None, true) => TriState::Holds,
        (Some(d), true) => d.condition8,
    };
    let ab = pot.product();
    if !pot.is_degenerate_product() && ab.im == 0.0 {
        if pot.is_self_adjoint() {
            notes.push("ab is real and the operator is self-adjoint: spectral".into());
        } else {
            notes.push("ab is real and the operator is not self-adjoint: not a spectral operator".into());
        }
    }
    let m = floquet::truncation_size(pot, opts.n_max + 1)?;
    let (singularities, ess) = if opts.singularities {
        let hi = (2.0 * PI * opts.n_max as f64 + PI).powi(2) + 10.0;
        let w = Window::real(-1.0 - 2.0 * (pot.a.norm() + pot.b.norm()), hi)?;
        let r = detect_singularities_with(pot, &w, m)?;
        (r.singularities, r.ess)
    } else {
        (Vec::new(), Vec::new())
    };
    let (ess_at_infinity, evidence) = if pot.is_free() {
        notes.push("free operator: self-adjoint without singularities".into());
        (TriState::Fails, Vec::new())
    } else if pot.is_degenerate_product() {
        notes.push("ab = 0: ESS at infinity is forced".into());
        (TriState::Holds, Vec::new())
    } else {
        let reports: Vec<IntegralReport> = (1..=opts.n_max as i64)
            .map(|n| integral_inverse_dn_with(pot, n, (0.0, PI), 1e-6, &[], m))
            .collect::<Result<_>>()?;
        let saturated = reports.iter().all(|r| !r.divergence_flag);
        notes.push(format!("ESS at infinity judged on bands 1..={} only", opts.n_max));
        (if saturated { TriState::Fails } else { TriState::UndecidedFloat }, reports)
    };
    Ok(SpectralityReport {
        a: pot.a,
        b: pot.b,
        alpha,
        modulus_equal,
        self_adjoint: pot.is_self_adjoint(),
        diophantine,
        asymptotically_spectral,
        singularities,
        ess,
        ess_at_infinity,
        ess_evidence: evidence,
        expansion_form: form,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks() {
        assert_eq!([0, -1, 1, -2, 2].map(rank_of), [0, 1, 2, 3, 4]);
    }

    #[test]
    fn free_projection_is_one() {
        let p = Potential::real(0.0, 0.0);
        let prof = dn_profile_with(&p, 2, &[0.3, 1.0, -2.0], 32, 1).unwrap();
        assert!(prof.samples.iter().all(|s| (s.abs_d - 1.0).abs() < 1e-10));
        assert_eq!(prof.paired().len(), 3);
    }

    #[test]
    fn regions_nest() {
        let r = region_decomposition(&Potential::real(1.0, 2.0), 3).unwrap();
        assert!(r.i1.hi < r.i2.hi && r.i2.hi < r.i4.hi);
        let s = region_decomposition(&Potential::real(1.0, 1.0), 3).unwrap();
        assert!((s.i4.hi - s.i4.lo).abs() < 1e-15 * s.i4.hi.max(1e-300));
        assert!(region_decomposition(&Potential::real(0.0, 0.0), 3).is_err());
    }

    #[test]
    fn forms() {
        assert_eq!(ExpansionForm::of(&Potential::real(1.0, 1.0)), ExpansionForm::Elegant);
        assert_eq!(ExpansionForm::of(&Potential::real(2.0, 2.0)), ExpansionForm::AsymptoticallyElegant);
        assert_eq!(ExpansionForm::of(&Potential::real(0.0, 5.0)), ExpansionForm::Gasymov);
        assert_eq!(ExpansionForm::of(&Potential::real(0.0, 0.0)), ExpansionForm::Elegant);
    }
}
