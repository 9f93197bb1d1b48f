//! Perturbation series A, A', B, B' specialised to the two-term potential,
//! the 2×2 characteristic relation D(λ,t), degeneracy predictions and
//! comparison against the matrix engine.
//!
//! A series term of order k is a walk of k steps in Fourier index space
//! starting at k0. A step k → k−1 carries factor b, k → k+1 carries a, and
//! each visited index j divides by λ − (2πj+t)². Visited indices must avoid
//! the forbidden set; the closing factor is q_{k−k0} (A) or q_{k−k1} (B).

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::floquet;
use crate::potential::{asymptotic_constants, Family, LogComplex};
use crate::{LogComplex64, Potential};

pub const DEFAULT_K_MAX: usize = 9;
pub const POLE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: C64,
    pub k_max: usize,
    pub tail_bound: f64,
    /// per-order terms, index k−1 for order k
    pub terms: Vec<C64>,
    /// log-scale value for products that underflow
    pub log: Option<LogComplex64>,
}

/// Which of the four series of a family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeriesKind {
    pub family: Family,
    pub primed: bool,
}

impl SeriesKind {
    pub fn new(family: Family, primed: bool) -> Self {
        Self { family, primed }
    }

    /// (k0, k1): start index and partner index.
    pub fn centers(&self, n: i64) -> (i64, i64) {
        match (self.family, self.primed) {
            (Family::Periodic, false) => (n, -n),
            (Family::Periodic, true) => (-n, n),
            (Family::Antiperiodic, false) => (n, -n - 1),
            (Family::Antiperiodic, true) => (-n - 1, n),
        }
    }

    /// Forbidden partial sums S, where the walk sits at k = k0 − S.
    pub fn forbidden(&self, n: i64, s: i64) -> bool {
        match (self.family, self.primed) {
            (Family::Periodic, false) => s == 0 || s == 2 * n,
            (Family::Periodic, true) => s == 0 || s == -2 * n,
            (Family::Antiperiodic, _) => s == 0 || s.abs() == 2 * n + 1,
        }
    }
}

fn q_of(pot: &Potential, j: i64) -> C64 {
    match j {
        -1 => pot.a,
        1 => pot.b,
        _ => C64::new(0.0, 0.0),
    }
}

fn denom(lambda: C64, k: i64, t: f64) -> Result<C64> {
    let d = lambda - (2.0 * PI * k as f64 + t).powi(2);
    if d.norm() < POLE_TOL {
        return Err(Error::PoleProximity { lambda: format!("{lambda}"), dist: d.norm() });
    }
    Ok(d)
}

/// Order-by-order terms (a_k, b_k) for k = 1..=k_max by a walk over index space.
pub fn walk_terms(pot: &Potential, n: i64, lambda: C64, t: f64, kind: SeriesKind, k_max: usize) -> Result<(Vec<C64>, Vec<C64>)> {
    let (k0, k1) = kind.centers(n);
    let mut w: BTreeMap<i64, C64> = BTreeMap::new();
    w.insert(k0, C64::new(1.0, 0.0));
    let mut a_terms = Vec::with_capacity(k_max);
    let mut b_terms = Vec::with_capacity(k_max);
    for _ in 0..k_max {
        let mut next: BTreeMap<i64, C64> = BTreeMap::new();
        for (&k, &v) in &w {
            for (dk, f) in [(-1i64, pot.b), (1, pot.a)] {
                let kn = k + dk;
                if kind.forbidden(n, k0 - kn) || f == C64::new(0.0, 0.0) {
                    continue;
                }
                *next.entry(kn).or_insert(C64::new(0.0, 0.0)) += v * f / denom(lambda, kn, t)?;
            }
        }
        w = next;
        a_terms.push(w.iter().map(|(&k, v)| v * q_of(pot, k - k0)).sum());
        b_terms.push(w.iter().map(|(&k, v)| v * q_of(pot, k - k1)).sum());
    }
    Ok((a_terms, b_terms))
}

fn tail(terms: &[C64]) -> f64 {
    let nz: Vec<f64> = terms.iter().map(|z| z.norm()).filter(|&x| x > 0.0).collect();
    if nz.len() < 2 {
        return 0.0;
    }
    let last = nz[nz.len() - 1];
    let r = last / nz[nz.len() - 2];
    if r < 1.0 {
        last * r / (1.0 - r)
    } else {
        f64::INFINITY
    }
}

/// A(λ,t) (or A') truncated at order k_max.
pub fn a_series(pot: &Potential, n: i64, lambda: C64, t: f64, kind: SeriesKind, k_max: usize) -> Result<SeriesValue> {
    let (a, _) = walk_terms(pot, n, lambda, t, kind, k_max)?;
    let odd: Vec<C64> = a.iter().step_by(2).copied().collect();
    Ok(SeriesValue { value: a.iter().sum(), k_max, tail_bound: tail(&odd), terms: a, log: None })
}

/// Order of the first non-vanishing B term.
pub fn leading_order(n: i64, family: Family) -> usize {
    match family {
        Family::Periodic => (2 * n - 1) as usize,
        Family::Antiperiodic => (2 * n) as usize,
    }
}

/// Leading B term as an exact finite product in log scale: for the periodic
/// family b_{2n−1} = b^{2n}∏_{s=1}^{2n−1}(λ−(2π(n−s)+t)²)⁻¹; the primed series
/// uses a^{2n} and −t; the antiperiodic family runs s = 1..2n with power 2n+1.
pub fn b_series_leading(pot: &Potential, n: i64, lambda: C64, t: f64, kind: SeriesKind) -> Result<SeriesValue> {
    let order = leading_order(n, kind.family);
    let (amp, tt) = if kind.primed { (pot.a, -t) } else { (pot.b, t) };
    let shift = match (kind.family, kind.primed) {
        (Family::Antiperiodic, true) => 1,
        _ => 0,
    };
    let mut acc = LogComplex::from_complex(amp).powi(order as i32 + 1);
    for s in 1..=order as i64 {
        // primed antiperiodic walks upward from −n−1 and mirrors to n+1−s
        let d = denom(lambda, n + shift - s, tt)?;
        acc = acc.div(&LogComplex::from_complex(d));
    }
    Ok(SeriesValue { value: acc.to_complex(), k_max: order, tail_bound: 10.0 / (n.max(1) as f64).powi(2) * acc.abs(), terms: vec![], log: Some(acc) })
}

/// Components of the characteristic relation at (λ, t).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DTerm {
    pub d_value: C64,
    pub c_value: C64,
    pub e_minus: C64,
    pub e_plus: C64,
    pub s_branch: i8,
    /// E₊E₋/(α_nβ_n) − 1 (or its antiperiodic analogue)
    pub product_defect: f64,
    /// modelled multiplicative B tail bound 10n⁻², reported and not applied
    pub b_tail_model: f64,
    pub a_sum: C64,
    pub a_prime_sum: C64,
    pub b: LogComplex64,
    pub b_prime: LogComplex64,
}

/// Half splitting of the unperturbed pair: 4πnt (periodic) or 2π(2n+1)(t−π).
pub fn split_term(n: i64, t: f64, family: Family) -> f64 {
    match family {
        Family::Periodic => 4.0 * PI * n as f64 * t,
        Family::Antiperiodic => 2.0 * PI * (2 * n + 1) as f64 * (t - PI),
    }
}

#[allow(non_snake_case)]
pub fn D_of(pot: &Potential, n: i64, lambda: C64, t: f64, family: Family) -> Result<DTerm> {
    let k = DEFAULT_K_MAX;
    let a = a_series(pot, n, lambda, t, SeriesKind::new(family, false), k)?;
    let ap = a_series(pot, n, lambda, t, SeriesKind::new(family, true), k)?;
    let b = b_series_leading(pot, n, lambda, t, SeriesKind::new(family, false))?;
    let bp = b_series_leading(pot, n, lambda, t, SeriesKind::new(family, true))?;
    let c = (a.value - ap.value) / 2.0;
    let shift = C64::new(split_term(n, t, family), 0.0) + c;
    let bb = b.log.unwrap().mul(&bp.log.unwrap());
    let d = shift * shift + bb.to_complex();
    let root = d.sqrt();
    let consts = asymptotic_constants(pot, n.max(1) as u32);
    let product = match family {
        Family::Periodic => consts.product(Family::Periodic),
        Family::Antiperiodic => asymptotic_constants(pot, n.max(0) as u32).product(Family::Antiperiodic),
    };
    // E₊E₋ = BB′; the smaller of the two comes from the product to avoid cancellation
    let (big, sign) = if (root + shift).norm() >= (root - shift).norm() { (root + shift, 1.0) } else { (root - shift, -1.0) };
    let small = if big.norm() == 0.0 { C64::new(0.0, 0.0) } else { bb.div(&LogComplex::from_complex(big)).to_complex() };
    let (ep, em) = if sign > 0.0 { (big, small) } else { (small, big) };
    let defect = if product.is_zero() {
        f64::NAN
    } else if big.norm() == 0.0 {
        1.0
    } else {
        (bb.div(&product).to_complex() - 1.0).norm()
    };
    Ok(DTerm {
        d_value: d,
        c_value: c,
        e_minus: em,
        e_plus: ep,
        s_branch: 1,
        product_defect: defect,
        b_tail_model: 10.0 / (n.max(1) as f64).powi(2),
        a_sum: a.value,
        a_prime_sum: ap.value,
        b: b.log.unwrap(),
        b_prime: bp.log.unwrap(),
    })
}

/// Fixed-point evaluation of the 2×2 relation; j = 1 takes −√D, j = 2 takes +√D.
pub fn asymptotic_lambda(pot: &Potential, n: i64, t: f64, j: u8, family: Family) -> Result<C64> {
    if !(j == 1 || j == 2) {
        return Err(Error::Validation(format!("branch j must be 1 or 2, got {j}")));
    }
    let sign = if j == 1 { -1.0 } else { 1.0 };
    let base = (2.0 * PI * n as f64 + t).powi(2);
    let split = split_term(n, t, family);
    let mut lambda = C64::new(base - split + sign * split.abs(), 0.0);
    for _ in 0..50 {
        let dt = D_of(pot, n, lambda, t, family)?;
        let next = C64::new(base - split, 0.0) + (dt.a_sum + dt.a_prime_sum) / 2.0 + dt.d_value.sqrt() * sign;
        let done = (next - lambda).norm() <= 1e-14 * next.norm().max(1.0);
        lambda = next;
        if done {
            break;
        }
    }
    Ok(lambda)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub c: f64,
    pub t_pred: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictedDegeneracy {
    pub n: i64,
    pub family: Family,
    /// offset from 0 (periodic) or π (antiperiodic); None when no real degeneracy is predicted
    pub t_pred: Option<f64>,
    pub log_t_pred: Option<f64>,
    /// phase of −β_nα_n (or the antiperiodic product) in (−π, π]
    pub product_phase: f64,
    pub sensitivity: Vec<Sensitivity>,
    pub outside_validity: bool,
}

/// Idealised prediction t = √Re(−βα)/(4πn), with the antiperiodic analogue
/// using 2π(2n+1); sensitivity to the unquantified c ∈ {0, 1, 10} attached.
pub fn predict_double(pot: &Potential, n: i64, family: Family) -> Result<PredictedDegeneracy> {
    let min_n = if family == Family::Periodic { 1 } else { 0 };
    if n < min_n {
        return Err(Error::Validation(format!("n = {n} below the family minimum {min_n}")));
    }
    let product = asymptotic_constants(pot, n as u32).product(family);
    let scale = match family {
        Family::Periodic => 4.0 * PI * n as f64,
        Family::Antiperiodic => 2.0 * PI * (2 * n + 1) as f64,
    };
    let neg = product.neg();
    let phase = neg.phase;
    let nf = n.max(1) as f64;
    let window = (3.0 / (nf * nf)).min(PI / 4.0);
    // −βα must sit near the positive axis: βα near phase π, with Re dominating Im
    let real_predicted = !product.is_zero() && phase.abs() <= window && phase.sin().abs() <= phase.cos();
    let log_re = neg.log_magnitude + phase.cos().ln();
    let t_of = |c: f64| -> Option<f64> {
        if !real_predicted {
            return None;
        }
        let num = 1.0 + c / (nf * nf) + 1.0 / (nf * nf * nf);
        let den = 1.0 - c / (nf * nf);
        (den > 0.0).then(|| (0.5 * (log_re + (num / den).ln()) - scale.ln()).exp())
    };
    let log_t = real_predicted.then(|| 0.5 * log_re - scale.ln());
    Ok(PredictedDegeneracy {
        n,
        family,
        t_pred: log_t.map(f64::exp),
        log_t_pred: log_t,
        product_phase: phase,
        sensitivity: [0.0, 1.0, 10.0].iter().map(|&c| Sensitivity { c, t_pred: t_of(c) }).collect(),
        outside_validity: n == 0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub n: i64,
    pub t: f64,
    pub formula_value: C64,
    pub engine_value: C64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub branch: u8,
}

/// Labels of the two engine bands paired with family index n.
pub fn paired_bands(n: i64, family: Family) -> (i64, i64) {
    match family {
        Family::Periodic => (-n, n),
        Family::Antiperiodic => (n, -n - 1),
    }
}

/// Formula vs tracked eigenvalues of the pair at each t; each engine value is
/// matched to the nearer branch.
pub fn compare_with_engine(pot: &Potential, n: i64, ts: &[f64], family: Family, m: usize) -> Result<Vec<ComparisonRow>> {
    let (l1, l2) = paired_bands(n, family);
    let set = floquet::track_curves(pot, ts, &[l1, l2], m)?;
    let mut rows = Vec::new();
    for (i, &t) in ts.iter().enumerate() {
        let f = [asymptotic_lambda(pot, n, t, 1, family)?, asymptotic_lambda(pot, n, t, 2, family)?];
        for label in [l1, l2] {
            let e = set.value(label, i);
            let j = if (f[0] - e).norm() <= (f[1] - e).norm() { 0 } else { 1 };
            let abs = (f[j] - e).norm();
            rows.push(ComparisonRow {
                n: label,
                t,
                formula_value: f[j],
                engine_value: e,
                abs_err: abs,
                rel_err: abs / e.norm().max(1.0),
                branch: j as u8 + 1,
            });
        }
    }
    Ok(rows)
}
