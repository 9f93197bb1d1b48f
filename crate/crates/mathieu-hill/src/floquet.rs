//! Fourier-basis truncation of H_t(a,b), eigen-decomposition with adjoint
//! partners, Bloch functions and band tracking over the quasimomentum.
//!
//! Row k of the truncated matrix reads (2πk+t)²c_k + a·c_{k+1} + b·c_{k−1} = λc_k.
//! For ab ≠ 0 the similarity D = diag(r^k), r = √(b/a), turns it into a complex
//! symmetric matrix S with both off-diagonals γ = a·r; right eigenvectors are
//! c = D s and adjoint eigenvectors c* = conj(D⁻¹ s). At t = 0 and t = π, S
//! commutes with the reflections k ↔ −k and k ↔ −k−1, and the even/odd sectors
//! are solved separately so that pairs split far below rounding stay resolved.

use num_complex::{Complex, Complex64 as C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::error::{Error, Result};
use crate::linalg::{self, Tri};
use crate::potential::{Family, MathieuPotential, Real};
use crate::Potential;

/// ρ in the pairing zones [0, ρ] and [π−ρ, π].
pub const RHO: f64 = 1.0 / (16.0 * PI);
/// Relative gap below which eigenvalues form a cluster.
pub const CLUSTER_GAP: f64 = 1e-7;
const SYMMETRY_TOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedOperator<T> {
    pub t: T,
    pub m: usize,
    /// (2πk+t)² for k = −M..M
    pub diag: Vec<T>,
    /// couples c_{k+1} into row k
    pub sup: Complex<T>,
    /// couples c_{k−1} into row k
    pub sub: Complex<T>,
}

impl<T: Real> TruncatedOperator<T> {
    pub fn dim(&self) -> usize {
        2 * self.m + 1
    }

    pub fn k_of(&self, i: usize) -> i64 {
        i as i64 - self.m as i64
    }

    pub fn index_of(&self, k: i64) -> Option<usize> {
        let i = k + self.m as i64;
        (0..self.dim() as i64).contains(&i).then_some(i as usize)
    }
}

impl TruncatedOperator<f64> {
    pub fn tri(&self) -> Tri {
        let n = self.dim();
        Tri {
            d: self.diag.iter().map(|&x| C64::new(x, 0.0)).collect(),
            lo: vec![self.sub; n - 1],
            up: vec![self.sup; n - 1],
        }
    }
}

/// Row k: (2πk+t)²c_k + a·c_{k+1} + b·c_{k−1}. t = −π is the same operator
/// as t = π and is assembled as such.
pub fn assemble<T: Real>(pot: &MathieuPotential<T>, t: T, m: usize) -> Result<TruncatedOperator<T>> {
    if m < 4 {
        return Err(Error::Validation(format!("truncation M = {m} < 4")));
    }
    if !t.is_finite() {
        return Err(Error::Validation("t must be finite".into()));
    }
    let t = if (t + T::PI()).abs() <= T::from_f64(SYMMETRY_TOL).unwrap() { T::PI() } else { t };
    let two_pi = T::PI() + T::PI();
    let diag = (-(m as i64)..=m as i64)
        .map(|k| {
            let x = two_pi * T::from_i64(k).unwrap() + t;
            x * x
        })
        .collect();
    Ok(TruncatedOperator { t, m, diag, sup: pot.a, sub: pot.b })
}

/// Eigen-decomposition of a truncated operator. `vectors` are right
/// eigenvectors, `adjoint_vectors` the matching eigenvectors of the adjoint
/// operator at the conjugate eigenvalue. Both are unit vectors indexed k = −M..M.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenSolution {
    pub t: f64,
    pub m: usize,
    pub lambdas: Vec<C64>,
    pub vectors: Vec<Vec<C64>>,
    pub adjoint_vectors: Vec<Vec<C64>>,
    pub residuals: Vec<f64>,
    /// cluster whose geometric multiplicity is below its size
    pub deficiency_flags: Vec<bool>,
    /// cluster in which eigenvectors are not individually determined
    pub clustered: Vec<bool>,
}

impl EigenSolution {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Index of the eigenvalue closest to z.
    pub fn nearest(&self, z: C64) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, l) in self.lambdas.iter().enumerate() {
            let d = (l - z).norm();
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    pub fn is_simple(&self, i: usize) -> bool {
        !self.deficiency_flags[i] && !self.clustered[i]
    }

    /// d = (Ψ, Ψ*) = Σ c_k conj(c*_k).
    pub fn projection(&self, i: usize) -> C64 {
        linalg::inner(&self.vectors[i], &self.adjoint_vectors[i])
    }
}

fn scale_of(z: C64) -> f64 {
    z.norm().max(1.0)
}

/// Groups indices of sorted eigenvalues into clusters; `sector` keeps
/// symmetry-resolved eigenvalues apart.
fn clusters(lambdas: &[C64], sector: &[u8]) -> Vec<usize> {
    let n = lambdas.len();
    let mut id: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if sector[i] == sector[j] && (lambdas[i] - lambdas[j]).norm() < CLUSTER_GAP * scale_of(lambdas[i]) {
                let (a, b) = (id[i].min(id[j]), id[i].max(id[j]));
                for x in id.iter_mut() {
                    if *x == b {
                        *x = a;
                    }
                }
            }
        }
    }
    id
}

fn sort_order(l: &[C64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..l.len()).collect();
    idx.sort_by(|&i, &j| l[i].re.total_cmp(&l[j].re).then(l[i].im.total_cmp(&l[j].im)));
    idx
}

struct RawPair {
    lambda: C64,
    right: Vec<C64>,
    left: Vec<C64>,
    sector: u8,
}

fn finish(op: &TruncatedOperator<f64>, mut raw: Vec<RawPair>, exact: bool, diagonal: bool) -> EigenSolution {
    let order = sort_order(&raw.iter().map(|p| p.lambda).collect::<Vec<_>>());
    let mut sorted = Vec::with_capacity(raw.len());
    let mut slots: Vec<Option<RawPair>> = raw.drain(..).map(Some).collect();
    for i in order {
        sorted.push(slots[i].take().unwrap());
    }
    let (tri, len) = effective(op);
    let lambdas: Vec<C64> = sorted.iter().map(|p| p.lambda).collect();
    let sectors: Vec<u8> = sorted.iter().map(|p| p.sector).collect();
    let cid = clusters(&lambdas, &sectors);
    let n = lambdas.len();
    let mut size = vec![0usize; n];
    for &c in &cid {
        size[c] += 1;
    }
    // A tridiagonal matrix with one full nonzero off-diagonal has rank ≥ N−1 at
    // every shift, so each distinct eigenvalue carries a single eigenvector.
    let irreducible = op.sub != C64::new(0.0, 0.0) || op.sup != C64::new(0.0, 0.0);
    let mut deficiency = vec![false; n];
    let mut clustered = vec![false; n];
    for i in 0..n {
        if size[cid[i]] > 1 {
            if diagonal {
                continue;
            }
            deficiency[i] = irreducible;
            // exactly repeated triangular eigenvalues keep their unique eigenvector
            clustered[i] = !exact;
        }
    }
    let residuals = sorted.iter().map(|p| linalg::residual(&tri, p.lambda, &p.right[..len])).collect();
    EigenSolution {
        t: op.t,
        m: op.m,
        lambdas,
        vectors: sorted.iter().map(|p| p.right.clone()).collect(),
        adjoint_vectors: sorted.into_iter().map(|p| p.left).collect(),
        residuals,
        deficiency_flags: deficiency,
        clustered,
    }
}

fn unit(n: usize, i: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); n];
    v[i] = C64::new(1.0, 0.0);
    v
}

/// Eigenvector of a bidiagonal matrix at the exact diagonal value d[j].
fn bidiagonal_vector(d: &[f64], off: C64, j: usize, lower: bool) -> Vec<C64> {
    let n = d.len();
    let mut v = vec![C64::new(0.0, 0.0); n];
    if lower {
        // nonzero from the highest index carrying the same diagonal value
        let s = (j..n).rev().find(|&i| d[i] == d[j]).unwrap();
        v[s] = C64::new(1.0, 0.0);
        for i in s + 1..n {
            v[i] = -off * v[i - 1] / (d[i] - d[j]);
        }
    } else {
        let s = (0..=j).find(|&i| d[i] == d[j]).unwrap();
        v[s] = C64::new(1.0, 0.0);
        for i in (0..s).rev() {
            v[i] = -off * v[i + 1] / (d[i] - d[j]);
        }
    }
    linalg::normalize(&mut v);
    v
}

fn triangular(op: &TruncatedOperator<f64>) -> Vec<RawPair> {
    let n = op.dim();
    let lower = op.sup == C64::new(0.0, 0.0);
    let (off, off_adj) = if lower { (op.sub, op.sub.conj()) } else { (op.sup, op.sup.conj()) };
    (0..n)
        .map(|j| RawPair {
            lambda: C64::new(op.diag[j], 0.0),
            right: bidiagonal_vector(&op.diag, off, j, lower),
            // adjoint has the off-diagonal on the other side
            left: bidiagonal_vector(&op.diag, off_adj, j, !lower),
            sector: 0,
        })
        .collect()
}

/// Eigenpairs of a complex symmetric tridiagonal block.
fn symmetric_block(block: &Tri) -> Result<Vec<(C64, Vec<C64>)>> {
    let ev = match linalg::symmetric_tridiagonal_eigenvalues(&block.d, &block.lo) {
        Some(ev) => ev,
        None => linalg::schur_eigenvalues(block)?,
    };
    let n = block.n();
    // real start vector keeps real symmetric blocks real
    let start: Vec<C64> = (0..n).map(|i| C64::new(1.0 + 0.1 * ((i * 7) % 5) as f64, 0.0)).collect();
    Ok(ev
        .into_iter()
        .map(|l| {
            let (v, _) = linalg::inverse_iteration(block, l, &start);
            (l, v)
        })
        .collect())
}

fn sym_tri(d: Vec<f64>, off: Vec<C64>) -> Tri {
    Tri { d: d.into_iter().map(|x| C64::new(x, 0.0)).collect(), lo: off.clone(), up: off }
}

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    None,
    Zero,
    Pi,
}

fn symmetry_of(t: f64) -> Symmetry {
    if t.abs() <= SYMMETRY_TOL {
        Symmetry::Zero
    } else if (t.abs() - PI).abs() <= SYMMETRY_TOL {
        Symmetry::Pi
    } else {
        Symmetry::None
    }
}

/// Matrix the eigenvectors solve: at t = π with ab ≠ 0 the unpaired k = M
/// row and column are dropped.
fn effective(op: &TruncatedOperator<f64>) -> (Tri, usize) {
    let tri = op.tri();
    let zero = C64::new(0.0, 0.0);
    if op.sup != zero && op.sub != zero && symmetry_of(op.t) == Symmetry::Pi {
        let n = tri.n() - 1;
        let t = Tri { d: tri.d[..n].to_vec(), lo: tri.lo[..n - 1].to_vec(), up: tri.up[..n - 1].to_vec() };
        (t, n)
    } else {
        let n = tri.n();
        (tri, n)
    }
}

/// Inverse iteration on the unsymmetrized matrix for vectors whose residual
/// suffers from the r^k rescaling.
fn refine(op: &TruncatedOperator<f64>, pairs: &mut [RawPair]) {
    let (tri, len) = effective(op);
    let adj = tri.adjoint();
    let tol = 1e-11 * tri.inf_norm();
    for p in pairs.iter_mut() {
        if linalg::residual(&tri, p.lambda, &p.right[..len]) > tol {
            let (v, _) = linalg::inverse_iteration(&tri, p.lambda, &p.right[..len]);
            p.right[..len].copy_from_slice(&v);
        }
        if linalg::residual(&adj, p.lambda.conj(), &p.left[..len]) > tol {
            let (v, _) = linalg::inverse_iteration(&adj, p.lambda.conj(), &p.left[..len]);
            p.left[..len].copy_from_slice(&v);
        }
    }
}

fn symmetrized(op: &TruncatedOperator<f64>) -> Result<Vec<RawPair>> {
    let (a, b) = (op.sup, op.sub);
    let r = (b / a).sqrt();
    let gamma = a * r;
    let m = op.m as i64;
    let n = op.dim();
    // s (k-indexed, length 2M+1) with its sector tag
    let mut states: Vec<(C64, Vec<C64>, u8)> = Vec::new();
    let d = &op.diag;
    let at = |k: i64| d[(k + m) as usize];
    match symmetry_of(op.t) {
        Symmetry::None => {
            let blk = sym_tri(d.clone(), vec![gamma; n - 1]);
            for (l, s) in symmetric_block(&blk)? {
                states.push((l, s, 0));
            }
        }
        Symmetry::Zero => {
            let mut off = vec![gamma; op.m];
            off[0] = gamma * SQRT_2;
            let even = sym_tri((0..=m).map(at).collect(), off);
            for (l, x) in symmetric_block(&even)? {
                let mut s = vec![C64::new(0.0, 0.0); n];
                s[op.m] = x[0];
                for j in 1..=op.m {
                    s[op.m + j] = x[j] * FRAC_1_SQRT_2;
                    s[op.m - j] = x[j] * FRAC_1_SQRT_2;
                }
                states.push((l, s, 1));
            }
            let odd = sym_tri((1..=m).map(at).collect(), vec![gamma; op.m - 1]);
            for (l, x) in symmetric_block(&odd)? {
                let mut s = vec![C64::new(0.0, 0.0); n];
                for j in 1..=op.m {
                    s[op.m + j] = x[j - 1] * FRAC_1_SQRT_2;
                    s[op.m - j] = -x[j - 1] * FRAC_1_SQRT_2;
                }
                states.push((l, s, 2));
            }
        }
        Symmetry::Pi => {
            // pairs (k, −k−1) for k = 0..M−1; the unpaired k = M is dropped
            let base: Vec<f64> = (0..m).map(at).collect();
            for (sign, tag) in [(1.0, 1u8), (-1.0, 2u8)] {
                let mut dd: Vec<C64> = base.iter().map(|&x| C64::new(x, 0.0)).collect();
                dd[0] += gamma * sign;
                let blk = Tri { d: dd, lo: vec![gamma; op.m - 1], up: vec![gamma; op.m - 1] };
                for (l, x) in symmetric_block(&blk)? {
                    let mut s = vec![C64::new(0.0, 0.0); n];
                    for k in 0..op.m {
                        s[op.m + k] = x[k] * FRAC_1_SQRT_2;
                        s[op.m - k - 1] = x[k] * FRAC_1_SQRT_2 * sign;
                    }
                    states.push((l, s, tag));
                }
            }
        }
    }
    let rk: Vec<C64> = (-m..=m).map(|k| r.powi(k as i32)).collect();
    let mut pairs: Vec<RawPair> = states
        .into_iter()
        .map(|(l, s, tag)| {
            let mut right: Vec<C64> = s.iter().zip(&rk).map(|(x, w)| x * w).collect();
            let mut left: Vec<C64> = s.iter().zip(&rk).map(|(x, w)| (x / w).conj()).collect();
            linalg::normalize(&mut right);
            linalg::normalize(&mut left);
            RawPair { lambda: l, right, left, sector: tag }
        })
        .collect();
    refine(op, &mut pairs);
    Ok(pairs)
}

/// Eigen-decomposition with residual-certified vectors and cluster analysis.
pub fn eig(op: &TruncatedOperator<f64>) -> Result<EigenSolution> {
    let zero = C64::new(0.0, 0.0);
    let n = op.dim();
    if op.sup == zero && op.sub == zero {
        let raw = (0..n)
            .map(|j| RawPair { lambda: C64::new(op.diag[j], 0.0), right: unit(n, j), left: unit(n, j), sector: 0 })
            .collect();
        return Ok(finish(op, raw, true, true));
    }
    if op.sup == zero || op.sub == zero {
        return Ok(finish(op, triangular(op), true, false));
    }
    let sol = finish(op, symmetrized(op)?, false, false);
    let norm = effective(op).0.inf_norm();
    for (i, r) in sol.residuals.iter().enumerate() {
        if !(*r <= 1e-8 * norm) {
            return Err(Error::EigenNonconvergence { near: format!("{}", sol.lambdas[i]) });
        }
    }
    Ok(sol)
}

/// Eigen-decomposition of the adjoint operator H_t(conj b, conj a).
pub fn adjoint_solution(pot: &Potential, t: f64, m: usize) -> Result<EigenSolution> {
    eig(&assemble(&pot.adjoint(), t, m)?)
}

/// Eigenvalues only (for tracking).
pub fn eigenvalues(pot: &Potential, t: f64, m: usize) -> Result<Vec<C64>> {
    let op = assemble(pot, t, m)?;
    let zero = C64::new(0.0, 0.0);
    let mut l: Vec<C64> = if op.sup == zero || op.sub == zero {
        op.diag.iter().map(|&x| C64::new(x, 0.0)).collect()
    } else {
        let r = (op.sub / op.sup).sqrt();
        let gamma = op.sup * r;
        linalg::schur_eigenvalues(&sym_tri(op.diag.clone(), vec![gamma; op.dim() - 1]))?
    };
    l.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(l)
}

/// M(n_max) = max(2n_max+16, 32), doubled until eigenvalues up to band n_max
/// move by less than 1e−9(1+|λ|) when M grows by 10.
pub fn truncation_size(pot: &Potential, n_max: usize) -> Result<usize> {
    let mut m = (2 * n_max + 16).max(32);
    let cap = (2.0 * PI * n_max as f64 + PI + 1.0).powi(2);
    loop {
        let mut stable = true;
        for t in [0.3, PI / 2.0] {
            let l1 = eigenvalues(pot, t, m)?;
            let l2 = eigenvalues(pot, t, m + 10)?;
            for z in l1.iter().filter(|z| z.norm() <= cap) {
                let w = l2.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
                if w >= 1e-9 * (1.0 + z.norm()) {
                    stable = false;
                }
            }
        }
        if stable || m >= 1024 {
            return Ok(m);
        }
        m *= 2;
    }
}

/// Normalized Bloch eigenfunction in Fourier coefficients.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlochFunction {
    pub n: i64,
    pub t: f64,
    pub lambda: C64,
    /// k_min = −M; coeffs[i] is the coefficient of e^{i(2π(k_min+i)+t)x}
    pub k_min: i64,
    pub coeffs: Vec<C64>,
    pub u: C64,
    pub v: C64,
    pub tail_norm: f64,
}

impl BlochFunction {
    pub fn from_vector(n: i64, t: f64, lambda: C64, k_min: i64, coeffs: Vec<C64>, family: Family) -> Self {
        let get = |k: i64| {
            let i = k - k_min;
            if i >= 0 && (i as usize) < coeffs.len() {
                coeffs[i as usize]
            } else {
                C64::new(0.0, 0.0)
            }
        };
        let partner = match family {
            Family::Periodic => -n,
            Family::Antiperiodic => -n - 1,
        };
        let (u, v) = (get(n), if partner == n { C64::new(0.0, 0.0) } else { get(partner) });
        let tail: f64 = coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let k = *i as i64 + k_min;
                k != n && k != partner
            })
            .map(|(_, z)| z.norm_sqr())
            .sum();
        Self { n, t, lambda, k_min, coeffs, u, v, tail_norm: tail.sqrt() }
    }

    pub fn coefficient(&self, k: i64) -> C64 {
        let i = k - self.k_min;
        if i >= 0 && (i as usize) < self.coeffs.len() {
            self.coeffs[i as usize]
        } else {
            C64::new(0.0, 0.0)
        }
    }

    /// Ψ(x) = Σ c_k e^{i(2πk+t)x}.
    pub fn eval(&self, x: f64) -> C64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = (i as i64 + self.k_min) as f64;
                c * C64::from_polar(1.0, (2.0 * PI * k + self.t) * x)
            })
            .sum()
    }
}

/// Unperturbed value (2πn+t)².
pub fn free_value(n: i64, t: f64) -> f64 {
    (2.0 * PI * n as f64 + t).powi(2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairLabel {
    pub n: i64,
    pub family: Family,
    /// labels of (λ_{n,1}, λ_{n,2})
    pub first: i64,
    pub second: i64,
    pub t_lo: f64,
    pub t_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ambiguity {
    pub t: f64,
    pub n: i64,
    pub chosen: C64,
    pub alternative: C64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlochCurveSet {
    pub m: usize,
    pub t_grid: Vec<f64>,
    pub bands: Vec<i64>,
    /// band n → λ_n(t) on t_grid
    pub curves: BTreeMap<i64, Vec<C64>>,
    /// band n → index into the eigen solution at |t| (for vector lookup)
    pub pair_labels: Vec<PairLabel>,
    pub ambiguities: Vec<Ambiguity>,
}

impl BlochCurveSet {
    pub fn value(&self, n: i64, i: usize) -> C64 {
        self.curves[&n][i]
    }
}

/// Pairing bookkeeping near t = 0 and t = π for the bands in range.
pub fn pair_labels(bands: &[i64]) -> Vec<PairLabel> {
    let mut out = Vec::new();
    for &n in bands.iter().filter(|&&n| n >= 0) {
        if n >= 1 && bands.contains(&-n) {
            out.push(PairLabel { n, family: Family::Periodic, first: -n, second: n, t_lo: 0.0, t_hi: RHO });
        }
        if bands.contains(&(-n - 1)) {
            out.push(PairLabel { n, family: Family::Antiperiodic, first: n, second: -n - 1, t_lo: PI - RHO, t_hi: PI });
        }
    }
    out
}

/// Greedy assignment of predicted band values to candidates (4-candidate window).
/// Returns per-band (index, d1, d2) with d2 the distance to the best rejected candidate.
fn assign(pred: &[C64], cand: &[C64]) -> Vec<(usize, f64, f64)> {
    let mut pairs = Vec::new();
    for (b, p) in pred.iter().enumerate() {
        let mut near: Vec<(f64, usize)> = cand.iter().enumerate().map(|(i, c)| ((c - p).norm(), i)).collect();
        near.sort_by(|x, y| x.0.total_cmp(&y.0));
        for &(d, i) in near.iter().take(4) {
            pairs.push((d, b, i));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out = vec![(usize::MAX, f64::INFINITY, f64::INFINITY); pred.len()];
    let mut used = vec![false; cand.len()];
    for &(d, b, i) in &pairs {
        if out[b].0 == usize::MAX && !used[i] {
            out[b] = (i, d, f64::INFINITY);
            used[i] = true;
        }
    }
    for (b, p) in pred.iter().enumerate() {
        let (i, _, _) = out[b];
        if i == usize::MAX {
            continue;
        }
        // runner-up among candidates that are genuinely different values
        let d2 = cand
            .iter()
            .enumerate()
            .filter(|(j, c)| *j != i && (*c - cand[i]).norm() > CLUSTER_GAP * scale_of(cand[i]))
            .map(|(_, c)| (c - p).norm())
            .fold(f64::INFINITY, f64::min);
        out[b].2 = d2;
    }
    out
}

struct Tracker<'a> {
    pot: &'a Potential,
    m: usize,
    ambiguities: Vec<Ambiguity>,
    bands: Vec<i64>,
}

impl Tracker<'_> {
    /// Continues band values from `from` (at t0, with previous value `prev`) to t1.
    fn step(&mut self, t0: f64, from: &[C64], prev: Option<&[C64]>, t1: f64, depth: usize) -> Result<Vec<C64>> {
        let cand = eigenvalues(self.pot, t1, self.m)?;
        let pred: Vec<C64> = match prev {
            Some(p) => from.iter().zip(p).map(|(a, b)| a + (a - b) * 0.5).collect(),
            None => from.to_vec(),
        };
        let asg = assign(&pred, &cand);
        let tight = asg.iter().any(|&(_, d1, d2)| d1 > 0.5 * d2);
        if tight && depth < 14 && (t1 - t0).abs() > 1e-12 {
            let mid = 0.5 * (t0 + t1);
            let at_mid = self.step(t0, from, None, mid, depth + 1)?;
            return self.step(mid, &at_mid, Some(from), t1, depth + 1);
        }
        let mut out = Vec::with_capacity(from.len());
        for (b, &(i, d1, d2)) in asg.iter().enumerate() {
            if i == usize::MAX {
                return Err(Error::Band { n: self.bands[b], reason: "no candidate eigenvalue".into() });
            }
            if tight && d2 - d1 <= 1e-9 * scale_of(cand[i]) {
                let alt = cand
                    .iter()
                    .filter(|c| (*c - cand[i]).norm() > CLUSTER_GAP * scale_of(cand[i]))
                    .min_by(|x, y| (*x - pred[b]).norm().total_cmp(&(*y - pred[b]).norm()))
                    .copied()
                    .unwrap_or(cand[i]);
                self.ambiguities.push(Ambiguity { t: t1, n: self.bands[b], chosen: cand[i], alternative: alt });
            }
            out.push(cand[i]);
        }
        Ok(out)
    }
}

/// Band curves λ_n(t), labelled at t = π/2 by nearest (2πn+π/2)² and continued
/// by matching; values at negative t follow λ_n(−t) = λ_n(t).
pub fn track_curves(pot: &Potential, t_grid: &[f64], bands: &[i64], m: usize) -> Result<BlochCurveSet> {
    if t_grid.iter().any(|t| !(t.abs() <= PI + 1e-12)) {
        return Err(Error::Validation("t_grid must lie in [−π, π]".into()));
    }
    let anchor = PI / 2.0;
    let cand = eigenvalues(pot, anchor, m)?;
    let pred: Vec<C64> = bands.iter().map(|&n| C64::new(free_value(n, anchor), 0.0)).collect();
    let start: Vec<C64> = assign(&pred, &cand).iter().map(|&(i, _, _)| cand[i]).collect();

    let mut taus: Vec<f64> = t_grid.iter().map(|t| t.abs().min(PI)).collect();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    let (below, above): (Vec<f64>, Vec<f64>) = taus.iter().partition(|&&t| t < anchor);

    let mut tracker = Tracker { pot, m, ambiguities: Vec::new(), bands: bands.to_vec() };
    let mut table: BTreeMap<u64, Vec<C64>> = BTreeMap::new();
    table.insert(anchor.to_bits(), start.clone());
    for dir in [above, below.into_iter().rev().collect::<Vec<_>>()] {
        let (mut t0, mut cur, mut prev): (f64, Vec<C64>, Option<Vec<C64>>) = (anchor, start.clone(), None);
        for t1 in dir {
            // keep steps short so matching stays local
            let nsub = ((t1 - t0).abs() / 0.05).ceil().max(1.0) as usize;
            for s in 1..=nsub {
                let tt = t0 + (t1 - t0) * s as f64 / nsub as f64;
                let next = tracker.step(t0 + (t1 - t0) * (s - 1) as f64 / nsub as f64, &cur, prev.as_deref(), tt, 0)?;
                prev = Some(std::mem::replace(&mut cur, next));
            }
            t0 = t1;
            table.insert(t1.to_bits(), cur.clone());
        }
    }
    let mut curves: BTreeMap<i64, Vec<C64>> = bands.iter().map(|&n| (n, Vec::with_capacity(t_grid.len()))).collect();
    for t in t_grid {
        let row = &table[&t.abs().min(PI).to_bits()];
        for (b, n) in bands.iter().enumerate() {
            curves.get_mut(n).unwrap().push(row[b]);
        }
    }
    Ok(BlochCurveSet {
        m,
        t_grid: t_grid.to_vec(),
        bands: bands.to_vec(),
        curves,
        pair_labels: pair_labels(bands),
        ambiguities: tracker.ambiguities,
    })
}

/// λ_n(t) for one band at one t.
pub fn band_value(pot: &Potential, n: i64, t: f64, m: usize) -> Result<C64> {
    let set = track_curves(pot, &[t], &[n], m)?;
    Ok(set.value(n, 0))
}

/// Eigen-solutions for every grid point in parallel.
pub fn solutions_on(pot: &Potential, t_grid: &[f64], m: usize) -> Result<Vec<EigenSolution>> {
    t_grid.par_iter().map(|&t| eig(&assemble(pot, t, m)?)).collect()
}

/// Index of band value `lambda` within a solution (for vectors at ±t).
pub fn locate(sol: &EigenSolution, lambda: C64) -> usize {
    sol.nearest(lambda)
}

/// Bloch function of band n at t and its adjoint partner.
pub fn bloch_function(
    pot: &Potential,
    t: f64,
    n: i64,
    family: Family,
    m: usize,
) -> Result<(BlochFunction, BlochFunction)> {
    let lambda = band_value(pot, n, t, m)?;
    let sol = eig(&assemble(pot, t, m)?)?;
    let i = locate(&sol, lambda);
    bloch_pair(&sol, i, n, family)
}

/// Bloch pair from an already computed solution.
pub fn bloch_pair(sol: &EigenSolution, i: usize, n: i64, family: Family) -> Result<(BlochFunction, BlochFunction)> {
    if !sol.is_simple(i) {
        return Err(Error::MultipleEigenvalue { lambda: format!("{}", sol.lambdas[i]) });
    }
    let k_min = -(sol.m as i64);
    let psi = BlochFunction::from_vector(n, sol.t, sol.lambdas[i], k_min, sol.vectors[i].clone(), family);
    let adj = BlochFunction::from_vector(n, sol.t, sol.lambdas[i].conj(), k_min, sol.adjoint_vectors[i].clone(), family);
    Ok((psi, adj))
}

/// Uniform grid of `points` samples covering (−π, π].
pub fn uniform_grid(points: usize) -> Vec<f64> {
    (1..=points).map(|j| -PI + 2.0 * PI * j as f64 / points as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pot(a: (f64, f64), b: (f64, f64)) -> Potential {
        Potential::new(C64::new(a.0, a.1), C64::new(b.0, b.1)).unwrap()
    }

    #[test]
    fn assemble_free_small() {
        let op = assemble(&pot((0.0, 0.0), (0.0, 0.0)), 0.5, 4).unwrap();
        assert_eq!(op.dim(), 9);
        assert!((op.diag[3] - (-2.0 * PI + 0.5f64).powi(2)).abs() < 1e-12);
        assert!((op.diag[4] - 0.25).abs() < 1e-15);
        assert!(assemble(&pot((0.0, 0.0), (0.0, 0.0)), 0.5, 3).is_err());
        let op = assemble(&pot((3.0, 0.0), (5.0, 0.0)), 0.1, 4).unwrap();
        let d = op.tri().dense();
        assert_eq!(d[(2, 3)], C64::new(3.0, 0.0));
        assert_eq!(d[(3, 2)], C64::new(5.0, 0.0));
    }

    #[test]
    fn free_eigenvalues_are_exact() {
        let sol = eig(&assemble(&pot((0.0, 0.0), (0.0, 0.0)), 0.7, 8).unwrap()).unwrap();
        for k in -8..=8 {
            let z = C64::new(free_value(k, 0.7), 0.0);
            assert_eq!(sol.lambdas[sol.nearest(z)], z);
        }
        assert!(sol.residuals.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn gasymov_jordan_pairs() {
        let sol = eig(&assemble(&pot((0.0, 0.0), (1.0, 0.0)), 0.0, 16).unwrap()).unwrap();
        for n in 1..=6 {
            let z = C64::new(free_value(n, 0.0), 0.0);
            let hits: Vec<usize> = (0..sol.len()).filter(|&i| sol.lambdas[i] == z).collect();
            assert_eq!(hits.len(), 2);
            assert!(hits.iter().all(|&i| sol.deficiency_flags[i]));
            // both copies share the single eigenvector
            let d = linalg::inner(&sol.vectors[hits[0]], &sol.vectors[hits[1]]).norm();
            assert!((d - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_spectrum_at_pi() {
        let p = pot((1.0, 0.0), (1.0, 0.0));
        let sol = eig(&assemble(&p, PI, 20).unwrap()).unwrap();
        let l = eigenvalues(&p, PI, 20).unwrap();
        // sector split agrees with the full matrix below the truncation edge
        for z in sol.lambdas.iter().filter(|z| z.re < 2000.0) {
            let w = l.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
            assert!(w < 1e-8, "{z} off by {w}");
        }
    }

    #[test]
    fn adjoint_eigenvalues_are_conjugate() {
        let p = pot((1.0, 0.0), (2.0, 0.0));
        let t = 0.4;
        let a = eig(&assemble(&p, t, 24).unwrap()).unwrap();
        let b = adjoint_solution(&p, t, 24).unwrap();
        for z in &a.lambdas {
            let w = b.lambdas[b.nearest(z.conj())];
            assert!((w - z.conj()).norm() < 1e-9 * z.norm().max(1.0));
        }
    }

    #[test]
    fn residuals_and_unit_vectors() {
        let p = pot((1.0, 0.5), (-0.3, 2.0));
        let sol = eig(&assemble(&p, 1.1, 32).unwrap()).unwrap();
        let norm = assemble(&p, 1.1, 32).unwrap().tri().inf_norm();
        for i in 0..sol.len() {
            assert!(sol.residuals[i] <= 1e-8 * norm);
            assert!((linalg::norm2(&sol.vectors[i]) - 1.0).abs() < 1e-12);
            assert!((linalg::norm2(&sol.adjoint_vectors[i]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn free_curves() {
        let p = pot((0.0, 0.0), (0.0, 0.0));
        let grid = uniform_grid(64);
        let set = track_curves(&p, &grid, &[-3, -2, -1, 0, 1, 2, 3], 32).unwrap();
        for (&n, c) in &set.curves {
            for (t, z) in grid.iter().zip(c) {
                assert!((z.re - free_value(n, t.abs())).abs() < 1e-10 * (1.0 + z.re));
            }
        }
    }

    #[test]
    fn bloch_function_free() {
        let (psi, adj) = bloch_function(&pot((0.0, 0.0), (0.0, 0.0)), 0.3, 2, Family::Periodic, 16).unwrap();
        assert_eq!(psi.u, C64::new(1.0, 0.0));
        assert_eq!(psi.tail_norm, 0.0);
        assert_eq!(adj.u, C64::new(1.0, 0.0));
    }
}
