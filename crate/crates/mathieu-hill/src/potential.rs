//! Two-term potential q(x) = a e^{-2πix} + b e^{2πix}, log-scale constants
//! and the Diophantine checks on α = arg(ab)/π.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Scalar used by the generic parts of the crate.
pub trait Real: Float + FloatConst + FromPrimitive + fmt::Debug + Send + Sync + 'static {}
impl Real for f32 {}
impl Real for f64 {}

fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).unwrap()
}

/// Wraps an angle into (−π, π].
pub fn wrap_phase<T: Real>(x: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut y = x % two_pi;
    if y <= -T::PI() {
        y = y + two_pi;
    } else if y > T::PI() {
        y = y - two_pi;
    }
    y
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MathieuPotential<T> {
    pub a: Complex<T>,
    pub b: Complex<T>,
}

impl<T: Real> MathieuPotential<T> {
    pub fn new(a: Complex<T>, b: Complex<T>) -> Result<Self> {
        let ok = |z: Complex<T>| z.re.is_finite() && z.im.is_finite();
        if !ok(a) || !ok(b) {
            return Err(Error::Validation("potential amplitudes must be finite".into()));
        }
        Ok(Self { a, b })
    }

    pub fn real(a: T, b: T) -> Self {
        Self { a: Complex::new(a, T::zero()), b: Complex::new(b, T::zero()) }
    }

    pub fn product(&self) -> Complex<T> {
        self.a * self.b
    }

    pub fn is_free(&self) -> bool {
        self.a == Complex::new(T::zero(), T::zero()) && self.b == Complex::new(T::zero(), T::zero())
    }

    /// ab = 0: one amplitude vanishes (Gasymov class).
    pub fn is_degenerate_product(&self) -> bool {
        let z = Complex::new(T::zero(), T::zero());
        self.a == z || self.b == z
    }

    pub fn modulus_equal(&self) -> bool {
        let (x, y) = (self.a.norm(), self.b.norm());
        (x - y).abs() <= lit::<T>(1e-12) * x.max(y).max(T::one())
    }

    /// b = conj(a) makes the operator self-adjoint.
    pub fn is_self_adjoint(&self) -> bool {
        let d = self.b - self.a.conj();
        d.norm() <= lit::<T>(1e-12) * self.a.norm().max(T::one())
    }

    /// Potential of the adjoint operator: (a, b) → (conj b, conj a).
    pub fn adjoint(&self) -> Self {
        Self { a: self.b.conj(), b: self.a.conj() }
    }

    /// Translation x → x + c: (a e^{-2πic}, b e^{2πic}).
    pub fn translated(&self, c: T) -> Self {
        let w = Complex::from_polar(T::one(), lit::<T>(2.0) * T::PI() * c);
        Self { a: self.a * w.conj(), b: self.b * w }
    }

    /// q(x).
    pub fn eval(&self, x: T) -> Complex<T> {
        let w = Complex::from_polar(T::one(), lit::<T>(2.0) * T::PI() * x);
        self.a * w.conj() + self.b * w
    }

    /// Fourier coefficient q_k = (q, e^{2πikx}).
    pub fn fourier(&self, k: i64) -> Complex<T> {
        match k {
            -1 => self.a,
            1 => self.b,
            _ => Complex::new(T::zero(), T::zero()),
        }
    }
}

/// Complex number kept as (ln|z|, arg z).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogComplex<T> {
    pub log_magnitude: T,
    pub phase: T,
}

impl<T: Real> LogComplex<T> {
    pub fn zero() -> Self {
        Self { log_magnitude: T::neg_infinity(), phase: T::zero() }
    }

    pub fn one() -> Self {
        Self { log_magnitude: T::zero(), phase: T::zero() }
    }

    pub fn new(log_magnitude: T, phase: T) -> Self {
        if log_magnitude == T::neg_infinity() {
            return Self::zero();
        }
        Self { log_magnitude, phase: wrap_phase(phase) }
    }

    pub fn from_complex(z: Complex<T>) -> Self {
        let r = z.norm();
        if r == T::zero() {
            Self::zero()
        } else {
            Self { log_magnitude: r.ln(), phase: z.arg() }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_magnitude == T::neg_infinity()
    }

    pub fn to_complex(&self) -> Complex<T> {
        if self.is_zero() {
            return Complex::new(T::zero(), T::zero());
        }
        Complex::from_polar(self.log_magnitude.exp(), self.phase)
    }

    pub fn abs(&self) -> T {
        self.log_magnitude.exp()
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        Self::new(self.log_magnitude + o.log_magnitude, self.phase + o.phase)
    }

    pub fn div(&self, o: &Self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Self::new(self.log_magnitude - o.log_magnitude, self.phase - o.phase)
    }

    pub fn powi(&self, k: i32) -> Self {
        if self.is_zero() {
            return if k == 0 { Self::one() } else { Self::zero() };
        }
        let kk = T::from_i32(k).unwrap();
        Self::new(kk * self.log_magnitude, kk * self.phase)
    }

    /// Principal square root.
    pub fn sqrt(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let h = lit::<T>(0.5);
        Self::new(h * self.log_magnitude, h * self.phase)
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Self::new(self.log_magnitude, self.phase + T::PI())
    }

    pub fn magnitude_only(&self) -> Self {
        if self.is_zero() {
            Self::zero()
        } else {
            Self { log_magnitude: self.log_magnitude, phase: T::zero() }
        }
    }
}

pub fn ln_factorial(k: u32) -> f64 {
    statrs::function::factorial::ln_factorial(k as u64)
}

/// Family of 2-periodic eigenvalues: t = 0 (periodic) or t = π (antiperiodic).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Periodic,
    Antiperiodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConstants<T> {
    pub n: u32,
    /// arg(ab)/π, absent when ab = 0.
    pub alpha_exponent: Option<T>,
    pub beta_n: LogComplex<T>,
    pub alpha_n: LogComplex<T>,
    pub tilde_beta_n: LogComplex<T>,
    pub tilde_alpha_n: LogComplex<T>,
    pub epsilon_n: LogComplex<T>,
}

impl<T: Real> AsymptoticConstants<T> {
    pub fn product(&self, family: Family) -> LogComplex<T> {
        match family {
            Family::Periodic => self.beta_n.mul(&self.alpha_n),
            Family::Antiperiodic => self.tilde_beta_n.mul(&self.tilde_alpha_n),
        }
    }
}

/// α = arg(ab)/π in (−1, 1].
pub fn alpha_of<T: Real>(pot: &MathieuPotential<T>) -> Result<T> {
    if pot.is_degenerate_product() {
        return Err(Error::DegenerateProduct);
    }
    let z = pot.product();
    // arg returns [−π, π]; map −π to π
    let mut th = z.im.atan2(z.re);
    if th <= -T::PI() {
        th = T::PI();
    }
    Ok(th / T::PI())
}

/// z^e / ((2π)^p · f!)^2 in log scale.
fn scaled_power<T: Real>(z: Complex<T>, e: u32, p: u32, f: u32) -> LogComplex<T> {
    let lz = LogComplex::from_complex(z);
    if lz.is_zero() {
        return LogComplex::zero();
    }
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    let denom = 2.0 * (p as f64 * ln2pi + ln_factorial(f));
    let e_t = T::from_u32(e).unwrap();
    LogComplex::new(e_t * lz.log_magnitude - lit::<T>(denom), e_t * lz.phase)
}

/// β_n, α_n (n ≥ 1) and β̃_n, α̃_n (n ≥ 0). For n = 0 the periodic pair is zero.
pub fn asymptotic_constants<T: Real>(pot: &MathieuPotential<T>, n: u32) -> AsymptoticConstants<T> {
    let (beta_n, alpha_n) = if n >= 1 {
        (
            scaled_power(pot.b, 2 * n, 2 * n - 1, 2 * n - 1),
            scaled_power(pot.a, 2 * n, 2 * n - 1, 2 * n - 1),
        )
    } else {
        (LogComplex::zero(), LogComplex::zero())
    };
    let tilde_beta_n = scaled_power(pot.b, 2 * n + 1, 2 * n, 2 * n);
    let tilde_alpha_n = scaled_power(pot.a, 2 * n + 1, 2 * n, 2 * n);
    let epsilon_n = if beta_n.is_zero() || alpha_n.is_zero() {
        LogComplex::zero()
    } else {
        LogComplex::new(lit::<T>(0.5) * (beta_n.log_magnitude + alpha_n.log_magnitude), T::zero())
    };
    AsymptoticConstants {
        n,
        alpha_exponent: alpha_of(pot).ok(),
        beta_n,
        alpha_n,
        tilde_beta_n,
        tilde_alpha_n,
        epsilon_n,
    }
}

/// Irreducible fraction m/q with q > 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub m: i64,
    pub q: i64,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

impl Rational {
    pub fn new(m: i64, q: i64) -> Result<Self> {
        if q == 0 {
            return Err(Error::Validation("zero denominator".into()));
        }
        let g = gcd(m, q).max(1);
        let s = if q < 0 { -1 } else { 1 };
        Ok(Self { m: s * m / g, q: s * q / g })
    }

    pub fn value(&self) -> f64 {
        self.m as f64 / self.q as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.m, self.q)
    }
}

impl std::str::FromStr for Rational {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Validation(format!("bad rational literal {s:?}"));
        match s.split_once('/') {
            Some((m, q)) => {
                let m: i64 = m.trim().parse().map_err(|_| bad())?;
                let q: i64 = q.trim().parse().map_err(|_| bad())?;
                Rational::new(m, q)
            }
            None => Rational::new(s.parse().map_err(|_| bad())?, 1),
        }
    }
}

/// Parses "RE", "IMi", "RE+IMi", "RE-IMi" (also "i", "-i", "1e-3+2i").
pub fn parse_complex(s: &str) -> Result<Complex<f64>> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Validation(format!("bad complex literal {s:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    let num = |x: &str| -> Result<f64> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => x.parse::<f64>().map_err(|_| bad()),
        }
    };
    if let Some(body) = t.strip_suffix('i') {
        // split at the last sign that is not part of an exponent
        let bytes = body.as_bytes();
        let mut split = None;
        for j in (1..bytes.len()).rev() {
            if (bytes[j] == b'+' || bytes[j] == b'-') && !matches!(bytes[j - 1], b'e' | b'E') {
                split = Some(j);
                break;
            }
        }
        match split {
            Some(j) => Ok(Complex::new(num(&body[..j])?, num(&body[j..])?)),
            None => Ok(Complex::new(0.0, num(body)?)),
        }
    } else {
        Ok(Complex::new(num(&t)?, 0.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TriState {
    Holds,
    Fails,
    UndecidedFloat,
}

/// α either as an exact fraction or a float.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AlphaInput {
    Exact(Rational),
    Float(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloatDiagnostic {
    /// min over q ≤ bound of min_p |qα − (2p−1)|
    pub min_distance: f64,
    /// record-setting points (q, q·min_p|qα − (2p−1)|)
    pub decay_profile: Vec<(u64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineVerdict {
    pub condition8: TriState,
    pub condition100: TriState,
    pub condition104: TriState,
    pub witness: Option<(u64, i64)>,
    pub rational_input: Option<Rational>,
    pub float_diagnostic: Option<FloatDiagnostic>,
}

/// Multiplier sequences: (8) uses q, (100) uses 2q, (104) uses 2q+1.
#[derive(Clone, Copy, Debug)]
enum Multiplier {
    Plain,
    Even,
    Odd,
}

impl Multiplier {
    fn apply(self, q: u64) -> u64 {
        match self {
            Multiplier::Plain => q,
            Multiplier::Even => 2 * q,
            Multiplier::Odd => 2 * q + 1,
        }
    }
}

/// Smallest q ≥ 1 with mult(q)·|m|/qd an odd integer; returns (q, p) with that integer = 2p−1.
fn exact_witness(r: Rational, mult: Multiplier) -> Option<(u64, i64)> {
    let m = r.m.unsigned_abs();
    let qd = r.q as u64;
    // only multiples of qd can cancel the denominator; scan one full residue period
    for q in 1..=(2 * qd + 2) {
        let k = mult.apply(q);
        if k % qd == 0 {
            let v = (k / qd) * m;
            if v % 2 == 1 {
                return Some((q, (v as i64 + 1) / 2));
            }
        }
    }
    None
}

fn float_scan(alpha: f64, bound: u64, mult: Multiplier) -> (FloatDiagnostic, (u64, i64)) {
    let x = alpha.abs();
    let mut best = f64::INFINITY;
    let mut wit = (1, 1);
    let mut profile = Vec::new();
    for q in 1..=bound {
        let v = mult.apply(q) as f64 * x;
        let p = ((v + 1.0) / 2.0).round().max(1.0);
        let d = (v - (2.0 * p - 1.0)).abs();
        if d < best {
            best = d;
            wit = (q, p as i64);
            profile.push((q, q as f64 * d));
        }
    }
    (FloatDiagnostic { min_distance: best, decay_profile: profile }, wit)
}

/// Conditions (8), (100), (104). The sign of α is irrelevant (complex conjugation
/// symmetry), so both paths work with |α|.
pub fn check_diophantine(alpha: AlphaInput, search_bound: u64) -> Result<DiophantineVerdict> {
    match alpha {
        AlphaInput::Exact(r) => {
            let verdict = |w: &Option<(u64, i64)>| if w.is_some() { TriState::Fails } else { TriState::Holds };
            let w8 = exact_witness(r, Multiplier::Plain);
            let w100 = exact_witness(r, Multiplier::Even);
            let w104 = exact_witness(r, Multiplier::Odd);
            Ok(DiophantineVerdict {
                condition8: verdict(&w8),
                condition100: verdict(&w100),
                condition104: verdict(&w104),
                witness: w8,
                rational_input: Some(r),
                float_diagnostic: None,
            })
        }
        AlphaInput::Float(a) => {
            if !(1..=1_000_000).contains(&search_bound) {
                return Err(Error::Validation("search_bound must be in 1..=10^6".into()));
            }
            if !a.is_finite() {
                return Err(Error::Validation("alpha must be finite".into()));
            }
            let (diag, wit) = float_scan(a, search_bound, Multiplier::Plain);
            Ok(DiophantineVerdict {
                condition8: TriState::UndecidedFloat,
                condition100: TriState::UndecidedFloat,
                condition104: TriState::UndecidedFloat,
                witness: Some(wit),
                rational_input: None,
                float_diagnostic: Some(diag),
            })
        }
    }
}

/// α from the potential, exact when ab is real or purely imaginary.
pub fn alpha_input_of(pot: &MathieuPotential<f64>) -> Result<AlphaInput> {
    let z = pot.product();
    if pot.is_degenerate_product() {
        return Err(Error::DegenerateProduct);
    }
    let exact = if z.im == 0.0 {
        Some(if z.re > 0.0 { Rational::new(0, 1)? } else { Rational::new(1, 1)? })
    } else if z.re == 0.0 {
        Some(if z.im > 0.0 { Rational::new(1, 2)? } else { Rational::new(-1, 2)? })
    } else {
        None
    };
    Ok(match exact {
        Some(r) => AlphaInput::Exact(r),
        None => AlphaInput::Float(alpha_of(pot)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn alpha_examples() {
        let p = MathieuPotential::real(1.0, -1.0);
        assert_eq!(alpha_of(&p).unwrap(), 1.0);
        assert_eq!(alpha_of(&MathieuPotential::real(2.0, 2.0)).unwrap(), 0.0);
        let q = MathieuPotential::new(c(1.0, 0.0), c(0.0, 1.0)).unwrap();
        assert!((alpha_of(&q).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(alpha_of(&MathieuPotential::real(0.0, 1.0)), Err(Error::DegenerateProduct)));
    }

    #[test]
    fn beta_one_for_b_two() {
        let k = asymptotic_constants(&MathieuPotential::real(0.0, 2.0), 1);
        assert!((k.beta_n.to_complex().re - 1.0 / (PI * PI)).abs() < 1e-14);
        assert!(k.alpha_n.is_zero());
    }

    #[test]
    fn tilde_product_for_one_minus_one() {
        let k = asymptotic_constants(&MathieuPotential::real(1.0, -1.0), 1);
        let p = k.product(Family::Antiperiodic).to_complex();
        let expected = -(8.0 * PI * PI).powi(-4);
        assert!((p.re - expected).abs() < 1e-12 * expected.abs());
        assert!(p.im.abs() < 1e-20);
    }

    #[test]
    fn epsilon_is_geometric_mean() {
        let k = asymptotic_constants(&MathieuPotential::new(c(1.0, 2.0), c(-3.0, 0.5)).unwrap(), 4);
        let m = 0.5 * (k.alpha_n.log_magnitude + k.beta_n.log_magnitude);
        assert_eq!(k.epsilon_n.log_magnitude, m);
    }

    #[test]
    fn log_complex_round_trip() {
        for z in [c(1e-200, 3e-201), c(-2.0, 0.0), c(0.0, -7.5), c(3.0, 4.0)] {
            let w = LogComplex::from_complex(z).to_complex();
            assert!((w - z).norm() <= 1e-12 * z.norm());
        }
        assert!(LogComplex::<f64>::from_complex(c(0.0, 0.0)).is_zero());
    }

    #[test]
    fn diophantine_examples() {
        let one = check_diophantine(AlphaInput::Exact(Rational::new(1, 1).unwrap()), 10).unwrap();
        assert_eq!(one.condition8, TriState::Fails);
        assert_eq!(one.witness, Some((1, 1)));
        let zero = check_diophantine(AlphaInput::Exact(Rational::new(0, 1).unwrap()), 10).unwrap();
        assert_eq!(zero.condition8, TriState::Holds);
        let half = check_diophantine(AlphaInput::Exact(Rational::new(1, 2).unwrap()), 10).unwrap();
        assert_eq!(half.condition8, TriState::Fails);
        assert_eq!(half.witness, Some((2, 1)));
        // q even: (100) fails; q odd with m odd: (104) fails
        assert_eq!(half.condition100, TriState::Fails);
        assert_eq!(half.condition104, TriState::Holds);
        assert_eq!(one.condition104, TriState::Fails);
    }

    #[test]
    fn float_mode_is_undecided() {
        let v = check_diophantine(AlphaInput::Float(2f64.sqrt() - 1.0), 1000).unwrap();
        assert_eq!(v.condition8, TriState::UndecidedFloat);
        let d = v.float_diagnostic.unwrap();
        assert!(d.min_distance < 0.05);
        assert!(d.decay_profile.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(check_diophantine(AlphaInput::Float(0.3), 0).is_err());
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("1.5-0.25i").unwrap(), c(1.5, -0.25));
        assert_eq!(parse_complex("-2").unwrap(), c(-2.0, 0.0));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("1+i").unwrap(), c(1.0, 1.0));
        assert_eq!(parse_complex("1e-3+2e-2i").unwrap(), c(1e-3, 2e-2));
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("").is_err());
    }

    #[test]
    fn rational_literals() {
        assert_eq!("2/4".parse::<Rational>().unwrap(), Rational { m: 1, q: 2 });
        assert_eq!("3/-6".parse::<Rational>().unwrap(), Rational { m: -1, q: 2 });
        assert!("1/0".parse::<Rational>().is_err());
    }

    #[test]
    fn generic_over_f32() {
        let p: MathieuPotential<f32> = MathieuPotential::real(1.0, 2.0);
        let k = asymptotic_constants(&p, 1);
        assert!((k.beta_n.abs() - 4.0 / (2.0 * std::f32::consts::PI).powi(2)).abs() < 1e-6);
    }
}
