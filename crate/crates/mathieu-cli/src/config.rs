//! Job configuration: flags, flat key=value files, and their merge.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::ValueEnum;
use mathieu_hill::potential::parse_complex;
use mathieu_hill::{Error, Rational, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub const MIN_T_POINTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Spectrum,
    Profile,
    Classify,
    Singularities,
    Expand,
    Verify,
}

impl Command {
    fn default_n_max(self) -> usize {
        match self {
            Command::Spectrum | Command::Profile | Command::Singularities => 3,
            Command::Classify => 2,
            Command::Expand => 10,
            Command::Verify => 1,
        }
    }
}

/// Optional settings from one source (flags or a config file).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    pub a: Option<String>,
    pub b: Option<String>,
    pub alpha_exact: Option<String>,
    pub n_max: Option<usize>,
    pub t_points: Option<usize>,
    pub m: Option<usize>,
    pub window: Option<String>,
    pub h: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

impl Settings {
    pub fn parse_file(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("config line {}: expected key=value", no + 1)))?;
            let (k, v) = (k.trim(), v.trim().to_string());
            let num = |v: &str| -> Result<usize> { v.parse().map_err(|_| bad(format!("config key {k}: bad integer {v:?}"))) };
            match k {
                "a" => s.a = Some(v),
                "b" => s.b = Some(v),
                "alpha-exact" | "alpha_exact" => s.alpha_exact = Some(v),
                "nmax" | "n_max" => s.n_max = Some(num(&v)?),
                "tpoints" | "t_points" => s.t_points = Some(num(&v)?),
                "m" | "m_override" => s.m = Some(num(&v)?),
                "window" => s.window = Some(v),
                "h" => s.h = Some(v.parse().map_err(|_| bad(format!("config key h: bad number {v:?}")))?),
                "out" => s.out = Some(PathBuf::from(v)),
                "seed" => s.seed = Some(v.parse().map_err(|_| bad(format!("config key seed: bad integer {v:?}")))?),
                _ => return Err(bad(format!("config line {}: unknown key {k:?}", no + 1))),
            }
        }
        Ok(s)
    }

    /// Fields of `self` win over `base`.
    pub fn over(self, base: Settings) -> Settings {
        Settings {
            a: self.a.or(base.a),
            b: self.b.or(base.b),
            alpha_exact: self.alpha_exact.or(base.alpha_exact),
            n_max: self.n_max.or(base.n_max),
            t_points: self.t_points.or(base.t_points),
            m: self.m.or(base.m),
            window: self.window.or(base.window),
            h: self.h.or(base.h),
            out: self.out.or(base.out),
            seed: self.seed.or(base.seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobConfig {
    pub command: Command,
    pub a: C64,
    pub b: C64,
    pub alpha_exact: Option<Rational>,
    pub n_max: usize,
    pub t_points: usize,
    pub m_override: Option<usize>,
    pub window: Option<(f64, f64)>,
    pub h: f64,
    pub out: PathBuf,
    pub seed: u64,
}

fn parse_window(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| bad(format!("window {s:?}: expected \"lo,hi\"")))?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad(format!("window {s:?}: bad lower bound")))?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad(format!("window {s:?}: bad upper bound")))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(bad(format!("window {s:?}: need finite lo < hi")));
    }
    Ok((lo, hi))
}

/// "RE+IMi" with shortest round-trip floats.
pub fn complex_literal(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", z.re, sign, z.im.abs())
}

impl JobConfig {
    pub fn resolve(command: Command, s: Settings) -> Result<Self> {
        let potential = |v: &Option<String>, name: &str| -> Result<C64> {
            match (v, command) {
                (Some(v), _) => parse_complex(v),
                (None, Command::Verify) => Ok(C64::new(0.0, 0.0)),
                (None, _) => Err(bad(format!("--{name} is required for {command:?}").to_lowercase())),
            }
        };
        let cfg = JobConfig {
            command,
            a: potential(&s.a, "a")?,
            b: potential(&s.b, "b")?,
            alpha_exact: s.alpha_exact.as_deref().map(str::parse).transpose()?,
            n_max: s.n_max.unwrap_or(command.default_n_max()),
            t_points: s.t_points.unwrap_or(128),
            m_override: s.m,
            window: s.window.as_deref().map(parse_window).transpose()?,
            h: s.h.unwrap_or(mathieu_hill::expansion::DEFAULT_H),
            out: s.out.unwrap_or_else(|| PathBuf::from("out")),
            seed: s.seed.unwrap_or(0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 1 {
            return Err(bad("nmax must be ≥ 1"));
        }
        if self.t_points < MIN_T_POINTS {
            return Err(bad(format!("tpoints must be ≥ {MIN_T_POINTS}, got {}", self.t_points)));
        }
        if let Some(m) = self.m_override {
            if m < 2 * self.n_max + 4 {
                return Err(bad(format!("m = {m} too small for nmax = {}", self.n_max)));
            }
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(bad(format!("h must be positive, got {}", self.h)));
        }
        Ok(())
    }

    /// Flat key=value text that `Settings::parse_file` reads back to the same job.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "a = {}", complex_literal(self.a));
        let _ = writeln!(s, "b = {}", complex_literal(self.b));
        if let Some(r) = self.alpha_exact {
            let _ = writeln!(s, "alpha-exact = {r}");
        }
        let _ = writeln!(s, "nmax = {}", self.n_max);
        let _ = writeln!(s, "tpoints = {}", self.t_points);
        if let Some(m) = self.m_override {
            let _ = writeln!(s, "m = {m}");
        }
        if let Some((lo, hi)) = self.window {
            let _ = writeln!(s, "window = {lo},{hi}");
        }
        let _ = writeln!(s, "h = {}", self.h);
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}
