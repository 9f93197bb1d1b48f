use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use mathieu_hill::discriminant::{self, CriticalPoint, Window};
use mathieu_hill::expansion::{self, ExpansionPlan, TestFunction};
use mathieu_hill::potential::{alpha_input_of, AlphaInput};
use mathieu_hill::spectrality::{self, ClassifyOptions, Method};
use mathieu_hill::{asymptotics, floquet, verify, Family, Potential};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{complex_literal, Command, JobConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    Lib(mathieu_hill::Error),
    Io(String),
}

impl From<mathieu_hill::Error> for CliError {
    fn from(e: mathieu_hill::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type Out<T> = std::result::Result<T, CliError>;

/// What a run leaves behind: written files and the exit status.
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub status: i32,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: Command,
    config: &'a JobConfig,
    #[serde(flatten)]
    body: T,
}

fn write_json<T: Serialize>(cfg: &JobConfig, name: &str, body: T) -> Out<(PathBuf, String)> {
    let text = serde_json::to_string_pretty(&Envelope { schema_version: SCHEMA_VERSION, command: cfg.command, config: cfg, body })? + "\n";
    let path = cfg.out.join(name);
    fs::write(&path, &text)?;
    Ok((path, text))
}

fn csv_writer(dir: &Path, name: &str, header: &[&str]) -> Out<(csv::Writer<fs::File>, PathBuf)> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(header)?;
    Ok((w, path))
}

fn potential(cfg: &JobConfig) -> Out<Potential> {
    Ok(Potential::new(cfg.a, cfg.b)?)
}

fn truncation(cfg: &JobConfig, pot: &Potential, n_max: usize) -> Out<usize> {
    match cfg.m_override {
        Some(m) => Ok(m),
        None => Ok(floquet::truncation_size(pot, n_max)?),
    }
}

fn bands(n_max: usize) -> Vec<i64> {
    let n = n_max as i64;
    (-n..=n).collect()
}

pub fn run(cfg: &JobConfig) -> Out<Outcome> {
    fs::create_dir_all(&cfg.out)?;
    let job = cfg.out.join("job.conf");
    fs::write(&job, cfg.to_config_text())?;
    let mut outcome = match cfg.command {
        Command::Spectrum => spectrum(cfg),
        Command::Profile => profile(cfg),
        Command::Classify => classify(cfg),
        Command::Singularities => singularities(cfg),
        Command::Expand => expand(cfg),
        Command::Verify => run_verify(cfg),
    }?;
    outcome.files.insert(0, job);
    Ok(outcome)
}

#[derive(Serialize)]
struct SpectrumMeta<'a> {
    m: usize,
    bands: Vec<i64>,
    t_grid: &'a [f64],
    pair_labels: &'a [floquet::PairLabel],
    ambiguities: &'a [floquet::Ambiguity],
    eigenfunction_t: f64,
    comparison_skipped: Vec<String>,
}

fn spectrum(cfg: &JobConfig) -> Out<Outcome> {
    let pot = potential(cfg)?;
    let m = truncation(cfg, &pot, cfg.n_max)?;
    let grid = floquet::uniform_grid(cfg.t_points);
    let bands = bands(cfg.n_max);
    let set = floquet::track_curves(&pot, &grid, &bands, m)?;
    let sols = floquet::solutions_on(&pot, &grid, m)?;
    let mut files = Vec::new();

    let (mut w, path) = csv_writer(&cfg.out, "curves.csv", &["n", "t", "re_lambda", "im_lambda", "residual"])?;
    for &n in &bands {
        for (i, &t) in grid.iter().enumerate() {
            let l = set.value(n, i);
            let residual = sols[i].residuals[floquet::locate(&sols[i], l)];
            w.write_record([n.to_string(), t.to_string(), l.re.to_string(), l.im.to_string(), format!("{residual:e}")])?;
        }
    }
    w.flush()?;
    files.push(path);

    // coefficient vectors at the labelling anchor t = π/2
    let t_ef = PI / 2.0;
    let sol = floquet::eig(&floquet::assemble(&pot, t_ef, m)?)?;
    let anchor = floquet::track_curves(&pot, &[t_ef], &bands, m)?;
    for &n in &bands {
        let i = floquet::locate(&sol, anchor.value(n, 0));
        if !sol.is_simple(i) {
            continue;
        }
        let (psi, _) = floquet::bloch_pair(&sol, i, n, Family::Periodic)?;
        let (mut w, path) = csv_writer(&cfg.out, &format!("eigenfunction_{n}.csv"), &["k", "re_c", "im_c"])?;
        for (j, c) in psi.coeffs.iter().enumerate() {
            w.write_record([(psi.k_min + j as i64).to_string(), c.re.to_string(), c.im.to_string()])?;
        }
        w.flush()?;
        files.push(path);
    }

    // pair formula against the engine near t = 0 and t = π
    let (mut w, path) = csv_writer(&cfg.out, "comparison.csv", &["n", "t", "formula_value", "engine_value", "abs_err", "rel_err", "branch"])?;
    let offsets = [1e-3, 1e-2, 1e-1];
    let mut skipped = Vec::new();
    for n in 0..=cfg.n_max as i64 {
        for family in [Family::Periodic, Family::Antiperiodic] {
            if family == Family::Periodic && n == 0 {
                continue;
            }
            let ts: Vec<f64> = match family {
                Family::Periodic => offsets.to_vec(),
                Family::Antiperiodic => offsets.iter().map(|o| PI - o).collect(),
            };
            match asymptotics::compare_with_engine(&pot, n, &ts, family, m) {
                Ok(rows) => {
                    for r in rows {
                        w.write_record([
                            r.n.to_string(),
                            r.t.to_string(),
                            complex_literal(r.formula_value),
                            complex_literal(r.engine_value),
                            format!("{:e}", r.abs_err),
                            format!("{:e}", r.rel_err),
                            r.branch.to_string(),
                        ])?;
                    }
                }
                Err(e) => skipped.push(format!("n={n} {family:?}: {e}")),
            }
        }
    }
    w.flush()?;
    files.push(path);

    let meta = SpectrumMeta {
        m,
        bands,
        t_grid: &grid,
        pair_labels: &set.pair_labels,
        ambiguities: &set.ambiguities,
        eigenfunction_t: t_ef,
        comparison_skipped: skipped,
    };
    files.push(write_json(cfg, "spectrum.json", meta)?.0);
    Ok(Outcome { files, status: 0 })
}

#[derive(Serialize)]
struct BandProfile {
    n: i64,
    sup_inverse: f64,
    excluded: Vec<f64>,
}

#[derive(Serialize)]
struct ProfileMeta {
    m: usize,
    wronskian_stride: usize,
    bands: Vec<BandProfile>,
}

fn profile(cfg: &JobConfig) -> Out<Outcome> {
    let pot = potential(cfg)?;
    let m = truncation(cfg, &pot, cfg.n_max + 1)?;
    let grid = floquet::uniform_grid(cfg.t_points);
    let stride = 4;
    let (mut w, path) = csv_writer(&cfg.out, "profile.csv", &["n", "t", "method", "abs_d"])?;
    let mut meta = ProfileMeta { m, wronskian_stride: stride, bands: Vec::new() };
    for n in bands(cfg.n_max) {
        let p = spectrality::dn_profile_with(&pot, n, &grid, m, stride)?;
        for s in &p.samples {
            let method = match s.method {
                Method::Eigenvector => "eigenvector",
                Method::Wronskian => "wronskian",
            };
            w.write_record([n.to_string(), s.t.to_string(), method.to_string(), s.abs_d.to_string()])?;
        }
        meta.bands.push(BandProfile { n, sup_inverse: p.sup_inverse, excluded: p.excluded });
    }
    w.flush()?;
    let json = write_json(cfg, "profile.json", meta)?.0;
    Ok(Outcome { files: vec![path, json], status: 0 })
}

fn classify(cfg: &JobConfig) -> Out<Outcome> {
    let pot = potential(cfg)?;
    let alpha = match cfg.alpha_exact {
        Some(r) => Some(AlphaInput::Exact(r)),
        None if pot.is_degenerate_product() => None,
        None => Some(alpha_input_of(&pot)?),
    };
    let opts = ClassifyOptions { n_max: cfg.n_max, ..ClassifyOptions::default() };
    let report = spectrality::classify_with(&pot, alpha, &opts)?;
    let (path, text) = write_json(cfg, "classify.json", report)?;
    print!("{text}");
    Ok(Outcome { files: vec![path], status: 0 })
}

#[derive(Serialize)]
struct CriticalRow {
    lambda_re: f64,
    lambda_im: f64,
    t_re: f64,
    t_im: f64,
    family: discriminant::CriticalFamily,
    n_guess: i64,
}

impl From<&CriticalPoint> for CriticalRow {
    fn from(c: &CriticalPoint) -> Self {
        Self { lambda_re: c.lambda_star.re, lambda_im: c.lambda_star.im, t_re: c.t_star.re, t_im: c.t_star.im, family: c.family, n_guess: c.n_guess }
    }
}

#[derive(Serialize)]
struct SingularityMeta {
    window: Window,
    m: usize,
    critical_points: Vec<CriticalRow>,
    singularities: Vec<CriticalRow>,
    ess: Vec<spectrality::EssEntry>,
}

fn singularities(cfg: &JobConfig) -> Out<Outcome> {
    let pot = potential(cfg)?;
    let (lo, hi) = cfg.window.unwrap_or((1.0, (2.0 * PI * cfg.n_max as f64 + PI).powi(2)));
    let window = Window::real(lo, hi)?;
    let reach = (hi.max(0.0).sqrt() / (2.0 * PI)).ceil() as usize + 1;
    let m = truncation(cfg, &pot, reach)?;
    let rep = spectrality::detect_singularities_with(&pot, &window, m)?;
    let meta = SingularityMeta {
        window: rep.window,
        m,
        critical_points: rep.critical_points.iter().map(CriticalRow::from).collect(),
        singularities: rep.singularities.iter().map(CriticalRow::from).collect(),
        ess: rep.ess,
    };
    let path = write_json(cfg, "singularities.json", meta)?.0;
    Ok(Outcome { files: vec![path], status: 0 })
}

#[derive(Serialize)]
struct ExpandMeta {
    test_function: TestFunction,
    m: usize,
    s_set: Vec<i64>,
    #[serde(flatten)]
    report: expansion::ResidualReport,
}

fn expand(cfg: &JobConfig) -> Out<Outcome> {
    let pot = potential(cfg)?;
    let plan = ExpansionPlan::for_potential(&pot, cfg.n_max, cfg.h)?;
    let m = truncation(cfg, &pot, cfg.n_max + 1)?;
    let f = TestFunction::standard();
    let report = expansion::reconstruct_with(&pot, &f, &plan, &expansion::standard_points(), m)?;
    println!("{:?} form, n_max = {}: max residual {:.3e}", report.form, report.n_max, report.max_residual);
    let meta = ExpandMeta { test_function: f, m, s_set: plan.s_set, report };
    let path = write_json(cfg, "expansion.json", meta)?.0;
    Ok(Outcome { files: vec![path], status: 0 })
}

#[derive(Serialize)]
struct CriterionRow {
    id: u8,
    name: String,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct SpotCheck {
    a: String,
    b: String,
    t: f64,
    rotation_err: f64,
    adjoint_err: f64,
    discriminant_err: f64,
    passed: bool,
}

#[derive(Serialize)]
struct VerifyMeta {
    all_passed: bool,
    criteria: Vec<CriterionRow>,
    spot_checks: Vec<SpotCheck>,
}

fn nearest_distance(z: C64, set: &[C64]) -> f64 {
    set.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min)
}

/// Random potentials drawn from the seed: phase rotation, adjoint conjugation
/// and F(λ) = 2cos t on the lowest eigenvalues.
fn spot_checks(seed: u64, count: usize) -> Out<Vec<SpotCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 32;
    let mut rows = Vec::new();
    for _ in 0..count {
        let mut z = || C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let (a, b) = (z(), z());
        let theta: f64 = rng.random_range(-PI..PI);
        let t: f64 = rng.random_range(0.1..3.0);
        let pot = Potential::new(a, b)?;
        let base = floquet::eigenvalues(&pot, t, m)?;
        let rot = C64::from_polar(1.0, theta);
        let turned = floquet::eigenvalues(&Potential::new(a * rot, b / rot)?, t, m)?;
        let adj = floquet::adjoint_solution(&pot, t, m)?.lambdas;
        let low: Vec<C64> = {
            let mut v = base.clone();
            v.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
            v.truncate(3);
            v
        };
        let mut rotation_err: f64 = 0.0;
        let mut adjoint_err: f64 = 0.0;
        let mut discriminant_err: f64 = 0.0;
        for &l in base.iter().filter(|l| l.norm() <= 2000.0) {
            rotation_err = rotation_err.max(nearest_distance(l, &turned) / (1.0 + l.norm()));
            adjoint_err = adjoint_err.max(nearest_distance(l.conj(), &adj) / (1.0 + l.norm()));
        }
        for l in low {
            discriminant_err = discriminant_err.max((discriminant::discriminant(&pot, l)? - 2.0 * t.cos()).norm());
        }
        let passed = rotation_err <= 1e-9 && adjoint_err <= 1e-9 && discriminant_err <= 1e-7;
        rows.push(SpotCheck { a: complex_literal(a), b: complex_literal(b), t, rotation_err, adjoint_err, discriminant_err, passed });
    }
    Ok(rows)
}

fn run_verify(cfg: &JobConfig) -> Out<Outcome> {
    let results = verify::run_all();
    for r in &results {
        println!("{}", r.line());
    }
    let spots = spot_checks(cfg.seed, 8)?;
    for (i, s) in spots.iter().enumerate() {
        println!(
            "[{}] spot {} (a={}, b={}, t={:.4}): rotation {:.1e}, adjoint {:.1e}, |F−2cos t| {:.1e}",
            if s.passed { "PASS" } else { "FAIL" },
            i + 1,
            s.a,
            s.b,
            s.t,
            s.rotation_err,
            s.adjoint_err,
            s.discriminant_err
        );
    }
    let all_passed = results.iter().all(|r| r.passed) && spots.iter().all(|s| s.passed);
    let meta = VerifyMeta {
        all_passed,
        criteria: results.into_iter().map(|r| CriterionRow { id: r.id, name: r.name, passed: r.passed, detail: r.detail }).collect(),
        spot_checks: spots,
    };
    let path = write_json(cfg, "verify.json", meta)?.0;
    Ok(Outcome { files: vec![path], status: if all_passed { 0 } else { 3 } })
}
