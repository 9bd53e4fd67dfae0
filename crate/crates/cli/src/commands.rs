//! The `separate`, `verify`, `bounds` and `grid` commands.
//!
//! Each command writes its machine-readable output to `out` and diagnostics
//! to `err`, and returns the process exit code.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use polysep::bounds::{self, BoundParams};
use polysep::semialg::{self, SemialgError};
use polysep::separator::{self, SeparatorError, SeparatorOptions};
use polysep::sos::QmCertificate;
use polysep::{BoxGrid, Polynomial, SemialgebraicSet, SolverOptions};

use crate::files::{
    AttemptJson, BoundReport, ExhaustedFile, ProblemFile, RescaledBounds, ResultFile,
    SeparationJson,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(i32)]
pub enum Exit {
    Success = 0,
    InputError = 1,
    NoSeparator = 2,
    VerificationFailed = 3,
    EmptySample = 4,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

enum Failure {
    Input(anyhow::Error),
    EmptySample(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<SemialgError> for Failure {
    fn from(e: SemialgError) -> Self {
        match e {
            SemialgError::EmptySample(_) => Failure::EmptySample(e.to_string()),
            other => Failure::Input(other.into()),
        }
    }
}

fn report_failure(f: Failure, err: &mut dyn Write) -> Exit {
    match f {
        Failure::Input(e) => {
            let _ = writeln!(err, "error: {e:#}");
            Exit::InputError
        }
        Failure::EmptySample(msg) => {
            let _ = writeln!(err, "error: {msg}");
            Exit::EmptySample
        }
    }
}

fn write_json<T: Serialize>(value: &T, path: Option<&PathBuf>, out: &mut dyn Write) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => {
            std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))
        }
        None => writeln!(out, "{text}").context("writing output"),
    }
}

/// Grid resolution for reports embedded in result files: at most ~1e5 nodes.
fn report_resolution(n: usize) -> usize {
    let mut r = (1e5f64.powf(1.0 / n as f64)).floor() as usize;
    r = r.min(201);
    if r.is_multiple_of(2) {
        r -= 1;
    }
    r.max(3)
}

#[derive(Debug, Clone, Default)]
pub struct SeparateArgs {
    pub problem: PathBuf,
    pub degree_max: Option<u32>,
    pub level_max: Option<u32>,
    pub tol: Option<f64>,
    pub margin: Option<f64>,
    pub ball: Option<bool>,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_DEGREE_MAX: u32 = 2;
pub const DEFAULT_LEVEL_MAX: u32 = 8;

pub fn cmd_separate(args: &SeparateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Exit {
    match separate(args, out, err) {
        Ok(code) => code,
        Err(f) => report_failure(f, err),
    }
}

fn separate(
    args: &SeparateArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<Exit, Failure> {
    let start = Instant::now();
    let problem = ProblemFile::load(&args.problem)?;
    let (a, b) = problem.sets()?;
    let o = &problem.options;
    let degree_max = args
        .degree_max
        .or(o.degree_max)
        .unwrap_or(DEFAULT_DEGREE_MAX);
    let level_max = args.level_max.or(o.level_max).unwrap_or(DEFAULT_LEVEL_MAX);
    let tol = args.tol.or(o.tol).unwrap_or(SolverOptions::default().tol);
    let margin = args
        .margin
        .or(o.margin)
        .unwrap_or(SeparatorOptions::default().margin);
    let ball = args.ball.or(o.ball).unwrap_or(true);
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(anyhow!("--tol must lie in (0, 1e-2], got {tol}").into());
    }
    if margin.is_nan() || margin < 0.0 {
        return Err(anyhow!("--margin must be non-negative, got {margin}").into());
    }
    let options = SeparatorOptions {
        margin,
        solver: SolverOptions {
            tol,
            ..SolverOptions::default()
        },
        ball,
    };

    let res = match separator::run_hierarchy(&a, &b, degree_max, level_max, options) {
        Ok(res) => res,
        Err(SeparatorError::ExhaustedHierarchy { trace }) => {
            let doc = ExhaustedFile {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                status: "no_separator".to_string(),
                trace: trace.iter().map(AttemptJson::from).collect(),
            };
            write_json(&doc, args.out.as_ref(), out)?;
            let _ = writeln!(
                err,
                "no separator up to degree {degree_max}, level {level_max} ({} attempts)",
                trace.len()
            );
            return Ok(Exit::NoSeparator);
        }
        Err(e) => return Err(anyhow!(e).into()),
    };

    let mut file = ResultFile::from_result(&res, ball);
    let resolution = report_resolution(problem.n);
    match separator::verify_separation(&res.p, &a, &b, resolution, 1e-3) {
        Ok(rep) => file.verification = Some((&rep).into()),
        Err(e) => {
            let _ = writeln!(err, "warning: grid verification skipped: {e}");
        }
    }
    match bound_report(&a, &b, &BoundsArgs::default(), resolution) {
        Ok(rep) => file.bounds = Some(rep),
        Err(Failure::Input(e)) => {
            let _ = writeln!(err, "warning: bound report skipped: {e:#}");
        }
        Err(Failure::EmptySample(e)) => {
            let _ = writeln!(err, "warning: bound report skipped: {e}");
        }
    }
    file.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    write_json(&file, args.out.as_ref(), out)?;
    let _ = writeln!(
        err,
        "separator of degree {} found at level {} (slack {:.3e}): p = {}",
        res.degree, res.level, res.slack, res.p
    );
    Ok(Exit::Success)
}

#[derive(Debug, Clone)]
pub struct VerifyArgs {
    pub problem: PathBuf,
    pub result: PathBuf,
    pub resolution: usize,
    pub tol: f64,
    pub cert_tol: f64,
}

impl Default for VerifyArgs {
    fn default() -> Self {
        Self {
            problem: PathBuf::new(),
            result: PathBuf::new(),
            resolution: 201,
            tol: 1e-3,
            cert_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateCheck {
    pub present: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_gram_eigenvalue: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    pub tol: f64,
    pub problems: Vec<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub certificate: CertificateCheck,
    pub separation: SeparationJson,
    pub pass: bool,
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Exit {
    match verify(args, out, err) {
        Ok(code) => code,
        Err(f) => report_failure(f, err),
    }
}

fn verify(args: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<Exit, Failure> {
    let problem = ProblemFile::load(&args.problem)?;
    let (a, b) = problem.sets()?;
    let result = ResultFile::load(&args.result)?;
    if result.n != problem.n {
        return Err(anyhow!("result has n = {}, problem has n = {}", result.n, problem.n).into());
    }
    let p = result.p.to_poly(problem.n)?;
    let certificate = check_result_certificates(&result, &p, &a, &b, args.cert_tol)?;
    let rep = separator::verify_separation(&p, &a, &b, args.resolution, args.tol)?;
    let report = VerifyReport {
        pass: certificate.pass && rep.pass,
        certificate,
        separation: (&rep).into(),
    };
    write_json(&report, None, out)?;
    if report.pass {
        Ok(Exit::Success)
    } else {
        let _ =
            writeln!(
            err,
            "verification failed: certificate {}, separation {} (min_A p = {:.6}, max_B p = {:.6})",
            if report.certificate.pass { "ok" } else { "FAILED" },
            if rep.pass { "ok" } else { "FAILED" },
            rep.min_on_a,
            rep.max_on_b
        );
        Ok(Exit::VerificationFailed)
    }
}

fn same_poly(a: &Polynomial, b: &Polynomial) -> bool {
    let scale = a
        .max_abs_coefficient()
        .max(b.max_abs_coefficient())
        .max(1.0);
    (a - b).max_abs_coefficient() <= 1e-12 * scale
}

/// The certificate's generators must be the set's own, optionally followed by
/// the ball generator `n - |x|^2` (valid on the box every set lives in).
fn generators_match(cert: &QmCertificate, set: &SemialgebraicSet) -> bool {
    let own = set.generators();
    let g = &cert.generators;
    let prefix_ok = g.len() >= own.len() && own.iter().zip(g).all(|(u, v)| same_poly(u, v));
    match g.len() - own.len().min(g.len()) {
        0 => prefix_ok,
        1 => prefix_ok && same_poly(&g[own.len()], &Polynomial::ball_generator(set.n())),
        _ => false,
    }
}

fn check_result_certificates(
    result: &ResultFile,
    p: &Polynomial,
    a: &SemialgebraicSet,
    b: &SemialgebraicSet,
    tol: f64,
) -> Result<CertificateCheck> {
    let Some(certs) = &result.certificates else {
        return Ok(CertificateCheck {
            present: false,
            residual_a: None,
            residual_b: None,
            min_gram_eigenvalue: None,
            slack: None,
            tol,
            problems: vec!["no certificate in result file; checked separation only".into()],
            pass: true,
        });
    };
    let Some(slack) = result.slack else {
        bail!("result file has certificates but no slack");
    };
    let n = result.n;
    let cert_a = certs.a.to_cert(n).context("certificate A")?;
    let cert_b = certs.b.to_cert(n).context("certificate B")?;
    let mut problems = Vec::new();
    if !generators_match(&cert_a, a) {
        problems.push("certificate A generators differ from set A".to_string());
    }
    if !generators_match(&cert_b, b) {
        problems.push("certificate B generators differ from set B".to_string());
    }
    for (name, c) in [("A", &cert_a), ("B", &cert_b)] {
        if c.max_term_degree() > c.level {
            problems.push(format!(
                "certificate {name} has a term of degree {} above its level {}",
                c.max_term_degree(),
                c.level
            ));
        }
    }
    let rep = separator::check_certificates(p, slack, &cert_a, &cert_b, tol);
    if !rep.pass {
        problems.push("residual, eigenvalue or slack check failed".to_string());
    }
    Ok(CertificateCheck {
        present: true,
        residual_a: Some(rep.residual_a),
        residual_b: Some(rep.residual_b),
        min_gram_eigenvalue: Some(rep.min_gram_eigenvalue),
        slack: Some(slack),
        tol,
        pass: problems.is_empty(),
        problems,
    })
}

#[derive(Debug, Clone)]
pub struct BoundsArgs {
    pub problem: PathBuf,
    pub loj_c: f64,
    pub t_exp: f64,
    pub c_jackson: f64,
    pub dist_resolution: usize,
    pub target_err: f64,
    pub normalize: bool,
}

impl Default for BoundsArgs {
    fn default() -> Self {
        Self {
            problem: PathBuf::new(),
            loj_c: 1.0,
            t_exp: 1.0,
            c_jackson: 1.0,
            dist_resolution: 201,
            target_err: 1.0,
            normalize: false,
        }
    }
}

pub fn cmd_bounds(args: &BoundsArgs, out: &mut dyn Write, err: &mut dyn Write) -> Exit {
    let mut run = || -> Result<Exit, Failure> {
        let problem = ProblemFile::load(&args.problem)?;
        let (a, b) = problem.sets()?;
        let report = bound_report(&a, &b, args, args.dist_resolution)?;
        for w in &report.warnings {
            let _ = writeln!(err, "warning: {w}");
        }
        write_json(&report, None, out)?;
        Ok(Exit::Success)
    };
    match run() {
        Ok(code) => code,
        Err(f) => report_failure(f, err),
    }
}

fn bound_report(
    a: &SemialgebraicSet,
    b: &SemialgebraicSet,
    args: &BoundsArgs,
    resolution: usize,
) -> Result<BoundReport, Failure> {
    let n = a.n();
    for (name, v) in [
        ("--c", args.loj_c),
        ("--T", args.t_exp),
        ("--C", args.c_jackson),
        ("target error", args.target_err),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(anyhow!("{name} must be positive, got {v}").into());
        }
    }
    let mut warnings = Vec::new();
    if args.loj_c == 1.0 && args.t_exp == 1.0 {
        warnings.push(
            "Lojasiewicz coefficient c = 1 and exponent T = 1 are assumed defaults, not computed \
             from the generators; T = 1 holds when active constraint gradients are independent"
                .to_string(),
        );
    }
    if args.c_jackson == 1.0 {
        warnings.push(
            "the Jackson constant C is unknown; C = 1 is used and the bound scales as C^c_exponent"
                .to_string(),
        );
    }

    let dist = semialg::dist_estimate(a, b, resolution)?;
    if dist <= 0.0 {
        return Err(anyhow!(
            "sample clouds of A and B intersect (distance 0 at resolution {resolution}); no separation bound"
        )
        .into());
    }
    let params = BoundParams {
        n: n as u32,
        t_exp: args.t_exp,
        loj_c: args.loj_c,
        r: a.generators().len() as u32,
        deg_f: a.max_generator_degree().max(1),
        c_jackson: args.c_jackson,
        dist,
    };
    params.validate().map_err(|e| anyhow!(e))?;
    let gamma = |set: &SemialgebraicSet| {
        bounds::gamma(
            n as u32,
            args.t_exp,
            args.loj_c,
            set.generators().len() as u32,
            set.max_generator_degree().max(1),
        )
    };
    let (gamma_a, gamma_b) = (gamma(a), gamma(b));
    let sep = |p: &BoundParams| -> Result<(f64, f64)> {
        Ok((
            bounds::putinar_separation_degree(p, gamma_a, gamma_b)?.log10_value,
            bounds::putinar_separation_degree_t1(p, gamma_a, gamma_b)?.log10_value,
        ))
    };
    let (log_sep, log_sep_t1) = sep(&params)?;
    let l = bounds::lipschitz_l(dist).map_err(|e| anyhow!(e))?;
    let m = bounds::jackson_degree(l, n as u32, args.target_err, args.c_jackson)
        .map_err(|e| anyhow!(e))?;
    let c_exponent = 3.5 * n as f64 * args.t_exp;

    let scaled_dist = dist / (n as f64).sqrt();
    let scaled = BoundParams {
        dist: scaled_dist,
        ..params
    };
    let (s_sep, s_sep_t1) = sep(&scaled)?;
    let s_l = bounds::lipschitz_l(scaled_dist).map_err(|e| anyhow!(e))?;

    let norms_a = bounds::generator_norms(a, resolution).map_err(|e| anyhow!(e))?;
    let norms_b = bounds::generator_norms(b, resolution).map_err(|e| anyhow!(e))?;
    for (name, norms) in [("A", &norms_a), ("B", &norms_b)] {
        for (i, v) in norms.iter().enumerate() {
            if *v > 0.5 {
                warnings.push(format!(
                    "generator {} of {name} has box norm ~{v:.4} > 1/2; the bound assumes \
                     normalized generators (rescaling does not change the set)",
                    i + 1
                ));
            }
        }
    }
    if args.normalize {
        for (name, set) in [("A", a), ("B", b)] {
            let s = bounds::normalize_generators(set, resolution).map_err(|e| anyhow!(e))?;
            let texts: Vec<String> = s.generators().iter().map(|g| g.to_string()).collect();
            warnings.push(format!(
                "normalized generators of {name}: {}",
                texts.join("; ")
            ));
        }
    }
    warnings.push(
        "the separation bound is a sufficient degree; the SDP hierarchy typically succeeds far below it"
            .to_string(),
    );

    Ok(BoundReport {
        n,
        dist_resolution: resolution,
        dist_estimate: dist,
        lipschitz_l: l,
        jackson_target_err: args.target_err,
        jackson_m: m,
        loj_c: args.loj_c,
        t_exp: args.t_exp,
        c_jackson: args.c_jackson,
        log10_gamma_a: gamma_a.log10_value,
        log10_gamma_b: gamma_b.log10_value,
        log10_separation_degree: log_sep,
        log10_separation_degree_t1: log_sep_t1,
        log10_separation_degree_without_c: log_sep - c_exponent * args.c_jackson.log10(),
        c_exponent,
        separation_degree: format!("10^{log_sep:.4}"),
        rescaled: RescaledBounds {
            dist_estimate: scaled_dist,
            lipschitz_l: s_l,
            jackson_m: bounds::jackson_degree(s_l, n as u32, args.target_err, args.c_jackson)
                .map_err(|e| anyhow!(e))?,
            log10_separation_degree: s_sep,
            log10_separation_degree_t1: s_sep_t1,
        },
        generator_norms_a: norms_a,
        generator_norms_b: norms_b,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct GridArgs {
    pub problem: PathBuf,
    pub result: PathBuf,
    pub resolution: usize,
    pub out: Option<PathBuf>,
}

pub fn cmd_grid(args: &GridArgs, out: &mut dyn Write, err: &mut dyn Write) -> Exit {
    let mut run = || -> Result<Exit, Failure> {
        let problem = ProblemFile::load(&args.problem)?;
        if problem.n != 2 {
            return Err(anyhow!("grid output is 2-D only; problem has n = {}", problem.n).into());
        }
        let (a, b) = problem.sets()?;
        let result = ResultFile::load(&args.result)?;
        let p = result.p.to_poly(2)?;
        let grid = BoxGrid::new(2, args.resolution).map_err(|e| anyhow!(e))?;
        let sink: Box<dyn Write + '_> = match &args.out {
            Some(path) => Box::new(
                std::fs::File::create(path)
                    .with_context(|| format!("creating {}", path.display()))?,
            ),
            None => Box::new(&mut *out),
        };
        write_grid(&p, &a, &b, &grid, sink)?;
        Ok(Exit::Success)
    };
    match run() {
        Ok(code) => code,
        Err(f) => report_failure(f, err),
    }
}

/// CSV rows `x1,x2,p,inA,inB` over the grid (x1 varies slowest).
pub fn write_grid(
    p: &Polynomial,
    a: &SemialgebraicSet,
    b: &SemialgebraicSet,
    grid: &BoxGrid,
    sink: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["x1", "x2", "p", "inA", "inB"])?;
    for x in grid.points() {
        let v = p.evaluate(&x)?;
        let in_a = u8::from(a.contains(&x)?);
        let in_b = u8::from(b.contains(&x)?);
        w.write_record(&[
            x[0].to_string(),
            x[1].to_string(),
            v.to_string(),
            in_a.to_string(),
            in_b.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
