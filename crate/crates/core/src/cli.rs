//! Command-line front end: config resolution, subcommands and report emission.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::family::io::{fmt_f64, load_family};
use crate::family::{calibrate_nu, check_assumptions, Preset, SequenceFamily, CALIBRATION_DEPTH, CALIBRATION_WIDTH};
use crate::hyperbolic::Mobius;
use crate::orbit::{
    certified_limits, count_orbit, dirichlet_check, lower_bound_witness_count, sharpness_scan, tuple_count_bruteforce,
    CountLimits, PseudoBallQuery,
};
use crate::spectral::{nonvanishing_check, poincare_partial_sum, EigenFunctionSpec};
use crate::words::{estimate_epsilon, gap_record, enumerate_words, WordBox};

pub const SCHEMA: u32 = 1;
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "adsgamma", version, about = "Orbit counting and Poincaré series for infinitely generated groups acting on AdS3")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Preset name or path to a family TOML file.
    #[arg(long, global = true)]
    pub family: Option<String>,
    /// Starting index, or "auto" to calibrate.
    #[arg(long, global = true)]
    pub nu: Option<String>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML file with top-level keys and one section per command.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ping-pong assumptions over [nu, K].
    Check {
        #[arg(long)]
        k_max: Option<u64>,
    },
    /// Orbit points in a pseudo-ball.
    Count {
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        k_max: Option<u64>,
        #[arg(long)]
        max_len: Option<usize>,
        /// Base point as four matrix entries "a,b,c,d".
        #[arg(long)]
        base: Option<String>,
        /// Additional seeded random base points of norm at most 1.
        #[arg(long)]
        random_points: Option<usize>,
        #[arg(long)]
        no_prune: bool,
    },
    /// Single-generator witnesses of the lower bound.
    Witnesses {
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Sharpness records as CSV.
    Sharpness {
        #[arg(long)]
        k_max: Option<u64>,
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Partial sum of the Poincaré series.
    Spectral {
        #[arg(long)]
        m: Option<u32>,
        /// Depth from the certified limits at this radius.
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        k_max: Option<u64>,
        #[arg(long)]
        max_len: Option<usize>,
        #[arg(long)]
        base: Option<String>,
    },
    /// Number of tuples of positive integers with sum at most R.
    Tuples { r: Option<u32> },
    /// Norm-gap records as CSV.
    Gap {
        #[arg(long)]
        k_max: Option<u64>,
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Smallest nu whose measured epsilon meets a target.
    Calibrate {
        #[arg(long)]
        target_eps: Option<f64>,
        #[arg(long)]
        k_max: Option<u64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check { .. } => "check",
            Command::Count { .. } => "count",
            Command::Witnesses { .. } => "witnesses",
            Command::Sharpness { .. } => "sharpness",
            Command::Spectral { .. } => "spectral",
            Command::Tuples { .. } => "tuples",
            Command::Gap { .. } => "gap",
            Command::Calibrate { .. } => "calibrate",
        }
    }
}

/// Key lookup in a config file: the command's section first, then the top level.
struct FileConfig {
    table: toml::Table,
    section: &'static str,
    base: PathBuf,
}

impl FileConfig {
    fn load(path: Option<&Path>, section: &'static str) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self { table: toml::Table::new(), section, base: PathBuf::from(".") });
        };
        let text = std::fs::read_to_string(path)?;
        let table: toml::Table = toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Ok(Self { table, section, base })
    }

    fn get(&self, key: &str) -> Option<&toml::Value> {
        self.table.get(self.section).and_then(|s| s.get(key)).or_else(|| self.table.get(key).filter(|v| !v.is_table()))
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(f)) => Ok(Some(*f)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(Error::Parse(format!("{key} = {v} is not a number"))),
        }
    }

    fn int(&self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(v) => Err(Error::Parse(format!("{key} = {v} is not a non-negative integer"))),
        }
    }

    fn string(&self, key: &str) -> Result<Option<String>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(toml::Value::Integer(i)) => Ok(Some(i.to_string())),
            Some(v) => Err(Error::Parse(format!("{key} = {v} is not a string"))),
        }
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            None => Ok(false),
            Some(toml::Value::Boolean(b)) => Ok(*b),
            Some(v) => Err(Error::Parse(format!("{key} = {v} is not a boolean"))),
        }
    }
}

/// Fully resolved parameters; their canonical JSON is hashed into every report.
#[derive(Debug, Default, Serialize)]
struct Resolved {
    command: &'static str,
    family: String,
    nu: Option<u64>,
    seed: u64,
    params: BTreeMap<String, Value>,
}

impl Resolved {
    fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

struct Ctx {
    fam: SequenceFamily,
    nu: u64,
    resolved: Resolved,
    out: Option<PathBuf>,
    file: FileConfig,
}

impl Ctx {
    fn param<T: Serialize>(&mut self, key: &str, v: T) -> T {
        self.resolved.params.insert(key.to_string(), serde_json::to_value(&v).expect("param serializes"));
        v
    }

    fn envelope(&self, report: Value, epsilon_hat: f64) -> Value {
        json!({
            "schema": SCHEMA,
            "command": self.resolved.command,
            "config_hash": self.resolved.hash(),
            "config": &self.resolved,
            "nu": self.nu,
            "epsilon_hat": finite_or_null(epsilon_hat),
            "report": report,
        })
    }

    fn csv_preamble(&self, epsilon_hat: f64) -> String {
        format!(
            "# schema={SCHEMA} command={} config_hash={} family={} nu={} epsilon_hat={}\n",
            self.resolved.command,
            self.resolved.hash(),
            self.resolved.family,
            self.nu,
            fmt_f64(epsilon_hat)
        )
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => std::fs::write(p, text)?,
            None => {
                let mut so = std::io::stdout().lock();
                so.write_all(text.as_bytes())?;
                so.flush()?;
            }
        }
        Ok(())
    }

    fn emit_json(&self, v: &Value) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Internal(e.to_string()))?;
        s.push('\n');
        self.emit(&s)
    }

    fn calibration_eps(&self) -> Result<f64> {
        estimate_epsilon(&self.fam, self.nu, self.nu + CALIBRATION_WIDTH, CALIBRATION_DEPTH)
    }
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() { json!(x) } else { Value::Null }
}

fn parse_base(s: &str) -> Result<Mobius> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad base entry '{t}'"))))
        .collect::<Result<_>>()?;
    if v.len() != 4 {
        return Err(Error::Parse("base needs four entries a,b,c,d".into()));
    }
    Mobius::from_f64(v[0], v[1], v[2], v[3])
}

fn resolve_family(name: &str, base: &Path) -> Result<SequenceFamily> {
    match Preset::from_name(name) {
        Ok(p) => Ok(SequenceFamily::preset(p)),
        Err(_) => {
            let p = Path::new(name);
            let p = if p.is_absolute() || p.exists() { p.to_path_buf() } else { base.join(p) };
            if !p.exists() {
                return Err(Error::Parse(format!("unknown preset or missing family file '{name}'")));
            }
            load_family(&p)
        }
    }
}

const AUTO_TARGET_EPS: f64 = 0.01;

fn build_ctx(g: &GlobalArgs, command: &Command) -> Result<Ctx> {
    let section = command.name();
    let file = FileConfig::load(g.config.as_deref(), section)?;
    let family = g.family.clone().or(file.string("family")?).unwrap_or_else(|| Preset::DoubleExp.name().to_string());
    let mut fam = resolve_family(&family, &file.base)?;
    let seed = g.seed.or(file.int("seed")?).unwrap_or(0);
    let nu_arg = g.nu.clone().or(file.string("nu")?);
    let needs_nu = !matches!(command, Command::Tuples { .. } | Command::Calibrate { .. });
    let nu = match nu_arg.as_deref() {
        None => fam.nu,
        Some("auto") if needs_nu => {
            let c = calibrate_nu(&fam, AUTO_TARGET_EPS, fam.nu + 200)?;
            c.nu.ok_or_else(|| Error::Assumption(format!("no nu reaches epsilon {AUTO_TARGET_EPS}")))?
        }
        Some("auto") => fam.nu,
        Some(s) => s.parse::<u64>().map_err(|_| Error::Parse(format!("bad nu '{s}'")))?,
    };
    if nu < fam.k_min {
        return Err(Error::Domain(format!("nu = {nu} below k_min = {}", fam.k_min)));
    }
    fam.nu = nu;
    let out = g.out.clone().or(file.string("out")?.map(|s| file.base.join(s)));
    let resolved = Resolved { command: section, family: fam.name.clone(), nu: needs_nu.then_some(nu), seed, params: BTreeMap::new() };
    Ok(Ctx { fam, nu, resolved, out, file })
}

/// Parses the arguments, runs the command and returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let threads = cli.global.threads;
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return EXIT_USAGE;
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Assumption(_) => EXIT_VIOLATION,
                _ => EXIT_USAGE,
            }
        }
    }
}

/// Runs a parsed command; returns the exit code on success.
pub fn run(cli: &Cli) -> Result<i32> {
    let mut ctx = build_ctx(&cli.global, &cli.command)?;
    match &cli.command {
        Command::Check { k_max } => cmd_check(&mut ctx, *k_max),
        Command::Count { radius, k_max, max_len, base, random_points, no_prune } => {
            cmd_count(&mut ctx, *radius, *k_max, *max_len, base.as_deref(), *random_points, *no_prune)
        }
        Command::Witnesses { radius } => cmd_witnesses(&mut ctx, *radius),
        Command::Sharpness { k_max, max_len } => cmd_sharpness(&mut ctx, *k_max, *max_len),
        Command::Spectral { m, radius, k_max, max_len, base } => cmd_spectral(&mut ctx, *m, *radius, *k_max, *max_len, base.as_deref()),
        Command::Tuples { r } => cmd_tuples(&mut ctx, *r),
        Command::Gap { k_max, max_len } => cmd_gap(&mut ctx, *k_max, *max_len),
        Command::Calibrate { target_eps, k_max } => cmd_calibrate(&mut ctx, *target_eps, *k_max),
    }
}

fn pick<T>(cli: Option<T>, file: Option<T>, default: T) -> T {
    cli.or(file).unwrap_or(default)
}

fn cmd_check(ctx: &mut Ctx, k_max: Option<u64>) -> Result<i32> {
    let default_k = ctx.nu + 20;
    let default_k = ctx.fam.max_index().map_or(default_k, |m| default_k.min(m.saturating_sub(1)).max(ctx.nu));
    let k = ctx.param("k_max", pick(k_max, ctx.file.int("k_max")?, default_k));
    let rep = check_assumptions(&ctx.fam, k)?;
    let eps = if rep.assumption1_ok { ctx.calibration_eps()? } else { f64::NAN };
    let code = if rep.assumption1_ok { EXIT_OK } else { EXIT_VIOLATION };
    let v = ctx.envelope(serde_json::to_value(&rep).map_err(|e| Error::Internal(e.to_string()))?, eps);
    ctx.emit_json(&v)?;
    Ok(code)
}

fn cmd_count(
    ctx: &mut Ctx,
    radius: Option<f64>,
    k_max: Option<u64>,
    max_len: Option<usize>,
    base: Option<&str>,
    random_points: Option<usize>,
    no_prune: bool,
) -> Result<i32> {
    let r = ctx.param("R", pick(radius, ctx.file.float("R")?, 8.0));
    let k_max = ctx.param("k_max", k_max.or(ctx.file.int("k_max")?));
    let max_len = ctx.param("max_len", max_len.or(ctx.file.int("max_len")?.map(|m| m as usize)));
    let base_s = ctx.param("base", base.map(str::to_string).or(ctx.file.string("base")?));
    let n_random = ctx.param("random_points", pick(random_points, ctx.file.int("random_points")?.map(|n| n as usize), 0));
    let prune = ctx.param("prune", !(no_prune || ctx.file.flag("no_prune")?));
    let limits = match (k_max, max_len) {
        (None, None) => CountLimits::Auto,
        (k, m) => CountLimits::Box { k_max: k.unwrap_or(ctx.nu + 6), max_len: m.unwrap_or(3) },
    };
    let mut bases = vec![match &base_s {
        Some(s) => parse_base(s)?,
        None => Mobius::identity(),
    }];
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.resolved.seed);
    for _ in 0..n_random {
        bases.push(Mobius::sample(&mut rng, 1.0));
    }
    let mut reports = Vec::new();
    let mut code = EXIT_OK;
    let mut eps = f64::NAN;
    for x in &bases {
        let q = PseudoBallQuery::new(*x, r)?;
        let rep = count_orbit(&ctx.fam, ctx.nu, &q, limits, prune)?;
        if rep.bound_checks.values().any(|b| !b.satisfied) {
            code = EXIT_VIOLATION;
        }
        eps = if eps.is_nan() { rep.epsilon_hat } else { eps.max(rep.epsilon_hat) };
        let dir = if n_random > 0 {
            let lim = CountLimits::Box { k_max: rep.truncation.k_used, max_len: rep.truncation.m_used.min(2) };
            Some(dirichlet_check(&ctx.fam, ctx.nu, x, lim)?.in_domain)
        } else {
            None
        };
        let mut v = serde_json::to_value(&rep).map_err(|e| Error::Internal(e.to_string()))?;
        if let Some(d) = dir {
            v["in_dirichlet_domain"] = json!(d);
        }
        reports.push(v);
    }
    let body = if reports.len() == 1 { reports.pop().expect("one report") } else { Value::Array(reports) };
    let v = ctx.envelope(body, eps);
    ctx.emit_json(&v)?;
    Ok(code)
}

fn cmd_witnesses(ctx: &mut Ctx, radius: Option<f64>) -> Result<i32> {
    let r = ctx.param("R", pick(radius, ctx.file.float("R")?, 8.0));
    let scan = lower_bound_witness_count(&ctx.fam, ctx.nu, r)?;
    let code = match scan.lower_bound {
        Some(lb) if (scan.count as f64) < lb => EXIT_VIOLATION,
        _ => EXIT_OK,
    };
    let eps = ctx.calibration_eps()?;
    let v = ctx.envelope(serde_json::to_value(&scan).map_err(|e| Error::Internal(e.to_string()))?, eps);
    ctx.emit_json(&v)?;
    Ok(code)
}

fn cmd_sharpness(ctx: &mut Ctx, k_max: Option<u64>, max_len: Option<usize>) -> Result<i32> {
    let k = ctx.param("k_max", pick(k_max, ctx.file.int("k_max")?, 4 * ctx.nu));
    let m = ctx.param("max_len", pick(max_len, ctx.file.int("max_len")?.map(|m| m as usize), 1));
    let scan = sharpness_scan(&ctx.fam, ctx.nu, k, m)?;
    let eps = ctx.calibration_eps()?;
    let mut text = ctx.csv_preamble(eps);
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Internal(e.to_string());
    w.write_record(["k", "word", "x", "y", "r", "theta", "ratio"]).map_err(err)?;
    for r in &scan.records {
        let k = if r.word.len() == 1 { r.word.letters()[0].index.to_string() } else { String::new() };
        w.write_record([k, r.word.to_string(), fmt_f64(r.x_norm), fmt_f64(r.y_norm), fmt_f64(r.r_polar), fmt_f64(r.theta), fmt_f64(r.ratio)])
            .map_err(err)?;
    }
    let body = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    text.push_str(&String::from_utf8(body).map_err(|e| Error::Internal(e.to_string()))?);
    let vd = &scan.verdict;
    text.push_str(&format!(
        "# verdict first_ratio={} last_ratio={} monotone_decreasing={} halved={} c_max={} c_sup={}\n",
        fmt_f64(vd.first_ratio),
        fmt_f64(vd.last_ratio),
        vd.monotone_decreasing,
        vd.halved,
        fmt_f64(vd.c_max),
        fmt_f64(vd.c_sup)
    ));
    ctx.emit(&text)?;
    Ok(EXIT_OK)
}

fn cmd_spectral(
    ctx: &mut Ctx,
    m: Option<u32>,
    radius: Option<f64>,
    k_max: Option<u64>,
    max_len: Option<usize>,
    base: Option<&str>,
) -> Result<i32> {
    let m = ctx.param("m", pick(m, ctx.file.int("m")?.map(|v| v as u32), 32));
    let k_max = ctx.param("k_max", k_max.or(ctx.file.int("k_max")?));
    let max_len = ctx.param("max_len", max_len.or(ctx.file.int("max_len")?.map(|v| v as usize)));
    let base_s = ctx.param("base", base.map(str::to_string).or(ctx.file.string("base")?));
    let x = match &base_s {
        Some(s) => parse_base(s)?,
        None => Mobius::identity(),
    };
    let depth = match (k_max, max_len) {
        (None, None) => {
            let r = ctx.param("R", pick(radius, ctx.file.float("R")?, 20.0));
            let c = certified_limits(&ctx.fam, ctx.nu, &PseudoBallQuery::new(x, r)?)?;
            WordBox::new(ctx.nu, c.k_max, c.max_len)
        }
        (k, l) => WordBox::new(ctx.nu, k.unwrap_or(ctx.nu + 6), l.unwrap_or(3)),
    };
    let spec = EigenFunctionSpec::new(m)?;
    let (mut v, eps) = if m % 2 == 0 && x == Mobius::identity() {
        let nv = nonvanishing_check(&ctx.fam, ctx.nu, &spec, depth)?;
        let eps = nv.report.epsilon_hat;
        let mut v = serde_json::to_value(&nv.report).map_err(|e| Error::Internal(e.to_string()))?;
        v["nonvanishing_margin"] = json!(nv.margin);
        v["identity_only"] = json!(nv.identity_only);
        (v, eps)
    } else {
        let rep = poincare_partial_sum(&ctx.fam, ctx.nu, &spec, &x, depth)?;
        let eps = rep.epsilon_hat;
        (serde_json::to_value(&rep).map_err(|e| Error::Internal(e.to_string()))?, eps)
    };
    if v["covered_radius"].is_null() {
        v["covered_radius"] = json!("inf");
    }
    let env = ctx.envelope(v, eps);
    ctx.emit_json(&env)?;
    Ok(EXIT_OK)
}

fn cmd_tuples(ctx: &mut Ctx, r: Option<u32>) -> Result<i32> {
    let r = ctx.param("R", pick(r, ctx.file.int("R")?.map(|v| v as u32), 3));
    let n = tuple_count_bruteforce(r)?;
    ctx.emit(&format!("{n}\n"))?;
    Ok(if n == (1u64 << r) - 1 { EXIT_OK } else { EXIT_VIOLATION })
}

fn cmd_gap(ctx: &mut Ctx, k_max: Option<u64>, max_len: Option<usize>) -> Result<i32> {
    let k = ctx.param("k_max", pick(k_max, ctx.file.int("k_max")?, ctx.nu + 4));
    let m = ctx.param("max_len", pick(max_len, ctx.file.int("max_len")?.map(|v| v as usize), 2));
    let eps = estimate_epsilon(&ctx.fam, ctx.nu, k, m)?;
    let mut text = ctx.csv_preamble(eps);
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Internal(e.to_string());
    w.write_record(["word", "length", "norm_j", "norm_rho", "predicted_gap", "residual", "bound"]).map_err(err)?;
    let mut code = EXIT_OK;
    for word in enumerate_words(ctx.nu, k, m).filter(|w| !w.is_identity()) {
        let g = gap_record(&word, &ctx.fam)?;
        let bound = (word.len() as f64 + 8.0) * eps;
        if g.residual > bound * (1.0 + 1e-9) + 1e-12 {
            code = EXIT_VIOLATION;
        }
        w.write_record([
            word.to_string(),
            word.len().to_string(),
            fmt_f64(g.norm_j),
            fmt_f64(g.norm_rho),
            fmt_f64(g.predicted_gap),
            fmt_f64(g.residual),
            fmt_f64(bound),
        ])
        .map_err(err)?;
    }
    let body = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    text.push_str(&String::from_utf8(body).map_err(|e| Error::Internal(e.to_string()))?);
    ctx.emit(&text)?;
    Ok(code)
}

fn cmd_calibrate(ctx: &mut Ctx, target: Option<f64>, k_max: Option<u64>) -> Result<i32> {
    let t = ctx.param("target_eps", pick(target, ctx.file.float("target_eps")?, AUTO_TARGET_EPS));
    let k = ctx.param("k_max", pick(k_max, ctx.file.int("k_max")?, ctx.fam.nu + 100));
    let out = calibrate_nu(&ctx.fam, t, k)?;
    let code = if out.nu.is_some() { EXIT_OK } else { EXIT_VIOLATION };
    let v = ctx.envelope(serde_json::to_value(&out).map_err(|e| Error::Internal(e.to_string()))?, out.best_eps);
    ctx.emit_json(&v)?;
    Ok(code)
}
