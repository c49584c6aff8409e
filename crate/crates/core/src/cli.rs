//! Command-line front end: `score`, `backtest`, `risk`, `verify`, `estimate`.
//!
//! Every command writes a single JSON object (keys in a fixed order, floats
//! with 17 significant digits) to `--output` or stdout. Exit codes: 0 success
//! or green, 10 yellow, 20 red, 2 input error, 3 domain or computation error,
//! 4 verification failure.

use crate::backtest::{self, parse_fields, ForecastSeries};
use crate::dist::Distribution;
use crate::elicit_check::{run_suite, SuiteConfig, DEFAULT_SEED};
use crate::error::{invalid, Error, Result};
use crate::estimate::{self, EstimateResult, RegressionData};
use crate::functionals::FunctionalSpec;
use crate::ident::IdentSpec;
use crate::scoring::ScoreParams;
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::Serialize;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_YELLOW: i32 = 10;
pub const EXIT_RED: i32 = 20;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

const DEMO_N: usize = 500;
const DEMO_BIAS: f64 = 0.5;
const DEFAULT_ETA: f64 = 0.05;

#[derive(Parser, Debug)]
#[command(name = "elicit", version, about = "Scoring functions, risk measures, estimation and comparative backtests")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Score forecasts in a CSV `t,y,x1[,x2,...]`.
    Score(RunConfig),
    /// Diebold-Mariano three-zone backtest on a CSV `t,y,x1..xk,z1..zk`.
    Backtest(RunConfig),
    /// VaR, ES, EVaR and optional spectral risk of a one-column sample.
    Risk(RunConfig),
    /// Run the oracle verification suite.
    Verify(RunConfig),
    /// M-, Z-, Huber or linear-regression estimation.
    Estimate(RunConfig),
}

#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Score family: bregman, pinball, quantile, expectile, var_es, spectral, mean_variance.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub convex: Option<String>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Spectral pairs `p1:q1,p2:q2`.
    #[arg(long)]
    pub pairs: Option<String>,
    #[arg(long)]
    pub bandwidth: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, env = "ELICIT_SEED")]
    pub seed: Option<u64>,
    /// Grid override `lo:hi:steps`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Use a built-in synthetic data set instead of `--input`.
    #[arg(long)]
    pub demo: bool,
    /// Estimation method: m, z, huber, linear.
    #[arg(long)]
    pub method: Option<String>,
    /// Huber constant.
    #[arg(long)]
    pub k: Option<f64>,
    /// The estimation or risk CSV has a header row.
    #[arg(long)]
    pub header: bool,
}

impl RunConfig {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn eta(&self) -> Result<f64> {
        let eta = self.eta.unwrap_or(DEFAULT_ETA);
        if eta > 0.0 && eta < 0.5 {
            Ok(eta)
        } else {
            invalid(format!("eta must lie in (0, 1/2), got {eta}"))
        }
    }

    pub fn score_params(&self, default_family: Option<&str>) -> Result<ScoreParams> {
        let family = match (&self.family, default_family) {
            (Some(f), _) => f.clone(),
            (None, Some(f)) => f.to_string(),
            (None, None) => return invalid("--family is required"),
        };
        let pairs = self.pairs.as_deref().map(crate::scoring::parse_pairs).transpose()?;
        Ok(ScoreParams {
            family,
            alpha: self.alpha,
            tau: self.tau,
            convex: self.convex.clone(),
            g1: None,
            c: self.c,
            pairs,
            scale: None,
        })
    }

    pub fn grid(&self) -> Result<Option<(f64, f64, usize)>> {
        let Some(g) = &self.grid else { return Ok(None) };
        let parts: Vec<&str> = g.split(':').collect();
        if parts.len() != 3 {
            return invalid(format!("--grid: expected lo:hi:steps, got {g:?}"));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("--grid: bad number {s:?}")));
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        let steps: usize =
            parts[2].trim().parse().map_err(|_| Error::InvalidInput(format!("--grid: bad step count {:?}", parts[2])))?;
        if !(lo < hi) || steps < 2 {
            return invalid("--grid: need lo < hi and steps >= 2");
        }
        Ok(Some((lo, hi, steps)))
    }

    fn input(&self) -> Result<&PathBuf> {
        self.input.as_ref().ok_or_else(|| Error::InvalidInput("--input is required".into()))
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) => EXIT_INPUT,
        _ => EXIT_COMPUTE,
    }
}

struct SciFloat;

impl serde_json::ser::Formatter for SciFloat {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> std::io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> std::io::Result<()> {
        write!(w, "{:.16e}", v as f64)
    }
}

/// Compact JSON with every float written as `d.dddddddddddddddde±x`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFloat);
    value.serialize(&mut ser).map_err(|e| Error::Evaluation(format!("json: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Evaluation(format!("json: {e}")))
}

#[derive(Serialize)]
pub struct RowScore {
    pub row: usize,
    pub t: String,
    pub score: f64,
}

#[derive(Serialize)]
pub struct ScoreReport {
    pub family: String,
    pub n: usize,
    pub mean_score: f64,
    pub scores: Vec<RowScore>,
}

#[derive(Serialize)]
pub struct RiskReport {
    pub n: usize,
    pub alpha: f64,
    pub tau: f64,
    pub var: f64,
    pub es: f64,
    pub evar: f64,
    pub spectral: Option<f64>,
}

#[derive(Serialize)]
pub struct EstimateReport {
    pub method: String,
    pub family: Option<String>,
    pub n: usize,
    pub result: EstimateResult,
}

fn emit(cfg: &RunConfig, json: &str) -> Result<()> {
    match &cfg.output {
        Some(p) => std::fs::write(p, json).map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(json.as_bytes()).map_err(|e| Error::InvalidInput(format!("stdout: {e}")))
        }
    }
}

fn finish(cfg: &RunConfig, r: Result<(String, i32)>) -> i32 {
    match r.and_then(|(json, code)| emit(cfg, &json).map(|_| code)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("elicit: {e}");
            exit_code(&e)
        }
    }
}

fn open_csv(cfg: &RunConfig, has_header: bool) -> Result<csv::Reader<std::fs::File>> {
    let path = cfg.input()?;
    csv::ReaderBuilder::new()
        .has_headers(has_header)
        .from_path(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// Rows `(t, y, x)` from a CSV `t,y,x1[,x2,...]`.
fn read_forecasts(cfg: &RunConfig) -> Result<Vec<(String, f64, Vec<f64>)>> {
    let mut reader = open_csv(cfg, true)?;
    let width = reader.headers().map_err(|e| Error::InvalidInput(format!("csv header: {e}")))?.len();
    if width < 3 {
        return invalid("csv header: expected t,y,x1[,x2,...]");
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::InvalidInput(format!("csv row {}: {e}", i + 1)))?;
        let vals = parse_fields(rec.iter().skip(1), i + 1)?;
        rows.push((rec[0].to_string(), vals[0], vals[1..].to_vec()));
    }
    if rows.is_empty() {
        return invalid("csv: no data rows");
    }
    Ok(rows)
}

/// All numeric values of a CSV, one row per record.
fn read_numeric(cfg: &RunConfig) -> Result<Vec<Vec<f64>>> {
    let mut reader = open_csv(cfg, cfg.header)?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::InvalidInput(format!("csv row {}: {e}", i + 1)))?;
        rows.push(parse_fields(rec.iter(), i + 1)?);
    }
    if rows.is_empty() {
        return invalid("csv: no data rows");
    }
    Ok(rows)
}

fn first_column(cfg: &RunConfig) -> Result<Vec<f64>> {
    if cfg.demo {
        return Ok(demo_sample(cfg.seed()));
    }
    Ok(read_numeric(cfg)?.into_iter().map(|r| r[0]).collect())
}

/// 200 standard normal draws rounded to 1e-6.
pub fn demo_sample(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..200)
        .map(|_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            (v * 1e6).round() / 1e6
        })
        .collect()
}

fn score_run(cfg: &RunConfig) -> Result<(String, i32)> {
    let params = cfg.score_params(None)?;
    let spec = params.build()?;
    let rows = read_forecasts(cfg)?;
    let mut scores = Vec::with_capacity(rows.len());
    for (i, (t, y, x)) in rows.into_iter().enumerate() {
        let score = spec.score(&x, y).map_err(|e| match e {
            Error::Domain(m) => Error::Domain(format!("row {}: {m}", i + 1)),
            Error::InvalidInput(m) => Error::InvalidInput(format!("row {}: {m}", i + 1)),
            other => other,
        })?;
        scores.push(RowScore { row: i + 1, t, score });
    }
    let mean_score = scores.iter().map(|r| r.score).sum::<f64>() / scores.len() as f64;
    let report = ScoreReport { family: params.to_text(), n: scores.len(), mean_score, scores };
    Ok((to_json(&report)?, EXIT_OK))
}

fn backtest_run(cfg: &RunConfig) -> Result<(String, i32)> {
    let eta = cfg.eta()?;
    let params = if cfg.demo && cfg.family.is_none() {
        ScoreParams { family: "pinball".into(), alpha: Some(cfg.alpha.unwrap_or(0.05)), ..cfg.score_params(Some("pinball"))? }
    } else {
        cfg.score_params(None)?
    };
    let spec = params.build()?;
    let fs = if cfg.demo {
        backtest::demo_series(&spec, DEMO_N, DEMO_BIAS, cfg.seed())?
    } else {
        ForecastSeries::from_csv(cfg.input()?)?
    };
    let report = backtest::dm_test(&spec, &fs, eta, cfg.bandwidth)?;
    Ok((to_json(&report)?, report.zone.exit_code()))
}

fn risk_run(cfg: &RunConfig) -> Result<(String, i32)> {
    let sample = first_column(cfg)?;
    let alpha = cfg.alpha.unwrap_or(0.05);
    let tau = cfg.tau.unwrap_or(alpha);
    let f = Distribution::empirical(&sample)?;
    let one = |t: FunctionalSpec| -> Result<f64> { Ok(t.evaluate(&f)?[0]) };
    let spectral = match &cfg.pairs {
        Some(p) => Some(one(FunctionalSpec::spectral(crate::scoring::parse_pairs(p)?)?)?),
        None => None,
    };
    let report = RiskReport {
        n: sample.len(),
        alpha,
        tau,
        var: one(FunctionalSpec::VaR(alpha))?,
        es: one(FunctionalSpec::ES(alpha))?,
        evar: one(FunctionalSpec::EVaR(tau))?,
        spectral,
    };
    Ok((to_json(&report)?, EXIT_OK))
}

fn verify_run(cfg: &RunConfig) -> Result<(String, i32)> {
    let mut sc = SuiteConfig { seed: cfg.seed(), ..SuiteConfig::default() };
    if let Some(a) = cfg.alpha {
        sc.var_alpha = a;
    }
    if let Some((_, _, steps)) = cfg.grid()? {
        sc.steps = steps;
    }
    let report = run_suite(&sc)?;
    let code = if report.passed { EXIT_OK } else { EXIT_VERIFY };
    Ok((to_json(&report)?, code))
}

fn estimate_run(cfg: &RunConfig) -> Result<(String, i32)> {
    let method = cfg.method.as_deref().unwrap_or("m");
    let (family, n, result) = match method {
        "m" => {
            let params = cfg.score_params(None)?;
            let spec = params.build()?;
            let y = first_column(cfg)?;
            let bracket = match cfg.grid()? {
                Some((lo, hi, _)) => (lo, hi),
                None => sample_bracket(&y),
            };
            (Some(params.to_text()), y.len(), estimate::m_estimate(&spec, &y, bracket)?)
        }
        "z" => {
            let family = cfg.family.clone().unwrap_or_else(|| "mean".into());
            let v = match family.as_str() {
                "mean" => IdentSpec::Mean,
                "quantile" | "pinball" => IdentSpec::Quantile(required(cfg.alpha, "alpha")?),
                "expectile" => IdentSpec::Expectile(required(cfg.tau, "tau")?),
                "huber" => IdentSpec::huber(required(cfg.k, "k")?)?,
                other => return invalid(format!("z-estimation: unknown family {other:?}")),
            };
            let y = first_column(cfg)?;
            (Some(family), y.len(), estimate::z_estimate(&v, &y)?)
        }
        "huber" => {
            let y = first_column(cfg)?;
            (None, y.len(), estimate::huber_k(&y, required(cfg.k, "k")?)?)
        }
        "linear" => {
            let params = cfg.score_params(None)?;
            let spec = params.build()?;
            let data = if cfg.demo {
                RegressionData::intercept(&demo_sample(cfg.seed()))?
            } else {
                let rows = read_numeric(cfg)?;
                let y: Vec<f64> = rows.iter().map(|r| r[0]).collect();
                let x: Vec<Vec<f64>> = rows.iter().map(|r| std::iter::once(1.0).chain(r[1..].iter().copied()).collect()).collect();
                RegressionData::new(&x, &y)?
            };
            (Some(params.to_text()), data.n(), estimate::fit_linear(&spec, &data)?)
        }
        other => return invalid(format!("unknown estimation method {other:?}")),
    };
    let report = EstimateReport { method: method.to_string(), family, n, result };
    Ok((to_json(&report)?, EXIT_OK))
}

fn required(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| Error::InvalidInput(format!("--{name} is required")))
}

fn sample_bracket(y: &[f64]) -> (f64, f64) {
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = ((hi - lo) * 0.1).max(1.0);
    (lo - pad, hi + pad)
}

pub fn cmd_score(cfg: &RunConfig) -> i32 {
    finish(cfg, score_run(cfg))
}

pub fn cmd_backtest(cfg: &RunConfig) -> i32 {
    finish(cfg, backtest_run(cfg))
}

pub fn cmd_risk(cfg: &RunConfig) -> i32 {
    finish(cfg, risk_run(cfg))
}

pub fn cmd_verify(cfg: &RunConfig) -> i32 {
    finish(cfg, verify_run(cfg))
}

pub fn cmd_estimate(cfg: &RunConfig) -> i32 {
    finish(cfg, estimate_run(cfg))
}

pub fn run(cli: &Cli) -> i32 {
    match &cli.command {
        Command::Score(c) => cmd_score(c),
        Command::Backtest(c) => cmd_backtest(c),
        Command::Risk(c) => cmd_risk(c),
        Command::Verify(c) => cmd_verify(c),
        Command::Estimate(c) => cmd_estimate(c),
    }
}

/// Parses arguments (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
