//! Command-line front end: `paths`, `qv`, `chiqv`, `ito`, `replicate` and `replay`.
//!
//! Options may come from a `key = value` file given with `--config`; flags on
//! the command line override it. Every run appends one JSON line to
//! `manifest.jsonl` in the output directory holding the resolved arguments and
//! the SHA-256 of every file written, so `replay` can re-run it and compare.
//!
//! Exit codes: 0 pass or informational, 2 failed verdict, 64 usage error,
//! 1 any other runtime error.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::chi_qv::{chi_qv_suite, global_qv_divergence, ChiElement, Kernel};
use crate::clark_ocone::{
    replication_study_with, HedgeTask, MultiPayoff, NamedPayoff, QvGate, TimeFunction, WienerMode,
};
use crate::error::{Error, Result};
use crate::functionals::NamedFunctional;
use crate::grid_paths::{component_seeds, fmt17, make_grid, parse_number, sample, GaussianSpec, Path, PathMetadata, PathSource, TimeGrid};
use crate::ito_check::{ito_residual, ito_study, QuadraticMode, QvInput};
use crate::regularize::{converge, covariation_eps, mutual_covariations, EpsilonLadder};
use crate::report::{ConvergenceReport, ErrorStatistic, Verdict};
use crate::window::LagInterval;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "REGCALC_OUT";
pub const DEFAULT_OUT: &str = "regcalc-out";
/// Components used by `--family mixed` when `--components` is absent.
pub const DEFAULT_MIXTURE: &str = "brownian,fbm:0.75";
pub const MANIFEST: &str = "manifest.jsonl";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

const COMMANDS: [&str; 6] = ["paths", "qv", "chiqv", "ito", "replicate", "replay"];

#[derive(Debug, Parser)]
#[command(name = "regcalc", version, about = "Stochastic calculus via regularization on sampled Gaussian paths")]
#[command(args_override_self = true)]
pub struct Cli {
    /// `key = value` file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $REGCALC_OUT or ./regcalc-out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample paths and write them as CSV with metadata sidecars.
    Paths(PathsArgs),
    /// Covariation convergence report against the known bracket.
    Qv(QvArgs),
    /// Chi-quadratic variation suite for one test element, or the global-norm diagnostic.
    Chiqv(ChiqvArgs),
    /// Residual of the window Ito formula for a named functional.
    Ito(ItoArgs),
    /// Hedging experiments over replicas and grid sizes.
    Replicate(ReplicateArgs),
    /// Re-run a manifest entry and compare output hashes.
    Replay(ReplayArgs),
}

fn real(s: &str) -> std::result::Result<f64, String> {
    parse_number(s).ok_or_else(|| format!("not a number: {s}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Brownian,
    Fbm,
    Bifractional,
    Scaled,
    Mixed,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProcessArgs {
    #[arg(long, value_enum, default_value = "brownian")]
    pub family: Family,
    /// Hurst parameter (fractions like 5/6 are accepted).
    #[arg(long = "H", value_parser = real)]
    pub hurst: Option<f64>,
    #[arg(long = "K", value_parser = real)]
    pub k: Option<f64>,
    /// Comma-separated component specs for `mixed`, or the base spec for `scaled`.
    #[arg(long)]
    pub components: Option<String>,
    /// Scale factor for `scaled`.
    #[arg(long, value_parser = real)]
    pub scale: Option<f64>,
    /// Full spec string (`brownian`, `fbm:H`, `bifractional:H:K`, `scaled:c:<spec>`, `mixed:a,b`); overrides --family.
    #[arg(long)]
    pub spec: Option<String>,
}

impl ProcessArgs {
    pub fn to_spec(&self) -> Result<GaussianSpec> {
        let usage = |m: &str| Error::InvalidArgument(m.to_string());
        let spec = if let Some(s) = &self.spec {
            s.parse()?
        } else {
            match self.family {
                Family::Brownian => GaussianSpec::Brownian,
                Family::Fbm => GaussianSpec::fbm(self.hurst.ok_or_else(|| usage("fbm needs --H"))?),
                Family::Bifractional => GaussianSpec::bifractional(
                    self.hurst.ok_or_else(|| usage("bifractional needs --H"))?,
                    self.k.ok_or_else(|| usage("bifractional needs --K"))?,
                ),
                Family::Mixed => {
                    let list = self.components.as_deref().unwrap_or(DEFAULT_MIXTURE);
                    GaussianSpec::mixed(list.split(',').map(str::parse).collect::<Result<Vec<_>>>()?)
                }
                Family::Scaled => {
                    let base = self.components.as_deref().ok_or_else(|| usage("scaled needs --components <base>"))?;
                    GaussianSpec::scaled(base.parse()?, self.scale.ok_or_else(|| usage("scaled needs --scale"))?)
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    #[arg(long = "T", value_parser = real, default_value = "1")]
    pub horizon: f64,
    #[arg(long = "N", default_value_t = 4096)]
    pub steps: usize,
    /// Master seed; replica `r` uses `seed + r`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl GridArgs {
    fn grid(&self) -> Result<TimeGrid> {
        make_grid(self.horizon, self.steps)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LadderArgs {
    /// Epsilon multiples of the mesh, decreasing.
    #[arg(long, default_value = "64,32,16,8")]
    pub ladder: String,
    /// Monte Carlo replicas.
    #[arg(long = "replicas", visible_alias = "M", default_value_t = 100)]
    pub replicas: usize,
}

impl LadderArgs {
    fn ladder(&self, grid: &TimeGrid) -> Result<EpsilonLadder> {
        EpsilonLadder::new(grid, &parse_list(&self.ladder)?, self.replicas)
    }
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|_| Error::InvalidArgument(format!("bad integer list '{s}'"))))
        .collect()
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PathsArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Number of paths, with seeds `seed, seed + 1, ...`.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Also write each mixture component drawn with its derived seed.
    #[arg(long)]
    pub write_components: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QvArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub ladder: LadderArgs,
    #[arg(long, value_parser = real, default_value = "0.05")]
    pub tolerance: f64,
    /// Studies `X + X(. - shift)` instead of `X` (shift a mesh multiple).
    #[arg(long, value_parser = real)]
    pub shift: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiFamily {
    Atomic00,
    L2,
    Diag,
    Chi0,
    Global,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ChiqvArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub ladder: LadderArgs,
    #[arg(long, value_enum, default_value = "atomic00")]
    pub phi: PhiFamily,
    /// Weight of the element (lambda, kernel constant or g).
    #[arg(long, value_parser = real, default_value = "1")]
    pub lambda: f64,
    #[arg(long, value_parser = real, default_value = "0.25")]
    pub tau: f64,
    #[arg(long, value_parser = real, default_value = "0.07")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadArg {
    Closed,
    Estimated,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ItoArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub ladder: LadderArgs,
    /// a:x, a:square, a:cos, a:const:<c>, b or c.
    #[arg(long, default_value = "a:square")]
    pub functional: String,
    #[arg(long, value_enum, default_value = "closed")]
    pub quadratic: QuadArg,
    #[arg(long, value_parser = real, default_value = "0.25")]
    pub tau: f64,
    #[arg(long, value_parser = real, default_value = "0.05")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HedgeMode {
    Vanilla,
    ZeroQv,
    BrownianQv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateArg {
    Construction,
    Estimated,
    Override,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrandArg {
    One,
    TimeToGo,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReplicateArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    #[arg(long = "T", value_parser = real, default_value = "1")]
    pub horizon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grid sizes, increasing.
    #[arg(long, default_value = "1024,2048,4096")]
    pub grids: String,
    #[arg(long = "replicas", visible_alias = "M", default_value_t = 100)]
    pub replicas: usize,
    /// linear, square, cos or call:<strike>.
    #[arg(long, default_value = "square")]
    pub payoff: String,
    #[arg(long, value_enum, default_value = "vanilla")]
    pub hedge: HedgeMode,
    /// How `[X]_t = t` is certified in vanilla mode.
    #[arg(long, value_enum, default_value = "construction")]
    pub gate: GateArg,
    /// Integrand of the Wiener integral in the Wiener-functional modes.
    #[arg(long, value_enum, default_value = "one")]
    pub integrand: IntegrandArg,
    /// Relative Q-doubling tolerance for the vanilla value function (kinked payoffs need a looser one).
    #[arg(long, value_parser = real, default_value = "1e-8")]
    pub stability_tol: f64,
    /// Tolerance on the median error at the largest grid, in units of T.
    #[arg(long, value_parser = real, default_value = "0.05")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReplayArgs {
    /// Manifest to replay.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Zero-based line of the manifest (default: every line).
    #[arg(long)]
    pub line: Option<usize>,
}

/// One output file and its digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

/// A JSON-lines manifest record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub command: String,
    /// Resolved arguments (config file merged, `--out` removed).
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub seeds: serde_json::Value,
    pub outputs: Vec<OutputFile>,
    pub verdict: Verdict,
    #[serde(default)]
    pub summary: serde_json::Value,
    pub version: String,
}

/// Everything a command hands back to the dispatcher.
struct Outcome {
    config: serde_json::Value,
    seeds: serde_json::Value,
    outputs: Vec<String>,
    verdict: Verdict,
    summary: serde_json::Value,
}

/// Parses `key = value` lines (`#` starts a comment) into flag pairs.
pub fn read_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("config line {}: expected key = value", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Splices the `--config` file into `args` right after the subcommand so later flags win.
pub fn expand_config(args: &[String]) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            config = Some(it.next().ok_or_else(|| Error::InvalidArgument("--config needs a file".into()))?.clone());
        } else if let Some(f) = a.strip_prefix("--config=") {
            config = Some(f.to_string());
        } else {
            rest.push(a.clone());
        }
    }
    let Some(file) = config else { return Ok(rest) };
    let text = fs::read_to_string(&file).map_err(|e| Error::InvalidArgument(format!("config {file}: {e}")))?;
    let mut flags = Vec::new();
    for (k, v) in read_config(&text)? {
        match v.as_str() {
            "true" => flags.push(format!("--{k}")),
            "false" => {}
            _ => {
                flags.push(format!("--{k}"));
                flags.push(v);
            }
        }
    }
    let at = rest.iter().position(|a| COMMANDS.contains(&a.as_str())).map_or(rest.len(), |p| p + 1);
    rest.splice(at..at, flags);
    Ok(rest)
}

fn strip_out(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
        } else if a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            out.push(a.clone());
        }
    }
    out
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_)
        | Error::EpsilonNotNodeMultiple { .. }
        | Error::LagMismatch(_)
        | Error::OffNodeAtom { .. }
        | Error::GridMismatch
        | Error::Unsupported(_) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Entry point; `args[0]` is the program name. Returns the process exit code.
pub fn run(args: Vec<String>) -> i32 {
    let expanded = match expand_config(&args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("regcalc: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(&expanded) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli, &expanded) {
        Ok(v) => match v {
            Verdict::Fail => EXIT_FAIL,
            _ => EXIT_PASS,
        },
        Err(e) => {
            eprintln!("regcalc: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli, expanded: &[String]) -> Result<Verdict> {
    let dir = out_dir(cli.out);
    if let Command::Replay(a) = &cli.command {
        return replay(a, &dir);
    }
    fs::create_dir_all(&dir)?;
    let (name, outcome) = match &cli.command {
        Command::Paths(a) => ("paths", cmd_paths(a, &dir)?),
        Command::Qv(a) => ("qv", cmd_qv(a, &dir)?),
        Command::Chiqv(a) => ("chiqv", cmd_chiqv(a, &dir)?),
        Command::Ito(a) => ("ito", cmd_ito(a, &dir)?),
        Command::Replicate(a) => ("replicate", cmd_replicate(a, &dir)?),
        Command::Replay(_) => unreachable!(),
    };
    let outputs = outcome
        .outputs
        .iter()
        .map(|f| Ok(OutputFile { file: f.clone(), sha256: sha256_file(&dir.join(f))? }))
        .collect::<Result<Vec<_>>>()?;
    let record = ManifestRecord {
        command: name.to_string(),
        args: strip_out(&expanded[1..]),
        config: outcome.config,
        seeds: outcome.seeds,
        outputs,
        verdict: outcome.verdict,
        summary: outcome.summary,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let mut f = fs::OpenOptions::new().create(true).append(true).open(dir.join(MANIFEST))?;
    writeln!(f, "{}", serde_json::to_string(&record)?)?;
    println!("{name}: {} -> {}", record.verdict.as_str(), dir.display());
    Ok(record.verdict)
}

pub fn sha256_file(path: &FsPath) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn create(dir: &FsPath, name: &str) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(dir.join(name))?))
}

fn replica_seeds(base: u64) -> serde_json::Value {
    json!({ "base": base, "replica_rule": "base + r" })
}

fn cmd_paths(a: &PathsArgs, dir: &FsPath) -> Result<Outcome> {
    let spec = a.process.to_spec()?;
    let grid = a.grid.grid()?;
    if a.count == 0 {
        return Err(Error::InvalidArgument("--count must be positive".into()));
    }
    let mut outputs = Vec::new();
    let mut used = Vec::new();
    for r in 0..a.count {
        let seed = crate::rng::replica_seed(a.grid.seed, r);
        let p = sample(&spec, &grid, seed)?;
        let csv = format!("path_{r}.csv");
        p.write_csv(create(dir, &csv)?)?;
        let meta = PathMetadata {
            spec: spec.clone(),
            seed,
            grid,
            label: p.label().to_string(),
            component_seeds: component_seeds(&spec, seed),
        };
        let json_name = format!("path_{r}.json");
        fs::write(dir.join(&json_name), serde_json::to_string_pretty(&meta)?)?;
        outputs.push(csv);
        outputs.push(json_name);
        if a.write_components {
            if let GaussianSpec::Mixed { components } = &spec {
                for (k, (c, s)) in components.iter().zip(&meta.component_seeds).enumerate() {
                    let name = format!("path_{r}_component_{k}.csv");
                    sample(c, &grid, *s)?.write_csv(create(dir, &name)?)?;
                    outputs.push(name);
                }
            }
        }
        used.push(json!({ "seed": seed, "components": meta.component_seeds }));
    }
    Ok(Outcome {
        config: serde_json::to_value(a)?,
        seeds: json!({ "base": a.grid.seed, "paths": used }),
        outputs,
        verdict: Verdict::Informational,
        summary: json!({ "spec": spec.to_string() }),
    })
}

fn cmd_qv(a: &QvArgs, dir: &FsPath) -> Result<Outcome> {
    let spec = a.process.to_spec()?;
    let grid = a.grid.grid()?;
    let ladder = a.ladder.ladder(&grid)?;
    let shift = a.shift.map(|s| grid.lag_multiple(s)).transpose()?;
    let source = PathSource::new(spec.clone(), grid, a.grid.seed)?;
    let build = |seed: u64| -> Result<Path> {
        let x = source.with_seed(seed)?;
        match shift {
            Some(k) => x.add(&x.delayed(k)),
            None => Ok(x),
        }
    };
    let rate = spec.known_qv_rate();
    let lag_time = shift.map(|k| k as f64 * grid.mesh());
    let target = move |_seed: u64| -> Result<Path> {
        let r = rate.unwrap_or(0.0);
        Path::from_fn(grid, "target", |t| r * t + lag_time.map_or(0.0, |s| r * (t - s).max(0.0)))
    };
    let mut report = converge(
        |seed, eps| covariation_eps(&build(seed)?, &build(seed)?, eps),
        target,
        &ladder,
        a.tolerance,
        ErrorStatistic::SupOverGrid,
        a.grid.seed,
    )?;
    let reference = match (rate, lag_time) {
        (Some(r), None) => format!("{r}*t"),
        (Some(r), Some(s)) => format!("{r}*(t+(t-{s})+)"),
        (None, _) => {
            report = report.mark_informational();
            "absent".into()
        }
    };
    report.write_csv_with_reference(create(dir, "qv_report.csv")?, &reference)?;
    let mut outputs = vec!["qv_report.csv".to_string()];
    if let GaussianSpec::Mixed { components } = &spec {
        let seeds = component_seeds(&spec, a.grid.seed);
        let parts =
            components.iter().zip(&seeds).map(|(c, s)| sample(c, &grid, *s)).collect::<Result<Vec<_>>>()?;
        let eps = ladder.smallest();
        let m = mutual_covariations(&parts, eps)?;
        let mut f = create(dir, "mutual.csv")?;
        writeln!(f, "i,j,eps,value_at_T")?;
        for (i, row) in m.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                writeln!(f, "{i},{j},{},{}", fmt17(eps), fmt17(p.terminal()))?;
            }
        }
        f.flush()?;
        outputs.push("mutual.csv".into());
    }
    Ok(Outcome {
        config: serde_json::to_value(a)?,
        seeds: replica_seeds(a.grid.seed),
        outputs,
        verdict: report.verdict,
        summary: json!({ "medians": report.medians(), "reference": reference }),
    })
}

/// The test element of a named family on `lag`, scaled by `lambda`.
pub fn phi_for(family: PhiFamily, lag: &LagInterval, lambda: f64) -> Option<ChiElement> {
    let ones = vec![1.0; lag.len()];
    match family {
        PhiFamily::Atomic00 => Some(ChiElement::atomic(lambda)),
        PhiFamily::L2 => Some(ChiElement::l2(Kernel::constant(lag, lambda))),
        PhiFamily::Diag => Some(ChiElement::diag(lag, |_| lambda)),
        PhiFamily::Chi0 => Some(ChiElement::chi0(lambda, ones.clone(), ones, Kernel::constant(lag, 1.0))),
        PhiFamily::Global => None,
    }
}

fn cmd_chiqv(a: &ChiqvArgs, dir: &FsPath) -> Result<Outcome> {
    let spec = a.process.to_spec()?;
    let grid = a.grid.grid()?;
    let ladder = a.ladder.ladder(&grid)?;
    let source = PathSource::new(spec.clone(), grid, a.grid.seed)?;
    let lag = LagInterval::on_grid(&grid, a.tau)?;
    let config = serde_json::to_value(a)?;
    let seeds = replica_seeds(a.grid.seed);
    let Some(phi) = phi_for(a.phi, &lag, a.lambda) else {
        let d = global_qv_divergence(&source, a.tau, &ladder)?;
        let verdict = match spec.known_qv_rate() {
            Some(r) if r > 0.0 => {
                if d.slope > 0.0 && d.r_squared > 0.9 && d.ratio_at_smallest >= 0.5 * grid.horizon() {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            }
            Some(_) => {
                if d.median_statistic.last().copied().unwrap_or(f64::NAN) < a.tolerance {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            }
            None => Verdict::Informational,
        };
        let mut f = create(dir, "global_qv.csv")?;
        writeln!(f, "eps,eps_tilde,log_inverse,median_statistic")?;
        for k in 0..d.eps.len() {
            writeln!(
                f,
                "{},{},{},{}",
                fmt17(d.eps[k]),
                fmt17(d.eps_tilde[k]),
                fmt17(d.log_inverse[k]),
                fmt17(d.median_statistic[k])
            )?;
        }
        f.flush()?;
        return Ok(Outcome {
            config,
            seeds,
            outputs: vec!["global_qv.csv".into()],
            verdict,
            summary: json!({ "slope": d.slope, "r_squared": d.r_squared, "ratio_at_smallest": d.ratio_at_smallest }),
        });
    };
    let res = chi_qv_suite(&source, a.tau, &phi, &ladder, a.tolerance)?;
    res.report.write_csv_with_reference(create(dir, "chiqv_report.csv")?, &res.reference_label())?;
    let mut f = create(dir, "chiqv_replica0.csv")?;
    let header: Vec<String> = ladder.multiples().iter().map(|m| format!("eps_{m}dt")).collect();
    writeln!(f, "t,reference,{}", header.join(","))?;
    for i in 0..=grid.steps() {
        let r = res.reference.as_ref().map_or(String::new(), |p| fmt17(p.values()[i]));
        let row: Vec<String> = res.estimates.iter().map(|p| fmt17(p.values()[i])).collect();
        writeln!(f, "{},{},{}", fmt17(grid.node(i)), r, row.join(","))?;
    }
    f.flush()?;
    Ok(Outcome {
        config,
        seeds,
        outputs: vec!["chiqv_report.csv".into(), "chiqv_replica0.csv".into()],
        verdict: res.report.verdict,
        summary: json!({
            "medians": res.report.medians(),
            "reference": res.reference_label(),
            "h1_median": res.h1.median,
            "h1_max": res.h1.max,
            "h1_bounded": res.h1.bounded,
        }),
    })
}

fn cmd_ito(a: &ItoArgs, dir: &FsPath) -> Result<Outcome> {
    let spec = a.process.to_spec()?;
    let grid = a.grid.grid()?;
    let ladder = a.ladder.ladder(&grid)?;
    let source = PathSource::new(spec.clone(), grid, a.grid.seed)?;
    let f = a.functional.parse::<NamedFunctional>()?.build();
    let qv = match spec.known_qv_rate() {
        Some(r) => QvInput::Rate(r),
        None => QvInput::Estimated,
    };
    let mode = match a.quadratic {
        QuadArg::Closed => QuadraticMode::ClosedForm,
        QuadArg::Estimated => QuadraticMode::Estimated,
    };
    let report = ito_study(f.as_ref(), &source, a.tau, &ladder, &qv, mode, a.tolerance)?;
    report.write_csv(create(dir, "ito_report.csv")?)?;
    let first = ito_residual(f.as_ref(), &source.replica(0)?, a.tau, &ladder, &qv, mode, a.tolerance)?;
    first.write_csv(create(dir, "ito_residual.csv")?)?;
    Ok(Outcome {
        config: serde_json::to_value(a)?,
        seeds: replica_seeds(a.grid.seed),
        outputs: vec!["ito_report.csv".into(), "ito_residual.csv".into()],
        verdict: report.verdict,
        summary: json!({ "functional": f.name(), "medians": report.medians() }),
    })
}

fn cmd_replicate(a: &ReplicateArgs, dir: &FsPath) -> Result<Outcome> {
    let spec = a.process.to_spec()?;
    let grids = parse_list(&a.grids)?;
    if grids.is_empty() || grids.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("--grids must be increasing".into()));
    }
    let payoff: NamedPayoff = a.payoff.parse()?;
    let phi = match a.integrand {
        IntegrandArg::One => TimeFunction::constant(1.0),
        IntegrandArg::TimeToGo => TimeFunction::time_to_go(a.horizon),
    };
    let task = match a.hedge {
        HedgeMode::Vanilla => HedgeTask::Vanilla {
            payoff,
            gate: match a.gate {
                GateArg::Construction => QvGate::ByConstruction(spec.clone()),
                GateArg::Estimated => QvGate::realized(),
                GateArg::Override => QvGate::Override,
            },
        },
        HedgeMode::ZeroQv => HedgeTask::Wiener { payoff: MultiPayoff::Scalar(payoff), phis: vec![phi], mode: WienerMode::ZeroQv },
        HedgeMode::BrownianQv => {
            HedgeTask::Wiener { payoff: MultiPayoff::Scalar(payoff), phis: vec![phi], mode: WienerMode::BrownianQv }
        }
    };
    let study = replication_study_with(&task, &spec, a.horizon, &grids, a.replicas, a.seed, a.stability_tol)?;
    study.write_csv(create(dir, "replication.csv")?)?;
    let eps: Vec<f64> = grids.iter().map(|n| a.horizon / *n as f64).collect();
    let samples = grids
        .iter()
        .map(|n| study.rows.iter().filter(|r| r.steps == *n).map(|r| r.error).collect())
        .collect();
    let report = ConvergenceReport::from_samples(&eps, samples, ErrorStatistic::Terminal, a.tolerance * a.horizon);
    report.write_csv(create(dir, "replication_report.csv")?)?;
    let medians: BTreeMap<String, f64> = grids.iter().map(|n| (n.to_string(), study.median_error(*n))).collect();
    Ok(Outcome {
        config: serde_json::to_value(a)?,
        seeds: replica_seeds(a.seed),
        outputs: vec!["replication.csv".into(), "replication_report.csv".into()],
        verdict: report.verdict,
        summary: json!({ "median_error": medians, "h0": study.rows.first().map(|r| r.h0) }),
    })
}

fn replay(a: &ReplayArgs, dir: &FsPath) -> Result<Verdict> {
    let text = fs::read_to_string(&a.manifest)?;
    let records: Vec<ManifestRecord> =
        text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect::<std::result::Result<_, _>>()?;
    let chosen: Vec<(usize, &ManifestRecord)> = match a.line {
        Some(k) => vec![(k, records.get(k).ok_or_else(|| Error::InvalidArgument(format!("manifest has no line {k}")))?)],
        None => records.iter().enumerate().collect(),
    };
    let mut all_same = true;
    for (k, rec) in chosen {
        let sub = dir.join(format!("replay_{k}"));
        let mut args = vec!["regcalc".to_string()];
        args.extend(rec.args.iter().cloned());
        args.push("--out".into());
        args.push(sub.display().to_string());
        let cli = Cli::try_parse_from(&args).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        fs::create_dir_all(&sub)?;
        dispatch(cli, &args)?;
        for o in &rec.outputs {
            let now = sha256_file(&sub.join(&o.file))?;
            let same = now == o.sha256;
            all_same &= same;
            println!("replay line {k}: {} {}", o.file, if same { "identical" } else { "DIFFERS" });
        }
    }
    Ok(if all_same { Verdict::Pass } else { Verdict::Fail })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn config_lines() {
        let c = read_config("# comment\nN = 64\n\nfamily=fbm # trailing\n").unwrap();
        assert_eq!(c, vec![("N".into(), "64".into()), ("family".into(), "fbm".into())]);
        assert!(read_config("oops").is_err());
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "N = 64\nseed = 3\nwrite-components = true\n").unwrap();
        let args = argv(&format!("regcalc --config {} paths --N 128", cfg.display()));
        let e = expand_config(&args).unwrap();
        assert_eq!(e, argv("regcalc paths --N 64 --seed 3 --write-components --N 128"));
        let cli = Cli::try_parse_from(&e).unwrap();
        let Command::Paths(p) = cli.command else { panic!() };
        assert_eq!(p.grid.steps, 128);
        assert_eq!(p.grid.seed, 3);
        assert!(p.write_components);
    }

    #[test]
    fn process_flags_build_specs() {
        let parse = |s: &str| {
            let cli = Cli::try_parse_from(argv(&format!("regcalc paths {s}"))).unwrap();
            let Command::Paths(p) = cli.command else { panic!() };
            p.process.to_spec()
        };
        assert_eq!(parse("--family brownian").unwrap(), GaussianSpec::Brownian);
        assert_eq!(parse("--family bifractional --H 5/6 --K 0.6").unwrap(), GaussianSpec::bifractional(5.0 / 6.0, 0.6));
        assert!(parse("--family bifractional --H 0.25 --K 2").is_err());
        assert_eq!(
            parse("--family mixed --components brownian,fbm:0.75").unwrap(),
            GaussianSpec::mixed(vec![GaussianSpec::Brownian, GaussianSpec::fbm(0.75)])
        );
    }

    #[test]
    fn out_is_stripped_from_recorded_args() {
        assert_eq!(strip_out(&argv("qv --out x --N 8 --out=y")), argv("qv --N 8"));
    }

    #[test]
    fn usage_errors_exit_64() {
        assert_eq!(run(argv("regcalc paths --family bifractional --H 0.25 --K 2 --out /nonexistent/x")), EXIT_USAGE);
        assert_eq!(run(argv("regcalc frobnicate")), EXIT_USAGE);
    }
}
