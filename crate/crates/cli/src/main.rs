use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use gmtk_core::integrate::{integrate_euler_poincare, integrate_hamilton, integrate_lie_poisson, integrate_trivialized_el, Summary};
use gmtk_core::sample::DEFAULT_SEED;
use gmtk_core::systems::from_config;
use gmtk_core::verify::{self, VerifyConfig, DEFAULT_ISOTROPY_TOL};
use gmtk_core::{Error, FdConfig, IntegratorSpec, Method, PhaseState, SystemSpec, TrajectoryRecord};
use serde::{Deserialize, Serialize};
use serde_json::Value;

const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-8;
const DEFAULT_ROUNDTRIP_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "gmtk", version, about = "Geometric mechanics on Lie groups: simulation and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a system and write the trajectory as CSV
    Simulate(SimulateArgs),
    /// Run the property suites and print a JSON report
    Verify(VerifyArgs),
    /// Legendre roundtrip and rank-condition report
    Legendre(ReportArgs),
    /// Membership and isotropy report for the Lagrangian submanifolds
    Submanifold(ReportArgs),
}

#[derive(Args)]
struct Common {
    /// Builtin system name
    #[arg(long)]
    system: Option<String>,
    /// JSON run configuration, loaded before the other flags
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tolerance override, repeatable
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// lie_euler, rkmk4 or rk4_linear
    #[arg(long)]
    integrator: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    /// hamilton, lie_poisson, euler_poincare or euler_lagrange
    #[arg(long)]
    equations: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Run only this suite, repeatable
    #[arg(long)]
    suite: Vec<String>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntegratorFile {
    method: Option<Method>,
    dt: Option<f64>,
    steps: Option<usize>,
    stride: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    command: Option<String>,
    system: Option<Value>,
    initial: Option<Value>,
    equations: Option<String>,
    #[serde(default)]
    integrator: IntegratorFile,
    seed: Option<u64>,
    #[serde(alias = "out_path")]
    out: Option<PathBuf>,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    suites: Vec<String>,
    samples: Option<usize>,
}

/// A failure after the run started; maps to exit code 2.
#[derive(Debug)]
struct EvalFailure(String);

impl std::fmt::Display for EvalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for EvalFailure {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Legendre(a) => legendre_cmd(a),
        Command::Submanifold(a) => submanifold_cmd(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<EvalFailure>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn load(common: &Common, command: &str) -> anyhow::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<RunConfig>(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(c) = &cfg.command {
        if c != command {
            bail!("config is for command `{c}`, not `{command}`");
        }
    }
    if let Some(s) = &common.system {
        cfg.system = Some(Value::String(s.clone()));
    }
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    for t in &common.tol {
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| anyhow!("--tol expects NAME=VALUE, got `{t}`"))?;
        let v: f64 = v.trim().parse().with_context(|| format!("--tol {k}: not a number"))?;
        cfg.tolerances.insert(k.trim().to_string(), v);
    }
    Ok(cfg)
}

fn system(cfg: &RunConfig) -> anyhow::Result<SystemSpec> {
    let name = cfg
        .system
        .clone()
        .ok_or_else(|| anyhow!("no system given (use --system or a config file)"))?;
    let mut doc = serde_json::Map::new();
    doc.insert("system".into(), name);
    if let Some(init) = &cfg.initial {
        doc.insert("initial".into(), init.clone());
    }
    let mut spec = from_config(&Value::Object(doc))?;
    let fd = FdConfig::from_env();
    spec.lagrangian = spec.lagrangian.map(|l| l.with_fd(fd));
    spec.hamiltonian = spec.hamiltonian.map(|h| h.with_fd(fd));
    for w in &spec.warnings {
        eprintln!("warning: {w}");
    }
    Ok(spec)
}

fn tolerance(cfg: &RunConfig, allowed: &[(&str, f64)], name: &str) -> anyhow::Result<f64> {
    for k in cfg.tolerances.keys() {
        if !allowed.iter().any(|(a, _)| a == k) {
            let names: Vec<_> = allowed.iter().map(|(a, _)| *a).collect();
            bail!("unknown tolerance `{k}` (expected one of {})", names.join(", "));
        }
    }
    let v = cfg
        .tolerances
        .get(name)
        .copied()
        .unwrap_or_else(|| allowed.iter().find(|(a, _)| *a == name).map_or(0.0, |p| p.1));
    if !(v.is_finite() && v >= 0.0) {
        bail!("tolerance `{name}` must be a non-negative number");
    }
    Ok(v)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Writes the report to `--out` (with a one-line summary on stdout) or to stdout.
fn emit<T: Serialize>(cfg: &RunConfig, report: &T, summary: Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    match &cfg.out {
        Some(path) => {
            let mut w = create(path)?;
            writeln!(w, "{text}")?;
            w.flush()?;
            println!("{summary}");
        }
        None => println!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    system: &'a str,
    equations: &'a str,
    method: &'a str,
    dt: f64,
    rows: usize,
    summary: Summary,
}

fn simulate(a: SimulateArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = load(&a.common, "simulate")?;
    if !cfg.tolerances.is_empty() {
        bail!("simulate takes no tolerances");
    }
    if let Some(e) = a.equations {
        cfg.equations = Some(e);
    }
    let method = match &a.integrator {
        Some(m) => Method::parse(m)?,
        None => cfg.integrator.method.unwrap_or(Method::Rkmk4),
    };
    let spec_i = IntegratorSpec {
        method,
        dt: a.dt.or(cfg.integrator.dt).unwrap_or(1e-3),
        steps: a.steps.or(cfg.integrator.steps).unwrap_or(10_000),
        stride: a.stride.or(cfg.integrator.stride).unwrap_or(1),
    };
    spec_i.validate()?;
    let out = cfg.out.clone().ok_or_else(|| anyhow!("simulate needs --out"))?;
    let spec = system(&cfg)?;
    let equations = match cfg.equations.as_deref() {
        Some(e) => e.to_string(),
        None if spec.hamiltonian.is_some() => "hamilton".into(),
        None => "euler_lagrange".into(),
    };

    let missing = |what: &str| anyhow!("system `{}` has no {what}", spec.name);
    let rec: gmtk_core::Result<TrajectoryRecord> = match equations.as_str() {
        "hamilton" => {
            let h = spec.hamiltonian.as_ref().ok_or_else(|| missing("Hamiltonian"))?;
            let s0 = PhaseState { g: spec.initial.g.clone(), mu: spec.initial_mu()? };
            integrate_hamilton(h, &s0, &spec_i)
        }
        "lie_poisson" => {
            let h = spec.hamiltonian.as_ref().ok_or_else(|| missing("Hamiltonian"))?;
            integrate_lie_poisson(h, &spec.initial_mu()?, &spec_i)
        }
        "euler_poincare" => {
            let l = spec.lagrangian.as_ref().ok_or_else(|| missing("Lagrangian"))?;
            integrate_euler_poincare(l, &spec.initial_xi()?, &spec_i)
        }
        "euler_lagrange" => {
            let l = spec.lagrangian.as_ref().ok_or_else(|| missing("Lagrangian"))?;
            integrate_trivialized_el(l, &spec.initial.g, &spec.initial_xi()?, &spec_i)
        }
        other => bail!("unknown equations `{other}` (expected hamilton, lie_poisson, euler_poincare or euler_lagrange)"),
    };
    let rec = match rec {
        Ok(rec) => rec,
        Err(e @ (Error::Config { .. } | Error::NotReduced(_) | Error::DimensionMismatch { .. } | Error::GroupMismatch(..))) => {
            return Err(e.into())
        }
        Err(e) => return Err(EvalFailure(e.to_string()).into()),
    };

    let mut w = create(&out)?;
    rec.write_csv(&mut w)
        .and_then(|_| w.flush())
        .with_context(|| format!("writing {}", out.display()))?;
    let line = SimulateSummary {
        system: &spec.name,
        equations: &equations,
        method: method.name(),
        dt: spec_i.dt,
        rows: rec.len(),
        summary: rec.summary(),
    };
    println!("{}", serde_json::to_string(&line)?);
    match &rec.error {
        Some(e) => Err(EvalFailure(format!("integration stopped after {} rows: {e}", rec.len())).into()),
        None => Ok(ExitCode::SUCCESS),
    }
}

fn verify_cmd(a: VerifyArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = load(&a.common, "verify")?;
    if !a.suite.is_empty() {
        cfg.suites = a.suite;
    }
    if a.samples.is_some() {
        cfg.samples = a.samples;
    }
    if cfg.system.is_some() || cfg.initial.is_some() {
        bail!("verify runs on the shipped systems and takes no system");
    }
    let vcfg = VerifyConfig {
        seed: cfg.seed.unwrap_or(DEFAULT_SEED),
        suites: cfg.suites.clone(),
        samples: cfg.samples,
        tolerances: cfg.tolerances.clone(),
        fd: FdConfig::from_env(),
        ad_star: None,
    };
    vcfg.validate()?;
    let report = verify::run(&vcfg)?;
    let failed: Vec<_> = report
        .properties
        .iter()
        .filter(|p| !p.pass)
        .map(|p| format!("{}.{}", p.suite, p.name))
        .collect();
    let summary = serde_json::json!({
        "pass": report.pass,
        "properties": report.properties.len(),
        "failed": failed,
    });
    emit(&cfg, &report, summary)?;
    if report.pass {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("failed: {}", failed.join(", "));
        Ok(ExitCode::from(2))
    }
}

fn samples(n: Option<usize>, default: usize) -> anyhow::Result<usize> {
    match n.unwrap_or(default) {
        0 => bail!("samples must be positive"),
        n => Ok(n),
    }
}

#[derive(Serialize)]
struct LegendreOut {
    #[serde(flatten)]
    report: verify::LegendreReport,
    roundtrip_tol: f64,
    pass: bool,
}

fn legendre_cmd(a: ReportArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = load(&a.common, "legendre")?;
    if a.samples.is_some() {
        cfg.samples = a.samples;
    }
    let tol = tolerance(&cfg, &[("roundtrip", DEFAULT_ROUNDTRIP_TOL)], "roundtrip")?;
    let n = samples(cfg.samples, 100)?;
    let spec = system(&cfg)?;
    let report = verify::legendre_report(&spec, n, cfg.seed.unwrap_or(DEFAULT_SEED))?;
    let pass = report.rank_check_pass && report.max_roundtrip_error.is_none_or(|e| e <= tol);
    let out = LegendreOut { report, roundtrip_tol: tol, pass };
    let summary = serde_json::json!({
        "system": out.report.system,
        "max_roundtrip_error": out.report.max_roundtrip_error,
        "degenerate": out.report.degenerate,
        "pass": pass,
    });
    emit(&cfg, &out, summary)?;
    Ok(ExitCode::SUCCESS)
}

fn submanifold_cmd(a: ReportArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = load(&a.common, "submanifold")?;
    if a.samples.is_some() {
        cfg.samples = a.samples;
    }
    let allowed = [("membership", DEFAULT_MEMBERSHIP_TOL), ("isotropy", DEFAULT_ISOTROPY_TOL)];
    let membership = tolerance(&cfg, &allowed, "membership")?;
    let iso = tolerance(&cfg, &allowed, "isotropy")?;
    let n = samples(cfg.samples, 50)?;
    let spec = system(&cfg)?;
    let report = verify::submanifold_report(&spec, n, cfg.seed.unwrap_or(DEFAULT_SEED), membership, iso)?;
    let max_iso = [
        report.s.as_ref().map(|s| s.max_isotropy),
        report.sprime.as_ref().map(|s| s.max_isotropy),
        report.lagrange_dirac.as_ref().map(|s| s.max_isotropy),
        report.hamilton_dirac.as_ref().map(|s| s.max_isotropy),
    ]
    .into_iter()
    .flatten()
    .fold(0.0, f64::max);
    let summary = serde_json::json!({
        "system": report.system,
        "max_isotropy": max_iso,
        "pass": report.pass,
    });
    emit(&cfg, &report, summary)?;
    Ok(ExitCode::SUCCESS)
}
