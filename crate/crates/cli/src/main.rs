//! `diskflow run <scenario>`, `diskflow config --defaults` and shorthands
//! for single scenarios (`semigroup-decay`, `resolvent-check`, `fracpow`,
//! `oseen-bounds`, `gn-audit`) plus `assemble`.
//!
//! Exit status: 0 when every gate passes, 2 when a gate fails, 1 on
//! configuration, usage or runtime errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use diskflow::audit::{run_scenario, AuditReport, ExperimentConfig, Scenario};
use diskflow::fsop::spectral::Spectrum;
use diskflow::fsop::{assemble_operator, GridConfig, RigidBodyParams, SpaceKind};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "diskflow", version, about = "Scenario runner for the rigid-disk fluid-structure toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run(RunArgs),
    /// Print configuration files.
    Config {
        /// Print the default configuration (all scenarios unless one is named).
        #[arg(long, required = true)]
        defaults: bool,
        #[arg(value_parser = parse_scenario)]
        scenario: Option<Scenario>,
    },
    /// List scenario names.
    List,
    /// Assemble the operator and print its dimensions and spectral range.
    Assemble {
        /// `R,N,M`: outer radius, radial intervals, Fourier modes.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        /// `MASS,INERTIA` of the disk (default: density-1 disk).
        #[arg(long, value_delimiter = ',')]
        body: Option<Vec<f64>>,
    },
    /// `run semigroup-decay`.
    SemigroupDecay(RunOpts),
    /// `run resolvent-audit` at the given spectral parameters.
    ResolventCheck {
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// `run fracpow-audit` at the given exponents and shifts.
    Fracpow {
        #[arg(long, value_delimiter = ',', required = true)]
        mu: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// `run oseen-bounds`.
    OseenBounds(RunOpts),
    /// `run gn-audit`.
    GnAudit(RunOpts),
}

#[derive(Args)]
struct RunArgs {
    #[arg(value_parser = parse_scenario)]
    scenario: Scenario,
    #[command(flatten)]
    opts: RunOpts,
}

#[derive(Args, Clone)]
struct RunOpts {
    /// TOML file merged over the scenario defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Artifact directory (default `out/<scenario>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `audit.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps and per-mode work.
    #[arg(long)]
    jobs: Option<usize>,
    /// `run.q`.
    #[arg(long)]
    q: Option<f64>,
    /// `run.p_list` (repeat or comma-separate).
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    /// `run.alpha`.
    #[arg(long)]
    alpha: Option<f64>,
    /// `run.t0`.
    #[arg(long)]
    t0: Option<f64>,
    /// `run.dt`.
    #[arg(long)]
    dt: Option<f64>,
    /// `run.horizon`.
    #[arg(long)]
    horizon: Option<f64>,
    /// Any key, e.g. `--set grid.radial_points=128` or `--set audit.mus=[0.5]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

fn parse_scenario(s: &str) -> std::result::Result<Scenario, String> {
    s.parse().map_err(|e: diskflow::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::List => {
            for s in Scenario::ALL {
                println!("{s}");
            }
            Ok(0)
        }
        Command::Config { scenario, .. } => {
            let list: Vec<Scenario> = scenario.map_or_else(|| Scenario::ALL.to_vec(), |s| vec![s]);
            for (i, s) in list.iter().enumerate() {
                if list.len() > 1 {
                    println!("{}# ---- {s} ----", if i > 0 { "\n" } else { "" });
                }
                print!("{}", toml::to_string(&ExperimentConfig::defaults(*s))?);
            }
            Ok(0)
        }
        Command::Run(args) => run(args.scenario, args.opts),
        Command::Assemble { grid, body } => assemble(grid, body),
        Command::SemigroupDecay(opts) => run(Scenario::SemigroupDecay, opts),
        Command::OseenBounds(opts) => run(Scenario::OseenBounds, opts),
        Command::GnAudit(opts) => run(Scenario::GnAudit, opts),
        Command::ResolventCheck { lambda, mut opts } => {
            opts.sets.push(format!("audit.lambdas={}", toml_list(&lambda)));
            run(Scenario::ResolventAudit, opts)
        }
        Command::Fracpow { mu, eps, mut opts } => {
            opts.sets.push(format!("audit.mus={}", toml_list(&mu)));
            if !eps.is_empty() {
                opts.sets.push(format!("audit.lambdas={}", toml_list(&eps)));
            }
            run(Scenario::FracpowAudit, opts)
        }
    }
}

fn toml_list(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", items.join(", "))
}

fn assemble(grid: Option<Vec<f64>>, body: Option<Vec<f64>>) -> Result<u8> {
    let cfg = match grid.as_deref() {
        Some(&[r, n, m]) => {
            if n.fract() != 0.0 || m.fract() != 0.0 || n < 0.0 || m < 0.0 {
                bail!("--grid expects R,N,M with integer N and M");
            }
            GridConfig::new(r, n as usize, m as usize)
        }
        Some(_) => bail!("--grid expects R,N,M"),
        None => GridConfig::default(),
    };
    let body = match body.as_deref() {
        Some(&[mass, inertia]) => RigidBodyParams::new(mass, inertia)?,
        Some(_) => bail!("--body expects MASS,INERTIA"),
        None => RigidBodyParams::disk(1.0),
    };
    let start = Instant::now();
    let op = assemble_operator(&cfg, &body)?;
    println!("outer_radius      {}", cfg.outer_radius);
    println!("radial_intervals  {}", op.intervals());
    println!("fourier_modes     {}", op.fourier_modes());
    println!("min_spacing       {:.6e}", op.grid.min_spacing());
    println!("trust_horizon     {}", cfg.trust_horizon());
    println!("body              mass {} inertia {}", body.mass, body.inertia);
    for kind in [SpaceKind::Constrained, SpaceKind::Free, SpaceKind::Dirichlet] {
        let dim: usize = op.modes.iter().map(|m| m.space(kind).mass.dim() * if m.k == 0 { 1 } else { 2 }).sum();
        let spec = Spectrum::new(&op, kind)?;
        println!("{:<17} dim {dim} eigenvalues [{:.6e}, {:.6e}]", format!("{kind:?}"), spec.smallest_eigenvalue(), spec.largest_eigenvalue());
    }
    println!("assembled in {:.2} s", start.elapsed().as_secs_f64());
    Ok(0)
}

/// Merge `over` into `base`: tables recursively, everything else replaced.
fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// `a.b.c=value`; the value is parsed as TOML and falls back to a string.
fn set_key(doc: &mut toml::Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got `{assignment}`"))?;
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut cur = doc;
    let parts: Vec<&str> = key.trim().split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = cur.as_table_mut().with_context(|| format!("config error at `{key}`: `{}` is not a table", parts[..i].join(".")))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        cur = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
    }
    bail!("empty --set key")
}

fn resolve_config(scenario: Scenario, args: &RunOpts) -> Result<ExperimentConfig> {
    let mut doc = toml::Value::try_from(ExperimentConfig::defaults(scenario))?;
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let user: toml::Value = toml::from_str(&text).with_context(|| format!("config error in {}", path.display()))?;
        merge(&mut doc, user);
    }
    let mut sets = args.sets.clone();
    let num = |k: &str, v: Option<f64>| v.map(|v| format!("{k}={v:?}"));
    sets.extend([num("run.q", args.q), num("run.alpha", args.alpha), num("run.t0", args.t0), num("run.dt", args.dt), num("run.horizon", args.horizon)].into_iter().flatten());
    if !args.p.is_empty() {
        sets.push(format!("run.p_list={}", toml_list(&args.p)));
    }
    if let Some(seed) = args.seed {
        sets.push(format!("audit.seed={seed}"));
    }
    for s in &sets {
        set_key(&mut doc, s)?;
    }
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(doc).map_err(|e| {
        let path = e.path().to_string();
        anyhow::anyhow!("config error at `{path}`: {}", e.into_inner())
    })?;
    cfg.validate(scenario).map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok(cfg)
}

#[derive(Serialize)]
struct FileEntry {
    name: String,
    bytes: usize,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest {
    scenario: String,
    verdict: &'static str,
    seed: u64,
    jobs: Option<usize>,
    config_sha256: String,
    toolkit_version: &'static str,
    cli_version: &'static str,
    wall_time_s: f64,
    files: Vec<FileEntry>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_artifacts(dir: &Path, cfg_text: &str, report: &AuditReport) -> Result<Vec<FileEntry>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files: Vec<(String, Vec<u8>)> = vec![
        ("config.toml".into(), cfg_text.as_bytes().to_vec()),
        ("summary.txt".into(), report.summary().into_bytes()),
        ("checks.json".into(), serde_json::to_vec_pretty(report)?),
    ];
    files.extend(report.tables.iter().map(|(k, v)| (k.clone(), v.as_bytes().to_vec())));
    files.extend(report.blobs.iter().map(|(k, v)| (k.clone(), v.clone())));
    let mut entries = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        fs::write(dir.join(&name), &bytes).with_context(|| format!("writing {name}"))?;
        entries.push(FileEntry { sha256: sha256_hex(&bytes), bytes: bytes.len(), name });
    }
    Ok(entries)
}

fn run(scenario: Scenario, args: RunOpts) -> Result<u8> {
    let cfg = resolve_config(scenario, &args)?;
    if let Some(k) = args.jobs {
        if k == 0 {
            bail!("--jobs must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().context("configuring the thread pool")?;
    }
    let start = Instant::now();
    let report = run_scenario(scenario, &cfg).with_context(|| format!("scenario {}", scenario))?;
    let wall = start.elapsed().as_secs_f64();
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("out").join(scenario.name()));
    let cfg_text = toml::to_string(&cfg)?;
    let files = write_artifacts(&dir, &cfg_text, &report)?;
    let verdict = if report.pass() { "PASS" } else { "FAIL" };
    let manifest = Manifest {
        scenario: scenario.to_string(),
        verdict,
        seed: cfg.audit.seed,
        jobs: args.jobs,
        config_sha256: sha256_hex(cfg_text.as_bytes()),
        toolkit_version: diskflow::VERSION,
        cli_version: env!("CARGO_PKG_VERSION"),
        wall_time_s: wall,
        files,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    print!("{}", report.summary());
    println!("{verdict} {} ({wall:.2} s) -> {}", scenario, dir.display());
    Ok(if report.pass() { 0 } else { 2 })
}
