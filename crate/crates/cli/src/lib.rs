//! Command-line driver for `sfd`.
//!
//! Exit codes: 0 success, 2 usage error, 3 data or parse error, 4 numerical
//! degeneracy, 1 anything else.

pub mod bench;
pub mod output;

use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rayon::prelude::*;
use serde_json::json;
use sfd_core::design::{generate_centered_lhs, generate_random_lhs, generate_srs};
use sfd_core::diagnostics::{
    mst_summary, subprojection_report_with, Metric, SubprojectionOptions, SubsetMode,
};
use sfd_core::io::{design_to_string, format_f64, read_design_file};
use sfd_core::optimize::{optimize, Algorithm, OptimizationResult, OptimizerConfig};
use sfd_core::sobol::{generate_sobol, Scramble, SobolConfig};
use sfd_core::{evaluate, CriterionKind, CriterionSpec, DesignMatrix, LhsDesign, Seed};

use crate::bench::{run_figure, Figure, Scale};
use crate::output::{write_atomic, OutputDir};

/// Environment variable holding the default output directory.
pub const OUTPUT_DIR_ENV: &str = "SFD_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "sfd", version, about = "Space-filling Latin Hypercube designs")]
pub struct Cli {
    /// Worker threads for replicates and subprojection sweeps (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: Option<u16>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a design and write it as CSV.
    Generate(GenerateArgs),
    /// Evaluate criteria on a design file.
    Evaluate(EvaluateArgs),
    /// Optimize a Latin Hypercube design.
    Optimize(OptimizeArgs),
    /// Evaluate a metric on every k-dimensional subprojection of designs.
    Subproj(SubprojArgs),
    /// Minimum spanning tree statistics of a design, as JSON.
    Mst(MstArgs),
    /// Produce the dataset behind one figure.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Lhs,
    LhsCentered,
    Srs,
    Sobol,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "lhs")]
    pub method: Method,
    /// Number of points.
    #[arg(short, long)]
    pub n: usize,
    /// Number of dimensions.
    #[arg(short, long)]
    pub d: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Owen scrambling (sobol only).
    #[arg(long)]
    pub scramble: bool,
    /// Leading points to drop (sobol only).
    #[arg(long, default_value_t = 1)]
    pub skip: u64,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

fn parse_criterion(s: &str) -> std::result::Result<CriterionSpec, String> {
    s.parse().map_err(|e: sfd_core::Error| e.to_string())
}

fn parse_metric(s: &str) -> std::result::Result<Metric, String> {
    s.parse().map_err(|e: sfd_core::Error| e.to_string())
}

fn parse_algorithm(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: sfd_core::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub design: PathBuf,
    /// Comma-separated criteria: c2, w2, l2star, mindist, phip or phipN.
    #[arg(long, value_delimiter = ',', value_parser = parse_criterion,
          default_value = "c2,w2,l2star,mindist,phip")]
    pub criteria: Vec<CriterionSpec>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
#[command(after_help = "\
Examples:
  MM SA with T0 = 0.1, I_max = 100, c = 0.9 on a 50 x 5 design:
    sfd optimize -n 50 -d 5 --criterion phip --algo mm-sa --t0 0.1 --i-max 100 --c 0.9 --budget 200000
  ESE with M = 100, J = 50:
    sfd optimize -n 50 -d 5 --algo ese --m 100 --j 50 --budget 30000 --replicates 10")]
pub struct OptimizeArgs {
    /// Starting design (must be a Latin Hypercube); replaces -n/-d.
    #[arg(long, conflicts_with_all = ["n", "d"])]
    pub input: Option<PathBuf>,
    /// Points of a random starting LHS.
    #[arg(short, long, requires = "d", required_unless_present = "input")]
    pub n: Option<usize>,
    /// Dimensions of a random starting LHS.
    #[arg(short, long, requires = "n")]
    pub d: Option<usize>,
    #[arg(long, value_parser = parse_criterion, default_value = "phip")]
    pub criterion: CriterionSpec,
    /// geometric-sa, mm-sa or ese.
    #[arg(long, value_parser = parse_algorithm, default_value = "ese")]
    pub algo: Algorithm,
    /// Initial temperature (default 0.005 |f(initial)|).
    #[arg(long)]
    pub t0: Option<f64>,
    /// Cooling ratio (geometric-sa and mm-sa).
    #[arg(long)]
    pub c: Option<f64>,
    /// Plateau length I_max (mm-sa).
    #[arg(long)]
    pub i_max: Option<usize>,
    /// Inner iterations M (ese).
    #[arg(long)]
    pub m: Option<usize>,
    /// Candidates per inner iteration J (ese).
    #[arg(long)]
    pub j: Option<usize>,
    /// Outer iterations Q (ese; default budget / (J M)).
    #[arg(long)]
    pub q: Option<usize>,
    /// Maximum number of elementary perturbations per run.
    #[arg(long, default_value_t = 10_000)]
    pub budget: u64,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    /// Base seed; replicate r uses seed + r.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Extra metrics traced on the best design (c2, ..., mst-m, mst-sigma).
    #[arg(long, value_delimiter = ',', value_parser = parse_metric)]
    pub monitor: Vec<Metric>,
    #[arg(long, env = OUTPUT_DIR_ENV, default_value = "sfd-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SubprojArgs {
    #[arg(required = true)]
    pub designs: Vec<PathBuf>,
    #[arg(short, long, default_value_t = 2)]
    pub k: usize,
    /// c2, w2, l2star, mindist, phip, mst-m or mst-sigma.
    #[arg(long, value_parser = parse_metric, default_value = "c2")]
    pub metric: Metric,
    /// Evaluate this many random k-subsets instead of all of them.
    #[arg(long)]
    pub sample: Option<usize>,
    /// Seed of the subset sampler.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = OUTPUT_DIR_ENV, default_value = "sfd-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct MstArgs {
    pub design: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// fig4 to fig14.
    pub figure: Figure,
    #[arg(long, value_enum, default_value = "desk")]
    pub scale: Scale,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = OUTPUT_DIR_ENV, default_value = "sfd-out")]
    pub out_dir: PathBuf,
}

/// Error whose exit code was decided at the failure site.
#[derive(Debug)]
pub struct Exit {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Exit {}

/// Process exit code for an error.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use sfd_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Exit>() {
            return e.code;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InvalidArgument(_) | E::DimensionUnsupported { .. } | E::IndexOutOfRange { .. } => 2,
                E::Parse { .. } | E::Io(_) => 3,
                E::Degenerate(_) | E::IdenticalRows(_) => 4,
                E::StaleState { .. } => 1,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 3;
        }
    }
    1
}

fn resolve_seed(seed: Option<u64>) -> Seed {
    match seed {
        Some(s) => Seed(s),
        None => {
            let s: u64 = rand::random();
            eprintln!("seed: {s}");
            Seed(s)
        }
    }
}

fn read_design(path: &Path) -> Result<DesignMatrix> {
    read_design_file(path).with_context(|| format!("reading {}", path.display()))
}

/// Parses arguments from `args` and runs the command.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    execute(cli)
}

pub fn execute(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs as usize)
            .build_global();
    }
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Subproj(a) => cmd_subproj(a),
        Command::Mst(a) => cmd_mst(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

/// Binary entry point: logging, execution and exit code.
pub fn main_with_exit() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let seed = resolve_seed(a.seed);
    if a.method != Method::Sobol && (a.scramble || a.skip != 1) {
        bail!(Exit {
            code: 2,
            message: "--scramble and --skip only apply to --method sobol".into()
        });
    }
    let design = match a.method {
        Method::Lhs => generate_random_lhs(a.n, a.d, seed)?.into_matrix(),
        Method::LhsCentered => generate_centered_lhs(a.n, a.d, seed)?.into_matrix(),
        Method::Srs => generate_srs(a.n, a.d, seed)?,
        Method::Sobol => {
            let config = SobolConfig {
                skip: a.skip,
                scramble: if a.scramble { Scramble::OwenNested } else { Scramble::None },
                seed,
                ..SobolConfig::new(a.d)
            };
            generate_sobol(a.n, &config)?
        }
    };
    let text = design_to_string(&design);
    match a.output {
        Some(path) => write_atomic(&path, text.as_bytes())?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let design = read_design(&a.design)?;
    let values = a
        .criteria
        .iter()
        .map(|&spec| evaluate(&design, spec))
        .collect::<sfd_core::Result<Vec<_>>>()?;
    let text = match a.format {
        Format::Json => serde_json::to_string_pretty(&values)? + "\n",
        Format::Csv => {
            let mut out = String::from("criterion,p,value\n");
            for v in &values {
                let p = if v.kind() == CriterionKind::PhiP { v.spec.p.to_string() } else { String::new() };
                out.push_str(&format!("{},{},{}\n", v.kind(), p, format_f64(v.value)));
            }
            out
        }
    };
    std::io::stdout().lock().write_all(text.as_bytes())?;
    if let Some(v) = values.iter().find(|v| v.degenerate) {
        bail!(Exit {
            code: 4,
            message: format!("{} is degenerate: the design has coincident points", v.spec)
        });
    }
    Ok(())
}

fn optimizer_config(a: &OptimizeArgs, seed: Seed) -> Result<OptimizerConfig> {
    let mut config = OptimizerConfig {
        algorithm: a.algo,
        t0: a.t0,
        budget: a.budget,
        seed,
        q_outer: a.q,
        monitors: a.monitor.clone(),
        ..OptimizerConfig::default()
    };
    if let Some(c) = a.c {
        config.c = c;
    }
    if let Some(i) = a.i_max {
        config.i_max = i;
    }
    if let Some(m) = a.m {
        config.m_inner = m;
    }
    if let Some(j) = a.j {
        config.j_candidates = j;
    }
    let ignored: Vec<&str> = match a.algo {
        Algorithm::GeometricSa => [("--i-max", a.i_max.is_some()), ("--m", a.m.is_some()), ("--j", a.j.is_some()), ("--q", a.q.is_some())].to_vec(),
        Algorithm::MmSa => [("--m", a.m.is_some()), ("--j", a.j.is_some()), ("--q", a.q.is_some())].to_vec(),
        Algorithm::Ese => [("--c", a.c.is_some()), ("--i-max", a.i_max.is_some())].to_vec(),
    }
    .into_iter()
    .filter_map(|(flag, set)| set.then_some(flag))
    .collect();
    if !ignored.is_empty() {
        warn!("{} ignored by {}", ignored.join(", "), a.algo.name());
    }
    config.validate()?;
    Ok(config)
}

fn cmd_optimize(a: OptimizeArgs) -> Result<()> {
    let seed = resolve_seed(a.seed);
    if a.replicates == 0 {
        bail!(Exit {
            code: 2,
            message: "--replicates must be at least 1".into()
        });
    }
    let base = optimizer_config(&a, seed)?;
    let input = match &a.input {
        Some(path) => Some(
            LhsDesign::from_matrix(read_design(path)?)
                .with_context(|| format!("{} is not a Latin Hypercube", path.display()))?,
        ),
        None => None,
    };
    let config_echo = json!({
        "input": a.input.as_ref().map(|p| p.display().to_string()),
        "n": a.n,
        "d": a.d,
        "criterion": a.criterion,
        "optimizer": base,
        "replicates": a.replicates,
    });
    let mut out = OutputDir::new(&a.out_dir, "optimize", config_echo, seed.0);
    if let Some(path) = &a.input {
        out.add_input(path)?;
    }

    let results: Vec<OptimizationResult> = (0..a.replicates)
        .into_par_iter()
        .map(|r| {
            let s = seed.offset(r as u64);
            let initial = match &input {
                Some(design) => design.clone(),
                None => generate_random_lhs(a.n.unwrap_or(0), a.d.unwrap_or(0), s)?,
            };
            let config = OptimizerConfig { seed: s, ..base.clone() };
            optimize(&initial, a.criterion, &config)
        })
        .collect::<sfd_core::Result<_>>()?;

    let mut summary = Vec::with_capacity(results.len());
    for (r, res) in results.iter().enumerate() {
        let id = r + 1;
        for w in &res.warnings {
            warn!("replicate {id}: {w}");
        }
        out.write(&format!("best-{id}.csv"), &design_to_string(res.best_design.matrix()))?;
        out.write(&format!("trace-{id}.csv"), &res.trace.to_csv())?;
        out.write(&format!("trace-{id}.json"), &res.trace.metadata_json())?;
        info!(
            "replicate {id}: {} = {} after {} perturbations",
            res.best_value.spec,
            res.best_value.value,
            res.stats.perturbations
        );
        summary.push(json!({
            "replicate": id,
            "seed": seed.offset(r as u64),
            "initial": res.trace.records[0].best.abs(),
            "best": res.best_value,
            "termination": res.termination,
            "stats": res.stats,
            "warnings": res.warnings,
        }));
    }
    out.write("summary.json", &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    out.finish()?;
    Ok(())
}

fn cmd_subproj(a: SubprojArgs) -> Result<()> {
    let sampler_seed = a.sample.map(|_| resolve_seed(a.seed));
    let designs = a
        .designs
        .iter()
        .map(|p| read_design(p))
        .collect::<Result<Vec<_>>>()?;
    let ids: Vec<String> = a
        .designs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            p.file_stem()
                .map(|s| s.to_string_lossy().replace(',', "_"))
                .unwrap_or_else(|| format!("design-{}", i + 1))
        })
        .collect();
    let mut unique = ids.clone();
    unique.sort();
    unique.dedup();
    let ids = if unique.len() == ids.len() {
        ids
    } else {
        ids.iter().enumerate().map(|(i, s)| format!("{}-{s}", i + 1)).collect()
    };
    let mode = match (a.sample, sampler_seed) {
        (Some(count), Some(seed)) => SubsetMode::Sampled { count, seed },
        _ => SubsetMode::Exhaustive,
    };
    let opts = SubprojectionOptions {
        mode,
        ids: Some(ids),
        ..Default::default()
    };
    let report = subprojection_report_with(&designs, a.k, a.metric, &opts)?;

    let mut summary = String::from("design_id,min,q25,median,q75,max\n");
    let rows = report
        .per_design
        .iter()
        .map(|d| (d.id.as_str(), d.summary))
        .chain([("pooled", report.pooled_summary)]);
    for (id, s) in rows {
        summary.push_str(&format!(
            "{id},{},{},{},{},{}\n",
            format_f64(s.min),
            format_f64(s.q25),
            format_f64(s.median),
            format_f64(s.q75),
            format_f64(s.max)
        ));
    }
    let config = json!({
        "designs": a.designs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "k": a.k,
        "metric": a.metric,
        "sample": a.sample,
    });
    let mut out = OutputDir::new(&a.out_dir, "subproj", config, sampler_seed.map_or(0, |s| s.0));
    for p in &a.designs {
        out.add_input(p)?;
    }
    out.write("subproj.csv", &report.to_csv())?;
    out.write("subproj-summary.csv", &summary)?;
    out.write("subproj.json", &(serde_json::to_string_pretty(&report.to_json())? + "\n"))?;
    out.finish()?;
    Ok(())
}

fn cmd_mst(a: MstArgs) -> Result<()> {
    let design = read_design(&a.design)?;
    let summary = mst_summary(&design)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let seed = resolve_seed(a.seed);
    info!("running {} at {:?} scale", a.figure, a.scale);
    let result = run_figure(a.figure, a.scale, seed)
        .map_err(|e| anyhow!(e).context(format!("running {}", a.figure)))?;
    let mut out = OutputDir::new(&a.out_dir, "bench", result.config, seed.0);
    for (name, contents) in &result.files {
        out.write(name, contents)?;
    }
    out.finish()?;
    Ok(())
}
