//! vinegrow: vine copula structure selection and diagnostics.

mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use vinegrow_core::ccc::{ccc_test, CccConfig};
use vinegrow_core::error::VineError;
use vinegrow_core::families::Family;
use vinegrow_core::model::{ModelFile, ModelMeta};
use vinegrow_core::selection::{
    ccc_diagnostics, select, Method, RTransform, SelectionConfig,
};
use vinegrow_core::simulation::{
    run_study, sample_from_vine, sample_vine_spec, StudyScenario, VineSpecConfig,
};
use vinegrow_core::structure::{count_structures, to_matrix, StructureKind};

#[derive(Parser)]
#[command(name = "vinegrow", version, about = "Vine copula model selection toolkit")]
struct Cli {
    /// Worker thread cap (default: all cores; VINEGROW_THREADS as fallback).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a vine copula to CSV data.
    Fit(FitArgs),
    /// Test constant conditional correlation for a conditional pair, or
    /// re-diagnose every conditional edge of a fitted model.
    CccTest(CccArgs),
    /// Count vine structures.
    Count(CountArgs),
    /// Run the Monte-Carlo method comparison study.
    Benchmark(BenchArgs),
    /// Draw a random vine and simulate a sample from it.
    Simulate(SimArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV with a header row.
    input: PathBuf,
    #[arg(long, default_value = "dissmann")]
    method: String,
    /// Weight of the p-value score against the tau score.
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    /// p-value transformation: rank, identity or log.
    #[arg(long, default_value = "rank")]
    r: String,
    /// Run the pair-copula independence test.
    #[arg(long)]
    indep_test: bool,
    /// Level of the independence test and of the CCC rejection count.
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    /// Comma-separated family codes (default: all parametric families).
    #[arg(long)]
    families: Option<String>,
    /// Recorded in model metadata.
    #[arg(long)]
    seed: Option<u64>,
    /// Apply the empirical probability integral transform first.
    #[arg(long)]
    pit: bool,
    /// Output model file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CccArgs {
    /// Input CSV with a header row.
    input: PathBuf,
    /// Two conditioned columns, e.g. --pair x1,x3.
    #[arg(long)]
    pair: Option<String>,
    /// Conditioning columns, e.g. --cond x2 or --cond x2,x4.
    #[arg(long)]
    cond: Option<String>,
    /// Re-diagnose the conditional edges of a fitted model (no refit).
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    pit: bool,
    /// Smallest admissible partition group.
    #[arg(long)]
    min_leaf: Option<usize>,
    /// Output JSON path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    d: usize,
    /// rvine, cvine or natural.
    #[arg(long, default_value = "rvine")]
    kind: String,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    reps: usize,
    #[arg(long, default_value = "dissmann,alg1,alg2,alg2-fast")]
    methods: String,
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    #[arg(long, default_value = "rank")]
    r: String,
    #[arg(long)]
    indep_test: bool,
    /// Restrict generation to positive dependence.
    #[arg(long)]
    positive: bool,
    #[arg(long)]
    families: Option<String>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV summary table path (default: printed to stdout).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    positive: bool,
    #[arg(long)]
    families: Option<String>,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("VINEGROW_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// 3 for data problems, 4 for numeric failures.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(ve) = cause.downcast_ref::<VineError>() {
            return match ve {
                VineError::ParameterDomain(_)
                | VineError::Numeric(_)
                | VineError::Disconnected(_) => 4,
                _ => 3,
            };
        }
    }
    3
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Fit(args) => cmd_fit(args),
        Command::CccTest(args) => cmd_ccc(args),
        Command::Count(args) => cmd_count(args),
        Command::Benchmark(args) => cmd_benchmark(args),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

fn parse_families(spec: &Option<String>) -> Result<Vec<Family>> {
    match spec {
        None => Ok(Family::PARAMETRIC.to_vec()),
        Some(s) => s
            .split(',')
            .map(|code| Family::from_code(code.trim()).map_err(anyhow::Error::from))
            .collect(),
    }
}

fn parse_methods(spec: &str) -> Result<Vec<Method>> {
    spec.split(',')
        .map(|code| Method::from_code(code.trim()).map_err(anyhow::Error::from))
        .collect()
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let sample = io::load_sample(&args.input, args.pit)?;
    let cfg = SelectionConfig {
        method: Method::from_code(&args.method)?,
        alpha: args.alpha,
        r_transform: RTransform::from_code(&args.r)?,
        family_set: parse_families(&args.families)?,
        indep_test: args.indep_test,
        beta: args.level,
        diagnostics: true,
        seed: args.seed,
        ..SelectionConfig::default()
    };
    if !(0.0..=1.0).contains(&args.alpha) {
        bail!(VineError::DataDomain(format!(
            "alpha {} outside [0, 1]",
            args.alpha
        )));
    }
    let fitted = select(&sample, &cfg)?;

    let diags = fitted.ccc_diagnostics.as_ref().expect("diagnostics on");
    let sm = to_matrix(&fitted.model.structure)?;
    let ccc_p: Vec<Option<f64>> = sm
        .cell_map
        .iter()
        .map(|&(t, e)| (t >= 1).then(|| diags[t - 1][e].p_value))
        .collect();
    let meta = ModelMeta {
        method: cfg.method.code().to_string(),
        alpha: cfg.alpha,
        seed: cfg.seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        ccc_p_values: ccc_p,
    };
    let file = ModelFile::from_model(
        &fitted.model,
        fitted.loglik,
        fitted.aic,
        fitted.npars,
        Some(meta),
    )?;

    let n_conditional: usize = fitted.model.structure.trees()[1..]
        .iter()
        .map(Vec::len)
        .sum();
    let rejections = fitted.ccc_rejections(args.level).unwrap_or(0);
    println!("method:   {}", cfg.method.code());
    println!("d:        {}", sample.d());
    println!("n:        {}", sample.n());
    println!("loglik:   {:.4}", fitted.loglik);
    println!("npars:    {}", fitted.npars);
    println!("AIC:      {:.4}", fitted.aic);
    for (t, tree) in diags.iter().enumerate() {
        for (e, res) in tree.iter().enumerate() {
            let edge = &fitted.model.structure.trees()[t + 1][e];
            let (x, y) = edge.conditioned;
            let cond: Vec<String> =
                edge.conditioning.iter().map(|v| (v + 1).to_string()).collect();
            let mark = if res.rejects_at(args.level) { " *" } else { "" };
            println!(
                "CCC p:    {},{};{}  p = {:.4}{mark}",
                x + 1,
                y + 1,
                cond.join(","),
                res.p_value
            );
        }
    }
    println!(
        "CCC:      {rejections} of {n_conditional} conditional edges rejected at level {}",
        args.level
    );
    if let Some(out) = &args.out {
        std::fs::write(out, file.to_json())
            .with_context(|| format!("cannot write {}", out.display()))?;
        println!("model written to {}", out.display());
    } else {
        println!("{}", file.to_json());
    }
    Ok(())
}

fn cmd_ccc(args: CccArgs) -> Result<()> {
    let ccc_cfg = CccConfig {
        min_leaf: args.min_leaf,
        ..CccConfig::default()
    };
    let output = if let Some(model_path) = &args.model {
        let sample = io::load_sample(&args.input, args.pit)?;
        let text = std::fs::read_to_string(model_path)
            .with_context(|| format!("cannot read {}", model_path.display()))?;
        let model = ModelFile::from_json(&text)?.to_model()?;
        let diags = ccc_diagnostics(&model, &sample, &ccc_cfg)?;
        let mut rows = Vec::new();
        for (t, tree) in diags.iter().enumerate() {
            for (e, res) in tree.iter().enumerate() {
                let edge = &model.structure.trees()[t + 1][e];
                let (x, y) = edge.conditioned;
                let cond: Vec<String> =
                    edge.conditioning.iter().map(|v| (v + 1).to_string()).collect();
                rows.push(serde_json::json!({
                    "edge": format!("{},{};{}", x + 1, y + 1, cond.join(",")),
                    "tree": t + 2,
                    "result": res,
                }));
            }
        }
        serde_json::to_string_pretty(&rows)?
    } else {
        let (columns, labels) = io::read_csv_columns(&args.input)?;
        let columns = if args.pit {
            columns
                .iter()
                .map(|c| vinegrow_core::dependence::rank_transform_column(c))
                .collect::<vinegrow_core::Result<Vec<_>>>()?
        } else {
            columns
        };
        let pair = args
            .pair
            .as_ref()
            .context("either --pair with --cond, or --model is required")?;
        let cond = args
            .cond
            .as_ref()
            .context("--cond is required with --pair")?;
        let pair_idx: Vec<usize> = pair
            .split(',')
            .map(|s| io::resolve_column(s.trim(), &labels))
            .collect::<Result<_>>()?;
        if pair_idx.len() != 2 {
            bail!("--pair needs exactly two columns");
        }
        let cond_idx: Vec<usize> = cond
            .split(',')
            .map(|s| io::resolve_column(s.trim(), &labels))
            .collect::<Result<_>>()?;
        let conditioning: Vec<Vec<f64>> =
            cond_idx.iter().map(|&j| columns[j].clone()).collect();
        let result = ccc_test(
            &columns[pair_idx[0]],
            &columns[pair_idx[1]],
            &conditioning,
            &ccc_cfg,
        )?;
        serde_json::to_string_pretty(&result)?
    };
    match &args.out {
        Some(path) => std::fs::write(path, output)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => println!("{output}"),
    }
    Ok(())
}

fn cmd_count(args: CountArgs) -> Result<()> {
    let kind = StructureKind::from_code(&args.kind)?;
    println!("{}", count_structures(args.d, kind)?);
    Ok(())
}

fn cmd_benchmark(args: BenchArgs) -> Result<()> {
    let scenario = StudyScenario {
        d: args.d,
        n: args.n,
        reps: args.reps,
        methods: parse_methods(&args.methods)?,
        alpha: args.alpha,
        family_set: parse_families(&args.families)?,
        positive_only: args.positive,
        indep_test: args.indep_test,
        r_transform: RTransform::from_code(&args.r)?,
        master_seed: args.seed,
    };
    let report = run_study(&scenario)?;

    // The summary table carries only seed-reproducible quantities; timings
    // live in the JSON report and on stderr.
    let mut table = String::new();
    table.push_str("method,better_or_equal_pct,equal_pct,mean_aic,mean_aic_diff_per_obs\n");
    for s in &report.summaries {
        table.push_str(&format!(
            "{},{:.1},{:.1},{:.4},{:.6}\n",
            s.method.code(),
            s.better_or_equal_pct,
            s.equal_pct,
            s.mean_aic,
            s.mean_aic_diff_per_obs
        ));
    }
    for s in &report.summaries {
        eprintln!("{}: mean {:.3}s per replication", s.method.code(), s.mean_seconds);
    }
    match &args.csv {
        Some(path) => std::fs::write(path, &table)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{table}"),
    }
    if !report.failed.is_empty() {
        eprintln!("{} replication(s) failed and were excluded:", report.failed.len());
        for (rep, msg) in &report.failed {
            eprintln!("  rep {rep}: {msg}");
        }
    }
    if let Some(out) = &args.out {
        std::fs::write(out, serde_json::to_string_pretty(&report)?)
            .with_context(|| format!("cannot write {}", out.display()))?;
        println!("report written to {}", out.display());
    }
    Ok(())
}

fn cmd_simulate(args: SimArgs) -> Result<()> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(args.seed);
    let spec_cfg = VineSpecConfig {
        family_set: parse_families(&args.families)?,
        positive_only: args.positive,
    };
    let vine = sample_vine_spec(args.d, &mut rng, &spec_cfg)?;
    let sample = sample_from_vine(&vine, args.n, &mut rng)?;
    match &args.out {
        Some(path) => {
            let file = std::fs::File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))?;
            io::write_sample_csv(&sample, file)?;
        }
        None => io::write_sample_csv(&sample, std::io::stdout().lock())?,
    }
    Ok(())
}
