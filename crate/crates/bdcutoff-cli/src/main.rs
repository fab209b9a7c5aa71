//! Command-line front end: config ingestion, analysis orchestration,
//! deterministic report emission.
//!
//! Exit codes: 0 success, 1 verify failure, 2 config error, 3 numeric
//! error. Errors are also written as a JSON object on stderr.

use bdcutoff::cutoff::{
    self, DistanceSpec, FamilyReport, MixingSpec, StartSpec, SweepOptions, VerdictMode,
};
use bdcutoff::evolve::{self};
use bdcutoff::{Chain, Clock, Family};
use clap::{Args, Parser, Subcommand};
use std::fmt::Write as _;
use std::process::ExitCode;

mod output;

#[derive(Debug, Parser)]
#[command(name = "bdcutoff", version, about = "Birth-and-death chain cutoff analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyze a single chain file: spectrum summary, hitting
    /// statistics, optional mixing times and distance profile.
    Analyze(AnalyzeArgs),
    /// Sweep a parametric family across sizes and evaluate cutoff
    /// criteria.
    Sweep(SweepArgs),
    /// Export a TV/separation distance profile over a time grid.
    Distance(DistanceArgs),
    /// Run a seeded random-slowdown experiment over sizes and seeds.
    Random(RandomArgs),
    /// Run the cross-module invariant checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct CommonOut {
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// Output format.
    #[arg(long, default_value = "json", value_parser = ["csv", "json"])]
    format: String,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Chain JSON file: {"n":…, "p":[…], "q":[…], "r":[…]}.
    #[arg(long)]
    chain: std::path::PathBuf,
    /// Quantiles for boundary statistics.
    #[arg(long, default_value = "0.25,0.5,0.75", value_delimiter = ',')]
    quantiles: Vec<f64>,
    /// Epsilon thresholds for mixing-time columns.
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    /// Clock for mixing-time columns.
    #[arg(long, default_value = "continuous", value_parser = ["continuous", "discrete", "both"])]
    clock: String,
    /// Also export a distance profile on a geometric grid t0:t1:ratio.
    #[arg(long)]
    profile_grid: Option<String>,
    #[command(flatten)]
    out: CommonOut,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Family TOML config.
    #[arg(long)]
    family: std::path::PathBuf,
    /// Sizes: explicit list `a,b,c` or geometric `start:stop:ratio`.
    #[arg(long)]
    sizes: String,
    #[arg(long, default_value = "0.25,0.5,0.75", value_delimiter = ',')]
    quantiles: Vec<f64>,
    /// Epsilon thresholds for max-TV mixing columns.
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    #[arg(long, default_value = "continuous", value_parser = ["continuous", "discrete", "both"])]
    clock: String,
    /// Master seed (recorded; used by seeded families).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on sizes for exact mixing-time columns.
    #[arg(long)]
    exact_mixing_limit: Option<usize>,
    /// Worker threads for the sweep pool (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Skip full-spectrum statistics.
    #[arg(long)]
    no_spectral: bool,
    #[command(flatten)]
    out: CommonOut,
}

#[derive(Debug, Args)]
struct DistanceArgs {
    #[arg(long, conflicts_with = "family")]
    chain: Option<std::path::PathBuf>,
    #[arg(long)]
    family: Option<std::path::PathBuf>,
    /// Size to generate when --family is used.
    #[arg(long)]
    size: Option<usize>,
    /// Start states for the profile columns ("n" for the right end).
    #[arg(long, default_value = "0", value_delimiter = ',')]
    starts: Vec<String>,
    #[arg(long, default_value = "continuous", value_parser = ["continuous", "discrete"])]
    clock: String,
    /// Geometric grid t0:t1:ratio (ratio defaults to 1.05).
    #[arg(long)]
    grid: Option<String>,
    /// Uniformization tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    out: CommonOut,
}

#[derive(Debug, Args)]
struct RandomArgs {
    /// Family TOML config with name = "slowdown".
    #[arg(long)]
    family: std::path::PathBuf,
    #[arg(long)]
    sizes: String,
    /// Explicit seed list; overrides --seed/--seed-count.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    seed_count: u64,
    #[arg(long, default_value = "0.25,0.5,0.75", value_delimiter = ',')]
    quantiles: Vec<f64>,
    #[command(flatten)]
    out: CommonOut,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0xBD5EED)]
    seed: u64,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn emit(&self) {
        let (kind, message) = match self {
            CliError::Config(m) => ("config", m),
            CliError::Numeric(m) => ("numeric", m),
        };
        eprintln!(
            "{}",
            serde_json::json!({"error": {"kind": kind, "message": message}})
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Distance(args) => cmd_distance(args),
        Command::Random(args) => cmd_random(args),
        Command::Verify(args) => return cmd_verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.emit();
            ExitCode::from(e.exit_code())
        }
    }
}

fn read_to_string(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

fn load_chain(path: &std::path::Path) -> Result<Chain, CliError> {
    Chain::from_json(&read_to_string(path)?).map_err(|e| CliError::Config(e.to_string()))
}

fn load_family(path: &std::path::Path) -> Result<Family, CliError> {
    Family::from_toml(&read_to_string(path)?).map_err(|e| CliError::Config(e.to_string()))
}

fn parse_sizes(text: &str) -> Result<Vec<usize>, CliError> {
    let sizes: Vec<usize> = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Config(format!(
                "geometric sizes need start:stop:ratio, got {text}"
            )));
        }
        let start: usize = parts[0]
            .parse()
            .map_err(|e| CliError::Config(format!("bad start: {e}")))?;
        let stop: usize = parts[1]
            .parse()
            .map_err(|e| CliError::Config(format!("bad stop: {e}")))?;
        let ratio: f64 = parts[2]
            .parse()
            .map_err(|e| CliError::Config(format!("bad ratio: {e}")))?;
        if start == 0 || stop < start || ratio <= 1.0 {
            return Err(CliError::Config(format!("bad geometric size spec {text}")));
        }
        let mut out = Vec::new();
        let mut x = start as f64;
        while (x.round() as usize) <= stop {
            let v = x.round() as usize;
            if out.last() != Some(&v) {
                out.push(v);
            }
            x *= ratio;
        }
        out
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(format!("bad size list: {e}")))?
    };
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config(
            "sizes must be non-empty and ascending".into(),
        ));
    }
    Ok(sizes)
}

fn parse_clocks(text: &str) -> Vec<Clock> {
    match text {
        "discrete" => vec![Clock::Discrete],
        "both" => vec![Clock::Continuous, Clock::Discrete],
        _ => vec![Clock::Continuous],
    }
}

fn validate_unit_interval(name: &str, values: &[f64]) -> Result<(), CliError> {
    for &v in values {
        if !(v > 0.0 && v < 1.0) {
            return Err(CliError::Config(format!("{name} value {v} not in (0,1)")));
        }
    }
    Ok(())
}

fn mixing_specs(eps: &[f64], clocks: &[Clock]) -> Vec<MixingSpec> {
    let mut specs = Vec::new();
    for &clock in clocks {
        for &eps in eps {
            specs.push(MixingSpec {
                start: StartSpec::Max,
                eps,
                clock,
                distance: DistanceSpec::Tv,
            });
        }
    }
    specs
}

fn write_out(out: &CommonOut, text: &str) -> Result<(), CliError> {
    match &out.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_grid(text: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() < 2 || parts.len() > 3 {
        return Err(CliError::Config(format!(
            "grid needs t0:t1[:ratio], got {text}"
        )));
    }
    let t0: f64 = parts[0]
        .parse()
        .map_err(|e| CliError::Config(format!("bad grid start: {e}")))?;
    let t1: f64 = parts[1]
        .parse()
        .map_err(|e| CliError::Config(format!("bad grid stop: {e}")))?;
    let ratio: f64 = if parts.len() == 3 {
        parts[2]
            .parse()
            .map_err(|e| CliError::Config(format!("bad grid ratio: {e}")))?
    } else {
        1.05
    };
    if !(t0 > 0.0 && t1 >= t0 && ratio > 1.0) {
        return Err(CliError::Config(format!("bad grid spec {text}")));
    }
    Ok((t0, t1, ratio))
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    validate_unit_interval("quantile", &args.quantiles)?;
    validate_unit_interval("eps", &args.eps)?;
    let chain = load_chain(&args.chain)?;
    let opts = SweepOptions {
        quantiles: args.quantiles.clone(),
        mixing: mixing_specs(&args.eps, &parse_clocks(&args.clock)),
        ..SweepOptions::default()
    };
    let row = cutoff::analyze_chain(&chain, chain.n(), &opts);
    if let Some(err) = &row.error {
        return Err(CliError::Numeric(err.clone()));
    }
    let profile = match &args.profile_grid {
        Some(spec) => {
            let (t0, t1, ratio) = parse_grid(spec)?;
            let grid = evolve::geometric_grid(t0, t1, ratio);
            Some(
                evolve::profile_continuous(&chain, 0, &grid, 1e-9)
                    .map_err(|e| CliError::Numeric(e.to_string()))?,
            )
        }
        None => None,
    };
    let text = match args.out.format.as_str() {
        "csv" => output::analyze_csv(&row, &opts, profile.as_ref()),
        _ => output::analyze_json(&row, &opts, profile.as_ref()),
    };
    write_out(&args.out, &text)
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    validate_unit_interval("quantile", &args.quantiles)?;
    validate_unit_interval("eps", &args.eps)?;
    let family = load_family(&args.family)?;
    let sizes = parse_sizes(&args.sizes)?;
    let clocks = parse_clocks(&args.clock);
    let mut opts = SweepOptions {
        quantiles: args.quantiles.clone(),
        mixing: mixing_specs(&args.eps, &clocks),
        spectral: !args.no_spectral,
        ..SweepOptions::default()
    };
    if let Some(limit) = args.exact_mixing_limit {
        opts.exact_mixing_limit_continuous = limit;
        opts.exact_mixing_limit_discrete = limit;
    }
    let run = || -> Result<FamilyReport, CliError> {
        cutoff::analyze_family(&family, &sizes, &opts).map_err(|e| CliError::Config(e.to_string()))
    };
    let report = match args.workers {
        Some(workers) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| CliError::Config(e.to_string()))?;
            pool.install(run)?
        }
        None => run()?,
    };
    if report.rows.iter().all(|r| r.error.is_some()) {
        return Err(CliError::Numeric(
            report.rows[0].error.clone().unwrap_or_default(),
        ));
    }
    let verdicts: Vec<_> = [
        VerdictMode::MaxSep,
        VerdictMode::MaxTv,
        VerdictMode::BoundaryTvLeft,
        VerdictMode::BoundaryTvRight,
    ]
    .into_iter()
    .flat_map(|mode| {
        clocks
            .iter()
            .filter_map(|&clock| cutoff::verdict(&report, mode, clock).ok())
            .collect::<Vec<_>>()
    })
    .collect();
    let text = match args.out.format.as_str() {
        "csv" => {
            let mut text = cutoff::report_to_csv(&report);
            for v in &verdicts {
                let mut line = format!("# verdict,{:?},{:?},{:?}", v.mode, v.clock, v.verdict);
                for t in &v.trends {
                    write!(line, ",{}:slope={} last={}", t.label, t.slope, t.last).unwrap();
                }
                text.push_str(&line);
                text.push('\n');
            }
            text
        }
        _ => {
            let doc = serde_json::json!({
                "report": report,
                "verdicts": verdicts,
                "seed": args.seed,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
            s.push('\n');
            s
        }
    };
    write_out(&args.out, &text)
}

fn cmd_distance(args: DistanceArgs) -> Result<(), CliError> {
    let chain = match (&args.chain, &args.family) {
        (Some(path), None) => load_chain(path)?,
        (None, Some(path)) => {
            let family = load_family(path)?;
            let size = args
                .size
                .ok_or_else(|| CliError::Config("--family needs --size".into()))?;
            family
                .generate(size)
                .map_err(|e| CliError::Config(e.to_string()))?
        }
        _ => {
            return Err(CliError::Config(
                "distance needs exactly one of --chain or --family".into(),
            ))
        }
    };
    let starts: Vec<usize> = args
        .starts
        .iter()
        .map(|s| {
            if s == "n" {
                Ok(chain.n())
            } else {
                s.parse::<usize>()
                    .map_err(|e| CliError::Config(format!("bad start {s}: {e}")))
            }
        })
        .collect::<Result<_, _>>()?;
    for &s in &starts {
        if s > chain.n() {
            return Err(CliError::Config(format!(
                "start {s} out of range for n = {}",
                chain.n()
            )));
        }
    }
    if !(args.tol > 0.0 && args.tol <= 1e-3) {
        return Err(CliError::Config(format!(
            "tol {} not in (0, 1e-3]",
            args.tol
        )));
    }
    let clock = parse_clocks(&args.clock)[0];
    let profiles: Vec<evolve::DistanceProfile> = match clock {
        Clock::Continuous => {
            let (t0, t1, ratio) = parse_grid(args.grid.as_deref().unwrap_or("0.5:100:1.05"))?;
            let grid = evolve::geometric_grid(t0, t1, ratio);
            starts
                .iter()
                .map(|&s| evolve::profile_continuous(&chain, s, &grid, args.tol))
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Numeric(e.to_string()))?
        }
        Clock::Discrete => {
            let (t0, t1, ratio) = parse_grid(args.grid.as_deref().unwrap_or("1:1000:1.05"))?;
            let mut steps: Vec<u64> = evolve::geometric_grid(t0, t1, ratio)
                .into_iter()
                .map(|t| t.round() as u64)
                .collect();
            steps.dedup();
            starts
                .iter()
                .map(|&s| evolve::profile_discrete(&chain, s, &steps))
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Numeric(e.to_string()))?
        }
    };
    let text = match args.out.format.as_str() {
        "csv" => output::profiles_csv(&profiles),
        _ => {
            let mut s = serde_json::to_string_pretty(&serde_json::json!({
                "profiles": profiles.iter().map(output::profile_json).collect::<Vec<_>>(),
            }))
            .expect("profile serializes");
            s.push('\n');
            s
        }
    };
    write_out(&args.out, &text)
}

fn cmd_random(args: RandomArgs) -> Result<(), CliError> {
    validate_unit_interval("quantile", &args.quantiles)?;
    let family = load_family(&args.family)?;
    let (base, dist) = match &family {
        Family::Slowdown { base, dist, .. } => ((**base).clone(), *dist),
        _ => {
            return Err(CliError::Config(
                "random needs a family config with name = \"slowdown\"".into(),
            ))
        }
    };
    let sizes = parse_sizes(&args.sizes)?;
    let seeds: Vec<u64> = if args.seeds.is_empty() {
        (args.seed..args.seed + args.seed_count).collect()
    } else {
        args.seeds.clone()
    };
    let opts = SweepOptions {
        quantiles: args.quantiles.clone(),
        ..SweepOptions::default()
    };
    let report = cutoff::random_family_experiment(&base, dist, &sizes, &seeds, &opts)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let text = match args.out.format.as_str() {
        "csv" => output::random_csv(&report),
        _ => {
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
    };
    write_out(&args.out, &text)
}

fn cmd_verify(args: VerifyArgs) -> ExitCode {
    let results = bdcutoff::verify::run_all(args.seed);
    let mut all_pass = true;
    println!("{:<24} {:>6}  detail", "check", "status");
    for r in &results {
        println!(
            "{:<24} {:>6}  {}",
            r.name,
            if r.pass { "pass" } else { "FAIL" },
            r.detail
        );
        if !r.pass {
            all_pass = false;
            if let Some(replay) = &r.replay {
                eprintln!("{}", serde_json::json!({"check": r.name, "replay": replay}));
            }
        }
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
