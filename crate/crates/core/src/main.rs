use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use streaming_bandits::acceptance;
use streaming_bandits::harness::{
    run_trials, sweep, sweep_to_csv, trials_to_csv, Algo, AlgoParams, DistKind, InstanceSpec,
    Order, Profile, TrialConfig, Vary, VaryKey,
};
use streaming_bandits::id_bai::BatchRule;
use streaming_bandits::schedules::{AlphaRule, DEFAULT_CONSTANT};
use streaming_bandits::BanditError;

#[derive(Parser)]
#[command(name = "streambandit", version, about = "Streaming pure-exploration bandit trials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trials of one algorithm on one instance.
    Run(RunArgs),
    /// Repeat `run` over a list of values for one parameter.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// `key=v1,v2,...` where key is n, k, eps or delta.
        #[arg(long)]
        vary: String,
    },
    /// Run the acceptance suite; exits non-zero on any failure.
    Accept {
        #[arg(long, default_value_t = 0)]
        parallelism: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    Bernoulli,
    Deterministic,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlphaArg {
    Randomized,
    FixedHalf,
    FixedQuarter,
}

#[derive(Clone, Copy, ValueEnum)]
enum BatchArg {
    FixedLog,
    GrowingLog,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// eps-bai, eps-kai, id-bai or uniform.
    #[arg(long)]
    algo: String,
    /// Number of arms (taken from the list for explicit profiles).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_CONSTANT)]
    c: f64,
    /// one-gap:TOP:GAP, linear:LO:HI or explicit:M1,M2,...
    #[arg(long, default_value = "one-gap:0.6:0.25")]
    profile: String,
    /// ascending, descending, random:SEED or as-given.
    #[arg(long, default_value = "ascending")]
    order: String,
    #[arg(long, value_enum, default_value = "bernoulli")]
    dist: DistArg,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    parallelism: usize,
    /// Include per-trial reports (with per-arm pull totals) in JSON output.
    #[arg(long)]
    per_trial: bool,
    #[arg(long, value_enum, default_value = "randomized")]
    alpha_rule: AlphaArg,
    #[arg(long, value_enum, default_value = "fixed-log")]
    batch_rule: BatchArg,
    /// Skip the per-batch pull log.
    #[arg(long)]
    no_audit: bool,
}

fn parse_f64(s: &str) -> Result<f64, BanditError> {
    s.trim()
        .parse()
        .map_err(|e| BanditError::Config(format!("bad number `{s}`: {e}")))
}

fn parse_profile(s: &str, k: usize) -> Result<Profile, BanditError> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let pair = || -> Result<(f64, f64), BanditError> {
        let (a, b) = rest
            .split_once(':')
            .ok_or_else(|| BanditError::Config(format!("profile `{s}` needs two values")))?;
        Ok((parse_f64(a)?, parse_f64(b)?))
    };
    match kind {
        "one-gap" => {
            let (top, gap) = pair()?;
            Ok(Profile::OneGap { top, gap, k })
        }
        "linear" => {
            let (lo, hi) = pair()?;
            Ok(Profile::Linear { lo, hi })
        }
        "explicit" => Ok(Profile::Explicit {
            means: rest.split(',').map(parse_f64).collect::<Result<_, _>>()?,
        }),
        other => Err(BanditError::Config(format!("unknown profile `{other}`"))),
    }
}

fn parse_order(s: &str) -> Result<Order, BanditError> {
    match s.split_once(':') {
        Some(("random", seed)) => Ok(Order::Random {
            seed: seed
                .parse()
                .map_err(|e| BanditError::Config(format!("bad order seed `{seed}`: {e}")))?,
        }),
        None if s == "ascending" => Ok(Order::Ascending),
        None if s == "descending" => Ok(Order::Descending),
        None if s == "as-given" => Ok(Order::AsGiven),
        _ => Err(BanditError::Config(format!("unknown order `{s}`"))),
    }
}

fn workers(requested: usize) -> usize {
    if requested == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        requested
    }
}

fn build_config(args: &RunArgs) -> Result<TrialConfig, BanditError> {
    let algo: Algo = args.algo.parse()?;
    let profile = parse_profile(&args.profile, args.k)?;
    let n = match (&profile, args.n) {
        (Profile::Explicit { means }, None) => means.len(),
        (_, Some(n)) => n,
        (_, None) => return Err(BanditError::Config("--n is required for this profile".into())),
    };
    let instance = InstanceSpec {
        n,
        profile,
        order: parse_order(&args.order)?,
        distribution: match args.dist {
            DistArg::Bernoulli => DistKind::Bernoulli,
            DistArg::Deterministic => DistKind::Deterministic,
        },
    };
    let mut params = AlgoParams::new(args.eps, args.delta, args.k);
    params.c = args.c;
    params.alpha_rule = match args.alpha_rule {
        AlphaArg::Randomized => AlphaRule::Randomized,
        AlphaArg::FixedHalf => AlphaRule::FixedHalf,
        AlphaArg::FixedQuarter => AlphaRule::FixedQuarter,
    };
    params.batch_rule = match args.batch_rule {
        BatchArg::FixedLog => BatchRule::FixedLog,
        BatchArg::GrowingLog => BatchRule::GrowingLog,
    };
    let mut config = TrialConfig::new(algo, instance, params, args.trials);
    config.base_seed = args.seed;
    config.parallelism = workers(args.parallelism);
    config.audit = !args.no_audit;
    config.per_trial = args.per_trial;
    config.per_arm = args.per_trial && config.audit;
    Ok(config)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), BanditError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| BanditError::Config(format!("writing {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            let written = stdout.write_all(text.as_bytes()).and_then(|_| {
                if text.ends_with('\n') {
                    Ok(())
                } else {
                    stdout.write_all(b"\n")
                }
            });
            match written {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(BanditError::Config(format!("writing stdout: {e}")))
                }
                _ => Ok(()),
            }
        }
    }
}

fn execute(cli: Cli) -> Result<bool, BanditError> {
    match cli.command {
        Command::Run(args) => {
            let config = build_config(&args)?;
            let (aggregate, reports) = run_trials(&config)?;
            let text = match args.format {
                Format::Json => aggregate.to_json(),
                Format::Csv => trials_to_csv(&reports)?,
            };
            emit(&args.out, &text)?;
            Ok(true)
        }
        Command::Sweep { mut run, vary } => {
            let vary: Vary = vary.parse()?;
            if vary.key == VaryKey::N && run.n.is_none() {
                run.n = Some(vary.values[0] as usize);
            }
            let config = build_config(&run)?;
            let rows = sweep(&config, &vary)?;
            let text = match run.format {
                Format::Json => serde_json::to_string_pretty(&rows)
                    .map_err(|e| BanditError::Config(format!("json: {e}")))?,
                Format::Csv => sweep_to_csv(&rows)?,
            };
            emit(&run.out, &text)?;
            Ok(true)
        }
        Command::Accept { parallelism } => {
            let results = acceptance::run_all(workers(parallelism))?;
            for r in &results {
                println!("{r}");
            }
            Ok(results.iter().all(|r| r.passed))
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
