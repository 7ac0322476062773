//! Command-line front end: run, batch, replay, ablate, metrics, describe and
//! eval.

mod backend;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use policy_refine::dsl::parse;
use policy_refine::env::{describe, Integrator, TaskId};
use policy_refine::metrics::{evaluate, render_curve_csv, render_table, MetricsOptions, DEFAULT_N_EVAL};
use policy_refine::prompt::Ablation;
use policy_refine::refine::{
    evaluate_strategy, read_records, replay, run_batch, run_replication, BatchSettings, LoopConfig,
    LoopOverrides, RecordSink, RunRecord, RunStatus, SystemClock,
};

use backend::BackendArgs;

#[derive(Parser)]
#[command(
    name = "policy-refine",
    version,
    about = "Refine rule-based control policies with a chat model"
)]
struct Cli {
    /// Log more (repeat for debug output); RUST_LOG takes precedence.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one replication and append its record.
    Run(RunArgs),
    /// Run every cell of a TOML experiment matrix.
    Batch(BatchArgs),
    /// Re-run stored records against their own transcripts and compare.
    Replay(ReplayArgs),
    /// Run one replication under a reflection-prompt ablation.
    Ablate {
        #[arg(value_parser = parse_ablation)]
        condition: Ablation,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Aggregate stored records into evaluation metrics.
    Metrics(MetricsArgs),
    /// Print a task's description, observation names and reward maximum.
    Describe {
        #[arg(value_parser = parse_task)]
        task: TaskId,
    },
    /// Evaluate a policy file without a model.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegratorArg {
    SemiImplicitEuler,
    Euler,
}

impl From<IntegratorArg> for Integrator {
    fn from(value: IntegratorArg) -> Self {
        match value {
            IntegratorArg::SemiImplicitEuler => Integrator::SemiImplicitEuler,
            IntegratorArg::Euler => Integrator::Euler,
        }
    }
}

fn parse_task(s: &str) -> Result<TaskId, String> {
    s.parse().map_err(|e: policy_refine::env::EnvError| e.to_string())
}

fn parse_ablation(s: &str) -> Result<Ablation, String> {
    s.parse()
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_parser = parse_task)]
    task: TaskId,
    /// Model name; defaults to the one in the endpoint config.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    /// TOML file of loop overrides (the `[loop]` table of a batch file).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    eval_episodes: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, value_parser = parse_ablation)]
    ablation: Option<Ablation>,
    /// Keep refining after the maximum reward is reached.
    #[arg(long)]
    no_stop_on_max: bool,
    #[arg(long)]
    repair_budget: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    integrator: Option<IntegratorArg>,
    #[arg(long, default_value_t = 0)]
    replication: usize,
    /// JSON-lines file the record is appended to.
    #[arg(long, default_value = "records.jsonl")]
    out: PathBuf,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Args)]
struct BatchArgs {
    settings: PathBuf,
    #[arg(long, default_value = "records.jsonl")]
    out: PathBuf,
    /// Size of the worker pool; defaults to the number of CPUs.
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Args)]
struct ReplayArgs {
    records: PathBuf,
    /// Replay only the record at this position in the file.
    #[arg(long)]
    index: Option<usize>,
}

#[derive(Args)]
struct MetricsArgs {
    records: PathBuf,
    #[arg(long, default_value_t = DEFAULT_N_EVAL)]
    n_eval: usize,
    /// Iterations per replication; defaults to the configured epochs.
    #[arg(long)]
    t_max: Option<usize>,
    /// Success threshold for tasks without a maximum reward.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    skip_robustness: bool,
    /// Write the full-precision report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write per-iteration mean rewards as CSV.
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_parser = parse_task)]
    task: TaskId,
    /// Python source defining the policy function.
    policy: PathBuf,
    #[arg(long, default_value_t = 20)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    integrator: Option<IntegratorArg>,
    /// Write the final steps of the worst episode as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
}

impl RunArgs {
    fn loop_config(&self, model: String) -> Result<LoopConfig> {
        let mut config = LoopConfig::for_task(self.task, model);
        config.temperature = self.temperature;
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let overrides: LoopOverrides =
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            overrides.apply(&mut config);
        }
        LoopOverrides {
            epochs: self.epochs,
            eval_episodes: self.eval_episodes,
            window_size: self.window,
            ablation: self.ablation,
            stop_on_max: self.no_stop_on_max.then_some(false),
            repair_budget: self.repair_budget,
            seed_root: self.seed,
            ..LoopOverrides::default()
        }
        .apply(&mut config);
        if let Some(integrator) = self.integrator {
            config.env.cartpole_integrator = integrator.into();
        }
        config.validate()?;
        Ok(config)
    }
}

fn summarize(record: &RunRecord) {
    let rewards: Vec<String> = record.rewards().iter().map(|r| format!("{r:.2}")).collect();
    println!(
        "{} replication {}: {:?}, {} strategies, rewards [{}]",
        record.task(),
        record.replication,
        record.status,
        record.strategies.len(),
        rewards.join(", ")
    );
    if let Some(reason) = &record.abort_reason {
        println!("  aborted: {reason}");
    }
}

fn cmd_run(args: RunArgs, ablation: Option<Ablation>) -> Result<ExitCode> {
    let endpoint = args.backend.endpoint()?;
    let model = args.model.clone().unwrap_or_else(|| endpoint.model.clone());
    let mut config = args.loop_config(model)?;
    if let Some(ablation) = ablation {
        config.ablation = ablation;
    }
    config.tokens = endpoint.max_tokens;
    let backend = args.backend.build(&endpoint)?;
    let record = run_replication(
        &config,
        backend.as_ref(),
        args.replication,
        &SystemClock::default(),
    )?;
    RecordSink::append(&args.out)?.write(&record)?;
    summarize(&record);
    Ok(if record.status == RunStatus::Completed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn cmd_batch(args: BatchArgs) -> Result<ExitCode> {
    let settings = BatchSettings::load(&args.settings)?;
    let mut configs = settings.cells()?;
    let endpoint = args.backend.endpoint()?;
    if settings.overrides.tokens.is_none() {
        configs.iter_mut().for_each(|c| c.tokens = endpoint.max_tokens);
    }
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    // Fail on a bad backend before any work starts.
    args.backend.build(&endpoint)?;
    let sink = RecordSink::append(&args.out)?;
    let clock = SystemClock::default();
    let records = run_batch(
        &configs,
        settings.replications,
        |_, _| {
            args.backend
                .build(&endpoint)
                .expect("backend was built once already")
        },
        Some(&sink),
        &clock,
    );
    records.iter().for_each(summarize);
    let aborted = records
        .iter()
        .filter(|r| r.status != RunStatus::Completed)
        .count();
    println!(
        "{} records written to {} ({aborted} aborted)",
        records.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

/// Wall-clock time is the one field a replay cannot reproduce.
fn comparable(record: &RunRecord) -> String {
    let mut record = record.clone();
    record.wall_clock = Default::default();
    record.to_json()
}

fn cmd_replay(args: ReplayArgs) -> Result<ExitCode> {
    let records = read_records(&args.records)?;
    let selected: Vec<(usize, &RunRecord)> = match args.index {
        Some(i) => vec![(
            i,
            records
                .get(i)
                .with_context(|| format!("no record at index {i}"))?,
        )],
        None => records.iter().enumerate().collect(),
    };
    let clock = SystemClock::default();
    let mut mismatches = 0;
    for (i, record) in selected {
        let again = replay(record, &clock)?;
        let same = comparable(record) == comparable(&again);
        println!(
            "record {i} ({} replication {}): {}",
            record.task(),
            record.replication,
            if same { "identical" } else { "DIFFERS" }
        );
        mismatches += usize::from(!same);
    }
    Ok(if mismatches == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_metrics(args: MetricsArgs) -> Result<ExitCode> {
    let records = read_records(&args.records)?;
    let options = MetricsOptions {
        n_eval: args.n_eval,
        t_max: args.t_max,
        threshold: args.threshold,
        skip_robustness: args.skip_robustness,
    };
    let reports = evaluate(&records, &options)?;
    print!("{}", render_table(&reports));
    if let Some(path) = &args.json {
        write_file(path, &serde_json::to_string_pretty(&reports)?)?;
    }
    if let Some(path) = &args.curve {
        write_file(path, &render_curve_csv(&records, args.t_max))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_describe(task: TaskId) -> Result<ExitCode> {
    let spec = task.spec();
    for (name, text) in describe(task).slots() {
        println!("{name}:\n{text}\n");
    }
    println!("Policy parameters: {}", spec.obs_names.join(", "));
    println!("Step limit: {}", spec.max_steps);
    match spec.r_max {
        Some(max) => println!("Maximum return: {max}"),
        None => println!("Maximum return: none"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(args: EvalArgs) -> Result<ExitCode> {
    let source =
        fs::read_to_string(&args.policy).with_context(|| format!("reading {}", args.policy.display()))?;
    let program = match parse(&source, &args.task.spec()) {
        Ok(program) => program,
        Err(e) => bail!("{}: {e}", args.policy.display()),
    };
    let mut config = LoopConfig::for_task(args.task, "none");
    config.eval_episodes = args.episodes;
    config.seed_root = args.seed;
    if let Some(integrator) = args.integrator {
        config.env.cartpole_integrator = integrator.into();
    }
    config.validate()?;
    let eval = evaluate_strategy(&config, 0, 0, &program);
    for (ep, ret) in eval.returns.iter().enumerate() {
        println!("episode {ep}: {ret:.2}");
    }
    println!("mean reward: {:.2}", eval.mean);
    if let Some(action) = &eval.invalid_action {
        println!("invalid action seen: {action}");
    }
    if let Some(path) = &args.trace {
        write_file(path, &serde_json::to_string_pretty(&eval.window)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args, None),
        Command::Ablate { condition, run } => cmd_run(run, Some(condition)),
        Command::Batch(args) => cmd_batch(args),
        Command::Replay(args) => cmd_replay(args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::Describe { task } => cmd_describe(task),
        Command::Eval(args) => cmd_eval(args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
