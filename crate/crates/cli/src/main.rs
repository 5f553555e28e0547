use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sitesim_bots::{run_pair, BotScript, HarnessOptions, LatencyProfile, Policy, Transcript};
use sitesim_core::config::ConfigSet;
use sitesim_core::events::Timeline;
use sitesim_core::geometry::check;
use sitesim_core::metrics::{
    cohesion_score, ipq_scores, load_ipq_mapping, load_ssq_weights, ssq_scores, summarize_log, sus_score,
};
use sitesim_core::types::Role;
use sitesim_server::{start, ServerOptions};

#[derive(Parser)]
#[command(name = "sitesim", version, about = "Two-role pipe installation testbed")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Load every file under a config directory; stop at the first error.
    Validate(ConfigDir),
    /// Geometry checks.
    Geom {
        #[command(subcommand)]
        cmd: GeomCmd,
    },
    /// Host sessions over WebSocket.
    Serve(ServeArgs),
    /// Scripted clients.
    Bots {
        #[command(subcommand)]
        cmd: BotsCmd,
    },
    /// Score questionnaire responses, one respondent per CSV row.
    Score(ScoreArgs),
    /// Aggregate an action log.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Print the event firing order of a session.
    Timeline {
        #[command(flatten)]
        dir: ConfigDir,
        #[arg(long)]
        session: String,
        #[arg(long)]
        tick_rate: Option<u32>,
    },
}

#[derive(Args)]
struct ConfigDir {
    #[arg(long, default_value = "config")]
    config_dir: PathBuf,
}

#[derive(Subcommand)]
enum GeomCmd {
    /// Randomized connect/snap suite; prints max residuals.
    Check {
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    dir: ConfigDir,
    #[arg(long, default_value = "study")]
    session: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Overrides the session file.
    #[arg(long)]
    tick_rate: Option<u32>,
    /// JSONL of every wire message.
    #[arg(long)]
    log: Option<PathBuf>,
    /// JSONL of intents, outcomes and fired events.
    #[arg(long)]
    action_log: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BotsCmd {
    /// Play one session with a bot pair and write its transcript.
    Run(RunArgs),
    /// Replay a transcript and compare against its recorded hash.
    Replay {
        #[command(flatten)]
        dir: ConfigDir,
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Canonical,
    Batch,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    addr: String,
    /// Session config name.
    #[arg(long)]
    task: String,
    #[arg(long, value_enum, default_value = "canonical")]
    policy: PolicyArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Constant one-way delay in ms.
    #[arg(long, conflicts_with = "jitter_ms")]
    fixed_ms: Option<u64>,
    /// Uniform one-way delay in 0..=ms.
    #[arg(long)]
    jitter_ms: Option<u64>,
    #[arg(long, default_value_t = 120)]
    budget_secs: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum InstrumentArg {
    Sus,
    Ipq,
    Ssq,
    Cohesion,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long, value_enum)]
    instrument: InstrumentArg,
    #[arg(long = "in")]
    input: PathBuf,
    /// Directory holding ipq.yaml and ssq.yaml.
    #[arg(long, default_value = "config/instruments")]
    instruments: PathBuf,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", chain(&e));
            ExitCode::FAILURE
        }
    }
}

/// Like `{:#}`, minus causes whose text the outer message already includes.
fn chain(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let s = cause.to_string();
        if !out.contains(&s) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&s);
        }
    }
    out
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Validate(d) => validate(&d.config_dir),
        Cmd::Geom {
            cmd: GeomCmd::Check { trials, seed, tol },
        } => geom_check(trials, seed, tol),
        Cmd::Serve(a) => runtime()?.block_on(serve(a)),
        Cmd::Bots { cmd: BotsCmd::Run(a) } => runtime()?.block_on(bots_run(a)),
        Cmd::Bots {
            cmd: BotsCmd::Replay { dir, input },
        } => replay(&dir.config_dir, &input),
        Cmd::Score(a) => score(&a),
        Cmd::Summarize { input } => {
            let text = std::fs::read_to_string(&input).with_context(|| input.display().to_string())?;
            let s = summarize_log(&text)?;
            println!("{}", serde_json::to_string_pretty(&s)?);
            Ok(())
        }
        Cmd::Timeline {
            dir,
            session,
            tick_rate,
        } => timeline(&dir.config_dir, &session, tick_rate),
    }
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

fn load(dir: &Path) -> Result<ConfigSet> {
    Ok(ConfigSet::load_dir(dir)?)
}

fn validate(dir: &Path) -> Result<()> {
    let t0 = Instant::now();
    let set = load(dir)?;
    println!(
        "ok: {} files, {} sessions, {} vehicles in {:.1} ms",
        set.file_count(),
        set.sessions.len(),
        set.vehicles.len(),
        t0.elapsed().as_secs_f64() * 1e3
    );
    Ok(())
}

fn geom_check(trials: usize, seed: u64, tol: f64) -> Result<()> {
    let t0 = Instant::now();
    let r = check::run(trials, seed);
    println!("trials                    {}", r.trials);
    println!("max position residual     {:.3e}", r.max_position_residual);
    println!("max direction residual    {:.3e}", r.max_direction_residual);
    println!("chain links               {}", r.chain_links);
    println!("chain position residual   {:.3e}", r.chain_max_position_residual);
    println!("chain direction residual  {:.3e}", r.chain_max_direction_residual);
    println!("snap idempotence failures {}", r.snap_idempotence_failures);
    println!("compensation drift        {:.3e}", r.max_compensation_drift);
    println!("elapsed                   {:.2} s", t0.elapsed().as_secs_f64());
    if !r.passes(tol) {
        bail!("residuals exceed {tol:e}");
    }
    Ok(())
}

async fn serve(a: ServeArgs) -> Result<()> {
    let configs = load(&a.dir.config_dir)?;
    if !configs.sessions.contains_key(&a.session) {
        bail!("unknown session `{}`", a.session);
    }
    let mut opts = ServerOptions::new(configs, a.session);
    opts.seed = a.seed;
    opts.tick_rate_hz = a.tick_rate;
    opts.wire_log = a.log;
    opts.action_log = a.action_log;
    let srv = start(&format!("{}:{}", a.host, a.port), opts).await?;
    tracing::info!(addr = %srv.addr, "listening");
    println!("listening on ws://{}/", srv.addr);
    tokio::signal::ctrl_c().await?;
    srv.shutdown().await;
    Ok(())
}

async fn bots_run(a: RunArgs) -> Result<()> {
    let policy = match a.policy {
        PolicyArg::Canonical => Policy::Canonical,
        PolicyArg::Batch => Policy::Batch,
    };
    let latency = match (a.fixed_ms, a.jitter_ms) {
        (Some(ms), _) => LatencyProfile::Fixed { ms },
        (_, Some(ms)) => LatencyProfile::Jitter { ms },
        _ => LatencyProfile::None,
    };
    let opts = HarnessOptions {
        latency,
        latency_seed: a.seed,
        budget: Duration::from_secs(a.budget_secs),
        ..HarnessOptions::default()
    };
    let t0 = Instant::now();
    let t = run_pair(
        &a.addr,
        &a.task,
        a.seed,
        BotScript::new(Role::Installer, Policy::Canonical),
        BotScript::new(Role::Fetcher, policy),
        opts,
    )
    .await?;
    t.write(&a.out)?;
    let f = &t.footer;
    let complete = f.completion.as_ref().is_some_and(|c| c.complete);
    println!(
        "{} phase={:?} complete={} batches={} hash={} wall={:.1}s",
        a.task,
        f.phase,
        complete,
        f.final_batch_seq,
        f.final_hash.map_or("-".into(), |h| h.to_string()),
        t0.elapsed().as_secs_f64()
    );
    if let Some(e) = &f.error {
        bail!("{}: {e}", f.error_code.as_deref().unwrap_or("Error"));
    }
    Ok(())
}

fn replay(dir: &Path, input: &Path) -> Result<()> {
    let configs = load(dir)?;
    let t = Transcript::read(input)?;
    let h = t.verify(&configs)?;
    println!("ok: {} batches replay to {h}", t.batches().len());
    Ok(())
}

fn score(a: &ScoreArgs) -> Result<()> {
    let read = |name: &str| {
        let p = a.instruments.join(name);
        std::fs::read_to_string(&p).with_context(|| p.display().to_string())
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(&a.input)
        .with_context(|| a.input.display().to_string())?;
    let ipq = match a.instrument {
        InstrumentArg::Ipq => Some(load_ipq_mapping(&read("ipq.yaml")?)?),
        _ => None,
    };
    let ssq = match a.instrument {
        InstrumentArg::Ssq => Some(load_ssq_weights(&read("ssq.yaml")?)?),
        _ => None,
    };
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let items = rec
            .iter()
            .filter(|s| !s.is_empty())
            .map(str::parse::<i64>)
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("row {}", row + 1))?;
        let line = match a.instrument {
            InstrumentArg::Sus => serde_json::json!({ "sus": sus_score(&items)? }),
            InstrumentArg::Cohesion => serde_json::json!({ "cohesion": cohesion_score(&items)? }),
            InstrumentArg::Ipq => serde_json::to_value(ipq_scores(&items, ipq.as_ref().unwrap())?)?,
            InstrumentArg::Ssq => serde_json::to_value(ssq_scores(&items, ssq.as_ref().unwrap())?)?,
        };
        println!("{line}");
    }
    Ok(())
}

fn timeline(dir: &Path, session: &str, tick_rate: Option<u32>) -> Result<()> {
    let configs = load(dir)?;
    let bundle = configs.bundle(session)?;
    let hz = tick_rate.unwrap_or(bundle.session.tick_rate_hz);
    for stage in &bundle.stages {
        println!("# {:?}", stage.kind);
        let tl = Timeline::build(&stage.scenarios, &bundle.vehicles, hz);
        for e in tl.entries() {
            println!(
                "{:>6} {:>8.2}s {:<12} {:?} {:>2}  {}",
                e.fire_tick,
                e.fire_tick as f64 / hz as f64,
                e.entry.vehicle,
                e.entry.condition,
                e.entry.id,
                e.warning.as_deref().unwrap_or("")
            );
        }
    }
    Ok(())
}
