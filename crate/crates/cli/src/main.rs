use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fawkes::canary::{self, sweep_bounty, sweep_w, trajectory, EntityTimeline, GameSpec};
use fawkes::sim::config::ConfigError;
use fawkes::sim::{self, scenarios, Report, ScenarioConfig, Snapshot};

/// Exit code for unusable input: bad config, bad flags, unreadable files.
const EXIT_INPUT: u8 = 2;
/// Exit code for a run or replay that broke a consensus rule.
const EXIT_RULE: u8 = 3;

#[derive(Parser)]
#[command(name = "fawkes", version, about = "Quantum-cautious UTXO spending simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write its snapshot, report and rule-violation log.
    Run(RunArgs),
    /// Print canary game payoff tables and sweep trajectories.
    Canary(CanaryArgs),
    /// Replay a snapshot against the consensus rules.
    Verify {
        snapshot: PathBuf,
    },
    /// List the bundled scenarios.
    Scenarios,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file, or the name of a bundled scenario.
    config: String,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Chain parameter override such as `fc.wait_blocks=20`; repeatable.
    #[arg(long = "params-override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Also print the report to stdout.
    #[arg(long)]
    print: bool,
}

#[derive(Args)]
struct CanaryArgs {
    /// Faster entity as `T_BOUNTY,T_LOOT`.
    #[arg(long, value_parser = timeline, requires_all = ["slower", "w"])]
    faster: Option<EntityTimeline>,
    /// Slower entity as `T_BOUNTY,T_LOOT`.
    #[arg(long, value_parser = timeline, requires = "faster")]
    slower: Option<EntityTimeline>,
    /// Window between killing the canary and the loot deadline.
    #[arg(long, requires = "faster")]
    w: Option<i64>,
    /// Bounty value.
    #[arg(long, default_value_t = 1)]
    b: u64,
    /// Loot value.
    #[arg(long, default_value_t = 1)]
    l: u64,
    /// Use the canonical instance of timeline 1 to 7.
    #[arg(long, conflicts_with = "faster", value_parser = clap::value_parser!(u8).range(1..=7))]
    timeline: Option<u8>,
    /// Print the classes met as w shrinks to 1.
    #[arg(long)]
    sweep_w: bool,
    /// Print the classes met as the bounty grows from `b` to this value.
    #[arg(long, value_name = "MAX")]
    sweep_bounty: Option<u64>,
}

fn timeline(s: &str) -> Result<EntityTimeline, String> {
    let (b, l) = s.split_once(',').ok_or("expected T_BOUNTY,T_LOOT")?;
    let b: i64 = b.trim().parse().map_err(|e| format!("bounty time: {e}"))?;
    let l: i64 = l.trim().parse().map_err(|e| format!("loot time: {e}"))?;
    EntityTimeline::new(b, l).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Canary(a) => cmd_canary(a),
        Cmd::Verify { snapshot } => cmd_verify(&snapshot),
        Cmd::Scenarios => {
            for (name, _) in scenarios::BUNDLED {
                println!("{name}");
            }
            Ok(())
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

type CmdResult = Result<(), (u8, String)>;

fn input(msg: impl Into<String>) -> (u8, String) {
    (EXIT_INPUT, msg.into())
}

/// `line:column` of a byte offset, both 1-based.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn config_error(source: &str, text: &str, e: ConfigError) -> (u8, String) {
    match &e {
        ConfigError::Parse(pe) => match pe.span() {
            Some(span) => {
                let (line, col) = line_col(text, span.start);
                input(format!("{source}:{line}:{col}: {}", pe.message()))
            }
            None => input(format!("{source}: {}", pe.message())),
        },
        _ => input(format!("{source}: {e}")),
    }
}

fn load(config: &str) -> Result<(String, ScenarioConfig), (u8, String)> {
    let path = Path::new(config);
    let text = if path.exists() {
        fs::read_to_string(path).map_err(|e| input(format!("{config}: {e}")))?
    } else if let Some(t) = scenarios::bundled(config) {
        t.to_string()
    } else {
        return Err(input(format!("{config}: no such file or bundled scenario")));
    };
    let cfg = ScenarioConfig::from_toml(&text).map_err(|e| config_error(config, &text, e))?;
    Ok((text, cfg))
}

fn violations(report: &Report) -> String {
    let mut out = String::new();
    for r in &report.rejections {
        let _ = writeln!(out, "{} {} {}", r.height, r.rule, r.label);
    }
    out
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> CmdResult {
    let p = dir.join(name);
    fs::write(&p, bytes).map_err(|e| input(format!("{}: {e}", p.display())))
}

fn cmd_run(a: RunArgs) -> CmdResult {
    let (_, mut cfg) = load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    cfg.apply_overrides(a.overrides.iter().map(String::as_str))
        .map_err(|e| input(format!("--params-override: {e}")))?;
    fs::create_dir_all(&a.out).map_err(|e| input(format!("{}: {e}", a.out.display())))?;
    let (report, snapshot) = match sim::run(cfg) {
        Ok(r) => r,
        Err(e) => {
            let rule = e.rule().unwrap_or("none");
            let _ = write(&a.out, "violations.log", format!("fatal {rule} {e}\n").as_bytes());
            return Err((EXIT_RULE, format!("rule {rule}: {e}")));
        }
    };
    let bytes = snapshot.encode().map_err(|e| input(e.to_string()))?;
    write(&a.out, "snapshot.bin", &bytes)?;
    write(&a.out, "report.txt", report.to_string().as_bytes())?;
    write(&a.out, "violations.log", violations(&report).as_bytes())?;
    if a.print {
        print!("{report}");
    } else {
        println!(
            "{} height={} balanced={} rejections={} -> {}",
            report.scenario,
            report.height,
            report.conserved(),
            report.rejections.len(),
            a.out.display()
        );
    }
    if !report.conserved() {
        return Err((EXIT_RULE, "rule supply-balance: supply does not reconcile".into()));
    }
    Ok(())
}

fn cmd_canary(a: CanaryArgs) -> CmdResult {
    let game = match (a.faster, a.slower, a.w, a.timeline) {
        (Some(f), Some(s), Some(w), _) => Some(GameSpec::new(f, s, w, a.b, a.l).map_err(|e| input(e.to_string()))?),
        (_, _, _, Some(t)) => Some(canary::canonical(t).with_values(a.b, a.l)),
        _ => None,
    };
    let games: Vec<GameSpec> = match game {
        Some(g) => vec![g],
        None if a.sweep_w || a.sweep_bounty.is_some() => (1..=7).map(canary::canonical).collect(),
        None => {
            print!("{}", canary::table());
            return Ok(());
        }
    };
    for (i, g) in games.iter().enumerate() {
        if i > 0 {
            println!();
        }
        print!("{}", canary::render(g));
        if a.sweep_w {
            println!("  sweep w {}..1: {}", g.w, trajectory(&sweep_w(g, (1..=g.w).rev())));
        }
        if let Some(max) = a.sweep_bounty {
            if max < g.b {
                return Err(input(format!("--sweep-bounty {max} is below the bounty {}", g.b)));
            }
            println!("  sweep bounty {}..{max}: {}", g.b, trajectory(&sweep_bounty(g, g.b..=max)));
        }
    }
    Ok(())
}

fn cmd_verify(path: &Path) -> CmdResult {
    let bytes = fs::read(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    match Snapshot::verify(&bytes) {
        Ok((snap, v)) => {
            println!(
                "ok scenario={} blocks={} tip={}",
                snap.config.name,
                v.blocks,
                fawkes::hash::to_hex(&v.tip)
            );
            Ok(())
        }
        Err(e) => {
            let code = if e.rule().is_some() { EXIT_RULE } else { 1 };
            let rule = e.rule().map(|r| format!("rule {r}: ")).unwrap_or_default();
            Err((code, format!("{}: {rule}{e}", path.display())))
        }
    }
}
