use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pmt_core::agents::{run_session, PolicyKind};
use pmt_core::analytics::fixtures;
use pmt_core::analytics::report::{read_participants, read_questionnaire};
use pmt_core::analytics::{analyze, render_text, AnalyzeInputs, Fixtures, Instrument};
use pmt_core::content::{Content, ContentPaths, PlanConfig};
use pmt_core::log::{parse_log, LOG_EXTENSION};
use pmt_core::server::{serve, ServeOptions};
use pmt_core::sweep::{run_sweep, SweepSpec};
use pmt_core::taskmodel::TaskCatalog;
use pmt_core::vit::WordBank;
use pmt_core::world::load_world;
use pmt_core::{replay, Category, SessionOptions, SessionPlan, SessionRecord};

const EXIT_INVALID: u8 = 2;
const EXIT_FIXTURES: u8 = 3;

/// Marks errors that should exit with the validation status.
#[derive(Debug)]
struct Invalid(String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Parser)]
#[command(name = "pmt", version, about = "Prospective-memory training engine")]
struct Cli {
    #[command(flatten)]
    content: ContentArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ContentArgs {
    /// Content directory (world/, catalog/, wordbank/, plans/). Bundled
    /// content is used when unset.
    #[arg(long, global = true, env = "PMT_CONTENT_DIR")]
    content_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    world: Option<PathBuf>,
    /// Catalog file; repeat to merge several.
    #[arg(long, global = true)]
    catalog: Vec<PathBuf>,
    #[arg(long, global = true)]
    word_bank: Option<PathBuf>,
    #[arg(long, global = true)]
    plan: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Serve one live session over WebSocket and write its log on completion.
    Serve(ServeArgs),
    /// Run headless agent sessions, a policy sweep, or a log replay.
    Run {
        #[arg(long, required_unless_present_any = ["sweep", "replay"])]
        session: Option<u8>,
        #[arg(long, required_unless_present_any = ["sweep", "replay"])]
        agent: Option<PolicyKind>,
        #[arg(long, required_unless_present_any = ["sweep", "replay"])]
        seed: Option<u64>,
        #[arg(long)]
        participant: Option<String>,
        /// Sweep spec, e.g. retention:p=0.5..1.0:step0.1
        #[arg(long, conflicts_with_all = ["session", "agent", "replay"])]
        sweep: Option<String>,
        /// Seeds per sweep cell.
        #[arg(long, default_value_t = 50)]
        seeds: u64,
        /// Rebuild the record from a log instead of running an agent.
        #[arg(long, conflicts_with_all = ["session", "agent", "seed"])]
        replay: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Build the analytics report from session logs.
    Analyze(AnalyzeArgs),
    /// Validate content files, or the content set when no files are given.
    Validate { files: Vec<PathBuf> },
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    session: u8,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long)]
    participant: Option<String>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Engine milliseconds per wall-clock millisecond.
    #[arg(long, default_value_t = 1)]
    time_scale: u64,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Directory of .pmtlog files.
    #[arg(long, required_unless_present = "check_fixtures")]
    logs: Option<PathBuf>,
    #[arg(long, requires = "logs")]
    participants: Option<PathBuf>,
    #[arg(long, requires = "participants")]
    ueq: Option<PathBuf>,
    #[arg(long, requires = "participants")]
    jikaku: Option<PathBuf>,
    /// Compare against the published tables.
    #[arg(long)]
    check_fixtures: bool,
    /// Directory holding table4.csv, table5.csv, table7.csv to check
    /// instead of the bundled copies.
    #[arg(long, requires = "check_fixtures")]
    fixtures: Option<PathBuf>,
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
    /// Also print the tables as text.
    #[arg(long)]
    text: bool,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

impl ContentArgs {
    fn load(&self) -> Result<Content> {
        let paths = ContentPaths {
            dir: self.content_dir.clone(),
            world: self.world.clone(),
            catalogs: self.catalog.clone(),
            word_bank: self.word_bank.clone(),
            plan: self.plan.clone(),
        };
        Content::load(&paths).map_err(|e| Invalid(format!("invalid content: {e}")).into())
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn log_sink(path: &Path) -> Result<Box<BufWriter<File>>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(Box::new(BufWriter::new(f)))
}

fn summary_line(r: &SessionRecord) -> String {
    let rates = r.rates.map(|rates| {
        Category::ALL
            .iter()
            .filter_map(|c| rates.get(*c).map(|x| format!("{} {:.3}", c.label(), x.rounded())))
            .collect::<Vec<_>>()
            .join("  ")
    });
    format!("session {}: {}", r.session_number, rates.unwrap_or_else(|| "unscored".into()))
}

fn cmd_serve(content: &Content, args: ServeArgs) -> Result<ExitCode> {
    let plan = SessionPlan::build(args.session, content, args.seed).map_err(|e| Invalid(e.to_string()))?;
    let listener = TcpListener::bind((args.host.as_str(), args.port))
        .with_context(|| format!("binding {}:{}", args.host, args.port))?;
    eprintln!("listening on ws://{}", listener.local_addr()?);
    fs::create_dir_all(&args.out)?;
    let log = args.out.join(format!("session{}.{LOG_EXTENSION}", args.session));
    let opts = SessionOptions { participant: args.participant, created_unix_ms: now_ms() };
    let serve_opts = ServeOptions { time_scale: args.time_scale.max(1), ..ServeOptions::default() };
    let record = serve(listener, plan, opts, log_sink(&log)?, serve_opts)?;
    write_json(&args.out.join(format!("session{}.record.json", args.session)), &record)?;
    println!("{}", summary_line(&record));
    eprintln!("log written to {}", log.display());
    Ok(ExitCode::SUCCESS)
}


fn cmd_sweep(content: &Content, spec: &str, seeds: u64, out: &Path) -> Result<ExitCode> {
    let spec: SweepSpec = spec.parse().map_err(|e: pmt_core::agents::AgentError| Invalid(e.to_string()))?;
    let cells = run_sweep(content, &spec, seeds)?;
    print!("{:<36} {:>8}", "policy", "sessions");
    for c in Category::ALL {
        print!(" {:>9}", c.label());
    }
    println!();
    for cell in &cells {
        print!("{:<36} {:>8}", cell.policy, cell.sessions);
        for c in Category::ALL {
            match cell.means.get(&c) {
                Some(m) => print!(" {m:>9.3}"),
                None => print!(" {:>9}", "-"),
            }
        }
        println!();
    }
    fs::create_dir_all(out)?;
    write_json(&out.join("sweep.json"), &cells)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<ExitCode> {
    let read = |p: &Path| fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
    let mut inputs = AnalyzeInputs::default();
    let mut warnings = Vec::new();
    let AnalyzeArgs { logs, participants, ueq, jikaku, check_fixtures, fixtures, out, text } = args;
    if let Some(dir) = &logs {
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == LOG_EXTENSION))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(Invalid(format!("no .{LOG_EXTENSION} files in {}", dir.display())).into());
        }
        for p in &paths {
            let record = replay(&read(p)?).map_err(|e| Invalid(format!("{}: {e}", p.display())))?;
            inputs.records.push(record);
        }
    }
    if let Some(p) = &participants {
        let (rows, w) = read_participants(&read(p)?).map_err(|e| Invalid(format!("{}: {e}", p.display())))?;
        inputs.participants = rows;
        warnings.extend(w);
    }
    for (path, instrument) in [(&ueq, Instrument::UeqS), (&jikaku, Instrument::JikakuSho)] {
        if let Some(p) = path {
            let rows = read_questionnaire(&read(p)?, instrument).map_err(|e| Invalid(format!("{}: {e}", p.display())))?;
            inputs.questionnaires.extend(rows);
        }
    }
    let mut report = analyze(&inputs).map_err(|e| Invalid(e.to_string()))?;
    report.warnings.splice(0..0, warnings);
    let mut code = ExitCode::SUCCESS;
    if check_fixtures {
        let tables = match &fixtures {
            Some(dir) => Fixtures::load(dir),
            None => Fixtures::bundled(),
        }
        .map_err(|e| Invalid(e.to_string()))?;
        report.fixture_checks = fixtures::check_fixtures(&tables).map_err(|e| Invalid(e.to_string()))?;
        if report.fixture_checks.iter().any(|c| !c.pass) {
            code = ExitCode::from(EXIT_FIXTURES);
        }
    }
    write_json(&out, &report)?;
    if text {
        print!("{}", render_text(&report));
    } else {
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
    }
    Ok(code)
}

/// Validates each file by its name: `*.world.json`, `*.catalog.json`,
/// `*.wordbank.json`, `*.plan.json`, `*.pmtlog`.
fn validate_file(path: &Path) -> Result<String, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let err = |e: &dyn fmt::Display| e.to_string();
    if name.ends_with(".world.json") {
        let w = load_world(&text).map_err(|e| err(&e))?;
        Ok(format!("world with {} locations", w.location_ids().len()))
    } else if name.ends_with(".catalog.json") || path.parent().is_some_and(|p| p.ends_with("catalog")) {
        let c = TaskCatalog::parse(&text).map_err(|e| err(&e))?;
        let defaults = Content::defaults().map_err(|e| err(&e))?;
        c.validate(&defaults.world, &defaults.config.clock).map_err(|e| err(&e))?;
        Ok(format!("catalog with {} tasks", c.tasks.len()))
    } else if name.ends_with(".wordbank.json") {
        let b = WordBank::parse(&text).map_err(|e| err(&e))?;
        Ok(format!("word bank with {} pairs", b.pairs.len()))
    } else if name.ends_with(".plan.json") {
        PlanConfig::parse(&text).map_err(|e| err(&e))?;
        Ok("plan".into())
    } else if name.ends_with(&format!(".{LOG_EXTENSION}")) {
        let log = parse_log(&text).map_err(|e| err(&e))?;
        replay(&text).map_err(|e| err(&e))?;
        Ok(format!("log with {} entries, replays cleanly", log.entries.len()))
    } else {
        Err("unrecognized file name".into())
    }
}

fn cmd_validate(content: &ContentArgs, files: &[PathBuf]) -> Result<ExitCode> {
    if files.is_empty() {
        let c = content.load()?;
        println!(
            "ok: content ({} tasks, {} locations, {} word pairs)",
            c.catalog.tasks.len(),
            c.world.location_ids().len(),
            c.word_bank.pairs.len()
        );
        return Ok(ExitCode::SUCCESS);
    }
    let mut failed = false;
    for f in files {
        match validate_file(f) {
            Ok(what) => println!("ok: {}: {what}", f.display()),
            Err(e) => {
                failed = true;
                println!("invalid: {}: {e}", f.display());
            }
        }
    }
    Ok(if failed { ExitCode::from(EXIT_INVALID) } else { ExitCode::SUCCESS })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Serve(args) => cmd_serve(&cli.content.load()?, args),
        Command::Run { replay: Some(path), out, .. } => {
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let record = replay(&text).map_err(|e| Invalid(format!("{}: {e}", path.display())))?;
            fs::create_dir_all(&out)?;
            write_json(&out.join(format!("session{}.record.json", record.session_number)), &record)?;
            println!("{}", summary_line(&record));
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { sweep: Some(spec), seeds, out, .. } => cmd_sweep(&cli.content.load()?, &spec, seeds, &out),
        Command::Run { session: Some(session), agent: Some(agent), seed: Some(seed), participant, out, .. } => {
            let content = cli.content.load()?;
            fs::create_dir_all(&out)?;
            let log = out.join(format!("session{session}.{LOG_EXTENSION}"));
            let opts = SessionOptions { participant, created_unix_ms: now_ms() };
            let record = run_session(&content, agent, session, seed, opts, log_sink(&log)?)?;
            write_json(&out.join(format!("session{session}.record.json")), &record)?;
            println!("{}", summary_line(&record));
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { .. } => bail!("run needs --session, --agent and --seed, or --sweep, or --replay"),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Validate { files } => cmd_validate(&cli.content, &files),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Invalid>().is_some() {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
