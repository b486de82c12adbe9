use std::io::{self, BufRead, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use deliverc::bank::TaskBank;
use deliverc::config::Config;
use deliverc::core::{dsl, interp};
use deliverc::http::{self, TaskView};
use deliverc::session::events::Sessions;
use deliverc::session::store::read_log;
use deliverc::session::{SessionError, SessionService};

#[derive(Parser)]
#[command(name = "deliverc", version, about = "A delivery-truck game for learning C pointers")]
struct Cli {
    /// Directory holding events.jsonl and snapshot.json.
    #[arg(long, global = true, env = "DELIVERC_STORAGE")]
    storage: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Serve the JSON API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
    /// Play in the terminal. Uses the offline mock provider unless --live.
    Play {
        #[arg(long, default_value = "player")]
        student: String,
        /// Call the configured model endpoint.
        #[arg(long)]
        live: bool,
    },
    /// Check every task pool file.
    ValidateTasks {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Fold an event log and print the snapshot.
    Replay { log: PathBuf },
    /// Print the participation CSV.
    ExportAnalytics,
    /// Run a C program and print its command trace.
    Trace { file: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

fn config(cli_storage: Option<PathBuf>) -> Result<Config, AnyError> {
    let mut c = Config::from_env()?;
    if let Some(dir) = cli_storage {
        c.storage_dir = dir;
    }
    Ok(c)
}

fn run(cli: Cli) -> Result<(), AnyError> {
    match cli.command {
        Cmd::Serve { addr } => {
            let c = config(cli.storage)?;
            if c.mock {
                log::warn!("no API key configured, using the offline mock provider");
            }
            let service = Arc::new(c.service()?);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                log::info!("listening on http://{}", listener.local_addr()?);
                http::serve(listener, http::router(service, c.admin_token.clone())).await
            })?;
        }
        Cmd::Play { student, live } => {
            let mut c = config(cli.storage)?;
            c.mock = !live;
            play(&c.service()?, &student)?;
        }
        Cmd::ValidateTasks { dir } => {
            let bank = match dir {
                Some(d) => TaskBank::from_dir(&d)?,
                None => TaskBank::embedded()?,
            };
            for level in bank.levels() {
                println!("level {level}: {} tasks ok", bank.load_pool(level)?.len());
            }
        }
        Cmd::Replay { log } => {
            let events = read_log(&log)?;
            print!("{}", Sessions::replay(&events)?.snapshot());
        }
        Cmd::ExportAnalytics => {
            print!("{}", config(cli.storage)?.service()?.analytics_export()?);
        }
        Cmd::Trace { file } => {
            let source = std::fs::read_to_string(&file)?;
            match interp::trace_of(&source) {
                Ok(trace) if trace.is_empty() => println!("(no commands)"),
                Ok(trace) => println!("{}", dsl::serialize(&trace).expect("non-empty")),
                Err(e) => return Err(e.to_string().into()),
            }
        }
    }
    Ok(())
}

fn show_task(service: &SessionService, session: &str) -> Result<bool, SessionError> {
    match service.issue_task(session) {
        Ok(issued) => {
            let view = TaskView::new(&issued.task, issued.degraded);
            println!("\nLevel {} task {} ({})", view.level, view.ordinal, view.topic);
            println!("{}", view.prompt_text);
            for r in &view.requirements {
                println!("  - {r}");
            }
            if let Some(v) = &view.required_visits {
                let stops: Vec<String> = v.iter().map(|l| l.to_string()).collect();
                println!("  - visit in order: {}", stops.join(" "));
            }
            println!("Type your program, then a line with a single '.'");
            Ok(true)
        }
        Err(SessionError::Finished) => {
            println!("\nEvery level is complete.");
            Ok(false)
        }
        Err(e) => Err(e),
    }
}

fn hud(service: &SessionService, session: &str) -> Result<(), SessionError> {
    let r = service.record(session)?;
    println!(
        "level {} task {} | completed {} | mistakes {}{}",
        r.level,
        r.task_ordinal,
        r.completed_count,
        r.mistake_count,
        if r.degraded { " | offline task" } else { "" }
    );
    Ok(())
}

fn play(service: &SessionService, student: &str) -> Result<(), AnyError> {
    let started = service.start_or_resume(student)?;
    let session = started.record.session_id.clone();
    println!("{} session for {student}. Commands: :task :hud :quit", if started.resumed { "Resumed" } else { "New" });
    hud(service, &session)?;
    if !show_task(service, &session)? {
        return Ok(());
    }
    let stdin = io::stdin();
    let mut buffer = String::new();
    for line in stdin.lock().lines() {
        let line = line?;
        match line.trim() {
            ":quit" => break,
            ":hud" => hud(service, &session)?,
            ":task" => {
                show_task(service, &session)?;
            }
            "." => {
                let out = service.submit(&session, &buffer)?;
                buffer.clear();
                println!("{}", out.result);
                for d in &out.diagnostics {
                    println!("  {d}");
                }
                for d in &out.differences {
                    println!("  {d}");
                }
                if let Some(t) = &out.trace {
                    println!("  trace: {t}");
                }
                for m in &out.feedback.misconceptions {
                    println!("  misconception: {m}");
                }
                for s in &out.feedback.suggestions {
                    println!("  suggestion: {s}");
                }
                hud(service, &session)?;
                if out.result.is_pass() && !show_task(service, &session)? {
                    break;
                }
            }
            _ => {
                buffer.push_str(&line);
                buffer.push('\n');
            }
        }
        io::stdout().flush()?;
    }
    Ok(())
}
