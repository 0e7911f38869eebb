use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use feelgrid::agent::Agent;
use feelgrid::bus::{Bridge, BridgeError, Bus, SESSION_EVENT, USER_QUERY, VIS_CATALOGUE};
use feelgrid::chart::{scan_catalogue, ChartCatalogue, LoadedChart, TimeValue, Value};
use feelgrid::device::Packet;
use feelgrid::input::InputConfig;
use feelgrid::render::{render, select_layer, Axes, Scale, ViewportState, Window, PLOT_WIDTH};
use feelgrid::session::{self, expand, parse_input, parse_session, PendingQuery, Primitive, Session};

const EXIT_MISMATCH: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_SYNTAX: u8 = 3;
const EXIT_PORT_BUSY: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "feelgrid", version, about = "Tactile pin-grid chart sessions")]
struct Cli {
    /// Directory scanned for `*.vl.json` chart specs.
    #[arg(long, global = true, env = "FEELGRID_CATALOGUE", default_value = "data/catalogue")]
    catalogue: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a chart to a `#`/`.` grid followed by its semantic sidecar.
    Render {
        /// Spec file. Omit to use --chart.
        spec: Option<PathBuf>,
        /// Catalogue chart name.
        #[arg(long)]
        chart: Option<String>,
        /// x window as lo:hi (numbers, dates, or category labels).
        #[arg(long, allow_hyphen_values = true)]
        x_window: Option<String>,
        /// y window as lo:hi.
        #[arg(long, allow_hyphen_values = true)]
        y_window: Option<String>,
    },
    /// List the charts in the catalogue.
    Catalogue {
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Replay a recorded session and print its log and final digest.
    Replay {
        #[arg(long = "replay", value_name = "FILE", conflicts_with = "file")]
        flag_file: Option<PathBuf>,
        file: Option<PathBuf>,
        /// Expected log; exit 1 on the first differing line.
        #[arg(long = "assert", value_name = "EXPECTED")]
        expected: Option<PathBuf>,
    },
    /// Run a live session with the console bridge until interrupted.
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
        /// Chart to load at start.
        #[arg(long)]
        chart: Option<String>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

/// An error carrying its exit code.
#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn exit(code: u8, msg: impl Into<String>) -> anyhow::Error {
    Exit(code, msg.into()).into()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Render {
            spec,
            chart,
            x_window,
            y_window,
        } => cmd_render(&cli.catalogue, spec, chart, x_window, y_window),
        Command::Catalogue { json } => cmd_catalogue(&cli.catalogue, json),
        Command::Replay {
            flag_file,
            file,
            expected,
        } => match flag_file.or(file) {
            Some(f) => cmd_replay(&cli.catalogue, &f, expected.as_deref()),
            None => Err(exit(EXIT_SYNTAX, "no session file given")),
        },
        Command::Serve { port, chart, host } => cmd_serve(&cli.catalogue, &host, port, chart),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("feelgrid: {e:#}");
            match e.downcast_ref::<Exit>() {
                Some(Exit(code, _)) => ExitCode::from(*code),
                None => ExitCode::FAILURE,
            }
        }
    }
}

fn load_catalogue(root: &Path) -> Result<ChartCatalogue> {
    let cat = scan_catalogue(root).with_context(|| format!("catalogue {}", root.display()))?;
    for s in &cat.skipped {
        log::warn!("skipped {}: {}", s.path.display(), s.reason);
    }
    Ok(cat)
}

/// Parse "lo:hi" into a window on `scale`.
fn parse_window(raw: &str, scale: &Scale) -> Result<Window> {
    let (lo, hi) = raw
        .split_once(':')
        .ok_or_else(|| exit(EXIT_PARSE, format!("window {raw:?} must be lo:hi")))?;
    let bound = |s: &str| -> Result<f64> {
        let s = s.trim();
        if let Ok(n) = s.parse::<f64>() {
            return Ok(n);
        }
        if let (Scale::Time, Ok(t)) = (scale, TimeValue::parse(s)) {
            return Ok(t.day as f64);
        }
        scale
            .position(&Value::Text(s.to_string()))
            .or_else(|| TimeValue::parse(s).ok().and_then(|t| scale.position(&Value::Time(t))))
            .ok_or_else(|| exit(EXIT_PARSE, format!("cannot place {s:?} on this axis")))
    };
    let w = (bound(lo)?, bound(hi)?);
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
    if !(w.0 < w.1) {
        return Err(exit(EXIT_PARSE, format!("window {raw:?} needs lo < hi")));
    }
    Ok(w)
}

fn cmd_render(
    root: &Path,
    spec: Option<PathBuf>,
    chart: Option<String>,
    x_window: Option<String>,
    y_window: Option<String>,
) -> Result<()> {
    let loaded = match (spec, chart) {
        (Some(path), _) => {
            LoadedChart::from_path(&path).map_err(|e| exit(EXIT_PARSE, format!("{}: {e}", path.display())))?
        }
        (None, Some(name)) => load_catalogue(root)?
            .load(&name)
            .map_err(|e| exit(EXIT_PARSE, e.to_string()))?,
        (None, None) => return Err(exit(EXIT_PARSE, "give a spec file or --chart")),
    };
    let axes = Axes::for_chart(&loaded);
    let mut vp = ViewportState::initial(&loaded, PLOT_WIDTH);
    if let Some(w) = x_window {
        vp.x_window = parse_window(&w, &axes.x)?;
        if !loaded.layers.is_empty() {
            vp.active_layer = select_layer(&loaded, vp.x_window, PLOT_WIDTH);
        }
    }
    if let Some(w) = y_window {
        vp.y_window = parse_window(&w, &axes.y)?;
    }
    let frame = render(&loaded, &vp, 1).map_err(|e| exit(EXIT_PARSE, e.to_string()))?;
    print!("{}\n{}", frame.grid_text(), frame.sidecar_text());
    Ok(())
}

fn cmd_catalogue(root: &Path, as_json: bool) -> Result<()> {
    let cat = load_catalogue(root)?;
    if as_json {
        println!("{}", serde_json::to_string_pretty(&cat)?);
        return Ok(());
    }
    for e in &cat.entries {
        println!(
            "{:<24} {:<6} {:>6} rows  {}",
            e.name,
            e.mark.as_str(),
            e.row_count,
            e.title.as_deref().unwrap_or("")
        );
    }
    for s in &cat.skipped {
        println!("skipped {}: {}", s.path.display(), s.reason);
    }
    Ok(())
}

fn cmd_replay(root: &Path, file: &Path, expected: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let events = parse_session(&text).map_err(|e| exit(EXIT_SYNTAX, format!("{}: {e}", file.display())))?;
    let cat = Arc::new(load_catalogue(root)?);
    let out = session::replay(&events, cat, InputConfig::default());
    let rendered = out.to_text();
    print!("{rendered}");
    if let Some(path) = expected {
        let want = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        if let Some((line, got, exp)) = session::first_mismatch(&rendered, &want) {
            return Err(exit(
                EXIT_MISMATCH,
                format!(
                    "log differs from {} at line {line}\n  got:      {got}\n  expected: {exp}",
                    path.display()
                ),
            ));
        }
    }
    Ok(())
}

fn catalogue_payload(cat: &ChartCatalogue) -> serde_json::Value {
    json!({ "charts": cat.entries })
}

fn cmd_serve(root: &Path, host: &str, port: u16, chart: Option<String>) -> Result<()> {
    let cat = Arc::new(load_catalogue(root)?);
    let bus = Bus::new();
    let queries = bus.subscribe(USER_QUERY)?;
    let events = bus.subscribe(SESSION_EVENT)?;
    let bridge = match Bridge::bind(bus.clone(), (host, port), catalogue_payload(&cat)) {
        Ok(b) => b,
        Err(BridgeError::AddrInUse(a)) => return Err(exit(EXIT_PORT_BUSY, format!("port busy: {a}"))),
        Err(e) => return Err(e.into()),
    };
    // The bound address goes to stdout so scripts can find an ephemeral port.
    println!("listening on {}", bridge.local_addr());
    bus.publish(VIS_CATALOGUE, catalogue_payload(&cat))?;

    let mut session = Session::new(cat.clone(), InputConfig::default(), Agent::from_env());
    session.attach_bus(bus.clone());
    let start = Instant::now();
    let clock = move || start.elapsed().as_millis() as u64;
    if let Some(name) = chart {
        session.load(&name, clock());
    }

    let stop = Arc::new(AtomicBool::new(false));
    {
        let stop = stop.clone();
        ctrlc::set_handler(move || stop.store(true, Ordering::SeqCst)).context("installing interrupt handler")?;
    }

    // Query worker: runs the agent off the session thread. Only the newest
    // waiting query is run; the session drops superseded answers anyway.
    let (job_tx, job_rx) = mpsc::channel::<PendingQuery>();
    let (done_tx, done_rx) = mpsc::channel();
    let agent = session.agent();
    let worker = std::thread::spawn(move || {
        while let Ok(mut job) = job_rx.recv() {
            while let Ok(newer) = job_rx.try_recv() {
                job = newer;
            }
            let resp = {
                let mut a = agent.lock().unwrap_or_else(|e| e.into_inner());
                job.run(&mut a)
            };
            if done_tx.send((job, resp)).is_err() {
                break;
            }
        }
    });

    let mut due: Vec<(u64, Primitive)> = Vec::new();
    let mut out = std::io::stdout().lock();
    while !stop.load(Ordering::SeqCst) {
        let now = clock();
        for env in queries.drain() {
            if let Some(text) = env.payload["transcript"].as_str() {
                let _ = job_tx.send(session.begin_query(text, now));
            }
        }
        for env in events.drain() {
            // Session log lines come back on this topic too; inputs carry a payload.
            let (Some(kind), Some(payload)) = (env.payload["kind"].as_str(), env.payload.get("payload")) else {
                continue;
            };
            match parse_input(kind, payload.clone()) {
                Ok(input) => due.extend(expand(&[session::RecordedEvent { t: now, input }])),
                Err(e) => log::warn!("console event rejected: {e}"),
            }
        }
        due.sort_by_key(|(t, _)| *t);
        let ready = due.iter().take_while(|(t, _)| *t <= now).count();
        for (t, p) in due.drain(..ready) {
            if let Primitive::Query(text) = p {
                let _ = job_tx.send(session.begin_query(&text, t));
            } else {
                session.apply(t, p);
            }
        }
        while let Ok((job, resp)) = done_rx.try_recv() {
            session.complete_query(&job, resp, clock());
        }
        session.advance(clock());
        write_log(&mut out, &mut session)?;
        std::thread::sleep(Duration::from_millis(10));
    }

    session.finish();
    if let Err(e) = feelgrid::device::Device::send(&mut session.device, clock(), &Packet::Clear) {
        log::warn!("clearing the display: {e}");
    }
    write_log(&mut out, &mut session)?;
    drop(job_tx);
    let _ = worker.join();
    bridge.shutdown();
    eprintln!("feelgrid: display cleared, session closed");
    Ok(())
}

fn write_log(out: &mut impl std::io::Write, session: &mut Session) -> Result<()> {
    for line in session.drain_log() {
        writeln!(out, "{}", line.to_json_line())?;
    }
    out.flush()?;
    Ok(())
}
