use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use satf_core::benchmark::{build_profile, load_profile, save_profile, ExpertProfile};
use satf_core::control::{ControlConfig, StrategyClass};
use satf_core::geometry::BoardGeometry;
use satf_core::synth::{generate_session, presets_for, SeededRng, SessionPlan};

use satf_service::analysis::{analyze, records_from_rows, rows_of, satf_of, TrialRow};
use satf_service::eventlog::{EventLog, LogHeader};
use satf_service::server::{spawn, ServerConfig};
use satf_service::svg::render_satf;
use satf_service::trials_csv::{read_trials, write_trials};
use satf_service::wire::ClientMessage;

#[derive(Parser)]
#[command(
    name = "satf",
    version,
    about = "Speed-accuracy analysis for a pick-and-place training task"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a trial CSV, an event log (.jsonl) or a directory of event logs.
    Analyze {
        input: PathBuf,
        #[arg(long)]
        expert: PathBuf,
        #[arg(long)]
        geometry: Option<PathBuf>,
        /// Control thresholds as JSON; missing fields take defaults.
        #[arg(long)]
        control: Option<PathBuf>,
        /// Only use trials of this condition.
        #[arg(long)]
        condition: Option<String>,
        /// Required precision gap, in expert standard deviations.
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long)]
        satf_svg: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate synthetic sessions for one strategy.
    Simulate {
        #[arg(long, value_parser = parse_strategy)]
        strategy: StrategyClass,
        #[arg(long, default_value_t = 8)]
        sessions: u32,
        #[arg(long, default_value_t = 10)]
        trials_per_block: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated block conditions.
        #[arg(long, value_delimiter = ',', default_values_t = default_conditions())]
        conditions: Vec<String>,
        #[arg(long, default_value = "synthetic")]
        trainee_id: String,
        #[arg(long)]
        geometry: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build an expert profile from a trial CSV.
    Benchmark {
        #[arg(long)]
        expert_trials: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        source_id: Option<String>,
        #[arg(long)]
        geometry: Option<PathBuf>,
    },
    /// Run the live session service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long)]
        expert: PathBuf,
        #[arg(long)]
        geometry: Option<PathBuf>,
        #[arg(long)]
        control: Option<PathBuf>,
        #[arg(long, default_value = "session-logs")]
        log_dir: PathBuf,
    },
}

fn parse_strategy(s: &str) -> Result<StrategyClass, String> {
    s.parse()
        .map_err(|_| format!("unknown strategy `{s}`; expected one of extreme-speed-focused, speed-focused, undetermined, precision-focused"))
}

fn default_conditions() -> Vec<String> {
    (1..=8).map(|i| format!("2D-{i}")).collect()
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn load_geometry(path: Option<&Path>) -> Result<BoardGeometry> {
    let g: BoardGeometry = match path {
        Some(p) => {
            serde_json::from_slice(&read(p)?).with_context(|| format!("parsing {}", p.display()))?
        }
        None => BoardGeometry::default(),
    };
    g.validate()?;
    Ok(g)
}

fn load_control(path: Option<&Path>) -> Result<ControlConfig> {
    let c: ControlConfig = match path {
        Some(p) => {
            serde_json::from_slice(&read(p)?).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ControlConfig::default(),
    };
    c.validate()?;
    Ok(c)
}

fn load_expert(path: &Path) -> Result<ExpertProfile> {
    load_profile(&read(path)?).with_context(|| format!("loading expert profile {}", path.display()))
}

fn read_log_rows(path: &Path, geometry: &BoardGeometry) -> Result<Vec<TrialRow>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let log = EventLog::read(BufReader::new(file)).with_context(|| path.display().to_string())?;
    Ok(rows_of(&log.replay(geometry)?))
}

fn read_rows(input: &Path, geometry: &BoardGeometry) -> Result<Vec<TrialRow>> {
    if input.is_dir() {
        let mut logs: Vec<PathBuf> = fs::read_dir(input)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        logs.sort();
        if logs.is_empty() {
            bail!("{}: no .jsonl event logs", input.display());
        }
        let mut rows = Vec::new();
        for p in logs {
            rows.extend(read_log_rows(&p, geometry)?);
        }
        return Ok(rows);
    }
    if input.extension().is_some_and(|x| x == "jsonl") {
        return read_log_rows(input, geometry);
    }
    let file = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    read_trials(BufReader::new(file), geometry).with_context(|| input.display().to_string())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();

    match Cli::parse().command {
        Command::Analyze {
            input,
            expert,
            geometry,
            control,
            condition,
            k,
            satf_svg,
            report,
        } => {
            let geometry = load_geometry(geometry.as_deref())?;
            let cfg = load_control(control.as_deref())?;
            let expert = load_expert(&expert)?;
            let rows = read_rows(&input, &geometry)?;
            let rep = analyze(&rows, &expert, &cfg, condition.as_deref(), k)?;

            let s = &rep.summary;
            let stats = s.stats.as_ref().expect("analysis has completed trials");
            let z = s.z.expect("analysis has completed trials");
            println!("trials: {} ({} completed)", s.n_trials, s.n_completed);
            println!(
                "time: mean {:.2} s, sd {:.2} s",
                stats.time.mean,
                stats.time.sd_or_zero()
            );
            println!(
                "off-target: mean {:.1} px, sd {:.1} px",
                stats.precision.mean,
                stats.precision.sd_or_zero()
            );
            println!("z: time {:.2}, precision {:.2}", z.z_t, z.z_p);
            match s.strategy {
                Some(c) => println!("strategy: {}", c.slug()),
                None => println!(
                    "strategy: (needs {} completed trials)",
                    cfg.min_trials_for_classification
                ),
            }
            if let (Some(case), Some(d)) = (s.modal_case, s.directive) {
                println!(
                    "directive: {} (case {}){}",
                    d.id(),
                    case.case_id(),
                    if s.anomaly { ", anomaly" } else { "" }
                );
            }

            if let Some(path) = satf_svg {
                let filtered: Vec<TrialRow> = rows
                    .into_iter()
                    .filter(|r| condition.as_deref().is_none_or(|c| r.trial.condition == c))
                    .collect();
                let title = input
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                write_file(
                    &path,
                    render_satf(&satf_of(&filtered)?, Some(&expert), &title).as_bytes(),
                )?;
            }
            if let Some(path) = report {
                let mut json = serde_json::to_vec_pretty(&rep)?;
                json.push(b'\n');
                write_file(&path, &json)?;
            }
        }

        Command::Simulate {
            strategy,
            sessions,
            trials_per_block,
            seed,
            conditions,
            trainee_id,
            geometry,
            out,
        } => {
            let geometry = load_geometry(geometry.as_deref())?;
            let preset = presets_for(strategy);
            let mut rng = SeededRng::new(seed);
            let events = out.join("events");
            fs::create_dir_all(&events)
                .with_context(|| format!("creating {}", events.display()))?;
            let mut rows = Vec::new();
            for session_index in 1..=sessions {
                let plan = SessionPlan {
                    session_id: format!("{trainee_id}-s{session_index:02}"),
                    trainee_id: trainee_id.clone(),
                    session_index,
                    trials_per_block,
                    conditions: conditions.clone(),
                };
                let generated = generate_session(&preset, &plan, &geometry, &mut rng)?;
                for note in &generated.notes {
                    tracing::warn!(session = session_index, "{note}");
                }
                let mut log = EventLog::new(LogHeader {
                    session_id: plan.session_id.clone(),
                    trainee_id: trainee_id.clone(),
                    session_index,
                    created_at: format!("seed:{seed}"),
                });
                log.messages
                    .extend(generated.inputs.iter().map(ClientMessage::from_input));
                log.messages.push(ClientMessage::EndSession);
                let path = events.join(format!("session-{session_index:02}.jsonl"));
                log.write(BufWriter::new(
                    File::create(&path).with_context(|| path.display().to_string())?,
                ))?;
                rows.extend(rows_of(&generated.replay(&geometry)?));
            }
            let path = out.join("trials.csv");
            write_trials(BufWriter::new(File::create(&path)?), &rows)?;
            println!(
                "wrote {} trials in {} sessions to {}",
                rows.len(),
                sessions,
                out.display()
            );
        }

        Command::Benchmark {
            expert_trials,
            out,
            source_id,
            geometry,
        } => {
            let geometry = load_geometry(geometry.as_deref())?;
            let rows = read_rows(&expert_trials, &geometry)?;
            let source = source_id.unwrap_or_else(|| {
                expert_trials
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "expert".into())
            });
            let profile = build_profile(&source, &records_from_rows(&rows))?;
            write_file(&out, &save_profile(&profile))?;
            println!(
                "{}: {} trials, time {:.2} s, off-target {:.1} px",
                profile.source_id, profile.n_trials, profile.time.mean, profile.precision.mean
            );
        }

        Command::Serve {
            port,
            host,
            expert,
            geometry,
            control,
            log_dir,
        } => {
            let cfg = ServerConfig {
                expert: load_expert(&expert)?,
                geometry: load_geometry(geometry.as_deref())?,
                control: load_control(control.as_deref())?,
                log_dir,
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let (addr, handle) = spawn(SocketAddr::new(host, port), cfg).await?;
                println!("listening on http://{addr}");
                std::io::stdout().flush()?;
                tokio::select! {
                    _ = handle => {}
                    _ = tokio::signal::ctrl_c() => tracing::info!("shutting down"),
                }
                anyhow::Ok(())
            })?;
        }
    }
    Ok(())
}
