use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use vcle::console::server::ConsoleServer;
use vcle::env::{Env, EnvOptions, Variant};
use vcle::game::{Action, Game, GameConfig};
use vcle::harness::dump::{dump_moves, DumpKind};
use vcle::harness::log::{write_csv, EpisodeLog, EVAL_WINDOW, TRAIN_WINDOW};
use vcle::harness::policy::{Policy, RandomPolicy, ScriptPolicy};
use vcle::harness::qlearn::{train_q, QAgent, QAgentConfig};
use vcle::harness::serve::serve;
use vcle::harness::transcript::{verify, Transcript};
use vcle::harness::{play, HarnessError};
use vcle::kula::{solve, LevelSource, LevelSpec, LoadSpec, StartSelector};
use vcle::protocol::transport::{create_fifos, fifo_server};
use vcle::{Console, ConsoleOptions};

#[derive(Parser)]
#[command(name = "vcle", version, about = "Virtual console learning environment")]
struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Clone)]
struct EnvArgs {
    /// fixed-v1, random-v1 or audio-v1 (Gym ids are accepted too).
    #[arg(long, default_value = "fixed-v1")]
    variant: String,
    /// Bundled level number or path to a level file. Replaces the variant's levels.
    #[arg(long)]
    level: Option<String>,
    /// Start from the reserved validation pose.
    #[arg(long)]
    eval: bool,
    /// Game configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run the console unthrottled.
    #[arg(long)]
    fast: bool,
    /// Record move audio into the state.
    #[arg(long)]
    record_audio: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a random or scripted agent and write an episode log.
    Play {
        #[command(flatten)]
        env: EnvArgs,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        /// Action script replayed each episode instead of random play.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Output directory for episodes.csv; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabular Q-learning over the ball pose; writes episodes.csv and qtable.json.
    TrainQ {
        #[command(flatten)]
        env: EnvArgs,
        #[arg(long, default_value_t = 2000)]
        episodes: usize,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = 0.95)]
        gamma: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Play a list of moves and dump the screen, audio or MFCCs of the last one.
    Dump {
        /// frame, audio or mfcc.
        what: DumpKind,
        /// Bundled level number or level file.
        #[arg(long, default_value = "1")]
        level: String,
        /// Training start index or `r`.
        #[arg(long, default_value = "0")]
        start: StartSelector,
        /// Moves, e.g. `Forward,LookLeft`.
        #[arg(long, default_value = "")]
        moves: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file (.ppm, .wav or .csv).
        #[arg(long)]
        out: PathBuf,
    },
    /// Record the per-channel traffic of a session script.
    ProtocolRecord {
        session: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a transcript's script and byte-compare every channel. Exits 1 on mismatch.
    ProtocolVerify { transcript: PathBuf },
    /// Serve a console over named pipes a, b, c, d in a directory.
    Serve {
        dir: PathBuf,
        #[arg(long)]
        fast: bool,
    },
    /// Serve one environment as JSON lines on stdin/stdout.
    EnvServe {
        #[command(flatten)]
        env: EnvArgs,
    },
    /// Print the fastest winning move sequence for a level start.
    Solve {
        #[arg(long, default_value = "1")]
        level: String,
        #[arg(long, default_value = "0")]
        start: StartSelector,
    },
}

fn level_source(s: &str) -> LevelSource {
    match s.parse::<u8>() {
        Ok(n) => LevelSource::Bundled(n),
        Err(_) => LevelSource::File(PathBuf::from(s)),
    }
}

fn load_config(path: Option<&Path>) -> Result<GameConfig, HarnessError> {
    Ok(match path {
        Some(p) => GameConfig::load(p)?,
        None => GameConfig::default(),
    })
}

fn make_env(a: &EnvArgs, seed: u64) -> Result<Env, HarnessError> {
    let variant: Variant = a.variant.parse()?;
    let mut cfg = load_config(a.config.as_deref())?;
    if a.record_audio {
        cfg.audio.record = true;
    }
    let opts = EnvOptions {
        fast: a.fast,
        eval: a.eval,
        seed,
        level: a.level.as_deref().map(level_source),
        snapshot_dir: None,
    };
    Ok(Env::new(variant, cfg, opts)?)
}

fn write_log(rows: &[EpisodeLog], out: Option<&Path>) -> Result<(), HarnessError> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join("episodes.csv");
            write_csv(File::create(&path)?, rows)?;
            info!("wrote {}", path.display());
        }
        None => write_csv(io::stdout().lock(), rows)?,
    }
    Ok(())
}

fn read_level(s: &str) -> Result<LevelSpec, HarnessError> {
    let spec = LoadSpec {
        source: level_source(s),
        start: StartSelector::Training(0),
        time_s: None,
    };
    Ok(spec.read_level().map_err(vcle::game::GameError::from)?)
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    let seed = cli.seed;
    match cli.cmd {
        Command::Play { env, episodes, script, out } => {
            let mut e = make_env(&env, seed)?;
            let mut policy: Box<dyn Policy> = match script {
                Some(p) => Box::new(ScriptPolicy::load(&p)?),
                None => Box::new(RandomPolicy::new(seed)),
            };
            let window = if env.eval { EVAL_WINDOW } else { TRAIN_WINDOW };
            let rows = play(&mut e, policy.as_mut(), episodes, window)?;
            e.close()?;
            write_log(&rows, out.as_deref())?;
        }
        Command::TrainQ { env, episodes, alpha, gamma, out } => {
            let mut e = make_env(&env, seed)?;
            let cfg = QAgentConfig { alpha, gamma, ..Default::default() };
            let mut agent = QAgent::new(cfg, seed);
            let rows = train_q(&mut e, &mut agent, episodes)?;
            e.close()?;
            write_log(&rows, Some(&out))?;
            agent.save(&out.join("qtable.json"))?;
            let tail = &rows[rows.len().saturating_sub(100)..];
            let wins = tail.iter().filter(|r| r.outcome == "won").count();
            eprintln!("win rate over last {} episodes: {:.3}", tail.len(), wins as f64 / tail.len().max(1) as f64);
        }
        Command::Dump { what, level, start, moves, config, out } => {
            let mut cfg = load_config(config.as_deref())?;
            cfg.audio.record = what != DumpKind::Frame;
            cfg.audio.use_mfcc = false;
            let actions = if moves.trim().is_empty() {
                Vec::new()
            } else {
                ScriptPolicy::parse(&moves)?.actions().to_vec()
            };
            let spec = LoadSpec { source: level_source(&level), start, time_s: None };
            let mut game = Game::launch(spec, ConsoleOptions::fast(), cfg.clone())?;
            dump_moves(&mut game, &actions, what, &cfg.audio.mfcc, &out)?;
            game.close()?;
        }
        Command::ProtocolRecord { session, out } => {
            let script = std::fs::read_to_string(&session)?;
            let t = Transcript::record(&script)?;
            t.save(&out)?;
            let lens: Vec<String> = t.channels.iter().map(|c| c.len().to_string()).collect();
            eprintln!("recorded {} (A/B/C/D bytes: {})", out.display(), lens.join("/"));
        }
        Command::ProtocolVerify { transcript } => {
            let report = verify(&Transcript::load(&transcript)?)?;
            print!("{report}");
            if !report.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Serve { dir, fast } => {
            create_fifos(&dir)?;
            let opts = ConsoleOptions { fast, ..Default::default() };
            let mut console = Console::new(opts);
            console.run()?;
            eprintln!("serving on {}", dir.display());
            let end = fifo_server(&dir)?;
            ConsoleServer::new(console, end).serve()?;
        }
        Command::EnvServe { env } => {
            let mut e = make_env(&env, seed)?;
            let stdout = io::stdout();
            serve(&mut e, io::stdin().lock(), BufWriter::new(stdout.lock()))?;
        }
        Command::Solve { level, start } => {
            let spec = read_level(&level)?;
            let pose = spec.start(start).map_err(vcle::game::GameError::from)?;
            let mut out = io::stdout().lock();
            match solve(&spec, pose) {
                Some(s) => {
                    let names: Vec<&str> = s
                        .moves
                        .iter()
                        .map(|m| Action::from(*m).name())
                        .collect();
                    writeln!(out, "{}", names.join(","))?;
                    writeln!(out, "frames {} score {}", s.frames, s.score)?;
                }
                None => {
                    writeln!(out, "unwinnable")?;
                    return Ok(ExitCode::FAILURE);
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
