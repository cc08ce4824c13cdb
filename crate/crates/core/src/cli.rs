//! `ropera` command line: validate, compile, simulate, render, play, remap.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::decoder::{decode_score, CouplingModel, JointTargets};
use crate::kinesim::{trace, KinematicChain};
use crate::lightpaint::{render, Plane, RenderConfig};
use crate::notation::{parse_score_bytes, serialize_score, Score};
use crate::protocol::{self, compile_stream, encode_stream, PlayError, PlayOptions};
use crate::trajectory::{metrics, plan, ProfileConfig, ProfileKind, SampledTrajectory};
use crate::vocabulary::{remap_score, RemapSpec};

/// Environment variable naming a directory of assets and scores.
pub const HOME_VAR: &str = "ROPERA_HOME";

/// File name of the chain description looked up under `ROPERA_HOME`.
pub const CHAIN_FILE: &str = "chain.dh";

#[derive(Debug, Parser)]
#[command(
    name = "ropera",
    version,
    about = "Compile, simulate and stream symbolic arm choreography"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and check a score.
    Validate { path: PathBuf },
    /// Write the per-frame command stream (one JSON record per line).
    Compile {
        path: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the trajectory and report timing, smoothness and jitter.
    Simulate {
        path: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
        /// Write samples as CSV (`t,s1,...,sN`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write metrics as JSON.
        #[arg(long)]
        metrics_out: Option<PathBuf>,
    },
    /// Light-paint the simulated marker trails to SVG.
    Render {
        path: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Chain description file; defaults to $ROPERA_HOME/chain.dh or the bundled arm.
        #[arg(long)]
        chain: Option<PathBuf>,
        #[arg(long, default_value = "xz")]
        plane: Plane,
        #[arg(long, default_value_t = 800)]
        width: u32,
        #[arg(long, default_value_t = 600)]
        height: u32,
    },
    /// Stream the command records to a bridge on their schedule.
    Play {
        path: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
        /// Bridge address, host:port.
        #[arg(long, required_unless_present = "dry_run")]
        connect: Option<String>,
        /// Print the stream with its timing instead of sending it.
        #[arg(long)]
        dry_run: bool,
    },
    /// Rewrite a score for a different servo layout.
    Remap {
        path: PathBuf,
        /// Comma-separated rules per target servo: a 1-based source servo
        /// number, or a symbol letter for a constant channel.
        #[arg(long)]
        map: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Default, Clone)]
pub struct PlanArgs {
    /// Transition profile: vendor_default, linear_smoothed, min_jerk or s_curve.
    #[arg(long)]
    pub profile: Option<ProfileKind>,
    /// Sample rate in Hz.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Joint speed cap in deg/s.
    #[arg(long)]
    pub v_max: Option<f64>,
    /// Fraction of each frame spent moving.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Coupling coefficient between s5 and s6 (overrides the score header).
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Comma-separated home angles in degrees; zeros by default.
    #[arg(long)]
    pub home: Option<String>,
}

/// A failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command.
/// Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return 2;
            }
            let _ = write!(stdout, "{e}");
            return 0;
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    match command {
        Command::Validate { path } => {
            let score = load_score(&path)?;
            let frames = score.frames.len();
            writeln_out(
                stdout,
                &format!(
                    "OK, {frames} frame{}, {} servos, {} s",
                    if frames == 1 { "" } else { "s" },
                    score.servo_count,
                    crate::notation::format_seconds(score.total_duration())
                ),
            )
        }
        Command::Compile { path, plan, out } => {
            let job = Job::load(&path, &plan)?;
            let stream = compile_stream(&job.home, &job.targets, &job.config);
            emit(out.as_deref(), stdout, encode_stream(&stream).as_bytes())
        }
        Command::Simulate {
            path,
            plan,
            out,
            metrics_out,
        } => {
            let job = Job::load(&path, &plan)?;
            let traj = job.plan()?;
            let m = metrics(&traj, &job.targets).map_err(|e| CliError::invalid(e.to_string()))?;
            if let Some(out) = out {
                write_file(&out, trajectory_csv(&traj).as_bytes())?;
            }
            if let Some(mo) = metrics_out {
                let json = serde_json::to_string_pretty(&m).expect("metrics serialize");
                write_file(&mo, format!("{json}\n").as_bytes())?;
            }
            let summary = format!(
                "profile: {}\nframes: {}\nsamples: {} at {} Hz\nduration: {} s\ntiming_deviation: {} s\nsmoothness: {} (deg/s^3)^2\njitter: {} deg",
                job.config.kind,
                job.targets.len(),
                traj.len(),
                job.config.sample_rate,
                traj.duration(),
                m.timing_deviation,
                m.smoothness,
                m.jitter
            );
            writeln_out(stdout, &summary)
        }
        Command::Render {
            path,
            plan,
            out,
            chain,
            plane,
            width,
            height,
        } => {
            let job = Job::load(&path, &plan)?;
            let chain = load_chain(chain.as_deref())?;
            let traj = job.plan()?;
            let tr = trace(&chain, &traj).map_err(|e| CliError::invalid(e.to_string()))?;
            let config = RenderConfig {
                plane,
                width,
                height,
                title: path.file_stem().map(|s| s.to_string_lossy().into_owned()),
                ..RenderConfig::default()
            };
            let svg = render(&tr, &job.score.palette, &config)
                .map_err(|e| CliError::invalid(e.to_string()))?;
            emit(out.as_deref(), stdout, &svg)
        }
        Command::Play {
            path,
            plan,
            connect,
            dry_run,
        } => {
            let job = Job::load(&path, &plan)?;
            let stream = compile_stream(&job.home, &job.targets, &job.config);
            if dry_run {
                return protocol::dry_run(&stream, stdout).map_err(|e| CliError::io(e.to_string()));
            }
            let addr = connect.expect("clap requires --connect without --dry-run");
            match protocol::play(&stream, addr.as_str(), &PlayOptions::default()) {
                Ok(report) => {
                    for o in &report.overruns {
                        let _ = writeln!(
                            stderr,
                            "warning: record {} sent {} ms late",
                            o.seq,
                            o.lag.as_millis()
                        );
                    }
                    writeln_out(
                        stdout,
                        &format!("sent {} records, all acknowledged", report.acked.len()),
                    )
                }
                Err(e @ PlayError::ConnectionRefused { .. }) => Err(CliError {
                    code: 3,
                    message: e.to_string(),
                }),
                Err(e) => Err(CliError::invalid(e.to_string())),
            }
        }
        Command::Remap { path, map, out } => {
            let score = load_score(&path)?;
            let spec: RemapSpec = map
                .parse()
                .map_err(|e: crate::vocabulary::RemapError| CliError::invalid(e.to_string()))?;
            let remapped =
                remap_score(&score, &spec).map_err(|e| CliError::invalid(e.to_string()))?;
            let text = serialize_score(&remapped).map_err(|e| CliError::invalid(e.to_string()))?;
            emit(out.as_deref(), stdout, text.as_bytes())
        }
    }
}

/// A parsed score with its resolved planning settings and decoded targets.
struct Job {
    score: Score,
    config: ProfileConfig,
    home: Vec<f64>,
    targets: Vec<JointTargets>,
}

impl Job {
    fn load(path: &Path, args: &PlanArgs) -> CliResult<Job> {
        let score = load_score(path)?;
        let n = score.servo_count;
        let mut config = score.profile;
        if let Some(kind) = args.profile {
            config.kind = kind;
        }
        if let Some(rate) = args.rate {
            config.sample_rate = rate;
        }
        if let Some(v) = args.v_max {
            config.v_max = v;
        }
        if let Some(rho) = args.rho {
            config.transition_fraction = rho;
        }
        config
            .validate()
            .map_err(|e| CliError::invalid(e.to_string()))?;
        let mut coupling: CouplingModel = score.coupling;
        if let Some(kappa) = args.kappa {
            coupling.kappa = kappa;
        }
        coupling
            .validate(n)
            .map_err(|e| CliError::invalid(format!("coupling: {e}")))?;
        let home = match &args.home {
            None => vec![0.0; n],
            Some(text) => parse_home(text, n, score.codebook.clip_limit())?,
        };
        let targets = decode_score(&score, &coupling, &home);
        Ok(Job {
            score,
            config,
            home,
            targets,
        })
    }

    fn plan(&self) -> CliResult<SampledTrajectory> {
        plan(&self.home, &self.targets, &self.config).map_err(|e| CliError::invalid(e.to_string()))
    }
}

fn parse_home(text: &str, n: usize, clip: f64) -> CliResult<Vec<f64>> {
    let angles: Vec<f64> = text
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .ok()
                .filter(|a| a.is_finite() && a.abs() <= clip)
        })
        .collect::<Option<_>>()
        .ok_or_else(|| {
            CliError::invalid(format!(
                "--home: expected {n} comma-separated angles within ±{clip}"
            ))
        })?;
    if angles.len() != n {
        return Err(CliError::invalid(format!(
            "--home has {} angles, the score has {n} servos",
            angles.len()
        )));
    }
    Ok(angles)
}

/// Resolves `path`, falling back to `$ROPERA_HOME/<path>` for relative paths
/// that do not exist.
fn resolve(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(HOME_VAR) {
        Some(home) => {
            let candidate = Path::new(&home).join(path);
            if candidate.exists() {
                candidate
            } else {
                path.to_path_buf()
            }
        }
        None => path.to_path_buf(),
    }
}

pub fn load_score(path: &Path) -> CliResult<Score> {
    let resolved = resolve(path);
    let bytes = std::fs::read(&resolved)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
    parse_score_bytes(&bytes).map_err(|e| CliError::invalid(format!("{}:{e}", path.display())))
}

fn load_chain(path: Option<&Path>) -> CliResult<KinematicChain> {
    let path = match path {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(HOME_VAR)
            .map(|home| Path::new(&home).join(CHAIN_FILE))
            .filter(|p| p.exists()),
    };
    match path {
        None => Ok(KinematicChain::default()),
        Some(p) => {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| CliError::io(format!("cannot read {}: {e}", p.display())))?;
            KinematicChain::parse(&text)
                .map_err(|e| CliError::invalid(format!("{}: {e}", p.display())))
        }
    }
}

fn trajectory_csv(traj: &SampledTrajectory) -> String {
    let mut out = String::from("t");
    for j in 0..traj.joint_count() {
        let _ = write!(out, ",s{}", j + 1);
    }
    out.push('\n');
    for (t, q) in traj.timestamps.iter().zip(&traj.angles) {
        let _ = write!(out, "{t}");
        for a in q {
            let _ = write!(out, ",{a}");
        }
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult {
    std::fs::write(path, bytes)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, bytes: &[u8]) -> CliResult {
    match out {
        Some(path) => write_file(path, bytes),
        None => stdout
            .write_all(bytes)
            .map_err(|e| CliError::io(format!("stdout: {e}"))),
    }
}

fn writeln_out(stdout: &mut dyn Write, text: &str) -> CliResult {
    writeln!(stdout, "{text}").map_err(|e: io::Error| CliError::io(format!("stdout: {e}")))
}
