//! The `stridephase` command line.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 on data
//! errors (missing or malformed files, failed runs).

use crate::config::{CliConfig, ConfigError};
use crate::estimator::{EstimatorSession, ReferenceSequence, UpdateOutcome};
use crate::evolution::{evolve, history_csv, EvolutionData};
use crate::gait_data::{generate_synthetic, load_trajectory, GaitDataError, save_trajectory, segment_stride, GaitTrajectory, SyntheticGaitConfig};
use crate::harness::{ground_truth_reference, noise_sweep, replay, LatencyModel, RunMetrics, SweepRow};
use crate::numfmt::sig9;
use crate::predictor::{adjust_swing, parse_layers, spec_with_output, Example, PredictionPair, Predictor};
use crate::seeds::derive;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Data(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Read { .. } => Self::Data(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

fn data<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Data(format!("{context}: {e}"))
}

#[derive(Debug, Parser)]
#[command(name = "stridephase", version, about = "Obstacle-crossing gait tools: synthetic data, trajectory prediction, phase estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Seed for every random stream of the run.
    #[arg(long)]
    seed: Option<u64>,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReferenceArgs {
    /// Predictor weight file written by `train` or `evolve`.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Use the recorded stride itself as the reference.
    #[arg(long, conflicts_with = "weights")]
    self_reference: bool,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    noise_std: Option<f64>,
    /// Fixed estimator latency in milliseconds.
    #[arg(long, conflicts_with = "measured_latency")]
    latency_ms: Option<f64>,
    /// Charge the measured compute time of each update. Not reproducible.
    #[arg(long)]
    measured_latency: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic obstacle-crossing sessions.
    Gen {
        #[command(flatten)]
        common: Common,
        /// Output CSV, or a directory when --count > 1.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        rate: Option<f64>,
        /// Draw obstacle, foot distance, duration and leg length from the seed.
        #[arg(long)]
        varied: bool,
    },
    /// Train a predictor on a directory of sessions.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        /// Hidden layers, e.g. `dense:64:tanh:0|attention:32:relu:0.1`.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Search network architectures with the genetic algorithm.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the estimator over every sample of one session.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        traj: PathBuf,
        #[command(flatten)]
        reference: ReferenceArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Latency-aware streaming replay of one session.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        traj: PathBuf,
        #[command(flatten)]
        reference: ReferenceArgs,
        #[command(flatten)]
        replay: ReplayArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay one session over a grid of noise levels.
    SweepNoise {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        traj: PathBuf,
        #[command(flatten)]
        reference: ReferenceArgs,
        #[command(flatten)]
        replay: ReplayArgs,
        #[arg(long)]
        std_min: Option<f64>,
        #[arg(long)]
        std_step: Option<f64>,
        #[arg(long)]
        std_max: Option<f64>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarise `simulate` and `sweep-noise` outputs found under a directory.
    Report {
        run_dir: PathBuf,
        /// Where to write summary.json; defaults to the run directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Messages go to stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(cli.command) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn resolve(common: &Common) -> Result<CliConfig, CliError> {
    let mut cfg = CliConfig::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn apply_replay(cfg: &mut CliConfig, r: &ReplayArgs) {
    if let Some(v) = r.rate {
        cfg.replay.rate_hz = v;
    }
    if let Some(v) = r.noise_std {
        cfg.replay.noise_std = v;
    }
    if let Some(ms) = r.latency_ms {
        cfg.replay.latency = LatencyModel::Fixed { ms };
    }
    if r.measured_latency {
        cfg.replay.latency = LatencyModel::Measured;
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(data(path.display()))
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(data(path.display()))
}

fn parent_dir(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => ensure_dir(p),
        _ => Ok(()),
    }
}

/// `dir/resolved_config.toml`, or `file.resolved_config.toml` next to a file
/// output.
fn snapshot(cfg: &CliConfig, out: &Path, is_dir: bool) -> Result<(), CliError> {
    let path = if is_dir {
        out.join("resolved_config.toml")
    } else {
        let mut s = out.as_os_str().to_owned();
        s.push(".resolved_config.toml");
        PathBuf::from(s)
    };
    write(&path, &cfg.to_toml())
}

fn load_traj(path: &Path) -> Result<GaitTrajectory, CliError> {
    load_trajectory(path).map_err(|e| match e {
        GaitDataError::Io { .. } => CliError::Data(e.to_string()),
        _ => CliError::Data(format!("{}: {e}", path.display())),
    })
}

/// Every `*.csv` session in `dir`, in file-name order.
fn load_sessions(dir: &Path) -> Result<Vec<GaitTrajectory>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(data(dir.display()))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Data(format!("{}: no session CSV files", dir.display())));
    }
    paths.iter().map(|p| load_traj(p)).collect()
}

fn examples(sessions: &[GaitTrajectory], cfg: &CliConfig) -> Result<Vec<Example>, CliError> {
    sessions
        .iter()
        .enumerate()
        .map(|(k, t)| Example::from_trajectory(t, &cfg.features).map_err(data(format!("session {k}"))))
        .collect()
}

fn reference(traj: &GaitTrajectory, args: &ReferenceArgs, cfg: &CliConfig) -> Result<PredictionPair, CliError> {
    if args.self_reference {
        return ground_truth_reference(traj, cfg.features.trajectory_len).map_err(data("reference"));
    }
    let Some(path) = &args.weights else {
        return Err(CliError::Usage("either --weights <file> or --self-reference is required".into()));
    };
    if !path.exists() {
        return Err(CliError::Data(format!("weights file {} does not exist", path.display())));
    }
    let predictor = Predictor::load(path).map_err(data(path.display()))?;
    let ex = Example::from_trajectory(traj, predictor.features()).map_err(data("trajectory"))?;
    let pred = predictor.predict_example(&ex).map_err(data("prediction"))?;
    Ok(adjust_swing(&pred, ex.knee_at_event))
}

fn metrics_text(m: &RunMetrics) -> String {
    serde_json::to_string_pretty(m).expect("metrics serialise") + "\n"
}

fn execute(command: Command) -> Result<String, CliError> {
    match command {
        Command::Gen { common, out, count, rate, varied } => {
            let mut cfg = resolve(&common)?;
            if let Some(r) = rate {
                cfg.synthetic.rate_hz = r;
            }
            cfg.synthetic.seed = cfg.seed;
            cfg.validate()?;
            if count == 0 {
                return Err(CliError::Usage("--count must be >= 1".into()));
            }
            let session = |k: usize| -> SyntheticGaitConfig {
                if varied || count > 1 {
                    SyntheticGaitConfig::varied(derive(cfg.seed, &[k as u64]), cfg.synthetic.rate_hz)
                } else {
                    cfg.synthetic
                }
            };
            if count == 1 {
                parent_dir(&out)?;
                let traj = generate_synthetic(&session(0)).map_err(data("generator"))?;
                save_trajectory(&traj, &out).map_err(data(out.display()))?;
                snapshot(&cfg, &out, false)?;
                return Ok(format!("wrote {}\n", out.display()));
            }
            ensure_dir(&out)?;
            for k in 0..count {
                let traj = generate_synthetic(&session(k)).map_err(data(format!("session {k}")))?;
                let path = out.join(format!("session_{k:04}.csv"));
                save_trajectory(&traj, &path).map_err(data(path.display()))?;
            }
            snapshot(&cfg, &out, true)?;
            Ok(format!("wrote {count} sessions to {}\n", out.display()))
        }
        Command::Train { common, data: dir, spec, out } => {
            let cfg = resolve(&common)?;
            cfg.validate()?;
            let text = std::fs::read_to_string(&spec).map_err(data(spec.display()))?;
            let hidden = parse_layers(&text).map_err(|e| CliError::Usage(format!("{}: {e}", spec.display())))?;
            let net_spec = spec_with_output(hidden, &cfg.features);
            net_spec.validate().map_err(|e| CliError::Usage(format!("{}: {e}", spec.display())))?;
            let ex = examples(&load_sessions(&dir)?, &cfg)?;
            let (predictor, hist) =
                Predictor::fit(net_spec, cfg.features, &ex, &cfg.train_config()).map_err(data("training"))?;
            parent_dir(&out)?;
            predictor.save(&out).map_err(data(out.display()))?;
            snapshot(&cfg, &out, false)?;
            Ok(format!(
                "trained on {} sessions: best validation loss {} at epoch {} of {}\nwrote {}\n",
                ex.len(),
                sig9(hist.best_val_loss),
                hist.best_epoch,
                hist.epochs_run,
                out.display()
            ))
        }
        Command::Evolve { common, data: dir, out } => {
            let cfg = resolve(&common)?;
            cfg.validate()?;
            let sessions = load_sessions(&dir)?;
            let n_hold = ((cfg.ga.holdout_fraction * sessions.len() as f64).round() as usize).max(1);
            if n_hold >= sessions.len() {
                return Err(CliError::Data(format!(
                    "{}: {} sessions leave nothing to train on after holding out {n_hold}",
                    dir.display(),
                    sessions.len()
                )));
            }
            let (train, hold) = sessions.split_at(sessions.len() - n_hold);
            let ga = cfg.ga_config();
            let evo_data = EvolutionData::from_sessions(train, hold, &cfg.features).map_err(data("sessions"))?;
            let res = evolve(&ga, &evo_data).map_err(|e| CliError::Data(e.to_string()))?;
            ensure_dir(&out)?;
            write(&out.join("history.csv"), &history_csv(&res.history))?;
            write(&out.join("best_spec.txt"), &(res.best.genome.describe() + "\n"))?;
            let Some(best) = &res.best.predictor else {
                return Err(CliError::Data("every candidate failed to train".into()));
            };
            best.save(&out.join("best.json")).map_err(data("best.json"))?;
            snapshot(&cfg, &out, true)?;
            let f = res.best.fitness;
            Ok(format!(
                "best {}: total {} (progress {} %, angles {} deg, time {} s)\nwrote {}\n",
                res.best.genome.describe(),
                sig9(f.total),
                sig9(f.error1),
                sig9(f.error2),
                sig9(f.time_cost),
                out.display()
            ))
        }
        Command::Estimate { common, traj, reference: r, out } => {
            let cfg = resolve(&common)?;
            cfg.validate()?;
            let t = load_traj(&traj)?;
            let pred = reference(&t, &r, &cfg)?;
            let seg = segment_stride(&t, 0).map_err(data(traj.display()))?;
            let thigh = seg.thigh();
            let rate = t.rate_hz();
            let duration = (thigh.len() - 1) as f64 / rate;
            let rs = ReferenceSequence::new(pred.thigh_pred.clone(), duration).map_err(data("reference"))?;
            let mut session = EstimatorSession::new(rs, rate, cfg.estimator.clone())
                .map_err(|e| CliError::Usage(e.to_string()))?
                .with_knee_len(pred.knee_pred.len());
            let mut csv = String::from("t,progress_pct,raw_progress_pct,knee_index,best_i,window_len,t_y,s_y,s_x,dtw_cost,mode\n");
            for (j, v) in thigh.iter().enumerate() {
                let t_s = j as f64 / rate;
                if let UpdateOutcome::Estimate(e) = session.update(t_s, *v).map_err(data("estimator"))? {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{},{},{},{},{},{:?}",
                        sig9(t_s),
                        sig9(e.progress_pct),
                        sig9(e.raw_progress_pct),
                        e.knee_index,
                        e.best_i,
                        e.window_len,
                        sig9(e.params_hat.t_y),
                        sig9(e.params_hat.s_y),
                        sig9(e.params_hat.s_x),
                        sig9(e.dtw_cost),
                        e.mode
                    );
                }
            }
            let mut pcsv = String::from("index,thigh_pred,knee_pred\n");
            for (k, (a, b)) in pred.thigh_pred.iter().zip(&pred.knee_pred).enumerate() {
                let _ = writeln!(pcsv, "{},{},{}", k + 1, sig9(*a), sig9(*b));
            }
            ensure_dir(&out)?;
            write(&out.join("estimates.csv"), &csv)?;
            write(&out.join("prediction.csv"), &pcsv)?;
            snapshot(&cfg, &out, true)?;
            Ok(format!("wrote {}\n", out.display()))
        }
        Command::Simulate { common, traj, reference: r, replay: ra, out } => {
            let mut cfg = resolve(&common)?;
            apply_replay(&mut cfg, &ra);
            cfg.validate()?;
            let t = load_traj(&traj)?;
            let pred = reference(&t, &r, &cfg)?;
            let res = replay(&t, &pred, &cfg.replay_config()).map_err(data("replay"))?;
            ensure_dir(&out)?;
            write(&out.join("metrics.json"), &metrics_text(&res.metrics))?;
            write(&out.join("steps.csv"), &res.steps_csv())?;
            snapshot(&cfg, &out, true)?;
            let m = res.metrics;
            Ok(format!(
                "progress RMSE {} %, accuracy {}, thigh RMSE {} %, knee RMSE {} %\nwrote {}\n",
                sig9(m.progress_rmse_pct),
                sig9(m.progress_accuracy),
                sig9(m.thigh_rmse_pct),
                sig9(m.knee_rmse_pct),
                out.display()
            ))
        }
        Command::SweepNoise { common, traj, reference: r, replay: ra, std_min, std_step, std_max, repeats, out } => {
            let mut cfg = resolve(&common)?;
            apply_replay(&mut cfg, &ra);
            if let Some(v) = std_min {
                cfg.sweep.std_min = v;
            }
            if let Some(v) = std_step {
                cfg.sweep.std_step = v;
            }
            if let Some(v) = std_max {
                cfg.sweep.std_max = v;
            }
            if let Some(v) = repeats {
                cfg.sweep.repeats = v;
            }
            cfg.validate()?;
            let t = load_traj(&traj)?;
            let pred = reference(&t, &r, &cfg)?;
            let rep = noise_sweep(&t, &pred, &cfg.replay_config(), &cfg.sweep).map_err(data("sweep"))?;
            ensure_dir(&out)?;
            write(&out.join("sweep.csv"), &rep.to_csv())?;
            snapshot(&cfg, &out, true)?;
            let worst = rep.rows.iter().map(|r| r.progress_rmse_pct).fold(0.0, f64::max);
            Ok(format!(
                "{} noise levels at {} Hz, worst progress RMSE {} %\nwrote {}\n",
                rep.rows.len(),
                sig9(cfg.replay.rate_hz),
                sig9(worst),
                out.display()
            ))
        }
        Command::Report { run_dir, out } => {
            let summary = report(&run_dir)?;
            let dest = out.unwrap_or_else(|| run_dir.clone());
            ensure_dir(&dest)?;
            write(&dest.join("summary.json"), &(serde_json::to_string_pretty(&summary).expect("summary serialises") + "\n"))?;
            Ok(summary.table())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// Directory of the run, relative to the report root.
    pub run: String,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub run: String,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: Vec<RunSummary>,
    pub sweeps: Vec<SweepSummary>,
}

impl Summary {
    pub fn table(&self) -> String {
        let mut out = String::new();
        if !self.runs.is_empty() {
            let _ = writeln!(
                out,
                "{:>8} {:>9} {:>13} {:>9} {:>11} {:>10} {:>9} {:>8}  run",
                "rate_hz", "noise_std", "progress_rmse", "accuracy", "thigh_rmse%", "knee_rmse%", "r_thigh", "r_knee"
            );
            for r in &self.runs {
                let m = &r.metrics;
                let _ = writeln!(
                    out,
                    "{:>8.1} {:>9.3} {:>13.3} {:>9.3} {:>11.2} {:>10.2} {:>9.4} {:>8.4}  {}",
                    m.rate_hz,
                    m.noise_std,
                    m.progress_rmse_pct,
                    m.progress_accuracy,
                    m.thigh_rmse_pct,
                    m.knee_rmse_pct,
                    m.pearson_thigh,
                    m.pearson_knee,
                    r.run
                );
            }
        }
        for s in &self.sweeps {
            let worst = s.rows.iter().map(|r| r.progress_rmse_pct).fold(0.0, f64::max);
            let first = s.rows.first().map_or(0.0, |r| r.noise_std);
            let last = s.rows.last().map_or(0.0, |r| r.noise_std);
            let _ = writeln!(
                out,
                "sweep {}: {} levels, std {first}..{last}, worst progress RMSE {:.3} %",
                s.run,
                s.rows.len(),
                worst
            );
        }
        out
    }
}

fn collect(dir: &Path, root: &Path, found: &mut Vec<(String, PathBuf)>) -> Result<(), CliError> {
    let entries = std::fs::read_dir(dir).map_err(data(dir.display()))?;
    let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    paths.sort();
    for p in paths {
        if p.is_dir() {
            collect(&p, root, found)?;
        } else if matches!(p.file_name().and_then(|n| n.to_str()), Some("metrics.json" | "sweep.csv")) {
            let rel = dir.strip_prefix(root).unwrap_or(dir).display().to_string();
            found.push((if rel.is_empty() { ".".into() } else { rel }, p));
        }
    }
    Ok(())
}

fn parse_sweep(path: &Path) -> Result<Vec<SweepRow>, CliError> {
    let text = std::fs::read_to_string(path).map_err(data(path.display()))?;
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate().skip(1).filter(|(_, l)| !l.trim().is_empty()) {
        let v: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(data(format!("{} line {}", path.display(), k + 1)))?;
        let [noise_std, progress_rmse_pct, accuracy] = v.as_slice() else {
            return Err(CliError::Data(format!("{} line {}: expected 3 columns", path.display(), k + 1)));
        };
        rows.push(SweepRow { noise_std: *noise_std, progress_rmse_pct: *progress_rmse_pct, accuracy: *accuracy });
    }
    Ok(rows)
}

/// Gathers every `metrics.json` and `sweep.csv` under `run_dir`. Runs are
/// sorted by rate, then noise level, then directory.
pub fn report(run_dir: &Path) -> Result<Summary, CliError> {
    let mut found = Vec::new();
    collect(run_dir, run_dir, &mut found)?;
    let mut runs = Vec::new();
    let mut sweeps = Vec::new();
    for (run, path) in found {
        if path.ends_with("metrics.json") {
            let text = std::fs::read_to_string(&path).map_err(data(path.display()))?;
            let metrics: RunMetrics = serde_json::from_str(&text).map_err(data(path.display()))?;
            runs.push(RunSummary { run, metrics });
        } else {
            sweeps.push(SweepSummary { run, rows: parse_sweep(&path)? });
        }
    }
    if runs.is_empty() && sweeps.is_empty() {
        return Err(CliError::Data(format!(
            "{}: missing artifacts, no metrics.json or sweep.csv found",
            run_dir.display()
        )));
    }
    runs.sort_by(|a, b| {
        a.metrics
            .rate_hz
            .total_cmp(&b.metrics.rate_hz)
            .then(a.metrics.noise_std.total_cmp(&b.metrics.noise_std))
            .then(a.run.cmp(&b.run))
    });
    Ok(Summary { runs, sweeps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(args: &[&str]) -> i32 {
        run(std::iter::once("stridephase").chain(args.iter().copied()))
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let p = |n: &str| dir.path().join(n).display().to_string();
        assert_eq!(code(&["--help"]), 0);
        assert_eq!(code(&["simulate", "--bogus"]), 1);
        assert_eq!(code(&["simulate", "--traj", &p("none.csv"), "--self-reference", "--out", &p("o")]), 2);
        assert_eq!(code(&["gen", "--out", &p("a.csv"), "--config", &p("missing.toml")]), 2);
        std::fs::write(dir.path().join("bad.toml"), "[replay]\nrate_hz = 400.0\n").unwrap();
        assert_eq!(code(&["gen", "--out", &p("a.csv"), "--config", &p("bad.toml")]), 1);
        std::fs::write(dir.path().join("typo.toml"), "sede = 3\n").unwrap();
        assert_eq!(code(&["gen", "--out", &p("a.csv"), "--config", &p("typo.toml")]), 1);
        assert_eq!(code(&["gen", "--out", &p("a.csv"), "--seed", "2"]), 0);
        assert!(dir.path().join("a.csv.resolved_config.toml").exists());
        assert_eq!(code(&["simulate", "--traj", &p("a.csv"), "--out", &p("o")]), 1);
    }

    #[test]
    fn report_without_artifacts_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let e = report(dir.path()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("missing artifacts"));
    }

    #[test]
    fn report_sorts_by_rate() {
        let dir = tempfile::tempdir().unwrap();
        let traj = generate_synthetic(&SyntheticGaitConfig::default()).unwrap();
        let pred = ground_truth_reference(&traj, 100).unwrap();
        for (name, rate) in [("b", 150.0), ("a", 25.0)] {
            let cfg = crate::harness::ReplayConfig { rate_hz: rate, latency: LatencyModel::Fixed { ms: 0.0 }, ..Default::default() };
            let m = replay(&traj, &pred, &cfg).unwrap().metrics;
            let d = dir.path().join(name);
            std::fs::create_dir_all(&d).unwrap();
            std::fs::write(d.join("metrics.json"), metrics_text(&m)).unwrap();
        }
        let s = report(dir.path()).unwrap();
        assert_eq!(s.runs.iter().map(|r| r.metrics.rate_hz).collect::<Vec<_>>(), vec![25.0, 150.0]);
        assert!(s.table().lines().count() == 3);
    }
}
