//! `qsynapse`: run an experiment, write its CSV, print a metrics block.
//!
//! Settings are layered: `--preset` first, then the `--config` document,
//! then individual flags. The CSV goes to `--out`, else the `out` key of the
//! config, else `$QSYNAPSE_OUT_DIR/qsynapse-<mode>.csv` (current directory
//! when the variable is unset).

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};

use qsynapse_core::evolution::{evolve, r_min_sweep, CoupledState, TimeSeriesRecord};
use qsynapse_core::io::config::{preset, ExperimentConfig, Mode, Settings, SpikeTrain, PRESET_NAMES};
use qsynapse_core::io::{report_metrics, write_series, CsvRecord};
use qsynapse_core::synapse::{
    classical_time_average, periodic_spike_train, poisson_spike_train, r_stationary, simulate_classical_spikes,
};
use qsynapse_core::trajectories::{ensemble_average, run_trajectory, trajectory_seed};
use qsynapse_core::BasisLabel;

const OUT_DIR_VAR: &str = "QSYNAPSE_OUT_DIR";

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Train {
    Periodic,
    Poisson,
}

#[derive(Debug, Parser)]
#[command(name = "qsynapse", version, about = "Two qubits coupled through a depressing synapse")]
struct Cli {
    /// evolve | sweep-rmin | trajectory | ensemble | classical-synapse, or `presets` to list presets
    mode: String,

    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eps1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eps2: Option<f64>,
    #[arg(long)]
    u: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Integration steps between recorded samples.
    #[arg(long)]
    sample_every: Option<u64>,
    #[arg(long)]
    t_m: Option<f64>,
    #[arg(long)]
    n_traj: Option<usize>,
    /// Initial basis state `q1q2`.
    #[arg(long, value_parser = ["00", "01", "10", "11"])]
    initial: Option<String>,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    neg_threshold: Option<f64>,
    /// Time discarded before taking r_min in `sweep-rmin`.
    #[arg(long)]
    transient_window: Option<f64>,

    /// Comma-separated Ω values for `sweep-rmin`.
    #[arg(long, value_delimiter = ',')]
    omegas: Option<Vec<f64>>,
    /// Comma-separated τ values for `sweep-rmin`.
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    /// Spike rate f for `classical-synapse`.
    #[arg(long)]
    spike_rate: Option<f64>,
    #[arg(long, value_enum)]
    spike_train: Option<Train>,

    /// Worker threads for sweeps and ensembles (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl Cli {
    fn flag_settings(&self, mode: Mode) -> Result<Settings> {
        Ok(Settings {
            mode: Some(mode),
            eps1: self.eps1,
            eps2: self.eps2,
            omega: self.omega,
            u: self.u,
            tau: self.tau,
            dt: self.dt,
            t_end: self.t_end,
            sample_every: self.sample_every,
            t_m: self.t_m,
            n_traj: self.n_traj,
            seed: self.seed,
            initial: self.initial.as_deref().map(str::parse::<BasisLabel>).transpose()?,
            r0: self.r0,
            neg_threshold: self.neg_threshold,
            transient_window: self.transient_window,
            omegas: self.omegas.clone(),
            taus: self.taus.clone(),
            spike_rate: self.spike_rate,
            spike_train: self.spike_train.map(|t| match t {
                Train::Periodic => SpikeTrain::Periodic,
                Train::Poisson => SpikeTrain::Poisson,
            }),
            out: self.out.clone(),
        })
    }

    fn settings(&self, mode: Mode) -> Result<Settings> {
        let mut s = Settings::default();
        if let Some(name) = &self.preset {
            s = preset(name).with_context(|| format!("unknown preset `{name}` (try `qsynapse presets`)"))?;
        }
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let doc = Settings::from_document(&text).with_context(|| format!("in {}", path.display()))?;
            s = s.overlay(doc);
        }
        Ok(s.overlay(self.flag_settings(mode)?))
    }
}

fn default_output(mode: Mode) -> PathBuf {
    let dir = std::env::var_os(OUT_DIR_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    dir.join(format!("qsynapse-{}.csv", mode.name()))
}

fn save<T: CsvRecord>(records: &[T], path: &Path, report: &mut String) -> Result<()> {
    write_series(records, path)?;
    writeln!(report, "output = {}", path.display())?;
    writeln!(report, "rows = {}", records.len())?;
    Ok(())
}

/// Runs the experiment and returns the `key = value` report.
fn run(cfg: &ExperimentConfig, out: &Path) -> Result<String> {
    let initial = CoupledState::basis(cfg.initial, cfg.r0);
    let mut report = String::new();
    writeln!(report, "mode = {}", cfg.mode)?;
    match cfg.mode {
        Mode::Evolve => {
            let records = evolve(&initial, &cfg.model, &cfg.integrator)?;
            save(&records, out, &mut report)?;
            writeln!(report, "{}", report_metrics(&records, cfg.neg_threshold))?;
        }
        Mode::SweepRmin => {
            let sweep = cfg.sweep.as_ref().context("sweep settings missing")?;
            let rows = r_min_sweep(&sweep.omegas, &sweep.taus, &cfg.model, &cfg.integrator, sweep.transient)?;
            save(&rows, out, &mut report)?;
            for row in &rows {
                writeln!(report, "r_min_over_r0[tau={},omega={}] = {}", row.tau, row.omega, row.ratio)?;
            }
        }
        Mode::Trajectory => {
            let tc = cfg.trajectory.as_ref().context("trajectory settings missing")?;
            let records = run_trajectory(&initial, &cfg.model, tc, trajectory_seed(cfg.seed, 0))?;
            save(&records, out, &mut report)?;
            let measured: Vec<_> = records.iter().filter(|r| r.measured).collect();
            let ones = measured.iter().filter(|r| r.s_c == 1).count();
            writeln!(report, "measurements = {}", measured.len())?;
            writeln!(report, "outcomes_one = {ones}")?;
            let series: Vec<TimeSeriesRecord> = records
                .iter()
                .filter(|r| !r.measured)
                .map(|r| TimeSeriesRecord { t: r.t, p1: r.p1, p2: r.p2, r: r.r, negativity: r.negativity })
                .collect();
            if series.len() >= 2 {
                writeln!(report, "{}", report_metrics(&series, cfg.neg_threshold))?;
            }
        }
        Mode::Ensemble => {
            let tc = cfg.trajectory.as_ref().context("trajectory settings missing")?;
            let points = ensemble_average(&initial, &cfg.model, tc)?;
            save(&points, out, &mut report)?;
            let (t0, t1) = (points[0].t, points[points.len() - 1].t);
            let tail: Vec<_> = points.iter().filter(|p| p.t >= t1 - 0.1 * (t1 - t0)).collect();
            let n = tail.len() as f64;
            writeln!(report, "n_traj = {}", tc.n_traj)?;
            writeln!(report, "final_mean_p1 = {}", tail.iter().map(|p| p.mean_p1).sum::<f64>() / n)?;
            writeln!(report, "final_mean_p2 = {}", tail.iter().map(|p| p.mean_p2).sum::<f64>() / n)?;
            writeln!(report, "final_mean_r = {}", tail.iter().map(|p| p.mean_r).sum::<f64>() / n)?;
        }
        Mode::ClassicalSynapse => {
            let cc = cfg.classical.as_ref().context("classical settings missing")?;
            let t_end = cfg.integrator.t_end;
            let spikes = match cc.train {
                SpikeTrain::Periodic => periodic_spike_train(cc.rate, t_end),
                SpikeTrain::Poisson => poisson_spike_train(cc.rate, t_end, cfg.seed),
            };
            let grid = cfg.integrator.dt * cfg.integrator.sample_every as f64;
            let samples = simulate_classical_spikes(&cfg.model.synapse, &spikes, cfg.r0, t_end, grid)?;
            save(&samples, out, &mut report)?;
            writeln!(report, "spikes = {}", spikes.len())?;
            writeln!(report, "r_stationary = {}", r_stationary(&cfg.model.synapse, cc.rate))?;
            writeln!(
                report,
                "time_average_second_half = {}",
                classical_time_average(&cfg.model.synapse, &spikes, cfg.r0, 0.5 * t_end, t_end)
            )?;
        }
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match try_main(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn try_main(cli: &Cli) -> Result<()> {
    if cli.mode == "presets" {
        emit(&PRESET_NAMES.iter().map(|n| format!("{n}\n")).collect::<String>());
        return Ok(());
    }
    let Some(mode) = Mode::parse(&cli.mode) else {
        let names: Vec<_> = Mode::ALL.iter().map(|m| m.name()).collect();
        bail!("unknown mode `{}` (expected one of {} or `presets`)", cli.mode, names.join(", "));
    };
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    }
    let cfg = cli.settings(mode)?.resolve()?;
    let out = cfg.output_path.clone().unwrap_or_else(|| default_output(mode));
    emit(&run(&cfg, &out)?);
    Ok(())
}

/// Stdout may be a closed pipe; the CSV is already in place by then.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}
