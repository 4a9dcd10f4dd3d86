use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use uavdm::config::{Profile, RunConfig};
use uavdm::output::{self, Manifest, Provenance};
use uavdm::pipeline::{self, Method, RunReport, StageTiming};
use uavdm::sweep;

#[derive(Parser, Debug)]
#[command(name = "uavdm", version, about = "IRS-assisted UAV directional-modulation simulator")]
struct Cli {
    /// TOML configuration merged over the profile defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    profile: Option<ProfileArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProfileArg {
    Desk,
    Paper,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Desk => Profile::Desk,
            ProfileArg::Paper => Profile::Paper,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Axis {
    PMax,
    KUsers,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimum transmit power of every symbol at the start position.
    MinPower,
    /// UAV placement loop under the all-zero IRS configuration.
    Position,
    /// Full pipeline with one phase optimizer.
    Optimize {
        #[arg(value_parser = parse_method)]
        method: Method,
    },
    /// Ground beam-response map of an optimized design.
    Beammap {
        #[arg(long, default_value = "ce-vt", value_parser = parse_method)]
        method: Method,
    },
    /// BER of users and eavesdropper over the N0 grid.
    BerSweep {
        #[arg(long, default_value = "ce-vt", value_parser = parse_method)]
        method: Method,
        /// N0 values in mW (default: `evaluation.n0`).
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Sum rate against P_max (dBm) or the number of users.
    RateSweep {
        #[arg(long, value_enum, default_value = "p-max")]
        axis: Axis,
        /// Sweep values (default: `sweep.p_max_dbm` or `sweep.k_users`).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
        /// Comma-separated methods (default: `sweep.methods`).
        #[arg(long, value_delimiter = ',', value_parser = parse_method)]
        methods: Option<Vec<Method>>,
    },
    /// Rank of the eavesdropper and user channel stacks on random scenes.
    DofCheck {
        /// Scene count (default: `evaluation.dof_scenes`).
        #[arg(long)]
        scenes: Option<usize>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::MinPower => "min-power",
            Command::Position => "position",
            Command::Optimize { .. } => "optimize",
            Command::Beammap { .. } => "beammap",
            Command::BerSweep { .. } => "ber-sweep",
            Command::RateSweep { .. } => "rate-sweep",
            Command::DofCheck { .. } => "dof-check",
        }
    }
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: uavdm::Error| e.to_string())
}

fn load(cli: &Cli) -> Result<(RunConfig, u64)> {
    let profile = cli.profile.map(Profile::from);
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p, profile)?,
        None => RunConfig::from_toml_str("", profile)?,
    };
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    let seed = cfg.resolve_seed();
    Ok((cfg, seed))
}

struct Run<'a> {
    cfg: &'a RunConfig,
    prov: Provenance,
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Run<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn finish<R: serde::Serialize>(self, command: &str, timings: &[StageTiming], report: Option<&R>) -> Result<()> {
        let path = self.dir.join(format!("manifest-{command}.json"));
        let m = Manifest {
            provenance: &self.prov,
            command,
            config: self.cfg,
            artifacts: output::artifact_names(&self.dir, &self.written),
            timings,
            report,
        };
        output::write_manifest(&path, &m)?;
        println!("wrote {} files to {}", self.written.len() + 1, self.dir.display());
        Ok(())
    }
}

fn warn_infeasible(r: &RunReport) {
    if let Some(why) = &r.infeasibility {
        eprintln!("warning: {why}; weights rescaled to P_max");
    }
}

fn timed(stage: &str, t0: Instant) -> StageTiming {
    StageTiming {
        stage: stage.into(),
        seconds: t0.elapsed().as_secs_f64(),
    }
}

fn run_report(run: &mut Run<'_>, report: &RunReport, full: bool) -> Result<()> {
    let p = &run.prov.clone();
    if full {
        output::write_phase_config(&run.path("phase_config.json"), &report.phase_config)?;
        output::write_optimizer_trace(&run.path("optimizer_trace.csv"), p, &report.optimizer_trace)?;
        output::write_position_trace(&run.path("position_trace.csv"), p, &report.position_trace)?;
        output::write_weight_trace(&run.path("weight_trace.csv"), p, &report.weight_trace)?;
        output::write_rate(&run.path("rate.csv"), p, &report.rate)?;
        output::write_ber(&run.path("ber.csv"), p, &report.ber)?;
    }
    output::write_beammap(&run.path("beammap.csv"), p, &report.beammap)?;
    output::write_markers(&run.path("markers.csv"), p, &report.beammap)?;
    Ok(())
}

fn execute(cli: &Cli) -> Result<()> {
    let (cfg, seed) = load(cli)?;
    let prov = Provenance::new(&cfg, seed)?;
    let mut run = Run {
        cfg: &cfg,
        prov,
        dir: cfg.output_dir.clone(),
        written: Vec::new(),
    };
    let p = run.prov.clone();
    let name = cli.command.name();
    let t0 = Instant::now();
    match &cli.command {
        Command::MinPower => {
            let rows = pipeline::min_power(&cfg, seed)?;
            for r in &rows {
                println!("symbol {}: P_min = {:.3} dBm{}", r.b, r.p_min_dbm, if r.feasible { "" } else { " (exceeds P_max)" });
            }
            output::write_min_power(&run.path("min_power.csv"), &p, &rows)?;
            run.finish(name, &[timed("min-power", t0)], Some(&rows))
        }
        Command::Position => {
            let rows = pipeline::position_run(&cfg, seed)
                .context("placement loop failed (try a larger P_max)")?;
            let last = rows.last().expect("trace has the start row");
            println!("UAV at ({:.3}, {:.3}) after {} steps, P_min = {:.6e} mW", last.x_a, last.y_a, rows.len() - 1, last.p_min);
            output::write_position_trace(&run.path("position_trace.csv"), &p, &rows)?;
            run.finish(name, &[timed("position", t0)], Some(&rows))
        }
        Command::Optimize { method } | Command::Beammap { method } => {
            let full = matches!(cli.command, Command::Optimize { .. });
            let report = pipeline::run_pipeline(&cfg, seed, *method)?;
            warn_infeasible(&report);
            println!(
                "{}: sum rate {:.4} bits/s/Hz, UAV at ({:.3}, {:.3}), objective {:.6e}",
                method, report.rate.sum_rate, report.position.x, report.position.y, report.objective
            );
            run_report(&mut run, &report, full)?;
            let timings = report.timings.clone();
            run.finish(name, &timings, Some(&report))
        }
        Command::BerSweep { method, values } => {
            let n0 = values.clone().unwrap_or_else(|| cfg.evaluation.n0.clone());
            let rows = sweep::n0_sweep(&cfg, seed, *method, &n0)?;
            output::write_ber(&run.path("ber_sweep.csv"), &p, &rows)?;
            output::write_ber_detail(&run.path("ber_sweep_detail.csv"), &p, &rows)?;
            run.finish(name, &[timed("ber-sweep", t0)], Some(&rows))
        }
        Command::RateSweep { axis, values, methods } => {
            let methods = methods.clone().unwrap_or_else(|| cfg.sweep.methods.clone());
            let rows = match axis {
                Axis::PMax => {
                    let v = values.clone().unwrap_or_else(|| cfg.sweep.p_max_dbm.clone());
                    let rows = sweep::rate_sweep(&cfg, seed, &v, &methods);
                    output::write_rate_sweep(&run.path("rate_sweep.csv"), &p, &rows)?;
                    rows
                }
                Axis::KUsers => {
                    let k: Vec<usize> = match values {
                        Some(v) => v.iter().map(|&x| x as usize).collect(),
                        None => cfg.sweep.k_users.clone(),
                    };
                    let rows = sweep::k_sweep(&cfg, seed, &k, &methods);
                    output::write_k_sweep(&run.path("k_sweep.csv"), &p, &rows)?;
                    rows
                }
            };
            let failed = rows.iter().filter(|r| r.status.starts_with("error")).count();
            if failed > 0 {
                eprintln!("warning: {failed} sweep points failed; see the status column");
            }
            run.finish(name, &[timed("rate-sweep", t0)], Some(&rows))
        }
        Command::DofCheck { scenes } => {
            let n = scenes.unwrap_or(cfg.evaluation.dof_scenes);
            let rows = sweep::dof_scenes(&cfg, seed, n)?;
            let bad = rows.iter().filter(|r| !(r.eve_bound_ok && r.user_bound_ok)).count();
            println!("{} scenes, {} bound violations", rows.len(), bad);
            output::write_dof(&run.path("dof.csv"), &p, &rows)?;
            run.finish(name, &[timed("dof-check", t0)], Some(&rows))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
