//! Artifact writers. Every CSV opens with `#`-prefixed provenance lines.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::Result;
use crate::eval::beammap::BeamMap;
use crate::eval::dof::DofReport;
use crate::eval::rate::RateReport;
use crate::phase::ce::OptimizerTraceRow;
use crate::phase::PhaseConfig;
use crate::pipeline::{BerRow, MinPowerRow, StageTiming};
use crate::position::PositionTraceRow;
use crate::sweep::SweepRow;
use crate::weights::WeightTraceRow;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 of the canonical JSON of the resolved config, output directory excluded.
pub fn config_hash(cfg: &RunConfig) -> Result<String> {
    let mut v = serde_json::to_value(cfg)?;
    if let Some(m) = v.as_object_mut() {
        m.remove("output_dir");
    }
    let text = serde_json::to_string(&v)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub profile: String,
}

impl Provenance {
    pub fn new(cfg: &RunConfig, seed: u64) -> Result<Self> {
        Ok(Self {
            version: VERSION.to_string(),
            config_hash: config_hash(cfg)?,
            seed,
            profile: cfg.profile.to_string(),
        })
    }

    fn header(&self) -> String {
        format!(
            "# uavdm {}\n# config_hash {}\n# seed {}\n# profile {}\n",
            self.version, self.config_hash, self.seed, self.profile
        )
    }
}

/// Writes `header` then one record per row, after the provenance block.
pub fn write_table<T, I>(path: &Path, prov: &Provenance, header: &[&str], rows: I) -> Result<()>
where
    T: Serialize,
    I: IntoIterator<Item = T>,
{
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(prov.header().as_bytes())?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(f);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rate_sweep(path: &Path, prov: &Provenance, rows: &[SweepRow]) -> Result<()> {
    let it = rows.iter().map(|r| (r.value, r.method.name(), r.sum_rate, &r.status));
    write_table(path, prov, &["P_max_dBm", "method", "sum_rate", "status"], it)
}

pub fn write_k_sweep(path: &Path, prov: &Provenance, rows: &[SweepRow]) -> Result<()> {
    let it = rows.iter().map(|r| (r.value as usize, r.method.name(), r.sum_rate, &r.status));
    write_table(path, prov, &["K_u", "method", "sum_rate", "status"], it)
}

pub fn write_ber(path: &Path, prov: &Provenance, rows: &[BerRow]) -> Result<()> {
    let it = rows.iter().map(|r| (r.n0, &r.receiver, r.ber, r.ci_halfwidth));
    write_table(path, prov, &["N0", "receiver", "ber", "ci_halfwidth"], it)
}

/// Closed-form and reference curves next to the Monte Carlo estimate.
pub fn write_ber_detail(path: &Path, prov: &Provenance, rows: &[BerRow]) -> Result<()> {
    let it = rows.iter().map(|r| (r.n0, &r.receiver, r.ber, r.ci_halfwidth, r.trials, r.analytic, r.qpsk_reference));
    write_table(
        path,
        prov,
        &["N0", "receiver", "ber", "ci_halfwidth", "trials", "analytic", "qpsk_reference"],
        it,
    )
}

pub fn write_beammap(path: &Path, prov: &Provenance, map: &BeamMap) -> Result<()> {
    let it = map.cells.iter().map(|c| (c.x, c.y, c.power_dbm));
    write_table(path, prov, &["x", "y", "power_dbm"], it)
}

pub fn write_markers(path: &Path, prov: &Provenance, map: &BeamMap) -> Result<()> {
    let it = map.markers.iter().map(|m| (&m.label, m.x, m.y, m.power_dbm, m.cell_power_dbm, m.inside));
    write_table(path, prov, &["label", "x", "y", "power_dbm", "cell_power_dbm", "inside"], it)
}

pub fn write_position_trace(path: &Path, prov: &Provenance, rows: &[PositionTraceRow]) -> Result<()> {
    let it = rows.iter().map(|r| (r.iter, r.x_a, r.y_a, r.j2, r.p_min));
    write_table(path, prov, &["iter", "x_A", "y_A", "J2", "P_min"], it)
}

pub fn write_weight_trace(path: &Path, prov: &Provenance, rows: &[WeightTraceRow]) -> Result<()> {
    let it = rows.iter().map(|r| (r.iter, r.xi, r.sum_t, r.w_norm_sq));
    write_table(path, prov, &["iter", "xi", "sum_t", "w_norm_sq"], it)
}

pub fn write_optimizer_trace(path: &Path, prov: &Provenance, rows: &[OptimizerTraceRow]) -> Result<()> {
    let it = rows.iter().map(|r| (r.iter, r.objective, r.best_so_far));
    write_table(path, prov, &["iter", "objective", "best_so_far"], it)
}

pub fn write_rate(path: &Path, prov: &Provenance, rate: &RateReport) -> Result<()> {
    let it = rate.snr.iter().zip(&rate.rate).enumerate().map(|(k, (s, r))| (format!("user{k}"), s, r));
    write_table(path, prov, &["receiver", "snr", "rate"], it)
}

pub fn write_min_power(path: &Path, prov: &Provenance, rows: &[MinPowerRow]) -> Result<()> {
    let it = rows.iter().map(|r| (r.b, r.p_min_mw, r.p_min_dbm, r.feasible));
    write_table(path, prov, &["b", "P_min_mW", "P_min_dBm", "feasible"], it)
}

pub fn write_dof(path: &Path, prov: &Provenance, rows: &[DofReport]) -> Result<()> {
    let it = rows.iter().enumerate().map(|(s, r)| {
        (
            s,
            r.eve_antennas,
            r.eve_rank,
            r.eve_cascade_rank,
            r.eve_direct_rank,
            r.k_users,
            r.user_rank,
            r.user_cascade_rank,
            r.eve_bound_ok,
            r.user_bound_ok,
        )
    });
    write_table(
        path,
        prov,
        &[
            "scene",
            "eve_antennas",
            "eve_rank",
            "eve_cascade_rank",
            "eve_direct_rank",
            "K_u",
            "user_rank",
            "user_cascade_rank",
            "eve_bound_ok",
            "user_bound_ok",
        ],
        it,
    )
}

/// Codebook indices as a JSON array.
pub fn write_phase_config(path: &Path, cfg: &PhaseConfig) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut f, cfg)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, R: Serialize> {
    #[serde(flatten)]
    pub provenance: &'a Provenance,
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub artifacts: Vec<String>,
    pub timings: &'a [StageTiming],
    pub report: Option<&'a R>,
}

pub fn write_manifest<R: Serialize>(path: &Path, manifest: &Manifest<'_, R>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, manifest)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// File names relative to `dir`, for the manifest.
pub fn artifact_names(dir: &Path, paths: &[PathBuf]) -> Vec<String> {
    paths
        .iter()
        .map(|p| p.strip_prefix(dir).unwrap_or(p).display().to_string())
        .collect()
}
