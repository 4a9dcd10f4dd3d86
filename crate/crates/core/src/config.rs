//! Run configuration: TOML file merged over a named profile.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, IrsUserLoss};
use crate::design::{DesignParams, ObjectiveSymbols};
use crate::error::{Error, Result};
use crate::eval::beammap::{dbm_to_mw, GridSpec};
use crate::geometry::{AngleBox, Cartesian, Panel, Scene, Ula};
use crate::phase::bcd::BcdOptions;
use crate::phase::ce::CeOptions;
use crate::phase::hybrid::HybridMode;
use crate::phase::vt::VtFallback;
use crate::phase::PhaseCodebook;
use crate::pipeline::Method;
use crate::position::PositionOptions;
use crate::precoding::ConstellationSpec;
use crate::weights::WeightOptions;

/// Independent random streams drawn from the run seed.
pub mod stream {
    pub const EVE_PHASES: u64 = 1;
    pub const UAV_START: u64 = 2;
    pub const CE: u64 = 3;
    pub const BER: u64 = 4;
    pub const DOF: u64 = 5;
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Desk,
    Paper,
}

impl std::str::FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            _ => Err(Error::Config(format!("unknown profile `{s}` (expected desk or paper)"))),
        }
    }
}

impl std::fmt::Display for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        })
    }
}

/// Ground positions are `[x, y]` at ground level; angles in degrees; lengths in metres,
/// spacings in wavelengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub irs_origin: [f64; 3],
    pub irs_height: f64,
    pub uav_height: f64,
    /// Initial UAV `[x, y]`; drawn uniformly over the angle box when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uav_start: Option<[f64; 2]>,
    pub users: Vec<[f64; 2]>,
    pub eve: [f64; 2],
    pub n: usize,
    pub m_y: usize,
    pub m_z: usize,
    pub wavelength: f64,
    pub antenna_spacing: f64,
    pub element_spacing: f64,
    pub theta_min_deg: f64,
    pub theta_max_deg: f64,
    pub phi_min_deg: f64,
    pub phi_max_deg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub rho: f64,
    pub eps_ar: f64,
    pub eps_rg: f64,
    pub eps_ag: f64,
    pub noise_dbm: f64,
    pub irs_user_loss: IrsUserLoss,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationConfig {
    pub order: usize,
    pub gamma: f64,
    pub r_min_dbm: f64,
    /// Eavesdropper target amplitude in sqrt(mW).
    pub eve_amplitude: f64,
    /// Eavesdropper phases per symbol; drawn from the seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eve_phases: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerConfig {
    pub p_max_dbm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodebookConfig {
    pub bits: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub ce: CeOptions,
    pub bcd: BcdOptions,
    pub vt_fallback: VtFallback,
    pub hybrid_mode: HybridMode,
    pub position: PositionOptions,
    pub weights: WeightOptions,
    pub refine_weights: bool,
    pub objective_symbols: ObjectiveSymbols,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    pub ber_trials: usize,
    /// N0 grid of the BER sweep, mW.
    pub n0: Vec<f64>,
    pub eve_antennas: usize,
    pub dof_scenes: usize,
    pub beammap: GridSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub p_max_dbm: Vec<f64>,
    pub k_users: Vec<usize>,
    pub methods: Vec<Method>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub profile: Profile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    pub scene: SceneConfig,
    pub channel: ChannelConfig,
    pub constellation: ConstellationConfig,
    pub power: PowerConfig,
    pub codebook: CodebookConfig,
    pub optimizer: OptimizerConfig,
    pub evaluation: EvaluationConfig,
    pub sweep: SweepConfig,
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}

impl RunConfig {
    pub fn defaults(profile: Profile) -> Self {
        let (n, side) = match profile {
            Profile::Desk => (8, 6),
            Profile::Paper => (24, 24),
        };
        RunConfig {
            profile,
            seed: None,
            output_dir: PathBuf::from("out"),
            scene: SceneConfig {
                irs_origin: [0.0, 0.0, 0.0],
                irs_height: 1.0,
                uav_height: 100.0,
                uav_start: None,
                users: vec![[10.0, 15.0], [20.0, 10.0], [15.0, 20.0]],
                eve: [10.0, 20.0],
                n,
                m_y: side,
                m_z: side,
                wavelength: 0.006,
                antenna_spacing: 0.5,
                element_spacing: 0.5,
                theta_min_deg: 100.0,
                theta_max_deg: 150.0,
                phi_min_deg: 0.0,
                phi_max_deg: 90.0,
            },
            channel: ChannelConfig {
                rho: 1e-3,
                eps_ar: 0.9,
                eps_rg: 0.9,
                eps_ag: 0.9,
                noise_dbm: -110.0,
                irs_user_loss: IrsUserLoss::Printed,
            },
            constellation: ConstellationConfig {
                order: 4,
                gamma: 0.05,
                r_min_dbm: -80.0,
                eve_amplitude: 0.0,
                eve_phases: None,
            },
            power: PowerConfig { p_max_dbm: 30.0 },
            codebook: CodebookConfig { bits: 2 },
            optimizer: OptimizerConfig {
                ce: CeOptions::default(),
                bcd: BcdOptions::default(),
                vt_fallback: VtFallback::SumGain,
                hybrid_mode: HybridMode::FixedWeights,
                position: PositionOptions::default(),
                weights: WeightOptions::default(),
                refine_weights: true,
                objective_symbols: ObjectiveSymbols::First,
            },
            evaluation: EvaluationConfig {
                ber_trials: 100_000,
                n0: log_grid(1e-6, 1e-3, 10),
                eve_antennas: 4,
                dof_scenes: 100,
                beammap: GridSpec::default(),
            },
            sweep: SweepConfig {
                p_max_dbm: vec![-20.0, -10.0, 0.0, 10.0, 20.0, 30.0, 40.0],
                k_users: vec![1, 2, 3],
                methods: vec![Method::Vt, Method::Ce, Method::Bcd, Method::CeVt, Method::BcdVt],
            },
        }
    }

    /// Parses TOML text over the defaults of `profile` (or of the file's own `profile` key).
    pub fn from_toml_str(text: &str, profile: Option<Profile>) -> Result<Self> {
        let user: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(format!("parse error: {e}")))?;
        let file_profile = match user.get("profile") {
            Some(toml::Value::String(s)) => Some(s.parse::<Profile>()?),
            Some(_) => return Err(Error::Config("`profile` must be a string".into())),
            None => None,
        };
        let profile = profile.or(file_profile).unwrap_or(Profile::Desk);
        let base = toml::Value::try_from(Self::defaults(profile))
            .map_err(|e| Error::Config(format!("default serialisation failed: {e}")))?;
        let mut merged = base;
        merge(&mut merged, toml::Value::Table(user), "")?;
        if let toml::Value::Table(t) = &mut merged {
            t.insert("profile".into(), toml::Value::String(profile.to_string()));
        }
        let cfg: RunConfig = merged
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, profile: Option<Profile>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, profile).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.scene()?.validate()?;
        let c = &self.constellation;
        if !(c.gamma > 0.0 && c.gamma < 1.0) {
            return Err(Error::Config(format!("constellation.gamma must lie in (0, 1), got {}", c.gamma)));
        }
        if c.order < 2 || !c.order.is_power_of_two() {
            return Err(Error::Config("constellation.order must be a power of two >= 2".into()));
        }
        if let Some(p) = &c.eve_phases {
            if p.len() != c.order {
                return Err(Error::Config("constellation.eve_phases needs one entry per symbol".into()));
            }
        }
        if self.codebook.bits == 0 || self.codebook.bits > 16 {
            return Err(Error::Config("codebook.bits must lie in 1..=16".into()));
        }
        let ch = &self.channel;
        for (name, e) in [("eps_ar", ch.eps_ar), ("eps_rg", ch.eps_rg), ("eps_ag", ch.eps_ag)] {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::Config(format!("channel.{name} must lie in [0, 1]")));
            }
        }
        if !(ch.rho > 0.0) {
            return Err(Error::Config("channel.rho must be positive".into()));
        }
        let ce = &self.optimizer.ce;
        if ce.elites == 0 || ce.elites > ce.samples || ce.max_iter < 3 {
            return Err(Error::Config("optimizer.ce needs 1 <= elites <= samples and max_iter >= 3".into()));
        }
        if self.evaluation.ber_trials < 10_000 {
            return Err(Error::Config("evaluation.ber_trials must be at least 1e4".into()));
        }
        if self.evaluation.n0.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Config("evaluation.n0 entries must be positive".into()));
        }
        self.evaluation.beammap.validate()?;
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        self.scene.wavelength
    }

    /// Scene with the UAV at `uav_start`, or at the origin of the IRS column when unset
    /// (callers draw the start with [`RunConfig::initial_scene`]).
    pub fn scene(&self) -> Result<Scene> {
        let s = &self.scene;
        let lam = self.wavelength();
        let irs = Cartesian::new(s.irs_origin[0], s.irs_origin[1], s.irs_origin[2]);
        let ground = irs.z - s.irs_height;
        let mut scene = Scene {
            uav: Cartesian::new(0.0, 0.0, 0.0),
            irs_origin: irs,
            users: s.users.iter().map(|p| Cartesian::new(p[0], p[1], ground)).collect(),
            eve: Cartesian::new(s.eve[0], s.eve[1], ground),
            uav_height: s.uav_height,
            irs_height: s.irs_height,
            panel: Panel {
                m_y: s.m_y,
                m_z: s.m_z,
                spacing: s.element_spacing * lam,
            },
            ula: Ula {
                n: s.n,
                spacing: s.antenna_spacing * lam,
            },
            wavelength: lam,
            angle_box: AngleBox {
                theta_min: s.theta_min_deg.to_radians(),
                theta_max: s.theta_max_deg.to_radians(),
                phi_min: s.phi_min_deg.to_radians(),
                phi_max: s.phi_max_deg.to_radians(),
            },
        };
        scene.uav = match s.uav_start {
            Some([x, y]) => scene.uav_at(x, y),
            None => scene.uav_from_box_angles(
                0.5 * (scene.angle_box.theta_min + scene.angle_box.theta_max),
                0.5 * (scene.angle_box.phi_min + scene.angle_box.phi_max),
            ),
        };
        Ok(scene)
    }

    /// Scene with the UAV start resolved: the configured point, or a seeded uniform draw
    /// over the angle box.
    pub fn initial_scene(&self, seed: u64) -> Result<Scene> {
        let mut scene = self.scene()?;
        if self.scene.uav_start.is_none() {
            let mut rng = rng_for(seed, stream::UAV_START);
            let b = scene.angle_box;
            let t = rng.random_range(b.theta_min..=b.theta_max);
            let p = rng.random_range(b.phi_min..=b.phi_max);
            scene.uav = scene.uav_from_box_angles(t, p);
        }
        Ok(scene)
    }

    pub fn design_params(&self, seed: u64) -> Result<DesignParams> {
        let c = &self.constellation;
        let eve_phases = match &c.eve_phases {
            Some(p) => p.clone(),
            None => {
                let mut rng = rng_for(seed, stream::EVE_PHASES);
                (0..c.order).map(|_| rng.random::<f64>() * TAU).collect()
            }
        };
        let ch = &self.channel;
        Ok(DesignParams {
            channel: ChannelParams {
                rho: ch.rho,
                eps_ar: ch.eps_ar,
                eps_rg: ch.eps_rg,
                eps_ag: ch.eps_ag,
                noise_power: dbm_to_mw(ch.noise_dbm),
                irs_user_loss: ch.irs_user_loss,
            },
            constellation: ConstellationSpec::new(c.order, c.eve_amplitude, eve_phases)?,
            r_min: dbm_to_mw(c.r_min_dbm).sqrt(),
            gamma: c.gamma,
            p_max: dbm_to_mw(self.power.p_max_dbm),
            position: self.optimizer.position,
            weights: self.optimizer.weights,
            refine_weights: self.optimizer.refine_weights,
            objective_symbols: self.optimizer.objective_symbols,
        })
    }

    pub fn codebook(&self) -> Result<PhaseCodebook> {
        PhaseCodebook::new(self.codebook.bits)
    }

    /// The configured seed, or a fresh one from the operating system.
    pub fn resolve_seed(&mut self) -> u64 {
        *self.seed.get_or_insert_with(|| rand::rng().random())
    }
}

fn merge(base: &mut toml::Value, over: toml::Value, path: &str) -> Result<()> {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get_mut(&k) {
                    Some(slot) if slot.is_table() && v.is_table() => merge(slot, v, &p)?,
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
            Ok(())
        }
        (b, o) => {
            *b = o;
            Ok(())
        }
    }
}
