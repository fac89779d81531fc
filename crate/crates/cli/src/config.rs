//! INI-style experiment configuration: `[section]` headers and
//! `key = value` lines, `#` or `;` comments, no nesting.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use footcast_core::costmap::CostmapConfig;
use footcast_core::feasibility::FeasibilityConfig;
use footcast_core::gait::GaitConfig;
use footcast_core::planner::MppiConfig;
use footcast_core::rng;
use footcast_core::terrain::{TerrainKind, TerrainSpec};
use footcast_core::train::{LossWeights, OptimizerKind, TrainConfig};

/// World geometry shared by every experiment stage.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub extent: (f64, f64),
    pub resolution: f64,
    /// x-range of the OOD terrain band in test worlds.
    pub band: (f64, f64),
    pub terrain_seed: u64,
    pub wavy_amplitude: f64,
    pub wavy_scale: f64,
    pub stepped_amplitude: f64,
    pub stepped_scale: f64,
    pub spiked_amplitude: f64,
    pub spiked_scale: f64,
    pub mixed_amplitude: f64,
    pub mixed_scale: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            extent: (8.0, 8.0),
            resolution: 0.05,
            band: (3.5, 5.0),
            terrain_seed: 11,
            wavy_amplitude: 0.10,
            wavy_scale: 0.8,
            stepped_amplitude: 0.12,
            stepped_scale: 0.5,
            spiked_amplitude: 0.22,
            spiked_scale: 0.4,
            mixed_amplitude: 0.12,
            mixed_scale: 0.3,
        }
    }
}

/// Data-collection and evaluation rollout settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectConfig {
    pub id_steps: usize,
    pub eval_steps: usize,
    pub dt: f64,
    pub id_cmd: (f64, f64, f64),
    pub ood_vx: (f64, f64),
    pub ood_omega: (f64, f64),
    pub hold_steps: usize,
    /// MC passes per ensemble member at evaluation time.
    pub m_eval: usize,
}

impl Default for CollectConfig {
    fn default() -> Self {
        CollectConfig {
            id_steps: 512,
            eval_steps: 160,
            dt: 0.1,
            id_cmd: (0.4, 0.0, 0.0),
            ood_vx: (0.1, 1.0),
            ood_omega: (-0.5, 0.5),
            hold_steps: 20,
            m_eval: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OodConfig {
    pub k_transitions: usize,
    pub runs: usize,
}

impl Default for OodConfig {
    fn default() -> Self {
        OodConfig { k_transitions: 1, runs: 3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanConfig {
    pub feasibility_runs: usize,
    pub progress_runs: usize,
    pub max_steps: usize,
    pub goal_radius: f64,
    pub lambda_sweep: [f64; 4],
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            feasibility_runs: 10,
            progress_runs: 20,
            max_steps: 180,
            goal_radius: 0.3,
            lambda_sweep: [0.0, 0.02, 0.05, 0.15],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub out_dir: String,
    pub seed: u64,
    pub world: WorldConfig,
    pub gait: GaitConfig,
    pub loss: LossWeights,
    pub train: TrainConfig,
    pub collect: CollectConfig,
    pub mppi: MppiConfig,
    pub costmap: CostmapConfig,
    pub feasibility: FeasibilityConfig,
    pub ood: OodConfig,
    pub plan: PlanConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut cfg = ExperimentConfig {
            out_dir: "out".into(),
            seed: 0,
            world: WorldConfig::default(),
            gait: GaitConfig::default(),
            loss: LossWeights::default(),
            train: TrainConfig::default(),
            collect: CollectConfig::default(),
            mppi: MppiConfig::default(),
            costmap: CostmapConfig::default(),
            feasibility: FeasibilityConfig::default(),
            ood: OodConfig::default(),
            plan: PlanConfig::default(),
        };
        cfg.gait.step_noise_slope_gain = 0.2;
        cfg.world.mixed_amplitude = 0.14;
        cfg.mppi.v_bounds = (0.25, 0.55);
        cfg.mppi.omega_max = 0.6;
        cfg.mppi.sigma = (0.1, 0.3);
        cfg.mppi.beta = 0.5;
        cfg.mppi.lambda_obs = 0.05;
        cfg.costmap.blob_radius = 0.15;
        cfg.mppi.lambda_rough = 0.005;
        cfg.derive_seeds();
        cfg
    }
}

impl ExperimentConfig {
    /// All stochastic subsystems key off the single experiment seed.
    pub fn derive_seeds(&mut self) {
        self.gait.seed = rng::key(&[self.seed, 0x6A17]);
        self.train.seed = rng::key(&[self.seed, 0x7217]);
        self.mppi.seed = rng::key(&[self.seed, 0x3771]);
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.derive_seeds();
    }

    pub fn validate(&self) -> Result<()> {
        self.gait.validate().map_err(anyhow::Error::msg)?;
        self.loss.validate().map_err(anyhow::Error::msg)?;
        self.train.validate().map_err(anyhow::Error::msg)?;
        let mut mppi = self.mppi.clone();
        mppi.lambda_obs = 0.0;
        mppi.lambda_rough = 0.0;
        mppi.lambda_unc = 1.0;
        mppi.validate().map_err(anyhow::Error::msg)?;
        self.costmap.validate().map_err(anyhow::Error::msg)?;
        if !(self.world.band.1 > self.world.band.0) {
            bail!("config error: world band must satisfy x1 > x0");
        }
        if self.collect.m_eval * self.train.members < 2 {
            bail!("config error: m_eval * members must be >= 2");
        }
        if self.ood.runs < 1 || self.plan.feasibility_runs < 1 || self.plan.progress_runs < 1 {
            bail!("config error: run counts must be >= 1");
        }
        Ok(())
    }

    /// Terrain spec for one of the procedural kinds at this world size.
    pub fn terrain_spec(&self, kind: TerrainKind) -> TerrainSpec {
        let w = &self.world;
        let (amplitude, feature_scale) = match kind {
            TerrainKind::Flat | TerrainKind::Ramp => (0.0, 0.5),
            TerrainKind::Wavy => (w.wavy_amplitude, w.wavy_scale),
            TerrainKind::Stepped => (w.stepped_amplitude, w.stepped_scale),
            TerrainKind::Spiked => (w.spiked_amplitude, w.spiked_scale),
            TerrainKind::Mixed => (w.mixed_amplitude, w.mixed_scale),
        };
        TerrainSpec {
            kind,
            seed: w.terrain_seed,
            amplitude,
            feature_scale,
            extent: w.extent,
            resolution: w.resolution,
        }
    }
}

fn parse_sections(text: &str) -> Result<BTreeMap<String, BTreeMap<String, String>>> {
    let mut out: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    let mut section = String::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            out.entry(section.clone()).or_default();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config error: line {}: expected 'key = value', got '{line}'", ln + 1);
        };
        if section.is_empty() {
            bail!("config error: line {}: key '{}' outside any [section]", ln + 1, key.trim());
        }
        let prev = out
            .get_mut(&section)
            .unwrap()
            .insert(key.trim().to_string(), value.trim().to_string());
        if prev.is_some() {
            bail!("config error: duplicate key '{}' in [{section}]", key.trim());
        }
    }
    Ok(out)
}

struct Section<'a> {
    name: &'a str,
    entries: BTreeMap<String, String>,
}

impl<'a> Section<'a> {
    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn f64(&mut self, key: &str, slot: &mut f64) -> Result<()> {
        if let Some(v) = self.take(key) {
            *slot = v
                .parse()
                .with_context(|| format!("config error: [{}] {key} = '{v}' is not a number", self.name))?;
        }
        Ok(())
    }

    fn usize(&mut self, key: &str, slot: &mut usize) -> Result<()> {
        if let Some(v) = self.take(key) {
            *slot = v
                .parse()
                .with_context(|| format!("config error: [{}] {key} = '{v}' is not an integer", self.name))?;
        }
        Ok(())
    }

    fn u64(&mut self, key: &str, slot: &mut u64) -> Result<()> {
        if let Some(v) = self.take(key) {
            *slot = v
                .parse()
                .with_context(|| format!("config error: [{}] {key} = '{v}' is not an integer", self.name))?;
        }
        Ok(())
    }

    fn finish(self) -> Result<()> {
        if let Some(key) = self.entries.keys().next() {
            bail!("config error: unknown key '{key}' in [{}]", self.name);
        }
        Ok(())
    }
}

/// Parse the config text over the built-in defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut sections = parse_sections(text)?;
    let mut cfg = ExperimentConfig::default();
    let mut grab = |name: &'static str| Section {
        name,
        entries: sections.remove(name).unwrap_or_default(),
    };

    let mut s = grab("experiment");
    if let Some(v) = s.take("out_dir") {
        cfg.out_dir = v;
    }
    s.u64("seed", &mut cfg.seed)?;
    s.finish()?;

    let mut s = grab("world");
    s.f64("extent_x", &mut cfg.world.extent.0)?;
    s.f64("extent_y", &mut cfg.world.extent.1)?;
    s.f64("resolution", &mut cfg.world.resolution)?;
    s.f64("band_x0", &mut cfg.world.band.0)?;
    s.f64("band_x1", &mut cfg.world.band.1)?;
    s.u64("terrain_seed", &mut cfg.world.terrain_seed)?;
    s.f64("wavy_amplitude", &mut cfg.world.wavy_amplitude)?;
    s.f64("wavy_scale", &mut cfg.world.wavy_scale)?;
    s.f64("stepped_amplitude", &mut cfg.world.stepped_amplitude)?;
    s.f64("stepped_scale", &mut cfg.world.stepped_scale)?;
    s.f64("spiked_amplitude", &mut cfg.world.spiked_amplitude)?;
    s.f64("spiked_scale", &mut cfg.world.spiked_scale)?;
    s.f64("mixed_amplitude", &mut cfg.world.mixed_amplitude)?;
    s.f64("mixed_scale", &mut cfg.world.mixed_scale)?;
    s.finish()?;

    let mut s = grab("gait");
    s.f64("cycle_period", &mut cfg.gait.cycle_period)?;
    s.f64("duty_factor", &mut cfg.gait.duty_factor)?;
    s.f64("step_noise_flat", &mut cfg.gait.step_noise_flat)?;
    s.f64("step_noise_slope_gain", &mut cfg.gait.step_noise_slope_gain)?;
    s.finish()?;

    let mut s = grab("loss");
    s.f64("w_pose", &mut cfg.loss.w_pose)?;
    s.f64("w_epi", &mut cfg.loss.w_epi)?;
    s.f64("w_cal", &mut cfg.loss.w_cal)?;
    s.f64("lambda", &mut cfg.loss.lambda)?;
    s.f64("s_min", &mut cfg.loss.s_min)?;
    s.f64("s_max", &mut cfg.loss.s_max)?;
    s.f64("eps_band", &mut cfg.loss.eps_band)?;
    s.finish()?;

    let mut s = grab("train");
    s.usize("epochs", &mut cfg.train.epochs)?;
    s.usize("batch_size", &mut cfg.train.batch_size)?;
    s.f64("learning_rate", &mut cfg.train.learning_rate)?;
    s.usize("m_train", &mut cfg.train.m_train)?;
    s.usize("members", &mut cfg.train.members)?;
    if let Some(v) = s.take("optimizer") {
        cfg.train.optimizer = match v.as_str() {
            "adam" => OptimizerKind::Adam,
            "sgd" => OptimizerKind::SgdMomentum,
            other => bail!("config error: [train] optimizer must be adam or sgd, got '{other}'"),
        };
    }
    s.finish()?;

    let mut s = grab("collect");
    s.usize("id_steps", &mut cfg.collect.id_steps)?;
    s.usize("eval_steps", &mut cfg.collect.eval_steps)?;
    s.f64("dt", &mut cfg.collect.dt)?;
    s.f64("id_vx", &mut cfg.collect.id_cmd.0)?;
    s.f64("id_vy", &mut cfg.collect.id_cmd.1)?;
    s.f64("id_omega", &mut cfg.collect.id_cmd.2)?;
    s.f64("ood_vx_min", &mut cfg.collect.ood_vx.0)?;
    s.f64("ood_vx_max", &mut cfg.collect.ood_vx.1)?;
    s.f64("ood_omega_min", &mut cfg.collect.ood_omega.0)?;
    s.f64("ood_omega_max", &mut cfg.collect.ood_omega.1)?;
    s.usize("hold_steps", &mut cfg.collect.hold_steps)?;
    s.usize("m_eval", &mut cfg.collect.m_eval)?;
    s.finish()?;

    let mut s = grab("mppi");
    s.usize("k_samples", &mut cfg.mppi.k_samples)?;
    s.usize("horizon", &mut cfg.mppi.horizon)?;
    s.f64("dt", &mut cfg.mppi.dt)?;
    s.f64("sigma_v", &mut cfg.mppi.sigma.0)?;
    s.f64("sigma_omega", &mut cfg.mppi.sigma.1)?;
    s.f64("beta", &mut cfg.mppi.beta)?;
    s.f64("lambda_goal", &mut cfg.mppi.lambda_goal)?;
    s.f64("lambda_obs", &mut cfg.mppi.lambda_obs)?;
    s.f64("lambda_rough", &mut cfg.mppi.lambda_rough)?;
    s.f64("lambda_unc", &mut cfg.mppi.lambda_unc)?;
    s.f64("lambda_ctrl", &mut cfg.mppi.lambda_ctrl)?;
    s.f64("v_min", &mut cfg.mppi.v_bounds.0)?;
    s.f64("v_max", &mut cfg.mppi.v_bounds.1)?;
    s.f64("omega_max", &mut cfg.mppi.omega_max)?;
    s.finish()?;

    let mut s = grab("costmap");
    s.f64("alpha", &mut cfg.costmap.alpha)?;
    s.f64("blob_radius", &mut cfg.costmap.blob_radius)?;
    s.f64("obstacle_height_threshold", &mut cfg.costmap.obstacle_height_threshold)?;
    s.f64("roughness_scale", &mut cfg.costmap.roughness_scale)?;
    s.finish()?;

    let mut s = grab("feasibility");
    s.f64("epsilon", &mut cfg.feasibility.epsilon)?;
    s.finish()?;

    let mut s = grab("ood");
    s.usize("k_transitions", &mut cfg.ood.k_transitions)?;
    s.usize("runs", &mut cfg.ood.runs)?;
    s.finish()?;

    let mut s = grab("plan");
    s.usize("feasibility_runs", &mut cfg.plan.feasibility_runs)?;
    s.usize("progress_runs", &mut cfg.plan.progress_runs)?;
    s.usize("max_steps", &mut cfg.plan.max_steps)?;
    s.f64("goal_radius", &mut cfg.plan.goal_radius)?;
    s.f64("lambda_sweep_0", &mut cfg.plan.lambda_sweep[0])?;
    s.f64("lambda_sweep_1", &mut cfg.plan.lambda_sweep[1])?;
    s.f64("lambda_sweep_2", &mut cfg.plan.lambda_sweep[2])?;
    s.f64("lambda_sweep_3", &mut cfg.plan.lambda_sweep[3])?;
    s.finish()?;

    if let Some(name) = sections.keys().next() {
        bail!("config error: unknown section [{name}]");
    }
    cfg.derive_seeds();
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("config error: cannot read {}", path.display()))?;
    parse_config(&text)
}
