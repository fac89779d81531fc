//! Shared experiment plumbing: world construction, evaluation rollouts,
//! planning episodes, and the small statistics the tables need.

use anyhow::{anyhow, Result};
use footcast_core::gait::{self, GaitConfig, RobotState};
use footcast_core::net::{predict, MainInput, NetworkWeights, UncInput};
use footcast_core::planner::{run_episode, EpisodeLog, EpisodeSetup, Formulation, MppiConfig};
use footcast_core::rng::{self, Stream};
use footcast_core::terrain::{
    extract_height_scan, generate_terrain, heightscan_variance, pool_grid, HeightField, TerrainKind,
};
use footcast_core::train::{foothold_error, CmdDistribution, TrainingSample};
use footcast_core::Error;

use crate::config::ExperimentConfig;

/// Flat training world.
pub fn train_world(cfg: &ExperimentConfig) -> Result<HeightField> {
    generate_terrain(&cfg.terrain_spec(TerrainKind::Flat)).map_err(|e| anyhow!("{e}"))
}

/// Mixed-terrain planning world.
pub fn mixed_world(cfg: &ExperimentConfig) -> Result<HeightField> {
    let inner = generate_terrain(&cfg.terrain_spec(TerrainKind::Mixed)).map_err(|e| anyhow!("{e}"))?;
    Ok(with_flat_apron(&inner, 1.0))
}

/// Embed `inner` in a larger field with a flat border of `apron` metres on
/// every side, keeping the inner terrain's coordinates. Episodes that
/// overshoot a goal can then turn around instead of running off the map.
fn with_flat_apron(inner: &HeightField, apron: f64) -> HeightField {
    let pad = (apron / inner.resolution).round() as usize;
    let width = inner.width_cells + 2 * pad;
    let height = inner.height_cells + 2 * pad;
    let origin = (
        inner.origin_xy.0 - pad as f64 * inner.resolution,
        inner.origin_xy.1 - pad as f64 * inner.resolution,
    );
    let mut elevations = vec![0.0; width * height];
    for iy in 0..inner.height_cells {
        let src = iy * inner.width_cells;
        let dst = (iy + pad) * width + pad;
        elevations[dst..dst + inner.width_cells]
            .copy_from_slice(&inner.elevations[src..src + inner.width_cells]);
    }
    HeightField {
        width_cells: width,
        height_cells: height,
        resolution: inner.resolution,
        origin_xy: origin,
        elevations,
    }
}

/// Test world: flat arena with a band of the given terrain kind across
/// `world.band`, tapered over 0.2 m at the edges so the onset is a
/// terrain change rather than a wall.
pub fn band_world(cfg: &ExperimentConfig, kind: TerrainKind) -> Result<HeightField> {
    let flat = train_world(cfg)?;
    let rough = generate_terrain(&cfg.terrain_spec(kind)).map_err(|e| anyhow!("{e}"))?;
    let (x0, x1) = cfg.world.band;
    let taper = 0.2;
    let mut elevations = flat.elevations.clone();
    for iy in 0..flat.height_cells {
        for ix in 0..flat.width_cells {
            let x = flat.origin_xy.0 + ix as f64 * flat.resolution;
            let w = if x < x0 || x > x1 {
                0.0
            } else {
                let lead = ((x - x0) / taper).min(1.0);
                let tail = ((x1 - x) / taper).min(1.0);
                lead.min(tail)
            };
            if w > 0.0 {
                elevations[iy * flat.width_cells + ix] = w * rough.elevations[iy * flat.width_cells + ix];
            }
        }
    }
    HeightField::new(flat.width_cells, flat.height_cells, flat.resolution, flat.origin_xy, elevations)
        .map_err(|e| anyhow!("{e}"))
}

/// Start poses for the numbered evaluation runs: spread across the arena
/// y-extent, heading +x.
pub fn run_start(cfg: &ExperimentConfig, run: usize) -> RobotState {
    let n = cfg.ood.runs.max(1) as f64;
    let y = cfg.world.extent.1 * (0.3 + 0.4 * run as f64 / (n - 1.0).max(1.0));
    RobotState::new(1.0, y, 0.0)
}

pub fn ood_cmd_distribution(cfg: &ExperimentConfig) -> CmdDistribution {
    CmdDistribution::Uniform {
        vx: cfg.collect.ood_vx,
        vy: (0.0, 0.0),
        omega: cfg.collect.ood_omega,
        hold_steps: cfg.collect.hold_steps,
    }
}

/// One evaluated trajectory step: both uncertainty signals plus the
/// realized foothold error.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub t: f64,
    pub s_bar: f64,
    pub var_h: f64,
    pub error: f64,
}

/// Roll a commanded trajectory and evaluate the ensemble at every step.
/// `zero_cmd` feeds zeros for the velocity entries of the uncertainty
/// branch input, matching the terrain-only ablation's training regime.
#[allow(clippy::too_many_arguments)]
pub fn eval_rollout(
    field: &HeightField,
    ensemble: &[NetworkWeights],
    gait_cfg: &GaitConfig,
    dist: &CmdDistribution,
    n_steps: usize,
    dt: f64,
    m_eval: usize,
    seed: u64,
    start: RobotState,
    zero_cmd: bool,
) -> Result<Vec<EvalRow>> {
    let mut state = start;
    let mut rows = Vec::with_capacity(n_steps);
    for t in 0..n_steps {
        let cmd = dist.sample(seed, t);
        let scan = match extract_height_scan(field, (state.x, state.y, state.psi)) {
            Ok(s) => s,
            Err(Error::OutOfBounds(_)) => break,
            Err(e) => return Err(anyhow!("{e}")),
        };
        let pooled = pool_grid(&scan);
        let x_in = MainInput::assemble(&scan.values, cmd, state.gait_phase);
        let u_cmd = if zero_cmd { (0.0, 0.0, 0.0) } else { cmd };
        let u_in = UncInput::assemble(u_cmd, &pooled.values);
        let pred = predict(ensemble, &x_in, &u_in, m_eval, rng::key(&[seed, 0xE7A1, t as u64]))
            .map_err(|e| anyhow!("{e}"))?;
        let label = (|| -> footcast_core::Result<[f64; 12]> {
            let nominal = gait::nominal_footholds(&state, cmd, field, gait_cfg)?;
            let world = gait::to_world(&state, &nominal);
            let actual = gait::actual_footholds(&world, field, gait_cfg, rng::key(&[seed, 0xAC7, t as u64]))?;
            Ok(gait::to_base(&state, &actual).flat())
        })();
        let label = match label {
            Ok(l) => l,
            Err(Error::OutOfBounds(_)) => break,
            Err(e) => return Err(anyhow!("{e}")),
        };
        rows.push(EvalRow {
            t: t as f64 * dt,
            s_bar: pred.scalar_summary,
            var_h: heightscan_variance(&scan),
            error: foothold_error(&pred.mean, &label),
        });
        state = gait::advance_state(&state, cmd, dt, gait_cfg.cycle_period);
    }
    Ok(rows)
}

/// Zero the commanded-velocity entries of every sample's uncertainty
/// input, producing the terrain-only ablation dataset.
pub fn zero_u_velocities(samples: &[TrainingSample]) -> Vec<TrainingSample> {
    samples
        .iter()
        .map(|s| {
            let mut u = s.u.clone();
            u.0[0] = 0.0;
            u.0[1] = 0.0;
            u.0[2] = 0.0;
            TrainingSample { x: s.x.clone(), u, y: s.y }
        })
        .collect()
}

/// Paired start/goal for planning run `r`, shared across formulations.
pub fn plan_endpoints(
    cfg: &ExperimentConfig,
    field: &HeightField,
    r: usize,
) -> (RobotState, (f64, f64)) {
    let mut s = Stream::new(&[cfg.seed, 0xB0A7, r as u64]);
    let (ex, ey) = cfg.world.extent;
    let start_y = flat_y(field, 0.15 * ex, &mut s, 0.25 * ey, 0.75 * ey);
    let goal_y = flat_y(field, 0.85 * ex, &mut s, 0.25 * ey, 0.75 * ey);
    let start = RobotState::new(0.15 * ex, start_y, 0.0);
    let goal = (0.85 * ex, goal_y);
    (start, goal)
}

/// Draw a y coordinate whose neighbourhood at `x` is close to level, so
/// episodes never start or end inside a terrain feature. Falls back to the
/// last draw if no candidate qualifies.
fn flat_y(field: &HeightField, x: f64, s: &mut Stream, lo: f64, hi: f64) -> f64 {
    let mut y = s.uniform_in(lo, hi);
    for _ in 0..24 {
        let mut peak: f64 = 0.0;
        for dx in [-0.4, 0.0, 0.4] {
            for dy in [-0.4, 0.0, 0.4] {
                let h = field.elevation(x + dx, y + dy).unwrap_or(1.0);
                peak = peak.max(h.abs());
            }
        }
        if peak < 0.03 {
            break;
        }
        y = s.uniform_in(lo, hi);
    }
    y
}

/// MPPI config for one formulation and run. Each formulation keeps its own
/// configured weight; the inactive terms are zeroed.
pub fn formulation_mppi(cfg: &ExperimentConfig, formulation: Formulation, run_tag: u64, r: usize) -> MppiConfig {
    let mut m = cfg.mppi.clone();
    let weight = match formulation {
        Formulation::Obstacle => m.lambda_obs,
        Formulation::Roughness => m.lambda_rough,
        Formulation::Uncertainty => m.lambda_unc,
    };
    m.lambda_obs = 0.0;
    m.lambda_rough = 0.0;
    m.lambda_unc = 0.0;
    match formulation {
        Formulation::Obstacle => m.lambda_obs = weight,
        Formulation::Roughness => m.lambda_rough = weight,
        Formulation::Uncertainty => m.lambda_unc = weight,
    }
    m.seed = rng::key(&[cfg.mppi.seed, formulation as u64, run_tag, r as u64]);
    m
}

/// Run one planning episode with the experiment's setup on `field`.
pub fn plan_episode(
    cfg: &ExperimentConfig,
    field: &HeightField,
    ensemble: &[NetworkWeights],
    mppi: &MppiConfig,
    start: RobotState,
    goal: (f64, f64),
) -> Result<EpisodeLog> {
    let setup = EpisodeSetup {
        field,
        ensemble,
        gait: &cfg.gait,
        costmap_cfg: &cfg.costmap,
        feasibility_cfg: &cfg.feasibility,
        m_samples: cfg.collect.m_eval,
        goal_radius: cfg.plan.goal_radius,
    };
    run_episode(start, goal, &setup, mppi, cfg.plan.max_steps).map_err(|e| anyhow!("{e}"))
}

/// The static learned-uncertainty field an episode toward `goal` would plan
/// against, for inspection and reports.
pub fn uncertainty_map(
    cfg: &ExperimentConfig,
    field: &HeightField,
    ensemble: &[NetworkWeights],
    mppi: &MppiConfig,
    goal: (f64, f64),
) -> Result<footcast_core::costmap::Costmap> {
    let setup = EpisodeSetup {
        field,
        ensemble,
        gait: &cfg.gait,
        costmap_cfg: &cfg.costmap,
        feasibility_cfg: &cfg.feasibility,
        m_samples: cfg.collect.m_eval,
        goal_radius: cfg.plan.goal_radius,
    };
    let grid = footcast_core::planner::episode_grid(field);
    footcast_core::planner::uncertainty_field(&setup, mppi, &grid, goal).map_err(|e| anyhow!("{e}"))
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Linearly interpolated quantile of a sorted copy of `values`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if v.len() == 1 {
        return v[0];
    }
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    v[lo] * (1.0 - frac) + v[hi] * frac
}

/// Least-squares slope of y on x.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}
