//! MPPI receding-horizon planner over the unicycle model, and the full
//! closed-loop episode: scan, predict, rebuild costmap, plan, step,
//! record actuals.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::{atan2, sqrt};

use crate::costmap::{uncertainty_costmap, Costmap, CostmapConfig, FootBlobs, GridSpec};
use crate::error::{Error, Result};
use crate::feasibility::{feasibility_record, FeasibilityConfig, FeasibilityRecord};
use crate::gait::{self, FootholdSet, Frame, GaitConfig, RobotState};
use crate::net::{predict, MainInput, NetworkWeights, UncInput};
use crate::ood::per_leg_uncertainty;
use crate::rng::{self, Stream};
use crate::terrain::{extract_height_scan, pool_grid, HeightField};
use crate::train::foothold_error;

/// Which middle cost term is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Obstacle,
    Roughness,
    Uncertainty,
}

impl Formulation {
    pub fn name(&self) -> &'static str {
        match self {
            Formulation::Obstacle => "obstacle",
            Formulation::Roughness => "roughness",
            Formulation::Uncertainty => "uncertainty",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "obstacle" => Formulation::Obstacle,
            "roughness" => Formulation::Roughness,
            "uncertainty" => Formulation::Uncertainty,
            _ => return Err(Error::Parse(format!("unknown formulation '{s}'"))),
        })
    }
}

/// A control is `(v, omega)`; a sequence covers the horizon.
pub type Control = (f64, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct MppiConfig {
    pub k_samples: usize,
    pub horizon: usize,
    pub dt: f64,
    /// Noise std on (v, omega).
    pub sigma: (f64, f64),
    /// Softmin temperature.
    pub beta: f64,
    pub lambda_goal: f64,
    pub lambda_obs: f64,
    pub lambda_rough: f64,
    pub lambda_unc: f64,
    pub lambda_ctrl: f64,
    pub v_bounds: (f64, f64),
    pub omega_max: f64,
    pub seed: u64,
}

impl Default for MppiConfig {
    fn default() -> Self {
        MppiConfig {
            k_samples: 64,
            horizon: 30,
            dt: 0.1,
            sigma: (0.2, 0.4),
            beta: 1.0,
            lambda_goal: 1.0,
            lambda_obs: 0.0,
            lambda_rough: 0.0,
            lambda_unc: 0.05,
            lambda_ctrl: 0.01,
            v_bounds: (0.0, 1.0),
            omega_max: 1.0,
            seed: 0,
        }
    }
}

impl MppiConfig {
    /// Exactly one of the three middle terms must be active.
    pub fn formulation(&self) -> Result<Formulation> {
        let active: Vec<Formulation> = [
            (self.lambda_obs, Formulation::Obstacle),
            (self.lambda_rough, Formulation::Roughness),
            (self.lambda_unc, Formulation::Uncertainty),
        ]
        .iter()
        .filter(|(l, _)| *l != 0.0)
        .map(|(_, f)| *f)
        .collect();
        if active.len() != 1 {
            return Err(Error::Config(format!(
                "exactly one of lambda_obs/lambda_rough/lambda_unc must be nonzero, found {}",
                active.len()
            )));
        }
        Ok(active[0])
    }

    pub fn middle_weight(&self) -> f64 {
        self.lambda_obs + self.lambda_rough + self.lambda_unc
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_samples < 1 || self.horizon < 1 {
            return Err(Error::Config("K and H must be >= 1".into()));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Config("beta must be > 0".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config("dt must be > 0".into()));
        }
        self.formulation().map(|_| ())
    }

    fn clamp(&self, c: Control) -> Control {
        (
            c.0.clamp(self.v_bounds.0, self.v_bounds.1),
            c.1.clamp(-self.omega_max, self.omega_max),
        )
    }
}

/// Apply the unicycle kinematics repeatedly; returns `H + 1` states
/// including the start.
pub fn rollout(state: &RobotState, controls: &[Control], dt: f64, cycle_period: f64) -> Vec<RobotState> {
    let mut traj = Vec::with_capacity(controls.len() + 1);
    traj.push(*state);
    let mut cur = *state;
    for &(v, omega) in controls {
        cur = gait::advance_state(&cur, (v, 0.0, omega), dt, cycle_period);
        traj.push(cur);
    }
    traj
}

/// Terrain-aware rollout cost: goal distance + the active middle term
/// sampled from the costmap + control effort, summed over the horizon.
pub fn score(
    trajectory: &[RobotState],
    controls: &[Control],
    goal: (f64, f64),
    map: &Costmap,
    cfg: &MppiConfig,
) -> f64 {
    let mid = cfg.middle_weight();
    let mut j = 0.0;
    for (state, &(v, omega)) in trajectory[1..].iter().zip(controls.iter()) {
        let dx = state.x - goal.0;
        let dy = state.y - goal.1;
        j += cfg.lambda_goal * sqrt(dx * dx + dy * dy);
        j += mid * map.sample(state.x, state.y);
        j += cfg.lambda_ctrl * (v * v + omega * omega);
    }
    j
}

/// Normalized softmin weights `w_k = exp(-J_k / beta) / sum`, computed
/// with min-cost subtraction. Non-finite costs get zero weight; all costs
/// non-finite is an error.
pub fn softmin_weights(costs: &[f64], beta: f64) -> Result<Vec<f64>> {
    let min_cost = costs.iter().copied().filter(|c| c.is_finite()).fold(f64::INFINITY, f64::min);
    if !min_cost.is_finite() {
        return Err(Error::Numeric("all rollout costs are non-finite".into()));
    }
    let mut weights: Vec<f64> = costs
        .iter()
        .map(|j| if j.is_finite() { libm::exp(-(j - min_cost) / beta) } else { 0.0 })
        .collect();
    let norm: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= norm;
    }
    Ok(weights)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub executed: Control,
    pub nominal: Vec<Control>,
    pub costs: Vec<f64>,
    pub weights: Vec<f64>,
    pub predicted_trajectory: Vec<RobotState>,
}

/// One MPPI update: sample K perturbed sequences, score, softmin-weight
/// (with min-cost subtraction), blend, execute the first control, shift
/// the horizon by repeating the last control.
pub fn mppi_step(
    state: &RobotState,
    goal: (f64, f64),
    map: &Costmap,
    nominal: &[Control],
    cfg: &MppiConfig,
    step_index: u64,
    cycle_period: f64,
) -> Result<PlanResult> {
    cfg.validate()?;
    if nominal.len() != cfg.horizon {
        return Err(Error::Shape(format!(
            "nominal has {} controls, horizon is {}",
            nominal.len(),
            cfg.horizon
        )));
    }
    let mut samples: Vec<Vec<Control>> = Vec::with_capacity(cfg.k_samples);
    let mut costs: Vec<f64> = Vec::with_capacity(cfg.k_samples);
    for k in 0..cfg.k_samples {
        let mut seq = Vec::with_capacity(cfg.horizon);
        for (t, &(v, omega)) in nominal.iter().enumerate() {
            let mut s = Stream::new(&[cfg.seed, 0x3141, step_index, k as u64, t as u64]);
            let c = cfg.clamp((v + cfg.sigma.0 * s.normal(), omega + cfg.sigma.1 * s.normal()));
            seq.push(c);
        }
        let traj = rollout(state, &seq, cfg.dt, cycle_period);
        costs.push(score(&traj, &seq, goal, map, cfg));
        samples.push(seq);
    }
    let weights = softmin_weights(&costs, cfg.beta)?;
    let mut updated: Vec<Control> = vec![(0.0, 0.0); cfg.horizon];
    for (w, seq) in weights.iter().zip(samples.iter()) {
        for (t, &(v, omega)) in seq.iter().enumerate() {
            updated[t].0 += w * v;
            updated[t].1 += w * omega;
        }
    }
    let executed = updated[0];
    let predicted_trajectory = rollout(state, &updated, cfg.dt, cycle_period);
    let mut shifted: Vec<Control> = updated[1..].to_vec();
    shifted.push(*updated.last().unwrap());
    Ok(PlanResult {
        executed,
        nominal: shifted,
        costs,
        weights,
        predicted_trajectory,
    })
}

/// Everything an episode needs besides the MPPI config.
pub struct EpisodeSetup<'a> {
    pub field: &'a HeightField,
    pub ensemble: &'a [NetworkWeights],
    pub gait: &'a GaitConfig,
    pub costmap_cfg: &'a CostmapConfig,
    pub feasibility_cfg: &'a FeasibilityConfig,
    /// MC samples per member at evaluation time.
    pub m_samples: usize,
    pub goal_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub v_cmd: f64,
    pub omega_cmd: f64,
    pub s_bar: f64,
    pub cost_at_pose: f64,
    pub foothold_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ReachedGoal,
    MaxSteps,
    LeftArena,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub rows: Vec<StepRow>,
    pub feasibility: Vec<FeasibilityRecord>,
    pub termination: Termination,
    pub goal_progress: f64,
    pub formulation: Formulation,
}

/// Run one receding-horizon episode. Fully deterministic for a fixed
/// `(config, seeds, world)`.
/// Planning grid: the field inset by the scan-window reach, so border
/// poses, where the frontal scan would leave the field, read as lethal
/// off-map cells.
pub fn episode_grid(field: &HeightField) -> GridSpec {
    let margin = 0.9;
    let (x0, y0, x1, y1) = field.extent();
    GridSpec {
        width_cells: (((x1 - x0 - 2.0 * margin) / 0.1).max(1.0) as usize) + 1,
        height_cells: (((y1 - y0 - 2.0 * margin) / 0.1).max(1.0) as usize) + 1,
        resolution: 0.1,
        origin_xy: (x0 + margin, y0 + margin),
    }
}

/// Static learned-uncertainty field over the arena: virtual scan poses on a
/// coarse sub-grid, each facing the goal and predicted under the nominal
/// training command, with blobs at the predicted feet.
pub fn uncertainty_field(setup: &EpisodeSetup, cfg: &MppiConfig, grid: &GridSpec, goal: (f64, f64)) -> Result<Costmap> {
    let mut blobs: Vec<FootBlobs> = Vec::new();
    let stride = 2usize;
    let cmd = (0.4, 0.0, 0.0);
    let probe = Costmap::zeros(grid);
    let mut iy = 0;
    while iy < grid.height_cells {
        let mut ix = 0;
        while ix < grid.width_cells {
            let (cx, cy) = probe.cell_center(ix, iy);
            let psi = atan2(goal.1 - cy, goal.0 - cx);
            match extract_height_scan(setup.field, (cx, cy, psi)) {
                Ok(scan) => {
                    let pooled = pool_grid(&scan);
                    let x_in = MainInput::assemble(&scan.values, cmd, 0.0);
                    let u_in = UncInput::assemble(cmd, &pooled.values);
                    let pred = predict(
                        setup.ensemble,
                        &x_in,
                        &u_in,
                        setup.m_samples,
                        rng::key(&[cfg.seed, 0x5AF, ix as u64, iy as u64]),
                    )?;
                    let state = RobotState { x: cx, y: cy, psi, gait_phase: 0.0 };
                    let base = FootholdSet::from_flat(&pred.mean, Frame::Base);
                    let world = gait::to_world(&state, &base);
                    blobs.push(foot_blobs(&world, per_leg_uncertainty(&pred)));
                }
                Err(Error::OutOfBounds(_)) => {}
                Err(e) => return Err(e),
            }
            ix += stride;
        }
        iy += stride;
    }
    uncertainty_costmap(&blobs, setup.costmap_cfg, grid)
}

fn foot_blobs(world: &FootholdSet, leg_variance: [f64; 4]) -> FootBlobs {
    FootBlobs {
        feet_xy: [
            [world.positions[0][0], world.positions[0][1]],
            [world.positions[1][0], world.positions[1][1]],
            [world.positions[2][0], world.positions[2][1]],
            [world.positions[3][0], world.positions[3][1]],
        ],
        leg_variance,
    }
}

pub fn run_episode(
    start: RobotState,
    goal: (f64, f64),
    setup: &EpisodeSetup,
    cfg: &MppiConfig,
    max_steps: usize,
) -> Result<EpisodeLog> {
    cfg.validate()?;
    let formulation = cfg.formulation()?;
    let grid = episode_grid(setup.field);
    let static_map: Costmap = match formulation {
        Formulation::Obstacle => crate::costmap::obstacle_costmap(setup.field, setup.costmap_cfg, &grid)?,
        Formulation::Roughness => crate::costmap::roughness_costmap(setup.field, setup.costmap_cfg, &grid)?,
        Formulation::Uncertainty => uncertainty_field(setup, cfg, &grid, goal)?,
    };

    let mut state = start;
    let mut nominal: Vec<Control> = vec![(0.0, 0.0); cfg.horizon];
    let mut cmd: (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut rows = Vec::new();
    let mut feasibility = Vec::new();
    let d0 = {
        let (dx, dy) = (start.x - goal.0, start.y - goal.1);
        sqrt(dx * dx + dy * dy)
    };
    let mut termination = Termination::MaxSteps;

    for step in 0..max_steps {
        let scan = match extract_height_scan(setup.field, (state.x, state.y, state.psi)) {
            Ok(s) => s,
            Err(Error::OutOfBounds(_)) => {
                termination = Termination::LeftArena;
                break;
            }
            Err(e) => return Err(e),
        };
        let pooled = pool_grid(&scan);
        let x_in = MainInput::assemble(&scan.values, cmd, state.gait_phase);
        let u_in = UncInput::assemble(cmd, &pooled.values);
        let pred = predict(
            setup.ensemble,
            &x_in,
            &u_in,
            setup.m_samples,
            rng::key(&[cfg.seed, 0x9E7, step as u64]),
        )?;
        let pred_base = FootholdSet::from_flat(&pred.mean, Frame::Base);
        let pred_world = gait::to_world(&state, &pred_base);
        let map: &Costmap = &static_map;

        let plan = mppi_step(&state, goal, map, &nominal, cfg, step as u64, setup.gait.cycle_period)?;
        nominal = plan.nominal.clone();
        let (v, omega) = plan.executed;
        cmd = (v, 0.0, omega);

        // realized footholds under the executed command
        let step_result = (|| -> Result<(f64, FeasibilityRecord)> {
            let nom = gait::nominal_footholds(&state, cmd, setup.field, setup.gait)?;
            let nom_world = gait::to_world(&state, &nom);
            let actual_world =
                gait::actual_footholds(&nom_world, setup.field, setup.gait, rng::key(&[cfg.seed, 0xAC2, step as u64]))?;
            let actual_base = gait::to_base(&state, &actual_world);
            let err = foothold_error(&pred.mean, &actual_base.flat());
            let rec = feasibility_record(step, &pred_world, &actual_world, (state.x, state.y), setup.feasibility_cfg)?;
            Ok((err, rec))
        })();
        let (err, rec) = match step_result {
            Ok(v) => v,
            Err(Error::OutOfBounds(_)) => {
                termination = Termination::LeftArena;
                break;
            }
            Err(e) => return Err(e),
        };
        feasibility.push(rec);
        rows.push(StepRow {
            t: step as f64 * cfg.dt,
            x: state.x,
            y: state.y,
            psi: state.psi,
            v_cmd: v,
            omega_cmd: omega,
            s_bar: pred.scalar_summary,
            cost_at_pose: map.sample(state.x, state.y),
            foothold_error: err,
        });

        state = gait::advance_state(&state, cmd, cfg.dt, setup.gait.cycle_period);
        let (dx, dy) = (state.x - goal.0, state.y - goal.1);
        if sqrt(dx * dx + dy * dy) < setup.goal_radius {
            termination = Termination::ReachedGoal;
            break;
        }
    }

    let d_final = {
        let (dx, dy) = (state.x - goal.0, state.y - goal.1);
        sqrt(dx * dx + dy * dy)
    };
    let goal_progress = if d0 > 0.0 { ((d0 - d_final) / d0).clamp(0.0, 1.0) } else { 1.0 };
    Ok(EpisodeLog {
        rows,
        feasibility,
        termination,
        goal_progress,
        formulation,
    })
}
