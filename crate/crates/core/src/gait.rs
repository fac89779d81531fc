//! Synthetic trot-gait oracle: deterministic nominal footholds plus a
//! terrain-dependent slip model standing in for simulator contacts.

use alloc::format;

use libm::{cos, sin};

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::terrain::HeightField;

pub const NUM_LEGS: usize = 4;

/// Leg ordering: LF, RF, LH, RH.
pub const LEG_NAMES: [&str; NUM_LEGS] = ["LF", "RF", "LH", "RH"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Base,
    World,
}

/// 4 feet x (x, y, z) in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct FootholdSet {
    pub positions: [[f64; 3]; NUM_LEGS],
    pub frame: Frame,
}

impl FootholdSet {
    /// Flatten to the 12-vector leg-major (LF, RF, LH, RH) x (x, y, z).
    pub fn flat(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for (i, p) in self.positions.iter().enumerate() {
            out[3 * i] = p[0];
            out[3 * i + 1] = p[1];
            out[3 * i + 2] = p[2];
        }
        out
    }

    pub fn from_flat(values: &[f64; 12], frame: Frame) -> Self {
        let mut positions = [[0.0; 3]; NUM_LEGS];
        for i in 0..NUM_LEGS {
            positions[i] = [values[3 * i], values[3 * i + 1], values[3 * i + 2]];
        }
        FootholdSet { positions, frame }
    }
}

/// Planar robot state plus gait phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    /// Position within the gait cycle, in [0, 1).
    pub gait_phase: f64,
}

impl RobotState {
    pub fn new(x: f64, y: f64, psi: f64) -> Self {
        RobotState { x, y, psi: wrap_angle(psi), gait_phase: 0.0 }
    }
}

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle(mut a: f64) -> f64 {
    let two_pi = 2.0 * core::f64::consts::PI;
    while a > core::f64::consts::PI {
        a -= two_pi;
    }
    while a <= -core::f64::consts::PI {
        a += two_pi;
    }
    a
}

/// Trot-gait parameters and slip noise model.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitConfig {
    pub cycle_period: f64,
    pub duty_factor: f64,
    /// Hip xy offsets in base frame, leg order LF, RF, LH, RH.
    pub hip_offsets: [[f64; 2]; NUM_LEGS],
    /// Slip noise std on flat ground, meters.
    pub step_noise_flat: f64,
    /// Extra slip noise std per unit slope, meters.
    pub step_noise_slope_gain: f64,
    pub seed: u64,
}

impl Default for GaitConfig {
    fn default() -> Self {
        GaitConfig {
            cycle_period: 0.6,
            duty_factor: 0.5,
            hip_offsets: [[0.19, 0.12], [0.19, -0.12], [-0.19, 0.12], [-0.19, -0.12]],
            step_noise_flat: 0.005,
            step_noise_slope_gain: 0.08,
            seed: 0,
        }
    }
}

impl GaitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cycle_period > 0.0) {
            return Err(Error::Config(format!("cycle_period must be > 0, got {}", self.cycle_period)));
        }
        if !(self.duty_factor > 0.0 && self.duty_factor < 1.0) {
            return Err(Error::Config(format!("duty_factor must be in (0,1), got {}", self.duty_factor)));
        }
        if self.step_noise_flat < 0.0 || self.step_noise_slope_gain < 0.0 {
            return Err(Error::Config("noise parameters must be >= 0".into()));
        }
        Ok(())
    }
}

/// Transform a base-frame foothold set into world frame at `state`.
pub fn to_world(state: &RobotState, set: &FootholdSet) -> FootholdSet {
    debug_assert_eq!(set.frame, Frame::Base);
    let (c, s) = (cos(state.psi), sin(state.psi));
    let mut positions = [[0.0; 3]; NUM_LEGS];
    for (i, p) in set.positions.iter().enumerate() {
        positions[i] = [state.x + c * p[0] - s * p[1], state.y + s * p[0] + c * p[1], p[2]];
    }
    FootholdSet { positions, frame: Frame::World }
}

/// Transform a world-frame foothold set into the base frame at `state`.
pub fn to_base(state: &RobotState, set: &FootholdSet) -> FootholdSet {
    debug_assert_eq!(set.frame, Frame::World);
    let (c, s) = (cos(state.psi), sin(state.psi));
    let mut positions = [[0.0; 3]; NUM_LEGS];
    for (i, p) in set.positions.iter().enumerate() {
        let dx = p[0] - state.x;
        let dy = p[1] - state.y;
        positions[i] = [c * dx + s * dy, -s * dx + c * dy, p[2]];
    }
    FootholdSet { positions, frame: Frame::Base }
}

/// Next-touchdown footholds under `cmd = (v_x, v_y, omega)`: each hip
/// advanced by the Raibert-style half-stance travel, z from the terrain.
/// Returned in the base frame of `state` (z is world elevation).
pub fn nominal_footholds(
    state: &RobotState,
    cmd: (f64, f64, f64),
    field: &HeightField,
    cfg: &GaitConfig,
) -> Result<FootholdSet> {
    cfg.validate()?;
    let (vx, vy, omega) = cmd;
    let t_stance = cfg.duty_factor * cfg.cycle_period;
    let (c, s) = (cos(state.psi), sin(state.psi));
    let mut positions = [[0.0; 3]; NUM_LEGS];
    for (i, hip) in cfg.hip_offsets.iter().enumerate() {
        // velocity of the hip point under the commanded twist
        let vhx = vx - omega * hip[1];
        let vhy = vy + omega * hip[0];
        let bx = hip[0] + vhx * t_stance / 2.0;
        let by = hip[1] + vhy * t_stance / 2.0;
        let wx = state.x + c * bx - s * by;
        let wy = state.y + s * bx + c * by;
        let z = field.elevation(wx, wy).map_err(|_| {
            Error::OutOfBounds(format!("foothold {} at ({wx:.3}, {wy:.3}) exits the field", LEG_NAMES[i]))
        })?;
        positions[i] = [bx, by, z];
    }
    Ok(FootholdSet { positions, frame: Frame::Base })
}

/// Perturb a world-frame nominal foothold set with slip noise whose std
/// grows with local slope; z is re-queried from the terrain. Deterministic
/// per `stream_id`.
pub fn actual_footholds(
    nominal: &FootholdSet,
    field: &HeightField,
    cfg: &GaitConfig,
    stream_id: u64,
) -> Result<FootholdSet> {
    if nominal.frame != Frame::World {
        return Err(Error::Config("actual_footholds expects a world-frame nominal set".into()));
    }
    let (x0, y0, x1, y1) = field.extent();
    let mut positions = [[0.0; 3]; NUM_LEGS];
    for (i, p) in nominal.positions.iter().enumerate() {
        let slope = field.slope(p[0], p[1])?;
        let std = cfg.step_noise_flat + cfg.step_noise_slope_gain * slope;
        let mut s = Stream::new(&[cfg.seed, stream_id, i as u64, 0x51]);
        let x = (p[0] + std * s.normal()).clamp(x0, x1);
        let y = (p[1] + std * s.normal()).clamp(y0, y1);
        let z = field.elevation(x, y)?;
        positions[i] = [x, y, z];
    }
    Ok(FootholdSet { positions, frame: Frame::World })
}

/// One unicycle step: `v_y` is carried in `cmd` for label generation but
/// does not move the base.
pub fn advance_state(state: &RobotState, cmd: (f64, f64, f64), dt: f64, cycle_period: f64) -> RobotState {
    let (vx, _vy, omega) = cmd;
    RobotState {
        x: state.x + vx * cos(state.psi) * dt,
        y: state.y + vx * sin(state.psi) * dt,
        psi: wrap_angle(state.psi + omega * dt),
        gait_phase: {
            let p = state.gait_phase + dt / cycle_period;
            p - libm::floor(p)
        },
    }
}
