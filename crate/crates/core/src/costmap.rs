//! The three cost fields consumed by the planner: learned-uncertainty
//! Gaussian blobs, the height-threshold obstacle baseline, and the
//! windowed-variance roughness baseline.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, floor};

use crate::error::{Error, Result};
use crate::terrain::HeightField;

pub const LETHAL: f64 = 100.0;

/// 2D grid of costs in [0, 100], node-centered like [`HeightField`].
#[derive(Debug, Clone, PartialEq)]
pub struct Costmap {
    pub width_cells: usize,
    pub height_cells: usize,
    pub resolution: f64,
    pub origin_xy: (f64, f64),
    pub costs: Vec<f64>,
}

/// Grid geometry shared by all three formulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub width_cells: usize,
    pub height_cells: usize,
    pub resolution: f64,
    pub origin_xy: (f64, f64),
}

impl GridSpec {
    /// Cover the extent of a height field at the given resolution.
    pub fn covering(field: &HeightField, resolution: f64) -> Self {
        let (x0, y0, x1, y1) = field.extent();
        GridSpec {
            width_cells: ((x1 - x0) / resolution) as usize + 1,
            height_cells: ((y1 - y0) / resolution) as usize + 1,
            resolution,
            origin_xy: (x0, y0),
        }
    }
}

impl Costmap {
    pub fn zeros(spec: &GridSpec) -> Self {
        Costmap {
            width_cells: spec.width_cells,
            height_cells: spec.height_cells,
            resolution: spec.resolution,
            origin_xy: spec.origin_xy,
            costs: vec![0.0; spec.width_cells * spec.height_cells],
        }
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.costs[iy * self.width_cells + ix]
    }

    #[inline]
    pub fn cell_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.origin_xy.0 + ix as f64 * self.resolution,
            self.origin_xy.1 + iy as f64 * self.resolution,
        )
    }

    /// Bilinear cost lookup; off-map points cost the lethal value.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let gx = (x - self.origin_xy.0) / self.resolution;
        let gy = (y - self.origin_xy.1) / self.resolution;
        if gx < 0.0 || gy < 0.0 || gx > (self.width_cells - 1) as f64 || gy > (self.height_cells - 1) as f64 {
            return LETHAL;
        }
        if self.width_cells == 1 || self.height_cells == 1 {
            let ix = (gx + 0.5) as usize;
            let iy = (gy + 0.5) as usize;
            return self.at(ix.min(self.width_cells - 1), iy.min(self.height_cells - 1));
        }
        let ix = (floor(gx) as usize).min(self.width_cells - 2);
        let iy = (floor(gy) as usize).min(self.height_cells - 2);
        let tx = gx - ix as f64;
        let ty = gy - iy as f64;
        self.at(ix, iy) * (1.0 - tx) * (1.0 - ty)
            + self.at(ix + 1, iy) * tx * (1.0 - ty)
            + self.at(ix, iy + 1) * (1.0 - tx) * ty
            + self.at(ix + 1, iy + 1) * tx * ty
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostmapConfig {
    /// Cost per m^2 of per-leg epistemic variance.
    pub alpha: f64,
    /// Gaussian blob radius in meters; sigma_b = blob_radius / 2.
    pub blob_radius: f64,
    /// Rise above the local median that marks a cell lethal.
    pub obstacle_height_threshold: f64,
    /// Cost per m^2 of windowed elevation variance.
    pub roughness_scale: f64,
}

impl Default for CostmapConfig {
    fn default() -> Self {
        CostmapConfig {
            alpha: 2000.0,
            blob_radius: 0.2,
            obstacle_height_threshold: 0.15,
            roughness_scale: 20000.0,
        }
    }
}

impl CostmapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.blob_radius > 0.0) {
            return Err(Error::Config(format!("blob_radius must be > 0, got {}", self.blob_radius)));
        }
        Ok(())
    }
}

/// One prediction snapshot: world-frame predicted foot xy plus per-leg
/// epistemic variance.
#[derive(Debug, Clone, PartialEq)]
pub struct FootBlobs {
    pub feet_xy: [[f64; 2]; 4],
    pub leg_variance: [f64; 4],
}

/// Build the learned-uncertainty costmap: per cell, the max over all
/// blobs of `c_i * exp(-d^2 / (2 sigma_b^2))` with `c_i = min(100, alpha
/// * variance_i)`.
pub fn uncertainty_costmap(predictions: &[FootBlobs], cfg: &CostmapConfig, grid: &GridSpec) -> Result<Costmap> {
    cfg.validate()?;
    let sigma_b = cfg.blob_radius / 2.0;
    let mut map = Costmap::zeros(grid);
    // only cells within reach of a blob can receive cost; 6 sigma covers
    // contributions down to ~1.5e-8 * c_i
    let reach = 6.0 * sigma_b;
    let reach_cells = (reach / grid.resolution) as i64 + 1;
    for pred in predictions {
        for i in 0..4 {
            let c_i = (cfg.alpha * pred.leg_variance[i]).min(LETHAL);
            if c_i <= 0.0 {
                continue;
            }
            let (fx, fy) = (pred.feet_xy[i][0], pred.feet_xy[i][1]);
            let cx = (fx - grid.origin_xy.0) / grid.resolution;
            let cy = (fy - grid.origin_xy.1) / grid.resolution;
            let ix0 = ((floor(cx) as i64) - reach_cells).max(0) as usize;
            let ix1 = (((floor(cx) as i64) + reach_cells + 1).max(0) as usize).min(grid.width_cells - 1);
            let iy0 = ((floor(cy) as i64) - reach_cells).max(0) as usize;
            let iy1 = (((floor(cy) as i64) + reach_cells + 1).max(0) as usize).min(grid.height_cells - 1);
            if ix0 > ix1 || iy0 > iy1 {
                continue;
            }
            for iy in iy0..=iy1 {
                for ix in ix0..=ix1 {
                    let (x, y) = map.cell_center(ix, iy);
                    let d2 = (x - fx) * (x - fx) + (y - fy) * (y - fy);
                    if d2 > reach * reach {
                        continue;
                    }
                    let v = c_i * exp(-d2 / (2.0 * sigma_b * sigma_b));
                    let cell = &mut map.costs[iy * grid.width_cells + ix];
                    if v > *cell {
                        *cell = v;
                    }
                }
            }
        }
    }
    Ok(map)
}

/// Single-blob contribution with the same 6-sigma reach cutoff as the
/// implementation; used by oracles and kept here so the rule has one home.
pub fn blob_contribution(cell_xy: (f64, f64), foot_xy: (f64, f64), c_i: f64, sigma_b: f64) -> f64 {
    let d2 = (cell_xy.0 - foot_xy.0) * (cell_xy.0 - foot_xy.0)
        + (cell_xy.1 - foot_xy.1) * (cell_xy.1 - foot_xy.1);
    let reach = 6.0 * sigma_b;
    if d2 > reach * reach {
        0.0
    } else {
        c_i * exp(-d2 / (2.0 * sigma_b * sigma_b))
    }
}

/// Obstacle baseline: a cell is lethal where its elevation rises more
/// than the threshold above the median of a 0.5 m neighborhood.
pub fn obstacle_costmap(field: &HeightField, cfg: &CostmapConfig, grid: &GridSpec) -> Result<Costmap> {
    cfg.validate()?;
    let mut map = Costmap::zeros(grid);
    let half = 0.25;
    let n_side = (half / grid.resolution) as i64;
    for iy in 0..grid.height_cells {
        for ix in 0..grid.width_cells {
            let (x, y) = map.cell_center(ix, iy);
            if !field.contains(x, y) {
                continue;
            }
            let z = field.elevation(x, y)?;
            let mut neighborhood: Vec<f64> = Vec::new();
            for dy in -n_side..=n_side {
                for dx in -n_side..=n_side {
                    let nx = x + dx as f64 * grid.resolution;
                    let ny = y + dy as f64 * grid.resolution;
                    if field.contains(nx, ny) {
                        neighborhood.push(field.elevation(nx, ny)?);
                    }
                }
            }
            neighborhood.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = neighborhood[neighborhood.len() / 2];
            if z - median > cfg.obstacle_height_threshold {
                map.costs[iy * grid.width_cells + ix] = LETHAL;
            }
        }
    }
    Ok(map)
}

/// Roughness baseline: cost proportional to the population variance of
/// elevations in a square window of side `2 * blob_radius` around the cell.
pub fn roughness_costmap(field: &HeightField, cfg: &CostmapConfig, grid: &GridSpec) -> Result<Costmap> {
    cfg.validate()?;
    let mut map = Costmap::zeros(grid);
    let half = cfg.blob_radius;
    let step = grid.resolution.min(half / 2.0);
    let n_side = (half / step) as i64;
    for iy in 0..grid.height_cells {
        for ix in 0..grid.width_cells {
            let (x, y) = map.cell_center(ix, iy);
            if !field.contains(x, y) {
                continue;
            }
            let mut vals: Vec<f64> = Vec::new();
            for dy in -n_side..=n_side {
                for dx in -n_side..=n_side {
                    let nx = x + dx as f64 * step;
                    let ny = y + dy as f64 * step;
                    if field.contains(nx, ny) {
                        vals.push(field.elevation(nx, ny)?);
                    }
                }
            }
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            map.costs[iy * grid.width_cells + ix] = (cfg.roughness_scale * var).min(LETHAL);
        }
    }
    Ok(map)
}
