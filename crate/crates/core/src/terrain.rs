//! Procedural terrain, elevation queries, and the frontal height scan.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::{cos, exp, floor, sin, sqrt};

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Rows of the frontal scan (along base +x).
pub const SCAN_ROWS: usize = 6;
/// Columns of the frontal scan (along base y).
pub const SCAN_COLS: usize = 17;
/// Total scan samples.
pub const SCAN_LEN: usize = SCAN_ROWS * SCAN_COLS;
/// Scan sample spacing in meters.
pub const SCAN_RES: f64 = 0.1;
/// The first scan row sits this far ahead of the base origin.
pub const SCAN_X_START: f64 = 0.1;
/// Column offset of the leftmost scan sample.
pub const SCAN_Y_START: f64 = -0.8;
/// Pooled descriptor length.
pub const POOLED_LEN: usize = 12;

/// Row-group and column-group boundaries of the 6x17 -> 12 pooling layout:
/// rows paired into 3 groups, columns split {5,4,4,4} into 4 groups.
const ROW_GROUPS: [(usize, usize); 3] = [(0, 2), (2, 4), (4, 6)];
const COL_GROUPS: [(usize, usize); 4] = [(0, 5), (5, 9), (9, 13), (13, 17)];

/// World terrain as a 2D elevation grid with bilinear off-grid queries.
///
/// Grid nodes sit at `origin + (ix, iy) * resolution`, elevations stored
/// row-major by `iy` (y) then `ix` (x).
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    pub width_cells: usize,
    pub height_cells: usize,
    pub resolution: f64,
    pub origin_xy: (f64, f64),
    pub elevations: Vec<f64>,
}

impl HeightField {
    pub fn new(
        width_cells: usize,
        height_cells: usize,
        resolution: f64,
        origin_xy: (f64, f64),
        elevations: Vec<f64>,
    ) -> Result<Self> {
        if width_cells < 1 || height_cells < 1 {
            return Err(Error::Config(format!(
                "height field dimensions must be >= 1x1, got {width_cells}x{height_cells}"
            )));
        }
        if !(resolution > 0.0) {
            return Err(Error::Config(format!("resolution must be > 0, got {resolution}")));
        }
        if elevations.len() != width_cells * height_cells {
            return Err(Error::Config(format!(
                "elevation count {} does not match {width_cells}x{height_cells}",
                elevations.len()
            )));
        }
        if elevations.iter().any(|z| !z.is_finite()) {
            return Err(Error::Config("non-finite elevation".into()));
        }
        Ok(HeightField { width_cells, height_cells, resolution, origin_xy, elevations })
    }

    pub fn zeros(width_cells: usize, height_cells: usize, resolution: f64, origin_xy: (f64, f64)) -> Result<Self> {
        Self::new(width_cells, height_cells, resolution, origin_xy, vec![0.0; width_cells * height_cells])
    }

    #[inline]
    pub fn node(&self, ix: usize, iy: usize) -> f64 {
        self.elevations[iy * self.width_cells + ix]
    }

    /// World-frame extent covered by the grid nodes, `(x_min, y_min, x_max, y_max)`.
    pub fn extent(&self) -> (f64, f64, f64, f64) {
        (
            self.origin_xy.0,
            self.origin_xy.1,
            self.origin_xy.0 + (self.width_cells - 1) as f64 * self.resolution,
            self.origin_xy.1 + (self.height_cells - 1) as f64 * self.resolution,
        )
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (x0, y0, x1, y1) = self.extent();
        x >= x0 && x <= x1 && y >= y0 && y <= y1
    }

    /// Bilinear elevation query. Errors if `(x, y)` lies outside the extent.
    pub fn elevation(&self, x: f64, y: f64) -> Result<f64> {
        if !self.contains(x, y) {
            let (x0, y0, x1, y1) = self.extent();
            return Err(Error::OutOfBounds(format!(
                "query ({x:.3}, {y:.3}) outside field extent [{x0:.3}, {x1:.3}] x [{y0:.3}, {y1:.3}]"
            )));
        }
        let gx = (x - self.origin_xy.0) / self.resolution;
        let gy = (y - self.origin_xy.1) / self.resolution;
        let ix = (floor(gx).max(0.0) as usize).min(self.width_cells.saturating_sub(2));
        let iy = (floor(gy).max(0.0) as usize).min(self.height_cells.saturating_sub(2));
        if self.width_cells == 1 || self.height_cells == 1 {
            // degenerate strip: fall back to nearest node
            let nx = (gx + 0.5) as usize;
            let ny = (gy + 0.5) as usize;
            return Ok(self.node(nx.min(self.width_cells - 1), ny.min(self.height_cells - 1)));
        }
        let tx = gx - ix as f64;
        let ty = gy - iy as f64;
        let z00 = self.node(ix, iy);
        let z10 = self.node(ix + 1, iy);
        let z01 = self.node(ix, iy + 1);
        let z11 = self.node(ix + 1, iy + 1);
        Ok(z00 * (1.0 - tx) * (1.0 - ty) + z10 * tx * (1.0 - ty) + z01 * (1.0 - tx) * ty + z11 * tx * ty)
    }

    /// Finite-difference slope magnitude at 0.05 m spacing, clamped to the
    /// field interior.
    pub fn slope(&self, x: f64, y: f64) -> Result<f64> {
        let h = 0.05;
        let (x0, y0, x1, y1) = self.extent();
        let xa = (x - h).max(x0);
        let xb = (x + h).min(x1);
        let ya = (y - h).max(y0);
        let yb = (y + h).min(y1);
        let dzdx = if xb > xa { (self.elevation(xb, y)? - self.elevation(xa, y)?) / (xb - xa) } else { 0.0 };
        let dzdy = if yb > ya { (self.elevation(x, yb)? - self.elevation(x, ya)?) / (yb - ya) } else { 0.0 };
        Ok(sqrt(dzdx * dzdx + dzdy * dzdy))
    }
}

/// The 6x17 frontal elevation grid in base frame, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightScan {
    pub values: [f64; SCAN_LEN],
}

impl HeightScan {
    pub fn new(values: [f64; SCAN_LEN]) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite scan value".into()));
        }
        Ok(HeightScan { values })
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * SCAN_COLS + col]
    }
}

/// 12-value pooled terrain descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledDescriptor {
    pub values: [f64; POOLED_LEN],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerrainKind {
    Flat,
    Wavy,
    Stepped,
    Spiked,
    Ramp,
    Mixed,
}

impl TerrainKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "flat" => TerrainKind::Flat,
            "wavy" => TerrainKind::Wavy,
            "stepped" => TerrainKind::Stepped,
            "spiked" => TerrainKind::Spiked,
            "ramp" => TerrainKind::Ramp,
            "mixed" => TerrainKind::Mixed,
            _ => return Err(Error::Parse(format!("unknown terrain kind '{s}'"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TerrainKind::Flat => "flat",
            TerrainKind::Wavy => "wavy",
            TerrainKind::Stepped => "stepped",
            TerrainKind::Spiked => "spiked",
            TerrainKind::Ramp => "ramp",
            TerrainKind::Mixed => "mixed",
        }
    }
}

/// Parameters for procedural terrain generation.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainSpec {
    pub kind: TerrainKind,
    pub seed: u64,
    /// Peak feature height in meters.
    pub amplitude: f64,
    /// Horizontal size of terrain features in meters.
    pub feature_scale: f64,
    /// Field extent (x, y) in meters.
    pub extent: (f64, f64),
    /// Grid resolution in meters per cell.
    pub resolution: f64,
}

impl TerrainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.amplitude < 0.0 {
            return Err(Error::Config(format!("amplitude must be >= 0, got {}", self.amplitude)));
        }
        if !(self.feature_scale > 0.0) {
            return Err(Error::Config(format!("feature_scale must be > 0, got {}", self.feature_scale)));
        }
        if !(self.resolution > 0.0) {
            return Err(Error::Config(format!("resolution must be > 0, got {}", self.resolution)));
        }
        if !(self.extent.0 > 0.0 && self.extent.1 > 0.0) {
            return Err(Error::Config("extent must be positive".into()));
        }
        Ok(())
    }
}

/// Elevation contribution of one terrain kind at world `(x, y)`.
///
/// `region` salts the RNG streams so mixed terrains can tile variants of
/// the same kind without repetition.
fn kind_elevation(kind: TerrainKind, spec: &TerrainSpec, region: u64, x: f64, y: f64) -> f64 {
    match kind {
        TerrainKind::Flat => 0.0,
        TerrainKind::Wavy => {
            // three superposed sinusoids; component amplitudes sum to `amplitude`
            let fractions = [0.5, 0.3, 0.2];
            let mut z = 0.0;
            for (i, frac) in fractions.iter().enumerate() {
                let mut s = Stream::new(&[spec.seed, region, 11, i as u64]);
                let theta = s.uniform_in(0.0, core::f64::consts::PI);
                let wavelength = spec.feature_scale * s.uniform_in(0.8, 1.6);
                let phase = s.uniform_in(0.0, 2.0 * core::f64::consts::PI);
                let k = 2.0 * core::f64::consts::PI / wavelength;
                let proj = x * cos(theta) + y * sin(theta);
                z += spec.amplitude * frac * sin(k * proj + phase);
            }
            z
        }
        TerrainKind::Stepped => {
            let tile = spec.feature_scale;
            let tx = floor(x / tile) as i64;
            let ty = floor(y / tile) as i64;
            let mut s = Stream::new(&[spec.seed, region, 13, tx as u64, ty as u64]);
            s.uniform_in(0.0, spec.amplitude)
        }
        TerrainKind::Spiked => {
            // sparse gaussian bumps on a jittered grid, max-composed
            let cell = spec.feature_scale * 2.0;
            let sigma = spec.feature_scale / 3.0;
            let cx = floor(x / cell) as i64;
            let cy = floor(y / cell) as i64;
            let mut z: f64 = 0.0;
            for dx in -1..=1i64 {
                for dy in -1..=1i64 {
                    let (tx, ty) = (cx + dx, cy + dy);
                    let mut s = Stream::new(&[spec.seed, region, 17, tx as u64, ty as u64]);
                    // roughly half of the cells carry a bump
                    if s.uniform() < 0.5 {
                        continue;
                    }
                    let bx = (tx as f64 + s.uniform()) * cell;
                    let by = (ty as f64 + s.uniform()) * cell;
                    let h = spec.amplitude * s.uniform_in(0.4, 1.0);
                    let d2 = (x - bx) * (x - bx) + (y - by) * (y - by);
                    z = z.max(h * exp(-d2 / (2.0 * sigma * sigma)));
                }
            }
            z
        }
        TerrainKind::Ramp => {
            let span = spec.extent.0;
            spec.amplitude * (x / span).clamp(0.0, 1.0)
        }
        TerrainKind::Mixed => {
            // tiled composition of the other kinds; flat is weighted up so
            // traversable corridors exist
            let patch = (spec.feature_scale * 6.0).max(1.0);
            let px = floor(x / patch) as i64;
            let py = floor(y / patch) as i64;
            let mut s = Stream::new(&[spec.seed, 19, px as u64, py as u64]);
            let kinds = [
                TerrainKind::Flat,
                TerrainKind::Flat,
                TerrainKind::Wavy,
                TerrainKind::Stepped,
                TerrainKind::Spiked,
            ];
            let sub = kinds[(s.next_u64() % kinds.len() as u64) as usize];
            let region = ((px as u64) << 32) ^ (py as u64 & 0xFFFF_FFFF) ^ 0xA5A5;
            kind_elevation(sub, spec, region, x, y)
        }
    }
}

/// Generate a procedural terrain. Deterministic for a fixed spec.
pub fn generate_terrain(spec: &TerrainSpec) -> Result<HeightField> {
    spec.validate()?;
    let width_cells = (spec.extent.0 / spec.resolution) as usize + 1;
    let height_cells = (spec.extent.1 / spec.resolution) as usize + 1;
    let mut elevations = Vec::with_capacity(width_cells * height_cells);
    for iy in 0..height_cells {
        for ix in 0..width_cells {
            let x = ix as f64 * spec.resolution;
            let y = iy as f64 * spec.resolution;
            elevations.push(kind_elevation(spec.kind, spec, 0, x, y));
        }
    }
    HeightField::new(width_cells, height_cells, spec.resolution, (0.0, 0.0), elevations)
}

/// Scan sample offset in base frame for `(row, col)`.
#[inline]
pub fn scan_offset(row: usize, col: usize) -> (f64, f64) {
    (SCAN_X_START + row as f64 * SCAN_RES, SCAN_Y_START + col as f64 * SCAN_RES)
}

/// Extract the frontal 6x17 height scan at `base_pose = (x, y, psi)`.
///
/// Values are elevations relative to the ground height under the base.
pub fn extract_height_scan(field: &HeightField, base_pose: (f64, f64, f64)) -> Result<HeightScan> {
    let (bx, by, psi) = base_pose;
    let (c, s) = (cos(psi), sin(psi));
    let base_z = field.elevation(bx, by)?;
    let mut values = [0.0; SCAN_LEN];
    for row in 0..SCAN_ROWS {
        for col in 0..SCAN_COLS {
            let (ox, oy) = scan_offset(row, col);
            let wx = bx + c * ox - s * oy;
            let wy = by + s * ox + c * oy;
            let z = field.elevation(wx, wy).map_err(|_| {
                Error::OutOfBounds(format!(
                    "scan window corner ({wx:.3}, {wy:.3}) at row {row} col {col} exits the field"
                ))
            })?;
            values[row * SCAN_COLS + col] = z - base_z;
        }
    }
    HeightScan::new(values)
}

/// Non-overlapping 6x17 -> 12 average pooling (3 row pairs x 4 column groups).
pub fn pool_grid(scan: &HeightScan) -> PooledDescriptor {
    let mut values = [0.0; POOLED_LEN];
    for (rg, &(r0, r1)) in ROW_GROUPS.iter().enumerate() {
        for (cg, &(c0, c1)) in COL_GROUPS.iter().enumerate() {
            let mut sum = 0.0;
            let mut n = 0usize;
            for r in r0..r1 {
                for c in c0..c1 {
                    sum += scan.at(r, c);
                    n += 1;
                }
            }
            values[rg * COL_GROUPS.len() + cg] = sum / n as f64;
        }
    }
    PooledDescriptor { values }
}

/// Synthesize a height scan by binning base-frame points into the 6x17
/// frontal window. Empty cells take the nearest nonempty cell's value
/// (Euclidean grid distance, ties by row-major order).
pub fn pointcloud_to_heightscan(points: &[(f64, f64, f64)]) -> Result<HeightScan> {
    if points.is_empty() {
        return Err(Error::Config("empty point set".into()));
    }
    let mut sums = [0.0; SCAN_LEN];
    let mut counts = [0usize; SCAN_LEN];
    for &(x, y, z) in points {
        // cells centered on the scan sample points
        let gr = floor((x - SCAN_X_START) / SCAN_RES + 0.5) as i64;
        let gc = floor((y - SCAN_Y_START) / SCAN_RES + 0.5) as i64;
        if gr < 0 || gr >= SCAN_ROWS as i64 || gc < 0 || gc >= SCAN_COLS as i64 {
            continue;
        }
        let idx = gr as usize * SCAN_COLS + gc as usize;
        sums[idx] += z;
        counts[idx] += 1;
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::Config("no points inside the scan window".into()));
    }
    let mut values = [0.0; SCAN_LEN];
    for i in 0..SCAN_LEN {
        if counts[i] > 0 {
            values[i] = sums[i] / counts[i] as f64;
        }
    }
    for r in 0..SCAN_ROWS {
        for c in 0..SCAN_COLS {
            let idx = r * SCAN_COLS + c;
            if counts[idx] > 0 {
                continue;
            }
            let mut best = usize::MAX;
            let mut best_d2 = i64::MAX;
            for rr in 0..SCAN_ROWS {
                for cc in 0..SCAN_COLS {
                    let j = rr * SCAN_COLS + cc;
                    if counts[j] == 0 {
                        continue;
                    }
                    let dr = rr as i64 - r as i64;
                    let dc = cc as i64 - c as i64;
                    let d2 = dr * dr + dc * dc;
                    if d2 < best_d2 {
                        best_d2 = d2;
                        best = j;
                    }
                }
            }
            values[idx] = values[best];
        }
    }
    HeightScan::new(values)
}

/// Population variance of the 102 scan values.
pub fn heightscan_variance(scan: &HeightScan) -> f64 {
    let n = SCAN_LEN as f64;
    let mean = scan.values.iter().sum::<f64>() / n;
    scan.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}
