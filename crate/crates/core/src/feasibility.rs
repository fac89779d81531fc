//! Quasi-static support-polygon stability margins and the
//! feasibility-error metric between predicted and actual foothold sets.

use alloc::vec::Vec;

use libm::sqrt;

use crate::error::{Error, Result};
use crate::gait::FootholdSet;

/// Cost-mapping constant and margin method selection.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityConfig {
    pub epsilon: f64,
    pub margin_method: MarginMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginMethod {
    SupportPolygon,
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        FeasibilityConfig { epsilon: 0.01, margin_method: MarginMethod::SupportPolygon }
    }
}

/// Per-step feasibility record.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityRecord {
    pub t: usize,
    pub m_pred: f64,
    pub m_actual: f64,
    pub c_pred: f64,
    pub c_actual: f64,
    pub e_t: f64,
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew monotone-chain convex hull, counter-clockwise, no duplicate
/// endpoint. Collinear points are dropped.
pub fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return sqrt((p.0 - a.0) * (p.0 - a.0) + (p.1 - a.1) * (p.1 - a.1));
    }
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0);
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    sqrt((p.0 - cx) * (p.0 - cx) + (p.1 - cy) * (p.1 - cy))
}

/// Signed distance from `com_xy` to the support-polygon boundary of the
/// feet's xy projections: positive inside, negative outside, zero on the
/// boundary. Degenerate (collinear or coincident) stances are never
/// feasible: the margin is minus the distance to the hull segment/point.
pub fn stability_margin(feet: &FootholdSet, com_xy: (f64, f64)) -> Result<f64> {
    if feet.positions.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Config("non-finite foothold".into()));
    }
    let pts: Vec<(f64, f64)> = feet.positions.iter().map(|p| (p[0], p[1])).collect();
    let hull = convex_hull(&pts);
    match hull.len() {
        0 => unreachable!("four input points"),
        1 => {
            let d = point_segment_distance(com_xy, hull[0], hull[0]);
            Ok(-d)
        }
        2 => {
            let d = point_segment_distance(com_xy, hull[0], hull[1]);
            Ok(-d)
        }
        _ => {
            let n = hull.len();
            let mut min_dist = f64::INFINITY;
            let mut inside = true;
            for i in 0..n {
                let a = hull[i];
                let b = hull[(i + 1) % n];
                if cross(a, b, com_xy) < 0.0 {
                    inside = false;
                }
                min_dist = min_dist.min(point_segment_distance(com_xy, a, b));
            }
            Ok(if inside { min_dist } else { -min_dist })
        }
    }
}

/// Piecewise margin-to-cost mapping: `1/(m + eps)` for `m > 0`, `|m| + 1`
/// otherwise. The discontinuity at `m = 0` is preserved as defined.
pub fn margin_to_cost(m: f64, cfg: &FeasibilityConfig) -> f64 {
    if m > 0.0 {
        1.0 / (m + cfg.epsilon)
    } else {
        -m + 1.0
    }
}

/// Build one feasibility record from predicted and actual world-frame sets.
pub fn feasibility_record(
    t: usize,
    predicted: &FootholdSet,
    actual: &FootholdSet,
    com_xy: (f64, f64),
    cfg: &FeasibilityConfig,
) -> Result<FeasibilityRecord> {
    let m_pred = stability_margin(predicted, com_xy)?;
    let m_actual = stability_margin(actual, com_xy)?;
    let c_pred = margin_to_cost(m_pred, cfg);
    let c_actual = margin_to_cost(m_actual, cfg);
    Ok(FeasibilityRecord { t, m_pred, m_actual, c_pred, c_actual, e_t: (c_pred - c_actual).abs() })
}

/// Mean and population std of `e_t` over a trajectory.
pub fn feasibility_error(records: &[FeasibilityRecord]) -> Result<(f64, f64)> {
    if records.is_empty() {
        return Err(Error::Config("empty trajectory".into()));
    }
    let n = records.len() as f64;
    let mean = records.iter().map(|r| r.e_t).sum::<f64>() / n;
    let var = records.iter().map(|r| (r.e_t - mean) * (r.e_t - mean)).sum::<f64>() / n;
    Ok((mean, sqrt(var)))
}
