//! ID/OOD signal reduction, thresholding, and contiguous-segment top-K
//! labeling of trajectory traces.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::net::EpistemicPrediction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    /// Scalar epistemic summary s_bar.
    Proposed,
    /// Height-scan variance Var(h).
    TerrainVariance,
}

/// A per-step scalar signal over a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: SignalKind,
}

impl SignalTrace {
    pub fn new(times: Vec<f64>, values: Vec<f64>, kind: SignalKind) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Shape("times and values differ in length".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("times must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite signal value".into()));
        }
        Ok(SignalTrace { times, values, kind })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Id,
    Ood,
}

/// Half-open index segment `[start, end)` with its mean signal and label.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub mean_signal: f64,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OodSegmentation {
    pub threshold: f64,
    pub segments: Vec<Segment>,
}

impl OodSegmentation {
    /// Per-step labels, expanded from the segments.
    pub fn labels(&self, len: usize) -> Vec<Label> {
        let mut out = alloc::vec![Label::Id; len];
        for seg in &self.segments {
            for l in out[seg.start..seg.end].iter_mut() {
                *l = seg.label;
            }
        }
        out
    }
}

/// Mean of each leg's three coordinate variances.
pub fn per_leg_uncertainty(pred: &EpistemicPrediction) -> [f64; 4] {
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = (pred.variance[3 * i] + pred.variance[3 * i + 1] + pred.variance[3 * i + 2]) / 3.0;
    }
    out
}

/// ID threshold: arithmetic mean of all values across all ID traces.
pub fn id_threshold(id_traces: &[SignalTrace]) -> Result<f64> {
    let n: usize = id_traces.iter().map(|t| t.values.len()).sum();
    if n == 0 {
        return Err(Error::Config("no ID trace values".into()));
    }
    Ok(id_traces.iter().flat_map(|t| t.values.iter()).sum::<f64>() / n as f64)
}

/// Segment a trace into ID/OOD regions: maximal contiguous runs with
/// value strictly above the threshold are candidates; the top
/// `k_transitions` by mean signal (ties to the earlier start) are OOD and
/// everything else is ID.
pub fn segment_ood(trace: &SignalTrace, threshold: f64, k_transitions: usize) -> OodSegmentation {
    let n = trace.values.len();
    let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
    let mut i = 0;
    while i < n {
        if trace.values[i] > threshold {
            let start = i;
            while i < n && trace.values[i] > threshold {
                i += 1;
            }
            let mean = trace.values[start..i].iter().sum::<f64>() / (i - start) as f64;
            candidates.push((start, i, mean));
        } else {
            i += 1;
        }
    }
    // rank by mean descending, earlier start wins ties
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        candidates[b].2.partial_cmp(&candidates[a].2).unwrap().then(candidates[a].0.cmp(&candidates[b].0))
    });
    let selected: Vec<usize> = order.into_iter().take(k_transitions).collect();

    // rebuild the full partition in index order
    let mut boundaries: Vec<(usize, usize, f64, Label)> = Vec::new();
    for (ci, &(s, e, m)) in candidates.iter().enumerate() {
        let label = if selected.contains(&ci) { Label::Ood } else { Label::Id };
        boundaries.push((s, e, m, label));
    }
    let mut segments = Vec::new();
    let mut cursor = 0usize;
    for (s, e, m, label) in boundaries {
        if s > cursor {
            let mean = trace.values[cursor..s].iter().sum::<f64>() / (s - cursor) as f64;
            segments.push(Segment { start: cursor, end: s, mean_signal: mean, label: Label::Id });
        }
        segments.push(Segment { start: s, end: e, mean_signal: m, label });
        cursor = e;
    }
    if cursor < n {
        let mean = trace.values[cursor..n].iter().sum::<f64>() / (n - cursor) as f64;
        segments.push(Segment { start: cursor, end: n, mean_signal: mean, label: Label::Id });
    }
    // merge adjacent same-label segments so non-selected candidates fold
    // back into the surrounding ID regions
    let mut merged: Vec<Segment> = Vec::new();
    for seg in segments {
        if let Some(last) = merged.last_mut() {
            if last.label == seg.label {
                let ln = (last.end - last.start) as f64;
                let sn = (seg.end - seg.start) as f64;
                last.mean_signal = (last.mean_signal * ln + seg.mean_signal * sn) / (ln + sn);
                last.end = seg.end;
                continue;
            }
        }
        merged.push(seg);
    }
    OodSegmentation { threshold, segments: merged }
}

/// Mean foothold error within ID and OOD regions; `None` for a label
/// with no steps.
pub fn region_error(errors: &[f64], seg: &OodSegmentation) -> Result<(Option<f64>, Option<f64>)> {
    let covered: usize = seg.segments.iter().map(|s| s.end - s.start).sum();
    if covered != errors.len() {
        return Err(Error::Shape(format!(
            "segmentation covers {covered} steps, error trace has {}",
            errors.len()
        )));
    }
    let mut sums = [0.0; 2];
    let mut counts = [0usize; 2];
    for s in &seg.segments {
        let idx = if s.label == Label::Id { 0 } else { 1 };
        for e in &errors[s.start..s.end] {
            sums[idx] += e;
            counts[idx] += 1;
        }
    }
    let mk = |i: usize| if counts[i] > 0 { Some(sums[i] / counts[i] as f64) } else { None };
    Ok((mk(0), mk(1)))
}
