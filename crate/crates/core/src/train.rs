//! Dataset collection, the three-term calibration loss, manual
//! backpropagation through the MC-ensemble statistics, and the training
//! loop.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

use crate::error::{Error, Result};
use crate::gait::{self, FootholdSet, GaitConfig, RobotState};
use crate::net::{
    forward_cached, mc_statistics, Activation, DropoutMask, EpistemicPrediction, ForwardCache,
    MainInput, NetworkWeights, UncInput, OUTPUT_LEN, VAR_CEIL, VAR_FLOOR,
};
use crate::rng::{self, Stream};
use crate::terrain::{extract_height_scan, pool_grid, HeightField};

/// One supervised sample: inputs at time t, actual touchdown set as label.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub x: MainInput,
    pub u: UncInput,
    /// Leg-major (LF, RF, LH, RH) x (x, y, z) in the base frame.
    pub y: [f64; OUTPUT_LEN],
}

/// Loss term weights and the calibration target band.
#[derive(Debug, Clone, PartialEq)]
pub struct LossWeights {
    pub w_pose: f64,
    pub w_epi: f64,
    pub w_cal: f64,
    pub lambda: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub eps_band: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            w_pose: 1.0,
            w_epi: 0.5,
            w_cal: 0.2,
            lambda: 0.5,
            s_min: 1e-4,
            s_max: 1e-2,
            eps_band: 1e-8,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if self.w_pose < 0.0 || self.w_epi < 0.0 || self.w_cal < 0.0 || self.lambda < 0.0 {
            return Err(Error::Config("loss weights must be >= 0".into()));
        }
        if !(self.s_max > self.s_min && self.s_min >= 0.0) {
            return Err(Error::Config(format!(
                "target band requires s_max > s_min >= 0, got [{}, {}]",
                self.s_min, self.s_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    SgdMomentum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// MC samples per member per training step.
    pub m_train: usize,
    /// Ensemble size K.
    pub members: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            m_train: 5,
            members: 3,
            seed: 0,
            optimizer: OptimizerKind::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 4 {
            return Err(Error::Config(format!("batch_size must be >= 4, got {}", self.batch_size)));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if self.members * self.m_train < 2 {
            return Err(Error::InsufficientSamples("K * M_train must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub pose: f64,
    pub epi: f64,
    pub cal: f64,
}

/// Commanded-velocity source for rollouts.
#[derive(Debug, Clone, PartialEq)]
pub enum CmdDistribution {
    Constant((f64, f64, f64)),
    /// Piecewise-constant draws, redrawn every `hold_steps` steps.
    Uniform {
        vx: (f64, f64),
        vy: (f64, f64),
        omega: (f64, f64),
        hold_steps: usize,
    },
}

impl CmdDistribution {
    pub fn sample(&self, seed: u64, step: usize) -> (f64, f64, f64) {
        match self {
            CmdDistribution::Constant(c) => *c,
            CmdDistribution::Uniform { vx, vy, omega, hold_steps } => {
                let segment = step / (*hold_steps).max(1);
                let mut s = Stream::new(&[seed, 0xC3D, segment as u64]);
                (s.uniform_in(vx.0, vx.1), s.uniform_in(vy.0, vy.1), s.uniform_in(omega.0, omega.1))
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CollectMeta {
    /// Steps dropped because the scan window or a foothold left the field.
    pub truncated_steps: usize,
}

/// Roll the gait oracle forward and emit one training sample per step.
#[allow(clippy::too_many_arguments)]
pub fn collect_dataset(
    field: &HeightField,
    cfg: &GaitConfig,
    cmd_distribution: &CmdDistribution,
    n_steps: usize,
    seed: u64,
    start: RobotState,
    dt: f64,
) -> Result<(Vec<TrainingSample>, CollectMeta)> {
    if n_steps < 1 {
        return Err(Error::Config("n_steps must be >= 1".into()));
    }
    cfg.validate()?;
    let mut samples = Vec::with_capacity(n_steps);
    let mut meta = CollectMeta::default();
    let mut state = start;
    for t in 0..n_steps {
        let cmd = cmd_distribution.sample(seed, t);
        let step = || -> Result<TrainingSample> {
            let scan = extract_height_scan(field, (state.x, state.y, state.psi))?;
            let pooled = pool_grid(&scan);
            let x = MainInput::assemble(&scan.values, cmd, state.gait_phase);
            let u = UncInput::assemble(cmd, &pooled.values);
            let nominal = gait::nominal_footholds(&state, cmd, field, cfg)?;
            let world = gait::to_world(&state, &nominal);
            let actual = gait::actual_footholds(&world, field, cfg, rng::key(&[seed, t as u64]))?;
            let y = gait::to_base(&state, &actual).flat();
            Ok(TrainingSample { x, u, y })
        };
        match step() {
            Ok(sample) => samples.push(sample),
            Err(Error::OutOfBounds(_)) => {
                meta.truncated_steps = n_steps - t;
                break;
            }
            Err(e) => return Err(e),
        }
        state = gait::advance_state(&state, cmd, dt, cfg.cycle_period);
    }
    Ok((samples, meta))
}

/// Per-leg Euclidean position error between a 12-vector prediction and a
/// 12-vector label, averaged over the four legs.
pub fn foothold_error(mu: &[f64; OUTPUT_LEN], y: &[f64; OUTPUT_LEN]) -> f64 {
    let mut e = 0.0;
    for i in 0..4 {
        let mut n2 = 0.0;
        for j in 0..3 {
            let d = mu[3 * i + j] - y[3 * i + j];
            n2 += d * d;
        }
        e += sqrt(n2);
    }
    e / 4.0
}

/// Pearson correlation; `None` when either vector has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        sxy += (x - ma) * (y - mb);
        sxx += (x - ma) * (x - ma);
        syy += (y - mb) * (y - mb);
    }
    if sxx > 0.0 && syy > 0.0 {
        Some(sxy / sqrt(sxx * syy))
    } else {
        None
    }
}

/// Min-max map of per-sample errors into the target uncertainty band
/// `[s_min, s_max]` within a batch.
pub fn band_targets(e: &[f64], w: &LossWeights) -> Vec<f64> {
    let e_min = e.iter().copied().fold(f64::INFINITY, f64::min);
    let e_max = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let d = (e_max - e_min) + w.eps_band;
    e.iter().map(|&et| w.s_min + (w.s_max - w.s_min) * (et - e_min) / d).collect()
}

struct BatchLossTerms {
    breakdown: LossBreakdown,
    /// dL/d mu_bar per sample, 12 each.
    d_mean: Vec<[f64; OUTPUT_LEN]>,
    /// dL/d sigma^2 (clamped) per sample, 12 each.
    d_var: Vec<[f64; OUTPUT_LEN]>,
}

/// Loss terms and their gradients w.r.t. the per-sample MC statistics.
///
/// The calibration target `s*` is differentiated through fully, including
/// the batch min/max of `e` (subgradient at the first arg-min/max), so the
/// analytic gradient matches finite differences of the total loss.
fn loss_terms(batch: &[TrainingSample], preds: &[EpistemicPrediction], w: &LossWeights) -> Result<BatchLossTerms> {
    w.validate()?;
    let b_n = batch.len();
    if b_n < 2 {
        return Err(Error::InsufficientSamples(format!("batch size must be >= 2, got {b_n}")));
    }
    if preds.len() != b_n {
        return Err(Error::Shape("predictions do not match batch".into()));
    }
    let bf = b_n as f64;

    let mut d_mean = vec![[0.0; OUTPUT_LEN]; b_n];
    let mut d_var = vec![[0.0; OUTPUT_LEN]; b_n];

    // pose + hinge terms
    let mut pose = 0.0;
    let mut epi = 0.0;
    for (bi, (sample, pred)) in batch.iter().zip(preds.iter()).enumerate() {
        for j in 0..OUTPUT_LEN {
            let r = sample.y[j] - pred.mean[j];
            pose += r * r / 12.0;
            d_mean[bi][j] += w.w_pose / bf * (-2.0 * r / 12.0);
            let hinge = r * r - pred.variance[j];
            if hinge > 0.0 {
                epi += hinge / 12.0;
                d_mean[bi][j] += w.w_epi / bf * (-2.0 * r / 12.0);
                d_var[bi][j] += w.w_epi / bf * (-1.0 / 12.0);
            }
        }
    }
    pose /= bf;
    epi /= bf;

    // calibration: e_t, s_bar_t, band targets, Pearson
    let mut e = vec![0.0; b_n];
    let mut s = vec![0.0; b_n];
    // de/d mu_bar, filled per sample
    let mut de_dmu = vec![[0.0; OUTPUT_LEN]; b_n];
    for (bi, (sample, pred)) in batch.iter().zip(preds.iter()).enumerate() {
        let mut et = 0.0;
        for i in 0..4 {
            let mut n2 = 0.0;
            for j in 0..3 {
                let d = pred.mean[3 * i + j] - sample.y[3 * i + j];
                n2 += d * d;
            }
            let norm = sqrt(n2);
            et += norm;
            if norm > 0.0 {
                for j in 0..3 {
                    de_dmu[bi][3 * i + j] = (pred.mean[3 * i + j] - sample.y[3 * i + j]) / (4.0 * norm);
                }
            }
        }
        e[bi] = et / 4.0;
        s[bi] = pred.variance.iter().sum::<f64>() / OUTPUT_LEN as f64;
    }

    let mut b_min = 0;
    let mut b_max = 0;
    for bi in 1..b_n {
        if e[bi] < e[b_min] {
            b_min = bi;
        }
        if e[bi] > e[b_max] {
            b_max = bi;
        }
    }
    let delta_s = w.s_max - w.s_min;
    let d = (e[b_max] - e[b_min]) + w.eps_band;
    let targets = band_targets(&e, w);

    let mut cal = 0.0;
    let mut sign = vec![0.0; b_n];
    for bi in 0..b_n {
        let diff = s[bi] - targets[bi];
        cal += diff.abs() / bf;
        sign[bi] = if diff > 0.0 {
            1.0
        } else if diff < 0.0 {
            -1.0
        } else {
            0.0
        };
    }

    // Pearson over the batch; zero spread in either vector is treated as
    // neutral evidence: rho = 0 (full penalty lambda) with zero gradient.
    let me = e.iter().sum::<f64>() / bf;
    let ms = s.iter().sum::<f64>() / bf;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for bi in 0..b_n {
        sxy += (e[bi] - me) * (s[bi] - ms);
        sxx += (e[bi] - me) * (e[bi] - me);
        syy += (s[bi] - ms) * (s[bi] - ms);
    }
    let degenerate = !(sxx > 0.0 && syy > 0.0);
    let rho = if degenerate { 0.0 } else { sxy / sqrt(sxx * syy) };
    cal += w.lambda * (1.0 - rho);

    // dL_cal/ds and dL_cal/de
    let mut dl_ds = vec![0.0; b_n];
    let mut dl_de = vec![0.0; b_n];
    let sum_sign: f64 = sign.iter().sum();
    let sum_sign_espan: f64 = (0..b_n).map(|bi| sign[bi] * (e[bi] - e[b_min])).sum();
    for q in 0..b_n {
        dl_ds[q] = sign[q] / bf;
        // band-target path through e (including e_min / e_max)
        let mut g = sign[q] * delta_s / d;
        if q == b_min {
            g -= sum_sign * delta_s / d;
            g += sum_sign_espan * delta_s / (d * d);
        }
        if q == b_max {
            g -= sum_sign_espan * delta_s / (d * d);
        }
        dl_de[q] = -g / bf;
        if !degenerate {
            let root = sqrt(sxx * syy);
            let drho_de = (s[q] - ms) / root - rho * (e[q] - me) / sxx;
            let drho_ds = (e[q] - me) / root - rho * (s[q] - ms) / syy;
            dl_de[q] += -w.lambda * drho_de;
            dl_ds[q] += -w.lambda * drho_ds;
        }
    }

    for bi in 0..b_n {
        for j in 0..OUTPUT_LEN {
            d_mean[bi][j] += w.w_cal * dl_de[bi] * de_dmu[bi][j];
            d_var[bi][j] += w.w_cal * dl_ds[bi] / OUTPUT_LEN as f64;
        }
    }

    let total = w.w_pose * pose + w.w_epi * epi + w.w_cal * cal;
    Ok(BatchLossTerms {
        breakdown: LossBreakdown { total, pose, epi, cal },
        d_mean,
        d_var,
    })
}

/// Loss components for a batch given already-computed predictions.
pub fn compute_loss(
    batch: &[TrainingSample],
    preds: &[EpistemicPrediction],
    w: &LossWeights,
) -> Result<LossBreakdown> {
    Ok(loss_terms(batch, preds, w)?.breakdown)
}

/// Gradients for one ensemble member, mirroring its layer shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct GradSet {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl GradSet {
    pub fn zeros(net: &NetworkWeights) -> Self {
        let layers = net.layers();
        GradSet {
            weights: layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }
}

/// Dropout seed for sample `b` within a batch-level seed.
fn pass_seed(seed: u64, b: usize) -> u64 {
    rng::key(&[seed, 0xBA7C, b as u64])
}

/// Evaluate the joint loss of the ensemble on a batch, forward only.
/// Shares the dropout-mask derivation with [`backward`], so the two are
/// finite-difference-consistent.
pub fn batch_loss(
    batch: &[TrainingSample],
    ensemble: &[NetworkWeights],
    w: &LossWeights,
    m_train: usize,
    seed: u64,
) -> Result<LossBreakdown> {
    let preds = batch_predictions(batch, ensemble, m_train, seed)?;
    compute_loss(batch, &preds, w)
}

fn batch_predictions(
    batch: &[TrainingSample],
    ensemble: &[NetworkWeights],
    m_train: usize,
    seed: u64,
) -> Result<Vec<EpistemicPrediction>> {
    batch
        .iter()
        .enumerate()
        .map(|(b, sample)| {
            let mut passes = Vec::with_capacity(ensemble.len() * m_train);
            for (k, net) in ensemble.iter().enumerate() {
                for m in 0..m_train {
                    let mask = DropoutMask::sample(net, pass_seed(seed, b), k as u64, m as u64);
                    passes.push(crate::net::forward(net, &sample.x, &sample.u, Some(&mask))?);
                }
            }
            mc_statistics(&passes)
        })
        .collect()
}

/// Backpropagate `g_out` through one member's cached pass, accumulating
/// into `grads`.
fn backprop_pass(
    net: &NetworkWeights,
    sample: &TrainingSample,
    cache: &ForwardCache,
    mask: &DropoutMask,
    g_out: &[f64; OUTPUT_LEN],
    grads: &mut GradSet,
) {
    let layers = net.layers();
    let n_layers = layers.len();
    let nx = net.x_branch.len();
    let nu = net.u_branch.len();

    // walk the head backwards, then split into the two branches
    let mut g: Vec<f64> = g_out.to_vec();
    for li in (nx + nu..n_layers).rev() {
        g = backprop_layer(layers[li], li, sample, net, cache, mask, &g, grads);
    }
    let x_dim = net.x_branch.last().map(|l| l.out_dim).unwrap_or(0);
    let g_x: Vec<f64> = g[..x_dim].to_vec();
    let g_u: Vec<f64> = g[x_dim..].to_vec();

    let mut g = g_x;
    for li in (0..nx).rev() {
        g = backprop_layer(layers[li], li, sample, net, cache, mask, &g, grads);
    }
    let mut g = g_u;
    for li in (nx..nx + nu).rev() {
        g = backprop_layer(layers[li], li, sample, net, cache, mask, &g, grads);
    }
}

/// Input vector of layer `li` in `layers()` order for a given pass.
fn layer_input<'a>(
    net: &'a NetworkWeights,
    li: usize,
    sample: &'a TrainingSample,
    cache: &'a ForwardCache,
) -> Vec<f64> {
    let nx = net.x_branch.len();
    let nu = net.u_branch.len();
    if li == 0 {
        sample.x.0.to_vec()
    } else if li < nx {
        cache.outputs[li - 1].clone()
    } else if li == nx {
        sample.u.0.to_vec()
    } else if li < nx + nu {
        cache.outputs[li - 1].clone()
    } else if li == nx + nu {
        let mut v = cache.outputs[nx - 1].clone();
        v.extend_from_slice(&cache.outputs[nx + nu - 1]);
        v
    } else {
        cache.outputs[li - 1].clone()
    }
}

#[allow(clippy::too_many_arguments)]
fn backprop_layer(
    layer: &crate::net::Layer,
    li: usize,
    sample: &TrainingSample,
    net: &NetworkWeights,
    cache: &ForwardCache,
    mask: &DropoutMask,
    g_out: &[f64],
    grads: &mut GradSet,
) -> Vec<f64> {
    let input = layer_input(net, li, sample, cache);
    let act = &cache.activated[li];
    let m = &mask.masks[li];
    let mut g_z = vec![0.0; layer.out_dim];
    for o in 0..layer.out_dim {
        let mut g = g_out[o];
        if !m.is_empty() {
            g *= m[o];
        }
        g_z[o] = match layer.activation {
            Activation::Tanh => g * (1.0 - act[o] * act[o]),
            Activation::Linear => g,
        };
    }
    let gw = &mut grads.weights[li];
    let gb = &mut grads.biases[li];
    let mut g_in = vec![0.0; layer.in_dim];
    for o in 0..layer.out_dim {
        let gz = g_z[o];
        gb[o] += gz;
        let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
        let grow = &mut gw[o * layer.in_dim..(o + 1) * layer.in_dim];
        for i in 0..layer.in_dim {
            grow[i] += gz * input[i];
            g_in[i] += gz * row[i];
        }
    }
    g_in
}

/// Exact analytic gradients of the joint loss for every ensemble member.
///
/// Gradients flow through the MC mean, the unbiased sample variance
/// (zeroed where the clamp saturates), the hinge, the band target, and the
/// Pearson term. Dropout masks are fixed per `(seed, sample, member,
/// pass)` for the whole forward + backward.
pub fn backward(
    batch: &[TrainingSample],
    ensemble: &[NetworkWeights],
    w: &LossWeights,
    m_train: usize,
    seed: u64,
) -> Result<(Vec<GradSet>, LossBreakdown)> {
    let k_n = ensemble.len();
    let p_n = k_n * m_train;
    if p_n < 2 {
        return Err(Error::InsufficientSamples("K * M_train must be >= 2".into()));
    }

    // forward all passes with caches
    let mut all_caches: Vec<Vec<(DropoutMask, ForwardCache, [f64; OUTPUT_LEN])>> = Vec::with_capacity(batch.len());
    let mut preds: Vec<EpistemicPrediction> = Vec::with_capacity(batch.len());
    let mut raw_vars: Vec<[f64; OUTPUT_LEN]> = Vec::with_capacity(batch.len());
    for (b, sample) in batch.iter().enumerate() {
        let mut passes = Vec::with_capacity(p_n);
        for (k, net) in ensemble.iter().enumerate() {
            for m in 0..m_train {
                let mask = DropoutMask::sample(net, pass_seed(seed, b), k as u64, m as u64);
                let (cache, out) = forward_cached(net, &sample.x, &sample.u, Some(&mask))?;
                passes.push((mask, cache, out));
            }
        }
        let outputs: Vec<[f64; OUTPUT_LEN]> = passes.iter().map(|p| p.2).collect();
        let pred = mc_statistics(&outputs)?;
        // recover the unclamped variance for the clamp mask
        let mut raw = [0.0; OUTPUT_LEN];
        for j in 0..OUTPUT_LEN {
            let mean = pred.mean[j];
            raw[j] = outputs.iter().map(|o| (o[j] - mean) * (o[j] - mean)).sum::<f64>() / (p_n as f64 - 1.0);
        }
        raw_vars.push(raw);
        preds.push(pred);
        all_caches.push(passes);
    }

    let terms = loss_terms(batch, &preds, w)?;

    let mut grads: Vec<GradSet> = ensemble.iter().map(GradSet::zeros).collect();
    for (b, sample) in batch.iter().enumerate() {
        let pred = &preds[b];
        let raw = &raw_vars[b];
        // clamp pass-through mask
        let mut d_var_raw = [0.0; OUTPUT_LEN];
        for j in 0..OUTPUT_LEN {
            if raw[j] > VAR_FLOOR && raw[j] < VAR_CEIL {
                d_var_raw[j] = terms.d_var[b][j];
            }
        }
        for (p, (mask, cache, out)) in all_caches[b].iter().enumerate() {
            let k = p / m_train;
            let mut g_out = [0.0; OUTPUT_LEN];
            for j in 0..OUTPUT_LEN {
                g_out[j] = terms.d_mean[b][j] / p_n as f64
                    + d_var_raw[j] * 2.0 * (out[j] - pred.mean[j]) / (p_n as f64 - 1.0);
            }
            backprop_pass(&ensemble[k], sample, cache, mask, &g_out, &mut grads[k]);
        }
    }
    Ok((grads, terms.breakdown))
}

/// Adam / SGD-momentum state for one member.
struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    step: u64,
    m_w: Vec<Vec<f64>>,
    m_b: Vec<Vec<f64>>,
    v_w: Vec<Vec<f64>>,
    v_b: Vec<Vec<f64>>,
}

impl Optimizer {
    fn new(kind: OptimizerKind, lr: f64, net: &NetworkWeights) -> Self {
        let zer_w: Vec<Vec<f64>> = net.layers().iter().map(|l| vec![0.0; l.weights.len()]).collect();
        let zer_b: Vec<Vec<f64>> = net.layers().iter().map(|l| vec![0.0; l.biases.len()]).collect();
        Optimizer {
            kind,
            lr,
            step: 0,
            m_w: zer_w.clone(),
            m_b: zer_b.clone(),
            v_w: zer_w,
            v_b: zer_b,
        }
    }

    fn update(&mut self, net: &mut NetworkWeights, grads: &GradSet) {
        self.step += 1;
        match self.kind {
            OptimizerKind::Adam => {
                let (b1, b2, eps) = (0.9, 0.999, 1e-8);
                let bc1 = 1.0 - libm::pow(b1, self.step as f64);
                let bc2 = 1.0 - libm::pow(b2, self.step as f64);
                for (li, layer) in net.layers_mut().into_iter().enumerate() {
                    for (i, w) in layer.weights.iter_mut().enumerate() {
                        let g = grads.weights[li][i];
                        self.m_w[li][i] = b1 * self.m_w[li][i] + (1.0 - b1) * g;
                        self.v_w[li][i] = b2 * self.v_w[li][i] + (1.0 - b2) * g * g;
                        *w -= self.lr * (self.m_w[li][i] / bc1) / (sqrt(self.v_w[li][i] / bc2) + eps);
                    }
                    for (i, b) in layer.biases.iter_mut().enumerate() {
                        let g = grads.biases[li][i];
                        self.m_b[li][i] = b1 * self.m_b[li][i] + (1.0 - b1) * g;
                        self.v_b[li][i] = b2 * self.v_b[li][i] + (1.0 - b2) * g * g;
                        *b -= self.lr * (self.m_b[li][i] / bc1) / (sqrt(self.v_b[li][i] / bc2) + eps);
                    }
                }
            }
            OptimizerKind::SgdMomentum => {
                let momentum = 0.9;
                for (li, layer) in net.layers_mut().into_iter().enumerate() {
                    for (i, w) in layer.weights.iter_mut().enumerate() {
                        self.m_w[li][i] = momentum * self.m_w[li][i] + grads.weights[li][i];
                        *w -= self.lr * self.m_w[li][i];
                    }
                    for (i, b) in layer.biases.iter_mut().enumerate() {
                        self.m_b[li][i] = momentum * self.m_b[li][i] + grads.biases[li][i];
                        *b -= self.lr * self.m_b[li][i];
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub pose: f64,
    pub epi: f64,
    pub cal: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingReport {
    pub epochs: Vec<EpochStats>,
}

/// Train the K-member ensemble jointly on `dataset`.
///
/// All members share the data and the joint loss; diversity comes from
/// per-member init seeds and dropout streams.
pub fn train(
    dataset: &[TrainingSample],
    cfg: &TrainConfig,
    w: &LossWeights,
) -> Result<(Vec<NetworkWeights>, TrainingReport)> {
    cfg.validate()?;
    w.validate()?;
    if dataset.len() < cfg.batch_size {
        return Err(Error::Config(format!(
            "dataset has {} samples, need at least batch_size = {}",
            dataset.len(),
            cfg.batch_size
        )));
    }
    let mut ensemble: Vec<NetworkWeights> =
        (0..cfg.members).map(|k| NetworkWeights::init(rng::key(&[cfg.seed, 0x1117, k as u64]))).collect();
    let mut optimizers: Vec<Optimizer> =
        ensemble.iter().map(|n| Optimizer::new(cfg.optimizer, cfg.learning_rate, n)).collect();

    let mut report = TrainingReport::default();
    let n_batches = dataset.len() / cfg.batch_size;
    for epoch in 0..cfg.epochs {
        let perm = Stream::new(&[cfg.seed, 0xE0, epoch as u64]).permutation(dataset.len());
        let mut acc = LossBreakdown { total: 0.0, pose: 0.0, epi: 0.0, cal: 0.0 };
        for bi in 0..n_batches {
            let batch: Vec<TrainingSample> = perm[bi * cfg.batch_size..(bi + 1) * cfg.batch_size]
                .iter()
                .map(|&i| dataset[i].clone())
                .collect();
            let batch_seed = rng::key(&[cfg.seed, 0xB4, epoch as u64, bi as u64]);
            let (grads, loss) = backward(&batch, &ensemble, w, cfg.m_train, batch_seed)?;
            if !loss.total.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss at epoch {epoch}, batch {bi}"
                )));
            }
            for (k, net) in ensemble.iter_mut().enumerate() {
                optimizers[k].update(net, &grads[k]);
            }
            acc.total += loss.total;
            acc.pose += loss.pose;
            acc.epi += loss.epi;
            acc.cal += loss.cal;
        }
        let nb = n_batches as f64;
        report.epochs.push(EpochStats {
            epoch,
            pose: acc.pose / nb,
            epi: acc.epi / nb,
            cal: acc.cal / nb,
            total: acc.total / nb,
        });
    }
    Ok((ensemble, report))
}

/// Build the label set actually realized during a rollout step; exposed
/// for evaluation code that needs predicted-vs-actual errors.
pub fn actual_label(
    state: &RobotState,
    cmd: (f64, f64, f64),
    field: &HeightField,
    cfg: &GaitConfig,
    stream_id: u64,
) -> Result<FootholdSet> {
    let nominal = gait::nominal_footholds(state, cmd, field, cfg)?;
    let world = gait::to_world(state, &nominal);
    gait::actual_footholds(&world, field, cfg, stream_id)
}
