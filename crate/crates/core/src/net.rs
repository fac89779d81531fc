//! Two-branch MLP with ensemble + MC-dropout stochastic inference.
//!
//! The x-branch (106 -> 64 -> 32, no dropout) sees the full height scan,
//! command, and gait phase; the u-branch (15 -> 32 -> 32, dropout after
//! each hidden layer) sees only the command and the pooled terrain
//! descriptor, so MC variance is a function of the task-conditioned input.
//! Branch outputs are concatenated and fed through a 64 -> 64 -> 12 head.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::{sqrt, tanh};

use crate::error::{Error, Result};
use crate::rng::Stream;

pub const MAIN_INPUT_LEN: usize = 106;
pub const UNC_INPUT_LEN: usize = 15;
pub const OUTPUT_LEN: usize = 12;

/// Variance clamp range (meters^2).
pub const VAR_FLOOR: f64 = 1e-8;
pub const VAR_CEIL: f64 = 1.0;

/// Main input: height scan (102) ++ commanded velocity (3) ++ gait phase (1).
#[derive(Debug, Clone, PartialEq)]
pub struct MainInput(pub [f64; MAIN_INPUT_LEN]);

impl MainInput {
    pub fn assemble(scan: &[f64; 102], cmd: (f64, f64, f64), gait_phase: f64) -> Self {
        let mut v = [0.0; MAIN_INPUT_LEN];
        v[..102].copy_from_slice(scan);
        v[102] = cmd.0;
        v[103] = cmd.1;
        v[104] = cmd.2;
        v[105] = gait_phase;
        MainInput(v)
    }
}

/// Uncertainty-only input: commanded velocity (3) ++ pooled descriptor (12).
#[derive(Debug, Clone, PartialEq)]
pub struct UncInput(pub [f64; UNC_INPUT_LEN]);

impl UncInput {
    pub fn assemble(cmd: (f64, f64, f64), pooled: &[f64; 12]) -> Self {
        let mut v = [0.0; UNC_INPUT_LEN];
        v[0] = cmd.0;
        v[1] = cmd.1;
        v[2] = cmd.2;
        v[3..].copy_from_slice(pooled);
        UncInput(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Linear,
}

/// One dense layer: `out = act(W x + b)`, optionally followed by dropout.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `out_dim x in_dim`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
    /// Dropout probability applied to the layer output; 0 disables.
    pub dropout_p: f64,
}

impl Layer {
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation, dropout_p: f64) -> Self {
        Layer {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
            activation,
            dropout_p,
        }
    }

    fn init(&mut self, stream: &mut Stream) {
        let bound = sqrt(6.0 / (self.in_dim + self.out_dim) as f64);
        for w in self.weights.iter_mut() {
            *w = stream.uniform_in(-bound, bound);
        }
        for b in self.biases.iter_mut() {
            *b = 0.0;
        }
    }
}

/// Weights of one ensemble member.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights {
    pub x_branch: Vec<Layer>,
    pub u_branch: Vec<Layer>,
    pub head: Vec<Layer>,
}

impl NetworkWeights {
    /// Default architecture with all weights zero.
    pub fn zeros() -> Self {
        NetworkWeights {
            x_branch: vec![
                Layer::zeros(MAIN_INPUT_LEN, 64, Activation::Tanh, 0.0),
                Layer::zeros(64, 32, Activation::Tanh, 0.0),
            ],
            u_branch: vec![
                Layer::zeros(UNC_INPUT_LEN, 32, Activation::Tanh, 0.1),
                Layer::zeros(32, 32, Activation::Tanh, 0.1),
            ],
            head: vec![
                Layer::zeros(64, 64, Activation::Tanh, 0.0),
                Layer::zeros(64, OUTPUT_LEN, Activation::Linear, 0.0),
            ],
        }
    }

    /// Glorot-uniform initialization, seeded per member.
    pub fn init(seed: u64) -> Self {
        let mut net = Self::zeros();
        for (li, layer) in net.layers_mut().into_iter().enumerate() {
            let mut s = Stream::new(&[seed, 0x1717, li as u64]);
            layer.init(&mut s);
        }
        net
    }

    pub fn layers(&self) -> Vec<&Layer> {
        self.x_branch.iter().chain(self.u_branch.iter()).chain(self.head.iter()).collect()
    }

    pub fn layers_mut(&mut self) -> Vec<&mut Layer> {
        self.x_branch
            .iter_mut()
            .chain(self.u_branch.iter_mut())
            .chain(self.head.iter_mut())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let chains: [(&[Layer], usize); 3] = [
            (&self.x_branch, MAIN_INPUT_LEN),
            (&self.u_branch, UNC_INPUT_LEN),
            (&self.head, self.x_out() + self.u_out()),
        ];
        for (layers, mut expect) in chains {
            for l in layers {
                if l.in_dim != expect {
                    return Err(Error::Shape(format!("layer expects input {}, got {}", l.in_dim, expect)));
                }
                if l.weights.len() != l.in_dim * l.out_dim || l.biases.len() != l.out_dim {
                    return Err(Error::Shape("weight/bias length mismatch".into()));
                }
                if !(0.0..1.0).contains(&l.dropout_p) {
                    return Err(Error::Config(format!("dropout probability {} not in [0,1)", l.dropout_p)));
                }
                expect = l.out_dim;
            }
        }
        if self.head.last().map(|l| l.out_dim) != Some(OUTPUT_LEN) {
            return Err(Error::Shape("head must end in 12 outputs".into()));
        }
        Ok(())
    }

    fn x_out(&self) -> usize {
        self.x_branch.last().map(|l| l.out_dim).unwrap_or(MAIN_INPUT_LEN)
    }

    fn u_out(&self) -> usize {
        self.u_branch.last().map(|l| l.out_dim).unwrap_or(UNC_INPUT_LEN)
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }
}

/// Per-layer dropout keep/scale factors for one stochastic pass. Entry
/// `masks[layer][unit]` is `0` (dropped) or `1/(1-p)` (kept, inverted
/// dropout); layers with `p = 0` carry an empty vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    pub masks: Vec<Vec<f64>>,
}

impl DropoutMask {
    /// Sample masks for every layer of `net` from the `(seed, member, pass)`
    /// counter stream.
    pub fn sample(net: &NetworkWeights, seed: u64, member: u64, pass: u64) -> Self {
        let masks = net
            .layers()
            .iter()
            .enumerate()
            .map(|(li, layer)| {
                if layer.dropout_p == 0.0 {
                    return Vec::new();
                }
                let scale = 1.0 / (1.0 - layer.dropout_p);
                let mut s = Stream::new(&[seed, member, pass, 0xD0, li as u64]);
                (0..layer.out_dim)
                    .map(|_| if s.uniform() < layer.dropout_p { 0.0 } else { scale })
                    .collect()
            })
            .collect();
        DropoutMask { masks }
    }
}

/// Activations cached during a forward pass, for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Post-activation, post-dropout output of each layer in `layers()`
    /// order, preceded by nothing (inputs are kept separately).
    pub outputs: Vec<Vec<f64>>,
    /// Pre-dropout activations (same indexing).
    pub activated: Vec<Vec<f64>>,
}

fn layer_forward(layer: &Layer, input: &[f64], mask: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
    let mut act = vec![0.0; layer.out_dim];
    for o in 0..layer.out_dim {
        let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
        let mut z = layer.biases[o];
        for (w, x) in row.iter().zip(input.iter()) {
            z += w * x;
        }
        act[o] = match layer.activation {
            Activation::Tanh => tanh(z),
            Activation::Linear => z,
        };
    }
    let out = match mask {
        Some(m) if !m.is_empty() => act.iter().zip(m.iter()).map(|(a, k)| a * k).collect(),
        _ => act.clone(),
    };
    (act, out)
}

/// One stochastic forward pass. `mask = None` disables dropout entirely.
pub fn forward(net: &NetworkWeights, x: &MainInput, u: &UncInput, mask: Option<&DropoutMask>) -> Result<[f64; OUTPUT_LEN]> {
    Ok(forward_cached(net, x, u, mask)?.1)
}

/// Forward pass that also returns cached activations for backprop.
pub fn forward_cached(
    net: &NetworkWeights,
    x: &MainInput,
    u: &UncInput,
    mask: Option<&DropoutMask>,
) -> Result<(ForwardCache, [f64; OUTPUT_LEN])> {
    net.validate()?;
    if let Some(m) = mask {
        if m.masks.len() != net.layers().len() {
            return Err(Error::Shape(format!(
                "dropout mask covers {} layers, network has {}",
                m.masks.len(),
                net.layers().len()
            )));
        }
    }
    let mut outputs: Vec<Vec<f64>> = Vec::new();
    let mut activated: Vec<Vec<f64>> = Vec::new();
    let mut li = 0usize;

    let mut cur: Vec<f64> = x.0.to_vec();
    for layer in &net.x_branch {
        let m = mask.map(|mk| mk.masks[li].as_slice());
        let (act, out) = layer_forward(layer, &cur, m);
        cur = out.clone();
        activated.push(act);
        outputs.push(out);
        li += 1;
    }
    let x_out = cur;

    let mut cur: Vec<f64> = u.0.to_vec();
    for layer in &net.u_branch {
        let m = mask.map(|mk| mk.masks[li].as_slice());
        let (act, out) = layer_forward(layer, &cur, m);
        cur = out.clone();
        activated.push(act);
        outputs.push(out);
        li += 1;
    }
    let u_out = cur;

    let mut cur: Vec<f64> = x_out.iter().chain(u_out.iter()).copied().collect();
    for layer in &net.head {
        let m = mask.map(|mk| mk.masks[li].as_slice());
        let (act, out) = layer_forward(layer, &cur, m);
        cur = out.clone();
        activated.push(act);
        outputs.push(out);
        li += 1;
    }

    let mut y = [0.0; OUTPUT_LEN];
    y.copy_from_slice(&cur);
    Ok((ForwardCache { outputs, activated }, y))
}

/// Predictive mean, clamped epistemic variance, and scalar summary.
#[derive(Debug, Clone, PartialEq)]
pub struct EpistemicPrediction {
    pub mean: [f64; OUTPUT_LEN],
    pub variance: [f64; OUTPUT_LEN],
    pub scalar_summary: f64,
}

/// Reduce a set of stochastic pass outputs to mean / unbiased sample
/// variance (clamped) / scalar summary, in fixed summation order.
pub fn mc_statistics(passes: &[[f64; OUTPUT_LEN]]) -> Result<EpistemicPrediction> {
    let n = passes.len();
    if n < 2 {
        return Err(Error::InsufficientSamples(format!("need >= 2 stochastic passes, got {n}")));
    }
    let mut mean = [0.0; OUTPUT_LEN];
    for p in passes {
        for j in 0..OUTPUT_LEN {
            mean[j] += p[j];
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut variance = [0.0; OUTPUT_LEN];
    for p in passes {
        for j in 0..OUTPUT_LEN {
            let d = p[j] - mean[j];
            variance[j] += d * d;
        }
    }
    let mut summary = 0.0;
    for v in variance.iter_mut() {
        *v = (*v / (n as f64 - 1.0)).clamp(VAR_FLOOR, VAR_CEIL);
        summary += *v;
    }
    Ok(EpistemicPrediction { mean, variance, scalar_summary: summary / OUTPUT_LEN as f64 })
}

/// Run all `K * M` stochastic passes of the ensemble and reduce them.
/// Dropout masks derive from `(seed, member, pass)`, so results do not
/// depend on evaluation order.
pub fn predict(
    ensemble: &[NetworkWeights],
    x: &MainInput,
    u: &UncInput,
    m_samples: usize,
    seed: u64,
) -> Result<EpistemicPrediction> {
    if ensemble.is_empty() {
        return Err(Error::Config("empty ensemble".into()));
    }
    if ensemble.len() * m_samples < 2 {
        return Err(Error::InsufficientSamples(format!(
            "K*M = {} < 2",
            ensemble.len() * m_samples
        )));
    }
    let mut passes = Vec::with_capacity(ensemble.len() * m_samples);
    for (k, net) in ensemble.iter().enumerate() {
        for m in 0..m_samples {
            let mask = DropoutMask::sample(net, seed, k as u64, m as u64);
            passes.push(forward(net, x, u, Some(&mask))?);
        }
    }
    mc_statistics(&passes)
}
