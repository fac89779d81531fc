//! File formats: network weights, datasets, grids, and CSV tables. All
//! floats are written with shortest-round-trip formatting so a
//! save/load cycle is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use footcast_core::costmap::Costmap;
use footcast_core::net::{Activation, NetworkWeights, MAIN_INPUT_LEN, OUTPUT_LEN, UNC_INPUT_LEN};
use footcast_core::terrain::HeightField;
use footcast_core::train::{TrainingReport, TrainingSample};

pub const WEIGHT_HEADER: &str = "FOOTCAST-NET v1";

fn activation_name(a: Activation) -> &'static str {
    match a {
        Activation::Tanh => "tanh",
        Activation::Linear => "linear",
    }
}

fn join_floats(vals: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in vals.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{v}").unwrap();
    }
    out
}

/// Serialize the ensemble to the structured-text weight format.
pub fn format_ensemble(ensemble: &[NetworkWeights]) -> String {
    let mut out = String::new();
    out.push_str(WEIGHT_HEADER);
    out.push('\n');
    writeln!(out, "members {}", ensemble.len()).unwrap();
    for (k, net) in ensemble.iter().enumerate() {
        writeln!(out, "member {k}").unwrap();
        for (li, layer) in net.layers().iter().enumerate() {
            writeln!(
                out,
                "layer {li} {} {} {} {}",
                layer.in_dim,
                layer.out_dim,
                activation_name(layer.activation),
                layer.dropout_p
            )
            .unwrap();
            out.push_str(&join_floats(&layer.weights));
            out.push('\n');
            out.push_str(&join_floats(&layer.biases));
            out.push('\n');
        }
    }
    out
}

pub fn save_ensemble(path: &Path, ensemble: &[NetworkWeights]) -> Result<()> {
    std::fs::write(path, format_ensemble(ensemble))
        .with_context(|| format!("cannot write weight file {}", path.display()))
}

fn parse_floats(line: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let vals: Vec<f64> = line
        .split_whitespace()
        .map(|t| t.parse().with_context(|| format!("weight file: bad float '{t}' in {what}")))
        .collect::<Result<_>>()?;
    if vals.len() != expected {
        bail!("weight file: {what} has {} values, expected {expected}", vals.len());
    }
    Ok(vals)
}

/// Parse the weight format back into an ensemble; shapes are validated
/// against the fixed architecture.
pub fn parse_ensemble(text: &str) -> Result<Vec<NetworkWeights>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != WEIGHT_HEADER {
        bail!("weight file: bad header '{header}', expected '{WEIGHT_HEADER}'");
    }
    let members_line = lines.next().unwrap_or_default();
    let members: usize = members_line
        .strip_prefix("members ")
        .and_then(|s| s.parse().ok())
        .with_context(|| format!("weight file: bad members line '{members_line}'"))?;
    if members == 0 {
        bail!("weight file: members must be >= 1");
    }
    let mut ensemble = Vec::with_capacity(members);
    for k in 0..members {
        let member_line = lines.next().unwrap_or_default();
        if member_line != format!("member {k}") {
            bail!("weight file: expected 'member {k}', got '{member_line}'");
        }
        let mut net = NetworkWeights::zeros();
        let n_layers = net.layers().len();
        for li in 0..n_layers {
            let shape_line = lines.next().unwrap_or_default().to_string();
            let tokens: Vec<&str> = shape_line.split_whitespace().collect();
            if tokens.len() != 6 || tokens[0] != "layer" {
                bail!("weight file: bad layer line '{shape_line}'");
            }
            let (idx, in_dim, out_dim): (usize, usize, usize) = (
                tokens[1].parse().context("weight file: bad layer index")?,
                tokens[2].parse().context("weight file: bad in_dim")?,
                tokens[3].parse().context("weight file: bad out_dim")?,
            );
            let dropout_p: f64 = tokens[5].parse().context("weight file: bad dropout_p")?;
            let layer = net.layers_mut().into_iter().nth(li).unwrap();
            if idx != li || in_dim != layer.in_dim || out_dim != layer.out_dim {
                bail!(
                    "weight file: member {k} layer {li} shape {in_dim}x{out_dim} does not match \
                     the {}x{} architecture",
                    layer.in_dim,
                    layer.out_dim
                );
            }
            match tokens[4] {
                "tanh" => layer.activation = Activation::Tanh,
                "linear" => layer.activation = Activation::Linear,
                other => bail!("weight file: unknown activation '{other}'"),
            }
            layer.dropout_p = dropout_p;
            let w_line = lines.next().unwrap_or_default();
            layer.weights =
                parse_floats(w_line, in_dim * out_dim, &format!("member {k} layer {li} weights"))?;
            let b_line = lines.next().unwrap_or_default();
            layer.biases = parse_floats(b_line, out_dim, &format!("member {k} layer {li} biases"))?;
        }
        net.validate().map_err(anyhow::Error::msg)?;
        ensemble.push(net);
    }
    if lines.any(|l| !l.trim().is_empty()) {
        bail!("weight file: trailing content after member {}", members - 1);
    }
    Ok(ensemble)
}

pub fn load_ensemble(path: &Path) -> Result<Vec<NetworkWeights>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read weight file {}", path.display()))?;
    parse_ensemble(&text)
}

/// Dataset CSV: header `106,15,12`, then one comma-separated sample per
/// line in x, u, y order.
pub fn format_dataset(samples: &[TrainingSample]) -> String {
    let mut out = String::new();
    writeln!(out, "{MAIN_INPUT_LEN},{UNC_INPUT_LEN},{OUTPUT_LEN}").unwrap();
    for s in samples {
        let mut fields: Vec<String> = Vec::with_capacity(MAIN_INPUT_LEN + UNC_INPUT_LEN + OUTPUT_LEN);
        fields.extend(s.x.0.iter().map(|v| format!("{v}")));
        fields.extend(s.u.0.iter().map(|v| format!("{v}")));
        fields.extend(s.y.iter().map(|v| format!("{v}")));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn save_dataset(path: &Path, samples: &[TrainingSample]) -> Result<()> {
    std::fs::write(path, format_dataset(samples))
        .with_context(|| format!("cannot write dataset {}", path.display()))
}

pub fn parse_dataset(text: &str) -> Result<Vec<TrainingSample>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let expected = format!("{MAIN_INPUT_LEN},{UNC_INPUT_LEN},{OUTPUT_LEN}");
    if header != expected {
        bail!("dataset: bad header '{header}', expected '{expected}'");
    }
    let total = MAIN_INPUT_LEN + UNC_INPUT_LEN + OUTPUT_LEN;
    let mut samples = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| t.parse().with_context(|| format!("dataset: bad float '{t}' at line {}", ln + 2)))
            .collect::<Result<_>>()?;
        if vals.len() != total {
            bail!("dataset: line {} has {} fields, expected {total}", ln + 2, vals.len());
        }
        let mut x = [0.0; MAIN_INPUT_LEN];
        x.copy_from_slice(&vals[..MAIN_INPUT_LEN]);
        let mut u = [0.0; UNC_INPUT_LEN];
        u.copy_from_slice(&vals[MAIN_INPUT_LEN..MAIN_INPUT_LEN + UNC_INPUT_LEN]);
        let mut y = [0.0; OUTPUT_LEN];
        y.copy_from_slice(&vals[MAIN_INPUT_LEN + UNC_INPUT_LEN..]);
        samples.push(TrainingSample {
            x: footcast_core::net::MainInput(x),
            u: footcast_core::net::UncInput(u),
            y,
        });
    }
    Ok(samples)
}

pub fn load_dataset(path: &Path) -> Result<Vec<TrainingSample>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read dataset {}", path.display()))?;
    parse_dataset(&text)
}

/// Plain-text grid: header `rows cols resolution origin_x origin_y`,
/// then one whitespace-separated row per line, bottom row first.
pub fn format_grid(rows: usize, cols: usize, resolution: f64, origin: (f64, f64), values: &[f64]) -> String {
    let mut out = String::new();
    writeln!(out, "{rows} {cols} {resolution} {} {}", origin.0, origin.1).unwrap();
    for iy in 0..rows {
        out.push_str(&join_floats(&values[iy * cols..(iy + 1) * cols]));
        out.push('\n');
    }
    out
}

pub fn save_heightfield(path: &Path, field: &HeightField) -> Result<()> {
    let text = format_grid(
        field.height_cells,
        field.width_cells,
        field.resolution,
        field.origin_xy,
        &field.elevations,
    );
    std::fs::write(path, text).with_context(|| format!("cannot write grid {}", path.display()))
}

pub fn save_costmap(path: &Path, map: &Costmap) -> Result<()> {
    let text = format_grid(map.height_cells, map.width_cells, map.resolution, map.origin_xy, &map.costs);
    std::fs::write(path, text).with_context(|| format!("cannot write grid {}", path.display()))
}

/// Per-epoch loss table.
pub fn format_training_report(report: &TrainingReport) -> String {
    let mut out = String::from("epoch,pose,epi,cal,total\n");
    for e in &report.epochs {
        writeln!(out, "{},{},{},{},{}", e.epoch, e.pose, e.epi, e.cal, e.total).unwrap();
    }
    out
}

/// Generic CSV table writer: header plus rows of preformatted fields.
pub fn format_table(header: &str, rows: &[Vec<String>]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
