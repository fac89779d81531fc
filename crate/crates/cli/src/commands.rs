//! The six experiment subcommands.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use footcast_core::costmap::{obstacle_costmap, roughness_costmap, LETHAL};
use footcast_core::net::{predict, NetworkWeights};
use footcast_core::ood::{id_threshold, region_error, segment_ood, Label, SignalKind, SignalTrace};
use footcast_core::planner::Formulation;
use footcast_core::rng;
use footcast_core::terrain::{heightscan_variance, HeightScan, TerrainKind};
use footcast_core::train::{foothold_error, train, CmdDistribution, TrainingSample};

use crate::config::ExperimentConfig;
use crate::io;
use crate::pipeline::{self, EvalRow};
use crate::svg;

pub const TEST_KINDS: [TerrainKind; 3] = [TerrainKind::Wavy, TerrainKind::Stepped, TerrainKind::Spiked];

fn out_path(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    Path::new(&cfg.out_dir).join(name)
}

fn ensure_out_dir(cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("cannot create output directory {}", cfg.out_dir))
}

fn kind_id(kind: TerrainKind) -> u64 {
    match kind {
        TerrainKind::Flat => 0,
        TerrainKind::Wavy => 1,
        TerrainKind::Stepped => 2,
        TerrainKind::Spiked => 3,
        TerrainKind::Ramp => 4,
        TerrainKind::Mixed => 5,
    }
}

/// Samples for one collected rollout, written as a dataset file.
fn rollout_file(kind: &str, run: usize) -> String {
    format!("rollout_{kind}_run{run}.csv")
}

pub fn cmd_collect(cfg: &ExperimentConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let flat = pipeline::train_world(cfg)?;

    // training set: repeated flat-terrain segments under the fixed command
    let mut dataset: Vec<TrainingSample> = Vec::new();
    let dist = CmdDistribution::Constant(cfg.collect.id_cmd);
    let mut segment = 0u64;
    while dataset.len() < cfg.collect.id_steps {
        let (mut part, _) = footcast_core::train::collect_dataset(
            &flat,
            &cfg.gait,
            &dist,
            cfg.collect.id_steps - dataset.len(),
            rng::key(&[cfg.seed, 0xD5, segment]),
            pipeline::run_start(cfg, (segment as usize) % cfg.ood.runs),
            cfg.collect.dt,
        )
        .map_err(|e| anyhow!("{e}"))?;
        if part.is_empty() {
            bail!("collect: empty rollout segment; world too small for the scan window");
        }
        dataset.append(&mut part);
        segment += 1;
    }
    io::save_dataset(&out_path(cfg, "dataset_id.csv"), &dataset)?;

    // ID evaluation rollouts on flat terrain with the fixed command
    for r in 0..cfg.ood.runs {
        let (samples, _) = footcast_core::train::collect_dataset(
            &flat,
            &cfg.gait,
            &dist,
            cfg.collect.eval_steps,
            rng::key(&[cfg.seed, 0x1D, r as u64]),
            pipeline::run_start(cfg, r),
            cfg.collect.dt,
        )
        .map_err(|e| anyhow!("{e}"))?;
        io::save_dataset(&out_path(cfg, &rollout_file("id", r)), &samples)?;
    }

    // OOD rollouts: band worlds, piecewise-constant velocity draws
    let ood_dist = pipeline::ood_cmd_distribution(cfg);
    for kind in TEST_KINDS {
        let world = pipeline::band_world(cfg, kind)?;
        for r in 0..cfg.ood.runs {
            let (samples, _) = footcast_core::train::collect_dataset(
                &world,
                &cfg.gait,
                &ood_dist,
                cfg.collect.eval_steps,
                rng::key(&[cfg.seed, 0x0D, kind_id(kind), r as u64]),
                pipeline::run_start(cfg, r),
                cfg.collect.dt,
            )
            .map_err(|e| anyhow!("{e}"))?;
            io::save_dataset(&out_path(cfg, &rollout_file(kind.name(), r)), &samples)?;
        }
    }
    Ok(())
}

pub fn cmd_train(cfg: &ExperimentConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let dataset = io::load_dataset(&out_path(cfg, "dataset_id.csv"))?;

    let (full, report) = train(&dataset, &cfg.train, &cfg.loss).map_err(|e| anyhow!("{e}"))?;
    io::save_ensemble(&out_path(cfg, "model.fcn"), &full)?;
    io::write_text(&out_path(cfg, "loss_full.csv"), &io::format_training_report(&report))?;

    let mut ablation_cfg = cfg.train.clone();
    ablation_cfg.seed = rng::key(&[cfg.train.seed, 0xAB1]);
    let ablation_data = pipeline::zero_u_velocities(&dataset);
    let (ablation, report) = train(&ablation_data, &ablation_cfg, &cfg.loss).map_err(|e| anyhow!("{e}"))?;
    io::save_ensemble(&out_path(cfg, "model_ablation.fcn"), &ablation)?;
    io::write_text(&out_path(cfg, "loss_ablation.csv"), &io::format_training_report(&report))?;
    Ok(())
}

/// Evaluate a stored rollout against a model: both uncertainty signals
/// plus the per-step foothold error.
pub fn evaluate_samples(
    samples: &[TrainingSample],
    ensemble: &[NetworkWeights],
    m_eval: usize,
    seed: u64,
    dt: f64,
    zero_cmd: bool,
) -> Result<Vec<EvalRow>> {
    samples
        .iter()
        .enumerate()
        .map(|(t, s)| {
            let u = if zero_cmd {
                let mut u = s.u.clone();
                u.0[0] = 0.0;
                u.0[1] = 0.0;
                u.0[2] = 0.0;
                u
            } else {
                s.u.clone()
            };
            let pred = predict(ensemble, &s.x, &u, m_eval, rng::key(&[seed, t as u64]))
                .map_err(|e| anyhow!("{e}"))?;
            let mut scan_values = [0.0; 102];
            scan_values.copy_from_slice(&s.x.0[..102]);
            let scan = HeightScan::new(scan_values).map_err(|e| anyhow!("{e}"))?;
            Ok(EvalRow {
                t: t as f64 * dt,
                s_bar: pred.scalar_summary,
                var_h: heightscan_variance(&scan),
                error: foothold_error(&pred.mean, &s.y),
            })
        })
        .collect()
}

fn load_rollout_rows(
    cfg: &ExperimentConfig,
    ensemble: &[NetworkWeights],
    kind: &str,
    run: usize,
    eval_tag: u64,
    zero_cmd: bool,
) -> Result<Vec<EvalRow>> {
    let samples = io::load_dataset(&out_path(cfg, &rollout_file(kind, run)))?;
    evaluate_samples(
        &samples,
        ensemble,
        cfg.collect.m_eval,
        rng::key(&[cfg.seed, eval_tag, kind_id_by_name(kind), run as u64]),
        cfg.collect.dt,
        zero_cmd,
    )
}

fn kind_id_by_name(kind: &str) -> u64 {
    match kind {
        "id" => 10,
        other => TerrainKind::parse(other).map(kind_id).unwrap_or(99),
    }
}

fn signal_trace(rows: &[EvalRow], kind: SignalKind) -> Result<SignalTrace> {
    let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let values: Vec<f64> = rows
        .iter()
        .map(|r| match kind {
            SignalKind::Proposed => r.s_bar,
            SignalKind::TerrainVariance => r.var_h,
        })
        .collect();
    SignalTrace::new(times, values, kind).map_err(|e| anyhow!("{e}"))
}

pub fn cmd_eval_ood(cfg: &ExperimentConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let ensemble = io::load_ensemble(&out_path(cfg, "model.fcn"))?;

    // ID traces set the thresholds for both methods
    let mut id_rows: Vec<Vec<EvalRow>> = Vec::new();
    for r in 0..cfg.ood.runs {
        id_rows.push(load_rollout_rows(cfg, &ensemble, "id", r, 0xE0D, false)?);
    }
    let thresholds: Vec<(SignalKind, f64)> = [SignalKind::Proposed, SignalKind::TerrainVariance]
        .into_iter()
        .map(|kind| {
            let traces: Vec<SignalTrace> =
                id_rows.iter().map(|rows| signal_trace(rows, kind)).collect::<Result<_>>()?;
            Ok((kind, id_threshold(&traces).map_err(|e| anyhow!("{e}"))?))
        })
        .collect::<Result<_>>()?;

    let mut table: Vec<Vec<String>> = Vec::new();
    let mut signal_table: Vec<Vec<String>> = Vec::new();
    for kind in TEST_KINDS {
        for r in 0..cfg.ood.runs {
            let rows = load_rollout_rows(cfg, &ensemble, kind.name(), r, 0xE0D, false)?;
            let errors: Vec<f64> = rows.iter().map(|x| x.error).collect();
            let mut label_columns: Vec<Vec<Label>> = Vec::new();
            for &(signal, threshold) in &thresholds {
                let tr = signal_trace(&rows, signal)?;
                let seg = segment_ood(&tr, threshold, cfg.ood.k_transitions);
                let (id_err, ood_err) = region_error(&errors, &seg).map_err(|e| anyhow!("{e}"))?;

                // label-weighted means must recombine to the overall mean
                let n_ood = seg.labels(rows.len()).iter().filter(|&&l| l == Label::Ood).count();
                let n_id = rows.len() - n_ood;
                let recombined = (id_err.unwrap_or(0.0) * n_id as f64 + ood_err.unwrap_or(0.0) * n_ood as f64)
                    / rows.len() as f64;
                let overall = pipeline::mean(&errors);
                if (recombined - overall).abs() > 1e-9 {
                    bail!("eval-ood: inconsistent region means for {} run {r}", kind.name());
                }

                let gap = match (id_err, ood_err) {
                    (Some(i), Some(o)) => Some(o - i),
                    _ => None,
                };
                table.push(vec![
                    kind.name().to_string(),
                    r.to_string(),
                    method_name(signal).to_string(),
                    format!("{threshold}"),
                    fmt_opt(id_err),
                    fmt_opt(ood_err),
                    fmt_opt(gap),
                ]);
                label_columns.push(seg.labels(rows.len()));
            }
            let s_bars: Vec<f64> = rows.iter().map(|x| x.s_bar).collect();
            let var_hs: Vec<f64> = rows.iter().map(|x| x.var_h).collect();
            signal_table.push(vec![
                kind.name().to_string(),
                r.to_string(),
                format!("{}", pipeline::mean(&s_bars)),
                format!("{}", pipeline::mean(&var_hs)),
                format!("{}", pipeline::mean(&errors)),
            ]);

            let trace_rows: Vec<Vec<String>> = rows
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    vec![
                        format!("{}", row.t),
                        format!("{}", row.s_bar),
                        format!("{}", row.var_h),
                        format!("{}", row.error),
                        label_name(label_columns[0][i]).to_string(),
                        label_name(label_columns[1][i]).to_string(),
                    ]
                })
                .collect();
            io::write_text(
                &out_path(cfg, &format!("ood_trace_{}_run{r}.csv", kind.name())),
                &io::format_table("t,s_bar,var_h,error,label_proposed,label_baseline", &trace_rows),
            )?;
        }
    }
    io::write_text(
        &out_path(cfg, "table1.csv"),
        &io::format_table("terrain,run,method,threshold,id_err,ood_err,gap", &table),
    )?;

    // per-run mean signals, with the flat ID runs appended for reference
    for (r, rows) in id_rows.iter().enumerate() {
        let s_bars: Vec<f64> = rows.iter().map(|x| x.s_bar).collect();
        let var_hs: Vec<f64> = rows.iter().map(|x| x.var_h).collect();
        let errors: Vec<f64> = rows.iter().map(|x| x.error).collect();
        signal_table.push(vec![
            "id".to_string(),
            r.to_string(),
            format!("{}", pipeline::mean(&s_bars)),
            format!("{}", pipeline::mean(&var_hs)),
            format!("{}", pipeline::mean(&errors)),
        ]);
    }
    io::write_text(
        &out_path(cfg, "ood_signals.csv"),
        &io::format_table("terrain,run,mean_s_bar,mean_var_h,mean_error", &signal_table),
    )?;
    Ok(())
}

fn method_name(kind: SignalKind) -> &'static str {
    match kind {
        SignalKind::Proposed => "proposed",
        SignalKind::TerrainVariance => "baseline",
    }
}

fn label_name(l: Label) -> &'static str {
    match l {
        Label::Id => "id",
        Label::Ood => "ood",
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "nan".to_string(),
    }
}

pub fn cmd_eval_corr(cfg: &ExperimentConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let models = [
        ("full", io::load_ensemble(&out_path(cfg, "model.fcn"))?, false),
        ("ablation", io::load_ensemble(&out_path(cfg, "model_ablation.fcn"))?, true),
    ];
    let mut summary: Vec<Vec<String>> = Vec::new();
    for (name, ensemble, zero_cmd) in &models {
        let mut s_bars: Vec<f64> = Vec::new();
        let mut errors: Vec<f64> = Vec::new();
        let mut scatter: Vec<Vec<String>> = Vec::new();
        for kind in TEST_KINDS {
            for r in 0..cfg.ood.runs {
                let rows = load_rollout_rows(cfg, ensemble, kind.name(), r, 0xC0A, *zero_cmd)?;
                for row in &rows {
                    s_bars.push(row.s_bar);
                    errors.push(row.error);
                    scatter.push(vec![
                        kind.name().to_string(),
                        r.to_string(),
                        format!("{}", row.s_bar),
                        format!("{}", row.error),
                    ]);
                }
            }
        }
        let rho = footcast_core::train::pearson(&s_bars, &errors).unwrap_or(0.0);
        let slope = pipeline::ls_slope(&s_bars, &errors);
        summary.push(vec![name.to_string(), format!("{slope}"), format!("{rho}")]);
        io::write_text(
            &out_path(cfg, &format!("corr_scatter_{name}.csv")),
            &io::format_table("terrain,run,s_bar,error", &scatter),
        )?;
    }
    io::write_text(&out_path(cfg, "corr.csv"), &io::format_table("model,slope,pearson", &summary))?;
    Ok(())
}

pub fn cmd_plan(cfg: &ExperimentConfig, only: Option<Formulation>) -> Result<()> {
    ensure_out_dir(cfg)?;
    let ensemble = io::load_ensemble(&out_path(cfg, "model.fcn"))?;
    let world = pipeline::mixed_world(cfg)?;

    let grid = footcast_core::planner::episode_grid(&world);
    io::save_heightfield(&out_path(cfg, "world_mixed.txt"), &world)?;
    io::save_costmap(
        &out_path(cfg, "costmap_obstacle.txt"),
        &obstacle_costmap(&world, &cfg.costmap, &grid).map_err(|e| anyhow!("{e}"))?,
    )?;
    io::save_costmap(
        &out_path(cfg, "costmap_roughness.txt"),
        &roughness_costmap(&world, &cfg.costmap, &grid).map_err(|e| anyhow!("{e}"))?,
    )?;
    {
        let (_, goal0) = pipeline::plan_endpoints(cfg, &world, 0);
        let mppi0 = pipeline::formulation_mppi(cfg, Formulation::Uncertainty, 0xFEA, 0);
        let unc = pipeline::uncertainty_map(cfg, &world, &ensemble, &mppi0, goal0)?;
        io::save_costmap(&out_path(cfg, "costmap_uncertainty.txt"), &unc)?;
    }

    let formulations: Vec<Formulation> = [Formulation::Obstacle, Formulation::Roughness, Formulation::Uncertainty]
        .into_iter()
        .filter(|f| only.is_none() || only == Some(*f))
        .collect();

    let mut feas_table: Vec<Vec<String>> = Vec::new();
    let mut progress_table: Vec<Vec<String>> = Vec::new();
    let mut summary: Vec<Vec<String>> = Vec::new();
    for &formulation in &formulations {
        let mut feas_means: Vec<f64> = Vec::new();
        for r in 0..cfg.plan.feasibility_runs {
            let (start, goal) = pipeline::plan_endpoints(cfg, &world, r);
            let mppi = pipeline::formulation_mppi(cfg, formulation, 0xFEA, r);
            let log = pipeline::plan_episode(cfg, &world, &ensemble, &mppi, start, goal)?;
            let (mean, std) = footcast_core::feasibility::feasibility_error(&log.feasibility)
                .map_err(|e| anyhow!("{e}"))?;
            feas_means.push(mean);
            feas_table.push(vec![
                formulation.name().to_string(),
                r.to_string(),
                format!("{mean}"),
                format!("{std}"),
                format!("{}", log.goal_progress),
                log.rows.len().to_string(),
                format!("{:?}", log.termination).to_lowercase(),
            ]);
            if r == 0 {
                let rows: Vec<Vec<String>> = log
                    .rows
                    .iter()
                    .map(|s| {
                        vec![
                            format!("{}", s.t),
                            format!("{}", s.x),
                            format!("{}", s.y),
                            format!("{}", s.psi),
                            format!("{}", s.v_cmd),
                            format!("{}", s.omega_cmd),
                            format!("{}", s.s_bar),
                            format!("{}", s.cost_at_pose),
                            format!("{}", s.foothold_error),
                        ]
                    })
                    .collect();
                io::write_text(
                    &out_path(cfg, &format!("plan_episode_{}_run0.csv", formulation.name())),
                    &io::format_table("t,x,y,psi,v_cmd,omega_cmd,s_bar,cost_at_pose,foothold_error", &rows),
                )?;
            }
        }
        let mut progresses: Vec<f64> = Vec::new();
        for r in 0..cfg.plan.progress_runs {
            let (start, goal) = pipeline::plan_endpoints(cfg, &world, 100 + r);
            let mppi = pipeline::formulation_mppi(cfg, formulation, 0x960, r);
            let log = pipeline::plan_episode(cfg, &world, &ensemble, &mppi, start, goal)?;
            progresses.push(log.goal_progress);
            progress_table.push(vec![
                formulation.name().to_string(),
                r.to_string(),
                format!("{}", log.goal_progress),
            ]);
        }
        let q1 = pipeline::quantile(&progresses, 0.25);
        let q3 = pipeline::quantile(&progresses, 0.75);
        summary.push(vec![
            formulation.name().to_string(),
            format!("{}", pipeline::mean(&feas_means)),
            format!("{}", pipeline::quantile(&progresses, 0.5)),
            format!("{q1}"),
            format!("{q3}"),
            format!("{}", q3 - q1),
        ]);
    }
    io::write_text(
        &out_path(cfg, "plan_feasibility.csv"),
        &io::format_table("formulation,run,feas_mean,feas_std,goal_progress,steps,termination", &feas_table),
    )?;
    io::write_text(
        &out_path(cfg, "plan_progress.csv"),
        &io::format_table("formulation,run,goal_progress", &progress_table),
    )?;
    io::write_text(
        &out_path(cfg, "plan_summary.csv"),
        &io::format_table(
            "formulation,feas_grand_mean,progress_median,progress_q1,progress_q3,progress_iqr",
            &summary,
        ),
    )?;

    if formulations.contains(&Formulation::Uncertainty) {
        let mut sweep_rows: Vec<Vec<String>> = Vec::new();
        let mut paths: Vec<(Vec<(f64, f64)>, &str)> = Vec::new();
        let colors = ["#888888", "#2b7bba", "#2ba02b", "#d62728"];
        let mut stored_paths: Vec<Vec<(f64, f64)>> = Vec::new();
        for (i, &lambda) in cfg.plan.lambda_sweep.iter().enumerate() {
            let (start, goal) = pipeline::plan_endpoints(cfg, &world, 0);
            let mut mppi = pipeline::formulation_mppi(cfg, Formulation::Uncertainty, 0x57E9, i);
            if lambda == 0.0 {
                // goal-only: keep the uncertainty term formally active at
                // negligible weight so the config stays valid
                mppi.lambda_unc = 1e-12;
            } else {
                mppi.lambda_unc = lambda;
            }
            let log = pipeline::plan_episode(cfg, &world, &ensemble, &mppi, start, goal)?;
            let (mean, _) =
                footcast_core::feasibility::feasibility_error(&log.feasibility).map_err(|e| anyhow!("{e}"))?;
            sweep_rows.push(vec![
                format!("{lambda}"),
                format!("{}", log.goal_progress),
                format!("{mean}"),
            ]);
            stored_paths.push(log.rows.iter().map(|s| (s.x, s.y)).collect());
        }
        for (i, p) in stored_paths.iter().enumerate() {
            paths.push((p.clone(), colors[i % colors.len()]));
        }
        io::write_text(
            &out_path(cfg, "sweep.csv"),
            &io::format_table("lambda_unc,goal_progress,feas_mean", &sweep_rows),
        )?;
        let rough = roughness_costmap(&world, &cfg.costmap, &grid).map_err(|e| anyhow!("{e}"))?;
        let hm = svg::Heatmap { map: &rough, max_value: LETHAL, title: "uncertainty weight sweep paths" };
        io::write_text(&out_path(cfg, "sweep_paths.svg"), &svg::heatmap_with_paths(&hm, &paths))?;
    }
    Ok(())
}

pub fn cmd_report(cfg: &ExperimentConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    for name in ["obstacle", "roughness", "uncertainty"] {
        let path = out_path(cfg, &format!("costmap_{name}.txt"));
        if !path.exists() {
            continue;
        }
        let map = load_costmap(&path)?;
        let episode = out_path(cfg, &format!("plan_episode_{name}_run0.csv"));
        let mut paths: Vec<(Vec<(f64, f64)>, &str)> = Vec::new();
        let stored;
        if episode.exists() {
            stored = load_episode_path(&episode)?;
            paths.push((stored, "#d62728"));
        }
        let hm = svg::Heatmap { map: &map, max_value: LETHAL, title: &format!("{name} costmap") };
        io::write_text(&out_path(cfg, &format!("report_costmap_{name}.svg")), &svg::heatmap_with_paths(&hm, &paths))?;
    }
    for kind in TEST_KINDS {
        let path = out_path(cfg, &format!("ood_trace_{}_run0.csv", kind.name()));
        if !path.exists() {
            continue;
        }
        let (s_bar, var_h, error) = load_trace(&path)?;
        let series = [
            svg::TraceSeries { label: "s_bar", color: "#2b7bba", values: &s_bar },
            svg::TraceSeries { label: "var_h", color: "#2ba02b", values: &var_h },
            svg::TraceSeries { label: "foothold error", color: "#d62728", values: &error },
        ];
        io::write_text(
            &out_path(cfg, &format!("report_traces_{}.svg", kind.name())),
            &svg::trace_plot(&format!("{} run 0 signals (each normalized)", kind.name()), &series),
        )?;
    }
    Ok(())
}

fn load_costmap(path: &Path) -> Result<footcast_core::costmap::Costmap> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 5 {
        bail!("grid file: bad header '{header}'");
    }
    let rows: usize = tokens[0].parse().context("grid file: bad rows")?;
    let cols: usize = tokens[1].parse().context("grid file: bad cols")?;
    let resolution: f64 = tokens[2].parse().context("grid file: bad resolution")?;
    let origin = (
        tokens[3].parse().context("grid file: bad origin_x")?,
        tokens[4].parse().context("grid file: bad origin_y")?,
    );
    let mut costs = Vec::with_capacity(rows * cols);
    for line in lines {
        for t in line.split_whitespace() {
            costs.push(t.parse::<f64>().with_context(|| format!("grid file: bad value '{t}'"))?);
        }
    }
    if costs.len() != rows * cols {
        bail!("grid file: {} values, expected {}", costs.len(), rows * cols);
    }
    Ok(footcast_core::costmap::Costmap {
        width_cells: cols,
        height_cells: rows,
        resolution,
        origin_xy: origin,
        costs,
    })
}

fn load_episode_path(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    text.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() < 3 {
                bail!("episode file: short row '{line}'");
            }
            Ok((f[1].parse::<f64>()?, f[2].parse::<f64>()?))
        })
        .collect()
}

fn load_trace(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut s_bar = Vec::new();
    let mut var_h = Vec::new();
    let mut error = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 4 {
            bail!("trace file: short row '{line}'");
        }
        s_bar.push(f[1].parse()?);
        var_h.push(f[2].parse()?);
        error.push(f[3].parse()?);
    }
    Ok((s_bar, var_h, error))
}
