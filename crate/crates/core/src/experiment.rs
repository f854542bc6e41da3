//! Strategy-by-seed experiment sweeps with on-disk results.
//!
//! Each (strategy, seed) cell runs one mission and writes four files: the
//! trace CSV, the MSE-curve CSV, and the final predicted- and variance-map
//! rasters. A single aggregate CSV holds the per-step median MSE per
//! strategy. Output bytes are a pure function of the spec: cells run in
//! parallel but files and the aggregate are assembled in a fixed order, and
//! numbers are printed in the shortest `f64` form, which reparses bit-exactly.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::field::{synth_field, DynamicField, GridField, SynthFieldParams};
use crate::mission::{run_mission, Checkpoint, MissionConfig, MissionTrace, Strategy};
use crate::sogp::BasisVectorSet;

/// Where the environment frames come from.
#[derive(Debug, Clone)]
pub enum EnvironmentSpec {
    /// Plain-text raster files, one frame each.
    Rasters {
        paths: Vec<PathBuf>,
        frame_length: usize,
        cell_size: f64,
    },
    /// Deterministic synthetic frames with consecutive seeds.
    Synthetic {
        params: SynthFieldParams,
        frames: usize,
        frame_length: usize,
    },
}

impl EnvironmentSpec {
    pub fn build(&self) -> Result<DynamicField> {
        match self {
            EnvironmentSpec::Rasters {
                paths,
                frame_length,
                cell_size,
            } => {
                if paths.is_empty() {
                    return Err(CoreError::config("environment.frames", "needs at least one raster"));
                }
                let frames = paths
                    .iter()
                    .map(|p| GridField::load_raster(p, *cell_size))
                    .collect::<Result<Vec<_>>>()?;
                DynamicField::new(frames, *frame_length)
            }
            EnvironmentSpec::Synthetic {
                params,
                frames,
                frame_length,
            } => {
                if *frames == 0 {
                    return Err(CoreError::config("environment.synth.frames", "needs at least one frame"));
                }
                let fields = (0..*frames)
                    .map(|i| {
                        synth_field(&SynthFieldParams {
                            seed: params.seed + i as u64,
                            ..params.clone()
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                DynamicField::new(fields, *frame_length)
            }
        }
    }
}

/// Everything one experiment needs: the mission template (strategy and seed
/// are overridden per cell), the sweep axes, and the output location.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub mse_thresholds: Vec<f64>,
    pub mission: MissionConfig,
    pub env: EnvironmentSpec,
}

impl ExperimentSpec {
    /// Build the environment and check the mission template against it.
    pub fn validate(&self) -> Result<DynamicField> {
        if self.strategies.is_empty() {
            return Err(CoreError::config("strategies", "need at least one strategy"));
        }
        if self.seeds.is_empty() {
            return Err(CoreError::config("seeds", "need at least one seed"));
        }
        for (i, t) in self.mse_thresholds.iter().enumerate() {
            if !(t.is_finite() && *t > 0.0) {
                return Err(CoreError::config(
                    format!("mse_thresholds[{i}]"),
                    "thresholds must be finite and > 0",
                ));
            }
        }
        let env = self.env.build()?;
        self.mission.validate(&env)?;
        Ok(env)
    }
}

/// Paths produced by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub cell_files: Vec<PathBuf>,
    pub aggregate: PathBuf,
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Serialize a mission trace: one row per sampling operation plus plan and
/// re-estimation event rows, in time order.
pub fn trace_to_csv(trace: &MissionTrace) -> String {
    // (step, class, line): at one step a re-estimation precedes the plan it
    // triggers, which precedes that plan's samples
    let mut rows: Vec<(usize, usize, String)> = Vec::new();
    for p in trace.plans.iter() {
        let wp = p
            .plan
            .waypoints
            .iter()
            .map(|c| format!("{}:{}", c.x, c.y))
            .collect::<Vec<_>>()
            .join(";");
        let start = p.plan.waypoints[0];
        rows.push((
            p.step,
            1,
            format!(
                "plan,{},{},{},{},0,0,wp={}",
                p.step,
                start.x,
                start.y,
                fmt_f64(p.plan.planned_mi),
                wp
            ),
        ));
    }
    for e in &trace.reestimations {
        let hp = &e.new_hp;
        let ls = hp.length_scales();
        rows.push((
            e.step,
            0,
            format!(
                "reestimate,{},0,0,{},0,0,noise_var={};signal_var={};l0={};l1={}",
                e.step,
                fmt_f64(e.new_objective),
                fmt_f64(hp.noise_var()),
                fmt_f64(hp.signal_var()),
                fmt_f64(ls[0]),
                fmt_f64(ls.get(1).copied().unwrap_or(ls[0])),
            ),
        ));
    }
    for s in &trace.samples {
        rows.push((
            s.sample.step,
            2,
            format!(
                "sample,{},{},{},{},{},{},{}",
                s.sample.step,
                s.sample.cell.x,
                s.sample.cell.y,
                fmt_f64(s.sample.value),
                fmt_f64(s.rho),
                s.bv_size,
                s.action
            ),
        ));
    }
    rows.sort_by_key(|r| (r.0, r.1));
    let mut out = String::from("kind,step,x,y,value,rho,bv_size,detail\n");
    for (_, _, line) in rows {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn mse_curve_to_csv(metrics: &[Checkpoint]) -> String {
    let mut out = String::from("step,mse,mean_var\n");
    for c in metrics {
        out.push_str(&format!("{},{},{}\n", c.step, fmt_f64(c.mse), fmt_f64(c.mean_variance)));
    }
    out
}

/// Predicted-mean and latent-variance maps over the full grid, in the same
/// raster format the field loader reads (masked cells as `nan`).
pub fn render_maps(bv: &BasisVectorSet, geom: &GridField) -> Result<(GridField, GridField)> {
    let cells = geom.sampleable_cells();
    let points: Vec<Vec<f64>> = cells.iter().map(|c| c.point()).collect();
    let (means, vars) = bv.predict(&points)?;
    let n = geom.width() * geom.height();
    let mut mean_values = vec![f64::NAN; n];
    let mut var_values = vec![f64::NAN; n];
    let mut mask = vec![false; n];
    for (i, c) in cells.iter().enumerate() {
        let idx = c.y * geom.width() + c.x;
        mean_values[idx] = means[i];
        var_values[idx] = vars[i];
        mask[idx] = true;
    }
    let mean_map = GridField::new(geom.width(), geom.height(), geom.cell_size(), mean_values, mask.clone())?;
    let var_map = GridField::new(geom.width(), geom.height(), geom.cell_size(), var_values, mask)?;
    Ok((mean_map, var_map))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CoreError::io(path.display().to_string(), e))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Per-step median MSE per strategy, as a CSV with one strategy column each.
pub fn aggregate_csv(
    strategies: &[Strategy],
    curves: &[(Strategy, u64, Vec<Checkpoint>)],
) -> String {
    let mut steps: Vec<usize> = curves
        .iter()
        .flat_map(|(_, _, m)| m.iter().map(|c| c.step))
        .collect();
    steps.sort_unstable();
    steps.dedup();

    let mut out = String::from("step");
    for s in strategies {
        out.push_str(&format!(",{s}"));
    }
    out.push('\n');
    for step in steps {
        out.push_str(&format!("{step}"));
        for strategy in strategies {
            let mut vals: Vec<f64> = curves
                .iter()
                .filter(|(s, _, _)| s == strategy)
                .flat_map(|(_, _, m)| m.iter().filter(|c| c.step == step).map(|c| c.mse))
                .collect();
            if vals.is_empty() {
                out.push(',');
            } else {
                out.push_str(&format!(",{}", fmt_f64(median(&mut vals))));
            }
        }
        out.push('\n');
    }
    out
}

/// Run every (strategy, seed) cell, write its four files, then the aggregate.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let env = spec.validate()?;
    std::fs::create_dir_all(&spec.output_dir)
        .map_err(|e| CoreError::io(spec.output_dir.display().to_string(), e))?;

    let cells: Vec<(Strategy, u64)> = spec
        .strategies
        .iter()
        .flat_map(|s| spec.seeds.iter().map(move |seed| (*s, *seed)))
        .collect();

    type CellResult = (Strategy, u64, Vec<Checkpoint>, Vec<PathBuf>);
    let results: Vec<Result<CellResult>> = cells
        .par_iter()
        .map(|(strategy, seed)| {
            let mut cfg = spec.mission.clone();
            cfg.strategy = *strategy;
            cfg.seed = *seed;
            let trace = run_mission(&cfg, &env)?;

            let tag = format!("{strategy}_seed{seed}");
            let dir = &spec.output_dir;
            let trace_path = dir.join(format!("trace_{tag}.csv"));
            let mse_path = dir.join(format!("mse_{tag}.csv"));
            let pred_path = dir.join(format!("predicted_{tag}.txt"));
            let var_path = dir.join(format!("variance_{tag}.txt"));

            write_text(&trace_path, &trace_to_csv(&trace))?;
            write_text(&mse_path, &mse_curve_to_csv(&trace.metrics))?;
            let (mean_map, var_map) = render_maps(&trace.final_bv, env.geometry())?;
            write_text(&pred_path, &mean_map.to_raster_string())?;
            write_text(&var_path, &var_map.to_raster_string())?;

            Ok((
                *strategy,
                *seed,
                trace.metrics.clone(),
                vec![trace_path, mse_path, pred_path, var_path],
            ))
        })
        .collect();

    let mut curves = Vec::new();
    let mut files = Vec::new();
    for r in results {
        let (strategy, seed, metrics, cell_files) = r?;
        curves.push((strategy, seed, metrics));
        files.extend(cell_files);
    }

    let aggregate = spec.output_dir.join("aggregate.csv");
    write_text(&aggregate, &aggregate_csv(&spec.strategies, &curves))?;
    Ok(ExperimentOutput {
        cell_files: files,
        aggregate,
    })
}

/// One line of the threshold report: steps to reach `threshold`, `None`
/// when the strategy never gets there.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub strategy: Strategy,
    pub threshold: f64,
    pub steps: Option<usize>,
}

/// Steps-to-threshold per strategy from an aggregate CSV.
pub fn compare_report(aggregate: &str, thresholds: &[f64]) -> Result<Vec<ReportRow>> {
    let mut lines = aggregate.lines();
    let header = lines
        .next()
        .ok_or_else(|| CoreError::InvalidInput("empty aggregate".into()))?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.first() != Some(&"step") {
        return Err(CoreError::InvalidInput(format!(
            "aggregate header must start with `step`, got `{header}`"
        )));
    }
    let strategies: Vec<Strategy> = columns[1..]
        .iter()
        .map(|c| c.parse())
        .collect::<Result<Vec<_>>>()
        .map_err(|_| CoreError::InvalidInput(format!("missing or unknown strategy column in `{header}`")))?;
    if strategies.is_empty() {
        return Err(CoreError::InvalidInput("aggregate has no strategy columns".into()));
    }

    let mut rows: Vec<(usize, Vec<Option<f64>>)> = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(CoreError::InvalidInput(format!("ragged aggregate row `{line}`")));
        }
        let step: usize = fields[0]
            .parse()
            .map_err(|_| CoreError::InvalidInput(format!("bad step `{}`", fields[0])))?;
        let vals = fields[1..]
            .iter()
            .map(|f| {
                if f.is_empty() {
                    Ok(None)
                } else {
                    f.parse::<f64>()
                        .map(Some)
                        .map_err(|_| CoreError::InvalidInput(format!("bad mse `{f}`")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((step, vals));
    }
    rows.sort_by_key(|(step, _)| *step);

    let mut report = Vec::new();
    for (si, strategy) in strategies.iter().enumerate() {
        for threshold in thresholds {
            let steps = rows
                .iter()
                .find(|(_, vals)| vals[si].is_some_and(|v| v <= *threshold))
                .map(|(step, _)| *step);
            report.push(ReportRow {
                strategy: *strategy,
                threshold: *threshold,
                steps,
            });
        }
    }
    Ok(report)
}

/// Human-readable report table; unreachable thresholds print as `∞`.
pub fn format_report(rows: &[ReportRow]) -> String {
    let mut out = String::from("strategy       threshold      steps\n");
    for r in rows {
        let steps = r.steps.map_or("∞".to_string(), |s| s.to_string());
        out.push_str(&format!("{:<14} {:<14} {}\n", r.strategy.to_string(), fmt_f64(r.threshold), steps));
    }
    out
}
