//! The mission loop: plan a waypoint batch, traverse it while sampling and
//! updating the sparse model, track the share of recently replaced basis
//! elements, and re-estimate hyperparameters when it crosses the threshold.
//!
//! One sampling operation is performed per traversed sampleable cell.
//! `rho` increases by `1/m` on every replacement event (a new point enters
//! the basis-vector set and an old one is pruned) and resets to zero at
//! every new plan, so a re-estimation with threshold `rho0` requires more
//! than `rho0 * m` replacements since the last reset. Planning time is free:
//! simulated missions re-plan instantaneously.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{lawnmower_path, random_waypoints, CellRect, LawnmowerSpec, SweepAxis};
use crate::dense::{optimize_hyperparams, OptimizerSettings};
use crate::error::{CoreError, Result};
use crate::field::{sample, Cell, DynamicField, GridField, SamplePoint};
use crate::kernel::HyperParams;
use crate::planner::{build_planning_grid, order_waypoints, plan_waypoints, DpTable, WaypointPlan};
use crate::sogp::{BasisVectorSet, SogpConfig, UpdateAction};

/// How waypoint batches are generated; everything else in the loop is
/// identical across strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Informative,
    Lawnmower,
    Random,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Strategy::Informative => "informative",
            Strategy::Lawnmower => "lawnmower",
            Strategy::Random => "random",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Strategy {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "informative" => Ok(Strategy::Informative),
            "lawnmower" => Ok(Strategy::Lawnmower),
            "random" => Ok(Strategy::Random),
            other => Err(CoreError::InvalidInput(format!(
                "unknown strategy `{other}` (expected informative, lawnmower or random)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MissionConfig {
    pub strategy: Strategy,
    /// Total sampling operations.
    pub budget: usize,
    /// Waypoints per planning round.
    pub batch_n: usize,
    /// Re-estimation threshold; values above 1 never fire.
    pub rho0: f64,
    pub sogp: SogpConfig,
    pub optimizer: OptimizerSettings,
    pub noise_sd: f64,
    pub seed: u64,
    pub start: Cell,
    /// Down-sampling factor of the planning grid.
    pub planning_stride: usize,
    /// Sweep-leg spacing for the lawnmower strategy.
    pub lawnmower_spacing: usize,
    /// Metrics are recorded every this many sampling operations.
    pub checkpoint_interval: usize,
}

impl MissionConfig {
    pub fn validate(&self, env: &DynamicField) -> Result<()> {
        let geom = env.geometry();
        if self.budget == 0 {
            return Err(CoreError::config("mission.budget", "must be >= 1"));
        }
        if self.batch_n == 0 {
            return Err(CoreError::config("mission.batch_n", "must be >= 1"));
        }
        if self.batch_n > geom.sampleable_count() {
            return Err(CoreError::config(
                "mission.batch_n",
                format!("exceeds the {} sampleable cells", geom.sampleable_count()),
            ));
        }
        if !(self.rho0.is_finite() && self.rho0 >= 0.0) {
            return Err(CoreError::config("mission.rho0", "must be finite and >= 0"));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(CoreError::config("mission.noise_sd", "must be finite and >= 0"));
        }
        if !geom.is_sampleable(self.start) {
            return Err(CoreError::config(
                "mission.start",
                format!("start {} is masked or out of bounds", self.start),
            ));
        }
        if self.planning_stride == 0 {
            return Err(CoreError::config("mission.planning_stride", "must be >= 1"));
        }
        if self.lawnmower_spacing == 0 {
            return Err(CoreError::config("mission.lawnmower_spacing", "must be >= 1"));
        }
        if self.checkpoint_interval == 0 {
            return Err(CoreError::config("mission.checkpoint_interval", "must be >= 1"));
        }
        if self.optimizer.learning_rate <= 0.0 || self.optimizer.tol <= 0.0 {
            return Err(CoreError::config("optimizer", "learning_rate and tol must be > 0"));
        }
        self.sogp.validate()?;
        Ok(())
    }
}

/// One sampling operation in the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub sample: SamplePoint,
    /// Value of `rho` after this operation.
    pub rho: f64,
    pub bv_size: usize,
    pub action: UpdateAction,
}

#[derive(Debug, Clone)]
pub struct PlanEvent {
    /// Sampling operations completed when the plan was made.
    pub step: usize,
    pub plan: WaypointPlan,
    /// Present for informative plans.
    pub dp: Option<DpTable>,
}

#[derive(Debug, Clone)]
pub struct ReestimationEvent {
    pub step: usize,
    pub old_hp: HyperParams,
    pub new_hp: HyperParams,
    pub old_objective: f64,
    pub new_objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub step: usize,
    pub mse: f64,
    pub mean_variance: f64,
}

/// Time-ordered record of everything a mission did.
#[derive(Debug, Clone)]
pub struct MissionTrace {
    pub samples: Vec<SampleRecord>,
    pub plans: Vec<PlanEvent>,
    pub reestimations: Vec<ReestimationEvent>,
    pub metrics: Vec<Checkpoint>,
    /// Model state at mission end, for map rendering and replay checks.
    pub final_bv: BasisVectorSet,
}

impl MissionTrace {
    /// `rho` after each sampling operation.
    pub fn rho_history(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.rho)
    }
}

/// Cells crossed by the straight segment between two cells (Bresenham),
/// excluding the origin, including the destination. Successive cells are
/// 8-adjacent; the exact diagonal yields the diagonal chain.
pub fn traverse(from: Cell, to: Cell) -> Vec<Cell> {
    let (mut x, mut y) = (from.x as i64, from.y as i64);
    let (x1, y1) = (to.x as i64, to.y as i64);
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut cells = Vec::new();
    while (x, y) != (x1, y1) {
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
        cells.push(Cell::new(x as usize, y as usize));
    }
    cells
}

/// MSE of the posterior mean against the truth over all sampleable cells,
/// plus the mean latent variance over the same cells.
pub fn checkpoint_metrics(bv: &BasisVectorSet, truth: &GridField) -> Result<(f64, f64)> {
    let cells = truth.sampleable_cells();
    let points: Vec<Vec<f64>> = cells.iter().map(|c| c.point()).collect();
    let (means, vars) = bv.predict(&points)?;
    let mut mse = 0.0;
    for (i, cell) in cells.iter().enumerate() {
        let err = means[i] - truth.value(*cell)?;
        mse += err * err;
    }
    let n = cells.len() as f64;
    Ok((mse / n, vars.sum() / n))
}

/// Run the full sample/update/re-estimate/replan loop against an
/// environment; the environment's current frame also serves as ground truth
/// for checkpoint metrics.
pub fn run_mission(config: &MissionConfig, env: &DynamicField) -> Result<MissionTrace> {
    config.validate(env)?;
    let geom = env.geometry();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut bv = BasisVectorSet::new(config.sogp.clone())?;
    let capacity = config.sogp.capacity as f64;

    let planning_grid = match config.strategy {
        Strategy::Informative => Some(build_planning_grid(geom, config.planning_stride)?),
        _ => None,
    };
    let mut lawn_queue: std::collections::VecDeque<Cell> = match config.strategy {
        Strategy::Lawnmower => lawnmower_path(
            &LawnmowerSpec {
                region: CellRect::full(geom),
                spacing: config.lawnmower_spacing,
                axis: SweepAxis::Vertical,
            },
            geom,
        )?
        .into(),
        _ => std::collections::VecDeque::new(),
    };

    let mut trace = MissionTrace {
        samples: Vec::with_capacity(config.budget),
        plans: Vec::new(),
        reestimations: Vec::new(),
        metrics: Vec::new(),
        final_bv: bv.clone(),
    };
    let mut pos = config.start;
    let mut taken = 0usize;

    'mission: while taken < config.budget {
        // Integer replacement count; rho is derived per sample so the
        // "> rho0" comparison is exact (accumulating 1/m drifts).
        let mut replacements = 0usize;

        let (batch, planned_mi, dp) = match config.strategy {
            Strategy::Informative => {
                let grid = planning_grid.as_ref().expect("grid built for informative");
                let n = config.batch_n.min(grid.len());
                let (cells, table) = plan_waypoints(&bv, grid, n)?;
                let filtered: Vec<Cell> = cells.into_iter().filter(|c| *c != pos).collect();
                let mi = table.values[table.stages - 1][*table.selected.last().unwrap()];
                (filtered, mi, Some(table))
            }
            Strategy::Random => {
                let cells = random_waypoints(geom, None, config.batch_n, &mut rng)?;
                let filtered: Vec<Cell> = cells.into_iter().filter(|c| *c != pos).collect();
                (filtered, 0.0, None)
            }
            Strategy::Lawnmower => {
                if lawn_queue.is_empty() {
                    break 'mission; // fixed path exhausted before the budget
                }
                let mut chunk = Vec::new();
                while chunk.len() < config.batch_n {
                    match lawn_queue.pop_front() {
                        Some(c) if c != pos => chunk.push(c),
                        Some(_) => {}
                        None => break,
                    }
                }
                (chunk, 0.0, None)
            }
        };

        // Informative batches are ordered into a short open path; lawnmower
        // and random batches are visited in generation order.
        let ordered: Vec<Cell> = match config.strategy {
            Strategy::Informative if !batch.is_empty() => {
                order_waypoints(pos, &batch, planned_mi)?.waypoints[1..].to_vec()
            }
            _ => batch,
        };

        let mut plan_waypoint_list = vec![pos];
        plan_waypoint_list.extend(ordered.iter().copied());
        trace.plans.push(PlanEvent {
            step: taken,
            plan: WaypointPlan {
                waypoints: plan_waypoint_list,
                planned_mi,
            },
            dp,
        });

        if ordered.is_empty() {
            // Degenerate round (every selected waypoint equals the current
            // position): sample in place so the mission always progresses.
            let sp = sample(env, pos, taken, config.noise_sd, &mut rng)?;
            let rec = bv.process(&pos.point(), sp.value)?;
            taken += 1;
            if rec.action == UpdateAction::AddedThenPruned {
                replacements += 1;
            }
            let rho = (replacements as f64 / capacity).min(1.0);
            trace.samples.push(SampleRecord {
                sample: sp,
                rho,
                bv_size: bv.len(),
                action: rec.action,
            });
            if taken.is_multiple_of(config.checkpoint_interval) || taken == config.budget {
                let (mse, mean_variance) = checkpoint_metrics(&bv, env.frame(taken))?;
                trace.metrics.push(Checkpoint { step: taken, mse, mean_variance });
            }
            continue 'mission;
        }

        for wp in ordered {
            for cell in traverse(pos, wp) {
                pos = cell;
                if !geom.is_sampleable(cell) {
                    continue; // crossed but excluded; counts for distance only
                }
                let sp = sample(env, cell, taken, config.noise_sd, &mut rng)?;
                let rec = bv.process(&cell.point(), sp.value)?;
                taken += 1;
                if rec.action == UpdateAction::AddedThenPruned {
                    replacements += 1;
                }
                let rho = (replacements as f64 / capacity).min(1.0);
                trace.samples.push(SampleRecord {
                    sample: sp,
                    rho,
                    bv_size: bv.len(),
                    action: rec.action,
                });
                if taken.is_multiple_of(config.checkpoint_interval) || taken == config.budget {
                    let (mse, mean_variance) = checkpoint_metrics(&bv, env.frame(taken))?;
                    trace.metrics.push(Checkpoint { step: taken, mse, mean_variance });
                }
                if taken >= config.budget {
                    break 'mission;
                }
                if rho > config.rho0 {
                    let (points, targets) = bv.training_view();
                    if points.len() >= 2 {
                        let old_hp = bv.hp().clone();
                        let outcome =
                            optimize_hyperparams(&points, &targets, old_hp.clone(), &config.optimizer)?;
                        let mut new_cfg = bv.config().clone();
                        new_cfg.hp = outcome.hp.clone();
                        new_cfg.noise_var = outcome.hp.noise_var();
                        trace.reestimations.push(ReestimationEvent {
                            step: taken,
                            old_hp,
                            new_hp: outcome.hp,
                            old_objective: outcome.objective_trace[0],
                            new_objective: outcome.objective,
                        });
                        bv = BasisVectorSet::rebuild(&points, &targets, new_cfg)?;
                    }
                    continue 'mission; // replan; rho resets on loop entry
                }
            }
        }
    }

    if trace.metrics.last().map(|c| c.step) != Some(taken) && taken > 0 {
        let (mse, mean_variance) = checkpoint_metrics(&bv, env.frame(taken))?;
        trace.metrics.push(Checkpoint { step: taken, mse, mean_variance });
    }
    trace.final_bv = bv;
    Ok(trace)
}
