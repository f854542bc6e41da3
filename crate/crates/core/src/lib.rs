//! Online environment modeling and informative sampling for gridded scalar
//! fields.
//!
//! The crate couples a sparse online Gaussian process (a capacity-bounded
//! basis-vector set with streaming Bayesian updates) to a mutual-information
//! waypoint planner, and wraps both in a mission loop that samples a
//! (possibly piecewise-static) environment, re-estimates kernel
//! hyperparameters from the retained subset, and records a replayable trace.
//!
//! Layers, bottom up:
//!
//! * [`field`] — grid fields, rasters, synthetic environments, noisy sampling
//! * [`kernel`] — SE-ARD covariance and log-space hyperparameter gradients
//! * [`dense`] — exact GP regression and LOO-CV hyperparameter estimation
//! * [`sogp`] — the sparse online GP state machine
//! * [`planner`] — entropy/mutual-information evaluation and DP waypoint
//!   selection, plus open-path ordering
//! * [`baselines`] — lawnmower and random waypoint generators
//! * [`mission`] — the sample/update/re-estimate/replan loop
//! * [`experiment`] — strategy-by-seed sweeps with CSV/raster outputs
//! * [`config`] — the TOML experiment file

pub mod baselines;
pub mod config;
pub mod dense;
pub mod error;
pub mod experiment;
pub mod field;
pub mod kernel;
pub mod mission;
pub mod planner;
pub mod sogp;

pub use baselines::{lawnmower_path, random_waypoints, CellRect, LawnmowerSpec, SweepAxis};
pub use dense::{optimize_hyperparams, DenseGp, LooStats, OptimizeOutcome, OptimizeStatus, OptimizerSettings};
pub use error::{CoreError, Result};
pub use experiment::{compare_report, format_report, run_experiment, EnvironmentSpec, ExperimentOutput, ExperimentSpec, ReportRow};
pub use field::{sample, synth_field, Cell, DynamicField, GridField, SamplePoint, SynthFieldParams};
pub use kernel::{HyperParams, NaturalHyperParams};
pub use mission::{checkpoint_metrics, run_mission, traverse, Checkpoint, MissionConfig, MissionTrace, PlanEvent, ReestimationEvent, SampleRecord, Strategy};
pub use planner::{
    build_planning_grid, gaussian_entropy, mutual_information, order_waypoints, plan_waypoints,
    posterior_cov, DpTable, PlanningGrid, WaypointPlan,
};
pub use sogp::{BasisVectorSet, SogpConfig, SogpUpdateRecord, UpdateAction};
