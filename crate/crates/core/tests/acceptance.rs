//! Acceptance suite: every criterion prints one pass/fail line and pins its
//! tolerances in code. Oracles here are independent re-implementations
//! (explicit refits, finite differences, exhaustive recurrences and
//! permutations); they never share the code path they check.

use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gpsurvey_core::baselines::{lawnmower_path, CellRect, LawnmowerSpec, SweepAxis};
use gpsurvey_core::dense::{optimize_hyperparams, DenseGp, OptimizerSettings};
use gpsurvey_core::experiment::{run_experiment, EnvironmentSpec, ExperimentSpec};
use gpsurvey_core::field::{synth_field, Cell, DynamicField, GridField, SynthFieldParams};
use gpsurvey_core::kernel::{kernel_matrix, kernel_matrix_grad, HyperParams};
use gpsurvey_core::mission::{run_mission, MissionConfig, Strategy};
use gpsurvey_core::planner::{
    build_planning_grid, gaussian_entropy, mutual_information, order_waypoints, path_length,
    plan_waypoints, posterior_cov, PlanningGrid, TIE_EPS,
};
use gpsurvey_core::sogp::{BasisVectorSet, SogpConfig, UpdateAction};

fn hp2(sn2: f64, sf2: f64, l: f64) -> HyperParams {
    HyperParams::from_natural(sn2, sf2, &[l, l]).unwrap()
}

fn hand_set_hp() -> HyperParams {
    HyperParams::from_log(-2.0, 2.0, vec![1.0, 1.0]).unwrap()
}

fn distinct_cells(rng: &mut ChaCha8Rng, n: usize, extent: usize) -> Vec<Cell> {
    let mut seen = std::collections::HashSet::new();
    let mut cells = Vec::new();
    while cells.len() < n {
        let c = Cell::new(rng.random_range(0..extent), rng.random_range(0..extent));
        if seen.insert(c) {
            cells.push(c);
        }
    }
    cells
}

fn acceptance_field(seed: u64) -> GridField {
    synth_field(&SynthFieldParams {
        seed,
        width: 48,
        height: 48,
        bump_count: 3,
        amplitude_range: (2.0, 4.0),
        length_scale_range: (8.0, 16.0),
    })
    .unwrap()
}

fn tmp_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("gpsurvey_accept_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

/// Criterion 1: streamed model with everything retained equals the batch GP.
#[test]
fn c01_sogp_matches_dense_oracle() {
    let started = Instant::now();
    let field = acceptance_field(11);
    let hp = hp2(0.1, 1.5, 4.0);
    let mut rng = ChaCha8Rng::seed_from_u64(101);

    let cells = distinct_cells(&mut rng, 20, 48);
    let points: Vec<Vec<f64>> = cells.iter().map(|c| c.point()).collect();
    let targets: Vec<f64> = cells
        .iter()
        .map(|c| field.value(*c).unwrap() + 0.05 * rng.random_range(-1.0..1.0))
        .collect();

    let mut cfg = SogpConfig::new(32, hp.clone());
    cfg.novelty_threshold = Some(1e-12);
    cfg.noise_var = hp.noise_var();
    let mut bv = BasisVectorSet::new(cfg).unwrap();
    for (p, y) in points.iter().zip(&targets) {
        bv.process(p, *y).unwrap();
    }
    assert_eq!(bv.len(), 20, "every distinct point must be retained");

    let dense = DenseGp::fit(&points, &targets, hp).unwrap();
    let grid: Vec<Vec<f64>> = (0..20)
        .flat_map(|gx| (0..20).map(move |gy| vec![2.4 * gx as f64, 2.4 * gy as f64]))
        .collect();
    let (m_s, v_s) = bv.predict(&grid).unwrap();
    let (m_d, cov_d) = dense.predict(&grid).unwrap();

    let n = grid.len() as f64;
    let mean_rms = (0..grid.len())
        .map(|i| (m_s[i] - m_d[i]).powi(2))
        .sum::<f64>()
        .sqrt()
        / n.sqrt();
    let var_rms = (0..grid.len())
        .map(|i| (v_s[i] - cov_d[(i, i)]).powi(2))
        .sum::<f64>()
        .sqrt()
        / n.sqrt();
    let elapsed = started.elapsed();
    assert!(mean_rms < 1e-6, "mean RMS {mean_rms}");
    assert!(var_rms < 1e-6, "variance RMS {var_rms}");
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "[acceptance] C1 sogp-dense equivalence: PASS (mean rms {mean_rms:.2e}, var rms {var_rms:.2e}, {elapsed:?})"
    );
}

/// Criterion 2: the partitioned-inverse LOO shortcut equals explicit refits.
#[test]
fn c02_loo_shortcut_matches_refits() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(2..=10usize);
        let hp = hp2(
            rng.random_range(0.05..0.5),
            rng.random_range(0.5..2.5),
            rng.random_range(0.8..3.0),
        );
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let model = DenseGp::fit(&x, &y, hp.clone()).unwrap();
        let stats = model.loo_stats().unwrap();
        for i in 0..n {
            let mut xr = x.clone();
            let mut yr = y.clone();
            xr.remove(i);
            yr.remove(i);
            let refit = DenseGp::fit(&xr, &yr, hp.clone()).unwrap();
            let (mean, cov) = refit.predict(std::slice::from_ref(&x[i])).unwrap();
            let var = cov[(0, 0)] + hp.noise_var() + hp.jitter();
            worst = worst.max((stats.loo_means[i] - mean[0]).abs());
            worst = worst.max((stats.loo_vars[i] - var).abs());
        }
    }
    assert!(worst < 1e-8, "worst LOO deviation {worst}");
    println!("[acceptance] C2 LOO shortcut vs refits: PASS (max abs err {worst:.2e})");
}

/// Criterion 3: analytic LOO gradient equals central finite differences.
#[test]
fn c03_loo_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let hp = hp2(
            rng.random_range(0.1..0.4),
            rng.random_range(0.6..2.0),
            rng.random_range(0.8..2.5),
        );
        let x: Vec<Vec<f64>> = (0..8)
            .map(|_| vec![rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)])
            .collect();
        let y: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
        let grad = DenseGp::fit(&x, &y, hp.clone()).unwrap().loo_gradient().unwrap();
        for j in 0..hp.param_count() {
            let mut lo = hp.to_log_vector();
            let mut hi = hp.to_log_vector();
            lo[j] -= h;
            hi[j] += h;
            let ll_lo = DenseGp::fit(&x, &y, HyperParams::from_log_vector(&lo).unwrap())
                .unwrap()
                .loo_log_likelihood()
                .unwrap();
            let ll_hi = DenseGp::fit(&x, &y, HyperParams::from_log_vector(&hi).unwrap())
                .unwrap()
                .loo_log_likelihood()
                .unwrap();
            let fd = (ll_hi - ll_lo) / (2.0 * h);
            let rel = (grad[j] - fd).abs() / fd.abs().max(1e-8);
            worst = worst.max(rel);
        }
    }
    assert!(worst < 1e-4, "worst relative gradient error {worst}");
    println!("[acceptance] C3 LOO gradient vs finite differences: PASS (max rel err {worst:.2e})");
}

/// Criterion 4: kernel matrix derivatives equal finite differences.
#[test]
fn c04_kernel_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let hp = hp2(
            rng.random_range(0.05..0.5),
            rng.random_range(0.5..3.0),
            rng.random_range(0.6..2.5),
        );
        let pts: Vec<Vec<f64>> = (0..4)
            .map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
            .collect();
        for j in 0..hp.param_count() {
            let grad = kernel_matrix_grad(&pts, &hp, j).unwrap();
            let mut lo = hp.to_log_vector();
            let mut hi = hp.to_log_vector();
            lo[j] -= h;
            hi[j] += h;
            let k_lo =
                kernel_matrix(&pts, &pts, &HyperParams::from_log_vector(&lo).unwrap(), true).unwrap();
            let k_hi =
                kernel_matrix(&pts, &pts, &HyperParams::from_log_vector(&hi).unwrap(), true).unwrap();
            let fd = (k_hi - k_lo) / (2.0 * h);
            worst = worst.max((grad - fd).abs().max());
        }
    }
    assert!(worst < 1e-6, "worst kernel gradient deviation {worst}");
    println!("[acceptance] C4 kernel gradients vs finite differences: PASS (max abs err {worst:.2e})");
}

/// Independent exhaustive evaluation of the chain-conditioned recurrence:
/// MI terms go through `posterior_cov` + `gaussian_entropy` (the entropy
/// difference), chains are re-derived per stage, and ties resolve to the
/// lowest candidate index within `TIE_EPS`.
fn oracle_plan(bv: &BasisVectorSet, grid: &PlanningGrid, n: usize) -> Vec<usize> {
    let pts = grid.points();
    let len = pts.len();
    let single_gain = |x: usize, cond: &[usize]| -> f64 {
        let a = std::slice::from_ref(&pts[x]);
        let cond_pts: Vec<Vec<f64>> = cond.iter().map(|i| pts[*i].clone()).collect();
        let all_but_x: Vec<Vec<f64>> = (0..len).filter(|i| *i != x).map(|i| pts[i].clone()).collect();
        let h_given_chain = gaussian_entropy(&posterior_cov(bv, a, &cond_pts).unwrap()).unwrap();
        let h_given_rest = gaussian_entropy(&posterior_cov(bv, a, &all_but_x).unwrap()).unwrap();
        (h_given_chain - h_given_rest).max(0.0)
    };

    let v1: Vec<f64> = (0..len).map(|x| single_gain(x, &[])).collect();
    let mut values = vec![v1];
    let mut backs: Vec<Vec<Option<usize>>> = vec![vec![None; len]];
    for stage in 1..n {
        let mut v = vec![f64::NEG_INFINITY; len];
        let mut b: Vec<Option<usize>> = vec![None; len];
        let prev = values[stage - 1].clone();
        for (p, prev_val) in prev.iter().enumerate() {
            if !prev_val.is_finite() {
                continue;
            }
            // chain ending at p, re-derived from the oracle's own back-refs
            let mut chain = vec![p];
            let mut cur = p;
            for s in (1..stage).rev() {
                cur = backs[s][cur].unwrap();
                chain.push(cur);
            }
            chain.reverse();
            for x in 0..len {
                if chain.contains(&x) {
                    continue;
                }
                let val = prev_val + single_gain(x, &chain);
                if val > v[x] + TIE_EPS {
                    v[x] = val;
                    b[x] = Some(p);
                }
            }
        }
        values.push(v);
        backs.push(b);
    }

    let last = &values[n - 1];
    let mut best = 0usize;
    for x in 1..len {
        if last[x] > last[best] + TIE_EPS {
            best = x;
        }
    }
    let mut chain = vec![best];
    let mut cur = best;
    for s in (1..n).rev() {
        cur = backs[s][cur].unwrap();
        chain.push(cur);
    }
    chain.reverse();
    chain
}

/// Criterion 5: the DP planner equals the exhaustive chain-conditioned
/// recurrence on a 5x5 grid for n <= 3, and the exhaustive argmax for n = 1
/// on grids up to 12x12.
#[test]
fn c05_dp_planner_matches_brute_force_oracle() {
    let field5 = GridField::new(5, 5, 1.0, vec![0.0; 25], vec![true; 25]).unwrap();
    let grid5 = build_planning_grid(&field5, 1).unwrap();
    let bv = BasisVectorSet::new(SogpConfig::new(32, hp2(0.01, 1.0, 1.5))).unwrap();
    for n in 1..=3 {
        let (_, table) = plan_waypoints(&bv, &grid5, n).unwrap();
        let oracle = oracle_plan(&bv, &grid5, n);
        assert_eq!(table.selected, oracle, "stage count {n}");
    }

    // Shorter length-scale for the larger grids: at l = 1.5 the 143-point
    // conditioning Grams reach condition numbers where log-det noise exceeds
    // the 1e-9 tie window, and exact symmetric ties become unresolvable for
    // any evaluation route.
    let bv_wide = BasisVectorSet::new(SogpConfig::new(32, hp2(0.01, 1.0, 0.8))).unwrap();
    for dim in [6usize, 9, 12] {
        let field = GridField::new(dim, dim, 1.0, vec![0.0; dim * dim], vec![true; dim * dim]).unwrap();
        let grid = build_planning_grid(&field, 1).unwrap();
        let (cells, _) = plan_waypoints(&bv_wide, &grid, 1).unwrap();
        let pts = grid.points();
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, p) in pts.iter().enumerate() {
            let rest: Vec<Vec<f64>> = pts.iter().filter(|q| *q != p).cloned().collect();
            let mi = mutual_information(&bv_wide, std::slice::from_ref(p), &rest).unwrap();
            if mi > best.1 + TIE_EPS {
                best = (i, mi);
            }
        }
        assert_eq!(cells[0], grid.candidates[best.0], "exhaustive argmax on {dim}x{dim}");
    }
    println!("[acceptance] C5 DP planner vs exhaustive recurrence: PASS (5x5 n<=3 exact, n=1 up to 12x12)");
}

/// Criterion 6: MI symmetry, non-negativity, and conditioning monotonicity.
#[test]
fn c06_mutual_information_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut bv = BasisVectorSet::new(SogpConfig::new(32, hp2(0.05, 1.2, 2.0))).unwrap();
    for c in distinct_cells(&mut rng, 8, 10) {
        bv.process(&c.point(), rng.random_range(-1.0..1.0)).unwrap();
    }
    let mut worst_asym: f64 = 0.0;
    for _ in 0..100 {
        let na = rng.random_range(1..=3usize);
        let nb = rng.random_range(1..=3usize);
        let cells = distinct_cells(&mut rng, na + nb, 14);
        let a: Vec<Vec<f64>> = cells[..na].iter().map(|c| c.point()).collect();
        let b: Vec<Vec<f64>> = cells[na..].iter().map(|c| c.point()).collect();
        let iab = mutual_information(&bv, &a, &b).unwrap();
        let iba = mutual_information(&bv, &b, &a).unwrap();
        assert!(iab >= 0.0 && iba >= 0.0);
        worst_asym = worst_asym.max((iab - iba).abs());
        let h_uncond = gaussian_entropy(&posterior_cov(&bv, &a, &[]).unwrap()).unwrap();
        let h_cond = gaussian_entropy(&posterior_cov(&bv, &a, &b).unwrap()).unwrap();
        assert!(h_cond <= h_uncond + 1e-9, "conditioning raised entropy");
    }
    assert!(worst_asym < 1e-9, "worst asymmetry {worst_asym}");
    println!("[acceptance] C6 MI properties: PASS (max |I(A;B)-I(B;A)| {worst_asym:.2e})");
}

/// Criterion 7: waypoint ordering against the exhaustive 6! optimum.
#[test]
fn c07_ordering_near_optimal() {
    fn exhaustive(start: Cell, pts: &[Cell]) -> f64 {
        fn perms(v: Vec<Cell>) -> Vec<Vec<Cell>> {
            if v.len() <= 1 {
                return vec![v];
            }
            let mut out = Vec::new();
            for i in 0..v.len() {
                let mut rest = v.clone();
                let head = rest.remove(i);
                for mut tail in perms(rest) {
                    tail.insert(0, head);
                    out.push(tail);
                }
            }
            out
        }
        perms(pts.to_vec())
            .into_iter()
            .map(|p| {
                let mut full = vec![start];
                full.extend(p);
                path_length(&full)
            })
            .fold(f64::INFINITY, f64::min)
    }

    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..50 {
        let start = Cell::new(rng.random_range(0..20), rng.random_range(0..20));
        let mut pts = Vec::new();
        while pts.len() < 6 {
            let c = Cell::new(rng.random_range(0..20), rng.random_range(0..20));
            if c != start && !pts.contains(&c) {
                pts.push(c);
            }
        }
        let plan = order_waypoints(start, &pts, 0.0).unwrap();
        let got = path_length(&plan.waypoints);
        let opt = exhaustive(start, &pts);
        let mut naive = vec![start];
        naive.extend(pts.iter().copied());
        assert!(got <= opt * 1.2 + 1e-9, "ratio {}", got / opt);
        assert!(got <= path_length(&naive) + 1e-9);
        worst_ratio = worst_ratio.max(got / opt);
    }

    // single point and collinear cases are exact
    let single = order_waypoints(Cell::new(0, 0), &[Cell::new(2, 3)], 0.0).unwrap();
    assert_eq!(single.waypoints, vec![Cell::new(0, 0), Cell::new(2, 3)]);
    let collinear = vec![Cell::new(3, 0), Cell::new(1, 0), Cell::new(2, 0), Cell::new(4, 0)];
    let plan = order_waypoints(Cell::new(0, 0), &collinear, 0.0).unwrap();
    let xs: Vec<usize> = plan.waypoints.iter().map(|c| c.x).collect();
    assert_eq!(xs, vec![0, 1, 2, 3, 4]);
    println!("[acceptance] C7 open-path ordering: PASS (worst ratio {worst_ratio:.4})");
}

/// Criterion 8: capacity bound and the replacement-counting trigger.
#[test]
fn c08_capacity_and_rho_mechanics() {
    let env = DynamicField::static_field(
        synth_field(&SynthFieldParams {
            seed: 88,
            width: 24,
            height: 24,
            bump_count: 2,
            amplitude_range: (1.0, 2.5),
            length_scale_range: (5.0, 8.0),
        })
        .unwrap(),
    );
    let cfg = MissionConfig {
        strategy: Strategy::Random,
        budget: 500,
        batch_n: 4,
        rho0: 0.6,
        sogp: SogpConfig::new(10, hp2(0.05, 1.0, 3.0)),
        optimizer: OptimizerSettings {
            max_iters: 10,
            ..OptimizerSettings::default()
        },
        noise_sd: 0.02,
        seed: 8,
        start: Cell::new(12, 12),
        planning_stride: 2,
        lawnmower_spacing: 2,
        checkpoint_interval: 50,
    };
    let trace = run_mission(&cfg, &env).unwrap();
    assert_eq!(trace.samples.len(), 500);
    for s in &trace.samples {
        assert!(s.bv_size <= 10, "BV grew to {}", s.bv_size);
        assert!((0.0..=1.0).contains(&s.rho));
    }
    assert!(!trace.reestimations.is_empty(), "instance produced no re-estimations");

    // Every re-estimation must sit on exactly 7 replacement events
    // (rho = 7/10 is the first value strictly above 0.6) counted since the
    // governing plan's reset.
    let plan_steps: Vec<usize> = trace.plans.iter().map(|p| p.step).collect();
    for e in &trace.reestimations {
        let reset = *plan_steps
            .iter()
            .filter(|p| **p < e.step)
            .max()
            .expect("a plan precedes every re-estimation");
        let replacements = trace
            .samples
            .iter()
            .filter(|s| s.sample.step >= reset && s.sample.step < e.step)
            .filter(|s| s.action == UpdateAction::AddedThenPruned)
            .count();
        assert_eq!(
            replacements, 7,
            "re-estimation at step {} fired on {replacements} replacements",
            e.step
        );
    }
    println!(
        "[acceptance] C8 capacity + rho mechanics: PASS ({} re-estimations, all at 7/10 replacements)",
        trace.reestimations.len()
    );
}

/// Comparison missions share one reasonable prior kernel (length-scales at
/// ~12% of the domain, signal variance near the field's). Every strategy
/// runs the identical learning loop; only waypoint generation differs.
fn comparison_mission(budget: usize, noise_sd: f64, capacity: usize) -> MissionConfig {
    MissionConfig {
        strategy: Strategy::Informative,
        budget,
        batch_n: 4,
        rho0: 0.6,
        sogp: SogpConfig::new(capacity, HyperParams::from_natural(0.135, 4.0, &[6.0, 6.0]).unwrap()),
        optimizer: OptimizerSettings::default(),
        noise_sd,
        seed: 0,
        start: Cell::new(24, 24),
        planning_stride: 4,
        lawnmower_spacing: 4,
        checkpoint_interval: 25,
    }
}

/// Median across seeds of the per-seed first step reaching the threshold;
/// seeds that never reach it count as +inf.
fn median_steps_to_threshold(
    curves: &[Vec<(usize, f64)>],
    threshold: f64,
) -> f64 {
    let mut firsts: Vec<f64> = curves
        .iter()
        .map(|c| {
            c.iter()
                .find(|(_, mse)| *mse <= threshold)
                .map_or(f64::INFINITY, |(step, _)| *step as f64)
        })
        .collect();
    firsts.sort_by(|a, b| a.total_cmp(b));
    let n = firsts.len();
    if n % 2 == 1 {
        firsts[n / 2]
    } else {
        0.5 * (firsts[n / 2 - 1] + firsts[n / 2])
    }
}

fn mission_curves(
    cfg: &MissionConfig,
    env: &DynamicField,
    strategy: Strategy,
    seeds: &[u64],
) -> Vec<Vec<(usize, f64)>> {
    seeds
        .iter()
        .map(|seed| {
            let mut c = cfg.clone();
            c.strategy = strategy;
            c.seed = *seed;
            run_mission(&c, env)
                .unwrap()
                .metrics
                .iter()
                .map(|m| (m.step, m.mse))
                .collect()
        })
        .collect()
}

/// Criterion 9: informative sampling reaches 10% of the field variance in
/// fewer median steps than random and equal-budget lawnmower sampling.
#[test]
fn c09_strategy_comparison_trend() {
    let started = Instant::now();
    let field = acceptance_field(42);
    let (lo, hi) = field.value_range();
    let noise_sd = 0.01 * (hi - lo);
    let threshold = 0.1 * field.variance();
    let env = DynamicField::static_field(field);
    let seeds = [1u64, 2, 3, 4, 5];
    let cfg = comparison_mission(600, noise_sd, 100);

    // equal-budget lawnmower: spacing 4 gives a 48x48 serpentine of just
    // over 600 on-path cells
    let lawn_cells = lawnmower_path(
        &LawnmowerSpec {
            region: CellRect::full(env.geometry()),
            spacing: cfg.lawnmower_spacing,
            axis: SweepAxis::Vertical,
        },
        env.geometry(),
    )
    .unwrap()
    .len();
    assert!(lawn_cells >= 550, "lawnmower path too short for equal budget: {lawn_cells}");

    let info = mission_curves(&cfg, &env, Strategy::Informative, &seeds);
    let random = mission_curves(&cfg, &env, Strategy::Random, &seeds);
    let lawn = mission_curves(&cfg, &env, Strategy::Lawnmower, &seeds);

    let m_info = median_steps_to_threshold(&info, threshold);
    let m_random = median_steps_to_threshold(&random, threshold);
    let m_lawn = median_steps_to_threshold(&lawn, threshold);
    let elapsed = started.elapsed();

    assert!(
        m_info < m_random,
        "informative {m_info} vs random {m_random} (threshold {threshold:.4})"
    );
    assert!(
        m_info < m_lawn,
        "informative {m_info} vs lawnmower {m_lawn} (threshold {threshold:.4})"
    );
    assert!(elapsed.as_secs_f64() < 600.0, "took {elapsed:?}");
    println!(
        "[acceptance] C9 strategy comparison: PASS (median steps to {threshold:.3}: informative {m_info}, random {m_random}, lawnmower {m_lawn}; {elapsed:?})"
    );
}

/// Per-step median across seeds.
fn median_curve(curves: &[Vec<(usize, f64)>]) -> Vec<(usize, f64)> {
    let steps: Vec<usize> = curves[0].iter().map(|(s, _)| *s).collect();
    steps
        .into_iter()
        .map(|step| {
            let mut vals: Vec<f64> = curves
                .iter()
                .filter_map(|c| c.iter().find(|(s, _)| *s == step).map(|(_, m)| *m))
                .collect();
            vals.sort_by(|a, b| a.total_cmp(b));
            let n = vals.len();
            let med = if n % 2 == 1 {
                vals[n / 2]
            } else {
                0.5 * (vals[n / 2 - 1] + vals[n / 2])
            };
            (step, med)
        })
        .collect()
}

/// Criterion 10: piecewise-static recovery — error vs the current frame
/// jumps at each switch, declines within frames (in median), and the
/// informative strategy ends below random.
#[test]
fn c10_dynamic_recovery_trend() {
    let frames: Vec<GridField> = (0..3).map(|i| acceptance_field(60 + i)).collect();
    let env = DynamicField::new(frames, 200).unwrap();
    let (lo, hi) = env.geometry().value_range();
    let mut cfg = comparison_mission(600, 0.01 * (hi - lo), 100);
    // Informative plans are deterministic per environment, so the median
    // curve inherits single-trajectory wiggle; 50-step checkpoints are the
    // granularity at which the recovery shape is asserted.
    cfg.checkpoint_interval = 50;
    let seeds = [1u64, 2, 3, 4, 5];

    let info = median_curve(&mission_curves(&cfg, &env, Strategy::Informative, &seeds));
    let random = median_curve(&mission_curves(&cfg, &env, Strategy::Random, &seeds));

    let at = |curve: &[(usize, f64)], step: usize| -> f64 {
        curve.iter().find(|(s, _)| *s == step).map(|(_, m)| *m).unwrap()
    };

    // jumps at the frame switches (the checkpoints at 200 and 400 score
    // against the frame that just became current)
    assert!(
        at(&info, 200) > at(&info, 150),
        "no jump at step 200: {} vs {}",
        at(&info, 200),
        at(&info, 150)
    );
    assert!(
        at(&info, 400) > at(&info, 350),
        "no jump at step 400: {} vs {}",
        at(&info, 400),
        at(&info, 350)
    );

    // monotone-in-median decline within each frame
    for (frame_start, frame_end) in [(50usize, 150usize), (200, 350), (400, 600)] {
        let window: Vec<(usize, f64)> = info
            .iter()
            .filter(|(s, _)| *s >= frame_start && *s <= frame_end)
            .cloned()
            .collect();
        assert!(window.len() >= 3);
        for w in window.windows(2) {
            assert!(
                w[1].1 <= w[0].1 + 1e-9,
                "median MSE rose within a frame: step {} {} -> step {} {}",
                w[0].0,
                w[0].1,
                w[1].0,
                w[1].1
            );
        }
    }

    let final_info = at(&info, 600);
    let final_random = at(&random, 600);
    assert!(
        final_info < final_random,
        "final informative {final_info} vs random {final_random}"
    );
    println!(
        "[acceptance] C10 dynamic recovery: PASS (jumps at 200/400, in-frame decline, final {final_info:.4} < random {final_random:.4})"
    );
}

/// Criterion 11: starting from the hand-set kernel, learned length-scales
/// grow on a smooth long-range field and the objective never decreases.
#[test]
fn c11_hyperparameter_learning_direction() {
    let mut grew = 0usize;
    for seed in 1..=5u64 {
        let field = acceptance_field(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(1100 + seed);
        let cells = distinct_cells(&mut rng, 60, 48);
        let x: Vec<Vec<f64>> = cells.iter().map(|c| c.point()).collect();
        let y: Vec<f64> = cells
            .iter()
            .map(|c| field.value(*c).unwrap() + 0.02 * rng.random_range(-1.0..1.0))
            .collect();
        let out = optimize_hyperparams(&x, &y, hand_set_hp(), &OptimizerSettings::default()).unwrap();
        for w in out.objective_trace.windows(2) {
            assert!(w[1] >= w[0], "objective decreased on seed {seed}");
        }
        let ls = out.hp.log_length_scales();
        if ls[0] > 1.0 && ls[1] > 1.0 {
            grew += 1;
        }
    }
    assert!(grew >= 4, "length-scales grew in only {grew} of 5 seeds");
    println!("[acceptance] C11 hyperparameter learning direction: PASS ({grew}/5 seeds grew both length-scales)");
}

/// Criterion 12: identical specs produce byte-identical outputs.
#[test]
fn c12_experiment_determinism() {
    let spec_for = |dir: std::path::PathBuf| ExperimentSpec {
        strategies: vec![Strategy::Informative, Strategy::Random],
        seeds: vec![1, 2],
        output_dir: dir,
        mse_thresholds: vec![0.5],
        mission: MissionConfig {
            strategy: Strategy::Informative,
            budget: 120,
            batch_n: 4,
            rho0: 0.6,
            sogp: SogpConfig::new(16, hp2(0.05, 1.0, 3.0)),
            optimizer: OptimizerSettings {
                max_iters: 10,
                ..OptimizerSettings::default()
            },
            noise_sd: 0.02,
            seed: 0,
            start: Cell::new(12, 12),
            planning_stride: 2,
            lawnmower_spacing: 2,
            checkpoint_interval: 20,
        },
        env: EnvironmentSpec::Synthetic {
            params: SynthFieldParams {
                seed: 12,
                width: 24,
                height: 24,
                bump_count: 2,
                amplitude_range: (1.0, 2.0),
                length_scale_range: (5.0, 8.0),
            },
            frames: 1,
            frame_length: 100,
        },
    };

    let dir_a = tmp_dir("det_a");
    let dir_b = tmp_dir("det_b");
    let out_a = run_experiment(&spec_for(dir_a.clone())).unwrap();
    let out_b = run_experiment(&spec_for(dir_b.clone())).unwrap();

    let mut compared = 0usize;
    for (a, b) in out_a
        .cell_files
        .iter()
        .chain(std::iter::once(&out_a.aggregate))
        .zip(out_b.cell_files.iter().chain(std::iter::once(&out_b.aggregate)))
    {
        assert_eq!(a.file_name(), b.file_name());
        let bytes_a = std::fs::read(a).unwrap();
        let bytes_b = std::fs::read(b).unwrap();
        assert_eq!(bytes_a, bytes_b, "{a:?} differs between runs");
        compared += 1;
    }
    assert_eq!(compared, 17); // 2 strategies x 2 seeds x 4 files + aggregate
    std::fs::remove_dir_all(&dir_a).unwrap();
    std::fs::remove_dir_all(&dir_b).unwrap();
    println!("[acceptance] C12 determinism: PASS ({compared} files byte-identical across runs)");
}
