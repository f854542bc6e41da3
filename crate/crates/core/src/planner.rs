//! Mutual-information waypoint planning over a down-sampled candidate grid.
//!
//! The objective is the information a batch of n sampling locations carries
//! about the rest of the map. Exact subset maximization is intractable, so
//! stages are chained through a dynamic program: stage values
//!
//! ```text
//! V_1(x) = I(Z_x ; Z_{X \ x})
//! V_i(x) = max_p [ I(Z_x ; Z_{X \ chain(p) \ x} | Z_chain(p)) + V_{i-1}(p) ]
//! ```
//!
//! where `chain(p)` is the back-referenced sequence ending at predecessor
//! `p`. All covariances come from the sparse posterior; conditioning uses
//! hypothetical noise-free observations. Because every MI term here is over
//! a single candidate, each gain reduces to half a log-variance ratio whose
//! denominator `var(x | X \ x)` is chain-independent and is computed once
//! from the inverse of the full candidate covariance.
//!
//! Ties (values within [`TIE_EPS`]) resolve to the lowest candidate index at
//! every argmax so planning is deterministic and matches the brute-force
//! recurrence.

use nalgebra::DMatrix;

use crate::error::{CoreError, Result};
use crate::field::{Cell, GridField};
use crate::kernel::kernel_matrix;
use crate::sogp::BasisVectorSet;

/// Values this close are ties; the lowest candidate index wins.
pub const TIE_EPS: f64 = 1e-9;

/// Floor applied to determinants and variances before logs.
pub const DET_FLOOR: f64 = 1e-12;

/// Mask-respecting down-sampled candidate locations for planning.
#[derive(Debug, Clone)]
pub struct PlanningGrid {
    pub candidates: Vec<Cell>,
    pub source_dims: (usize, usize),
    pub stride: usize,
}

impl PlanningGrid {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.candidates.iter().map(|c| c.point()).collect()
    }
}

/// Every stride-th sampleable cell along each axis.
pub fn build_planning_grid(field: &GridField, stride: usize) -> Result<PlanningGrid> {
    if stride == 0 {
        return Err(CoreError::InvalidInput("stride must be >= 1".into()));
    }
    let mut candidates = Vec::new();
    let mut y = 0;
    while y < field.height() {
        let mut x = 0;
        while x < field.width() {
            let cell = Cell::new(x, y);
            if field.is_sampleable(cell) {
                candidates.push(cell);
            }
            x += stride;
        }
        y += stride;
    }
    if candidates.is_empty() {
        return Err(CoreError::InvalidInput(
            "planning grid has zero candidates after masking".into(),
        ));
    }
    Ok(PlanningGrid {
        candidates,
        source_dims: (field.width(), field.height()),
        stride,
    })
}

/// Differential entropy of a Gaussian with the given covariance:
/// `0.5 * log((2 pi e)^k * max(det, DET_FLOOR))`.
pub fn gaussian_entropy(cov: &DMatrix<f64>) -> Result<f64> {
    let k = cov.nrows();
    if k == 0 || cov.ncols() != k {
        return Err(CoreError::DimensionMismatch(format!(
            "entropy needs a square nonempty matrix, got {}x{}",
            k,
            cov.ncols()
        )));
    }
    let scale = cov.abs().max().max(1.0);
    for i in 0..k {
        for j in (i + 1)..k {
            if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-8 * scale {
                return Err(CoreError::InvalidInput(format!(
                    "asymmetric covariance at ({i}, {j})"
                )));
            }
        }
    }
    let det = cov.determinant();
    let two_pi_e = 2.0 * std::f64::consts::PI * std::f64::consts::E;
    Ok(0.5 * (k as f64 * two_pi_e.ln() + det.max(DET_FLOOR).ln()))
}

/// Sparse-posterior cross-covariance between two location sets (noise-free).
fn sogp_cov(bv: &BasisVectorSet, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let prior = kernel_matrix(a, b, bv.hp(), false)?;
    if bv.is_empty() {
        return Ok(prior);
    }
    let k_a = kernel_matrix(bv.points(), a, bv.hp(), false)?;
    let k_b = kernel_matrix(bv.points(), b, bv.hp(), false)?;
    Ok(prior + k_a.transpose() * bv.correction() * k_b)
}

/// Posterior covariance of `a`, further conditioned on hypothetical
/// noise-free observations at `b` via the Schur complement.
pub fn posterior_cov(
    bv: &BasisVectorSet,
    a: &[Vec<f64>],
    b: &[Vec<f64>],
) -> Result<DMatrix<f64>> {
    if a.is_empty() {
        return Err(CoreError::InvalidInput("posterior_cov needs a nonempty target set".into()));
    }
    let sigma_aa = sogp_cov(bv, a, a)?;
    if b.is_empty() {
        return Ok(sigma_aa);
    }
    let mut sigma_bb = sogp_cov(bv, b, b)?;
    let jitter = bv.hp().jitter();
    for i in 0..b.len() {
        sigma_bb[(i, i)] += jitter;
    }
    let sigma_ab = sogp_cov(bv, a, b)?;
    let chol = nalgebra::linalg::Cholesky::new(sigma_bb).ok_or_else(|| {
        CoreError::Factorization("singular conditioning block after jitter".into())
    })?;
    let solved = chol.solve(&sigma_ab.transpose());
    let mut cond = sigma_aa - &sigma_ab * solved;
    for i in 0..cond.nrows() {
        for j in (i + 1)..cond.ncols() {
            let s = 0.5 * (cond[(i, j)] + cond[(j, i)]);
            cond[(i, j)] = s;
            cond[(j, i)] = s;
        }
    }
    Ok(cond)
}

fn sets_disjoint(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    a.iter().all(|p| b.iter().all(|q| p != q))
}

/// Log-determinant of the jittered posterior covariance over a point set,
/// through Cholesky; stable where raw determinants of large kernel blocks
/// underflow.
fn jittered_log_det(bv: &BasisVectorSet, pts: &[Vec<f64>]) -> Result<f64> {
    let mut sigma = sogp_cov(bv, pts, pts)?;
    let jitter = bv.hp().jitter();
    for i in 0..pts.len() {
        sigma[(i, i)] += jitter;
    }
    let chol = nalgebra::linalg::Cholesky::new(sigma).ok_or_else(|| {
        CoreError::Factorization("covariance block singular after jitter".into())
    })?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// `I(Z_A; Z_B) = H(Z_A) - H(Z_A | Z_B)`, clamped at zero.
///
/// Evaluated through the Schur determinant identity
/// `det(Sigma_A|B) = det(Sigma_joint) / det(Sigma_BB)` with the same jitter
/// on every diagonal, so the value is exactly symmetric in `A` and `B`;
/// conditioning through `posterior_cov` jitters only one side and would
/// break symmetry at the jitter scale.
pub fn mutual_information(bv: &BasisVectorSet, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(CoreError::InvalidInput("mutual information needs nonempty sets".into()));
    }
    if !sets_disjoint(a, b) {
        return Err(CoreError::InvalidInput("mutual information needs disjoint sets".into()));
    }
    let joint_pts: Vec<Vec<f64>> = a.iter().chain(b.iter()).cloned().collect();
    let ld_a = jittered_log_det(bv, a)?;
    let ld_b = jittered_log_det(bv, b)?;
    let ld_joint = jittered_log_det(bv, &joint_pts)?;
    Ok((0.5 * (ld_a + ld_b - ld_joint)).max(0.0))
}

/// Stage values and back-references of one planning run.
#[derive(Debug, Clone)]
pub struct DpTable {
    pub stages: usize,
    /// `values[i][x]`: best stage-(i+1) value ending at candidate `x`;
    /// unreachable states hold `-inf`.
    pub values: Vec<Vec<f64>>,
    /// Predecessor candidate per stage per candidate (`None` at stage 1).
    pub back_refs: Vec<Vec<Option<usize>>>,
    /// Chosen candidate indices in stage order.
    pub selected: Vec<usize>,
}

impl DpTable {
    /// Chain of candidate indices ending at `x` in stage `stage` (1-based).
    fn chain(&self, stage: usize, x: usize) -> Vec<usize> {
        let mut chain = vec![x];
        let mut cur = x;
        let mut s = stage;
        while s > 1 {
            cur = self.back_refs[s - 1][cur].expect("recorded state has a predecessor");
            chain.push(cur);
            s -= 1;
        }
        chain.reverse();
        chain
    }
}

/// Select `n` informative waypoints by the chain-conditioned recurrence.
pub fn plan_waypoints(
    bv: &BasisVectorSet,
    grid: &PlanningGrid,
    n: usize,
) -> Result<(Vec<Cell>, DpTable)> {
    let len = grid.len();
    if n == 0 {
        return Err(CoreError::InvalidInput("need n >= 1 waypoints".into()));
    }
    if n > len {
        return Err(CoreError::InvalidInput(format!(
            "n = {n} exceeds {len} planning candidates"
        )));
    }
    let pts = grid.points();

    // Full posterior covariance over the candidate set, jittered once so the
    // chain-independent denominators var(x | X \ x) = 1 / [Sigma^-1]_xx and
    // all conditioning blocks come from a single factorization. Posterior
    // covariances of nearly fully observed candidate sets assemble with
    // rounding above the base jitter, so the jitter escalates until the
    // factorization succeeds.
    let base = sogp_cov(bv, &pts, &pts)?;
    let mut factorized = None;
    let mut sigma = base.clone();
    for scale in [1.0, 1e2, 1e4, 1e6] {
        sigma = base.clone();
        let jitter = scale * bv.hp().jitter();
        for i in 0..len {
            sigma[(i, i)] += jitter;
        }
        if let Some(chol) = nalgebra::linalg::Cholesky::new(sigma.clone()) {
            factorized = Some(chol);
            break;
        }
    }
    let chol = factorized.ok_or_else(|| {
        CoreError::Factorization("candidate covariance singular after jitter escalation".into())
    })?;
    let sigma_inv = chol.inverse();
    let log_rest: Vec<f64> = (0..len)
        .map(|x| (1.0 / sigma_inv[(x, x)]).max(DET_FLOOR).ln())
        .collect();

    let mut table = DpTable {
        stages: n,
        values: Vec::with_capacity(n),
        back_refs: Vec::with_capacity(n),
        selected: Vec::new(),
    };

    // Stage 1: I(Z_x ; Z_{X \ x}) = 0.5 (log var(x) - log var(x | X \ x)).
    let v1: Vec<f64> = (0..len)
        .map(|x| (0.5 * (sigma[(x, x)].max(DET_FLOOR).ln() - log_rest[x])).max(0.0))
        .collect();
    table.values.push(v1);
    table.back_refs.push(vec![None; len]);

    for stage in 2..=n {
        let mut values = vec![f64::NEG_INFINITY; len];
        let mut backs: Vec<Option<usize>> = vec![None; len];
        for p in 0..len {
            let base = table.values[stage - 2][p];
            if !base.is_finite() {
                continue;
            }
            let chain = table.chain(stage - 1, p);
            // Condition every candidate on the chain in one small solve.
            let c = chain.len();
            let sig_cc = DMatrix::from_fn(c, c, |i, j| sigma[(chain[i], chain[j])]);
            let sig_cx = DMatrix::from_fn(c, len, |i, j| sigma[(chain[i], j)]);
            let chol_cc = match nalgebra::linalg::Cholesky::new(sig_cc) {
                Some(ch) => ch,
                None => continue, // chain block degenerate; no transitions from p
            };
            let solved = chol_cc.solve(&sig_cx);
            for x in 0..len {
                if chain.contains(&x) {
                    continue; // revisiting a chain member is useless
                }
                let var_cond = sigma[(x, x)] - sig_cx.column(x).dot(&solved.column(x));
                let gain = (0.5 * (var_cond.max(DET_FLOOR).ln() - log_rest[x])).max(0.0);
                let val = base + gain;
                if val > values[x] + TIE_EPS {
                    values[x] = val;
                    backs[x] = Some(p);
                }
            }
        }
        table.values.push(values);
        table.back_refs.push(backs);
    }

    // Backtrace from the best final state.
    let last = &table.values[n - 1];
    let mut best = 0usize;
    for x in 1..len {
        if last[x] > last[best] + TIE_EPS {
            best = x;
        }
    }
    if !last[best].is_finite() {
        return Err(CoreError::Numerical("no reachable final planning state".into()));
    }
    table.selected = table.chain(n, best);
    let cells = table.selected.iter().map(|i| grid.candidates[*i]).collect();
    Ok((cells, table))
}

/// An ordered visiting plan starting at the robot position.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointPlan {
    /// First entry is the start location; each waypoint appears once.
    pub waypoints: Vec<Cell>,
    /// Objective value of the selected set (zero for non-informative plans).
    pub planned_mi: f64,
}

/// Total Euclidean length of a cell path.
pub fn path_length(cells: &[Cell]) -> f64 {
    cells.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Local improvement for an open path with position 0 pinned: 2-opt segment
/// reversals plus single-point relocations. Reversals alone stall on paths
/// that need an outlier rotated to the front.
fn improve_open_path(tour: &mut Vec<Cell>) {
    let k = tour.len() - 1;
    let mut improved = true;
    while improved {
        improved = false;
        // 2-opt: reverse tour[i+1..=j]; j = k drops the second edge pair.
        for i in 0..k.saturating_sub(1) {
            for j in (i + 1)..=k {
                let removed = tour[i].distance(tour[i + 1])
                    + if j < k { tour[j].distance(tour[j + 1]) } else { 0.0 };
                let added = tour[i].distance(tour[j])
                    + if j < k { tour[i + 1].distance(tour[j + 1]) } else { 0.0 };
                if added < removed - 1e-12 {
                    tour[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
        // Relocation: move one point to another position.
        let base = path_length(tour);
        'relocate: for p in 1..=k {
            for q in 1..=k {
                if q == p {
                    continue;
                }
                let mut candidate = tour.clone();
                let c = candidate.remove(p);
                candidate.insert(q, c);
                if path_length(&candidate) < base - 1e-12 {
                    *tour = candidate;
                    improved = true;
                    break 'relocate;
                }
            }
        }
    }
}

/// Open-path ordering: nearest-neighbor construction followed by 2-opt, with
/// the start pinned and no return edge. The improvement also runs from the
/// given order; local optima of a single descent can exceed the optimum by
/// more than the tolerated slack.
pub fn order_waypoints(start: Cell, points: &[Cell], planned_mi: f64) -> Result<WaypointPlan> {
    if points.is_empty() {
        return Err(CoreError::InvalidInput("order_waypoints needs at least one point".into()));
    }
    if points.contains(&start) {
        return Err(CoreError::InvalidInput(format!(
            "start {start} must not be one of the waypoints"
        )));
    }

    // Nearest neighbor from the start; ties keep the earliest point.
    let mut remaining: Vec<Cell> = points.to_vec();
    let mut nn_tour = vec![start];
    let mut cur = start;
    while !remaining.is_empty() {
        let mut best = 0usize;
        for i in 1..remaining.len() {
            if cur.distance(remaining[i]) < cur.distance(remaining[best]) {
                best = i;
            }
        }
        cur = remaining.remove(best);
        nn_tour.push(cur);
    }
    improve_open_path(&mut nn_tour);

    let mut given_tour = vec![start];
    given_tour.extend(points.iter().copied());
    improve_open_path(&mut given_tour);

    let tour = if path_length(&given_tour) < path_length(&nn_tour) {
        given_tour
    } else {
        nn_tour
    };
    Ok(WaypointPlan {
        waypoints: tour,
        planned_mi,
    })
}
