//! Exact GP regression: the reference model for the sparse path and the host
//! of leave-one-out hyperparameter estimation.
//!
//! The LOO predictive mean and variance for every held-out point come from
//! the inverse of the complete covariance matrix,
//!
//! ```text
//! mean_i = y_i - [K^-1 y]_i / [K^-1]_ii      var_i = 1 / [K^-1]_ii
//! ```
//!
//! so a single factorization serves all n folds. Gradients of the summed
//! log-likelihood follow from `Z_j = K^-1 dK/dtheta_j` and the weight vector
//! `alpha = K^-1 y`; everything is expressed for log-space hyperparameters.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::kernel::{kernel_matrix, kernel_matrix_grad, HyperParams};

/// Exact GP over a training set. Immutable once fitted.
#[derive(Debug, Clone)]
pub struct DenseGp {
    x: Vec<Vec<f64>>,
    y: DVector<f64>,
    hp: HyperParams,
    k_inv: DMatrix<f64>,
    alpha: DVector<f64>,
}

/// Per-point LOO statistics plus the `Z_j` matrices the gradient needs.
#[derive(Debug, Clone)]
pub struct LooStats {
    pub z: Vec<DMatrix<f64>>,
    pub loo_means: DVector<f64>,
    pub loo_vars: DVector<f64>,
}

/// Gradient-ascent settings for LOO hyperparameter estimation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSettings {
    pub learning_rate: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            learning_rate: 0.05,
            max_iters: 100,
            tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizeStatus {
    /// Gradient norm fell below `tol`.
    GradientConverged,
    /// No step improved the objective by more than `tol`.
    ObjectiveConverged,
    MaxIters,
    /// A factorization failed mid-run; the best iterate so far is returned.
    Degenerate,
}

/// Result of an optimization run; `objective_trace` holds the objective at
/// the start and after every accepted step (non-decreasing by construction).
#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub hp: HyperParams,
    pub objective: f64,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub status: OptimizeStatus,
}

impl DenseGp {
    /// Fit on a training set; an empty set yields the prior model.
    pub fn fit(x: &[Vec<f64>], y: &[f64], hp: HyperParams) -> Result<Self> {
        if x.len() != y.len() {
            return Err(CoreError::DimensionMismatch(format!(
                "{} inputs vs {} targets",
                x.len(),
                y.len()
            )));
        }
        if x.is_empty() {
            return Ok(DenseGp {
                x: Vec::new(),
                y: DVector::zeros(0),
                hp,
                k_inv: DMatrix::zeros(0, 0),
                alpha: DVector::zeros(0),
            });
        }
        let n = x.len();
        let mut k = kernel_matrix(x, x, &hp, true)?;
        let jitter = hp.jitter();
        for i in 0..n {
            k[(i, i)] += jitter;
        }
        let chol = nalgebra::linalg::Cholesky::new(k).ok_or_else(|| {
            CoreError::Factorization(format!(
                "training covariance ({n} points) is not positive definite with jitter"
            ))
        })?;
        let y = DVector::from_column_slice(y);
        let alpha = chol.solve(&y);
        let k_inv = chol.inverse();
        Ok(DenseGp {
            x: x.to_vec(),
            y,
            hp,
            k_inv,
            alpha,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn hp(&self) -> &HyperParams {
        &self.hp
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn k_inv(&self) -> &DMatrix<f64> {
        &self.k_inv
    }

    /// Posterior mean and (noise-free) covariance at the test points.
    pub fn predict(&self, xs: &[Vec<f64>]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let prior = kernel_matrix(xs, xs, &self.hp, false)?;
        if self.is_empty() {
            return Ok((DVector::zeros(xs.len()), prior));
        }
        let k_star = kernel_matrix(xs, &self.x, &self.hp, false)?;
        let mean = &k_star * &self.alpha;
        let mut cov = &prior - &k_star * &self.k_inv * k_star.transpose();
        // Enforce symmetry and the small-negative-variance clamp.
        for i in 0..cov.nrows() {
            for j in (i + 1)..cov.ncols() {
                let s = 0.5 * (cov[(i, j)] + cov[(j, i)]);
                cov[(i, j)] = s;
                cov[(j, i)] = s;
            }
            let d = cov[(i, i)];
            if d < -1e-9 {
                return Err(CoreError::Numerical(format!(
                    "predicted variance {d} below -1e-9 at test point {i}"
                )));
            }
            if d < 0.0 {
                cov[(i, i)] = 0.0;
            }
        }
        Ok((mean, cov))
    }

    fn loo_mean_vars(&self) -> Result<(DVector<f64>, DVector<f64>)> {
        let n = self.len();
        if n < 2 {
            return Err(CoreError::InvalidInput(format!(
                "LOO statistics need at least 2 training points, have {n}"
            )));
        }
        let mut means = DVector::zeros(n);
        let mut vars = DVector::zeros(n);
        for i in 0..n {
            let p = self.k_inv[(i, i)];
            if p <= 0.0 {
                return Err(CoreError::Numerical(format!(
                    "non-positive precision diagonal [K^-1]_{i}{i} = {p}"
                )));
            }
            means[i] = self.y[i] - self.alpha[i] / p;
            vars[i] = 1.0 / p;
        }
        Ok((means, vars))
    }

    /// LOO means, variances and the `Z_j` matrices for every hyperparameter.
    pub fn loo_stats(&self) -> Result<LooStats> {
        let (loo_means, loo_vars) = self.loo_mean_vars()?;
        let mut z = Vec::with_capacity(self.hp.param_count());
        for j in 0..self.hp.param_count() {
            let dk = kernel_matrix_grad(&self.x, &self.hp, j)?;
            z.push(&self.k_inv * dk);
        }
        Ok(LooStats {
            z,
            loo_means,
            loo_vars,
        })
    }

    /// Sum over points of the held-out Gaussian log-likelihood.
    pub fn loo_log_likelihood(&self) -> Result<f64> {
        let (means, vars) = self.loo_mean_vars()?;
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        let mut ll = 0.0;
        for i in 0..self.len() {
            let r = self.y[i] - means[i];
            ll += -0.5 * vars[i].ln() - r * r / (2.0 * vars[i]) - 0.5 * ln_2pi;
        }
        Ok(ll)
    }

    /// Gradient of the LOO log-likelihood over log hyperparameters,
    /// ordered `[log sn2, log sf2, log l_0, log l_1, ...]`.
    pub fn loo_gradient(&self) -> Result<DVector<f64>> {
        let stats = self.loo_stats()?;
        let n = self.len();
        let mut grad = DVector::zeros(self.hp.param_count());
        for (j, zj) in stats.z.iter().enumerate() {
            let zj_alpha = zj * &self.alpha;
            let mut g = 0.0;
            for i in 0..n {
                let p = self.k_inv[(i, i)];
                // diag(Z_j K^-1)_ii without forming the full product
                let zk_ii = zj.row(i).transpose().dot(&self.k_inv.column(i));
                let a = self.alpha[i];
                g += (a * zj_alpha[i] - 0.5 * (1.0 + a * a / p) * zk_ii) / p;
            }
            grad[j] = g;
        }
        Ok(grad)
    }
}

fn objective(x: &[Vec<f64>], y: &[f64], hp: &HyperParams) -> Result<f64> {
    DenseGp::fit(x, y, hp.clone())?.loo_log_likelihood()
}

/// Gradient ascent on the LOO log-likelihood with step-halving: a step is
/// accepted only if it improves the objective, so the accepted sequence is
/// non-decreasing and the result is never worse than `hp0`.
pub fn optimize_hyperparams(
    x: &[Vec<f64>],
    y: &[f64],
    hp0: HyperParams,
    settings: &OptimizerSettings,
) -> Result<OptimizeOutcome> {
    const MAX_HALVINGS: usize = 30;
    if x.len() < 2 {
        return Err(CoreError::InvalidInput(format!(
            "hyperparameter estimation needs at least 2 points, have {}",
            x.len()
        )));
    }
    let mut hp = hp0;
    let mut best = objective(x, y, &hp)?;
    let mut trace = vec![best];
    let mut status = OptimizeStatus::MaxIters;
    let mut iterations = 0;

    for iter in 0..settings.max_iters {
        iterations = iter + 1;
        let grad = match DenseGp::fit(x, y, hp.clone()).and_then(|m| m.loo_gradient()) {
            Ok(g) => g,
            Err(_) => {
                status = OptimizeStatus::Degenerate;
                break;
            }
        };
        if grad.norm() < settings.tol {
            status = OptimizeStatus::GradientConverged;
            break;
        }

        let log_hp = hp.to_log_vector();
        let mut step = settings.learning_rate;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let candidate_log = &log_hp + &grad * step;
            let candidate = match HyperParams::from_log_vector(&candidate_log) {
                Ok(c) => c,
                Err(_) => {
                    step *= 0.5;
                    continue;
                }
            };
            match objective(x, y, &candidate) {
                Ok(l) if l > best => {
                    accepted = Some((candidate, l));
                    break;
                }
                _ => step *= 0.5,
            }
        }
        match accepted {
            Some((candidate, l)) => {
                let gain = l - best;
                hp = candidate;
                best = l;
                trace.push(best);
                if gain < settings.tol {
                    status = OptimizeStatus::ObjectiveConverged;
                    break;
                }
            }
            None => {
                // No improving step exists along the gradient at any scale.
                status = OptimizeStatus::ObjectiveConverged;
                break;
            }
        }
    }

    Ok(OptimizeOutcome {
        hp,
        objective: best,
        objective_trace: trace,
        iterations,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::kernel_eval;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hp2(sn2: f64, sf2: f64, lx: f64, ly: f64) -> HyperParams {
        HyperParams::from_natural(sn2, sf2, &[lx, ly]).unwrap()
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(-spread..spread), rng.random_range(-spread..spread)])
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        (x, y)
    }

    #[test]
    fn single_point_weight_is_scaled_target() {
        let hp = hp2(0.5, 2.0, 1.0, 1.0);
        let m = DenseGp::fit(&[vec![0.3, -0.4]], &[1.7], hp).unwrap();
        // alpha = y / (sf2 + sn2), up to the 1e-8-relative jitter
        assert!((m.alpha()[0] - 1.7 / 2.5).abs() < 1e-7);
    }

    #[test]
    fn symmetric_targets_give_equal_weights() {
        let hp = hp2(0.1, 1.0, 1.0, 1.0);
        let x = vec![vec![-1.0, 0.0], vec![1.0, 0.0]];
        let m = DenseGp::fit(&x, &[0.8, 0.8], hp).unwrap();
        assert!((m.alpha()[0] - m.alpha()[1]).abs() < 1e-12);
    }

    #[test]
    fn weights_reproduce_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hp = hp2(0.2, 1.5, 1.2, 0.8);
        let (x, y) = random_instance(&mut rng, 10, 4.0);
        let m = DenseGp::fit(&x, &y, hp.clone()).unwrap();
        // K alpha = y with K rebuilt including jitter
        let mut k = kernel_matrix(&x, &x, &hp, true).unwrap();
        for i in 0..10 {
            k[(i, i)] += hp.jitter();
        }
        let resid = &k * m.alpha() - DVector::from_column_slice(&y);
        assert!(resid.amax() < 1e-8);
    }

    #[test]
    fn empty_model_predicts_the_prior() {
        let hp = hp2(0.1, 1.3, 1.0, 1.0);
        let m = DenseGp::fit(&[], &[], hp.clone()).unwrap();
        let xs = vec![vec![0.0, 0.0], vec![2.0, 1.0]];
        let (mean, cov) = m.predict(&xs).unwrap();
        assert!(mean.amax() == 0.0);
        let prior = kernel_matrix(&xs, &xs, &hp, false).unwrap();
        assert!((cov - prior).abs().max() < 1e-14);
    }

    #[test]
    fn interpolates_training_point_as_noise_vanishes() {
        let hp = hp2(1e-10, 1.0, 1.0, 1.0);
        let x = vec![vec![0.0, 0.0], vec![2.0, 0.0]];
        let m = DenseGp::fit(&x, &[1.0, -0.5], hp).unwrap();
        let probe = vec![x[0].clone()];
        let (mean, cov) = m.predict(&probe).unwrap();
        assert!((mean[0] - 1.0).abs() < 1e-6);
        assert!(cov[(0, 0)] < 1e-6);
    }

    #[test]
    fn single_point_prediction_matches_hand_algebra() {
        let (sn2, sf2) = (0.5, 2.0);
        let hp = hp2(sn2, sf2, 1.0, 1.0);
        let x = vec![vec![1.0, 1.0]];
        let y0 = -0.9;
        let m = DenseGp::fit(&x, &[y0], hp).unwrap();
        let (mean, _) = m.predict(&x).unwrap();
        assert!((mean[0] - sf2 * y0 / (sf2 + sn2)).abs() < 1e-7);
    }

    #[test]
    fn posterior_variance_never_exceeds_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hp = hp2(0.05, 1.8, 1.5, 1.5);
        let (x, y) = random_instance(&mut rng, 12, 5.0);
        let m = DenseGp::fit(&x, &y, hp.clone()).unwrap();
        let xs: Vec<Vec<f64>> = (0..30)
            .map(|_| vec![rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)])
            .collect();
        let (_, cov) = m.predict(&xs).unwrap();
        for (i, p) in xs.iter().enumerate() {
            let prior = kernel_eval(p, p, &hp, false).unwrap();
            assert!(cov[(i, i)] <= prior + 1e-9);
            assert!(cov[(i, i)] >= 0.0);
        }
    }

    #[test]
    fn loo_of_far_apart_points_reverts_to_prior() {
        let (sn2, sf2) = (0.3, 1.2);
        let hp = hp2(sn2, sf2, 1.0, 1.0);
        let x = vec![vec![0.0, 0.0], vec![100.0, 0.0], vec![0.0, 100.0], vec![100.0, 100.0]];
        let y = [0.4, -1.0, 0.7, 2.0];
        let m = DenseGp::fit(&x, &y, hp).unwrap();
        let stats = m.loo_stats().unwrap();
        for i in 0..4 {
            assert!(stats.loo_means[i].abs() < 1e-9);
            assert!((stats.loo_vars[i] - (sf2 + sn2)).abs() < 1e-6);
        }
    }

    /// Explicit refit-without-point-i oracle for the partitioned-inverse
    /// shortcut. The shortcut's variance is the held-out *observation*
    /// variance of the jittered model, hence the `sn2 + jitter` term.
    fn refit_oracle(x: &[Vec<f64>], y: &[f64], hp: &HyperParams, i: usize) -> (f64, f64) {
        let mut xr = x.to_vec();
        let mut yr = y.to_vec();
        xr.remove(i);
        yr.remove(i);
        let m = DenseGp::fit(&xr, &yr, hp.clone()).unwrap();
        let (mean, cov) = m.predict(std::slice::from_ref(&x[i])).unwrap();
        (mean[0], cov[(0, 0)] + hp.noise_var() + hp.jitter())
    }

    #[test]
    fn loo_stats_match_explicit_refits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let hp = hp2(0.2, 1.5, 1.3, 0.9);
        let (x, y) = random_instance(&mut rng, 3, 3.0);
        let m = DenseGp::fit(&x, &y, hp.clone()).unwrap();
        let stats = m.loo_stats().unwrap();
        for i in 0..3 {
            let (mean, var) = refit_oracle(&x, &y, &hp, i);
            assert!((stats.loo_means[i] - mean).abs() < 1e-8);
            assert!((stats.loo_vars[i] - var).abs() < 1e-8);
        }
    }

    #[test]
    fn symmetric_pair_has_equal_loo_stats() {
        let hp = hp2(0.2, 1.0, 1.0, 1.0);
        let x = vec![vec![-1.5, 0.0], vec![1.5, 0.0], vec![0.0, 3.0]];
        let y = [0.7, 0.7, -0.2];
        let m = DenseGp::fit(&x, &y, hp).unwrap();
        let stats = m.loo_stats().unwrap();
        assert!((stats.loo_means[0] - stats.loo_means[1]).abs() < 1e-10);
        assert!((stats.loo_vars[0] - stats.loo_vars[1]).abs() < 1e-10);
    }

    #[test]
    fn loo_log_likelihood_closed_form_on_diagonal_case() {
        let (sn2, sf2) = (0.4, 1.1);
        let hp = hp2(sn2, sf2, 1.0, 1.0);
        let x = vec![vec![0.0, 0.0], vec![200.0, 0.0], vec![0.0, 200.0]];
        let y = [0.0, 0.0, 0.0];
        let m = DenseGp::fit(&x, &y, hp).unwrap();
        let ll = m.loo_log_likelihood().unwrap();
        let v = sf2 + sn2;
        let expected = 3.0 * (-0.5 * v.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln());
        assert!((ll - expected).abs() < 1e-6);
    }

    #[test]
    fn scaling_targets_up_decreases_the_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let hp = hp2(0.3, 1.0, 1.0, 1.0);
        let (x, y) = random_instance(&mut rng, 6, 3.0);
        let base = DenseGp::fit(&x, &y, hp.clone()).unwrap().loo_log_likelihood().unwrap();
        let y_big: Vec<f64> = y.iter().map(|v| v * 10.0).collect();
        let big = DenseGp::fit(&x, &y_big, hp).unwrap().loo_log_likelihood().unwrap();
        assert!(big < base);
    }

    #[test]
    fn loo_log_likelihood_equals_refit_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let hp = hp2(0.25, 1.4, 1.1, 1.6);
        let (x, y) = random_instance(&mut rng, 5, 3.0);
        let m = DenseGp::fit(&x, &y, hp.clone()).unwrap();
        let ll = m.loo_log_likelihood().unwrap();
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        let mut expected = 0.0;
        for i in 0..5 {
            let (mean, var) = refit_oracle(&x, &y, &hp, i);
            let r = y[i] - mean;
            expected += -0.5 * var.ln() - r * r / (2.0 * var) - 0.5 * ln_2pi;
        }
        assert!((ll - expected).abs() < 1e-8);
    }

    fn fd_loo_gradient(x: &[Vec<f64>], y: &[f64], hp: &HyperParams, h: f64) -> DVector<f64> {
        let log_hp = hp.to_log_vector();
        let mut g = DVector::zeros(hp.param_count());
        for j in 0..hp.param_count() {
            let mut lo = log_hp.clone();
            let mut hi = log_hp.clone();
            lo[j] -= h;
            hi[j] += h;
            let l_lo = objective(x, y, &HyperParams::from_log_vector(&lo).unwrap()).unwrap();
            let l_hi = objective(x, y, &HyperParams::from_log_vector(&hi).unwrap()).unwrap();
            g[j] = (l_hi - l_lo) / (2.0 * h);
        }
        g
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let hp = hp2(
                rng.random_range(0.1..0.4),
                rng.random_range(0.8..2.0),
                rng.random_range(0.8..2.0),
                rng.random_range(0.8..2.0),
            );
            let (x, y) = random_instance(&mut rng, 8, 3.0);
            let m = DenseGp::fit(&x, &y, hp.clone()).unwrap();
            let g = m.loo_gradient().unwrap();
            let fd = fd_loo_gradient(&x, &y, &hp, 1e-6);
            for j in 0..hp.param_count() {
                let denom = fd[j].abs().max(1e-8);
                assert!(
                    ((g[j] - fd[j]).abs() / denom) < 1e-4,
                    "param {j}: analytic {} vs fd {}",
                    g[j],
                    fd[j]
                );
            }
        }
    }

    #[test]
    fn gradient_is_reflection_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let hp = hp2(0.2, 1.2, 1.0, 1.4);
        let (x, y) = random_instance(&mut rng, 6, 3.0);
        let mirrored: Vec<Vec<f64>> = x.iter().map(|p| vec![-p[0], -p[1]]).collect();
        let g = DenseGp::fit(&x, &y, hp.clone()).unwrap().loo_gradient().unwrap();
        let gm = DenseGp::fit(&mirrored, &y, hp).unwrap().loo_gradient().unwrap();
        assert!((g - gm).amax() < 1e-10);
    }

    /// Smooth noisy training sets drawn from a long-range two-bump surface;
    /// the hand-set start `{e^-2, e^2, e, e}` undershoots their
    /// length-scales. Noise keeps the LOO optimum interior.
    fn smooth_training_set(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let field = crate::field::synth_field(&crate::field::SynthFieldParams {
            seed: 99,
            width: 40,
            height: 40,
            bump_count: 2,
            amplitude_range: (2.0, 3.0),
            length_scale_range: (12.0, 16.0),
        })
        .unwrap();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let cx = rng.random_range(0..40usize);
            let cy = rng.random_range(0..40usize);
            x.push(vec![cx as f64, cy as f64]);
            let noise = 0.05 * rng.random_range(-1.0..1.0);
            y.push(field.value(crate::field::Cell::new(cx, cy)).unwrap() + noise);
        }
        (x, y)
    }

    #[test]
    fn optimizer_grows_length_scales_on_smooth_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (x, y) = smooth_training_set(&mut rng, 40);
        let hp0 = HyperParams::from_log(-2.0, 2.0, vec![1.0, 1.0]).unwrap();
        let out = optimize_hyperparams(&x, &y, hp0, &OptimizerSettings::default()).unwrap();
        assert!(out.hp.log_length_scales()[0] > 1.0);
        assert!(out.hp.log_length_scales()[1] > 1.0);
    }

    #[test]
    fn optimizer_objective_trace_is_non_decreasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (x, y) = smooth_training_set(&mut rng, 30);
        let hp0 = hp2(0.3, 1.0, 2.0, 2.0);
        let out = optimize_hyperparams(&x, &y, hp0.clone(), &OptimizerSettings::default()).unwrap();
        for w in out.objective_trace.windows(2) {
            assert!(w[1] >= w[0]);
        }
        let initial = objective(&x, &y, &hp0).unwrap();
        assert!(out.objective >= initial);
    }

    #[test]
    fn optimizer_is_stationary_at_a_converged_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (x, y) = smooth_training_set(&mut rng, 25);
        let settings = OptimizerSettings {
            max_iters: 400,
            ..OptimizerSettings::default()
        };
        // Restart until a fresh run makes no meaningful progress; the cap
        // proves a stationary point is actually reachable on this data.
        let mut hp = hp2(0.3, 1.5, 3.0, 3.0);
        let mut obj = objective(&x, &y, &hp).unwrap();
        let mut stationary = false;
        for _ in 0..50 {
            let out = optimize_hyperparams(&x, &y, hp.clone(), &settings).unwrap();
            if out.objective - obj <= settings.tol {
                stationary = true;
                break;
            }
            hp = out.hp;
            obj = out.objective;
        }
        assert!(stationary, "no stationary point reached within 50 restarts");
        // A stationary start is returned essentially unchanged.
        let again = optimize_hyperparams(&x, &y, hp, &settings).unwrap();
        assert!((again.objective - obj).abs() <= 10.0 * settings.tol);
    }
}
