//! Squared-exponential ARD covariance and its hyperparameter derivatives.
//!
//! `k(x, x') = sf2 * exp(-0.5 * sum_d ((x_d - x'_d) / l_d)^2) + sn2 * delta(x, x')`
//!
//! The Kronecker delta fires on exact coordinate equality, not index equality,
//! so duplicated positions pick up the noise term wherever they appear.
//! Hyperparameters are stored and optimized in log-space; positivity is free.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Index of `log sn2` in gradient vectors.
pub const HP_NOISE: usize = 0;
/// Index of `log sf2` in gradient vectors.
pub const HP_SIGNAL: usize = 1;
/// Index of the first `log l_d`; dimension `d` lives at `HP_LENGTH0 + d`.
pub const HP_LENGTH0: usize = 2;

/// Relative diagonal jitter applied before any factorization.
pub const JITTER_REL: f64 = 1e-8;

/// Kernel hyperparameters kept in log-space.
///
/// Files and user-facing output use the natural-space mirror
/// [`NaturalHyperParams`] (`sn2`, `sf2`, per-dimension length-scales).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NaturalHyperParams", into = "NaturalHyperParams")]
pub struct HyperParams {
    log_noise_var: f64,
    log_signal_var: f64,
    log_length_scales: Vec<f64>,
}

/// Natural-space view of [`HyperParams`] used for serialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NaturalHyperParams {
    pub noise_var: f64,
    pub signal_var: f64,
    pub length_scales: Vec<f64>,
}

impl HyperParams {
    pub fn from_natural(noise_var: f64, signal_var: f64, length_scales: &[f64]) -> Result<Self> {
        if length_scales.is_empty() {
            return Err(CoreError::InvalidInput("need at least one length-scale".into()));
        }
        for (name, v) in [("noise_var", noise_var), ("signal_var", signal_var)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CoreError::InvalidInput(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if length_scales.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(CoreError::InvalidInput("length_scales must be finite and > 0".into()));
        }
        Ok(Self {
            log_noise_var: noise_var.ln(),
            log_signal_var: signal_var.ln(),
            log_length_scales: length_scales.iter().map(|l| l.ln()).collect(),
        })
    }

    pub fn from_log(log_noise_var: f64, log_signal_var: f64, log_length_scales: Vec<f64>) -> Result<Self> {
        if log_length_scales.is_empty() {
            return Err(CoreError::InvalidInput("need at least one length-scale".into()));
        }
        let all = [log_noise_var, log_signal_var]
            .into_iter()
            .chain(log_length_scales.iter().copied());
        for v in all {
            if !v.is_finite() {
                return Err(CoreError::InvalidInput(format!("log hyperparameter must be finite, got {v}")));
            }
        }
        Ok(Self {
            log_noise_var,
            log_signal_var,
            log_length_scales,
        })
    }

    /// Input dimension this kernel expects.
    pub fn dim(&self) -> usize {
        self.log_length_scales.len()
    }

    /// Number of hyperparameters: noise, signal, one length-scale per dimension.
    pub fn param_count(&self) -> usize {
        2 + self.log_length_scales.len()
    }

    pub fn noise_var(&self) -> f64 {
        self.log_noise_var.exp()
    }

    pub fn signal_var(&self) -> f64 {
        self.log_signal_var.exp()
    }

    pub fn length_scales(&self) -> Vec<f64> {
        self.log_length_scales.iter().map(|l| l.exp()).collect()
    }

    pub fn log_noise_var(&self) -> f64 {
        self.log_noise_var
    }

    pub fn log_signal_var(&self) -> f64 {
        self.log_signal_var
    }

    pub fn log_length_scales(&self) -> &[f64] {
        &self.log_length_scales
    }

    /// Log parameters as a vector ordered `[log sn2, log sf2, log l_0, ...]`.
    pub fn to_log_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.param_count());
        v[HP_NOISE] = self.log_noise_var;
        v[HP_SIGNAL] = self.log_signal_var;
        for (d, l) in self.log_length_scales.iter().enumerate() {
            v[HP_LENGTH0 + d] = *l;
        }
        v
    }

    pub fn from_log_vector(v: &DVector<f64>) -> Result<Self> {
        if v.len() < 3 {
            return Err(CoreError::DimensionMismatch(format!(
                "log vector needs >= 3 entries, got {}",
                v.len()
            )));
        }
        Self::from_log(v[HP_NOISE], v[HP_SIGNAL], v.iter().skip(HP_LENGTH0).copied().collect())
    }

    /// Diagonal jitter scaled to the signal variance.
    pub fn jitter(&self) -> f64 {
        JITTER_REL * self.signal_var()
    }
}

impl TryFrom<NaturalHyperParams> for HyperParams {
    type Error = CoreError;

    fn try_from(n: NaturalHyperParams) -> Result<Self> {
        HyperParams::from_natural(n.noise_var, n.signal_var, &n.length_scales)
    }
}

impl From<HyperParams> for NaturalHyperParams {
    fn from(hp: HyperParams) -> Self {
        NaturalHyperParams {
            noise_var: hp.noise_var(),
            signal_var: hp.signal_var(),
            length_scales: hp.length_scales(),
        }
    }
}

fn points_equal(x: &[f64], y: &[f64]) -> bool {
    x.len() == y.len() && x.iter().zip(y).all(|(a, b)| a == b)
}

fn check_dim(x: &[f64], hp: &HyperParams) -> Result<()> {
    if x.len() != hp.dim() {
        return Err(CoreError::DimensionMismatch(format!(
            "point has {} coordinates, kernel expects {}",
            x.len(),
            hp.dim()
        )));
    }
    Ok(())
}

fn eval_unchecked(x: &[f64], y: &[f64], hp: &HyperParams, include_noise: bool) -> f64 {
    let mut quad = 0.0;
    for (d, (a, b)) in x.iter().zip(y).enumerate() {
        let z = (a - b) * (-hp.log_length_scales[d]).exp();
        quad += z * z;
    }
    let mut k = hp.signal_var() * (-0.5 * quad).exp();
    if include_noise && points_equal(x, y) {
        k += hp.noise_var();
    }
    k
}

/// Covariance between two points; the noise term applies only when
/// `include_noise` is set and the points are coordinate-identical.
pub fn kernel_eval(x: &[f64], y: &[f64], hp: &HyperParams, include_noise: bool) -> Result<f64> {
    check_dim(x, hp)?;
    check_dim(y, hp)?;
    Ok(eval_unchecked(x, y, hp, include_noise))
}

/// `|a| x |b|` covariance matrix, entry `(i, j) = k(a_i, b_j)`.
pub fn kernel_matrix(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    hp: &HyperParams,
    include_noise: bool,
) -> Result<DMatrix<f64>> {
    if a.is_empty() || b.is_empty() {
        return Err(CoreError::InvalidInput("kernel_matrix needs nonempty point lists".into()));
    }
    for p in a.iter().chain(b.iter()) {
        check_dim(p, hp)?;
    }
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| {
        eval_unchecked(&a[i], &b[j], hp, include_noise)
    }))
}

/// Entry-wise derivative of the noisy kernel matrix over `a` with respect to
/// the j-th log hyperparameter:
///
/// * `log sn2`: `sn2` on coordinate-identical pairs, zero elsewhere;
/// * `log sf2`: the noise-free kernel matrix itself;
/// * `log l_d`: noise-free kernel scaled by `(dx_d / l_d)^2`.
pub fn kernel_matrix_grad(a: &[Vec<f64>], hp: &HyperParams, j: usize) -> Result<DMatrix<f64>> {
    if a.is_empty() {
        return Err(CoreError::InvalidInput("kernel_matrix_grad needs a nonempty point list".into()));
    }
    for p in a {
        check_dim(p, hp)?;
    }
    if j >= hp.param_count() {
        return Err(CoreError::InvalidInput(format!(
            "hyperparameter index {j} out of range (have {})",
            hp.param_count()
        )));
    }
    let n = a.len();
    let m = match j {
        HP_NOISE => {
            let sn2 = hp.noise_var();
            DMatrix::from_fn(n, n, |i, k| if points_equal(&a[i], &a[k]) { sn2 } else { 0.0 })
        }
        HP_SIGNAL => DMatrix::from_fn(n, n, |i, k| eval_unchecked(&a[i], &a[k], hp, false)),
        _ => {
            let d = j - HP_LENGTH0;
            let inv_l = (-hp.log_length_scales[d]).exp();
            DMatrix::from_fn(n, n, |i, k| {
                let diff = (a[i][d] - a[k][d]) * inv_l;
                eval_unchecked(&a[i], &a[k], hp, false) * diff * diff
            })
        }
    };
    Ok(m)
}
