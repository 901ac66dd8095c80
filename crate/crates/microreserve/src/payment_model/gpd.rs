//! Generalized Pareto exceedance law and its maximum-likelihood fit.
//!
//! Parametrized by scale `iota > 0` and shape `phi`, on exceedances
//! `x >= 0` over a threshold:
//!
//! ```text
//! F(x) = 1 - (1 + phi x / iota)^(-1/phi)    phi != 0
//! F(x) = 1 - exp(-x / iota)                 phi  = 0
//! ```
//!
//! The mean `iota / (1 - phi)` exists for `phi < 1`; fitted shapes are
//! constrained to (-0.5, 0.95) so every spliced component keeps a finite
//! mean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::mean;

pub const SHAPE_MIN: f64 = -0.499;
pub const SHAPE_MAX: f64 = 0.95;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Gpd {
    pub scale: f64,
    pub shape: f64,
}

impl Gpd {
    pub fn new(scale: f64, shape: f64) -> Result<Gpd> {
        if !scale.is_finite() || scale <= 0.0 || !shape.is_finite() {
            return Err(Error::Validation(format!(
                "invalid GPD parameters scale={scale}, shape={shape}"
            )));
        }
        Ok(Gpd { scale, shape })
    }

    /// Density of the exceedance at `x >= 0`.
    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if self.shape.abs() < 1e-12 {
            (-x / self.scale).exp() / self.scale
        } else {
            let t = 1.0 + self.shape * x / self.scale;
            if t <= 0.0 {
                0.0
            } else {
                t.powf(-1.0 / self.shape - 1.0) / self.scale
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if self.shape.abs() < 1e-12 {
            1.0 - (-x / self.scale).exp()
        } else {
            let t = 1.0 + self.shape * x / self.scale;
            if t <= 0.0 {
                1.0
            } else {
                1.0 - t.powf(-1.0 / self.shape)
            }
        }
    }

    /// Inverse CDF on (0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0 - 1e-16);
        if self.shape.abs() < 1e-12 {
            -self.scale * (1.0 - u).ln()
        } else {
            self.scale / self.shape * ((1.0 - u).powf(-self.shape) - 1.0)
        }
    }

    /// Mean exceedance; requires `shape < 1`.
    pub fn mean(&self) -> f64 {
        self.scale / (1.0 - self.shape)
    }

    pub fn log_likelihood(&self, excesses: &[f64]) -> f64 {
        excesses.iter().map(|&x| self.pdf(x).max(1e-300).ln()).sum()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpdFit {
    pub gpd: Gpd,
    pub n_excesses: usize,
    /// Exponential fallback was used (sample too small or degenerate).
    pub exponential_fallback: bool,
    /// The shape hit the upper cap; the component mean substitutes the
    /// empirical tail mean.
    pub shape_capped: bool,
    /// Empirical mean of the excess sample.
    pub empirical_mean: f64,
}

impl GpdFit {
    /// The mean used downstream (empirical when the shape was capped).
    pub fn component_mean_excess(&self) -> f64 {
        if self.shape_capped {
            self.empirical_mean
        } else {
            self.gpd.mean()
        }
    }
}

/// Profile log-likelihood at `eta = shape/scale`; the inner maximum over
/// scale is closed-form.
fn profile_ll(excesses: &[f64], eta: f64) -> f64 {
    let n = excesses.len() as f64;
    if eta == 0.0 {
        let m = mean(excesses);
        return -n * (m.ln() + 1.0);
    }
    let mut log_sum = 0.0;
    for &x in excesses {
        let t = 1.0 + eta * x;
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        log_sum += t.ln();
    }
    let shape = log_sum / n;
    if shape == 0.0 {
        return f64::NEG_INFINITY;
    }
    let scale = shape / eta;
    if scale <= 0.0 {
        return f64::NEG_INFINITY;
    }
    -n * (scale.ln() + shape + 1.0)
}

/// Maximum-likelihood fit of the GPD to nonnegative excesses via the 1-D
/// profile likelihood: a bounded grid over `eta = shape/scale`, then
/// golden-section refinement between the best grid neighbors. Samples
/// below 30 points (or degenerate ones) fall back to the exponential with
/// a flag; shapes at the cap flag the empirical-mean substitution.
pub fn fit_gpd(excesses: &[f64]) -> Result<GpdFit> {
    if excesses.is_empty() {
        return Err(Error::Fit("no excesses to fit".to_string()));
    }
    if excesses.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::Validation("excesses must be nonnegative and finite".to_string()));
    }
    let m = mean(excesses);
    if m <= 0.0 {
        return Err(Error::Fit("all excesses are zero".to_string()));
    }
    let max_x = excesses.iter().cloned().fold(0.0f64, f64::max);
    let spread = crate::stats::variance(excesses);
    let degenerate = !spread.is_finite() || spread <= 1e-12 * m * m;

    if excesses.len() < 30 || degenerate {
        return Ok(GpdFit {
            gpd: Gpd::new(m, 0.0)?,
            n_excesses: excesses.len(),
            exponential_fallback: true,
            shape_capped: false,
            empirical_mean: m,
        });
    }

    // Grid over eta: negative side bounded by the support constraint,
    // positive side spans shapes well past the cap.
    let mut candidates: Vec<f64> = vec![0.0];
    let eta_neg_lim = -0.999 / max_x;
    for i in 1..=40 {
        candidates.push(eta_neg_lim * i as f64 / 41.0);
    }
    for i in 0..=80 {
        candidates.push(10f64.powf(-4.0 + 6.0 * i as f64 / 80.0) / m);
    }
    candidates.sort_by(|a, b| a.total_cmp(b));

    let mut best_idx = 0;
    let mut best_ll = f64::NEG_INFINITY;
    for (i, &eta) in candidates.iter().enumerate() {
        let ll = profile_ll(excesses, eta);
        if ll > best_ll {
            best_ll = ll;
            best_idx = i;
        }
    }
    // Golden-section refinement between the neighbors of the best point.
    let mut lo = candidates[best_idx.saturating_sub(1)];
    let mut hi = candidates[(best_idx + 1).min(candidates.len() - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let a = hi - inv_phi * (hi - lo);
        let b = lo + inv_phi * (hi - lo);
        if profile_ll(excesses, a) < profile_ll(excesses, b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    let eta = 0.5 * (lo + hi);
    let (mut scale, mut shape) = if eta == 0.0 {
        (m, 0.0)
    } else {
        let s = mean(&excesses.iter().map(|&x| (1.0 + eta * x).ln()).collect::<Vec<_>>());
        (s / eta, s)
    };

    let mut shape_capped = false;
    if shape >= SHAPE_MAX {
        shape = SHAPE_MAX;
        shape_capped = true;
        // Re-profile the scale at the capped shape.
        scale = refit_scale_at_shape(excesses, shape);
    } else if shape <= SHAPE_MIN {
        shape = SHAPE_MIN;
        scale = refit_scale_at_shape(excesses, shape);
    }

    Ok(GpdFit {
        gpd: Gpd::new(scale.max(1e-12), shape)?,
        n_excesses: excesses.len(),
        exponential_fallback: false,
        shape_capped,
        empirical_mean: m,
    })
}

/// 1-D likelihood maximization over the scale at a fixed shape.
fn refit_scale_at_shape(excesses: &[f64], shape: f64) -> f64 {
    let m = mean(excesses);
    let max_x = excesses.iter().cloned().fold(0.0f64, f64::max);
    let ll = |scale: f64| Gpd { scale, shape }.log_likelihood(excesses);
    let mut lo = if shape < 0.0 { max_x * (-shape) * 1.0001 } else { m * 1e-3 };
    let mut hi = m * 1e3;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let a = hi - inv_phi * (hi - lo);
        let b = lo + inv_phi * (hi - lo);
        if ll(a) < ll(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    0.5 * (lo + hi)
}
