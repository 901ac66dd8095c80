//! Truncated normal body components.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::stats::{mean as sample_mean, variance};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TruncatedNormal {
    pub mu: f64,
    pub sigma: f64,
    /// Support `[lo, hi)`.
    pub lo: f64,
    pub hi: f64,
}

impl TruncatedNormal {
    pub fn new(mu: f64, sigma: f64, lo: f64, hi: f64) -> Result<TruncatedNormal> {
        if !sigma.is_finite() || sigma <= 0.0 || lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) || !mu.is_finite() {
            return Err(Error::Validation(format!(
                "invalid truncated normal mu={mu} sigma={sigma} on [{lo},{hi})"
            )));
        }
        Ok(TruncatedNormal { mu, sigma, lo, hi })
    }

    fn standard() -> Normal {
        Normal::new(0.0, 1.0).expect("standard normal")
    }

    /// Probability mass of the untruncated normal on the support.
    fn z(&self) -> f64 {
        let n = Self::standard();
        let alpha = (self.lo - self.mu) / self.sigma;
        let beta = (self.hi - self.mu) / self.sigma;
        (n.cdf(beta) - n.cdf(alpha)).max(1e-300)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.lo || x >= self.hi {
            return 0.0;
        }
        let n = Self::standard();
        n.pdf((x - self.mu) / self.sigma) / (self.sigma * self.z())
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let n = Self::standard();
        let alpha = (self.lo - self.mu) / self.sigma;
        (n.cdf((x - self.mu) / self.sigma) - n.cdf(alpha)) / self.z()
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let n = Self::standard();
        let alpha = (self.lo - self.mu) / self.sigma;
        let p = n.cdf(alpha) + u.clamp(0.0, 1.0) * self.z();
        let x = self.mu + self.sigma * n.inverse_cdf(p.clamp(1e-300, 1.0 - 1e-16));
        x.clamp(self.lo, self.hi - (self.hi - self.lo) * 1e-12)
    }

    /// Mean of the truncated distribution:
    /// `mu + sigma (phi(alpha) - phi(beta)) / Z`, clamped into the support
    /// (where it lies mathematically; the clamp guards `Z` underflow).
    pub fn mean(&self) -> f64 {
        let n = Self::standard();
        let alpha = (self.lo - self.mu) / self.sigma;
        let beta = (self.hi - self.mu) / self.sigma;
        let raw = self.mu + self.sigma * (n.pdf(alpha) - n.pdf(beta)) / self.z();
        if raw.is_finite() {
            raw.clamp(self.lo, self.hi)
        } else {
            0.5 * (self.lo + self.hi)
        }
    }

    fn neg_log_likelihood(&self, sample: &[f64]) -> f64 {
        sample.iter().map(|&x| -self.pdf(x).max(1e-300).ln()).sum()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncatedNormalFit {
    pub dist: TruncatedNormal,
    pub n: usize,
    /// Too few points for the MLE; the empirical bin mean is used.
    pub empirical_fallback: bool,
    pub empirical_mean: f64,
}

impl TruncatedNormalFit {
    pub fn component_mean(&self) -> f64 {
        if self.empirical_fallback {
            self.empirical_mean
        } else {
            self.dist.mean()
        }
    }
}

/// Maximum-likelihood fit of a truncated normal on `[lo, hi)` via
/// Nelder-Mead over `(mu, log sigma)`. Bins with fewer than 30 points keep
/// moment-matched parameters and flag the empirical-mean substitution.
pub fn fit_truncated_normal(sample: &[f64], lo: f64, hi: f64) -> Result<TruncatedNormalFit> {
    if sample.is_empty() {
        return Err(Error::Fit("empty truncated-normal sample".to_string()));
    }
    if sample.iter().any(|&x| x < lo || x >= hi) {
        return Err(Error::Validation("sample leaves the truncation interval".to_string()));
    }
    let m = sample_mean(sample);
    let sd = variance(sample).sqrt();
    let width = hi - lo;
    let sigma0 = if sd.is_finite() && sd > 1e-3 * width { sd } else { width / 4.0 };

    if sample.len() < 30 {
        return Ok(TruncatedNormalFit {
            dist: TruncatedNormal::new(m, sigma0, lo, hi)?,
            n: sample.len(),
            empirical_fallback: true,
            empirical_mean: m,
        });
    }

    // Bound the search box: a location far outside the bin with a tiny
    // scale sends the clamped normalization towards an unbounded
    // likelihood on tied samples.
    let objective = |p: &[f64; 2]| -> f64 {
        let mu = p[0];
        let sigma = p[1].exp();
        if !mu.is_finite()
            || !sigma.is_finite()
            || !(lo - 2.0 * width..=hi + 2.0 * width).contains(&mu)
            || !(1e-4 * width..=50.0 * width).contains(&sigma)
        {
            return f64::INFINITY;
        }
        match TruncatedNormal::new(mu, sigma, lo, hi) {
            Ok(d) => d.neg_log_likelihood(sample),
            Err(_) => f64::INFINITY,
        }
    };
    let best = nelder_mead_2d(objective, [m, sigma0.ln()], [width * 0.1, 0.5]);
    let dist = TruncatedNormal::new(best[0], best[1].exp(), lo, hi)?;
    Ok(TruncatedNormalFit {
        dist,
        n: sample.len(),
        empirical_fallback: false,
        empirical_mean: m,
    })
}

/// Minimal Nelder-Mead in two dimensions.
fn nelder_mead_2d(f: impl Fn(&[f64; 2]) -> f64, start: [f64; 2], step: [f64; 2]) -> [f64; 2] {
    let mut simplex = [
        start,
        [start[0] + step[0], start[1]],
        [start[0], start[1] + step[1]],
    ];
    let mut values = simplex.map(|p| f(&p));
    for _ in 0..400 {
        // Sort simplex by objective.
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = [simplex[order[0]], simplex[order[1]], simplex[order[2]]];
        values = [values[order[0]], values[order[1]], values[order[2]]];

        let spread = (values[2] - values[0]).abs();
        if spread < 1e-10 * (1.0 + values[0].abs()) {
            break;
        }
        let centroid =
            [(simplex[0][0] + simplex[1][0]) / 2.0, (simplex[0][1] + simplex[1][1]) / 2.0];
        let reflect = |t: f64| {
            [
                centroid[0] + t * (centroid[0] - simplex[2][0]),
                centroid[1] + t * (centroid[1] - simplex[2][1]),
            ]
        };

        let xr = reflect(1.0);
        let fr = f(&xr);
        if fr < values[0] {
            let xe = reflect(2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[2] = xe;
                values[2] = fe;
            } else {
                simplex[2] = xr;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = xr;
            values[2] = fr;
        } else {
            let xc = reflect(-0.5);
            let fc = f(&xc);
            if fc < values[2] {
                simplex[2] = xc;
                values[2] = fc;
            } else {
                // Shrink toward the best vertex.
                for i in 1..3 {
                    simplex[i] = [
                        simplex[0][0] + 0.5 * (simplex[i][0] - simplex[0][0]),
                        simplex[0][1] + 0.5 * (simplex[i][1] - simplex[0][1]),
                    ];
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..3 {
        if values[i] < values[best] {
            best = i;
        }
    }
    simplex[best]
}
