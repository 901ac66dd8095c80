//! Deterministic chain ladder and the England–Verrall bootstrap.
//!
//! The chain ladder projects a cumulative triangle with volume-weighted
//! development factors. Uncertainty for count triangles comes from
//! resampling unscaled Pearson residuals under an over-dispersed Poisson
//! model, reprojecting each pseudo-triangle, and adding a process-variance
//! draw for every future cell.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::quantile_type7;
use crate::triangle::RunoffTriangle;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClProjection {
    /// Volume-weighted development factors `f_j` for dev `j-1 -> j`.
    pub development_factors: Vec<f64>,
    /// Fully projected cumulative triangle (every row has J columns).
    pub completed: Vec<Vec<f64>>,
    /// Per-accident-year projected IBNR / reserve (ultimate - latest).
    pub ibnr_by_year: Vec<f64>,
    pub total_ibnr: f64,
}

/// Chain-ladder projection of a count triangle.
pub fn cl_project(triangle: &RunoffTriangle) -> Result<ClProjection> {
    let cumulative = triangle.cumulative();
    let i_years = triangle.accident_years;
    let j_years = triangle.development_years;

    let mut factors = Vec::with_capacity(j_years.saturating_sub(1));
    for j in 1..j_years {
        let mut num = 0.0;
        let mut den = 0.0;
        for row in &cumulative {
            if row.len() > j {
                num += row[j];
                den += row[j - 1];
            }
        }
        if den <= 0.0 {
            return Err(Error::Computation(format!(
                "development factor to column {j} has nonpositive denominator"
            )));
        }
        factors.push(num / den);
    }

    let mut completed = Vec::with_capacity(i_years);
    let mut ibnr_by_year = Vec::with_capacity(i_years);
    let mut total = 0.0;
    for row in &cumulative {
        let mut filled = row.clone();
        for j in row.len()..j_years {
            let next = filled[j - 1] * factors[j - 1];
            filled.push(next);
        }
        let latest = row.last().copied().unwrap_or(0.0);
        let ibnr = filled[j_years - 1] - latest;
        total += ibnr;
        ibnr_by_year.push(ibnr);
        completed.push(filled);
    }

    Ok(ClProjection { development_factors: factors, completed, ibnr_by_year, total_ibnr: total })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OdpBootstrap {
    /// Bootstrap totals of future counts, one per resample.
    pub totals: Vec<f64>,
    /// Estimated over-dispersion scale.
    pub scale: f64,
    pub mean: f64,
}

impl OdpBootstrap {
    pub fn quantile(&self, p: f64) -> f64 {
        let mut sorted = self.totals.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        quantile_type7(&sorted, p)
    }
}

/// England–Verrall over-dispersed Poisson bootstrap of the total IBNR
/// count.
///
/// Residuals are unscaled Pearson residuals with the small-sample
/// correction `sqrt(n / (n - p))`; each resample reprojects the pseudo
/// triangle and draws process noise `scale * Poisson(m / scale)` per
/// future cell. Resamples run in parallel on per-resample substreams of
/// `seed`, so results do not depend on the worker count.
pub fn odp_bootstrap(
    triangle: &RunoffTriangle,
    n_boot: usize,
    seed: u64,
) -> Result<OdpBootstrap> {
    if n_boot == 0 {
        return Err(Error::Validation("n_boot must be positive".to_string()));
    }
    let base = cl_project(triangle)?;
    let fitted_incremental = backfitted_incrementals(triangle, &base)?;

    let i_years = triangle.accident_years;
    let j_years = triangle.development_years;

    // Unscaled Pearson residuals on observed cells. Structural zeros
    // (zero fitted mean and zero count) carry no information and are
    // skipped; a negative fitted mean, or a positive count against a zero
    // mean, is the standard failure mode of this bootstrap.
    let mut residuals = Vec::new();
    let mut n_cells = 0usize;
    let mut pearson_sq = 0.0;
    for (i, row) in triangle.cells.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let m = fitted_incremental[i][j];
            if m < -1e-9 || (m.abs() <= 1e-9 && obs > 0) {
                return Err(Error::Computation(format!(
                    "nonpositive fitted incremental at ({i},{j}); the bootstrap \
                     requires a positive fitted triangle"
                )));
            }
            if m.abs() <= 1e-9 {
                continue;
            }
            let r = (obs as f64 - m) / m.sqrt();
            residuals.push(r);
            pearson_sq += r * r;
            n_cells += 1;
        }
    }
    let n_params = i_years + j_years - 1;
    if n_cells <= n_params {
        return Err(Error::Validation(format!(
            "triangle has {n_cells} cells but the model needs more than {n_params}"
        )));
    }
    let dof = (n_cells - n_params) as f64;
    let scale = pearson_sq / dof;
    let adjust = (n_cells as f64 / dof).sqrt();
    let adjusted: Vec<f64> = residuals.iter().map(|r| r * adjust).collect();

    let totals: Vec<f64> = (0..n_boot)
        .into_par_iter()
        .map(|b| -> Result<f64> {
            let mut rng = crate::rng::substream(seed, "odp-bootstrap", &[b as u64]);
            // Pseudo incremental triangle from resampled residuals.
            let mut pseudo = Vec::with_capacity(i_years);
            for (i, row) in triangle.cells.iter().enumerate() {
                let mut prow = Vec::with_capacity(row.len());
                for &m in fitted_incremental[i].iter().take(row.len()) {
                    let r = adjusted[rng.random_range(0..adjusted.len())];
                    prow.push((m + r * m.sqrt()).max(0.0));
                }
                pseudo.push(prow);
            }
            // Reproject with chain ladder on the pseudo cumulative
            // triangle.
            let future = match project_future_incrementals(&pseudo, j_years) {
                Some(f) => f,
                None => {
                    // Degenerate pseudo triangle (zero column); fall back
                    // to the central projection for this resample.
                    future_incrementals_from(&base, triangle)
                }
            };
            let mut total = 0.0;
            for m in future {
                if scale > 1e-12 && m > 0.0 {
                    let pois = Poisson::new(m / scale).map_err(|e| {
                        Error::Computation(format!("poisson draw failed: {e}"))
                    })?;
                    total += scale * pois.sample(&mut rng);
                } else {
                    total += m.max(0.0);
                }
            }
            Ok(total)
        })
        .collect::<Result<_>>()?;
    let mean = crate::stats::mean(&totals);
    Ok(OdpBootstrap { totals, scale, mean })
}

/// Fitted incremental counts implied by the chain-ladder projection:
/// anchor at the observed diagonal and develop backwards.
fn backfitted_incrementals(
    triangle: &RunoffTriangle,
    projection: &ClProjection,
) -> Result<Vec<Vec<f64>>> {
    let factors = &projection.development_factors;
    let cumulative = triangle.cumulative();
    let mut fitted = Vec::with_capacity(cumulative.len());
    for row in &cumulative {
        let observed = row.len();
        let mut cum_fitted = vec![0.0; observed];
        cum_fitted[observed - 1] = row[observed - 1];
        for j in (0..observed - 1).rev() {
            let f = factors[j];
            if f <= 0.0 {
                return Err(Error::Computation(format!("development factor {j} nonpositive")));
            }
            cum_fitted[j] = cum_fitted[j + 1] / f;
        }
        let mut inc = Vec::with_capacity(observed);
        let mut prev = 0.0;
        for &c in &cum_fitted {
            inc.push(c - prev);
            prev = c;
        }
        fitted.push(inc);
    }
    Ok(fitted)
}

/// Chain-ladder future incremental means from a pseudo incremental
/// triangle; `None` when a development factor is undefined.
fn project_future_incrementals(pseudo: &[Vec<f64>], j_years: usize) -> Option<Vec<f64>> {
    let cumulative: Vec<Vec<f64>> = pseudo
        .iter()
        .map(|row| {
            row.iter()
                .scan(0.0, |acc, &v| {
                    *acc += v;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let mut factors = Vec::with_capacity(j_years - 1);
    for j in 1..j_years {
        let mut num = 0.0;
        let mut den = 0.0;
        for row in &cumulative {
            if row.len() > j {
                num += row[j];
                den += row[j - 1];
            }
        }
        if den <= 0.0 {
            return None;
        }
        factors.push(num / den);
    }
    let mut future = Vec::new();
    for row in &cumulative {
        let mut latest = *row.last()?;
        for j in row.len()..j_years {
            let next = latest * factors[j - 1];
            future.push(next - latest);
            latest = next;
        }
    }
    Some(future)
}

fn future_incrementals_from(projection: &ClProjection, triangle: &RunoffTriangle) -> Vec<f64> {
    let mut future = Vec::new();
    for (i, row) in projection.completed.iter().enumerate() {
        let observed = triangle.observed_devs(i);
        let mut prev = row[observed - 1];
        for &cum in &row[observed..] {
            future.push(cum - prev);
            prev = cum;
        }
    }
    future
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_by_two() -> RunoffTriangle {
        RunoffTriangle::new(2011, vec![vec![100, 20], vec![200]], 2).unwrap()
    }

    #[test]
    fn hand_computed_two_by_two() {
        let proj = cl_project(&two_by_two()).unwrap();
        assert_relative_eq!(proj.development_factors[0], 1.2);
        assert_relative_eq!(proj.completed[1][1], 240.0);
        assert_relative_eq!(proj.total_ibnr, 40.0);
    }

    #[test]
    fn fully_observed_triangle_has_zero_reserve() {
        let t = RunoffTriangle::new(2010, vec![vec![10, 5]], 1);
        assert!(t.is_err()); // row longer than J
        let t = RunoffTriangle::new(2010, vec![vec![10]], 1).unwrap();
        let proj = cl_project(&t).unwrap();
        assert_relative_eq!(proj.total_ibnr, 0.0);
    }

    #[test]
    fn recovers_generating_factors_of_multiplicative_triangle() {
        // Construct an exact multiplicative (cumulative) triangle and check
        // the factors come back exactly.
        let f = [1.5f64, 1.2, 1.05];
        let base = [1000.0f64, 2000.0, 1500.0, 800.0];
        let mut cells = Vec::new();
        for (i, &b) in base.iter().enumerate() {
            let observed = 4 - i;
            let mut cum = b;
            let mut cum_row = vec![cum];
            for &fj in f.iter().take(observed - 1) {
                cum *= fj;
                cum_row.push(cum);
            }
            let mut inc_row = Vec::new();
            let mut prev = 0.0;
            for c in cum_row {
                inc_row.push((c - prev).round() as u64);
                prev = c;
            }
            cells.push(inc_row);
        }
        let t = RunoffTriangle::new(2009, cells, 4).unwrap();
        let proj = cl_project(&t).unwrap();
        for (a, b) in proj.development_factors.iter().zip(&f) {
            assert_relative_eq!(a, b, epsilon = 1e-3);
        }
    }

    #[test]
    fn zero_residual_triangle_gives_degenerate_bootstrap() {
        // A perfectly multiplicative triangle has zero Pearson residuals,
        // so every bootstrap total equals the chain-ladder projection.
        let t = RunoffTriangle::new(
            2010,
            vec![vec![100, 50, 25], vec![100, 50], vec![100]],
            3,
        )
        .unwrap();
        let proj = cl_project(&t).unwrap();
        let boot = odp_bootstrap(&t, 200, 3).unwrap();
        for total in &boot.totals {
            assert_relative_eq!(*total, proj.total_ibnr, epsilon = 1e-9);
        }
    }

    #[test]
    fn bootstrap_mean_tracks_projection() {
        let t = RunoffTriangle::new(
            2006,
            vec![
                vec![310, 148, 62, 30],
                vec![290, 140, 58],
                vec![305, 150],
                vec![300],
            ],
            4,
        )
        .unwrap();
        let proj = cl_project(&t).unwrap();
        let boot = odp_bootstrap(&t, 10_000, 9).unwrap();
        let se = (crate::stats::variance(&boot.totals) / boot.totals.len() as f64).sqrt();
        assert!(
            (boot.mean - proj.total_ibnr).abs() <= 3.0 * se + 1e-9,
            "bootstrap mean {} vs projection {} (se {se})",
            boot.mean,
            proj.total_ibnr
        );
    }

    #[test]
    fn bootstrap_quantiles_monotone() {
        let t = RunoffTriangle::new(
            2006,
            vec![vec![310, 148, 62], vec![290, 140], vec![305]],
            3,
        )
        .unwrap();
        let boot = odp_bootstrap(&t, 500, 4).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for p in [0.05, 0.25, 0.5, 0.75, 0.95] {
            let q = boot.quantile(p);
            assert!(q >= prev);
            prev = q;
        }
    }
}
