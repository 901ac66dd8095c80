//! Negative-binomial IBNR claim counts from a run-off triangle.
//!
//! A stationary multinomial reporting pattern `pi_j` (probability a claim
//! reports `j` years after its accident year) is estimated from the
//! triangle; conditional on the observed count `r_i` of accident year `i`
//! with observed reporting mass `p_i`, the unreported count follows
//! `NegBinom(r_i, p_i)` with mean `r_i (1-p_i)/p_i` and variance
//! `r_i (1-p_i)/p_i^2`. Draws allocate each year's count across the
//! unobserved development cells with the renormalized tail of `pi`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::triangle::RunoffTriangle;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IbnrCountModel {
    /// Estimated reporting probabilities per development year, summing to 1.
    pub reporting_probs: Vec<f64>,
    /// Observed claims per accident year (`r_i`).
    pub observed: Vec<u64>,
    /// Observed reporting mass per accident year (`p_i`).
    pub observed_mass: Vec<f64>,
    /// Development years with a zero column flagged during estimation.
    pub zero_columns: Vec<usize>,
    pub first_accident_year: i32,
}

/// Estimates the reporting pattern by the chain-ladder-equivalent
/// construction: volume-weighted development factors on the cumulative
/// count triangle converted into incremental reporting probabilities.
/// For row-truncated multinomial data this matches the maximum-likelihood
/// pattern and makes the expected counts agree with the chain ladder.
pub fn estimate_reporting_probs(triangle: &RunoffTriangle) -> Result<IbnrCountModel> {
    let observed = triangle.observed_row_totals();
    if observed[0] == 0 {
        return Err(Error::Validation(
            "first accident year has no observed claims".to_string(),
        ));
    }
    let cumulative = triangle.cumulative();
    let j_years = triangle.development_years;

    let mut factors = Vec::with_capacity(j_years.saturating_sub(1));
    let mut zero_columns = Vec::new();
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
                "cumulative counts through development {j} are zero"
            )));
        }
        if num == den {
            zero_columns.push(j);
        }
        factors.push(num / den);
    }

    // Cumulative reported fraction by development j: F_j = 1 / prod_{l>j} f_l.
    let mut reported_frac = vec![1.0; j_years];
    for j in (0..j_years - 1).rev() {
        reported_frac[j] = reported_frac[j + 1] / factors[j];
    }
    let mut probs = Vec::with_capacity(j_years);
    let mut prev = 0.0;
    for &f in &reported_frac {
        probs.push((f - prev).max(0.0));
        prev = f;
    }

    let observed_mass: Vec<f64> = (0..triangle.accident_years)
        .map(|i| reported_frac[triangle.observed_devs(i) - 1].min(1.0))
        .collect();

    Ok(IbnrCountModel {
        reporting_probs: probs,
        observed,
        observed_mass,
        zero_columns,
        first_accident_year: triangle.first_accident_year,
    })
}

impl IbnrCountModel {
    pub fn accident_years(&self) -> usize {
        self.observed.len()
    }

    /// Development years missing from accident row `i`.
    pub fn unobserved_devs(&self, i: usize) -> std::ops::Range<usize> {
        let j = self.reporting_probs.len();
        let observed = j.min(self.accident_years() - i);
        observed..j
    }
}

/// Renormalizes the reporting tail of accident row `i` over its
/// unobserved development years so it sums to one.
pub fn standardize_tail(model: &IbnrCountModel, i: usize) -> Result<Vec<f64>> {
    let range = model.unobserved_devs(i);
    if range.is_empty() {
        return Err(Error::Validation(format!(
            "accident row {i} is fully developed; no tail to standardize"
        )));
    }
    let tail: Vec<f64> = model.reporting_probs[range].to_vec();
    let mass: f64 = tail.iter().sum();
    if mass <= 0.0 {
        return Err(Error::Validation(format!(
            "accident row {i} has zero tail mass; its expected IBNR count is 0"
        )));
    }
    Ok(tail.iter().map(|p| p / mass).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpectedIbnr {
    pub by_year: Vec<f64>,
    pub total: f64,
}

/// Expected IBNR counts `r_i (1 - p_i) / p_i` per accident year.
pub fn expected_ibnr(model: &IbnrCountModel) -> ExpectedIbnr {
    let by_year: Vec<f64> = model
        .observed
        .iter()
        .zip(&model.observed_mass)
        .map(|(&r, &p)| if p >= 1.0 { 0.0 } else { r as f64 * (1.0 - p) / p })
        .collect();
    let total = by_year.iter().sum();
    ExpectedIbnr { by_year, total }
}

/// One predictive draw: counts for every unobserved `(accident, dev)` cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IbnrDraw {
    /// `by_year[i]` is the drawn IBNR count of accident row `i`.
    pub by_year: Vec<u64>,
    /// `cells[i]` are the per-development allocations of `by_year[i]`,
    /// aligned with `IbnrCountModel::unobserved_devs(i)`.
    pub cells: Vec<Vec<u64>>,
}

impl IbnrDraw {
    pub fn total(&self) -> u64 {
        self.by_year.iter().sum()
    }
}

/// Draws `NegBinom(r, p)` as the number of failures before the `r`-th
/// success via the gamma-Poisson mixture.
pub fn sample_neg_binomial(r: u64, p: f64, rng: &mut impl Rng) -> u64 {
    if r == 0 || p >= 1.0 {
        return 0;
    }
    let p = p.max(1e-12);
    let gamma = Gamma::new(r as f64, (1.0 - p) / p).expect("valid gamma parameters");
    let lambda: f64 = gamma.sample(rng);
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive lambda").sample(rng) as u64
}

/// One draw of the per-cell IBNR counts.
pub fn sample_ibnr_draw(model: &IbnrCountModel, rng: &mut impl Rng) -> Result<IbnrDraw> {
    let mut by_year = Vec::with_capacity(model.accident_years());
    let mut cells = Vec::with_capacity(model.accident_years());
    for i in 0..model.accident_years() {
        let range = model.unobserved_devs(i);
        if range.is_empty() {
            by_year.push(0);
            cells.push(Vec::new());
            continue;
        }
        let count = sample_neg_binomial(model.observed[i], model.observed_mass[i], rng);
        by_year.push(count);
        let mut alloc = vec![0u64; range.len()];
        if count > 0 {
            let tail = standardize_tail(model, i)?;
            let mut cum = Vec::with_capacity(tail.len());
            let mut acc = 0.0;
            for t in &tail {
                acc += t;
                cum.push(acc);
            }
            for _ in 0..count {
                let u: f64 = rng.random();
                let idx = cum.iter().position(|&c| u <= c).unwrap_or(tail.len() - 1);
                alloc[idx] += 1;
            }
        }
        cells.push(alloc);
    }
    Ok(IbnrDraw { by_year, cells })
}

/// The predictive distribution: `n_draws` independent draws, generated in
/// parallel on per-draw substreams of `seed` (worker count cannot change
/// the result).
pub fn sample_ibnr(
    model: &IbnrCountModel,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<IbnrDraw>> {
    use rayon::prelude::*;
    (0..n_draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::rng::substream(seed, "ibnr-predictive", &[i as u64]);
            sample_ibnr_draw(model, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn complete_single_row_gives_empirical_frequencies() {
        let t = RunoffTriangle::new(2010, vec![vec![10, 6, 4], vec![10, 6], vec![10]], 3).unwrap();
        let model = estimate_reporting_probs(&t).unwrap();
        // All rows share the pattern (0.5, 0.3, 0.2) so the chain-ladder
        // estimate reproduces it exactly.
        assert_relative_eq!(model.reporting_probs[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(model.reporting_probs[1], 0.3, epsilon = 1e-12);
        assert_relative_eq!(model.reporting_probs[2], 0.2, epsilon = 1e-12);
    }

    #[test]
    fn two_by_two_hand_computation() {
        let t = RunoffTriangle::new(2011, vec![vec![100, 20], vec![200]], 2).unwrap();
        let model = estimate_reporting_probs(&t).unwrap();
        assert_relative_eq!(model.reporting_probs[0], 1.0 / 1.2, epsilon = 1e-12);
        assert_relative_eq!(model.reporting_probs[1], 0.2 / 1.2, epsilon = 1e-12);
        assert_relative_eq!(model.observed_mass[1], 1.0 / 1.2, epsilon = 1e-12);
        let expected = expected_ibnr(&model);
        assert_relative_eq!(expected.by_year[0], 0.0);
        assert_relative_eq!(expected.by_year[1], 200.0 * (0.2 / 1.2) / (1.0 / 1.2), epsilon = 1e-9);
        assert_relative_eq!(expected.total, 40.0, epsilon = 1e-9);
    }

    #[test]
    fn recovery_on_synthetic_multinomial_triangles() {
        let truth = [0.7, 0.2, 0.07, 0.03];
        let mut rng = crate::rng::substream(5, "ibnr-recovery", &[]);
        let n_per_year = 2_000_000u64;
        let years = 4;
        let mut cells = Vec::new();
        for i in 0..years {
            let observed = years - i;
            let mut row = vec![0u64; observed];
            for _ in 0..n_per_year {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut dev = truth.len() - 1;
                for (j, &p) in truth.iter().enumerate() {
                    acc += p;
                    if u <= acc {
                        dev = j;
                        break;
                    }
                }
                if dev < observed {
                    row[dev] += 1;
                }
            }
            cells.push(row);
        }
        let t = RunoffTriangle::new(2009, cells, years).unwrap();
        let model = estimate_reporting_probs(&t).unwrap();
        for (est, tr) in model.reporting_probs.iter().zip(&truth) {
            assert!((est - tr).abs() < 0.01, "estimated {est} vs truth {tr}");
        }
    }

    #[test]
    fn tail_standardization() {
        let model = IbnrCountModel {
            reporting_probs: vec![0.5, 0.3, 0.2],
            observed: vec![10, 10, 10],
            observed_mass: vec![1.0, 0.8, 0.5],
            zero_columns: vec![],
            first_accident_year: 2010,
        };
        // Row 1 misses the last two development years.
        assert_eq!(model.unobserved_devs(1), 2..3);
        let tail = standardize_tail(&model, 1).unwrap();
        assert_eq!(tail, vec![1.0]);
        // Same probabilities, two missing years: renormalize (0.3, 0.2).
        let tail2 = standardize_tail(&model, 2).unwrap();
        assert_relative_eq!(tail2[0], 0.6, epsilon = 1e-12);
        assert_relative_eq!(tail2[1], 0.4, epsilon = 1e-12);
        assert!(standardize_tail(&model, 0).is_err());
    }

    #[test]
    fn expected_ibnr_formula() {
        let model = IbnrCountModel {
            reporting_probs: vec![0.8, 0.2],
            observed: vec![100, 100],
            observed_mass: vec![1.0, 0.8],
            zero_columns: vec![],
            first_accident_year: 2010,
        };
        let e = expected_ibnr(&model);
        assert_relative_eq!(e.by_year[0], 0.0);
        assert_relative_eq!(e.by_year[1], 25.0, epsilon = 1e-12);
    }

    #[test]
    fn fully_reported_mass_draws_zero() {
        let model = IbnrCountModel {
            reporting_probs: vec![1.0],
            observed: vec![50],
            observed_mass: vec![1.0],
            zero_columns: vec![],
            first_accident_year: 2012,
        };
        let mut rng = crate::rng::substream(1, "ibnr-zero", &[]);
        for _ in 0..100 {
            assert_eq!(sample_ibnr_draw(&model, &mut rng).unwrap().total(), 0);
        }
    }

    #[test]
    fn draw_cells_sum_to_year_total() {
        let t = RunoffTriangle::new(
            2009,
            vec![vec![50, 20, 10, 5], vec![60, 25, 12], vec![55, 18], vec![40]],
            4,
        )
        .unwrap();
        let model = estimate_reporting_probs(&t).unwrap();
        for draw in sample_ibnr(&model, 50, 2).unwrap() {
            for (year_total, alloc) in draw.by_year.iter().zip(&draw.cells) {
                assert_eq!(*year_total, alloc.iter().sum::<u64>());
            }
        }
    }

    #[test]
    fn sample_mean_matches_expectation() {
        let t = RunoffTriangle::new(
            2009,
            vec![vec![500, 200, 100], vec![480, 210], vec![530]],
            3,
        )
        .unwrap();
        let model = estimate_reporting_probs(&t).unwrap();
        let expected = expected_ibnr(&model);
        let draws = sample_ibnr(&model, 10_000, 8).unwrap();
        let totals: Vec<f64> = draws.iter().map(|d| d.total() as f64).collect();
        let mean = crate::stats::mean(&totals);
        let se = (crate::stats::variance(&totals) / totals.len() as f64).sqrt();
        assert!(
            (mean - expected.total).abs() <= 3.0 * se,
            "mean {mean} vs expected {} (se {se})",
            expected.total
        );
    }

    #[test]
    fn neg_binomial_moments() {
        let mut rng = crate::rng::substream(13, "negbinom-moments", &[]);
        for (r, p) in [(10u64, 0.5), (100, 0.8)] {
            let draws: Vec<f64> =
                (0..50_000).map(|_| sample_neg_binomial(r, p, &mut rng) as f64).collect();
            let m = crate::stats::mean(&draws);
            let v = crate::stats::variance(&draws);
            let expect_m = r as f64 * (1.0 - p) / p;
            let expect_v = r as f64 * (1.0 - p) / (p * p);
            let se_m = (expect_v / draws.len() as f64).sqrt();
            assert!((m - expect_m).abs() < 4.0 * se_m, "mean {m} vs {expect_m}");
            assert!((v - expect_v).abs() / expect_v < 0.1, "var {v} vs {expect_v}");
        }
    }
}
