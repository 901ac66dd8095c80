//! Maximum-likelihood fitting for multinomial- and binomial-logit models.
//!
//! This is the shared engine behind the per-state transition hazards, the
//! reporting-delay model and the payment mixture weights. The
//! parametrization is reference-category softmax: class 0 carries implicit
//! zero coefficients, classes `1..K` each get a coefficient row (intercept
//! first), and
//!
//! ```text
//! P(class c | x) = exp(eta_c) / (1 + sum_e exp(eta_e)),   eta_c = theta_c . x
//! P(class 0 | x) = 1 - sum_c P(class c | x)
//! ```
//!
//! Fitting is damped Newton (iteratively reweighted least squares) with
//! step halving and escalating diagonal damping when the Hessian solve
//! fails; a large damping factor degrades gracefully into a scaled
//! gradient-ascent step. A small ridge penalty (never on intercepts) keeps
//! separable problems finite; such fits are flagged.

mod design;

pub use design::{DesignMatrix, Encoder, Feature, OTHER_LEVEL};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Convergence threshold on the max-abs penalized gradient.
    pub tol: f64,
    /// Ridge penalty on non-intercept coefficients.
    pub ridge: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { max_iter: 200, tol: 1e-8, ridge: 1e-8 }
    }
}

impl FitOptions {
    pub fn exact_mle() -> Self {
        FitOptions { ridge: 0.0, ..Default::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Convergence {
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
    /// Set when a coefficient diverged towards infinity (perfect
    /// separation) and only the ridge kept it finite.
    pub separation_flagged: bool,
    /// Penalized log-likelihood after each iteration (ascent is a model
    /// invariant; kept for diagnostics and tests).
    pub ll_trace: Vec<f64>,
}

/// A fitted multinomial-logit model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultinomialFit {
    pub class_names: Vec<String>,
    /// `(K-1) x p` coefficient rows for classes `1..K`; the reference class
    /// 0 is implicit zeros. Column 0 is the intercept.
    pub coefficients: Vec<Vec<f64>>,
    pub log_likelihood: f64,
    pub convergence: Convergence,
}

impl MultinomialFit {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_params(&self) -> usize {
        self.coefficients.first().map_or(0, Vec::len)
    }

    /// Class probabilities for an encoded row `[1, one-hot...]`.
    /// Components are positive and sum to one up to rounding.
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let k = self.n_classes();
        let mut eta = vec![0.0; k];
        for (c, row) in self.coefficients.iter().enumerate() {
            eta[c + 1] = dot(row, x);
        }
        softmax_in_place(&mut eta);
        eta
    }

    /// A fit that always predicts the observed class frequencies `probs`
    /// (used when a state has too few rows for any regression).
    pub fn constant(class_names: Vec<String>, probs: &[f64]) -> Result<MultinomialFit> {
        if class_names.len() != probs.len() || probs.is_empty() {
            return Err(Error::Validation("class/probability mismatch".to_string()));
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 || probs.iter().any(|&p| p < 0.0) {
            return Err(Error::Validation("probabilities must be nonnegative".to_string()));
        }
        let base = (probs[0] / total).max(1e-300);
        let coefficients: Vec<Vec<f64>> = probs[1..]
            .iter()
            .map(|&p| vec![((p / total).max(1e-300) / base).ln()])
            .collect();
        Ok(MultinomialFit {
            class_names,
            coefficients,
            log_likelihood: f64::NAN,
            convergence: Convergence {
                iterations: 0,
                gradient_norm: 0.0,
                converged: true,
                separation_flagged: false,
                ll_trace: Vec::new(),
            },
        })
    }
}

/// Predicted class probabilities, exposed as a free function mirroring the
/// fit/predict split used by the per-state models.
pub fn predict_probs(fit: &MultinomialFit, x: &[f64]) -> Vec<f64> {
    fit.predict(x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Turns `[0, eta_1, ...]` into softmax probabilities in place.
fn softmax_in_place(eta: &mut [f64]) {
    let m = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut denom = 0.0;
    for e in eta.iter_mut() {
        *e = (*e - m).exp();
        denom += *e;
    }
    for e in eta.iter_mut() {
        *e /= denom;
    }
}

/// Per-row sparse view of the design: indices and values of nonzero
/// predictor entries (one-hot rows have very few).
struct SparseRows {
    nz: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    fn from(design: &DesignMatrix) -> SparseRows {
        let nz = (0..design.n)
            .map(|i| {
                design
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        SparseRows { nz }
    }
}

struct Workspace<'a> {
    design: &'a DesignMatrix,
    rows: SparseRows,
    k: usize,
    p: usize,
    d: usize,
    ridge: f64,
}

impl<'a> Workspace<'a> {
    fn new(design: &'a DesignMatrix, ridge: f64) -> Workspace<'a> {
        let k = design.class_names.len();
        let p = design.p;
        Workspace { design, rows: SparseRows::from(design), k, p, d: (k - 1) * p, ridge }
    }

    fn probs_row(&self, theta: &[f64], i: usize, out: &mut [f64]) {
        out[0] = 0.0;
        for c in 1..self.k {
            let block = &theta[(c - 1) * self.p..c * self.p];
            out[c] = self.rows.nz[i].iter().map(|&(j, v)| block[j] * v).sum();
        }
        softmax_in_place(out);
    }

    /// Penalized log-likelihood.
    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        let mut ll = 0.0;
        let mut probs = vec![0.0; self.k];
        for i in 0..self.design.n {
            self.probs_row(theta, i, &mut probs);
            ll += self.design.w[i] * probs[self.design.y[i]].max(1e-300).ln();
        }
        ll - 0.5 * self.ridge * self.penalized_sq_norm(theta)
    }

    fn penalized_sq_norm(&self, theta: &[f64]) -> f64 {
        let mut s = 0.0;
        for c in 0..self.k - 1 {
            for j in 1..self.p {
                s += theta[c * self.p + j].powi(2);
            }
        }
        s
    }

    /// Gradient of the penalized log-likelihood.
    fn gradient(&self, theta: &[f64], grad: &mut [f64]) {
        grad.fill(0.0);
        let mut probs = vec![0.0; self.k];
        for i in 0..self.design.n {
            self.probs_row(theta, i, &mut probs);
            let w = self.design.w[i];
            for (c, &prob) in probs.iter().enumerate().skip(1) {
                let resid = w * ((self.design.y[i] == c) as u8 as f64 - prob);
                let base = (c - 1) * self.p;
                for &(j, v) in &self.rows.nz[i] {
                    grad[base + j] += resid * v;
                }
            }
        }
        for c in 0..self.k - 1 {
            for j in 1..self.p {
                grad[c * self.p + j] -= self.ridge * theta[c * self.p + j];
            }
        }
    }

    /// Negated Hessian of the penalized log-likelihood (positive
    /// semidefinite), stored dense `d x d`.
    fn neg_hessian(&self, theta: &[f64], h: &mut [f64]) {
        h.fill(0.0);
        let d = self.d;
        let mut probs = vec![0.0; self.k];
        for i in 0..self.design.n {
            self.probs_row(theta, i, &mut probs);
            let w = self.design.w[i];
            for c in 1..self.k {
                for c2 in c..self.k {
                    let delta = (c == c2) as u8 as f64;
                    let factor = w * probs[c] * (delta - probs[c2]);
                    if factor == 0.0 {
                        continue;
                    }
                    let (b1, b2) = ((c - 1) * self.p, (c2 - 1) * self.p);
                    for &(j1, v1) in &self.rows.nz[i] {
                        for &(j2, v2) in &self.rows.nz[i] {
                            h[(b1 + j1) * d + b2 + j2] += factor * v1 * v2;
                        }
                    }
                }
            }
        }
        // Mirror the upper block triangle.
        for c in 1..self.k {
            for c2 in (c + 1)..self.k {
                let (b1, b2) = ((c - 1) * self.p, (c2 - 1) * self.p);
                for j1 in 0..self.p {
                    for j2 in 0..self.p {
                        h[(b2 + j2) * d + b1 + j1] = h[(b1 + j1) * d + b2 + j2];
                    }
                }
            }
        }
        for c in 0..self.k - 1 {
            for j in 1..self.p {
                let idx = c * self.p + j;
                h[idx * d + idx] += self.ridge;
            }
        }
    }
}

/// In-place Cholesky solve of `a x = b` for symmetric positive definite
/// `a` (`d x d`, row-major). Fails on a non-positive pivot.
fn cholesky_solve(a: &mut [f64], b: &[f64], d: usize) -> Option<Vec<f64>> {
    // Factor a = L L^T, storing L in the lower triangle.
    for j in 0..d {
        let mut diag = a[j * d + j];
        for k in 0..j {
            diag -= a[j * d + k] * a[j * d + k];
        }
        if diag <= 0.0 || !diag.is_finite() {
            return None;
        }
        let l_jj = diag.sqrt();
        a[j * d + j] = l_jj;
        for i in (j + 1)..d {
            let mut v = a[i * d + j];
            for k in 0..j {
                v -= a[i * d + k] * a[j * d + k];
            }
            a[i * d + j] = v / l_jj;
        }
    }
    // Forward then backward substitution.
    let mut x = b.to_vec();
    for i in 0..d {
        for k in 0..i {
            x[i] -= a[i * d + k] * x[k];
        }
        x[i] /= a[i * d + i];
    }
    for i in (0..d).rev() {
        for k in (i + 1)..d {
            x[i] -= a[k * d + i] * x[k];
        }
        x[i] /= a[i * d + i];
    }
    Some(x)
}

/// Fits the multinomial-logit model by maximum likelihood.
///
/// Deterministic given inputs: no randomness, fixed iteration order.
pub fn fit_multinomial(design: &DesignMatrix, options: FitOptions) -> Result<MultinomialFit> {
    let k = design.class_names.len();
    if k < 2 {
        return Err(Error::Fit(
            "fewer than 2 classes; use a degenerate constant model instead".to_string(),
        ));
    }
    if design.n == 0 || (design.n as f64) < k as f64 && design.total_weight() < k as f64 {
        return Err(Error::Fit(format!(
            "{} rows cannot identify {k} classes",
            design.n
        )));
    }
    if design.observed_classes() < 2 {
        return Err(Error::Fit(
            "responses cover fewer than 2 classes; use a degenerate constant model".to_string(),
        ));
    }

    let ws = Workspace::new(design, options.ridge);
    let d = ws.d;
    let mut theta = vec![0.0; d];
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    let mut scratch = vec![0.0; d * d];

    let mut ll = ws.log_likelihood(&theta);
    let mut trace = Vec::with_capacity(16);
    let mut iterations = 0;
    let mut converged = false;

    for iter in 0..options.max_iter {
        iterations = iter;
        ws.gradient(&theta, &mut grad);
        let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gnorm <= options.tol {
            converged = true;
            break;
        }
        ws.neg_hessian(&theta, &mut hess);

        // Newton direction, with escalating diagonal damping if the
        // (semi)definite Hessian defeats the factorization. Large damping
        // turns the step into scaled gradient ascent.
        let mut step = None;
        let diag_scale =
            (0..d).map(|i| hess[i * d + i]).fold(0.0f64, f64::max).max(1e-12);
        let mut damping = 0.0;
        for _ in 0..12 {
            scratch.copy_from_slice(&hess);
            if damping > 0.0 {
                for i in 0..d {
                    scratch[i * d + i] += damping;
                }
            }
            if let Some(delta) = cholesky_solve(&mut scratch, &grad, d) {
                if delta.iter().all(|v| v.is_finite()) {
                    step = Some(delta);
                    break;
                }
            }
            damping = if damping == 0.0 { 1e-8 * diag_scale } else { damping * 10.0 };
        }
        let Some(delta) = step else {
            return Err(Error::Computation(
                "hessian factorization failed at every damping level".to_string(),
            ));
        };

        // Step halving keeps the penalized likelihood non-decreasing.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate: Vec<f64> =
                theta.iter().zip(&delta).map(|(th, de)| th + t * de).collect();
            let cand_ll = ws.log_likelihood(&candidate);
            if cand_ll.is_finite() && cand_ll >= ll - 1e-12 * ll.abs().max(1.0) {
                theta = candidate;
                ll = cand_ll;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        trace.push(ll);
        if !accepted {
            break; // No ascent direction left at any step length.
        }
    }

    ws.gradient(&theta, &mut grad);
    let gradient_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    // On one-hot predictors a coefficient this large means an odds ratio
    // beyond e^15; only separation pushed against the ridge gets there.
    let separation_flagged = theta.iter().any(|v| v.abs() > 15.0);

    let coefficients: Vec<Vec<f64>> =
        (0..k - 1).map(|c| theta[c * ws.p..(c + 1) * ws.p].to_vec()).collect();
    Ok(MultinomialFit {
        class_names: design.class_names.clone(),
        coefficients,
        log_likelihood: ws.log_likelihood(&theta) + 0.5 * options.ridge * ws.penalized_sq_norm(&theta),
        convergence: Convergence {
            iterations,
            gradient_norm,
            converged: converged || gradient_norm <= options.tol,
            separation_flagged,
            ll_trace: trace,
        },
    })
}

/// Two-class specialization of [`fit_multinomial`].
pub fn fit_binomial(design: &DesignMatrix, options: FitOptions) -> Result<MultinomialFit> {
    if design.class_names.len() != 2 {
        return Err(Error::Fit(format!(
            "binomial fit requires exactly 2 classes, got {}",
            design.class_names.len()
        )));
    }
    fit_multinomial(design, options)
}

/// Maximum absolute deviation between the analytic gradient of the
/// unpenalized log-likelihood and central finite differences with step `h`.
pub fn check_gradient(design: &DesignMatrix, coefficients: &[Vec<f64>], h: f64) -> f64 {
    let ws = Workspace::new(design, 0.0);
    let mut theta: Vec<f64> = coefficients.iter().flatten().copied().collect();
    assert_eq!(theta.len(), ws.d, "coefficient shape does not match design");
    let mut grad = vec![0.0; ws.d];
    ws.gradient(&theta, &mut grad);
    let mut worst = 0.0f64;
    for idx in 0..ws.d {
        let orig = theta[idx];
        theta[idx] = orig + h;
        let up = ws.log_likelihood(&theta);
        theta[idx] = orig - h;
        let down = ws.log_likelihood(&theta);
        theta[idx] = orig;
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((fd - grad[idx]).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn intercept_only_recovers_empirical_frequencies() {
        let design =
            DesignMatrix::intercept_only(&[30.0, 60.0, 10.0], names(&["a", "b", "c"])).unwrap();
        let fit = fit_multinomial(&design, FitOptions { tol: 1e-12, ..FitOptions::exact_mle() })
            .unwrap();
        let p = fit.predict(&[1.0]);
        assert_relative_eq!(p[0], 0.30, epsilon = 1e-10);
        assert_relative_eq!(p[1], 0.60, epsilon = 1e-10);
        assert_relative_eq!(p[2], 0.10, epsilon = 1e-10);
    }

    #[test]
    fn two_by_two_matches_closed_form_log_odds() {
        // Counts: x=0 -> (20 class0, 10 class1), x=1 -> (5 class0, 15 class1).
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut w = Vec::new();
        for (xi, c0, c1) in [(0.0, 20.0, 10.0), (1.0, 5.0, 15.0)] {
            x.extend_from_slice(&[1.0, xi]);
            y.push(0);
            w.push(c0);
            x.extend_from_slice(&[1.0, xi]);
            y.push(1);
            w.push(c1);
        }
        let design = DesignMatrix::new(x, 2, y, w, names(&["no", "yes"])).unwrap();
        let fit = fit_binomial(&design, FitOptions::exact_mle()).unwrap();
        let intercept = fit.coefficients[0][0];
        let slope = fit.coefficients[0][1];
        assert_relative_eq!(intercept, (10.0f64 / 20.0).ln(), epsilon = 1e-8);
        assert_relative_eq!(slope, (15.0f64 / 5.0).ln() - (10.0f64 / 20.0).ln(), epsilon = 1e-8);
    }

    #[test]
    fn grid_search_never_beats_the_fit() {
        // Tiny 3-class, single binary predictor problem.
        let rows = [
            (0.0, 0, 7.0),
            (0.0, 1, 3.0),
            (0.0, 2, 2.0),
            (1.0, 0, 2.0),
            (1.0, 1, 6.0),
            (1.0, 2, 4.0),
        ];
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut w = Vec::new();
        for (xi, c, wi) in rows {
            x.extend_from_slice(&[1.0, xi]);
            y.push(c);
            w.push(wi);
        }
        let design = DesignMatrix::new(x, 2, y, w, names(&["a", "b", "c"])).unwrap();
        let fit = fit_multinomial(&design, FitOptions::exact_mle()).unwrap();

        let ws = Workspace::new(&design, 0.0);
        let fitted_ll = ws.log_likelihood(&fit.coefficients.concat());
        assert_relative_eq!(fitted_ll, fit.log_likelihood, epsilon = 1e-9);

        // Coarse grid over all four coefficients in [-5, 5].
        let grid: Vec<f64> = (-5..=5).map(|v| v as f64).collect();
        let mut best = f64::NEG_INFINITY;
        for &a0 in &grid {
            for &a1 in &grid {
                for &b0 in &grid {
                    for &b1 in &grid {
                        best = best.max(ws.log_likelihood(&[a0, a1, b0, b1]));
                    }
                }
            }
        }
        assert!(
            fit.log_likelihood >= best - 1e-6,
            "grid {best} beat fit {}",
            fit.log_likelihood
        );
    }

    #[test]
    fn likelihood_ascends_across_iterations() {
        let design = DesignMatrix::intercept_only(&[5.0, 3.0, 2.0, 9.0], names(&["a", "b", "c", "d"]))
            .unwrap();
        let fit = fit_multinomial(&design, FitOptions::default()).unwrap();
        for pair in fit.convergence.ll_trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9);
        }
    }

    #[test]
    fn saturated_intercept_drives_probability_to_one() {
        let fit = MultinomialFit {
            class_names: names(&["a", "b"]),
            coefficients: vec![vec![20.0]],
            log_likelihood: 0.0,
            convergence: Convergence {
                iterations: 0,
                gradient_norm: 0.0,
                converged: true,
                separation_flagged: false,
                ll_trace: vec![],
            },
        };
        let p = fit.predict(&[1.0]);
        assert!(p[1] >= 1.0 - 1e-8);
    }

    #[test]
    fn zero_coefficients_give_uniform_probabilities() {
        let fit = MultinomialFit::constant(names(&["a", "b", "c"]), &[1.0, 1.0, 1.0]).unwrap();
        let p = fit.predict(&[1.0]);
        for &pi in &p {
            assert_relative_eq!(pi, 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn separable_data_is_flagged_but_finite() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            let xi = if i < 20 { 0.0 } else { 1.0 };
            x.extend_from_slice(&[1.0, xi]);
            y.push((i >= 20) as usize);
        }
        let design = DesignMatrix::new(x, 2, y, vec![1.0; 40], names(&["no", "yes"])).unwrap();
        let fit =
            fit_binomial(&design, FitOptions { ridge: 1e-6, ..Default::default() }).unwrap();
        assert!(fit.convergence.separation_flagged);
        assert!(fit.coefficients[0].iter().all(|c| c.is_finite()));
    }

    #[test]
    fn binomial_coefficients_recover_from_simulated_data() {
        // Logistic truth beta = (-1, 2) on a binary predictor.
        let mut rng = crate::rng::substream(55, "glm-binomial-recovery", &[]);
        let n = 50_000;
        let mut x = Vec::with_capacity(2 * n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let xi = f64::from(u8::from(rng.random::<f64>() < 0.5));
            let eta = -1.0 + 2.0 * xi;
            let p = 1.0 / (1.0 + (-eta).exp());
            x.extend_from_slice(&[1.0, xi]);
            y.push(usize::from(rng.random::<f64>() < p));
        }
        let design =
            DesignMatrix::new(x, 2, y, vec![1.0; n], names(&["no", "yes"])).unwrap();
        let fit = fit_binomial(&design, FitOptions::exact_mle()).unwrap();
        assert!((fit.coefficients[0][0] + 1.0).abs() < 0.05, "{:?}", fit.coefficients);
        assert!((fit.coefficients[0][1] - 2.0).abs() < 0.05, "{:?}", fit.coefficients);
    }

    #[test]
    fn single_class_is_an_error() {
        let design = DesignMatrix::intercept_only(&[10.0], names(&["only"])).unwrap();
        assert!(fit_multinomial(&design, FitOptions::default()).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences_on_random_instances() {
        let mut rng = crate::rng::substream(42, "glm-grad-test", &[]);
        for trial in 0..20 {
            let n = rng.random_range(5..60);
            let p_extra = rng.random_range(0..4usize);
            let k = rng.random_range(2..5usize);
            let mut x = Vec::new();
            let mut y = Vec::new();
            for _ in 0..n {
                x.push(1.0);
                for _ in 0..p_extra {
                    x.push(if rng.random::<f64>() < 0.5 { 0.0 } else { 1.0 });
                }
                y.push(rng.random_range(0..k));
            }
            if y.iter().collect::<std::collections::BTreeSet<_>>().len() < 2 {
                continue;
            }
            let class_names: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
            let design =
                DesignMatrix::new(x, p_extra + 1, y, vec![1.0; n], class_names).unwrap();
            let coeffs: Vec<Vec<f64>> = (0..k - 1)
                .map(|_| (0..p_extra + 1).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let dev = check_gradient(&design, &coeffs, 1e-5);
            assert!(dev <= 1e-6, "trial {trial}: deviation {dev}");
        }
    }

    #[test]
    fn gradient_at_zero_is_count_residual() {
        // At theta = 0 all classes have probability 1/K, so the gradient of
        // the intercept for class c is (count_c - n/K).
        let design =
            DesignMatrix::intercept_only(&[12.0, 5.0, 3.0], names(&["a", "b", "c"])).unwrap();
        let ws = Workspace::new(&design, 0.0);
        let mut grad = vec![0.0; 2];
        ws.gradient(&[0.0, 0.0], &mut grad);
        assert_relative_eq!(grad[0], 5.0 - 20.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(grad[1], 3.0 - 20.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn single_observation_gradient_is_indicator_minus_probability() {
        let design = DesignMatrix::new(
            vec![1.0, 2.0],
            2,
            vec![1],
            vec![1.0],
            names(&["a", "b"]),
        )
        .unwrap();
        let ws = Workspace::new(&design, 0.0);
        let theta = [0.3, -0.2];
        let mut grad = vec![0.0; 2];
        ws.gradient(&theta, &mut grad);
        let eta: f64 = 0.3 + -0.2 * 2.0;
        let p1 = eta.exp() / (1.0 + eta.exp());
        assert_relative_eq!(grad[0], 1.0 - p1, epsilon = 1e-12);
        assert_relative_eq!(grad[1], (1.0 - p1) * 2.0, epsilon = 1e-12);
    }

    #[test]
    fn row_permutation_leaves_coefficients_unchanged() {
        let build = |order: &[usize]| {
            let base: Vec<(f64, usize)> =
                vec![(0.0, 0), (0.0, 1), (1.0, 1), (1.0, 0), (1.0, 1), (0.0, 0)];
            let mut x = Vec::new();
            let mut y = Vec::new();
            for &i in order {
                x.extend_from_slice(&[1.0, base[i].0]);
                y.push(base[i].1);
            }
            DesignMatrix::new(x, 2, y, vec![1.0; order.len()], names(&["no", "yes"])).unwrap()
        };
        let a = fit_binomial(&build(&[0, 1, 2, 3, 4, 5]), FitOptions::default()).unwrap();
        let b = fit_binomial(&build(&[5, 3, 1, 4, 2, 0]), FitOptions::default()).unwrap();
        for (ra, rb) in a.coefficients.iter().zip(&b.coefficients) {
            for (ca, cb) in ra.iter().zip(rb) {
                assert_relative_eq!(ca, cb, epsilon = 1e-9);
            }
        }
    }
}
