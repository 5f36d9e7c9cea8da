//! Gaussian mixture models fitted by expectation-maximisation.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use super::prep::Standardization;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, forward_substitute, log_det_cholesky};
use crate::math::{exp, ln, log_sum_exp};
use crate::rng::SeededRng;
use crate::table::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CovarianceType {
    Full,
    Diagonal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmOptions {
    pub covariance: CovarianceType,
    /// Convergence threshold on the change of the mean per-row
    /// log-likelihood between iterations.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Ridge added to every covariance, as a multiple of the mean diagonal
    /// of the data covariance.
    pub regularization: f64,
}

impl Default for GmmOptions {
    fn default() -> Self {
        Self { covariance: CovarianceType::Full, tolerance: 1e-6, max_iterations: 300, regularization: 1e-6 }
    }
}

/// Fitted mixture. Covariances are stored as dense `d x d` row-major
/// matrices for both covariance types.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<f64>>,
    pub covariance_type: CovarianceType,
    /// Total log-likelihood of the training data under this model.
    pub log_likelihood: f64,
    /// Log-likelihood after each EM iteration, starting with the
    /// initialisation.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    /// Absolute ridge added to the covariance diagonals.
    pub ridge: f64,
    /// Feature scaling applied before fitting, if any.
    pub standardization: Option<Standardization>,
}

impl GmmModel {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dims(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    fn factors(&self) -> Result<Vec<Factor>> {
        let d = self.dims();
        self.covariances
            .iter()
            .enumerate()
            .map(|(k, cov)| {
                let l = cholesky(cov, d).ok_or(Error::NotPositiveDefinite { component: k })?;
                let log_det = log_det_cholesky(&l, d);
                Ok(Factor { l, log_det })
            })
            .collect()
    }
}

struct Factor {
    l: Vec<f64>,
    log_det: f64,
}

/// Number of free parameters of a `k`-component mixture in `d` dimensions.
pub fn parameter_count(k: usize, d: usize, covariance: CovarianceType) -> usize {
    let cov = match covariance {
        CovarianceType::Full => d * (d + 1) / 2,
        CovarianceType::Diagonal => d,
    };
    k - 1 + k * d + k * cov
}

/// Per-row log of the weighted component densities.
fn weighted_log_densities(model: &GmmModel, factors: &[Factor], row: &[f64], out: &mut [f64], scratch: &mut [f64]) {
    let d = row.len();
    let norm = d as f64 * ln(TAU);
    for (k, f) in factors.iter().enumerate() {
        for (s, (x, m)) in scratch.iter_mut().zip(row.iter().zip(&model.means[k])) {
            *s = x - m;
        }
        forward_substitute(&f.l, d, scratch);
        let maha: f64 = scratch.iter().map(|v| v * v).sum();
        out[k] = ln(model.weights[k]) - 0.5 * (norm + f.log_det + maha);
    }
}

/// E-step: responsibilities (row-major `n x K`) and total log-likelihood.
fn expectation(model: &GmmModel, factors: &[Factor], x: &Matrix) -> (Vec<f64>, f64) {
    let k = model.components();
    let rows: Vec<(Vec<f64>, f64)> = crate::par::map_range(x.rows(), |i| {
        let mut logp = vec![0.0; k];
        let mut scratch = vec![0.0; x.cols()];
        weighted_log_densities(model, factors, x.row(i), &mut logp, &mut scratch);
        let total = log_sum_exp(&logp);
        for v in logp.iter_mut() {
            *v = exp(*v - total);
        }
        let s: f64 = logp.iter().sum();
        logp.iter_mut().for_each(|v| *v /= s);
        (logp, total)
    });
    let mut resp = Vec::with_capacity(x.rows() * k);
    let mut ll = 0.0;
    for (r, t) in rows {
        resp.extend_from_slice(&r);
        ll += t;
    }
    (resp, ll)
}

/// Weight, mean and covariance of one component.
type Component = (f64, Vec<f64>, Vec<f64>);
/// Weights, means and covariances of all components.
type Parameters = (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>);

/// M-step from responsibilities. Fails on a collapsed component.
fn maximization(x: &Matrix, resp: &[f64], k: usize, covariance: CovarianceType, ridge: f64) -> Result<Parameters> {
    let (n, d) = (x.rows(), x.cols());
    let per_component: Vec<Result<Component>> = crate::par::map_range(k, |c| {
        let nk: f64 = (0..n).map(|i| resp[i * k + c]).sum();
        let weight = nk / n as f64;
        if !(weight >= 1e-8) {
            return Err(Error::DegenerateComponent { component: c, weight });
        }
        let mut mean = vec![0.0; d];
        for i in 0..n {
            let r = resp[i * k + c];
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += r * v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= nk);
        let mut cov = vec![0.0; d * d];
        let mut diff = vec![0.0; d];
        for i in 0..n {
            let r = resp[i * k + c];
            if r == 0.0 {
                continue;
            }
            for (df, (v, m)) in diff.iter_mut().zip(x.row(i).iter().zip(&mean)) {
                *df = v - m;
            }
            match covariance {
                CovarianceType::Full => {
                    for a in 0..d {
                        let ra = r * diff[a];
                        let row = &mut cov[a * d..a * d + a + 1];
                        for (b, cv) in row.iter_mut().enumerate() {
                            *cv += ra * diff[b];
                        }
                    }
                }
                CovarianceType::Diagonal => {
                    for a in 0..d {
                        cov[a * d + a] += r * diff[a] * diff[a];
                    }
                }
            }
        }
        for a in 0..d {
            for b in 0..=a {
                let v = cov[a * d + b] / nk;
                cov[a * d + b] = v;
                cov[b * d + a] = v;
            }
            cov[a * d + a] += ridge;
        }
        Ok((weight, mean, cov))
    });
    let mut weights = Vec::with_capacity(k);
    let mut means = Vec::with_capacity(k);
    let mut covs = Vec::with_capacity(k);
    for item in per_component {
        let (w, m, c) = item?;
        weights.push(w);
        means.push(m);
        covs.push(c);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok((weights, means, covs))
}

/// Lloyd iterations run from the k-means++ seeds before EM starts.
const KMEANS_ITERATIONS: usize = 100;

/// Index of the nearest center; ties go to the lower index.
fn nearest_center(row: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter().enumerate() {
        let dd: f64 = row.iter().zip(center).map(|(u, v)| (u - v) * (u - v)).sum();
        if dd < best_d {
            best_d = dd;
            best = c;
        }
    }
    best
}

/// k-means++ seeding refined by Lloyd's algorithm, as a hard assignment.
/// Refinement keeps the start from resting on the outlying rows that
/// k-means++ favours as seeds.
fn initial_responsibilities(x: &Matrix, k: usize, rng: &mut SeededRng) -> Vec<f64> {
    let (n, d) = (x.rows(), x.cols());
    let dist2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>();
    let mut seeds: Vec<usize> = vec![rng.below(n)];
    let mut nearest: Vec<f64> = (0..n).map(|i| dist2(x.row(i), x.row(seeds[0]))).collect();
    while seeds.len() < k {
        let next = rng.weighted_index(&nearest);
        seeds.push(next);
        for (i, dd) in nearest.iter_mut().enumerate() {
            *dd = dd.min(dist2(x.row(i), x.row(next)));
        }
    }
    let mut centers: Vec<Vec<f64>> = seeds.iter().map(|&s| x.row(s).to_vec()).collect();
    let mut labels: Vec<usize> = crate::par::map_range(n, |i| nearest_center(x.row(i), &centers));
    for _ in 0..KMEANS_ITERATIONS {
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(x.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            // An emptied cluster keeps its previous center.
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let next: Vec<usize> = crate::par::map_range(n, |i| nearest_center(x.row(i), &centers));
        if next == labels {
            break;
        }
        labels = next;
    }
    let mut resp = vec![0.0; n * k];
    for (i, &l) in labels.iter().enumerate() {
        resp[i * k + l] = 1.0;
    }
    resp
}

/// Ridge for the covariance diagonals: `scale` times the mean variance of
/// the data, or `scale` itself for data without variance.
fn data_ridge(x: &Matrix, scale: f64) -> f64 {
    let (n, d) = (x.rows() as f64, x.cols());
    if d == 0 {
        return scale;
    }
    let mean_var = (0..d)
        .map(|c| {
            let col = x.column(c);
            let m = col.iter().sum::<f64>() / n;
            col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n
        })
        .sum::<f64>()
        / d as f64;
    if mean_var > 0.0 {
        scale * mean_var
    } else {
        scale
    }
}

/// Fits a `k`-component mixture by EM from a k-means++ start drawn with
/// `seed`. A collapsed component triggers one reinitialisation; a second
/// collapse is reported as [`Error::DegenerateComponent`].
pub fn fit_gmm(x: &Matrix, k: usize, seed: u64, options: &GmmOptions) -> Result<GmmModel> {
    if k == 0 {
        return Err(Error::InvalidArgument("component count must be at least 1".into()));
    }
    if x.rows() < k {
        return Err(Error::TooFewRows { rows: x.rows(), components: k });
    }
    if x.cols() == 0 {
        return Err(Error::EmptyInput("feature matrix has no columns"));
    }
    let mut rng = SeededRng::new(seed);
    let ridge = data_ridge(x, options.regularization);
    match run_em(x, k, seed, options, ridge, &mut rng) {
        Err(Error::DegenerateComponent { .. }) => run_em(x, k, seed, options, ridge, &mut rng),
        other => other,
    }
}

fn run_em(x: &Matrix, k: usize, seed: u64, options: &GmmOptions, ridge: f64, rng: &mut SeededRng) -> Result<GmmModel> {
    let n = x.rows() as f64;
    let resp = initial_responsibilities(x, k, rng);
    let (weights, means, covariances) = maximization(x, &resp, k, options.covariance, ridge)?;
    let mut model = GmmModel {
        weights,
        means,
        covariances,
        covariance_type: options.covariance,
        log_likelihood: f64::NEG_INFINITY,
        trace: Vec::new(),
        iterations: 0,
        converged: false,
        seed,
        ridge,
        standardization: None,
    };
    let mut previous = f64::NEG_INFINITY;
    for iteration in 0..=options.max_iterations {
        let factors = model.factors()?;
        let (resp, ll) = expectation(&model, &factors, x);
        model.trace.push(ll);
        model.log_likelihood = ll;
        model.iterations = iteration;
        if (ll - previous).abs() / n < options.tolerance {
            model.converged = true;
            break;
        }
        if iteration == options.max_iterations {
            break;
        }
        previous = ll;
        let (weights, means, mut covariances) = maximization(x, &resp, k, options.covariance, ridge)?;
        keep_better_covariances(&mut covariances, &model.covariances, &factors, ridge, x.cols())?;
        model.weights = weights;
        model.means = means;
        model.covariances = covariances;
    }
    Ok(model)
}

/// `log|S| + tr(S^-1 A)` for `S = L L^T`: the part of the expected
/// complete-data log-likelihood of one component that depends on its
/// covariance, negated and halved away. Lower is better.
fn covariance_cost(l: &[f64], log_det: f64, scatter: &[f64], d: usize) -> f64 {
    // tr(S^-1 A) = tr(L^-1 (L^-1 A)^T) as A is symmetric. `y` holds
    // L^-1 A column by column.
    let mut y = vec![0.0; d * d];
    let mut column = vec![0.0; d];
    for j in 0..d {
        column.iter_mut().enumerate().for_each(|(i, v)| *v = scatter[i * d + j]);
        forward_substitute(l, d, &mut column);
        y[j * d..(j + 1) * d].copy_from_slice(&column);
    }
    let mut trace = 0.0;
    for j in 0..d {
        // row j of L^-1 A
        column.iter_mut().enumerate().for_each(|(i, v)| *v = y[i * d + j]);
        forward_substitute(l, d, &mut column);
        trace += column[j];
    }
    log_det + trace
}

/// Generalised M-step for the covariances. The ridge moves `S + ridge I`
/// off the exact maximiser, which near a fixed point can cost more than the
/// step gains and lower the likelihood. Where the previous covariance fits
/// the new responsibilities better, it is kept, so the likelihood never
/// decreases.
fn keep_better_covariances(
    fresh: &mut [Vec<f64>],
    previous: &[Vec<f64>],
    previous_factors: &[Factor],
    ridge: f64,
    d: usize,
) -> Result<()> {
    for (c, cov) in fresh.iter_mut().enumerate() {
        let l = cholesky(cov, d).ok_or(Error::NotPositiveDefinite { component: c })?;
        let mut scatter = cov.clone();
        for a in 0..d {
            scatter[a * d + a] -= ridge;
        }
        let fresh_cost = covariance_cost(&l, log_det_cholesky(&l, d), &scatter, d);
        let old = &previous_factors[c];
        if covariance_cost(&old.l, old.log_det, &scatter, d) < fresh_cost {
            cov.clone_from(&previous[c]);
        }
    }
    Ok(())
}

/// `p ln(n) - 2 ln L` with `p` from [`parameter_count`].
pub fn bic(model: &GmmModel, x: &Matrix) -> Result<f64> {
    if x.cols() != model.dims() {
        return Err(Error::DimensionMismatch { expected: model.dims(), found: x.cols(), what: "feature count" });
    }
    let factors = model.factors()?;
    let (_, ll) = expectation(model, &factors, x);
    Ok(bic_from_log_likelihood(ll, x.rows(), model.components(), model.dims(), model.covariance_type))
}

pub(crate) fn bic_from_log_likelihood(ll: f64, n: usize, k: usize, d: usize, covariance: CovarianceType) -> f64 {
    parameter_count(k, d, covariance) as f64 * ln(n as f64) - 2.0 * ll
}

/// Posterior responsibilities and hard labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeling {
    pub labels: Vec<usize>,
    /// Row-major `n x K`.
    pub responsibilities: Matrix,
}

/// Labels every row with its most responsible component; ties go to the
/// lower component index.
pub fn assign_labels(model: &GmmModel, x: &Matrix) -> Result<Labeling> {
    if x.cols() != model.dims() {
        return Err(Error::DimensionMismatch { expected: model.dims(), found: x.cols(), what: "feature count" });
    }
    let k = model.components();
    let factors = model.factors()?;
    let (resp, _) = expectation(model, &factors, x);
    let labels = (0..x.rows())
        .map(|i| {
            let row = &resp[i * k..(i + 1) * k];
            let mut best = 0;
            for (c, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    Ok(Labeling { labels, responsibilities: Matrix::from_vec(x.rows(), k, resp)? })
}
