//! Component-count selection from the BIC curve.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::gmm::{bic_from_log_likelihood, fit_gmm, GmmModel, GmmOptions};
use crate::error::{Error, Result};
use crate::table::Matrix;

/// Best-of-seeds BIC for one component count.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BicPoint {
    pub k: usize,
    pub bic: f64,
    pub log_likelihood: f64,
    /// Seed of the winning fit.
    pub seed: u64,
    /// Seeds whose fit failed (collapsed or singular components).
    pub failed_seeds: usize,
}

/// Outcome of the discrete elbow rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Elbow {
    pub k: usize,
    /// True when the curve had no curvature to read and the rule fell back
    /// to `k_min + 1`.
    pub fallback: bool,
}

/// Picks the elbow of a BIC curve ordered by increasing `k`.
///
/// One point returns its `k`, two points return the lower BIC. Longer
/// curves return the interior `k` maximising `b[k-1] - 2 b[k] + b[k+1]`,
/// ties to the smaller `k`. A curve with identical second differences has
/// no elbow; the rule then returns `k_min + 1` and sets `fallback`.
pub fn elbow(curve: &[(usize, f64)]) -> Option<Elbow> {
    match curve {
        [] => None,
        [(k, _)] => Some(Elbow { k: *k, fallback: false }),
        [(k0, b0), (k1, b1)] => Some(Elbow { k: if b1 < b0 { *k1 } else { *k0 }, fallback: false }),
        _ => {
            let second: Vec<f64> = curve.windows(3).map(|w| w[0].1 - 2.0 * w[1].1 + w[2].1).collect();
            let scale = curve.iter().map(|(_, b)| b.abs()).fold(0.0, f64::max).max(1.0);
            let lo = second.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = second.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo <= 1e-12 * scale {
                return Some(Elbow { k: curve[1].0, fallback: true });
            }
            let mut best = 0;
            for (i, v) in second.iter().enumerate() {
                if *v > second[best] {
                    best = i;
                }
            }
            Some(Elbow { k: curve[best + 1].0, fallback: false })
        }
    }
}

/// Result of [`select_k`].
#[derive(Debug, Clone)]
pub struct Selection {
    pub k: usize,
    pub curve: Vec<BicPoint>,
    /// Best model for every point of the curve, same order.
    pub models: Vec<GmmModel>,
    pub warnings: Vec<String>,
}

impl Selection {
    /// Best model with `k` components, if that count was fitted.
    pub fn model(&self, k: usize) -> Option<&GmmModel> {
        self.curve.iter().position(|p| p.k == k).map(|i| &self.models[i])
    }
}

/// Fits every `k` in `k_min..=k_max` with `seeds_per_k` seeds
/// (`base_seed`, `base_seed + 1`, ...), keeps the lowest BIC per `k` and
/// reads the elbow. Fits run in parallel; the result does not depend on
/// scheduling.
///
/// The curve stops at the first `k` for which no seed produced a model.
pub fn select_k(
    x: &Matrix,
    k_min: usize,
    k_max: usize,
    seeds_per_k: usize,
    base_seed: u64,
    options: &GmmOptions,
) -> Result<Selection> {
    if k_min == 0 || k_max < k_min {
        return Err(Error::InvalidArgument(format!("empty component range [{k_min}, {k_max}]")));
    }
    if seeds_per_k == 0 {
        return Err(Error::InvalidArgument("seeds_per_k must be at least 1".into()));
    }
    let ks = k_max - k_min + 1;
    let fits: Vec<Result<GmmModel>> = crate::par::map_range(ks * seeds_per_k, |i| {
        let k = k_min + i / seeds_per_k;
        let seed = base_seed.wrapping_add((i % seeds_per_k) as u64);
        fit_gmm(x, k, seed, options)
    });

    let mut curve = Vec::new();
    let mut models = Vec::new();
    let mut warnings = Vec::new();
    let mut fits = fits.into_iter();
    for k in k_min..=k_max {
        let mut best: Option<(f64, GmmModel)> = None;
        let mut failed = 0;
        let mut last_error = None;
        for fit in fits.by_ref().take(seeds_per_k) {
            match fit {
                Ok(model) => {
                    let b = bic_from_log_likelihood(model.log_likelihood, x.rows(), k, x.cols(), options.covariance);
                    if best.as_ref().is_none_or(|(bb, _)| b < *bb) {
                        best = Some((b, model));
                    }
                }
                Err(e) => {
                    failed += 1;
                    last_error = Some(e);
                }
            }
        }
        let Some((b, model)) = best else {
            let reason = last_error.map(|e| format!("{e}")).unwrap_or_default();
            warnings.push(format!("all {seeds_per_k} fits failed at K={k} ({reason}); BIC curve truncated"));
            break;
        };
        if failed > 0 {
            warnings.push(format!("{failed} of {seeds_per_k} fits failed at K={k}"));
        }
        if !model.converged {
            warnings.push(format!("best fit at K={k} stopped at the iteration limit"));
        }
        curve.push(BicPoint {
            k,
            bic: b,
            log_likelihood: model.log_likelihood,
            seed: model.seed,
            failed_seeds: failed,
        });
        models.push(model);
    }
    if curve.is_empty() {
        return Err(Error::InvalidArgument(format!("no mixture could be fitted for K in [{k_min}, {k_max}]")));
    }
    let pairs: Vec<(usize, f64)> = curve.iter().map(|p| (p.k, p.bic)).collect();
    let chosen = elbow(&pairs).expect("curve is not empty");
    if chosen.fallback {
        warnings.push(format!("BIC curve has no elbow; using K={}", chosen.k));
    }
    Ok(Selection { k: chosen.k, curve, models, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use alloc::vec;

    #[test]
    fn linear_curve_falls_back() {
        let curve: Vec<(usize, f64)> = (1..=6).map(|k| (k, 100.0 - 10.0 * k as f64)).collect();
        assert_eq!(elbow(&curve), Some(Elbow { k: 2, fallback: true }));
    }

    #[test]
    fn two_point_curve_takes_lower() {
        assert_eq!(elbow(&[(1, 5.0), (2, 3.0)]).unwrap().k, 2);
        assert_eq!(elbow(&[(1, 3.0), (2, 5.0)]).unwrap().k, 1);
    }

    #[test]
    fn sharp_bend() {
        let curve = [(1, 1000.0), (2, 500.0), (3, 100.0), (4, 95.0), (5, 90.0)];
        assert_eq!(elbow(&curve), Some(Elbow { k: 3, fallback: false }));
    }

    #[test]
    fn empty_range_is_an_error() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(select_k(&x, 3, 2, 1, 0, &GmmOptions::default()).is_err());
        assert!(select_k(&x, 0, 2, 1, 0, &GmmOptions::default()).is_err());
    }

    #[test]
    fn three_blobs() {
        let mut rng = SeededRng::new(42);
        let mut rows = Vec::new();
        for c in [0.0, 6.0, 12.0] {
            for _ in 0..100 {
                rows.push(vec![c + 0.5 * rng.normal(), 0.5 * rng.normal()]);
            }
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let s = select_k(&x, 1, 6, 3, 0, &GmmOptions::default()).unwrap();
        assert_eq!(s.k, 3, "{:?}", s.curve);
        assert!(s.model(3).unwrap().components() == 3);
        assert!(s.curve[2].bic < s.curve[0].bic);
    }
}
