//! ROC / AUC scoring of a saliency map against a set of fixated pixels.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::raster::Raster;

/// Default number of evenly spaced thresholds.
pub const DEFAULT_THRESHOLDS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Thresholds {
    /// `n` levels `k / (n - 1)` over the range-normalized map.
    Uniform(usize),
    /// Every distinct map value is a threshold.
    Exact,
}

/// Denominator used for the false-positive rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FprDenominator {
    /// `FP / (FP + TN)`.
    #[default]
    Negatives,
    /// `FP / (TP + FN)`, kept only for auditing; rates may exceed 1.
    Positives,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NegativeSample {
    pub count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RocConfig {
    pub thresholds: Thresholds,
    pub fpr: FprDenominator,
    /// Score against a uniform random subset of the non-fixated pixels instead of all of them.
    pub negative_sample: Option<NegativeSample>,
}

impl RocConfig {
    pub fn uniform(n: usize) -> Self {
        RocConfig {
            thresholds: Thresholds::Uniform(n),
            fpr: FprDenominator::Negatives,
            negative_sample: None,
        }
    }

    pub fn exact() -> Self {
        RocConfig {
            thresholds: Thresholds::Exact,
            fpr: FprDenominator::Negatives,
            negative_sample: None,
        }
    }
}

impl Default for RocConfig {
    fn default() -> Self {
        RocConfig::uniform(DEFAULT_THRESHOLDS)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocResult {
    /// `(fpr, tpr)` pairs from the strictest threshold to the loosest.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Trapezoidal area under a sequence of `(x, y)` points.
pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|p| (p[1].0 - p[0].0) * (p[1].1 + p[0].1) / 2.0)
        .sum()
}

/// Scores `saliency` as a classifier of the `fixated` pixel indices.
///
/// `fixated` holds row-major pixel indices; duplicates are ignored. A pixel
/// counts as predicted-fixated at threshold `t` when its value is `>= t`.
pub fn roc_auc(saliency: &Raster, fixated: &[usize], config: &RocConfig) -> Result<RocResult> {
    let n = saliency.len();
    let mut is_fixated = vec![false; n];
    for &i in fixated {
        if i >= n {
            return Err(Error::param(format!("fixated pixel {i} outside map of {n} pixels")));
        }
        is_fixated[i] = true;
    }
    let positives: Vec<usize> = (0..n).filter(|&i| is_fixated[i]).collect();
    let mut negatives: Vec<usize> = (0..n).filter(|&i| !is_fixated[i]).collect();
    if positives.is_empty() {
        return Err(Error::EmptySelection("no fixated pixels to score".into()));
    }
    if negatives.is_empty() {
        return Err(Error::Degenerate("every pixel is fixated".into()));
    }
    if let Some(sample) = config.negative_sample {
        if sample.count == 0 {
            return Err(Error::param("negative sample count must be positive"));
        }
        if sample.count < negatives.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(sample.seed);
            let mut picked = rand::seq::index::sample(&mut rng, negatives.len(), sample.count).into_vec();
            picked.sort_unstable();
            negatives = picked.into_iter().map(|k| negatives[k]).collect();
        }
    }

    let p = positives.len() as f64;
    let fpr_denominator = match config.fpr {
        FprDenominator::Negatives => negatives.len() as f64,
        FprDenominator::Positives => p,
    };

    let points = match config.thresholds {
        Thresholds::Uniform(levels) => {
            if levels < 2 {
                return Err(Error::param("at least two thresholds are required"));
            }
            uniform_sweep(saliency, &positives, &negatives, levels, p, fpr_denominator)
        }
        Thresholds::Exact => exact_sweep(saliency, &positives, &negatives, p, fpr_denominator),
    };
    let auc = trapezoid(&points);
    Ok(RocResult { points, auc })
}

/// Index of the highest threshold `k / (levels - 1)` that is `<= v`.
fn threshold_bin(v: f64, levels: usize) -> usize {
    let top = (levels - 1) as f64;
    let level = |k: usize| k as f64 / top;
    let mut k = (v * top).floor().clamp(0.0, top) as usize;
    while k + 1 < levels && level(k + 1) <= v {
        k += 1;
    }
    while k > 0 && level(k) > v {
        k -= 1;
    }
    k
}

fn uniform_sweep(
    saliency: &Raster,
    positives: &[usize],
    negatives: &[usize],
    levels: usize,
    p: f64,
    fpr_denominator: f64,
) -> Vec<(f64, f64)> {
    let values = saliency.values();
    let lo = saliency.min();
    let range = saliency.max() - lo;
    let scaled = |i: usize| {
        if range > 0.0 {
            (values[i] - lo) / range
        } else {
            0.0
        }
    };
    let mut pos_hist = vec![0usize; levels];
    let mut neg_hist = vec![0usize; levels];
    for &i in positives {
        pos_hist[threshold_bin(scaled(i), levels)] += 1;
    }
    for &i in negatives {
        neg_hist[threshold_bin(scaled(i), levels)] += 1;
    }
    let mut points = Vec::with_capacity(levels + 1);
    points.push((0.0, 0.0));
    let (mut tp, mut fp) = (0usize, 0usize);
    for k in (0..levels).rev() {
        tp += pos_hist[k];
        fp += neg_hist[k];
        points.push((fp as f64 / fpr_denominator, tp as f64 / p));
    }
    points
}

fn exact_sweep(
    saliency: &Raster,
    positives: &[usize],
    negatives: &[usize],
    p: f64,
    fpr_denominator: f64,
) -> Vec<(f64, f64)> {
    let values = saliency.values();
    let mut scored: Vec<(f64, bool)> = positives
        .iter()
        .map(|&i| (values[i], true))
        .chain(negatives.iter().map(|&i| (values[i], false)))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = Vec::with_capacity(scored.len() + 1);
    points.push((0.0, 0.0));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < scored.len() {
        let v = scored[i].0;
        while i < scored.len() && scored[i].0 == v {
            if scored[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / fpr_denominator, tp as f64 / p));
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    fn near(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Brute force: every distinct value is a threshold, counts done directly.
    fn brute_force_auc(map: &[f64], fixated: &[usize]) -> f64 {
        let mut thresholds: Vec<f64> = map.to_vec();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let p = fixated.len() as f64;
        let n = (map.len() - fixated.len()) as f64;
        let mut pts = vec![(0.0, 0.0)];
        for &t in &thresholds {
            let tp = fixated.iter().filter(|&&i| map[i] >= t).count() as f64;
            let fp = (0..map.len())
                .filter(|i| !fixated.contains(i) && map[*i] >= t)
                .count() as f64;
            pts.push((fp / n, tp / p));
        }
        trapezoid(&pts)
    }

    #[test]
    fn perfect_predictor_scores_one() {
        let fix = vec![3, 7, 8];
        let map = Raster::from_fn(4, 4, |x, y| if fix.contains(&(y * 4 + x)) { 1.0 } else { 0.0 });
        assert_eq!(roc_auc(&map, &fix, &RocConfig::default()).unwrap().auc, 1.0);
        assert_eq!(roc_auc(&map, &fix, &RocConfig::exact()).unwrap().auc, 1.0);
    }

    #[test]
    fn constant_predictor_is_chance() {
        let map = Raster::filled(5, 5, 0.3);
        let r = roc_auc(&map, &[0, 4, 12], &RocConfig::default()).unwrap();
        assert!(near(r.auc, 0.5, 1e-12));
        assert_eq!(r.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(r.points.last(), Some(&(1.0, 1.0)));
    }

    #[test]
    fn two_by_two_matches_enumeration() {
        let vals = vec![0.9, 0.1, 0.6, 0.2];
        let map = Raster::new(2, 2, vals.clone()).unwrap();
        let exact = roc_auc(&map, &[0], &RocConfig::exact()).unwrap();
        assert_eq!(exact.auc, brute_force_auc(&vals, &[0]));
        assert_eq!(exact.auc, 1.0);
        let coarse = roc_auc(&map, &[2], &RocConfig::exact()).unwrap();
        // 0.6 beats 0.1 and 0.2 but not 0.9
        assert_eq!(coarse.auc, brute_force_auc(&vals, &[2]));
        assert!(near(coarse.auc, 2.0 / 3.0, 1e-15));
    }

    #[test]
    fn errors_on_degenerate_sets() {
        let map = Raster::filled(2, 2, 0.5);
        assert!(matches!(roc_auc(&map, &[], &RocConfig::default()), Err(Error::EmptySelection(_))));
        assert!(matches!(
            roc_auc(&map, &[0, 1, 2, 3], &RocConfig::default()),
            Err(Error::Degenerate(_))
        ));
        assert!(roc_auc(&map, &[9], &RocConfig::default()).is_err());
    }

    #[test]
    fn threshold_bin_respects_ge_rule() {
        assert_eq!(threshold_bin(0.0, 256), 0);
        assert_eq!(threshold_bin(1.0, 256), 255);
        assert_eq!(threshold_bin(1.0 / 255.0, 256), 1);
        assert_eq!(threshold_bin(0.5, 3), 1);
        assert_eq!(threshold_bin(0.4999, 3), 0);
    }

    #[test]
    fn literal_fpr_variant_uses_positive_count() {
        let map = Raster::new(4, 1, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let cfg = RocConfig {
            fpr: FprDenominator::Positives,
            ..RocConfig::exact()
        };
        let r = roc_auc(&map, &[0], &cfg).unwrap();
        // three negatives over one positive: final fpr is 3
        assert_eq!(r.points.last(), Some(&(3.0, 1.0)));
    }

    #[test]
    fn negative_sampling_is_deterministic() {
        let map = Raster::from_fn(20, 20, |x, y| ((x * 7 + y * 13) % 17) as f64);
        let cfg = RocConfig {
            negative_sample: Some(NegativeSample { count: 50, seed: 9 }),
            ..RocConfig::exact()
        };
        let a = roc_auc(&map, &[5, 77, 301], &cfg).unwrap();
        let b = roc_auc(&map, &[5, 77, 301], &cfg).unwrap();
        assert_eq!(a, b);
    }
}
