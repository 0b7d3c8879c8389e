//! Per-group linear combination of conspicuity channels with a
//! distance-to-center prior.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaze::{build_fixation_map, build_human_saliency_map, AgeGroup, CohortDataset};
use crate::itti::{combine_conspicuity, ConspicuityMaps, FeatureCache, FeatureMaps, ScaleSubset};
use crate::raster::{normalize_raster, resize_bilinear, Raster};
use crate::roc::{roc_auc, RocConfig};

pub const CHANNELS: usize = 3;
pub const DEFAULT_SAMPLES_PER_IMAGE: usize = 10;
pub const DEFAULT_LAMBDA: f64 = 1e-2;
pub const DEFAULT_MAX_EPOCHS: usize = 2000;
const MODEL_HEADER: &str = "linear-model v1";

/// `1 - d / D` where `d` is the distance from `(x, y)` to the raster center
/// and `D` the center-to-corner distance.
pub fn center_weight_at(x: f64, y: f64, width: usize, height: usize) -> f64 {
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    let far = cx.hypot(cy);
    if far == 0.0 {
        return 1.0;
    }
    (1.0 - (x - cx).hypot(y - cy) / far).clamp(0.0, 1.0)
}

pub fn center_weight_surface(width: usize, height: usize) -> Raster {
    Raster::from_fn(width, height, |x, y| center_weight_at(x as f64, y as f64, width, height))
}

pub(crate) fn check_center_weight(w_k: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&w_k) {
        return Err(Error::param(format!("center weight must be in [0, 1], got {w_k}")));
    }
    Ok(())
}

/// `(1 - w_k) * map + w_k * C`.
pub fn blend_center(map: &Raster, w_k: f64) -> Result<Raster> {
    check_center_weight(w_k)?;
    if w_k == 0.0 {
        return Ok(map.clone());
    }
    let c = center_weight_surface(map.width(), map.height());
    map.zip_with(&c, |s, c| (1.0 - w_k) * s + w_k * c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub features: Vec<f64>,
    /// `+1` or `-1`.
    pub label: i8,
    pub group: Option<AgeGroup>,
    pub image_id: String,
    pub pixel: usize,
}

/// Conspicuity channels resized to `width x height`.
pub fn channels_at(conspicuity: &ConspicuityMaps, width: usize, height: usize) -> Result<[Raster; CHANNELS]> {
    let [i, c, o] = conspicuity.channels();
    Ok([
        resize_bilinear(i, width, height)?,
        resize_bilinear(c, width, height)?,
        resize_bilinear(o, width, height)?,
    ])
}

/// `P` positives at the highest human-saliency pixels and `P` negatives at
/// the lowest. Pixels are ranked by value, ties by row-major index.
pub fn extract_training_samples(
    human_map: &Raster,
    conspicuity: &ConspicuityMaps,
    p: usize,
) -> Result<Vec<TrainingSample>> {
    if p == 0 {
        return Err(Error::param("samples per image must be at least 1"));
    }
    let n = human_map.len();
    if 2 * p > n {
        return Err(Error::param(format!("{} samples requested from a {n}-pixel map", 2 * p)));
    }
    let channels = channels_at(conspicuity, human_map.width(), human_map.height())?;
    let values = human_map.values();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let sample = |pixel: usize, label: i8| TrainingSample {
        features: channels.iter().map(|ch| ch.values()[pixel]).collect(),
        label,
        group: None,
        image_id: String::new(),
        pixel,
    };
    let mut out: Vec<TrainingSample> = order[..p].iter().map(|&px| sample(px, 1)).collect();
    out.extend(order[n - p..].iter().map(|&px| sample(px, -1)));
    Ok(out)
}

/// Weights and bias of a linear scorer plus solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    /// Primal objective after each epoch, starting from the zero model.
    pub objective_history: Vec<f64>,
    pub training_accuracy: f64,
    pub epochs: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rows augmented with a constant 1 so the bias is the last weight.
fn augmented(samples: &[TrainingSample]) -> Vec<Vec<f64>> {
    samples
        .iter()
        .map(|s| s.features.iter().copied().chain(std::iter::once(1.0)).collect())
        .collect()
}

/// `lambda * |w|^2 + mean(max(0, 1 - y w.x))` over augmented rows.
fn primal_objective(w: &[f64], rows: &[Vec<f64>], labels: &[f64], lambda: f64) -> f64 {
    let loss: f64 = rows
        .iter()
        .zip(labels)
        .map(|(x, &y)| (1.0 - y * dot(w, x)).max(0.0))
        .sum();
    lambda * dot(w, w) + loss / rows.len() as f64
}

/// Minimizer over `t` in `[0, 1]` of the primal along `from + t * dir`.
fn line_search(from: &[f64], dir: &[f64], rows: &[Vec<f64>], labels: &[f64], lambda: f64) -> f64 {
    let n = rows.len() as f64;
    // margin violation along the segment is a_i - t c_i
    let terms: Vec<(f64, f64)> = rows
        .iter()
        .zip(labels)
        .map(|(x, &y)| (1.0 - y * dot(from, x), y * dot(dir, x)))
        .collect();
    let quad = 2.0 * lambda * dot(dir, dir);
    let lin = 2.0 * lambda * dot(from, dir);
    let slope = |t: f64, probe: f64| {
        let hinge: f64 = terms.iter().filter(|(a, c)| a - probe * c > 0.0).map(|(_, c)| c).sum();
        quad * t + lin - hinge / n
    };
    let mut knots: Vec<f64> = terms
        .iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|(a, c)| a / c)
        .filter(|t| *t > 0.0 && *t < 1.0)
        .collect();
    knots.push(0.0);
    knots.push(1.0);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    for seg in knots.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        let mid = (lo + hi) / 2.0;
        let at_lo = slope(lo, mid);
        if at_lo >= 0.0 {
            return lo;
        }
        let at_hi = slope(hi, mid);
        if at_hi > 0.0 {
            return (lo - at_lo * (hi - lo) / (at_hi - at_lo)).clamp(lo, hi);
        }
    }
    1.0
}

/// L2-regularized hinge-loss linear classifier, `lambda * |w|^2 + mean hinge`
/// with the bias included in `w`.
///
/// Dual coordinate descent in fixed cyclic order drives the search; after
/// every epoch the reported model moves to the best point on the segment
/// toward the dual iterate, so the objective history never increases.
pub fn train_linear_model(samples: &[TrainingSample], lambda: f64) -> Result<LinearFit> {
    train_linear_model_with(samples, lambda, DEFAULT_MAX_EPOCHS, 1e-9)
}

pub fn train_linear_model_with(
    samples: &[TrainingSample],
    lambda: f64,
    max_epochs: usize,
    tolerance: f64,
) -> Result<LinearFit> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param(format!("lambda must be positive, got {lambda}")));
    }
    if samples.is_empty() {
        return Err(Error::Training("no training samples".into()));
    }
    let dim = samples[0].features.len();
    if samples.iter().any(|s| s.features.len() != dim) {
        return Err(Error::Dimension("training samples have differing feature counts".into()));
    }
    if samples.iter().any(|s| s.features.iter().any(|v| !v.is_finite())) {
        return Err(Error::Training("non-finite feature value".into()));
    }
    if samples.iter().any(|s| s.label != 1 && s.label != -1) {
        return Err(Error::Training("labels must be +1 or -1".into()));
    }
    let has_pos = samples.iter().any(|s| s.label == 1);
    let has_neg = samples.iter().any(|s| s.label == -1);
    if !(has_pos && has_neg) {
        return Err(Error::Training("training samples contain a single class".into()));
    }

    let rows = augmented(samples);
    let labels: Vec<f64> = samples.iter().map(|s| s.label as f64).collect();
    let n = rows.len();
    let upper = 1.0 / (2.0 * lambda * n as f64);
    let diag: Vec<f64> = rows.iter().map(|x| dot(x, x)).collect();

    let mut alpha = vec![0.0; n];
    let mut w_dual = vec![0.0; dim + 1];
    let mut w = vec![0.0; dim + 1];
    let mut objective = primal_objective(&w, &rows, &labels, lambda);
    let mut history = vec![objective];
    let mut epochs = 0;

    while epochs < max_epochs {
        epochs += 1;
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            let g = labels[i] * dot(&w_dual, &rows[i]) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == upper {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 && diag[i] > 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / diag[i]).clamp(0.0, upper);
                let step = (alpha[i] - old) * labels[i];
                for (wj, xj) in w_dual.iter_mut().zip(&rows[i]) {
                    *wj += step * xj;
                }
            }
        }
        let dir: Vec<f64> = w_dual.iter().zip(&w).map(|(d, c)| d - c).collect();
        let t = line_search(&w, &dir, &rows, &labels, lambda);
        let candidate: Vec<f64> = w.iter().zip(&dir).map(|(c, d)| c + t * d).collect();
        let cand_obj = primal_objective(&candidate, &rows, &labels, lambda);
        if cand_obj <= objective {
            w = candidate;
            objective = cand_obj;
        }
        history.push(objective);
        if pg_max - pg_min <= tolerance {
            break;
        }
    }

    let bias = w[dim];
    w.truncate(dim);
    let correct = samples
        .iter()
        .filter(|s| {
            let score = dot(&w, &s.features) + bias;
            (score > 0.0) == (s.label == 1)
        })
        .count();
    Ok(LinearFit {
        weights: w,
        bias,
        lambda,
        objective_history: history,
        training_accuracy: correct as f64 / n as f64,
        epochs,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub group: AgeGroup,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub subset: ScaleSubset,
    pub center_weight: f64,
    pub lambda: f64,
}

impl LinearModel {
    pub fn from_fit(fit: &LinearFit, group: AgeGroup, subset: ScaleSubset, center_weight: f64) -> Self {
        LinearModel {
            group,
            weights: fit.weights.clone(),
            bias: fit.bias,
            subset,
            center_weight,
            lambda: fit.lambda,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{MODEL_HEADER}").unwrap();
        writeln!(s, "group {}", self.group).unwrap();
        writeln!(s, "subset {}", self.subset.start()).unwrap();
        writeln!(s, "channels {}", self.weights.len()).unwrap();
        for w in &self.weights {
            writeln!(s, "weight {w}").unwrap();
        }
        writeln!(s, "bias {}", self.bias).unwrap();
        writeln!(s, "center_weight {}", self.center_weight).unwrap();
        writeln!(s, "lambda {}", self.lambda).unwrap();
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::ModelFormat(msg);
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some(MODEL_HEADER) {
            return Err(bad(format!("missing `{MODEL_HEADER}` header")));
        }
        let mut field = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad(format!("missing `{key}` line")))?;
            let (k, v) = line
                .split_once(' ')
                .ok_or_else(|| bad(format!("malformed line `{line}`")))?;
            if k != key {
                return Err(bad(format!("expected `{key}`, found `{k}`")));
            }
            Ok(v.trim().to_string())
        };
        let real = |s: String, key: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| bad(format!("`{key}` is not a number: `{s}`")))?;
            if !v.is_finite() {
                return Err(bad(format!("`{key}` must be finite")));
            }
            Ok(v)
        };
        let group: AgeGroup = field("group")?.parse().map_err(|e: Error| bad(e.to_string()))?;
        let subset_start: usize = field("subset")?
            .parse()
            .map_err(|_| bad("`subset` is not an integer".into()))?;
        let subset = ScaleSubset::new(subset_start).map_err(|e| bad(e.to_string()))?;
        let channels: usize = field("channels")?
            .parse()
            .map_err(|_| bad("`channels` is not an integer".into()))?;
        if channels != CHANNELS {
            return Err(bad(format!("expected {CHANNELS} channels, found {channels}")));
        }
        let mut weights = Vec::with_capacity(channels);
        for _ in 0..channels {
            weights.push(real(field("weight")?, "weight")?);
        }
        let bias = real(field("bias")?, "bias")?;
        let center_weight = real(field("center_weight")?, "center_weight")?;
        check_center_weight(center_weight).map_err(|e| bad(e.to_string()))?;
        let lambda = real(field("lambda")?, "lambda")?;
        if lines.next().is_some() {
            return Err(bad("trailing content after `lambda`".into()));
        }
        Ok(LinearModel {
            group,
            weights,
            bias,
            subset,
            center_weight,
            lambda,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Range-normalized `w . X + b` at input resolution, before center blending.
pub fn linear_score_map(features: &FeatureMaps, weights: &[f64], bias: f64, subset: ScaleSubset) -> Result<Raster> {
    if weights.len() != CHANNELS {
        return Err(Error::Dimension(format!(
            "model has {} weights, features have {CHANNELS} channels",
            weights.len()
        )));
    }
    let consp = combine_conspicuity(features, subset)?;
    let (w, h) = features.input_dims;
    let channels = channels_at(&consp, w, h)?;
    let mut score = Raster::filled(w, h, bias);
    for (ch, &wt) in channels.iter().zip(weights) {
        score.add_assign(&ch.scale(wt))?;
    }
    Ok(normalize_raster(&score))
}

pub fn predict_sic_from_features(features: &FeatureMaps, model: &LinearModel, w_k: f64) -> Result<Raster> {
    let s = linear_score_map(features, &model.weights, model.bias, model.subset)?;
    blend_center(&s, w_k)
}

pub fn predict_sic(image: &crate::raster::ColorImage, model: &LinearModel, w_k: f64) -> Result<Raster> {
    predict_sic_from_features(&crate::itti::extract_feature_maps(image)?, model, w_k)
}

/// `0, 0.05, ..., 0.5`.
pub fn default_center_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 * 0.05).collect()
}

/// Grid value of `w_k` maximizing mean AUC of the model over `dataset`
/// for `group`; ties go to the smaller value.
pub fn fit_group_center_weight(
    dataset: &CohortDataset,
    cache: &FeatureCache,
    group: AgeGroup,
    model: &LinearModel,
    grid: &[f64],
    roc: &RocConfig,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::param("center weight grid is empty"));
    }
    for &g in grid {
        check_center_weight(g)?;
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    let ids = dataset.images_with_group(group);
    if ids.is_empty() {
        return Err(Error::EmptySelection(format!("group {group} has no training images")));
    }
    let per_image = ids
        .par_iter()
        .map(|id| {
            let feats = cached(cache, id)?;
            let px = dataset.fixated_pixels(group, id)?;
            let s = linear_score_map(feats, &model.weights, model.bias, model.subset)?;
            grid.iter()
                .map(|&wk| Ok(roc_auc(&blend_center(&s, wk)?, &px, roc)?.auc))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = (grid[0], f64::NEG_INFINITY);
    for (k, &wk) in grid.iter().enumerate() {
        let mean = per_image.iter().map(|r| r[k]).sum::<f64>() / per_image.len() as f64;
        if mean > best.1 {
            best = (wk, mean);
        }
    }
    Ok(best.0)
}

pub(crate) fn cached<'a>(cache: &'a FeatureCache, id: &str) -> Result<&'a FeatureMaps> {
    cache
        .get(id)
        .ok_or_else(|| Error::param(format!("no cached features for `{id}`")))
}

/// Samples from every image in `dataset` that `group` fixated, in manifest order.
pub fn collect_group_samples(
    dataset: &CohortDataset,
    cache: &FeatureCache,
    group: AgeGroup,
    subset: ScaleSubset,
    sigma: f64,
    p: usize,
) -> Result<Vec<TrainingSample>> {
    let ids = dataset.images_with_group(group);
    if ids.is_empty() {
        return Err(Error::EmptySelection(format!("group {group} has no training images")));
    }
    let per_image = ids
        .par_iter()
        .map(|id| {
            let human = build_human_saliency_map(&build_fixation_map(dataset, group, id)?, sigma)?;
            let consp = combine_conspicuity(cached(cache, id)?, subset)?;
            let mut samples = extract_training_samples(&human, &consp, p)?;
            for s in &mut samples {
                s.group = Some(group);
                s.image_id = id.to_string();
            }
            Ok(samples)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_image.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub subset: ScaleSubset,
    pub sigma: f64,
    pub samples_per_image: usize,
    pub lambda: f64,
    pub center_grid: Vec<f64>,
    pub roc: RocConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            subset: ScaleSubset::FINEST,
            sigma: crate::gaze::DEFAULT_SIGMA,
            samples_per_image: DEFAULT_SAMPLES_PER_IMAGE,
            lambda: DEFAULT_LAMBDA,
            center_grid: default_center_grid(),
            roc: RocConfig::default(),
        }
    }
}

/// Samples, fits and tunes `w_k` for one group on a training dataset.
pub fn train_group_model(
    train: &CohortDataset,
    cache: &FeatureCache,
    group: AgeGroup,
    config: &TrainConfig,
) -> Result<(LinearModel, LinearFit)> {
    let samples = collect_group_samples(train, cache, group, config.subset, config.sigma, config.samples_per_image)?;
    let fit = train_linear_model(&samples, config.lambda)?;
    let mut model = LinearModel::from_fit(&fit, group, config.subset, 0.0);
    model.center_weight = fit_group_center_weight(train, cache, group, &model, &config.center_grid, &config.roc)?;
    Ok((model, fit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(features: Vec<f64>, label: i8) -> TrainingSample {
        TrainingSample {
            features,
            label,
            group: None,
            image_id: String::new(),
            pixel: 0,
        }
    }

    #[test]
    fn center_surface_landmarks() {
        let c = center_weight_surface(101, 101);
        assert_eq!(c.get(50, 50), 1.0);
        assert_eq!(c.get(0, 0), 0.0);
        assert_eq!(c.get(100, 100), 0.0);
        assert!((c.get(25, 25) - 0.5).abs() < 1e-9);
        assert_eq!(center_weight_surface(1, 1).get(0, 0), 1.0);
        let even = center_weight_surface(4, 6);
        assert!(even.values().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(even.get(0, 0), 0.0);
    }

    #[test]
    fn blend_extremes_and_bounds() {
        let s = Raster::from_fn(9, 7, |x, y| ((x * 3 + y) % 5) as f64 / 4.0);
        assert_eq!(blend_center(&s, 0.0).unwrap(), s);
        assert_eq!(blend_center(&s, 1.0).unwrap(), center_weight_surface(9, 7));
        assert!(blend_center(&s, 1.5).is_err());
        assert!(blend_center(&s, -0.1).is_err());
    }

    proptest! {
        #[test]
        fn blend_increases_center_value(s_center in 0.0f64..0.999, a in 0.0f64..0.99, b in 0.0f64..0.99) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-6);
            let mut s = Raster::zeros(11, 9);
            s.set(5, 4, s_center);
            let at = |wk| blend_center(&s, wk).unwrap().get(5, 4);
            prop_assert!(at(hi) > at(lo));
        }
    }

    fn consp_from(i: Raster, c: Raster, o: Raster) -> ConspicuityMaps {
        ConspicuityMaps {
            intensity: i,
            color: c,
            orientation: o,
            subset: ScaleSubset::FINEST,
        }
    }

    #[test]
    fn extracts_unique_extremes() {
        let human = Raster::new(3, 2, vec![0.2, 0.9, 0.4, 0.0, 0.5, 0.3]).unwrap();
        let ch = Raster::from_fn(3, 2, |x, y| (y * 3 + x) as f64);
        let s = extract_training_samples(&human, &consp_from(ch.clone(), ch.clone(), ch), 1).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].pixel, s[0].label), (1, 1));
        assert_eq!((s[1].pixel, s[1].label), (3, -1));
        assert_eq!(s[0].features, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn extraction_balance_and_tie_rule() {
        let human = Raster::filled(8, 5, 0.7);
        let ch = Raster::zeros(8, 5);
        let s = extract_training_samples(&human, &consp_from(ch.clone(), ch.clone(), ch), 10).unwrap();
        assert_eq!(s.len(), 20);
        let pos: Vec<usize> = s.iter().filter(|t| t.label == 1).map(|t| t.pixel).collect();
        let neg: Vec<usize> = s.iter().filter(|t| t.label == -1).map(|t| t.pixel).collect();
        assert_eq!(pos, (0..10).collect::<Vec<_>>());
        assert_eq!(neg, (30..40).collect::<Vec<_>>());
        let small = Raster::zeros(3, 3);
        assert!(extract_training_samples(&small, &consp_from(small.clone(), small.clone(), small.clone()), 5).is_err());
    }

    #[test]
    fn separable_one_dimensional() {
        let samples: Vec<_> = (0..6)
            .map(|k| if k % 2 == 0 { sample(vec![1.0], 1) } else { sample(vec![0.0], -1) })
            .collect();
        let fit = train_linear_model(&samples, 1e-3).unwrap();
        assert!(fit.weights[0] > 0.0);
        assert_eq!(fit.training_accuracy, 1.0);
    }

    #[test]
    fn xor_is_not_separable() {
        let samples = vec![
            sample(vec![0.0, 0.0], -1),
            sample(vec![1.0, 1.0], -1),
            sample(vec![0.0, 1.0], 1),
            sample(vec![1.0, 0.0], 1),
        ];
        let fit = train_linear_model(&samples, 1e-2).unwrap();
        assert!(fit.training_accuracy <= 0.75);
    }

    #[test]
    fn single_class_is_an_error() {
        let samples = vec![sample(vec![0.0], 1), sample(vec![1.0], 1)];
        assert!(matches!(train_linear_model(&samples, 1e-2), Err(Error::Training(_))));
    }

    fn margin_axis_samples() -> Vec<TrainingSample> {
        let noise = [-0.8, -0.3, 0.1, 0.5, 0.9, -0.6, 0.35, -0.05];
        let mut out = Vec::new();
        for (k, &n2) in noise.iter().enumerate() {
            let off = 0.05 * k as f64;
            out.push(sample(vec![1.0 + off, n2], 1));
            out.push(sample(vec![-1.0 - off, n2], -1));
        }
        out
    }

    #[test]
    fn margin_axis_dominates_weight() {
        let samples = margin_axis_samples();
        let fit = train_linear_model(&samples, 1e-3).unwrap();
        assert!(fit.weights[0].abs() >= 10.0 * fit.weights[1].abs(), "{:?}", fit.weights);
    }

    #[test]
    fn weight_direction_matches_grid_search() {
        // the best unit direction by margin over a fine angle grid sits on axis 1
        let samples = margin_axis_samples();
        let margin = |th: f64| {
            let (s, c) = th.sin_cos();
            samples
                .iter()
                .map(|t| t.label as f64 * (c * t.features[0] + s * t.features[1]))
                .fold(f64::INFINITY, f64::min)
        };
        let best = (0..3600)
            .map(|k| k as f64 * std::f64::consts::TAU / 3600.0)
            .max_by(|a, b| margin(*a).total_cmp(&margin(*b)))
            .unwrap();
        let fit = train_linear_model(&samples, 1e-3).unwrap();
        let th = fit.weights[1].atan2(fit.weights[0]);
        assert!(best.cos() > 0.99 && th.cos() > 0.99);
    }

    #[test]
    fn objective_never_increases_and_converges() {
        let samples: Vec<_> = (0..60)
            .map(|k| {
                let a = ((k * 37) % 17) as f64 / 17.0;
                let b = ((k * 11) % 13) as f64 / 13.0;
                let label = if a + 0.3 * b + 0.1 * ((k % 3) as f64) > 0.6 { 1 } else { -1 };
                sample(vec![a, b, (a * b).sqrt()], label)
            })
            .collect();
        let fit = train_linear_model(&samples, 1e-2).unwrap();
        for pair in fit.objective_history.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
        // the converged objective beats a coarse search around the solution
        let rows = augmented(&samples);
        let labels: Vec<f64> = samples.iter().map(|s| s.label as f64).collect();
        let mut w = fit.weights.clone();
        w.push(fit.bias);
        let best = primal_objective(&w, &rows, &labels, 1e-2);
        for j in 0..w.len() {
            for step in [-1e-3, 1e-3] {
                let mut probe = w.clone();
                probe[j] += step;
                assert!(primal_objective(&probe, &rows, &labels, 1e-2) >= best - 1e-9);
            }
        }
        let again = train_linear_model(&samples, 1e-2).unwrap();
        assert_eq!(fit, again);
    }

    #[test]
    fn model_text_round_trips_bit_exact() {
        let model = LinearModel {
            group: AgeGroup::Adult,
            weights: vec![0.1 + 0.2, -1.0 / 3.0, 5e-300],
            bias: -0.0,
            subset: ScaleSubset::new(4).unwrap(),
            center_weight: 0.35,
            lambda: 1e-2,
        };
        let text = model.to_text();
        let back = LinearModel::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
        for (a, b) in back.weights.iter().zip(&model.weights) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.bias.to_bits(), model.bias.to_bits());
        assert!(LinearModel::from_text("linear-model v2\n").is_err());
        assert!(LinearModel::from_text(&text.replace("channels 3", "channels 2")).is_err());
    }

    #[test]
    fn one_hot_weights_reproduce_a_channel() {
        use crate::itti::extract_feature_maps;
        use crate::raster::ColorImage;
        let img = ColorImage::from_fn(160, 128, |x, y| {
            let v = 0.5 + 0.3 * ((x as f64) / 7.0).sin() * ((y as f64) / 11.0).cos();
            [v, 0.4, 1.0 - v]
        });
        let feats = extract_feature_maps(&img).unwrap();
        let consp = combine_conspicuity(&feats, ScaleSubset::FINEST).unwrap();
        let [i, _, o] = channels_at(&consp, 160, 128).unwrap();
        let model = |w: Vec<f64>| LinearModel {
            group: AgeGroup::Y4,
            weights: w,
            bias: 0.0,
            subset: ScaleSubset::FINEST,
            center_weight: 0.0,
            lambda: 1e-2,
        };
        let pi = predict_sic_from_features(&feats, &model(vec![1.0, 0.0, 0.0]), 0.0).unwrap();
        assert_eq!(pi, normalize_raster(&i));
        let po = predict_sic_from_features(&feats, &model(vec![0.0, 0.0, 1.0]), 0.0).unwrap();
        assert_eq!(po, normalize_raster(&o));
        let full = predict_sic_from_features(&feats, &model(vec![0.3, 0.3, 0.3]), 1.0).unwrap();
        assert_eq!(full, center_weight_surface(160, 128));
        assert!(predict_sic_from_features(&feats, &model(vec![1.0, 0.0]), 0.0).is_err());
    }
}
