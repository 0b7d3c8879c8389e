//! Train/test splitting, predictor scoring and report assembly.

pub mod report;
pub mod synth;

use std::fmt;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gaze::{build_fixation_map, build_human_saliency_map, AgeGroup, CohortDataset};
use crate::itti::{saliency_sc_from_features, FeatureCache, ScaleSubset};
use crate::learned::{center_weight_surface, predict_sic_from_features, LinearModel};
use crate::patch::{patch_subset_map, PatchConfig, PatchSubset};
use crate::raster::Raster;
use crate::roc::{roc_auc, FprDenominator, RocConfig, Thresholds};

/// First `train_count` images in manifest order, then the rest.
pub fn split_dataset(dataset: &CohortDataset, train_count: usize) -> Result<(CohortDataset, CohortDataset)> {
    let ids: Vec<&str> = dataset.image_ids().collect();
    if train_count >= ids.len() {
        return Err(Error::param(format!(
            "train count {train_count} must be smaller than the {} available images",
            ids.len()
        )));
    }
    Ok((dataset.subset(&ids[..train_count])?, dataset.subset(&ids[train_count..])?))
}

/// Ordered key/value description of a run; its digest names the run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Fingerprint {
    entries: Vec<(String, String)>,
}

impl Fingerprint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn with_roc(self, roc: &RocConfig) -> Self {
        let thresholds = match roc.thresholds {
            Thresholds::Uniform(n) => n.to_string(),
            Thresholds::Exact => "exact".into(),
        };
        let fpr = match roc.fpr {
            FprDenominator::Negatives => "negatives",
            FprDenominator::Positives => "positives",
        };
        let s = self.with("thresholds", thresholds).with("fpr", fpr);
        match roc.negative_sample {
            Some(ns) => s.with("negatives", ns.count).with("negative_seed", ns.seed),
            None => s,
        }
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn canonical(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical().as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// `# fingerprint <digest> k=v ...` for CSV headers.
    pub fn header_line(&self) -> String {
        format!("# fingerprint {} {}", self.digest(), self.canonical())
    }
}

/// Anything that turns a stimulus into a saliency map.
pub trait Predictor: Sync {
    fn id(&self) -> String;
    fn predict(&self, dataset: &CohortDataset, image_id: &str) -> Result<Raster>;
}

fn image_of<'a>(dataset: &'a CohortDataset, image_id: &str) -> Result<&'a crate::raster::ColorImage> {
    dataset
        .image(image_id)
        .ok_or_else(|| Error::param(format!("unknown image `{image_id}`")))
}

/// The group's own smoothed fixations; an upper bound for the others.
pub struct HumanOracle {
    pub group: AgeGroup,
    pub sigma: f64,
}

impl Predictor for HumanOracle {
    fn id(&self) -> String {
        format!("human-{}", self.group)
    }

    fn predict(&self, dataset: &CohortDataset, image_id: &str) -> Result<Raster> {
        build_human_saliency_map(&build_fixation_map(dataset, self.group, image_id)?, self.sigma)
    }
}

pub struct ConstantPredictor;

impl Predictor for ConstantPredictor {
    fn id(&self) -> String {
        "constant".into()
    }

    fn predict(&self, dataset: &CohortDataset, image_id: &str) -> Result<Raster> {
        let (w, h) = image_of(dataset, image_id)?.dims();
        Ok(Raster::filled(w, h, 0.5))
    }
}

pub struct CenterPredictor;

impl Predictor for CenterPredictor {
    fn id(&self) -> String {
        "center".into()
    }

    fn predict(&self, dataset: &CohortDataset, image_id: &str) -> Result<Raster> {
        let (w, h) = image_of(dataset, image_id)?.dims();
        Ok(center_weight_surface(w, h))
    }
}

fn features_for<'c>(
    cache: Option<&'c FeatureCache>,
    dataset: &CohortDataset,
    image_id: &str,
    owned: &'c mut Option<crate::itti::FeatureMaps>,
) -> Result<&'c crate::itti::FeatureMaps> {
    if let Some(f) = cache.and_then(|c| c.get(image_id)) {
        return Ok(f);
    }
    Ok(owned.insert(crate::itti::extract_feature_maps(image_of(dataset, image_id)?)?))
}

/// Equal-weight center-surround saliency over a scale subset.
pub struct ScPredictor<'a> {
    pub subset: ScaleSubset,
    pub center_weight: f64,
    pub cache: Option<&'a FeatureCache>,
}

impl Predictor for ScPredictor<'_> {
    fn id(&self) -> String {
        format!("sc-{}-wk{}", self.subset.label(), self.center_weight)
    }

    fn predict(&self, dataset: &CohortDataset, image_id: &str) -> Result<Raster> {
        let mut owned = None;
        let feats = features_for(self.cache, dataset, image_id, &mut owned)?;
        saliency_sc_from_features(feats, self.subset, self.center_weight)
    }
}

/// Learned channel weights; `center_weight` overrides the model's own value.
pub struct SicPredictor<'a> {
    pub model: LinearModel,
    pub center_weight: Option<f64>,
    pub cache: Option<&'a FeatureCache>,
}

impl SicPredictor<'_> {
    pub fn effective_center_weight(&self) -> f64 {
        self.center_weight.unwrap_or(self.model.center_weight)
    }
}

impl Predictor for SicPredictor<'_> {
    fn id(&self) -> String {
        format!(
            "sic-{}-{}-wk{}",
            self.model.group,
            self.model.subset.label(),
            self.effective_center_weight()
        )
    }

    fn predict(&self, dataset: &CohortDataset, image_id: &str) -> Result<Raster> {
        let mut owned = None;
        let feats = features_for(self.cache, dataset, image_id, &mut owned)?;
        predict_sic_from_features(feats, &self.model, self.effective_center_weight())
    }
}

pub struct PatchPredictor {
    pub subset: PatchSubset,
    pub config: PatchConfig,
}

impl Predictor for PatchPredictor {
    fn id(&self) -> String {
        format!("patch-{}-d{}-wk{}", self.subset.label(), self.config.dimensions, self.config.center_weight)
    }

    fn predict(&self, dataset: &CohortDataset, image_id: &str) -> Result<Raster> {
        patch_subset_map(image_of(dataset, image_id)?, self.subset, &self.config)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageScore {
    pub image_id: String,
    pub auc: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub model_id: String,
    pub group: AgeGroup,
    /// Sorted by image id.
    pub per_image: Vec<ImageScore>,
    /// Mean over images that scored; `None` if none did.
    pub mean_auc: Option<f64>,
    pub fingerprint: Fingerprint,
}

impl EvalReport {
    pub fn failed(&self) -> impl Iterator<Item = &ImageScore> {
        self.per_image.iter().filter(|s| s.auc.is_none())
    }

    pub fn has_failures(&self) -> bool {
        self.failed().next().is_some()
    }
}

/// Scores `predictor` on every image of `dataset` that `group` fixated.
pub fn evaluate_model(
    predictor: &dyn Predictor,
    dataset: &CohortDataset,
    group: AgeGroup,
    roc: &RocConfig,
    fingerprint: Fingerprint,
) -> Result<EvalReport> {
    let mut ids = dataset.images_with_group(group);
    if ids.is_empty() {
        return Err(Error::EmptySelection(format!("group {group} has no fixations in the evaluation set")));
    }
    ids.sort_unstable();
    let per_image: Vec<ImageScore> = ids
        .par_iter()
        .map(|id| {
            let scored = predictor
                .predict(dataset, id)
                .and_then(|map| roc_auc(&map, &dataset.fixated_pixels(group, id)?, roc));
            match scored {
                Ok(r) => ImageScore {
                    image_id: id.to_string(),
                    auc: Some(r.auc),
                    error: None,
                },
                Err(e) => {
                    log::warn!("{} failed on `{id}`: {e}", predictor.id());
                    ImageScore {
                        image_id: id.to_string(),
                        auc: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    let ok: Vec<f64> = per_image.iter().filter_map(|s| s.auc).collect();
    let mean_auc = if ok.is_empty() {
        None
    } else {
        Some(ok.iter().sum::<f64>() / ok.len() as f64)
    };
    Ok(EvalReport {
        model_id: predictor.id(),
        group,
        per_image,
        mean_auc,
        fingerprint: fingerprint.with("model", predictor.id()).with("group", group),
    })
}
