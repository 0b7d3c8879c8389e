//! Group-level gaze analyses: explorativeness (histogram entropy of human
//! saliency maps), intra/inter group agreement as AUC, and center bias.

use log::{debug, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaze::{build_fixation_map, build_human_saliency_map, AgeGroup, CohortDataset};
use crate::raster::{normalize_raster, resize_bilinear, Raster};
use crate::roc::{roc_auc, RocConfig};

/// Shannon entropy in bits of the histogram of `map` over `num_bins`
/// equal-width bins on `[0, 1]`.
pub fn entropy(map: &Raster, num_bins: usize) -> Result<f64> {
    if num_bins < 2 {
        return Err(Error::param("entropy needs at least two bins"));
    }
    if map.is_empty() {
        return Err(Error::EmptySelection("entropy of an empty raster".into()));
    }
    let mut hist = vec![0usize; num_bins];
    for &v in map.values() {
        let bin = (v.clamp(0.0, 1.0) * num_bins as f64).floor() as usize;
        hist[bin.min(num_bins - 1)] += 1;
    }
    let total = map.len() as f64;
    Ok(hist
        .iter()
        .filter(|&&h| h > 0)
        .map(|&h| {
            let p = h as f64 / total;
            p * (1.0 / p).log2()
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyRow {
    pub group: AgeGroup,
    pub image_id: String,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupEntropy {
    pub group: AgeGroup,
    pub mean: f64,
    pub images: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorativenessReport {
    pub rows: Vec<EntropyRow>,
    pub groups: Vec<GroupEntropy>,
    /// Rank correlation between age order and mean entropy; `None` when
    /// fewer than two groups have data or the means are all tied.
    pub spearman: Option<f64>,
}

pub fn explorativeness_report(
    dataset: &CohortDataset,
    sigma: f64,
    num_bins: usize,
) -> Result<ExplorativenessReport> {
    let mut rows = Vec::new();
    let mut groups = Vec::new();
    for group in AgeGroup::ALL {
        let ids = dataset.images_with_group(group);
        if ids.is_empty() {
            warn!("group {group} has no fixations; skipped");
            continue;
        }
        let entropies = ids
            .par_iter()
            .map(|id| {
                let fix = build_fixation_map(dataset, group, id)?;
                entropy(&build_human_saliency_map(&fix, sigma)?, num_bins)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mean = entropies.iter().sum::<f64>() / entropies.len() as f64;
        for (id, e) in ids.iter().zip(&entropies) {
            rows.push(EntropyRow {
                group,
                image_id: id.to_string(),
                entropy: *e,
            });
        }
        groups.push(GroupEntropy {
            group,
            mean,
            images: ids.len(),
        });
    }
    let ordinals: Vec<f64> = groups.iter().map(|g| g.group.ordinal() as f64).collect();
    let means: Vec<f64> = groups.iter().map(|g| g.mean).collect();
    let spearman = spearman(&ordinals, &means);
    Ok(ExplorativenessReport {
        rows,
        groups,
        spearman,
    })
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation, `None` if undefined.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    pearson(&ranks(a), &ranks(b))
}

pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / (va * vb).sqrt())
}

/// Mean AUC of the source group's human saliency map against the target
/// group's pooled fixations, indexed `[source][target]` in age order.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementMatrix {
    pub score: [[f64; 4]; 4],
    /// Number of images contributing to each cell.
    pub images: [[usize; 4]; 4],
}

impl AgreementMatrix {
    pub fn get(&self, source: AgeGroup, target: AgeGroup) -> f64 {
        self.score[source.ordinal()][target.ordinal()]
    }

    /// Every diagonal entry strictly exceeds the off-diagonal entries of its row and column.
    pub fn diagonal_dominates(&self) -> bool {
        (0..4).all(|i| {
            (0..4)
                .filter(|&j| j != i)
                .all(|j| self.score[i][i] > self.score[i][j] && self.score[i][i] > self.score[j][i])
        })
    }
}

pub fn agreement_matrix(dataset: &CohortDataset, sigma: f64, roc: &RocConfig) -> Result<AgreementMatrix> {
    for g in AgeGroup::ALL {
        if !dataset.groups_present().contains(&g) {
            return Err(Error::EmptySelection(format!("agreement needs all four groups; {g} missing")));
        }
    }
    let ids: Vec<&str> = dataset.image_ids().collect();
    // per image: Option<auc> for each (source, target)
    let per_image = ids
        .par_iter()
        .map(|id| -> Result<[[Option<f64>; 4]; 4]> {
            let mut cells = [[None; 4]; 4];
            let mut targets: [Option<Vec<usize>>; 4] = Default::default();
            for g in AgeGroup::ALL {
                if dataset.has_fixations(g, id) {
                    targets[g.ordinal()] = Some(dataset.fixated_pixels(g, id)?);
                }
            }
            for source in AgeGroup::ALL {
                if targets[source.ordinal()].is_none() {
                    debug!("image {id}: no source map for {source}");
                    continue;
                }
                let map = build_human_saliency_map(&build_fixation_map(dataset, source, id)?, sigma)?;
                for target in AgeGroup::ALL {
                    if let Some(px) = &targets[target.ordinal()] {
                        cells[source.ordinal()][target.ordinal()] = Some(roc_auc(&map, px, roc)?.auc);
                    }
                }
            }
            Ok(cells)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut score = [[0.0; 4]; 4];
    let mut images = [[0usize; 4]; 4];
    for cells in &per_image {
        for s in 0..4 {
            for t in 0..4 {
                if let Some(v) = cells[s][t] {
                    score[s][t] += v;
                    images[s][t] += 1;
                }
            }
        }
    }
    for s in 0..4 {
        for t in 0..4 {
            if images[s][t] == 0 {
                return Err(Error::EmptySelection(format!(
                    "no image has fixations from both {} and {}",
                    AgeGroup::ALL[s],
                    AgeGroup::ALL[t]
                )));
            }
            if images[s][t] < ids.len() {
                warn!(
                    "agreement {}->{}: {} of {} images excluded",
                    AgeGroup::ALL[s],
                    AgeGroup::ALL[t],
                    ids.len() - images[s][t],
                    ids.len()
                );
            }
            score[s][t] /= images[s][t] as f64;
        }
    }
    Ok(AgreementMatrix { score, images })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterMap {
    pub group: AgeGroup,
    pub map: Raster,
}

/// Resolution every per-image map is brought to before averaging.
pub fn analysis_resolution(dataset: &CohortDataset) -> Result<(usize, usize)> {
    dataset
        .images()
        .first()
        .map(|i| i.image.dims())
        .ok_or_else(|| Error::EmptySelection("dataset has no images".into()))
}

/// Normalized pixel-wise mean of a group's human saliency maps.
pub fn build_center_map(dataset: &CohortDataset, group: AgeGroup, sigma: f64) -> Result<CenterMap> {
    let ids = dataset.images_with_group(group);
    if ids.is_empty() {
        return Err(Error::EmptySelection(format!("group {group} has no images")));
    }
    let (w, h) = analysis_resolution(dataset)?;
    let maps = ids
        .par_iter()
        .map(|id| {
            let s = build_human_saliency_map(&build_fixation_map(dataset, group, id)?, sigma)?;
            resize_bilinear(&s, w, h)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut acc = Raster::zeros(w, h);
    for m in &maps {
        acc.add_assign(m)?;
    }
    let mean = acc.scale(1.0 / maps.len() as f64);
    Ok(CenterMap {
        group,
        map: normalize_raster(&mean),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterBiasScore {
    pub group: AgeGroup,
    pub mean: f64,
    pub per_image: Vec<(String, f64)>,
}

/// For each group present: mean AUC of its center map against its fixations on each image.
pub fn center_bias_scores(dataset: &CohortDataset, sigma: f64, roc: &RocConfig) -> Result<Vec<CenterBiasScore>> {
    let mut out = Vec::new();
    for &group in dataset.groups_present() {
        let center = build_center_map(dataset, group, sigma)?;
        let ids = dataset.images_with_group(group);
        let per_image = ids
            .par_iter()
            .map(|id| {
                let img = dataset.image(id).expect("listed image exists");
                let map = resize_bilinear(&center.map, img.width(), img.height())?;
                let auc = roc_auc(&map, &dataset.fixated_pixels(group, id)?, roc)?.auc;
                Ok((id.to_string(), auc))
            })
            .collect::<Result<Vec<_>>>()?;
        let mean = per_image.iter().map(|(_, a)| a).sum::<f64>() / per_image.len() as f64;
        out.push(CenterBiasScore {
            group,
            mean,
            per_image,
        });
    }
    Ok(out)
}
