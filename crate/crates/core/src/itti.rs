//! Multi-scale center-surround features and the scale-subset saliency model.
//!
//! Nine-level Gaussian pyramids (levels 0..=8) are built for intensity, the
//! red/green and blue/yellow opponent channels, and Gabor orientation energy
//! at four orientations. Center levels 2, 3, 4 paired with surrounds three
//! and four levels coarser give six maps per channel, indexed 1 (finest) to
//! 6 (coarsest). A [`ScaleSubset`] `s` keeps maps `s..=6`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaze::{AgeGroup, CohortDataset};
use crate::learned::blend_center;
use crate::raster::{
    build_gaussian_pyramid, decimate, gaussian_blur, normalize_raster, resize_bilinear, ColorImage, Raster,
};
use crate::roc::{roc_auc, RocConfig};

pub const PYRAMID_LEVELS: usize = 9;
pub const COMBINATION_LEVEL: usize = 4;
pub const MIN_IMAGE_SIDE: usize = 128;
pub const ORIENTATIONS_DEG: [f64; 4] = [0.0, 45.0, 90.0, 135.0];
/// Local maxima below this fraction of the range are ignored by [`itti_normalize`].
pub const LOCAL_MAX_THRESHOLD: f64 = 0.1;
/// Feature maps whose value range is at most this are rounding residue and count as flat.
pub const FLAT_RANGE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScalePair {
    pub center: usize,
    pub surround: usize,
}

/// The six center-surround pairs, finest first.
pub const SCALE_PAIRS: [ScalePair; 6] = [
    ScalePair { center: 2, surround: 5 },
    ScalePair { center: 2, surround: 6 },
    ScalePair { center: 3, surround: 6 },
    ScalePair { center: 3, surround: 7 },
    ScalePair { center: 4, surround: 7 },
    ScalePair { center: 4, surround: 8 },
];

/// Start index `s` of a contiguous scale range `s..=6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScaleSubset(u8);

impl ScaleSubset {
    pub const FINEST: ScaleSubset = ScaleSubset(1);
    pub const COARSEST: ScaleSubset = ScaleSubset(6);

    pub fn new(start: usize) -> Result<Self> {
        if !(1..=6).contains(&start) {
            return Err(Error::param(format!("scale subset start must be in 1..=6, got {start}")));
        }
        Ok(ScaleSubset(start as u8))
    }

    pub fn all() -> impl Iterator<Item = ScaleSubset> {
        (1..=6).map(ScaleSubset)
    }

    pub fn start(self) -> usize {
        self.0 as usize
    }

    /// Zero-based indices into a six-entry feature list.
    pub fn indices(self) -> std::ops::Range<usize> {
        (self.start() - 1)..6
    }

    /// Label such as `3-6`.
    pub fn label(self) -> String {
        format!("{}-6", self.0)
    }

    /// Accepts `3` or `3-6`.
    pub fn parse(s: &str) -> Result<Self> {
        let head = s.trim().strip_suffix("-6").unwrap_or(s.trim());
        let start: usize = head
            .parse()
            .map_err(|_| Error::param(format!("cannot parse scale subset `{s}`")))?;
        ScaleSubset::new(start)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaborConfig {
    pub wavelength: f64,
    pub sigma: f64,
}

impl Default for GaborConfig {
    fn default() -> Self {
        GaborConfig {
            wavelength: 8.0,
            sigma: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub pair: ScalePair,
    pub map: Raster,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMaps {
    pub intensity: Vec<FeatureMap>,
    pub color_rg: Vec<FeatureMap>,
    pub color_by: Vec<FeatureMap>,
    /// One six-map list per entry of [`ORIENTATIONS_DEG`].
    pub orientation: [Vec<FeatureMap>; 4],
    pub input_dims: (usize, usize),
    pub combination_dims: (usize, usize),
}

impl FeatureMaps {
    pub fn count(&self) -> (usize, usize, usize) {
        (
            self.intensity.len(),
            self.color_rg.len() + self.color_by.len(),
            self.orientation.iter().map(Vec::len).sum(),
        )
    }

    pub fn all_maps(&self) -> impl Iterator<Item = &FeatureMap> {
        self.intensity
            .iter()
            .chain(&self.color_rg)
            .chain(&self.color_by)
            .chain(self.orientation.iter().flatten())
    }
}

/// Broadly tuned opponent channels. Chroma is zeroed where intensity is
/// below a tenth of the image maximum.
fn opponent_channels(image: &ColorImage) -> (Raster, Raster, Raster) {
    let (w, h) = image.dims();
    let intensity = Raster::from_fn(w, h, |x, y| {
        let [r, g, b] = image.pixel(x, y);
        (r + g + b) / 3.0
    });
    let floor = intensity.max() / 10.0;
    let mut rg = Raster::zeros(w, h);
    let mut by = Raster::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            if intensity.get(x, y) < floor {
                continue;
            }
            let [r, g, b] = image.pixel(x, y);
            let red = (r - (g + b) / 2.0).max(0.0);
            let green = (g - (r + b) / 2.0).max(0.0);
            let blue = (b - (r + g) / 2.0).max(0.0);
            let yellow = ((r + g) / 2.0 - (r - g).abs() / 2.0 - b).max(0.0);
            rg.set(x, y, red - green);
            by.set(x, y, blue - yellow);
        }
    }
    (intensity, rg, by)
}

/// Even and odd Gabor kernels, `(2r+1)^2` row-major. The even kernel has its
/// DC component removed.
pub fn gabor_kernels(config: &GaborConfig, theta_deg: f64) -> (Vec<f64>, Vec<f64>, usize) {
    let radius = (3.0 * config.sigma).ceil() as i64;
    let side = (2 * radius + 1) as usize;
    let theta = theta_deg.to_radians();
    let (st, ct) = theta.sin_cos();
    let k = 2.0 * PI / config.wavelength;
    let mut env = Vec::with_capacity(side * side);
    let mut even = Vec::with_capacity(side * side);
    let mut odd = Vec::with_capacity(side * side);
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let (x, y) = (dx as f64, dy as f64);
            let e = (-(x * x + y * y) / (2.0 * config.sigma * config.sigma)).exp();
            // carrier runs across stripes oriented at theta
            let phase = k * (x * st - y * ct);
            env.push(e);
            even.push(e * phase.cos());
            odd.push(e * phase.sin());
        }
    }
    let env_sum: f64 = env.iter().sum();
    let dc = even.iter().sum::<f64>() / env_sum;
    for (v, e) in even.iter_mut().zip(&env) {
        *v = (*v - dc * e) / env_sum;
    }
    for v in &mut odd {
        *v /= env_sum;
    }
    (even, odd, side)
}

/// 2-D correlation with edge replication, accumulated on differences from
/// the center pixel so zero-sum kernels give exact zeros on flat input.
fn convolve_2d_zero_sum(r: &Raster, kernel: &[f64], side: usize) -> Raster {
    let (w, h) = r.dims();
    let radius = (side / 2) as isize;
    let src = r.values();
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let center = src[y * w + x];
            let mut acc = 0.0;
            for ky in 0..side {
                let yy = (y as isize + ky as isize - radius).clamp(0, h as isize - 1) as usize;
                let row = &src[yy * w..(yy + 1) * w];
                let krow = &kernel[ky * side..(ky + 1) * side];
                for (kx, &kv) in krow.iter().enumerate() {
                    let xx = (x as isize + kx as isize - radius).clamp(0, w as isize - 1) as usize;
                    acc += kv * (row[xx] - center);
                }
            }
            out[y * w + x] = acc;
        }
    }
    Raster::new(w, h, out).expect("sized by construction")
}

fn gabor_energy(r: &Raster, even: &[f64], odd: &[f64], side: usize) -> Raster {
    let e = convolve_2d_zero_sum(r, even, side);
    let o = convolve_2d_zero_sum(r, odd, side);
    e.zip_with(&o, |a, b| (a * a + b * b).sqrt()).expect("same dims")
}

fn center_surround(pyramid: &[Raster]) -> Result<Vec<FeatureMap>> {
    SCALE_PAIRS
        .iter()
        .map(|&pair| {
            let c = &pyramid[pair.center];
            let s = resize_bilinear(&pyramid[pair.surround], c.width(), c.height())?;
            Ok(FeatureMap {
                pair,
                map: c.zip_with(&s, |a, b| (a - b).abs())?,
            })
        })
        .collect()
}

pub fn extract_feature_maps(image: &ColorImage) -> Result<FeatureMaps> {
    extract_feature_maps_with(image, &GaborConfig::default())
}

pub fn extract_feature_maps_with(image: &ColorImage, gabor: &GaborConfig) -> Result<FeatureMaps> {
    let (w, h) = image.dims();
    if w.min(h) < MIN_IMAGE_SIDE {
        return Err(Error::param(format!(
            "image {w}x{h} too small; both sides must be at least {MIN_IMAGE_SIDE}"
        )));
    }
    let (intensity, rg, by) = opponent_channels(image);
    let i_pyr = build_gaussian_pyramid(&intensity, PYRAMID_LEVELS)?;
    let rg_pyr = build_gaussian_pyramid(&rg, PYRAMID_LEVELS)?;
    let by_pyr = build_gaussian_pyramid(&by, PYRAMID_LEVELS)?;

    let orientation_maps = ORIENTATIONS_DEG
        .par_iter()
        .map(|&theta| {
            let (even, odd, side) = gabor_kernels(gabor, theta);
            let mut pyr: Vec<Raster> = Vec::with_capacity(PYRAMID_LEVELS);
            for (level, r) in i_pyr.iter().enumerate() {
                // levels 0 and 1 are never used as center or surround
                pyr.push(if level < 2 {
                    Raster::zeros(1, 1)
                } else {
                    gabor_energy(r, &even, &odd, side)
                });
            }
            center_surround(&pyr)
        })
        .collect::<Result<Vec<_>>>()?;
    let orientation: [Vec<FeatureMap>; 4] = orientation_maps
        .try_into()
        .expect("four orientations");

    Ok(FeatureMaps {
        intensity: center_surround(&i_pyr)?,
        color_rg: center_surround(&rg_pyr)?,
        color_by: center_surround(&by_pyr)?,
        orientation,
        input_dims: (w, h),
        combination_dims: i_pyr[COMBINATION_LEVEL].dims(),
    })
}

/// Range-normalize, then scale by `(1 - m)^2` where `m` is the mean of the
/// local maxima other than the global one. Only maxima at or above
/// [`LOCAL_MAX_THRESHOLD`] count; a pixel is a local maximum when it is `>=`
/// all 8 neighbours and strictly greater than at least one.
pub fn itti_normalize(map: &Raster) -> Raster {
    if map.max() - map.min() <= FLAT_RANGE {
        return Raster::zeros(map.width(), map.height());
    }
    let n = normalize_raster(map);
    let (w, h) = n.dims();
    let global = n.argmax();
    let mut sum = 0.0;
    let mut count = 0usize;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let v = n.values()[i];
            if i == global || v < LOCAL_MAX_THRESHOLD {
                continue;
            }
            let mut is_max = true;
            let mut strict = false;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (xx, yy) = (x as i64 + dx, y as i64 + dy);
                    if xx < 0 || yy < 0 || xx >= w as i64 || yy >= h as i64 {
                        continue;
                    }
                    let nv = n.get(xx as usize, yy as usize);
                    if nv > v {
                        is_max = false;
                    } else if nv < v {
                        strict = true;
                    }
                }
            }
            if is_max && strict {
                sum += v;
                count += 1;
            }
        }
    }
    let mean = if count == 0 { 0.0 } else { sum / count as f64 };
    let factor = (1.0 - mean) * (1.0 - mean);
    n.scale(factor)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConspicuityMaps {
    pub intensity: Raster,
    pub color: Raster,
    pub orientation: Raster,
    pub subset: ScaleSubset,
}

impl ConspicuityMaps {
    pub fn channels(&self) -> [&Raster; 3] {
        [&self.intensity, &self.color, &self.orientation]
    }
}

/// Brings a map to `dims` by repeated blur-and-decimate while that shrinks
/// it onto the target grid, and bilinear resampling otherwise.
pub fn across_scale(map: &Raster, dims: (usize, usize)) -> Result<Raster> {
    let mut m = map.clone();
    while m.dims() != dims && m.width() > dims.0 && m.height() > dims.1 {
        m = decimate(&gaussian_blur(&m, 1.0)?);
    }
    if m.dims() == dims {
        Ok(m)
    } else {
        resize_bilinear(&m, dims.0, dims.1)
    }
}

fn accumulate(acc: &mut Raster, map: &Raster) -> Result<()> {
    let m = across_scale(&itti_normalize(map), acc.dims())?;
    acc.add_assign(&m)
}

pub fn combine_conspicuity(features: &FeatureMaps, subset: ScaleSubset) -> Result<ConspicuityMaps> {
    let (w, h) = features.combination_dims;
    let mut intensity = Raster::zeros(w, h);
    let mut color = Raster::zeros(w, h);
    let mut orientation = Raster::zeros(w, h);
    for i in subset.indices() {
        accumulate(&mut intensity, &features.intensity[i].map)?;
        accumulate(&mut color, &features.color_rg[i].map)?;
        accumulate(&mut color, &features.color_by[i].map)?;
    }
    for per_theta in &features.orientation {
        let mut theta_sum = Raster::zeros(w, h);
        for i in subset.indices() {
            accumulate(&mut theta_sum, &per_theta[i].map)?;
        }
        orientation.add_assign(&theta_sum)?;
    }
    Ok(ConspicuityMaps {
        intensity: normalize_raster(&intensity),
        color: normalize_raster(&color),
        orientation: normalize_raster(&orientation),
        subset,
    })
}

/// Equal-weight saliency at input resolution, before any center blending.
pub fn linear_saliency(conspicuity: &ConspicuityMaps, input_dims: (usize, usize)) -> Result<Raster> {
    let mut sum = conspicuity.intensity.clone();
    sum.add_assign(&conspicuity.color)?;
    sum.add_assign(&conspicuity.orientation)?;
    let mean = normalize_raster(&sum.scale(1.0 / 3.0));
    let up = resize_bilinear(&mean, input_dims.0, input_dims.1)?;
    Ok(normalize_raster(&up))
}

pub fn saliency_sc_from_features(features: &FeatureMaps, subset: ScaleSubset, center_weight: f64) -> Result<Raster> {
    let consp = combine_conspicuity(features, subset)?;
    let s = linear_saliency(&consp, features.input_dims)?;
    blend_center(&s, center_weight)
}

/// Scale-subset saliency blended with the center surface:
/// `(1 - w_k) * S + w_k * C`.
pub fn saliency_sc(image: &ColorImage, subset: ScaleSubset, center_weight: f64) -> Result<Raster> {
    saliency_sc_from_features(&extract_feature_maps(image)?, subset, center_weight)
}

/// Feature maps for every image of a dataset, computed once.
pub struct FeatureCache {
    entries: Vec<(String, FeatureMaps)>,
}

impl FeatureCache {
    pub fn build(dataset: &CohortDataset) -> Result<Self> {
        let entries = dataset
            .images()
            .par_iter()
            .map(|img| Ok((img.id.clone(), extract_feature_maps(&img.image)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureCache { entries })
    }

    pub fn get(&self, image_id: &str) -> Option<&FeatureMaps> {
        self.entries.iter().find(|(id, _)| id == image_id).map(|(_, f)| f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetSelection<S> {
    pub best: S,
    /// Mean AUC for each evaluated subset, in the order given.
    pub scores: Vec<(S, f64)>,
}

/// Picks the highest score; exact ties go to the later entry of `ordered_fine_to_coarse`.
pub(crate) fn pick_best<S: Copy>(scores: &[(S, f64)]) -> Option<S> {
    let mut best: Option<(S, f64)> = None;
    for &(s, v) in scores.iter().rev() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((s, v));
        }
    }
    best.map(|(s, _)| s)
}

/// Mean AUC of [`saliency_sc`] per candidate subset against `group`'s
/// fixations; the best subset wins with ties going coarser.
pub fn select_best_subset(
    dataset: &CohortDataset,
    cache: &FeatureCache,
    group: AgeGroup,
    candidates: &[ScaleSubset],
    center_weight: f64,
    roc: &RocConfig,
) -> Result<SubsetSelection<ScaleSubset>> {
    let ids = dataset.images_with_group(group);
    if ids.is_empty() {
        return Err(Error::EmptySelection(format!("group {group} has no evaluation images")));
    }
    if candidates.is_empty() {
        return Err(Error::param("no candidate subsets"));
    }
    let mut ordered = candidates.to_vec();
    ordered.sort();
    ordered.dedup();
    let per_image = ids
        .par_iter()
        .map(|id| {
            let feats = cache
                .get(id)
                .ok_or_else(|| Error::param(format!("no cached features for `{id}`")))?;
            let px = dataset.fixated_pixels(group, id)?;
            ordered
                .iter()
                .map(|&s| Ok(roc_auc(&saliency_sc_from_features(feats, s, center_weight)?, &px, roc)?.auc))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<(ScaleSubset, f64)> = ordered
        .iter()
        .enumerate()
        .map(|(k, &s)| (s, per_image.iter().map(|row| row[k]).sum::<f64>() / per_image.len() as f64))
        .collect();
    let best = pick_best(&scores).expect("non-empty");
    Ok(SubsetSelection { best, scores })
}
