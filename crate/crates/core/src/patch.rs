//! Patch dissimilarity saliency in a PCA-reduced feature space.
//!
//! An image is tiled into non-overlapping `t x t` patches. Each patch becomes
//! a column of `5 t^2` features (CIE L*a*b* planes, then the horizontal and
//! vertical L* gradients). Columns are projected onto the top `d` principal
//! directions and each patch scores the spatially discounted distance to
//! its neighbours.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaze::{AgeGroup, CohortDataset};
use crate::itti::{pick_best, SubsetSelection};
use crate::learned::{center_weight_at, check_center_weight};
use crate::linalg::symmetric_eigen;
use crate::raster::{normalize_raster, resize_bilinear, ColorImage, Raster};
use crate::roc::{roc_auc, RocConfig};

pub const PATCH_SIZES: [usize; 4] = [8, 16, 32, 64];
pub const FEATURE_PLANES: usize = 5;
pub const DEFAULT_DIMENSIONS: usize = 10;

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// sRGB in `[0, 1]` to CIE L*a*b* under a D65 white point.
pub fn srgb_to_lab([r, g, b]: [f64; 3]) -> [f64; 3] {
    let (r, g, b) = (srgb_to_linear(r), srgb_to_linear(g), srgb_to_linear(b));
    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    let (fx, fy, fz) = (lab_f(x / 0.95047), lab_f(y), lab_f(z / 1.08883));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// L*, a*, b*, dL/dx, dL/dy planes. Gradients are central differences with
/// edge replication.
pub fn feature_planes(image: &ColorImage) -> [Raster; FEATURE_PLANES] {
    let (w, h) = image.dims();
    let mut l = Raster::zeros(w, h);
    let mut a = Raster::zeros(w, h);
    let mut b = Raster::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let [ll, aa, bb] = srgb_to_lab(image.pixel(x, y));
            l.set(x, y, ll);
            a.set(x, y, aa);
            b.set(x, y, bb);
        }
    }
    // difference form keeps flat regions exactly zero
    let ix = Raster::from_fn(w, h, |x, y| (l.get((x + 1).min(w - 1), y) - l.get(x.saturating_sub(1), y)) / 2.0);
    let iy = Raster::from_fn(w, h, |x, y| (l.get(x, (y + 1).min(h - 1)) - l.get(x, y.saturating_sub(1))) / 2.0);
    [l, a, b, ix, iy]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchFeatureMatrix {
    pub patch_size: usize,
    pub cols: usize,
    pub rows: usize,
    pub image_dims: (usize, usize),
    /// One feature vector per patch, patches in row-major grid order.
    pub columns: Vec<Vec<f64>>,
}

impl PatchFeatureMatrix {
    pub fn patch_count(&self) -> usize {
        self.columns.len()
    }

    pub fn feature_len(&self) -> usize {
        FEATURE_PLANES * self.patch_size * self.patch_size
    }

    pub fn grid_position(&self, patch: usize) -> (usize, usize) {
        (patch % self.cols, patch / self.cols)
    }
}

pub fn check_patch_size(t: usize) -> Result<()> {
    if !PATCH_SIZES.contains(&t) {
        return Err(Error::param(format!("patch size must be one of {PATCH_SIZES:?}, got {t}")));
    }
    Ok(())
}

pub fn build_patch_matrix(image: &ColorImage, t: usize) -> Result<PatchFeatureMatrix> {
    check_patch_size(t)?;
    let (w, h) = image.dims();
    if w < t || h < t {
        return Err(Error::param(format!("patch size {t} exceeds image {w}x{h}")));
    }
    let planes = feature_planes(image);
    let (cols, rows) = (w / t, h / t);
    let columns = (0..cols * rows)
        .into_par_iter()
        .map(|p| {
            let (px, py) = (p % cols * t, p / cols * t);
            let mut f = Vec::with_capacity(FEATURE_PLANES * t * t);
            for plane in &planes {
                for y in py..py + t {
                    f.extend_from_slice(&plane.values()[y * w + px..y * w + px + t]);
                }
            }
            f
        })
        .collect();
    Ok(PatchFeatureMatrix {
        patch_size: t,
        cols,
        rows,
        image_dims: (w, h),
        columns,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    pub mean: Vec<f64>,
    /// Orthonormal principal directions, strongest first.
    pub vectors: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl PcaBasis {
    pub fn dimension(&self) -> usize {
        self.vectors.len()
    }

    pub fn project(&self, column: &[f64]) -> Vec<f64> {
        self.vectors
            .iter()
            .map(|v| v.iter().zip(column).zip(&self.mean).map(|((e, x), m)| e * (x - m)).sum())
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Flips `v` so its largest-magnitude entry (first on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut k = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[k].abs() {
            k = i;
        }
    }
    if v[k] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Orthonormalizes `v` against `basis` (two passes); `None` if little is left.
fn orthonormalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    for _ in 0..2 {
        for b in basis {
            let p = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
    }
    let norm = dot(&v, &v).sqrt();
    if norm < 1e-6 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

/// Top `d` eigenpairs of the covariance of the mean-centered columns,
/// `C = Xc Xc^T / (n - 1)`.
///
/// When there are fewer patches than features the eigenproblem is solved on
/// the `n x n` Gram matrix and mapped back; directions of zero variance are
/// then completed by Gram-Schmidt.
pub fn pca_basis(matrix: &PatchFeatureMatrix, d: usize) -> Result<PcaBasis> {
    pca_of_columns(&matrix.columns, d)
}

pub fn pca_of_columns(columns: &[Vec<f64>], d: usize) -> Result<PcaBasis> {
    let n = columns.len();
    if n < 2 {
        return Err(Error::param("principal components need at least two columns"));
    }
    let f = columns[0].len();
    if columns.iter().any(|c| c.len() != f) {
        return Err(Error::Dimension("columns differ in length".into()));
    }
    if d == 0 || d > f.min(n) {
        return Err(Error::param(format!("dimension d must be in 1..={}, got {d}", f.min(n))));
    }
    let mut mean = vec![0.0; f];
    for c in columns {
        mean.iter_mut().zip(c).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| c.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let denom = (n - 1) as f64;

    let (values, mut vectors) = if f <= n {
        let cov: Vec<f64> = (0..f * f)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / f, k % f);
                if j > i {
                    return 0.0;
                }
                centered.iter().map(|c| c[i] * c[j]).sum::<f64>() / denom
            })
            .collect();
        let sym: Vec<f64> = (0..f * f).map(|k| cov[(k / f).max(k % f) * f + (k / f).min(k % f)]).collect();
        let eig = symmetric_eigen(&sym, f)?;
        (eig.values[..d].to_vec(), eig.vectors[..d].to_vec())
    } else {
        let gram: Vec<f64> = (0..n * n)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / n, k % n);
                dot(&centered[i.max(j)], &centered[i.min(j)]) / denom
            })
            .collect();
        let eig = symmetric_eigen(&gram, n)?;
        let top = eig.values[0].max(0.0);
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(d);
        let mut values = Vec::with_capacity(d);
        for (mu, u) in eig.values.iter().zip(&eig.vectors).take(d) {
            if *mu <= top * 1e-12 || *mu <= 0.0 {
                break;
            }
            let scale = 1.0 / (mu * denom).sqrt();
            let mut v = vec![0.0; f];
            for (uk, c) in u.iter().zip(&centered) {
                v.iter_mut().zip(c).for_each(|(a, x)| *a += uk * x);
            }
            v.iter_mut().for_each(|a| *a *= scale);
            if let Some(v) = orthonormalize(v, &vectors) {
                vectors.push(v);
                values.push(*mu);
            }
        }
        let mut axis = 0;
        while vectors.len() < d {
            let mut e = vec![0.0; f];
            e[axis] = 1.0;
            axis += 1;
            if let Some(v) = orthonormalize(e, &vectors) {
                vectors.push(v);
                values.push(0.0);
            }
        }
        (values, vectors)
    };
    vectors.iter_mut().for_each(|v| fix_sign(v));
    let values = values.into_iter().map(|v| v.max(0.0)).collect();
    Ok(PcaBasis { mean, vectors, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PatchDistance {
    /// Sum of absolute coordinate differences.
    #[default]
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchConfig {
    pub dimensions: usize,
    pub center_weight: f64,
    /// Neighbours per patch; `None` uses every other patch.
    pub neighbors: Option<usize>,
    pub distance: PatchDistance,
}

impl Default for PatchConfig {
    fn default() -> Self {
        PatchConfig {
            dimensions: DEFAULT_DIMENSIONS,
            center_weight: 0.0,
            neighbors: None,
            distance: PatchDistance::L1,
        }
    }
}

/// `(1 - w_k) + w_k * C` at a patch, with `C` taken over the patch grid.
pub fn patch_center_factor(matrix: &PatchFeatureMatrix, patch: usize, w_k: f64) -> f64 {
    let (c, r) = matrix.grid_position(patch);
    (1.0 - w_k) + w_k * center_weight_at(c as f64, r as f64, matrix.cols, matrix.rows)
}

fn grid_distance(a: (usize, usize), b: (usize, usize)) -> f64 {
    (a.0 as f64 - b.0 as f64).hypot(a.1 as f64 - b.1 as f64)
}

fn feature_distance(a: &[f64], b: &[f64], kind: PatchDistance) -> f64 {
    match kind {
        PatchDistance::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        PatchDistance::L2 => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
    }
}

/// Raw per-patch saliency values in row-major grid order.
pub fn patch_scores(matrix: &PatchFeatureMatrix, config: &PatchConfig) -> Result<Vec<f64>> {
    check_center_weight(config.center_weight)?;
    let n = matrix.patch_count();
    let neighbors = config.neighbors.unwrap_or(n.saturating_sub(1));
    if neighbors + 1 > n {
        return Err(Error::param(format!("{neighbors} neighbours requested with {n} patches")));
    }
    let basis = pca_basis(matrix, config.dimensions)?;
    let coords: Vec<Vec<f64>> = matrix.columns.par_iter().map(|c| basis.project(c)).collect();
    let positions: Vec<(usize, usize)> = (0..n).map(|i| matrix.grid_position(i)).collect();
    let scores = (0..n)
        .into_par_iter()
        .map(|i| {
            let term = |j: usize| {
                feature_distance(&coords[i], &coords[j], config.distance)
                    / (1.0 + grid_distance(positions[i], positions[j]))
            };
            let sum: f64 = if neighbors + 1 == n {
                (0..n).filter(|&j| j != i).map(term).sum()
            } else {
                let mut others: Vec<(f64, usize)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (grid_distance(positions[i], positions[j]), j))
                    .collect();
                others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                others[..neighbors].iter().map(|&(_, j)| term(j)).sum()
            };
            patch_center_factor(matrix, i, config.center_weight) * sum
        })
        .collect();
    Ok(scores)
}

/// Paints per-patch values over their blocks at image resolution. Pixels in
/// the untiled right and bottom margins take the nearest patch's value.
pub fn paint_patches(matrix: &PatchFeatureMatrix, scores: &[f64]) -> Raster {
    let (w, h) = matrix.image_dims;
    let t = matrix.patch_size;
    Raster::from_fn(w, h, |x, y| {
        let c = (x / t).min(matrix.cols - 1);
        let r = (y / t).min(matrix.rows - 1);
        scores[r * matrix.cols + c]
    })
}

pub fn patch_saliency_from_matrix(matrix: &PatchFeatureMatrix, config: &PatchConfig) -> Result<Raster> {
    let scores = patch_scores(matrix, config)?;
    Ok(normalize_raster(&paint_patches(matrix, &scores)))
}

pub fn patch_saliency_map(image: &ColorImage, t: usize, config: &PatchConfig) -> Result<Raster> {
    patch_saliency_from_matrix(&build_patch_matrix(image, t)?, config)
}

/// Patch sizes `PATCH_SIZES[a-1..]`, written `a-4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatchSubset(u8);

impl PatchSubset {
    pub fn new(start: usize) -> Result<Self> {
        if !(1..=4).contains(&start) {
            return Err(Error::param(format!("patch subset start must be in 1..=4, got {start}")));
        }
        Ok(PatchSubset(start as u8))
    }

    pub fn all() -> impl Iterator<Item = PatchSubset> {
        (1..=4).map(PatchSubset)
    }

    pub fn start(self) -> usize {
        self.0 as usize
    }

    pub fn sizes(self) -> &'static [usize] {
        &PATCH_SIZES[self.start() - 1..]
    }

    pub fn label(self) -> String {
        format!("{}-4", self.0)
    }

    /// Accepts `2` or `2-4`.
    pub fn parse(s: &str) -> Result<Self> {
        let head = s.trim().strip_suffix("-4").unwrap_or(s.trim());
        let start: usize = head
            .parse()
            .map_err(|_| Error::param(format!("cannot parse patch subset `{s}`")))?;
        PatchSubset::new(start)
    }
}

/// Single-size maps, resized to the image, for every patch size.
#[derive(Debug, Clone)]
pub struct PatchMaps {
    pub by_size: Vec<(usize, Raster)>,
}

impl PatchMaps {
    pub fn compute(image: &ColorImage, sizes: &[usize], config: &PatchConfig) -> Result<Self> {
        let by_size = sizes
            .iter()
            .map(|&t| Ok((t, patch_saliency_map(image, t, config)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(PatchMaps { by_size })
    }

    /// Normalized average of the maps in `subset`. A single size is returned as is.
    pub fn combine(&self, subset: PatchSubset) -> Result<Raster> {
        let picked: Vec<&Raster> = subset
            .sizes()
            .iter()
            .map(|t| {
                self.by_size
                    .iter()
                    .find(|(s, _)| s == t)
                    .map(|(_, m)| m)
                    .ok_or_else(|| Error::param(format!("no map computed for patch size {t}")))
            })
            .collect::<Result<_>>()?;
        if let [only] = picked.as_slice() {
            return Ok((*only).clone());
        }
        let (w, h) = picked[0].dims();
        let mut sum = Raster::zeros(w, h);
        for m in &picked {
            sum.add_assign(&resize_bilinear(m, w, h)?)?;
        }
        Ok(normalize_raster(&sum.scale(1.0 / picked.len() as f64)))
    }
}

pub fn patch_subset_map(image: &ColorImage, subset: PatchSubset, config: &PatchConfig) -> Result<Raster> {
    PatchMaps::compute(image, subset.sizes(), config)?.combine(subset)
}

/// Mean AUC of every candidate subset against `group`'s fixations; ties go coarser.
pub fn select_patch_subset(
    dataset: &CohortDataset,
    group: AgeGroup,
    candidates: &[PatchSubset],
    config: &PatchConfig,
    roc: &RocConfig,
) -> Result<SubsetSelection<PatchSubset>> {
    let ids = dataset.images_with_group(group);
    if ids.is_empty() {
        return Err(Error::EmptySelection(format!("group {group} has no evaluation images")));
    }
    if candidates.is_empty() {
        return Err(Error::param("no candidate patch subsets"));
    }
    let mut ordered = candidates.to_vec();
    ordered.sort();
    ordered.dedup();
    let sizes = ordered[0].sizes();
    let per_image = ids
        .par_iter()
        .map(|id| {
            let image = dataset.image(id).expect("listed image");
            let maps = PatchMaps::compute(image, sizes, config)?;
            let px = dataset.fixated_pixels(group, id)?;
            ordered
                .iter()
                .map(|&s| Ok(roc_auc(&maps.combine(s)?, &px, roc)?.auc))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<(PatchSubset, f64)> = ordered
        .iter()
        .enumerate()
        .map(|(k, &s)| (s, per_image.iter().map(|r| r[k]).sum::<f64>() / per_image.len() as f64))
        .collect();
    let best = pick_best(&scores).expect("non-empty");
    Ok(SubsetSelection { best, scores })
}
