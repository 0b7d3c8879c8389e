//! Cohort datasets: stimulus images plus pre-detected fixations tagged by
//! age group, and the human fixation / saliency maps derived from them.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{gaussian_blur, normalize_raster, ColorImage, Raster};

/// Default smoothing applied to fixation maps, in pixels.
pub const DEFAULT_SIGMA: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgeGroup {
    Y4,
    Y6,
    Y8,
    #[serde(rename = "ADULT")]
    Adult,
}

impl AgeGroup {
    pub const ALL: [AgeGroup; 4] = [AgeGroup::Y4, AgeGroup::Y6, AgeGroup::Y8, AgeGroup::Adult];

    /// Position in the age ordering Y4 < Y6 < Y8 < ADULT.
    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            AgeGroup::Y4 => "Y4",
            AgeGroup::Y6 => "Y6",
            AgeGroup::Y8 => "Y8",
            AgeGroup::Adult => "ADULT",
        }
    }
}

impl fmt::Display for AgeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AgeGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "Y4" => Ok(AgeGroup::Y4),
            "Y6" => Ok(AgeGroup::Y6),
            "Y8" => Ok(AgeGroup::Y8),
            "ADULT" => Ok(AgeGroup::Adult),
            other => Err(Error::param(format!("unknown age group label `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixationRecord {
    pub observer_id: String,
    pub group: AgeGroup,
    pub image_id: String,
    pub x: usize,
    pub y: usize,
    pub ordinal: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StimulusImage {
    pub id: String,
    pub image: ColorImage,
}

/// Validated, immutable collection of stimuli and fixations.
#[derive(Debug, Clone)]
pub struct CohortDataset {
    images: Vec<StimulusImage>,
    index: HashMap<String, usize>,
    fixations: Vec<FixationRecord>,
    groups_present: BTreeSet<AgeGroup>,
}

impl CohortDataset {
    /// Builds a dataset, checking image references, pixel bounds and
    /// `(observer, image, ordinal)` uniqueness.
    pub fn new(images: Vec<StimulusImage>, fixations: Vec<FixationRecord>) -> Result<Self> {
        let mut index = HashMap::with_capacity(images.len());
        for (i, img) in images.iter().enumerate() {
            if index.insert(img.id.clone(), i).is_some() {
                return Err(Error::param(format!("duplicate image id `{}`", img.id)));
            }
        }
        let mut seen = HashSet::with_capacity(fixations.len());
        let mut groups_present = BTreeSet::new();
        for (n, f) in fixations.iter().enumerate() {
            let img = index
                .get(&f.image_id)
                .map(|&i| &images[i])
                .ok_or_else(|| {
                    Error::param(format!("fixation {n} references unknown image `{}`", f.image_id))
                })?;
            if f.x >= img.image.width() || f.y >= img.image.height() {
                return Err(Error::param(format!(
                    "fixation {n} at ({}, {}) outside image `{}` ({}x{})",
                    f.x,
                    f.y,
                    f.image_id,
                    img.image.width(),
                    img.image.height()
                )));
            }
            if !seen.insert((f.observer_id.as_str(), f.image_id.as_str(), f.ordinal)) {
                return Err(Error::param(format!(
                    "duplicate fixation for observer `{}` on `{}` ordinal {}",
                    f.observer_id, f.image_id, f.ordinal
                )));
            }
            groups_present.insert(f.group);
        }
        Ok(CohortDataset {
            images,
            index,
            fixations,
            groups_present,
        })
    }

    pub fn images(&self) -> &[StimulusImage] {
        &self.images
    }

    pub fn image_ids(&self) -> impl Iterator<Item = &str> {
        self.images.iter().map(|i| i.id.as_str())
    }

    pub fn image(&self, id: &str) -> Option<&ColorImage> {
        self.index.get(id).map(|&i| &self.images[i].image)
    }

    pub fn fixations(&self) -> &[FixationRecord] {
        &self.fixations
    }

    pub fn groups_present(&self) -> &BTreeSet<AgeGroup> {
        &self.groups_present
    }

    pub fn fixations_for<'a>(
        &'a self,
        group: AgeGroup,
        image_id: &'a str,
    ) -> impl Iterator<Item = &'a FixationRecord> + 'a {
        self.fixations
            .iter()
            .filter(move |f| f.group == group && f.image_id == image_id)
    }

    pub fn has_fixations(&self, group: AgeGroup, image_id: &str) -> bool {
        self.fixations_for(group, image_id).next().is_some()
    }

    /// Distinct fixated pixel indices (row-major) for a group on one image, sorted.
    pub fn fixated_pixels(&self, group: AgeGroup, image_id: &str) -> Result<Vec<usize>> {
        let img = self
            .image(image_id)
            .ok_or_else(|| Error::param(format!("unknown image `{image_id}`")))?;
        let w = img.width();
        let mut px: Vec<usize> = self
            .fixations_for(group, image_id)
            .map(|f| f.y * w + f.x)
            .collect();
        px.sort_unstable();
        px.dedup();
        Ok(px)
    }

    /// Ids of images on which `group` has at least one fixation, in manifest order.
    pub fn images_with_group(&self, group: AgeGroup) -> Vec<&str> {
        self.image_ids()
            .filter(|id| self.has_fixations(group, id))
            .collect()
    }

    /// New dataset restricted to the given images (order preserved as given).
    pub fn subset(&self, ids: &[&str]) -> Result<CohortDataset> {
        let wanted: HashSet<&str> = ids.iter().copied().collect();
        let images = ids
            .iter()
            .map(|id| {
                self.index
                    .get(*id)
                    .map(|&i| self.images[i].clone())
                    .ok_or_else(|| Error::param(format!("unknown image `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let fixations = self
            .fixations
            .iter()
            .filter(|f| wanted.contains(f.image_id.as_str()))
            .cloned()
            .collect();
        CohortDataset::new(images, fixations)
    }
}

/// Binary fixation map and its smoothed, normalized counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct HumanMaps {
    pub fixation_map: Raster,
    pub saliency_map: Raster,
}

/// 1 at every pixel fixated by any observer of `group`, 0 elsewhere.
pub fn build_fixation_map(dataset: &CohortDataset, group: AgeGroup, image_id: &str) -> Result<Raster> {
    let img = dataset
        .image(image_id)
        .ok_or_else(|| Error::param(format!("unknown image `{image_id}`")))?;
    let mut map = Raster::zeros(img.width(), img.height());
    let mut any = false;
    for f in dataset.fixations_for(group, image_id) {
        map.set(f.x, f.y, 1.0);
        any = true;
    }
    if !any {
        return Err(Error::EmptySelection(format!(
            "no fixations for group {group} on image `{image_id}`"
        )));
    }
    Ok(map)
}

pub fn build_human_saliency_map(fixation_map: &Raster, sigma: f64) -> Result<Raster> {
    Ok(normalize_raster(&gaussian_blur(fixation_map, sigma)?))
}

pub fn build_human_maps(
    dataset: &CohortDataset,
    group: AgeGroup,
    image_id: &str,
    sigma: f64,
) -> Result<HumanMaps> {
    let fixation_map = build_fixation_map(dataset, group, image_id)?;
    let saliency_map = build_human_saliency_map(&fixation_map, sigma)?;
    Ok(HumanMaps {
        fixation_map,
        saliency_map,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub images: Vec<ManifestImage>,
    pub fixations_csv: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestImage {
    pub id: String,
    pub path: String,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    observer_id: String,
    group: String,
    image_id: String,
    x: i64,
    y: i64,
    ordinal: i64,
}

/// Loads a manifest, its images and its fixation CSV. Paths inside the
/// manifest are resolved relative to the manifest's directory.
pub fn load_dataset(manifest_path: &Path) -> Result<CohortDataset> {
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Ingest {
        path: manifest_path.to_path_buf(),
        message: format!("malformed manifest: {e}"),
    })?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let mut images = Vec::with_capacity(manifest.images.len());
    let mut dims = HashMap::new();
    for entry in &manifest.images {
        let path = base.join(&entry.path);
        let image = load_color_image(&path)?;
        if image.dims() != (entry.width, entry.height) {
            return Err(Error::Ingest {
                path,
                message: format!(
                    "image is {}x{} but manifest declares {}x{}",
                    image.width(),
                    image.height(),
                    entry.width,
                    entry.height
                ),
            });
        }
        if dims.insert(entry.id.clone(), (entry.width, entry.height)).is_some() {
            return Err(Error::Ingest {
                path: manifest_path.to_path_buf(),
                message: format!("duplicate image id `{}`", entry.id),
            });
        }
        images.push(StimulusImage {
            id: entry.id.clone(),
            image,
        });
    }

    let csv_path = base.join(&manifest.fixations_csv);
    let fixations = read_fixations_csv(&csv_path, &dims)?;
    CohortDataset::new(images, fixations).map_err(|e| Error::Ingest {
        path: csv_path,
        message: e.to_string(),
    })
}

fn read_fixations_csv(
    path: &Path,
    dims: &HashMap<String, (usize, usize)>,
) -> Result<Vec<FixationRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::Ingest {
            path: path.to_path_buf(),
            message: format!("unreadable header: {e}"),
        })?
        .clone();

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Ingest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row_err = |message: String| Error::Row {
            path: path.to_path_buf(),
            line,
            message,
        };
        let row: CsvRow = record
            .deserialize(Some(&headers))
            .map_err(|e| row_err(format!("malformed row: {e}")))?;
        let group: AgeGroup = row.group.parse().map_err(|e: Error| row_err(e.to_string()))?;
        let &(w, h) = dims
            .get(&row.image_id)
            .ok_or_else(|| row_err(format!("unknown image id `{}`", row.image_id)))?;
        if row.x < 0 || row.y < 0 || row.x as usize >= w || row.y as usize >= h {
            return Err(row_err(format!(
                "fixation ({}, {}) out of bounds for image `{}` ({w}x{h})",
                row.x, row.y, row.image_id
            )));
        }
        if row.ordinal < 0 {
            return Err(row_err(format!("negative ordinal {}", row.ordinal)));
        }
        let key = (row.observer_id.clone(), row.image_id.clone(), row.ordinal);
        if !seen.insert(key) {
            return Err(row_err(format!(
                "duplicate fixation (observer `{}`, image `{}`, ordinal {})",
                row.observer_id, row.image_id, row.ordinal
            )));
        }
        out.push(FixationRecord {
            observer_id: row.observer_id,
            group,
            image_id: row.image_id,
            x: row.x as usize,
            y: row.y as usize,
            ordinal: row.ordinal as usize,
        });
    }
    Ok(out)
}

pub fn load_color_image(path: &Path) -> Result<ColorImage> {
    let img = image::open(path)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?
        .to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(ColorImage::from_fn(w, h, |x, y| {
        let p = img.get_pixel(x as u32, y as u32).0;
        [
            f64::from(p[0]) / 255.0,
            f64::from(p[1]) / 255.0,
            f64::from(p[2]) / 255.0,
        ]
    }))
}

pub fn save_color_image(image: &ColorImage, path: &Path) -> Result<()> {
    let (w, h) = image.dims();
    let buf = image::RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let p = image.pixel(x as usize, y as usize);
        image::Rgb(p.map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8))
    });
    buf.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes images as PNG, the fixation CSV and a manifest into `dir`.
/// Returns the manifest path.
pub fn save_dataset(dataset: &CohortDataset, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::new();
    for img in dataset.images() {
        let file = format!("{}.png", img.id);
        save_color_image(&img.image, &dir.join(&file))?;
        entries.push(ManifestImage {
            id: img.id.clone(),
            path: file,
            width: img.image.width(),
            height: img.image.height(),
        });
    }
    let csv_name = "fixations.csv";
    let mut csv = String::from("observer_id,group,image_id,x,y,ordinal\n");
    for f in dataset.fixations() {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            f.observer_id, f.group, f.image_id, f.x, f.y, f.ordinal
        ));
    }
    let csv_path = dir.join(csv_name);
    fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;

    let manifest = Manifest {
        images: entries,
        fixations_csv: csv_name.to_string(),
    };
    let manifest_path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fix(obs: &str, group: AgeGroup, image: &str, x: usize, y: usize, ordinal: usize) -> FixationRecord {
        FixationRecord {
            observer_id: obs.into(),
            group,
            image_id: image.into(),
            x,
            y,
            ordinal,
        }
    }

    fn gray(id: &str, w: usize, h: usize) -> StimulusImage {
        StimulusImage {
            id: id.into(),
            image: ColorImage::uniform(w, h, [0.5; 3]),
        }
    }

    #[test]
    fn group_labels_round_trip() {
        for g in AgeGroup::ALL {
            assert_eq!(g.label().parse::<AgeGroup>().unwrap(), g);
        }
        assert!("Y5".parse::<AgeGroup>().is_err());
    }

    #[test]
    fn single_fixation_sets_one_pixel() {
        let ds = CohortDataset::new(vec![gray("a", 8, 8)], vec![fix("o1", AgeGroup::Y4, "a", 3, 2, 0)]).unwrap();
        let m = build_fixation_map(&ds, AgeGroup::Y4, "a").unwrap();
        assert_eq!(m.sum(), 1.0);
        assert_eq!(m.get(3, 2), 1.0);
    }

    #[test]
    fn shared_pixel_stays_binary() {
        let ds = CohortDataset::new(
            vec![gray("a", 8, 8)],
            vec![fix("o1", AgeGroup::Y6, "a", 4, 4, 0), fix("o2", AgeGroup::Y6, "a", 4, 4, 0)],
        )
        .unwrap();
        let m = build_fixation_map(&ds, AgeGroup::Y6, "a").unwrap();
        assert_eq!(m.get(4, 4), 1.0);
        assert_eq!(m.sum(), 1.0);
    }

    #[test]
    fn map_sum_counts_distinct_pixels() {
        let pts = [(0, 0), (7, 7), (3, 5), (3, 5), (6, 1), (2, 2)];
        let fixes = pts
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| fix("o", AgeGroup::Y8, "a", x, y, i))
            .collect();
        let ds = CohortDataset::new(vec![gray("a", 8, 8)], fixes).unwrap();
        let distinct: HashSet<_> = pts.iter().collect();
        let m = build_fixation_map(&ds, AgeGroup::Y8, "a").unwrap();
        assert_eq!(m.sum(), distinct.len() as f64);
        assert_eq!(ds.fixated_pixels(AgeGroup::Y8, "a").unwrap().len(), 5);
    }

    #[test]
    fn missing_group_is_empty_selection() {
        let ds = CohortDataset::new(vec![gray("a", 8, 8)], vec![fix("o", AgeGroup::Y4, "a", 1, 1, 0)]).unwrap();
        assert!(matches!(
            build_fixation_map(&ds, AgeGroup::Adult, "a"),
            Err(Error::EmptySelection(_))
        ));
    }

    #[test]
    fn dataset_rejects_out_of_bounds_and_duplicates() {
        assert!(CohortDataset::new(vec![gray("a", 8, 8)], vec![fix("o", AgeGroup::Y4, "a", 8, 0, 0)]).is_err());
        assert!(CohortDataset::new(
            vec![gray("a", 8, 8)],
            vec![fix("o", AgeGroup::Y4, "a", 1, 0, 0), fix("o", AgeGroup::Y4, "a", 2, 0, 0)]
        )
        .is_err());
    }

    #[test]
    fn human_map_single_fixation_peaks_at_fixation() {
        let mut f = Raster::zeros(64, 48);
        f.set(20, 30, 1.0);
        let s = build_human_saliency_map(&f, 5.0).unwrap();
        assert_eq!(s.max(), 1.0);
        assert_eq!(s.argmax_xy(), (20, 30));
    }

    #[test]
    fn human_map_two_bumps_are_equal() {
        let mut f = Raster::zeros(120, 60);
        f.set(30, 30, 1.0);
        f.set(90, 30, 1.0);
        let s = build_human_saliency_map(&f, 6.0).unwrap();
        assert_eq!(s.get(30, 30), 1.0);
        assert_eq!(s.get(90, 30), 1.0);
        // integrate each half
        let (mut left, mut right) = (0.0, 0.0);
        for y in 0..60 {
            for x in 0..120 {
                if x < 60 {
                    left += s.get(x, y);
                } else {
                    right += s.get(x, y);
                }
            }
        }
        assert!((left - right).abs() < 1e-6 * left);
    }

    #[test]
    fn human_map_of_empty_map_is_zero() {
        let s = build_human_saliency_map(&Raster::zeros(10, 10), 3.0).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fixation_map_ignores_order_and_other_groups() {
        let base = vec![
            fix("o1", AgeGroup::Y4, "a", 1, 1, 0),
            fix("o1", AgeGroup::Y4, "a", 5, 2, 1),
            fix("o2", AgeGroup::Adult, "a", 6, 6, 0),
        ];
        let mut reversed = base.clone();
        reversed.reverse();
        let ds1 = CohortDataset::new(vec![gray("a", 8, 8)], base.clone()).unwrap();
        let ds2 = CohortDataset::new(vec![gray("a", 8, 8)], reversed).unwrap();
        assert_eq!(
            build_fixation_map(&ds1, AgeGroup::Y4, "a").unwrap(),
            build_fixation_map(&ds2, AgeGroup::Y4, "a").unwrap()
        );
        let mut changed = base;
        changed[2].x = 0;
        let ds3 = CohortDataset::new(vec![gray("a", 8, 8)], changed).unwrap();
        assert_eq!(
            build_human_maps(&ds1, AgeGroup::Y4, "a", 2.0).unwrap(),
            build_human_maps(&ds3, AgeGroup::Y4, "a", 2.0).unwrap()
        );
    }
}
