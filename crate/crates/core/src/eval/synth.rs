//! Seeded synthetic cohorts: procedural scenes plus per-group fixation
//! generators with controllable spread, center concentration and targets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaze::{AgeGroup, CohortDataset, FixationRecord, StimulusImage};
use crate::raster::ColorImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    /// Broad Gaussian luminance bump.
    CoarseBlob,
    /// Disk whose color differs from the background at equal intensity.
    ColorBlob,
    /// Small high-contrast disk.
    FineDot,
    /// Windowed sinusoidal grating at the background mean.
    Grating,
}

pub const ALL_KINDS: [ObjectKind; 4] = [
    ObjectKind::CoarseBlob,
    ObjectKind::ColorBlob,
    ObjectKind::FineDot,
    ObjectKind::Grating,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub kind: ObjectKind,
    pub x: f64,
    pub y: f64,
    /// Extent used for placement and bounding boxes.
    pub radius: f64,
    pub color: [f64; 3],
    pub orientation_deg: f64,
}

impl SceneObject {
    /// Inclusive pixel box `(x0, y0, x1, y1)`.
    pub fn bounding_box(&self) -> (usize, usize, usize, usize) {
        let lo = |c: f64| (c - self.radius).floor().max(0.0) as usize;
        let hi = |c: f64| (c + self.radius).ceil().max(0.0) as usize;
        (lo(self.x), lo(self.y), hi(self.x), hi(self.y))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub background: f64,
    pub coarse_blobs: usize,
    pub color_blobs: usize,
    pub fine_dots: usize,
    pub gratings: usize,
    /// Gaussian sigma of coarse blobs.
    pub coarse_sigma: f64,
    pub coarse_amplitude: f64,
    pub color_radius: f64,
    pub dot_radius: f64,
    pub dot_value: f64,
    pub grating_radius: f64,
    pub grating_period: f64,
    pub grating_amplitude: f64,
    /// Half-width of uniform per-pixel luminance noise added to every pixel.
    pub noise: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            background: 0.4,
            coarse_blobs: 2,
            color_blobs: 2,
            fine_dots: 4,
            gratings: 1,
            coarse_sigma: 32.0,
            coarse_amplitude: 0.35,
            color_radius: 22.0,
            dot_radius: 5.0,
            dot_value: 0.95,
            grating_radius: 30.0,
            grating_period: 24.0,
            grating_amplitude: 0.3,
            noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attention {
    /// Targets drawn uniformly from objects of these kinds.
    Kinds(Vec<ObjectKind>),
    /// The object at this position in each scene's object list.
    Object(usize),
    /// Uniform over the image.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub group: AgeGroup,
    pub observers: usize,
    pub fixations_per_observer: usize,
    /// Standard deviation of fixation scatter around a target, pixels.
    pub spread: f64,
    /// Probability a fixation comes from the central Gaussian instead.
    pub center_weight: f64,
    pub attention: Attention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub images: usize,
    pub width: usize,
    pub height: usize,
    pub scene: SceneSpec,
    pub groups: Vec<GroupSpec>,
    /// Central Gaussian sigma as a fraction of the shorter side.
    pub center_spread: f64,
}

pub const PRESETS: [&str; 8] = [
    "explorativeness",
    "group-structured",
    "center-bias",
    "coarse-structure",
    "broad-structure",
    "fine-structure",
    "feature-anchored",
    "uniform",
];

fn groups_with(f: impl Fn(usize, AgeGroup) -> GroupSpec) -> Vec<GroupSpec> {
    AgeGroup::ALL.iter().enumerate().map(|(k, &g)| f(k, g)).collect()
}

impl SynthConfig {
    pub fn preset(name: &str) -> Result<Self> {
        Ok(match name {
            "explorativeness" => Self::explorativeness(),
            "group-structured" => Self::group_structured(),
            "center-bias" => Self::center_bias(),
            "coarse-structure" => Self::coarse_structure(),
            "broad-structure" => Self::broad_structure(),
            "fine-structure" => Self::fine_structure(),
            "feature-anchored" => Self::feature_anchored(),
            "uniform" => Self::uniform(),
            other => {
                return Err(Error::param(format!(
                    "unknown preset `{other}`; expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        })
    }

    fn base(groups: Vec<GroupSpec>) -> Self {
        SynthConfig {
            seed: 7,
            images: 10,
            width: 512,
            height: 384,
            scene: SceneSpec::default(),
            groups,
            center_spread: 0.125,
        }
    }

    /// Spread 10/20/40/80 px from the youngest group up.
    pub fn explorativeness() -> Self {
        Self::base(groups_with(|k, group| GroupSpec {
            group,
            observers: 8,
            fixations_per_observer: 8,
            spread: 10.0 * f64::powi(2.0, k as i32),
            center_weight: 0.0,
            attention: Attention::Kinds(ALL_KINDS.to_vec()),
        }))
    }

    /// Every group looks at a different object of each scene.
    pub fn group_structured() -> Self {
        let mut cfg = Self::base(groups_with(|k, group| GroupSpec {
            group,
            observers: 6,
            fixations_per_observer: 8,
            spread: 12.0,
            center_weight: 0.0,
            attention: Attention::Object(k),
        }));
        cfg.scene = SceneSpec {
            coarse_blobs: 1,
            color_blobs: 1,
            fine_dots: 1,
            gratings: 1,
            ..SceneSpec::default()
        };
        cfg
    }

    /// Central fixation share 0.6/0.4/0.2/0.2.
    pub fn center_bias() -> Self {
        let mut cfg = Self::base(groups_with(|k, group| GroupSpec {
            group,
            observers: 10,
            fixations_per_observer: 12,
            spread: 25.0,
            center_weight: [0.6, 0.4, 0.2, 0.2][k],
            attention: Attention::Kinds(ALL_KINDS.to_vec()),
        }));
        cfg.images = 20;
        cfg
    }

    fn structure(attention: ObjectKind, spread: f64, dots: usize) -> Self {
        let mut cfg = Self::base(groups_with(|_, group| GroupSpec {
            group,
            observers: 6,
            fixations_per_observer: 8,
            spread,
            center_weight: 0.0,
            attention: Attention::Kinds(vec![attention]),
        }));
        cfg.scene = SceneSpec {
            coarse_blobs: 2,
            color_blobs: 0,
            fine_dots: dots,
            gratings: 0,
            ..SceneSpec::default()
        };
        cfg
    }

    /// Fixations on broad blobs among dense fine clutter.
    pub fn coarse_structure() -> Self {
        Self::structure(ObjectKind::CoarseBlob, 24.0, 40)
    }

    /// Broader, brighter blobs. Small patches see mostly flat interiors here,
    /// so the clutter dots dominate them.
    pub fn broad_structure() -> Self {
        let mut cfg = Self::coarse_structure();
        cfg.scene.coarse_sigma = 48.0;
        cfg.scene.coarse_amplitude = 0.45;
        cfg
    }

    /// Same scenes, fixations on the small dots.
    pub fn fine_structure() -> Self {
        Self::structure(ObjectKind::FineDot, 4.0, 8)
    }

    /// Fixations follow the color channel; intensity and orientation objects distract.
    pub fn feature_anchored() -> Self {
        let mut cfg = Self::base(groups_with(|k, group| GroupSpec {
            group,
            observers: 6,
            fixations_per_observer: 8,
            spread: [6.0, 8.0, 10.0, 12.0][k],
            center_weight: [0.3, 0.2, 0.1, 0.1][k],
            attention: Attention::Kinds(vec![ObjectKind::ColorBlob]),
        }));
        cfg.images = 30;
        cfg.width = 320;
        cfg.height = 240;
        cfg.scene = SceneSpec {
            coarse_blobs: 1,
            color_blobs: 2,
            fine_dots: 3,
            gratings: 2,
            coarse_sigma: 20.0,
            color_radius: 14.0,
            grating_radius: 22.0,
            ..SceneSpec::default()
        };
        cfg
    }

    /// Featureless scenes, fixations anywhere.
    pub fn uniform() -> Self {
        let mut cfg = Self::base(groups_with(|_, group| GroupSpec {
            group,
            observers: 6,
            fixations_per_observer: 8,
            spread: 0.0,
            center_weight: 0.0,
            attention: Attention::Uniform,
        }));
        cfg.scene = SceneSpec {
            coarse_blobs: 0,
            color_blobs: 0,
            fine_dots: 0,
            gratings: 0,
            ..SceneSpec::default()
        };
        cfg
    }

    fn validate(&self) -> Result<()> {
        if self.images == 0 || self.width == 0 || self.height == 0 {
            return Err(Error::param("synthetic cohort needs at least one non-empty image"));
        }
        if self.groups.is_empty() {
            return Err(Error::param("synthetic cohort needs at least one group"));
        }
        for g in &self.groups {
            if !(0.0..=1.0).contains(&g.center_weight) || g.spread < 0.0 || !g.spread.is_finite() {
                return Err(Error::param(format!("invalid generator parameters for group {}", g.group)));
            }
            if g.observers == 0 || g.fixations_per_observer == 0 {
                return Err(Error::param(format!("group {} needs observers and fixations", g.group)));
            }
        }
        let s = &self.scene;
        if !(0.0..=1.0).contains(&s.background) {
            return Err(Error::param("background must be in [0, 1]"));
        }
        Ok(())
    }
}

/// Isoluminant (equal channel mean) colors for a given background level.
fn palette(bg: f64) -> [[f64; 3]; 4] {
    let d = bg.min(1.0 - bg) * 0.9;
    [
        [bg + d, bg - d / 2.0, bg - d / 2.0],
        [bg - d / 2.0, bg + d, bg - d / 2.0],
        [bg - d / 2.0, bg - d / 2.0, bg + d],
        [bg + d / 2.0, bg + d / 2.0, bg - d],
    ]
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn place_objects(spec: &SceneSpec, w: usize, h: usize, rng: &mut ChaCha8Rng) -> Vec<SceneObject> {
    let colors = palette(spec.background);
    let mut plan: Vec<(ObjectKind, f64)> = Vec::new();
    plan.extend(std::iter::repeat_n((ObjectKind::CoarseBlob, 2.0 * spec.coarse_sigma), spec.coarse_blobs));
    plan.extend(std::iter::repeat_n((ObjectKind::ColorBlob, spec.color_radius), spec.color_blobs));
    plan.extend(std::iter::repeat_n((ObjectKind::FineDot, spec.dot_radius), spec.fine_dots));
    plan.extend(std::iter::repeat_n((ObjectKind::Grating, spec.grating_radius), spec.gratings));

    let mut placed: Vec<SceneObject> = Vec::with_capacity(plan.len());
    for (n, (kind, radius)) in plan.into_iter().enumerate() {
        let margin = radius.min(w.min(h) as f64 / 2.0 - 1.0).max(0.0);
        let mut best: Option<(f64, f64, f64)> = None;
        for _ in 0..200 {
            let x = rng.random_range(margin..=(w as f64 - 1.0 - margin).max(margin));
            let y = rng.random_range(margin..=(h as f64 - 1.0 - margin).max(margin));
            let gap = placed
                .iter()
                .map(|o| (o.x - x).hypot(o.y - y) - o.radius - radius)
                .fold(f64::INFINITY, f64::min);
            if best.is_none_or(|b| gap > b.2) {
                best = Some((x, y, gap));
            }
            if gap >= 12.0 {
                break;
            }
        }
        let (x, y, _) = best.expect("at least one attempt");
        let color = colors[n % colors.len()];
        let orientation_deg = [0.0, 45.0, 90.0, 135.0][rng.random_range(0..4)];
        placed.push(SceneObject {
            kind,
            x,
            y,
            radius,
            color,
            orientation_deg,
        });
    }
    placed
}

fn render(spec: &SceneSpec, objects: &[SceneObject], w: usize, h: usize, rng: &mut ChaCha8Rng) -> ColorImage {
    let bg = spec.background;
    let mut px = vec![[bg; 3]; w * h];
    let soft_disk = |d: f64, r: f64| (r + 0.5 - d).clamp(0.0, 1.0);
    let order = [ObjectKind::CoarseBlob, ObjectKind::Grating, ObjectKind::ColorBlob, ObjectKind::FineDot];
    for kind in order {
        for o in objects.iter().filter(|o| o.kind == kind) {
            let reach = match kind {
                ObjectKind::CoarseBlob => 3.0 * spec.coarse_sigma,
                _ => o.radius + 1.0,
            };
            let x0 = (o.x - reach).floor().max(0.0) as usize;
            let y0 = (o.y - reach).floor().max(0.0) as usize;
            let x1 = ((o.x + reach).ceil() as usize).min(w - 1);
            let y1 = ((o.y + reach).ceil() as usize).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let (dx, dy) = (x as f64 - o.x, y as f64 - o.y);
                    let d = dx.hypot(dy);
                    let p = &mut px[y * w + x];
                    match kind {
                        ObjectKind::CoarseBlob => {
                            let v = spec.coarse_amplitude * (-(d * d) / (2.0 * spec.coarse_sigma.powi(2))).exp();
                            p.iter_mut().for_each(|c| *c += v);
                        }
                        ObjectKind::Grating => {
                            let theta = o.orientation_deg.to_radians();
                            let phase = 2.0 * std::f64::consts::PI / spec.grating_period
                                * (dx * theta.sin() - dy * theta.cos());
                            let win = soft_disk(d, o.radius);
                            let v = spec.grating_amplitude * phase.cos() * win;
                            p.iter_mut().for_each(|c| *c += v);
                        }
                        ObjectKind::ColorBlob => {
                            let a = soft_disk(d, o.radius);
                            for (c, t) in p.iter_mut().zip(o.color) {
                                *c = (1.0 - a) * *c + a * t;
                            }
                        }
                        ObjectKind::FineDot => {
                            let a = soft_disk(d, o.radius);
                            p.iter_mut().for_each(|c| *c = (1.0 - a) * *c + a * spec.dot_value);
                        }
                    }
                }
            }
        }
    }
    if spec.noise > 0.0 {
        for p in &mut px {
            let v = rng.random_range(-spec.noise..=spec.noise);
            p.iter_mut().for_each(|c| *c += v);
        }
    }
    ColorImage::from_fn(w, h, |x, y| px[y * w + x])
}

fn sample_point(
    spec: &GroupSpec,
    objects: &[SceneObject],
    w: usize,
    h: usize,
    center_sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(usize, usize)> {
    let targets: Vec<&SceneObject> = match &spec.attention {
        Attention::Kinds(kinds) => objects.iter().filter(|o| kinds.contains(&o.kind)).collect(),
        Attention::Object(k) => objects.get(*k).into_iter().collect(),
        Attention::Uniform => vec![],
    };
    if targets.is_empty() && spec.attention != Attention::Uniform {
        return Err(Error::param(format!("group {} attends to objects the scenes lack", spec.group)));
    }
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    for _ in 0..1000 {
        let central = rng.random_bool(spec.center_weight);
        let (x, y) = if central {
            (cx + center_sigma * gaussian(rng), cy + center_sigma * gaussian(rng))
        } else if targets.is_empty() {
            (rng.random_range(0.0..w as f64) - 0.5, rng.random_range(0.0..h as f64) - 0.5)
        } else {
            let t = targets[rng.random_range(0..targets.len())];
            (t.x + spec.spread * gaussian(rng), t.y + spec.spread * gaussian(rng))
        };
        let (xr, yr) = (x.round(), y.round());
        if xr >= 0.0 && yr >= 0.0 && xr < w as f64 && yr < h as f64 {
            return Ok((xr as usize, yr as usize));
        }
    }
    Err(Error::Degenerate("could not place a fixation inside the image".into()))
}

#[derive(Debug, Clone)]
pub struct SynthCohort {
    pub dataset: CohortDataset,
    /// Objects of each image, manifest order.
    pub scenes: Vec<Vec<SceneObject>>,
}

pub fn image_id(index: usize) -> String {
    format!("img{index:03}")
}

/// Builds images and fixations from `config`; the same config always
/// produces the same cohort.
pub fn synth_cohort(config: &SynthConfig) -> Result<SynthCohort> {
    config.validate()?;
    let (w, h) = (config.width, config.height);
    let center_sigma = config.center_spread * w.min(h) as f64;
    let mut images = Vec::with_capacity(config.images);
    let mut scenes = Vec::with_capacity(config.images);
    let mut fixations = Vec::new();
    for i in 0..config.images {
        let mut scene_rng = ChaCha8Rng::seed_from_u64(config.seed);
        scene_rng.set_stream(2 * i as u64);
        let objects = place_objects(&config.scene, w, h, &mut scene_rng);
        let id = image_id(i);
        images.push(StimulusImage {
            id: id.clone(),
            image: render(&config.scene, &objects, w, h, &mut scene_rng),
        });
        let mut gaze_rng = ChaCha8Rng::seed_from_u64(config.seed);
        gaze_rng.set_stream(2 * i as u64 + 1);
        for spec in &config.groups {
            for obs in 0..spec.observers {
                let observer_id = format!("{}-{obs:02}", spec.group.label().to_lowercase());
                for ordinal in 0..spec.fixations_per_observer {
                    let (x, y) = sample_point(spec, &objects, w, h, center_sigma, &mut gaze_rng)?;
                    fixations.push(FixationRecord {
                        observer_id: observer_id.clone(),
                        group: spec.group,
                        image_id: id.clone(),
                        x,
                        y,
                        ordinal,
                    });
                }
            }
        }
        scenes.push(objects);
    }
    Ok(SynthCohort {
        dataset: CohortDataset::new(images, fixations)?,
        scenes,
    })
}

/// Red bar among green bars on gray, all at equal intensity. Returns the
/// stimulus and the inclusive bounding box of the red bar.
pub fn popout_stimulus(width: usize, height: usize) -> (ColorImage, (usize, usize, usize, usize)) {
    let bg = 0.4;
    let [red, green, ..] = palette(bg);
    let (cols, rows) = (6, 4);
    let (cw, ch) = (width / cols, height / rows);
    let (bw, bh) = ((cw / 3).max(2), (ch / 2).max(4));
    let target = (4, 1);
    let bar = |c: usize, r: usize| {
        let x0 = c * cw + (cw - bw) / 2;
        let y0 = r * ch + (ch - bh) / 2;
        (x0, y0, x0 + bw - 1, y0 + bh - 1)
    };
    let tb = bar(target.0, target.1);
    let img = ColorImage::from_fn(width, height, |x, y| {
        let (c, r) = (x / cw, y / ch);
        if c >= cols || r >= rows {
            return [bg; 3];
        }
        let (x0, y0, x1, y1) = bar(c, r);
        if (x0..=x1).contains(&x) && (y0..=y1).contains(&y) {
            if (c, r) == target {
                red
            } else {
                green
            }
        } else {
            [bg; 3]
        }
    });
    (img, tb)
}
