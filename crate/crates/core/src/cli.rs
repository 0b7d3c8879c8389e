//! Command-line front end. Every input path is checked before any work
//! starts. Exit status is 0 on success, 1 for bad input and 2 when a run fails.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::analysis::{agreement_matrix, build_center_map, center_bias_scores, explorativeness_report};
use crate::error::{Error, Result};
use crate::eval::report::{
    agreement_csv, agreement_text, center_bias_csv, entropy_csv, entropy_summary_csv, eval_report_csv,
    subset_table_csv, subset_table_text, text_table, write_text, SubsetRow, SubsetTable,
};
use crate::eval::synth::{synth_cohort, SynthConfig};
use crate::eval::{
    evaluate_model, split_dataset, CenterPredictor, ConstantPredictor, Fingerprint, HumanOracle, PatchPredictor,
    Predictor, ScPredictor, SicPredictor,
};
use crate::export::{raster_csv, save_gray_png, save_heatmap_png};
use crate::gaze::{build_human_maps, load_color_image, load_dataset, save_dataset, AgeGroup, CohortDataset, DEFAULT_SIGMA};
use crate::itti::{FeatureCache, ScaleSubset};
use crate::learned::{center_weight_surface, default_center_grid, predict_sic, train_group_model, LinearModel, TrainConfig};
use crate::patch::{patch_subset_map, select_patch_subset, PatchConfig, PatchDistance, PatchSubset, DEFAULT_DIMENSIONS};
use crate::raster::{ColorImage, Raster};
use crate::roc::{NegativeSample, RocConfig, DEFAULT_THRESHOLDS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

const FINGERPRINT_FILE: &str = "fingerprint.txt";

#[derive(Debug, Parser)]
#[command(name = "agesal", version, about = "Gaze analysis and saliency prediction for age-grouped observers")]
pub struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fixation-map entropy per (group, image) plus per-group means.
    Analyze(AnalyzeArgs),
    /// Cross-group agreement as a 4x4 AUC matrix.
    Agreement(CohortArgs),
    /// Per-group center-map AUC scores.
    Centerbias(CenterBiasArgs),
    /// Fit a linear channel-weight model for one group.
    Train(TrainArgs),
    /// Write saliency maps for one image or a whole manifest.
    Predict(PredictArgs),
    /// Score a model against a group's fixations.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic cohort: images, fixation CSV and manifest.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CohortArgs {
    /// Cohort manifest (JSON).
    #[arg(long)]
    pub manifest: PathBuf,

    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Gaussian sigma for human saliency maps, pixels.
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,

    /// ROC thresholds; 0 uses every distinct map value.
    #[arg(long, default_value_t = DEFAULT_THRESHOLDS)]
    pub thresholds: usize,

    /// Score against this many sampled non-fixated pixels instead of all of them.
    #[arg(long)]
    pub negatives: Option<usize>,

    /// Seed for every random choice.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

impl CohortArgs {
    pub fn roc(&self) -> RocConfig {
        let mut roc = if self.thresholds == 0 {
            RocConfig::exact()
        } else {
            RocConfig::uniform(self.thresholds)
        };
        roc.negative_sample = self.negatives.map(|count| NegativeSample { count, seed: self.seed });
        roc
    }

    pub fn fingerprint(&self, command: &str) -> Fingerprint {
        Fingerprint::new()
            .with("command", command)
            .with("sigma", self.sigma)
            .with_roc(&self.roc())
            .with("seed", self.seed)
    }

    fn load(&self) -> Result<CohortDataset> {
        require_file(&self.manifest)?;
        load_dataset(&self.manifest)
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub cohort: CohortArgs,

    /// Histogram bins for the entropy.
    #[arg(long, default_value_t = 256)]
    pub bins: usize,

    /// Also write a heat map per (group, image) under `heatmaps/`.
    #[arg(long)]
    pub heatmaps: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CenterBiasArgs {
    #[command(flatten)]
    pub cohort: CohortArgs,

    /// Also write each group's center map as a heat map.
    #[arg(long)]
    pub heatmaps: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub cohort: CohortArgs,

    /// Group label: Y4, Y6, Y8 or ADULT.
    #[arg(long)]
    pub group: String,

    /// Scale subset `s-6`, s in 1..=6.
    #[arg(long, default_value = "1-6")]
    pub subset: String,

    /// Positive and negative samples per image.
    #[arg(long, default_value_t = crate::learned::DEFAULT_SAMPLES_PER_IMAGE)]
    pub samples: usize,

    /// Regularization strength.
    #[arg(long, default_value_t = crate::learned::DEFAULT_LAMBDA)]
    pub lambda: f64,

    /// Comma-separated center weights to search; defaults to 0, 0.05, ..., 0.5.
    #[arg(long, conflicts_with = "wk")]
    pub grid: Option<String>,

    /// Fixed center weight instead of a grid search.
    #[arg(long)]
    pub wk: Option<f64>,

    /// Train on the first N images of the manifest only.
    #[arg(long)]
    pub split: Option<usize>,

    /// Model file; defaults to `<out>/<group>.model`.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistanceArg {
    L1,
    L2,
}

#[derive(Debug, Clone, Args)]
pub struct PatchArgs {
    /// PCA dimensions kept by the patch model.
    #[arg(long, default_value_t = DEFAULT_DIMENSIONS)]
    pub dims: usize,

    /// Nearest patches compared per patch; all of them when omitted.
    #[arg(long)]
    pub neighbors: Option<usize>,

    #[arg(long, value_enum, default_value_t = DistanceArg::L1)]
    pub distance: DistanceArg,
}

impl PatchArgs {
    fn config(&self, center_weight: f64) -> PatchConfig {
        PatchConfig {
            dimensions: self.dims,
            center_weight,
            neighbors: self.neighbors,
            distance: match self.distance {
                DistanceArg::L1 => PatchDistance::L1,
                DistanceArg::L2 => PatchDistance::L2,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapFormat {
    Png,
    Csv,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    /// `sc`, `patch`, `center`, `constant` or a trained model file.
    #[arg(long)]
    pub model: String,

    /// Subset label: `s-6` for sc, `a-4` for patch.
    #[arg(long)]
    pub subset: Option<String>,

    /// Center weight; a model file's own value is used when omitted.
    #[arg(long)]
    pub wk: Option<f64>,

    /// Single input image (PNG or PPM).
    #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
    pub image: Option<PathBuf>,

    /// Predict every image of a manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,

    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    #[arg(long, value_enum, default_value_t = MapFormat::Png)]
    pub format: MapFormat,

    #[command(flatten)]
    pub patch: PatchArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub cohort: CohortArgs,

    /// `human`, `sc`, `patch`, `center`, `constant` or a trained model file.
    #[arg(long)]
    pub model: String,

    /// Subset label, or `all` for a per-group table over every subset (sc and patch only).
    #[arg(long)]
    pub subset: Option<String>,

    /// Group label or `all`.
    #[arg(long, default_value = "all")]
    pub group: String,

    /// Center weight; a model file's own value is used when omitted.
    #[arg(long)]
    pub wk: Option<f64>,

    /// Skip the first N images of the manifest (the training part).
    #[arg(long)]
    pub split: Option<usize>,

    #[command(flatten)]
    pub patch: PatchArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Generator preset: explorativeness, group-structured, center-bias, coarse-structure,
    /// broad-structure, fine-structure, feature-anchored or uniform.
    #[arg(long, default_value = "explorativeness")]
    pub preset: String,

    #[arg(long, default_value_t = 7)]
    pub seed: u64,

    /// Override the preset's image count.
    #[arg(long)]
    pub images: Option<usize>,

    #[arg(long)]
    pub width: Option<usize>,

    #[arg(long)]
    pub height: Option<usize>,

    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| Error::param(format!("cannot start {} worker threads: {e}", cli.threads)))?;
    pool.install(|| match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Agreement(a) => agreement(a),
        Command::Centerbias(a) => centerbias(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Synth(a) => synth(a),
    })
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::param(format!("input file `{}` does not exist", path.display())))
    }
}

fn write_fingerprint(dir: &Path, fp: &Fingerprint) -> Result<()> {
    write_text(&dir.join(FINGERPRINT_FILE), &format!("{}\n", fp.header_line()))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn analyze(a: &AnalyzeArgs) -> Result<()> {
    let ds = a.cohort.load()?;
    let fp = a.cohort.fingerprint("analyze").with("bins", a.bins);
    let report = explorativeness_report(&ds, a.cohort.sigma, a.bins)?;
    let out = &a.cohort.out;
    write_text(&out.join("entropy.csv"), &entropy_csv(&report, &fp)?)?;
    write_text(&out.join("entropy_summary.csv"), &entropy_summary_csv(&report, &fp)?)?;
    if a.heatmaps {
        let dir = out.join("heatmaps");
        ensure_dir(&dir)?;
        for row in &report.rows {
            let maps = build_human_maps(&ds, row.group, &row.image_id, a.cohort.sigma)?;
            save_heatmap_png(&maps.saliency_map, &dir.join(format!("{}_{}.png", row.group, row.image_id)))?;
        }
    }
    write_fingerprint(out, &fp)?;

    let rows: Vec<(String, Vec<f64>)> =
        report.groups.iter().map(|g| (g.group.to_string(), vec![g.mean, g.images as f64])).collect();
    print!("{}", text_table(&["group".into(), "mean_entropy".into(), "images".into()], &rows));
    match report.spearman {
        Some(rho) => println!("spearman rho (age vs entropy): {rho:.4}"),
        None => println!("spearman rho (age vs entropy): NA"),
    }
    Ok(())
}

fn agreement(a: &CohortArgs) -> Result<()> {
    let ds = a.load()?;
    let fp = a.fingerprint("agreement");
    let m = agreement_matrix(&ds, a.sigma, &a.roc())?;
    write_text(&a.out.join("agreement.csv"), &agreement_csv(&m, &fp)?)?;
    write_fingerprint(&a.out, &fp)?;
    print!("{}", agreement_text(&m));
    Ok(())
}

fn centerbias(a: &CenterBiasArgs) -> Result<()> {
    let c = &a.cohort;
    let ds = c.load()?;
    let fp = c.fingerprint("centerbias");
    let scores = center_bias_scores(&ds, c.sigma, &c.roc())?;
    write_text(&c.out.join("center_bias.csv"), &center_bias_csv(&scores, &fp)?)?;
    if a.heatmaps {
        let dir = c.out.join("heatmaps");
        ensure_dir(&dir)?;
        for s in &scores {
            let center = build_center_map(&ds, s.group, c.sigma)?;
            save_heatmap_png(&center.map, &dir.join(format!("center_{}.png", s.group)))?;
        }
    }
    write_fingerprint(&c.out, &fp)?;
    let rows: Vec<(String, Vec<f64>)> = scores.iter().map(|s| (s.group.to_string(), vec![s.mean])).collect();
    print!("{}", text_table(&["group".into(), "center_auc".into()], &rows));
    Ok(())
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::param(format!("cannot parse center weight `{v}`")))
        })
        .collect()
}

fn train(a: &TrainArgs) -> Result<()> {
    let c = &a.cohort;
    let group: AgeGroup = a.group.parse()?;
    let subset = ScaleSubset::parse(&a.subset)?;
    let grid = match (a.wk, &a.grid) {
        (Some(w), _) => vec![w],
        (None, Some(g)) => parse_grid(g)?,
        (None, None) => default_center_grid(),
    };
    let model_path = a
        .output
        .clone()
        .unwrap_or_else(|| c.out.join(format!("{}.model", group.label().to_lowercase())));
    let ds = c.load()?;
    let train = match a.split {
        Some(n) => split_dataset(&ds, n)?.0,
        None => ds,
    };

    let config = TrainConfig {
        subset,
        sigma: c.sigma,
        samples_per_image: a.samples,
        lambda: a.lambda,
        center_grid: grid.clone(),
        roc: c.roc(),
    };
    let cache = FeatureCache::build(&train)?;
    let (model, fit) = train_group_model(&train, &cache, group, &config)?;

    if let Some(dir) = model_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    model.save(&model_path)?;
    let fp = c
        .fingerprint("train")
        .with("group", group)
        .with("subset", subset.label())
        .with("samples", a.samples)
        .with("lambda", a.lambda)
        .with("grid", grid.iter().map(f64::to_string).collect::<Vec<_>>().join(","))
        .with("split", a.split.map_or_else(|| "none".into(), |n| n.to_string()));
    write_text(&model_path.with_extension("fingerprint"), &format!("{}\n", fp.header_line()))?;

    println!("model written to {}", model_path.display());
    println!(
        "weights [{}] bias {:.6} center_weight {} training_accuracy {:.4} epochs {}",
        model.weights.iter().map(|w| format!("{w:.6}")).collect::<Vec<_>>().join(", "),
        model.bias,
        model.center_weight,
        fit.training_accuracy,
        fit.epochs
    );
    Ok(())
}

enum ModelSpec {
    Human,
    Center,
    Constant,
    Sc,
    Patch,
    Linear(PathBuf),
}

impl ModelSpec {
    fn parse(text: &str) -> Result<Self> {
        Ok(match text {
            "human" => ModelSpec::Human,
            "center" => ModelSpec::Center,
            "constant" => ModelSpec::Constant,
            "sc" => ModelSpec::Sc,
            "patch" => ModelSpec::Patch,
            path => {
                let path = PathBuf::from(path);
                require_file(&path)?;
                ModelSpec::Linear(path)
            }
        })
    }
}

fn scale_subset(label: Option<&str>) -> Result<ScaleSubset> {
    label.map_or(Ok(ScaleSubset::FINEST), ScaleSubset::parse)
}

fn patch_subset(label: Option<&str>) -> Result<PatchSubset> {
    label.map_or(Ok(PatchSubset::new(1)?), PatchSubset::parse)
}

fn predict(a: &PredictArgs) -> Result<()> {
    let spec = ModelSpec::parse(&a.model)?;
    let subset = a.subset.as_deref();
    let wk = a.wk.unwrap_or(0.0);
    type MapFn = Box<dyn Fn(&ColorImage) -> Result<Raster> + Sync>;
    let (model_id, map_fn): (String, MapFn) = match spec {
        ModelSpec::Human => return Err(Error::param("human maps need fixations; use `evaluate --model human`")),
        ModelSpec::Center => ("center".into(), Box::new(|img| Ok(center_weight_surface(img.width(), img.height())))),
        ModelSpec::Constant => ("constant".into(), Box::new(|img| Ok(Raster::filled(img.width(), img.height(), 0.5)))),
        ModelSpec::Sc => {
            let s = scale_subset(subset)?;
            (
                format!("sc-{}-wk{wk}", s.label()),
                Box::new(move |img| crate::itti::saliency_sc(img, s, wk)),
            )
        }
        ModelSpec::Patch => {
            let s = patch_subset(subset)?;
            let cfg = a.patch.config(wk);
            (
                format!("patch-{}-d{}-wk{wk}", s.label(), cfg.dimensions),
                Box::new(move |img| patch_subset_map(img, s, &cfg)),
            )
        }
        ModelSpec::Linear(path) => {
            let model = LinearModel::load(&path)?;
            let w = a.wk.unwrap_or(model.center_weight);
            (
                format!("sic-{}-{}-wk{w}", model.group, model.subset.label()),
                Box::new(move |img| predict_sic(img, &model, w)),
            )
        }
    };

    let inputs: Vec<(String, ColorImage)> = match (&a.image, &a.manifest) {
        (Some(path), _) => {
            require_file(path)?;
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "image".into());
            vec![(id, load_color_image(path)?)]
        }
        (None, Some(manifest)) => {
            require_file(manifest)?;
            load_dataset(manifest)?
                .images()
                .iter()
                .map(|i| (i.id.clone(), i.image.clone()))
                .collect()
        }
        (None, None) => return Err(Error::param("either --image or --manifest is required")),
    };

    ensure_dir(&a.out)?;
    let maps = inputs
        .par_iter()
        .map(|(id, img)| map_fn(img).map(|m| (id, m)))
        .collect::<Result<Vec<_>>>()?;
    for (id, map) in &maps {
        if matches!(a.format, MapFormat::Png | MapFormat::Both) {
            save_gray_png(map, &a.out.join(format!("{id}.png")))?;
        }
        if matches!(a.format, MapFormat::Csv | MapFormat::Both) {
            write_text(&a.out.join(format!("{id}.csv")), &raster_csv(map))?;
        }
    }
    let fp = Fingerprint::new()
        .with("command", "predict")
        .with("model", &model_id)
        .with("images", maps.len());
    write_fingerprint(&a.out, &fp)?;
    println!("{} map(s) from {model_id} written to {}", maps.len(), a.out.display());
    Ok(())
}

fn evaluation_groups(ds: &CohortDataset, label: &str) -> Result<Vec<AgeGroup>> {
    if label == "all" {
        Ok(ds.groups_present().iter().copied().collect())
    } else {
        Ok(vec![label.parse()?])
    }
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let c = &a.cohort;
    let spec = ModelSpec::parse(&a.model)?;
    let ds = c.load()?;
    let test = match a.split {
        Some(n) => split_dataset(&ds, n)?.1,
        None => ds,
    };
    let groups = evaluation_groups(&test, &a.group)?;
    if groups.is_empty() {
        return Err(Error::EmptySelection("no group has fixations in the evaluation set".into()));
    }
    let roc = c.roc();
    let fp = c
        .fingerprint("evaluate")
        .with("split", a.split.map_or_else(|| "none".into(), |n| n.to_string()));
    let wk = a.wk.unwrap_or(0.0);

    if a.subset.as_deref() == Some("all") {
        return subset_table(a, &spec, &test, &groups, &roc, fp.with("wk", wk));
    }

    let subset = a.subset.as_deref();
    let needs_cache = matches!(spec, ModelSpec::Sc | ModelSpec::Linear(_));
    let cache = if needs_cache { Some(FeatureCache::build(&test)?) } else { None };
    let predictors: Vec<Box<dyn Predictor + '_>> = match &spec {
        ModelSpec::Human => groups
            .iter()
            .map(|&group| Box::new(HumanOracle { group, sigma: c.sigma }) as Box<dyn Predictor>)
            .collect(),
        ModelSpec::Center => vec![Box::new(CenterPredictor)],
        ModelSpec::Constant => vec![Box::new(ConstantPredictor)],
        ModelSpec::Sc => vec![Box::new(ScPredictor {
            subset: scale_subset(subset)?,
            center_weight: wk,
            cache: cache.as_ref(),
        })],
        ModelSpec::Patch => vec![Box::new(PatchPredictor {
            subset: patch_subset(subset)?,
            config: a.patch.config(wk),
        })],
        ModelSpec::Linear(path) => vec![Box::new(SicPredictor {
            model: LinearModel::load(path)?,
            center_weight: a.wk,
            cache: cache.as_ref(),
        })],
    };

    ensure_dir(&c.out)?;
    let mut summary = Vec::new();
    for (k, &group) in groups.iter().enumerate() {
        let predictor = &predictors[k.min(predictors.len() - 1)];
        let report = evaluate_model(predictor.as_ref(), &test, group, &roc, fp.clone())?;
        for failed in report.failed() {
            eprintln!(
                "warning: {} on {}: {}",
                report.model_id,
                failed.image_id,
                failed.error.as_deref().unwrap_or("no score")
            );
        }
        let mean = report
            .mean_auc
            .ok_or_else(|| Error::Degenerate(format!("{} scored no image for {group}", report.model_id)))?;
        write_text(
            &c.out.join(format!("eval_{}_{group}.csv", report.model_id)),
            &eval_report_csv(&report)?,
        )?;
        summary.push((format!("{} {group}", report.model_id), vec![mean]));
    }
    write_fingerprint(&c.out, &fp)?;
    print!("{}", text_table(&["model group".into(), "mean_auc".into()], &summary));
    Ok(())
}

fn subset_table(
    a: &EvaluateArgs,
    spec: &ModelSpec,
    test: &CohortDataset,
    groups: &[AgeGroup],
    roc: &RocConfig,
    fp: Fingerprint,
) -> Result<()> {
    let wk = a.wk.unwrap_or(0.0);
    let (columns, rows, fp) = match spec {
        ModelSpec::Sc => {
            let cache = FeatureCache::build(test)?;
            let all: Vec<ScaleSubset> = ScaleSubset::all().collect();
            let rows = groups
                .iter()
                .map(|&g| {
                    let sel = crate::itti::select_best_subset(test, &cache, g, &all, wk, roc)?;
                    Ok(SubsetRow {
                        group: g,
                        scores: sel.scores.iter().map(|s| s.1).collect(),
                        best: sel.best.label(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (all.iter().map(|s| s.label()).collect::<Vec<_>>(), rows, fp.with("model", "sc"))
        }
        ModelSpec::Patch => {
            let all: Vec<PatchSubset> = PatchSubset::all().collect();
            let cfg = a.patch.config(wk);
            let rows = groups
                .iter()
                .map(|&g| {
                    let sel = select_patch_subset(test, g, &all, &cfg, roc)?;
                    Ok(SubsetRow {
                        group: g,
                        scores: sel.scores.iter().map(|s| s.1).collect(),
                        best: sel.best.label(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let fp = fp.with("model", "patch").with("dims", cfg.dimensions);
            (all.iter().map(|s| s.label()).collect(), rows, fp)
        }
        _ => return Err(Error::param("`--subset all` applies to the sc and patch models only")),
    };
    let table = SubsetTable { columns, rows };
    write_text(&a.cohort.out.join("subsets.csv"), &subset_table_csv(&table, &fp)?)?;
    write_fingerprint(&a.cohort.out, &fp)?;
    print!("{}", subset_table_text(&table));
    Ok(())
}

fn synth(a: &SynthArgs) -> Result<()> {
    let mut cfg = SynthConfig::preset(&a.preset)?;
    cfg.seed = a.seed;
    if let Some(n) = a.images {
        cfg.images = n;
    }
    if let Some(w) = a.width {
        cfg.width = w;
    }
    if let Some(h) = a.height {
        cfg.height = h;
    }
    let cohort = synth_cohort(&cfg)?;
    let manifest = save_dataset(&cohort.dataset, &a.out)?;
    let json = serde_json::to_string_pretty(&cfg).expect("config serializes");
    write_text(&a.out.join("synth_config.json"), &format!("{json}\n"))?;
    let fp = Fingerprint::new()
        .with("command", "synth")
        .with("preset", &a.preset)
        .with("seed", cfg.seed)
        .with("images", cfg.images)
        .with("width", cfg.width)
        .with("height", cfg.height);
    write_fingerprint(&a.out, &fp)?;
    println!("manifest written to {}", manifest.display());
    Ok(())
}
