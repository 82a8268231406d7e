//! Experiment configuration, task assembly, and run artifacts.
//!
//! One TOML file drives a run: task selection, feature-map knobs, training
//! hyperparameters, and the privacy budget. Every artifact a command writes
//! embeds the config hash and root seed so runs can be reproduced and
//! cross-checked.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataeval::{gmm_sample, train_test_split, GmmSpec, Table, TabularSchema};
use crate::embedding::GammaTarget;
use crate::error::{Error, Result};
use crate::featuremaps::{approx_error, FeatureMapSpec, RffSpec, SumMapSpec};
use crate::generator::{
    Activation, BoundsSource, Decoder, FeatureFamily, GeneratorArch, GeneratorModel,
    LabelSampling, OutputBlock, PrivacySetting, RhoSource, SumKernelScale, TrainConfig,
};
use crate::hermite::{median_heuristic, rho_from_length_scale, HermiteBasis, RHO_MAX, RHO_MIN};
use crate::rng::{fnv1a64, substream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Gmm2d,
    Tabular,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub task: TaskKind,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Rows written to the generated-sample dump after training.
    pub sample_dump: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            task: TaskKind::Gmm2d,
            seed: 0,
            output_dir: None,
            sample_dump: 5000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmmSection {
    pub grid: usize,
    pub spacing: f64,
    pub origin: f64,
    pub std: f64,
    pub samples_per_cluster: usize,
    pub test_fraction: f64,
}

impl Default for GmmSection {
    fn default() -> Self {
        GmmSection {
            grid: 5,
            spacing: 1.0,
            origin: 0.0,
            std: 0.2,
            samples_per_cluster: 400,
            test_fraction: 0.1,
        }
    }
}

impl GmmSection {
    pub fn spec(&self) -> Result<GmmSpec> {
        GmmSpec::new(self.grid, self.spacing, self.origin, self.std)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub train_csv: PathBuf,
    pub schema: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesSection {
    pub order_sum: usize,
    pub order_prod: usize,
    pub prod_dims: usize,
    /// "median" or a positive number interpreted as an explicit length scale.
    pub length_scale: Option<f64>,
    pub rho: Option<f64>,
    pub median_max_pairs: usize,
    pub sum_kernel_scale: SumKernelScale,
    /// Train against the random-Fourier baseline instead of the
    /// eigenfunction features.
    pub rff_baseline: bool,
    pub rff_features: usize,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        FeaturesSection {
            order_sum: 25,
            order_prod: 25,
            prod_dims: 2,
            length_scale: None,
            rho: None,
            median_max_pairs: 100_000,
            sum_kernel_scale: SumKernelScale::Global,
            rff_baseline: false,
            rff_features: 30_000,
        }
    }
}

impl FeaturesSection {
    pub fn rho_source(&self) -> Result<RhoSource> {
        match (self.length_scale, self.rho) {
            (Some(_), Some(_)) => Err(Error::Config(
                "set either features.length_scale or features.rho, not both".into(),
            )),
            (Some(l), None) => Ok(RhoSource::LengthScale(l)),
            (None, Some(r)) => Ok(RhoSource::Rho(r)),
            (None, None) => Ok(RhoSource::Median {
                max_pairs: self.median_max_pairs,
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_rate: f64,
    pub learning_rate: f64,
    pub gamma: f64,
    pub gamma_target: GammaTarget,
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub resubsample_every_epoch: bool,
    /// "uniform", "empirical", or "privatized".
    pub label_sampling: String,
    pub label_budget_fraction: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            epochs: 10,
            batch_rate: 0.1,
            learning_rate: 0.01,
            gamma: 1.0,
            gamma_target: GammaTarget::Product,
            latent_dim: 10,
            hidden: vec![200, 200],
            activation: Activation::Relu,
            resubsample_every_epoch: true,
            label_sampling: "uniform".into(),
            label_budget_fraction: 0.1,
        }
    }
}

impl TrainSection {
    pub fn label_sampling(&self) -> Result<LabelSampling> {
        match self.label_sampling.as_str() {
            "uniform" => Ok(LabelSampling::Uniform),
            "empirical" => Ok(LabelSampling::Empirical),
            "privatized" => Ok(LabelSampling::Privatized {
                budget_fraction: self.label_budget_fraction,
            }),
            other => Err(Error::Config(format!(
                "unknown label_sampling {other:?}; expected uniform, empirical, or privatized"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrivacySection {
    pub non_private: bool,
    pub epsilon: f64,
    pub delta: f64,
    pub split_fraction: f64,
}

impl Default for PrivacySection {
    fn default() -> Self {
        PrivacySection {
            non_private: false,
            epsilon: 1.0,
            delta: 1e-5,
            split_fraction: crate::privacy::DEFAULT_SPLIT_FRACTION,
        }
    }
}

impl PrivacySection {
    pub fn setting(&self) -> PrivacySetting {
        if self.non_private {
            PrivacySetting::NonPrivate
        } else {
            PrivacySetting::Private {
                epsilon: self.epsilon,
                delta: self.delta,
                split_fraction: self.split_fraction,
            }
        }
    }
}

/// Two-sample benchmark layout: n draws from N(0,1) against n draws from
/// N(shift,1), shared median-heuristic length scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub n: usize,
    pub mean_shift: f64,
    pub hp_orders: Vec<usize>,
    pub rf_counts: Vec<usize>,
    pub rf_redraws: usize,
}

impl Default for BenchSection {
    fn default() -> Self {
        BenchSection {
            n: 100,
            mean_shift: 1.0,
            hp_orders: (1..=10).collect(),
            rf_counts: vec![10, 50, 100, 200, 500, 1000],
            rf_redraws: 10,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub gmm: GmmSection,
    pub data: DataSection,
    pub features: FeaturesSection,
    pub train: TrainSection,
    pub privacy: PrivacySection,
    pub bench: BenchSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.task == TaskKind::Tabular {
            if self.data.train_csv.as_os_str().is_empty() {
                return Err(Error::Config(
                    "tabular task needs data.train_csv".into(),
                ));
            }
            if self.data.schema.as_os_str().is_empty() {
                return Err(Error::Config("tabular task needs data.schema".into()));
            }
        }
        self.features.rho_source()?;
        self.train.label_sampling()?;
        Ok(())
    }

    /// Stable hex hash of the fully-resolved config.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config always serializes");
        format!("{:016x}", fnv1a64(canonical.as_bytes()))
    }
}

/// Data and metadata a task provides to the trainer.
pub struct TaskData {
    /// Encoded features: raw coordinates for the mixture task, [0,1]
    /// one-hot/min-max encoding for tabular.
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub bounds: BoundsSource,
    pub output_blocks: Vec<OutputBlock>,
    pub schema: Option<TabularSchema>,
    pub gmm_spec: Option<GmmSpec>,
    pub feature_names: Vec<String>,
    pub label_name: String,
    /// Real held-out split, for the mixture task.
    pub holdout: Option<(Array2<f64>, Vec<usize>)>,
}

/// Materialize the configured task: sample the mixture or ingest the CSV.
pub fn load_task(config: &ExperimentConfig) -> Result<TaskData> {
    match config.experiment.task {
        TaskKind::Gmm2d => {
            let spec = config.gmm.spec()?;
            let total = config.gmm.samples_per_cluster * spec.num_clusters();
            let mut rng = substream(config.experiment.seed, Stream::Data, 0);
            let (data, labels) = gmm_sample(&spec, total, &mut rng)?;
            let ((train_x, train_y), holdout) =
                train_test_split(data.view(), &labels, config.gmm.test_fraction, &mut rng)?;
            let bounds = if config.privacy.non_private {
                BoundsSource::FromData
            } else {
                // Geometry comes from the config, not the data.
                BoundsSource::Explicit(spec.feature_bounds())
            };
            Ok(TaskData {
                features: train_x,
                labels: train_y,
                num_classes: spec.num_classes(),
                bounds,
                output_blocks: vec![OutputBlock {
                    decoder: Decoder::Sigmoid,
                    width: 2,
                }],
                schema: None,
                gmm_spec: Some(spec),
                feature_names: vec!["x0".into(), "x1".into()],
                label_name: "label".into(),
                holdout: Some(holdout),
            })
        }
        TaskKind::Tabular => {
            let schema_text = std::fs::read_to_string(&config.data.schema)?;
            let schema = TabularSchema::from_json(&schema_text)?;
            let file = std::fs::File::open(&config.data.train_csv)?;
            let table = Table::read_csv(file, &schema)?;
            let encoded = crate::dataeval::encode(&table)?;
            let width = schema.encoded_width();
            Ok(TaskData {
                features: encoded.features,
                labels: encoded.labels,
                num_classes: schema.num_classes()?,
                // Encoding already lands in [0,1]^D by construction.
                bounds: BoundsSource::Explicit(vec![(0.0, 1.0); width]),
                output_blocks: schema.output_blocks(),
                feature_names: schema
                    .feature_columns()
                    .iter()
                    .map(|c| c.name.clone())
                    .collect(),
                label_name: schema.label.clone(),
                schema: Some(schema),
                gmm_spec: None,
                holdout: None,
            })
        }
    }
}

/// Assemble the trainer configuration for loaded task data.
pub fn build_train_config(config: &ExperimentConfig, task: &TaskData) -> Result<TrainConfig> {
    let arch = GeneratorArch {
        latent_dim: config.train.latent_dim,
        class_count: task.num_classes,
        hidden: config.train.hidden.clone(),
        activation: config.train.activation,
        output_blocks: task.output_blocks.clone(),
    };
    let feature_family = if config.features.rff_baseline {
        FeatureFamily::RandomFourier {
            num_features: config.features.rff_features,
        }
    } else {
        FeatureFamily::Hermite
    };
    Ok(TrainConfig {
        arch,
        epochs: config.train.epochs,
        batch_rate: config.train.batch_rate,
        learning_rate: config.train.learning_rate,
        gamma: config.train.gamma,
        gamma_target: config.train.gamma_target,
        order_sum: config.features.order_sum,
        order_prod: config.features.order_prod,
        prod_dims: config.features.prod_dims.min(task.features.ncols()),
        rho_source: config.features.rho_source()?,
        sum_kernel_scale: config.features.sum_kernel_scale,
        resubsample_every_epoch: config.train.resubsample_every_epoch,
        feature_family,
        privacy: config.privacy.setting(),
        bounds: task.bounds.clone(),
        label_sampling: config.train.label_sampling()?,
        seed: config.experiment.seed,
        noise_scale_override: None,
    })
}

/// Trained model plus everything needed to decode its samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub task: TaskKind,
    pub model: GeneratorModel,
    pub bounds: Vec<(f64, f64)>,
    pub label_probs: Vec<f64>,
    pub schema: Option<TabularSchema>,
    pub feature_names: Vec<String>,
    pub label_name: String,
}

impl Checkpoint {
    pub const VERSION: u32 = 1;

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let checkpoint: Checkpoint = serde_json::from_str(&text)?;
        if checkpoint.version != Self::VERSION {
            return Err(Error::Config(format!(
                "checkpoint version {} unsupported (expected {})",
                checkpoint.version,
                Self::VERSION
            )));
        }
        Ok(checkpoint)
    }
}

/// One row of the kernel-approximation benchmark.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    /// "hp" for eigenfunction features, "rf" for random Fourier features.
    pub family: String,
    pub order_or_count: usize,
    pub error: f64,
    pub stddev: f64,
}

/// Kernel-approximation error sweep on the two-sample layout: eigenfunction
/// features at each order, random features at each count averaged over
/// redraws. One median-heuristic length scale is fixed for the whole sweep.
pub fn features_bench(section: &BenchSection, seed: u64) -> Result<Vec<BenchRow>> {
    if section.n < 2 {
        return Err(Error::Config("bench needs at least two samples".into()));
    }
    if section.hp_orders.is_empty() {
        return Err(Error::Config("bench needs at least one order".into()));
    }
    if section.rf_redraws == 0 {
        return Err(Error::Config("bench needs at least one redraw".into()));
    }
    let mut data_rng = substream(seed, Stream::Data, 0);
    use rand_distr::Distribution;
    let normal = rand_distr::Normal::new(0.0, 1.0).map_err(|e| Error::Numeric(e.to_string()))?;
    let x = Array2::from_shape_fn((section.n, 1), |_| normal.sample(&mut data_rng));
    let y = Array2::from_shape_fn((section.n, 1), |_| {
        normal.sample(&mut data_rng) + section.mean_shift
    });
    let mut pooled = Array2::zeros((2 * section.n, 1));
    pooled.slice_mut(ndarray::s![..section.n, ..]).assign(&x);
    pooled.slice_mut(ndarray::s![section.n.., ..]).assign(&y);
    let mut eval_rng = substream(seed, Stream::Eval, 0);
    let length_scale = median_heuristic(pooled.view(), 1_000_000, &mut eval_rng)?;
    let rho = rho_from_length_scale(length_scale)?.clamp(RHO_MIN, RHO_MAX);

    let mut rows = Vec::new();
    for &order in &section.hp_orders {
        let spec = FeatureMapSpec::Sum(SumMapSpec::shared(HermiteBasis::new(rho, order)?, 1)?);
        let error = approx_error(x.view(), y.view(), &spec, length_scale)?;
        rows.push(BenchRow {
            family: "hp".into(),
            order_or_count: order,
            error,
            stddev: 0.0,
        });
    }
    for &count in &section.rf_counts {
        let mut errors = Vec::with_capacity(section.rf_redraws);
        for redraw in 0..section.rf_redraws {
            let rff_seed = substream(seed, Stream::Frequencies, redraw as u64)
                .get_seed()
                .iter()
                .fold(0u64, |acc, &b| acc.wrapping_mul(257).wrapping_add(b as u64));
            let spec =
                FeatureMapSpec::RandomFourier(RffSpec::new(1, count, length_scale, rff_seed)?);
            errors.push(approx_error(x.view(), y.view(), &spec, length_scale)?);
        }
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
            / errors.len() as f64;
        rows.push(BenchRow {
            family: "rf".into(),
            order_or_count: count,
            error: mean,
            stddev: var.sqrt(),
        });
    }
    Ok(rows)
}

/// Write benchmark rows as CSV, with the config hash and seed in a leading
/// comment line.
pub fn write_bench_csv(
    writer: impl std::io::Write,
    rows: &[BenchRow],
    config_hash: &str,
    seed: u64,
) -> Result<()> {
    let mut w = std::io::BufWriter::new(writer);
    use std::io::Write;
    writeln!(w, "# config_hash={config_hash} seed={seed}")?;
    writeln!(w, "family,order_or_count,error,stddev")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{}",
            row.family, row.order_or_count, row.error, row.stddev
        )?;
    }
    w.flush()?;
    Ok(())
}
