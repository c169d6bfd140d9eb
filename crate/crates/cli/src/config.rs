//! Run configuration: one JSON document describing data, training and
//! evaluation.

use std::path::{Path, PathBuf};

use inae_core::dataset::read_csv_file;
use inae_core::graph::GraphConfig;
use inae_core::idx::load_idx;
use inae_core::{gen_two_moons, Dataset, MinMaxScaler, TrainConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

fn default_dim() -> usize {
    9
}
fn default_true() -> bool {
    true
}
fn default_svm_reg() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Generated training and test sets; the test set uses `test_seed`
    /// (default `seed + 1`). Features are min-max scaled with training
    /// statistics unless `scale` is false.
    TwoMoons {
        n_per_class: usize,
        #[serde(default = "default_dim")]
        dim: usize,
        noise: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        test_n_per_class: Option<usize>,
        #[serde(default)]
        test_seed: Option<u64>,
        #[serde(default = "default_true")]
        scale: bool,
    },
    Csv {
        train: PathBuf,
        #[serde(default)]
        test: Option<PathBuf>,
        #[serde(default = "default_true")]
        has_labels: bool,
        #[serde(default)]
        scale: bool,
    },
    /// Disjoint seeded subsets of an IDX image/label pair.
    Idx {
        images: PathBuf,
        labels: PathBuf,
        train: usize,
        test: usize,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    #[serde(default = "default_svm_reg")]
    pub svm_reg: f64,
    #[serde(default)]
    pub fisher_ridge: Option<f64>,
    /// Graph used for the locality ratios; defaults to the training graph.
    #[serde(default)]
    pub graph: Option<GraphConfig>,
    /// Adds a row for the raw input features.
    #[serde(default)]
    pub baseline: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            svm_reg: default_svm_reg(),
            fisher_ridge: None,
            graph: None,
            baseline: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSource,
    pub train: TrainConfig,
    /// Layers after the first, used by `--method stack`.
    #[serde(default)]
    pub layers: Vec<TrainConfig>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub eval: EvalConfig,
}

/// Parsed configuration plus the raw document, kept to tell explicitly set
/// keys from defaults.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub run: RunConfig,
    pub raw: serde_json::Value,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let raw: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config JSON: {e}")))?;
        let run: RunConfig =
            serde_json::from_value(raw.clone()).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(LoadedConfig { run, raw, base_dir })
    }

    pub fn train_sets_key(&self, key: &str) -> bool {
        self.raw.get("train").and_then(|t| t.get(key)).is_some()
    }

    /// Resolves `path` against the config file's directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> CliResult<PathBuf> {
        match (flag, &self.run.output_dir) {
            (Some(p), _) => Ok(p.to_path_buf()),
            (None, Some(p)) => Ok(self.resolve(p)),
            (None, None) => Err(CliError::Usage("no output directory: pass -o or set output_dir".into())),
        }
    }

    /// Loads the training set and, when the source defines one, a test set.
    pub fn load_data(&self) -> CliResult<(Dataset, Option<Dataset>)> {
        match &self.run.data {
            DataSource::TwoMoons {
                n_per_class,
                dim,
                noise,
                seed,
                test_n_per_class,
                test_seed,
                scale,
            } => {
                let train = gen_two_moons(*n_per_class, *dim, *noise, *seed)?;
                let test = gen_two_moons(
                    test_n_per_class.unwrap_or(*n_per_class),
                    *dim,
                    *noise,
                    test_seed.unwrap_or(seed.wrapping_add(1)),
                )?;
                if *scale {
                    let sc = MinMaxScaler::fit(&train)?;
                    Ok((sc.transform(&train)?, Some(sc.transform(&test)?)))
                } else {
                    Ok((train, Some(test)))
                }
            }
            DataSource::Csv {
                train,
                test,
                has_labels,
                scale,
            } => {
                let tr = read_csv_file(self.resolve(train), *has_labels)?;
                let te = test
                    .as_ref()
                    .map(|p| read_csv_file(self.resolve(p), *has_labels))
                    .transpose()?;
                if *scale {
                    let sc = MinMaxScaler::fit(&tr)?;
                    let te = te.map(|d| sc.transform(&d)).transpose()?;
                    Ok((sc.transform(&tr)?, te))
                } else {
                    Ok((tr, te))
                }
            }
            DataSource::Idx {
                images,
                labels,
                train,
                test,
                seed,
            } => {
                let all = load_idx(self.resolve(images), self.resolve(labels))?;
                let (tr, te) = idx_split(&all, *train, *test, *seed)?;
                Ok((tr, Some(te)))
            }
        }
    }
}

/// Disjoint training and test subsets drawn by a seeded shuffle.
pub fn idx_split(all: &Dataset, train: usize, test: usize, seed: u64) -> CliResult<(Dataset, Dataset)> {
    if train + test > all.len() {
        return Err(CliError::Usage(format!(
            "requested {train} + {test} samples from a file with {}",
            all.len()
        )));
    }
    let mut order: Vec<usize> = (0..all.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((all.subset(&order[..train]), all.subset(&order[train..train + test])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, serde_json::Error> {
        serde_json::from_str(text)
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse(
            r#"{"data": {"source": "two_moons", "n_per_class": 10, "noise": 0.1},
                "train": {"hidden_dim": 4}}"#,
        )
        .unwrap();
        assert_eq!(cfg.train.iterations, 5);
        assert_eq!(cfg.eval.svm_reg, 1e-4);
        assert!(cfg.layers.is_empty());
        match cfg.data {
            DataSource::TwoMoons { dim, scale, .. } => assert_eq!((dim, scale), (9, true)),
            _ => panic!("wrong source"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            r#"{"data": {"source": "two_moons", "n_per_class": 10, "noise": 0.1}, "train": {"hidden_dim": 4}, "extra": 1}"#,
            r#"{"data": {"source": "two_moons", "n_per_class": 10, "noise": 0.1, "colour": 1}, "train": {"hidden_dim": 4}}"#,
            r#"{"data": {"source": "two_moons", "n_per_class": 10, "noise": 0.1}, "train": {"hidden_dim": 4, "alpah": 1}}"#,
            r#"{"data": {"source": "parquet"}, "train": {"hidden_dim": 4}}"#,
        ] {
            assert!(parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn idx_split_is_disjoint() {
        let x = ndarray::Array2::from_shape_fn((1, 10), |(_, j)| j as f64);
        let ds = Dataset::new(x, Some((0..10).map(|i| i % 2).collect())).unwrap();
        let (a, b) = idx_split(&ds, 6, 4, 3).unwrap();
        let mut seen: Vec<f64> = a.samples.iter().chain(b.samples.iter()).copied().collect();
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, (0..10).map(|v| v as f64).collect::<Vec<_>>());
        assert!(idx_split(&ds, 6, 5, 3).is_err());
    }
}
