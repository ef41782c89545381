//! Run configuration: a flat TOML file whose keys mirror the long flags.
//! A flag given on the command line wins over the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use fixout::explain::ExplainerKind;
use fixout::fairness::KSpec;
use fixout::global::{SampleSpec, Strategy};
use fixout::models::ModelKind;
use serde::{Deserialize, Serialize};

/// A configuration problem; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Options shared by every command. Each one may also come from the file
/// named by `--config`, under the same name with `_` for `-`.
#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Flat TOML file with any of the options below
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// german | adult | lsac | hatespeech | synthetic-german | synthetic-text
    #[arg(long)]
    pub dataset: Option<String>,
    /// Data file for the dataset
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// JSON feature schema for a custom tabular dataset
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Field delimiter of tabular files
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Rows or documents generated for synthetic datasets
    #[arg(long)]
    pub synthetic_size: Option<usize>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n_estimators: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Comma-separated sensitive features or words
    #[arg(long)]
    pub sensitive: Option<String>,
    /// TOML file of word groups: `name = ["word", ...]`
    #[arg(long)]
    pub groups: Option<PathBuf>,
    #[arg(long)]
    pub explainer: Option<String>,
    /// Perturbations or coalitions per local explanation
    #[arg(long)]
    pub n_samples: Option<usize>,
    /// Training rows averaged over by SHAP
    #[arg(long)]
    pub background_size: Option<usize>,
    #[arg(long)]
    pub strategy: Option<String>,
    /// Instances to explain: a percentage (`5%`), a fraction or a count
    #[arg(long)]
    pub sample: Option<String>,
    /// Top features inspected: an integer or `auto`
    #[arg(long)]
    pub k: Option<String>,
    /// Kurtosis threshold used with `--k auto`
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Comma-separated thresholds for `findk-sweep`
    #[arg(long)]
    pub alphas: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Oversample the training split with SMOTE
    #[arg(long)]
    pub smote: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! merge {
    ($flags:ident, $file:ident, $($field:ident),*) => {
        Options {
            config: $flags.config.clone(),
            $($field: $flags.$field.clone().or($file.$field),)*
        }
    };
}

impl Options {
    /// Fills options missing from the command line with the config file's.
    pub fn merged(&self) -> anyhow::Result<Options> {
        let Some(path) = &self.config else {
            return Ok(self.clone());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read config {}: {e}", path.display())))?;
        let file: Options =
            toml::from_str(&text).map_err(|e| bad(format!("invalid config {}: {e}", path.display())))?;
        let flags = self;
        Ok(merge!(
            flags, file, dataset, data, schema, delimiter, synthetic_size, model, n_estimators, max_depth,
            learning_rate, sensitive, groups, explainer, n_samples, background_size, strategy, sample, k, alpha,
            alphas, seed, reps, train_fraction, smote, out
        ))
    }
}

/// Validated settings of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub dataset: String,
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub delimiter: char,
    pub synthetic_size: usize,
    pub model: ModelKind,
    pub n_estimators: Option<usize>,
    pub max_depth: Option<usize>,
    pub learning_rate: f64,
    pub sensitive: Option<Vec<String>>,
    pub groups: Option<BTreeMap<String, Vec<String>>>,
    pub explainer: ExplainerKind,
    pub n_samples: usize,
    pub background_size: usize,
    pub strategy: Strategy,
    pub sample: SampleSpec,
    pub k: KSpec,
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub reps: usize,
    pub train_fraction: f64,
    pub smote: bool,
    #[serde(skip)]
    pub out: PathBuf,
}

fn parse_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect()
}

fn read_groups(path: &Path) -> anyhow::Result<BTreeMap<String, Vec<String>>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| bad(format!("cannot read groups {}: {e}", path.display())))?;
    let groups: BTreeMap<String, Vec<String>> =
        toml::from_str(&text).map_err(|e| bad(format!("invalid groups {}: {e}", path.display())))?;
    if groups.is_empty() {
        return Err(bad("groups file defines no group"));
    }
    Ok(groups)
}

impl RunConfig {
    pub fn from_options(opts: &Options) -> anyhow::Result<Self> {
        let o = opts.merged()?;
        let dataset = o.dataset.clone().ok_or_else(|| bad("no dataset given (--dataset)"))?;
        let model: ModelKind = o
            .model
            .as_deref()
            .unwrap_or("lr")
            .parse()
            .map_err(|e| bad(format!("{e}")))?;
        let explainer: ExplainerKind = o
            .explainer
            .as_deref()
            .unwrap_or("lime")
            .parse()
            .map_err(|e| bad(format!("{e}")))?;
        let strategy: Strategy = o
            .strategy
            .as_deref()
            .unwrap_or("rs")
            .parse()
            .map_err(|e| bad(format!("{e}")))?;
        let sample: SampleSpec = o
            .sample
            .as_deref()
            .unwrap_or("5%")
            .parse()
            .map_err(|e| bad(format!("{e}")))?;
        let alpha = o.alpha.unwrap_or(0.5);
        if !(alpha > 0.0) {
            return Err(bad("alpha must be positive"));
        }
        let k = match o.k.as_deref().unwrap_or("10") {
            "auto" => KSpec::auto(alpha),
            v => match v.parse::<usize>() {
                Ok(k) if k > 0 => KSpec::Manual(k),
                _ => return Err(bad(format!("k must be a positive integer or `auto`, got `{v}`"))),
            },
        };
        let alphas = match &o.alphas {
            Some(list) => parse_list(list)
                .iter()
                .map(|a| match a.parse::<f64>() {
                    Ok(v) if v > 0.0 => Ok(v),
                    _ => Err(bad(format!("invalid alpha `{a}`"))),
                })
                .collect::<anyhow::Result<Vec<f64>>>()?,
            None => vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
        };
        if alphas.is_empty() {
            return Err(bad("no alpha values given"));
        }
        let reps = o.reps.unwrap_or(1);
        if reps == 0 {
            return Err(bad("reps must be at least 1"));
        }
        let train_fraction = o.train_fraction.unwrap_or(0.7);
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(bad("train_fraction must lie in (0, 1)"));
        }
        let n_samples = o.n_samples.unwrap_or(5000);
        if n_samples == 0 {
            return Err(bad("n_samples must be positive"));
        }
        let delimiter = o.delimiter.unwrap_or(',');
        if !delimiter.is_ascii() {
            return Err(bad("delimiter must be a single ASCII character"));
        }
        for p in [&o.data, &o.schema, &o.groups].into_iter().flatten() {
            if !p.exists() {
                return Err(bad(format!("{} does not exist", p.display())));
            }
        }
        Ok(RunConfig {
            dataset,
            data: o.data.clone(),
            schema: o.schema.clone(),
            delimiter,
            synthetic_size: o.synthetic_size.unwrap_or(0),
            model,
            n_estimators: o.n_estimators,
            max_depth: o.max_depth,
            learning_rate: o.learning_rate.unwrap_or(1.0),
            sensitive: o.sensitive.as_deref().map(parse_list),
            groups: o.groups.as_deref().map(read_groups).transpose()?,
            explainer,
            n_samples,
            background_size: o.background_size.unwrap_or(100),
            strategy,
            sample,
            k,
            alphas,
            seed: o.seed.unwrap_or(0),
            reps,
            train_fraction,
            smote: o.smote.unwrap_or(false),
            out: o.out.clone().unwrap_or_else(|| PathBuf::from("fixout-out")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "dataset = \"synthetic-german\"\nseed = 7\nreps = 3\nk = \"auto\"\nalpha = 1.5\n").unwrap();
        let flags = Options {
            config: Some(path),
            seed: Some(11),
            ..Options::default()
        };
        let cfg = RunConfig::from_options(&flags).unwrap();
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.reps, 3);
        assert_eq!(cfg.dataset, "synthetic-german");
        assert_eq!(cfg.k, KSpec::auto(1.5));
    }

    #[test]
    fn rejects_bad_values() {
        let base = Options {
            dataset: Some("german".into()),
            ..Options::default()
        };
        for tweak in [
            Options { k: Some("0".into()), ..base.clone() },
            Options { reps: Some(0), ..base.clone() },
            Options { model: Some("svm".into()), ..base.clone() },
            Options { alphas: Some("0.5,-1".into()), ..base.clone() },
            Options { data: Some("/no/such/file".into()), ..base.clone() },
        ] {
            let err = RunConfig::from_options(&tweak).unwrap_err();
            assert!(err.downcast_ref::<ConfigError>().is_some());
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "unknown_key = 1\n").unwrap();
        let err = RunConfig::from_options(&Options { config: Some(path), ..base }).unwrap_err();
        assert!(err.downcast_ref::<ConfigError>().is_some());
    }
}
