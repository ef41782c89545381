//! Dataset resolution: builtin schemas, custom schemas, synthetic stand-ins.

use std::collections::BTreeSet;

use fixout::dataset::{builtin_schema, load_csv, synthetic::german_surrogate, CsvOptions, FeatureSchema, TabularDataset};
use fixout::text::synthetic::{offensive_corpus, SENSITIVE_WORDS};
use fixout::text::{load_hatespeech, Corpus, WordGroup};

use crate::config::{ConfigError, RunConfig};

/// Sensitive words of the hate-speech data, before stemming.
pub const HATESPEECH_SENSITIVE: [&str; 3] = ["niggah", "nigger", "nig"];

pub enum Data {
    Tabular(TabularDataset),
    Text(Corpus),
}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

pub fn negative_label(schema: &FeatureSchema, dataset: &str) -> String {
    match dataset {
        "german" | "synthetic-german" => "2".into(),
        "adult" => "<=50K".into(),
        "lsac" => "0".into(),
        _ => format!("not_{}", schema.positive_label),
    }
}

pub fn load(cfg: &RunConfig) -> anyhow::Result<Data> {
    let data_path = || {
        cfg.data
            .as_deref()
            .ok_or_else(|| bad(format!("dataset `{}` needs a data file (--data)", cfg.dataset)))
    };
    match cfg.dataset.as_str() {
        "synthetic-german" => Ok(Data::Tabular(german_surrogate(size_or(cfg, 1000), cfg.seed))),
        "synthetic-text" => Ok(Data::Text(offensive_corpus(size_or(cfg, 2000), cfg.seed))),
        "hatespeech" => Ok(Data::Text(load_hatespeech(data_path()?)?)),
        name => {
            let schema = match (&cfg.schema, builtin_schema(name)) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| bad(format!("cannot read schema {}: {e}", path.display())))?;
                    serde_json::from_str(&text).map_err(|e| bad(format!("invalid schema {}: {e}", path.display())))?
                }
                (None, Some(schema)) => schema,
                (None, None) => return Err(bad(format!("unknown dataset `{name}` and no --schema given"))),
            };
            let options = CsvOptions {
                delimiter: cfg.delimiter as u8,
            };
            Ok(Data::Tabular(load_csv(data_path()?, &schema, options)?))
        }
    }
}

fn size_or(cfg: &RunConfig, default: usize) -> usize {
    if cfg.synthetic_size == 0 {
        default
    } else {
        cfg.synthetic_size
    }
}

/// Configured sensitive features, or the schema's marked ones.
pub fn tabular_sensitive(cfg: &RunConfig, ds: &TabularDataset) -> anyhow::Result<Vec<String>> {
    let names = cfg.sensitive.clone().unwrap_or_else(|| ds.schema().sensitive_names());
    for n in &names {
        if ds.schema().index_of(n).is_none() {
            return Err(bad(format!("sensitive feature `{n}` is not in the dataset")));
        }
    }
    Ok(names)
}

/// Stemmed sensitive words: configured, or the dataset's builtin list.
/// With groups configured and no explicit list, the grouped words alone.
pub fn text_sensitive(cfg: &RunConfig) -> anyhow::Result<Vec<String>> {
    let raw: Vec<String> = match (&cfg.sensitive, &cfg.groups, cfg.dataset.as_str()) {
        (Some(list), _, _) => list.clone(),
        (None, Some(_), _) => Vec::new(),
        (None, None, "synthetic-text") => SENSITIVE_WORDS.iter().map(|w| w.to_string()).collect(),
        (None, None, _) => HATESPEECH_SENSITIVE.iter().map(|w| w.to_string()).collect(),
    };
    let mut seen = BTreeSet::new();
    let mut words = Vec::new();
    for w in &raw {
        for stem in &WordGroup::from_raw(w, &[w]).map_err(|e| bad(e.to_string()))?.words {
            if seen.insert(stem.clone()) {
                words.push(stem.clone());
            }
        }
    }
    Ok(words)
}

pub fn word_groups(cfg: &RunConfig) -> anyhow::Result<Option<Vec<WordGroup>>> {
    cfg.groups
        .as_ref()
        .map(|groups| {
            groups
                .iter()
                .map(|(name, words)| WordGroup::from_raw(name, words).map_err(|e| bad(e.to_string())))
                .collect()
        })
        .transpose()
}
