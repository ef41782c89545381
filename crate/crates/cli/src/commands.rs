use std::collections::BTreeSet;
use std::fmt::Write as _;

use fixout::dataset::{csv_field, pearson_correlation, smote_oversample, train_test_split, TabularDataset, DEFAULT_SMOTE_NEIGHBORS};
use fixout::explain::{KernelConfig, TrainingStats};
use fixout::fairness::{
    assess_fairness, find_k, fixout_tabular, fixout_text, rank_diff_csv, FairnessVerdict, FixOutSettings, KSpec,
};
use fixout::global::{global_tabular, global_text, GlobalExplanation, GlobalSettings};
use fixout::models::{accuracy, text_accuracy, ProbabilisticClassifier, TextClassifier, TrainConfig};
use fixout::text::{balance_binary, split_corpus, Corpus, WordGroup};
use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigError, RunConfig};
use crate::data::{self, negative_label, Data};
use crate::output::{self, Outputs};

/// Loaded data with its sensitive units.
enum Setup {
    Tabular {
        ds: TabularDataset,
        sensitive: Vec<String>,
    },
    Text {
        corpus: Corpus,
        sensitive: Vec<String>,
        groups: Option<Vec<WordGroup>>,
    },
}

impl Setup {
    fn load(cfg: &RunConfig) -> anyhow::Result<Self> {
        Ok(match data::load(cfg)? {
            Data::Tabular(ds) => {
                let sensitive = data::tabular_sensitive(cfg, &ds)?;
                Setup::Tabular { ds, sensitive }
            }
            Data::Text(corpus) => Setup::Text {
                corpus,
                sensitive: data::text_sensitive(cfg)?,
                groups: data::word_groups(cfg)?,
            },
        })
    }

    /// Units checked by the verdict and listed in reports.
    fn units(&self) -> Vec<String> {
        match self {
            Setup::Tabular { sensitive, .. } => sensitive.clone(),
            Setup::Text { sensitive, groups, .. } => {
                let mut units = sensitive.clone();
                let mut seen: BTreeSet<String> = units.iter().cloned().collect();
                for g in groups.iter().flatten() {
                    units.extend(g.words.iter().filter(|w| seen.insert(w.to_string())).cloned());
                }
                units
            }
        }
    }
}

fn train_config(cfg: &RunConfig, seed: u64) -> TrainConfig {
    let mut tc = TrainConfig::new(cfg.model, seed);
    tc.n_estimators = cfg.n_estimators;
    tc.max_depth = cfg.max_depth;
    tc.learning_rate = cfg.learning_rate;
    tc
}

fn settings(cfg: &RunConfig, seed: u64) -> FixOutSettings {
    let mut kernel = KernelConfig::of_kind(cfg.explainer, seed);
    kernel.n_samples = cfg.n_samples;
    kernel.background_size = cfg.background_size;
    FixOutSettings::new(kernel, GlobalSettings::new(cfg.strategy, cfg.sample, seed), cfg.k)
}

fn rep_seed(cfg: &RunConfig, rep: usize) -> u64 {
    cfg.seed.wrapping_add(rep as u64)
}

fn split_tabular(cfg: &RunConfig, ds: &TabularDataset, seed: u64) -> anyhow::Result<(TabularDataset, TabularDataset)> {
    let (train, test) = train_test_split(ds, cfg.train_fraction, seed)?;
    let train = if cfg.smote {
        smote_oversample(&train, DEFAULT_SMOTE_NEIGHBORS, seed)?
    } else {
        train
    };
    Ok((train, test))
}

/// Trains on a fresh split and explains the model over the whole dataset.
fn explain_rep(cfg: &RunConfig, setup: &Setup, seed: u64) -> anyhow::Result<GlobalExplanation> {
    let s = settings(cfg, seed);
    let tc = train_config(cfg, seed);
    Ok(match setup {
        Setup::Tabular { ds, .. } => {
            let (train, _) = split_tabular(cfg, ds, seed)?;
            let model = ProbabilisticClassifier::train(&tc, &train)?;
            let stats = TrainingStats::fit(&train, cfg.background_size, seed)?;
            global_tabular(&model, ds, &stats, &s.kernel, &s.global)?
        }
        Setup::Text { corpus, .. } => {
            let (train, _) = split_corpus(corpus, cfg.train_fraction, seed)?;
            let model = TextClassifier::train(&tc, &train, &BTreeSet::new())?;
            global_text(&model, corpus, &s.kernel, &s.global)?
        }
    })
}

#[derive(Serialize)]
struct RunSummary {
    rep: usize,
    seed: u64,
    unfair: bool,
    k_used: usize,
    flagged: Vec<String>,
}

impl RunSummary {
    fn new(rep: usize, seed: u64, v: &FairnessVerdict) -> Self {
        RunSummary {
            rep,
            seed,
            unfair: v.unfair,
            k_used: v.k_used,
            flagged: v.flagged.clone(),
        }
    }
}

fn joined(items: &[String]) -> String {
    csv_field(&items.join(";"))
}

pub fn assess(cfg: &RunConfig) -> anyhow::Result<Outputs> {
    let setup = Setup::load(cfg)?;
    let units = setup.units();
    let mut out = Outputs::default();
    let mut verdicts = String::from("rep,seed,unfair,k_used,k_source,flagged\n");
    let mut runs = Vec::new();
    let mut globals = Vec::new();
    for rep in 0..cfg.reps {
        let seed = rep_seed(cfg, rep);
        let global = explain_rep(cfg, &setup, seed)?;
        let v = assess_fairness(&global, &units, cfg.k)?;
        writeln!(verdicts, "{rep},{seed},{},{},{},{}", v.unfair, v.k_used, v.k_source, joined(&v.flagged))?;
        out.add(format!("rep{rep}/global.csv"), global.to_csv());
        runs.push(RunSummary::new(rep, seed, &v));
        globals.push((global, v));
    }
    let mut table = String::from("unit,explained_reps,mean_rank,mean_contribution,in_top_k\n");
    for u in &units {
        let found: Vec<(usize, f64)> = globals
            .iter()
            .filter_map(|(g, _)| g.entry(u).map(|e| (e.rank + 1, e.contribution)))
            .collect();
        let in_top = globals.iter().filter(|(_, v)| v.flagged.contains(u)).count();
        let (rank, contrib) = if found.is_empty() {
            ("-".to_string(), "-".to_string())
        } else {
            let n = found.len() as f64;
            (
                (found.iter().map(|f| f.0 as f64).sum::<f64>() / n).to_string(),
                (found.iter().map(|f| f.1).sum::<f64>() / n).to_string(),
            )
        };
        writeln!(table, "{},{},{rank},{contrib},{in_top}", csv_field(u), found.len())?;
    }
    let unfair_count = runs.iter().filter(|r| r.unfair).count();
    out.add("verdicts.csv", verdicts);
    out.add("sensitive.csv", table);
    out.add(
        "summary.json",
        output::json(&json!({
            "command": "assess",
            "config": cfg,
            "reps": cfg.reps,
            "unfair_count": unfair_count,
            "mean_k": runs.iter().map(|r| r.k_used as f64).sum::<f64>() / runs.len() as f64,
            "runs": runs,
        }))?,
    );
    Ok(out)
}

pub fn fix(cfg: &RunConfig) -> anyhow::Result<Outputs> {
    let setup = Setup::load(cfg)?;
    let mut out = Outputs::default();
    let mut acc_table = String::from("rep,seed,unfair,members,original_accuracy,ensemble_accuracy\n");
    let mut runs = Vec::new();
    for rep in 0..cfg.reps {
        let seed = rep_seed(cfg, rep);
        let s = settings(cfg, seed);
        let tc = train_config(cfg, seed);
        let dir = format!("rep{rep}");
        let (outcome_parts, original_acc, ensemble_acc, members) = match &setup {
            Setup::Tabular { ds, sensitive } => {
                let (train, test) = split_tabular(cfg, ds, seed)?;
                let model = ProbabilisticClassifier::train(&tc, &train)?;
                let stats = TrainingStats::fit(&train, cfg.background_size, seed)?;
                let o = fixout_tabular(&model, &tc, &train, ds, &stats, sensitive, &s)?;
                out.add(format!("{dir}/model.json"), model.to_json()? + "\n");
                let ens_acc = o.ensemble.as_ref().map(|e| accuracy(e, &test)).transpose()?;
                let members = o.ensemble.as_ref().map_or(0, |e| e.len());
                if let Some(e) = &o.ensemble {
                    out.add(format!("{dir}/ensemble.json"), ensemble_json(e)?);
                }
                ((o.verdict, o.before, o.after, o.report), accuracy(&model, &test)?, ens_acc, members)
            }
            Setup::Text { corpus, sensitive, groups } => {
                let (train, test) = split_corpus(corpus, cfg.train_fraction, seed)?;
                let model = TextClassifier::train(&tc, &train, &BTreeSet::new())?;
                let o = fixout_text(&model, &tc, &train, corpus, sensitive, groups.as_deref(), &s)?;
                out.add(format!("{dir}/model.json"), model.to_json()? + "\n");
                let ens_acc = o.ensemble.as_ref().map(|e| text_accuracy(e, &test)).transpose()?;
                let members = o.ensemble.as_ref().map_or(0, |e| e.len());
                if let Some(e) = &o.ensemble {
                    out.add(format!("{dir}/ensemble.json"), ensemble_json(e)?);
                }
                ((o.verdict, o.before, o.after, o.report), text_accuracy(&model, &test)?, ens_acc, members)
            }
        };
        let (verdict, before, after, report) = outcome_parts;
        out.add(format!("{dir}/global_before.csv"), before.to_csv());
        if let Some(after) = &after {
            out.add(format!("{dir}/global_after.csv"), after.to_csv());
            out.add(format!("{dir}/rank_diff.csv"), rank_diff_csv(&report, s.window));
        }
        writeln!(
            acc_table,
            "{rep},{seed},{},{members},{original_acc},{}",
            verdict.unfair,
            ens_acc_text(ensemble_acc)
        )?;
        runs.push(json!({
            "rep": rep,
            "seed": seed,
            "unfair": verdict.unfair,
            "flagged": verdict.flagged,
            "k_used": verdict.k_used,
            "action": if verdict.unfair { "ensemble built" } else { "no action taken" },
            "members": members,
            "original_accuracy": original_acc,
            "ensemble_accuracy": ensemble_acc,
        }));
    }
    out.add("accuracy.csv", acc_table);
    out.add(
        "summary.json",
        output::json(&json!({ "command": "fix", "config": cfg, "runs": runs }))?,
    );
    Ok(out)
}

fn ens_acc_text(acc: Option<f64>) -> String {
    acc.map_or_else(|| "-".to_string(), |a| a.to_string())
}

fn ensemble_json<T: Serialize>(ensemble: &T) -> anyhow::Result<String> {
    output::json(&json!({ "format": "fixout-ensemble", "version": 1, "ensemble": ensemble }))
}

pub fn corr(cfg: &RunConfig) -> anyhow::Result<Outputs> {
    let Data::Tabular(ds) = data::load(cfg)? else {
        return Err(ConfigError("correlation analysis needs a tabular dataset".into()).into());
    };
    let m = pearson_correlation(&ds);
    let mut out = Outputs::default();
    out.add("correlation.csv", m.to_csv());
    out.add(
        "summary.json",
        output::json(&json!({ "command": "corr", "config": cfg, "features": ds.n_features() }))?,
    );
    Ok(out)
}

pub fn findk_sweep(cfg: &RunConfig) -> anyhow::Result<Outputs> {
    let setup = Setup::load(cfg)?;
    let units = setup.units();
    let mut runs = String::from("rep,seed,alpha,k,unfair\n");
    // (sum of k, unfair count) per alpha
    let mut totals = vec![(0usize, 0usize); cfg.alphas.len()];
    let mut out = Outputs::default();
    for rep in 0..cfg.reps {
        let seed = rep_seed(cfg, rep);
        let global = explain_rep(cfg, &setup, seed)?;
        let magnitudes: Vec<f64> = global.entries.iter().map(|e| e.contribution.abs()).collect();
        let mut previous: Option<usize> = None;
        for (i, &alpha) in cfg.alphas.iter().enumerate() {
            let v = assess_fairness(&global, &units, KSpec::auto(alpha))?;
            debug_assert_eq!(v.k_used, find_k(&magnitudes, alpha, false)?.k);
            if previous.is_some_and(|p| v.k_used > p) {
                log::warn!("rep {rep}: k rose from {} to {} at alpha {alpha}", previous.unwrap_or(0), v.k_used);
            }
            previous = Some(v.k_used);
            totals[i].0 += v.k_used;
            totals[i].1 += usize::from(v.unfair);
            writeln!(runs, "{rep},{seed},{alpha},{},{}", v.k_used, v.unfair)?;
        }
        out.add(format!("rep{rep}/global.csv"), global.to_csv());
    }
    let mut table = String::from("alpha,mean_k,unfair_count,reps\n");
    let mut rows = Vec::new();
    for (&alpha, &(k_sum, unfair)) in cfg.alphas.iter().zip(&totals) {
        let mean_k = k_sum as f64 / cfg.reps as f64;
        writeln!(table, "{alpha},{mean_k},{unfair},{}", cfg.reps)?;
        rows.push(json!({ "alpha": alpha, "mean_k": mean_k, "unfair_count": unfair }));
    }
    out.add("sweep.csv", table);
    out.add("sweep_runs.csv", runs);
    out.add(
        "summary.json",
        output::json(&json!({ "command": "findk-sweep", "config": cfg, "reps": cfg.reps, "sweep": rows }))?,
    );
    Ok(out)
}

pub fn prep(cfg: &RunConfig) -> anyhow::Result<Outputs> {
    let mut out = Outputs::default();
    match data::load(cfg)? {
        Data::Tabular(ds) => {
            let (train, test) = split_tabular(cfg, &ds, cfg.seed)?;
            let negative = negative_label(ds.schema(), &cfg.dataset);
            out.add("train.csv", tabular_csv(&train, &negative)?);
            out.add("test.csv", tabular_csv(&test, &negative)?);
            out.add(
                "summary.json",
                output::json(&json!({
                    "command": "prep",
                    "config": cfg,
                    "train": { "rows": train.n_instances(), "class_counts": train.class_counts() },
                    "test": { "rows": test.n_instances(), "class_counts": test.class_counts() },
                }))?,
            );
        }
        Data::Text(corpus) => {
            let balanced = balance_binary(&corpus, cfg.seed);
            let (train, test) = split_corpus(&balanced, cfg.train_fraction, cfg.seed)?;
            out.add("train.csv", corpus_csv(&train));
            out.add("test.csv", corpus_csv(&test));
            out.add(
                "summary.json",
                output::json(&json!({
                    "command": "prep",
                    "config": cfg,
                    "balanced_documents": balanced.len(),
                    "train": { "documents": train.len(), "class_counts": train.class_counts() },
                    "test": { "documents": test.len(), "class_counts": test.class_counts() },
                }))?,
            );
        }
    }
    Ok(out)
}

fn tabular_csv(ds: &TabularDataset, negative: &str) -> anyhow::Result<String> {
    let mut buf = Vec::new();
    ds.write_csv_to(&mut buf, negative)?;
    Ok(String::from_utf8(buf)?)
}

/// Hate-speech layout: class 1 for offensive, 2 for neither.
fn corpus_csv(corpus: &Corpus) -> String {
    let mut s = String::from("tweet,class\n");
    for d in corpus.documents() {
        s.push_str(&format!("{},{}\n", csv_field(&d.raw_text), if d.label == 1 { 1 } else { 2 }));
    }
    s
}
