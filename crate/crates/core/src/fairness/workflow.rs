use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{
    assess_fairness, build_tabular_ensemble, build_text_ensemble, FairnessVerdict, FeatureSubsetModel, FixOutEnsemble,
    KSpec, RankDiffEntry, RANK_WINDOW,
};
use crate::dataset::TabularDataset;
use crate::error::{Error, Result};
use crate::explain::{KernelConfig, TrainingStats};
use crate::global::{global_tabular, global_text, GlobalExplanation, GlobalSettings};
use crate::models::{TabularModel, TextClassifier, TextModel, TrainConfig};
use crate::text::{Corpus, WordGroup};

/// Explanation and verdict settings shared by the assessment and the
/// re-explanation of the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixOutSettings {
    pub kernel: KernelConfig,
    pub global: GlobalSettings,
    pub k: KSpec,
    pub window: usize,
}

impl FixOutSettings {
    pub fn new(kernel: KernelConfig, global: GlobalSettings, k: KSpec) -> Self {
        FixOutSettings {
            kernel,
            global,
            k,
            window: RANK_WINDOW,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixOutOutcome<M> {
    pub verdict: FairnessVerdict,
    pub before: GlobalExplanation,
    /// Present only when the model was deemed unfair.
    pub ensemble: Option<FixOutEnsemble<M>>,
    pub after: Option<GlobalExplanation>,
    /// One entry per sensitive unit; empty when nothing was repaired.
    pub report: Vec<RankDiffEntry>,
}

fn finish<M>(
    verdict: FairnessVerdict,
    before: GlobalExplanation,
    repaired: Option<(FixOutEnsemble<M>, GlobalExplanation)>,
    units: &[String],
    window: usize,
) -> FixOutOutcome<M> {
    match repaired {
        None => FixOutOutcome {
            verdict,
            before,
            ensemble: None,
            after: None,
            report: Vec::new(),
        },
        Some((ensemble, after)) => {
            let report = units
                .iter()
                .map(|u| RankDiffEntry::compare(u, &before, &after, window))
                .collect();
            FixOutOutcome {
                verdict,
                before,
                ensemble: Some(ensemble),
                after: Some(after),
                report,
            }
        }
    }
}

/// Assesses `model` on the rows of `data`; when unfair, trains the dropout
/// ensemble on `train` over the flagged features and re-explains it with
/// the same settings.
#[allow(clippy::too_many_arguments)]
pub fn fixout_tabular(
    model: &dyn TabularModel,
    config: &TrainConfig,
    train: &TabularDataset,
    data: &TabularDataset,
    stats: &TrainingStats,
    sensitive: &[String],
    settings: &FixOutSettings,
) -> Result<FixOutOutcome<FeatureSubsetModel>> {
    for s in sensitive {
        if train.schema().index_of(s).is_none() {
            return Err(Error::UnknownFeature(s.clone()));
        }
    }
    let before = global_tabular(model, data, stats, &settings.kernel, &settings.global)?;
    let verdict = assess_fairness(&before, sensitive, settings.k)?;
    let repaired = if verdict.unfair {
        let ensemble = build_tabular_ensemble(config, train, &verdict.flagged)?;
        let after = global_tabular(&ensemble, data, stats, &settings.kernel, &settings.global)?;
        Some((ensemble, after))
    } else {
        None
    };
    Ok(finish(verdict, before, repaired, sensitive, settings.window))
}

/// Text counterpart of [`fixout_tabular`]. `sensitive` holds stemmed words.
/// With `groups` the ensemble drops whole groups (one member per group plus
/// the union); otherwise it drops each flagged word. The report covers the
/// sensitive words and every grouped word.
pub fn fixout_text(
    model: &dyn TextModel,
    config: &TrainConfig,
    train: &Corpus,
    corpus: &Corpus,
    sensitive: &[String],
    groups: Option<&[WordGroup]>,
    settings: &FixOutSettings,
) -> Result<FixOutOutcome<TextClassifier>> {
    let mut units: Vec<String> = sensitive.to_vec();
    let mut seen: BTreeSet<String> = units.iter().cloned().collect();
    for g in groups.unwrap_or(&[]) {
        for w in &g.words {
            if seen.insert(w.clone()) {
                units.push(w.clone());
            }
        }
    }
    let before = global_text(model, corpus, &settings.kernel, &settings.global)?;
    let verdict = assess_fairness(&before, &units, settings.k)?;
    let repaired = if verdict.unfair {
        let dropped: Vec<WordGroup> = match groups {
            Some(g) => g.to_vec(),
            None => verdict
                .flagged
                .iter()
                .map(|w| WordGroup {
                    name: w.clone(),
                    words: BTreeSet::from([w.clone()]),
                })
                .collect(),
        };
        let ensemble = build_text_ensemble(config, train, &dropped)?;
        let after = global_text(&ensemble, corpus, &settings.kernel, &settings.global)?;
        Some((ensemble, after))
    } else {
        None
    };
    Ok(finish(verdict, before, repaired, &units, settings.window))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synthetic::german_surrogate;
    use crate::global::{SampleSpec, Strategy};
    use crate::models::{ModelKind, ProbabilisticClassifier};
    use crate::text::synthetic::{offensive_corpus, sensitive_groups, SENSITIVE_WORDS};

    fn settings(k: KSpec) -> FixOutSettings {
        let mut kernel = KernelConfig::lime(5);
        kernel.n_samples = 300;
        FixOutSettings::new(kernel, GlobalSettings::new(Strategy::Rs, SampleSpec::Count(15), 5), k)
    }

    #[test]
    fn tabular_fair_and_unfair_branches() {
        let ds = german_surrogate(300, 4);
        let stats = TrainingStats::fit(&ds, 50, 0).unwrap();
        let cfg = TrainConfig::new(ModelKind::Lr, 2);
        let model = ProbabilisticClassifier::train(&cfg, &ds).unwrap();
        let sensitive = ds.schema().sensitive_names();

        let unfair = fixout_tabular(&model, &cfg, &ds, &ds, &stats, &sensitive, &settings(KSpec::Manual(ds.n_features())))
            .unwrap();
        assert!(unfair.verdict.unfair);
        let ensemble = unfair.ensemble.as_ref().unwrap();
        assert_eq!(ensemble.len(), unfair.verdict.flagged.len() + 1);
        assert_eq!(unfair.report.len(), sensitive.len());
        let after = unfair.after.as_ref().unwrap();
        assert_eq!(after.sample_size, unfair.before.sample_size);
        assert_eq!(after.instance_ids, unfair.before.instance_ids);

        let fair = fixout_tabular(&model, &cfg, &ds, &ds, &stats, &[], &settings(KSpec::Manual(5))).unwrap();
        assert!(!fair.verdict.unfair && fair.ensemble.is_none() && fair.report.is_empty());
        assert!(fixout_tabular(&model, &cfg, &ds, &ds, &stats, &["nope".into()], &settings(KSpec::Manual(5))).is_err());
    }

    #[test]
    fn text_per_word_and_grouped() {
        let corpus = offensive_corpus(200, 3);
        let cfg = TrainConfig::new(ModelKind::Lr, 1);
        let model = TextClassifier::train(&cfg, &corpus, &BTreeSet::new()).unwrap();
        let words: Vec<String> = SENSITIVE_WORDS.iter().map(|w| w.to_string()).collect();
        let mut s = settings(KSpec::Manual(1000));
        s.global.sample = SampleSpec::Count(100);
        let out = fixout_text(&model, &cfg, &corpus, &corpus, &words, None, &s).unwrap();
        assert!(out.verdict.unfair);
        let e = out.ensemble.unwrap();
        assert_eq!(e.len(), out.verdict.flagged.len() + 1);
        let union = &e.members().last().unwrap().model;
        assert!(out.verdict.flagged.iter().all(|w| union.ignores_word(w)));
        assert_eq!(out.report.len(), 7);

        let groups = sensitive_groups();
        let grouped = fixout_text(&model, &cfg, &corpus, &corpus, &[], Some(&groups), &s).unwrap();
        assert_eq!(grouped.ensemble.unwrap().len(), 3);
        assert_eq!(grouped.report.len(), 7);
    }
}
