use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{drop_features, TabularDataset};
use crate::error::{Error, Result};
use crate::models::{ProbabilisticClassifier, TabularModel, TextClassifier, TextModel, TrainConfig};
use crate::rng::derive_seed;
use crate::text::{Corpus, WordGroup};

/// Weighted average of probability pairs; `None` means equal weights.
/// Weights are normalized to sum to one.
pub fn aggregate_probabilities(probs: &[[f64; 2]], weights: Option<&[f64]>) -> [f64; 2] {
    assert!(!probs.is_empty(), "no member probabilities");
    let p1 = match weights {
        None => probs.iter().map(|p| p[1]).sum::<f64>() / probs.len() as f64,
        Some(w) => {
            let total: f64 = w.iter().sum();
            probs.iter().zip(w).map(|(p, w)| p[1] * w).sum::<f64>() / total
        }
    };
    let p1 = p1.clamp(0.0, 1.0);
    [1.0 - p1, p1]
}

/// A model trained without some features. Callers pass full-width rows;
/// the member keeps only its own columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSubsetModel {
    n_features: usize,
    kept: Vec<usize>,
    model: ProbabilisticClassifier,
}

impl FeatureSubsetModel {
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn model(&self) -> &ProbabilisticClassifier {
        &self.model
    }
}

impl TabularModel for FeatureSubsetModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &[f64]) -> Result<[f64; 2]> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        let projected: Vec<f64> = self.kept.iter().map(|&j| x[j]).collect();
        self.model.predict_proba(&projected)
    }

    fn ignores_feature(&self, j: usize) -> bool {
        self.kept.binary_search(&j).is_err()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member<M> {
    /// Names of the dropped units.
    pub dropped: Vec<String>,
    pub model: M,
}

/// Models trained with different units dropped, combined by averaging
/// their class probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixOutEnsemble<M> {
    members: Vec<Member<M>>,
    weights: Option<Vec<f64>>,
}

impl<M> FixOutEnsemble<M> {
    pub fn new(members: Vec<Member<M>>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidArgument("an ensemble needs at least one member".into()));
        }
        Ok(FixOutEnsemble { members, weights: None })
    }

    /// Fixed non-negative member weights with a positive sum.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.members.len()
            || weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite())
            || weights.iter().sum::<f64>() <= 0.0
        {
            return Err(Error::InvalidArgument(
                "member weights must be finite, non-negative, one per member, with positive sum".into(),
            ));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn members(&self) -> &[Member<M>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn combine(&self, probs: &[[f64; 2]]) -> [f64; 2] {
        aggregate_probabilities(probs, self.weights.as_deref())
    }
}

impl<M: TabularModel + Send> TabularModel for FixOutEnsemble<M> {
    fn n_features(&self) -> usize {
        self.members[0].model.n_features()
    }

    fn predict_proba(&self, x: &[f64]) -> Result<[f64; 2]> {
        let probs = self
            .members
            .iter()
            .map(|m| m.model.predict_proba(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.combine(&probs))
    }

    fn ignores_feature(&self, j: usize) -> bool {
        self.members.iter().all(|m| m.model.ignores_feature(j))
    }
}

impl<M: TextModel + Send> TextModel for FixOutEnsemble<M> {
    fn predict_proba(&self, tokens: &[String]) -> [f64; 2] {
        let probs: Vec<[f64; 2]> = self.members.iter().map(|m| m.model.predict_proba(tokens)).collect();
        self.combine(&probs)
    }

    fn ignores_word(&self, word: &str) -> bool {
        self.members.iter().all(|m| m.model.ignores_word(word))
    }
}

/// One member per dropped feature plus one dropping all of them. Member
/// `t` trains with a seed derived from the config seed and `t`.
pub fn build_tabular_ensemble(
    config: &TrainConfig,
    train: &TabularDataset,
    units: &[String],
) -> Result<FixOutEnsemble<FeatureSubsetModel>> {
    if units.is_empty() {
        return Err(Error::InvalidArgument("no sensitive features to drop".into()));
    }
    let mut drops: Vec<Vec<String>> = units.iter().map(|u| vec![u.clone()]).collect();
    drops.push(units.to_vec());
    let members = drops
        .into_par_iter()
        .enumerate()
        .map(|(t, dropped)| {
            let reduced = drop_features(train, &dropped)?;
            let kept: Vec<usize> = reduced
                .schema()
                .names()
                .iter()
                .map(|n| train.schema().index_of(n).expect("kept feature exists"))
                .collect();
            let model = ProbabilisticClassifier::train(&config.with_seed(derive_seed(config.seed, t as u64)), &reduced)?;
            Ok(Member {
                dropped,
                model: FeatureSubsetModel {
                    n_features: train.n_features(),
                    kept,
                    model,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FixOutEnsemble::new(members)
}

/// One member per word group plus one dropping every group's words. A
/// single word is a one-word group.
pub fn build_text_ensemble(
    config: &TrainConfig,
    corpus: &Corpus,
    units: &[WordGroup],
) -> Result<FixOutEnsemble<TextClassifier>> {
    if units.is_empty() {
        return Err(Error::InvalidArgument("no sensitive words to drop".into()));
    }
    let union: BTreeSet<String> = units.iter().flat_map(|g| g.words.iter().cloned()).collect();
    if corpus.vocabulary().terms().iter().all(|t| union.contains(t)) {
        return Err(Error::InvalidArgument("dropping every sensitive word empties the vocabulary".into()));
    }
    let mut drops: Vec<(Vec<String>, BTreeSet<String>)> =
        units.iter().map(|g| (vec![g.name.clone()], g.words.clone())).collect();
    drops.push((units.iter().map(|g| g.name.clone()).collect(), union));
    let members = drops
        .into_par_iter()
        .enumerate()
        .map(|(t, (dropped, words))| {
            let model = TextClassifier::train(&config.with_seed(derive_seed(config.seed, t as u64)), corpus, &words)?;
            Ok(Member { dropped, model })
        })
        .collect::<Result<Vec<_>>>()?;
    FixOutEnsemble::new(members)
}
