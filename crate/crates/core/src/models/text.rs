use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{from_envelope, to_envelope, ProbabilisticClassifier, Row, TextModel, TrainConfig};
use crate::error::Result;
use crate::text::{Corpus, TfidfVectorizer};

/// Word dropout, TF-IDF and a classifier chained into one text model.
/// Dropped words are removed from every input before vectorizing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextClassifier {
    dropped: BTreeSet<String>,
    vectorizer: TfidfVectorizer,
    model: ProbabilisticClassifier,
}

impl TextClassifier {
    pub fn train(config: &TrainConfig, corpus: &Corpus, dropped: &BTreeSet<String>) -> Result<Self> {
        let kept = corpus.drop_words(dropped);
        let vectorizer = TfidfVectorizer::fit(&kept);
        let rows: Vec<_> = kept.documents().iter().map(|d| vectorizer.transform(&d.tokens)).collect();
        let model = ProbabilisticClassifier::train_sparse(config, &rows, vectorizer.dim(), &kept.labels())?;
        Ok(TextClassifier {
            dropped: dropped.clone(),
            vectorizer,
            model,
        })
    }

    pub fn dropped(&self) -> &BTreeSet<String> {
        &self.dropped
    }

    pub fn vectorizer(&self) -> &TfidfVectorizer {
        &self.vectorizer
    }

    pub fn model(&self) -> &ProbabilisticClassifier {
        &self.model
    }

    pub fn to_json(&self) -> Result<String> {
        to_envelope(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        from_envelope(s)
    }
}

impl TextModel for TextClassifier {
    fn predict_proba(&self, tokens: &[String]) -> [f64; 2] {
        let kept: Vec<String> = tokens.iter().filter(|t| !self.dropped.contains(*t)).cloned().collect();
        let v = self.vectorizer.transform(&kept);
        let row = Row::Sparse {
            dim: self.vectorizer.dim(),
            entries: &v.entries,
        };
        self.model.predict_row(row).expect("vectorizer and model share a dimension")
    }

    fn ignores_word(&self, word: &str) -> bool {
        self.dropped.contains(word) || !self.vectorizer.vocabulary().contains(word)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{text_accuracy, ModelKind};
    use crate::text::synthetic::offensive_corpus;

    #[test]
    fn learns_planted_words_and_drops_them() {
        let corpus = offensive_corpus(400, 1);
        let none = BTreeSet::new();
        for kind in [ModelKind::Lr, ModelKind::Rf] {
            let m = TextClassifier::train(&TrainConfig::new(kind, 0), &corpus, &none).unwrap();
            assert!(text_accuracy(&m, &corpus).unwrap() > 0.75, "{kind}");
        }
        let dropped: BTreeSet<String> = ["idiot".to_string()].into();
        let m = TextClassifier::train(&TrainConfig::new(ModelKind::Lr, 0), &corpus, &dropped).unwrap();
        assert!(m.ignores_word("idiot"));
        assert!(!m.vectorizer().vocabulary().contains("idiot"));
        let with = m.predict_proba(&["idiot".to_string(), "game".to_string()]);
        let without = m.predict_proba(&["game".to_string()]);
        assert_eq!(with, without);
        let back = TextClassifier::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
