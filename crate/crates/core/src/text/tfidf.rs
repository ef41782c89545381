use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Corpus, Vocabulary};

/// Sparse TF-IDF weights, sorted by vocabulary index.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TfidfVector {
    pub entries: Vec<(usize, f64)>,
}

impl TfidfVector {
    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map(|p| self.entries[p].1)
            .unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
    }
}

impl AsRef<[(usize, f64)]> for TfidfVector {
    fn as_ref(&self) -> &[(usize, f64)] {
        &self.entries
    }
}

/// Raw term counts times smoothed idf, `ln((1 + N) / (1 + df)) + 1`,
/// L2-normalized per document. No frequency cutoffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfVectorizer {
    vocabulary: Vocabulary,
    idf: Vec<f64>,
}

impl TfidfVectorizer {
    pub fn fit(corpus: &Corpus) -> Self {
        let vocabulary = corpus.vocabulary().clone();
        let n = corpus.len() as f64;
        let idf = (0..vocabulary.len())
            .map(|i| ((1.0 + n) / (1.0 + vocabulary.doc_freq(i) as f64)).ln() + 1.0)
            .collect();
        TfidfVectorizer { vocabulary, idf }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn idf(&self, index: usize) -> f64 {
        self.idf[index]
    }

    /// Out-of-vocabulary tokens are ignored.
    pub fn transform(&self, tokens: &[String]) -> TfidfVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in tokens {
            if let Some(i) = self.vocabulary.index_of(t) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(i, tf)| (i, tf * self.idf[i]))
            .collect();
        let norm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in &mut entries {
                e.1 /= norm;
            }
        }
        TfidfVector { entries }
    }
}

pub fn build_tfidf(corpus: &Corpus) -> (Vocabulary, Vec<TfidfVector>) {
    let v = TfidfVectorizer::fit(corpus);
    let vectors = corpus.documents().iter().map(|d| v.transform(&d.tokens)).collect();
    (v.vocabulary, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::Document;
    use proptest::prelude::*;

    fn corpus(docs: &[&[&str]]) -> Corpus {
        Corpus::new(
            docs.iter()
                .enumerate()
                .map(|(i, toks)| Document {
                    id: i,
                    raw_text: String::new(),
                    tokens: toks.iter().map(|t| t.to_string()).collect(),
                    label: 0,
                })
                .collect(),
        )
    }

    #[test]
    fn rarer_term_outweighs_common_term() {
        let (vocab, vecs) = build_tfidf(&corpus(&[&["a", "b"], &["a"]]));
        let a = vocab.index_of("a").unwrap();
        let b = vocab.index_of("b").unwrap();
        // idf(a) = 1, idf(b) = ln(3/2) + 1
        assert!(vecs[0].get(b) > vecs[0].get(a));
        let ratio = vecs[0].get(b) / vecs[0].get(a);
        assert!((ratio - (1.5f64.ln() + 1.0)).abs() < 1e-12);
        assert_eq!(vecs[1].entries.len(), 1);
        assert_eq!(vecs[1].get(b), 0.0);
    }

    #[test]
    fn single_document_is_proportional_to_counts() {
        let (vocab, vecs) = build_tfidf(&corpus(&[&["x", "y", "y"]]));
        let x = vecs[0].get(vocab.index_of("x").unwrap());
        let y = vecs[0].get(vocab.index_of("y").unwrap());
        assert!((y / x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_tokens_ignored() {
        let v = TfidfVectorizer::fit(&corpus(&[&["x"]]));
        assert!(v.transform(&["zzz".to_string()]).entries.is_empty());
    }

    proptest! {
        #[test]
        fn unit_norm(docs in prop::collection::vec(prop::collection::vec("[a-f]{1,2}", 1..12), 1..8)) {
            let refs: Vec<Vec<&str>> = docs.iter().map(|d| d.iter().map(String::as_str).collect()).collect();
            let slices: Vec<&[&str]> = refs.iter().map(|d| d.as_slice()).collect();
            let (_, vecs) = build_tfidf(&corpus(&slices));
            for v in vecs {
                prop_assert!((v.norm() - 1.0).abs() < 1e-9);
                prop_assert!(v.entries.iter().all(|e| e.1 >= 0.0 && e.1.is_finite()));
            }
        }
    }
}
