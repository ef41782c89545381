//! Text pipeline: tokenization with Porter stemming, corpora with binary
//! labels, word and word-group dropout, TF-IDF vectorization.

mod porter;
pub mod synthetic;
mod tfidf;
mod tokenize;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub use porter::stem;
pub use tfidf::{build_tfidf, TfidfVector, TfidfVectorizer};
pub use tokenize::{tokenize_and_stem, tokenize_with, TokenizerOptions};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: usize,
    pub raw_text: String,
    pub tokens: Vec<String>,
    pub label: usize,
}

impl Document {
    pub fn new(id: usize, raw_text: &str, label: usize) -> Self {
        Document {
            id,
            raw_text: raw_text.to_string(),
            tokens: tokenize_and_stem(raw_text),
            label,
        }
    }
}

/// Removes every occurrence of the given stemmed tokens, keeping order.
pub fn drop_words(doc: &Document, words: &BTreeSet<String>) -> Document {
    Document {
        id: doc.id,
        raw_text: doc.raw_text.clone(),
        tokens: doc.tokens.iter().filter(|t| !words.contains(*t)).cloned().collect(),
        label: doc.label,
    }
}

/// Sorted term list with document frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
}

impl Vocabulary {
    pub fn from_token_lists<'a, I>(docs: I) -> Self
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for tokens in docs {
            let unique: BTreeSet<&str> = tokens.iter().map(String::as_str).collect();
            for t in unique {
                *df.entry(t).or_default() += 1;
            }
        }
        Vocabulary {
            terms: df.keys().map(|t| t.to_string()).collect(),
            doc_freq: df.values().copied().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    pub fn doc_freq(&self, index: usize) -> usize {
        self.doc_freq[index]
    }

    pub fn contains(&self, term: &str) -> bool {
        self.index_of(term).is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    documents: Vec<Document>,
    vocabulary: Vocabulary,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Self {
        let vocabulary = Vocabulary::from_token_lists(documents.iter().map(|d| d.tokens.as_slice()));
        Corpus {
            documents,
            vocabulary,
        }
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.documents.iter().map(|d| d.label).collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.documents.iter().filter(|d| d.label == 1).count();
        [self.documents.len() - ones, ones]
    }

    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus::new(indices.iter().map(|&i| self.documents[i].clone()).collect())
    }

    pub fn drop_words(&self, words: &BTreeSet<String>) -> Corpus {
        Corpus::new(self.documents.iter().map(|d| drop_words(d, words)).collect())
    }
}

/// A named set of stemmed words dropped together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordGroup {
    pub name: String,
    pub words: BTreeSet<String>,
}

impl WordGroup {
    /// Stems each raw word with the corpus tokenizer.
    pub fn from_raw<S: AsRef<str>>(name: &str, raw_words: &[S]) -> Result<Self> {
        let words: BTreeSet<String> = raw_words
            .iter()
            .flat_map(|w| tokenize_and_stem(w.as_ref()))
            .collect();
        if words.is_empty() {
            return Err(Error::InvalidArgument(format!("word group `{name}` is empty")));
        }
        Ok(WordGroup {
            name: name.to_string(),
            words,
        })
    }
}

fn parse_hatespeech_label(token: &str, row: usize) -> Result<usize> {
    match token.trim().to_ascii_lowercase().as_str() {
        "0" | "hate speech" | "hate_speech" | "hate" => Ok(1),
        "1" | "offensive" | "offensive language" | "offensive_language" => Ok(1),
        "2" | "neither" => Ok(0),
        other => Err(Error::Parse {
            row,
            column: "class".into(),
            message: format!("unknown label `{other}`"),
        }),
    }
}

/// Reads a hate-speech CSV with `tweet` and `class` columns (other columns
/// ignored). Hate speech and offensive language merge into class 1,
/// `neither` becomes class 0.
pub fn load_hatespeech(path: &Path) -> Result<Corpus> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_hatespeech(file)
}

pub fn read_hatespeech<R: std::io::Read>(reader: R) -> Result<Corpus> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::SchemaMismatch(format!("missing column `{name}`")))
    };
    let text_col = find("tweet")?;
    let class_col = find("class")?;
    let mut docs = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let label = parse_hatespeech_label(&rec[class_col], r + 1)?;
        docs.push(Document::new(r, &rec[text_col], label));
    }
    Ok(Corpus::new(docs))
}

/// Downsamples the majority class without replacement to the minority count.
/// Retained documents keep their original order.
pub fn balance_binary(corpus: &Corpus, seed: u64) -> Corpus {
    let [c0, c1] = corpus.class_counts();
    if c0 == c1 {
        return corpus.clone();
    }
    let majority = usize::from(c1 > c0);
    let keep_n = c0.min(c1);
    let mut majority_idx: Vec<usize> = (0..corpus.len())
        .filter(|&i| corpus.documents[i].label == majority)
        .collect();
    majority_idx.shuffle(&mut rng_from_seed(seed));
    let mut keep: Vec<usize> = majority_idx.into_iter().take(keep_n).collect();
    keep.extend((0..corpus.len()).filter(|&i| corpus.documents[i].label != majority));
    keep.sort_unstable();
    corpus.subset(&keep)
}

/// Shuffled split with `floor(n * train_fraction)` training documents.
pub fn split_corpus(corpus: &Corpus, train_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    let (train, test) = crate::dataset::split_indices(corpus.len(), train_fraction, seed)?;
    Ok((corpus.subset(&train), corpus.subset(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(tokens: &[&str], label: usize) -> Document {
        Document {
            id: 0,
            raw_text: tokens.join(" "),
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            label,
        }
    }

    fn set(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn drop_words_removes_all_occurrences() {
        let d = doc(&["a", "b", "a", "c"], 1);
        assert_eq!(drop_words(&d, &set(&[])), d);
        assert_eq!(drop_words(&d, &set(&["a"])).tokens, vec!["b", "c"]);
    }

    proptest! {
        #[test]
        fn drop_words_composes(tokens in prop::collection::vec("[a-e]", 0..20),
                               g1 in prop::collection::btree_set("[a-e]", 0..3),
                               g2 in prop::collection::btree_set("[a-e]", 0..3)) {
            let refs: Vec<&str> = tokens.iter().map(String::as_str).collect();
            let d = doc(&refs, 0);
            let union: BTreeSet<String> = g1.union(&g2).cloned().collect();
            let once = drop_words(&d, &union);
            let twice = drop_words(&drop_words(&d, &g1), &g2);
            prop_assert_eq!(&once, &twice);
            let before: BTreeSet<&String> = d.tokens.iter().collect();
            prop_assert!(once.tokens.iter().all(|t| before.contains(t)));
        }
    }

    #[test]
    fn vocabulary_tracks_document_frequency() {
        let c = Corpus::new(vec![doc(&["a", "b", "a"], 0), doc(&["a"], 1)]);
        let v = c.vocabulary();
        assert_eq!(v.terms(), &["a".to_string(), "b".to_string()]);
        assert_eq!(v.doc_freq(v.index_of("a").unwrap()), 2);
        assert_eq!(v.doc_freq(v.index_of("b").unwrap()), 1);
        let dropped = c.drop_words(&set(&["b"]));
        assert!(dropped.vocabulary().terms().iter().all(|t| v.contains(t)));
        assert!(!dropped.vocabulary().contains("b"));
    }

    #[test]
    fn hatespeech_labels_merge() {
        let csv = ",count,hate_speech,offensive_language,neither,class,tweet\n\
                   0,3,2,1,0,0,I hate them\n\
                   1,3,0,3,0,1,RT @x you are a fool\n\
                   2,3,0,0,3,2,nice weather http://t.co/z\n";
        let c = read_hatespeech(csv.as_bytes()).unwrap();
        assert_eq!(c.labels(), vec![1, 1, 0]);
        assert_eq!(c.documents()[2].tokens, vec!["nice", "weather"]);
        let textual = "tweet,class\nhello,hate speech\nbye,neither\n";
        assert_eq!(read_hatespeech(textual.as_bytes()).unwrap().labels(), vec![1, 0]);
        let bad = "tweet,class\nhello,7\n";
        assert!(matches!(read_hatespeech(bad.as_bytes()), Err(Error::Parse { .. })));
    }

    #[test]
    fn balancing_downsamples_majority() {
        let mut docs = Vec::new();
        for i in 0..7 {
            let mut d = doc(&["w"], usize::from(i >= 2));
            d.id = i;
            docs.push(d);
        }
        let c = Corpus::new(docs);
        let b = balance_binary(&c, 5);
        assert_eq!(b.class_counts(), [2, 2]);
        assert_eq!(b, balance_binary(&c, 5));
        let ids: Vec<usize> = b.documents().iter().map(|d| d.id).collect();
        assert!(ids.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(balance_binary(&b, 9), b);
    }

    #[test]
    fn word_groups_are_stemmed() {
        let g = WordGroup::from_raw("vehicles", &["Vehicles", "cars"]).unwrap();
        assert_eq!(g.words, set(&["car", "vehicl"]));
        assert!(WordGroup::from_raw("empty", &["!"]).is_err());
    }
}
