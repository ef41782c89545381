use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::Explainable;
use crate::error::Result;
use crate::models::TextModel;

/// One document under a text model. Interpretable units are the distinct
/// words of the document; a cleared bit removes every occurrence.
pub struct TextTarget<'a> {
    model: &'a dyn TextModel,
    tokens: &'a [String],
    words: Vec<String>,
    slots: Vec<usize>,
}

impl<'a> TextTarget<'a> {
    pub fn new(model: &'a dyn TextModel, tokens: &'a [String]) -> Self {
        let mut words: Vec<String> = tokens.to_vec();
        words.sort_unstable();
        words.dedup();
        let slots = tokens
            .iter()
            .map(|t| words.binary_search(t).expect("word list built from tokens"))
            .collect();
        TextTarget {
            model,
            tokens,
            words,
            slots,
        }
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// The document with words whose bit is cleared removed.
    pub fn masked_tokens(&self, present: &[bool]) -> Vec<String> {
        self.tokens
            .iter()
            .zip(&self.slots)
            .filter(|(_, &s)| present[s])
            .map(|(t, _)| t.clone())
            .collect()
    }
}

impl Explainable for TextTarget<'_> {
    fn feature_names(&self) -> Vec<String> {
        self.words.clone()
    }

    fn dim(&self) -> usize {
        self.words.len()
    }

    fn ignores(&self, j: usize) -> bool {
        self.model.ignores_word(&self.words[j])
    }

    /// Removes a uniformly drawn number (1 to all) of the active words.
    fn perturb(&self, active: &[usize], rng: &mut ChaCha8Rng) -> Vec<bool> {
        let mut bits = vec![true; self.words.len()];
        if active.is_empty() {
            return bits;
        }
        let n_off = rng.random_range(1..=active.len());
        for p in sample(rng, active.len(), n_off) {
            bits[active[p]] = false;
        }
        bits
    }

    fn perturbed_value(&self, bits: &[bool], _rng: &mut ChaCha8Rng) -> Result<f64> {
        self.coalition_value(bits)
    }

    fn coalition_value(&self, present: &[bool]) -> Result<f64> {
        Ok(self.model.predict_proba(&self.masked_tokens(present))[1])
    }
}
