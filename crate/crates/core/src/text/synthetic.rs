//! Seeded synthetic tweet corpus with planted word signals, used when the
//! real hate-speech file is not available.
//!
//! Class 1 documents usually carry one or two insult words and often one of
//! seven placeholder "dialect" words; class 0 documents carry them rarely.
//! The dialect words are the designated sensitive units.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::{Corpus, Document, WordGroup};
use crate::rng::rng_from_seed;

pub const SENSITIVE_WORDS: [&str; 7] = ["zarn", "vusk", "plim", "krog", "teff", "wub", "dralk"];

const INSULTS: [&str; 8] = ["idiot", "stupid", "trash", "loser", "moron", "jerk", "dumb", "scum"];

const NEUTRAL: [&str; 48] = [
    "today", "game", "watch", "music", "phone", "coffee", "friend", "weekend", "school",
    "movie", "dinner", "morning", "night", "city", "team", "season", "photo", "water",
    "summer", "winter", "train", "house", "money", "work", "happy", "great", "time", "love",
    "week", "party", "bus", "book", "dog", "cat", "store", "road", "beach", "song", "pizza",
    "class", "sleep", "car", "rain", "sun", "family", "news", "sport", "lunch",
];

/// The two groups partitioning [`SENSITIVE_WORDS`] (four and three words).
pub fn sensitive_groups() -> Vec<WordGroup> {
    vec![
        WordGroup::from_raw("group_a", &SENSITIVE_WORDS[..4]).expect("non-empty"),
        WordGroup::from_raw("group_b", &SENSITIVE_WORDS[4..]).expect("non-empty"),
    ]
}

/// `n_docs` documents, classes alternating so the corpus is balanced.
pub fn offensive_corpus(n_docs: usize, seed: u64) -> Corpus {
    let mut rng = rng_from_seed(seed);
    let mut docs = Vec::with_capacity(n_docs);
    for id in 0..n_docs {
        let label = id % 2;
        let mut words: Vec<&str> = (0..rng.random_range(5..10))
            .map(|_| *NEUTRAL.choose(&mut rng).unwrap())
            .collect();
        let (p_insult, p_sensitive) = if label == 1 { (0.6, 0.6) } else { (0.08, 0.12) };
        if rng.random_bool(p_insult) {
            for _ in 0..rng.random_range(1..=2) {
                words.push(INSULTS.choose(&mut rng).unwrap());
            }
        }
        if rng.random_bool(p_sensitive) {
            words.push(SENSITIVE_WORDS.choose(&mut rng).unwrap());
        }
        words.shuffle(&mut rng);
        let mut text = words.join(" ");
        match rng.random_range(0..6) {
            0 => text = format!("RT @user{id}: {text}"),
            1 => text.push_str(" http://t.co/x"),
            2 => text = format!("#{text}"),
            _ => {}
        }
        docs.push(Document::new(id, &text, label));
    }
    Corpus::new(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placeholder_words_survive_stemming() {
        for w in SENSITIVE_WORDS {
            assert_eq!(crate::text::stem(w), w);
        }
        let groups = sensitive_groups();
        assert_eq!(groups[0].words.len() + groups[1].words.len(), 7);
    }

    #[test]
    fn balanced_and_deterministic() {
        let c = offensive_corpus(200, 3);
        assert_eq!(c.class_counts(), [100, 100]);
        assert_eq!(c, offensive_corpus(200, 3));
        assert!(SENSITIVE_WORDS.iter().all(|w| c.vocabulary().contains(w)));
    }
}
