use std::sync::OnceLock;

use regex::Regex;

use super::porter::stem;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TokenizerOptions {
    /// Drop a small English stop-word list before stemming. Off by default.
    pub remove_stopwords: bool,
}

struct Patterns {
    noise: Regex,
    retweet: Regex,
    word: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        // urls, @mentions and html entities
        noise: Regex::new(r"(?i)https?://\S+|@\w+|&#?\w+;").unwrap(),
        retweet: Regex::new(r"\bRT\b").unwrap(),
        word: Regex::new(r"[a-z]+").unwrap(),
    })
}

const STOPWORDS: &[&str] = &[
    "about", "after", "all", "also", "am", "an", "and", "any", "are", "as", "at", "be", "been",
    "but", "by", "can", "did", "do", "does", "for", "from", "had", "has", "have", "he", "her",
    "him", "his", "how", "if", "in", "into", "is", "it", "its", "me", "my", "no", "not", "of",
    "on", "or", "our", "she", "so", "than", "that", "the", "their", "them", "then", "there",
    "they", "this", "to", "up", "us", "was", "we", "were", "what", "when", "which", "who",
    "will", "with", "you", "your",
];

/// Lowercased, Porter-stemmed alphabetic tokens of length >= 2 (before
/// stemming). URLs, @mentions, html entities and the retweet marker `RT` are
/// removed; `#tag` yields `tag`.
pub fn tokenize_and_stem(text: &str) -> Vec<String> {
    tokenize_with(text, TokenizerOptions::default())
}

pub fn tokenize_with(text: &str, options: TokenizerOptions) -> Vec<String> {
    let p = patterns();
    let cleaned = p.noise.replace_all(text, " ");
    let cleaned = p.retweet.replace_all(&cleaned, " ").to_lowercase();
    p.word
        .find_iter(&cleaned)
        .map(|m| m.as_str())
        .filter(|w| w.len() >= 2)
        .filter(|w| !options.remove_stopwords || !STOPWORDS.contains(w))
        .map(stem)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems_and_lowercases() {
        assert_eq!(tokenize_and_stem("vehicles"), vec!["vehicl"]);
        assert_eq!(tokenize_and_stem("Vehicle VEHICLES vehicle"), vec!["vehicl"; 3]);
        assert!(tokenize_and_stem("").is_empty());
    }

    #[test]
    fn strips_twitter_noise() {
        let toks = tokenize_and_stem("RT @some_user: check http://t.co/abc #Cats &amp; dogs!!! a");
        assert_eq!(toks, vec!["check", "cat", "dog"]);
    }

    #[test]
    fn stopword_flag() {
        let opts = TokenizerOptions { remove_stopwords: true };
        assert_eq!(tokenize_with("the cats and the dogs", opts), vec!["cat", "dog"]);
        assert_eq!(tokenize_and_stem("the cats").len(), 2);
    }

    #[test]
    fn deterministic_and_stable_on_fixed_point_stems() {
        let text = "Running dogs chased the happy cats over fences";
        assert_eq!(tokenize_and_stem(text), tokenize_and_stem(text));
        // re-tokenizing stems that are Porter fixed points changes nothing
        let stems = tokenize_and_stem("running dogs chased cats");
        assert_eq!(tokenize_and_stem(&stems.join(" ")), stems);
    }
}
