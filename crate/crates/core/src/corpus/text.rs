//! Token cleaning used by the eligibility filter and by every
//! normalized-text comparison (overlap removal, leakage checks).

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;
use unicode_normalization::UnicodeNormalization;

use crate::data::STOPWORDS_EN;

/// Characters dropped in addition to punctuation.
pub const DEFAULT_NON_INFORMATIVE: [char; 2] = ['$', '#'];

/// Minimum number of cleaned tokens for a text to be kept.
pub const MIN_ELIGIBLE_TOKENS: usize = 3;

fn punctuation() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\p{P}").expect("static regex"))
}

/// The cleaning pipeline, applied in this order:
/// NFC, lowercase, strip numeric characters, strip punctuation, strip the
/// configured non-informative characters, split on whitespace, drop stopwords.
#[derive(Debug, Clone)]
pub struct TokenCleaner {
    non_informative: Vec<char>,
    stopwords: HashSet<String>,
}

impl Default for TokenCleaner {
    fn default() -> Self {
        TokenCleaner::new(&DEFAULT_NON_INFORMATIVE, parse_stopwords(STOPWORDS_EN))
    }
}

fn parse_stopwords(src: &str) -> HashSet<String> {
    src.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

impl TokenCleaner {
    pub fn new(non_informative: &[char], stopwords: HashSet<String>) -> Self {
        TokenCleaner {
            non_informative: non_informative.to_vec(),
            stopwords,
        }
    }

    /// Same stopwords, different non-informative character set.
    pub fn with_non_informative(mut self, chars: &[char]) -> Self {
        self.non_informative = chars.to_vec();
        self
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    pub fn clean(&self, text: &str) -> Vec<String> {
        let lowered: String = text.nfc().flat_map(char::to_lowercase).collect();
        let no_digits: String = lowered.chars().filter(|c| !c.is_numeric()).collect();
        let no_punct = punctuation().replace_all(&no_digits, "");
        let stripped: String = no_punct.chars().filter(|c| !self.non_informative.contains(c)).collect();
        stripped
            .split_whitespace()
            .filter(|t| !self.stopwords.contains(*t))
            .map(|t| t.nfc().collect::<String>())
            .collect()
    }

    pub fn normalize(&self, text: &str) -> String {
        self.clean(text).join(" ")
    }

    pub fn is_eligible(&self, text: &str) -> bool {
        self.clean(text).len() >= MIN_ELIGIBLE_TOKENS
    }
}

fn default_cleaner() -> &'static TokenCleaner {
    static CLEANER: OnceLock<TokenCleaner> = OnceLock::new();
    CLEANER.get_or_init(TokenCleaner::default)
}

/// Cleans `text` with the default configuration.
pub fn clean_tokens(text: &str) -> Vec<String> {
    default_cleaner().clean(text)
}

/// Cleaned tokens joined by single spaces.
pub fn normalize_text(text: &str) -> String {
    default_cleaner().normalize(text)
}

pub fn is_eligible(text: &str) -> bool {
    default_cleaner().is_eligible(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn documented_examples() {
        assert!(clean_tokens("").is_empty());
        assert_eq!(clean_tokens("Love it 100%"), ["love"]);
        assert_eq!(clean_tokens("Camera freezes after update #bug"), ["camera", "freezes", "update", "bug"]);
        assert!(!is_eligible(""));
        assert!(!is_eligible("Love it 100%"));
        assert!(is_eligible("Camera freezes after update #bug"));
    }

    #[test]
    fn numbers_are_stripped_inside_tokens() {
        assert_eq!(clean_tokens("v2.3 broke login"), ["v", "broke", "login"]);
    }

    #[test]
    fn non_informative_set_is_configurable() {
        let keep_hash = TokenCleaner::default().with_non_informative(&['$']);
        // '#' is punctuation too, so it still disappears
        assert_eq!(keep_hash.clean("#bug"), ["bug"]);
        let plain = TokenCleaner::default().with_non_informative(&[]);
        assert_eq!(plain.clean("costs $ money"), ["costs", "$", "money"]);
        assert_eq!(clean_tokens("costs $ money"), ["costs", "money"]);
    }

    #[test]
    fn stopwords_file_contains_expected_words() {
        let c = TokenCleaner::default();
        for w in ["it", "after", "the", "dont", "is"] {
            assert!(c.is_stopword(w), "{w}");
        }
        assert!(!c.is_stopword("bug"));
    }

    proptest! {
        #[test]
        fn clean_is_idempotent(text in "\\PC{0,60}") {
            let once = clean_tokens(&text);
            prop_assert_eq!(clean_tokens(&once.join(" ")), once);
        }

        #[test]
        fn clean_is_idempotent_on_wordy_text(words in proptest::collection::vec("[A-Za-z0-9#$%,.!' ]{1,12}", 0..12)) {
            let text = words.join(" ");
            let once = clean_tokens(&text);
            prop_assert_eq!(clean_tokens(&once.join(" ")), once);
        }

        #[test]
        fn eligibility_matches_token_count(text in "\\PC{0,60}") {
            prop_assert_eq!(is_eligible(&text), clean_tokens(&text).len() >= 3);
        }
    }
}
