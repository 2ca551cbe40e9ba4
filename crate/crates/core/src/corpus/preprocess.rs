use std::collections::HashSet;

use unicode_general_category::{get_general_category, GeneralCategory};

use super::porter;

const STOPWORDS_EN: &str = include_str!("stopwords_en.txt");

/// The bundled English stopword list (179 words).
pub fn default_stopwords() -> HashSet<String> {
    parse_stopwords(STOPWORDS_EN)
}

/// One lowercase token per line; blank lines ignored.
pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines().map(|l| l.trim().to_lowercase()).filter(|l| !l.is_empty()).collect()
}

#[derive(Debug, Clone)]
pub struct PreprocessOptions {
    pub stem: bool,
    pub stopwords: HashSet<String>,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self { stem: true, stopwords: default_stopwords() }
    }
}

pub fn is_emoji(c: char) -> bool {
    let cp = c as u32;
    (0x1F000..=0x1FAFF).contains(&cp)
        || (0x2600..=0x27BF).contains(&cp)
        || cp == 0xFE0F
        || cp == 0x200D
        || matches!(get_general_category(c), GeneralCategory::OtherSymbol | GeneralCategory::ModifierSymbol)
}

pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            get_general_category(c),
            GeneralCategory::ConnectorPunctuation
                | GeneralCategory::DashPunctuation
                | GeneralCategory::OpenPunctuation
                | GeneralCategory::ClosePunctuation
                | GeneralCategory::InitialPunctuation
                | GeneralCategory::FinalPunctuation
                | GeneralCategory::OtherPunctuation
                | GeneralCategory::MathSymbol
                | GeneralCategory::CurrencySymbol
        )
}

/// Lowercase, strip digits, emoji and punctuation (a word-initial `#` or `@`
/// survives), split on whitespace, drop stopwords, then optionally stem.
pub fn preprocess_text(raw: &str, options: &PreprocessOptions) -> Vec<String> {
    let lowered = raw.to_lowercase();
    let mut tokens = Vec::new();
    for chunk in lowered.split_whitespace() {
        let chunk: String =
            chunk.chars().filter(|c| !c.is_numeric() && !is_emoji(*c) && !c.is_control()).collect();
        let mut chars = chunk.chars().peekable();
        let prefix = match chars.peek() {
            Some(&c @ ('#' | '@')) => {
                chars.next();
                Some(c)
            }
            _ => None,
        };
        let body: String = chars.filter(|c| !is_punctuation(*c)).collect();
        if body.is_empty() {
            continue;
        }
        // "don't" is listed with its apostrophe, "dont" after stripping
        if options.stopwords.contains(&body) || options.stopwords.contains(chunk.as_str()) {
            continue;
        }
        let body = if options.stem { porter::stem(&body) } else { body };
        if body.is_empty() {
            continue;
        }
        let token = match prefix {
            Some(p) => format!("{p}{body}"),
            None => body,
        };
        tokens.push(token);
    }
    tokens
}

/// Token invariant shared by every preprocessed document.
pub fn is_clean_token(token: &str, stopwords: &HashSet<String>) -> bool {
    if token.is_empty() || stopwords.contains(token) {
        return false;
    }
    token.chars().enumerate().all(|(i, c)| {
        if i == 0 && (c == '#' || c == '@') {
            return true;
        }
        !c.is_numeric() && !c.is_uppercase() && !is_punctuation(c) && !is_emoji(c)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(stem: bool) -> PreprocessOptions {
        PreprocessOptions { stem, ..Default::default() }
    }

    #[test]
    fn stems_and_strips_numbers() {
        assert_eq!(preprocess_text("Judge Kavanaugh, 2018!!", &opts(true)), vec!["judg", "kavanaugh"]);
    }

    #[test]
    fn all_stopwords_yield_nothing() {
        assert!(preprocess_text("The THE the", &opts(true)).is_empty());
        assert!(preprocess_text("", &opts(true)).is_empty());
    }

    #[test]
    fn hashtag_kept_emoji_dropped() {
        assert_eq!(preprocess_text("#prolife rally 🇺🇸", &opts(false)), vec!["#prolife", "rally"]);
    }

    #[test]
    fn inner_hash_and_mentions() {
        assert_eq!(
            preprocess_text("@POTUS a#b pro-life ❤️ #", &opts(false)),
            vec!["@potus", "ab", "prolife"]
        );
        assert!(preprocess_text("don't", &opts(false)).is_empty());
    }

    #[test]
    fn stopword_list_size() {
        let sw = default_stopwords();
        assert_eq!(sw.len(), 179);
        assert!(sw.contains("the") && sw.contains("wouldn't"));
    }
}
