//! Rule-based tokenization and tweet cleaning.
//!
//! The tokenizer applies three rules, in order:
//!
//! 1. lowercase the text (Unicode-aware);
//! 2. split on whitespace;
//! 3. within each chunk, emit maximal runs of alphanumeric characters as
//!    tokens and every other non-whitespace character as a single-character
//!    token.
//!
//! The rules are deterministic and idempotent on their own joined output:
//! `tokenize(tokens.join(" ")) == tokens`.

use std::sync::OnceLock;

use regex::Regex;

pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut tokens = Vec::new();
    for chunk in lower.split_whitespace() {
        let mut run = String::new();
        for ch in chunk.chars() {
            if ch.is_alphanumeric() {
                run.push(ch);
            } else {
                if !run.is_empty() {
                    tokens.push(std::mem::take(&mut run));
                }
                tokens.push(ch.to_string());
            }
        }
        if !run.is_empty() {
            tokens.push(run);
        }
    }
    tokens
}

fn url_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(https?://\S+|www\.\S+)").expect("valid regex"))
}

/// Remove URLs and @-mentions from tweet text.
///
/// URLs are substrings starting with `http://`, `https://` or `www.` up to
/// the next whitespace. Mentions are whitespace-delimited tokens starting
/// with `@`; a mid-token `@` (an email address) is left alone. Whitespace
/// gaps left by removals are collapsed.
pub fn clean_tweet(text: &str) -> String {
    let without_urls = url_pattern().replace_all(text, "");
    let kept: Vec<&str> = without_urls
        .split_whitespace()
        .filter(|tok| !tok.starts_with('@'))
        .collect();
    kept.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn splits_punctuation_from_words() {
        assert_eq!(
            tokenize("Gun control is about preventing such security risks."),
            vec!["gun", "control", "is", "about", "preventing", "such", "security", "risks", "."]
        );
    }

    #[test]
    fn empty_text_gives_no_tokens() {
        assert_eq!(tokenize(""), Vec::<String>::new());
    }

    #[test]
    fn collapses_whitespace() {
        assert_eq!(tokenize("A  b"), vec!["a", "b"]);
        assert_eq!(tokenize("a\t\n b"), vec!["a", "b"]);
    }

    #[test]
    fn interior_punctuation_becomes_tokens() {
        assert_eq!(tokenize("don't"), vec!["don", "'", "t"]);
        assert_eq!(tokenize("a@b.com"), vec!["a", "@", "b", ".", "com"]);
    }

    #[test]
    fn clean_removes_mentions_and_urls() {
        assert_eq!(clean_tweet("@rep vote now http://x.co"), "vote now");
    }

    #[test]
    fn clean_is_identity_without_urls_or_mentions() {
        assert_eq!(clean_tweet("no urls here"), "no urls here");
    }

    #[test]
    fn mid_token_at_sign_is_not_a_mention() {
        assert_eq!(clean_tweet("email a@b.com stays"), "email a@b.com stays");
    }

    #[test]
    fn clean_handles_https_and_www() {
        assert_eq!(clean_tweet("see https://example.com/x?a=1 now"), "see now");
        assert_eq!(clean_tweet("go to www.example.com today"), "go to today");
    }

    #[test]
    fn clean_removes_url_glued_to_text() {
        assert_eq!(clean_tweet("see:http://x.co rest"), "see: rest");
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent_on_joined_output(text in "\\PC{0,80}") {
            let once = tokenize(&text);
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(once, twice);
        }
    }
}
