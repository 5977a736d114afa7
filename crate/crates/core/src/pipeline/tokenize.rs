//! Whitespace-and-punctuation tokenization of context paragraphs.
//!
//! Words are maximal runs of alphanumeric characters; an apostrophe, hyphen,
//! period or comma stays inside a word when it sits between two alphanumeric
//! characters (`Men's`, `26-4`, `U.S`, `1,000`). Every other non-space
//! character is a token of its own.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    /// Char offsets into the source text, end exclusive.
    pub start: usize,
    pub end: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || ('\u{0300}'..='\u{036f}').contains(&c)
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '’' | '-' | '‐' | '.' | ',')
}

pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if is_word_char(c) {
            let start = i;
            i += 1;
            while i < chars.len() {
                if is_word_char(chars[i]) {
                    i += 1;
                } else if is_joiner(chars[i]) && i + 1 < chars.len() && is_word_char(chars[i + 1]) {
                    i += 2;
                } else {
                    break;
                }
            }
            tokens.push(Token {
                text: chars[start..i].iter().collect(),
                start,
                end: i,
            });
        } else {
            tokens.push(Token {
                text: c.to_string(),
                start: i,
                end: i + 1,
            });
            i += 1;
        }
    }
    tokens
}

/// Inverse of tokenization for mention text: tokens joined by single spaces.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_ref());
    }
    out
}

/// Inclusive index range of the tokens overlapping the char span
/// `[start, end)`, if any.
pub fn tokens_covering(tokens: &[Token], start: usize, end: usize) -> Option<(usize, usize)> {
    let first = tokens.iter().position(|t| t.end > start && t.start < end)?;
    let last = tokens.iter().rposition(|t| t.end > start && t.start < end)?;
    Some((first, last))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(s: &str) -> Vec<String> {
        tokenize(s).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn punctuation_splits() {
        assert_eq!(
            texts("The Tar Heels made it to the final (2001)."),
            ["The", "Tar", "Heels", "made", "it", "to", "the", "final", "(", "2001", ")", "."]
        );
    }

    #[test]
    fn inner_joiners_stay() {
        assert_eq!(
            texts("2001 ACC Men's Basketball"),
            ["2001", "ACC", "Men's", "Basketball"]
        );
        assert_eq!(
            texts("a 26-4 record, 1,000 U.S. troops"),
            ["a", "26-4", "record", ",", "1,000", "U.S", ".", "troops"]
        );
        assert_eq!(texts("'quoted'"), ["'", "quoted", "'"]);
    }

    #[test]
    fn unicode() {
        assert_eq!(texts("Kraków – pożar"), ["Kraków", "–", "pożar"]);
        let t = tokenize("Kraków – pożar");
        assert_eq!((t[2].start, t[2].end), (9, 14));
    }

    #[test]
    fn covering() {
        let toks = tokenize("the quake struck");
        assert_eq!(tokens_covering(&toks, 4, 9), Some((1, 1)));
        assert_eq!(tokens_covering(&toks, 0, 16), Some((0, 2)));
        assert_eq!(tokens_covering(&toks, 3, 4), None);
        // partial overlap pulls in the whole token
        assert_eq!(tokens_covering(&toks, 5, 7), Some((1, 1)));
    }

    proptest::proptest! {
        #[test]
        fn offsets_round_trip(s in "\\PC{0,60}") {
            let chars: Vec<char> = s.chars().collect();
            for t in tokenize(&s) {
                let slice: String = chars[t.start..t.end].iter().collect();
                proptest::prop_assert_eq!(&slice, &t.text);
                proptest::prop_assert!(!t.text.chars().any(char::is_whitespace));
            }
        }
    }
}
