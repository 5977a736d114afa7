//! MediaWiki title normalization.

/// Normalize a page title or link target the way MediaWiki resolves it:
/// underscores and spaces are equivalent, runs of whitespace collapse, a
/// leading colon is dropped, a `#section` suffix is cut off and the first
/// character is upper-cased.
///
/// Returns `None` when nothing is left (e.g. `[[#Section]]` links to the
/// current page).
pub fn normalize_title(raw: &str) -> Option<String> {
    let raw = raw.split('#').next().unwrap_or("");
    let mut out = String::with_capacity(raw.len());
    for word in raw
        .split(|c: char| c == '_' || c.is_whitespace())
        .filter(|w| !w.is_empty())
    {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    let trimmed = out.trim_start_matches(':').trim_start();
    if trimmed.is_empty() {
        return None;
    }
    let mut chars = trimmed.chars();
    let first = chars.next()?;
    let mut norm: String = first.to_uppercase().collect();
    norm.push_str(chars.as_str());
    Some(norm)
}

/// `Title with spaces` -> `Title_with_spaces`, as used in page URLs.
pub fn title_to_url_path(title: &str) -> String {
    title.replace(' ', "_")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn underscores_and_case() {
        assert_eq!(
            normalize_title("2010_Haiti_earthquake").unwrap(),
            "2010 Haiti earthquake"
        );
        assert_eq!(normalize_title("plane crash").unwrap(), "Plane crash");
        assert_eq!(normalize_title("  foo   bar ").unwrap(), "Foo bar");
        assert_eq!(normalize_title("éclair").unwrap(), "Éclair");
    }

    #[test]
    fn section_anchor_and_colon() {
        assert_eq!(normalize_title("Foo#History").unwrap(), "Foo");
        assert_eq!(normalize_title(":Foo").unwrap(), "Foo");
        assert_eq!(normalize_title("#History"), None);
        assert_eq!(normalize_title("   "), None);
    }

    #[test]
    fn never_contains_underscore() {
        for t in ["a_b", "_x_", "a__b c"] {
            assert!(!normalize_title(t).unwrap().contains('_'));
        }
    }
}
