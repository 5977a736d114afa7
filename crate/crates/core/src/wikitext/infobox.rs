//! Infobox type detection.

use tracing::debug;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InfoboxScan {
    pub infobox_type: Option<String>,
    /// Braces did not balance: a stray `}}` or a `{{` that never closed.
    pub unbalanced: bool,
}

/// Type token of the first `{{Infobox ...}}` template, lowercased and
/// whitespace-collapsed.
pub fn extract_infobox_type(wikitext: &str) -> Option<String> {
    let scan = scan_infobox(wikitext);
    if scan.unbalanced {
        debug!(found = ?scan.infobox_type, "unbalanced template braces while scanning for infobox");
    }
    scan.infobox_type
}

pub fn normalize_infobox_type(raw: &str) -> String {
    raw.split(|c: char| c == '_' || c.is_whitespace())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Walks the template structure with a brace-depth counter. Stops at the first
/// infobox; reports imbalance seen up to that point (or to the end of input).
pub fn scan_infobox(wikitext: &str) -> InfoboxScan {
    let text = strip_comments(wikitext);
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut unbalanced = false;
    let mut i = 0;
    while i + 1 < bytes.len() {
        if bytes[i] == b'{' && bytes[i + 1] == b'{' {
            depth += 1;
            let name_start = i + 2;
            let name_end = template_name_end(bytes, name_start);
            if let Some(kind) = infobox_kind(&text[name_start..name_end]) {
                return InfoboxScan {
                    infobox_type: Some(kind),
                    unbalanced,
                };
            }
            i += 2;
        } else if bytes[i] == b'}' && bytes[i + 1] == b'}' {
            if depth == 0 {
                unbalanced = true;
            } else {
                depth -= 1;
            }
            i += 2;
        } else {
            i += 1;
        }
    }
    InfoboxScan {
        infobox_type: None,
        unbalanced: unbalanced || depth > 0,
    }
}

fn template_name_end(bytes: &[u8], start: usize) -> usize {
    let mut j = start;
    while j < bytes.len() {
        match bytes[j] {
            b'|' => return j,
            b'}' | b'{' if j + 1 < bytes.len() && bytes[j + 1] == bytes[j] => return j,
            _ => j += 1,
        }
    }
    j
}

fn infobox_kind(name: &str) -> Option<String> {
    let mut name = name.trim();
    if name.len() >= 9 && name[..9].eq_ignore_ascii_case("template:") {
        name = name[9..].trim_start();
    }
    if name.len() < 7 || !name.is_char_boundary(7) || !name[..7].eq_ignore_ascii_case("infobox") {
        return None;
    }
    let kind = normalize_infobox_type(&name[7..]);
    if kind.is_empty() {
        None
    } else {
        Some(kind)
    }
}

fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("<!--") {
        out.push_str(&rest[..start]);
        match rest[start + 4..].find("-->") {
            Some(end) => rest = &rest[start + 4 + end + 3..],
            None => {
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_infobox() {
        assert_eq!(
            extract_infobox_type("{{Infobox earthquake|date=12 January 2010}}").as_deref(),
            Some("earthquake")
        );
    }

    #[test]
    fn no_infobox() {
        assert_eq!(extract_infobox_type("Just text with {{cite web|url=x}}."), None);
        assert_eq!(extract_infobox_type(""), None);
    }

    #[test]
    fn nested_template_in_field() {
        let text = "{{Short description|x}}\n{{Infobox civilian attack\n| title = Draper's Meadow\n\
                    | area = {{convert|3|km2|sqmi}}\n| date = July 1755\n}}\nProse.";
        let scan = scan_infobox(text);
        assert_eq!(scan.infobox_type.as_deref(), Some("civilian attack"));
        assert!(!scan.unbalanced);
    }

    #[test]
    fn name_normalization() {
        assert_eq!(
            extract_infobox_type("{{  infobox_Airliner   accident <!-- c -->\n|x=1}}").as_deref(),
            Some("airliner accident")
        );
        assert_eq!(
            extract_infobox_type("{{Template:Infobox Flood}}").as_deref(),
            Some("flood")
        );
    }

    #[test]
    fn generic_infobox_without_type_is_skipped() {
        assert_eq!(
            extract_infobox_type("{{Infobox\n|title=x}} {{Infobox concert|a=b}}").as_deref(),
            Some("concert")
        );
    }

    #[test]
    fn infobox_after_other_templates_is_found() {
        assert_eq!(
            extract_infobox_type("{{Use dmy dates}}{{Infobox news event|x={{a|{{b}}}}}}").as_deref(),
            Some("news event")
        );
    }

    #[test]
    fn unbalanced_braces_best_effort() {
        let scan = scan_infobox("{{cite web|url=x\nmore text");
        assert_eq!(scan.infobox_type, None);
        assert!(scan.unbalanced);

        // infobox found before the imbalance is still reported
        let scan = scan_infobox("}} stray {{Infobox wildfire|a={{b}");
        assert_eq!(scan.infobox_type.as_deref(), Some("wildfire"));
        assert!(scan.unbalanced);
    }
}
