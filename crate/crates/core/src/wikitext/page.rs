use serde::{Deserialize, Serialize};

use super::dump::RawPage;
use super::infobox::extract_infobox_type;
use super::markup::{is_reference_heading, render_block, split_blocks, BlockKind};

/// A prose block of an article with markup stripped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub text: String,
    /// Byte range of the block in the page wikitext.
    pub char_span_in_source: (usize, usize),
    /// Tables, lists, headings, reference sections and blocks with broken
    /// markup. Never used as mention context.
    pub is_boilerplate: bool,
}

/// An internal link with its anchor text located in a paragraph.
///
/// `anchor_char_span` counts Unicode scalar values (not bytes) into the
/// paragraph's `text`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InternalLink {
    pub target_title: String,
    pub anchor_text: String,
    pub paragraph_index: usize,
    pub anchor_char_span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedPage {
    pub page_id: u64,
    pub title: String,
    pub infobox_type: Option<String>,
    pub paragraphs: Vec<Paragraph>,
    pub links: Vec<InternalLink>,
}

impl Paragraph {
    /// Substring by char span.
    pub fn slice(&self, span: (usize, usize)) -> Option<&str> {
        char_slice(&self.text, span.0, span.1)
    }
}

impl ParsedPage {
    /// First paragraph that is not boilerplate; used as a page summary.
    pub fn summary(&self) -> Option<&str> {
        self.paragraphs
            .iter()
            .find(|p| !p.is_boilerplate)
            .map(|p| p.text.as_str())
    }
}

pub(crate) fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut idx = text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len()));
    let b_start = idx.nth(start)?;
    let b_end = if end == start {
        b_start
    } else {
        idx.nth(end - start - 1)?
    };
    Some(&text[b_start..b_end])
}

/// Parses a non-redirect page. Redirect pages yield no paragraphs.
pub fn parse_page(raw: &RawPage) -> ParsedPage {
    let mut page = ParsedPage {
        page_id: raw.page_id,
        title: raw.title.clone(),
        infobox_type: None,
        paragraphs: Vec::new(),
        links: Vec::new(),
    };
    if raw.is_redirect() {
        return page;
    }
    let src = raw.wikitext.as_str();
    page.infobox_type = extract_infobox_type(src);

    let mut in_reference_section = false;
    for block in split_blocks(src) {
        let block_src = &src[block.start..block.end];
        if block.kind == BlockKind::Heading {
            in_reference_section = is_reference_heading(block_src);
        }
        let rendered = render_block(block_src, block.kind);
        if rendered.text.is_empty() {
            continue;
        }
        let is_boilerplate = block.kind != BlockKind::Prose || rendered.degraded || in_reference_section;
        let paragraph_index = page.paragraphs.len();

        // byte -> char offsets in one pass over the text
        let mut char_of_byte = vec![0usize; rendered.text.len() + 1];
        let mut n = 0;
        for (b, _) in rendered.text.char_indices() {
            char_of_byte[b] = n;
            n += 1;
        }
        char_of_byte[rendered.text.len()] = n;

        for link in rendered.links {
            page.links.push(InternalLink {
                anchor_text: rendered.text[link.start..link.end].to_string(),
                target_title: link.target,
                paragraph_index,
                anchor_char_span: (char_of_byte[link.start], char_of_byte[link.end]),
            });
        }
        page.paragraphs.push(Paragraph {
            text: rendered.text,
            char_span_in_source: (block.start, block.end),
            is_boilerplate,
        });
    }
    page
}
