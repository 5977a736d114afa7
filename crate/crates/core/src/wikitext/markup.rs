//! Wikitext block segmentation and markup stripping.
//!
//! A page is cut into blocks (prose paragraphs, list runs, tables, headings)
//! on blank lines and on changes of line kind, never inside an open template,
//! comment or extension tag. Each block is then rendered to plain text with
//! internal links resolved to their anchor text and recorded with byte
//! offsets into that text.

use super::title::normalize_title;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BlockKind {
    Prose,
    List,
    Table,
    Heading,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Block {
    pub kind: BlockKind,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RenderedLink {
    pub target: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Rendered {
    pub text: String,
    pub links: Vec<RenderedLink>,
    /// Unterminated or stray markup was encountered.
    pub degraded: bool,
}

/// Extension tags whose content never reaches the rendered text.
const DROP_CONTENT_TAGS: &[&str] = &[
    "ref",
    "references",
    "gallery",
    "math",
    "chem",
    "ce",
    "timeline",
    "imagemap",
    "score",
    "syntaxhighlight",
    "source",
    "hiero",
    "graph",
    "mapframe",
    "maplink",
    "templatedata",
    "templatestyles",
    "inputbox",
    "categorytree",
];

/// HTML-like tags that are removed while their content is kept.
const TRANSPARENT_TAGS: &[&str] = &[
    "br",
    "small",
    "big",
    "span",
    "div",
    "sup",
    "sub",
    "center",
    "s",
    "u",
    "i",
    "b",
    "em",
    "strong",
    "blockquote",
    "poem",
    "abbr",
    "font",
    "p",
    "del",
    "ins",
    "code",
    "tt",
    "var",
    "q",
    "cite",
    "onlyinclude",
    "includeonly",
    "noinclude",
    "section",
    "wbr",
    "hr",
    "ruby",
    "rt",
    "rp",
    "kbd",
    "mark",
    "bdi",
    "dfn",
    "time",
];

/// Namespaces whose links are dropped together with their text.
const DROPPED_NAMESPACES: &[&str] = &["file", "image", "media", "category"];

/// Prefixes that make a link point outside the article namespace; their
/// display text is kept but no link is recorded.
const FOREIGN_PREFIXES: &[&str] = &[
    "wikipedia",
    "wp",
    "project",
    "template",
    "help",
    "portal",
    "user",
    "user talk",
    "talk",
    "special",
    "draft",
    "module",
    "mediawiki",
    "wiktionary",
    "wikt",
    "wikisource",
    "s",
    "commons",
    "c",
    "wikiquote",
    "q",
    "wikinews",
    "n",
    "wikibooks",
    "b",
    "wikivoyage",
    "voy",
    "wikiversity",
    "v",
    "wikidata",
    "d",
    "mw",
    "meta",
    "m",
    "species",
    "w",
    "wikipedia talk",
    "template talk",
    "category talk",
    "file talk",
    "help talk",
    "portal talk",
];

const REFERENCE_SECTIONS: &[&str] = &[
    "references",
    "notes",
    "footnotes",
    "citations",
    "sources",
    "bibliography",
    "further reading",
    "external links",
    "see also",
    "notes and references",
];

#[derive(Debug, Default)]
struct LineState {
    template_depth: usize,
    in_comment: bool,
    open_tag: Option<&'static str>,
}

impl LineState {
    fn inside(&self) -> bool {
        self.template_depth > 0 || self.in_comment || self.open_tag.is_some()
    }

    fn advance(&mut self, line: &str) {
        let b = line.as_bytes();
        let mut i = 0;
        while i < b.len() {
            if self.in_comment {
                match line[i..].find("-->") {
                    Some(p) => {
                        self.in_comment = false;
                        i += p + 3;
                    }
                    None => return,
                }
                continue;
            }
            if let Some(tag) = self.open_tag {
                match find_close_tag(line, i, tag) {
                    Some((_, after)) => {
                        self.open_tag = None;
                        i = after;
                    }
                    None => return,
                }
                continue;
            }
            if line[i..].starts_with("<!--") {
                self.in_comment = true;
                i += 4;
            } else if line[i..].starts_with("{{") {
                self.template_depth += 1;
                i += 2;
            } else if line[i..].starts_with("}}") {
                self.template_depth = self.template_depth.saturating_sub(1);
                i += 2;
            } else if b[i] == b'<' {
                match parse_tag(line, i) {
                    Some(tag) => {
                        if !tag.closing && !tag.self_closing {
                            if let Some(name) = drop_content_tag(&tag.name) {
                                self.open_tag = Some(name);
                            }
                        }
                        i = tag.end;
                    }
                    None => i += 1,
                }
            } else {
                i += line[i..].chars().next().map_or(1, char::len_utf8);
            }
        }
    }
}

fn drop_content_tag(name: &str) -> Option<&'static str> {
    DROP_CONTENT_TAGS.iter().copied().find(|t| t.eq_ignore_ascii_case(name))
}

fn is_heading(line: &str) -> bool {
    let t = line.trim();
    t.len() >= 3 && t.starts_with('=') && t.ends_with('=')
}

fn heading_text(line: &str) -> &str {
    line.trim().trim_matches('=').trim()
}

/// Splits wikitext into blocks. Byte ranges exclude trailing newlines.
pub(crate) fn split_blocks(src: &str) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut cur: Option<Block> = None;
    let mut state = LineState::default();
    let mut table_depth = 0usize;
    let mut offset = 0usize;

    fn close(cur: &mut Option<Block>, blocks: &mut Vec<Block>, src: &str) {
        if let Some(mut b) = cur.take() {
            while b.end > b.start && src.as_bytes()[b.end - 1].is_ascii_whitespace() {
                b.end -= 1;
            }
            if b.end > b.start {
                blocks.push(b);
            }
        }
    }

    for line in src.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let content = line.trim_end_matches(['\n', '\r']);

        if table_depth > 0 || state.inside() {
            if let Some(b) = cur.as_mut() {
                b.end = offset;
            }
            if table_depth > 0 && !state.inside() {
                let t = content.trim_start();
                if t.starts_with("{|") {
                    table_depth += 1;
                } else if t.starts_with("|}") {
                    table_depth -= 1;
                }
            }
            state.advance(content);
            if table_depth == 0 && !state.inside() && cur.as_ref().map(|b| b.kind) == Some(BlockKind::Table) {
                close(&mut cur, &mut blocks, src);
            }
            continue;
        }

        let trimmed = content.trim_start();
        if content.trim().is_empty() {
            close(&mut cur, &mut blocks, src);
        } else if trimmed.starts_with("{|") {
            close(&mut cur, &mut blocks, src);
            cur = Some(Block {
                kind: BlockKind::Table,
                start,
                end: offset,
            });
            table_depth = 1;
        } else if is_heading(content) {
            close(&mut cur, &mut blocks, src);
            cur = Some(Block {
                kind: BlockKind::Heading,
                start,
                end: offset,
            });
            close(&mut cur, &mut blocks, src);
        } else {
            let kind = if content.starts_with(['*', '#', ':', ';']) {
                BlockKind::List
            } else {
                BlockKind::Prose
            };
            match cur.as_mut() {
                Some(b) if b.kind == kind => b.end = offset,
                _ => {
                    close(&mut cur, &mut blocks, src);
                    cur = Some(Block {
                        kind,
                        start,
                        end: offset,
                    });
                }
            }
        }
        state.advance(content);
    }
    close(&mut cur, &mut blocks, src);
    blocks
}

/// Whether a heading opens a reference-style section whose content is
/// boilerplate.
pub(crate) fn is_reference_heading(heading_line: &str) -> bool {
    let h = heading_text(heading_line).to_lowercase();
    REFERENCE_SECTIONS.contains(&h.as_str())
}

/// Renders one block to plain text.
pub(crate) fn render_block(src: &str, kind: BlockKind) -> Rendered {
    match kind {
        BlockKind::Prose => render_inline(src),
        BlockKind::Heading => render_inline(heading_text(src)),
        BlockKind::List => {
            let cleaned: Vec<&str> = src
                .lines()
                .map(|l| l.trim_start_matches(['*', '#', ':', ';']))
                .collect();
            render_inline(&cleaned.join("\n"))
        }
        BlockKind::Table => render_inline(&clean_table(src)),
    }
}

/// Replaces table syntax with whitespace so only cell contents remain.
fn clean_table(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    let mut depth = 0usize;
    for line in src.lines() {
        let t = line.trim_start();
        if depth > 0 && !t.starts_with('|') && !t.starts_with('!') && !t.starts_with("{|") {
            // continuation of a multi-line cell or of an open template
            out.push_str(line);
            out.push('\n');
            depth = bracket_depth_after(line, depth);
            continue;
        }
        if t.starts_with("{|") || t.starts_with("|-") || t.starts_with("|}") {
            out.push('\n');
            continue;
        }
        let body = if let Some(rest) = t.strip_prefix("|+") {
            rest
        } else if let Some(rest) = t.strip_prefix('|').or_else(|| t.strip_prefix('!')) {
            rest
        } else {
            t
        };
        for cell in split_top_level(body, &["||", "!!"]) {
            let parts = split_top_level(cell, &["|"]);
            let content = if parts.len() > 1 {
                &cell[parts[0].len() + 1..]
            } else {
                cell
            };
            out.push_str(content);
            out.push(' ');
        }
        out.push('\n');
        depth = bracket_depth_after(line, 0);
    }
    out
}

fn bracket_depth_after(line: &str, mut depth: usize) -> usize {
    let mut i = 0;
    let b = line.as_bytes();
    while i + 1 < b.len() {
        if (b[i] == b'{' && b[i + 1] == b'{') || (b[i] == b'[' && b[i + 1] == b'[') {
            depth += 1;
            i += 2;
        } else if (b[i] == b'}' && b[i + 1] == b'}') || (b[i] == b']' && b[i + 1] == b']') {
            depth = depth.saturating_sub(1);
            i += 2;
        } else {
            i += 1;
        }
    }
    depth
}

/// Splits on any of `seps` where not nested inside `[[...]]` or `{{...}}`.
fn split_top_level<'a>(s: &'a str, seps: &[&str]) -> Vec<&'a str> {
    let mut parts = Vec::new();
    let b = s.as_bytes();
    let mut depth = 0usize;
    let mut last = 0;
    let mut i = 0;
    'outer: while i < b.len() {
        if i + 1 < b.len() && ((b[i] == b'[' && b[i + 1] == b'[') || (b[i] == b'{' && b[i + 1] == b'{')) {
            depth += 1;
            i += 2;
            continue;
        }
        if i + 1 < b.len() && ((b[i] == b']' && b[i + 1] == b']') || (b[i] == b'}' && b[i + 1] == b'}')) {
            depth = depth.saturating_sub(1);
            i += 2;
            continue;
        }
        if depth == 0 {
            for sep in seps {
                if b[i..].starts_with(sep.as_bytes()) {
                    parts.push(&s[last..i]);
                    i += sep.len();
                    last = i;
                    continue 'outer;
                }
            }
        }
        i += 1;
    }
    parts.push(&s[last..]);
    parts
}

struct Tag {
    name: String,
    closing: bool,
    self_closing: bool,
    end: usize,
}

/// Parses an HTML-ish tag starting at byte `i` (which holds `<`).
fn parse_tag(s: &str, i: usize) -> Option<Tag> {
    let b = s.as_bytes();
    let mut j = i + 1;
    let closing = j < b.len() && b[j] == b'/';
    if closing {
        j += 1;
    }
    let name_start = j;
    while j < b.len() && b[j].is_ascii_alphanumeric() {
        j += 1;
    }
    if j == name_start || !b[name_start].is_ascii_alphabetic() {
        return None;
    }
    let name = s[name_start..j].to_ascii_lowercase();
    if j < b.len() && !(b[j] == b'>' || b[j] == b'/' || b[j].is_ascii_whitespace()) {
        return None;
    }
    let close = s[j..].find('>')? + j;
    if s[j..close].contains('<') || s[j..close].contains('\n') {
        return None;
    }
    let self_closing = close > j && b[close - 1] == b'/';
    Some(Tag {
        name,
        closing,
        self_closing,
        end: close + 1,
    })
}

/// Finds `</tag>` (case-insensitive) at or after `from`. Returns (start, end).
fn find_close_tag(s: &str, from: usize, tag: &str) -> Option<(usize, usize)> {
    let b = s.as_bytes();
    let mut i = from;
    while let Some(p) = s[i..].find("</") {
        let start = i + p;
        let name_start = start + 2;
        let name_end = name_start + tag.len();
        if name_end <= b.len() && s.is_char_boundary(name_end) && s[name_start..name_end].eq_ignore_ascii_case(tag) {
            let mut k = name_end;
            while k < b.len() && b[k].is_ascii_whitespace() {
                k += 1;
            }
            if k < b.len() && b[k] == b'>' {
                return Some((start, k + 1));
            }
        }
        i = start + 2;
    }
    None
}

/// Index just past the `}}` that closes the template opened at `i`.
fn skip_template(s: &str, i: usize) -> Option<usize> {
    let b = s.as_bytes();
    let mut depth = 0usize;
    let mut j = i;
    while j + 1 < b.len() {
        if b[j] == b'{' && b[j + 1] == b'{' {
            depth += 1;
            j += 2;
        } else if b[j] == b'}' && b[j + 1] == b'}' {
            depth -= 1;
            j += 2;
            if depth == 0 {
                return Some(j);
            }
        } else if s[j..].starts_with("<!--") {
            j = s[j..].find("-->").map_or(b.len(), |p| j + p + 3);
        } else {
            j += 1;
        }
    }
    None
}

/// Index just past the `]]` closing the link opened at `i`, with nesting.
fn skip_link(s: &str, i: usize) -> Option<usize> {
    let b = s.as_bytes();
    let mut depth = 0usize;
    let mut j = i;
    while j + 1 < b.len() {
        if b[j] == b'[' && b[j + 1] == b'[' {
            depth += 1;
            j += 2;
        } else if b[j] == b']' && b[j + 1] == b']' {
            depth -= 1;
            j += 2;
            if depth == 0 {
                return Some(j);
            }
        } else if b[j] == b'{' && b[j + 1] == b'{' {
            j = skip_template(s, j)?;
        } else if b[j] == b'\n' && depth == 1 && b.get(j + 1) == Some(&b'\n') {
            return None;
        } else {
            j += 1;
        }
    }
    None
}

struct Out {
    text: String,
    pending_space: bool,
    links: Vec<RenderedLink>,
    degraded: bool,
}

impl Out {
    fn push_char(&mut self, c: char) {
        if c.is_whitespace() {
            if !self.text.is_empty() {
                self.pending_space = true;
            }
        } else {
            if self.pending_space {
                self.text.push(' ');
                self.pending_space = false;
            }
            self.text.push(c);
        }
    }

    fn push_str(&mut self, s: &str) {
        s.chars().for_each(|c| self.push_char(c));
    }
}

pub(crate) fn render_inline(src: &str) -> Rendered {
    let mut out = Out {
        text: String::with_capacity(src.len()),
        pending_space: false,
        links: Vec::new(),
        degraded: false,
    };
    render_into(src, &mut out, true);
    Rendered {
        text: out.text,
        links: out.links,
        degraded: out.degraded,
    }
}

fn render_into(s: &str, out: &mut Out, record_links: bool) {
    let b = s.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let rest = &s[i..];
        if rest.starts_with("<!--") {
            match rest.find("-->") {
                Some(p) => i += p + 3,
                None => {
                    out.degraded = true;
                    return;
                }
            }
        } else if rest.starts_with("{{") {
            match skip_template(s, i) {
                Some(j) => i = j,
                None => {
                    out.degraded = true;
                    return;
                }
            }
        } else if rest.starts_with("}}") || rest.starts_with("]]") {
            out.degraded = true;
            out.push_str(&rest[..2]);
            i += 2;
        } else if rest.starts_with("[[") {
            match skip_link(s, i) {
                Some(j) => {
                    render_link(&s[i + 2..j - 2], out, record_links);
                    i = j;
                }
                None => {
                    out.degraded = true;
                    out.push_str("[[");
                    i += 2;
                }
            }
        } else if b[i] == b'[' && is_external_link_start(&rest[1..]) {
            match rest.find(']') {
                Some(p) => {
                    let inner = &rest[1..p];
                    if let Some(sp) = inner.find(' ') {
                        render_into(&inner[sp + 1..], out, false);
                    }
                    i += p + 1;
                }
                None => {
                    out.push_char('[');
                    i += 1;
                }
            }
        } else if rest.starts_with("''") {
            let run = rest.bytes().take_while(|&c| c == b'\'').count();
            i += run;
        } else if b[i] == b'<' {
            match parse_tag(s, i) {
                Some(tag) if !tag.closing && !tag.self_closing && drop_content_tag(&tag.name).is_some() => {
                    match find_close_tag(s, tag.end, &tag.name) {
                        Some((_, after)) => i = after,
                        None => {
                            out.degraded = true;
                            return;
                        }
                    }
                }
                Some(tag) if drop_content_tag(&tag.name).is_some() => i = tag.end,
                Some(tag) if tag.name == "nowiki" && !tag.closing && !tag.self_closing => {
                    match find_close_tag(s, tag.end, "nowiki") {
                        Some((start, after)) => {
                            out.push_str(&decode_entities(&s[tag.end..start]));
                            i = after;
                        }
                        None => i = tag.end,
                    }
                }
                Some(tag) if tag.name == "nowiki" => i = tag.end,
                Some(tag) if TRANSPARENT_TAGS.contains(&tag.name.as_str()) => {
                    if tag.name == "br" || tag.name == "p" || tag.name == "div" {
                        out.push_char(' ');
                    }
                    i = tag.end;
                }
                _ => {
                    out.push_char('<');
                    i += 1;
                }
            }
        } else if b[i] == b'&' {
            match decode_entity_at(rest) {
                Some((c, len)) => {
                    out.push_char(c);
                    i += len;
                }
                None => {
                    out.push_char('&');
                    i += 1;
                }
            }
        } else if let Some(after) = rest.strip_prefix("__") {
            let word_len = after.bytes().take_while(|c| c.is_ascii_uppercase()).count();
            if word_len > 0 && after[word_len..].starts_with("__") {
                i += word_len + 4;
            } else {
                out.push_str("__");
                i += 2;
            }
        } else {
            let c = rest.chars().next().unwrap();
            out.push_char(c);
            i += c.len_utf8();
        }
    }
}

fn is_external_link_start(s: &str) -> bool {
    let lower: String = s.chars().take(10).collect::<String>().to_ascii_lowercase();
    ["http://", "https://", "ftp://", "//", "mailto:", "news:", "irc://"]
        .iter()
        .any(|p| lower.starts_with(p))
}

enum LinkClass {
    Dropped,
    TextOnly,
    Article(String),
}

fn classify_target(raw: &str) -> LinkClass {
    let t = raw.trim();
    let leading_colon = t.starts_with(':');
    let body = t.trim_start_matches(':').trim_start();
    if let Some(colon) = body.find(':') {
        let prefix = body[..colon].trim();
        let lower = prefix.to_lowercase().replace('_', " ");
        if DROPPED_NAMESPACES.contains(&lower.as_str()) {
            return if leading_colon {
                LinkClass::TextOnly
            } else {
                LinkClass::Dropped
            };
        }
        if FOREIGN_PREFIXES.contains(&lower.as_str()) {
            return LinkClass::TextOnly;
        }
        let is_lang_code = (2..=3).contains(&prefix.len()) && prefix.bytes().all(|c| c.is_ascii_lowercase());
        if is_lang_code {
            return if leading_colon {
                LinkClass::TextOnly
            } else {
                LinkClass::Dropped
            };
        }
    }
    match normalize_title(body) {
        Some(title) => LinkClass::Article(title),
        None => LinkClass::TextOnly,
    }
}

fn render_link(inner: &str, out: &mut Out, record_links: bool) {
    let parts = split_top_level(inner, &["|"]);
    let target_raw = parts[0];
    let class = classify_target(target_raw);
    if let LinkClass::Dropped = class {
        return;
    }
    let display_src: &str = if parts.len() > 1 {
        let after_pipe = &inner[target_raw.len() + 1..];
        if after_pipe.trim().is_empty() {
            pipe_trick(target_raw)
        } else {
            after_pipe
        }
    } else {
        target_raw.trim_start().strip_prefix(':').unwrap_or(target_raw)
    };

    // render the display text on its own so surrounding whitespace handling
    // stays with the outer buffer
    let mut inner_out = Out {
        text: String::new(),
        pending_space: false,
        links: Vec::new(),
        degraded: false,
    };
    render_into(display_src, &mut inner_out, false);
    out.degraded |= inner_out.degraded;
    let display = inner_out.text;
    if display.is_empty() {
        return;
    }
    if out.pending_space && !out.text.is_empty() {
        out.text.push(' ');
        out.pending_space = false;
    }
    let start = out.text.len();
    out.text.push_str(&display);
    let end = out.text.len();
    if let (true, LinkClass::Article(target)) = (record_links, class) {
        out.links.push(RenderedLink { target, start, end });
    }
}

/// `[[Foo (bar)|]]` displays as `Foo`.
fn pipe_trick(target: &str) -> &str {
    let t = target.trim();
    let t = t.rsplit_once(':').map_or(t, |(_, r)| r);
    match t.find(" (") {
        Some(p) if t.ends_with(')') => &t[..p],
        _ => t,
    }
}

fn decode_entity_at(s: &str) -> Option<(char, usize)> {
    let end = s[..s.len().min(12)].find(';')?;
    let body = &s[1..end];
    let c = if let Some(num) = body.strip_prefix("#x").or_else(|| body.strip_prefix("#X")) {
        char::from_u32(u32::from_str_radix(num, 16).ok()?)?
    } else if let Some(num) = body.strip_prefix('#') {
        char::from_u32(num.parse().ok()?)?
    } else {
        match body {
            "amp" => '&',
            "lt" => '<',
            "gt" => '>',
            "quot" => '"',
            "apos" => '\'',
            "nbsp" | "thinsp" | "ensp" | "emsp" => ' ',
            "ndash" => '–',
            "mdash" => '—',
            "minus" => '−',
            "times" => '×',
            "deg" => '°',
            "hellip" => '…',
            "lsquo" => '‘',
            "rsquo" => '’',
            "ldquo" => '“',
            "rdquo" => '”',
            "middot" => '·',
            "eacute" => 'é',
            _ => return None,
        }
    };
    Some((c, end + 1))
}

fn decode_entities(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    while i < s.len() {
        if s.as_bytes()[i] == b'&' {
            if let Some((c, len)) = decode_entity_at(&s[i..]) {
                out.push(c);
                i += len;
                continue;
            }
        }
        let c = s[i..].chars().next().unwrap();
        out.push(c);
        i += c.len_utf8();
    }
    out
}
