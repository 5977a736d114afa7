//! Streaming reader for MediaWiki `pages-articles` exports.
//!
//! The reader pulls one `<page>` element at a time out of any [`BufRead`]
//! and never buffers more than the page currently being assembled.

use std::collections::BTreeSet;
use std::io::BufRead;

use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use tracing::warn;

use super::redirect::redirect_directive_target;
use super::title::normalize_title;
use crate::error::{Error, Result};

/// One `<page>` element of an export, before wikitext parsing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPage {
    pub page_id: u64,
    pub title: String,
    pub namespace: i32,
    pub redirect_target: Option<String>,
    pub wikitext: String,
}

impl RawPage {
    /// Builds a page, normalizing the title and deriving the redirect target
    /// from the wikitext. Returns `None` when the title normalizes to nothing.
    pub fn new(page_id: u64, title: &str, namespace: i32, wikitext: String) -> Option<Self> {
        let title = normalize_title(title)?;
        let redirect_target = redirect_directive_target(&wikitext);
        Some(RawPage {
            page_id,
            title,
            namespace,
            redirect_target,
            wikitext,
        })
    }

    pub fn is_redirect(&self) -> bool {
        self.redirect_target.is_some()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpStats {
    pub pages_seen: u64,
    pub pages_yielded: u64,
    pub skipped_malformed: u64,
    pub filtered_namespace: u64,
    /// Largest number of bytes held for a single page while reading.
    pub peak_page_bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    None,
    Title,
    Namespace,
    PageId,
    Text,
}

#[derive(Default)]
struct PageBuilder {
    title: String,
    namespace: String,
    page_id: String,
    text: String,
    has_text: bool,
}

impl PageBuilder {
    fn held_bytes(&self) -> usize {
        self.title.capacity() + self.namespace.capacity() + self.page_id.capacity() + self.text.capacity()
    }
}

pub struct DumpReader<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    namespaces: Option<BTreeSet<i32>>,
    stats: DumpStats,
    done: bool,
}

impl<R: BufRead> DumpReader<R> {
    pub fn new(input: R) -> Self {
        DumpReader {
            reader: Reader::from_reader(input),
            buf: Vec::with_capacity(8 * 1024),
            namespaces: None,
            stats: DumpStats::default(),
            done: false,
        }
    }

    /// Only yield pages whose namespace is in `namespaces`.
    pub fn with_namespaces(mut self, namespaces: impl IntoIterator<Item = i32>) -> Self {
        self.namespaces = Some(namespaces.into_iter().collect());
        self
    }

    pub fn stats(&self) -> &DumpStats {
        &self.stats
    }

    fn xml_error(&self, e: impl std::fmt::Display) -> Error {
        xml_error(&self.reader, e)
    }

    /// Reads the body of a `<page>` whose start tag was just consumed.
    /// `Ok(None)` means the page was malformed and skipped.
    fn read_page(&mut self) -> Result<Option<RawPage>> {
        let mut page = PageBuilder::default();
        let mut field = Field::None;
        // depth relative to <page>: direct children are at depth 1
        let mut depth = 0usize;
        let mut in_revision = false;

        loop {
            self.buf.clear();
            let event = match self.reader.read_event_into(&mut self.buf) {
                Ok(ev) => ev,
                Err(e) => return Err(self.xml_error(e)),
            };
            match event {
                Event::Start(e) => {
                    depth += 1;
                    let name = e.name();
                    field = match (depth, name.as_ref()) {
                        (1, b"title") => Field::Title,
                        (1, b"ns") => Field::Namespace,
                        (1, b"id") => Field::PageId,
                        (1, b"revision") => {
                            in_revision = true;
                            Field::None
                        }
                        (2, b"text") if in_revision => {
                            page.has_text = true;
                            Field::Text
                        }
                        _ => Field::None,
                    };
                }
                Event::Empty(e) => {
                    if depth == 1 && e.name().as_ref() == b"text" && in_revision {
                        page.has_text = true;
                    }
                }
                Event::Text(t) => {
                    if field != Field::None {
                        let s = t.unescape().map_err(|e| xml_error(&self.reader, e))?;
                        push_field(&mut page, field, &s);
                    }
                }
                Event::CData(t) => {
                    if field != Field::None {
                        let s = String::from_utf8_lossy(&t).into_owned();
                        push_field(&mut page, field, &s);
                    }
                }
                Event::End(e) => {
                    if depth == 0 {
                        // </page>
                        break;
                    }
                    if depth == 1 && e.name().as_ref() == b"revision" {
                        in_revision = false;
                    }
                    depth -= 1;
                    field = Field::None;
                }
                Event::Eof => {
                    return Err(Error::TruncatedDump {
                        complete_pages: self.stats.pages_yielded,
                    })
                }
                _ => {}
            }
            self.stats.peak_page_bytes = self
                .stats
                .peak_page_bytes
                .max((page.held_bytes() + self.buf.capacity()) as u64);
        }

        let page_id = page.page_id.trim().parse::<u64>();
        let namespace = page.namespace.trim().parse::<i32>();
        let (page_id, namespace) = match (page_id, namespace) {
            (Ok(id), Ok(ns)) => (id, ns),
            _ => {
                self.stats.skipped_malformed += 1;
                warn!(title = %page.title, "skipping page with missing or invalid <id>/<ns>");
                return Ok(None);
            }
        };
        if !page.has_text {
            warn!(title = %page.title, "page has no <text>; treating wikitext as empty");
        }
        match RawPage::new(page_id, &page.title, namespace, page.text) {
            Some(p) => Ok(Some(p)),
            None => {
                self.stats.skipped_malformed += 1;
                warn!(page_id, "skipping page with empty title");
                Ok(None)
            }
        }
    }
}

fn xml_error<R>(reader: &Reader<R>, e: impl std::fmt::Display) -> Error {
    Error::Xml {
        position: reader.error_position(),
        message: e.to_string(),
    }
}

fn push_field(page: &mut PageBuilder, field: Field, s: &str) {
    match field {
        Field::Title => page.title.push_str(s),
        Field::Namespace => page.namespace.push_str(s),
        Field::PageId => page.page_id.push_str(s),
        Field::Text => page.text.push_str(s),
        Field::None => {}
    }
}

impl<R: BufRead> Iterator for DumpReader<R> {
    type Item = Result<RawPage>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            let event = match self.reader.read_event_into(&mut self.buf) {
                Ok(ev) => ev,
                Err(e) => {
                    self.done = true;
                    return Some(Err(self.xml_error(e)));
                }
            };
            match event {
                Event::Start(e) if e.name().as_ref() == b"page" => {
                    self.stats.pages_seen += 1;
                    match self.read_page() {
                        Ok(Some(page)) => {
                            if let Some(ns) = &self.namespaces {
                                if !ns.contains(&page.namespace) {
                                    self.stats.filtered_namespace += 1;
                                    continue;
                                }
                            }
                            self.stats.pages_yielded += 1;
                            return Some(Ok(page));
                        }
                        Ok(None) => continue,
                        Err(e) => {
                            self.done = true;
                            return Some(Err(e));
                        }
                    }
                }
                Event::Eof => self.done = true,
                _ => {}
            }
        }
        None
    }
}
