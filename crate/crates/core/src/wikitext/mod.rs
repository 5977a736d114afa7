//! MediaWiki dump reading and wikitext parsing.

mod dump;
mod infobox;
mod markup;
mod page;
mod redirect;
mod title;

pub use dump::{DumpReader, DumpStats, RawPage};
pub use infobox::{extract_infobox_type, normalize_infobox_type, scan_infobox, InfoboxScan};
pub use page::{parse_page, InternalLink, Paragraph, ParsedPage};
pub use redirect::{redirect_directive_target, resolve_redirects, MAX_REDIRECT_DEPTH};
pub use title::{normalize_title, title_to_url_path};

use crate::exec::Exec;

/// Parses a batch of pages; output order follows input order.
pub fn parse_pages(exec: Exec, pages: &[RawPage]) -> Vec<ParsedPage> {
    exec.map(pages, parse_page)
}
