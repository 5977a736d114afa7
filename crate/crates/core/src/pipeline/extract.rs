//! End-to-end dataset extraction over a dump.
//!
//! The dump is read twice. The first pass records redirects, infobox types
//! and the summaries of pivot pages; the second parses pages in batches and
//! gathers mentions. Neither pass holds more than one batch of pages.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use tracing::info;

use super::diversity::{control_diversity, DEFAULT_MAX_IDENTICAL};
use super::filters::{default_blocked_labels, filter_by_ner, ContextFilter, NerAnnotations};
use super::mentions::{assign_ids, collect_mentions, sort_corpus_order, CollectOptions, LocatedMention};
use super::pivots::{registry_from_types, Allowlist};
use super::splits::{make_splits, Splits};
use super::types::{CoreferenceChain, DatasetSplit, EventRegistry, PivotRecord, SplitName};
use crate::error::Result;
use crate::exec::Exec;
use crate::io::write_jsonl;
use crate::wikitext::{
    extract_infobox_type, parse_page, parse_pages, resolve_redirects, DumpReader, DumpStats, RawPage,
};

#[derive(Debug, Clone)]
pub struct ExtractConfig {
    pub allowlist: Allowlist,
    pub ner: NerAnnotations,
    pub blocked_labels: BTreeSet<String>,
    pub context_filter: ContextFilter,
    pub max_identical: usize,
    pub n_eval_clusters: usize,
    pub dev_fraction: f64,
    pub seed: u64,
    pub collect: CollectOptions,
    pub namespaces: Vec<i32>,
    /// Raw pages parsed together in the second pass.
    pub batch_size: usize,
    /// Also build the dataset without the diversity cap.
    pub keep_uncontrolled: bool,
}

impl ExtractConfig {
    pub fn new(allowlist: Allowlist) -> Self {
        ExtractConfig {
            allowlist,
            ner: NerAnnotations::default(),
            blocked_labels: default_blocked_labels(),
            context_filter: ContextFilter::default(),
            max_identical: DEFAULT_MAX_IDENTICAL,
            n_eval_clusters: 0,
            dev_fraction: 0.4,
            seed: 0,
            collect: CollectOptions::default(),
            namespaces: vec![0],
            batch_size: 256,
            keep_uncontrolled: false,
        }
    }
}

/// Counts after each stage. Every mention stage only removes mentions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub pages_seen: u64,
    pub pages_read: u64,
    pub pages_skipped_malformed: u64,
    pub pages_other_namespace: u64,
    pub redirects: u64,
    pub redirects_resolved: u64,
    pub pivots: u64,
    pub links_seen: u64,
    pub links_in_boilerplate: u64,
    pub self_links: u64,
    pub bad_offsets: u64,
    pub raw_mentions: u64,
    pub post_context_filter: u64,
    pub post_ner_filter: u64,
    pub post_diversity: u64,
    pub clusters: u64,
    pub ner_unknown_documents: u64,
    pub train_mentions: u64,
    pub dev_mentions: u64,
    pub test_mentions: u64,
    pub peak_page_bytes: u64,
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub registry: EventRegistry,
    pub pivots: Vec<PivotRecord>,
    pub splits: Splits,
    pub uncontrolled: Option<Splits>,
    pub counts: StageCounts,
}

struct FirstPass {
    redirects: BTreeMap<String, String>,
    registry: EventRegistry,
    pivots: Vec<PivotRecord>,
    titles: BTreeSet<String>,
    stats: DumpStats,
    redirect_count: u64,
}

fn first_pass<R: BufRead>(input: R, cfg: &ExtractConfig) -> Result<FirstPass> {
    let mut reader = DumpReader::new(input).with_namespaces(cfg.namespaces.iter().copied());
    let mut redirect_pairs = Vec::new();
    let mut typed = Vec::new();
    let mut pivot_pages = Vec::new();
    let mut titles = BTreeSet::new();
    for page in reader.by_ref() {
        let page = page?;
        if let Some(target) = &page.redirect_target {
            redirect_pairs.push((page.title.clone(), target.clone()));
            continue;
        }
        titles.insert(page.title.clone());
        if let Some(t) = extract_infobox_type(&page.wikitext) {
            if cfg.allowlist.contains(&t) {
                pivot_pages.push(parse_page(&page));
            }
            typed.push((page.title, t));
        }
    }
    let redirects = resolve_redirects(redirect_pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())));
    let registry = registry_from_types(typed.iter().map(|(a, b)| (a.as_str(), b.as_str())), &cfg.allowlist);
    let mut pivots: Vec<PivotRecord> = pivot_pages
        .iter()
        .filter_map(|p| {
            let info = registry.get(&p.title)?;
            Some(PivotRecord {
                cluster_id: info.cluster_id,
                title: p.title.clone(),
                infobox_type: info.infobox_type.clone(),
                summary: p.summary().map(str::to_string),
            })
        })
        .collect();
    pivots.sort_by_key(|p| p.cluster_id);
    pivots.dedup_by_key(|p| p.cluster_id);
    Ok(FirstPass {
        redirects,
        registry,
        pivots,
        titles,
        stats: reader.stats().clone(),
        redirect_count: redirect_pairs.len() as u64,
    })
}

fn second_pass<R: BufRead>(
    input: R,
    cfg: &ExtractConfig,
    exec: Exec,
    first: &FirstPass,
    counts: &mut StageCounts,
    mut parsed_sink: Option<&mut dyn Write>,
) -> Result<Vec<LocatedMention>> {
    let mut reader = DumpReader::new(input).with_namespaces(cfg.namespaces.iter().copied());
    let mut all = Vec::new();
    let mut batch: Vec<RawPage> = Vec::with_capacity(cfg.batch_size);
    let batch_size = cfg.batch_size.max(1);
    let mut flush = |batch: &mut Vec<RawPage>, sink: &mut Option<&mut dyn Write>| -> Result<()> {
        let parsed = parse_pages(exec, batch);
        batch.clear();
        if let Some(w) = sink.as_deref_mut() {
            for p in &parsed {
                serde_json::to_writer(&mut *w, p)?;
                w.write_all(b"\n")?;
            }
        }
        let (ms, c) = collect_mentions(exec, &parsed, &first.registry, &first.redirects, &cfg.collect);
        counts.links_seen += c.links_seen;
        counts.links_in_boilerplate += c.boilerplate_links;
        counts.self_links += c.self_links;
        counts.bad_offsets += c.bad_offsets;
        all.extend(ms);
        Ok(())
    };
    loop {
        let next = reader.next().transpose()?;
        match next {
            Some(page) if page.is_redirect() => {}
            Some(page) => {
                batch.push(page);
                if batch.len() >= batch_size {
                    flush(&mut batch, &mut parsed_sink)?;
                }
            }
            None => {
                if !batch.is_empty() {
                    flush(&mut batch, &mut parsed_sink)?;
                }
                break;
            }
        }
    }
    counts.peak_page_bytes = reader.stats().peak_page_bytes;
    Ok(all)
}

/// Groups id-assigned mentions into chains in cluster-id order.
fn build_chains(mentions: &[LocatedMention], registry: &EventRegistry) -> Vec<CoreferenceChain> {
    let titles: BTreeMap<u64, &str> = registry
        .pivots
        .iter()
        .map(|(t, info)| (info.cluster_id, t.as_str()))
        .collect();
    let mut by_cluster: BTreeMap<u64, Vec<_>> = BTreeMap::new();
    for m in mentions {
        by_cluster
            .entry(m.mention.cluster_id)
            .or_default()
            .push(m.mention.clone());
    }
    by_cluster
        .into_iter()
        .map(|(cluster_id, mentions)| CoreferenceChain {
            cluster_id,
            pivot_title: titles.get(&cluster_id).map(|t| t.to_string()).unwrap_or_default(),
            mentions,
        })
        .collect()
}

/// Places uncapped chains into the same splits as their capped counterparts.
fn mirror_splits(chains: Vec<CoreferenceChain>, splits: &Splits) -> Splits {
    let mut parts: BTreeMap<SplitName, Vec<CoreferenceChain>> = BTreeMap::new();
    for c in chains {
        let name = splits.assignment(c.cluster_id).unwrap_or(SplitName::Train);
        parts.entry(name).or_default().push(c);
    }
    let mut take = |name| DatasetSplit {
        name,
        chains: parts.remove(&name).unwrap_or_default(),
    };
    Splits {
        train: take(SplitName::Train),
        dev: take(SplitName::Dev),
        test: take(SplitName::Test),
    }
}

/// Runs the whole pipeline. `open` is called once per pass and must yield
/// the same uncompressed dump each time.
pub fn extract<R, F>(
    mut open: F,
    cfg: &ExtractConfig,
    exec: Exec,
    parsed_sink: Option<&mut dyn Write>,
) -> Result<Extraction>
where
    R: BufRead,
    F: FnMut() -> Result<R>,
{
    let first = first_pass(open()?, cfg)?;
    let mut counts = StageCounts {
        pages_seen: first.stats.pages_seen,
        pages_read: first.stats.pages_yielded,
        pages_skipped_malformed: first.stats.skipped_malformed,
        pages_other_namespace: first.stats.filtered_namespace,
        redirects: first.redirect_count,
        redirects_resolved: first.redirects.len() as u64,
        pivots: first.registry.len() as u64,
        ..Default::default()
    };
    info!(pivots = counts.pivots, redirects = counts.redirects, "first pass done");

    let mut mentions = second_pass(open()?, cfg, exec, &first, &mut counts, parsed_sink)?;
    sort_corpus_order(&mut mentions);
    counts.raw_mentions = mentions.len() as u64;

    let (mentions, _) = cfg.context_filter.apply(mentions);
    counts.post_context_filter = mentions.len() as u64;

    counts.ner_unknown_documents = cfg.ner.unknown_documents(&first.titles).len() as u64;
    let (mut mentions, _) = filter_by_ner(mentions, &cfg.ner, &cfg.blocked_labels);
    counts.post_ner_filter = mentions.len() as u64;

    assign_ids(&mut mentions);
    let chains = build_chains(&mentions, &first.registry);
    let uncapped = cfg.keep_uncontrolled.then(|| chains.clone());
    let chains = control_diversity(chains, cfg.max_identical);
    counts.post_diversity = chains.iter().map(|c| c.mentions.len() as u64).sum();
    counts.clusters = chains.len() as u64;

    let splits = make_splits(chains, cfg.n_eval_clusters, cfg.dev_fraction, cfg.seed)?;
    counts.train_mentions = splits.train.mention_count() as u64;
    counts.dev_mentions = splits.dev.mention_count() as u64;
    counts.test_mentions = splits.test.mention_count() as u64;
    let uncontrolled = uncapped.map(|c| mirror_splits(c, &splits));
    info!(
        raw = counts.raw_mentions,
        post_context = counts.post_context_filter,
        post_ner = counts.post_ner_filter,
        post_diversity = counts.post_diversity,
        "mention stages"
    );

    Ok(Extraction {
        registry: first.registry,
        pivots: first.pivots,
        splits,
        uncontrolled,
        counts,
    })
}

/// Writes `{train,dev,test}.jsonl` (flat mention records) into `dir`.
pub fn write_splits(dir: &Path, splits: &Splits) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for name in SplitName::ALL {
        write_jsonl(&dir.join(format!("{name}.jsonl")), splits.get(name).mentions())?;
    }
    Ok(())
}

/// Writes the dataset files; returns the paths written, relative to `dir`.
pub fn write_extraction(dir: &Path, ex: &Extraction) -> Result<Vec<String>> {
    let mut written = Vec::new();
    write_splits(dir, &ex.splits)?;
    written.extend(SplitName::ALL.iter().map(|n| format!("{n}.jsonl")));
    write_jsonl(&dir.join("pivots.jsonl"), &ex.pivots)?;
    written.push("pivots.jsonl".into());
    if let Some(u) = &ex.uncontrolled {
        write_splits(&dir.join("uncontrolled"), u)?;
        written.extend(SplitName::ALL.iter().map(|n| format!("uncontrolled/{n}.jsonl")));
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn dump(pages: &[(&str, &str)]) -> String {
        let mut s = String::from("<mediawiki>\n");
        for (i, (title, text)) in pages.iter().enumerate() {
            s.push_str(&format!(
                "<page><title>{title}</title><ns>0</ns><id>{}</id><revision><id>9</id><text>{}</text></revision></page>\n",
                i + 1,
                text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
            ));
        }
        s.push_str("</mediawiki>\n");
        s
    }

    fn corpus() -> String {
        dump(&[
            (
                "Big quake",
                "{{Infobox earthquake|mag=7}}\nThe Big quake was a strong earthquake in the region.",
            ),
            ("Quake redirect", "#REDIRECT [[Big quake]]"),
            (
                "Town",
                "The town was hit by the [[Big quake|earthquake]] in the year before the flood came.\n\n\
                 Later the [[Quake redirect|disaster]] was studied by many scientists from abroad.\n\n\
                 * [[Big quake]] in a list",
            ),
            ("Other", "Short [[Big quake]] text."),
        ])
    }

    #[test]
    fn small_corpus_counts() {
        let text = corpus();
        let mut cfg = ExtractConfig::new(Allowlist::from_types(["earthquake"]).unwrap());
        cfg.keep_uncontrolled = true;
        for exec in [Exec::Sequential, Exec::Parallel] {
            let ex = extract(|| Ok(Cursor::new(text.as_bytes())), &cfg, exec, None).unwrap();
            let c = &ex.counts;
            assert_eq!(c.pivots, 1);
            assert_eq!(c.redirects, 1);
            assert_eq!(c.raw_mentions, 3);
            assert_eq!(c.links_in_boilerplate, 1);
            assert_eq!(c.post_context_filter, 2);
            assert_eq!(c.post_diversity, 2);
            assert_eq!(ex.splits.train.mention_count(), 2);
            assert_eq!(
                ex.pivots[0].summary.as_deref(),
                Some("The Big quake was a strong earthquake in the region.")
            );
            let texts: Vec<&str> = ex.splits.train.mentions().map(|m| m.mention_text.as_str()).collect();
            assert_eq!(texts, ["earthquake", "disaster"]);
            assert_eq!(ex.uncontrolled.as_ref().unwrap().train.mention_count(), 2);
        }
    }

    #[test]
    fn parsed_sink_gets_every_article() {
        let text = corpus();
        let cfg = ExtractConfig::new(Allowlist::from_types(["earthquake"]).unwrap());
        let mut sink = Vec::new();
        extract(
            || Ok(Cursor::new(text.as_bytes())),
            &cfg,
            Exec::Sequential,
            Some(&mut sink),
        )
        .unwrap();
        assert_eq!(String::from_utf8(sink).unwrap().lines().count(), 3);
    }
}
