use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use tracing::info;

use linkcoref::io::{read_jsonl, write_jsonl};
use linkcoref::metrics::{
    conll_partitions, evaluate, partition_to_records, read_conll, report_table, write_conll, ConllDocument, Partition,
};
use linkcoref::pipeline::{
    extract, write_extraction, Allowlist, ContextFilter, DatasetSplit, ExtractConfig, Mention, NerAnnotations,
    PivotRecord, SplitName, Splits, DEFAULT_BOILERPLATE_PATTERNS,
};
use linkcoref::resolver::{
    agglomerate, default_grid, groups_from_documents, lemma_baseline, partition_restricted_clustering, tune_threshold,
    ClusteringConfig, ScoreMatrix,
};
use linkcoref::stats::{compute_stats, stats_table, LemmaResource};
use linkcoref::validation::candidates_from_splits;
use linkcoref::Exec;

use crate::args::{ConvertCommand, EvalArgs, ExtractArgs, Format, ResolveArgs, StatsArgs};
use crate::manifest::RunManifest;

pub const MANIFEST_FILE: &str = "manifest.json";

fn read_mentions(path: &Path) -> Result<Vec<Mention>> {
    read_jsonl(path).with_context(|| format!("reading mentions from {}", path.display()))
}

fn split_name_of(path: &Path) -> SplitName {
    path.file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.parse().ok())
        .unwrap_or(SplitName::Test)
}

pub fn read_split(path: &Path) -> Result<DatasetSplit> {
    Ok(DatasetSplit::from_mentions(split_name_of(path), read_mentions(path)?))
}

/// The three splits of a dataset directory written by `extract`.
pub fn read_dataset(dir: &Path) -> Result<Splits> {
    let get = |n: SplitName| -> Result<DatasetSplit> {
        let p = dir.join(format!("{n}.jsonl"));
        Ok(DatasetSplit::from_mentions(n, read_mentions(&p)?))
    };
    Ok(Splits {
        train: get(SplitName::Train)?,
        dev: get(SplitName::Dev)?,
        test: get(SplitName::Test)?,
    })
}

fn lemmas(path: &Option<PathBuf>) -> Result<LemmaResource> {
    match path {
        Some(p) => LemmaResource::load(p).with_context(|| format!("reading lemmas from {}", p.display())),
        None => Ok(LemmaResource::default()),
    }
}

pub fn extract_cmd(a: &ExtractArgs, exec: Exec, mut manifest: RunManifest) -> Result<()> {
    if a.dump.extension().is_some_and(|e| e == "bz2" || e == "gz") {
        bail!(
            "{} is compressed; decompress it first (the dump is read twice)",
            a.dump.display()
        );
    }
    let mut cfg = ExtractConfig::new(Allowlist::load(&a.allowlist).context("reading the allowlist")?);
    manifest.input(&a.dump)?;
    manifest.input(&a.allowlist)?;
    if let Some(ner) = &a.ner {
        cfg.ner = NerAnnotations::load(ner).context("reading NE annotations")?;
        manifest.input(ner)?;
    }
    cfg.blocked_labels = a
        .blocked_labels
        .iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    cfg.context_filter = ContextFilter::new(a.min_context, DEFAULT_BOILERPLATE_PATTERNS)?;
    cfg.max_identical = a.max_identical;
    if a.max_identical == 0 {
        bail!("--max-identical must be at least 1");
    }
    cfg.n_eval_clusters = a.eval_clusters;
    cfg.dev_fraction = a.dev_fraction;
    cfg.seed = a.seed;
    cfg.collect.url_base = a.url_base.clone();
    cfg.collect.follow_redirects = !a.no_follow_redirects;
    cfg.namespaces = a.namespaces.clone();
    cfg.batch_size = a.batch_size.max(1);
    cfg.keep_uncontrolled = a.keep_uncontrolled;
    manifest.seed = Some(a.seed);

    let dump = a.dump.clone();
    let open =
        move || -> linkcoref::Result<BufReader<File>> { Ok(BufReader::with_capacity(1 << 20, File::open(&dump)?)) };
    let mut sink = a
        .parsed_out
        .as_ref()
        .map(|p| File::create(p).map(BufWriter::new))
        .transpose()?;
    let ex = manifest.time("extract", || {
        extract(open, &cfg, exec, sink.as_mut().map(|w| w as &mut dyn Write))
    })?;
    if let Some(mut w) = sink {
        w.flush()?;
    }
    std::fs::create_dir_all(&a.out)?;
    let written = write_extraction(&a.out, &ex)?;
    for rel in &written {
        manifest.output(rel, &a.out.join(rel))?;
    }
    manifest.counts = serde_json::to_value(&ex.counts)?;
    manifest.write(&a.out.join(MANIFEST_FILE))?;
    info!(out = %a.out.display(), files = written.len(), "dataset written");
    Ok(())
}

pub fn stats_cmd(a: &StatsArgs) -> Result<String> {
    let lem = lemmas(&a.lemmas)?;
    let mut rows = Vec::new();
    for input in &a.inputs {
        if input.is_dir() {
            for n in SplitName::ALL {
                let p = input.join(format!("{n}.jsonl"));
                if p.exists() {
                    rows.push((n.to_string(), compute_stats(&read_split(&p)?, &lem)));
                }
            }
        } else {
            let name = input
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            rows.push((name, compute_stats(&read_split(input)?, &lem)));
        }
    }
    if a.json {
        let map: BTreeMap<&str, _> = rows.iter().map(|(n, r)| (n.as_str(), r)).collect();
        Ok(serde_json::to_string_pretty(&map)? + "\n")
    } else {
        Ok(stats_table(&rows))
    }
}

#[derive(Deserialize)]
struct DocumentGroup {
    source_title: String,
    group: String,
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn resolve_cmd(a: &ResolveArgs, exec: Exec, mut manifest: RunManifest) -> Result<()> {
    let mentions = match &a.mentions {
        Some(p) => {
            manifest.input(p)?;
            Some(read_mentions(p)?)
        }
        None => None,
    };
    let clustering = if a.lemma_baseline {
        let Some(ms) = &mentions else {
            bail!("--lemma-baseline needs --mentions");
        };
        if let Some(l) = &a.lemmas {
            manifest.input(l)?;
        }
        let lem = lemmas(&a.lemmas)?;
        manifest.time("cluster", || lemma_baseline(ms, &lem))?
    } else {
        let path = a
            .scores
            .as_ref()
            .expect("clap requires --scores without --lemma-baseline");
        manifest.input(path)?;
        let scores = ScoreMatrix::load(path, a.default_score)?;
        if let Some(ms) = &mentions {
            let mut ids: Vec<u64> = ms.iter().map(|m| m.mention_id).collect();
            ids.sort_unstable();
            if ids != scores.ids() {
                bail!("the score file and --mentions cover different mention ids");
            }
        }
        let mut threshold = a.threshold;
        if let (Some(kp), Some(sp)) = (&a.tune_key, &a.tune_scores) {
            manifest.input(kp)?;
            manifest.input(sp)?;
            let key = read_partition_records(kp)?;
            let dev = ScoreMatrix::load(sp, a.default_score)?;
            let grid = if a.grid.is_empty() {
                default_grid()
            } else {
                a.grid.clone()
            };
            let tuned = manifest.time("tune", || tune_threshold(&key, &dev, &grid, exec))?;
            info!(
                threshold = tuned.threshold,
                dev_conll_f1 = tuned.conll_f1,
                "threshold tuned"
            );
            threshold = tuned.threshold;
            manifest.counts = serde_json::json!({ "tuning": tuned });
        }
        let cfg = ClusteringConfig { threshold };
        match &a.documents {
            Some(dp) => {
                manifest.input(dp)?;
                let groups: Vec<DocumentGroup> = read_jsonl(dp)?;
                let doc_groups: BTreeMap<String, String> =
                    groups.into_iter().map(|g| (g.source_title, g.group)).collect();
                let ms = mentions.as_ref().expect("clap requires --mentions with --documents");
                let groups = groups_from_documents(ms, &doc_groups)?;
                manifest.time("cluster", || {
                    partition_restricted_clustering(&scores, &cfg, &groups, exec)
                })?
            }
            None => manifest.time("cluster", || agglomerate(&scores, &cfg, exec)),
        }
    };
    let p = &clustering.partition;
    write_jsonl(&a.out, &partition_to_records(p))?;
    manifest.output("clusters", &a.out)?;
    if let Some(c) = &a.conll {
        std::fs::write(c, write_conll(&[ConllDocument::from_partition("meta", p)]))?;
        manifest.output("conll", c)?;
    }
    let extra = serde_json::json!({
        "mentions": p.mention_count(),
        "clusters": p.len(),
        "provenance": clustering.provenance,
    });
    manifest.counts = match manifest.counts.take() {
        serde_json::Value::Object(mut m) => {
            if let serde_json::Value::Object(e) = extra {
                m.extend(e);
            }
            serde_json::Value::Object(m)
        }
        _ => extra,
    };
    manifest.write(&manifest_path(&a.out))?;
    info!(clusters = p.len(), mentions = p.mention_count(), "clustering written");
    Ok(())
}

fn read_partition_records(path: &Path) -> Result<Partition> {
    linkcoref::metrics::read_partition_records(path).with_context(|| format!("reading clustering {}", path.display()))
}

enum Loaded {
    Records(Partition),
    Conll(Vec<ConllDocument>),
}

fn is_conll(path: &Path, format: Format) -> bool {
    match format {
        Format::Conll => true,
        Format::Jsonl => false,
        Format::Auto => path.extension().is_some_and(|e| e == "conll" || e == "txt"),
    }
}

fn load(path: &Path, format: Format) -> Result<Loaded> {
    if is_conll(path, format) {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(Loaded::Conll(
            read_conll(&text).with_context(|| format!("parsing {}", path.display()))?,
        ))
    } else {
        Ok(Loaded::Records(read_partition_records(path)?))
    }
}

/// Records from CoNLL documents whose token column holds mention ids.
fn id_partition(docs: &[ConllDocument]) -> Option<Result<Partition>> {
    let mut recs = Vec::new();
    for (i, d) in docs.iter().enumerate() {
        // one cluster id space per document
        recs.extend(d.id_records()?.into_iter().map(|r| (r.mention_id, (i, r.cluster_id))));
    }
    Some(Partition::from_assignments(recs).map_err(Into::into))
}

pub fn eval_partitions(key: &Path, response: &Path, format: Format) -> Result<(Partition, Partition)> {
    match (load(key, format)?, load(response, format)?) {
        (Loaded::Records(k), Loaded::Records(r)) => Ok((k, r)),
        (Loaded::Conll(k), Loaded::Conll(r)) => match (id_partition(&k), id_partition(&r)) {
            (Some(k), Some(r)) => Ok((k?, r?)),
            _ => Ok(conll_partitions(&k, &r)?),
        },
        (Loaded::Records(k), Loaded::Conll(r)) => match id_partition(&r) {
            Some(r) => Ok((k, r?)),
            None => bail!(
                "{} has no mention ids in its token column; convert both files to one format",
                response.display()
            ),
        },
        (Loaded::Conll(k), Loaded::Records(r)) => match id_partition(&k) {
            Some(k) => Ok((k?, r)),
            None => bail!(
                "{} has no mention ids in its token column; convert both files to one format",
                key.display()
            ),
        },
    }
}

pub fn eval_cmd(a: &EvalArgs) -> Result<String> {
    let (key, resp) = eval_partitions(&a.key, &a.response, a.format)?;
    let report = evaluate(&key, &resp)?;
    if a.json {
        return Ok(serde_json::to_string_pretty(&report)? + "\n");
    }
    let name = a
        .response
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(report_table(&[(name, report)]))
}

pub fn convert_cmd(c: &ConvertCommand) -> Result<()> {
    match c {
        ConvertCommand::ToConll { input, output, name } => {
            let p = read_partition_records(input)?;
            std::fs::write(output, write_conll(&[ConllDocument::from_partition(name, &p)]))?;
        }
        ConvertCommand::FromConll { input, output } => {
            let docs = read_conll(&std::fs::read_to_string(input)?)?;
            let p = match id_partition(&docs) {
                Some(p) => p?,
                None => conll_partitions(&docs, &[])?.0,
            };
            write_jsonl(output, &partition_to_records(&p))?;
        }
        ConvertCommand::Candidates {
            dataset,
            output,
            practice,
        } => {
            let splits = read_dataset(dataset)?;
            let pivots_path = dataset.join("pivots.jsonl");
            let pivots: Vec<PivotRecord> = if pivots_path.exists() {
                read_jsonl(&pivots_path)?
            } else {
                Vec::new()
            };
            let mut cands = candidates_from_splits(&splits, &pivots);
            for c in &mut cands {
                c.practice = practice.contains(&c.mention.mention_id);
            }
            write_jsonl(output, &cands)?;
            info!(candidates = cands.len(), "candidates written");
        }
    }
    Ok(())
}
