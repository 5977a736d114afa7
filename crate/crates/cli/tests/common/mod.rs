#![allow(dead_code)]

use std::path::{Path, PathBuf};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
}

/// Runs the command line in-process; returns the exit status and stdout.
pub fn run(args: &[&str]) -> (i32, String) {
    let mut argv = vec!["linkcoref", "--log", "off"];
    argv.extend_from_slice(args);
    let mut out = Vec::new();
    let code = linkcoref_cli::run_with(argv, &mut out);
    (code, String::from_utf8(out).expect("utf-8 output"))
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// Arguments reproducing the golden dataset under `dump20/golden`.
pub fn golden_extract_args(out: &str) -> Vec<&str> {
    vec![
        "extract",
        "--dump",
        leak(fixture("dump20/dump.xml")),
        "--allowlist",
        leak(fixture("dump20/allowlist.txt")),
        "--ner",
        leak(fixture("dump20/ner.jsonl")),
        "--eval-clusters",
        "2",
        "--seed",
        "7",
        "--keep-uncontrolled",
        "--out",
        out,
    ]
}

fn leak(p: PathBuf) -> &'static str {
    Box::leak(p.into_os_string().into_string().expect("utf-8 path").into_boxed_str())
}

/// Relative paths of every regular file under `dir`, sorted.
pub fn files_under(dir: &Path) -> Vec<PathBuf> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<PathBuf>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                out.push(path.strip_prefix(base).unwrap().to_path_buf());
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

/// Scores from `eval --json`, as percentages.
pub fn eval_json(key: &Path, response: &Path) -> serde_json::Value {
    let (code, out) = run(&["eval", "--key", p(key), "--response", p(response), "--json"]);
    assert_eq!(code, 0, "eval failed for {}", response.display());
    serde_json::from_str(&out).unwrap()
}

pub fn pct(report: &serde_json::Value, metric: &str, field: &str) -> f64 {
    report[metric][field].as_f64().unwrap() * 100.0
}
