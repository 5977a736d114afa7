"""Writes the scorer cross-check cases and records reference scores.

Run once with the `scorch` package installed:

    pip install scorch==0.2.0
    python3 fixtures/scorer/record.py

Each case directory holds key.conll, response.conll and expected.json with
recall, precision and F1 per metric in percent, rounded to 2 decimals.
"""
import json
import random
from pathlib import Path

from scorch import scores

HERE = Path(__file__).parent


def random_partition(rng, items, max_clusters=None):
    k = rng.randint(1, max_clusters or len(items))
    labels = [rng.randrange(k) for _ in items]
    out = {}
    for it, lab in zip(items, labels):
        out.setdefault(lab, []).append(it)
    return list(out.values())


def id_document(name, clusters):
    """One token line per mention; the token column is the mention id."""
    cid = {m: i for i, c in enumerate(clusters) for m in c}
    lines = [f"#begin document ({name}); part 000"]
    for pos, m in enumerate(sorted(cid)):
        lines.append(f"{name}\t0\t{pos}\t{m}\t({cid[m]})")
    lines += ["", "#end document"]
    return lines


def span_documents(docs, clusters):
    """Multi-token spans; clusters are lists of (doc, start, end)."""
    lines = []
    for name, n_tokens in docs:
        opens = [[] for _ in range(n_tokens)]
        closes = [[] for _ in range(n_tokens)]
        singles = [[] for _ in range(n_tokens)]
        for i, c in enumerate(clusters):
            for d, s, e in c:
                if d != name:
                    continue
                if s == e:
                    singles[s].append(i)
                else:
                    opens[s].append((e, i))
                    closes[e].append((s, i))
        lines.append(f"#begin document ({name}); part 000")
        for t in range(n_tokens):
            parts = [f"({i}" for e, i in sorted(opens[t], reverse=True)]
            parts += [f"({i})" for i in singles[t]]
            parts += [f"{i})" for s, i in sorted(closes[t], reverse=True)]
            coref = "|".join(parts) if parts else "-"
            lines.append(f"{name}\t0\t{t}\tw{t}\t-\t-\t{coref}")
        lines += ["", "#end document"]
    return lines


def record(case, key_lines, resp_lines, key_sets, resp_sets):
    d = HERE / case
    d.mkdir(exist_ok=True)
    (d / "key.conll").write_text("\n".join(key_lines) + "\n")
    (d / "response.conll").write_text("\n".join(resp_lines) + "\n")
    out = {}
    for name, fn in (("muc", scores.muc), ("b_cubed", scores.b_cubed), ("ceaf_e", scores.ceaf_e)):
        r, p, f = fn(key_sets, resp_sets)
        out[name] = [round(100 * r, 2), round(100 * p, 2), round(100 * f, 2)]
    out["conll_f1"] = round(100 * scores.conll2012(key_sets, resp_sets), 2)
    (d / "expected.json").write_text(json.dumps(out, indent=2) + "\n")


def id_case(case, key, resp):
    record(case, id_document("meta", key), id_document("meta", resp), [set(c) for c in key], [set(c) for c in resp])


def main():
    rng = random.Random(20)
    ids = list(range(1, 7))
    id_case("case01", [ids], [ids])
    id_case("case02", [[i] for i in ids], [ids])
    id_case("case03", [ids], [[i] for i in ids])
    id_case("case04", [[i] for i in ids], [[i] for i in ids])
    id_case("case05", [[1, 2], [3]], [[1], [2, 3]])
    id_case("case06", [[1, 2, 3, 4], [5, 6, 7]], [[1, 2], [3, 4, 5], [6, 7]])
    id_case("case07", [[1, 2, 3], [4, 5], [6], [7, 8, 9, 10]], [[1, 4, 6], [2, 5], [3, 7, 8], [9], [10]])
    for n in range(8, 16):
        items = list(range(100, 100 + rng.randint(3, 12)))
        id_case(f"case{n:02d}", random_partition(rng, items), random_partition(rng, items))

    # multi-token spans, nested spans and two documents
    docs = [("docA", 12), ("docB", 9)]
    mentions = [("docA", 0, 2), ("docA", 1, 1), ("docA", 4, 4), ("docA", 4, 6), ("docA", 9, 11),
                ("docB", 0, 0), ("docB", 2, 5), ("docB", 3, 4), ("docB", 7, 8)]
    for n in range(16, 21):
        by_doc = {}
        for m in mentions:
            by_doc.setdefault(m[0], []).append(m)
        # chains never cross documents in this format
        key, resp = [], []
        for ms in by_doc.values():
            key += random_partition(rng, ms)
            resp += random_partition(rng, ms)
        record(f"case{n:02d}", span_documents(docs, key), span_documents(docs, resp),
               [set(c) for c in key], [set(c) for c in resp])


if __name__ == "__main__":
    main()
