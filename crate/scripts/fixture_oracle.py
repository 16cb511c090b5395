#!/usr/bin/env python3
"""Brute-force reference answers for the CLI test fixtures.

Works on explicit token-index sets and enumerates every annotator pair and
every span pair; shares no code with the Rust implementation. Writes
crates/cli/tests/fixtures/answers.json.

    python3 scripts/fixture_oracle.py
"""
import itertools
import json
import math
import pathlib

FIX = pathlib.Path(__file__).resolve().parent.parent / "crates/cli/tests/fixtures"
LABELS = ["P", "I", "O"]
CRITERIA = ["exact", "ob", "to"]


def load(name):
    docs = []
    for line in (FIX / name).read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        sets = {}
        for a in rec.get("annotators", []):
            sets.setdefault(a["annotator"], (a["group"], []))
        for a in rec["annotations"]:
            sets.setdefault(a["annotator"], (a["group"], []))[1].append((a["label"], a["start"], a["end"]))
        docs.append((rec["doc_id"], sets))
    return docs


def tokens(span):
    return set(range(span[1], span[2]))


def match(crit, p, g):
    if p[0] != g[0]:
        return False
    shared = tokens(p) & tokens(g)
    if crit == "exact":
        return p[1] == g[1] and p[2] == g[2]
    if crit == "ob":
        return (p[1] == g[1] or p[2] == g[2]) and len(shared) > 0
    return len(shared) > 0


def counts(crit, pred, gold):
    mp = sum(1 for p in pred if any(match(crit, p, g) for g in gold))
    mg = sum(1 for g in gold if any(match(crit, p, g) for p in pred))
    return mp, mg, len(pred), len(gold)


def score(c, empty="one", recall="bounded"):
    mp, mg, tp, tg = c
    if tp == 0 and tg == 0:
        return {"one": (1.0, 1.0, 1.0), "zero": (0.0, 0.0, 0.0), "skip": None}[empty]
    p = mp / tp if tp else 0.0
    r_num = mg if recall == "bounded" else mp
    r = r_num / tg if tg else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return (p, r, f)


def stat(values):
    n = len(values)
    mean = sum(values) / n
    std = math.sqrt(sum((v - mean) ** 2 for v in values) / n)
    return [mean, std, n]


def only(spans, label):
    return [s for s in spans if s[0] == label]


def within(docs, group, label, crit, empty):
    per_doc = []
    for _, sets in docs:
        members = sorted(a for a, (g, _) in sets.items() if g == group)
        vals = []
        for a, b in itertools.combinations(members, 2):
            sa, sb = only(sets[a][1], label), only(sets[b][1], label)
            x = score(counts(crit, sb, sa), empty)
            y = score(counts(crit, sa, sb), empty)
            if x is None or y is None:
                continue
            vals.append((x[2] + y[2]) / 2)
        if vals:
            per_doc.append(sum(vals) / len(vals))
    return stat(per_doc) if per_doc else None


def cross(docs, gold_group, pred_group, label, crit, recall):
    per_doc = []
    for _, sets in docs:
        golds = sorted(a for a, (g, _) in sets.items() if g == gold_group)
        preds = sorted(a for a, (g, _) in sets.items() if g == pred_group)
        triples = []
        for g in golds:
            for p in preds:
                t = score(counts(crit, only(sets[p][1], label), only(sets[g][1], label)), "one", recall)
                triples.append(t)
        if triples:
            per_doc.append([sum(t[i] for t in triples) / len(triples) for i in range(3)])
    return [stat([d[i] for d in per_doc]) for i in range(3)]


def main():
    answers = {}

    agree = load("agree.jsonl")
    for empty in ["one", "zero", "skip"]:
        rows = {}
        for group in ["crowd", "expert"]:
            for label in LABELS:
                for crit in CRITERIA:
                    s = within(agree, group, label, crit, empty)
                    if s is not None:
                        rows[f"{group}|{label}|{crit}|f1"] = s
        answers[f"within/empty={empty}"] = rows

    for recall in ["bounded", "prediction-count"]:
        rows = {}
        for label in LABELS:
            for crit in CRITERIA:
                p, r, f = cross(agree, "expert", "crowd", label, crit, recall)
                rows[f"expert>crowd|{label}|{crit}|precision"] = p
                rows[f"expert>crowd|{label}|{crit}|recall"] = r
                rows[f"expert>crowd|{label}|{crit}|f1"] = f
        answers[f"cross/recall={recall}"] = rows

    gold = load("eval_gold.jsonl")
    preds = {}
    for line in (FIX / "eval_predictions.jsonl").read_text().splitlines():
        rec = json.loads(line)
        preds[rec["doc_id"]] = [(s["label"], s["start"], s["end"]) for s in rec["spans"]]
    rows = {}
    for crit in CRITERIA:
        pooled = {l: [0, 0, 0, 0] for l in LABELS}
        for doc_id, sets in gold:
            g_spans = sets["agg"][1]
            p_spans = preds.get(doc_id, [])
            for l in LABELS:
                c = counts(crit, only(p_spans, l), only(g_spans, l))
                pooled[l] = [x + y for x, y in zip(pooled[l], c)]
        micro = [sum(pooled[l][i] for l in LABELS) for i in range(4)]
        for key, c in list(pooled.items()) + [("micro", micro)]:
            p, r, f = score(c)
            for metric, v in [("precision", p), ("recall", r), ("f1", f)]:
                rows[f"eval|{key}|{crit}|{metric}"] = [v, 0.0, len(gold)]
    answers["eval"] = rows

    rows = {}
    for group in ["crowd", "expert"]:
        for label in LABELS:
            lengths = [e - s for _, sets in load("stats.jsonl") for a, (g, spans) in sets.items()
                       if g == group for (l, s, e) in spans if l == label]
            if lengths:
                rows[f"{group}|{label}|-|length"] = stat(lengths)
    answers["stats"] = rows

    (FIX / "answers.json").write_text(json.dumps(answers, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
