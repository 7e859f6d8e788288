"""Reference scores for tests/fixtures/metrics, computed with exact fractions.

Written independently of the C++ scorer: cells are sets of (t, class),
events come from run scanning, and event matching is an exhaustive maximum
matching rather than the greedy one. Run from the repo root:

    python3 tests/oracles/metrics_fixture.py
"""

import csv
import itertools
import sys
from fractions import Fraction
from pathlib import Path

FIXTURE = Path(__file__).resolve().parent.parent / "fixtures" / "metrics"
T = 10


def load(path):
    table = {}
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            vid = table.setdefault(row["video_id"], {"a": set(), "v": set()})
            for name in filter(None, row["labels"].split(";")):
                vid[row["modality"]].add((int(row["segment"]), name))
    return table


def f_cells(pred, gt):
    tp, fp, fn = len(pred & gt), len(pred - gt), len(gt - pred)
    return Fraction(1) if tp + fp + fn == 0 else Fraction(2 * tp, 2 * tp + fp + fn)


def events(cells, tag):
    out = []
    for name in sorted({c for _, c in cells}):
        t = 0
        while t < T:
            if (t, name) in cells:
                s = t
                while t < T and (t, name) in cells:
                    t += 1
                out.append((tag, name, s, t))
            else:
                t += 1
    return out


def iou(p, g):
    inter = max(0, min(p[3], g[3]) - max(p[2], g[2]))
    return Fraction(inter, (p[3] - p[2]) + (g[3] - g[2]) - inter)


def best_matching(pred, gt):
    best = 0
    for perm in itertools.permutations(range(len(gt)), min(len(pred), len(gt))):
        for subset in itertools.combinations(range(len(pred)), len(perm)):
            m = sum(1 for p, g in zip(subset, perm)
                    if pred[p][:2] == gt[g][:2] and iou(pred[p], gt[g]) >= Fraction(1, 2))
            best = max(best, m)
    return best


def f_events(pred, gt):
    if not pred and not gt:
        return Fraction(1)
    return Fraction(2 * best_matching(pred, gt), len(pred) + len(gt))


def score(p, g):
    p_av, g_av = p["a"] & p["v"], g["a"] & g["v"]
    seg = [f_cells(p["a"], g["a"]), f_cells(p["v"], g["v"]), f_cells(p_av, g_av)]
    tagged = lambda d: {(m, t, c) for m in "av" for t, c in d[m]}
    seg += [sum(seg) / 3, f_cells(tagged(p), tagged(g))]
    ev = [f_events(events(p[m], m), events(g[m], m)) for m in "av"]
    ev.append(f_events(events(p_av, "av"), events(g_av, "av")))
    ev += [sum(ev) / 3, f_events(events(p["a"], "a") + events(p["v"], "v"),
                                 events(g["a"], "a") + events(g["v"], "v"))]
    return seg + ev


def main():
    gt, pred = load(FIXTURE / "gt.csv"), load(FIXTURE / "pred.csv")
    empty = {"a": set(), "v": set()}
    rows = [score(pred.get(v, empty), gt[v]) for v in sorted(gt)]
    names = ["A", "V", "AV", "Type@AV", "Event@AV"]
    for i, total in enumerate(map(sum, zip(*rows))):
        mean = total / len(rows)
        level = "segment" if i < 5 else "event"
        print(f"{level:8s} {names[i % 5]:9s} {str(mean):>12s}  {float(mean):.17g}")


if __name__ == "__main__":
    sys.exit(main())
