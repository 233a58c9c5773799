"""Tree and reading-order metrics: TED, STEDS, REDS and relation accuracies."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Hashable, Literal, Mapping, Sequence

from .model import ROOT, BOX_CATEGORIES, LayoutTree, Poster, RelationKind
from .statistics import (
    DISTANCE_BINS,
    DIRECTIONS,
    DegenerateDirection,
    direction_class,
    distance_bin,
    norm_distance,
    relation_endpoints,
)

log = logging.getLogger(__name__)

Axis = Literal["direction", "distance", "category"]
LabelMode = Literal["id", "category"]
AXES: tuple[Axis, ...] = ("direction", "distance", "category")
DEGENERATE = "n/a"


class IdMismatch(ValueError):
    def __init__(self, missing: Sequence[str], extra: Sequence[str]):
        super().__init__(f"poster ids differ: missing predictions {list(missing)}, unknown predictions {list(extra)}")
        self.missing, self.extra = list(missing), list(extra)


# -- tree edit distance -------------------------------------------------------


def _postorder(children: Sequence[Sequence[int]], labels: Callable[[int], Hashable], root: int = ROOT):
    """Postorder labels and leftmost-leaf indices for an ordered tree."""
    lab: list[Hashable] = []
    lmd: list[int] = []
    stack: list[tuple[int, int]] = [(root, 0)]
    first_leaf: list[int] = []
    while stack:
        node, k = stack.pop()
        kids = children[node]
        if k == 0:
            first_leaf.append(-1)
        if k < len(kids):
            stack.append((node, k + 1))
            stack.append((kids[k], 0))
            continue
        idx = len(lab)
        leaf = first_leaf.pop()
        if leaf < 0:
            leaf = idx
        lab.append(labels(node))
        lmd.append(leaf)
        if first_leaf and first_leaf[-1] < 0:
            first_leaf[-1] = leaf
    return lab, lmd


def _keyroots(lmd: list[int]) -> list[int]:
    last: dict[int, int] = {}
    for i, leaf in enumerate(lmd):
        last[leaf] = i
    return sorted(last.values())


def ordered_tree_distance(children_a, labels_a, children_b, labels_b, root_a: int = ROOT, root_b: int = ROOT) -> int:
    """Unit-cost ordered tree edit distance (Zhang and Shasha's keyroot DP)."""
    la, lmda = _postorder(children_a, labels_a, root_a)
    lb, lmdb = _postorder(children_b, labels_b, root_b)
    n, m = len(la), len(lb)
    td = [[0] * m for _ in range(n)]
    for i in _keyroots(lmda):
        li = lmda[i]
        for j in _keyroots(lmdb):
            lj = lmdb[j]
            rows, cols = i - li + 2, j - lj + 2
            fd = [[0] * cols for _ in range(rows)]
            for x in range(1, rows):
                fd[x][0] = x
            for y in range(1, cols):
                fd[0][y] = y
            for x in range(li, i + 1):
                xx = x - li + 1
                prev, cur = fd[xx - 1], fd[xx]
                lx, ax = lmda[x], la[x]
                tdx = td[x]
                for y in range(lj, j + 1):
                    yy = y - lj + 1
                    best = prev[yy] + 1
                    if cur[yy - 1] + 1 < best:
                        best = cur[yy - 1] + 1
                    if lx == li and lmdb[y] == lj:
                        sub = prev[yy - 1] + (ax != lb[y])
                        if sub < best:
                            best = sub
                        cur[yy] = best
                        tdx[y] = best
                    else:
                        sub = fd[lx - li][lmdb[y] - lj] + tdx[y]
                        cur[yy] = sub if sub < best else best
    return td[n - 1][m - 1]


def _labeler(tree: LayoutTree, poster: Poster | None, mode: LabelMode):
    if mode == "id":
        return lambda node: node
    if poster is None:
        raise ValueError("category labels need the poster")
    return lambda node: poster.category(node).value


def ted(gt: LayoutTree, pred: LayoutTree, poster: Poster | None = None, labels: LabelMode = "id") -> int:
    """Tree edit distance; nodes are labeled by box id unless ``labels="category"``."""
    return ordered_tree_distance(
        gt.children, _labeler(gt, poster, labels), pred.children, _labeler(pred, poster, labels)
    )


def steds(gt: LayoutTree, pred: LayoutTree, poster: Poster | None = None, labels: LabelMode = "id",
          distance: int | None = None) -> float:
    if distance is None:
        distance = ted(gt, pred, poster, labels)
    return 100.0 * (1.0 - distance / max(gt.size, pred.size))


def levenshtein(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return prev[-1]


def reds(gt: LayoutTree, pred: LayoutTree) -> float:
    return 100.0 * (1.0 - levenshtein(gt.order, pred.order) / max(gt.size, pred.size))


# -- relation accuracy ---------------------------------------------------------


def bucket_labels(axis: Axis) -> tuple[str, ...]:
    if axis == "direction":
        return DIRECTIONS
    if axis == "distance":
        return DISTANCE_BINS
    if axis == "category":
        return tuple(c.value for c in BOX_CATEGORIES)
    raise ValueError(f"unknown axis {axis!r}")


@dataclass
class RelationAccuracy:
    kind: RelationKind
    axis: Axis
    correct: dict[str, int] = field(default_factory=dict)
    total: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for label in bucket_labels(self.axis):
            self.correct.setdefault(label, 0)
            self.total.setdefault(label, 0)

    def add(self, bucket: str, ok: bool) -> None:
        self.total[bucket] = self.total.get(bucket, 0) + 1
        self.correct[bucket] = self.correct.get(bucket, 0) + int(ok)

    def accuracy(self, bucket: str) -> float | None:
        t = self.total.get(bucket, 0)
        return self.correct[bucket] / t if t else None

    def misses(self) -> dict[str, int]:
        return {b: self.total[b] - self.correct[b] for b in self.total if self.total[b] > self.correct[b]}

    @property
    def overall(self) -> tuple[int, int]:
        return sum(self.correct.values()), sum(self.total.values())

    def merge(self, other: "RelationAccuracy") -> "RelationAccuracy":
        out = RelationAccuracy(self.kind, self.axis, dict(self.correct), dict(self.total))
        for b in other.total:
            out.total[b] = out.total.get(b, 0) + other.total[b]
            out.correct[b] = out.correct.get(b, 0) + other.correct[b]
        return out

    def rows(self) -> list[dict]:
        labels = list(bucket_labels(self.axis)) + [b for b in self.total if b not in bucket_labels(self.axis)]
        out = []
        for b in labels:
            acc = self.accuracy(b)
            out.append({
                "bucket": b,
                "correct": self.correct[b],
                "total": self.total[b],
                "errors": self.total[b] - self.correct[b],
                "accuracy": "" if acc is None else f"{acc:.6f}",
            })
        return out


def _bucket(poster: Poster, a: int, b: int, axis: Axis) -> str:
    if axis == "category":
        return poster.category(b).value
    pa, pb = poster.node(a), poster.node(b)
    try:
        if axis == "direction":
            return DIRECTIONS[direction_class(pa, pb)]
        return DISTANCE_BINS[distance_bin(norm_distance(pa, pb))]
    except DegenerateDirection:
        log.warning("%s: nodes %d and %d share a center", poster.poster_id, a, b)
        return DEGENERATE


def _hits(gt: LayoutTree, pred: LayoutTree, kind: RelationKind):
    """(source, target, correct) for every non-Root GT relation of ``kind``."""
    if kind is RelationKind.READING_ORDER:
        succ = dict(zip(pred.order, pred.order[1:]))
        for a, b in relation_endpoints(gt, kind):
            yield a, b, succ.get(a) == b
    else:
        for p, c in relation_endpoints(gt, kind):
            yield p, c, pred.parent.get(c) == p


def relation_accuracy(gt: LayoutTree, pred: LayoutTree, poster: Poster, axis: Axis,
                      kind: RelationKind = RelationKind.READING_ORDER) -> RelationAccuracy:
    """Share of GT relations (Root excluded) that the prediction reproduces.

    A reading-order pair counts only if the two nodes are adjacent in the
    predicted order.  Geometry buckets run predecessor -> successor for
    reading order and parent -> child for parent-child relations; the
    category axis uses the successor's or child's category.
    """
    acc = RelationAccuracy(kind, axis)
    for a, b, ok in _hits(gt, pred, kind):
        acc.add(_bucket(poster, a, b, axis), ok)
    return acc


def error_distribution(gt: LayoutTree, pred: LayoutTree, poster: Poster, axis: Axis,
                       kind: RelationKind = RelationKind.READING_ORDER) -> dict[str, int]:
    hist: dict[str, int] = {}
    for a, b, ok in _hits(gt, pred, kind):
        if not ok:
            key = _bucket(poster, a, b, axis)
            hist[key] = hist.get(key, 0) + 1
    return hist


# -- reports -------------------------------------------------------------------


@dataclass
class PosterScores:
    poster_id: str
    n_boxes: int
    ted: int
    steds: float
    reds: float


@dataclass
class EvalReport:
    per_poster: list[PosterScores]
    breakdowns: dict[tuple[RelationKind, Axis], RelationAccuracy]
    labels: LabelMode = "id"

    @property
    def aggregate(self) -> dict[str, float]:
        k = len(self.per_poster)
        if not k:
            return {"posters": 0, "ted": 0.0, "steds": 0.0, "reds": 0.0}
        return {
            "posters": k,
            "ted": sum(p.ted for p in self.per_poster) / k,
            "steds": sum(p.steds for p in self.per_poster) / k,
            "reds": sum(p.reds for p in self.per_poster) / k,
        }

    def consistent(self, sizes: Mapping[str, int]) -> bool:
        """STEDS recomputed from TED and the larger tree size matches every row."""
        return all(
            abs(p.steds - 100.0 * (1.0 - p.ted / sizes[p.poster_id])) < 1e-9 for p in self.per_poster
        )

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        path = out / "per_poster.csv"
        with path.open("w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["poster_id", "n_boxes", "ted", "steds", "reds"])
            for p in self.per_poster:
                w.writerow([p.poster_id, p.n_boxes, p.ted, f"{p.steds:.6f}", f"{p.reds:.6f}"])
        written.append(path)
        for (kind, axis), acc in self.breakdowns.items():
            path = out / f"{_short(kind)}_{axis}.csv"
            with path.open("w", newline="", encoding="utf-8") as f:
                w = csv.DictWriter(f, fieldnames=["bucket", "correct", "total", "errors", "accuracy"])
                w.writeheader()
                w.writerows(acc.rows())
            written.append(path)
        summary = {"labels": self.labels, **{k: round(v, 6) if isinstance(v, float) else v for k, v in self.aggregate.items()}}
        for (kind, axis), acc in self.breakdowns.items():
            if axis == "category":
                c, t = acc.overall
                summary[f"{_short(kind)}_accuracy"] = round(c / t, 6) if t else None
        path = out / "summary.json"
        path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(path)
        return written


def _short(kind: RelationKind) -> str:
    return "ro" if kind is RelationKind.READING_ORDER else "pc"


def evaluate_poster(poster: Poster, gt: LayoutTree, pred: LayoutTree, labels: LabelMode = "id") -> PosterScores:
    d = ted(gt, pred, poster, labels)
    return PosterScores(poster.poster_id, poster.n, d, steds(gt, pred, distance=d), reds(gt, pred))


def evaluate(gt_samples: Sequence[tuple[Poster, LayoutTree]], predictions: Mapping[str, LayoutTree],
             labels: LabelMode = "id") -> EvalReport:
    gt_ids = [p.poster_id for p, _ in gt_samples]
    missing = sorted(set(gt_ids) - set(predictions))
    extra = sorted(set(predictions) - set(gt_ids))
    if missing or extra:
        raise IdMismatch(missing, extra)
    rows = []
    breakdowns = {(k, a): RelationAccuracy(k, a) for k in RelationKind for a in AXES}
    for poster, gt in sorted(gt_samples, key=lambda s: s[0].poster_id):
        pred = predictions[poster.poster_id]
        if pred.n != gt.n:
            raise ValueError(f"{poster.poster_id}: prediction has {pred.n} boxes, ground truth {gt.n}")
        rows.append(evaluate_poster(poster, gt, pred, labels))
        for key in breakdowns:
            breakdowns[key] = breakdowns[key].merge(relation_accuracy(gt, pred, poster, key[1], key[0]))
    return EvalReport(rows, breakdowns, labels)
