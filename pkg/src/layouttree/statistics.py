"""Dataset statistics: direction classes, normalized distances and tables.

Image coordinates are used throughout (origin top-left, y pointing down), so
angles grow clockwise.  Parent-child relations are measured from the parent
box to the child box; reading-order relations from predecessor to successor.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .model import BOX_CATEGORIES, ROOT, Category, LayoutTree, Poster, RelationKind

log = logging.getLogger(__name__)

DIRECTIONS = ("Right", "Bottom-Right", "Bottom", "Bottom-Left", "Left", "Top-Left", "Top", "Top-Right")
DISTANCE_EDGES = (1.0, 2.0, 4.0, 8.0, 16.0)
DISTANCE_BINS = ("(0, 1]", "(1, 2]", "(2, 4]", "(4, 8]", "(8, 16]", "(16, inf)")
CATEGORY_ROWS: tuple[Category, ...] = (Category.ROOT,) + BOX_CATEGORIES


class DegenerateDirection(ValueError):
    """Two boxes share a center, so no direction or distance is defined."""


class EmptySplit(ValueError):
    pass


def _xy(p) -> tuple[float, float]:
    if hasattr(p, "cx"):
        return (p.cx, p.cy)
    x, y = p
    return (float(x), float(y))


def direction_class(src, dst) -> int:
    """Clockwise 8-way sector of the displacement ``dst - src`` (0 = Right)."""
    x0, y0 = _xy(src)
    x1, y1 = _xy(dst)
    dx, dy = x1 - x0, y1 - y0
    if dx == 0 and dy == 0:
        raise DegenerateDirection(f"identical centers at ({x0}, {y0})")
    theta = math.atan2(dy, dx)
    return int(math.floor(((theta + 2 * math.pi) % (2 * math.pi) + math.pi / 8) / (math.pi / 4))) % 8


def direction_name(index: int) -> str:
    return DIRECTIONS[index]


def norm_distance(a, b) -> float:
    """Center distance along the dominant axis over the larger extent on it."""
    dx = abs(b.cx - a.cx)
    dy = abs(b.cy - a.cy)
    if dx == 0 and dy == 0:
        raise DegenerateDirection(f"identical centers at ({a.cx}, {a.cy})")
    if dx >= dy:
        return dx / max(a.w, b.w)
    return dy / max(a.h, b.h)


def distance_bin(d: float) -> int:
    if not d > 0:
        raise ValueError(f"distance must be positive, got {d}")
    for k, edge in enumerate(DISTANCE_EDGES):
        if d <= edge:
            return k
    return len(DISTANCE_EDGES)


def relation_endpoints(tree: LayoutTree, kind: RelationKind, include_root: bool = False):
    """(source, target) node pairs in the orientation used for geometry.

    Reading order yields (predecessor, successor); parent-child yields
    (parent, child).
    """
    if kind is RelationKind.READING_ORDER:
        pairs = zip(tree.order, tree.order[1:])
    else:
        pairs = ((tree.parent[c], c) for c in tree.order[1:])
    for a, b in pairs:
        if include_root or ROOT not in (a, b):
            yield a, b


def geometry_buckets(poster: Poster, a: int, b: int) -> tuple[int, int]:
    """(direction class, distance bin) from node ``a`` to node ``b``."""
    pa, pb = poster.node(a), poster.node(b)
    return direction_class(pa, pb), distance_bin(norm_distance(pa, pb))


Sample = tuple[Poster, LayoutTree]


def _samples(split) -> list[Sample]:
    samples = list(getattr(split, "posters", split))
    if not samples:
        raise EmptySplit("no posters to analyse")
    return samples


def per_thousand(counts, pages: int):
    return np.asarray(counts, dtype=float) * 1000.0 / pages


@dataclass
class RelationStats:
    kind: RelationKind
    counts: np.ndarray  # 8 directions x 6 distance bins
    pages: int
    skipped: int = 0

    @property
    def normalized(self) -> np.ndarray:
        return per_thousand(self.counts, self.pages)

    @property
    def heat(self) -> np.ndarray:
        return np.log2(1.0 + self.normalized)

    @property
    def per_page_direction(self) -> np.ndarray:
        """Mean count per page for each direction (the numbers under the rose)."""
        return self.counts.sum(axis=1) / self.pages

    def merge(self, other: "RelationStats") -> "RelationStats":
        assert self.kind is other.kind
        return RelationStats(self.kind, self.counts + other.counts, self.pages + other.pages, self.skipped + other.skipped)


def relation_heatmap(split, kind: RelationKind, include_root: bool = False) -> RelationStats:
    samples = _samples(split)
    counts = np.zeros((len(DIRECTIONS), len(DISTANCE_BINS)), dtype=np.int64)
    skipped = 0
    for poster, tree in samples:
        for a, b in relation_endpoints(tree, kind, include_root):
            try:
                d, k = geometry_buckets(poster, a, b)
            except DegenerateDirection:
                log.warning("%s: nodes %d and %d share a center; relation skipped", poster.poster_id, a, b)
                skipped += 1
                continue
            counts[d, k] += 1
    return RelationStats(kind, counts, len(samples), skipped)


@dataclass
class Summary:
    mean: float
    sd: float
    histogram: dict[int, int] = field(default_factory=dict)

    @classmethod
    def of(cls, values: Sequence[float], ddof: int = 0) -> "Summary":
        arr = np.asarray(values, dtype=float)
        sd = float(arr.std(ddof=ddof)) if len(arr) > ddof else 0.0
        return cls(float(arr.mean()), sd, dict(sorted(Counter(int(v) for v in values).items())))


@dataclass
class TreeStats:
    depth: Summary
    width: Summary
    children: Summary
    pages: int
    nodes: int


def tree_depth(tree: LayoutTree) -> int:
    return max(tree.depths())


def tree_width(tree: LayoutTree) -> int:
    return max(Counter(tree.depths()).values())


def children_counts(tree: LayoutTree) -> list[int]:
    return [len(c) for c in tree.children]


def tree_stats(split, ddof: int = 0) -> TreeStats:
    samples = _samples(split)
    depths, widths, kids = [], [], []
    for _, tree in samples:
        depths.append(tree_depth(tree))
        widths.append(tree_width(tree))
        kids.extend(children_counts(tree))
    return TreeStats(Summary.of(depths, ddof), Summary.of(widths, ddof), Summary.of(kids, ddof), len(samples), len(kids))


@dataclass
class CategoryStats:
    totals: dict[Category, int]
    mean: dict[Category, float]
    sd: dict[Category, float]
    pages: int
    all_total: int
    all_mean: float
    all_sd: float


def category_stats(split, ddof: int = 0) -> CategoryStats:
    samples = _samples(split)
    per_poster = np.zeros((len(samples), len(BOX_CATEGORIES)), dtype=np.int64)
    col = {c: k for k, c in enumerate(BOX_CATEGORIES)}
    for r, (poster, _) in enumerate(samples):
        for b in poster.boxes:
            per_poster[r, col[b.category]] += 1
    totals = per_poster.sum(axis=0)
    means = per_poster.mean(axis=0)
    sds = per_poster.std(axis=0, ddof=ddof) if len(samples) > ddof else np.zeros(len(BOX_CATEGORIES))
    all_counts = per_poster.sum(axis=1)
    return CategoryStats(
        totals={c: int(totals[k]) for c, k in col.items()},
        mean={c: float(means[k]) for c, k in col.items()},
        sd={c: float(sds[k]) for c, k in col.items()},
        pages=len(samples),
        all_total=int(all_counts.sum()),
        all_mean=float(all_counts.mean()),
        all_sd=float(all_counts.std(ddof=ddof)) if len(samples) > ddof else 0.0,
    )


@dataclass
class CategoryTransitions:
    kind: RelationKind
    counts: np.ndarray  # rows: CATEGORY_ROWS (source), cols: BOX_CATEGORIES (target)
    pages: int

    rows = CATEGORY_ROWS
    cols = BOX_CATEGORIES

    @property
    def normalized(self) -> np.ndarray:
        return per_thousand(self.counts, self.pages)

    def cell(self, src: Category, dst: Category, normalized: bool = True) -> float:
        m = self.normalized if normalized else self.counts
        return float(m[CATEGORY_ROWS.index(src), BOX_CATEGORIES.index(dst)])


def category_transitions(split, kind: RelationKind) -> CategoryTransitions:
    """Predecessor->successor (reading order) or parent->child category counts."""
    samples = _samples(split)
    counts = np.zeros((len(CATEGORY_ROWS), len(BOX_CATEGORIES)), dtype=np.int64)
    for poster, tree in samples:
        for a, b in relation_endpoints(tree, kind, include_root=True):
            counts[CATEGORY_ROWS.index(poster.category(a)), BOX_CATEGORIES.index(poster.category(b))] += 1
    return CategoryTransitions(kind, counts, len(samples))


def combine(splits: Iterable) -> list[Sample]:
    out: list[Sample] = []
    for s in splits:
        out.extend(getattr(s, "posters", s))
    return out
