import math
import random

import numpy as np
import pytest

from layouttree.model import BBox, Category, Poster, RelationKind, build_tree
from layouttree.statistics import (
    DIRECTIONS,
    DegenerateDirection,
    EmptySplit,
    category_stats,
    category_transitions,
    direction_class,
    distance_bin,
    norm_distance,
    relation_heatmap,
    tree_stats,
)

RO, PC = RelationKind.READING_ORDER, RelationKind.PARENT_CHILD


def _box(i, cx, cy, w=10.0, h=10.0, cat=Category.TEXT):
    return BBox(i, cat, cx, cy, w, h)


def test_unit_displacements():
    steps = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]
    assert [direction_class((0, 0), s) for s in steps] == list(range(8))
    assert DIRECTIONS[0] == "Right" and DIRECTIONS[2] == "Bottom" and DIRECTIONS[6] == "Top"


def test_direction_matches_nearest_compass_sector():
    rng = random.Random(0)
    for _ in range(2000):
        dx, dy = rng.uniform(-5, 5), rng.uniform(-5, 5)
        deg = math.degrees(math.atan2(dy, dx)) % 360
        if min(abs((deg - 22.5) % 45), abs((deg - 22.5) % 45 - 45)) < 1e-6:
            continue
        nearest = min(range(8), key=lambda k: min(abs(deg - 45 * k), 360 - abs(deg - 45 * k)))
        assert direction_class((0, 0), (dx, dy)) == nearest


def test_direction_degenerate():
    with pytest.raises(DegenerateDirection):
        direction_class((3, 3), (3, 3))


def test_norm_distance_examples():
    assert norm_distance(_box(1, 0, 0, w=5), _box(2, 10, 0, w=8)) == 1.25
    assert norm_distance(_box(1, 0, 0, w=6, h=1), _box(2, 3, 3, w=4, h=100)) == 3 / 6
    d = norm_distance(_box(1, 0, 0, h=20), _box(2, 0, 20, h=20))
    assert d == 1.0 and distance_bin(d) == 0


@pytest.mark.parametrize("d, k", [(0.01, 0), (1.0, 0), (1.0001, 1), (2.0, 1), (4.0, 2), (8.0, 3), (16.0, 4), (16.5, 5)])
def test_distance_bins(d, k):
    assert distance_bin(d) == k


def test_heatmap_single_pair():
    poster = Poster("p", 100, 100, (_box(1, 50, 10, h=20), _box(2, 50, 20, h=20)))
    tree = build_tree((0, 1, 2), {1: 0, 2: 0})
    stats = relation_heatmap([(poster, tree)], RO)
    assert stats.counts.sum() == 1 and stats.counts[2, 0] == 1
    assert stats.normalized[2, 0] == 1000.0
    assert stats.heat[2, 0] == pytest.approx(math.log2(1001))
    # with Root endpoints, Root -> 1 (page center to box 1) points up
    with_root = relation_heatmap([(poster, tree)], RO, include_root=True)
    assert with_root.counts.sum() == 2 and with_root.counts[6].sum() == 1


def test_heatmap_skips_shared_centers():
    poster = Poster("p", 100, 100, (_box(1, 50, 10), _box(2, 50, 10)))
    stats = relation_heatmap([(poster, build_tree((0, 1, 2), {1: 0, 2: 0}))], RO)
    assert stats.counts.sum() == 0 and stats.skipped == 1


def test_heatmap_merge_adds_pages():
    poster = Poster("p", 100, 100, (_box(1, 50, 10), _box(2, 80, 10)))
    s = relation_heatmap([(poster, build_tree((0, 1, 2), {1: 0, 2: 0}))], RO)
    m = s.merge(s)
    assert m.pages == 2 and np.array_equal(m.normalized, s.normalized)


def _poster(n, cats=None):
    cats = cats or [Category.TEXT] * n
    return Poster("p", 100, 100, tuple(_box(i, 10 * i, 10 * i, cat=c) for i, c in enumerate(cats, start=1)))


def test_tree_stats_examples():
    chain = build_tree((0, 1, 2), {1: 0, 2: 1})
    ts = tree_stats([(_poster(2), chain)])
    assert (ts.depth.mean, ts.width.mean) == (3, 1)
    star = build_tree((0, 1, 2, 3), {1: 0, 2: 0, 3: 0})
    ts = tree_stats([(_poster(3), star)])
    assert (ts.depth.mean, ts.width.mean, ts.children.mean) == (2, 3, 0.75)
    both = tree_stats([(_poster(2), chain), (_poster(3), star)])
    assert both.depth.mean == 2.5 and both.depth.sd == 0.5
    assert both.depth.histogram == {2: 1, 3: 1}


def test_category_stats_example():
    cs = category_stats([(_poster(2), build_tree((0, 1, 2), {1: 0, 2: 0}))])
    assert cs.totals[Category.TEXT] == 2 and cs.mean[Category.TEXT] == 2.0
    assert cs.totals[Category.TITLE] == 0 and cs.all_total == 2


def test_category_stats_two_posters():
    a = _poster(3, [Category.TITLE, Category.TEXT, Category.TEXT])
    b = _poster(1, [Category.TEXT])
    samples = [(a, build_tree(range(4), {1: 0, 2: 0, 3: 0})), (b, build_tree((0, 1), {1: 0}))]
    cs = category_stats(samples)
    assert cs.totals[Category.TEXT] == 3 and cs.mean[Category.TEXT] == 1.5
    assert cs.sd[Category.TEXT] == 0.5 and cs.all_mean == 2.0
    assert category_stats(samples, ddof=1).sd[Category.TEXT] == pytest.approx(math.sqrt(0.5))


def test_transitions():
    cats = [Category.TITLE, Category.FIGURE, Category.CAPTION, Category.TEXT]
    p = _poster(4, cats)
    t = build_tree(range(5), {1: 0, 2: 0, 3: 2, 4: 0})
    ro = category_transitions([(p, t)], RO)
    assert ro.cell(Category.ROOT, Category.TITLE) == 1000.0
    assert ro.cell(Category.CAPTION, Category.TEXT, normalized=False) == 1
    assert ro.counts.sum() == 4
    pc = category_transitions([(p, t)], PC)
    assert pc.cell(Category.FIGURE, Category.CAPTION) == 1000.0
    assert pc.cell(Category.ROOT, Category.CAPTION) == 0.0
    no_caption = _poster(2, [Category.FIGURE, Category.TEXT])
    pc2 = category_transitions([(p, t), (no_caption, build_tree(range(3), {1: 0, 2: 0}))], PC)
    assert pc2.cell(Category.FIGURE, Category.CAPTION) == 500.0


def test_empty_split():
    with pytest.raises(EmptySplit):
        tree_stats([])
