"""Random layout trees and posters for tests, sweeps and demos."""

from __future__ import annotations

import numpy as np

from .model import ROOT, BBox, Category, LayoutTree, Poster, build_tree


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_tree(n: int, seed=None) -> LayoutTree:
    """Sample a DFS-ordered tree over ids 0..n.

    The reading order is a uniform permutation of the boxes; each node then
    attaches to a uniformly chosen node of the current rightmost path, which
    is exactly the set of legal parents at that step.
    """
    rng = _rng(seed)
    order = [ROOT] + [int(x) + 1 for x in rng.permutation(n)]
    parent = {}
    path = [ROOT]
    for node in order[1:]:
        k = int(rng.integers(len(path)))
        parent[node] = path[k]
        del path[k + 1:]
        path.append(node)
    return build_tree(order, parent, n)


def random_poster(tree: LayoutTree, seed=None, page=(1000.0, 1400.0), poster_id="synthetic") -> Poster:
    """Random boxes (geometry and category unrelated to the tree)."""
    rng = _rng(seed)
    page_w, page_h = page
    boxes = []
    cats = [c for c in Category if c is not Category.ROOT]
    for i in range(1, tree.n + 1):
        w = float(rng.uniform(20, page_w / 3))
        h = float(rng.uniform(20, page_h / 6))
        cx = float(rng.uniform(w / 2, page_w - w / 2))
        cy = float(rng.uniform(h / 2, page_h - h / 2))
        boxes.append(BBox(i, cats[int(rng.integers(len(cats)))], cx, cy, w, h))
    return Poster(poster_id, page_w, page_h, tuple(boxes))


def column_poster(
    seed=None,
    n_columns: int | None = None,
    poster_id: str = "synthetic",
    page=(1200.0, 1600.0),
    round_to: int | None = 4,
) -> tuple[Poster, LayoutTree]:
    """A guideline-shaped poster: Title, AuthorInfo, then sections in columns.

    Sections hang off the Root, their content hangs off the section, captions
    hang off the figure or table above them, and the reading order is
    column-major top to bottom.
    """
    rng = _rng(seed)
    page_w, page_h = page
    if n_columns is None:
        n_columns = int(rng.integers(2, 4))
    margin = 20.0
    layout: list[tuple[Category, float, float, float, float, int]] = []  # cat, x1, y1, x2, y2, parent-slot

    def add(cat, x1, y1, x2, y2, parent):
        layout.append((cat, x1, y1, x2, y2, parent))
        return len(layout)  # 1-based id

    y = margin
    add(Category.TITLE, margin, y, page_w - margin, y + 80, ROOT)
    y += 90
    if rng.random() < 0.95:
        add(Category.AUTHOR_INFO, margin + 100, y, page_w - margin - 100, y + 50, ROOT)
        y += 60
    top = y + 10
    col_w = (page_w - margin * (n_columns + 1)) / n_columns
    for c in range(n_columns):
        x1 = margin + c * (col_w + margin)
        x2 = x1 + col_w
        y = top
        for _ in range(int(rng.integers(1, 4))):
            if y + 200 > page_h - margin:
                break
            sec = add(Category.SECTION, x1, y, x2, y + 40, ROOT)
            y += 50
            for _ in range(int(rng.integers(1, 4))):
                cat = [Category.TEXT, Category.LIST, Category.FIGURE, Category.TABLE][
                    int(rng.choice(4, p=[0.45, 0.2, 0.25, 0.1]))
                ]
                hgt = float(rng.uniform(60, 200))
                if y + hgt > page_h - margin:
                    break
                inset = float(rng.uniform(0, col_w * 0.15))
                item = add(cat, x1 + inset, y, x2 - inset, y + hgt, sec)
                y += hgt + 10
                if cat in (Category.FIGURE, Category.TABLE) and rng.random() < 0.6 and y + 40 < page_h - margin:
                    add(Category.CAPTION, x1 + inset, y, x2 - inset, y + 30, item)
                    y += 40

    boxes = []
    for i, (cat, x1, y1, x2, y2, _) in enumerate(layout, start=1):
        cx, cy, w, h = (x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1
        if round_to is not None:
            cx, cy, w, h = (round(v, round_to) for v in (cx, cy, w, h))
        boxes.append(BBox(i, cat, cx, cy, w, h))
    order = list(range(len(layout) + 1))
    parent = {i: p for i, (*_, p) in enumerate(layout, start=1)}
    poster = Poster(poster_id, page_w, page_h, tuple(boxes))
    return poster, build_tree(order, parent, len(layout))


def relabel(poster: Poster, tree: LayoutTree, perm: list[int]) -> tuple[Poster, LayoutTree]:
    """Rename box ``i`` to ``perm[i - 1]`` (a permutation of 1..N)."""
    new_id = {ROOT: ROOT}
    new_id.update({i: perm[i - 1] for i in range(1, poster.n + 1)})
    boxes = sorted(
        (BBox(new_id[b.id], b.category, b.cx, b.cy, b.w, b.h) for b in poster.boxes),
        key=lambda b: b.id,
    )
    order = [new_id[x] for x in tree.order]
    parent = {new_id[c]: new_id[p] for c, p in tree.parent.items()}
    return Poster(poster.poster_id, poster.page_w, poster.page_h, tuple(boxes)), build_tree(order, parent, tree.n)
