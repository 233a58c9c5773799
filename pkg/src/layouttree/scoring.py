"""Score matrices fed to the tree decoder.

``S[i, j]`` scores "node j directly follows node i" in reading order and
``P[i, j]`` scores "node j is the parent of node i".  Both are square over
nodes 0..N with the Root at index 0.  Self relations sit on the diagonal at
the most negative finite float, so every matrix stays finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import ROOT, Category, LayoutTree, Poster

NEG = float(np.finfo(np.float64).min)

_HEADER = (Category.TITLE, Category.AUTHOR_INFO)
_SECTION_CHILDREN = (Category.TEXT, Category.LIST, Category.TABLE, Category.FIGURE)


class ScoreError(ValueError):
    pass


class DimensionMismatch(ScoreError):
    pass


class NonFiniteEntry(ScoreError):
    def __init__(self, matrix: str, row: int, col: int, value):
        super().__init__(f"non-finite entry {matrix}[{row}][{col}] = {value}")
        self.matrix, self.row, self.col = matrix, row, col


@dataclass(frozen=True, eq=False)
class ScorePair:
    n: int
    S: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        size = self.n + 1
        for name in ("S", "P"):
            m = np.array(getattr(self, name), dtype=np.float64)
            if m.shape != (size, size):
                raise DimensionMismatch(f"{name} has shape {m.shape}, expected {(size, size)}")
            bad = np.argwhere(~np.isfinite(m))
            if len(bad):
                r, c = (int(x) for x in bad[0])
                raise NonFiniteEntry(name, r, c, m[r, c])
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    def __eq__(self, other):
        if not isinstance(other, ScorePair):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.S, other.S) and np.array_equal(self.P, other.P)

    __hash__ = None


def _blank(n: int) -> tuple[np.ndarray, np.ndarray]:
    S = np.zeros((n + 1, n + 1))
    P = np.zeros((n + 1, n + 1))
    np.fill_diagonal(S, NEG)
    np.fill_diagonal(P, NEG)
    return S, P


def oracle_scores(gt: LayoutTree, margin: float = 1.0) -> ScorePair:
    """Scores whose greedy decode is exactly ``gt``: +margin on GT cells, 0 elsewhere."""
    if not margin > 0:
        raise ValueError("margin must be positive")
    S, P = _blank(gt.n)
    for a, b in zip(gt.order, gt.order[1:]):
        S[a, b] = margin
    for child, parent in gt.parent.items():
        P[child, parent] = margin
    return ScorePair(gt.n, S, P)


_MATRIX_ID = {"S": 0, "P": 1}


def _noise(seed: int, matrix: str, size: int) -> np.ndarray:
    # Philox is counter-based: the stream depends only on (seed, matrix id)
    bitgen = np.random.Philox(key=[int(seed) & 0xFFFFFFFFFFFFFFFF, _MATRIX_ID[matrix]])
    return np.random.Generator(bitgen).standard_normal((size, size))


def noisy_oracle(gt: LayoutTree, margin: float = 1.0, noise_sd: float = 1.0, seed: int = 0) -> ScorePair:
    """Oracle scores plus N(0, noise_sd^2) noise off the diagonal."""
    if noise_sd < 0:
        raise ValueError("noise_sd must be non-negative")
    base = oracle_scores(gt, margin)
    if noise_sd == 0:
        return base
    size = gt.n + 1
    off = ~np.eye(size, dtype=bool)
    S, P = np.array(base.S), np.array(base.P)
    S[off] += noise_sd * _noise(seed, "S", size)[off]
    P[off] += noise_sd * _noise(seed, "P", size)[off]
    return ScorePair(gt.n, S, P)


def column_clusters(poster: Poster) -> dict[int, int]:
    """Column index per body box; Title and AuthorInfo form column -1.

    Body boxes whose horizontal extents overlap by at least half the narrower
    width are linked; columns are the connected components, numbered left to
    right.
    """
    body = [b for b in poster.boxes if b.category not in _HEADER]
    root = {b.id: b.id for b in body}

    def find(x):
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    for k, a in enumerate(body):
        for b in body[k + 1:]:
            overlap = min(a.x2, b.x2) - max(a.x1, b.x1)
            if overlap >= 0.5 * min(a.w, b.w):
                ra, rb = find(a.id), find(b.id)
                if ra != rb:
                    root[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list] = {}
    for b in body:
        groups.setdefault(find(b.id), []).append(b)
    ranked = sorted(groups.values(), key=lambda g: (min(b.x1 for b in g), min(b.y1 for b in g)))
    col = {b.id: -1 for b in poster.boxes if b.category in _HEADER}
    for c, g in enumerate(ranked):
        for b in g:
            col[b.id] = c
    return col


def heuristic_scores(poster: Poster) -> ScorePair:
    """Rule-based scores following the annotation guideline.

    Reading order is column-major: downward neighbours in the same column
    score highest, the top of the next column scores next, and the Root is
    followed by the Title and then the author block.  Parents: Title,
    AuthorInfo and Section attach to the Root; body elements attach to the
    nearest Section above them in their column (else the Root); a Caption
    attaches to the closest Figure or Table.
    """
    n = poster.n
    S, P = _blank(n)
    col = column_clusters(poster)
    H, W = poster.page_h, poster.page_w
    diag = math.hypot(W, H)
    boxes = {b.id: b for b in poster.boxes}

    for j, bj in boxes.items():
        if bj.category is Category.TITLE:
            S[ROOT, j] = 4.0
        elif bj.category is Category.AUTHOR_INFO:
            S[ROOT, j] = 3.0
        else:
            S[ROOT, j] = 1.0 / (1.0 + (col[j] + 1) + bj.y1 / H)

    for i, bi in boxes.items():
        for j, bj in boxes.items():
            if i == j:
                continue
            if col[i] == col[j] and (bj.y1, bj.x1) > (bi.y1, bi.x1):
                s = 2.0 + 1.0 / (1.0 + (bj.y1 - bi.y1) / H)
            elif col[j] > col[i]:
                s = 1.0 + 1.0 / (1.0 + (col[j] - col[i] - 1) + bj.y1 / H)
            else:
                s = -1.0 / (1.0 + math.hypot(bj.cx - bi.cx, bj.cy - bi.cy) / diag)
            if bi.category is Category.TITLE and bj.category is Category.AUTHOR_INFO:
                s += 2.0
            S[i, j] = s

    for i, bi in boxes.items():
        row = np.full(n + 1, -1.0)
        row[i] = NEG
        if bi.category in _HEADER or bi.category is Category.SECTION:
            row[ROOT] = 4.0
        elif bi.category in _SECTION_CHILDREN:
            row[ROOT] = 0.0
            for s, bs in boxes.items():
                if bs.category is not Category.SECTION or col[s] != col[i] or not bs.y1 < bi.y1:
                    continue
                overlap = (min(bs.x2, bi.x2) - max(bs.x1, bi.x1)) / min(bs.w, bi.w)
                affinity = max(overlap, 0.0) / (1.0 + (bi.y1 - bs.y1) / H)
                if affinity > 0:
                    row[s] = 1.0 + affinity
        else:  # caption
            row[ROOT] = 0.0
            for f, bf in boxes.items():
                if bf.category in (Category.FIGURE, Category.TABLE):
                    row[f] = 1.0 + 1.0 / (1.0 + math.hypot(bf.cx - bi.cx, bf.cy - bi.cy) / diag)
        P[i] = row
    return ScorePair(n, S, P)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def save_scores(sp: ScorePair, path) -> None:
    lines = [f"n={sp.n}", "S:"]
    lines += [" ".join(_fmt(x) for x in row) for row in sp.S]
    lines.append("P:")
    lines += [" ".join(_fmt(x) for x in row) for row in sp.P]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_scores(path) -> ScorePair:
    lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("n="):
        raise DimensionMismatch(f"{path}: missing 'n=<N>' header")
    try:
        n = int(lines[0][2:])
    except ValueError:
        raise DimensionMismatch(f"{path}: bad header {lines[0]!r}") from None
    size = n + 1
    expected = 2 + 2 * size + 1
    if len(lines) != expected or lines[1] != "S:" or lines[2 + size] != "P:":
        raise DimensionMismatch(f"{path}: expected S: and P: blocks of {size} rows each")
    mats = {}
    for name, start in (("S", 2), ("P", 3 + size)):
        rows = []
        for r in range(size):
            parts = lines[start + r].split()
            if len(parts) != size:
                raise DimensionMismatch(f"{path}: {name} row {r} has {len(parts)} entries, expected {size}")
            vals = [float(p) for p in parts]
            for c, v in enumerate(vals):
                if not math.isfinite(v):
                    raise NonFiniteEntry(name, r, c, v)
            rows.append(vals)
        mats[name] = np.array(rows)
    return ScorePair(n, mats["S"], mats["P"])
