"""Bounding boxes, posters and DFS-ordered layout trees.

Node ids are 0-based; id 0 is the virtual Root node representing the whole
poster, ids 1..N are the poster's boxes.  A :class:`LayoutTree` stores the
reading order and the parent map together and guarantees that traversing the
tree depth-first (children in stored order) reproduces the reading order.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

ROOT = 0


class Category(enum.Enum):
    TITLE = "Title"
    AUTHOR_INFO = "AuthorInfo"
    SECTION = "Section"
    TEXT = "Text"
    LIST = "List"
    FIGURE = "Figure"
    TABLE = "Table"
    CAPTION = "Caption"
    ROOT = "Root"

    @classmethod
    def parse(cls, name: str) -> "Category":
        """Case-insensitive lookup that ignores spaces, underscores and dashes.

        >>> Category.parse("Author Info")
        <Category.AUTHOR_INFO: 'AuthorInfo'>
        """
        key = "".join(ch for ch in str(name) if ch not in " _-").lower()
        for cat in cls:
            if cat.value.lower() == key:
                return cat
        raise UnknownCategory(name)


# Row/column order used by every per-category table.
BOX_CATEGORIES: tuple[Category, ...] = tuple(c for c in Category if c is not Category.ROOT)


class LayoutError(ValueError):
    """Base class for invalid posters and trees."""


class UnknownCategory(LayoutError):
    def __init__(self, name: str):
        super().__init__(f"unknown category {name!r}")
        self.name = name


class OrderError(LayoutError):
    pass


class ParentError(LayoutError):
    pass


class CycleError(LayoutError):
    def __init__(self, cycle: Sequence[int]):
        super().__init__("parent map has a cycle: " + " -> ".join(map(str, cycle)))
        self.cycle = tuple(cycle)


class DfsInconsistency(LayoutError):
    def __init__(self, step: int, node: int, parent: int, path: Sequence[int]):
        super().__init__(
            f"step {step}: parent {parent} of node {node} is not on the "
            f"rightmost path {list(path)}"
        )
        self.step = step
        self.node = node
        self.parent = parent
        self.path = tuple(path)


@dataclass(frozen=True)
class BBox:
    id: int
    category: Category
    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise LayoutError(f"box {self.id}: width and height must be positive")
        if self.category is Category.ROOT:
            raise LayoutError(f"box {self.id}: Root is reserved for the virtual node")
        if self.id < 1:
            raise LayoutError(f"box id must be >= 1, got {self.id}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.cx, self.cy)

    @property
    def x1(self) -> float:
        return self.cx - self.w / 2

    @property
    def x2(self) -> float:
        return self.cx + self.w / 2

    @property
    def y1(self) -> float:
        return self.cy - self.h / 2

    @property
    def y2(self) -> float:
        return self.cy + self.h / 2


@dataclass(frozen=True)
class RootBox:
    """Geometry of the virtual Root: the whole page."""

    cx: float
    cy: float
    w: float
    h: float
    id: int = ROOT
    category: Category = Category.ROOT

    @property
    def center(self) -> tuple[float, float]:
        return (self.cx, self.cy)


@dataclass(frozen=True)
class Poster:
    poster_id: str
    page_w: float
    page_h: float
    boxes: tuple[BBox, ...]

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        if not (self.page_w > 0 and self.page_h > 0):
            raise LayoutError(f"{self.poster_id}: page extents must be positive")
        ids = [b.id for b in self.boxes]
        if ids != list(range(1, len(ids) + 1)):
            raise LayoutError(f"{self.poster_id}: box ids must be dense 1..N in order, got {ids}")

    @property
    def n(self) -> int:
        return len(self.boxes)

    @property
    def root(self) -> RootBox:
        return RootBox(self.page_w / 2, self.page_h / 2, self.page_w, self.page_h)

    def node(self, node_id: int) -> BBox | RootBox:
        """Box for ``node_id``; id 0 yields the page-sized Root box."""
        if node_id == ROOT:
            return self.root
        return self.boxes[node_id - 1]

    def category(self, node_id: int) -> Category:
        return Category.ROOT if node_id == ROOT else self.boxes[node_id - 1].category

    def check(self) -> list[str]:
        """Soft checks; returns warning messages for centers outside the page."""
        out = []
        for b in self.boxes:
            if not (0 <= b.cx <= self.page_w and 0 <= b.cy <= self.page_h):
                out.append(f"{self.poster_id}: box {b.id} center ({b.cx}, {b.cy}) lies outside the page")
        return out


class RelationKind(enum.Enum):
    READING_ORDER = "ReadingOrder"
    PARENT_CHILD = "ParentChild"


@dataclass(frozen=True)
class Relation:
    """A directed relation between two nodes.

    Reading order: ``(predecessor, successor)``.  Parent-child:
    ``(child, parent)``.
    """

    kind: RelationKind
    from_id: int
    to_id: int

    def __post_init__(self):
        if self.from_id == self.to_id:
            raise LayoutError(f"self relation on node {self.from_id}")

    def touches_root(self) -> bool:
        return ROOT in (self.from_id, self.to_id)


@dataclass(frozen=True)
class LayoutTree:
    """A DFS-ordered tree; build instances with :func:`build_tree`."""

    order: tuple[int, ...]
    parent: Mapping[int, int]
    children: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.order) - 1

    @property
    def size(self) -> int:
        return len(self.order)

    @property
    def trivial(self) -> bool:
        """Root-only or single-box trees carry no structure to analyse."""
        return self.n <= 1

    def depths(self) -> list[int]:
        """Node count from Root to each node (Root has depth 1)."""
        d = [0] * self.size
        d[ROOT] = 1
        for node in self.order[1:]:
            d[node] = d[self.parent[node]] + 1
        return d


def _check_order(order: Sequence[int], n: int) -> tuple[int, ...]:
    order = tuple(int(x) for x in order)
    if len(order) != n + 1:
        raise OrderError(f"order has length {len(order)}, expected {n + 1}")
    if sorted(order) != list(range(n + 1)):
        raise OrderError(f"order is not a permutation of 0..{n}: {list(order)}")
    if order[0] != ROOT:
        raise OrderError(f"order must start with the Root (0), got {order[0]}")
    return order


def _check_parent(parent: Mapping[int, int], n: int) -> dict[int, int]:
    parent = {int(k): int(v) for k, v in parent.items()}
    if set(parent) != set(range(1, n + 1)):
        missing = sorted(set(range(1, n + 1)) - set(parent))
        extra = sorted(set(parent) - set(range(1, n + 1)))
        raise ParentError(f"parent map must cover ids 1..{n}; missing {missing}, unexpected {extra}")
    for child, p in parent.items():
        if not 0 <= p <= n:
            raise ParentError(f"parent of {child} is {p}, outside 0..{n}")
        if p == child:
            raise CycleError([child, child])
    return parent


def find_cycle(parent: Mapping[int, int]) -> list[int] | None:
    """Return one cycle of the parent map as a closed id list, or None."""
    state: dict[int, int] = {}
    for start in parent:
        path = []
        node = start
        while node in parent and state.get(node) is None:
            state[node] = 1
            path.append(node)
            node = parent[node]
        if node in parent and state.get(node) == 1 and node in path:
            cyc = path[path.index(node):]
            return cyc + [node]
        for p in path:
            state[p] = 2
    return None


def build_tree(order: Sequence[int], parent: Mapping[int, int], n: int | None = None) -> LayoutTree:
    """Validate a (reading order, parent map) pair and build the tree.

    Raises OrderError, ParentError, CycleError or DfsInconsistency.  The
    last one carries the first step ``j`` whose node's parent is not on the
    rightmost path of the tree built from ``order[:j]``.
    """
    if n is None:
        n = len(order) - 1
    order = _check_order(order, n)
    parent = _check_parent(parent, n)
    cycle = find_cycle(parent)
    if cycle:
        raise CycleError(cycle)

    children: list[list[int]] = [[] for _ in range(n + 1)]
    path = [ROOT]
    for j in range(1, n + 1):
        node = order[j]
        p = parent[node]
        # the rightmost path is short; a linear scan beats keeping an index
        for k in range(len(path) - 1, -1, -1):
            if path[k] == p:
                break
        else:
            raise DfsInconsistency(j, node, p, path)
        del path[k + 1:]
        path.append(node)
        children[p].append(node)
    return LayoutTree(order, parent, tuple(tuple(c) for c in children))


def is_dfs_legal(order: Sequence[int], parent: Mapping[int, int]) -> bool:
    try:
        build_tree(order, parent)
    except LayoutError:
        return False
    return True


def dfs_replay(tree: LayoutTree) -> tuple[int, ...]:
    out = []
    stack = [ROOT]
    while stack:
        node = stack.pop()
        out.append(node)
        stack.extend(reversed(tree.children[node]))
    return tuple(out)


def extract_relations(
    tree: LayoutTree,
    include_root: bool = True,
    kinds: Iterable[RelationKind] = (RelationKind.READING_ORDER, RelationKind.PARENT_CHILD),
) -> list[Relation]:
    kinds = set(kinds)
    rels: list[Relation] = []
    if RelationKind.READING_ORDER in kinds:
        for a, b in zip(tree.order, tree.order[1:]):
            rels.append(Relation(RelationKind.READING_ORDER, a, b))
    if RelationKind.PARENT_CHILD in kinds:
        for child in range(1, tree.n + 1):
            rels.append(Relation(RelationKind.PARENT_CHILD, child, tree.parent[child]))
    if not include_root:
        rels = [r for r in rels if not r.touches_root()]
    return rels


def validate_pair(poster: Poster, tree: LayoutTree) -> None:
    if poster.n != tree.n:
        raise LayoutError(f"{poster.poster_id}: poster has {poster.n} boxes but tree has {tree.n}")


def warn_outside(poster: Poster) -> list[str]:
    msgs = poster.check()
    for m in msgs:
        warnings.warn(m, stacklevel=2)
    return msgs
