"""Canonical dataset files and adapters for external annotation exports.

A canonical split is UTF-8 JSON Lines, one poster per line::

    {"poster_id": "p1", "page": [1200.0, 1600.0],
     "boxes": [{"id": 1, "category": "Title", "cx": 600.0, "cy": 60.0, "w": 1160.0, "h": 80.0}],
     "order": [0, 1], "parent": {"1": 0}}

Coordinates are rounded to four decimals on write.  A directory holds one
file per split, ``<split>.jsonl``.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .model import ROOT, BBox, Category, LayoutError, LayoutTree, Poster, build_tree
from .statistics import EmptySplit

log = logging.getLogger(__name__)

SPLITS = ("train", "valid", "test")
PRECISION = 4
DATA_ENV = "LTK_DATA_DIR"


class ParseError(ValueError):
    def __init__(self, locator: str, message: str):
        super().__init__(f"{locator}: {message}")
        self.locator = locator


class ValidationError(ValueError):
    def __init__(self, errors: Sequence[tuple[str, str]]):
        lines = "\n".join(f"  {loc}: {msg}" for loc, msg in errors)
        super().__init__(f"{len(errors)} invalid record(s):\n{lines}")
        self.errors = list(errors)


class MissingField(KeyError):
    pass


@dataclass
class DatasetSplit:
    name: str
    posters: list[tuple[Poster, LayoutTree]]
    diagnostics: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for poster, _ in self.posters:
            if poster.poster_id in seen:
                raise ValidationError([(poster.poster_id, "duplicate poster id")])
            seen.add(poster.poster_id)

    def __len__(self):
        return len(self.posters)

    def __iter__(self):
        return iter(self.posters)

    def by_id(self) -> dict[str, tuple[Poster, LayoutTree]]:
        return {p.poster_id: (p, t) for p, t in self.posters}


def default_data_dir() -> Path | None:
    value = os.environ.get(DATA_ENV)
    return Path(value) if value else None


def split_path(path, split: str) -> Path:
    path = Path(path)
    if path.is_dir():
        return path / f"{split}.jsonl"
    return path


# -- record <-> objects ----------------------------------------------------------


def _round(x: float) -> float:
    return round(float(x), PRECISION)


def to_record(poster: Poster, tree: LayoutTree) -> dict:
    return {
        "poster_id": poster.poster_id,
        "page": [_round(poster.page_w), _round(poster.page_h)],
        "boxes": [
            {"id": b.id, "category": b.category.value, "cx": _round(b.cx), "cy": _round(b.cy),
             "w": _round(b.w), "h": _round(b.h)}
            for b in poster.boxes
        ],
        "order": list(tree.order),
        "parent": {str(k): tree.parent[k] for k in sorted(tree.parent)},
    }


def from_record(rec: Mapping[str, Any]) -> tuple[Poster, LayoutTree, list[str]]:
    """Build objects from one decoded record; raises KeyError/TypeError/LayoutError."""
    page_w, page_h = (float(x) for x in rec["page"])
    boxes = [
        BBox(int(b["id"]), Category.parse(b["category"]), float(b["cx"]), float(b["cy"]), float(b["w"]), float(b["h"]))
        for b in rec["boxes"]
    ]
    boxes.sort(key=lambda b: b.id)
    poster = Poster(str(rec["poster_id"]), page_w, page_h, tuple(boxes))
    parent = {int(k): int(v) for k, v in rec["parent"].items()}
    tree = build_tree([int(x) for x in rec["order"]], parent, poster.n)
    notes = poster.check()
    if tree.n == 0:
        notes.append(f"{poster.poster_id}: Root-only poster is structurally trivial")
    elif tree.n == 1:
        notes.append(f"{poster.poster_id}: single-box poster is structurally trivial")
    return poster, tree, notes


def dumps_record(poster: Poster, tree: LayoutTree) -> str:
    return json.dumps(to_record(poster, tree), ensure_ascii=False, separators=(",", ":"))


# -- files -----------------------------------------------------------------------


def read_records(path) -> Iterable[tuple[str, Any]]:
    """Yield (locator, parsed JSON) per non-blank line."""
    path = Path(path)
    with path.open(encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            loc = f"{path.name}:{lineno}"
            try:
                yield loc, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(loc, f"malformed JSON ({exc.msg})") from None


def load_split(path, split: str = "test", strict: bool = False, allow_empty: bool = False) -> DatasetSplit:
    """Load and validate a canonical split.

    Every record is validated; failures are collected and raised together
    as one ValidationError unless ``strict``, which raises on the first.
    """
    file = split_path(path, split)
    if not file.exists():
        raise FileNotFoundError(file)
    posters, diagnostics, errors = [], [], []
    seen: set[str] = set()
    for loc, rec in read_records(file):
        if not isinstance(rec, dict):
            raise ParseError(loc, "record is not an object")
        rid = rec.get("poster_id", "?")
        try:
            poster, tree, notes = from_record(rec)
            if poster.poster_id in seen:
                raise LayoutError(f"duplicate poster id {poster.poster_id!r}")
        except LayoutError as exc:
            errors.append((f"{loc} [{rid}]", str(exc)))
            if strict:
                raise ValidationError(errors) from None
            continue
        except KeyError as exc:
            raise ParseError(loc, f"missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ParseError(loc, str(exc)) from None
        seen.add(poster.poster_id)
        posters.append((poster, tree))
        diagnostics.extend((loc, note) for note in notes)
    for loc, note in diagnostics:
        log.warning("%s: %s", loc, note)
    if errors:
        raise ValidationError(errors)
    if not posters and not allow_empty:
        raise EmptySplit(f"{file}: no records")
    return DatasetSplit(split, posters, diagnostics)


def load_all(path, splits: Sequence[str] = SPLITS, strict: bool = False) -> list[DatasetSplit]:
    return [load_split(path, s, strict=strict) for s in splits if split_path(path, s).exists()]


def write_split(split: DatasetSplit, path) -> Path:
    path = Path(path)
    if path.is_dir() or path.suffix == "":
        path.mkdir(parents=True, exist_ok=True)
        path = path / f"{split.name}.jsonl"
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        for poster, tree in split.posters:
            f.write(dumps_record(poster, tree) + "\n")
    return path


# -- external exports -------------------------------------------------------------


@dataclass(frozen=True)
class AdapterConfig:
    """Field names of a foreign annotation payload.

    ``geometry`` selects how the box field is read: ``"corner"`` is
    (x1, y1, x2, y2), ``"center"`` is (cx, cy, w, h) and ``"xywh"`` is
    top-left corner plus size.  External box ids are remapped to 1..N in the
    order boxes appear; ``root_values`` lists the parent values that denote
    the poster itself.  Reading order comes either from a top-level id list
    (``order``) or from a per-box rank (``box_rank``).
    """

    poster_id: str = "id"
    page_size: tuple[str, str] = ("width", "height")
    boxes: str = "annotations"
    box_id: str = "id"
    bbox: str = "bbox"
    geometry: str = "corner"
    category: str = "category"
    order: str | None = "reading_order"
    box_rank: str | None = None
    box_parent: str = "parent"
    root_values: tuple = (None, -1, "root", "Root")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "AdapterConfig":
        data = dict(data)
        for key in ("page_size", "root_values"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


def _get(obj: Mapping, key: str, where: str):
    # dotted keys reach into nested objects
    cur: Any = obj
    for part in key.split("."):
        if not isinstance(cur, Mapping) or part not in cur:
            raise MissingField(f"{where}: missing field {key!r}")
        cur = cur[part]
    return cur


def corner_to_center(x1: float, y1: float, x2: float, y2: float) -> tuple[float, float, float, float]:
    return ((x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1)


def adapt_external(raw: Mapping[str, Any], mapping: AdapterConfig | Mapping | None = None) -> dict:
    """Convert one foreign annotation payload into a canonical record."""
    if mapping is None:
        mapping = AdapterConfig()
    elif not isinstance(mapping, AdapterConfig):
        mapping = AdapterConfig.from_mapping(mapping)
    pid = str(_get(raw, mapping.poster_id, "poster"))
    page = [float(_get(raw, k, pid)) for k in mapping.page_size]
    items = _get(raw, mapping.boxes, pid)

    ext_ids = [_get(b, mapping.box_id, f"{pid} box") for b in items]
    if len(set(map(str, ext_ids))) != len(ext_ids):
        raise LayoutError(f"{pid}: duplicate external box ids")
    new_id = {str(e): k for k, e in enumerate(ext_ids, start=1)}
    roots = {str(v) for v in mapping.root_values}

    def remap(value) -> int:
        if str(value) in roots:
            return ROOT
        try:
            return new_id[str(value)]
        except KeyError:
            raise LayoutError(f"{pid}: reference to unknown box {value!r}") from None

    boxes, parent = [], {}
    for k, b in enumerate(items, start=1):
        where = f"{pid} box {ext_ids[k - 1]}"
        g = [float(v) for v in _get(b, mapping.bbox, where)]
        if len(g) != 4:
            raise LayoutError(f"{where}: geometry needs 4 numbers, got {len(g)}")
        if mapping.geometry == "corner":
            cx, cy, w, h = corner_to_center(*g)
        elif mapping.geometry == "center":
            cx, cy, w, h = g
        elif mapping.geometry == "xywh":
            cx, cy, w, h = g[0] + g[2] / 2, g[1] + g[3] / 2, g[2], g[3]
        else:
            raise ValueError(f"unknown geometry {mapping.geometry!r}")
        cat = Category.parse(_get(b, mapping.category, where))
        boxes.append({"id": k, "category": cat.value, "cx": cx, "cy": cy, "w": w, "h": h})
        parent[str(k)] = remap(b.get(mapping.box_parent))

    if mapping.box_rank is not None:
        ranks = [(_get(b, mapping.box_rank, f"{pid} box {ext_ids[k]}"), k + 1) for k, b in enumerate(items)]
        order = [ROOT] + [k for _, k in sorted(ranks)]
    elif mapping.order is not None:
        order = [ROOT] + [remap(e) for e in _get(raw, mapping.order, pid) if str(e) not in roots]
    else:
        raise MissingField(f"{pid}: adapter declares neither an order list nor a per-box rank")
    return {"poster_id": pid, "page": page, "boxes": boxes, "order": order, "parent": parent}


def adapt_file(src, dst, mapping: AdapterConfig | Mapping | None = None, split: str = "test") -> DatasetSplit:
    """Adapt a JSON array or JSON Lines export into a canonical split file."""
    src = Path(src)
    text = src.read_text(encoding="utf-8")
    stripped = text.lstrip()
    payloads = json.loads(text) if stripped.startswith("[") else [rec for _, rec in read_records(src)]
    samples = []
    for raw in payloads:
        poster, tree, _ = from_record(adapt_external(raw, mapping))
        samples.append((poster, tree))
    out = DatasetSplit(split, samples)
    write_split(out, dst)
    return out
