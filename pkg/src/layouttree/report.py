"""CSV tables and SVG polar heatmaps for dataset statistics and evaluations."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .model import BOX_CATEGORIES, RelationKind
from .statistics import (
    CATEGORY_ROWS,
    DIRECTIONS,
    DISTANCE_BINS,
    RelationStats,
    category_stats,
    category_transitions,
    relation_heatmap,
    tree_stats,
)

KIND_PREFIX = {RelationKind.READING_ORDER: "ro", RelationKind.PARENT_CHILD: "pc"}


def _write(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)
    return path


def _f(x: float, digits: int = 2) -> str:
    return f"{x:.{digits}f}"


def write_category_table(samples, out: Path, ddof: int = 0) -> Path:
    cs = category_stats(samples, ddof)
    rows = [[c.value, cs.totals[c], _f(cs.mean[c], 4), _f(cs.sd[c], 4)] for c in BOX_CATEGORIES]
    rows.append(["All", cs.all_total, _f(cs.all_mean, 4), _f(cs.all_sd, 4)])
    return _write(out / "categories.csv", ["category", "total", "mean", "sd"], rows)


def write_tree_tables(samples, out: Path, ddof: int = 0) -> list[Path]:
    ts = tree_stats(samples, ddof)
    paths = [_write(
        out / "tree_stats.csv",
        ["statistic", "mean", "sd"],
        [["depth", _f(ts.depth.mean, 4), _f(ts.depth.sd, 4)],
         ["width", _f(ts.width.mean, 4), _f(ts.width.sd, 4)],
         ["children_per_node", _f(ts.children.mean, 4), _f(ts.children.sd, 4)]],
    )]
    for name, summary, denom in (("depth", ts.depth, ts.pages), ("width", ts.width, ts.pages),
                                 ("children", ts.children, ts.nodes)):
        unit = "per_1000_nodes" if name == "children" else "per_1000_pages"
        rows = [[v, c, _f(c * 1000.0 / denom, 2), _f(math.log2(1 + c * 1000.0 / denom), 4)]
                for v, c in summary.histogram.items()]
        paths.append(_write(out / f"tree_{name}_hist.csv", ["value", "count", unit, "log2_1p"], rows))
    return paths


def write_heatmap_tables(stats: RelationStats, out: Path) -> list[Path]:
    prefix = KIND_PREFIX[stats.kind]
    header = ["direction"] + list(DISTANCE_BINS)
    norm = stats.normalized
    return [
        _write(out / f"{prefix}_direction_distance.csv", header,
               [[d] + [_f(v) for v in norm[k]] for k, d in enumerate(DIRECTIONS)]),
        _write(out / f"{prefix}_direction_distance_counts.csv", header,
               [[d] + [int(v) for v in stats.counts[k]] for k, d in enumerate(DIRECTIONS)]),
    ]


def write_transition_table(samples, kind: RelationKind, out: Path) -> Path:
    tr = category_transitions(samples, kind)
    norm = tr.normalized
    prefix = KIND_PREFIX[kind]
    corner = "preceding\\subsequent" if kind is RelationKind.READING_ORDER else "parent\\child"
    return _write(out / f"{prefix}_category_transitions.csv", [corner] + [c.value for c in BOX_CATEGORIES],
                  [[r.value] + [_f(v) for v in norm[k]] for k, r in enumerate(CATEGORY_ROWS)])


def polar_heatmap_svg(stats: RelationStats, title: str = "", size: int = 480) -> str:
    """8 direction sectors x 6 distance rings, darker = higher log2(1 + count per 1000 pages)."""
    heat = stats.heat
    top = float(heat.max()) or 1.0
    c = size / 2
    r0, r_max = size * 0.06, size * 0.38
    dr = (r_max - r0) / len(DISTANCE_BINS)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + 30}" viewBox="0 0 {size} {size + 30}">',
        f'<rect width="{size}" height="{size + 30}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{c:.1f}" y="18" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>')
    cy = c + 20

    def pt(r, deg):
        t = math.radians(deg)
        return c + r * math.cos(t), cy + r * math.sin(t)

    for a in range(len(DIRECTIONS)):
        lo, hi = a * 45 - 22.5, a * 45 + 22.5
        for k in range(len(DISTANCE_BINS)):
            ri, ro = r0 + k * dr, r0 + (k + 1) * dr
            g = int(round(255 * (1 - heat[a, k] / top)))
            x1, y1 = pt(ro, lo)
            x2, y2 = pt(ro, hi)
            x3, y3 = pt(ri, hi)
            x4, y4 = pt(ri, lo)
            parts.append(
                f'<path d="M{x1:.2f},{y1:.2f} A{ro:.2f},{ro:.2f} 0 0 1 {x2:.2f},{y2:.2f} '
                f'L{x3:.2f},{y3:.2f} A{ri:.2f},{ri:.2f} 0 0 0 {x4:.2f},{y4:.2f} Z" '
                f'fill="rgb({g},{g},{g})" stroke="#999" stroke-width="0.5">'
                f'<title>{DIRECTIONS[a]} {DISTANCE_BINS[k]}: {stats.normalized[a, k]:.2f}</title></path>'
            )
        lx, ly = pt(r_max + 28, a * 45)
        parts.append(f'<text x="{lx:.1f}" y="{ly:.1f}" text-anchor="middle" font-family="sans-serif" '
                     f'font-size="11">{DIRECTIONS[a]}</text>')
        parts.append(f'<text x="{lx:.1f}" y="{ly + 12:.1f}" text-anchor="middle" font-family="sans-serif" '
                     f'font-size="10">{stats.per_page_direction[a]:.2f}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_stats_report(samples, out: Path, include_root: bool = False, ddof: int = 0) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = [write_category_table(samples, out, ddof)]
    paths += write_tree_tables(samples, out, ddof)
    for kind in RelationKind:
        stats = relation_heatmap(samples, kind, include_root)
        paths += write_heatmap_tables(stats, out)
        paths.append(write_transition_table(samples, kind, out))
        svg = out / f"{KIND_PREFIX[kind]}_heatmap.svg"
        svg.write_text(polar_heatmap_svg(stats, f"{kind.value} ({stats.pages} pages)"), encoding="utf-8")
        paths.append(svg)
    return paths


def score_histogram(values: Sequence[float], width: float = 10.0, upper: float = 100.0) -> list[tuple[str, int]]:
    """Counts per ``width``-wide bin over [0, upper]; the top bin is closed."""
    n_bins = int(math.ceil(upper / width))
    counts = np.zeros(n_bins, dtype=int)
    for v in values:
        k = min(int(v // width), n_bins - 1) if v >= 0 else 0
        counts[k] += 1
    return [(f"[{k * width:g}, {(k + 1) * width:g}{']' if k == n_bins - 1 else ')'}", int(counts[k]))
            for k in range(n_bins)]


def count_histogram(values: Sequence[int], width: int = 10) -> list[tuple[str, int]]:
    """Open-ended integer bins for TED: [0, 10), [10, 20), ..."""
    if not values:
        return []
    n_bins = int(max(values)) // width + 1
    counts = np.zeros(n_bins, dtype=int)
    for v in values:
        counts[int(v) // width] += 1
    return [(f"[{k * width}, {(k + 1) * width})", int(counts[k])) for k in range(n_bins)]

