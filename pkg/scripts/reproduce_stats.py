"""Compare dataset statistics against the published reference values.

Reads every canonical split under --data (default $LTK_DATA_DIR) and prints
measured value, reference and difference for each headline statistic.

    python3 scripts/reproduce_stats.py --data /path/to/canonical
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

from layouttree.ingest import default_data_dir, load_all
from layouttree.model import Category, RelationKind
from layouttree.statistics import (
    DIRECTIONS,
    category_stats,
    category_transitions,
    combine,
    relation_heatmap,
    tree_stats,
)

RO, PC = RelationKind.READING_ORDER, RelationKind.PARENT_CHILD
BOTTOM = DIRECTIONS.index("Bottom")


@dataclass
class StatsConfig:
    data: Path | None = None
    include_root: bool = False


def measure(samples, include_root: bool = False) -> list[tuple[str, float, float]]:
    cs = category_stats(samples)
    ts = tree_stats(samples)
    ro = relation_heatmap(samples, RO, include_root)
    pc = relation_heatmap(samples, PC, include_root)
    ro_cat = category_transitions(samples, RO)
    pc_cat = category_transitions(samples, PC)
    return [
        ("posters", len(samples), 7851),
        ("boxes, all categories", cs.all_total, 192625),
        ("boxes per poster, mean", cs.all_mean, 24.54),
        ("Title boxes", cs.totals[Category.TITLE], 7844),
        ("Caption boxes", cs.totals[Category.CAPTION], 14974),
        ("tree depth, mean", ts.depth.mean, 3.37),
        ("tree width, mean", ts.width.mean, 15.24),
        ("children per node, mean", ts.children.mean, 0.96),
        ("reading order Bottom (0, 1] per 1000 pages", ro.normalized[BOTTOM, 0], 7796.71),
        ("parent-child Bottom (0, 1] per 1000 pages", pc.normalized[BOTTOM, 0], 3367.21),
        ("reading order Root -> Title per 1000 pages", ro_cat.cell(Category.ROOT, Category.TITLE), 998.85),
        ("parent-child Figure -> Caption per 1000 pages", pc_cat.cell(Category.FIGURE, Category.CAPTION), 1577.76),
    ]


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--data", type=Path, default=None)
    p.add_argument("--include-root", action="store_true")
    cfg = StatsConfig(**vars(p.parse_args(argv)))
    root = cfg.data or default_data_dir()
    if root is None:
        p.error("pass --data or set LTK_DATA_DIR")
    samples = combine(load_all(root))
    print(f"{'statistic':<48}{'measured':>14}{'reference':>14}{'diff':>12}")
    for name, got, ref in measure(samples, cfg.include_root):
        print(f"{name:<48}{got:>14.2f}{ref:>14.2f}{got - ref:>12.2f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
