"""Write a synthetic canonical dataset of column-layout posters.

    python3 scripts/make_synthetic_split.py --out data/synthetic --train 200 --valid 20 --test 20
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, fields
from pathlib import Path

from layouttree.ingest import DatasetSplit, write_split
from layouttree.synthetic import column_poster


@dataclass
class SyntheticConfig:
    out: Path = Path("data/synthetic")
    train: int = 200
    valid: int = 20
    test: int = 20
    seed: int = 0


def build(cfg: SyntheticConfig) -> list[Path]:
    written = []
    offset = cfg.seed * 1_000_003
    for name in ("train", "valid", "test"):
        count = getattr(cfg, name)
        posters = [column_poster(offset + k, poster_id=f"{name}-{k:05d}") for k in range(count)]
        offset += count
        written.append(write_split(DatasetSplit(name, posters), cfg.out))
    return written


def parse(argv=None) -> SyntheticConfig:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for f in fields(SyntheticConfig):
        p.add_argument(f"--{f.name}", type=type(f.default), default=f.default)
    return SyntheticConfig(**vars(p.parse_args(argv)))


if __name__ == "__main__":
    for path in build(parse()):
        print(path)
