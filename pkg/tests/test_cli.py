import csv
import json

import pytest

from layouttree.cli import main
from layouttree.ingest import DatasetSplit, load_split, write_split
from layouttree.model import BBox, Category, Poster, build_tree
from layouttree.synthetic import column_poster


@pytest.fixture
def data(tmp_path):
    d = tmp_path / "data"
    write_split(DatasetSplit("test", [column_poster(s, poster_id=f"s{s:03d}") for s in range(12)]), d)
    return d


def _rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_validate_ok(data, capsys):
    assert main(["validate", "--data", str(data)]) == 0
    assert "12 posters OK" in capsys.readouterr().out


def test_validate_cycle(tmp_path, capsys):
    good = {"poster_id": "a", "page": [10, 10], "order": [0, 1], "parent": {"1": 0},
            "boxes": [{"id": 1, "category": "Text", "cx": 5, "cy": 5, "w": 2, "h": 2}]}
    bad = dict(good, poster_id="b", order=[0, 1, 2], parent={"1": 2, "2": 1},
               boxes=good["boxes"] + [{"id": 2, "category": "Text", "cx": 5, "cy": 8, "w": 2, "h": 2}])
    (tmp_path / "test.jsonl").write_text(json.dumps(good) + "\n" + json.dumps(bad) + "\n")
    assert main(["validate", "--data", str(tmp_path)]) == 1
    lines = [json.loads(x) for x in capsys.readouterr().out.splitlines()]
    assert len(lines) == 1 and "cycle" in lines[0]["message"]


def test_stats_fixture(tmp_path):
    boxes = (BBox(1, Category.TITLE, 50, 10, 80, 10), BBox(2, Category.SECTION, 30, 30, 40, 10),
             BBox(3, Category.TEXT, 30, 50, 40, 20))
    poster = Poster("f", 100, 100, boxes)
    tree = build_tree(range(4), {1: 0, 2: 0, 3: 2})
    write_split(DatasetSplit("test", [(poster, tree)]), tmp_path / "d")
    out = tmp_path / "out"
    assert main(["stats", "--data", str(tmp_path / "d"), "--out", str(out)]) == 0
    cats = {r["category"]: r for r in _rows(out / "categories.csv")}
    assert cats["All"]["total"] == "3" and cats["Text"]["total"] == "1" and cats["Figure"]["total"] == "0"
    stats = {r["statistic"]: r for r in _rows(out / "tree_stats.csv")}
    assert stats["depth"]["mean"] == "3.0000" and stats["width"]["mean"] == "2.0000"
    # Title -> Section: dx=-20, dy=20, |dx|>=|dy| so 20/80; Section -> Text: down, 20/20
    counts = {r["direction"]: r for r in _rows(out / "ro_direction_distance_counts.csv")}
    assert counts["Bottom-Left"]["(0, 1]"] == "1" and counts["Bottom"]["(0, 1]"] == "1"
    pc = {r["parent\\child"]: r for r in _rows(out / "pc_category_transitions.csv")}
    assert pc["Section"]["Text"] == "1000.00" and pc["Root"]["Title"] == "1000.00"
    assert (out / "ro_heatmap.svg").read_text().startswith("<svg")
    assert "manifest.json" in {p.name for p in out.iterdir()}


def test_stats_empty_dir(tmp_path, capsys):
    (tmp_path / "d").mkdir()
    assert main(["stats", "--data", str(tmp_path / "d"), "--split", "all", "--out", str(tmp_path / "o")]) == 1
    assert "EmptySplit" in capsys.readouterr().err


def test_decode_oracle_then_eval(data, tmp_path):
    pred = tmp_path / "pred"
    assert main(["decode", "--data", str(data), "--scorer", "oracle", "--out", str(pred)]) == 0
    gt = {p.poster_id: t for p, t in load_split(data)}
    got = {p.poster_id: t for p, t in load_split(pred / "predictions.jsonl", "predictions")}
    assert got == gt
    ev = tmp_path / "eval"
    assert main(["eval", "--gt", str(data), "--pred", str(pred / "predictions.jsonl"), "--out", str(ev)]) == 0
    summary = json.loads((ev / "summary.json").read_text())
    assert (summary["steds"], summary["reds"], summary["ted"]) == (100.0, 100.0, 0.0)


def test_width_one_matches_greedy(data, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    common = ["--data", str(data), "--scorer", "noisy", "--normalize", "raw", "--seed", "3"]
    assert main(["decode", *common, "--beam-width", "1", "--out", str(a)]) == 0
    assert main(["decode", *common, "--greedy", "--out", str(b)]) == 0
    assert (a / "predictions.jsonl").read_bytes() == (b / "predictions.jsonl").read_bytes()


def test_decode_from_score_files(data, tmp_path):
    from layouttree.scoring import oracle_scores, save_scores

    scores = tmp_path / "scores"
    scores.mkdir()
    samples = load_split(data).posters
    for p, t in samples:
        save_scores(oracle_scores(t), scores / f"{p.poster_id}.scores")
    (scores / f"{samples[0][0].poster_id}.scores").unlink()
    out = tmp_path / "out"
    assert main(["decode", "--data", str(data), "--scores", str(scores), "--out", str(out)]) == 0
    assert len(load_split(out / "predictions.jsonl", "predictions")) == len(samples) - 1
    assert len(json.loads((out / "diagnostics.json").read_text())) == 1
    assert main(["decode", "--data", str(data), "--scores", str(scores), "--out", str(out), "--strict"]) == 1


def test_eval_breakdown_for_one_broken_relation(tmp_path):
    boxes = (BBox(1, Category.SECTION, 50, 10, 80, 10), BBox(2, Category.TEXT, 50, 30, 80, 20),
             BBox(3, Category.TEXT, 50, 60, 80, 20))
    poster = Poster("f", 100, 100, boxes)
    gt = build_tree(range(4), {1: 0, 2: 1, 3: 1})
    pred = build_tree(range(4), {1: 0, 2: 1, 3: 2})
    write_split(DatasetSplit("test", [(poster, gt)]), tmp_path / "gt")
    write_split(DatasetSplit("predictions", [(poster, pred)]), tmp_path / "pred.jsonl")
    out = tmp_path / "ev"
    assert main(["eval", "--gt", str(tmp_path / "gt"), "--pred", str(tmp_path / "pred.jsonl"), "--out", str(out)]) == 0
    pc = {r["bucket"]: r for r in _rows(out / "pc_category.csv")}
    assert (pc["Text"]["correct"], pc["Text"]["total"], pc["Text"]["errors"]) == ("1", "2", "1")
    ro = {r["bucket"]: r for r in _rows(out / "ro_category.csv")}
    assert ro["Text"]["errors"] == "0"
    row = _rows(out / "per_poster.csv")[0]
    assert row["ted"] == "2" and float(row["steds"]) == 50.0


def test_eval_id_mismatch(data, tmp_path):
    other = tmp_path / "other.jsonl"
    write_split(DatasetSplit("predictions", [column_poster(0, poster_id="zzz")]), other)
    assert main(["eval", "--gt", str(data), "--pred", str(other), "--out", str(tmp_path / "e")]) == 2


def test_report(data, tmp_path):
    pred = tmp_path / "pred"
    main(["decode", "--data", str(data), "--scorer", "noisy", "--seed", "1", "--out", str(pred)])
    out = tmp_path / "rep"
    assert main(["report", "--gt", str(data), "--pred", str(pred / "predictions.jsonl"), "--out", str(out)]) == 0
    text = (out / "report.md").read_text()
    assert "STEDS" in text and "ParentChild accuracy by direction" in text
    assert sum(int(r["posters"]) for r in _rows(out / "reds_histogram.csv")) == 12


def test_sweep_perfect_at_zero_noise(data, tmp_path):
    out = tmp_path / "sw"
    assert main(["sweep", "--data", str(data), "--noise-sd", "0", "--widths", "1", "--out", str(out)]) == 0
    (row,) = _rows(out / "sweep.csv")
    assert float(row["steds"]) == 100.0 and float(row["reds"]) == 100.0 and float(row["ted"]) == 0.0


def test_sweep_order_score_non_decreasing_raw(data, tmp_path):
    out = tmp_path / "sw"
    assert main(["sweep", "--data", str(data), "--widths", "1,5,20", "--normalize", "raw", "--out", str(out)]) == 0
    rows = _rows(out / "sweep.csv")
    scores = [float(r["mean_order_score"]) for r in rows]
    assert scores == sorted(scores)


def test_parallel_decode_matches_serial(data, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    common = ["decode", "--data", str(data), "--scorer", "noisy", "--seed", "5"]
    assert main([*common, "--out", str(a)]) == 0
    assert main([*common, "--jobs", "2", "--out", str(b)]) == 0
    assert (a / "predictions.jsonl").read_bytes() == (b / "predictions.jsonl").read_bytes()
