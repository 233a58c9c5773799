import json
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from conftest import dfs_trees
from layouttree.ingest import (
    AdapterConfig,
    DatasetSplit,
    MissingField,
    ParseError,
    ValidationError,
    adapt_external,
    adapt_file,
    corner_to_center,
    from_record,
    load_split,
    to_record,
    write_split,
)
from layouttree.model import LayoutError
from layouttree.statistics import EmptySplit
from layouttree.synthetic import column_poster, random_poster, random_tree

FIXTURES = Path(__file__).parent / "fixtures"


def _chain_record(pid="p1"):
    return {
        "poster_id": pid, "page": [100, 100],
        "boxes": [{"id": 1, "category": "Title", "cx": 50, "cy": 10, "w": 80, "h": 10},
                  {"id": 2, "category": "Text", "cx": 50, "cy": 50, "w": 80, "h": 40}],
        "order": [0, 1, 2], "parent": {"1": 0, "2": 1},
    }


def _write_lines(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return path


def test_load_single_chain(tmp_path):
    _write_lines(tmp_path / "test.jsonl", [_chain_record()])
    split = load_split(tmp_path, "test")
    assert len(split) == 1
    poster, tree = split.posters[0]
    assert tree.children == ((1,), (2,), ())


def test_cycle_is_reported(tmp_path):
    rec = _chain_record()
    rec["parent"] = {"1": 2, "2": 1}
    _write_lines(tmp_path / "test.jsonl", [_chain_record("ok"), rec])
    with pytest.raises(ValidationError) as info:
        load_split(tmp_path)
    assert len(info.value.errors) == 1
    assert "cycle" in info.value.errors[0][1] and "1 -> 2" in info.value.errors[0][1]


def test_errors_collected_unless_strict(tmp_path):
    bad1, bad2 = _chain_record("a"), _chain_record("b")
    bad1["order"] = [0, 2, 1, 1]
    bad2["boxes"][0]["category"] = "Logo"
    _write_lines(tmp_path / "test.jsonl", [bad1, bad2])
    with pytest.raises(ValidationError) as info:
        load_split(tmp_path)
    assert len(info.value.errors) == 2
    with pytest.raises(ValidationError) as info:
        load_split(tmp_path, strict=True)
    assert len(info.value.errors) == 1


def test_parse_errors(tmp_path):
    f = tmp_path / "test.jsonl"
    f.write_text('{"poster_id": "x"\n')
    with pytest.raises(ParseError) as info:
        load_split(f)
    assert info.value.locator == "test.jsonl:1"
    rec = _chain_record()
    del rec["page"]
    _write_lines(f, [rec])
    with pytest.raises(ParseError):
        load_split(f)


def test_duplicate_ids(tmp_path):
    _write_lines(tmp_path / "test.jsonl", [_chain_record(), _chain_record()])
    with pytest.raises(ValidationError):
        load_split(tmp_path)


def test_empty_split(tmp_path):
    (tmp_path / "test.jsonl").write_text("")
    with pytest.raises(EmptySplit):
        load_split(tmp_path)
    assert len(load_split(tmp_path, allow_empty=True)) == 0
    out = write_split(DatasetSplit("empty", []), tmp_path)
    assert out.read_text() == ""


def test_trivial_posters_are_flagged(tmp_path):
    rec = {"poster_id": "lone", "page": [10, 10], "boxes": [], "order": [0], "parent": {}}
    _write_lines(tmp_path / "test.jsonl", [rec])
    split = load_split(tmp_path)
    assert any("trivial" in note for _, note in split.diagnostics)


def test_single_record_round_trip(tmp_path):
    rec = _chain_record()
    _write_lines(tmp_path / "test.jsonl", [rec])
    split = load_split(tmp_path)
    write_split(split, tmp_path / "copy")
    again = load_split(tmp_path / "copy", "test")
    assert again.posters == split.posters
    assert to_record(*again.posters[0]) == json.loads(json.dumps(to_record(*split.posters[0])))


def test_round_trip_random_posters(tmp_path):
    samples = []
    for k in range(100):
        t = random_tree(k % 20, k)
        samples.append((random_poster(t, k, poster_id=f"r{k}"), t))
    samples = [from_record(to_record(p, t))[:2] for p, t in samples]  # round to storage precision
    write_split(DatasetSplit("train", samples), tmp_path)
    assert load_split(tmp_path, "train").posters == samples


@given(dfs_trees(max_n=12), st.integers(0, 2**31))
def test_record_round_trip_property(tree, seed):
    poster, tree2, _ = from_record(to_record(random_poster(tree, seed), tree))
    assert tree2 == tree
    assert to_record(*from_record(to_record(poster, tree2))[:2]) == to_record(poster, tree2)


def test_synthetic_posters_validate():
    for seed in range(20):
        poster, tree = column_poster(seed)
        assert poster.check() == []
        assert from_record(to_record(poster, tree))[1] == tree


def test_corner_conversion():
    assert corner_to_center(0, 0, 10, 4) == (5, 2, 10, 4)


def test_adapter_fixture():
    raw = json.loads((FIXTURES / "external_sample.json").read_text())
    expected = json.loads((FIXTURES / "external_sample.expected.json").read_text())
    assert adapt_external(raw) == expected
    poster, tree, _ = from_record(adapt_external(raw))
    assert tree.parent == {1: 0, 2: 0, 3: 2}


def test_adapter_category_normalization_and_rank():
    raw = {
        "doc": {"name": "x"}, "w": 10, "h": 10,
        "items": [
            {"k": 5, "box": [5, 5, 2, 2], "label": "Author Info", "up": -1, "rank": 2},
            {"k": 6, "box": [5, 2, 2, 2], "label": "title", "up": -1, "rank": 1},
        ],
    }
    cfg = {"poster_id": "doc.name", "page_size": ["w", "h"], "boxes": "items", "box_id": "k", "bbox": "box",
           "geometry": "center", "category": "label", "box_parent": "up", "order": None, "box_rank": "rank"}
    rec = adapt_external(raw, cfg)
    assert rec["boxes"][0]["category"] == "AuthorInfo"
    assert rec["order"] == [0, 2, 1]
    assert from_record(rec)[1].children[0] == (2, 1)


def test_adapter_errors():
    raw = json.loads((FIXTURES / "external_sample.json").read_text())
    broken = dict(raw, annotations=[dict(raw["annotations"][0], parent="zz")])
    with pytest.raises(LayoutError):
        adapt_external(broken)
    with pytest.raises(MissingField):
        adapt_external({"id": "q"})
    with pytest.raises(TypeError):
        AdapterConfig.from_mapping({"nope": 1})


def test_adapt_file(tmp_path):
    raw = json.loads((FIXTURES / "external_sample.json").read_text())
    src = tmp_path / "export.json"
    src.write_text(json.dumps([raw, dict(raw, id="ext-002")]))
    out = adapt_file(src, tmp_path / "canon", split="valid")
    assert len(out) == 2
    assert [p.poster_id for p, _ in load_split(tmp_path / "canon", "valid")] == ["ext-001", "ext-002"]

