import sys
from pathlib import Path

import pytest
from hypothesis import settings, strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from layouttree.model import build_tree  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

_ACCEPTANCE: dict[str, str] = {}


@st.composite
def dfs_trees(draw, min_n: int = 0, max_n: int = 8):
    """Valid trees: random order, each node hangs off the current rightmost path."""
    n = draw(st.integers(min_n, max_n))
    perm = draw(st.permutations(range(1, n + 1)))
    order = [0] + list(perm)
    parent, path = {}, [0]
    for node in perm:
        k = draw(st.integers(0, len(path) - 1))
        parent[node] = path[k]
        del path[k + 1:]
        path.append(node)
    return build_tree(order, parent, n)


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    label = marker.args[0]
    if call.when == "setup" and call.excinfo is not None and call.excinfo.errisinstance(pytest.skip.Exception):
        _ACCEPTANCE[label] = "SKIP"
    elif call.when == "call":
        if call.excinfo is None:
            _ACCEPTANCE.setdefault(label, "PASS")
        elif call.excinfo.errisinstance(pytest.skip.Exception):
            _ACCEPTANCE[label] = "SKIP"
        else:
            _ACCEPTANCE[label] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[0].rstrip("."))):
        terminalreporter.write_line(f"{_ACCEPTANCE[label]}  {label}")
