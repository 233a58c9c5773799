"""Brute-force reference implementations, independent of the package code."""

from __future__ import annotations

import itertools
from functools import lru_cache


def is_tree(parent: dict[int, int], n: int) -> bool:
    """Every box reaches node 0 by following parents."""
    for start in range(1, n + 1):
        seen = set()
        node = start
        while node != 0:
            if node in seen or node not in parent:
                return False
            seen.add(node)
            node = parent[node]
    return True


def all_dfs_orders(parent: dict[int, int], n: int) -> set[tuple[int, ...]]:
    """Every preorder of the tree under every ordering of each child list."""
    kids: dict[int, list[int]] = {i: [] for i in range(n + 1)}
    for c, p in parent.items():
        kids[p].append(c)

    def orders(node):
        out = []
        for perm in itertools.permutations(kids[node]):
            for combo in itertools.product(*(orders(c) for c in perm)):
                seq = (node,)
                for part in combo:
                    seq += part
                out.append(seq)
        return out

    return set(orders(0))


def all_parent_maps(n: int):
    """Every function {1..n} -> {0..n} without fixed points (cycles included)."""
    for values in itertools.product(range(n + 1), repeat=n):
        parent = {i + 1: v for i, v in enumerate(values)}
        if all(parent[i] != i for i in parent):
            yield parent


def _annotate(children, root=0):
    pre, anc = [], {}

    def walk(node, ancestors):
        pre.append(node)
        anc[node] = frozenset(ancestors)
        for c in children[node]:
            walk(c, ancestors + [node])

    walk(root, [])
    return pre, anc


def tai_distance(children_a, labels_a, children_b, labels_b) -> int:
    """Minimum-cost edit mapping found by exhaustive backtracking.

    A mapping is a partial bijection that preserves both the ancestor
    relation and preorder; its cost is the number of unmapped nodes on
    either side plus mapped pairs with different labels.  The cheapest
    mapping's cost equals the unit-cost edit distance.
    """
    pre_a, anc_a = _annotate(children_a)
    pre_b, anc_b = _annotate(children_b)
    pos_b = {v: k for k, v in enumerate(pre_b)}
    best = [len(pre_a) + len(pre_b)]

    def go(k, mapped, used, subs):
        # every remaining node could at best be mapped for free
        lower = subs + (len(pre_a) - len(mapped)) + (len(pre_b) - len(mapped)) - 2 * min(len(pre_a) - k, len(pre_b) - len(used))
        if lower >= best[0]:
            return
        if k == len(pre_a):
            best[0] = min(best[0], subs + len(pre_a) + len(pre_b) - 2 * len(mapped))
            return
        v = pre_a[k]
        for w in pre_b:
            if w in used:
                continue
            ok = True
            for v2, w2 in mapped:
                if (v2 in anc_a[v]) != (w2 in anc_b[w]) or pos_b[w2] > pos_b[w]:
                    ok = False
                    break
            if ok:
                used.add(w)
                mapped.append((v, w))
                go(k + 1, mapped, used, subs + (labels_a(v) != labels_b(w)))
                mapped.pop()
                used.discard(w)
        go(k + 1, mapped, used, subs)

    go(0, [], set(), 0)
    return best[0]


def levenshtein(a, b) -> int:
    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))

    return d(len(a), len(b))


def best_order(S) -> tuple[float, tuple[int, ...]]:
    """Highest raw-sum reading order by enumerating every permutation."""
    n = S.shape[0] - 1
    best = None
    for perm in itertools.permutations(range(1, n + 1)):
        seq = (0,) + perm
        score = sum(float(S[a, b]) for a, b in zip(seq, seq[1:]))
        if best is None or score > best[0]:
            best = (score, seq)
    return best
