"""Greedy and beam-search tree decoding from score matrices, plus the loss.

Decoding runs in two stages.  Stage 1 picks the reading order, each step
choosing an unvisited successor of the last node.  Stage 2 walks that order
and picks each node's parent from the rightmost path of the tree built so
far, then truncates the path after the chosen parent and pushes the node.

Ties break toward the lower node id in stage 1 and toward the deepest path
element in stage 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .model import ROOT, LayoutTree, build_tree
from .scoring import DimensionMismatch, ScorePair

Normalize = Literal["raw", "logsoftmax"]


class ConfigError(ValueError):
    pass


class InvalidScores(ValueError):
    pass


@dataclass(frozen=True)
class DecodeConfig:
    beam_width: int = 20
    normalize: Normalize = "logsoftmax"
    tie_break: str = "low-id/deepest"
    monotone: bool = True
    trace: bool = False

    def __post_init__(self):
        if int(self.beam_width) != self.beam_width or self.beam_width < 1:
            raise ConfigError(f"beam width must be an integer >= 1, got {self.beam_width}")
        if self.normalize not in ("raw", "logsoftmax"):
            raise ConfigError(f"unknown normalization {self.normalize!r}")
        if self.tie_break != "low-id/deepest":
            raise ConfigError(f"unknown tie-break policy {self.tie_break!r}")


@dataclass
class DecodedResult:
    tree: LayoutTree
    order_score: float
    parent_score: float
    beam_trace: list[dict] | None = field(default=None, repr=False)
    ties: int = 0  # steps whose chosen successor or parent shared the best local score


def _check(sp: ScorePair) -> None:
    if not (np.isfinite(sp.S).all() and np.isfinite(sp.P).all()):
        raise InvalidScores("score matrices must be finite")


def greedy_order(S: np.ndarray) -> list[int]:
    size = S.shape[0]
    visited = np.zeros(size, dtype=bool)
    visited[ROOT] = True
    order = [ROOT]
    for _ in range(size - 1):
        row = np.where(visited, -np.inf, S[order[-1]])
        k = int(np.argmax(row))  # first maximum = lowest id
        visited[k] = True
        order.append(k)
    return order


def greedy_parents(P: np.ndarray, order: list[int]) -> dict[int, int]:
    parent = {}
    path = [ROOT]
    for node in order[1:]:
        row = P[node]
        best = len(path) - 1
        for k in range(len(path) - 2, -1, -1):
            if row[path[k]] > row[path[best]]:
                best = k
        parent[node] = path[best]
        del path[best + 1:]
        path.append(node)
    return parent


def decode_greedy(sp: ScorePair) -> DecodedResult:
    _check(sp)
    order = greedy_order(sp.S)
    parent = greedy_parents(sp.P, order)
    tree = build_tree(order, parent, sp.n)
    return DecodedResult(tree, order_score(sp, order), parent_score(sp, parent), ties=tie_steps(sp, tree))


def tie_steps(sp: ScorePair, tree: LayoutTree) -> int:
    """Decoding steps where another feasible choice scored exactly as high.

    A nonzero count means the tie-break policy, not the scores, picked part
    of the tree.
    """
    ties = 0
    visited = np.zeros(tree.size, dtype=bool)
    visited[ROOT] = True
    for a, b in zip(tree.order, tree.order[1:]):
        visited[b] = True
        row = sp.S[a]
        ties += bool(np.any((row == row[b]) & ~visited))
    path = [ROOT]
    for node in tree.order[1:]:
        p = tree.parent[node]
        row = sp.P[node]
        ties += sum(row[q] == row[p] for q in path) > 1
        del path[path.index(p) + 1:]
        path.append(node)
    return int(ties)


def order_score(sp: ScorePair, order) -> float:
    return math.fsum(float(sp.S[a, b]) for a, b in zip(order, order[1:]))


def parent_score(sp: ScorePair, parent) -> float:
    return math.fsum(float(sp.P[c, p]) for c, p in parent.items())


def _log_softmax(values: np.ndarray) -> np.ndarray:
    top = values.max()
    return values - (top + np.log(np.exp(values - top).sum()))


def _local(values: np.ndarray, normalize: str) -> np.ndarray:
    return values if normalize == "raw" else _log_softmax(values)


@dataclass
class _Hyp:
    score: float
    seq: list[int]  # stage 1: reading order so far; stage 2: chosen parents
    state: object   # stage 1: visited mask; stage 2: rightmost path


def _prune(cands: list[tuple], width: int) -> list[tuple]:
    # (-total, -local, parent rank, tie key, ...) sorts best-first, deterministically
    cands.sort(key=lambda c: c[:4])
    return cands[:width]


def _beam_order_once(S, width, normalize, trace):
    size = S.shape[0]
    visited = np.zeros(size, dtype=bool)
    visited[ROOT] = True
    beam = [_Hyp(0.0, [ROOT], visited)]
    pruned = False
    for step in range(1, size):
        cands = []
        for rank, hyp in enumerate(beam):
            free = np.flatnonzero(~hyp.state)
            local = _local(S[hyp.seq[-1], free], normalize)
            for k, v in zip(free.tolist(), local.tolist()):
                cands.append((-(hyp.score + v), -v, rank, k, hyp))
        pruned = pruned or len(cands) > width
        new_beam = []
        for neg_total, _, _, k, hyp in _prune(cands, width):
            mask = hyp.state.copy()
            mask[k] = True
            new_beam.append(_Hyp(-neg_total, hyp.seq + [k], mask))
        beam = new_beam
        if trace is not None:
            trace.append({"stage": "order", "width": width, "step": step,
                          "hypotheses": [{"score": h.score, "seq": h.seq} for h in beam]})
    return beam[0].seq, beam[0].score, pruned


def _beam_parents_once(P, order, width, normalize, trace):
    beam = [_Hyp(0.0, [], [ROOT])]
    pruned = False
    for step, node in enumerate(order[1:], start=1):
        cands = []
        for rank, hyp in enumerate(beam):
            path = hyp.state
            local = _local(P[node, path], normalize).tolist()
            for depth in range(len(path) - 1, -1, -1):
                v = local[depth]
                cands.append((-(hyp.score + v), -v, rank, -depth, hyp))
        pruned = pruned or len(cands) > width
        new_beam = []
        for neg_total, _, _, neg_depth, hyp in _prune(cands, width):
            depth = -neg_depth
            new_beam.append(_Hyp(-neg_total, hyp.seq + [hyp.state[depth]], hyp.state[: depth + 1] + [node]))
        beam = new_beam
        if trace is not None:
            trace.append({"stage": "parent", "width": width, "step": step, "node": node,
                          "hypotheses": [{"score": h.score, "parents": h.seq} for h in beam]})
    return dict(zip(order[1:], beam[0].seq)), beam[0].score, pruned


def _widen(run, width, monotone, trace):
    """Run the beam at ``width``; if ``monotone``, keep the best over widths 1..width.

    A plain beam can return a worse sequence at a larger width (the wider
    beam may prune the path a narrower one kept).  Taking the best result
    across all narrower widths makes the returned score non-decreasing in
    the width.  A run that never pruned is exhaustive; once one appears the
    search stops, since wider or narrower runs cannot score higher.
    """
    if not monotone:
        result, _, _ = run(width, trace)
        return result
    # a run that never pruned is exhaustive, so no narrower width can beat it
    best, best_score, pruned = run(width, None)
    chosen = width
    for w in range(1, width if pruned else 1):
        result, score, pruned = run(w, None)
        if score > best_score:
            best, best_score, chosen = result, score, w
        if not pruned:
            break
    if trace is not None:
        run(chosen, trace)
        trace.append({"selected_width": chosen, "score": best_score})
    return best


def beam_order(S: np.ndarray, width: int, normalize: str = "raw", trace: list | None = None,
               monotone: bool = True) -> list[int]:
    return _widen(lambda w, t: _beam_order_once(S, w, normalize, t), width, monotone, trace)


def beam_parents(P: np.ndarray, order: list[int], width: int, normalize: str = "raw",
                 trace: list | None = None, monotone: bool = True) -> dict[int, int]:
    return _widen(lambda w, t: _beam_parents_once(P, order, w, normalize, t), width, monotone, trace)


def decode_beam(sp: ScorePair, cfg: DecodeConfig | None = None) -> DecodedResult:
    """Two-stage beam search: reading order first, then parents along it.

    Each stage keeps the ``cfg.beam_width`` best partial hypotheses ranked by
    cumulative score; with ``normalize="logsoftmax"`` every step's scores are
    log-softmaxed over that step's feasible candidates first.  Width 1 with
    raw scores reproduces :func:`decode_greedy` exactly.
    """
    cfg = cfg or DecodeConfig()
    _check(sp)
    trace: list | None = [] if cfg.trace else None
    order = beam_order(sp.S, cfg.beam_width, cfg.normalize, trace, cfg.monotone)
    parent = beam_parents(sp.P, order, cfg.beam_width, cfg.normalize, trace, cfg.monotone)
    tree = build_tree(order, parent, sp.n)
    return DecodedResult(tree, order_score(sp, order), parent_score(sp, parent), trace, tie_steps(sp, tree))


def decode(sp: ScorePair, cfg: DecodeConfig | None = None) -> DecodedResult:
    if cfg is None or (cfg.beam_width == 1 and cfg.normalize == "raw" and not cfg.trace):
        return decode_greedy(sp)
    return decode_beam(sp, cfg)


def _cross_entropy(row: np.ndarray, target: int) -> float:
    return float(-_log_softmax(row.astype(np.float64))[target])


def eval_loss(sp: ScorePair, gt: LayoutTree) -> tuple[float, float, float]:
    """Mean cross-entropy of the successor and parent rows against ``gt``.

    Rows scored: Root plus every node except the last in reading order (for
    successors) and every box (for parents).  Both sums divide by N.
    """
    if sp.n != gt.n:
        raise DimensionMismatch(f"scores cover {sp.n} boxes, tree has {gt.n}")
    n = gt.n
    if n == 0:
        return 0.0, 0.0, 0.0
    l_sub = math.fsum(_cross_entropy(sp.S[a], b) for a, b in zip(gt.order, gt.order[1:])) / n
    l_par = math.fsum(_cross_entropy(sp.P[c], gt.parent[c]) for c in range(1, n + 1)) / n
    return l_sub, l_par, l_sub + l_par
