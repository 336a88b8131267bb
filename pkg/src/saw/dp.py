"""Local safety under (m, K) deadline-miss constraints.

``DP(v, n, k)`` is the set of cells reachable at step ``K`` from cell ``v``
at step ``k`` having already spent ``n`` misses::

    DP(v, n, K) = {v}
    DP(v, n, k) = U_{e : n + e <= m} U_{v' in succ(v, e)} DP(v', n + e, k + 1)

and it is empty as soon as some admissible event has no successors or some
contributing ``DP(v', ., .)`` is empty. Misses are adversarial: a cell is
locally safe only if every admissible pattern keeps it safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .graph import OneStepGraph
from .grid import GridSet, unpack_bits


@dataclass
class KStepGraph:
    size: int
    succ: np.ndarray  # (size, words); zero rows outside the local-safety set

    def successors(self, v: int) -> GridSet:
        return GridSet(self.size, self.succ[v].copy())

    def successor_ids(self, v: int) -> np.ndarray:
        return np.flatnonzero(unpack_bits(self.succ[v], self.size))

    @property
    def edge_count(self) -> int:
        return int(np.bitwise_count(self.succ).sum())

    @property
    def start_region(self) -> int:
        return int(self.succ.any(axis=1).sum())

    @property
    def end_region(self) -> int:
        return len(GridSet(self.size, np.bitwise_or.reduce(self.succ, axis=0)))


def local_safety(g1: OneStepGraph, m: int, K: int,
                 rolling: bool = True) -> tuple[GridSet, KStepGraph]:
    """Local-safety set and K-step graph; ``rolling=False`` keeps every layer."""
    if not 0 <= m <= K:
        raise ValueError("need 0 <= m <= K")
    n = g1.size
    words = g1.succ.shape[-1]
    succ_ids = [[g1.successor_ids(v, e) for e in (0, 1)] for v in range(n)]

    layer = np.zeros((n, m + 1, words), dtype=np.uint64)
    ids = np.arange(n)
    layer[ids, :, ids >> 6] = (np.uint64(1) << (ids & 63).astype(np.uint64))[:, None]
    layers = [layer]
    for _ in range(K):
        nxt = layers[-1]
        filled = nxt.any(axis=2)  # (n, m + 1)
        cur = np.zeros_like(nxt)
        for v in range(n):
            for used in range(m + 1):
                acc = np.zeros(words, dtype=np.uint64)
                safe = True
                for e in (0, 1):
                    if used + e > m:
                        continue
                    targets = succ_ids[v][e]
                    if targets.size == 0 or not filled[targets, used + e].all():
                        safe = False
                        break
                    acc |= np.bitwise_or.reduce(nxt[targets, used + e], axis=0)
                if safe:
                    cur[v, used] = acc
        if rolling:
            layers = [cur]
        else:
            layers.append(cur)
    top = layers[-1][:, 0, :]
    gamma_s = GridSet.from_mask(top.any(axis=1))
    return gamma_s, KStepGraph(n, top.copy())


def bf_local_safety(g1: OneStepGraph, m: int, K: int) -> tuple[GridSet, list[GridSet]]:
    """Brute-force counterpart of :func:`local_safety` for tiny instances.

    Enumerates every miss pattern of length ``K`` with at most ``m`` misses
    and pushes the frontier of each start cell through the graph.
    """
    n = g1.size
    if n > 64 or K > 6:
        raise ValueError("brute force limited to 64 cells and K <= 6")
    if not 0 <= m <= K:
        raise ValueError("need 0 <= m <= K")
    patterns = [p for p in product((0, 1), repeat=K) if sum(p) <= m]
    succ = {(v, e): (None if g1.unsafe[v, e] else set(g1.successor_ids(v, e).tolist()))
            for v in range(n) for e in (0, 1)}
    safe_ids, reach = [], []
    for v in range(n):
        final: set[int] = set()
        ok = True
        for pat in patterns:
            frontier = {v}
            for e in pat:
                nxt: set[int] = set()
                for w in frontier:
                    if succ[w, e] is None:
                        ok = False
                        break
                    nxt |= succ[w, e]
                if not ok:
                    break
                frontier = nxt
            if not ok:
                break
            final |= frontier
        if ok:
            safe_ids.append(v)
            reach.append(GridSet.from_indices(n, final))
        else:
            reach.append(GridSet(n))
    return GridSet.from_indices(n, safe_ids), reach
