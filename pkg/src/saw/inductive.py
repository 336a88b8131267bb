"""Largest subset of the local-safety set closed under K-step reachability."""

from __future__ import annotations

from collections import deque

import numpy as np

from .dp import KStepGraph
from .grid import GridSet, unpack_bits


def reverse_adjacency(gk: KStepGraph) -> tuple[np.ndarray, np.ndarray]:
    """CSR form ``(indptr, sources)`` of the reversed K-step edges."""
    n = gk.size
    src_parts, dst_parts = [], []
    rows = np.flatnonzero(gk.succ.any(axis=1))
    for start in range(0, rows.size, 512):
        block = rows[start:start + 512]
        bits = unpack_bits(gk.succ[block], n)
        r, c = np.nonzero(bits)
        src_parts.append(block[r])
        dst_parts.append(c)
    src = np.concatenate(src_parts) if src_parts else np.empty(0, dtype=np.int64)
    dst = np.concatenate(dst_parts) if dst_parts else np.empty(0, dtype=np.int64)
    order = np.argsort(dst, kind="stable")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, dst + 1, 1)
    return np.cumsum(indptr), src[order]


def inductiveness(gk: KStepGraph, gamma_s: GridSet) -> GridSet:
    """Remove every cell that can reach a cell outside ``gamma_s``.

    Breadth-first search over reversed K-step edges, seeded with all cells
    outside the local-safety set.
    """
    n = gk.size
    indptr, sources = reverse_adjacency(gk)
    bad = ~gamma_s.to_mask()
    queue = deque(np.flatnonzero(bad).tolist())
    while queue:
        w = queue.popleft()
        for v in sources[indptr[w]:indptr[w + 1]]:
            if not bad[v]:
                bad[v] = True
                queue.append(int(v))
    return GridSet.from_mask(~bad)
