"""One-step grid reachability graph with miss/meet edge labels."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Mapping

import numpy as np

from .grid import MARGIN, Grid, GridSet, pack_bits, unpack_bits
from .model import Model
from .reach import DEFAULT_ORDER, integrator

CHUNK = 4096


class OneStepGraph:
    """Edges ``(v, e, v')`` stored as a dense successor bit matrix.

    ``succ[v, e]`` holds the packed successor set of cell ``v`` under event
    ``e`` (0 = deadline met, 1 = missed); ``unsafe[v, e]`` marks pairs whose
    flowpipe failed or left the safe box. Unsafe pairs have no successors.
    """

    def __init__(self, size: int, succ: np.ndarray, unsafe: np.ndarray):
        self.size = size
        self.succ = succ
        self.unsafe = unsafe
        self.succ[unsafe] = 0

    @classmethod
    def from_edges(cls, size: int, edges: Mapping[tuple[int, int], object]) -> OneStepGraph:
        """Build from ``{(v, e): iterable of successors | None}``; ``None``
        (or a missing key) means unsafe."""
        mask = np.zeros((size, 2, size), dtype=bool)
        unsafe = np.ones((size, 2), dtype=bool)
        for (v, e), targets in edges.items():
            if targets is None:
                continue
            targets = list(targets)
            if not targets:
                continue
            mask[v, e, targets] = True
            unsafe[v, e] = False
        return cls(size, pack_bits(mask), unsafe)

    def successors(self, v: int, e: int) -> GridSet | None:
        if self.unsafe[v, e]:
            return None
        return GridSet(self.size, self.succ[v, e].copy())

    def successor_ids(self, v: int, e: int) -> np.ndarray:
        if self.unsafe[v, e]:
            return np.empty(0, dtype=np.int64)
        return np.flatnonzero(unpack_bits(self.succ[v, e], self.size))

    @property
    def edge_count(self) -> int:
        return int(np.bitwise_count(self.succ).sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, OneStepGraph):
            return NotImplemented
        return (self.size == other.size and np.array_equal(self.unsafe, other.unsafe)
                and np.array_equal(self.succ, other.succ))


def _chunk(model: Model, order: int, coupled: bool, grid: Grid, ids: np.ndarray, events):
    ig = integrator(model, order, coupled)
    lo, hi = grid.cell_bounds
    words = (grid.size + 63) // 64
    succ = np.zeros((ids.size, 2, words), dtype=np.uint64)
    unsafe = np.ones((ids.size, 2), dtype=bool)
    for e in events:
        res = ig.flowpipe_batch(lo[ids], hi[ids], e, safe=model.safe, keep_segments=False)
        if grid.margin is None:
            first, last, outside = grid.index_ranges(res.end_lo, res.end_hi)
        else:
            first, last, outside = grid.cover_ranges(res.end_lo, res.end_hi)
        for k in np.flatnonzero(res.ok):
            if outside[k]:
                continue
            targets = grid.ids_in_ranges(first[k], last[k])
            if targets.size == 0:
                continue
            row = np.zeros(grid.size, dtype=bool)
            row[targets] = True
            succ[k, e] = pack_bits(row)
            unsafe[k, e] = False
    return succ, unsafe


def build_one_step(model: Model, order: int = DEFAULT_ORDER, threads: int = 1,
                   skip_unused_miss: bool = False, margin: float | None = MARGIN,
                   coupled: bool = True,
                   progress: Callable[[float], None] | None = None) -> OneStepGraph:
    """Flowpipe every cell under both events and record where it lands.

    A (cell, event) pair is unsafe when any flowpipe segment leaves the safe
    box or the enclosure fails; otherwise its successors are the cells that
    cover the end-of-period box. Contact thinner than ``margin`` (relative to
    the cell width) is not an edge: on invariant lines the true image touches
    a face exactly and rounding alone would otherwise add the neighbour.
    ``margin=None`` counts every closed-cell contact, however thin. Cells are processed in fixed chunks whose
    results go to fixed rows, so the graph does not depend on ``threads``.
    """
    grid = Grid(model.safe, model.grid_count, margin)
    integrator(model, order, coupled)  # compile once before fanning out
    events = (0,) if (skip_unused_miss and model.m == 0) else (0, 1)
    chunks = [np.arange(s, min(s + CHUNK, grid.size)) for s in range(0, grid.size, CHUNK)]
    words = (grid.size + 63) // 64
    succ = np.zeros((grid.size, 2, words), dtype=np.uint64)
    unsafe = np.ones((grid.size, 2), dtype=bool)

    def work(ids):
        return _chunk(model, order, coupled, grid, ids, events)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for n_done, (ids, (s, u)) in enumerate(zip(chunks, pool.map(work, chunks)), start=1):
            succ[ids] = s
            unsafe[ids] = u
            if progress is not None:
                progress(n_done / len(chunks))
    return OneStepGraph(grid.size, succ, unsafe)
