"""Uniform partition of the safe box into ``p**d`` closed cells.

Cells are numbered row-major: the multi-index ``(i_1, ..., i_d)`` maps to
``sum(i_j * p**(d - j))``. Adjacent cells share the exact same floating-point
face coordinate, so the partition has no gaps.
"""

from __future__ import annotations

from functools import cached_property
from typing import Iterable

import numpy as np

from .interval import Box


def _n_words(size: int) -> int:
    return (size + 63) // 64


def pack_bits(mask: np.ndarray) -> np.ndarray:
    """Pack a boolean array along its last axis into little-endian uint64 words."""
    mask = np.asarray(mask, dtype=bool)
    size = mask.shape[-1]
    pad = _n_words(size) * 64 - size
    if pad:
        mask = np.concatenate([mask, np.zeros(mask.shape[:-1] + (pad,), dtype=bool)], axis=-1)
    packed = np.packbits(mask, axis=-1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8")


def unpack_bits(words: np.ndarray, size: int) -> np.ndarray:
    raw = np.ascontiguousarray(words).view(np.uint8)
    return np.unpackbits(raw, axis=-1, bitorder="little")[..., :size].astype(bool)


class GridSet:
    """Dense bit-vector over cell ids ``0 .. size-1``."""

    __slots__ = ("size", "words", "_count")

    def __init__(self, size: int, words: np.ndarray | None = None):
        self.size = size
        if words is None:
            words = np.zeros(_n_words(size), dtype=np.uint64)
        self.words = words
        self._count: int | None = None

    @classmethod
    def from_indices(cls, size: int, indices: Iterable[int]) -> GridSet:
        mask = np.zeros(size, dtype=bool)
        idx = np.fromiter(indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= size):
            raise IndexError("cell id out of range")
        mask[idx] = True
        return cls.from_mask(mask)

    @classmethod
    def from_mask(cls, mask) -> GridSet:
        mask = np.asarray(mask, dtype=bool)
        return cls(mask.size, pack_bits(mask))

    @classmethod
    def full(cls, size: int) -> GridSet:
        return cls.from_mask(np.ones(size, dtype=bool))

    def to_mask(self) -> np.ndarray:
        return unpack_bits(self.words, self.size)

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.to_mask())

    def __len__(self) -> int:
        if self._count is None:
            self._count = int(np.bitwise_count(self.words).sum())
        return self._count

    def __bool__(self) -> bool:
        return bool(self.words.any())

    def __contains__(self, i) -> bool:
        i = int(i)
        if not 0 <= i < self.size:
            return False
        return bool((int(self.words[i >> 6]) >> (i & 63)) & 1)

    def __iter__(self):
        return iter(self.indices().tolist())

    def _check(self, other: GridSet):
        if other.size != self.size:
            raise ValueError("grid sets over different universes")

    def __or__(self, other: GridSet) -> GridSet:
        self._check(other)
        return GridSet(self.size, self.words | other.words)

    def __and__(self, other: GridSet) -> GridSet:
        self._check(other)
        return GridSet(self.size, self.words & other.words)

    def __sub__(self, other: GridSet) -> GridSet:
        self._check(other)
        return GridSet(self.size, self.words & ~other.words)

    def complement(self) -> GridSet:
        return GridSet.full(self.size) - self

    def issubset(self, other: GridSet) -> bool:
        self._check(other)
        return not bool((self.words & ~other.words).any())

    __le__ = issubset

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridSet):
            return NotImplemented
        return self.size == other.size and bool(np.array_equal(self.words, other.words))

    def __hash__(self):
        return hash((self.size, self.words.tobytes()))

    def __repr__(self) -> str:
        ids = self.indices()
        shown = ", ".join(map(str, ids[:12]))
        more = ", ..." if ids.size > 12 else ""
        return f"GridSet(size={self.size}, {{{shown}{more}}})"


MARGIN = 1e-9


class Grid:
    """Index arithmetic for a box split into ``p`` equal parts per dimension.

    ``margin`` (relative to the cell width) is the contact tolerance used when
    covering end boxes during graph building: overlap thinner than the margin
    is treated as grazing and ignored. ``margin=0`` gives the strict cover.
    """

    def __init__(self, safe: Box, p: int, margin: float = MARGIN):
        self.safe = safe
        self.margin = margin
        self.p = p
        self.dim = safe.dim
        self.size = p ** self.dim
        lo, hi = safe.lo_array, safe.hi_array
        self.widths = (hi - lo) / p
        edges = lo[:, None] + np.arange(p + 1)[None, :] * self.widths[:, None]
        edges[:, -1] = hi
        self.edges = edges  # shape (d, p + 1)
        self.strides = p ** np.arange(self.dim - 1, -1, -1)

    @classmethod
    def of(cls, model) -> Grid:
        return cls(model.safe, model.grid_count)

    def flat_index(self, multi) -> int:
        multi = np.asarray(multi)
        if np.any(multi < 0) or np.any(multi >= self.p):
            raise IndexError("multi-index out of range")
        return int(np.dot(multi, self.strides))

    def multi_index(self, flat):
        flat = np.asarray(flat)
        return (flat[..., None] // self.strides) % self.p

    def cell_box(self, flat: int) -> Box:
        if not 0 <= flat < self.size:
            raise IndexError("cell id out of range")
        idx = self.multi_index(flat)
        dims = np.arange(self.dim)
        return Box(tuple(self.edges[dims, idx].tolist()), tuple(self.edges[dims, idx + 1].tolist()))

    @cached_property
    def cell_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """``(lo, hi)`` arrays of shape ``(size, d)`` for every cell."""
        idx = self.multi_index(np.arange(self.size))
        dims = np.arange(self.dim)[None, :]
        return self.edges[dims, idx], self.edges[dims, idx + 1]

    def cover_ranges(self, lo, hi):
        """Smallest per-dimension index ranges of cells covering boxes.

        Unlike :meth:`index_ranges`, a box that only touches a neighbour, or
        overlaps it by less than ``margin * width``, does not pull it in.
        With ``margin=0`` the result still covers every box exactly.
        """
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        first = np.empty(lo.shape, dtype=np.int64)
        last = np.empty(hi.shape, dtype=np.int64)
        for j in range(self.dim):
            e = self.edges[j]
            pad = self.margin * self.widths[j]
            first[..., j] = np.searchsorted(e[:-1] - pad, lo[..., j], side="right") - 1
            last[..., j] = np.searchsorted(e[1:] + pad, hi[..., j], side="left")
        np.clip(first, 0, self.p - 1, out=first)
        np.clip(last, 0, self.p - 1, out=last)
        safe_lo, safe_hi = self.safe.lo_array, self.safe.hi_array
        outside = np.any((lo < safe_lo) | (hi > safe_hi), axis=-1)
        return first, last, outside

    def index_ranges(self, lo, hi):
        """Inclusive per-dimension index ranges of cells meeting boxes.

        ``lo``/``hi`` have shape ``(..., d)``. Returns ``(first, last,
        outside)`` where an empty range has ``first > last`` and ``outside``
        flags boxes poking out of the safe box.
        """
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        first = np.empty(lo.shape, dtype=np.int64)
        last = np.empty(hi.shape, dtype=np.int64)
        for j in range(self.dim):
            e = self.edges[j]
            # closed cells: cell i meets [a, b] iff e[i] <= b and e[i+1] >= a
            first[..., j] = np.searchsorted(e[1:], lo[..., j], side="left")
            last[..., j] = np.searchsorted(e[:-1], hi[..., j], side="right") - 1
        safe_lo, safe_hi = self.safe.lo_array, self.safe.hi_array
        outside = np.any((lo < safe_lo) | (hi > safe_hi), axis=-1)
        return first, last, outside

    def ids_in_ranges(self, first, last) -> np.ndarray:
        if np.any(first > last):
            return np.empty(0, dtype=np.int64)
        axes = [np.arange(a, b + 1) for a, b in zip(first, last)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return sum(m.ravel() * s for m, s in zip(mesh, self.strides)).astype(np.int64)

    def overlapping(self, box: Box) -> tuple[GridSet, bool]:
        first, last, outside = self.index_ranges(box.lo_array, box.hi_array)
        ids = self.ids_in_ranges(first, last)
        return GridSet.from_indices(self.size, ids), bool(outside)

    def area(self, s: GridSet) -> float:
        return len(s) * float(np.prod(self.widths))


def grid_box(model, cell: int) -> Box:
    return Grid.of(model).cell_box(cell)


def grids_overlapping(model, box: Box) -> tuple[GridSet, bool]:
    """Cells whose closed box meets ``box``, plus an outside-the-safe-box flag."""
    return Grid.of(model).overlapping(box)


def area(model, s: GridSet) -> float:
    return Grid.of(model).area(s)
