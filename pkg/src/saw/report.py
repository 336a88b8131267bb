"""Verdict for the initial box, the text report and the SVG region plot."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .grid import Grid, GridSet
from .model import Model

INDENT = " " * 7


@dataclass
class Verdict:
    initial_area: float
    intersection_area: float
    safe: bool
    covering: GridSet  # cells needed to cover the initial box
    stats: dict = field(default_factory=dict)

    @property
    def result(self) -> str:
        return "safe" if self.safe else "unsafe"


def covering_cells(model: Model, box=None) -> tuple[GridSet, bool]:
    """Smallest set of cells whose union covers ``box`` (default: the initial box).

    A box edge lying exactly on a grid face does not pull in the cell on the
    far side, which the union already covers. The flag is True when the box
    pokes out of the safe box.
    """
    box = model.initial if box is None else box
    grid = Grid(model.safe, model.grid_count, margin=0.0)
    first, last, outside = grid.cover_ranges(box.lo_array, box.hi_array)
    ids = grid.ids_in_ranges(first, last)
    return GridSet.from_indices(grid.size, ids), bool(outside)


def intersection_area(model: Model, cells: GridSet, box=None) -> float:
    """Measure of ``box`` (default: initial box) inside the union of ``cells``."""
    box = model.initial if box is None else box
    ids = cells.indices()
    if ids.size == 0:
        return 0.0
    lo, hi = Grid.of(model).cell_bounds
    lo = np.maximum(lo[ids], box.lo_array)
    hi = np.minimum(hi[ids], box.hi_array)
    return float(np.prod(np.clip(hi - lo, 0.0, None), axis=1).sum())


def check_initial(model: Model, gamma_i: GridSet, **stats) -> Verdict:
    """Safe iff every cell needed to cover the initial box is in ``gamma_i``."""
    cover, outside = covering_cells(model)
    safe = not outside and cover.issubset(gamma_i)
    return Verdict(model.initial.volume, intersection_area(model, gamma_i), safe, cover, stats)


def _fmt_interval_union(model: Model, cells: GridSet) -> str:
    """Maximal runs of consecutive cells of a 1-D grid as ``[a, b] U [c, d]``."""
    ids = cells.indices()
    if ids.size == 0:
        return "empty"
    grid = Grid.of(model)
    breaks = np.flatnonzero(np.diff(ids) > 1)
    starts = np.concatenate([[ids[0]], ids[breaks + 1]])
    ends = np.concatenate([ids[breaks], [ids[-1]]])
    e = grid.edges[0]
    return " U ".join(f"[{e[a]:.6f}, {e[b + 1]:.6f}]" for a, b in zip(starts, ends))


def render_text(verdict: Verdict, model: Model | None = None, gamma_i: GridSet | None = None) -> str:
    """Report block; ``model``/``gamma_i`` add the interval line for scalar models."""
    s = verdict.stats
    lines = [
        f"[Success] Number of edges: {s.get('edges', 0)}",
        "[Info] Building K-step graph.",
        f"[Success] Start Region Size: {s.get('start_region', 0)}",
        f"          End Region: {s.get('end_region', 0)}",
        f"          Number of Edges: {s.get('k_edges', 0)}",
        "[Info] Finding the largest closed subgraph.",
        f"[Success] Safe Initial Region Size: {s.get('safe_region', 0)}",
    ]
    if model is not None and gamma_i is not None and model.state_dim == 1:
        lines.append(f"          Safe Initial Set: {_fmt_interval_union(model, gamma_i)}")
    lines += [
        "[Info] Calculating area.",
        f"{INDENT}Initial state region: {verdict.initial_area:.6f}",
        f"{INDENT}Grids Intersection:   {verdict.intersection_area:.6f}",
        f"{INDENT}Result: {verdict.result}",
    ]
    return "\n".join(lines) + "\n"


# -- SVG -------------------------------------------------------------------

GREEN = "#2e9e44"
BLUE = "#1f4fd6"
HATCH = """<pattern id="hatch" patternUnits="userSpaceOnUse" width="6" height="6">
<rect width="6" height="6" fill="white"/>
<path d="M0,6 L6,0 M-1,1 L1,-1 M5,7 L7,5" stroke="#777" stroke-width="0.8"/>
</pattern>"""


def render_svg(model: Model, gamma_s: GridSet, gamma_i: GridSet, path: str = "output.svg",
               size: int = 480) -> str | None:
    """Write the region plot to ``path`` and return the SVG text.

    ``gamma_s`` cells are hatched, those also in ``gamma_i`` solid green and
    the initial box is a blue outline. Models with more than two states are
    skipped with a warning (returns None).
    """
    d = model.state_dim
    if d > 2:
        warnings.warn("region plot only for one or two state variables; skipped")
        return None
    grid = Grid.of(model)
    X = model.safe
    m = 60  # margin for axes and labels
    W = size
    H = size if d == 2 else 40
    sx = W / (X.hi[0] - X.lo[0])
    sy = H / (X.hi[1] - X.lo[1]) if d == 2 else 1.0

    def px(x):
        return m + (x - X.lo[0]) * sx

    def py(y):
        return m + (X.hi[1] - y) * sy if d == 2 else m

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
           f'width="{W + 2 * m}" height="{H + 2 * m}" viewBox="0 0 {W + 2 * m} {H + 2 * m}">',
           f"<defs>{HATCH}</defs>",
           f'<rect class="frame" x="{m}" y="{m}" width="{W}" height="{H}" fill="none" stroke="black"/>']
    lo, hi = grid.cell_bounds
    green = gamma_i.to_mask()
    for v in gamma_s.indices():
        x0, x1 = px(lo[v, 0]), px(hi[v, 0])
        if d == 2:
            y0, y1 = py(hi[v, 1]), py(lo[v, 1])
        else:
            y0, y1 = m, m + H
        fill = GREEN if green[v] else "url(#hatch)"
        out.append(f'<rect class="grid" x="{x0:.3f}" y="{y0:.3f}" width="{x1 - x0:.3f}" '
                   f'height="{y1 - y0:.3f}" fill="{fill}" stroke="none"/>')
    I = model.initial
    ix0, ix1 = px(I.lo[0]), px(I.hi[0])
    iy0, iy1 = (py(I.hi[1]), py(I.lo[1])) if d == 2 else (m - 4, m + H + 4)
    out.append(f'<rect class="initial" x="{ix0:.3f}" y="{iy0:.3f}" width="{ix1 - ix0:.3f}" '
               f'height="{iy1 - iy0:.3f}" fill="none" stroke="{BLUE}" stroke-width="2"/>')

    # axes: ticks at the safe-box bounds and the midpoint
    for t in (X.lo[0], (X.lo[0] + X.hi[0]) / 2, X.hi[0]):
        out.append(f'<text x="{px(t):.3f}" y="{m + H + 18}" font-size="12" '
                   f'text-anchor="middle">{t:g}</text>')
    out.append(f'<text x="{m + W / 2}" y="{m + H + 40}" font-size="14" '
               f'text-anchor="middle">{escape(model.state_names[0])}</text>')
    if d == 2:
        for t in (X.lo[1], (X.lo[1] + X.hi[1]) / 2, X.hi[1]):
            out.append(f'<text x="{m - 6}" y="{py(t) + 4:.3f}" font-size="12" '
                       f'text-anchor="end">{t:g}</text>')
        out.append(f'<text x="{m - 40}" y="{m + H / 2}" font-size="14" text-anchor="middle" '
                   f'transform="rotate(-90 {m - 40} {m + H / 2})">{escape(model.state_names[1])}</text>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return text
