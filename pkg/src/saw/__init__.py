"""Safe initial sets for nonlinear control loops under (m, K) deadline misses.

The safe box is cut into grid cells, one-period flowpipes of every cell give
a one-step graph, a dynamic program over miss budgets gives the local-safety
set and the K-step graph, and a reverse search keeps the largest subset that
K-step reachability cannot leave.
"""

from .cli import Analysis, analyze, run
from .dp import KStepGraph, bf_local_safety, local_safety
from .expr import parse_expr
from .graph import OneStepGraph, build_one_step
from .grid import Grid, GridSet, area, grid_box, grids_overlapping
from .inductive import inductiveness
from .interval import Box, Interval
from .model import Model, ModelError, format_model, parse_model, read_model
from .reach import EnclosureError, Flowpipe, apriori_enclosure, control_input, flowpipe, taylor_step
from .report import Verdict, check_initial, render_svg, render_text

__version__ = "0.1.0"
