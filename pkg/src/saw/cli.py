"""Command-line entry point: model file in, safety verdict and region plot out.

    saw example/model1.txt [--m M] [--K K] [--p P] [--step-size H] ...

Exit status: 0 safe, 1 unsafe, 2 bad input, 3 internal failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass
from typing import Callable, TextIO

from .dp import KStepGraph, local_safety
from .expr import ParseError
from .graph import OneStepGraph, build_one_step
from .grid import MARGIN, GridSet
from .inductive import inductiveness
from .model import Model, ModelError, read_model
from .reach import DEFAULT_ORDER
from .report import Verdict, check_initial, render_svg, render_text

EXIT_SAFE, EXIT_UNSAFE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


@dataclass
class Analysis:
    model: Model
    g1: OneStepGraph
    gamma_s: GridSet
    gk: KStepGraph
    gamma_i: GridSet
    verdict: Verdict


def analyze(model: Model, order: int = DEFAULT_ORDER, threads: int = 1,
            skip_unused_miss: bool = False, margin: float | None = MARGIN,
            coupled: bool = True, progress: Callable[[float], None] | None = None,
            stage: Callable[[str], None] | None = None) -> Analysis:
    """Run the whole pipeline on a parsed model.

    ``stage`` is called with a short name when each stage starts, which lets
    the caller print headers and time stages.
    """
    def enter(name):
        if stage is not None:
            stage(name)

    enter("one-step")
    g1 = build_one_step(model, order=order, threads=threads, skip_unused_miss=skip_unused_miss,
                        margin=margin, coupled=coupled, progress=progress)
    enter("k-step")
    gamma_s, gk = local_safety(g1, model.m, model.K)
    enter("inductive")
    gamma_i = inductiveness(gk, gamma_s)
    enter("area")
    verdict = check_initial(model, gamma_i, edges=g1.edge_count, start_region=gk.start_region,
                            end_region=gk.end_region, k_edges=gk.edge_count,
                            safe_region=len(gamma_i))
    return Analysis(model, g1, gamma_s, gk, gamma_i, verdict)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="saw", description="Safe initial sets of weakly-hard control loops.")
    ap.add_argument("model", help="model file")
    ap.add_argument("--svg", default="output.svg", help="region plot path (default output.svg)")
    ap.add_argument("--no-svg", action="store_true", help="do not write the region plot")
    ap.add_argument("--order", type=int, default=DEFAULT_ORDER, help="Taylor order (default 4)")
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                    help="worker threads for the one-step graph (default: all CPUs)")
    ap.add_argument("--m", type=int, help="override the allowed misses m")
    ap.add_argument("--K", type=int, help="override the window length K")
    ap.add_argument("--p", type=int, help="override the partitions per dimension")
    ap.add_argument("--step-size", type=float, help="override the integration step")
    ap.add_argument("--quiet", action="store_true", help="no intermediate progress updates")
    ap.add_argument("--skip-unused-miss", action="store_true",
                    help="skip miss flowpipes when m = 0")
    ap.add_argument("--margin", type=float, default=MARGIN,
                    help="contact tolerance for graph edges, relative to the cell width (default 1e-9)")
    ap.add_argument("--closed", action="store_true",
                    help="count every closed-cell contact as an edge (ignores --margin)")
    ap.add_argument("--decoupled", action="store_true",
                    help="hold the interval of the control law over the cell instead of "
                         "tracking its dependence on the start point")
    return ap


def _overrides(model: Model, args) -> Model:
    changes = {}
    if args.m is not None:
        changes["m"] = args.m
    if args.K is not None:
        changes["K"] = args.K
    if args.p is not None:
        changes["grid_count"] = args.p
    if args.step_size is not None:
        changes["step_size"] = args.step_size
    return model.replace(**changes) if changes else model


def run(argv=None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    args = build_parser().parse_args(argv)
    if args.order < 1 or args.threads < 1:
        print("[Error] --order and --threads must be positive", file=err)
        return EXIT_INPUT

    t0 = time.perf_counter()
    clock = [t0, None]

    def timing(label):
        now = time.perf_counter()
        print(f"[Time] {label}: {now - clock[0]:.3f} s", file=err)
        clock[0] = now

    out.write("[Info] Parsing model.\n")
    try:
        model = _overrides(read_model(args.model), args)
    except (OSError, ModelError, ParseError, ValueError) as exc:
        print(f"[Error] {exc}", file=err)
        return EXIT_INPUT
    timing("parsing")

    try:
        out.write("[Info] Building Taylor integrator.\n")
        out.write("[Info] Building grids.\n")
        shown = [False]

        def progress(frac):
            if args.quiet and frac < 1.0:
                return
            out.write(("\r" if shown[0] else "") + f"       Process: {100 * frac:.2f}%")
            out.flush()
            shown[0] = True

        def stage(name):
            if name == "one-step":
                out.write("[Info] Building one-step graph.\n")
                return
            if name == "k-step":
                out.write("\n")
                timing("one-step graph")
            elif name == "inductive":
                timing("k-step graph")
            elif name == "area":
                timing("closed subgraph")

        res = analyze(model, order=args.order, threads=args.threads,
                      skip_unused_miss=args.skip_unused_miss,
                      margin=None if args.closed else args.margin,
                      coupled=not args.decoupled, progress=progress, stage=stage)
        out.write(render_text(res.verdict, model, res.gamma_i))
        out.flush()
        if not args.no_svg:
            if model.state_dim > 2:
                print("[Warning] region plot needs one or two state variables; skipped", file=err)
            else:
                render_svg(model, res.gamma_s, res.gamma_i, args.svg)
        timing("report")
        print(f"[Time] total: {time.perf_counter() - t0:.3f} s", file=err)
    except OSError as exc:
        print(f"[Error] {exc}", file=err)
        return EXIT_INPUT
    except Exception as exc:  # anything else is a bug or a numerical breakdown
        print(f"[Error] internal failure: {exc!r}", file=err)
        return EXIT_INTERNAL
    return EXIT_SAFE if res.verdict.safe else EXIT_UNSAFE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
