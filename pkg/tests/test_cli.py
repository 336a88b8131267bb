import io
import re

import pytest

from saw.cli import build_parser, run
from saw.model import format_model

from conftest import EXAMPLE, bench


def call(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def test_missing_file(tmp_path):
    code, out, err = call([tmp_path / "missing.txt"])
    assert code == 2 and "[Error]" in err


def test_bad_model(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("1 0 4\nx\nx +\n0.2 0.01\n0 1\n-1 1\n-1 1\n")
    code, _, err = call([p])
    assert code == 2 and "line 3" in err


def test_bad_override(tmp_path):
    code, _, err = call([EXAMPLE / "model5.txt", "--m", "9", "--K", "2", "--no-svg"])
    assert code == 2


def test_defaults():
    args = build_parser().parse_args(["m.txt"])
    assert args.svg == "output.svg" and args.order == 4 and args.threads >= 1


def test_benchmark5_run(tmp_path):
    svg = tmp_path / "o.svg"
    code, out, err = call([EXAMPLE / "model5.txt", "--svg", svg])
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "[Info] Parsing model."
    assert "[Info] Building one-step graph." in lines
    assert lines[-1] == "       Result: safe"
    assert svg.exists()
    assert re.search(r"\[Time\] total: [0-9.]+ s", err)
    assert "[Time]" not in out


def test_progress_and_quiet(monkeypatch):
    # one update per work chunk; shrink chunks so the 100 cells give several
    monkeypatch.setattr("saw.graph.CHUNK", 32)
    _, out, _ = call([EXAMPLE / "model5.txt", "--no-svg"])
    assert out.count("Process:") > 1 and "\r       Process: 100.00%\n" in out
    _, quiet, _ = call([EXAMPLE / "model5.txt", "--no-svg", "--quiet"])
    assert quiet.count("Process:") == 1 and "\r" not in quiet


@pytest.mark.parametrize("flags,changes", [
    (["--step-size", "0.2"], {"step_size": 0.2}),
    (["--m", "2", "--K", "4"], {"m": 2, "K": 4}),
    (["--p", "60"], {"grid_count": 60}),
])
def test_overrides_match_edited_file(tmp_path, flags, changes):
    edited = tmp_path / "edited.txt"
    edited.write_text(format_model(bench(5).replace(**changes)))
    a = call([EXAMPLE / "model5.txt", "--no-svg", *flags])
    b = call([edited, "--no-svg"])
    assert a[:2] == b[:2]


def test_order_flag_changes_engine_only():
    code, out, _ = call([EXAMPLE / "model5.txt", "--no-svg", "--order", "6"])
    assert code == 0 and out.splitlines()[-1] == "       Result: safe"


def test_threads_identical_output():
    a = call([EXAMPLE / "model5.txt", "--no-svg", "--threads", "1"])
    b = call([EXAMPLE / "model5.txt", "--no-svg", "--threads", "3"])
    assert a[:2] == b[:2]


def test_all_misses_allowed_benchmark1():
    # (5, 5) admits the all-miss pattern, under which u = 0 and x1 grows
    code, out, _ = call([EXAMPLE / "model1.txt", "--no-svg", "--m", "5", "--K", "5"])
    assert code == 1
    assert out.splitlines()[-1] == "       Result: unsafe"
    size = int(re.search(r"Safe Initial Region Size: (\d+)", out).group(1))
    assert size < 1520
