#!/usr/bin/env python3
"""Smoke test for the ceprecode_py extension module.

Builds the cdylib with cargo (set CEPRECODE_SKIP_BUILD=1 to reuse an existing
build), loads it, and exercises the main entry points: channel/symbol
generation, the CI and IR solvers, the flop model and a tiny SER run.

Usage: python3 python/smoke_test.py
"""

import math
import os
import shutil
import subprocess
import sys
import tempfile

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def build_extension() -> str:
    """Build the extension and return a directory containing ceprecode_py.so."""
    profile = os.environ.get("CEPRECODE_PROFILE", "release")
    if not os.environ.get("CEPRECODE_SKIP_BUILD"):
        cmd = ["cargo", "build", "-p", "ceprecode-python"]
        if profile == "release":
            cmd.append("--release")
        subprocess.run(cmd, cwd=REPO_ROOT, check=True)
    built = os.path.join(REPO_ROOT, "target", profile, "libceprecode_py.so")
    if not os.path.exists(built):
        raise SystemExit(f"extension not found at {built}; build it first")
    stage = tempfile.mkdtemp(prefix="ceprecode_py_")
    shutil.copy(built, os.path.join(stage, "ceprecode_py.so"))
    return stage


def approx(a: float, b: float, tol: float = 1e-9) -> bool:
    return abs(a - b) <= tol


def main() -> None:
    sys.path.insert(0, build_extension())
    import ceprecode_py as cp

    print(f"ceprecode_py version {cp.__version__}")

    # Deterministic channel generation.
    h1 = cp.channel(4, 3, seed=7)
    h2 = cp.channel(4, 3, seed=7)
    assert h1 == h2, "same seed must give the same channel"
    assert len(h1) == 4 and len(h1[0]) == 3
    print("channel generation: ok")

    # Symbols live on the constellation grid.
    idx = cp.symbols(6, 4, 1.0, seed=3)
    assert len(idx) == 6 and all(0 <= k < 4 for k in idx)
    print("symbol draws: ok")

    # Flop model reference values.
    assert cp.flops(64, 20, "gradient-stage") == 84_840
    assert cp.flops(64, 20, "direction-stage") == 16_768
    assert cp.flops(1, 1, "gradient-stage") == 64
    print("flop model: ok")

    # The scalar instance has its optimum at x = 1 with objective -1.
    unit = [[1 + 0j]]
    res = cp.solve("rcg-ci", unit, [0], l=4, u=1.0, power_budget=1.0, seed=1)
    assert res.converged, "scalar solve should converge"
    assert abs(res.exact_objective - (-1.0)) < 1e-3, res.exact_objective
    assert res.ci_feasible
    assert approx(abs(res.x[0]), 1.0, 1e-12), "constant envelope violated"
    print(f"rcg-ci scalar solve: ok ({res!r})")

    # Every solver keeps the constant envelope on a random instance.
    h = cp.channel(16, 4, seed=11)
    sym = cp.symbols(4, 4, 1.0, seed=12)
    radius = math.sqrt(1.0 / 16.0)
    for tag in ["rcg-ci", "relaxed-ci", "rcg-ir", "gd-ir", "ceo-ci", "ceo-ir"]:
        r = cp.solve(tag, h, sym, seed=5, ceo_iterations=40, ceo_samples=50)
        worst = max(abs(abs(z) - radius) for z in r.x)
        assert worst < 1e-12, f"{tag}: envelope deviation {worst}"
    print("constant envelope across all six solvers: ok")

    # A small SER run is deterministic and sane.
    a = cp.run_ser("rcg-ci", 16, 4, 4, 1.0, 6.0, 50, seed=9)
    b = cp.run_ser("rcg-ci", 16, 4, 4, 1.0, 6.0, 50, seed=9)
    assert a.symbol_errors == b.symbol_errors
    assert 0.0 <= a.ser <= 1.0
    print(f"ser monte-carlo: ok ({a!r})")

    # Config validation round-trips.
    canon = cp.check_config("N = 8\nM = 2\nsolvers = rcg-ci, gd-ir\n")
    assert "N = 8" in canon
    try:
        cp.check_config("solvers = nosuch")
    except ValueError as e:
        assert "nosuch" in str(e)
    else:
        raise AssertionError("bad solver tag must be rejected")
    print("config check: ok")

    print("smoke test passed")


if __name__ == "__main__":
    main()
