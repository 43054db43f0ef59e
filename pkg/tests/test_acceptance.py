"""Acceptance criteria 1-14, each at its stated tolerance.

Every criterion prints one line ``criterion NN [PASS|FAIL] ...``; the lines
are repeated in the pytest terminal summary.  Run standalone with
``python tests/test_acceptance.py`` to get only the summary lines.
The Monte Carlo criteria (9-13) take several minutes on one core.
"""

import copy
import filecmp
import json
import math
from pathlib import Path

import numpy as np
import pytest

from jacobiwalk import (JacobiParams, QuadratureSpec, convolve_point_expect, integrate_m,
                        jacobi_phi_integral, jacobi_phi_series)
from jacobiwalk import cli, config
from jacobiwalk.clt import rayleigh_hankel
from jacobiwalk.limits import m1_bounds

FIXTURES = Path(__file__).parent / "fixtures"
CONFIGS = FIXTURES / "configs"
GRIDS = json.loads((FIXTURES / "grids.json").read_text())

LINES: dict = {}


def record(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    LINES[n] = line
    print(line)
    assert ok, line


def params_grid(g):
    for a in g["alpha"]:
        for b in g["beta"]:
            yield JacobiParams(a, a if b == "alpha" else b)


def fixture(name: str) -> dict:
    return config.load(CONFIGS / f"{name}.json")


def run_limits(name: str):
    return cli._run_limits(fixture(name), threads=None)


def run_clt(name: str):
    return cli._run_clt(fixture(name), threads=None, keep=False)


def test_01_normalization():
    errs = [abs(integrate_m(p, lambda r, phi: np.ones_like(r)) - 1.0)
            for p in params_grid(GRIDS["normalization"])]
    record(1, "measure normalization", max(errs) <= 1e-10,
           f"max |int 1 dm - 1| = {max(errs):.2e} over {len(errs)} (alpha, beta) (tol 1e-10)")


def test_02_route_agreement():
    g = GRIDS["route_agreement"]
    worst = 0.0
    count = 0
    for p in params_grid(g):
        for lam in g["lambda"]:
            for t in g["t"]:
                d = abs(jacobi_phi_series(p, lam, t) - jacobi_phi_integral(p, lam, t))
                worst = max(worst, d)
                count += 1
    record(2, "series vs integral route", worst <= 1e-8,
           f"max difference {worst:.2e} over {count} points (tol 1e-8)")


def test_03_multiplicativity():
    g = GRIDS["multiplicativity"]
    worst = 0.0
    count = 0
    for a, b in g["params"]:
        p = JacobiParams(a, b)
        for re, im in g["lambda"]:
            lam = complex(re, im)
            for s, t in g["st"]:
                lhs = convolve_point_expect(p, s, t, lambda z: jacobi_phi_series(p, lam, z))
                rhs = jacobi_phi_series(p, lam, s) * jacobi_phi_series(p, lam, t)
                worst = max(worst, abs(lhs - rhs))
                count += 1
    record(3, "product formula", worst <= 1e-7,
           f"max |int phi d(delta_s*delta_t) - phi(s)phi(t)| = {worst:.2e} over {count} cases (tol 1e-7)")


def test_04_quadratic_transform_and_hankel():
    g = GRIDS["quadratic_transform"]
    quad_err = max(
        abs(jacobi_phi_series(JacobiParams(a, a), 2 * lam, t)
            - jacobi_phi_series(JacobiParams(a, -0.5), lam, 2 * t))
        for a in g["alpha"] for lam in g["lambda"] for t in g["t"])
    h = GRIDS["hankel_rayleigh"]
    hank_err = max(abs(rayleigh_hankel(a, lam) - math.exp(-lam * lam / 2))
                   for a in h["alpha"] for lam in h["lambda"])
    record(4, "quadratic transform and Hankel-Rayleigh", quad_err <= 1e-10 and hank_err <= 1e-6,
           f"transform error {quad_err:.2e} (tol 1e-10), Hankel error {hank_err:.2e} (tol 1e-6)")


def test_05_m1_bounds():
    g = GRIDS["m1_bounds"]
    ts = config.grid(g["t_grid"])
    parts, ok = [], True
    for a, b in g["params"]:
        rep = m1_bounds(JacobiParams(a, b), ts, flat_window=tuple(g["flat_window"]),
                        flat_tol=g["flat_tol"])
        ok &= rep.passed
        parts.append(f"({a},{b}) min(t-m1)={rep.extra['min_gap']:.1e} var={rep.extra['flat_variation']:.1e}")
    record(5, "m1(t) <= t and flat t - m1(t)", ok, "; ".join(parts))


def test_06_alpha_and_coupled_limits():
    a = run_limits("c06_alpha_limit")
    c = run_limits("c06_coupled_limit")
    record(6, "growing-parameter limits", a.passed and c.passed,
           f"alpha slope {a.fitted_exponent:.3f}, coupled slope {c.fitted_exponent:.3f} (need <= -0.45)")


def test_07_bessel_limit():
    rep = run_limits("c07_bessel_limit")
    record(7, "Bessel limit", rep.passed,
           f"slope {rep.fitted_exponent:.3f} (need <= -0.9), normalized residual max "
           f"{max(rep.normalized):.3f}, bounded={rep.checks['normalized_bounded']}")


def test_08_moment_phase():
    rep = run_limits("c08_moment_phase")
    record(8, "moment-phase bound with explicit constant", rep.passed,
           f"max residual/(l^2+|l|^3) = {max(rep.normalized):.4f} <= "
           f"{rep.extra['explicit_constant']:.4f}")


@pytest.mark.slow
def test_09_fixed_parameter_clt():
    rep = run_clt("c09_fixed")
    ks = ", ".join(f"{k:.4f}" for k in rep.ks)
    record(9, "fixed-parameter CLT", rep.passed,
           f"KS over n={rep.n_grid}: [{ks}] (need last <= 0.02), slope "
           f"{rep.rate_fit['slope']:.3f} (need <= -0.30)")


@pytest.mark.slow
def test_10_rayleigh_clt():
    r1 = run_clt("c10_rayleigh_r1")
    r2 = run_clt("c10_rayleigh_r075")
    record(10, "Rayleigh CLT", r1.passed and r2.passed,
           f"KS {r1.ks[-1]:.4f} at r=1, {r2.ks[-1]:.4f} at r=0.75 (need <= 0.02)")


@pytest.mark.slow
def test_11_regimes():
    c1 = run_clt("c11_regime1")
    c2 = run_clt("c11_regime2")
    c3 = run_clt("c11_regime3")
    m2, m3 = c2.moments[-1], c3.moments[-1]
    iqr = ", ".join(f"{m['iqr']:.4f}" for m in c3.moments)
    record(11, "three regimes", c1.passed and c2.passed and c3.passed,
           f"case 1 KS {c1.ks[-1]:.4f} (<= 0.02) {'ok' if c1.passed else 'FAIL'}; "
           f"case 2 mean {m2['mean']:.4f} vs {c2.extra['drift_constant']:.4f} "
           f"+- {c2.extra['mean_tolerance']:.4f} {'ok' if c2.passed else 'FAIL'}; "
           f"case 3 mean {m3['mean']:.4f} vs {c3.extra['drift_constant']:.4f} "
           f"+- {c3.extra['mean_tolerance']:.4f}, IQR [{iqr}] {'ok' if c3.passed else 'FAIL'}")


@pytest.mark.slow
def test_12_growing_parameter_clt():
    a = run_clt("c12_growing_alpha")
    c = run_clt("c12_growing_coupled")
    record(12, "growing-parameter CLT", a.passed and c.passed,
           f"KS {a.ks[-1]:.4f} (alpha_n = n^2), {c.ks[-1]:.4f} (coupled, beta_n = n^2); need <= 0.03")


@pytest.mark.slow
def test_13_tail_bound():
    out = run_clt("c13_tail_bound")
    record(13, "tail bound", out["passed"],
           f"fitted M = {out['M']:.4f} over {len(out['c_grid'])}x{len(out['n_grid'])} grid, "
           f"Markov constant {out['M_markov']:.4f}, checks {out['checks']}")


DETERMINISM = [("walk", "small_walk"), ("limits", "small_limits"), ("clt", "small_clt_fixed"),
               ("clt", "small_clt_regimes"), ("clt", "small_clt_growing"), ("clt", "small_clt_tail")]


def test_14_determinism(tmp_path, monkeypatch, capsys):
    bad = []
    for cmd, name in DETERMINISM:
        outs = []
        for run_id, threads in (("a", "1"), ("b", "4"), ("c", "4")):
            work = tmp_path / name / run_id
            work.mkdir(parents=True)
            monkeypatch.chdir(work)
            code = cli.main([cmd, "--config", str(CONFIGS / f"{name}.json"), "--out-dir", "out",
                             "--threads", threads])
            outs.append((code, capsys.readouterr().out, work / "out"))
        codes = {o[0] for o in outs}
        ref = outs[0]
        files = sorted(p.name for p in ref[2].iterdir())
        for code, stdout, d in outs[1:]:
            same_files = sorted(p.name for p in d.iterdir()) == files
            match, mismatch, errors = filecmp.cmpfiles(ref[2], d, files, shallow=False)
            if codes != {0} or stdout != ref[1] or not same_files or mismatch or errors:
                bad.append(name)
                break
    record(14, "determinism across reruns and thread counts", not bad,
           f"{len(DETERMINISM)} CLI experiments byte-identical at 1 and 4 threads"
           if not bad else f"differences in {bad}")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
