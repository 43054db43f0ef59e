"""Numerical checks of the limit theorems for Jacobi functions.

Each check evaluates both sides of a limit relation over a parameter grid,
records the sup residual per grid value and fits ``log residual`` against
``log grid value``.  The theorems only assert the existence of constants,
so reports test bounded normalized residuals and decay slopes.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .hypergroup import QuadratureSpec, limit_offset, moment_fn
from .specfun import JacobiParams, bessel_j, jacobi_phi_series


@dataclass
class LimitReport:
    name: str
    grid_label: str
    grid: list
    residuals: list
    fitted_exponent: float | None
    fit_quality: float | None
    normalized: list | None = None
    checks: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def summary(self) -> dict:
        out = {
            "name": self.name,
            "grid_label": self.grid_label,
            "fitted_exponent": self.fitted_exponent,
            "fit_quality": self.fit_quality,
            "max_residual": max(self.residuals) if self.residuals else 0.0,
            "checks": dict(self.checks),
            "passed": self.passed,
        }
        if self.normalized is not None:
            out["max_normalized_residual"] = max(self.normalized)
        out.update(self.extra)
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["grid_value", "residual"])
            for g, r in zip(self.grid, self.residuals):
                w.writerow([repr(float(g)), repr(float(r))])

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def fit_exponent(grid: Sequence[float], residuals: Sequence[float]):
    """Least-squares slope of log residual on log grid value and its R^2.

    Only strictly positive pairs enter; with fewer than three of them the
    fit is undefined and ``(None, None)`` is returned.
    """
    g = np.asarray(grid, dtype=float)
    r = np.asarray(residuals, dtype=float)
    keep = (g > 0) & (r > 0)
    if np.count_nonzero(keep) < 3:
        return None, None
    x, y = np.log(g[keep]), np.log(r[keep])
    slope, icept = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + icept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(r2)


def _map(fn: Callable, items: Sequence, threads: int | None):
    if not threads or threads == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _stat_line(p: JacobiParams, lam: float) -> complex:
    """Spectral point ``i rho - lambda``."""
    return 1j * p.rho - lam


def _sup_diff(p: JacobiParams, spectral: complex, ts: np.ndarray, target: np.ndarray) -> float:
    phi = jacobi_phi_series(p, spectral, ts)
    return float(np.max(np.abs(phi - target)))


def _slope_check(report: LimitReport, threshold: float) -> bool:
    if max(report.residuals, default=0.0) == 0.0:
        return True
    return report.fitted_exponent is not None and report.fitted_exponent <= threshold


def _increasing(values) -> bool:
    return all(b > a for a, b in zip(values, values[1:]))


def prop_alpha_limit(beta: float, lam: float, t_grid: Sequence[float],
                     alpha_grid: Sequence[float], slope_max: float = -0.45,
                     threads: int | None = None) -> LimitReport:
    """``phi_{i rho - lambda}^(alpha,beta)(t) -> e^{i lambda ln ch t}`` as alpha grows."""
    ts = np.asarray(t_grid, dtype=float)
    if not _increasing(list(alpha_grid)) or min(alpha_grid) <= max(beta, 0.0):
        raise DomainError("alpha grid must be increasing and above max(beta, 0)")
    target = np.exp(1j * lam * np.log(np.cosh(ts)))

    def one(a):
        p = JacobiParams(a, beta)
        return _sup_diff(p, _stat_line(p, lam), ts, target)

    res = _map(one, list(alpha_grid), threads)
    slope, r2 = fit_exponent(alpha_grid, res)
    rep = LimitReport("alpha_limit", "alpha", list(map(float, alpha_grid)), res, slope, r2,
                      extra={"beta": beta, "lambda": lam})
    rep.checks["slope"] = _slope_check(rep, slope_max)
    return rep


def coupled_phase(c: float, x) -> np.ndarray:
    """``ln sqrt(ch^2 x + sh^2 x / c)``, stable for large x.

    This is ``ln|ch x + (i/sqrt c) sh x|``: the measure concentrates at
    ``w = i/sqrt(c)`` as beta grows with ``alpha = c beta + d``.
    """
    x = np.asarray(x, dtype=float)
    # ch^2 + sh^2/c = 1 + k sh^2 = e^{2x} (e^{-2x} + k (1 - e^{-2x})^2 / 4)
    k = 1.0 + 1.0 / c
    return x + 0.5 * np.log(np.exp(-2.0 * x) + 0.25 * k * np.expm1(-2.0 * x) ** 2)


def prop_coupled_limit(c: float, d_shift: float, lam: float, t_grid: Sequence[float],
                       beta_grid: Sequence[float], slope_max: float = -0.45,
                       threads: int | None = None) -> LimitReport:
    """Same limit along ``alpha = c beta + d_shift`` with the coupled phase."""
    if not c > 1 or not d_shift > 0:
        raise DomainError("need c > 1 and d_shift > 0")
    if not _increasing(list(beta_grid)) or min(beta_grid) <= 0:
        raise DomainError("beta grid must be positive and increasing")
    ts = np.asarray(t_grid, dtype=float)
    target = np.exp(1j * lam * coupled_phase(c, ts))

    def one(b):
        p = JacobiParams(c * b + d_shift, b)
        return _sup_diff(p, _stat_line(p, lam), ts, target)

    res = _map(one, list(beta_grid), threads)
    slope, r2 = fit_exponent(beta_grid, res)
    rep = LimitReport("coupled_limit", "beta", list(map(float, beta_grid)), res, slope, r2,
                      extra={"c": c, "d_shift": d_shift, "lambda": lam})
    rep.checks["slope"] = _slope_check(rep, slope_max)
    return rep


def prop_bessel_limit(p: JacobiParams, lam: float, T: float, n_grid: Sequence[int],
                      t_points: int = 61, slope_max: float = -0.9,
                      threads: int | None = None) -> LimitReport:
    """``phi_{i rho - n lambda}(t/n) -> j_alpha(lambda t)`` uniformly on [0, T]."""
    if not _increasing(list(n_grid)) or min(n_grid) < 1:
        raise DomainError("n grid must be increasing positive integers")
    ts = np.linspace(0.0, T, t_points)
    target = bessel_j(p.alpha, abs(lam) * ts)

    def one(n):
        return _sup_diff(p, _stat_line(p, n * lam), ts / n, target)

    res = _map(one, list(n_grid), threads)
    slope, r2 = fit_exponent(n_grid, res)
    scale = abs(lam) * T * T
    norm = [r * n / scale if scale > 0 else 0.0 for r, n in zip(res, n_grid)]
    rep = LimitReport("bessel_limit", "n", list(map(float, n_grid)), res, slope, r2,
                      normalized=norm, extra={"alpha": p.alpha, "beta": p.beta,
                                              "lambda": lam, "T": T})
    rep.checks["slope"] = _slope_check(rep, slope_max)
    # bounded normalized residual: the fine end of the grid must not
    # exceed the coarse half by more than a factor 1.5
    head = norm[: len(norm) // 2 + 1]
    rep.checks["normalized_bounded"] = bool(
        np.all(np.isfinite(norm)) and max(norm[len(head):] or [0.0]) <= 1.5 * max(head) + 1e-300)
    return rep


def explicit_phase_constant(p: JacobiParams) -> float:
    """The admissible constant ``6 alpha / (e (alpha - beta - 1))`` for alpha > beta + 1."""
    if not p.alpha > p.beta + 1:
        raise DomainError("the explicit constant needs alpha > beta + 1")
    return 6.0 * p.alpha / (math.e * (p.alpha - p.beta - 1.0))


def _phase_report(name: str, p: JacobiParams, lambda_grid, ts: np.ndarray,
                  phase: np.ndarray, threads) -> LimitReport:
    def one(lam):
        if lam == 0:
            return 0.0
        return _sup_diff(p, _stat_line(p, lam), ts, np.exp(1j * lam * phase))

    lams = [float(x) for x in lambda_grid]
    res = _map(one, lams, threads)
    norm = [r / (l * l + abs(l) ** 3) if l != 0 else 0.0 for r, l in zip(res, lams)]
    pos = [(abs(l), r) for l, r in zip(lams, res) if l != 0]
    slope, r2 = fit_exponent([a for a, _ in pos], [r for _, r in pos])
    return LimitReport(name, "lambda", lams, res, slope, r2, normalized=norm,
                       extra={"alpha": p.alpha, "beta": p.beta,
                              "t_max": float(ts.max()) if ts.size else 0.0})


def prop_moment_phase(p: JacobiParams, lambda_grid: Sequence[float], t_grid: Sequence[float],
                      quad: QuadratureSpec | None = None,
                      threads: int | None = None) -> LimitReport:
    """``|phi_{i rho - lambda}(t) - e^{i lambda m_1(t)}| <= C (lambda^2 + |lambda|^3)``."""
    ts = np.asarray(t_grid, dtype=float)
    m1 = moment_fn(p, 1, ts, quad)
    rep = _phase_report("moment_phase", p, lambda_grid, ts, m1, threads)
    rep.checks["normalized_finite"] = all(math.isfinite(x) for x in rep.normalized)
    if p.alpha > p.beta + 1:
        const = explicit_phase_constant(p)
        rep.extra["explicit_constant"] = const
        rep.checks["explicit_constant"] = max(rep.normalized) <= const
    return rep


def cor_exp_phase(p: JacobiParams, lambda_grid: Sequence[float], t_grid: Sequence[float],
                  bound: float | None = None, threads: int | None = None) -> LimitReport:
    """``|phi_{i rho - lambda}(t) - e^{i lambda t}| <= C (lambda^2 + |lambda|^3)``.

    Without ``bound`` only finiteness of the normalized residual is
    checked; the report carries its maximum for comparison.
    """
    ts = np.asarray(t_grid, dtype=float)
    rep = _phase_report("exp_phase", p, lambda_grid, ts, ts, threads)
    rep.checks["normalized_finite"] = all(math.isfinite(x) for x in rep.normalized)
    if bound is not None:
        rep.checks["bound"] = max(rep.normalized) <= bound
    return rep


def m1_bounds(p: JacobiParams, t_grid: Sequence[float], flat_window=(20.0, 50.0),
              flat_tol: float = 1e-3, quad: QuadratureSpec | None = None) -> LimitReport:
    """``t - C <= m_1(t) <= t``: reports ``t - m_1(t)`` over the grid."""
    ts = np.asarray(t_grid, dtype=float)
    gap = ts - moment_fn(p, 1, ts, quad)
    lo, hi = flat_window
    window = gap[(ts >= lo) & (ts <= hi)]
    variation = float(window.max() - window.min()) if window.size else 0.0
    rep = LimitReport("m1_bounds", "t", ts.tolist(), [float(abs(g)) for g in gap], None, None,
                      extra={"sup_gap": float(gap.max()), "min_gap": float(gap.min()),
                             "flat_variation": variation,
                             "limit_constant": limit_offset(p),
                             "alpha": p.alpha, "beta": p.beta})
    rep.checks["m1_below_t"] = bool(np.all(gap >= -1e-9))
    rep.checks["flat_tail"] = variation <= flat_tol
    return rep


def taylor_expansion(p: JacobiParams, lam: float, t: float, a: float, r: float, n: float) -> complex:
    """Four-term expansion of ``phi_{i rho - lambda/n^a}(t/n^r)`` in powers of 1/n."""
    al, be, rho = p.alpha, p.beta, p.rho
    return (1.0
            + 1j * rho * lam * t ** 2 / (2 * (al + 1) * n ** (a + 2 * r))
            - lam ** 2 * t ** 2 / (4 * (al + 1) * n ** (2 * a + 2 * r))
            - 1j * rho * (al + 3 * be + 2) * t ** 4 * lam
            / (12 * (al + 1) * (al + 2) * n ** (a + 4 * r)))


def taylor_residual(p: JacobiParams, lam: float, t: float, a: float, r: float,
                    n_grid: Sequence[int], slack: float = 0.1,
                    threads: int | None = None) -> LimitReport:
    """Residual of the four-term expansion; its order is
    ``n^-min(a + 6r, 2a + 4r)``."""
    if not _increasing(list(n_grid)):
        raise DomainError("n grid must be increasing")

    def one(n):
        spectral = _stat_line(p, lam / n ** a)
        return abs(jacobi_phi_series(p, spectral, t / n ** r) - taylor_expansion(p, lam, t, a, r, n))

    res = [float(x) for x in _map(one, list(n_grid), threads)]
    slope, r2 = fit_exponent(n_grid, res)
    expected = -min(a + 6 * r, 2 * a + 4 * r)
    rep = LimitReport("taylor_residual", "n", list(map(float, n_grid)), res, slope, r2,
                      extra={"expected_exponent": expected, "alpha": p.alpha, "beta": p.beta,
                             "lambda": lam, "t": t, "a": a, "r": r})
    rep.checks["slope"] = _slope_check(rep, expected + slack)
    return rep
