"""Monte Carlo checks of the central limit theorems for Jacobi walks.

Convergence in distribution is measured by the Kolmogorov-Smirnov
distance between the normalized walk positions and the limit law;
convergence in probability by the sample mean and interquartile range.
All thresholds are statistical and hold at the committed seeds.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .errors import ConfigError, DomainError
from .hypergroup import QuadratureSpec, moment_fn
from .limits import coupled_phase, fit_exponent
from .specfun import JacobiParams, bessel_j, reg_lower_inc_gamma
from .walk import StepDistribution, WalkConfig, compress, simulate_walk

REGIME_TOL = 1e-12


@dataclass(frozen=True)
class EmpiricalDistribution:
    samples: np.ndarray
    count: int

    @classmethod
    def from_samples(cls, xs) -> "EmpiricalDistribution":
        arr = np.sort(np.asarray(xs, dtype=float).ravel())
        if arr.size == 0:
            raise DomainError("empirical distribution needs at least one sample")
        if not np.all(np.isfinite(arr)):
            raise DomainError("samples must be finite")
        return cls(arr, int(arr.size))

    def cdf(self, x):
        return np.searchsorted(self.samples, x, side="right") / self.count

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.samples, q))

    @property
    def iqr(self) -> float:
        return self.quantile(0.75) - self.quantile(0.25)


@dataclass(frozen=True)
class LimitLaw:
    """``normal(mean, variance)``, ``rayleigh(alpha)`` or ``constant(value)``."""

    kind: str
    mean: float = 0.0
    variance: float = 1.0
    alpha: float = 0.0
    value: float = 0.0

    @classmethod
    def normal(cls, mean: float, variance: float):
        if not (math.isfinite(variance) and variance > 0):
            raise DomainError(f"normal law needs variance > 0, got {variance}")
        return cls("normal", mean=float(mean), variance=float(variance))

    @classmethod
    def rayleigh(cls, alpha: float):
        if not alpha > -0.5:
            raise DomainError(f"Rayleigh law needs alpha > -1/2, got {alpha}")
        return cls("rayleigh", alpha=float(alpha))

    @classmethod
    def constant(cls, value: float):
        return cls("constant", value=float(value))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "normal":
            return special.ndtr((x - self.mean) / math.sqrt(self.variance))
        if self.kind == "rayleigh":
            return rayleigh_cdf(self.alpha, x)
        return (x >= self.value).astype(float)

    def cdf_left(self, x):
        """Left limit ``P(X < x)``; differs from ``cdf`` only at atoms."""
        if self.kind == "constant":
            return (np.asarray(x, dtype=float) > self.value).astype(float)
        return self.cdf(x)

    def atoms(self) -> list:
        return [self.value] if self.kind == "constant" else []

    def to_dict(self) -> dict:
        if self.kind == "normal":
            return {"kind": "normal", "mean": self.mean, "variance": self.variance}
        if self.kind == "rayleigh":
            return {"kind": "rayleigh", "alpha": self.alpha}
        return {"kind": "constant", "value": self.value}


def rayleigh_cdf(alpha: float, x):
    """CDF of the law with density ``x^(2a+1) e^(-x^2/2) / (2^a Gamma(a+1))``."""
    xs = np.maximum(np.asarray(x, dtype=float), 0.0)
    return reg_lower_inc_gamma(alpha + 1.0, xs * xs / 2.0)


def rayleigh_hankel(alpha: float, lam: float) -> float:
    """``int j_alpha(lam t) d rho_alpha(t)`` by adaptive quadrature.

    The exact value is ``exp(-lam^2/2)``; the Rayleigh law is the Gaussian
    of the Bessel-Kingman hypergroup.
    """
    if not alpha > -0.5:
        raise DomainError(f"Rayleigh law needs alpha > -1/2, got {alpha}")
    log_c = -alpha * math.log(2.0) - math.lgamma(alpha + 1.0)

    def f(t):
        return bessel_j(alpha, lam * t) * math.exp(log_c + (2 * alpha + 1) * math.log(t) - t * t / 2)

    val, _ = integrate.quad(f, 0.0, 40.0, epsabs=1e-13, epsrel=1e-12, limit=400)
    return float(val)


def ks_distance(e: EmpiricalDistribution, law: LimitLaw) -> float:
    """Two-sided sup distance, evaluated on both sides of every jump of
    either distribution function."""
    xs = np.unique(np.concatenate([e.samples, law.atoms()]))
    right = np.searchsorted(e.samples, xs, side="right") / e.count
    left = np.searchsorted(e.samples, xs, side="left") / e.count
    d = max(np.max(np.abs(right - law.cdf(xs))), np.max(np.abs(left - law.cdf_left(xs))))
    return float(min(max(d, 0.0), 1.0))


def dkw_bound(count: int, confidence: float = 0.999) -> float:
    """Radius ``eps`` with ``P(KS > eps) <= 1 - confidence`` for i.i.d. samples."""
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * count))


def modified_moments(p: JacobiParams, nu: StepDistribution, k: int,
                     quad: QuadratureSpec | None = None) -> float:
    """``M_k = int m_k dnu``."""
    return nu.expect(lambda x: moment_fn(p, k, x, quad))


def phase_moments(nu: StepDistribution, phase: Callable, kmax: int = 2) -> list:
    """``[int phase^j dnu for j = 1..kmax]`` by the step law's 1-D rule."""
    return [nu.expect(lambda x, j=j: np.asarray(phase(x)) ** j) for j in range(1, kmax + 1)]


@dataclass
class CltReport:
    name: str
    config: dict
    n_grid: list
    ks: list
    target: list
    moments: list
    checks: dict = field(default_factory=dict)
    rate_fit: dict | None = None
    extra: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    @property
    def ks_distance(self) -> float:
        return self.ks[-1]

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "config": self.config,
            "n_grid": self.n_grid,
            "ks_distance": self.ks,
            "target": self.target,
            "sample_moments": self.moments,
            "checks": self.checks,
            "passed": self.passed,
        }
        if self.rate_fit is not None:
            out["rate_fit"] = self.rate_fit
        out.update(self.extra)
        return out

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_samples_csv(self, path) -> None:
        """Normalized statistics, one column per n, header ``n=<steps>``."""
        cols = [self.samples[n] for n in self.n_grid]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"n={n}" for n in self.n_grid])
            for row in zip(*cols):
                w.writerow([repr(float(x)) for x in row])


def _sample_moments(x: np.ndarray) -> dict:
    e = EmpiricalDistribution.from_samples(x)
    return {"mean": float(np.mean(x)), "variance": float(np.var(x, ddof=1)) if x.size > 1 else 0.0,
            "std_error": float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0,
            "iqr": e.iqr, "count": int(x.size)}


def _config_echo(cfg: WalkConfig) -> dict:
    return {"alpha": cfg.params.alpha, "beta": cfg.params.beta, "nu": cfg.nu.to_dict(),
            "compression_exponent": cfg.compression_exponent, "replicas": cfg.replicas,
            "seed": cfg.seed}


def _with_steps(cfg: WalkConfig, n: int, params: JacobiParams | None = None) -> WalkConfig:
    return WalkConfig(params or cfg.params, cfg.nu, cfg.compression_exponent, int(n),
                      cfg.replicas, cfg.seed)


def _check_grid(n_grid) -> list:
    grid = [int(n) for n in n_grid]
    if not grid or any(n < 1 for n in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("n grid must be increasing positive integers")
    return grid


def _nondegenerate(nu: StepDistribution) -> None:
    if nu.is_zero:
        raise ConfigError("the step law must not be delta_0")


def _rate(grid, ks, slope_max) -> dict:
    slope, r2 = fit_exponent(grid, ks) if len(grid) >= 3 else (None, None)
    return {"slope": slope, "r2": r2, "slope_max": slope_max}


def clt_fixed_params(cfg: WalkConfig, n_grid: Sequence[int], ks_max: float = 0.02,
                     slope_max: float = -0.30, quad: QuadratureSpec | None = None,
                     threads: int | None = None, keep_samples: bool = False) -> CltReport:
    """``(S_n - n M_1)/sqrt(n) -> N(0, M_2 - M_1^2)`` for fixed parameters.

    Without compression one simulation to ``max(n_grid)`` serves the whole
    grid.
    """
    if cfg.compression_exponent != 0:
        raise ConfigError("the fixed-parameter CLT needs compression exponent 0")
    _nondegenerate(cfg.nu)
    grid = _check_grid(n_grid)
    m1 = modified_moments(cfg.params, cfg.nu, 1, quad)
    m2 = modified_moments(cfg.params, cfg.nu, 2, quad)
    var = m2 - m1 * m1
    if not var > 1e-12:
        raise ConfigError(f"limit variance M_2 - M_1^2 = {var:.3e} is not positive")
    law = LimitLaw.normal(0.0, var)
    res = simulate_walk(_with_steps(cfg, grid[-1]), threads=threads, checkpoints=grid)
    ks, moms, samples = [], [], {}
    for n in grid:
        stat = (res.checkpoints[n] - n * m1) / math.sqrt(n)
        ks.append(ks_distance(EmpiricalDistribution.from_samples(stat), law))
        moms.append(_sample_moments(stat))
        if keep_samples:
            samples[n] = stat
    rate = _rate(grid, ks, slope_max)
    rep = CltReport("fixed_params", _config_echo(cfg), grid, ks, [law.to_dict()] * len(grid),
                    moms, rate_fit=rate, samples=samples,
                    extra={"M1": m1, "M2": m2, "ks_max": ks_max})
    rep.checks["ks"] = ks[-1] <= ks_max
    if rate["slope"] is not None:
        rep.checks["rate"] = rate["slope"] <= slope_max
    return rep


def clt_rayleigh(cfg: WalkConfig, n_grid: Sequence[int], ks_max: float = 0.02,
                 threads: int | None = None, keep_samples: bool = False) -> CltReport:
    """``sqrt(2(alpha+1)/m_2) n^(r-1/2) S_n -> Rayleigh(alpha)`` for r > 1/2."""
    r = cfg.compression_exponent
    if not r > 0.5:
        raise ConfigError(f"the Rayleigh CLT needs r > 1/2, got {r}")
    _nondegenerate(cfg.nu)
    grid = _check_grid(n_grid)
    m2 = cfg.nu.moment(2)
    law = LimitLaw.rayleigh(cfg.params.alpha)
    ks, moms, samples = [], [], {}
    for n in grid:
        fin = simulate_walk(_with_steps(cfg, n), threads=threads).finals
        stat = math.sqrt(2.0 * (cfg.params.alpha + 1.0) / m2) * n ** (r - 0.5) * fin
        ks.append(ks_distance(EmpiricalDistribution.from_samples(stat), law))
        moms.append(_sample_moments(stat))
        if keep_samples:
            samples[n] = stat
    rep = CltReport("rayleigh", _config_echo(cfg), grid, ks, [law.to_dict()] * len(grid),
                    moms, samples=samples, extra={"m2": m2, "ks_max": ks_max})
    rep.checks["ks"] = ks[-1] <= ks_max
    return rep


def drift_constant(p: JacobiParams, nu: StepDistribution) -> float:
    """``-rho (alpha + 3 beta + 2) m_4 / (12 (alpha+1)(alpha+2))``; always negative."""
    a, b = p.alpha, p.beta
    return -p.rho * (a + 3 * b + 2) * nu.moment(4) / (12.0 * (a + 1) * (a + 2))


def select_regime(r: float) -> int:
    if not 0.0 < r < 0.5:
        raise ConfigError(f"the regime CLT needs r in (0, 1/2), got {r}")
    if abs(r - 1.0 / 6.0) <= REGIME_TOL:
        return 2
    return 1 if r > 1.0 / 6.0 else 3


def regime_statistic(finals: np.ndarray, n: int, r: float, p: JacobiParams,
                     nu: StepDistribution, case: int) -> np.ndarray:
    """Centred and scaled positions: cases 1 and 2 divide by ``n^(1/2-r)``,
    case 3 by ``n^(1-4r)``.  Centring is ``rho m_2 n^(1-2r) / (2(alpha+1))``."""
    centre = p.rho * nu.moment(2) * n ** (1.0 - 2.0 * r) / (2.0 * (p.alpha + 1.0))
    scale = n ** (1.0 - 4.0 * r) if case == 3 else n ** (0.5 - r)
    return (finals - centre) / scale


def regime_law(p: JacobiParams, nu: StepDistribution, case: int) -> LimitLaw:
    var = nu.moment(2) / (2.0 * (p.alpha + 1.0))
    if case == 1:
        return LimitLaw.normal(0.0, var)
    if case == 2:
        return LimitLaw.normal(drift_constant(p, nu), var)
    return LimitLaw.constant(drift_constant(p, nu))


def clt_regimes(cfg: WalkConfig, n_grid: Sequence[int], regime: int | str = "auto",
                ks_max: float = 0.02, bias_allowance: float = 0.01,
                threads: int | None = None, keep_samples: bool = False) -> CltReport:
    """The three regimes for ``r in (0, 1/2)`` with compact step laws.

    Case 1 passes on the KS distance at the largest n.  Cases 2 and 3 pass
    when the sample mean is within ``3 SE + bias_allowance`` of the drift
    constant; case 3 also needs the IQR to shrink along the grid.
    """
    r = cfg.compression_exponent
    auto = select_regime(r)
    case = auto if regime == "auto" else int(regime)
    if case not in (1, 2, 3):
        raise ConfigError(f"regime must be 1, 2, 3 or 'auto', got {regime!r}")
    if case != auto:
        raise ConfigError(f"r={r} belongs to regime {auto}, not {case}")
    _nondegenerate(cfg.nu)
    grid = _check_grid(n_grid)
    p, nu = cfg.params, cfg.nu
    law = regime_law(p, nu, case)
    drift = drift_constant(p, nu)
    ks, moms, samples = [], [], {}
    for n in grid:
        fin = simulate_walk(_with_steps(cfg, n), threads=threads).finals
        stat = regime_statistic(fin, n, r, p, nu, case)
        ks.append(ks_distance(EmpiricalDistribution.from_samples(stat), law))
        moms.append(_sample_moments(stat))
        if keep_samples:
            samples[n] = stat
    last = moms[-1]
    rep = CltReport(f"regime_{case}", _config_echo(cfg), grid, ks, [law.to_dict()] * len(grid),
                    moms, samples=samples,
                    extra={"regime": case, "drift_constant": drift, "ks_max": ks_max,
                           "bias_allowance": bias_allowance})
    rep.checks["drift_negative"] = drift < 0
    if case == 1:
        rep.checks["ks"] = ks[-1] <= ks_max
    else:
        tol = 3.0 * last["std_error"] + bias_allowance
        rep.extra["mean_tolerance"] = tol
        rep.checks["mean"] = abs(last["mean"] - drift) <= tol
    if case == 3:
        iqrs = [m["iqr"] for m in moms]
        rep.checks["iqr_decreasing"] = all(b < a for a, b in zip(iqrs, iqrs[1:]))
    return rep


def _growing_report(name: str, grid: list, schedule: Callable[[int], JacobiParams],
                    nu: StepDistribution, phase: Callable, replicas: int, seed: int,
                    ks_max: float, threads, keep_samples: bool, extra: dict) -> CltReport:
    _nondegenerate(nu)
    m1, m2 = phase_moments(nu, phase)
    var = m2 - m1 * m1
    if not var > 1e-12:
        raise ConfigError(
            f"limit variance m_2 - m_1^2 = {var:.3e} is not positive; a point-mass step law "
            "makes the phase deterministic")
    law = LimitLaw.normal(0.0, var)
    ks, moms, samples, params = [], [], {}, []
    for n in grid:
        p = schedule(n)
        params.append({"n": n, "alpha": p.alpha, "beta": p.beta})
        cfg = WalkConfig(p, nu, 0.0, n, replicas, seed)
        fin = simulate_walk(cfg, threads=threads).finals
        stat = (fin - n * m1) / math.sqrt(n)
        ks.append(ks_distance(EmpiricalDistribution.from_samples(stat), law))
        moms.append(_sample_moments(stat))
        if keep_samples:
            samples[n] = stat
    config = {"nu": nu.to_dict(), "replicas": replicas, "seed": seed, "schedule": params}
    config.update(extra)
    rep = CltReport(name, config, grid, ks, [law.to_dict()] * len(grid), moms, samples=samples,
                    extra={"m1": m1, "m2": m2, "ks_max": ks_max})
    rep.checks["ks"] = ks[-1] <= ks_max
    return rep


def power_schedule(coefficient: float, power: float) -> Callable[[int], float]:
    """``n -> coefficient * n^power``; ``n / value -> 0`` needs power > 1."""
    if not (coefficient > 0 and power > 1):
        raise ConfigError("a growing schedule needs coefficient > 0 and power > 1")
    return lambda n: coefficient * float(n) ** power


def clt_growing_alpha(beta: float, alpha_schedule: Callable[[int], float],
                      nu: StepDistribution, n_grid: Sequence[int], replicas: int, seed: int,
                      ks_max: float = 0.03, threads: int | None = None,
                      keep_samples: bool = False) -> CltReport:
    """``(S_n - n m_1)/sqrt(n) -> N(0, m_2 - m_1^2)`` with ``alpha_n`` growing
    faster than n and ``m_j = int (ln ch x)^j dnu``.  Each n is a fresh walk."""
    grid = _check_grid(n_grid)

    def phase(x):
        x = np.asarray(x, dtype=float)
        return x + np.log1p(np.exp(-2.0 * x)) - math.log(2.0)

    return _growing_report("growing_alpha", grid,
                           lambda n: JacobiParams(alpha_schedule(n), beta), nu, phase,
                           replicas, seed, ks_max, threads, keep_samples, {"beta": beta})


def clt_growing_coupled(c: float, d_shift: float, beta_schedule: Callable[[int], float],
                        nu: StepDistribution, n_grid: Sequence[int], replicas: int, seed: int,
                        ks_max: float = 0.03, threads: int | None = None,
                        keep_samples: bool = False) -> CltReport:
    """As :func:`clt_growing_alpha` along ``alpha_n = c beta_n + d_shift`` with
    the phase ``ln|ch x + (i/sqrt c) sh x|``."""
    if not (c > 1 and d_shift > 0):
        raise ConfigError("need c > 1 and d_shift > 0")
    grid = _check_grid(n_grid)

    def sched(n):
        b = beta_schedule(n)
        return JacobiParams(c * b + d_shift, b)

    return _growing_report("growing_coupled", grid, sched, nu, lambda x: coupled_phase(c, x),
                           replicas, seed, ks_max, threads, keep_samples,
                           {"c": c, "d_shift": d_shift})


def markov_tail_constant(p: JacobiParams, nu: StepDistribution,
                         quad: QuadratureSpec | None = None) -> float:
    """A constant M valid for every n in the tail bound.

    Additivity of m_1 under convolution gives ``E m_1(S_n) = n M_1(nu_c)``
    with ``c = n^-r``, and m_1 is increasing, so Markov's inequality yields
    ``P(S_n >= c') <= n M_1(nu_c) / m_1(c')``.  Hence
    ``M = sup_{0 < e <= 1} e^-2 int m_1(e x) dnu(x)`` works for all n, the
    ``e -> 0`` limit being ``rho m_2 / (2(alpha+1))``.
    """
    eps = np.geomspace(1e-3, 1.0, 61)
    vals = [modified_moments(p, compress(nu, e), 1, quad) / (e * e) for e in eps]
    return float(max(max(vals), p.rho * nu.moment(2) / (2.0 * (p.alpha + 1.0))))


def tail_bound_check(cfg: WalkConfig, c_grid: Sequence[float], n_grid: Sequence[int],
                     quad: QuadratureSpec | None = None, threads: int | None = None) -> dict:
    """Empirical ``P(S_n >= c) m_1(c) n^(2r-1)`` over a (c, n) grid.

    The fitted ``M`` is the largest product on the grid.  It is checked
    against the Markov constant of :func:`markov_tail_constant`, with three
    binomial standard errors of slack per grid point.
    """
    r = cfg.compression_exponent
    if not r > 0.5:
        raise ConfigError(f"the tail bound needs r > 1/2, got {r}")
    grid = _check_grid(n_grid)
    cs = sorted(float(c) for c in c_grid)
    if not cs or cs[0] <= 0:
        raise DomainError("c grid must be positive")
    m1c = np.asarray(moment_fn(cfg.params, 1, np.array(cs), quad))
    tails = np.empty((len(cs), len(grid)))
    for j, n in enumerate(grid):
        fin = simulate_walk(_with_steps(cfg, n), threads=threads).finals
        tails[:, j] = [np.mean(fin >= c) for c in cs]
    scale = m1c[:, None] * np.array([n ** (2 * r - 1) for n in grid])[None, :]
    prod = tails * scale
    se = np.sqrt(tails * (1 - tails) / cfg.replicas + 1.0 / cfg.replicas ** 2) * scale
    m_markov = markov_tail_constant(cfg.params, cfg.nu, quad)
    bounded = bool(np.all(prod <= m_markov + 3.0 * se))
    monotone = bool(np.all(np.diff(tails, axis=0) <= 0))
    finite = bool(np.all(np.isfinite(prod)))
    return {
        "name": "tail_bound",
        "config": _config_echo(cfg),
        "c_grid": cs,
        "n_grid": grid,
        "tail": tails.tolist(),
        "product": prod.tolist(),
        "M": float(prod.max()),
        "M_markov": m_markov,
        "checks": {"finite": finite, "below_markov_constant": bounded,
                   "tail_monotone_in_c": monotone},
        "passed": finite and bounded and monotone,
    }
