"""Step laws, compression and simulation of Jacobi random walks.

A walk starts at 0 and moves by ``S_{m+1} ~ delta_{S_m} * nu_c`` where
``nu_c`` is the step law compressed by ``c = n^-r``.  Replicas are grouped
into fixed-size blocks; block ``j`` draws from the stream ``(seed, j)``,
so results do not depend on how many worker threads run the blocks.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DomainError, NumericOverflowError
from .hypergroup import convolve_distance, sample_disk
from .sampling import RandomSource, stream
from .specfun import JacobiParams

BLOCK_SIZE = 4096
THREADS_ENV = "JACOBIWALK_THREADS"
_STEP_QUAD_ORDER = 64

ATOMS = "atoms"
UNIFORM = "uniform"
TRUNC_EXP = "truncated_exponential"


@dataclass(frozen=True)
class StepDistribution:
    """A step law on [0, inf) with an exact sampler.

    Build instances with :meth:`atoms`, :meth:`uniform` or
    :meth:`truncated_exponential` rather than the raw constructor.
    """

    kind: str
    points: tuple = ()
    weights: tuple = ()
    low: float = 0.0
    high: float = 0.0
    rate: float = 0.0
    cap: float = 0.0

    @classmethod
    def atoms(cls, points: Sequence[float], weights: Sequence[float] | None = None):
        pts = tuple(float(x) for x in points)
        if not pts:
            raise DomainError("an atomic step law needs at least one atom")
        if weights is None:
            wts = tuple(1.0 / len(pts) for _ in pts)
        else:
            wts = tuple(float(w) for w in weights)
        if len(wts) != len(pts):
            raise DomainError("atoms and weights differ in length")
        if any(not (math.isfinite(x) and x >= 0) for x in pts):
            raise DomainError("atoms must be finite and >= 0")
        if any(not (math.isfinite(w) and w > 0) for w in wts):
            raise DomainError("atom weights must be > 0")
        if abs(math.fsum(wts) - 1.0) > 1e-12:
            raise DomainError(f"atom weights sum to {math.fsum(wts)!r}, not 1")
        return cls(ATOMS, points=pts, weights=wts)

    @classmethod
    def point(cls, a: float):
        return cls.atoms([a], [1.0])

    @classmethod
    def uniform(cls, low: float, high: float):
        low, high = float(low), float(high)
        if not (math.isfinite(low) and math.isfinite(high) and 0 <= low < high):
            raise DomainError(f"uniform step law needs 0 <= low < high, got ({low}, {high})")
        return cls(UNIFORM, low=low, high=high)

    @classmethod
    def truncated_exponential(cls, rate: float, cap: float):
        rate, cap = float(rate), float(cap)
        if not (math.isfinite(rate) and rate > 0 and math.isfinite(cap) and cap > 0):
            raise DomainError("truncated exponential needs rate > 0 and cap > 0")
        return cls(TRUNC_EXP, rate=rate, cap=cap)

    # -- descriptive ------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        """True for the unit law ``delta_0``."""
        return self.kind == ATOMS and all(x == 0.0 for x in self.points)

    @property
    def support_max(self) -> float:
        if self.kind == ATOMS:
            return max(self.points)
        if self.kind == UNIFORM:
            return self.high
        return self.cap

    def nodes(self):
        """Points and probabilities of a rule integrating against the law.

        Exact for atoms; a Gauss-Legendre rule of order 64 otherwise.
        """
        if self.kind == ATOMS:
            return np.array(self.points), np.array(self.weights)
        x, w = np.polynomial.legendre.leggauss(_STEP_QUAD_ORDER)
        lo, hi = (self.low, self.high) if self.kind == UNIFORM else (0.0, self.cap)
        pts = lo + (hi - lo) * (x + 1.0) / 2.0
        if self.kind == UNIFORM:
            return pts, w / 2.0
        dens = self.rate * np.exp(-self.rate * pts) / -math.expm1(-self.rate * self.cap)
        return pts, w * dens * (hi - lo) / 2.0

    def expect(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        pts, w = self.nodes()
        return float(np.dot(w, f(pts)))

    def moment(self, k: int) -> float:
        """Raw moment ``int x^k dnu``, in closed form."""
        if self.kind == ATOMS:
            return math.fsum(w * x ** k for x, w in zip(self.points, self.weights))
        if self.kind == UNIFORM:
            a, b = self.low, self.high
            return (b ** (k + 1) - a ** (k + 1)) / ((k + 1) * (b - a))
        # int_0^cap x^k lam e^{-lam x} dx = k!/lam^k * P(k+1, lam cap)
        from .specfun import reg_lower_inc_gamma
        lam, cap = self.rate, self.cap
        full = math.factorial(k) / lam ** k * reg_lower_inc_gamma(k + 1.0, lam * cap)
        return full / -math.expm1(-lam * cap)

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == ATOMS:
            pts, w = np.array(self.points), np.array(self.weights)
            return np.sum(w * (pts <= x[..., None]), axis=-1)
        if self.kind == UNIFORM:
            return np.clip((x - self.low) / (self.high - self.low), 0.0, 1.0)
        xc = np.clip(x, 0.0, self.cap)
        return np.expm1(-self.rate * xc) / math.expm1(-self.rate * self.cap)

    def sample(self, rng: RandomSource, size: int) -> np.ndarray:
        """Exact draws: binary search in the cumulative weights for atoms,
        inverse CDF for the parametric kinds."""
        if self.kind == ATOMS:
            if len(self.points) == 1:
                return np.full(size, self.points[0])
            cum = np.cumsum(self.weights)
            idx = np.searchsorted(cum, rng.random(size) * cum[-1], side="right")
            return np.array(self.points)[np.minimum(idx, len(self.points) - 1)]
        u = rng.random(size)
        if self.kind == UNIFORM:
            return self.low + (self.high - self.low) * u
        return -np.log1p(u * math.expm1(-self.rate * self.cap)) / self.rate

    def to_dict(self) -> dict:
        if self.kind == ATOMS:
            return {"kind": ATOMS, "points": list(self.points), "weights": list(self.weights)}
        if self.kind == UNIFORM:
            return {"kind": UNIFORM, "low": self.low, "high": self.high}
        return {"kind": TRUNC_EXP, "rate": self.rate, "cap": self.cap}

    @classmethod
    def from_dict(cls, d: dict) -> "StepDistribution":
        kind = d.get("kind")
        if kind == ATOMS:
            return cls.atoms(d["points"], d.get("weights"))
        if kind == UNIFORM:
            return cls.uniform(d["low"], d["high"])
        if kind == TRUNC_EXP:
            return cls.truncated_exponential(d["rate"], d["cap"])
        raise ConfigError(f"unknown step law kind {kind!r}")


def compress(nu: StepDistribution, c: float) -> StepDistribution:
    """Image of ``nu`` under ``x -> c x``."""
    c = float(c)
    if not 0.0 < c <= 1.0:
        raise DomainError(f"compression factor must lie in (0, 1], got {c}")
    if c == 1.0:
        return nu
    if nu.kind == ATOMS:
        return StepDistribution(ATOMS, points=tuple(c * x for x in nu.points), weights=nu.weights)
    if nu.kind == UNIFORM:
        return StepDistribution(UNIFORM, low=c * nu.low, high=c * nu.high)
    return StepDistribution(TRUNC_EXP, rate=nu.rate / c, cap=c * nu.cap)


@dataclass(frozen=True)
class HyperbolicSpaceSpec:
    """Rank-one hyperbolic space over the reals (d=1), complexes (d=2) or
    quaternions (d=4), of dimension k over that field."""

    field_dim: int
    k: int

    def __post_init__(self):
        if self.field_dim not in (1, 2, 4):
            raise DomainError(f"field dimension must be 1, 2 or 4, got {self.field_dim}")
        if int(self.k) != self.k or self.k < 2:
            raise DomainError(f"k must be an integer >= 2, got {self.k}")


def hyperbolic_params(h: HyperbolicSpaceSpec) -> JacobiParams:
    return JacobiParams(h.field_dim * h.k / 2.0 - 1.0, h.field_dim / 2.0 - 1.0)


def sample_step(nu: StepDistribution, rng: RandomSource, size: int | None = None):
    out = nu.sample(rng, 1 if size is None else size)
    return float(out[0]) if size is None else out


@dataclass(frozen=True)
class WalkConfig:
    params: JacobiParams
    nu: StepDistribution
    compression_exponent: float
    steps: int
    replicas: int
    seed: int

    def __post_init__(self):
        r = float(self.compression_exponent)
        if not (math.isfinite(r) and r >= 0):
            raise DomainError(f"compression exponent must be >= 0, got {r}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise DomainError(f"steps must be a positive integer, got {self.steps}")
        if int(self.replicas) != self.replicas or self.replicas < 1:
            raise DomainError(f"replicas must be a positive integer, got {self.replicas}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    @property
    def compression(self) -> float:
        return float(self.steps) ** (-self.compression_exponent)

    def step_law(self) -> StepDistribution:
        return compress(self.nu, self.compression)


@dataclass
class WalkResult:
    finals: np.ndarray
    checkpoints: dict = field(default_factory=dict)
    paths: np.ndarray | None = None


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
        if n < 1:
            raise ConfigError(f"{THREADS_ENV} must be >= 1")
        return n
    return os.cpu_count() or 1


def _run_block(p: JacobiParams, law: StepDistribution, steps: int, size: int,
               rng: RandomSource, marks: Sequence[int], keep_paths: bool):
    pos = np.zeros(size)
    snaps = {}
    path = np.empty((size, steps + 1)) if keep_paths else None
    if keep_paths:
        path[:, 0] = 0.0
    for m in range(1, steps + 1):
        step = law.sample(rng, size)
        u, v, opu = sample_disk(p, rng, size)
        pos = convolve_distance(pos, step, u, v, opu)
        if keep_paths:
            path[:, m] = pos
        if m in marks:
            snaps[m] = pos.copy()
    return pos, snaps, path


def simulate_walk(cfg: WalkConfig, threads: int | None = None,
                  checkpoints: Sequence[int] = (), keep_paths: bool = False) -> WalkResult:
    """Run ``cfg.replicas`` independent walks of ``cfg.steps`` steps.

    ``checkpoints`` lists intermediate step counts whose positions are
    kept as well; they are meaningful as walks of that length only when
    the compression exponent is 0.
    """
    marks = sorted({int(m) for m in checkpoints})
    if marks and (marks[0] < 1 or marks[-1] > cfg.steps):
        raise DomainError("checkpoints must lie in [1, steps]")
    if marks and cfg.compression_exponent != 0:
        raise DomainError("checkpoints need compression exponent 0")
    law = cfg.step_law()
    nblocks = -(-cfg.replicas // BLOCK_SIZE)

    def job(j):
        size = min(BLOCK_SIZE, cfg.replicas - j * BLOCK_SIZE)
        return _run_block(cfg.params, law, cfg.steps, size, stream(cfg.seed, j), marks, keep_paths)

    threads = threads or default_threads()
    if threads == 1 or nblocks == 1:
        parts = [job(j) for j in range(nblocks)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(job, range(nblocks)))
    finals = np.concatenate([pt[0] for pt in parts])
    bad = np.flatnonzero(~np.isfinite(finals))
    if bad.size:
        raise NumericOverflowError(f"walk position overflowed in replica {int(bad[0])}")
    snaps = {m: np.concatenate([pt[1][m] for pt in parts]) for m in marks}
    paths = np.concatenate([pt[2] for pt in parts]) if keep_paths else None
    return WalkResult(finals, snaps, paths)


def write_finals_csv(path, finals: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["final_position"])
        for x in finals:
            w.writerow([repr(float(x))])


def read_finals_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["final_position"]:
        raise ConfigError(f"{path}: expected header 'final_position'")
    return np.array([float(r[0]) for r in rows[1:]])
