"""The Jacobi convolution on [0, inf).

Everything here is built on the probability measure ``m_{alpha,beta}`` on
the upper half of the closed unit disk, written in polar coordinates
``w = r e^{i phi}``.  The point convolution ``delta_s * delta_t`` is the
image of this measure under ``w -> arcosh|ch s ch t + w sh s sh t|``.

Quadrature is done in the Cartesian coordinates ``u = r cos phi`` and
``s = v^2 / (1 - u^2)`` (``v = r sin phi``), in which the measure is a
product of two Jacobi weights:

    (1 - u^2)^(alpha - 1/2) du  x  (1 - s)^(alpha - beta - 1) s^(beta - 1/2) ds.

Gauss-Jacobi rules for these weights absorb the endpoint singularities of
the density exactly.  For large t the integrands concentrate at ``w = -1``
on a scale ``e^{-2t}``; the substitutions ``1 + u = 2y^q`` and ``s = y^q``
spread that corner out before the rule is applied.  The two degenerate parameter cases collapse one factor: for
``beta = -1/2`` the mass sits on ``s = 0`` (the real diameter) and for
``alpha = beta`` on ``s = 1`` (the unit half circle).
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special

from .errors import DomainError, QuadratureWarning
from .sampling import RandomSource, beta_pair
from .specfun import JacobiParams, _check_t

MOMENT_RTOL = 1e-9


class MeasureKind(enum.Enum):
    GENERIC = "generic"
    BETA_DEGENERATE = "beta_degenerate"
    ALPHA_EQUALS_BETA = "alpha_equals_beta"


def measure_kind(p: JacobiParams) -> MeasureKind:
    if p.alpha == p.beta:
        return MeasureKind.ALPHA_EQUALS_BETA
    if p.beta == -0.5:
        return MeasureKind.BETA_DEGENERATE
    return MeasureKind.GENERIC


@dataclass(frozen=True)
class AngularRadialPoint:
    """A point ``(r, phi)`` of [0,1] x [0,pi]; values within 1e-15 of the
    box are clamped onto it."""

    r: float
    phi: float

    def __post_init__(self):
        r, phi = float(self.r), float(self.phi)
        eps = 1e-15
        if not (-eps <= r <= 1 + eps and -eps <= phi <= math.pi + eps):
            raise DomainError(f"({r}, {phi}) lies outside [0,1] x [0,pi]")
        object.__setattr__(self, "r", min(max(r, 0.0), 1.0))
        object.__setattr__(self, "phi", min(max(phi, 0.0), math.pi))


@dataclass(frozen=True)
class QuadratureSpec:
    """Orders of the tensor Gauss-Jacobi rule.

    ``order_phi`` nodes run along ``u = r cos phi`` and ``order_r`` nodes
    along the transverse coordinate ``s``.  ``grading`` is the exponent q
    of the substitutions ``1 + u = 2 y^q`` and ``s = y^q`` that cluster
    nodes at ``w = -1``, where the convolution integrands peak for large t.
    """

    order_r: int = 48
    order_phi: int = 48
    grading: int = 3

    def __post_init__(self):
        if self.order_r < 8 or self.order_phi < 8:
            raise DomainError("quadrature orders must be >= 8")
        if self.grading < 1:
            raise DomainError("grading exponent must be >= 1")

    def doubled(self) -> "QuadratureSpec":
        return QuadratureSpec(2 * self.order_r, 2 * self.order_phi, self.grading)


@dataclass(frozen=True)
class MeasureNodes:
    """Quadrature nodes of ``m_{alpha,beta}`` with weights summing to 1."""

    u: np.ndarray
    v: np.ndarray
    one_plus_u: np.ndarray
    weights: np.ndarray

    @property
    def r(self) -> np.ndarray:
        return np.minimum(np.hypot(self.u, self.v), 1.0)

    @property
    def phi(self) -> np.ndarray:
        return np.arctan2(self.v, self.u)


@lru_cache(maxsize=128)
def _graded_rule(n: int, a: float, b: float, q: int):
    """Rule for the probability density proportional to
    ``(1 - x)^a x^b`` on [0, 1], in the variable ``x = y^q``.

    Returns ``(x, 1 - x, weights)``.  The weights carry the analytic
    normalization, so they sum to 1 only up to quadrature error.
    """
    bb = q * (b + 1.0) - 1.0
    xi, wi = special.roots_jacobi(n, a, bb)
    y = (1.0 + xi) / 2.0
    one_minus_y = (1.0 - xi) / 2.0
    # 1 - y^q = (1 - y) * G(y),  G = 1 + y + ... + y^(q-1)
    g = np.polyval(np.ones(q), y)
    x = y ** q
    one_minus_x = one_minus_y * g
    log_c = (special.gammaln(a + b + 2.0) - special.gammaln(a + 1.0)
             - special.gammaln(b + 1.0) + math.log(q) - (a + bb + 1.0) * math.log(2.0))
    with np.errstate(divide="ignore"):
        w = wi * np.exp(log_c + a * np.log(g))
    return x, one_minus_x, w


@lru_cache(maxsize=64)
def measure_nodes(p: JacobiParams, quad: QuadratureSpec) -> MeasureNodes:
    q = quad.grading
    half = p.alpha - 0.5
    # (1 + u)/2 has density prop. to x^(alpha-1/2) (1-x)^(alpha-1/2)
    x, one_minus_x, wu = _graded_rule(quad.order_phi, half, half, q)
    one_plus_u = 2.0 * x
    one_minus_u = 2.0 * one_minus_x
    u = one_plus_u - 1.0
    kind = measure_kind(p)
    if kind is MeasureKind.BETA_DEGENERATE:
        return MeasureNodes(u, np.zeros_like(u), one_plus_u, wu)
    if kind is MeasureKind.ALPHA_EQUALS_BETA:
        return MeasureNodes(u, np.sqrt(one_minus_u * one_plus_u), one_plus_u, wu)
    s, _, ws = _graded_rule(quad.order_r, p.alpha - p.beta - 1.0, p.beta - 0.5, q)
    v = np.sqrt(np.outer(one_minus_u * one_plus_u, s))
    shape = v.shape
    return MeasureNodes(
        np.broadcast_to(u[:, None], shape).ravel(),
        v.ravel(),
        np.broadcast_to(one_plus_u[:, None], shape).ravel(),
        np.outer(wu, ws).ravel(),
    )


def _log_norm_generic(p: JacobiParams) -> float:
    a, b = p.alpha, p.beta
    return (math.log(2.0) + math.lgamma(a + 1.0) - math.lgamma(0.5)
            - math.lgamma(a - b) - math.lgamma(b + 0.5))


def measure_density(p: JacobiParams, x: AngularRadialPoint) -> float:
    """Density of ``m_{alpha,beta}`` with respect to ``dr dphi``.

    Only the generic case ``alpha > beta > -1/2`` has a density; the
    degenerate cases are a one-dimensional density times an atom.
    """
    if measure_kind(p) is not MeasureKind.GENERIC:
        raise DomainError(
            f"m_(alpha,beta) has no planar density for alpha={p.alpha}, beta={p.beta}; "
            "use integrate_m, which handles the one-dimensional forms"
        )
    a, b = p.alpha, p.beta
    r, phi = x.r, x.phi
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (np.float64(1.0 - r * r) ** (a - b - 1.0)
               * np.float64(r) ** (2.0 * b + 1.0)
               * np.float64(math.sin(phi)) ** (2.0 * b))
    return float(math.exp(_log_norm_generic(p)) * val)


def integrate_m(p: JacobiParams, f: Callable, quad: QuadratureSpec | None = None):
    """Integral of ``f(r, phi)`` against ``m_{alpha,beta}``.

    ``f`` receives arrays of node coordinates and must return an array of
    the same length (real or complex).
    """
    nodes = measure_nodes(p, quad or QuadratureSpec())
    vals = np.asarray(f(nodes.r, nodes.phi))
    return np.sum(nodes.weights * vals)


def expect_disk(p: JacobiParams, g: Callable, quad: QuadratureSpec | None = None):
    """Like ``integrate_m`` but ``g(u, v, one_plus_u)`` sees the Cartesian
    coordinates of ``w`` directly (and ``1 + u`` without cancellation)."""
    nodes = measure_nodes(p, quad or QuadratureSpec())
    vals = np.asarray(g(nodes.u, nodes.v, nodes.one_plus_u))
    return np.sum(nodes.weights * vals, axis=-1)


def sample_disk(p: JacobiParams, rng: RandomSource, size: int):
    """Exact draws of ``w = u + iv`` from ``m_{alpha,beta}``.

    Returns ``(u, v, 1 + u)``.  Generic case: ``r^2 ~ Beta(beta+1, alpha-beta)``
    and ``(1 - cos phi)/2 ~ Beta(beta+1/2, beta+1/2)``, independent.
    """
    a, b = p.alpha, p.beta
    kind = measure_kind(p)
    if kind is MeasureKind.ALPHA_EQUALS_BETA:
        h1, h2 = beta_pair(rng, a + 0.5, a + 0.5, size)
        # cos phi = 1 - 2 h1 = h2 - h1, sin phi = 2 sqrt(h1 h2)
        return h2 - h1, 2.0 * np.sqrt(h1 * h2), 2.0 * h2
    if kind is MeasureKind.BETA_DEGENERATE:
        uu, one_minus_uu = beta_pair(rng, 0.5, a + 0.5, size)
        r = np.sqrt(uu)
        sign = np.where(rng.random(size) < 0.5, 1.0, -1.0)
        one_minus_r = one_minus_uu / (1.0 + r)
        one_plus_u = np.where(sign > 0, 1.0 + r, one_minus_r)
        return sign * r, np.zeros(size), one_plus_u
    uu, one_minus_uu = beta_pair(rng, b + 1.0, a - b, size)
    h1, h2 = beta_pair(rng, b + 0.5, b + 0.5, size)
    r = np.sqrt(uu)
    one_minus_r = one_minus_uu / (1.0 + r)
    cos_phi = h2 - h1
    sin_phi = 2.0 * np.sqrt(h1 * h2)
    return r * cos_phi, r * sin_phi, one_minus_r + r * (2.0 * h2)


def sample_m(p: JacobiParams, rng: RandomSource, size: int | None = None):
    """Exact draw(s) of ``(r, phi)`` from ``m_{alpha,beta}``.

    With ``size=None`` a single ``AngularRadialPoint`` is returned,
    otherwise a pair of arrays ``(r, phi)``.
    """
    n = 1 if size is None else size
    u, v, _ = sample_disk(p, rng, n)
    r = np.minimum(np.hypot(u, v), 1.0)
    phi = np.arctan2(v, u)
    if size is None:
        return AngularRadialPoint(float(r[0]), float(phi[0]))
    return r, phi


def log_modulus(t, u, v, one_plus_u):
    """``ln|ch t + w sh t|`` for ``w = u + iv`` in the closed unit disk.

    Uses ``ch t + u sh t = e^{-t} + (1+u) sh t`` so nothing cancels near
    ``w = -1``, and a scaled form for large ``t``.
    """
    t = np.asarray(t, dtype=float)
    u, v, one_plus_u = np.asarray(u), np.asarray(v), np.asarray(one_plus_u)
    if np.ndim(t) == 0 and float(t) < 0.5:
        sh, ch = math.sinh(float(t)), math.cosh(float(t))
        arg = sh * sh * (1.0 + u * u + v * v) + 2.0 * u * sh * ch
        return 0.5 * np.log1p(arg)
    e2 = np.exp(-2.0 * t)
    h = -0.5 * np.expm1(-2.0 * t)
    big = t + np.log(np.hypot(e2 + one_plus_u * h, v * h))
    if np.ndim(t) == 0:
        return big
    small_t = t < 0.5
    if np.any(small_t):
        sh, ch = np.sinh(t), np.cosh(t)
        arg = sh * sh * (1.0 + u * u + v * v) + 2.0 * u * sh * ch
        big = np.where(small_t, 0.5 * np.log1p(np.where(small_t, arg, 0.0)), big)
    return big


# (sh s sh t)^2 stays finite below this
_DIRECT_LIMIT = 300.0


def convolve_distance(s, t, u, v, one_plus_u):
    """``arcosh|ch s ch t + w sh s sh t|`` evaluated stably.

    For moderate ``s + t`` this works with ``X - 1`` where
    ``X = ch s ch t + u sh s sh t`` and
    ``X - 1 = 2 sh^2((s-t)/2) + (1+u) sh s sh t`` (a sum of nonnegative
    terms).  For large ``s + t`` a logarithmic form is used.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    u, v, one_plus_u = np.asarray(u), np.asarray(v), np.asarray(one_plus_u)
    tot = s + t
    direct = tot <= _DIRECT_LIMIT
    out = np.empty(np.broadcast(s, t, u, v, one_plus_u).shape)
    if np.all(direct):
        out[...] = _distance_direct(s, t, v, one_plus_u)
    else:
        sb, tb, vb, opb = np.broadcast_arrays(s, t, v, one_plus_u)
        d = np.broadcast_to(direct, out.shape)
        out[d] = _distance_direct(sb[d], tb[d], vb[d], opb[d])
        far = ~d
        out[far] = _distance_log(sb[far], tb[far], vb[far], opb[far])
    # the unit element: exact pass-through
    out = np.where(s == 0.0, t, out)
    out = np.where(t == 0.0, s, out)
    return out


def _distance_direct(s, t, v, one_plus_u):
    shs, sht = np.sinh(s), np.sinh(t)
    prod = shs * sht
    xm1 = 2.0 * np.sinh(0.5 * (s - t)) ** 2 + one_plus_u * prod
    xm1 = np.maximum(xm1, 0.0)
    y = v * prod
    x = 1.0 + xm1
    q = np.hypot(x, y)
    # Q - 1 = (X - 1) + y^2 / (Q + X),  sqrt(Q^2 - 1) = hypot(sqrt((X-1)(X+1)), y)
    qm1 = xm1 + y * y / (q + x)
    root = np.hypot(np.sqrt(xm1 * (x + 1.0)), y)
    return np.log1p(qm1 + root)


def _distance_log(s, t, v, one_plus_u):
    a = np.exp(-2.0 * s)
    b = np.exp(-2.0 * t)
    cross = np.expm1(-2.0 * s) * np.expm1(-2.0 * t)
    # |ch s ch t + w sh s sh t| = e^{s+t}|P|/4 with
    # P = (1+a)(1+b) + w(1-a)(1-b),  Re P = 2(a+b) + (1+u)(1-a)(1-b)
    re = 2.0 * (a + b) + one_plus_u * cross
    im = v * cross
    log_q = s + t - math.log(4.0) + np.log(np.hypot(re, im))
    return log_q + np.log1p(np.sqrt(-np.expm1(-2.0 * log_q)))


def convolve_sample(p: JacobiParams, s, t, rng: RandomSource, size: int | None = None):
    """Draw(s) from ``delta_s * delta_t``."""
    n = 1 if size is None else size
    u, v, opu = sample_disk(p, rng, n)
    z = convolve_distance(s, t, u, v, opu)
    return float(z[0]) if size is None else z


def convolve_point_expect(p: JacobiParams, s: float, t: float, f: Callable,
                          quad: QuadratureSpec | None = None):
    """``int f d(delta_s * delta_t)`` by quadrature over ``m_{alpha,beta}``."""
    _check_t(np.array([s, t]))
    if s == 0.0:
        return f(np.array([float(t)]))[0]
    if t == 0.0:
        return f(np.array([float(s)]))[0]
    nodes = measure_nodes(p, quad or QuadratureSpec())
    z = convolve_distance(s, t, nodes.u, nodes.v, nodes.one_plus_u)
    return np.sum(nodes.weights * np.asarray(f(z)))


def _moment_raw(p: JacobiParams, k: int, t: np.ndarray, quad: QuadratureSpec) -> np.ndarray:
    nodes = measure_nodes(p, quad)
    out = np.empty(t.shape)
    for i, ti in enumerate(t):
        ell = log_modulus(float(ti), nodes.u, nodes.v, nodes.one_plus_u)
        out[i] = np.dot(nodes.weights, ell ** k)
    return out


def moment_fn(p: JacobiParams, k: int, t, quad: QuadratureSpec | None = None,
              check: bool = True):
    """Moment function ``m_k(t) = int (ln|ch t + w sh t|)^k dm_{alpha,beta}(w)``.

    For ``alpha = beta`` the identity ``m_k^(a,a)(t) = 2^-k m_k^(a,-1/2)(2t)``
    is used.  With ``check`` the order is doubled once and a
    ``QuadratureWarning`` is issued if the two estimates differ by more
    than ``MOMENT_RTOL`` (relative to ``max(1, |m_k|)``).
    """
    if int(k) != k or k < 1:
        raise DomainError(f"moment order must be a positive integer, got {k}")
    k = int(k)
    ts = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(ts)) or np.any(ts < 0):
        raise DomainError("t must be finite and >= 0")
    quad = quad or QuadratureSpec()
    flat = np.atleast_1d(ts).ravel()
    if measure_kind(p) is MeasureKind.ALPHA_EQUALS_BETA:
        half = JacobiParams(p.alpha, -0.5)
        return _scale_out(
            moment_fn(half, k, 2.0 * ts, quad, check) * 2.0 ** (-k), ts)
    val = _moment_raw(p, k, flat, quad)
    if check:
        finer = _moment_raw(p, k, flat, quad.doubled())
        resid = np.max(np.abs(finer - val) / np.maximum(1.0, np.abs(finer)))
        if resid > MOMENT_RTOL:
            warnings.warn(
                f"moment function m_{k} quadrature residual {resid:.2e} "
                f"(alpha={p.alpha}, beta={p.beta}, t_max={flat.max():g})",
                QuadratureWarning, stacklevel=2,
            )
        val = finer
    return _scale_out(val.reshape(ts.shape), ts)


def _scale_out(val, ts):
    return float(val) if np.ndim(ts) == 0 else val


def limit_offset(p: JacobiParams) -> float:
    """``lim_{t->inf} (t - m_1(t)) = ln 2 + (psi(alpha+1) - psi(rho))/2``.

    Follows from ``m_1(t) = t - ln 2 + E ln|1 + w| + o(1)`` and the
    Harish-Chandra expansion of phi near ``lambda = -i rho``.
    """
    return math.log(2.0) + 0.5 * (special.digamma(p.alpha + 1.0) - special.digamma(p.rho))


__all__ = [
    "AngularRadialPoint", "MeasureKind", "MeasureNodes", "QuadratureSpec",
    "convolve_distance", "convolve_point_expect", "convolve_sample", "expect_disk",
    "integrate_m", "limit_offset", "log_modulus", "measure_density", "measure_kind",
    "measure_nodes", "moment_fn", "sample_disk", "sample_m",
]
