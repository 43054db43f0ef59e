"""Special functions: log-Gamma, incomplete Gamma, Gauss 2F1, normalized
Bessel functions and Jacobi functions.

Jacobi functions are available through two independent routes: the
hypergeometric series (``jacobi_phi_series``) and the Laplace-type double
integral against the measure ``m_{alpha,beta}`` (``jacobi_phi_integral``).
The statistical code only ever uses spectral values on the line
``lambda in i*rho + R``; other complex values are supported but less tested.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import TYPE_CHECKING

import mpmath
import numpy as np
from scipy import special

from .errors import ConvergenceError, DomainError, NumericOverflowError

if TYPE_CHECKING:
    from .hypergroup import QuadratureSpec

SERIES_RTOL = 1e-16
SERIES_MAX_TERMS = 10_000
# sh^2 t overflows a double shortly after this
T_MAX = 350.0
# below this |z| the plain series is used, above it the Pfaff transform
_PFAFF_SWITCH = 0.5
# transformed arguments above this would need > 3000 series terms
_SERIES_X_MAX = 0.99
# mpmath keeps its working precision in global state
_MP_LOCK = threading.Lock()
_MP_PARAM_FLOOR = 1e-20


@dataclass(frozen=True)
class JacobiParams:
    """Index ``(alpha, beta)`` of a Jacobi hypergroup on [0, inf).

    ``rho`` is always recomputed from ``alpha`` and ``beta``.
    """

    alpha: float
    beta: float

    def __post_init__(self):
        a, b = float(self.alpha), float(self.beta)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise DomainError(f"non-finite parameters alpha={a}, beta={b}")
        if not (a >= b >= -0.5 and a > -0.5):
            raise DomainError(
                f"need alpha >= beta >= -1/2 and alpha > -1/2, got alpha={a}, beta={b}"
            )
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def rho(self) -> float:
        return self.alpha + self.beta + 1.0


def _as_complex(value) -> complex:
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"non-finite complex argument {value!r}")
    return z


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    x = float(x)
    if not x > 0 or not math.isfinite(x):
        raise DomainError(f"log_gamma needs a finite x > 0, got {x}")
    return math.lgamma(x)


def reg_lower_inc_gamma(a: float, x):
    """Regularized lower incomplete gamma function P(a, x)."""
    if not a > 0:
        raise DomainError(f"reg_lower_inc_gamma needs a > 0, got {a}")
    xs = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(xs) & ~np.isposinf(xs)) or np.any(xs < 0):
        raise DomainError("reg_lower_inc_gamma needs x >= 0")
    out = special.gammainc(a, xs)
    return float(out) if out.ndim == 0 else out


def _neumaier_add(total, comp, term):
    """One step of Neumaier compensated summation on float arrays."""
    t = total + term
    big = np.abs(total) >= np.abs(term)
    comp = comp + np.where(big, (total - t) + term, (term - t) + total)
    return t, comp


def _hyp_series(a: complex, b: complex, c: float, x: np.ndarray) -> np.ndarray:
    """Sum 2F1(a, b; c; x) by its power series, x real with |x| < 1.

    Stops once three consecutive terms are below SERIES_RTOL relative to
    the running sum at every point.
    """
    x = np.asarray(x, dtype=float)
    re_s = np.ones_like(x)
    im_s = np.zeros_like(x)
    re_c = np.zeros_like(x)
    im_c = np.zeros_like(x)
    term = np.ones(x.shape, dtype=complex)
    small_run = np.zeros(x.shape, dtype=int)
    for k in range(SERIES_MAX_TERMS):
        term = term * ((a + k) * (b + k) / ((c + k) * (k + 1.0))) * x
        re_s, re_c = _neumaier_add(re_s, re_c, term.real)
        im_s, im_c = _neumaier_add(im_s, im_c, term.imag)
        scale = np.maximum(np.hypot(re_s, im_s), np.finfo(float).tiny)
        tiny = np.abs(term) <= SERIES_RTOL * scale
        small_run = np.where(tiny, small_run + 1, 0)
        if np.all(small_run >= 3):
            return (re_s + re_c) + 1j * (im_s + im_c)
        if not np.all(np.isfinite(term)):
            break
    raise ConvergenceError(
        "hypergeometric series did not converge",
        a=a, b=b, c=c, x=float(np.max(np.abs(x))), terms=SERIES_MAX_TERMS,
    )


def _hyp_mpmath(a: complex, b: complex, c: float, z: np.ndarray) -> np.ndarray:
    """2F1 at very negative z through mpmath's connection formulas, which
    also cover the logarithmic cases of integer parameter differences."""
    out = np.empty(z.shape, dtype=complex)
    # mpmath's cancellation detection stalls on parameters like 1e-226; F is
    # analytic in a, b with derivative O(ln|z|), so such components are zero here
    a, b = (complex(*(0.0 if abs(x) < _MP_PARAM_FLOOR else x for x in (v.real, v.imag)))
            for v in (complex(a), complex(b)))
    with _MP_LOCK, mpmath.workdps(25):
        ma, mb, mc = mpmath.mpc(a), mpmath.mpc(b), mpmath.mpf(c)
        for i, zi in np.ndenumerate(z):
            out[i] = complex(mpmath.hyp2f1(ma, mb, mc, mpmath.mpf(float(zi))))
    return out


def _check_c(c: float) -> float:
    c = float(c)
    if c <= 0 and c == math.floor(c):
        raise DomainError(f"2F1 lower parameter c={c} is a non-positive integer")
    return c


def _pfaff(a: complex, b: complex, c: float, z: np.ndarray, w: np.ndarray,
           log1mz: np.ndarray):
    """2F1(a,b;c;z) for z <= 0 given w = z/(z-1) and log(1-z).

    Of the two Pfaff forms the one whose transformed series decays fastest
    is used.  Points with w > 0.99 are handed to mpmath.
    """
    out = np.empty(z.shape, dtype=complex)
    hard = w > _SERIES_X_MAX
    if np.any(hard):
        out[hard] = _hyp_mpmath(a, b, c, z[hard])
    easy = ~hard
    if np.any(easy):
        if a.real >= b.real:
            pre, s = b, _hyp_series(c - a, b, c, w[easy])
        else:
            pre, s = a, _hyp_series(a, c - b, c, w[easy])
        out[easy] = np.exp(-pre * log1mz[easy]) * s
    return out


def gauss_2f1(a, b, c: float, z):
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z <= 0.

    The plain series is summed when |z| < 1/2; otherwise the Pfaff
    transformation z -> z/(z-1) maps the argument into [1/3, 1).  Mapped
    arguments above 0.99 (|z| > 99) go to mpmath, since the series would
    need thousands of terms there.
    """
    a, b = _as_complex(a), _as_complex(b)
    c = _check_c(c)
    zs = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(zs)) or np.any(zs > 0):
        raise DomainError("gauss_2f1 is implemented for finite z <= 0 only")
    out = np.empty(zs.shape, dtype=complex)
    near = zs > -_PFAFF_SWITCH
    if np.any(near):
        out[near] = _hyp_series(a, b, c, zs[near])
    far = ~near
    if np.any(far):
        zf = zs[far]
        out[far] = _pfaff(a, b, c, zf, zf / (zf - 1.0), np.log1p(-zf))
    return complex(out) if out.ndim == 0 else out


def _log_cosh(t):
    t = np.asarray(t, dtype=float)
    return t + np.log1p(np.exp(-2.0 * t)) - math.log(2.0)


def _check_t(t) -> np.ndarray:
    ts = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(ts)) or np.any(ts < 0):
        raise DomainError("t must be finite and >= 0")
    if np.any(ts > T_MAX):
        raise NumericOverflowError(
            f"t={float(np.max(ts))} exceeds the supported range t <= {T_MAX}"
        )
    return ts


def jacobi_phi_series(p: JacobiParams, lam, t):
    """Jacobi function phi_lambda^(alpha,beta)(t) from the 2F1 series.

    ``t`` may be an array; the result has the same shape.
    """
    lam = _as_complex(lam)
    ts = _check_t(t)
    rho = p.rho
    a = (rho - 1j * lam) / 2.0
    b = (rho + 1j * lam) / 2.0
    c = p.alpha + 1.0
    sh2 = np.sinh(ts) ** 2
    out = np.empty(ts.shape, dtype=complex)
    near = sh2 < _PFAFF_SWITCH
    if np.any(near):
        out[near] = _hyp_series(a, b, c, -sh2[near])
    far = ~near
    if np.any(far):
        tf = ts[far]
        out[far] = _pfaff(a, b, c, -sh2[far], np.tanh(tf) ** 2, 2.0 * _log_cosh(tf))
    return complex(out) if out.ndim == 0 else out


def jacobi_phi_integral(p: JacobiParams, lam, t: float, quad: "QuadratureSpec | None" = None,
                        tol: float = 1e-10, max_order: int = 1024) -> complex:
    """Jacobi function via its Laplace-type integral against ``m_{alpha,beta}``.

    The quadrature order is doubled from ``quad`` until two successive
    estimates agree to ``tol``.  Because phi is even in lambda the sign of
    lambda giving the smaller real exponent is integrated.
    """
    from .hypergroup import QuadratureSpec, log_modulus, measure_nodes

    lam = _as_complex(lam)
    t = float(_check_t(t))
    quad = quad if quad is not None else QuadratureSpec()
    if min(quad.order_r, quad.order_phi) < 8:
        raise DomainError("quadrature order must be at least 8")
    if t == 0.0:
        return 1.0 + 0.0j
    rho = p.rho
    expo = min((1j * lam - rho, -1j * lam - rho), key=lambda e: abs(e.real))

    def estimate(q):
        nodes = measure_nodes(p, q)
        ell = log_modulus(t, nodes.u, nodes.v, nodes.one_plus_u)
        return complex(np.sum(nodes.weights * np.exp(expo * ell)))

    value = estimate(quad)
    while True:
        finer = quad.doubled()
        better = estimate(finer)
        resid = abs(better - value)
        if resid <= tol:
            return better
        if max(finer.order_r, finer.order_phi) >= max_order:
            raise ConvergenceError(
                "Laplace integral did not converge", alpha=p.alpha, beta=p.beta,
                lam=lam, t=t, residual=resid,
            )
        quad, value = finer, better


def bessel_j(alpha: float, t):
    """Normalized Bessel function j_alpha(t) = 0F1(alpha+1; -t^2/4)."""
    if not alpha > -0.5:
        raise DomainError(f"bessel_j needs alpha > -1/2, got {alpha}")
    ts = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(ts)) or np.any(ts < 0):
        raise DomainError("bessel_j needs finite t >= 0")
    out = np.empty(ts.shape)
    small = ts <= 2.0
    if np.any(small):
        x = -(ts[small] / 2.0) ** 2
        term = np.ones_like(x)
        acc = np.ones_like(x)
        for n in range(60):
            term = term * x / ((n + 1.0) * (alpha + n + 1.0))
            acc += term
            if np.all(np.abs(term) < 1e-17):
                break
        out[small] = acc
    big = ~small
    if np.any(big):
        tb = ts[big]
        scale = np.exp(special.gammaln(alpha + 1.0) + alpha * np.log(2.0 / tb))
        out[big] = scale * special.jv(alpha, tb)
    return float(out) if out.ndim == 0 else out
