"""Special functions and quadrature used by the propagator and the
trajectory solvers.

``bessel_i`` / ``bessel_ie`` evaluate the modified Bessel function of the
first kind for real order nu >= 0: the ascending series below a crossover
argument, the large-argument (Hankel) expansion above it.  Both branches
work in scaled form e^{-z} I_nu(z) so nothing overflows before the final
rescaling.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import DomainError


class ConvergenceError(RuntimeError):
    """An iterative numerical method did not reach its tolerance."""


# z <= max(BESSEL_CROSSOVER, nu^2/2) uses the series.  At z = 25 the
# truncated Hankel expansion is accurate to ~e^{-2z}; below ~15 it is not.
BESSEL_CROSSOVER = 25.0


def _crossover(nu: float) -> float:
    return max(BESSEL_CROSSOVER, 0.5 * nu * nu)


def _ie_series(nu: float, z: float) -> float:
    """e^{-z} I_nu(z) from the ascending power series."""
    if z == 0.0:
        return 1.0 if nu == 0 else 0.0
    q = 0.25 * z * z
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + nu))
        total += term
        if term < 1e-17 * total:
            break
        if k > 10_000:
            raise ConvergenceError(f"Bessel series did not converge (nu={nu}, z={z})")
    log_pref = nu * math.log(0.5 * z) - math.lgamma(nu + 1.0) - z
    return total * math.exp(log_pref)


def _ie_hankel(nu: float, z: float) -> float:
    """e^{-z} I_nu(z) from the large-argument expansion, truncated at its
    smallest term."""
    mu = 4.0 * nu * nu
    term = 1.0
    total = 1.0
    prev = math.inf
    for k in range(1, 400):
        term *= -(mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        a = abs(term)
        if a == 0.0 or a < 1e-17 * abs(total):
            total += term
            break
        if a > prev:
            break
        total += term
        prev = a
    return total / math.sqrt(2.0 * math.pi * z)


def bessel_ie(nu: float, z: float) -> float:
    """Exponentially scaled modified Bessel function e^{-z} I_nu(z)."""
    if nu < 0 or z < 0:
        raise DomainError(f"bessel_i requires nu >= 0 and z >= 0, got nu={nu}, z={z}")
    if z <= _crossover(nu):
        return _ie_series(nu, z)
    return _ie_hankel(nu, z)


def log_bessel_i(nu: float, z: float) -> float:
    """ln I_nu(z); finite for every z > 0."""
    if z == 0.0:
        return 0.0 if nu == 0 else -math.inf
    return math.log(bessel_ie(nu, z)) + z


def bessel_i(nu: float, z: float) -> float:
    """Modified Bessel function I_nu(z) for real nu >= 0, z >= 0."""
    ie = bessel_ie(nu, z)
    if z > 709.0:
        lv = math.log(ie) + z
        if lv > 709.78:
            raise OverflowError(f"I_{nu}({z}) exceeds double range; use bessel_ie")
        return math.exp(lv)
    return ie * math.exp(z)


def reg_lower_gamma(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if a <= 0 or x < 0:
        raise DomainError(f"reg_lower_gamma requires a > 0, x >= 0 (a={a}, x={x})")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    log_front = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1.0:
        term = 1.0 / a
        total = term
        n = 0
        while abs(term) > 1e-17 * abs(total):
            n += 1
            term *= x / (a + n)
            total += term
            if n > 100_000:
                raise ConvergenceError("incomplete gamma series did not converge")
        return min(1.0, total * math.exp(log_front))
    # continued fraction for Q(a, x), modified Lentz
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 100_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    else:
        raise ConvergenceError("incomplete gamma continued fraction did not converge")
    return max(0.0, 1.0 - math.exp(log_front) * h)


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureSpec()

# Gauss-Kronrod 7/15 nodes and weights on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


def _gk15(f, a, b, vectorized):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    xs = c + h * _NODES
    if vectorized:
        fx = np.asarray(f(xs), dtype=float)
    else:
        fx = np.fromiter((f(x) for x in xs), dtype=float, count=15)
    k = h * float(_WK @ fx)
    g = h * float(_WG15 @ fx)
    return k, abs(k - g)


def _adaptive(f, a, b, spec: QuadratureSpec, vectorized: bool) -> float:
    k, e = _gk15(f, a, b, vectorized)
    heap = [(-e, a, b, k)]
    total, err = k, e
    n = 1
    while err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if n >= spec.max_subdivisions:
            raise ConvergenceError(
                f"quadrature did not converge in {n} subdivisions (est. error {err:.3g})")
        neg_e, lo, hi, kk = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        k1, e1 = _gk15(f, lo, mid, vectorized)
        k2, e2 = _gk15(f, mid, hi, vectorized)
        heapq.heappush(heap, (-e1, lo, mid, k1))
        heapq.heappush(heap, (-e2, mid, hi, k2))
        total += k1 + k2 - kk
        err += e1 + e2 + neg_e
        n += 1
    return math.fsum(item[3] for item in heap)


def integrate(f: Callable[[float], float], a: float, b: float,
              spec: QuadratureSpec = DEFAULT_QUAD, *, singular: str = "none",
              vectorized: bool = False) -> float:
    """Adaptive Gauss-Kronrod integral of ``f`` over [a, b].

    ``b`` may be ``math.inf`` (mapped to a finite interval).  ``singular``
    is one of "none", "left", "right", "both": an integrable (x - end)^{-1/2}
    singularity at the named endpoint(s) is removed by x = end +/- w^2.
    Set ``vectorized`` when ``f`` accepts numpy arrays.
    """
    if a == b:
        return 0.0
    if b < a:
        return -integrate(f, b, a, spec, singular={"left": "right", "right": "left"}.get(
            singular, singular), vectorized=vectorized)
    if math.isinf(b):
        if singular not in ("none", "left"):
            raise ValueError("no right-endpoint singularity at infinity")
        if singular == "left":
            g0 = lambda w: 2.0 * w * f(a + w * w)
            return integrate(g0, 0.0, math.inf, spec, vectorized=vectorized)

        def g(t):
            s = 1.0 - t
            return f(a + t / s) / (s * s)

        return _adaptive(g, 0.0, 1.0, spec, vectorized)
    if singular == "none":
        return _adaptive(f, a, b, spec, vectorized)
    if singular == "both":
        mid = 0.5 * (a + b)
        return (integrate(f, a, mid, spec, singular="left", vectorized=vectorized)
                + integrate(f, mid, b, spec, singular="right", vectorized=vectorized))
    L = math.sqrt(b - a)
    if singular == "left":
        return _adaptive(lambda w: 2.0 * w * f(a + w * w), 0.0, L, spec, vectorized)
    if singular == "right":
        return _adaptive(lambda w: 2.0 * w * f(b - w * w), 0.0, L, spec, vectorized)
    raise ValueError(f"unknown singular={singular!r}")
