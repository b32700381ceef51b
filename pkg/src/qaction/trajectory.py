"""Extremal Euclidean paths of a one-dimensional action and the action
value along them.

Three routes, kept deliberately independent:

* ``solve_trajectory_quadrature`` -- energy-conservation quadrature with a
  bracketed root-find for the energy; generic in the potential.
* ``solve_trajectory_relaxation`` / ``relaxation_actions`` -- the discrete
  equation of motion on a uniform time mesh, solved by damped Newton.
* ``analytic_action`` -- closed form for V = v2 x^2 + v_m2 x^-2 + v0.  With
  u = x^2 the equation of motion becomes u'' = Omega^2 u + const
  (Omega = 2 omega), so the energy follows from a quadratic and the action
  from elementary integrals.  Vectorized; this is what the fitter calls.

Sign conventions: the Euclidean energy is E = (m/2) xdot^2 - V(x), the
action Sigma = int dt [(m/2) xdot^2 + V(x)].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .model import ActionParams1D, DomainError, potential_1d, potential_1d_diff, potential_1d_prime
from .specfun import ConvergenceError, QuadratureSpec, integrate


class InfeasibleEnergyError(ValueError):
    """No real path with the requested energy connects the two points."""


class BracketingError(RuntimeError):
    """No trajectory branch attains the requested transition time."""


class PositivityError(RuntimeError):
    """A relaxation iterate left the domain x > 0."""


@dataclass
class EuclideanTrajectory:
    times: np.ndarray
    positions: np.ndarray
    euclid_energy: float
    Sigma: float
    method: str
    N_t: int | None = None
    velocities: np.ndarray | None = None
    branch: str | None = None

    def to_csv(self, path: str | Path) -> None:
        v = self.velocities if self.velocities is not None else np.full_like(self.times, np.nan)
        header = (f"# method={self.method} branch={self.branch} E={self.euclid_energy!r} "
                  f"Sigma={self.Sigma!r} N_t={self.N_t}\nt,x,v")
        np.savetxt(path, np.column_stack([self.times, self.positions, v]), delimiter=",",
                   header=header, comments="", fmt="%.17g")


_QUAD = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12, max_subdivisions=4000)


def _check_pair(p: ActionParams1D, x: float, y: float, T: float | None = None):
    if not (x > 0 and y > 0):
        raise DomainError(f"boundary points must be > 0 (x={x}, y={y})")
    if T is not None and not T > 0:
        raise DomainError(f"transition time must be > 0, got {T}")
    if not p.v2 > 0:
        raise DomainError("trajectory solvers need a confining potential (v2 > 0)")


# ---------------------------------------------------------------- quadrature

def _kinetic(p: ActionParams1D, d0: float, sw2, offset: float):
    """V(x) - V(x0) + offset for x0 = x_min + d0, x = x0 + sw2.

    Written in offsets from the minimum so nothing cancels when the
    anchor sits next to it.
    """
    xm = p.x_min
    x0 = xm + d0
    x = x0 + sw2
    if p.v_m2 == 0:
        return p.v2 * sw2 * (x + x0) + offset
    # v2 - v_m2/(x x0)^2 = v2 (x x0 - xm^2)(x x0 + xm^2) / (x x0)^2
    prod = x * x0
    near = xm * (2.0 * d0 + sw2) + d0 * (d0 + sw2)
    return p.v2 * sw2 * (x + x0) * near * (prod + xm * xm) / (prod * prod) + offset


def _segment_integrals(p: ActionParams1D, d0: float, end: float, offset: float,
                       with_action: bool = True) -> tuple[float, float]:
    """Time and int p dx along a monotone segment from x_min + d0 to end.

    Kinetic energy on the segment is V(x) - V(anchor) + offset >= 0.  The
    anchor may be a zero-velocity point (offset = 0); x = anchor + s w^2
    removes the inverse-square-root singularity there.
    """
    anchor = p.x_min + d0
    if anchor == end:
        return 0.0, 0.0
    sgn = 1.0 if end > anchor else -1.0
    m = p.m
    L = math.sqrt(abs(end - anchor))

    def dt(w):
        k = _kinetic(p, d0, sgn * w * w, offset)
        if k <= 0.0:
            return 0.0
        return 2.0 * w / math.sqrt(2.0 * k / m)

    t = integrate(dt, 0.0, L, _QUAD)
    if not with_action:
        return t, 0.0
    W = integrate(lambda w: 2.0 * w * math.sqrt(2.0 * m * max(_kinetic(p, d0, sgn * w * w, offset), 0.0)),
                  0.0, L, _QUAD)
    return t, W


def _near_point(p: ActionParams1D, x: float, y: float):
    """Endpoint closest to the minimum if both lie on one side, else None."""
    xm = p.x_min
    if (x - xm) * (y - xm) <= 0:
        return None
    return min(x, y, key=lambda z: abs(z - xm))


def _turning_point(p: ActionParams1D, E: float, near: float) -> float:
    xm = p.x_min
    f = lambda z: potential_1d(p, z) + E
    if f(near) < 0:
        raise InfeasibleEnergyError(f"E={E} is below -V at the near endpoint")
    if xm == near:
        return xm
    return brentq(f, xm, near, xtol=1e-15, rtol=1e-15, maxiter=500)


def transit_time(p: ActionParams1D, E: float, x: float, y: float,
                 branch: str = "direct") -> float:
    """Euclidean time to travel y -> x at energy E.

    ``branch`` is "direct" (monotone path) or "turning" (one turning point
    between the near endpoint and the potential minimum).
    """
    _check_pair(p, x, y)
    if branch == "direct":
        if x == y:
            return 0.0
        eps = E + _slowest_potential(p, x, y)
        if eps < 0:
            raise InfeasibleEnergyError(f"E={E} leaves the direct path classically forbidden")
        return _direct_parts(p, x, y, eps, with_action=False)[0]
    if branch == "turning":
        near = _near_point(p, x, y)
        if near is None:
            raise InfeasibleEnergyError("endpoints straddle the minimum; no turning path")
        if E >= -p.v_min:
            raise InfeasibleEnergyError(f"E={E} >= -V_min has no turning point")
        xt = _turning_point(p, E, near)
        return _turning_parts(p, x, y, xt - p.x_min, with_action=False)[0]
    raise ValueError(f"unknown branch {branch!r}")


def _slowest_potential(p, x, y):
    near = _near_point(p, x, y)
    return p.v_min if near is None else potential_1d(p, near)


def _direct_parts(p, x, y, eps, with_action=True):
    """Direct path with kinetic energy eps at its slowest point.

    Returns (time, int p dx, E).
    """
    near = _near_point(p, x, y)
    if near is None:
        t1, w1 = _segment_integrals(p, 0.0, x, eps, with_action)
        t2, w2 = _segment_integrals(p, 0.0, y, eps, with_action)
        return t1 + t2, w1 + w2, eps - p.v_min
    other = x if near == y else y
    t, w = _segment_integrals(p, near - p.x_min, other, eps, with_action)
    return t, w, eps - potential_1d(p, near)


def _turning_parts(p, x, y, dt0, with_action=True):
    """Path turning at x_min + dt0."""
    t1, w1 = _segment_integrals(p, dt0, x, 0.0, with_action)
    t2, w2 = _segment_integrals(p, dt0, y, 0.0, with_action)
    return t1 + t2, w1 + w2, -potential_1d(p, p.x_min + dt0)


def _sample_path(p, x, y, T, branch, d0, offset, n_mesh):
    """Positions on a uniform time mesh by inverting cumulative t(x).

    Every leg starts at the slowest point x_min + d0 (turning point, the
    minimum itself, or the endpoint nearest the minimum) where the kinetic
    energy equals ``offset``.
    """
    m = p.m
    xm = p.x_min
    anchor = xm + d0
    times = np.linspace(0.0, T, n_mesh + 1)
    gl_x, gl_w = np.polynomial.legendre.leggauss(12)

    def leg(end, n=1000):
        # x = anchor + s w^2 keeps dt/dw smooth at a zero-velocity anchor
        s = 1.0 if end > anchor else -1.0
        L = math.sqrt(abs(end - anchor))
        w = np.linspace(0.0, L, n + 1)
        a, b = w[:-1, None], w[1:, None]
        ww = 0.5 * (a + b) + 0.5 * (b - a) * gl_x
        k = np.maximum(_kinetic(p, d0, s * ww * ww, offset), 1e-300)
        seg = 0.5 * (b - a)[:, 0] * np.sum(gl_w * 2.0 * ww / np.sqrt(2.0 * k / m), axis=1)
        xs = anchor + s * w * w
        vs = s * np.sqrt(2.0 * np.maximum(_kinetic(p, d0, s * w * w, offset), 0.0) / m)
        return xs, np.concatenate([[0.0], np.cumsum(seg)]), vs

    if branch == "turning" or _near_point(p, x, y) is None:
        # y -> anchor -> x
        xs1, ts1, vs1 = leg(y)
        xs2, ts2, vs2 = leg(x)
        t_a = ts1[-1]
        t_nodes = np.concatenate([t_a - ts1[::-1], t_a + ts2[1:]])
        x_nodes = np.concatenate([xs1[::-1], xs2[1:]])
        v_nodes = np.concatenate([-vs1[::-1], vs2[1:]])
    else:
        other = x if anchor == y else y
        xs, ts, vs = leg(other)
        if anchor == y:
            t_nodes, x_nodes, v_nodes = ts, xs, vs
        else:
            t_nodes, x_nodes, v_nodes = ts[-1] - ts[::-1], xs[::-1], -vs[::-1]
    keep = np.concatenate([[True], np.diff(t_nodes) > 0])
    t_nodes, x_nodes, v_nodes = t_nodes[keep], x_nodes[keep], v_nodes[keep]
    t_nodes = t_nodes * (T / t_nodes[-1])
    spline = CubicHermiteSpline(t_nodes, x_nodes, v_nodes)
    return times, spline(times), spline(times, 1)


def solve_trajectory_quadrature(p: ActionParams1D, x: float, y: float, T: float,
                                n_mesh: int = 1000) -> EuclideanTrajectory:
    """Classical path from y (t=0) to x (t=T) by energy-conservation
    quadrature; the energy is found by a bracketed root-find on the transit
    time, over whichever branch's time range contains T."""
    _check_pair(p, x, y, T)
    xm = p.x_min
    near = _near_point(p, x, y)
    if x == y == xm:
        times = np.linspace(0.0, T, n_mesh + 1)
        return EuclideanTrajectory(times, np.full_like(times, x), -p.v_min, T * p.v_min,
                                   "quadrature", velocities=np.zeros_like(times),
                                   branch="stationary")
    if near is None:
        t_max_direct = math.inf
    else:
        t_max_direct = _direct_parts(p, x, y, 0.0)[0] if x != y else 0.0

    if T <= t_max_direct:
        branch = "direct"
        # kinetic energy eps at the slowest point: T(eps) decreases from t_max_direct to 0
        f = lambda e: _direct_parts(p, x, y, e)[0] - T
        hi = 1.0
        while f(hi) > 0:
            hi *= 4.0
            if hi > 1e300:
                raise BracketingError("could not bracket the direct-branch energy")
        lo = 0.0
        if near is None:
            lo = hi
            while f(lo) < 0:
                lo *= 0.25
                if lo < 1e-300:
                    raise BracketingError(
                        f"direct branch cannot reach T={T} (range (0, inf) expected)")
        eps = brentq(f, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
        t, W, E = _direct_parts(p, x, y, eps)
        d0 = 0.0 if near is None else near - xm
        offset = eps
    else:
        branch = "turning"
        # turning point at xm + sgn * exp(eta); T(eta) decreases in eta
        sgn = 1.0 if near > xm else -1.0
        eta_hi = math.log(abs(near - xm))
        g = lambda eta: _turning_parts(p, x, y, sgn * math.exp(eta))[0] - T
        eta_lo = eta_hi - 1.0
        while g(eta_lo) < 0:
            eta_lo -= 2.0
            if eta_lo < -700:
                raise BracketingError(
                    f"turning branch times [{t_max_direct:.6g}, inf) do not reach T={T}")
        if g(eta_hi) > 0:
            raise BracketingError(
                f"direct branch covers (0, {t_max_direct:.6g}], turning branch starts "
                f"at {t_max_direct:.6g}; T={T} not bracketed")
        eta = brentq(g, eta_lo, eta_hi, xtol=1e-15, rtol=1e-15, maxiter=500)
        d0 = sgn * math.exp(eta)
        offset = 0.0
        t, W, E = _turning_parts(p, x, y, d0)
    if abs(t - T) > 1e-10 * T:
        raise BracketingError(f"energy root-find reached T={t}, wanted {T}")
    Sigma = W - E * T
    if x == y and branch == "direct":
        times = np.linspace(0.0, T, n_mesh + 1)
        pos, vel = np.full_like(times, x), np.zeros_like(times)
    else:
        times, pos, vel = _sample_path(p, x, y, T, branch, d0, offset, n_mesh)
    return EuclideanTrajectory(times, pos, E, Sigma, "quadrature", velocities=vel, branch=branch)


# ---------------------------------------------------------------- closed form

def _logcosh(t):
    t = np.abs(t)
    return t + np.log1p(np.exp(-2.0 * t)) - math.log(2.0)


def _analytic_energy_shift(p: ActionParams1D, x, y, T):
    """Shift s = (E + v0) / (2 v2) of the physical (u > 0) solution."""
    a, b = p.v2, p.v_m2
    Om = math.sqrt(8.0 * a / p.m)
    th = Om * T
    P, Q = y * y, x * x
    b0 = b / a
    C = math.cosh(th)
    S = math.sinh(th)
    Cm1 = 2.0 * math.sinh(0.5 * th) ** 2
    disc = 2.0 * P * Q * (1.0 + C) + S * S * b0
    s = ((P - Q) ** 2 - Cm1 * (2.0 * P * Q + (C + 1.0) * b0)) / (Cm1 * ((P + Q) + np.sqrt(disc)))
    return s, Om, th, P, Q, C, S


def analytic_action(p: ActionParams1D, x, y, T: float):
    """Closed-form Sigma and Euclidean energy for arrays of boundary pairs."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if not p.v2 > 0:
        raise DomainError("analytic action needs v2 > 0")
    if np.any(x <= 0) or np.any(y <= 0) or not T > 0:
        raise DomainError("need x, y, T > 0")
    a, b, c = p.v2, p.v_m2, p.v0
    if th_big := (math.sqrt(8.0 * a / p.m) * T > 1400.0):
        raise OverflowError(f"Omega*T too large for the closed form ({th_big})")
    s, Om, th, P, Q, C, S = _analytic_energy_shift(p, x, y, T)
    E = 2.0 * a * s - c
    Z = math.tanh(0.5 * th)
    U1 = -s * T + (P + Q + 2.0 * s) * Z / Om
    if b > 0:
        r = math.sqrt(b / a)
        Np0 = (Q - P * C) / S - s * Z + r
        Nm0 = Np0 - 2.0 * r
        NpZ = (Q - P) / S + s * Z + r
        NmZ = NpZ - 2.0 * r
        lq = np.log(Q / P) - 2.0 * _logcosh(0.5 * th)
        use_plus = (np.minimum(np.abs(Np0), np.abs(NpZ))
                    >= np.minimum(np.abs(Nm0), np.abs(NmZ)))
        with np.errstate(divide="ignore", invalid="ignore"):
            Lp = lq - 2.0 * np.log(np.abs(NpZ / Np0))
            Lm = -lq + 2.0 * np.log(np.abs(NmZ / Nm0))
        L = np.where(use_plus, Lp, Lm)
        bUm = math.sqrt(a * b) / Om * L
    else:
        bUm = 0.0
    Sigma = E * T + 2.0 * a * U1 + 2.0 * bUm + 2.0 * c * T
    return Sigma, E


def analytic_path(p: ActionParams1D, x: float, y: float, T: float, t):
    """Closed-form x(t) of the extremal path (used to seed relaxation)."""
    t = np.asarray(t, float)
    s, Om, th, P, Q, C, S = _analytic_energy_shift(p, x, y, T)
    # sinh(Om (T - t)) / sinh(Om T) and sinh(Om t) / sinh(Om T), overflow-free
    em = np.exp(-2.0 * th)
    r0 = np.exp(-Om * t) * (-np.expm1(-2.0 * Om * (T - t))) / (1.0 - em)
    r1 = np.exp(-Om * (T - t)) * (-np.expm1(-2.0 * Om * t)) / (1.0 - em)
    u = -s + (P + s) * r0 + (Q + s) * r1
    return np.sqrt(np.maximum(u, 0.0))


# ---------------------------------------------------------------- relaxation

def _mesh(T: float, N_t: int) -> int:
    n = int(round(N_t * T))
    if n < 8:
        raise DomainError(f"N_t*T = {N_t * T} gives fewer than 8 mesh intervals")
    return n


def relaxation_paths(p: ActionParams1D, x, y, T: float, N_t: int, *,
                     seed: str = "analytic", tol: float = 1e-12, max_iter: int = 60,
                     node_budget: int = 2_000_000):
    """Solve the discrete Euclidean EOM for many boundary pairs at once.

    Returns (times, positions[pair, node], Sigma[pair], iterations).  The
    per-pair tridiagonal Newton systems are stacked into one banded solve,
    in chunks of at most ``node_budget`` unknowns.
    """
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    if np.any(x <= 0) or np.any(y <= 0) or not T > 0:
        raise DomainError("need x, y, T > 0")
    n = _mesh(T, N_t)
    times = np.linspace(0.0, T, n + 1)
    per_chunk = max(1, node_budget // n)
    paths, sigmas, iters = [], [], 0
    for start in range(0, len(x), per_chunk):
        sl = slice(start, start + per_chunk)
        path, sig, it = _relax_chunk(p, x[sl], y[sl], T, times, seed, tol, max_iter)
        paths.append(path)
        sigmas.append(sig)
        iters = max(iters, it)
    return times, np.concatenate(paths), np.concatenate(sigmas), iters


def _relax_chunk(p, x, y, T, times, seed, tol, max_iter):
    n = len(times) - 1
    dt = T / n
    npair = len(x)
    if seed == "analytic" and p.v2 > 0:
        path = np.array([analytic_path(p, xf, yi, T, times) for xf, yi in zip(x, y)])
        if not np.all(path[:, 1:-1] > 0):
            path = y[:, None] + (x - y)[:, None] * times / T
    else:
        path = y[:, None] + (x - y)[:, None] * times / T
    path[:, 0] = y
    path[:, -1] = x
    m = p.m
    k = m / dt**2
    N = n - 1
    ab = np.empty((3, npair * N))
    ab[0] = k
    ab[2] = k
    # decouple neighbouring pairs in the stacked system
    ab[0, ::N] = 0.0
    ab[2, N - 1::N] = 0.0
    scale = 1.0 + float(np.max(np.abs(path)))
    for it in range(1, max_iter + 1):
        xi = path[:, 1:-1]
        F = k * (path[:, 2:] - 2.0 * xi + path[:, :-2]) - potential_1d_prime(p, xi)
        d2 = 2.0 * p.v2 + 6.0 * p.v_m2 / xi**4
        ab[1] = (-2.0 * k - d2).ravel()
        step = solve_banded((1, 1), ab, -F.ravel(), check_finite=False,
                            overwrite_b=True).reshape(npair, N)
        lam = 1.0
        while np.any(xi + lam * step <= 0):
            lam *= 0.5
            if lam < 1e-12:
                raise PositivityError("relaxation path crossed x <= 0")
        path[:, 1:-1] = xi + lam * step
        if lam == 1.0 and np.max(np.abs(step)) < tol * scale:
            break
    else:
        raise ConvergenceError(f"relaxation did not converge in {max_iter} Newton steps")
    V = potential_1d(p, path)
    Sigma = np.sum(dt * (0.5 * m * (np.diff(path, axis=1) / dt) ** 2
                         + 0.5 * (V[:, 1:] + V[:, :-1])), axis=1)
    return path, Sigma, it


def relaxation_actions(p: ActionParams1D, x, y, T: float, N_t: int, **kw) -> np.ndarray:
    return relaxation_paths(p, x, y, T, N_t, **kw)[2]


def solve_trajectory_relaxation(p: ActionParams1D, x: float, y: float, T: float, N_t: int,
                                seed: str = "analytic") -> EuclideanTrajectory:
    """Discrete extremal path with N_t mesh points per unit time."""
    _check_pair(p, x, y, T)
    times, path, Sigma, _ = relaxation_paths(p, [x], [y], T, N_t, seed=seed)
    pos = path[0]
    dt = times[1] - times[0]
    vel = np.gradient(pos, dt, edge_order=2)
    E = float(np.median(0.5 * p.m * vel**2 - potential_1d(p, pos)))
    return EuclideanTrajectory(times, pos, E, float(Sigma[0]), "relaxation", N_t=N_t,
                               velocities=vel)
