"""Phase-space analysis of the two-dimensional quartic-coupled oscillator

    H = (px^2 + py^2) / 2m + v2 (x^2 + y^2) + v22 x^2 y^2 + v4 (x^4 + y^4)

for the classical action and for the quantum action of the same form.

Integration uses the fourth-order Yoshida composition of the leapfrog
(drift-kick-drift) map, which is symplectic and time-reversible.  The
tangent dynamics is the exact linearization of the same map, so Lyapunov
exponents are those of the discrete flow.  Hot loops are numba-compiled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .model import ActionParams2D, potential_2d
from .parallel import parallel_map


class EnergyDriftError(RuntimeError):
    """Relative energy drift exceeded the tolerance."""


class InfeasibleEnergyError(ValueError):
    """The energy surface does not meet the section plane."""


class SectionTimeout(RuntimeError):
    """Requested number of section crossings not reached."""


@dataclass(frozen=True)
class PhaseState2D:
    x: float
    y: float
    px: float
    py: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.as_array()):
            raise ValueError(f"non-finite phase state {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.px, self.py], float)

    @classmethod
    def from_array(cls, a) -> "PhaseState2D":
        return cls(*(float(v) for v in a))


def hamiltonian(p: ActionParams2D, s) -> float:
    a = s.as_array() if isinstance(s, PhaseState2D) else np.asarray(s, float)
    return float((a[2] ** 2 + a[3] ** 2) / (2.0 * p.m) + potential_2d(p, a[0], a[1]))


# ---------------------------------------------------------------- kernels

_CBRT2 = 2.0 ** (1.0 / 3.0)
_W1 = 1.0 / (2.0 - _CBRT2)
_W0 = -_CBRT2 / (2.0 - _CBRT2)


def _coeffs(p: ActionParams2D) -> np.ndarray:
    return np.array([p.m, p.v2, p.v22, p.v4], float)


@njit(cache=True)
def _energy(s, c):
    x, y = s[0], s[1]
    x2, y2 = x * x, y * y
    return ((s[2] ** 2 + s[3] ** 2) / (2.0 * c[0]) + c[1] * (x2 + y2)
            + c[2] * x2 * y2 + c[3] * (x2 * x2 + y2 * y2))


@njit(cache=True)
def _leapfrog(s, u, c, h, tangent):
    # drift h/2, kick h, drift h/2; u is the tangent vector
    m = c[0]
    s[0] += 0.5 * h * s[2] / m
    s[1] += 0.5 * h * s[3] / m
    x, y = s[0], s[1]
    fx = 2.0 * c[1] * x + 2.0 * c[2] * x * y * y + 4.0 * c[3] * x * x * x
    fy = 2.0 * c[1] * y + 2.0 * c[2] * y * x * x + 4.0 * c[3] * y * y * y
    if tangent:
        u[0] += 0.5 * h * u[2] / m
        u[1] += 0.5 * h * u[3] / m
        hxx = 2.0 * c[1] + 2.0 * c[2] * y * y + 12.0 * c[3] * x * x
        hyy = 2.0 * c[1] + 2.0 * c[2] * x * x + 12.0 * c[3] * y * y
        hxy = 4.0 * c[2] * x * y
        u[2] -= h * (hxx * u[0] + hxy * u[1])
        u[3] -= h * (hxy * u[0] + hyy * u[1])
        u[0] += 0.5 * h * u[2] / m
        u[1] += 0.5 * h * u[3] / m
    s[2] -= h * fx
    s[3] -= h * fy
    s[0] += 0.5 * h * s[2] / m
    s[1] += 0.5 * h * s[3] / m


@njit(cache=True)
def _step(s, u, c, dt, tangent):
    _leapfrog(s, u, c, _W1 * dt, tangent)
    _leapfrog(s, u, c, _W0 * dt, tangent)
    _leapfrog(s, u, c, _W1 * dt, tangent)


@njit(cache=True)
def _orbit_kernel(s0, c, dt, nsteps, stride):
    s = s0.copy()
    u = np.zeros(4)
    nout = nsteps // stride + 1
    out = np.empty((nout, 4))
    out[0] = s
    e0 = _energy(s, c)
    drift = 0.0
    k = 1
    for i in range(1, nsteps + 1):
        _step(s, u, c, dt, False)
        d = abs(_energy(s, c) - e0)
        if d > drift:
            drift = d
        if i % stride == 0:
            out[k] = s
            k += 1
    return out, drift


@njit(cache=True)
def _lyap_kernel(s0, u0, c, dt, nsteps, renorm_every, skip):
    s = s0.copy()
    u = u0 / math.sqrt(np.sum(u0 * u0))
    e0 = _energy(s, c)
    drift = 0.0
    acc = 0.0
    for i in range(1, nsteps + 1):
        _step(s, u, c, dt, True)
        if i % renorm_every == 0 or i == nsteps or i == skip:
            nrm = math.sqrt(u[0] ** 2 + u[1] ** 2 + u[2] ** 2 + u[3] ** 2)
            if i > skip:
                acc += math.log(nrm)
            u /= nrm
            d = abs(_energy(s, c) - e0)
            if d > drift:
                drift = d
    return acc, drift, s, u


@njit(cache=True)
def _section_kernel(s0, c, dt, n_cross, max_steps, t_tol):
    s = s0.copy()
    u = np.zeros(4)
    out = np.empty((n_cross, 2))
    k = 0
    steps = 0
    prev = s.copy()
    while k < n_cross and steps < max_steps:
        prev[:] = s
        _step(s, u, c, dt, False)
        steps += 1
        if prev[1] < 0.0 and s[1] >= 0.0:
            # bisection on the sub-step length
            lo, hi = 0.0, dt
            trial = prev.copy()
            while hi - lo > t_tol:
                mid = 0.5 * (lo + hi)
                trial[:] = prev
                _step(trial, u, c, mid, False)
                if trial[1] < 0.0:
                    lo = mid
                else:
                    hi = mid
            trial[:] = prev
            _step(trial, u, c, 0.5 * (lo + hi), False)
            if trial[3] > 0.0:
                out[k, 0] = trial[0]
                out[k, 1] = trial[2]
                k += 1
    return out[:k], steps


# ---------------------------------------------------------------- public API

@dataclass(frozen=True)
class Orbit:
    times: np.ndarray
    states: np.ndarray       # (n, 4): x, y, px, py
    max_rel_drift: float


def characteristic_period(p: ActionParams2D, E: float) -> float:
    """2 pi / omega_max with omega_max from the largest curvature of V on
    the disk x^2 + y^2 <= E / v2 (the allowed region lies inside it)."""
    r2 = E / p.v2 if p.v2 > 0 else math.sqrt(E / max(p.v4, 1e-300))
    k = 2.0 * p.v2 + 2.0 * p.v22 * r2 + 12.0 * p.v4 * r2
    return 2.0 * math.pi / math.sqrt(k / p.m)


def _check_drift(drift: float, E: float, tol: float):
    rel = drift / abs(E) if E != 0 else drift
    if not rel < tol:
        raise EnergyDriftError(f"relative energy drift {rel:.3e} exceeds {tol:.1e}; reduce dt")
    return rel


def integrate_orbit(p: ActionParams2D, s0: PhaseState2D, t_end: float, dt: float,
                    stride: int = 1, drift_tol: float = 1e-8) -> Orbit:
    """Fixed-step orbit; negative ``dt`` integrates backwards in time."""
    if not t_end > 0 or dt == 0:
        raise ValueError("need t_end > 0 and dt != 0")
    nsteps = int(round(t_end / abs(dt)))
    states, drift = _orbit_kernel(s0.as_array(), _coeffs(p), float(dt), nsteps, int(stride))
    E = hamiltonian(p, s0)
    rel = _check_drift(drift, E, drift_tol)
    times = np.arange(len(states)) * stride * dt
    return Orbit(times=times, states=states, max_rel_drift=rel)


def poincare_section(p: ActionParams2D, s0: PhaseState2D, n_crossings: int,
                     dt: float | None = None, max_steps: int = 50_000_000,
                     t_tol: float = 1e-10) -> np.ndarray:
    """(x, px) at upward crossings of y = 0 (py > 0), refined by bisection
    on the sub-step length to ``t_tol``."""
    if dt is None:
        dt = 1e-3 * characteristic_period(p, hamiltonian(p, s0))
    pts, steps = _section_kernel(s0.as_array(), _coeffs(p), float(dt), int(n_crossings),
                                 int(max_steps), float(t_tol))
    if len(pts) < n_crossings:
        raise SectionTimeout(f"only {len(pts)} of {n_crossings} crossings in {steps} steps")
    return pts


def lyapunov_max(p: ActionParams2D, s0: PhaseState2D, t_end: float, renorm_interval: float = 1.0,
                 dt: float | None = None, drift_tol: float = 1e-8, u0=None,
                 transient: float = 0.5) -> float:
    """Largest Lyapunov exponent: tangent-vector growth with periodic
    renormalization, sum of log stretch factors divided by the averaging
    time.

    The first ``transient * t_end`` only aligns the tangent vector and is
    not averaged.  For a regular orbit with shear the tangent vector grows
    linearly, which the full-run average turns into a spurious
    ln(t) / t; over the window [t_end/2, t_end] it is ln 2 / (t_end/2)
    regardless of the shear rate.  ``transient=0`` gives the plain
    full-run average.
    """
    return _lyapunov(p, s0, t_end, renorm_interval, dt, drift_tol, u0, transient)[0]


def _lyapunov(p, s0, t_end, renorm_interval, dt, drift_tol, u0=None, transient=0.5):
    if not 0.0 <= transient < 1.0:
        raise ValueError("transient must lie in [0, 1)")
    E = hamiltonian(p, s0)
    if dt is None:
        dt = 1e-3 * characteristic_period(p, E)
    nsteps = max(1, int(round(t_end / abs(dt))))
    skip = int(round(transient * nsteps))
    every = max(1, int(round(renorm_interval / abs(dt))))
    if u0 is None:
        u0 = np.array([1.0, 1.0, 1.0, 1.0]) / 2.0
    acc, drift, s, u = _lyap_kernel(s0.as_array(), np.asarray(u0, float), _coeffs(p),
                                    float(dt), nsteps, every, skip)
    _check_drift(drift, E, drift_tol)
    return acc / ((nsteps - skip) * abs(dt)), s, u


# ---------------------------------------------------------------- scans

@dataclass(frozen=True)
class ChaosOptions:
    t_end: float = 2000.0
    dt: float | None = None          # default: dt_factor * characteristic period
    dt_factor: float = 1e-3
    renorm_interval: float = 1.0
    transient: float = 0.5           # fraction of t_end excluded from the average
    drift_tol: float = 1e-8
    threshold: float | None = None   # None: calibrate against the integrable limit
    jobs: int = 1


@dataclass
class ChaosScan:
    E: float
    n_total: int
    n_chaotic: int
    R: float
    per_ic: list = field(repr=False)       # (PhaseState2D, lambda_max, chaotic)
    params: ActionParams2D = None
    seed: int = 0
    threshold: float = math.nan
    baseline: float = math.nan
    n_integrable_chaotic: int | None = None   # integrable limit, same settings and threshold

    @property
    def sigma(self) -> float:
        """Binomial standard error of R."""
        return math.sqrt(max(self.R * (1.0 - self.R), 0.0) / self.n_total)


def section_xmax(p: ActionParams2D, E: float) -> float:
    """Largest |x| on y = 0 with V(x, 0) <= E."""
    if p.v4 > 0:
        return math.sqrt((-p.v2 + math.sqrt(p.v2**2 + 4.0 * p.v4 * E)) / (2.0 * p.v4))
    return math.sqrt(E / p.v2)


def sample_section_ic(p: ActionParams2D, E: float, seed: int, index: int) -> PhaseState2D:
    """Uniform (x, px) on the allowed region of the y = 0 plane by rejection
    sampling, py > 0 from H = E.  The stream depends only on (seed, index)."""
    if not E > 0:
        raise InfeasibleEnergyError(f"energy {E} at or below the potential minimum 0")
    rng = np.random.default_rng([int(seed), int(index)])
    xm = section_xmax(p, E)
    pm = math.sqrt(2.0 * p.m * E)
    while True:
        x, px = rng.uniform(-xm, xm), rng.uniform(-pm, pm)
        rest = 2.0 * p.m * (E - float(potential_2d(p, x, 0.0))) - px * px
        if rest > 0.0:
            return PhaseState2D(x=x, y=0.0, px=px, py=math.sqrt(rest))


def _lyap_task(args):
    p, s0, opts = args
    dt = opts.dt if opts.dt is not None else opts.dt_factor * characteristic_period(p, hamiltonian(p, s0))
    return _lyapunov(p, s0, opts.t_end, opts.renorm_interval, dt, opts.drift_tol,
                     None, opts.transient)[0]


def integrable_limit(p: ActionParams2D) -> ActionParams2D:
    """Drop the coupling; the remaining potential separates in x and y."""
    return replace(p, v22=0.0, role=p.role + "-integrable")


def _exponents(p, E, n_ic, seed, opts):
    ics = [sample_section_ic(p, E, seed, i) for i in range(n_ic)]
    lams = parallel_map(_lyap_task, [(p, s, opts) for s in ics], opts.jobs)
    return ics, np.asarray(lams, float)


def calibrate_threshold(p: ActionParams2D, E: float, n_ic: int, seed: int,
                        options: ChaosOptions = ChaosOptions()) -> tuple[float, float]:
    """(threshold, baseline): baseline is the 95th percentile of lambda_max
    in the integrable limit at the same settings; the threshold is
    max(5 baseline, 3 / t_avg) with t_avg the averaging window."""
    thr, base, _ = _calibrate(p, E, n_ic, seed, options)
    return thr, base


def _calibrate(p, E, n_ic, seed, options):
    _, lams = _exponents(integrable_limit(p), E, n_ic, seed, options)
    base = float(np.percentile(lams, 95))
    t_avg = options.t_end * (1.0 - options.transient)
    return max(5.0 * base, 3.0 / t_avg), base, lams


def chaotic_fraction(p: ActionParams2D, E: float, n_ic: int, seed: int,
                     options: ChaosOptions = ChaosOptions()) -> ChaosScan:
    if n_ic < 1:
        raise ValueError("n_ic must be positive")
    n_int = None
    if options.threshold is None:
        thr, base, base_lams = _calibrate(p, E, n_ic, seed, options)
        n_int = int(np.count_nonzero(base_lams > thr))
    else:
        thr, base = options.threshold, math.nan
    ics, lams = _exponents(p, E, n_ic, seed, options)
    chaotic = lams > thr
    n_ch = int(chaotic.sum())
    return ChaosScan(E=float(E), n_total=n_ic, n_chaotic=n_ch, R=n_ch / n_ic,
                     per_ic=[(s, float(l), bool(c)) for s, l, c in zip(ics, lams, chaotic)],
                     params=p, seed=seed, threshold=thr, baseline=base,
                     n_integrable_chaotic=n_int)


def section_fill(points: np.ndarray, bins: int = 20) -> float:
    """Fraction of occupied cells in a bins x bins grid over the bounding box
    of the section points: small for invariant curves, larger for chaotic
    orbits that scatter over an area."""
    pts = np.asarray(points, float)
    h, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], bins=bins)
    return float(np.count_nonzero(h)) / bins**2
