"""Large-T relations between the classical action, the ground state and
the quantum action: coefficient matching for the ansatz
V~ = v~2 x^2 + v~_m2 x^-2 + v~0, the transformation-law residual, and the
ground state rebuilt from the quantum potential."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .model import ActionParams1D, DomainError, potential_1d, potential_1d_diff
from .propagator import gamma_index
from .specfun import QuadratureSpec, integrate


class SingularityError(ValueError):
    """Grid point too close to the quantum-potential minimum."""


@dataclass(frozen=True)
class AsymptoticPrediction:
    m_v2: float
    m_vm2: float
    E_gr: float
    x_min_quantum: float
    V_min_quantum: float

    def quantum_params(self, m_tilde: float = 1.0, hbar: float = 1.0) -> ActionParams1D:
        """Split the products with a chosen mass.  v0 is set so that the
        potential minimum equals E_gr; the transformation law itself does
        not constrain v0."""
        v2 = self.m_v2 / m_tilde
        vm2 = self.m_vm2 / m_tilde
        return ActionParams1D(m=m_tilde, v2=v2, v_m2=vm2,
                              v0=self.E_gr - 2.0 * math.sqrt(v2 * vm2),
                              hbar=hbar, role="quantum")


def asymptotic_parameters(classical: ActionParams1D,
                          domain: str = "half-line") -> AsymptoticPrediction:
    """Coefficient matching of the transformation law for the ansatz.

    On the half-line the x^-2 coefficient takes the root tied to the
    regular ground state, x^(1/2 + gamma).  ``domain="full-line"`` is the
    harmonic oscillator on R (v_m2 must vanish), where the other root,
    zero, applies.
    """
    if not classical.v2 > 0:
        raise DomainError("asymptotic relations need v2 > 0")
    hb = classical.hbar
    w = classical.omega
    m_v2 = 0.5 * classical.m**2 * w**2
    if domain == "full-line":
        if classical.v_m2 != 0:
            raise DomainError("full-line matching needs v_m2 = 0")
        E = 0.5 * hb * w + classical.v0
        return AsymptoticPrediction(m_v2=m_v2, m_vm2=0.0, E_gr=E,
                                    x_min_quantum=0.0, V_min_quantum=E)
    if domain != "half-line":
        raise ValueError(f"unknown domain {domain!r}")
    gam = gamma_index(classical)
    m_vm2 = 0.5 * hb**2 * (0.5 + gam) ** 2
    E = hb * w * (1.0 + gam) + classical.v0
    return AsymptoticPrediction(m_v2=m_v2, m_vm2=m_vm2, E_gr=E,
                                x_min_quantum=(m_vm2 / m_v2) ** 0.25, V_min_quantum=E)


def transformation_law_residual(classical: ActionParams1D, quantum: ActionParams1D,
                                E_gr: float, x_grid, eps: float = 0.05) -> np.ndarray:
    """LHS - RHS of the transformation law at each grid point.

    The sign factor sgn(x - x~_min) is applied on both sides of the
    minimum; points within ``eps`` of it are rejected.
    """
    x = np.atleast_1d(np.asarray(x_grid, float))
    if np.any(x <= 0):
        raise DomainError("grid must lie in x > 0")
    xm = quantum.x_min
    if np.any(np.abs(x - xm) < eps):
        raise SingularityError(f"grid point within {eps} of x~_min = {xm:.6g}")
    hb = classical.hbar
    D = 2.0 * quantum.m * potential_1d_diff(quantum, x, xm)
    dD = 2.0 * quantum.m * (2.0 * quantum.v2 * x - 2.0 * quantum.v_m2 / x**3)
    lhs = 2.0 * classical.m * (potential_1d(classical, x) - E_gr)
    rhs = D - 0.5 * hb * dD / np.sqrt(D) * np.sign(x - xm)
    return lhs - rhs


_QUAD = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11)


def _exponent(quantum: ActionParams1D, x: float) -> float:
    """int_{x~min}^x sqrt(2 m~ (V~ - V~min)) dx' / hbar  (>= 0)."""
    xm = quantum.x_min
    if x == xm:
        return 0.0
    f = lambda t: math.sqrt(max(2.0 * quantum.m * float(potential_1d_diff(quantum, t, xm)), 0.0))
    return abs(integrate(f, xm, x, _QUAD)) / quantum.hbar


@functools.lru_cache(maxsize=64)
def _log_norm(quantum: ActionParams1D) -> float:
    """ln N, N^2 = int |exp(-exponent)|^2 over the domain."""
    xm = quantum.x_min
    dens = lambda t: math.exp(-2.0 * _exponent(quantum, t))
    right = integrate(dens, xm, math.inf, QuadratureSpec(1e-14, 1e-10, 4000))
    if quantum.v_m2 == 0:
        left = right                       # even on the full line
    else:
        left = integrate(dens, 0.0, xm, QuadratureSpec(1e-14, 1e-10, 4000)) if xm > 0 else 0.0
    return 0.5 * math.log(left + right)


def reconstruct_wavefunction(quantum: ActionParams1D, x):
    """Normalized ground state exp(-exponent(x)) / N built from the quantum
    action.  For v_m2 = 0 the domain is the full line."""
    xs = np.atleast_1d(np.asarray(x, float))
    if quantum.v_m2 > 0 and np.any(xs <= 0):
        raise DomainError("reconstruction defined for x > 0")
    if not quantum.v2 > 0:
        raise DomainError("reconstruction needs a confining quantum potential")
    ln_n = _log_norm(quantum)
    out = np.array([math.exp(-_exponent(quantum, float(abs(v)) if quantum.v_m2 == 0 else float(v))
                             - ln_n) for v in xs])
    return float(out[0]) if np.ndim(x) == 0 else out


def figure1_table(classical: ActionParams1D, x_grid=None) -> dict[str, np.ndarray]:
    """Columns for the potential / quantum potential / wave-function plot."""
    from .propagator import ground_state, wavefunction

    if x_grid is None:
        x_grid = np.linspace(0.05, 4.0, 80)
    x = np.asarray(x_grid, float)
    pred = asymptotic_parameters(classical)
    q = pred.quantum_params(m_tilde=classical.m, hbar=classical.hbar)
    sd = ground_state(classical)
    return {
        "x": x,
        "V_classical": potential_1d(classical, x),
        "V_quantum": potential_1d(q, x),
        "psi_exact": wavefunction(sd, classical, x),
        "psi_reconstructed": reconstruct_wavefunction(q, x),
    }
