"""Exact Euclidean transition amplitudes of the inverse-square potential,
the ground state read off in the large-T limit, and the dynamical time and
length scales derived from it."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ActionParams1D, DomainError
from .specfun import bessel_ie, reg_lower_gamma


@dataclass(frozen=True)
class PropagatorSample:
    x: float
    y: float
    T: float
    G: float
    log_value: float


@dataclass(frozen=True)
class SpectralData:
    E_gr: float
    gamma: float
    Z0: float
    T_sc: float
    Lambda_sc: float


def gamma_index(p: ActionParams1D) -> float:
    """Bessel order (1 + 8 m g / hbar^2)^{1/2} / 2."""
    return 0.5 * math.sqrt(1.0 + 8.0 * p.m * p.v_m2 / p.hbar**2)


def _check(p, x, y, T):
    if not (x > 0 and y > 0 and T > 0):
        raise DomainError(f"need x, y, T > 0 (x={x}, y={y}, T={T})")
    if not p.v2 > 0:
        raise DomainError("the propagator needs a confining potential (v2 > 0)")


def log_green(p: ActionParams1D, x: float, y: float, T: float) -> float:
    """ln G_E(x, T; y, 0), overflow-free for any T and x*y."""
    _check(p, x, y, T)
    w = p.omega
    mw = p.m * w / p.hbar
    wT = w * T
    # sinh and coth without overflow for large wT
    if wT > 20.0:
        log_sinh = wT - math.log(2.0) + math.log1p(-math.exp(-2.0 * wT))
    else:
        log_sinh = math.log(math.sinh(wT))
    coth = 1.0 / math.tanh(wT)
    z = mw * x * y * math.exp(-log_sinh)
    gam = gamma_index(p)
    ie = bessel_ie(gam, z)
    if ie == 0.0:
        raise OverflowError(f"Bessel factor underflowed at z={z}")
    return (math.log(mw * math.sqrt(x * y)) - log_sinh
            - 0.5 * mw * (x * x + y * y) * coth + z + math.log(ie) - p.v0 * T / p.hbar)


def euclidean_green(p: ActionParams1D, x: float, y: float, T: float) -> PropagatorSample:
    lv = log_green(p, x, y, T)
    return PropagatorSample(x=x, y=y, T=T, G=math.exp(lv), log_value=lv)


def log_green_array(p: ActionParams1D, x, y, T: float) -> np.ndarray:
    x = np.broadcast_to(np.asarray(x, float), np.broadcast(x, y).shape)
    y = np.broadcast_to(np.asarray(y, float), x.shape)
    return np.array([log_green(p, a, b, T) for a, b in zip(x.ravel(), y.ravel())]).reshape(x.shape)


def log_green_harmonic(p: ActionParams1D, x, y, T: float):
    """Full-line oscillator kernel (Mehler); used when v_m2 = 0."""
    w = p.omega
    mw = p.m * w / p.hbar
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    wT = w * T
    return (0.5 * math.log(mw / (2.0 * math.pi * math.sinh(wT)))
            - 0.5 * mw * ((x * x + y * y) * math.cosh(wT) - 2.0 * x * y) / math.sinh(wT)
            - p.v0 * T / p.hbar)


def _lambda_sc(gam: float, mw: float, prob: float = 0.95) -> float:
    # int_0^L |psi|^2 = P(gamma + 1, mw L^2); bisect on t = mw L^2
    a = gam + 1.0
    lo, hi = 0.0, max(1.0, a)
    while reg_lower_gamma(a, hi) < prob:
        hi *= 2.0
    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if reg_lower_gamma(a, mid) < prob:
            lo = mid
        else:
            hi = mid
    return math.sqrt(0.5 * (lo + hi) / mw)


def ground_state(p: ActionParams1D) -> SpectralData:
    if not p.v2 > 0:
        raise DomainError("ground state needs v2 > 0")
    gam = gamma_index(p)
    w = p.omega
    mw = p.m * w / p.hbar
    E = p.hbar * w * (1.0 + gam) + p.v0
    # T_sc = hbar / E_gr, measured from the bottom so a shift v0 drops out
    # int_0^inf x^{1+2g} e^{-mw x^2} dx = Gamma(g+1) / (2 mw^{g+1})
    Z0 = 2.0 * mw ** (gam + 1.0) / math.gamma(gam + 1.0)
    return SpectralData(E_gr=E, gamma=gam, Z0=Z0, T_sc=1.0 / (w * (1.0 + gam)), Lambda_sc=_lambda_sc(gam, mw))


def wavefunction(sd: SpectralData, p: ActionParams1D, x):
    x = np.asarray(x, float)
    if np.any(x <= 0):
        raise DomainError("wave function defined for x > 0")
    mw = p.m * p.omega / p.hbar
    psi = math.sqrt(sd.Z0) * x ** (0.5 + sd.gamma) * np.exp(-0.5 * mw * x * x)
    return float(psi) if psi.ndim == 0 else psi
