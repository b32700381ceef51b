"""Domain types shared by every module: action parameters, potentials,
boundary sets and a small key/value parameter-file reader."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np


class DomainError(ValueError):
    """Argument outside the domain of a function."""


@dataclass(frozen=True)
class PhysConst:
    hbar: float = 1.0

    def __post_init__(self):
        if not self.hbar > 0:
            raise DomainError(f"hbar must be positive, got {self.hbar}")


@dataclass(frozen=True)
class ActionParams1D:
    """Mass and potential coefficients of V(x) = v2 x^2 + v_m2 x^-2 + v0.

    Used both for the classical action and for a fitted quantum action;
    ``role`` only labels reports.
    """

    m: float = 1.0
    v2: float = 0.5
    v_m2: float = 1.0
    v0: float = 0.0
    hbar: float = 1.0
    role: str = "classical"

    def __post_init__(self):
        if not self.m > 0:
            raise DomainError(f"mass must be positive, got {self.m}")
        if self.v2 < 0 or self.v_m2 < 0:
            raise DomainError("v2 and v_m2 must be non-negative")
        if not self.hbar > 0:
            raise DomainError(f"hbar must be positive, got {self.hbar}")

    @property
    def omega(self) -> float:
        return math.sqrt(2.0 * self.v2 / self.m)

    @property
    def g(self) -> float:
        return self.v_m2

    @property
    def x_min(self) -> float:
        """Location of the potential minimum on x > 0."""
        if self.v_m2 == 0:
            return 0.0
        if self.v2 == 0:
            return math.inf
        return (self.v_m2 / self.v2) ** 0.25

    @property
    def v_min(self) -> float:
        if self.v_m2 == 0:
            return self.v0
        return self.v0 + 2.0 * math.sqrt(self.v2 * self.v_m2)

    @classmethod
    def from_omega(cls, m=1.0, omega=1.0, g=1.0, hbar=1.0, **kw) -> "ActionParams1D":
        return cls(m=m, v2=0.5 * m * omega**2, v_m2=g, hbar=hbar, **kw)

    def as_quantum(self) -> "ActionParams1D":
        return replace(self, role="quantum")


@dataclass(frozen=True)
class ActionParams2D:
    """V(x, y) = v2 (x^2 + y^2) + v22 x^2 y^2 + v4 (x^4 + y^4)."""

    m: float = 1.0
    v2: float = 0.5
    v22: float = 0.05
    v4: float = 0.0
    role: str = "classical"

    def __post_init__(self):
        if not self.m > 0:
            raise DomainError(f"mass must be positive, got {self.m}")
        if self.v2 < 0 or self.v22 < 0 or self.v4 < 0:
            raise DomainError("potential must be bounded below: v2, v22, v4 >= 0")


CLASSICAL_2D = ActionParams2D(m=1.0, v2=0.5, v22=0.05, v4=0.0)
QUANTUM_2D = ActionParams2D(m=1.0, v2=0.504, v22=0.05, v4=1e-5, role="quantum")


@dataclass(frozen=True)
class BoundarySet:
    initial_points: tuple[float, ...]
    final_points: tuple[float, ...]
    T: float

    def __post_init__(self):
        object.__setattr__(self, "initial_points", tuple(float(v) for v in self.initial_points))
        object.__setattr__(self, "final_points", tuple(float(v) for v in self.final_points))
        if not self.initial_points or not self.final_points:
            raise DomainError("boundary set needs at least one initial and one final point")
        if min(self.initial_points + self.final_points) <= 0:
            raise DomainError("boundary points must be > 0")
        if not self.T > 0:
            raise DomainError(f"transition time must be positive, got {self.T}")

    @classmethod
    def uniform(cls, initial: tuple[float, float, int], final: tuple[float, float, int],
                T: float) -> "BoundarySet":
        """Points evenly spaced (endpoints included) in [lo, hi]."""
        return cls(tuple(np.linspace(*initial[:2], int(initial[2]))),
                   tuple(np.linspace(*final[:2], int(final[2]))), T)

    def with_T(self, T: float) -> "BoundarySet":
        return replace(self, T=T)

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened (final x, initial y) arrays over every combination."""
        xf, xi = np.meshgrid(self.final_points, self.initial_points)
        return xf.ravel(), xi.ravel()

    @property
    def n_pairs(self) -> int:
        return len(self.initial_points) * len(self.final_points)


# reference boundary sets for the figure experiments
FIG2_BOUNDARY = BoundarySet.uniform((4.0, 5.0, 2), (0.5, 3.0, 10), T=4.5)
BALANCED_BOUNDARY = BoundarySet.uniform((1.5, 2.5, 10), (1.1, 2.1, 10), T=1.5)


def potential_1d(p: ActionParams1D, x):
    x = np.asarray(x, dtype=float)
    if p.v_m2 > 0 and np.any(x <= 0):
        raise DomainError("inverse-square potential requires x > 0")
    with np.errstate(divide="ignore"):
        inv = np.where(x != 0, 1.0 / np.where(x != 0, x, 1.0) ** 2, 0.0)
    v = p.v2 * x * x + p.v_m2 * inv + p.v0
    return float(v) if v.ndim == 0 else v


def potential_1d_prime(p: ActionParams1D, x):
    x = np.asarray(x, dtype=float)
    return 2.0 * p.v2 * x - 2.0 * p.v_m2 / x**3 if p.v_m2 else 2.0 * p.v2 * x


def potential_2d(p: ActionParams2D, x, y):
    x2 = np.square(x)
    y2 = np.square(y)
    return p.v2 * (x2 + y2) + p.v22 * x2 * y2 + p.v4 * (x2 * x2 + y2 * y2)


def _coerce(value: str):
    s = value.strip()
    if s.lower() in ("true", "false"):
        return s.lower() == "true"
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    if "," in s:
        return [_coerce(v) for v in s.split(",") if v.strip()]
    return s


def read_keyvalue(path: str | Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Dotted keys (``classical.g = 1``) become nested dicts. Comma-separated
    values become lists.
    """
    out: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        node = out
        *parents, leaf = key.split(".")
        for part in parents:
            node = node.setdefault(part, {})
        node[leaf] = _coerce(value)
    return out


def params_from_mapping(cls, mapping: dict):
    """Build a parameter dataclass, rejecting unknown keys by name."""
    names = {f.name for f in fields(cls)}
    if cls is ActionParams1D and ("omega" in mapping or "g" in mapping):
        extra = set(mapping) - names - {"omega", "g"}
        if extra:
            raise ValueError(f"unknown {cls.__name__} field(s): {sorted(extra)}")
        kw = {k: v for k, v in mapping.items() if k in names}
        m = kw.pop("m", 1.0)
        hbar = kw.pop("hbar", 1.0)
        kw.pop("v2", None)
        kw.pop("v_m2", None)
        return ActionParams1D.from_omega(m=m, omega=mapping.get("omega", 1.0),
                                         g=mapping.get("g", 1.0), hbar=hbar, **kw)
    extra = set(mapping) - names
    if extra:
        raise ValueError(f"unknown {cls.__name__} field(s): {sorted(extra)}")
    return cls(**mapping)


def potential_1d_diff(p: ActionParams1D, x, x0):
    """V(x) - V(x0) without cancellation near the minimum."""
    x = np.asarray(x, dtype=float)
    d2 = (x - x0) * (x + x0)
    if p.v_m2 == 0:
        return p.v2 * d2
    return d2 * (p.v2 - p.v_m2 / (x * x * x0 * x0))
