import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qaction.model import (
    ActionParams1D, ActionParams2D, BoundarySet, DomainError, FIG2_BOUNDARY, PhysConst,
    params_from_mapping, potential_1d, potential_1d_diff, potential_2d, read_keyvalue,
)

pos = st.floats(0.05, 5.0)


def test_potential_1d_examples():
    p = ActionParams1D()
    assert potential_1d(p, 1.0) == pytest.approx(1.5, abs=1e-15)
    assert potential_1d(ActionParams1D(v_m2=0.0), 2.0) == pytest.approx(2.0, abs=1e-15)
    assert potential_1d(p, math.sqrt(2.0)) == pytest.approx(1.5, abs=1e-14)
    # the minimum sits at (v_m2/v2)^(1/4) = 2^(1/4), where V = sqrt(2) < 1.5
    assert p.x_min == pytest.approx(2.0**0.25, abs=1e-15)
    assert p.v_min == pytest.approx(math.sqrt(2.0), abs=1e-15)
    assert potential_1d(p, p.x_min) == pytest.approx(p.v_min, abs=1e-15)


def test_potential_1d_domain():
    with pytest.raises(DomainError):
        potential_1d(ActionParams1D(), 0.0)
    # the harmonic case lives on the full line
    assert potential_1d(ActionParams1D(v_m2=0.0), -1.0) == pytest.approx(0.5)


@given(pos)
def test_minimum_is_global(x):
    p = ActionParams1D()
    assert potential_1d(p, x) >= p.v_min - 1e-12


@given(st.floats(0.1, 4.0), st.floats(0.1, 4.0), st.floats(0.05, 0.95))
def test_potential_1d_convex(a, b, lam):
    p = ActionParams1D()
    mid = potential_1d(p, lam * a + (1 - lam) * b)
    assert mid <= lam * potential_1d(p, a) + (1 - lam) * potential_1d(p, b) + 1e-12


@given(pos)
def test_potential_diff_matches_direct(x):
    p = ActionParams1D(v2=0.7, v_m2=1.3, v0=0.2)
    direct = potential_1d(p, x) - potential_1d(p, p.x_min)
    assert float(potential_1d_diff(p, x, p.x_min)) == pytest.approx(direct, rel=1e-9, abs=1e-12)


def test_potential_2d_examples():
    p = ActionParams2D(v2=0.5, v22=0.05)
    assert potential_2d(p, 1.0, 1.0) == pytest.approx(1.05, abs=1e-15)
    assert potential_2d(p, 1.0, 0.0) == pytest.approx(0.5, abs=1e-15)


def test_potential_2d_exchange_symmetry_random_points():
    rng = np.random.default_rng(3)
    x, y = rng.uniform(-4, 4, (2, 100))
    p = ActionParams2D(v2=0.504, v22=0.05, v4=1e-5)
    np.testing.assert_allclose(potential_2d(p, x, y), potential_2d(p, y, x), rtol=1e-15)


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_potential_2d_parity(x, y):
    p = ActionParams2D(v4=1e-3)
    v = potential_2d(p, x, y)
    for sx in (-1, 1):
        for sy in (-1, 1):
            assert potential_2d(p, sx * x, sy * y) == v


def test_param_validation():
    with pytest.raises(DomainError):
        ActionParams1D(m=0.0)
    with pytest.raises(DomainError):
        ActionParams1D(v2=-1.0)
    with pytest.raises(DomainError):
        ActionParams2D(v22=-0.1)
    with pytest.raises(DomainError):
        PhysConst(hbar=0.0)


def test_omega_and_g_views():
    p = ActionParams1D.from_omega(m=2.0, omega=1.5, g=0.7)
    assert p.omega == pytest.approx(1.5)
    assert p.g == 0.7
    assert p.v2 == pytest.approx(0.5 * 2.0 * 1.5**2)


def test_boundary_set():
    assert FIG2_BOUNDARY.n_pairs == 20
    x, y = FIG2_BOUNDARY.pairs()
    assert len(x) == len(y) == 20
    assert set(np.round(y, 12)) == {4.0, 5.0}
    with pytest.raises(DomainError):
        BoundarySet((), (1.0,), 1.0)
    with pytest.raises(DomainError):
        BoundarySet((1.0,), (0.0,), 1.0)
    with pytest.raises(DomainError):
        BoundarySet((1.0,), (1.0,), 0.0)
    assert FIG2_BOUNDARY.with_T(8.0).T == 8.0


def test_keyvalue_config(tmp_path):
    f = tmp_path / "c.cfg"
    f.write_text("# comment\nclassical.omega = 1.0\nclassical.g = 3\nfit.T = 1, 2.5\nname = x\n")
    d = read_keyvalue(f)
    assert d == {"classical": {"omega": 1.0, "g": 3}, "fit": {"T": [1, 2.5]}, "name": "x"}
    p = params_from_mapping(ActionParams1D, d["classical"])
    assert p.v_m2 == 3 and p.omega == pytest.approx(1.0)
    with pytest.raises((TypeError, ValueError)):
        params_from_mapping(ActionParams1D, {"mass": 1.0})
