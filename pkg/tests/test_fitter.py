import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qaction.fitter import (
    FitOptions, RankDeficiencyWarning, boundary_dependence_study, exact_log_green,
    fit_quantum_action, interval_spread, predict_log_green, resolution_study,
)
from qaction.model import ActionParams1D, BALANCED_BOUNDARY, BoundarySet, FIG2_BOUNDARY
from qaction.propagator import log_green_harmonic

REFERENCE = ActionParams1D()
HARM = ActionParams1D(v_m2=0.0)
QUANT = ActionParams1D(m=1.3, v2=0.42, v_m2=1.7, role="quantum")


@pytest.mark.parametrize("T", [0.5, 1.0, 2.0])
def test_harmonic_quantum_action_is_classical(T):
    bs = BoundarySet.uniform((0.2, 1.5, 5), (0.3, 2.0, 5), T)
    r = fit_quantum_action(HARM, bs, FitOptions(domain="full-line"))
    assert r.params.m == pytest.approx(1.0, rel=1e-4)
    assert r.params.v2 == pytest.approx(0.5, rel=1e-4)
    assert r.residual_max_rel < 1e-8


def test_predict_reproduces_harmonic_kernel():
    T = 1.3
    log_Z = 0.5 * math.log(1.0 / (2 * math.pi * math.sinh(T)))
    x, y = np.array([0.4, 1.0, 2.2]), np.array([1.5, 0.3, 2.0])
    for solver in ("quadrature", "analytic"):
        pred = predict_log_green(HARM, log_Z, x, y, T, solver=solver)
        np.testing.assert_allclose(pred, log_green_harmonic(HARM, x, y, T), rtol=1e-11, atol=1e-12)


def test_predict_constant_path_and_offset():
    q = QUANT
    xm = q.x_min
    assert predict_log_green(q, 0.7, xm, xm, 2.0) == pytest.approx(0.7 - 2.0 * q.v_min, rel=1e-12)
    a = predict_log_green(q, 0.0, 1.1, 2.3, 1.7)
    shifted = ActionParams1D(m=q.m, v2=q.v2, v_m2=q.v_m2, v0=0.25)
    assert predict_log_green(shifted, 0.0, 1.1, 2.3, 1.7) == pytest.approx(a - 0.25 * 1.7, abs=1e-12)


@settings(max_examples=10)
@given(st.floats(-2.0, 2.0), st.floats(0.3, 5.0))
def test_gauge_invariance(delta, T):
    # (v0 + delta, log_Z + delta T / hbar) predicts the same amplitudes
    x, y = FIG2_BOUNDARY.pairs()
    a = predict_log_green(QUANT, 0.1, x, y, T, solver="analytic")
    q2 = ActionParams1D(m=QUANT.m, v2=QUANT.v2, v_m2=QUANT.v_m2, v0=delta)
    b = predict_log_green(q2, 0.1 + delta * T, x, y, T, solver="analytic")
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("T", [1.0, 3.0])
def test_round_trip_recovers_known_action(T):
    bs = BALANCED_BOUNDARY.with_T(T)
    x, y = bs.pairs()
    data = predict_log_green(QUANT, -0.4, x, y, T, solver="analytic")
    r = fit_quantum_action(REFERENCE, bs, FitOptions(), data=data)
    assert r.products[0] == pytest.approx(QUANT.m * QUANT.v2, rel=1e-8)
    assert r.products[1] == pytest.approx(QUANT.m * QUANT.v_m2, rel=1e-8)
    # m~ is separately identifiable: a common rescaling is not a flat direction
    assert r.params.m == pytest.approx(QUANT.m, rel=1e-6)
    assert r.log_Z == pytest.approx(-0.4, abs=1e-7)


def test_round_trip_with_quadrature_solver():
    bs = BoundarySet.uniform((1.5, 2.5, 3), (1.1, 2.1, 3), 1.0)
    x, y = bs.pairs()
    data = predict_log_green(QUANT, 0.2, x, y, 1.0, solver="quadrature")
    r = fit_quantum_action(REFERENCE, bs, FitOptions(solver="quadrature", optimizer="lm",
                                                 initial=ActionParams1D(m=1.2, v2=0.45, v_m2=1.6)),
                           data=data)
    assert r.products[0] == pytest.approx(QUANT.m * QUANT.v2, rel=1e-7)
    assert r.products[1] == pytest.approx(QUANT.m * QUANT.v_m2, rel=1e-7)


def test_fit_result_invariants_and_gradient():
    r = fit_quantum_action(REFERENCE, BALANCED_BOUNDARY.with_T(1.5))
    assert r.converged
    assert r.residual_max_rel >= r.residual_rms >= 0
    assert r.products[0] == pytest.approx(r.params.m * r.params.v2, rel=1e-12)
    assert r.products[1] == pytest.approx(r.params.m * r.params.v_m2, rel=1e-12)
    assert r.grad_norm < 1e-6 * (1 + abs(r.objective))
    assert r.n_samples == 100
    assert r.params.v0 == 0.0


def test_fig2_asymptotic_products():
    r = fit_quantum_action(REFERENCE, FIG2_BOUNDARY.with_T(4.5))
    assert r.products[0] == pytest.approx(0.4999, abs=0.002)
    assert r.products[1] == pytest.approx(2.008, abs=0.02)


def test_minimax_objective_not_worse_in_max_error():
    bs = BALANCED_BOUNDARY.with_T(1.0)
    a = fit_quantum_action(REFERENCE, bs, FitOptions(objective="lsq"))
    b = fit_quantum_action(REFERENCE, bs, FitOptions(objective="minimax"))
    assert b.residual_max_rel <= a.residual_max_rel
    assert b.objective_kind == "minimax"


def test_fit_deterministic_given_seed():
    bs = BALANCED_BOUNDARY.with_T(2.0)
    a = fit_quantum_action(REFERENCE, bs, FitOptions(seed=5))
    b = fit_quantum_action(REFERENCE, bs, FitOptions(seed=5))
    assert a.row() == b.row()


def test_rank_deficiency_warning_single_pair():
    with pytest.warns(RankDeficiencyWarning):
        r = fit_quantum_action(REFERENCE, BoundarySet((1.0,), (2.0,), 1.0))
    assert r.rank_deficient


def test_boundary_dependence_small_and_large_T():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficiencyWarning)
        rows = boundary_dependence_study(REFERENCE, "fixed-initial-vary-final", [1.0, 4.0], n_points=30)
    spread = interval_spread(rows)
    assert max(spread[4.0]) < 1e-4
    assert max(spread[1.0]) > 100 * max(spread[4.0])
    assert all(r["short_time"] == (r["T"] < 2.0) for r in rows)


def test_free_mass_is_sloppy_with_one_fixed_endpoint():
    bs = BoundarySet((0.3,), tuple(np.linspace(2.0, 3.0, 30)), 4.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficiencyWarning)
        r = fit_quantum_action(REFERENCE, bs, FitOptions(fit_mass=True))
    # the data are matched essentially exactly while m~ wanders off
    assert r.residual_max_rel < 1e-6
    assert abs(r.params.m - 1.0) > 0.1


def test_exact_log_green_domains():
    x, y = np.array([1.0, 2.0]), np.array([1.5, 0.5])
    full = exact_log_green(HARM, x, y, 1.0)
    np.testing.assert_allclose(full, log_green_harmonic(HARM, x, y, 1.0))
    half = exact_log_green(HARM, x, y, 1.0, domain="half-line")
    assert np.all(half < full)


def test_resolution_study_small_grid():
    rows, minimal = resolution_study(REFERENCE, FIG2_BOUNDARY, [200, 400, 800], [2.0])
    assert minimal[2.0] == 200
    assert all(r["status"] == "ok" for r in rows)
    with pytest.raises(ValueError):
        fit_quantum_action(REFERENCE, FIG2_BOUNDARY, FitOptions(solver="relaxation"))
