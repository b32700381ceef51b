import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qaction.asymptotics import (
    SingularityError, asymptotic_parameters, figure1_table, reconstruct_wavefunction,
    transformation_law_residual,
)
from qaction.fitter import fit_quantum_action
from qaction.model import ActionParams1D, DomainError, FIG2_BOUNDARY, potential_1d
from qaction.propagator import ground_state, wavefunction

REFERENCE = ActionParams1D()


def _grid(q, lo=0.3, hi=3.0, n=50, eps=0.05):
    xs = np.linspace(lo, hi, n)
    return xs[np.abs(xs - q.x_min) >= eps]


def test_reference_parameters():
    a = asymptotic_parameters(REFERENCE)
    assert a.m_v2 == pytest.approx(0.5, abs=1e-15)
    assert a.m_vm2 == pytest.approx(2.0, abs=1e-15)
    assert a.E_gr == 2.5
    assert a.V_min_quantum == a.E_gr
    assert a.x_min_quantum == pytest.approx(math.sqrt(2.0), abs=1e-15)


def test_zero_coupling():
    a = asymptotic_parameters(ActionParams1D(v_m2=0.0))
    assert a.m_vm2 == pytest.approx(0.5, abs=1e-15)
    assert a.E_gr == pytest.approx(1.5)
    full = asymptotic_parameters(ActionParams1D(v_m2=0.0), domain="full-line")
    assert full.m_vm2 == 0.0 and full.E_gr == pytest.approx(0.5)


@given(st.floats(0.2, 5.0), st.floats(0.1, 3.0), st.floats(0.0, 5.0))
def test_split_invariants(m_tilde, omega, g):
    c = ActionParams1D.from_omega(m=1.0, omega=omega, g=g)
    a = asymptotic_parameters(c)
    q = a.quantum_params(m_tilde=m_tilde)
    assert q.x_min ** 4 == pytest.approx(q.v_m2 / q.v2, rel=1e-12)
    assert q.x_min == pytest.approx(a.x_min_quantum, rel=1e-12)
    # V~_min = E_gr under the chosen v0 convention
    assert q.v0 + 2 * math.sqrt(q.v2 * q.v_m2) == pytest.approx(a.E_gr, rel=1e-12)
    assert potential_1d(q, q.x_min) == pytest.approx(a.E_gr, rel=1e-12)


def test_peak_matches_wavefunction_peak():
    sd = ground_state(REFERENCE)
    xs = np.linspace(1.0, 2.0, 100001)
    peak = xs[np.argmax(wavefunction(sd, REFERENCE, xs))]
    assert asymptotic_parameters(REFERENCE).x_min_quantum == pytest.approx(peak, abs=1e-5)


def test_transformation_law_holds_for_matched_parameters():
    a = asymptotic_parameters(REFERENCE)
    q = a.quantum_params()
    res = transformation_law_residual(REFERENCE, q, a.E_gr, _grid(q))
    assert np.max(np.abs(res)) < 1e-10


@given(st.floats(0.3, 4.0), st.floats(0.0, 6.0), st.floats(0.3, 3.0))
def test_transformation_law_generic_parameters(m, g, omega):
    c = ActionParams1D.from_omega(m=m, omega=omega, g=g)
    a = asymptotic_parameters(c)
    q = a.quantum_params(m_tilde=1.7)
    eps = 0.05 * q.x_min
    xs = _grid(q, 0.3 * q.x_min, 3 * q.x_min, eps=eps)
    res = transformation_law_residual(c, q, a.E_gr, xs, eps=eps)
    scale = np.abs(2 * c.m * (potential_1d(c, xs) - a.E_gr)) + 1
    assert np.max(np.abs(res) / scale) < 1e-10


def test_classical_as_quantum_leaves_residual():
    a = asymptotic_parameters(REFERENCE)
    xs = _grid(REFERENCE.as_quantum())
    res = transformation_law_residual(REFERENCE, REFERENCE.as_quantum(), a.E_gr, xs)
    assert np.max(np.abs(res)) > 0.1


def test_perturbation_response_is_linear():
    a = asymptotic_parameters(REFERENCE)
    q = a.quantum_params()
    xs = _grid(q)

    def worst(rel):
        p = ActionParams1D(m=q.m, v2=q.v2, v_m2=q.v_m2 * (1 + rel), v0=q.v0, role="quantum")
        return np.max(np.abs(transformation_law_residual(REFERENCE, p, a.E_gr, xs)))

    s1, s2 = worst(0.01) / 0.01, worst(0.005) / 0.005
    assert s1 == pytest.approx(s2, rel=0.02)
    assert worst(0.01) == worst(0.01)


def test_singularity_guard():
    a = asymptotic_parameters(REFERENCE)
    q = a.quantum_params()
    with pytest.raises(SingularityError):
        transformation_law_residual(REFERENCE, q, a.E_gr, [q.x_min + 0.01])
    with pytest.raises(DomainError):
        transformation_law_residual(REFERENCE, q, a.E_gr, [-1.0])


def test_reconstruction_matches_ground_state():
    a = asymptotic_parameters(REFERENCE)
    q = a.quantum_params()
    sd = ground_state(REFERENCE)
    xs = np.linspace(0.2, sd.Lambda_sc, 80)
    exact = wavefunction(sd, REFERENCE, xs)
    rec = reconstruct_wavefunction(q, xs)
    assert np.max(np.abs(rec - exact) / exact) < 0.01
    assert np.max(np.abs(rec - exact) / exact) < 1e-8     # exact in practice


def test_reconstruction_shape():
    q = asymptotic_parameters(REFERENCE).quantum_params()
    top = reconstruct_wavefunction(q, q.x_min)
    left = reconstruct_wavefunction(q, np.linspace(0.1, q.x_min, 40))
    right = reconstruct_wavefunction(q, np.linspace(q.x_min, 4.0, 40))
    assert np.all(np.diff(left) > 0) and np.all(np.diff(right) < 0)
    assert top == pytest.approx(max(left.max(), right.max()))
    with pytest.raises(DomainError):
        reconstruct_wavefunction(q, 0.0)


def test_reconstruction_harmonic_gaussian():
    q = asymptotic_parameters(ActionParams1D(v_m2=0.0, v2=0.8, m=1.6),
                              domain="full-line").quantum_params(m_tilde=1.6)
    mw = math.sqrt(2 * q.v2 * q.m)              # m~ omega~
    xs = np.array([-2.0, -0.5, 0.0, 0.7, 1.9])
    gauss = (mw / math.pi) ** 0.25 * np.exp(-mw * xs**2 / 2)
    np.testing.assert_allclose(reconstruct_wavefunction(q, xs), gauss, rtol=1e-9)


def test_fitted_products_approach_prediction():
    a = asymptotic_parameters(REFERENCE)
    devs = []
    for T in (2.0, 3.0, 4.5, 6.0):
        r = fit_quantum_action(REFERENCE, FIG2_BOUNDARY.with_T(T))
        devs.append(abs(r.products[0] - a.m_v2) + abs(r.products[1] - a.m_vm2))
    assert all(d1 > d2 for d1, d2 in zip(devs, devs[1:]))
    assert devs[-1] < 1e-4


def test_figure1_table():
    tab = figure1_table(REFERENCE)
    assert set(tab) == {"x", "V_classical", "V_quantum", "psi_exact", "psi_reconstructed"}
    assert tab["x"].min() > 0 and tab["x"].max() == 4.0
    np.testing.assert_allclose(tab["psi_exact"], tab["psi_reconstructed"], rtol=1e-8, atol=1e-14)
