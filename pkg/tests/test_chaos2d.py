import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qaction.chaos2d import (
    ChaosOptions,
    EnergyDriftError,
    InfeasibleEnergyError,
    PhaseState2D,
    SectionTimeout,
    calibrate_threshold,
    chaotic_fraction,
    hamiltonian,
    integrable_limit,
    integrate_orbit,
    lyapunov_max,
    poincare_section,
    sample_section_ic,
    section_fill,
)
from qaction.model import ActionParams2D, DomainError

CLASSICAL = ActionParams2D(m=1.0, v2=0.5, v22=0.05, v4=0.0)
HARMONIC = ActionParams2D(m=1.0, v2=0.5, v22=0.0, v4=0.0)
# a chaotic initial condition at E = 40 (sample 0 of seed 7)
CHAOTIC_IC = sample_section_ic(CLASSICAL, 40.0, 7, 0)


def test_phase_state_round_trip_and_finiteness():
    s = PhaseState2D(0.1, -0.2, 0.3, 0.4)
    assert PhaseState2D.from_array(s.as_array()) == s
    with pytest.raises((ValueError, DomainError)):
        PhaseState2D(float("nan"), 0.0, 0.0, 0.0)


def test_harmonic_orbit_matches_cosine():
    s0 = PhaseState2D(0.7, -0.3, 0.2, 1.1)
    orb = integrate_orbit(HARMONIC, s0, 100.0, 2e-3, stride=50)
    t = orb.times
    w = 1.0  # sqrt(2 v2 / m)
    x = s0.x * np.cos(w * t) + s0.px / w * np.sin(w * t)
    y = s0.y * np.cos(w * t) + s0.py / w * np.sin(w * t)
    px = -s0.x * w * np.sin(w * t) + s0.px * np.cos(w * t)
    py = -s0.y * w * np.sin(w * t) + s0.py * np.cos(w * t)
    ref = np.column_stack([x, y, px, py])
    assert t[-1] == pytest.approx(100.0)
    assert np.max(np.abs(orb.states - ref)) < 1e-8


def test_fourth_order_convergence():
    s0 = PhaseState2D(0.7, -0.3, 0.2, 1.1)

    def err(dt):
        orb = integrate_orbit(HARMONIC, s0, 20.0, dt, drift_tol=1e-3)
        xe = s0.x * math.cos(20.0) + s0.px * math.sin(20.0)
        return abs(orb.states[-1, 0] - xe)

    ratio = err(0.04) / err(0.02)
    assert 12.0 < ratio < 20.0


def test_energy_conservation_at_E10():
    s0 = sample_section_ic(CLASSICAL, 10.0, 3, 0)
    orb = integrate_orbit(CLASSICAL, s0, 1000.0, 1e-3 * 2 * math.pi / 1.5, stride=1000)
    H = np.array([hamiltonian(CLASSICAL, PhaseState2D.from_array(r)) for r in orb.states])
    assert np.max(np.abs(H - 10.0)) / 10.0 < 1e-8
    assert orb.max_rel_drift < 1e-8


def test_forward_then_backward_returns():
    s0 = sample_section_ic(CLASSICAL, 10.0, 3, 1)
    dt = 2e-3
    fwd = integrate_orbit(CLASSICAL, s0, 50.0, dt)
    back = integrate_orbit(CLASSICAL, PhaseState2D.from_array(fwd.states[-1]), 50.0, -dt)
    assert np.max(np.abs(back.states[-1] - s0.as_array())) < 1e-6


def test_large_step_raises_drift_error():
    s0 = sample_section_ic(CLASSICAL, 20.0, 1, 0)
    with pytest.raises(EnergyDriftError):
        integrate_orbit(CLASSICAL, s0, 100.0, 0.2)


def test_bad_time_arguments():
    s0 = PhaseState2D(1.0, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        integrate_orbit(CLASSICAL, s0, -1.0, 1e-3)
    with pytest.raises(ValueError):
        integrate_orbit(CLASSICAL, s0, 1.0, 0.0)


def test_harmonic_section_lies_on_ellipse():
    s0 = PhaseState2D(0.9, 0.0, -0.4, 1.3)
    pts = poincare_section(HARMONIC, s0, 40)
    Ex0 = 0.5 * s0.px**2 + HARMONIC.v2 * s0.x**2
    Ex = 0.5 * pts[:, 1] ** 2 + HARMONIC.v2 * pts[:, 0] ** 2
    assert np.max(np.abs(Ex - Ex0)) < 1e-6


def test_section_crossings_are_on_the_plane_with_positive_py():
    s0 = sample_section_ic(CLASSICAL, 10.0, 2, 4)
    E = hamiltonian(CLASSICAL, s0)
    pts = poincare_section(CLASSICAL, s0, 30)
    for x, px in pts:
        # py > 0 must be real on the plane y = 0
        rest = 2.0 * (E - (CLASSICAL.v2 * x * x)) - px * px
        assert rest > 0.0


def test_mirrored_initial_conditions_give_mirrored_sections():
    s0 = sample_section_ic(CLASSICAL, 10.0, 5, 2)
    m0 = PhaseState2D(-s0.x, 0.0, -s0.px, s0.py)
    a = poincare_section(CLASSICAL, s0, 25)
    b = poincare_section(CLASSICAL, m0, 25)
    assert np.allclose(a, -b, atol=1e-9)


def test_chaotic_section_fills_area_regular_does_not():
    chaotic = poincare_section(CLASSICAL, CHAOTIC_IC, 300)
    regular = poincare_section(HARMONIC, PhaseState2D(0.9, 0.0, -0.4, 1.3), 300)
    assert section_fill(chaotic) > 0.3
    assert section_fill(regular) < 0.15


def test_section_timeout():
    s0 = sample_section_ic(CLASSICAL, 10.0, 2, 4)
    with pytest.raises(SectionTimeout):
        poincare_section(CLASSICAL, s0, 50, max_steps=1000)


def test_integrable_lyapunov_is_small():
    for i in range(3):
        s0 = sample_section_ic(HARMONIC, 10.0, 11, i)
        assert lyapunov_max(HARMONIC, s0, 2000.0) < 1e-3


def test_regular_low_energy_orbit_matches_baseline():
    thr, base = calibrate_threshold(CLASSICAL, 1.0, 20, 1, ChaosOptions(t_end=1000.0))
    s0 = sample_section_ic(CLASSICAL, 1.0, 1, 0)
    lam = lyapunov_max(CLASSICAL, s0, 1000.0)
    assert lam < thr


def test_chaotic_orbit_exponent_is_large_and_stable():
    opts = ChaosOptions(t_end=2000.0)
    thr, _ = calibrate_threshold(CLASSICAL, 40.0, 20, 7, opts)
    l1 = lyapunov_max(CLASSICAL, CHAOTIC_IC, 2000.0)
    l2 = lyapunov_max(CLASSICAL, CHAOTIC_IC, 4000.0)
    assert l1 > 10.0 * thr
    assert abs(l2 - l1) / l1 < 0.2


def test_time_reversed_orbits_share_exponents():
    # reversing momenta maps an orbit onto its time reverse; the largest
    # exponents agree within estimator noise
    fwd, rev = [], []
    for i in range(20):
        s = sample_section_ic(CLASSICAL, 30.0, 13, i)
        r = PhaseState2D(s.x, s.y, -s.px, -s.py)
        fwd.append(lyapunov_max(CLASSICAL, s, 1000.0))
        rev.append(lyapunov_max(CLASSICAL, r, 1000.0))
    fwd, rev = np.array(fwd), np.array(rev)
    assert np.corrcoef(fwd, rev)[0, 1] > 0.8
    assert abs(fwd.mean() - rev.mean()) < 0.15 * max(fwd.mean(), rev.mean())


def test_transient_argument_validated():
    with pytest.raises(ValueError):
        lyapunov_max(CLASSICAL, CHAOTIC_IC, 10.0, transient=1.0)


@settings(max_examples=25)
@given(E=st.floats(0.1, 100.0), seed=st.integers(0, 1000), index=st.integers(0, 500))
def test_sampled_ic_lies_on_energy_surface(E, seed, index):
    s = sample_section_ic(CLASSICAL, E, seed, index)
    assert s.y == 0.0 and s.py > 0.0
    assert abs(hamiltonian(CLASSICAL, s) - E) <= 1e-10 * max(1.0, E)


def test_infeasible_energy():
    with pytest.raises(InfeasibleEnergyError):
        sample_section_ic(CLASSICAL, 0.0, 0, 0)
    with pytest.raises(InfeasibleEnergyError):
        chaotic_fraction(CLASSICAL, -1.0, 5, 0, ChaosOptions(t_end=50.0))


def test_integrable_limit_has_no_chaos():
    opts = ChaosOptions(t_end=500.0)
    scan = chaotic_fraction(integrable_limit(CLASSICAL), 20.0, 20, 3, opts)
    assert scan.R == 0.0 and scan.n_chaotic == 0
    assert scan.n_integrable_chaotic == 0


def test_scan_is_deterministic_and_consistent():
    opts = ChaosOptions(t_end=300.0)
    a = chaotic_fraction(CLASSICAL, 30.0, 12, 4, opts)
    b = chaotic_fraction(CLASSICAL, 30.0, 12, 4, opts)
    assert a.R == b.R
    assert [l for _, l, _ in a.per_ic] == [l for _, l, _ in b.per_ic]
    assert a.R == a.n_chaotic / a.n_total
    assert 0.0 <= a.sigma <= 0.5
    for s, lam, c in a.per_ic:
        assert abs(hamiltonian(CLASSICAL, s) - 30.0) < 1e-10 * 30.0
        assert c == (lam > a.threshold)


def test_scan_rejects_empty_ensemble():
    with pytest.raises(ValueError):
        chaotic_fraction(CLASSICAL, 10.0, 0, 0)
