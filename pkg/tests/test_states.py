import numpy as np
import pytest

from diracres import fixtures
from diracres.plane import Sheet
from diracres.states import (F_derivative_at, F_values, StateClass, _f1_lower,
                             _half_disk_path, antibound_parity, contour_winding,
                             counting_report, eigenvalues, find_states,
                             forbidden_domain_check, jost_on_gap, resonance_count)


# -- F -------------------------------------------------------------------------------

def test_F_free(rng):
    z = rng.normal(size=20) * 5 + 1j * rng.normal(size=20) * 3
    assert np.allclose(F_values(fixtures.free(), z), z + 1.0, atol=1e-12)


def test_F_positive_above_spectrum_edge(q1):
    lam = np.linspace(1.01, 30.0, 200)
    assert np.all(F_values(q1, lam).real > 0)


def test_F_continuous_across_cut(q1):
    for x in (-3.0, 0.3, 2.5):
        up = F_values(q1, [x + 1e-9j])[0]
        dn = F_values(q1, [x - 1e-9j])[0]
        assert abs(up - dn) < 1e-7 * (1 + abs(up))


def test_F_conjugate_symmetry(bump, rng):
    z = rng.normal(size=10) * 4 - 1j * np.abs(rng.normal(size=10)) * 2
    assert np.allclose(F_values(bump, np.conj(z)), np.conj(F_values(bump, z)), rtol=1e-12)


# -- state location --------------------------------------------------------------------

def test_free_single_virtual_state():
    states, info = find_states(fixtures.free(), (-3.0, 3.0, -3.0, 3.0))
    assert info["winding"] == 1
    assert len(states) == 1
    assert states[0].cls is StateClass.VIRTUAL
    assert states[0].lam == -1.0


def test_nonreal_zeros_come_in_pairs(q1):
    states, info = find_states(q1, (-10.0, 10.0, -4.0, 4.0))
    nonreal = [r for r in info["roots"] if abs(r[0].imag) > 1e-9]
    assert len(nonreal) % 2 == 0
    lower = sorted((r[0] for r in nonreal if r[0].imag < 0), key=lambda z: z.real)
    upper = sorted((np.conj(r[0]) for r in nonreal if r[0].imag > 0), key=lambda z: z.real)
    assert np.allclose(lower, upper, atol=1e-9)
    for s in states:
        assert s.residual < 1e-8 * (1 + abs(s.lam))


def test_resonances_in_lower_half_plane(q1):
    states, _ = find_states(q1, (-10.0, 10.0, -4.0, 4.0))
    assert all(s.lam.imag < 0 for s in states if s.cls is StateClass.RESONANCE)


def test_deep_well_eigenvalues(well):
    eig = eigenvalues(well)
    assert len(eig) == 3
    for e in eig:
        assert abs(jost_on_gap(well, e, Sheet.PHYSICAL)[0]) < 1e-10


def test_deep_well_F_derivative_negative(well):
    # stated sign of dF/dlam at eigenvalues
    for e in eigenvalues(well):
        assert F_derivative_at(e, well)["fd"] < 0


def test_F_derivative_magnitude(well):
    for e in eigenvalues(well):
        d = F_derivative_at(e, well)
        assert abs(abs(d["fd"]) - d["norming"]) < 1e-4 * d["norming"]
        assert d["variational"] == pytest.approx(d["norming"], rel=1e-9)


def test_F_derivative_not_eigenvalue(well):
    with pytest.raises(ValueError):
        F_derivative_at(0.5, well)


def test_antibound_parity(well):
    eig = eigenvalues(well)
    for a, b in zip(eig[:-1], eig[1:]):
        res = antibound_parity(well, a, b)
        assert res["count"] % 2 == 1
        assert np.all(res["at_eigs"] != 0)


# -- counting ----------------------------------------------------------------------------

def test_counting_free():
    rep = counting_report(fixtures.free(), [10.0, 40.0])
    assert rep.counts == [0, 0]


def test_counting_stable_under_refinement(q1):
    w, npts = resonance_count(q1, 40.0)
    w2, _ = contour_winding(_f1_lower(q1), _half_disk_path(40.0, 2e-2), n_init=2 * npts)
    assert w == w2


def test_counting_radius_guard(q1):
    with pytest.raises(ValueError):
        resonance_count(q1, 1000.0)


# -- forbidden domain -----------------------------------------------------------------

def test_forbidden_domain_cubic(cubic):
    states, _ = find_states(cubic, (-15.0, 15.0, -4.0, -1e-3))
    res = forbidden_domain_check(cubic, states)
    assert res["C1"] >= res["C1_half"]
    assert not res["violations"]
    assert len(res["margins"]) > 0


def test_forbidden_domain_needs_smooth_potential(q1):
    with pytest.raises(ValueError):
        forbidden_domain_check(q1, [])
