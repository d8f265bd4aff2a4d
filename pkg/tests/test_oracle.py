import numpy as np
import pytest

from diracres import fixtures
from diracres.jost import jost_values
from diracres.oracle import (PiecewiseConstantPotential, brute_force_zero_scan,
                             reference_quad, transfer_matrix_closed_form)
from diracres.plane import Sheet, quasimomentum_array
from diracres.states import F_values, StateClass, find_states


def test_free_gives_k0():
    P = PiecewiseConstantPotential(np.array([0.0, 1.0]), np.zeros((1, 3)), 1.0)
    lam = np.array([2 + 1j, -3 + 0.5j, 0.3 + 2j])
    out = transfer_matrix_closed_form(P, lam, Sheet.PHYSICAL)
    k = quasimomentum_array(lam, 1.0, Sheet.PHYSICAL)
    assert np.allclose(out["f1"], (lam + 1.0) / (1j * k), rtol=1e-13)


def test_one_cell_matches_ode(q1):
    lam = np.array([2 + 1j])
    a = transfer_matrix_closed_form(q1, lam, Sheet.PHYSICAL)["f1"][0]
    b = jost_values(q1, lam, Sheet.PHYSICAL)[0]
    assert abs(a - b) < 1e-10 * abs(b)


@pytest.mark.parametrize("i", range(5))
def test_family_matches_ode(i):
    P = fixtures.piecewise_constant_family()[i]
    lam = np.array([2 + 1j, -4 - 0.5j, 0.2 + 3j])
    for sheet in (Sheet.PHYSICAL, Sheet.NONPHYSICAL):
        a = transfer_matrix_closed_form(P, lam, sheet)["f1"]
        b = jost_values(P, lam, sheet)
        assert np.allclose(a, b, rtol=1e-10)


def test_refined_cells_agree(q1):
    P = PiecewiseConstantPotential.from_potential(q1)
    lam = np.array([2 + 1j, 7 - 2j])
    a = transfer_matrix_closed_form(P, lam, Sheet.PHYSICAL)["f1"]
    b = transfer_matrix_closed_form(P.refine(4), lam, Sheet.PHYSICAL)["f1"]
    assert np.allclose(a, b, rtol=1e-12)


def test_round_trip(q1):
    P = PiecewiseConstantPotential.from_potential(q1)
    assert P.to_potential().content_hash() == q1.content_hash()


def test_not_piecewise_constant(cubic):
    with pytest.raises(ValueError):
        PiecewiseConstantPotential.from_potential(cubic)


def test_scan_free_line():
    hits = brute_force_zero_scan(lambda z: F_values(fixtures.free(), z), (-3.0, 3.0, 0.0, 0.0),
                                 0.01)
    assert len(hits) == 1 and abs(hits[0] + 1) < 0.01


def test_scan_matches_finder(q1):
    step = 0.05
    f = lambda z: transfer_matrix_closed_form(q1, z, Sheet.NONPHYSICAL)["f1"]
    hits = brute_force_zero_scan(f, (0.0, 20.0, -5.0, 0.0), step)
    states, _ = find_states(q1, (-0.5, 20.5, -5.5, -1e-3))
    res = [s.lam for s in states if s.cls is StateClass.RESONANCE]
    inner = [z for z in res if 0.1 < z.real < 19.9 and -4.9 < z.imag < -0.1]
    assert inner
    for z in inner:
        assert min(abs(np.array(hits) - z)) <= 2 * step
    for h in hits:
        assert min(abs(np.array(res) - h)) <= 2 * step


def test_no_resonances_in_upper_half(q1):
    states, _ = find_states(q1, (-10.0, 10.0, 0.05, 4.0))
    assert not [s for s in states if s.cls is StateClass.RESONANCE]


def test_reference_quad():
    val = reference_quad(lambda x: np.exp(1j * x), 0.0, np.pi)
    assert val == pytest.approx(2j, abs=1e-12)
