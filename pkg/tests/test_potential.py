import json

import numpy as np
import pytest

from diracres.jost import jost_values
from diracres.oracle import transfer_matrix_closed_form
from diracres.plane import Sheet
from diracres.potential import (PotentialError, constant_potential, derived_scalars,
                                free_potential, gauge_transform, load_potential,
                                make_potential, save_potential)


# -- make_potential ------------------------------------------------------------------

def test_zero_potential_rejected():
    with pytest.raises(PotentialError):
        make_potential([{"lo": 0.0, "hi": 1.0}], m=1.0)


def test_zero_potential_allowed_with_free_flag():
    P = make_potential([{"lo": 0.0, "hi": 1.0}], m=1.0, free=True)
    assert P.free and P.gamma == 1.0


def test_constant_q_valid():
    P = make_potential([{"lo": 0.0, "hi": 1.0, "q": [1.0]}], m=1.0)
    assert P.gamma == 1.0
    assert P.q(0.5) == 1.0 and P.p1(0.5) == 0.0


def test_piecewise_constant_valid():
    P = make_potential([{"lo": 0.0, "hi": 0.5, "p1": [1.0]},
                        {"lo": 0.5, "hi": 1.0, "p2": [-1.0]}], m=1.0)
    assert P.gamma == 1.0
    assert P.p1(0.25) == 1.0 and P.p2(0.75) == -1.0
    assert P.piecewise_constant


@pytest.mark.parametrize("segments, m", [
    ([{"lo": 0.0, "hi": 1.0, "q": [1.0]}], -1.0),
    ([{"lo": 0.0, "hi": 1.0, "q": [1.0]}], 0.0),
    ([{"lo": 0.0, "hi": 0.6, "q": [1.0]}, {"lo": 0.5, "hi": 1.0, "q": [1.0]}], 1.0),
    ([{"lo": 0.5, "hi": 1.0, "q": [1.0]}, {"lo": 0.0, "hi": 0.5, "q": [1.0]}], 1.0),
    ([{"lo": 0.0, "hi": 1.0, "q": [1.0 + 1.0j]}], 1.0),
    ([{"lo": 1.0, "hi": 0.5, "q": [1.0]}], 1.0),
])
def test_invalid_input_rejected(segments, m):
    with pytest.raises(PotentialError):
        make_potential(segments, m)


def test_gamma_must_match_support():
    with pytest.raises(PotentialError):
        make_potential([{"lo": 0.0, "hi": 1.0, "q": [1.0]}], m=1.0, gamma=2.0)


def test_vanishes_outside_support():
    P = make_potential([{"lo": 0.0, "hi": 1.0, "q": [1.0, 2.0]}], m=1.0)
    assert np.all(P.q(np.array([-0.1, 1.1, 5.0])) == 0.0)


def test_round_trip(tmp_path, cubic):
    path = tmp_path / "p.json"
    save_potential(cubic, path)
    Q = load_potential(path)
    assert Q.content_hash() == cubic.content_hash()
    assert json.loads(path.read_text())["gamma"] == 1.0


def test_free_round_trip(tmp_path):
    P = free_potential(2.0, 3.0)
    save_potential(P, tmp_path / "f.json")
    Q = load_potential(tmp_path / "f.json")
    assert Q.free and Q.m == 2.0 and Q.gamma == 3.0


# -- derived_scalars -----------------------------------------------------------------

def test_scalars_free():
    ds = derived_scalars(free_potential(1.0))
    assert ds.omega0 == 0.0 and ds.B0 == 0.0


def test_scalars_q_const(q1):
    ds = derived_scalars(q1)
    assert ds.omega0 == 0.0
    assert ds.B0 == pytest.approx(2.0, abs=1e-15)


def test_scalars_p1_const():
    # w = q - i p, so w(0) = -i and B0 = 3 - i
    P = constant_potential([(0.0, 1.0, 2.0, 0.0, 0.0)], 1.0)
    ds = derived_scalars(P)
    assert ds.omega0 == pytest.approx(1.0)
    assert ds.p0 == pytest.approx(1.0)
    assert ds.B0 == pytest.approx(3.0 - 1.0j, abs=1e-15)


def test_omega0_is_half_trace(cubic):
    ds = derived_scalars(cubic)
    x = np.linspace(0, cubic.gamma, 200001)
    tr = cubic.p1(x) + cubic.p2(x)
    assert ds.omega0 == pytest.approx(0.5 * np.trapezoid(tr, x), rel=1e-9)


def test_scalars_invariant_under_refinement():
    a = make_potential([{"lo": 0.0, "hi": 1.0, "p1": [1.0, -1.0], "q": [0.5, 0.0, 2.0]}], 1.0)
    # same function with a breakpoint at 0.4 (coefficients recentred)
    lo2 = 0.4
    b = make_potential([
        {"lo": 0.0, "hi": lo2, "p1": [1.0, -1.0], "q": [0.5, 0.0, 2.0]},
        {"lo": lo2, "hi": 1.0, "p1": [1.0 - lo2, -1.0],
         "q": [0.5 + 2.0 * lo2 ** 2, 4.0 * lo2, 2.0]},
    ], 1.0)
    da, db = derived_scalars(a), derived_scalars(b)
    assert db.omega0 == pytest.approx(da.omega0, abs=1e-14)
    assert db.B0 == pytest.approx(da.B0, abs=1e-14)


# -- gauge_transform -----------------------------------------------------------------

def test_gauge_identity_without_trace(q1):
    assert gauge_transform(q1) is q1


def test_gauge_removes_trace():
    P = constant_potential([(0.0, 1.0, 0.7, 0.7, 0.0)], 1.0)
    G = gauge_transform(P)
    x = np.linspace(0, 1, 101)
    assert np.max(np.abs(G.p1(x) + G.p2(x))) < 1e-12
    assert derived_scalars(G).omega0 == pytest.approx(0.0, abs=1e-12)


def test_gauge_constant_coefficients():
    # q = 0, p1 = p2 = c: W = c (gamma - x), pt = m cos 2W - m, qt = m sin 2W
    c, m = 0.7, 1.0
    P = constant_potential([(0.0, 1.0, c, c, 0.0)], m)
    G = gauge_transform(P)
    x = np.linspace(0, 1, 57)
    W = c * (1.0 - x)
    assert np.allclose(G.p1(x), m * np.cos(2 * W) - m, atol=1e-12)
    assert np.allclose(G.q(x), m * np.sin(2 * W), atol=1e-12)


def test_gauge_same_jost_function():
    P = constant_potential([(0.0, 1.0, 2 * np.pi, 2 * np.pi, 0.3)], 1.0)   # int v = 2 pi
    G = gauge_transform(P)
    lam = np.array([2.0 + 1.0j, -1.5 + 0.5j, 3.0 - 2.0j, 0.5j])
    a = jost_values(P, lam)
    b = jost_values(G, lam)
    assert np.max(np.abs(a - b)) < 1e-8
    # and against the closed form of the untransformed potential
    c = transfer_matrix_closed_form(P, lam)["f1"]
    assert np.max(np.abs(a - c)) < 1e-8
