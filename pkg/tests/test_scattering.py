import csv

import numpy as np
import pytest

from diracres import fixtures
from diracres.oracle import reference_quad
from diracres.plane import BranchPointError
from diracres.potential import derived_scalars
from diracres.scattering import (omega, omega_array, phase_expansion_residual,
                                 scattering_matrix, scattering_phase)


def _omega_quad(lam, P):
    m = P.m
    k = np.sign(lam) * np.sqrt(lam * lam - m * m)
    a, b = (lam + m) / k, k / (lam + m)

    def f(t):
        return (P.p1(t) * a * np.sin(k * t) ** 2 + P.p2(t) * b * np.cos(k * t) ** 2
                + P.q(t) * np.sin(2 * k * t))
    total = 0.0
    for lo, hi in zip(P.breakpoints[:-1], P.breakpoints[1:]):
        total += reference_quad(lambda t: complex(np.squeeze(f(t))), lo, hi).real
    return total


# -- Omega ---------------------------------------------------------------------------

def test_omega_zero_in_gap(q1):
    for lam in (-0.9, 0.0, 0.5):
        assert omega(lam, q1) == 0.0


def test_omega_free():
    P = fixtures.free()
    assert np.all(omega_array([-5.0, 1.5, 40.0], P) == 0.0)


@pytest.mark.parametrize("lam", [-7.3, -1.2, 1.0 + 1e-5, 1.5, 4.0, 25.0])
def test_omega_matches_adaptive_quadrature(cubic, lam):
    assert omega(lam, cubic) == pytest.approx(_omega_quad(lam, cubic), abs=1e-10)


def test_omega_matches_quadrature_jumps(q1):
    for lam in (1.3, -2.2, 9.0):
        assert omega(lam, q1) == pytest.approx(_omega_quad(lam, q1), abs=1e-10)


def test_omega_limit(cubic):
    om0 = derived_scalars(cubic).omega0
    lam = np.array([50.0, 100.0, 200.0, 400.0])
    err = np.abs(omega_array(lam, cubic) - om0)
    assert np.all(err * lam < 5.0)
    assert err[-1] < err[0]


def test_omega_branch_point(q1):
    with pytest.raises(BranchPointError):
        omega(1.0, q1)
    with pytest.raises(BranchPointError):
        omega(-1.0, q1)


# -- scattering matrix and phase -----------------------------------------------------

def test_free_scattering():
    tr = scattering_phase([-3.0, 1.5, 2.0, 10.0], fixtures.free())
    assert np.allclose(tr.S, 1.0, atol=1e-14)
    assert np.allclose(tr.phi, 0.0, atol=1e-14)


def test_unitarity(q1):
    assert abs(scattering_matrix(1.5, q1)) == pytest.approx(1.0, abs=1e-13)


def test_phase_consistent_with_S(bump):
    tr = scattering_phase(np.linspace(1.1, 30.0, 60), bump)
    assert np.allclose(np.exp(-2j * tr.phi), tr.S, atol=1e-11)


def test_phase_continuous(bump):
    tr = scattering_phase(np.linspace(1.05, 30.0, 400), bump)
    assert np.max(np.abs(np.diff(tr.phi))) < 0.5


def test_gap_rejected(q1):
    with pytest.raises(ValueError):
        scattering_phase([0.5, 2.0], q1)


def test_phase_expansion_smooth(cubic):
    lam = np.geomspace(20.0, 320.0, 9)
    r = np.abs(phase_expansion_residual(lam, cubic))
    slope = np.polyfit(np.log(lam), np.log(r), 1)[0]
    # remainder is o(1/lam)
    assert slope < -1.5


def test_csv_columns(q1, tmp_path):
    tr = scattering_phase([1.5, 2.0, 3.0], q1)
    path = tmp_path / "s.csv"
    tr.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["lambda", "re_S", "im_S", "phi_sc", "omega"]
    assert len(rows) == 4
    assert float(rows[2][0]) == 2.0
