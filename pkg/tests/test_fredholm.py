import numpy as np
import pytest

from diracres import fixtures
from diracres.fredholm import (DeterminantError, det2, det2_boundary, det2_trace_series,
                               hs_leading_bound, hs_norm_certificate, hs_norm_estimate,
                               identity_a_eq_D, identity_S_from_D, kernel_matrix,
                               relativistic_integral)
from diracres.jost import jost_function
from diracres.plane import quasimomentum
from diracres.potential import derived_scalars
from diracres.scattering import omega, scattering_phase


# -- det2 ----------------------------------------------------------------------------

def test_det_free():
    for z in (1 + 2j, -3 + 0.1j, 50j):
        assert det2(z, fixtures.free()).value == 1


def test_det_high_in_upper_plane(cubic):
    vals = [abs(det2(1j * t, cubic).value - 1) for t in (5.0, 50.0, 200.0)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-3


def test_det_bounded_by_hs_norm(q1):
    d = det2(1 + 2j, q1)
    assert abs(d.value) <= np.exp(0.5 * d.hs_norm ** 2)


def test_det_real_axis_rejected(q1):
    with pytest.raises(ValueError):
        det2(2.0, q1)


def test_det_factorization_independent(cubic):
    a = det2(1 + 2j, cubic, factorization="symmetric").value
    b = det2(1 + 2j, cubic, factorization="one-sided").value
    assert abs(a - b) < 1e-12


def test_det_conjugation(q1):
    z = 2 + 1.5j
    assert det2(np.conj(z), q1).value == pytest.approx(np.conj(det2(z, q1).value), abs=1e-12)


def test_det_cauchy_riemann(cubic):
    z, h = 1 + 2j, 1e-3
    dx = (det2(z + h, cubic).value - det2(z - h, cubic).value) / (2 * h)
    dy = (det2(z + 1j * h, cubic).value - det2(z - 1j * h, cubic).value) / (2 * h)
    assert abs(dy - 1j * dx) < 1e-6


def test_det_N_convergence_smooth(cubic):
    vals = [det2(1 + 2j, cubic, N).value for N in (80, 160, 320, 640)]
    d = np.abs(np.diff(vals))
    orders = np.log2(d[:-1] / d[1:])
    assert np.all(orders >= 4)


def test_det_reported_error(cubic):
    d = det2(1 + 2j, cubic, 320)
    ref = det2(1 + 2j, cubic, 1280).value
    assert abs(d.value - ref) <= d.discretization_error


def test_kernel_shapes(q1):
    A, pan = kernel_matrix(1 + 1j, q1, 80)
    assert A.shape == (2 * pan.x.size, 2 * pan.x.size)


# -- trace series --------------------------------------------------------------------

def test_series_free():
    assert det2_trace_series(10j, fixtures.free()) == (1.0, 0.0)


def test_series_matches_det_at_10i(q1):
    # eps from the leading bound exceeds 1 at 10i for q = 1; the discretized
    # Hilbert-Schmidt norm gives eps < 1 there
    val, rem = det2_trace_series(10j, q1, n_max=8, eps_source="hs")
    d = det2(10j, q1)
    assert abs(np.log(val) - np.log(d.value)) <= rem + d.discretization_error


def test_series_outside_domain(q1):
    with pytest.raises(DeterminantError):
        det2_trace_series(10j, q1, eps_source="bound")


def test_series_remainder_geometric(q1):
    rems = [det2_trace_series(60j, q1, n_max=n)[1] for n in (2, 4, 6, 8)]
    ratios = np.array(rems[1:]) / np.array(rems[:-1])
    assert np.all(ratios < 1)
    assert np.ptp(ratios) < 0.5 * ratios.mean()


# -- Hilbert-Schmidt certificate -----------------------------------------------------

def test_hs_free():
    hs, bound, margin = hs_norm_certificate(2j, fixtures.free())
    assert hs == 0 and margin >= 0


def test_hs_margin_positive(q1):
    hs, bound, margin = hs_norm_certificate(5j, q1)
    assert margin > 0


def test_hs_decays_along_imaginary_axis(q1):
    vals = [hs_norm_estimate(1j * t, q1) for t in (1.0, 10.0, 100.0)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 0.2 * vals[0]


def test_hs_leading_bound_value():
    assert hs_leading_bound(5j, 1.0) == pytest.approx(4 * np.pi / 5 * 5 / np.sqrt(26))


# -- identities ----------------------------------------------------------------------

def test_identity_S_free():
    lhs, rhs, diff = identity_S_from_D(2.0, fixtures.free())
    assert lhs == pytest.approx(1.0) and rhs == pytest.approx(1.0)


def test_identity_S_q1(q1):
    lhs, rhs, diff = identity_S_from_D(2.0, q1, 200)
    assert diff < 5e-3


def test_phase_equals_omega_plus_arg_D(q1):
    lam = 2.0
    Dp, _ = det2_boundary(lam, q1, +1)
    phi = scattering_phase([lam, 40.0], q1).phi[0]
    d = phi - omega(lam, q1) - np.angle(Dp)
    # equal modulo pi
    assert abs(np.sin(d)) < 5e-3


def test_identity_a_free():
    lhs, rhs, diff = identity_a_eq_D(1 + 1j, fixtures.free())
    k0 = quasimomentum(1 + 1j, 1.0).k0
    assert lhs == pytest.approx(k0) and rhs == pytest.approx(k0)


def test_identity_a_bump(bump):
    lhs, rhs, diff = identity_a_eq_D(1 + 1j, bump, 200, 400.0)
    assert diff < 1e-2


def test_identity_a_high(cubic):
    z = 60j
    p = quasimomentum(z, 1.0)
    target = p.k0 * np.exp(1j * derived_scalars(cubic).omega0)
    lhs, rhs, _ = identity_a_eq_D(z, cubic, 200, 400.0)
    # first-order correction is O(1/|lam|)
    assert abs(lhs / target - 1) < 2e-2 and abs(rhs / target - 1) < 2e-2
    assert lhs == pytest.approx(jost_function(p, cubic).f1)


# -- relativistic integral -----------------------------------------------------------

def _family():
    return [x + 1j * y for x in (-6.0, -2.5, 2.5, 6.0, 0.0) for y in (0.5, 2.0, 10.0, 30.0)]


def test_relativistic_10i_with_fitted_C():
    def scale(z):
        return max(1 / abs(z) ** 2, 1 / abs(z - 1) ** 2, 1 / abs(z + 1) ** 2)
    C = max(abs(relativistic_integral(z)[2]) / scale(z) for z in _family())
    num, closed, diff = relativistic_integral(10j)
    assert abs(diff) <= C * scale(10j)


def test_relativistic_two_branch_closed_form():
    for z in _family():
        num, closed, diff = relativistic_integral(z, branches=2)
        assert abs(diff) < 1e-9 * closed


def test_relativistic_ray_scaling():
    # leading term scales like 1/|Im lam| at fixed direction
    vals = [relativistic_integral(t * (1 + 1j))[0] * t for t in (20.0, 40.0, 80.0)]
    assert vals[2] == pytest.approx(vals[1], rel=0.05)


def test_relativistic_conjugation():
    z = 2.5 + 2j
    assert relativistic_integral(z)[0] == pytest.approx(relativistic_integral(np.conj(z))[0],
                                                        rel=1e-12)
