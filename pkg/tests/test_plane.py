import numpy as np
import pytest

from diracres.plane import (BranchPointError, Sheet, cos_sinc, free_fundamental,
                            free_jost, free_resolvent_kernel, free_system_matrix,
                            k0, m0, quasimomentum, quasimomentum_array, spectral_weight,
                            virtual_chart)


# -- quasimomentum -------------------------------------------------------------------

def test_k_real_above_m():
    assert quasimomentum(2.0, 1.0, Sheet.PHYSICAL).k == pytest.approx(np.sqrt(3.0))


def test_k_negative_below_minus_m():
    assert quasimomentum(-2.0, 1.0, Sheet.PHYSICAL).k == pytest.approx(-np.sqrt(3.0))


def test_k_gap_rims():
    assert quasimomentum(0.0, 1.0, Sheet.PHYSICAL).k == pytest.approx(1j)
    assert quasimomentum(0.0, 1.0, Sheet.NONPHYSICAL).k == pytest.approx(-1j)


def test_k_upper_half_plane():
    p = quasimomentum(1 + 1j, 1.0)
    assert p.sheet is Sheet.PHYSICAL
    assert p.k.imag > 0
    assert p.k ** 2 == pytest.approx((1 + 1j) ** 2 - 1, abs=1e-14)


def test_k_lower_half_plane_continued():
    p = quasimomentum(3 - 2j, 1.0)
    assert p.sheet is Sheet.NONPHYSICAL
    assert p.k.imag < 0
    assert p.k ** 2 == pytest.approx((3 - 2j) ** 2 - 1, abs=1e-13)


def test_branch_point_rejected():
    for lam in (1.0, -1.0):
        with pytest.raises(BranchPointError):
            quasimomentum(lam, 1.0, Sheet.PHYSICAL)


def test_gap_needs_sheet():
    with pytest.raises(ValueError):
        quasimomentum_array(np.array([0.3 + 0j]), 1.0, None)


def test_k_symmetries():
    x, y = np.meshgrid(np.linspace(-5, 5, 21), np.linspace(0.1, 5, 11))
    lam = (x + 1j * y).ravel()
    k = quasimomentum_array(lam, 1.0)
    assert np.allclose(quasimomentum_array(-lam, 1.0), -k, atol=1e-13)
    assert np.allclose(quasimomentum_array(np.conj(lam), 1.0), np.conj(k), atol=1e-13)
    assert np.allclose(k ** 2, lam ** 2 - 1, atol=1e-12)


def test_virtual_chart():
    z = np.array([1e-3, 0.1 + 0.2j, 0.3j])
    for edge in (1, -1):
        lam, k = virtual_chart(z, 1.0, edge)
        assert np.allclose(k ** 2, lam ** 2 - 1, atol=1e-14)


# -- k0, m0 --------------------------------------------------------------------------

def test_k0_direct():
    p = quasimomentum(2.0, 1.0, Sheet.PHYSICAL)
    assert k0(p) == pytest.approx(-1j * np.sqrt(3.0))
    assert m0(p) * k0(p) == pytest.approx(1.0)


def test_k0_high_energy():
    p = quasimomentum(1e6j, 1.0)
    assert k0(p) == pytest.approx(-1j, abs=2e-6)


def test_k0_near_minus_m():
    eps = 1e-8
    p = quasimomentum(-1.0 + eps, 1.0, Sheet.PHYSICAL)
    assert k0(p).real == pytest.approx(-np.sqrt(eps / 2), rel=1e-6)
    assert abs(k0(p).imag) < 1e-15


# -- free fundamental matrix ---------------------------------------------------------

def test_fundamental_identity_at_zero():
    assert np.allclose(free_fundamental(0.0, 1.3 + 0.4j, 1.0), np.eye(2))


@pytest.mark.parametrize("lam", [1.0, -1.0, 1.0 + 1e-9, 2.0, 0.3, 5 - 0.2j, 0.5j, 1 + 0.5j])
def test_fundamental_det_one(lam):
    x = np.linspace(0, 4, 41)
    M = free_fundamental(x, lam, 1.0)
    assert np.max(np.abs(np.linalg.det(M) - 1)) < 1e-10


@pytest.mark.parametrize("lam", [5 - 2j, 20j])
def test_fundamental_det_one_growing(lam):
    # cancellation in det scales with |M|^2 when |Im k| x is large
    x = np.linspace(0, 4, 41)
    M = free_fundamental(x, lam, 1.0)
    scale = np.sum(np.abs(M) ** 2, axis=(-2, -1))
    assert np.max(np.abs(np.linalg.det(M) - 1) / scale) < 1e-14


@pytest.mark.parametrize("lam", [1.0, -1.0, 1.0 + 1e-9, 2.0, 0.3, 5 - 2j, 20j])
def test_fundamental_ode_residual(lam):
    x = np.linspace(0, 4, 41)
    M = free_fundamental(x, lam, 1.0)
    # ODE residual from a fourth-order difference stencil, relative to |M(x)|
    k = abs(np.sqrt(complex(lam) ** 2 - 1))
    h = 1e-3 / (1 + k)
    f = lambda s: free_fundamental(x + s, lam, 1.0)
    dM = (8 * (f(h) - f(-h)) - (f(2 * h) - f(-2 * h))) / (12 * h)
    A = free_system_matrix(lam, 1.0)
    scale = 1 + np.max(np.abs(M), axis=(-2, -1)) * (1 + abs(lam))
    res = np.max(np.abs(dM - A @ M), axis=(-2, -1)) / scale
    assert np.max(res) < 1e-10


def test_fundamental_continuity_at_series_switch():
    x = 1.0
    for k in (1e-3 * (1 - 1e-9), 1e-3 * (1 + 1e-9)):
        c, s = cos_sinc(k * k, x)
        assert abs(c - np.cos(k)) < 1e-15
        assert abs(s - np.sin(k) / k) < 1e-15


# -- free Jost solution --------------------------------------------------------------

def test_free_jost_at_zero():
    p = quasimomentum(2 + 1j, 1.0)
    assert np.allclose(free_jost(0.0, p), [p.k0, 1.0])


def test_free_jost_oscillatory_on_spectrum():
    p = quasimomentum(2.0, 1.0, Sheet.PHYSICAL)
    x = np.linspace(0, 10, 50)
    n = np.linalg.norm(free_jost(x, p), axis=-1)
    assert np.ptp(n) < 1e-13


def test_free_jost_decays_upper():
    p = quasimomentum(1 + 2j, 1.0)
    x = np.array([0.0, 5.0, 10.0])
    n = np.linalg.norm(free_jost(x, p), axis=-1)
    assert np.allclose(n / n[0], np.exp(-x * p.k.imag))


def test_free_jost_solves_ode():
    p = quasimomentum(-3 + 0.5j, 1.0)
    x, h = np.linspace(0, 2, 11), 1e-6
    d = (free_jost(x + h, p) - free_jost(x - h, p)) / (2 * h)
    A = free_system_matrix(p.lam, 1.0)
    assert np.max(np.abs(d - free_jost(x, p) @ A.T)) < 1e-8


# -- free resolvent kernel -----------------------------------------------------------

def test_resolvent_transpose_symmetry():
    p = quasimomentum(1j, 1.0)
    a = free_resolvent_kernel(1.0, 2.0, p)
    b = free_resolvent_kernel(2.0, 1.0, p)
    assert np.allclose(a, b.T, atol=1e-15)


def test_resolvent_applied_to_bump():
    # u = int R0(x, y) h(y) dy solves -i sigma2 u' + m sigma3 u - lam u = h, u1(0) = 0;
    # the y-integral is split at x so the kernel jump is integrated exactly
    m, lam = 1.0, 0.5 + 1.0j
    p = quasimomentum(lam, m)
    t, wt = np.polynomial.legendre.leggauss(60)

    def h(y):
        y = np.asarray(y, dtype=float)
        inside = y < 2
        return np.stack([np.sin(np.pi * y / 2) ** 2 * inside, (y * (2 - y)) ** 2 * inside], -1)

    def u(x):
        total = np.zeros(2, complex)
        for a, b in ((0.0, x), (x, 2.0)):
            y = 0.5 * (b - a) * t + 0.5 * (a + b)
            R = free_resolvent_kernel(np.full(y.shape, x), y, p)
            total += np.einsum("j,jab,jb->a", 0.5 * (b - a) * wt, R, h(y))
        return total

    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    dx = 1e-5
    for x in (0.35, 1.05, 1.7):
        du = (u(x + dx) - u(x - dx)) / (2 * dx)
        lhs = J @ du + m * np.diag([1.0, -1.0]) @ u(x) - lam * u(x)
        assert np.max(np.abs(lhs - h(x))) < 1e-6
    assert abs(u(1e-14)[0]) < 1e-12


def test_resolvent_virtual_scan():
    m = 1.0
    for eps in (1e-6, 1e-8):
        p = quasimomentum(-m + eps, m, Sheet.PHYSICAL)
        r22 = free_resolvent_kernel(0.3, 0.6, p)[1, 1]
        assert r22.real / (-np.sqrt(2 * m / eps)) == pytest.approx(1.0, abs=1e-3)


# -- spectral weight -----------------------------------------------------------------

def test_spectral_weight_values():
    assert spectral_weight(2.0, 1.0) == pytest.approx(np.sqrt(3) / (3 * np.pi))
    assert spectral_weight(-2.0, 1.0) == pytest.approx(np.sqrt(3) / np.pi)


def test_spectral_weight_edge():
    s = 1 + np.array([1e-4, 1e-6])
    r = spectral_weight(s, 1.0) / np.sqrt(s - 1)
    assert r[0] == pytest.approx(r[1], rel=1e-4)


def test_spectral_weight_gap_rejected():
    with pytest.raises(ValueError):
        spectral_weight(0.5, 1.0)
