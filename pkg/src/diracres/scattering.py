"""
Scattering matrix, scattering phase and the jump function Omega.

For real ``|lam| > m`` the scattering matrix is
``S = -conj(f1(0, lam + i0)) / f1(0, lam + i0)`` and the phase is
``phi_sc = arg f1 + pi/2`` so that ``S = exp(-2i phi_sc)``.  ``Omega`` is the
jump of ``(1/2i) Tr V R0`` across the continuous spectrum; it is computed
segment by segment with exact polynomial-times-exponential integrals.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import factorial

import numpy as np
from numpy.polynomial import polynomial as npoly

from .jost import asymptotic_B, jost_values
from .plane import BranchPointError, Sheet, analytic_k
from .potential import Potential, derived_scalars

SERIES_RADIUS = 1e-3


class ScatteringError(RuntimeError):
    """The Jost function vanished on the continuous spectrum."""


# -- exact segment integrals ----------------------------------------------------

def _poly_exp_integral(a: np.ndarray, h: float, c: complex) -> complex:
    """``int_0^h sum_j a_j s^j exp(c s) ds`` in closed form."""
    a = np.atleast_1d(a)
    ch = c * h
    if abs(ch) <= 8.0:
        # power series in c
        total, l, cl = 0.0 + 0.0j, 0, 1.0 + 0.0j
        j = np.arange(len(a))
        while True:
            term = cl / factorial(l) * np.sum(a * h ** (j + l + 1) / (j + l + 1))
            total += term
            if l > 6 and abs(cl) * h ** l / factorial(l) * np.sum(np.abs(a) * h ** (j + 1)) < 1e-18:
                break
            l += 1
            cl = cl * c
            if l > 200:
                break
        return complex(total)
    e = np.exp(ch)
    J = (e - 1.0) / c
    total = a[0] * J
    for n in range(1, len(a)):
        J = (h ** n * e - n * J) / c
        total += a[n] * J
    return complex(total)


def _shifted_monomial(lo: float, n: int) -> np.ndarray:
    """Coefficients of ``(lo + s)^n`` in powers of s."""
    return npoly.polypow([lo, 1.0], n) if n else np.array([1.0])


def _poly_moment(a: np.ndarray, lo: float, h: float, n: int) -> float:
    """``int_0^h a(s) (lo + s)^n ds``."""
    c = npoly.polyint(npoly.polymul(a, _shifted_monomial(lo, n)))
    return float(npoly.polyval(h, c))


def _omega_small_k(P: Potential, lam: float, k: float) -> float:
    """Series form of Omega for ``|k| gamma`` below the switch radius."""
    alpha_k = lam + P.m            # alpha = (lam+m)/k, used as alpha * sin^2
    beta = k / (lam + P.m) if lam + P.m != 0 else None
    total = 0.0
    for s in P.segments:
        lo, h = s.lo, s.length
        # sin^2(kt)/k = k t^2 - k^3 t^4/3 + 2 k^5 t^6 / 45
        sin2_over_k = (k * _poly_moment(s.p1, lo, h, 2)
                       - k ** 3 / 3.0 * _poly_moment(s.p1, lo, h, 4)
                       + 2.0 * k ** 5 / 45.0 * _poly_moment(s.p1, lo, h, 6))
        total += alpha_k * sin2_over_k
        # cos^2(kt) = 1 - k^2 t^2 + k^4 t^4 / 3
        cos2 = (_poly_moment(s.p2, lo, h, 0) - k ** 2 * _poly_moment(s.p2, lo, h, 2)
                + k ** 4 / 3.0 * _poly_moment(s.p2, lo, h, 4))
        if beta is None:
            # lam = -m with k = 0 is excluded by the caller
            raise BranchPointError("Omega undefined at lambda = -m")
        total += beta * cos2
        # sin(2kt) = 2kt - 4k^3 t^3/3 + 4 k^5 t^5 / 15
        total += (2 * k * _poly_moment(s.q, lo, h, 1)
                  - 4 * k ** 3 / 3.0 * _poly_moment(s.q, lo, h, 3)
                  + 4 * k ** 5 / 15.0 * _poly_moment(s.q, lo, h, 5))
    return float(total)


def omega(lam: float, P: Potential) -> float:
    """Jump function ``Omega(lam)`` for real ``lam``.

    ``int_0^gamma [p1 (lam+m)/k sin^2 kt + p2 k/(lam+m) cos^2 kt + q sin 2kt] dt``
    for ``|lam| > m`` and exactly 0 inside the gap.

    Raises
    ------
    BranchPointError
        At ``lam = +-m``.
    """
    lam = float(lam)
    m = P.m
    if abs(abs(lam) - m) == 0.0:
        raise BranchPointError("Omega undefined at lambda = +-m")
    if abs(lam) < m:
        return 0.0
    k = float(analytic_k(complex(lam), m).real)
    if abs(k) * P.gamma < SERIES_RADIUS:
        return _omega_small_k(P, lam, k)
    alpha = (lam + m) / k
    beta = k / (lam + m)
    c = 2j * k
    total = 0.0
    for s in P.segments:
        lo, h = s.lo, s.length
        ep = np.exp(c * lo) * _poly_exp_integral(np.asarray(s.p1, float), h, c)
        eq = np.exp(c * lo) * _poly_exp_integral(np.asarray(s.q, float), h, c)
        e2 = np.exp(c * lo) * _poly_exp_integral(np.asarray(s.p2, float), h, c)
        I1 = _poly_moment(s.p1, lo, h, 0)
        I2 = _poly_moment(s.p2, lo, h, 0)
        # sin^2 = (1 - cos 2kt)/2, cos^2 = (1 + cos 2kt)/2, k real
        total += alpha * 0.5 * (I1 - ep.real)
        total += beta * 0.5 * (I2 + e2.real)
        total += eq.imag
    return float(total)


def omega_array(lam, P: Potential) -> np.ndarray:
    return np.array([omega(x, P) for x in np.atleast_1d(lam)])


# -- scattering matrix and phase ------------------------------------------------

def _f1_real(lam, P: Potential) -> np.ndarray:
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(np.abs(lam) <= P.m):
        raise ValueError("scattering quantities need |lambda| > m")
    f1 = jost_values(P, lam.astype(complex), Sheet.PHYSICAL)
    if np.any(np.abs(f1) == 0.0):
        raise ScatteringError("Jost function vanishes on the continuous spectrum")
    return f1


def scattering_matrix(lam: float, P: Potential) -> complex:
    """``S(lam) = -conj(f1) / f1`` at ``lam + i0``, ``|lam| > m``."""
    f1 = _f1_real([lam], P)[0]
    return complex(-np.conj(f1) / f1)


@dataclass(frozen=True)
class PhaseTrace:
    """Scattering data on a real grid."""

    lam: np.ndarray
    S: np.ndarray
    phi: np.ndarray
    omega: np.ndarray
    omega0: float

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["lambda", "re_S", "im_S", "phi_sc", "omega"])
            for row in zip(self.lam, self.S.real, self.S.imag, self.phi, self.omega):
                wr.writerow([f"{v:.17g}" for v in row])


def _unwrapped_ray(lam: np.ndarray, P: Potential, anchor_index: int, omega0: float,
                   max_jump: float = np.pi / 4, max_points: int = 200000) -> np.ndarray:
    """Continuous ``arg f1 + pi/2`` on a sorted grid inside one spectral ray.

    Intervals whose phase increment exceeds ``max_jump`` are bisected until
    the unwrapping is unambiguous.  The additive ``2 pi`` branch is fixed so
    the value at ``anchor_index`` is closest to ``omega0``.
    """
    xs = list(lam)
    vals = list(np.angle(_f1_real(lam, P)))
    i = 0
    while i < len(xs) - 1:
        d = np.angle(np.exp(1j * (vals[i + 1] - vals[i])))
        if abs(d) > max_jump and xs[i + 1] - xs[i] > 1e-12 * (1 + abs(xs[i])):
            mid = 0.5 * (xs[i] + xs[i + 1])
            xs.insert(i + 1, mid)
            vals.insert(i + 1, float(np.angle(_f1_real([mid], P)[0])))
            if len(xs) > max_points:
                raise ScatteringError("phase refinement did not converge")
            continue
        i += 1
    ph = np.unwrap(np.array(vals)) + np.pi / 2
    idx = np.searchsorted(np.array(xs), lam)
    ph = ph[idx]
    shift = 2 * np.pi * np.round((omega0 - ph[anchor_index]) / (2 * np.pi))
    return ph + shift


def scattering_phase(grid, P: Potential) -> PhaseTrace:
    """Scattering matrix, unwrapped phase and Omega on a real grid.

    The phase on ``lam > m`` is anchored at the largest grid point and on
    ``lam < -m`` at the most negative one, using ``phi_sc -> Omega0``.
    """
    lam = np.sort(np.asarray(grid, dtype=float))
    if np.any(np.abs(lam) <= P.m):
        raise ValueError("grid must lie in |lambda| > m")
    om0 = derived_scalars(P).omega0
    f1 = _f1_real(lam, P)
    S = -np.conj(f1) / f1
    phi = np.empty(lam.shape)
    pos = lam > P.m
    neg = ~pos
    if np.any(pos):
        phi[pos] = _unwrapped_ray(lam[pos], P, int(np.sum(pos)) - 1, om0)
    if np.any(neg):
        phi[neg] = _unwrapped_ray(lam[neg], P, 0, om0)
    return PhaseTrace(lam, S, phi, omega_array(lam, P), om0)


def phase_expansion_residual(lam, P: Potential) -> np.ndarray:
    """``phi_sc - Omega0 - Re B(lam) / (2 lam)`` on a grid of large ``lam``.

    ``phi_sc`` is anchored to ``Omega0`` at the largest grid point, which is
    the correct branch once the residual there is far below ``pi``.
    """
    lam = np.asarray(lam, dtype=float)
    tr = scattering_phase(lam, P)
    B = np.array([asymptotic_B(x, P) for x in tr.lam])
    return tr.phi - tr.omega0 - B.real / (2 * tr.lam)
