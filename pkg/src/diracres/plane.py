"""
Quasi-momentum, sheet bookkeeping and free-operator objects.

The free system is ``f' = A0 f`` with ``A0 = [[0, lam+m], [m-lam, 0]]`` so
that ``A0 @ A0 = -k^2 I`` with ``k^2 = lam^2 - m^2``.  This is the only
module that takes square roots of ``lam^2 - m^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# below this |k x| the even-in-k functions use Taylor forms
SERIES_SWITCH = 1e-3


class Sheet(str, Enum):
    PHYSICAL = "physical"
    NONPHYSICAL = "nonphysical"


class BranchPointError(ValueError):
    """Raised when an operation needs k != 0 but lam = +-m."""


def analytic_k(lam, m: float):
    """Quasi-momentum continued analytically from the upper half-plane.

    Positive for real lam > m, negative for real lam < -m, Im k > 0 in the
    upper half-plane and Im k < 0 in the lower half-plane.  Undefined on
    the gap [-m, m].
    """
    lam = np.asarray(lam, dtype=complex)
    z = lam / m
    with np.errstate(divide="ignore", invalid="ignore"):
        k = m * z * np.sqrt(1.0 - 1.0 / (z * z))
    return k


def quasimomentum_array(lam, m: float, sheet=None):
    """Vectorized quasi-momentum.

    Parameters
    ----------
    lam : array_like of complex
    m : float
    sheet : Sheet, str or None
        ``PHYSICAL`` returns the root with Im k > 0 (boundary value lam+i0
        on the continuous spectrum), ``NONPHYSICAL`` the root with Im k < 0
        (boundary value lam-i0 on the gap).  ``None`` picks physical in the
        upper half-plane and nonphysical in the lower one.

    Returns
    -------
    ndarray of complex
    """
    lam = np.asarray(lam, dtype=complex)
    k = np.array(analytic_k(lam, m), dtype=complex, ndmin=1).reshape(lam.shape)
    real = lam.imag == 0
    gap = real & (np.abs(lam.real) < m)
    if np.any(real & (np.abs(np.abs(lam.real) - m) == 0)):
        raise BranchPointError("lambda = +-m is a branch point")
    if sheet is None:
        if np.any(gap):
            raise ValueError("gap points need an explicit sheet")
        return k
    sheet = Sheet(sheet)
    # gap rim: k = +- i sqrt(m^2 - lam^2)
    kg = 1j * np.sqrt(np.maximum(m * m - lam.real ** 2, 0.0))
    k = np.where(gap, kg, k)
    if sheet is Sheet.PHYSICAL:
        flip = (~real & (lam.imag < 0))
    else:
        flip = (~real & (lam.imag > 0)) | gap
    return np.where(flip, -k, k)


@dataclass(frozen=True)
class SpectralPoint:
    """Energy together with its sheet and the consistent quasi-momentum."""

    lam: complex
    sheet: Sheet
    k: complex
    m: float

    @property
    def k0(self) -> complex:
        return k0(self)

    @property
    def m0(self) -> complex:
        return m0(self)


def quasimomentum(lam, m: float, sheet=None) -> SpectralPoint:
    """Quasi-momentum of a single energy on the requested sheet.

    Examples
    --------
    >>> quasimomentum(2.0, 1.0).k
    (1.7320508075688772+0j)
    >>> quasimomentum(0.0, 1.0, "physical").k
    1j
    """
    lam = complex(lam)
    if sheet is None:
        sheet = Sheet.NONPHYSICAL if lam.imag < 0 else Sheet.PHYSICAL
    sheet = Sheet(sheet)
    k = complex(quasimomentum_array(np.array([lam]), m, sheet)[0])
    return SpectralPoint(lam, sheet, k, float(m))


def virtual_chart(z, m: float, edge: int):
    """Energy and quasi-momentum in the chart ``lam = edge*m + z^2``.

    ``k`` is analytic in ``z`` near 0 and satisfies ``k^2 = lam^2 - m^2``.
    """
    z = np.asarray(z, dtype=complex)
    lam = edge * m + z * z
    if edge > 0:
        k = z * np.sqrt(2.0 * m + z * z)
    else:
        k = 1j * z * np.sqrt(2.0 * m - z * z)
    return lam, k


def k0(point: SpectralPoint) -> complex:
    """``k0 = (lam + m) / (i k)``."""
    if point.k == 0:
        raise BranchPointError("k0 undefined at lambda = +-m")
    return (point.lam + point.m) / (1j * point.k)


def m0(point: SpectralPoint) -> complex:
    """Titchmarsh-Weyl function ``m0 = 1/k0 = i k / (lam + m)``."""
    if point.lam + point.m == 0:
        raise BranchPointError("m0 undefined at lambda = -m")
    return 1j * point.k / (point.lam + point.m)


# -- even functions of k --------------------------------------------------------

def cos_sinc(kk, x):
    """``cos(kx)`` and ``sin(kx)/k`` from ``kk = k^2`` (entire in kk).

    Uses Taylor forms when ``|k x| < SERIES_SWITCH``.
    """
    kk = np.asarray(kk, dtype=complex)
    x = np.asarray(x, dtype=float)
    kk, x = np.broadcast_arrays(kk, x)
    k = np.sqrt(kk)
    small = np.abs(k * x) < SERIES_SWITCH
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.cos(k * x)
        s = np.where(small, 0.0, np.sin(k * x) / np.where(small, 1.0, k))
    u = kk * x * x
    # truncation below 1e-18 relative for |u| < 1e-6
    c_ser = 1 - u / 2 + u * u / 24 - u ** 3 / 720
    s_ser = x * (1 - u / 6 + u * u / 120 - u ** 3 / 5040)
    return np.where(small, c_ser, c), np.where(small, s_ser, s)


def free_fundamental(x, lam, m: float) -> np.ndarray:
    """Free fundamental matrix ``M0(x, lam)`` with ``M0(0) = I``.

    ``M0 = cos(kx) I + sin(kx)/k A0``; the (2,1) entry is
    ``(m - lam) sin(kx)/k``.  Broadcasts over ``x`` and ``lam``; the
    result has shape ``broadcast + (2, 2)``.
    """
    lam = np.asarray(lam, dtype=complex)
    x = np.asarray(x, dtype=float)
    lam, x = np.broadcast_arrays(lam, x)
    c, s = cos_sinc(lam * lam - m * m, x)
    out = np.empty(lam.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 1, 1] = c
    out[..., 0, 1] = (lam + m) * s
    out[..., 1, 0] = (m - lam) * s
    return out


def free_fundamental_dlam(x, lam, m: float) -> np.ndarray:
    """Derivative of :func:`free_fundamental` with respect to ``lam``."""
    lam = np.asarray(lam, dtype=complex)
    x = np.asarray(x, dtype=float)
    lam, x = np.broadcast_arrays(lam, x)
    kk = lam * lam - m * m
    c, s = cos_sinc(kk, x)
    k = np.sqrt(kk)
    small = np.abs(k * x) < SERIES_SWITCH
    with np.errstate(divide="ignore", invalid="ignore"):
        # d/dkk of sin(kx)/k = (x cos kx - sin(kx)/k) / (2 kk)
        g = np.where(small, 0.0, (x * c - s) / np.where(small, 1.0, 2 * kk))
    u = kk * x * x
    g_ser = x ** 3 * (-1 / 6 + u / 60 - u * u / 1680)
    g = np.where(small, g_ser, g)
    dkk = 2.0 * lam
    dc = -0.5 * x * s * dkk
    ds = g * dkk
    out = np.empty(lam.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = dc
    out[..., 1, 1] = dc
    out[..., 0, 1] = (lam + m) * ds + s
    out[..., 1, 0] = (m - lam) * ds - s
    return out


def free_system_matrix(lam, m: float) -> np.ndarray:
    lam = np.asarray(lam, dtype=complex)
    out = np.zeros(lam.shape + (2, 2), dtype=complex)
    out[..., 0, 1] = lam + m
    out[..., 1, 0] = m - lam
    return out


def free_jost(x, point: SpectralPoint) -> np.ndarray:
    """``psi+(x) = exp(i k x) (k0, 1)``; shape ``x.shape + (2,)``."""
    x = np.asarray(x, dtype=float)
    e = np.exp(1j * point.k * x)
    return np.stack([e * point.k0, e], axis=-1)


def resolvent_branch(x, y, point: SpectralPoint) -> np.ndarray:
    """``u(x) g(y)^T / W``: the free resolvent formula for ``x < y`` at any x, y.

    ``u = ((lam+m) sin(kx)/k, cos kx)`` is the regular solution (second
    column of M0), ``g = psi+`` and ``W = k0``.  The expression is entire in
    ``(x, y)``; it equals the resolvent kernel only for ``x <= y``, and its
    transpose at ``(y, x)`` gives the kernel for ``x >= y``.  It is stable
    when ``x <= y`` or ``|Im k| (x - y)`` is moderate.

    Returns an array of shape ``broadcast(x, y) + (2, 2)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    lam, k, m = point.lam, point.k, point.m
    kk0 = point.k0
    with np.errstate(over="ignore", invalid="ignore"):
        c, s = cos_sinc(np.full(x.shape, lam * lam - m * m), x)
        e = np.exp(1j * k * y)
        ce, se = c * e, s * e
        # decaying exponentials when cos(kx) could overflow
        big = np.abs(k * x) > 1.0
        if np.any(big):
            ep = np.exp(1j * k * (y + x))
            em = np.exp(1j * k * (y - x))
            ce = np.where(big, 0.5 * (ep + em), ce)
            se = np.where(big, (ep - em) / (2j * k), se)
    out = np.empty(x.shape + (2, 2), dtype=complex)
    # u g^T / W with g = e (k0, 1) and W = det(g, u) = k0
    out[..., 0, 0] = (lam + m) * se
    out[..., 0, 1] = (lam + m) * se / kk0
    out[..., 1, 0] = ce
    out[..., 1, 1] = ce / kk0
    return out


def free_resolvent_kernel(x, y, point: SpectralPoint) -> np.ndarray:
    """Integral kernel of the free resolvent with Dirichlet condition.

    ``R0(x, y) = u(x) g(y)^T / W`` for ``x < y`` and ``g(x) u(y)^T / W``
    for ``x > y`` (see :func:`resolvent_branch`).  On the diagonal the
    (1,1), (2,2) entries are continuous; the off-diagonal entries take the
    average of the two one-sided limits.

    Returns an array of shape ``broadcast(x, y) + (2, 2)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    lo = np.minimum(x, y)
    hi = np.maximum(x, y)
    B = resolvent_branch(lo, hi, point)
    Bt = np.swapaxes(B, -1, -2)
    above = (x < y)[..., None, None]
    below = (x > y)[..., None, None]
    return np.where(above, B, np.where(below, Bt, 0.5 * (B + Bt)))


def spectral_weight(s, m: float):
    """Density ``k(s) / (pi (s + m))`` of the free spectral measure."""
    s = np.asarray(s, dtype=float)
    if np.any(np.abs(s) <= m):
        raise ValueError("spectral weight needs |s| > m")
    k = analytic_k(s.astype(complex), m).real
    return k / (np.pi * (s + m))
