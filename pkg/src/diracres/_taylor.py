"""
Taylor-series propagator for ``f' = A(x, lam) f`` with polynomial coefficients.

On each polynomial segment the coefficient matrix is a polynomial in x, so
the Taylor coefficients of the solution follow from an exact recurrence.
Each step re-expands the coefficients around the step start and sums the
series until the terms fall below the rounding level.  The propagation runs
backward from ``gamma`` to 0 and is vectorized over ``lam``.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.special import comb

from .potential import Potential

H_SCALE = 1.0
MAX_ORDER = 80
_E = np.array([[0.0, 1.0], [-1.0, 0.0]])


class IntegrationError(RuntimeError):
    """Raised when the series fails to converge within ``MAX_ORDER`` terms."""


def _segment_poly(seg) -> np.ndarray:
    """lam-free part of A as a (deg+1, 2, 2) coefficient array."""
    d = seg.degree() + 1
    c = np.zeros((d, 2, 2))
    q = np.pad(seg.q, (0, d - len(seg.q)))
    p1 = np.pad(seg.p1, (0, d - len(seg.p1)))
    p2 = np.pad(seg.p2, (0, d - len(seg.p2)))
    c[:, 0, 0] = -q
    c[:, 1, 1] = q
    c[:, 0, 1] = -p2
    c[:, 1, 0] = p1
    return c


def _shift(coef: np.ndarray, s0: float) -> np.ndarray:
    """Coefficients of ``sum c_i (s0 + t)^i`` in powers of t."""
    d = coef.shape[0]
    if d == 1 or s0 == 0.0:
        return coef.copy()
    i = np.arange(d)
    T = comb(i[None, :], i[:, None]) * s0 ** np.maximum(i[None, :] - i[:, None], 0)
    T = np.triu(T)
    return np.einsum("ji,i...->j...", T, coef)


def _step_sizes(length: float, hmax: float, stops) -> list:
    """Split [0, length] (measured backward from the right end) at stops."""
    pts = sorted(set([0.0, length] + [s for s in stops if 0.0 < s < length]))
    out = []
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(np.ceil((b - a) / hmax)))
        out.extend([(b - a) / n] * n)
    return out


def _mm(a, b):
    return np.einsum("...ij,...jk->...ik", a, b)


def _propagate_group(P: Potential, lam: np.ndarray, Y: np.ndarray, Z, stops,
                     tol: float, h_scale: float):
    """Propagate ``Y`` (and ``Z``) for one group of similar |lam|."""
    m = P.m
    base = np.zeros(lam.shape + (2, 2), dtype=complex)
    base[:, 0, 1] = lam + m
    base[:, 1, 0] = m - lam
    lam_scale = float(np.max(np.abs(lam))) if lam.size else 0.0
    stop_vals = {}
    err = 0.0
    for seg in reversed(P.segments):
        coef = _segment_poly(seg)
        vmax = np.sum(np.abs(coef).max(axis=(1, 2)) * seg.length ** np.arange(len(coef)))
        hmax = min(h_scale / (1.0 + lam_scale + m + vmax), P.gamma / 50.0)
        seg_stops = [seg.hi - x for x in stops if seg.lo <= x <= seg.hi]
        s0 = seg.length
        for h in _step_sizes(seg.length, hmax, seg_stops):
            c = _shift(coef, s0)
            # B(u) = -h A(s0 - h u) = sum_j b_j u^j
            fac = -h * (-h) ** np.arange(len(c))
            bj = c * fac[:, None, None]
            b0 = bj[0] + base * (-h)
            terms_y = [Y]
            terms_z = [Z] if Z is not None else None
            sum_y = Y.copy()
            sum_z = Z.copy() if Z is not None else None
            small = 0
            for n in range(MAX_ORDER):
                ny = _mm(b0, terms_y[n])
                for j in range(1, min(len(bj), n + 1)):
                    ny = ny + _mm(bj[j], terms_y[n - j])
                ny /= n + 1
                terms_y.append(ny)
                sum_y += ny
                if Z is not None:
                    nz = _mm(b0, terms_z[n]) + (-h) * _mm(_E, terms_y[n])
                    for j in range(1, min(len(bj), n + 1)):
                        nz = nz + _mm(bj[j], terms_z[n - j])
                    nz /= n + 1
                    terms_z.append(nz)
                    sum_z += nz
                ref = np.abs(sum_y).max(axis=(1, 2))
                rel = np.max(np.abs(ny).max(axis=(1, 2)) / ref)
                if Z is not None:
                    rz = np.abs(nz).max(axis=(1, 2)) / (np.abs(sum_z).max(axis=(1, 2)) + ref)
                    rel = max(rel, float(np.max(rz)))
                small = small + 1 if rel < tol else 0
                if small >= 2:
                    break
            else:
                raise IntegrationError(
                    f"Taylor series did not converge (last relative term {rel:.2e})")
            err = max(err, rel)
            Y, Z = sum_y, sum_z
            s0 -= h
            x_now = seg.lo + s0
            for x in stops:
                if abs(x - x_now) < 1e-12 * (1 + P.gamma):
                    stop_vals[x] = (Y.copy(), None if Z is None else Z.copy())
    return Y, Z, stop_vals, err


def propagate(P: Potential, lam, derivative: bool = False, stops=(),
              tol: float = 1e-17, h_scale: float = H_SCALE):
    """Propagator ``U(0 <- gamma)`` for an array of energies.

    Parameters
    ----------
    P : Potential
    lam : array_like of complex, shape (L,)
    derivative : bool
        Also return ``dU/dlam`` from the variational equation.
    stops : sequence of float
        Points in [0, gamma] where ``U(x <- gamma)`` is also recorded.
    tol : float
        Relative size of the last two series terms required at every step.

    Returns
    -------
    dict with ``U`` (L, 2, 2), ``dU`` or None, ``stops`` mapping each stop
    to ``(U_x, dU_x)``, and ``err`` the largest accepted last-term size.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    L = lam.shape[0]
    U = np.zeros((L, 2, 2), dtype=complex)
    dU = np.zeros((L, 2, 2), dtype=complex) if derivative else None
    stop_out = {x: (np.zeros((L, 2, 2), complex),
                    np.zeros((L, 2, 2), complex) if derivative else None)
                for x in stops}
    if L == 0:
        return {"U": U, "dU": dU, "stops": stop_out, "err": 0.0}
    # group energies whose step sizes differ by less than a factor 2
    mag = 1.0 + np.abs(lam)
    order = np.argsort(mag)
    groups, start = [], 0
    for i in range(1, L + 1):
        if i == L or mag[order[i]] > 2.0 * mag[order[start]]:
            groups.append(order[start:i])
            start = i
    err = 0.0
    eye = np.broadcast_to(np.eye(2, dtype=complex), (L, 2, 2))
    for g in groups:
        Y0 = eye[g].copy()
        Z0 = np.zeros_like(Y0) if derivative else None
        Y, Z, sv, e = _propagate_group(P, lam[g], Y0, Z0, list(stops), tol, h_scale)
        U[g] = Y
        if derivative:
            dU[g] = Z
        for x, (yx, zx) in sv.items():
            stop_out[x][0][g] = yx
            if derivative:
                stop_out[x][1][g] = zx
        err = max(err, e)
    for x in stops:
        if abs(x - P.gamma) < 1e-12 * (1 + P.gamma):
            stop_out[x] = (eye.copy(), np.zeros((L, 2, 2), complex) if derivative else None)
    return {"U": U, "dU": dU, "stops": stop_out, "err": err}
