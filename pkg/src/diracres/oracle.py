"""
Independent reference computations.

Closed-form transfer matrices for piecewise-constant potentials, brute-force
grid scans for zeros and a reference adaptive quadrature.  Nothing here
shares integration code with :mod:`diracres.jost`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .plane import quasimomentum_array
from .potential import Potential, constant_potential


@dataclass(frozen=True)
class PiecewiseConstantPotential:
    """Cells ``[breaks[j], breaks[j+1]]`` with constant ``(p1, p2, q)``."""

    breaks: np.ndarray
    values: np.ndarray   # shape (ncells, 3)
    m: float

    @property
    def gamma(self) -> float:
        return float(self.breaks[-1])

    @classmethod
    def from_potential(cls, P: Potential) -> "PiecewiseConstantPotential":
        if not P.piecewise_constant:
            raise ValueError("potential is not piecewise constant")
        vals = np.array([[s.p1[0], s.p2[0], s.q[0]] for s in P.segments])
        return cls(P.breakpoints, vals, P.m)

    def to_potential(self) -> Potential:
        cells = [(a, b, *v) for a, b, v in zip(self.breaks[:-1], self.breaks[1:],
                                                self.values)]
        return constant_potential(cells, self.m)

    def refine(self, parts: int = 2) -> "PiecewiseConstantPotential":
        br, vals = [self.breaks[0]], []
        for a, b, v in zip(self.breaks[:-1], self.breaks[1:], self.values):
            br.extend(np.linspace(a, b, parts + 1)[1:])
            vals.extend([v] * parts)
        return PiecewiseConstantPotential(np.array(br), np.array(vals), self.m)


def _cell_exp(h: float, lam: np.ndarray, m: float, p1: float, p2: float, q: float):
    """``exp(h A)`` for the constant matrix ``A = [[-q, lam+m-p2], [m+p1-lam, q]]``.

    ``A^2 = -kappa^2 I`` so ``exp(hA) = cos(kappa h) I + sin(kappa h)/kappa A``,
    with Taylor forms for small ``kappa h``.
    """
    b = lam + m - p2
    c = m + p1 - lam
    kap2 = -(q * q + b * c)
    kap = np.sqrt(kap2.astype(complex))
    z = kap * h
    small = np.abs(z) < 1e-3
    zz = kap2 * h * h
    with np.errstate(divide="ignore", invalid="ignore"):
        cs = np.where(small, 1 - zz / 2 + zz * zz / 24 - zz ** 3 / 720, np.cos(z))
        sn = np.where(small, h * (1 - zz / 6 + zz * zz / 120 - zz ** 3 / 5040),
                      np.sin(z) / np.where(small, 1.0, kap))
    E = np.empty(lam.shape + (2, 2), dtype=complex)
    E[..., 0, 0] = cs - sn * q
    E[..., 1, 1] = cs + sn * q
    E[..., 0, 1] = sn * b
    E[..., 1, 0] = sn * c
    return E


def transfer_matrix_closed_form(P, lam, sheet=None):
    """Closed-form propagator and Jost data for a piecewise-constant potential.

    Parameters
    ----------
    P : PiecewiseConstantPotential or Potential
    lam : complex or array_like
    sheet : Sheet or None
        Sheet for the quasi-momentum used in ``f1``.

    Returns
    -------
    dict
        ``U`` the propagator from gamma to 0, ``theta`` and ``phi`` at 0,
        ``f1`` the Jost function.
    """
    if isinstance(P, Potential):
        P = PiecewiseConstantPotential.from_potential(P)
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    m, g = P.m, P.gamma
    U = np.broadcast_to(np.eye(2, dtype=complex), lam.shape + (2, 2)).copy()
    # solution at 0 = E_1 E_2 ... E_n (solution at gamma), E_j = exp(-h_j A_j)
    for a, b, (p1, p2, q) in zip(P.breaks[:-1], P.breaks[1:], P.values):
        U = U @ _cell_exp(-(b - a), lam, m, p1, p2, q)
    M0g = _cell_exp(g, lam, m, 0.0, 0.0, 0.0)
    Th = U @ M0g
    out = {"U": U, "theta": Th[..., :, 0], "phi": Th[..., :, 1]}
    gap = (lam.imag == 0) & (np.abs(lam.real) <= m)
    if not np.any(gap) or sheet is not None:
        k = quasimomentum_array(lam, m, sheet)
        k0 = (lam + m) / (1j * k)
        e = np.exp(1j * k * g)
        psi = np.stack([k0 * e, e], axis=-1)
        out["f1"] = np.einsum("lij,lj->li", U, psi)[:, 0]
        out["k"] = k
    return out


def brute_force_zero_scan(f, region, grid_step: float):
    """Candidate zeros of ``f`` from a grid scan.

    Parameters
    ----------
    f : callable
        Vectorized function of complex arrays.
    region : tuple
        ``(xmin, xmax, ymin, ymax)``; when ``ymin == ymax`` the scan runs on
        a line and reports sign changes of ``Re f`` (for real-valued f).
    grid_step : float

    Returns
    -------
    list of complex
        Interior strict local minima of ``|f|`` (for analytic f these only
        occur next to zeros) or sign-change midpoints on a line.
    """
    xmin, xmax, ymin, ymax = region
    xs = np.arange(xmin, xmax + 0.5 * grid_step, grid_step)
    if ymin == ymax:
        z = xs + 1j * ymin
        v = np.real(f(z))
        idx = np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) <= 0)[0]
        return [complex(0.5 * (z[i] + z[i + 1])) for i in idx]
    ys = np.arange(ymin, ymax + 0.5 * grid_step, grid_step)
    X, Y = np.meshgrid(xs, ys)
    Z = X + 1j * Y
    A = np.abs(f(Z.ravel())).reshape(Z.shape)
    logA = np.log(A + 1e-300)
    c = logA[1:-1, 1:-1]
    is_min = np.ones_like(c, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            nb = logA[1 + di:logA.shape[0] - 1 + di, 1 + dj:logA.shape[1] - 1 + dj]
            is_min &= c < nb
    ii, jj = np.nonzero(is_min)
    return [complex(Z[i + 1, j + 1]) for i, j in zip(ii, jj)]


def reference_quad(f, a: float, b: float, **kw):
    """Adaptive quadrature of a complex function on [a, b]."""
    kw.setdefault("limit", 500)
    kw.setdefault("epsabs", 1e-13)
    kw.setdefault("epsrel", 1e-12)
    re = integrate.quad(lambda x: np.real(f(x)), a, b, **kw)[0]
    im = integrate.quad(lambda x: np.imag(f(x)), a, b, **kw)[0]
    return re + 1j * im
