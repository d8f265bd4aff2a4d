"""
Modified Fredholm determinant ``D(lam) = det[(I + V R0) exp(-V R0)]``.

The operator ``V R0(lam)`` is discretized by a Nystrom rule on composite
Gauss-Legendre nodes of ``[0, gamma]``.  The default kernel uses the
factorization ``V = V1 V2`` with ``V2 = |V|^(1/2)`` and square-root weights,
which leaves the determinant unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._quad import Panels
from .jost import jost_function
from .plane import (Sheet, SpectralPoint, analytic_k, free_resolvent_kernel, quasimomentum,
                    resolvent_branch)
from .potential import Potential, derived_scalars
from .scattering import omega, omega_array, scattering_matrix

PANEL_NODES = 20
EPS_SEQUENCE = (1e-2, 1e-3, 1e-4, 1e-5)


class DeterminantError(RuntimeError):
    """Raised for non-convergent extrapolation or a point outside the series domain."""


@dataclass(frozen=True)
class DetEvaluation:
    point: SpectralPoint
    nodes: int
    value: complex
    trace_correction: complex
    hs_norm: float
    bound_margin: float
    condition: float
    discretization_error: float = float("nan")


def _nodes(P: Potential, N: int, point: SpectralPoint | None = None) -> Panels:
    n = N if point is None else resolved_nodes(P, N, point)
    npan = max(1, int(np.ceil(n / PANEL_NODES)))
    return Panels(P.breakpoints, P.gamma / npan, PANEL_NODES)


def resolved_nodes(P: Potential, N: int, point: SpectralPoint) -> int:
    """``N`` raised to ~8 nodes per decay length or wavelength of the kernel.

    The result is a multiple of ``4 * PANEL_NODES`` so ``N/2`` and ``N/4``
    fill whole panels for the extrapolation in :func:`det2`.
    """
    n = max(N, int(8 * abs(point.k) * P.gamma))
    return 4 * PANEL_NODES * int(np.ceil(n / (4 * PANEL_NODES)))


# weights of D_N, D_{N/2}, D_{N/4} removing the N^-1 and N^-3 terms (V
# continuous on [0, inf)) or the N^-1 and N^-2 terms (V with jumps)
_RICHARDSON = {True: (16 / 7, -10 / 7, 1 / 7), False: (8 / 3, -2.0, 1 / 3)}


def _extrapolate(fn, N: int, smooth: bool, n_min: float = 0.0):
    """Richardson value of ``fn(N), fn(N/2), fn(N/4)`` and an error estimate.

    Levels with fewer than ``n_min`` nodes are not used: when ``N/4`` is
    below it only the one-step value ``2 fn(N) - fn(N/2)`` is formed and
    the estimate is ``|fn(N) - fn(N/2)|``.
    """
    v = [fn(N), fn(N // 2)]
    one_step = 2 * v[0] - v[1]
    if N // 4 < n_min:
        return one_step, abs(v[0] - v[1])
    v.append(fn(N // 4))
    value = sum(c * x for c, x in zip(_RICHARDSON[smooth], v))
    return value, abs(value - one_step)


def _level_floor(P: Potential, point: SpectralPoint) -> float:
    # coarser levels lose the in-panel continuation of R0 (growth e^{|Im k| h})
    return 4.0 * abs(point.k) * P.gamma


def _factors(V: np.ndarray):
    """``V = V1 @ V2`` with ``V2 = |V|^(1/2)`` for symmetric real 2x2 blocks."""
    ev, U = np.linalg.eigh(V)
    root = np.sqrt(np.abs(ev))
    V2 = np.einsum("...ij,...j,...kj->...ik", U, root, U)
    V1 = np.einsum("...ij,...j,...kj->...ik", U, np.sign(ev) * root, U)
    return V1, V2


def _point(lam, P: Potential) -> SpectralPoint:
    if isinstance(lam, SpectralPoint):
        return lam
    return quasimomentum(complex(lam), P.m, Sheet.PHYSICAL)


def _kernel_blocks(point: SpectralPoint, pan: Panels) -> np.ndarray:
    """Weighted free kernel ``K_ij`` with ``int R0(x_i, y) f(y) dy ~ sum_j K_ij f(y_j)``.

    Across panels ``K_ij = R0(x_i, y_j) w_j``.  Inside a panel the kernel is
    split as ``R_avg + sgn(x - y) D / 2`` with ``R_avg``, ``D`` entire, and
    the sign factor is integrated exactly against the Lagrange basis.
    Without this the jump of R0 across ``x = y`` limits the rule to first
    order in the panel size.
    """
    x, w = pan.x, pan.w
    n, p = pan.n, pan.npanels
    K = free_resolvent_kernel(x[:, None], x[None, :], point) * w[None, :, None, None]
    xp = x.reshape(p, n)
    lt = resolvent_branch(xp[:, :, None], xp[:, None, :], point)           # u(x) g(y)^T
    gt = np.swapaxes(resolvent_branch(xp[:, None, :], xp[:, :, None], point), -1, -2)
    avg, jump = 0.5 * (lt + gt), gt - lt
    wp = w.reshape(p, n)
    sg = pan.sign_weights()
    block = avg * wp[:, None, :, None, None] + 0.5 * sg[..., None, None] * jump
    for j in range(p):
        sl = slice(j * n, (j + 1) * n)
        K[sl, sl] = block[j]
    return K


def kernel_matrix(point, P: Potential, N: int = 200, factorization: str = "symmetric",
                  resolve: bool = True):
    """Discretized ``V R0(lam)`` as a ``2n x 2n`` matrix.

    Parameters
    ----------
    factorization : {"symmetric", "one-sided"}
        ``"symmetric"`` builds ``V2(x_i) K_ij V1(x_j) sqrt(w_i / w_j)``;
        ``"one-sided"`` builds ``V(x_i) K_ij``, with ``K`` the weighted
        kernel of :func:`_kernel_blocks` (``K_ij = R0(x_i, x_j) w_j`` off
        the diagonal panels).  Both have the same determinant.
    resolve : bool
        Raise ``N`` so the free kernel is resolved (see :func:`resolved_nodes`).

    Returns
    -------
    A : ndarray
    pan : Panels
    """
    point = _point(point, P)
    pan = _nodes(P, N, point if resolve else None)
    x, w = pan.x, pan.w
    n = x.size
    K = _kernel_blocks(point, pan)   # (n, n, 2, 2)
    V = P.matrix(x)
    if factorization == "symmetric":
        V1, V2 = _factors(V)
        sw = np.sqrt(w)
        B = np.einsum("iab,ijbc,jcd->ijad", V2, K, V1)
        B = B * (sw[:, None] / sw[None, :])[..., None, None]
    elif factorization == "one-sided":
        B = np.einsum("iab,ijbc->ijac", V, K)
    else:
        raise ValueError(f"unknown factorization {factorization!r}")
    A = B.transpose(0, 2, 1, 3).reshape(2 * n, 2 * n)
    return A, pan


def hs_leading_bound(lam: complex, m: float) -> float:
    """``4 pi / |Im lam| * |Re(lam / sqrt(lam^2 - m^2))|`` (physical branch)."""
    lam = complex(lam)
    if lam.imag == 0:
        raise ValueError("bound needs Im lambda != 0")
    k = analytic_k(lam, m)
    if k.imag < 0:
        k = -k
    return float(4 * np.pi / abs(lam.imag) * abs((lam / k).real))


# slack coefficient of max(1/|lam|^2, 1/|lam -+ m|^2), calibrated on the free
# resolvent; the leading term already dominates so no slack is needed
HS_SLACK = 0.0


def _slack_scale(lam: complex, m: float) -> float:
    return max(1 / abs(lam) ** 2, 1 / abs(lam - m) ** 2, 1 / abs(lam + m) ** 2)


def hs_bound(lam: complex, P: Potential) -> float:
    """Leading Hilbert-Schmidt bound times ``||V||_2^2`` plus slack."""
    return (hs_leading_bound(lam, P.m) + HS_SLACK * _slack_scale(lam, P.m)) * P.l2_norm_sq()


def _det2_raw(point, P: Potential, N: int, factorization: str):
    A, pan = kernel_matrix(point, P, N, factorization, resolve=False)
    M = np.eye(A.shape[0]) + A
    sign, logabs = np.linalg.slogdet(M)
    tr = np.trace(A)
    return complex(sign * np.exp(logabs - tr)), complex(tr), int(pan.x.size), M


def det2(point, P: Potential, N: int = 200, factorization: str = "symmetric",
         extrapolate: bool = True) -> DetEvaluation:
    """``D(lam) = det(I + A) exp(-Tr A)`` for ``lam`` off the real axis.

    The singular values of ``V R0`` decay like ``1/n``, so any rank-N
    discretization of ``det2`` misses a tail of order ``1/N``.  With
    ``extrapolate`` the value is the Richardson combination of ``D_N``,
    ``D_{N/2}``, ``D_{N/4}`` that removes the leading error terms, and
    ``discretization_error`` is its distance to the one-step value
    ``2 D_N - D_{N/2}``.  When ``N/4`` nodes cannot resolve the kernel
    (large ``|k|``) the one-step value is returned instead.

    Raises
    ------
    ValueError
        For real ``lam``; use :func:`det2_boundary`.
    """
    point = _point(point, P)
    if point.lam.imag == 0:
        raise ValueError("det2 needs Im lambda != 0; use det2_boundary on the axis")
    if P.free:
        return DetEvaluation(point, 0, 1.0 + 0j, 0j, 0.0, hs_bound(point.lam, P), 1.0, 0.0)
    N = resolved_nodes(P, N, point)
    raw = {}

    def fn(n):
        raw[n] = _det2_raw(point, P, n, factorization)
        return raw[n][0]

    err = float("nan")
    if extrapolate:
        value, err = _extrapolate(fn, N, P.smooth_flag, _level_floor(P, point))
    else:
        value = fn(N)
    _, tr, n, M = raw[N]
    hs = hs_norm_estimate(point, P, N)
    # 1-norm condition number; SVD is too costly for large N
    cond = float(np.linalg.norm(M, 1) * np.linalg.norm(np.linalg.inv(M), 1)) \
        if M.shape[0] <= 1200 else float("nan")
    margin = hs_bound(point.lam, P) - hs ** 2
    return DetEvaluation(point, n, complex(value), tr, hs, margin, cond, float(err))


def det2_boundary(lam: float, P: Potential, side: int = +1, N: int = 200,
                  eps=EPS_SEQUENCE) -> tuple[complex, float]:
    """``D(lam + side*i0)`` by polynomial extrapolation in ``eps``.

    Returns the extrapolated value and the difference between the two
    highest-order extrapolants as an error estimate.
    """
    eps = np.asarray(eps, dtype=float)
    vals = np.array([det2(complex(lam, side * e), P, N).value for e in eps])
    # Neville at eps = 0 with all points and with all but the largest eps
    def neville(x, y):
        y = y.astype(complex).copy()
        for j in range(1, len(x)):
            y[:len(x) - j] = (x[j:] * y[:len(x) - j] - x[:len(x) - j] * y[1:len(x) - j + 1]) \
                / (x[j:] - x[:len(x) - j])
        return y[0]
    full = neville(eps, vals)
    part = neville(eps[1:], vals[1:])
    return complex(full), float(abs(full - part))


def hs_norm_estimate(point, P: Potential, N: int = 200) -> float:
    """Discretized ``||V R0||_HS`` from the one-sided weighted kernel."""
    point = _point(point, P)
    pan = _nodes(P, N, point)
    x, w = pan.x, pan.w
    V = P.matrix(x)
    total = 0.0
    # row blocks keep memory bounded for large node counts
    for i0 in range(0, x.size, 400):
        sl = slice(i0, i0 + 400)
        R = free_resolvent_kernel(x[sl, None], x[None, :], point)
        VR = np.einsum("iab,ijbc->ijac", V[sl], R)
        total += float(np.einsum("i,j,ijac->", w[sl], w, np.abs(VR) ** 2))
    return float(np.sqrt(total))


def hs_norm_certificate(point, P: Potential, N: int = 200):
    """``(hs_norm, bound, margin)`` with ``margin = bound - hs_norm^2``."""
    point = _point(point, P)
    if point.lam.imag == 0:
        raise ValueError("certificate needs Im lambda != 0")
    hs = hs_norm_estimate(point, P, N)
    bound = hs_bound(point.lam, P)
    return hs, bound, bound - hs ** 2


def series_epsilon(lam: complex, P: Potential) -> float:
    """``eps_lam = C_lam^(1/2) ||V||_2`` with the leading bound for ``C_lam``."""
    return float(np.sqrt(hs_bound(lam, P)))


def det2_trace_series(point, P: Potential, N: int = 200, n_max: int = 8,
                      eps_source: str = "bound"):
    """``-log D`` from the trace series with its geometric remainder.

    Parameters
    ----------
    eps_source : {"bound", "hs"}
        ``"bound"`` uses the leading Hilbert-Schmidt bound for ``eps_lam``;
        ``"hs"`` uses the discretized Hilbert-Schmidt norm of the matrix.

    Returns
    -------
    value : complex
        ``exp(-sum_{n=2}^{n_max} Tr(-A)^n / n)``, extrapolated in the node
        count like :func:`det2`.
    remainder : float
        ``eps^(n_max+1) / ((n_max+1)(1-eps))`` bound on the error of ``log D``.

    Raises
    ------
    DeterminantError
        When ``eps >= 1``.
    """
    point = _point(point, P)
    if P.free:
        return 1.0 + 0j, 0.0
    if eps_source == "bound":
        eps = series_epsilon(point.lam, P)
    elif eps_source == "hs":
        eps = hs_norm_estimate(point, P, N)
    else:
        raise ValueError(f"unknown eps_source {eps_source!r}")
    if eps >= 1.0:
        raise DeterminantError(f"eps_lambda = {eps:.3g} >= 1: outside the series domain")
    def logsum(n):
        A, _ = kernel_matrix(point, P, n, "one-sided", resolve=False)
        s, Pn = 0.0 + 0.0j, -A
        for j in range(2, n_max + 1):
            Pn = Pn @ (-A)
            s += np.trace(Pn) / j
        return s
    # same node counts and extrapolation as det2
    n = resolved_nodes(P, N, point)
    s = _extrapolate(logsum, n, P.smooth_flag, _level_floor(P, point))[0]
    rem = eps ** (n_max + 1) / ((n_max + 1) * (1 - eps))
    return complex(np.exp(-s)), float(rem)


# -- determinant identities ------------------------------------------------------

def identity_S_from_D(lam: float, P: Potential, N: int = 200):
    """``S(lam)`` against ``D(lam - i0) / D(lam + i0) * exp(-2i Omega(lam))``."""
    if abs(lam) <= P.m:
        raise ValueError("identity needs |lambda| > m")
    lhs = scattering_matrix(lam, P)
    Dp, ep = det2_boundary(lam, P, +1, N)
    Dm, em = det2_boundary(lam, P, -1, N)
    rhs = Dm / Dp * np.exp(-2j * omega(lam, P))
    return complex(lhs), complex(rhs), float(abs(lhs - rhs))


def _ray_integral(P: Potential, lam: complex, om0: float, sign: int, T: float,
                  panels_per_unit: float) -> complex:
    """``int (Omega(t) - Omega0)/(t - lam) dt`` over ``m < sign*t < T``.

    The substitution ``t = sign (m + s^2)`` removes the square-root
    behavior at the band edge.
    """
    m = P.m
    smax = np.sqrt(T - m)
    npan = max(8, int(np.ceil(panels_per_unit * smax * np.sqrt(1 + P.gamma))))
    # finer panels where t is small in s
    edges = np.linspace(0.0, smax, npan + 1)
    xg, wg = np.polynomial.legendre.leggauss(PANEL_NODES)
    total = 0.0 + 0.0j
    for a, b in zip(edges[:-1], edges[1:]):
        s = 0.5 * (b - a) * xg + 0.5 * (a + b)
        ws = 0.5 * (b - a) * wg
        t = sign * (m + s * s)
        om = omega_array(t, P)
        total += np.sum(ws * 2 * s * (om - om0) / (t - lam))
    return total


def cauchy_omega(lam: complex, P: Potential, T: float = 400.0,
                 panels_per_unit: float = 6.0):
    """``(1/pi) int_R (Omega(t) - Omega0)/(t - lam) dt`` with a tail correction.

    ``Omega = 0`` on the gap.  Beyond ``|t| = T`` the non-oscillating part
    ``c/t`` of ``Omega - Omega0``, ``c = m int p + q(0)/2``, is integrated in
    closed form.

    Returns
    -------
    value : complex
    tail : complex
        The tail correction that was added.
    """
    lam = complex(lam)
    ds = derived_scalars(P)
    om0 = ds.omega0
    m = P.m
    body = _ray_integral(P, lam, om0, +1, T, panels_per_unit)
    body += _ray_integral(P, lam, om0, -1, T, panels_per_unit)
    # gap: Omega - Omega0 = -Omega0
    body += -om0 * (np.log(m - lam) - np.log(-m - lam))
    p_int = P.integral(lambda s: 0.5 * np.polynomial.polynomial.polysub(s.p1, s.p2))
    c = m * p_int + 0.5 * float(P.q(0.0))
    tail = c / lam * (np.log(T / (T - lam)) + np.log((T + lam) / T))
    return complex((body + tail) / np.pi), complex(tail / np.pi)


def identity_a_eq_D(lam: complex, P: Potential, N: int = 200, T: float = 400.0):
    """``f1+(0, lam)`` against ``k0 D(lam) exp(i Omega0 + Cauchy(Omega - Omega0))``.

    Returns ``(lhs, rhs, relative difference)``.
    """
    lam = complex(lam)
    if lam.imag <= 0:
        raise ValueError("identity needs Im lambda > 0")
    if not P.smooth_flag:
        raise ValueError("identity needs a continuous potential vanishing at gamma")
    point = quasimomentum(lam, P.m, Sheet.PHYSICAL)
    lhs = jost_function(point, P).f1
    D = det2(point, P, N).value
    cint, _ = cauchy_omega(lam, P, T)
    rhs = point.k0 * D * np.exp(1j * derived_scalars(P).omega0 + cint)
    return complex(lhs), complex(rhs), float(abs(lhs - rhs) / abs(lhs))


# -- relativistic integral -------------------------------------------------------

def relativistic_integral(lam: complex, m: float = 1.0, branches: int = 1, quad_opts=None):
    """``int_R dk / |E(k) - lam|^2`` with ``E(k) = sqrt(k^2 + m^2)``.

    Parameters
    ----------
    branches : {1, 2}
        ``2`` adds the negative-energy term ``1/|E(k) + lam|^2``.

    Returns
    -------
    numeric, closed_form, diff
        ``closed_form = 2 pi / |Im lam| * |Re(lam / sqrt(lam^2 - m^2))|``.
    """
    lam = complex(lam)
    if lam.imag == 0:
        raise ValueError("needs Im lambda != 0")
    opts = {"limit": 500, "epsabs": 1e-13, "epsrel": 1e-12}
    opts.update(quad_opts or {})

    def f(k):
        E = np.sqrt(k * k + m * m)
        v = 1.0 / abs(E - lam) ** 2
        if branches == 2:
            v += 1.0 / abs(E + lam) ** 2
        return v

    a = abs(lam.real)
    kr = np.sqrt(max(a * a - m * m, 0.0))
    pts = sorted({-kr, kr})
    brk = [-np.inf] + pts + [np.inf]
    num = 0.0
    for lo, hi in zip(brk[:-1], brk[1:]):
        if lo == hi:
            continue
        num += integrate.quad(f, lo, hi, **opts)[0]
    closed = 0.5 * hs_leading_bound(lam, m)
    return float(num), float(closed), float(num - closed)
