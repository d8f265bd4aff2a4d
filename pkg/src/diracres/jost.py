"""
Jost solutions, Jost function and the perturbed fundamental solutions.

The primary route integrates ``f' = A f`` backward from ``x = gamma`` with
the Taylor propagator; this is entire in ``lam`` and needs no branch logic.
The Volterra series and the high-energy Y expansion are independent
verification routes.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from . import plane
from ._quad import Panels
from ._taylor import propagate
from .plane import Sheet, SpectralPoint, quasimomentum, quasimomentum_array
from .potential import Potential, derived_scalars

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class JostEvaluation:
    """Values of the Jost solution and of the tilde fundamental solutions at 0."""

    point: SpectralPoint
    f1: complex
    f2: complex
    theta1: complex | None
    phi1: complex | None
    wronskian_residual: float | None
    ode_tolerance: float
    route: str = "ode"


# -- primary ODE route ------------------------------------------------------------

def _sheet_k(lam, m, sheet):
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    if sheet is None:
        return quasimomentum_array(lam, m, None if not np.any(
            (lam.imag == 0) & (np.abs(lam.real) < m)) else Sheet.PHYSICAL)
    return quasimomentum_array(lam, m, sheet)


def jost_arrays(P: Potential, lam, sheet=None, derivative: bool = False,
                stops=(), need_k: bool = True):
    """Vectorized Jost data at ``x = 0``.

    Parameters
    ----------
    P : Potential
    lam : array_like of complex
    sheet : Sheet or None
        Sheet used to pick ``k`` (see :func:`plane.quasimomentum_array`).
    derivative : bool
        Also return lam-derivatives from the variational equation.
    stops : sequence of float
        Extra points where ``U(x <- gamma)`` is kept (for norms).
    need_k : bool
        When False only the entire quantities (theta, phi) are formed, so
        ``lam = +-m`` is allowed.

    Returns
    -------
    dict
        ``theta``, ``phi`` (L, 2); ``f_plus``, ``f_minus`` (L, 2) and ``k``,
        ``k0`` when ``need_k``; ``U``, ``dU``, ``stops``, ``err``.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    g, m = P.gamma, P.m
    res = propagate(P, lam, derivative=derivative, stops=stops)
    U = res["U"]
    M0g = plane.free_fundamental(g, lam, m)
    Th = np.einsum("lij,ljk->lik", U, M0g)
    out = {"theta": Th[:, :, 0], "phi": Th[:, :, 1], "U": U, "dU": res["dU"],
           "stops": res["stops"], "err": res["err"]}
    if derivative:
        dM0 = plane.free_fundamental_dlam(g, lam, m)
        dTh = (np.einsum("lij,ljk->lik", res["dU"], M0g)
               + np.einsum("lij,ljk->lik", U, dM0))
        out["dtheta"], out["dphi"] = dTh[:, :, 0], dTh[:, :, 1]
    if need_k:
        k = _sheet_k(lam, m, sheet)
        kk0 = (lam + m) / (1j * k)
        e = np.exp(1j * k * g)
        psi_p = np.stack([kk0 * e, e], axis=-1)
        psi_m = np.stack([-kk0 / e, 1.0 / e], axis=-1)
        out["k"], out["k0"] = k, kk0
        out["psi_plus_gamma"] = psi_p
        if P.free:
            # exact values; U psi(gamma) cancels badly when |Im k| gamma is large
            one = np.ones_like(kk0)
            out["f_plus"] = np.stack([kk0, one], axis=-1)
            out["f_minus"] = np.stack([-kk0, one], axis=-1)
        else:
            out["f_plus"] = np.einsum("lij,lj->li", U, psi_p)
            out["f_minus"] = np.einsum("lij,lj->li", U, psi_m)
    return out


def fundamental_tilde(lam, P: Potential):
    """``theta~(0, lam)`` and ``phi~(0, lam)`` (entire in lam).

    These solve the perturbed system and coincide with the columns of the
    free fundamental matrix for ``x >= gamma``.

    Returns
    -------
    theta, phi : ndarray
        Shape ``(2,)`` for scalar input, ``(L, 2)`` otherwise.
    """
    scalar = np.ndim(lam) == 0
    r = jost_arrays(P, lam, need_k=False)
    if scalar:
        return r["theta"][0], r["phi"][0]
    return r["theta"], r["phi"]


def wronskian(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """det(a, b) for stacks of 2-vectors."""
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def lambda_switch(P: Potential) -> float:
    return max(50.0, 20.0 / P.gamma) * (1.0 + P.m)


def jost_function(point: SpectralPoint, P: Potential, tol: float = DEFAULT_TOL,
                  route: str = "auto", lam_switch: float | None = None) -> JostEvaluation:
    """Jost function ``f1+(0, lam)`` on the sheet carried by ``point``.

    Parameters
    ----------
    route : {"ode", "y", "auto"}
        ``"auto"`` (default) uses the high-energy expansion beyond
        ``lam_switch`` for potentials with integrable derivative and the
        backward ODE integration otherwise.

    Raises
    ------
    plane.BranchPointError
        At ``lam = +-m``.
    ValueError
        When ``|Im k| gamma > 700`` (the propagator leaves double range).
    """
    if point.k == 0:
        raise plane.BranchPointError("Jost function undefined at lambda = +-m")
    growth = abs(point.k.imag) * P.gamma
    if growth > 700.0 and not P.free:
        raise ValueError(f"|Im k| gamma = {growth:.3g} exceeds the double-precision range")
    lam_switch = lambda_switch(P) if lam_switch is None else lam_switch
    use_y = route == "y" or (route == "auto" and P.smooth_flag
                              and abs(point.lam) > lam_switch and 2 * growth < 700.0)
    if use_y:
        r = high_energy_Y(0.0, point, P)
        return JostEvaluation(point, r["f1"], r["f2"], None, None, None,
                              r["tail_bound"], "y")
    r = jost_arrays(P, [point.lam], need_k=False)
    fp, fm = _jost_from_U(r["U"][0], point.k, point.k0, P.gamma)
    wres = None
    if point.lam.imag == 0 and abs(point.lam.real) > P.m:
        wres = float(abs(wronskian(fp, fm) - 2 * point.k0))
    if r["err"] > tol:
        raise RuntimeError(f"integrator error {r['err']:.2e} above tol {tol:.2e}")
    return JostEvaluation(point, complex(fp[0]), complex(fp[1]),
                          complex(r["theta"][0][0]), complex(r["phi"][0][0]),
                          wres, float(r["err"]))


def _jost_from_U(U, k, kk0, gamma):
    e = np.exp(1j * k * gamma)
    fp = U @ np.array([kk0 * e, e])
    fm = U @ np.array([-kk0 / e, 1.0 / e])
    return fp, fm


def jost_values(P: Potential, lam, sheet=None) -> np.ndarray:
    """``f1+(0, lam)`` for an array of energies on one sheet."""
    return jost_arrays(P, lam, sheet=sheet)["f_plus"][:, 0]


# -- Volterra series -----------------------------------------------------------------

def _panels(P: Potential, k: complex, x0: float = 0.0, n: int = 20) -> Panels:
    br = P.breakpoints
    br = np.concatenate([[x0], br[br > x0]])
    hmax = min(P.gamma / 4.0, 1.0 / (1.0 + abs(k)))
    return Panels(br, hmax, n)


def volterra_series(x: float, point: SpectralPoint, P: Potential, n_max: int = 30,
                    tol: float | None = None):
    """Iterates of the Volterra series for ``chi = exp(-ikx) f+``.

    ``chi^{n+1}(x) = int_x^gamma G(x, t) i sigma2 V(t) chi^n(t) dt`` with
    ``G = (P + exp(-2ik(x-t)) Q) / 2``.

    Parameters
    ----------
    x : float
        Evaluation point in [0, gamma).
    n_max : int
        Highest iterate; when ``tol`` is given the series stops earlier
        once the certified tail is below ``tol``.

    Returns
    -------
    dict
        ``terms`` list of 2-vectors chi^n(x), ``partial`` their cumulative
        sums, ``bounds`` the a priori bound for each n, ``tail_bound`` for
        the remainder after the last term, ``value`` the sum.
    """
    k, kk0 = point.k, point.k0
    pan = _panels(P, k, x)
    t = pan.x
    V = P.matrix(t)
    isV = np.einsum("ij,tjk->tik", np.array([[0.0, 1.0], [-1.0, 0.0]]), V)
    Pm = np.array([[1.0, kk0], [1.0 / kk0, 1.0]])
    Qm = np.array([[1.0, -kk0], [-1.0 / kk0, 1.0]])
    e2 = np.exp(2j * k * t)
    chi = np.broadcast_to(np.array([kk0, 1.0 + 0j]), (t.size, 2)).copy()
    eta = k.imag
    K1 = max(abs(kk0), 1.0 / abs(kk0))
    K2 = max(abs(kk0), 1.0)
    vnorm = np.linalg.norm(V, ord=2, axis=(-2, -1))
    a = K1 * pan.total(vnorm)
    grow = np.exp((P.gamma - x) * (abs(eta) - eta))
    terms = [np.array([kk0, 1.0 + 0j])]
    bounds = [K2]
    for n in range(n_max):
        gn = np.einsum("tij,tj->ti", isV, chi)
        T1 = pan.tail_integral(gn)
        T2 = pan.tail_integral(e2[:, None] * gn)
        chi = 0.5 * (T1 @ Pm.T) + 0.5 * np.exp(-2j * k * t)[:, None] * (T2 @ Qm.T)
        # value at x itself from full integrals
        I1 = pan.total(gn)
        I2 = pan.total(e2[:, None] * gn)
        term = 0.5 * (Pm @ I1) + 0.5 * np.exp(-2j * k * x) * (Qm @ I2)
        terms.append(term)
        bounds.append(grow * K2 * a ** (n + 1) / factorial(n + 1))
        tail = grow * K2 * _exp_tail(a, n + 1)
        if tol is not None and tail < tol:
            break
    tail = grow * K2 * _exp_tail(a, len(terms) - 1)
    partial = np.cumsum(np.array(terms), axis=0)
    return {"terms": terms, "partial": partial, "bounds": bounds,
            "tail_bound": float(tail), "value": partial[-1]}


def _exp_tail(a: float, n: int) -> float:
    """``sum_{j > n} a^j / j!`` without cancellation."""
    term = a ** (n + 1) / factorial(n + 1)
    total, j = 0.0, n + 1
    while term > 1e-300 and (total == 0.0 or term > 1e-17 * total):
        total += term
        j += 1
        term *= a / j
    return total


# -- high-energy Y expansion -------------------------------------------------------------

def _MN(P: Potential, t, lam, k):
    """M, its continuation M*, N and their t-derivatives at nodes t."""
    ds = derived_scalars(P)
    m = P.m
    a = k / (lam + m) - 1.0
    b = (lam + m) / k - 1.0
    p1, p2, q = P.p1(t), P.p2(t), P.q(t)
    dp1, dp2, dq = (P.evaluate(t, c, 1) for c in ("p1", "p2", "q"))
    p, dp = 0.5 * (p1 - p2), 0.5 * (dp1 - dp2)
    v = 0.5 * (p1 + p2)
    E = np.exp(-2j * ds.V_int(t))
    core = (q - 1j * p) + 0.5j * (p2 * a - p1 * b)
    dcore = (dq - 1j * dp) + 0.5j * (dp2 * a - dp1 * b)
    cores = (q + 1j * p) - 0.5j * (p2 * a - p1 * b)
    dcores = (dq + 1j * dp) - 0.5j * (dp2 * a - dp1 * b)
    M = E * core
    Ms = cores / E
    dM = E * (dcore - 2j * v * core)
    dMs = (dcores + 2j * v * cores) / E
    N = 0.5j * (p2 * a + p1 * b)
    return M, Ms, dM, dMs, N


def high_energy_Y(x: float, point: SpectralPoint, P: Potential, order: int | None = None,
                  tol: float = 1e-14):
    """High-energy expansion ``Y = Y^0 + sum_n Y^n`` at ``x``.

    ``f+ = e^{i Omega0} [[k0, k0], [1, -1]] diag(e^{-i int_0^x v}, e^{i int_0^x v}) Y``
    and ``Y' = (ik sigma3 - frak N - frak M) Y``.  Each ``Y^n`` carries the
    factor ``(2ik)^{-n}``.

    Parameters
    ----------
    order : int, optional
        Number of correction terms; by default terms are added until the
        certified bound drops below ``tol``.

    Returns
    -------
    dict
        ``Y`` (2-vector at x), ``terms`` (Y^n(x)), ``bounds``,
        ``tail_bound``, ``f1``, ``f2`` (at x), ``W_l1``.

    Raises
    ------
    ValueError
        Without an integrable derivative of V, or when ``|k|`` is below the
        invertibility threshold ``sup |M|``.
    """
    if not P.smooth_flag:
        raise ValueError("Y expansion needs an integrable derivative of V")
    lam, k, m = point.lam, point.k, P.m
    pan = _panels(P, k, x)
    t = pan.x
    M, Ms, dM, dMs, N = _MN(P, t, lam, k)
    Mx, Msx, _, _, _ = _MN(P, np.array([x]), lam, k)
    supM = max(np.max(np.abs(M)), np.max(np.abs(Ms)), abs(Mx[0]), abs(Msx[0]))
    if abs(k) < supM:
        raise ValueError(f"|k|={abs(k):.3g} below the threshold sup|M|={supM:.3g}")
    tik = 2j * k
    MMs = M * Ms
    # the boundary term of the integration by parts carries sigma3
    W11 = tik * N - MMs
    W22 = -tik * N + MMs
    W12 = dMs + Ms * N
    W21 = -(dM - M * N)
    ep = np.exp(2j * k * t)
    em = np.exp(-2j * k * t)
    Wt = np.empty(t.shape + (2, 2), dtype=complex)
    Wt[:, 0, 0], Wt[:, 1, 1] = W11, W22
    Wt[:, 0, 1], Wt[:, 1, 0] = W12 * em, W21 * ep

    def Btilde(Mv, Msv, xv):
        d = 1.0 / (1.0 - Mv * Msv / (4 * k * k))
        B = np.empty(np.shape(xv) + (2, 2), dtype=complex)
        B[..., 0, 0] = d
        B[..., 1, 1] = d
        B[..., 0, 1] = d * Msv / tik * np.exp(-2j * k * xv)
        B[..., 1, 0] = -d * Mv / tik * np.exp(2j * k * xv)
        return B

    Bt = Btilde(M, Ms, t)
    Bx = Btilde(Mx[0], Msx[0], np.float64(x))
    Z = Bt[:, :, 0].copy()
    Zx = Bx[:, 0].copy()
    Wn = np.linalg.norm(np.stack([[W11, W12], [W21, W22]]).transpose(2, 0, 1),
                        ord=2, axis=(-2, -1))
    wl1 = float(pan.total(Wn))
    grow = np.exp(abs(k.imag) * (2 * P.gamma - x))
    terms, bounds = [Zx], [2.0 * grow]
    n = 0
    while True:
        n += 1
        if order is not None and n > order:
            break
        bound = 2.0 / factorial(n) / abs(k) ** n * grow * wl1 ** n
        g = np.einsum("tij,tj->ti", Wt, Z)
        I = pan.tail_integral(g)
        Z = np.einsum("tij,tj->ti", Bt, I) / tik
        Zx = Bx @ pan.total(g) / tik
        terms.append(Zx)
        bounds.append(bound)
        if order is None and (bound < tol * abs(terms[0][0]) or n >= 40):
            break
    tail = 2.0 * grow * _exp_tail(wl1 / abs(k), len(terms) - 1)
    Y = np.sum(np.array(terms), axis=0)
    ds = derived_scalars(P)
    Vx = float(ds.V_int(x)[0])
    kk0 = point.k0
    pref = np.exp(1j * ds.omega0)
    # Y holds e^{-ikx sigma3} Y; restore
    Yx = np.array([np.exp(1j * k * x) * Y[0], np.exp(-1j * k * x) * Y[1]])
    D = np.array([np.exp(-1j * Vx) * Yx[0], np.exp(1j * Vx) * Yx[1]])
    f1 = pref * kk0 * (D[0] + D[1])
    f2 = pref * (D[0] - D[1])
    return {"Y": Yx, "terms": terms, "bounds": bounds, "tail_bound": float(tail),
            "f1": complex(f1), "f2": complex(f2), "W_l1": wl1}


def asymptotic_B(lam, P: Potential) -> complex:
    """``B(lam) = B0 + int_0^gamma e^{2i(kx - int_0^x v)} (2ivw - w') dx``.

    ``w = q - i p``.  For real ``|lam| > m`` the oscillatory term tends to 0.
    """
    ds = derived_scalars(P)
    point = quasimomentum(lam, P.m)
    k = point.k
    pan = _panels(P, k)
    t = pan.x
    f = np.exp(2j * (k * t - ds.V_int(t))) * (2j * ds.v(t) * ds.w(t) - ds.dw(t))
    return complex(ds.B0 + pan.total(f))


def exponential_type_estimate(P: Potential, direction: str = "lower", radii=None):
    """Least-squares slope of ``log|f1(0, -+ i r)|`` against ``r``.

    ``direction="lower"`` evaluates ``lam = -ir`` on the continued sheet,
    ``"upper"`` evaluates ``lam = ir`` on the physical sheet.
    """
    if radii is None:
        radii = np.linspace(50.0, 100.0, 11) / P.gamma
    radii = np.asarray(radii, dtype=float)
    sign = -1.0 if direction == "lower" else 1.0
    lam = 1j * sign * radii
    sheet = Sheet.NONPHYSICAL if direction == "lower" else Sheet.PHYSICAL
    f1 = jost_values(P, lam, sheet)
    y = np.log(np.abs(f1))
    slope = np.polyfit(radii, y, 1)[0]
    return float(slope)
