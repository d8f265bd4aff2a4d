"""
The entire function F, state location, zero counting and the theorems on
the distribution of states.

``F(lam) = (lam - m) f1+(0, lam) f1-(0, lam)``, equivalently
``(lam + m) theta1^2 + (lam - m) phi1^2`` at ``x = 0``.  Its zeros are the
states with multiplicity.  Interior zero finding uses F; the counting law
uses the winding of ``f1`` on contours inside the lower half-plane.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from . import plane
from .jost import asymptotic_B, jost_arrays, wronskian
from .plane import Sheet, quasimomentum_array
from .potential import Potential, derived_scalars


class StateClass(str, Enum):
    EIGENVALUE = "eigenvalue"
    RESONANCE = "resonance"
    ANTIBOUND = "antibound"
    VIRTUAL = "virtual"


@dataclass(frozen=True)
class StateRecord:
    lam: complex
    k: complex
    cls: StateClass
    multiplicity: int
    residual: float
    newton_iters: int
    flag: str = ""


@dataclass
class CountingReport:
    radii: list
    counts: list
    predicted: list
    sector_outliers: list
    delta: float
    samples: list = field(default_factory=list)

    @property
    def ratios(self):
        return [c / p for c, p in zip(self.counts, self.predicted)]

    @property
    def outlier_fractions(self):
        return [o / c if c else 0.0 for o, c in zip(self.sector_outliers, self.counts)]


class WindingError(RuntimeError):
    """Boundary sampling could not resolve the argument change."""


class ZeroOnContour(WindingError):
    """A zero sits on (or extremely close to) the contour."""


# -- F -------------------------------------------------------------------------------

def F_values(P: Potential, lam, derivative: bool = False):
    """F at an array of energies (and dF/dlam from the variational equation).

    The product form ``(lam - m) f1+ f1-`` is used away from the real axis
    and the branch points; ``(lam + m) theta1^2 + (lam - m) phi1^2`` is used
    near them.  Both are the same entire function.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    m, g = P.m, P.gamma
    r = jost_arrays(P, lam, derivative=derivative, need_k=False)
    th, ph = r["theta"][:, 0], r["phi"][:, 0]
    F = (lam + m) * th ** 2 + (lam - m) * ph ** 2
    kk = lam * lam - m * m
    with np.errstate(invalid="ignore", divide="ignore"):
        k = plane.analytic_k(lam, m)
        far = (np.abs(k) * g > 0.5) & (np.abs(k.imag) * g > 1.0) & np.isfinite(k)
    if np.any(far):
        kf = k[far]
        kk0 = (lam[far] + m) / (1j * kf)
        e = np.exp(1j * kf * g)
        U = r["U"][far]
        f1p = U[:, 0, 0] * kk0 * e + U[:, 0, 1] * e
        f1m = -U[:, 0, 0] * kk0 / e + U[:, 0, 1] / e
        F[far] = (lam[far] - m) * f1p * f1m
    if not derivative:
        return F
    dth, dph = r["dtheta"][:, 0], r["dphi"][:, 0]
    dF = (th ** 2 + ph ** 2 + 2 * (lam + m) * th * dth
          + 2 * (lam - m) * ph * dph)
    return F, dF


def F_eval(lam, P: Potential) -> complex:
    """F at one energy."""
    return complex(F_values(P, [lam])[0])


# -- winding ----------------------------------------------------------------------------

def contour_winding(func, zfun, n_init: int = 64, max_points: int = 200000,
                    min_ds: float = 1e-13):
    """Winding number of ``func`` along the closed curve ``zfun(s)``, s in [0, 1].

    The samples are refined until consecutive arguments differ by less than
    pi/4 and consecutive moduli by less than a factor e; the initial density
    must resolve the smooth phase drift of ``func``.

    Returns
    -------
    winding : int
    info : dict
        ``s``, ``values``, ``raw`` (unrounded winding), ``npoints``.
    """
    s = np.linspace(0.0, 1.0, n_init + 1)
    vals = func(zfun(s))
    while True:
        if not np.all(np.isfinite(vals)):
            raise WindingError("non-finite function value on contour")
        d = np.angle(vals[1:] / vals[:-1])
        with np.errstate(divide="ignore"):
            dl = np.abs(np.diff(np.log(np.abs(vals))))
        bad = (np.abs(d) >= np.pi / 4) | ~(dl < 1.0)
        if not np.any(bad):
            break
        idx = np.nonzero(bad)[0]
        if np.min(s[idx + 1] - s[idx]) < min_ds:
            raise ZeroOnContour("argument jump unresolved: zero near contour")
        if s.size + idx.size > max_points:
            raise WindingError("contour sampling cap reached")
        mids = 0.5 * (s[idx] + s[idx + 1])
        new = func(zfun(mids))
        s = np.insert(s, idx + 1, mids)
        vals = np.insert(vals, idx + 1, new)
    raw = float(np.sum(d) / (2 * np.pi))
    w = int(round(raw))
    if abs(raw - w) > 1e-6:
        raise WindingError(f"non-integer winding {raw}")
    return w, {"s": s, "values": vals, "raw": raw, "npoints": s.size}


def _rect_path(x0, x1, y0, y1):
    w, h = x1 - x0, y1 - y0
    per = 2 * (w + h)
    corners = np.array([x0 + 1j * y0, x1 + 1j * y0, x1 + 1j * y1, x0 + 1j * y1,
                        x0 + 1j * y0])
    cum = np.array([0, w, w + h, 2 * w + h, per]) / per

    def z(s):
        s = np.asarray(s, dtype=float)
        j = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, 3)
        t = (s - cum[j]) / (cum[j + 1] - cum[j])
        return corners[j] + t * (corners[j + 1] - corners[j])
    return z


# -- state location ---------------------------------------------------------------------

@dataclass
class FinderOptions:
    newton_tol: float = 1e-12
    newton_maxit: int = 50
    separation: float = 1e-6
    max_depth: int = 40
    n_edge: int = 32
    split_frac: float = 0.4871


def _newton(P, z, rect, opts):
    x0, x1, y0, y1 = rect
    for it in range(1, opts.newton_maxit + 1):
        F, dF = F_values(P, [z], derivative=True)
        step = F[0] / dF[0]
        z = z - step
        if not (x0 - 1e-9 <= z.real <= x1 + 1e-9 and y0 - 1e-9 <= z.imag <= y1 + 1e-9):
            return None, it
        if abs(step) < opts.newton_tol * (1 + abs(z)):
            return complex(z), it
    return None, opts.newton_maxit


def _n_init(P, length, base):
    # F and f1 turn by about 2 gamma per unit length
    return int(base + length * (4.0 * P.gamma + 1.0))


def _winding_rect(P, rect, opts):
    f = lambda z: F_values(P, z)
    per = 2 * (rect[1] - rect[0] + rect[3] - rect[2])
    return contour_winding(f, _rect_path(*rect), n_init=_n_init(P, per, opts.n_edge))[0]


def find_states(P: Potential, region, opts: FinderOptions | None = None):
    """Locate all zeros of F in a rectangle and classify them.

    Parameters
    ----------
    region : tuple
        ``(xmin, xmax, ymin, ymax)``.  Edges that pass through a zero are
        pushed outward by up to 1e-6 relative.

    Returns
    -------
    states : list of StateRecord
        Only the lower-half-plane member of each conjugate pair is reported
        (classified as a resonance); real zeros are classified in full.
    info : dict
        ``winding`` (total over the region), ``roots`` (all zeros found with
        multiplicity, both half-planes) and ``rectangles`` processed.
    """
    opts = opts or FinderOptions()
    x0, x1, y0, y1 = map(float, region)
    scale = 1.0 + max(abs(x0), abs(x1), abs(y0), abs(y1))
    for attempt in range(6):
        try:
            total = _winding_rect(P, (x0, x1, y0, y1), opts)
            break
        except ZeroOnContour:
            pad = 1e-7 * scale * 2 ** attempt
            x0, x1, y0, y1 = x0 - pad, x1 + pad, y0 - pad, y1 + pad
    else:
        raise WindingError("could not move the region boundary off a zero")
    roots = []
    stack = [((x0, x1, y0, y1), total, 0)]
    nrect = 0
    while stack:
        rect, w, depth = stack.pop()
        nrect += 1
        if w == 0:
            continue
        a0, a1, b0, b1 = rect
        size = max(a1 - a0, b1 - b0)
        if w == 1:
            z, it = _newton(P, complex(0.5 * (a0 + a1), 0.5 * (b0 + b1)), rect, opts)
            if z is not None:
                roots.append((z, 1, it, ""))
                continue
        if size < opts.separation * scale or depth >= opts.max_depth:
            z, it = _newton(P, complex(0.5 * (a0 + a1), 0.5 * (b0 + b1)), rect, opts)
            z = complex(0.5 * (a0 + a1), 0.5 * (b0 + b1)) if z is None else z
            roots.append((z, w, it, "cluster" if w > 1 else "unrefined"))
            continue
        children = _split(rect, opts.split_frac)
        ws = []
        for c in children:
            for attempt in range(6):
                try:
                    ws.append(_winding_rect(P, c, opts))
                    break
                except ZeroOnContour:
                    frac = opts.split_frac + 0.0137 * (attempt + 1)
                    children = _split(rect, frac)
                    c = children[len(ws)]
            else:
                raise WindingError(f"zero on subdivision line in {rect}")
        if sum(ws) != w:
            raise WindingError(f"winding inconsistency in {rect}: {w} vs {ws}")
        for c, wc in zip(children, ws):
            stack.append((c, wc, depth + 1))
    roots.sort(key=lambda r: (round(r[0].real, 9), round(r[0].imag, 9)))
    states = [_classify(P, z, mult, it, flag) for z, mult, it, flag in roots]
    states = [s for s in states if s is not None]
    states.sort(key=lambda s: (s.lam.real, s.lam.imag))
    return states, {"winding": total, "roots": roots, "rectangles": nrect,
                    "region": (x0, x1, y0, y1)}


def _split(rect, frac):
    a0, a1, b0, b1 = rect
    if (a1 - a0) >= (b1 - b0):
        c = a0 + frac * (a1 - a0)
        return [(a0, c, b0, b1), (c, a1, b0, b1)]
    c = b0 + frac * (b1 - b0)
    return [(a0, a1, b0, c), (a0, a1, c, b1)]


def _classify(P: Potential, z: complex, mult: int, it: int, flag: str):
    m = P.m
    res = float(abs(F_values(P, [z])[0]))
    tol_real = 1e-9 * (1 + abs(z))
    for edge in (1, -1):
        if abs(z - edge * m) < 1e-8 * (1 + m):
            th, ph = _tilde_at(P, edge * m)
            val = th[0] if edge > 0 else ph[0]
            if abs(val) < 1e-6 * (1 + abs(th[0]) + abs(ph[0])):
                return StateRecord(complex(edge * m), 0j, StateClass.VIRTUAL, mult,
                                   res, it, flag)
            flag = (flag + " virtual-candidate").strip()
    if abs(z.imag) < tol_real and abs(z.real) < m:
        lam = float(z.real)
        fu = _f1_gap(P, lam, Sheet.PHYSICAL)
        fl = _f1_gap(P, lam, Sheet.NONPHYSICAL)
        sheet = Sheet.PHYSICAL if abs(fu) <= abs(fl) else Sheet.NONPHYSICAL
        k = complex(quasimomentum_array(np.array([lam + 0j]), m, sheet)[0])
        cls = StateClass.EIGENVALUE if sheet is Sheet.PHYSICAL else StateClass.ANTIBOUND
        return StateRecord(complex(lam), k, cls, mult, res, it, flag)
    if z.imag > 0:
        return None
    k = complex(plane.analytic_k(z, m))
    return StateRecord(z, k, StateClass.RESONANCE, mult, res, it, flag)


def _tilde_at(P, lam):
    r = jost_arrays(P, [lam], need_k=False)
    return r["theta"][0], r["phi"][0]


def _f1_gap(P: Potential, lam, sheet):
    """Real-valued f1 on one rim of the gap (vectorized)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    r = jost_arrays(P, lam.astype(complex), sheet=sheet)
    out = r["f_plus"][:, 0]
    return out.real if out.size > 1 else complex(out[0]).real


def jost_on_gap(P: Potential, lam, sheet) -> np.ndarray:
    """f1(0, lam) on the upper (physical) or lower rim of (-m, m)."""
    return np.atleast_1d(_f1_gap(P, lam, sheet))


# -- eigenvalue properties ------------------------------------------------------------------

def F_derivative_at(lam: float, P: Potential, n_nodes: int = 24):
    """dF/dlam at an eigenvalue with the norming-constant cross-check.

    Returns
    -------
    dict
        ``fd`` (central differences with Richardson extrapolation),
        ``variational`` (from the lam-derivative of the ODE), ``norming``
        ``= 2|k| ||f+||^2 / f2+(0)^2`` (the value implied by
        ``det(f', f)' = f1^2 + f2^2`` and the Wronskian) and
        ``norming_negative = -norming``, the negative-sign form of the same
        identity.  The tail of the norm beyond gamma is in closed form.

    Raises
    ------
    ValueError
        If ``lam`` is not in the gap or f1 on the physical rim is not small.
    """
    m = P.m
    if not abs(lam) < m:
        raise ValueError("eigenvalues lie in (-m, m)")
    h = 1e-5 * (1 + abs(lam))
    Fv = F_values(P, np.array([lam - 2 * h, lam - h, lam + h, lam + 2 * h]))
    d1 = (Fv[2] - Fv[1]) / (2 * h)
    d2 = (Fv[3] - Fv[0]) / (4 * h)
    fd = float(((4 * d1 - d2) / 3).real)
    _, dF = F_values(P, [lam], derivative=True)
    norm_sq, f2 = norming_data(P, lam, n_nodes)
    k = np.sqrt(m * m - lam * lam)
    norming = float(2 * k * norm_sq / f2 ** 2)
    f1 = _f1_gap(P, lam, Sheet.PHYSICAL)
    if abs(f1) > 1e-6 * (1 + abs(f2)):
        raise ValueError("lam is not an eigenvalue (f1 not small)")
    return {"fd": fd, "variational": float(dF[0].real), "norming": norming,
            "norming_negative": -norming}


def norming_data(P: Potential, lam: float, n_nodes: int = 24):
    """``||f+(., lam)||^2`` on [0, inf) and ``f2+(0, lam)`` for lam in the gap."""
    m, g = P.m, P.gamma
    kabs = np.sqrt(m * m - lam * lam)
    from .potential import composite_gauss
    # enough nodes per segment for the exponential e^{-|k| x}
    nseg = max(n_nodes, int(8 + 4 * kabs * g))
    x, w = composite_gauss(P, nseg)
    r = jost_arrays(P, [lam], sheet=Sheet.PHYSICAL, stops=tuple(x))
    k0 = (lam + m) / (1j * (1j * kabs))
    psi = r["psi_plus_gamma"][0]
    vals = np.array([r["stops"][xi][0][0] @ psi for xi in x])
    inner = float(np.sum(w * np.sum(np.abs(vals) ** 2, axis=1)))
    tail = float(np.exp(-2 * kabs * g) * (abs(k0) ** 2 + 1) / (2 * kabs))
    f2 = float(r["f_plus"][0, 1].real)
    return inner + tail, f2


def antibound_parity(P: Potential, eig1: float, eig2: float, n_grid: int = 4000):
    """Antibound states strictly between two consecutive eigenvalues.

    Sign changes of the real function f1 on the lower rim are bracketed on
    a grid and refined with Brent's method.

    Returns
    -------
    dict
        ``count``, ``roots``, ``min_gap`` (smallest |f1| on the grid, a
        proxy for an undetected close pair) and ``at_eigs`` (f1 on the
        lower rim at the eigenvalues, which must be nonzero).
    """
    if not (-P.m < eig1 < eig2 < P.m):
        raise ValueError("need -m < eig1 < eig2 < m")
    pad = 1e-9 * (eig2 - eig1)
    xs = np.linspace(eig1 + pad, eig2 - pad, n_grid)
    vals = jost_on_gap(P, xs, Sheet.NONPHYSICAL)
    roots = []
    f = lambda x: float(jost_on_gap(P, x, Sheet.NONPHYSICAL)[0])
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        roots.append(brentq(f, xs[i], xs[i + 1], xtol=1e-14))
    at = jost_on_gap(P, np.array([eig1, eig2]), Sheet.NONPHYSICAL)
    return {"count": len(roots), "roots": roots,
            "min_gap": float(np.min(np.abs(vals))), "at_eigs": at}


def eigenvalues(P: Potential, n_grid: int = 4000):
    """Eigenvalues in (-m, m): sign changes of f1 on the physical rim."""
    m = P.m
    xs = np.linspace(-m, m, n_grid + 2)[1:-1]
    vals = jost_on_gap(P, xs, Sheet.PHYSICAL)
    f = lambda x: float(jost_on_gap(P, x, Sheet.PHYSICAL)[0])
    return [brentq(f, xs[i], xs[i + 1], xtol=1e-14)
            for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]]


# -- counting ----------------------------------------------------------------------------------

def _f1_lower(P):
    def f(z):
        return jost_arrays(P, z, sheet=Sheet.NONPHYSICAL)["f_plus"][:, 0]
    return f


def _half_disk_path(r, d0):
    th0 = np.arcsin(d0 / r)
    # arc-length parametrization so samples are spread evenly
    arc = r * (np.pi - 2 * th0)
    total = arc + 2 * np.sqrt(r * r - d0 * d0)

    def z(s):
        s = np.asarray(s, dtype=float)
        u = s * total
        on_arc = u <= arc
        ang = -np.pi + th0 + u / r
        zc = r * np.exp(1j * ang)
        x = np.sqrt(r * r - d0 * d0) - (u - arc)
        return np.where(on_arc, zc, x - 1j * d0)
    return z


def _wedge_path(r, rho, delta):
    a0, a1 = -np.pi + delta, -delta
    arc_out = r * (a1 - a0)
    arc_in = rho * (a1 - a0)
    ray = r - rho
    total = arc_out + arc_in + 2 * ray
    cuts = np.cumsum([0, ray, arc_out, ray, arc_in]) / total

    def z(s):
        s = np.asarray(s, dtype=float)
        out = np.empty(s.shape, dtype=complex)
        t = np.clip((s - cuts[0]) / (cuts[1] - cuts[0]), 0, 1)
        seg0 = (rho + t * ray) * np.exp(1j * a0)
        t = np.clip((s - cuts[1]) / (cuts[2] - cuts[1]), 0, 1)
        seg1 = r * np.exp(1j * (a0 + t * (a1 - a0)))
        t = np.clip((s - cuts[2]) / (cuts[3] - cuts[2]), 0, 1)
        seg2 = (r - t * ray) * np.exp(1j * a1)
        t = np.clip((s - cuts[3]) / (cuts[4] - cuts[3]), 0, 1)
        seg3 = rho * np.exp(1j * (a1 - t * (a1 - a0)))
        out = np.where(s < cuts[1], seg0, np.where(s < cuts[2], seg1,
                       np.where(s < cuts[3], seg2, seg3)))
        return out
    return z


def resonance_count(P: Potential, r: float, d0: float | None = None) -> tuple[int, int]:
    """Zeros of f1 (continued sheet) in the lower half-disk of radius r.

    The real diameter is replaced by the line ``Im lam = -d0``.
    """
    if 2 * P.gamma * r > 600:
        raise ValueError("radius too large for double-precision evaluation")
    d0 = 1e-2 * (1 + P.m) if d0 is None else d0
    n0 = _n_init(P, (np.pi + 2) * r, 64)
    w, info = contour_winding(_f1_lower(P), _half_disk_path(r, d0), n_init=n0)
    return w, info["npoints"]


def sector_outliers(P: Potential, r: float, delta: float = 0.2,
                    rho: float | None = None) -> int:
    """Zeros of f1 in the truncated wedge ``-pi + delta < arg < -delta``."""
    rho = 1e-2 * (1 + P.m) if rho is None else rho
    n0 = _n_init(P, (np.pi + 2) * r, 64)
    w, _ = contour_winding(_f1_lower(P), _wedge_path(r, rho, delta), n_init=n0)
    return w


def counting_report(P: Potential, radii, delta: float = 0.2) -> CountingReport:
    """Counting function N(r) against the law ``2 r gamma / pi``."""
    counts, outl, pred, samp = [], [], [], []
    for r in radii:
        n, npts = resonance_count(P, r)
        counts.append(n)
        samp.append(npts)
        outl.append(sector_outliers(P, r, delta) if n else 0)
        pred.append(2 * r * P.gamma / np.pi)
    return CountingReport(list(radii), counts, pred, outl, delta, samp)


# -- forbidden domain ---------------------------------------------------------------------------

def F_asymptote_constants(P: Potential, R: float = 800.0, n: int = 40):
    """Constants ``d0, d1`` with ``F(x) = x + d0 + d1/x + O(x^-2)`` on the real line.

    ``d0 = m + p(0)``; ``d1`` is fitted from ``x (F - x - d0) = d1 + c/x`` on
    ``R/4 <= |x| <= R``.
    """
    ds = derived_scalars(P)
    d0 = P.m + ds.p0
    x = np.concatenate([np.linspace(R / 4, R, n), -np.linspace(R / 4, R, n)])
    F = F_values(P, x.astype(complex)).real
    y = x * (F - x - d0)
    A = np.stack([np.ones_like(x), 1 / x], axis=1)
    coef = np.linalg.lstsq(A, y, rcond=None)[0]
    return float(d0), float(coef[0])


def forbidden_domain_check(P: Potential, states, R: float = 400.0, n_grid: int = 4001):
    """Check ``|z^2 (z + d0 + d1/z)| <= C1 exp(-2 gamma Im z)`` at resonances.

    ``C1`` is the supremum of ``|x^2 (F(x) - x - d0 - d1/x)|`` over a real
    grid on [-R, R]; the sup over [-R/2, R/2] is reported as well so the
    grid gap is visible.

    Returns
    -------
    dict with ``C1``, ``C1_half``, ``d0``, ``d1``, ``margins`` (bound minus
    left side, relative) and ``violations``.
    """
    if not P.smooth_flag:
        raise ValueError("forbidden-domain constants need an integrable V'")
    d0, d1 = F_asymptote_constants(P, R=2 * R)
    x = np.linspace(-R, R, n_grid)
    x = x[np.abs(x) > 1e-9]
    F = F_values(P, x.astype(complex)).real
    g = np.abs(x ** 2 * (F - x - d0 - d1 / x))
    C1 = float(np.max(g))
    C1_half = float(np.max(g[np.abs(x) <= R / 2]))
    margins, viol = [], []
    for s in states:
        if s.cls is not StateClass.RESONANCE:
            continue
        z = s.lam
        lhs = abs(z * z * (z + d0 + d1 / z))
        rhs = C1 * np.exp(-2 * P.gamma * z.imag)
        margins.append((z, (rhs - lhs) / rhs))
        if lhs > rhs:
            viol.append(z)
    return {"C1": C1, "C1_half": C1_half, "d0": d0, "d1": d1,
            "margins": margins, "violations": viol}


def log_strip_count(P: Potential, states, A: float) -> int:
    """Resonances in ``0 > Im lam >= -A - log|Re lam| / gamma``."""
    n = 0
    for s in states:
        if s.cls is StateClass.RESONANCE:
            z = s.lam
            if abs(z.real) > 1 and z.imag >= -A - np.log(abs(z.real)) / P.gamma:
                n += 1
    return n
