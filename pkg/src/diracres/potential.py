"""
Compactly supported matrix potentials V = (p1 q; q p2) on the half-line.

The three components are stored as piecewise polynomials.  Every segment
carries monomial coefficients in the local variable ``s = x - lo``, so
values, derivatives and integrals over segments are exact up to rounding.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from numpy.polynomial import Chebyshev, Polynomial

_COMPONENTS = ("p1", "p2", "q")


class PotentialError(ValueError):
    """Raised for invalid potential specifications."""


@dataclass(frozen=True)
class Segment:
    """One polynomial piece on ``[lo, hi]``.

    Coefficients are monomial coefficients in ``s = x - lo``, lowest order
    first.
    """

    lo: float
    hi: float
    p1: np.ndarray
    p2: np.ndarray
    q: np.ndarray

    def coeffs(self, name: str) -> np.ndarray:
        return getattr(self, name)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def is_zero(self) -> bool:
        return all(not np.any(self.coeffs(c)) for c in _COMPONENTS)

    def degree(self) -> int:
        return max(len(self.coeffs(c)) for c in _COMPONENTS) - 1


def _as_coeffs(c) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(c))
    if np.iscomplexobj(arr):
        if np.any(arr.imag != 0):
            raise PotentialError("potential coefficients must be real")
        arr = arr.real
    arr = np.asarray(arr, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise PotentialError("coefficients must be a non-empty 1D list")
    if not np.all(np.isfinite(arr)):
        raise PotentialError("coefficients must be finite")
    return npoly.polytrim(arr, 0.0) if np.any(arr) else np.zeros(1)


def _zero_segment(lo: float, hi: float) -> Segment:
    z = np.zeros(1)
    return Segment(lo, hi, z, z, z)


@dataclass(frozen=True)
class Potential:
    """Validated potential with mass ``m`` and support radius ``gamma``.

    Use :func:`make_potential` or :func:`free_potential` to construct.
    """

    m: float
    gamma: float
    segments: tuple[Segment, ...]
    free: bool = False
    _breaks: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        br = np.array([s.lo for s in self.segments] + [self.segments[-1].hi])
        object.__setattr__(self, "_breaks", br)

    # -- evaluation ---------------------------------------------------------
    @property
    def breakpoints(self) -> np.ndarray:
        return self._breaks.copy()

    def _locate(self, x: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._breaks, x, side="right") - 1
        return np.clip(idx, 0, len(self.segments) - 1)

    def evaluate(self, x, name: str, deriv: int = 0) -> np.ndarray:
        """Evaluate component ``name`` (or its derivative) at ``x``.

        Segments are closed on the left; the point ``gamma`` belongs to the
        last segment.  Values outside ``[0, gamma]`` are zero.
        """
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        idx = self._locate(x)
        inside = (x >= 0.0) & (x <= self.gamma)
        for j, seg in enumerate(self.segments):
            sel = inside & (idx == j)
            if not np.any(sel):
                continue
            c = seg.coeffs(name)
            if deriv:
                c = npoly.polyder(c, deriv) if len(c) > deriv else np.zeros(1)
            out[sel] = npoly.polyval(x[sel] - seg.lo, c)
        return out

    def p1(self, x):
        return self.evaluate(x, "p1")

    def p2(self, x):
        return self.evaluate(x, "p2")

    def q(self, x):
        return self.evaluate(x, "q")

    def matrix(self, x) -> np.ndarray:
        """V(x) as an array of shape ``x.shape + (2, 2)``."""
        a, b, c = self.p1(x), self.p2(x), self.q(x)
        return np.stack([np.stack([a, c], -1), np.stack([c, b], -1)], -2)

    # -- structure ------------------------------------------------------------
    @property
    def smooth_flag(self) -> bool:
        """True when V is continuous on [0, inf), so V' is integrable."""
        for name in _COMPONENTS:
            for left, right in zip(self.segments[:-1], self.segments[1:]):
                vl = npoly.polyval(left.length, left.coeffs(name))
                vr = right.coeffs(name)[0]
                if abs(vl - vr) > 1e-12 * (1.0 + abs(vl)):
                    return False
            last = self.segments[-1]
            if abs(npoly.polyval(last.length, last.coeffs(name))) > 1e-12:
                return False
        return True

    @property
    def piecewise_constant(self) -> bool:
        return all(s.degree() == 0 for s in self.segments)

    def sup_norm(self) -> float:
        """Upper bound for max |V|_op on [0, gamma] (sum of |coeff| h^j)."""
        best = 0.0
        for s in self.segments:
            h = np.abs(s.length) ** np.arange(s.degree() + 1)
            vals = []
            for name in _COMPONENTS:
                c = np.abs(s.coeffs(name))
                vals.append(float(np.dot(c, h[: len(c)])))
            best = max(best, vals[2] + max(vals[0], vals[1]))
        return best

    def integral(self, func_coeffs) -> float:
        """Exact integral over [0, gamma] of a polynomial built per segment.

        ``func_coeffs(seg)`` must return monomial coefficients in the local
        variable of ``seg``.
        """
        total = 0.0
        for s in self.segments:
            c = npoly.polyint(func_coeffs(s))
            total += npoly.polyval(s.length, c)
        return float(total)

    def l1_norm(self, n: int = 64) -> float:
        """Integral of the operator norm of V (Gauss-Legendre per segment)."""
        x, w = composite_gauss(self, n)
        V = self.matrix(x)
        return float(np.sum(w * np.linalg.norm(V, ord=2, axis=(-2, -1))))

    def l2_norm_sq(self) -> float:
        """Exact integral of the Frobenius norm squared of V."""
        return self.integral(
            lambda s: npoly.polyadd(
                npoly.polyadd(npoly.polymul(s.p1, s.p1), npoly.polymul(s.p2, s.p2)),
                2.0 * npoly.polymul(s.q, s.q),
            )
        )

    # -- serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        out = {"free": True} if self.free else {}
        return out | {
            "m": self.m,
            "gamma": self.gamma,
            "segments": [
                {
                    "lo": s.lo,
                    "hi": s.hi,
                    **{c: [float(v) for v in s.coeffs(c)] for c in _COMPONENTS},
                }
                for s in self.segments
            ],
        }

    def content_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def make_potential(segments: Sequence[dict], m: float, gamma: float | None = None,
                   free: bool = False) -> Potential:
    """Build a validated :class:`Potential`.

    Parameters
    ----------
    segments : sequence of dict
        Each dict has ``lo``, ``hi`` and optional ``p1``, ``p2``, ``q``
        coefficient lists (monomial basis in ``x - lo``); missing components
        are zero.
    m : float
        Mass, must be positive.
    gamma : float, optional
        Support radius.  When given it must equal the right end of the last
        nonzero segment; when omitted it is inferred.
    free : bool
        Allow an identically zero potential (for free-operator tests).  Then
        ``gamma`` defaults to 1.

    Raises
    ------
    PotentialError
        For complex, unordered, overlapping or empty input, or ``m <= 0``.
    """
    try:
        m = float(m)
    except TypeError as exc:
        raise PotentialError("mass must be a real number") from exc
    if not np.isfinite(m) or m <= 0:
        raise PotentialError("mass must be positive")
    segs = []
    for d in segments:
        lo, hi = float(d["lo"]), float(d["hi"])
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo < 0 or hi <= lo:
            raise PotentialError(f"bad segment bounds [{lo}, {hi}]")
        cs = {c: _as_coeffs(d.get(c, [0.0])) for c in _COMPONENTS}
        segs.append(Segment(lo, hi, cs["p1"], cs["p2"], cs["q"]))
    for a, b in zip(segs[:-1], segs[1:]):
        if b.lo < a.hi:
            raise PotentialError("segments overlap or are unordered")
    nonzero = [s for s in segs if not s.is_zero()]
    if not nonzero:
        if not free:
            raise PotentialError("empty support: gamma must be positive")
        g = 1.0 if gamma is None else float(gamma)
        if g <= 0:
            raise PotentialError("gamma must be positive")
        return Potential(m, g, (_zero_segment(0.0, g),), free=True)
    g_supp = nonzero[-1].hi
    if gamma is not None and abs(float(gamma) - g_supp) > 1e-12 * max(1.0, g_supp):
        raise PotentialError(
            f"gamma={gamma} does not match the support end {g_supp}")
    segs = [s for s in segs if s.hi <= g_supp]
    # fill gaps with zero segments so the pieces tile [0, gamma]
    tiled, x = [], 0.0
    for s in segs:
        if s.lo > x:
            tiled.append(_zero_segment(x, s.lo))
        tiled.append(s)
        x = s.hi
    return Potential(m, g_supp, tuple(tiled), free=False)


def free_potential(m: float, gamma: float = 1.0) -> Potential:
    """Identically zero potential declared on ``[0, gamma]``."""
    return make_potential([], m, gamma, free=True)


def constant_potential(cells: Sequence[tuple], m: float) -> Potential:
    """Piecewise-constant potential from ``(lo, hi, p1, p2, q)`` tuples."""
    return make_potential(
        [{"lo": lo, "hi": hi, "p1": [a], "p2": [b], "q": [c]}
         for lo, hi, a, b, c in cells], m)


def load_potential(path) -> Potential:
    with open(path) as fh:
        data = json.load(fh)
    return potential_from_dict(data)


def potential_from_dict(data: dict) -> Potential:
    if not isinstance(data, dict) or "m" not in data or "segments" not in data:
        raise PotentialError("potential spec needs 'm' and 'segments'")
    return make_potential(data["segments"], data["m"], data.get("gamma"),
                          free=bool(data.get("free", False)))


def save_potential(P: Potential, path) -> None:
    with open(path, "w") as fh:
        json.dump(P.to_dict(), fh, indent=2)


# -- quadrature helper shared by several modules -----------------------------

def composite_gauss(P: Potential, n: int, lo: float = 0.0,
                    hi: float | None = None):
    """Gauss-Legendre nodes and weights, ``n`` per segment, on [lo, hi]."""
    hi = P.gamma if hi is None else hi
    t, wt = np.polynomial.legendre.leggauss(n)
    xs, ws = [], []
    for s in P.segments:
        a, b = max(s.lo, lo), min(s.hi, hi)
        if b <= a:
            continue
        xs.append(0.5 * (b - a) * t + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * wt)
    return np.concatenate(xs), np.concatenate(ws)


# -- derived scalars ----------------------------------------------------------

@dataclass(frozen=True)
class DerivedScalars:
    """Scalars entering the asymptotic formulas.

    ``v = (p1+p2)/2``, ``p = (p1-p2)/2`` and ``w = q - i p``.  The sign of
    ``p`` inside ``w`` is the one that makes the high-energy expansion of
    the Jost function hold for the system ``f' = A f`` used here.
    """

    potential: Potential
    omega0: float
    p0: float
    w0: complex
    B0: complex

    def v(self, x):
        P = self.potential
        return 0.5 * (P.p1(x) + P.p2(x))

    def p(self, x):
        P = self.potential
        return 0.5 * (P.p1(x) - P.p2(x))

    def w(self, x):
        return self.potential.q(x) - 1j * self.p(x)

    def dw(self, x):
        P = self.potential
        dp = 0.5 * (P.evaluate(x, "p1", 1) - P.evaluate(x, "p2", 1))
        return P.evaluate(x, "q", 1) - 1j * dp

    def V_int(self, x):
        """Exact ``int_0^x v``."""
        P = self.potential
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape)
        acc = 0.0
        for s in P.segments:
            c = npoly.polyint(0.5 * npoly.polyadd(s.p1, s.p2))
            sel = (x > s.lo)
            out[sel] = acc + npoly.polyval(np.minimum(x[sel], s.hi) - s.lo, c)
            acc += npoly.polyval(s.length, c)
        return out


def derived_scalars(P: Potential) -> DerivedScalars:
    """Exact Omega0, p(0), w(0) and B0 for a potential."""
    omega0 = P.integral(lambda s: 0.5 * npoly.polyadd(s.p1, s.p2))
    p0 = 0.5 * float(P.p1(0.0) - P.p2(0.0))
    w0 = complex(float(P.q(0.0)), -p0)

    def integrand(s):
        p = 0.5 * npoly.polysub(s.p1, s.p2)
        return npoly.polyadd(npoly.polyadd(2.0 * P.m * p, npoly.polymul(p, p)),
                             npoly.polymul(s.q, s.q))

    B0 = w0 + P.integral(integrand)
    return DerivedScalars(P, omega0, p0, w0, complex(B0))


# -- gauge transform ------------------------------------------------------------

def _fit_local(f, lo: float, hi: float, deg: int, tol: float):
    """Monomial coefficients in ``x - lo`` of a polynomial fit of ``f``.

    Returns None when the Chebyshev interpolant does not reach ``tol``.
    """
    h = hi - lo
    ch = Chebyshev.interpolate(lambda s: f(lo + s), deg, domain=[0.0, h])
    xs = np.linspace(0.0, h, 4 * deg + 7)
    err = np.max(np.abs(ch(xs) - f(lo + xs)))
    if err > tol:
        return None
    return ch.convert(kind=Polynomial, domain=[0.0, h], window=[0.0, h]).coef


def gauge_transform(P: Potential, tol: float = 1e-13, deg: int = 14) -> Potential:
    """Rotate away the trace part of V.

    With ``W(x) = int_x^gamma v`` and ``y = U z`` (U the rotation by W) the
    new system has ``p1 = -p2 = pt`` and off-diagonal ``qt`` where

        pt = (m + p) cos 2W - q sin 2W - m,
        qt = q cos 2W + (m + p) sin 2W.

    These are trigonometric in x, so each segment is refit by piecewise
    polynomials accurate to ``tol``.
    """
    if P.free:
        return P
    if all(not np.any(npoly.polyadd(s.p1, s.p2)) for s in P.segments):
        return P
    ds = derived_scalars(P)
    total = ds.omega0

    def W(x):
        return total - ds.V_int(x)

    def pt(x):
        w2 = 2.0 * W(x)
        return (P.m + ds.p(x)) * np.cos(w2) - P.q(x) * np.sin(w2) - P.m

    def qt(x):
        w2 = 2.0 * W(x)
        return P.q(x) * np.cos(w2) + (P.m + ds.p(x)) * np.sin(w2)

    scale = tol * (1.0 + P.m + P.sup_norm())
    out = []
    for s in P.segments:
        stack = [(s.lo, s.hi)]
        while stack:
            lo, hi = stack.pop()
            # evaluate inside the open segment to stay on the right piece
            eps = 1e-15 * (hi - lo)
            f_p = lambda x, lo=lo, hi=hi: pt(np.clip(x, lo + eps, hi - eps))
            f_q = lambda x, lo=lo, hi=hi: qt(np.clip(x, lo + eps, hi - eps))
            cp = _fit_local(f_p, lo, hi, deg, scale)
            cq = _fit_local(f_q, lo, hi, deg, scale) if cp is not None else None
            if cp is None or cq is None or hi - lo > 0.25:
                mid = 0.5 * (lo + hi)
                stack.extend([(mid, hi), (lo, mid)])
                continue
            out.append({"lo": lo, "hi": hi, "p1": cp, "p2": -cp, "q": cq})
    out.sort(key=lambda d: d["lo"])
    return make_potential(out, P.m, P.gamma)
