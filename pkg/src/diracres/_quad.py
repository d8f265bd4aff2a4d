"""
Composite Gauss-Legendre panels with spectral cumulative integration.

Panels respect the potential's breakpoints.  ``tail_integral`` returns
``int_x^gamma f`` at every node, exact for polynomials of degree < n on
each panel; ``sign_weights`` gives the product rule for ``sgn(x - y)``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as leg


@lru_cache(maxsize=16)
def _reference(n: int):
    t, w = leg.leggauss(n)
    V = leg.legvander(t, n - 1)
    # antiderivative of each Legendre basis function
    A1 = np.empty(n)
    At = np.empty((n, n))
    for j in range(n):
        c = np.zeros(n)
        c[j] = 1.0
        ci = leg.legint(c)
        A1[j] = leg.legval(1.0, ci)
        At[:, j] = leg.legval(t, ci)
    S = (A1[None, :] - At) @ np.linalg.inv(V)   # int_{t_i}^{1} l_j
    return t, w, S


class Panels:
    """Gauss-Legendre panels on [0, gamma].

    Parameters
    ----------
    breaks : array_like
        Breakpoints that every panel must respect.
    hmax : float
        Largest panel length.
    n : int
        Nodes per panel.
    """

    def __init__(self, breaks, hmax: float, n: int = 20):
        breaks = np.asarray(breaks, dtype=float)
        edges = [breaks[0]]
        for a, b in zip(breaks[:-1], breaks[1:]):
            npan = max(1, int(np.ceil((b - a) / hmax)))
            edges.extend(np.linspace(a, b, npan + 1)[1:])
        self.edges = np.array(edges)
        self.n = n
        t, w, S = _reference(n)
        a, b = self.edges[:-1], self.edges[1:]
        half = 0.5 * (b - a)
        self.x = (half[:, None] * t[None, :] + 0.5 * (a + b)[:, None]).ravel()
        self.w = (half[:, None] * w[None, :]).ravel()
        self._half = half
        self._S = S

    @property
    def npanels(self) -> int:
        return len(self.edges) - 1

    def tail_integral(self, f: np.ndarray) -> np.ndarray:
        """``int_{x_i}^{gamma} f`` for node values ``f`` (leading axis)."""
        f = np.asarray(f)
        shp = f.shape[1:]
        fp = f.reshape((self.npanels, self.n) + shp)
        within = np.einsum("ij,pj...->pi...", self._S, fp)
        within = within * self._half.reshape((-1, 1) + (1,) * len(shp))
        totals = np.einsum("j,pj...->p...", np.polynomial.legendre.leggauss(self.n)[1], fp)
        totals = totals * self._half.reshape((-1,) + (1,) * len(shp))
        # sum over later panels
        later = np.concatenate([np.cumsum(totals[::-1], axis=0)[::-1][1:],
                                np.zeros((1,) + shp, dtype=totals.dtype)])
        out = within + later[:, None]
        return out.reshape(f.shape)

    def total(self, f: np.ndarray):
        return np.tensordot(self.w, f, axes=(0, 0))

    def sign_weights(self) -> np.ndarray:
        """``int sgn(x_i - y) l_j(y) dy`` over one panel, shape (npanels, n, n).

        ``l_j`` are the Lagrange polynomials of the panel's nodes, so the
        rule is exact for ``sgn(x_i - y) f(y)`` with ``f`` polynomial of
        degree < n on the panel.
        """
        w = np.polynomial.legendre.leggauss(self.n)[1]
        ref = w[None, :] - 2.0 * self._S
        return self._half[:, None, None] * ref[None, :, :]
