"""
Named potentials used by the verification suite and the tests.
"""

from __future__ import annotations

import numpy as np

from .potential import Potential, constant_potential, free_potential, make_potential


def free(m: float = 1.0) -> Potential:
    return free_potential(m)


def q_const(m: float = 1.0, c: float = 1.0, gamma: float = 1.0) -> Potential:
    """``q = c`` on ``[0, gamma]``, ``p1 = p2 = 0``."""
    return constant_potential([(0.0, gamma, 0.0, 0.0, c)], m)


def smooth_cubic(m: float = 1.0) -> Potential:
    """``(1 - x)^3 (0.5, 0.3, 1)`` on [0, 1]; V and V' vanish at 1."""
    c = np.array([1.0, -3.0, 3.0, -1.0])
    return make_potential([{"lo": 0.0, "hi": 1.0, "p1": 0.5 * c, "p2": 0.3 * c,
                            "q": c}], m)


def smooth_bump(m: float = 1.0) -> Potential:
    """``x^2 (2 - x)^2`` shaped bump on [0, 2], continuous with V(2) = 0."""
    b = np.array([0.0, 0.0, 4.0, -4.0, 1.0])      # x^2 (2 - x)^2
    return make_potential([{"lo": 0.0, "hi": 2.0, "p1": -0.4 * b, "p2": 0.2 * b,
                            "q": 0.6 * b}], m)


def deep_well(m: float = 1.0) -> Potential:
    """``p1 = p2 = -4`` on [0, 3]; three eigenvalues for m = 1."""
    return constant_potential([(0.0, 3.0, -4.0, -4.0, 0.0)], m)


def piecewise_constant_family(m: float = 1.0) -> list:
    """Five piecewise-constant potentials with different cell structures."""
    return [
        constant_potential([(0.0, 1.0, 0.0, 0.0, 1.0)], m),
        constant_potential([(0.0, 0.5, 1.0, -0.5, 0.3), (0.5, 1.5, -0.7, 0.2, 0.0)], m),
        constant_potential([(0.0, 2.0, -2.0, -2.0, 0.0)], m),
        constant_potential([(0.0, 0.3, 0.0, 0.0, 2.0), (0.3, 0.6, 1.5, 1.5, -1.0),
                            (0.6, 1.0, -0.5, 0.8, 0.4)], m),
        constant_potential([(0.0, 0.25, 3.0, 1.0, 0.5), (0.25, 0.5, 0.0, 0.0, 0.0),
                            (0.5, 0.75, -1.0, 2.0, -2.0), (0.75, 2.5, 0.1, 0.1, 0.1)], m),
    ]


def gauge_fixture(m: float = 1.0) -> Potential:
    """``v = 2 pi`` on [0, 1] (so ``int v = 2 pi``) with nonzero ``p`` and ``q``."""
    c = 2.0 * np.pi
    return make_potential([{"lo": 0.0, "hi": 1.0, "p1": [c + 0.5, 0.5], "p2": [c - 0.5, -0.5],
                            "q": [0.4, -0.4]}], m)
