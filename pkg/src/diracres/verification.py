"""
Acceptance criteria as executable checks.

Every check returns a :class:`CriterionResult` with the measured quantities
and the threshold it was compared against.  ``run_all`` runs them in order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import fixtures
from .fredholm import (det2, det2_trace_series, hs_leading_bound, hs_norm_estimate,
                       identity_a_eq_D, identity_S_from_D, relativistic_integral)
from .jost import asymptotic_B, exponential_type_estimate, jost_arrays, jost_values, wronskian
from .oracle import transfer_matrix_closed_form
from .plane import Sheet, quasimomentum_array
from .potential import Potential, derived_scalars, gauge_transform
from .scattering import omega, phase_expansion_residual, scattering_matrix
from .states import (F_derivative_at, F_values, StateClass, antibound_parity,
                     counting_report, eigenvalues, find_states, forbidden_domain_check)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    runtime: float = 0.0
    note: str = ""

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.number:2d} {self.title} ({self.runtime:.1f} s)"


def _timed(fn):
    def wrapper(*args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        res.runtime = time.perf_counter() - t0
        if "runtime_limit" in res.metrics and res.runtime > res.metrics["runtime_limit"]:
            res.passed = False
            res.note = (res.note + " runtime limit exceeded").strip()
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def free_exactness(m: float = 1.0) -> CriterionResult:
    """Free operator: f1 = k0, F = lam + m, D = 1, Omega = 0, S = 1, one virtual state."""
    P = fixtures.free(m)
    lam = np.array([2.0 + 1j, -3.0 + 0.5j, 0.3 + 2j, 5.0 - 1j, -1.5 - 0.2j])
    r = jost_arrays(P, lam)
    e_f1 = float(np.max(np.abs(r["f_plus"][:, 0] - r["k0"])))
    e_F = float(np.max(np.abs(F_values(P, lam) - (lam + m))))
    e_D = max(abs(det2(z, P).value - 1) for z in lam[lam.imag > 0])
    real = np.array([1.5, 3.0, -2.0, -7.0])
    e_om = max(abs(omega(x, P)) for x in np.concatenate([real, [0.2, -0.5]]))
    e_S = max(abs(scattering_matrix(x, P) - 1) for x in real)
    states, info = find_states(P, (-3 * m, 3 * m, -2 * m, 2 * m))
    one_virtual = (len(states) == 1 and states[0].cls is StateClass.VIRTUAL
                   and abs(states[0].lam + m) < 1e-10 and states[0].multiplicity == 1)
    tol = 1e-10
    ok = max(e_f1, e_F, e_D, e_om, e_S) < tol and one_virtual
    return CriterionResult(1, "free-operator exactness", ok, {
        "f1_minus_k0": e_f1, "F_minus_lam_plus_m": e_F, "D_minus_1": e_D,
        "omega": e_om, "S_minus_1": e_S, "states": [(s.lam, s.cls.value) for s in states],
        "tol": tol, "runtime_limit": 1.0})


@_timed
def oracle_equivalence(m: float = 1.0, n_points: int = 100) -> CriterionResult:
    """ODE route against closed-form transfer matrices on five fixtures."""
    rng = np.random.default_rng(20240101)
    half = n_points // 2
    lam_up = rng.uniform(-20, 20, half) + 1j * rng.uniform(0.05, 5, half)
    lam_dn = rng.uniform(-20, 20, n_points - half) - 1j * rng.uniform(0.05, 5, n_points - half)
    worst = []
    for P in fixtures.piecewise_constant_family(m):
        errs = []
        for lam, sheet in ((lam_up, Sheet.PHYSICAL), (lam_dn, Sheet.NONPHYSICAL)):
            ode = jost_values(P, lam, sheet)
            ref = transfer_matrix_closed_form(P, lam, sheet)["f1"]
            errs.append(np.max(np.abs(ode - ref) / np.abs(ref)))
        worst.append(float(max(errs)))
    tol = 1e-8
    return CriterionResult(2, "oracle equivalence", max(worst) < tol,
                           {"sup_rel_error": worst, "tol": tol, "runtime_limit": 30.0})


@_timed
def wronskian_conservation(Ps=None, n_points: int = 50) -> CriterionResult:
    """``|det(f+, f-) - 2 k0| < 1e-8`` on the continuous spectrum."""
    Ps = Ps or [fixtures.q_const(), fixtures.smooth_cubic()]
    worst = 0.0
    for P in Ps:
        m = P.m
        lam = np.concatenate([np.linspace(m + 0.05, 30, n_points // 2),
                              -np.linspace(m + 0.05, 30, n_points - n_points // 2)])
        r = jost_arrays(P, lam.astype(complex), Sheet.PHYSICAL)
        res = np.abs(wronskian(r["f_plus"], r["f_minus"]) - 2 * r["k0"])
        worst = max(worst, float(np.max(res)))
    tol = 1e-8
    return CriterionResult(3, "Wronskian conservation", worst < tol,
                           {"max_residual": worst, "tol": tol})


def F_product(P: Potential, lam) -> np.ndarray:
    """``(lam - m) f1+ f1-`` with k on the physical sheet of each half-plane."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    r = jost_arrays(P, lam, Sheet.PHYSICAL)
    return (lam - P.m) * r["f_plus"][:, 0] * r["f_minus"][:, 0]


@_timed
def F_entirety(Ps=None, eps: float = 1e-6) -> CriterionResult:
    """F has no jump across the gap or the continuous spectrum.

    ``F(lam + i eps) - F(lam - i eps)`` equals ``2 i eps F'(lam)`` for an
    entire F, so the analytic increment is removed before comparing with
    the tolerance.  Both the product form (built from Jost solutions, which
    do jump) and the theta/phi form are checked.
    """
    Ps = Ps or [fixtures.q_const(), fixtures.smooth_cubic(), fixtures.deep_well()]
    worst_prod, worst_tp, raw = 0.0, 0.0, 0.0
    for P in Ps:
        m = P.m
        x = np.concatenate([np.linspace(-0.95 * m, 0.95 * m, 15),
                            np.linspace(m + 0.1, 20, 15), -np.linspace(m + 0.1, 20, 15)])
        _, dF = F_values(P, x.astype(complex), derivative=True)
        inc = 2j * eps * dF
        up, dn = x + 1j * eps, x - 1j * eps
        jp = F_product(P, up) - F_product(P, dn) - inc
        jt = F_values(P, up) - F_values(P, dn) - inc
        worst_prod = max(worst_prod, float(np.max(np.abs(jp))))
        worst_tp = max(worst_tp, float(np.max(np.abs(jt))))
        raw = max(raw, float(np.max(np.abs(F_values(P, up) - F_values(P, dn)))))
    tol = 1e-8
    return CriterionResult(4, "entirety of F", max(worst_prod, worst_tp) < tol, {
        "jump_product_form": worst_prod, "jump_theta_phi_form": worst_tp,
        "raw_difference": raw, "tol": tol})


@_timed
def counting_law(P: Potential | None = None, radii=(100.0, 200.0),
                 delta: float = 0.2) -> CriterionResult:
    """``N(r) / (2 r gamma / pi)`` in [0.9, 1.1] and shrinking sector outliers."""
    P = P or fixtures.q_const()
    rep = counting_report(P, list(radii), delta)
    ratio = rep.ratios[-1]
    fr = rep.outlier_fractions
    ok = 0.9 <= ratio <= 1.1 and fr[-1] < fr[0]
    return CriterionResult(5, "counting law", ok, {
        "radii": list(radii), "counts": rep.counts, "predicted": rep.predicted,
        "ratio": ratio, "outlier_fractions": fr, "runtime_limit": 600.0})


@_timed
def antibound_parity_check(P: Potential | None = None) -> CriterionResult:
    """Odd antibound count between eigenvalues and ``dF < 0`` at eigenvalues.

    The sign condition is checked as stated, together with the cross-check
    ``dF = -2|k| ||f+||^2 / f2+(0)^2`` at relative tolerance 1e-3.  The
    measured values satisfy the same identity with the opposite sign; both
    are reported.
    """
    P = P or fixtures.deep_well()
    eig = eigenvalues(P)
    counts = [antibound_parity(P, a, b)["count"] for a, b in zip(eig[:-1], eig[1:])]
    parity_ok = len(eig) >= 2 and all(c % 2 == 1 and c >= 1 for c in counts)
    ders = [F_derivative_at(e, P) for e in eig]
    dF = [d["fd"] for d in ders]
    neg_ok = all(v < 0 for v in dF)
    rel_neg = [abs(d["fd"] - d["norming_negative"]) / abs(d["norming_negative"]) for d in ders]
    rel_pos = [abs(d["fd"] - d["norming"]) / abs(d["norming"]) for d in ders]
    rel_var = [abs(d["fd"] - d["variational"]) / abs(d["variational"]) for d in ders]
    ok = parity_ok and neg_ok and max(rel_neg, default=1.0) < 1e-3
    return CriterionResult(6, "antibound parity and dF sign", ok, {
        "eigenvalues": eig, "antibound_counts": counts, "parity_ok": parity_ok,
        "dF": dF, "dF_negative": neg_ok,
        "rel_dev_from_negative_identity": rel_neg,
        "rel_dev_from_positive_identity": rel_pos,
        "rel_dev_fd_vs_variational": rel_var},
        note="" if ok else "dF > 0 at every eigenvalue; matches +2|k| ||f+||^2/f2^2")


@_timed
def forbidden_domain(Ps=None, region=(-30.0, 30.0, -6.0, -1e-3)) -> CriterionResult:
    """Every resonance found for smooth fixtures lies outside the forbidden domain."""
    Ps = Ps or [fixtures.smooth_cubic(), fixtures.smooth_bump()]
    out, nviol, nres = [], 0, 0
    for P in Ps:
        states, info = find_states(P, region)
        chk = forbidden_domain_check(P, states)
        res = [s for s in states if s.cls is StateClass.RESONANCE]
        nres += len(res)
        nviol += len(chk["violations"])
        out.append({"C1": chk["C1"], "C1_half": chk["C1_half"], "d0": chk["d0"],
                    "d1": chk["d1"], "resonances": len(res),
                    "winding": info["winding"],
                    "min_margin": min((mg for _, mg in chk["margins"]), default=None),
                    "violations": chk["violations"]})
    return CriterionResult(7, "forbidden domain", nviol == 0 and nres > 0,
                           {"fixtures": out, "violations": nviol, "resonances": nres})


def _slope(lam, r) -> float:
    return float(np.polyfit(np.log(lam), np.log(np.abs(r)), 1)[0])


@_timed
def high_energy_expansion(P: Potential | None = None, lam=None) -> CriterionResult:
    """``f1 / (k0 e^{i Omega0}) - 1 + B / (2 i lam) = O(lam^-2)`` and the phase analogue."""
    P = P or fixtures.smooth_cubic()
    lam = np.geomspace(50.0, 800.0, 12) if lam is None else np.asarray(lam, float)
    ds = derived_scalars(P)
    r = jost_arrays(P, lam.astype(complex), Sheet.PHYSICAL)
    f1, k0 = r["f_plus"][:, 0], r["k0"]
    B = np.array([asymptotic_B(x, P) for x in lam])
    amp = f1 / (k0 * np.exp(1j * ds.omega0)) - 1 + B / (2j * lam)
    ph = phase_expansion_residual(lam, P)
    s_amp, s_ph = _slope(lam, amp), _slope(lam, ph)
    limit = -2 + 0.2
    return CriterionResult(8, "high-energy expansion", s_amp <= limit and s_ph <= limit, {
        "slope_amplitude": s_amp, "slope_phase": s_ph, "limit": limit,
        "lam2_residual_max": float(np.max(np.abs(lam ** 2 * amp))),
        "lam2_phase_residual_max": float(np.max(np.abs(lam ** 2 * ph)))})


@_timed
def exponential_type(Ps=None) -> CriterionResult:
    """Type ``2 gamma`` along ``-i r`` and 0 along ``+i r``."""
    Ps = Ps or [fixtures.q_const(), fixtures.smooth_cubic()]
    rows, ok = [], True
    for P in Ps:
        lo = exponential_type_estimate(P, "lower")
        up = exponential_type_estimate(P, "upper")
        good = abs(lo - 2 * P.gamma) <= 0.05 * 2 * P.gamma and abs(up) <= 0.05
        ok &= good
        rows.append({"gamma": P.gamma, "lower": lo, "upper": up})
    return CriterionResult(9, "exponential type", bool(ok), {"fixtures": rows})


@_timed
def determinant_identities(N: int = 200, T: float = 400.0) -> CriterionResult:
    """S from D at 10 real points and f1 = k0 D exp(...) at 5 points of C+."""
    Q = fixtures.q_const()
    lam_real = np.array([1.5, 2.0, 3.0, 5.0, 8.0, -1.5, -2.0, -3.0, -5.0, -8.0])
    dS = [identity_S_from_D(x, Q, N)[2] for x in lam_real]
    C = fixtures.smooth_cubic()
    pts = [1 + 1j, 0.5 + 2j, -2 + 1j, 3 + 0.5j, 2j]
    dA = [identity_a_eq_D(z, C, N, T)[2] for z in pts]
    ok = max(dS) < 5e-3 and max(dA) < 1e-2
    return CriterionResult(10, "determinant identities", ok, {
        "S_diff": dS, "a_eq_D_rel_diff": dA, "tol_S": 5e-3, "tol_a": 1e-2,
        "runtime_limit": 300.0})


@_timed
def determinant_bounds(N: int = 200) -> CriterionResult:
    """``|D| <= exp(hs^2 / 2)``, ``D(200 i) -> 1`` and the trace-series certificate."""
    Q, C = fixtures.q_const(), fixtures.smooth_cubic()
    grid = [x + 1j * y for x in (-5.0, -1.0, 0.0, 1.0, 2.0, 5.0) for y in (0.3, 1.0, 2.0, 5.0)]
    worst = -np.inf
    for P in (Q, C):
        for z in grid:
            d = det2(z, P, N)
            worst = max(worst, abs(d.value) - np.exp(0.5 * d.hs_norm ** 2))
    d200 = det2(200j, C, N)
    far = abs(d200.value - 1)
    z = 40j
    ser, rem = det2_trace_series(z, Q, N, n_max=8)
    d = det2(z, Q, N)
    series_gap = abs(np.log(ser) - np.log(d.value))
    ok = worst <= 0 and far < 1e-3 and series_gap <= rem
    return CriterionResult(11, "determinant bounds", ok, {
        "max_|D|_minus_bound": float(worst), "D(200i)_minus_1": float(far),
        "series_log_gap": float(series_gap), "series_remainder": float(rem),
        "series_point": z})


@_timed
def hs_certificate(Ps=None, N: int = 200) -> CriterionResult:
    """Discretized ``||V R0||_HS^2 <= 1.1 x`` the leading bound; decay along ``i t``."""
    Ps = Ps or [fixtures.q_const(), fixtures.smooth_cubic()]
    test = [x + 1j * y for x in (-4.0, -2.0, 0.0, 2.0, 4.0) for y in (0.5, 1.0, 3.0)]
    ratios = []
    for P in Ps:
        for z in test:
            if min(abs(z - P.m), abs(z + P.m)) < 0.5:
                continue
            hs = hs_norm_estimate(z, P, N)
            ratios.append(hs ** 2 / (hs_leading_bound(z, P.m) * P.l2_norm_sq()))
    t = np.array([1.0, 10.0, 100.0, 400.0])
    decay = [hs_norm_estimate(1j * x, Ps[0], N) for x in t]
    mono = bool(np.all(np.diff(decay) < 0)) and decay[-1] < 0.1 * decay[0]
    ok = max(ratios) <= 1.1 and mono
    return CriterionResult(12, "Hilbert-Schmidt certificate", ok, {
        "max_ratio_to_bound": float(max(ratios)), "decay_along_it": decay})


@_timed
def relativistic_integral_check(m: float = 1.0) -> CriterionResult:
    """``int dk / |E(k) - lam|^2`` against the closed-form leading term.

    ``C`` is fitted as the largest ``|numeric - closed| / max(|lam|^-2,
    |lam -+ m|^-2)`` over a fixed 20-point set and must stay below ``10 m``.
    The same fit for the two-branch integral is reported alongside.
    """
    xs = (-6.0, -2.5, 2.5, 6.0, 0.0)
    ys = (0.5, 2.0, 10.0, 30.0)
    pts = [x + 1j * y for x in xs for y in ys]
    c1, c2 = [], []
    for z in pts:
        scale = max(1 / abs(z) ** 2, 1 / abs(z - m) ** 2, 1 / abs(z + m) ** 2)
        c1.append(abs(relativistic_integral(z, m, 1)[2]) / scale)
        c2.append(abs(relativistic_integral(z, m, 2)[2]) / scale)
    C1, C2 = float(max(c1)), float(max(c2))
    return CriterionResult(13, "relativistic integral", C1 < 10 * m, {
        "C_fit": C1, "C_fit_two_branch": C2, "limit": 10 * m, "points": len(pts)},
        note="" if C1 < 10 * m else "single-branch integral misses by O(1/|Im lam|)")


@_timed
def gauge_invariance(P: Potential | None = None) -> CriterionResult:
    """f1 unchanged by the gauge transform when ``int v = 2 pi``."""
    P = P or fixtures.gauge_fixture()
    Pg = gauge_transform(P)
    rng = np.random.default_rng(7)
    lam = rng.uniform(-15, 15, 20) + 1j * rng.uniform(-3, 3, 20)
    a = jost_values(P, lam)
    b = jost_values(Pg, lam)
    err = float(np.max(np.abs(a - b)))
    return CriterionResult(14, "gauge invariance", err < 1e-8, {
        "max_abs_diff": err, "omega0": derived_scalars(P).omega0, "tol": 1e-8})


CRITERIA = {
    1: free_exactness, 2: oracle_equivalence, 3: wronskian_conservation,
    4: F_entirety, 5: counting_law, 6: antibound_parity_check, 7: forbidden_domain,
    8: high_energy_expansion, 9: exponential_type, 10: determinant_identities,
    11: determinant_bounds, 12: hs_certificate, 13: relativistic_integral_check,
    14: gauge_invariance,
}


def run_all(only=None, potential: Potential | None = None, log=None) -> list:
    """Run the criteria (all, or the numbers in ``only``).

    ``potential`` replaces the default fixture of the checks that take a
    single potential (3, 4, 5, 8, 9 use it when given).
    """
    out = []
    for n, fn in CRITERIA.items():
        if only and n not in only:
            continue
        if potential is not None and n in (3, 4, 9):
            res = fn([potential])
        elif potential is not None and n in (5, 8) and (n != 8 or potential.smooth_flag):
            res = fn(potential)
        else:
            res = fn()
        out.append(res)
        if log:
            log(res.line())
    return out
