"""
Invariant suites over a single cell, aggregated into one report.

Each check is a small function returning a :class:`Check`; :func:`run_suite`
runs them in a fixed order so reports are reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import fktflow as fk
from . import linalg as la
from .momentpoly import (
    MomentMap,
    bruhat_interval_polytope,
    verify_moment_closure,
    verify_sym_moment,
)
from .symgroup import act_prefix, bruhat_leq, covers, symmetric_group
from .symtoda import SymmetricTodaFlow, consistency_psi
from .tnncell import CellPoint, Spectrum, build_g, interval_by_minors, is_matroid

__all__ = ["Check", "SuiteReport", "run_suite", "chevalley_drift", "lax_residuals"]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "pass": self.passed, "detail": self.detail}


@dataclass(frozen=True)
class SuiteReport:
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {"pass": self.passed, "checks": [c.to_json() for c in self.checks]}


def chevalley_drift(flow: fk.KostantTodaFlow, times) -> float:
    """Largest relative change of ``tr L^(k+1)`` over ``times``.

    Relative to ``max(|H_k(0)|, sum |lambda|^(k+1))`` since odd power sums
    vanish for symmetric spectra.
    """
    lam = flow.spectrum_.as_float()
    H0 = fk.chevalley(la.as_float(flow.lax0_))
    scale = np.array(
        [max(abs(h), np.sum(np.abs(lam) ** (k + 1))) for k, h in enumerate(H0, start=1)]
    )
    drift = 0.0
    for t in times:
        H = fk.chevalley(flow.lax(t).astype(float))
        drift = max(drift, float(np.max(np.abs(H - H0) / scale)))
    return drift


def lax_residuals(flow: fk.KostantTodaFlow, t, hs=(1e-3, 1e-4)) -> list[float]:
    """Central-difference residuals of ``dL/dt_1 = [(L)_{>=0}, L]`` at each step."""
    t = flow._t(t)
    e1 = np.zeros_like(t)
    e1[0] = 1.0
    rhs = fk.lax_vector_field(flow.lax(t).astype(float))
    out = []
    for h in hs:
        d = (flow.lax(t + h * e1) - flow.lax(t - h * e1)).astype(float) / (2 * h)
        out.append(float(np.max(np.abs(d - rhs))))
    return out


def _guard(name: str, fn: Callable[[], Check]) -> Check:
    try:
        return fn()
    except Exception as exc:  # a crashing check is a failing check
        return Check(name, False, {"error": f"{type(exc).__name__}: {exc}"})


def run_suite(
    cell: CellPoint,
    spectrum: Spectrum,
    grid: np.ndarray,
    tol: float = 1e-6,
    g=None,
    heavy: bool = True,
) -> SuiteReport:
    """Run every invariant check on one cell.  ``g`` overrides ``build_g(cell)``
    (used to inject faults)."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty time grid")
    v, w = cell.v, cell.w
    n = cell.n
    g = build_g(cell) if g is None else la.as_exact(g)
    gap = spectrum.min_gap()
    T = 40.0 / gap
    checks: list[Check] = []

    def pds_check():
        s = cell.subexpr
        ok = not s.Jbullet and s.is_positive_distinguished() and s.value == v
        return Check("pds", ok, {"mask": s.pretty()})

    def minors_structure():
        bad = []
        for k in range(1, n + 1):
            vk = act_prefix(v, k)
            if not la.flag_minor(g, vk, k) > 0:
                bad.append(["lead", k])
            for I in itertools.combinations(range(1, n + 1), k):
                d = la.flag_minor(g, I, k)
                if d < 0:
                    bad.append(["negative", list(I)])
                if I < vk and d != 0:
                    bad.append(["below_v", list(I)])
        return Check("flag_minors", not bad, {"violations": bad[:10]})

    def minors_vs_bruhat():
        mismatches = [
            list(z)
            for z in symmetric_group(n)
            if interval_by_minors(g, v, w, z) != (bruhat_leq(v, z) and bruhat_leq(z, w))
        ]
        return Check("interval_by_minors", not mismatches, {"mismatches": mismatches[:10]})

    checks.append(_guard("pds", pds_check))
    checks.append(_guard("flag_minors", minors_structure))
    checks.append(_guard("interval_by_minors", minors_vs_bruhat))

    try:
        flow = fk.KostantTodaFlow(spectrum=spectrum).fit(g)
    except Exception as exc:
        checks.append(Check("flow_setup", False, {"error": f"{type(exc).__name__}: {exc}"}))
        return SuiteReport(tuple(checks))

    def matroids():
        lo, hi = flow.limits()
        ok = all(is_matroid(lev.index_sets) for lev in flow.tau_data_.levels)
        return Check("matroids", ok and (lo, hi) == (v, w), {"v": list(lo), "w": list(hi)})

    def initial():
        L0 = flow.lax0_
        tr = sum(L0[i, i] for i in range(n))
        H = fk.chevalley(L0)
        ps = [sum(x ** (k + 1) for x in spectrum.lambdas) for k in range(1, n)]
        ok = tr == 0 and all(abs(float(a - b)) < 1e-12 for a, b in zip(H, ps))
        return Check("initial_L0", ok, {"trace": str(tr)})

    def tau_positive():
        vals = np.array([flow.log_tau(t) for t in grid])
        return Check("tau_positive", bool(np.all(np.isfinite(vals))), {"n_times": int(len(grid))})

    def chevalley_check():
        d = chevalley_drift(flow, grid)
        return Check("chevalley", d < 1e-9, {"max_relative_drift": d})

    def two_routes():
        moderate = grid[np.abs(grid) <= 5.0 / gap] if np.any(np.abs(grid) <= 5.0 / gap) else grid[:1]
        err = max(
            float(np.max(np.abs(flow.diag_via_tau(t) - np.diag(flow.lax(t)).astype(float))))
            for t in moderate
        )
        return Check("diag_two_routes", err < 1e-9, {"max_error": err})

    def lax_eq():
        worst_ratio, worst = [], 0.0
        for t in (-0.5 / gap, 0.3 / gap):
            r3, r4 = lax_residuals(flow, t)
            worst = max(worst, r4)
            if r3 > 1e-10:
                worst_ratio.append(r3 / r4)
        ok = worst < 1e-5 and all(80 <= r <= 120 for r in worst_ratio)
        return Check("lax_residual", ok, {"max_residual_h1e-4": worst, "ratios": worst_ratio})

    def asymptotics():
        rep = fk.asymptotic_check(g, spectrum, T, tol)
        return Check("asymptotics", rep.passed, rep.to_json())

    def fixed_points():
        errs = {}
        for z in flow_interval:
            c = fk.direction_to_fixed_point(z, spectrum)
            L = flow.lax(T * c).astype(float)
            target = np.diag(spectrum.permuted(z)) + np.diag(np.ones(n - 1), 1)
            errs[" ".join(map(str, z))] = float(np.max(np.abs(L - target)))
        return Check("fixed_points", max(errs.values()) < tol, {"errors": errs})

    from .symgroup import interval as _interval

    flow_interval = _interval(v, w)
    for name, fn in [
        ("matroids", matroids),
        ("initial_L0", initial),
        ("tau_positive", tau_positive),
        ("chevalley", chevalley_check),
        ("diag_two_routes", two_routes),
        ("lax_residual", lax_eq),
        ("asymptotics", asymptotics),
        ("fixed_points", fixed_points),
    ]:
        checks.append(_guard(name, fn))

    def sym_consistency():
        moderate = grid[np.abs(grid) <= 10.0]
        rep = consistency_psi(g, spectrum, moderate if moderate.size else grid[:1])
        ok = rep.max_deviation < 1e-8 and rep.max_asymmetry < 1e-10
        return Check("sym_consistency", ok, {"max_deviation": rep.max_deviation, "max_asymmetry": rep.max_asymmetry})

    def sym_asymptotics():
        fs = SymmetricTodaFlow(spectrum=spectrum).fit(g)
        Sm, Sp = fs.lax(-T).astype(float), fs.lax(T).astype(float)
        em = float(np.max(np.abs(Sm - np.diag(spectrum.permuted(v)))))
        ep = float(np.max(np.abs(Sp - np.diag(spectrum.permuted(w)))))
        return Check("sym_asymptotics", max(em, ep) < tol, {"minus": em, "plus": ep})

    checks.append(_guard("sym_consistency", sym_consistency))
    checks.append(_guard("sym_asymptotics", sym_asymptotics))

    if heavy:
        def closure():
            rep = verify_moment_closure(g, spectrum, v, w)
            return Check("moment_closure", rep.passed, {
                "n_vertices": len(rep.polytope.vertices),
                "containment_violations": rep.containment_violations,
                "max_limit_error": rep.max_limit_error,
                "non_vertex_labels": [list(z) for z in rep.polytope.non_vertices],
            })

        def sym_moment():
            rep = verify_sym_moment(g, spectrum, v, w)
            return Check("sym_moment", rep.passed, rep.to_json())

        def minkowski():
            P = bruhat_interval_polytope(v, w, "moment")
            S = MomentMap(spectrum=spectrum).fit(g).polytope()
            return Check("minkowski", S.same_as(P), {"n_vertices": len(P.vertices)})

        def edge_check():
            P = bruhat_interval_polytope(v, w, "appendix")
            bad = []
            for i, j in P.edges:
                a, b = P.labels[i], P.labels[j]
                diff = [x - y for x, y in zip(P.vertices[i], P.vertices[j])]
                nz = sorted(d for d in diff if d != 0)
                if not (covers(a, b) or covers(b, a)) or len(nz) != 2 or nz[0] != -nz[1]:
                    bad.append([list(a), list(b)])
            return Check("edge_covers", not bad, {"n_edges": len(P.edges), "violations": bad})

        for name, fn in [
            ("moment_closure", closure),
            ("sym_moment", sym_moment),
            ("minkowski", minkowski),
            ("edge_covers", edge_check),
        ]:
            checks.append(_guard(name, fn))

    return SuiteReport(tuple(checks))
