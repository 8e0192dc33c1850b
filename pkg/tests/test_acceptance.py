"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run ``pytest tests/test_acceptance.py -v`` and read the "acceptance criteria"
section of the terminal summary, or run ``python -m tests.test_acceptance``
from the repository root.
"""

from __future__ import annotations

import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from tests import oracles
from todaflag import fktflow as fk
from todaflag.momentpoly import (
    MomentMap,
    bruhat_interval_polytope,
    verify_moment_closure,
    verify_sym_moment,
)
from todaflag.symgroup import (
    Permutation,
    ReducedWord,
    bruhat_leq,
    identity,
    interval,
    longest,
    pds,
    reduced_word_of,
    symmetric_group,
)
from todaflag.symtoda import SymmetricTodaFlow, consistency_psi, plucker_Q
from todaflag.tnncell import (
    CellPoint,
    Spectrum,
    build_g,
    default_spectrum,
    interval_by_minors,
    random_cell,
    random_params,
)
from todaflag.verify import chevalley_drift, lax_residuals


def _record(log, number, title, ok, detail, elapsed, limit):
    in_time = elapsed <= limit
    status = "PASS" if ok and in_time else "FAIL"
    line = f"[{status}] {number:>2}. {title}: {detail} ({elapsed:.3g} s, limit {limit:g} s)"
    log.append(line)
    print(line)
    return ok and in_time


def _timed(fn, repeat=1):
    """Run ``fn`` ``repeat`` times; return its last result and the median time."""
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, float(np.median(times))


EXPARAM_V = Permutation.from_word((3, 4, 2), 6)
EXPARAM_W = ReducedWord.from_letters((2, 3, 1, 4, 5, 3, 2), 6)
SL5_V = Permutation((1, 3, 5, 2, 4))
SL5_W = ReducedWord.from_letters((2, 3, 1, 4, 3, 2), 5)
SL4_V = Permutation((1, 2, 4, 3))
SL4_W = ReducedWord.from_letters((2, 3, 2, 1), 4)


def test_c01_pds(acceptance_log):
    def run():
        return pds(EXPARAM_V, EXPARAM_W).pretty(), pds(SL5_V, SL5_W).pretty()

    (a, b), dt = _timed(run, repeat=25)
    ok = a == "1 s3 1 s4 1 1 s2" and b == "s2 1 1 s4 s3 1"
    assert _record(acceptance_log, 1, "PDS reproduction", ok, f"{a!r}, {b!r}", dt, 1e-3)


def test_c02_cell_matrix(acceptance_log):
    cell = CellPoint(EXPARAM_V, EXPARAM_W, (2, 3, 5, 7))
    g, dt = _timed(lambda: build_g(cell), repeat=10)

    direct = [[Fraction(int(i == j)) for j in range(6)] for i in range(6)]
    params = iter((2, 3, 5, 7))
    for i, m in zip(EXPARAM_W.letters, (0, 1, 0, 1, 0, 0, 1)):
        f = oracles.sdot_gen(i, 6) if m else oracles.y_gen(i, next(params), 6)
        direct = oracles.matmul(direct, f)
    # displayed pattern with p = (p1, p3, p5, p6) = (2, 3, 5, 7)
    shown = [
        [1, 0, 0, 0, 0, 0],
        [3, 0, -1, 0, 0, 0],
        [6, 0, -2, 0, 1, 0],
        [0, 1, 0, 0, 0, 0],
        [0, 7, 0, 1, 0, 0],
        [0, 0, 0, 0, 5, 1],
    ]
    ok = g.tolist() == direct and g.tolist() == shown and g[2, 0] == 2 * 3 and g[5, 4] == 5
    assert _record(acceptance_log, 2, "cell matrix", ok, "exact match with product and display", dt, 1e-2)


def test_c03_minors_equivalence(acceptance_log):
    rng = np.random.default_rng(3)

    def run():
        failures = n_cells = 0
        group = list(symmetric_group(4))
        for w in group:
            word = reduced_word_of(w)
            for v in group:
                if not oracles.bruhat_leq_subword(v, w):
                    continue
                n_cells += 1
                cell = CellPoint(v, word, random_params(rng, w.length() - v.length()))
                g = build_g(cell)
                for z in group:
                    expect = oracles.bruhat_leq_subword(v, z) and oracles.bruhat_leq_subword(z, w)
                    failures += interval_by_minors(g, v, w, z) != expect
        return failures, n_cells

    (failures, n_cells), dt = _timed(run)
    ok = failures == 0 and n_cells > 0
    assert _record(acceptance_log, 3, "minors equivalence over S4",
                   ok, f"{n_cells} cells x 24 z, {failures} failures", dt, 60)


def test_c04_sorting(acceptance_log):
    def run():
        cell = CellPoint(SL5_V, SL5_W, (1, 2, 3))
        lam = Spectrum((-2, -1, 0, 1, 2))
        rep = fk.asymptotic_check(build_g(cell), lam, T=40.0)
        errs = [rep.max_diag_error, rep.max_subdiag]
        want_minus = lam.permuted((1, 3, 5, 2, 4))
        want_plus = lam.permuted((3, 5, 1, 4, 2))
        errs.append(float(np.max(np.abs(np.asarray(rep.diag_minus, float) - want_minus))))
        errs.append(float(np.max(np.abs(np.asarray(rep.diag_plus, float) - want_plus))))
        # classical (e, w0), n = 4, default spectrum
        e, w0 = identity(4), longest(4)
        spec4 = default_spectrum(4)
        flow = fk.KostantTodaFlow(spectrum=spec4).fit(
            build_g(CellPoint(e, reduced_word_of(w0), (1,) * 6))
        )
        T = 40.0 / spec4.min_gap()
        lo, hi = flow.lax(-T).astype(float), flow.lax(T).astype(float)
        lamf = spec4.as_float()
        errs.append(float(np.max(np.abs(np.diag(lo) - lamf))))
        errs.append(float(np.max(np.abs(np.diag(hi) - lamf[::-1]))))
        errs.append(fk.strict_lower_norm(lo))
        errs.append(fk.strict_lower_norm(hi))
        return max(errs), rep.passed

    (err, passed), dt = _timed(run)
    ok = passed and err < 1e-6
    assert _record(acceptance_log, 4, "sorting asymptotics", ok, f"max error {err:.2e}", dt, 1.0)


def test_c05_lax_residual(acceptance_log):
    def run():
        rng = np.random.default_rng(5)
        spec = default_spectrum(4)
        ratios, worst = [], 0.0
        for _ in range(20):
            cell = random_cell(4, rng, strict=True, random_word=True)
            flow = fk.KostantTodaFlow(spectrum=spec).fit(build_g(cell))
            t = float(rng.uniform(-0.5, 0.5))
            r3, r4 = lax_residuals(flow, t, (1e-3, 1e-4))
            ratios.append(r3 / r4)
            worst = max(worst, r4)
        return ratios, worst

    (ratios, worst), dt = _timed(run)
    ok = worst < 1e-5 and all(80 <= r <= 120 for r in ratios)
    detail = f"ratios in [{min(ratios):.1f}, {max(ratios):.1f}], max residual {worst:.2e}"
    assert _record(acceptance_log, 5, "Lax residual", ok, detail, dt, 10)


def test_c06_conservation(acceptance_log):
    def run():
        grid = np.linspace(-10, 10, 41)
        drift, finite = 0.0, True
        rng = np.random.default_rng(6)
        cases = [(build_g(CellPoint(SL5_V, SL5_W, (1, 2, 3))), Spectrum((-2, -1, 0, 1, 2)))]
        for _ in range(5):
            cases.append((build_g(random_cell(4, rng, strict=True)), default_spectrum(4)))
        for g, spec in cases:
            flow = fk.KostantTodaFlow(spectrum=spec).fit(g)
            drift = max(drift, chevalley_drift(flow, grid))
            logs = flow.log_tau_grid(grid)
            finite &= bool(np.all(np.isfinite(logs)))
        return drift, finite

    (drift, finite), dt = _timed(run)
    ok = drift < 1e-9 and finite
    assert _record(acceptance_log, 6, "conservation and regularity", ok,
                   f"relative drift {drift:.2e}, tau finite and positive: {finite}", dt, 5)


def test_c07_fixed_points(acceptance_log):
    def run():
        spec = default_spectrum(4)
        cell = CellPoint(SL4_V, SL4_W, (1, 1, 1))
        flow = fk.KostantTodaFlow(spectrum=spec).fit(build_g(cell))
        s = 40.0 / spec.min_gap()
        errs = {}
        for z in interval(cell.v, cell.w):
            L = flow.lax(s * fk.direction_to_fixed_point(z, spec)).astype(float)
            target = np.diag(spec.permuted(z)) + np.diag(np.ones(3), 1)
            errs[z] = float(np.max(np.abs(L - target)))
        return errs

    errs, dt = _timed(run)
    ok = len(errs) == 8 and max(errs.values()) < 1e-6
    assert _record(acceptance_log, 7, "multi-time fixed points", ok,
                   f"{len(errs)} targets, max error {max(errs.values()):.2e}", dt, 2)


def test_c08_moment_polytopes(acceptance_log):
    def run():
        e, w0 = identity(3), longest(3)
        g3 = build_g(CellPoint(e, reduced_word_of(w0), (1, 2, 3)))
        r3 = verify_moment_closure(g3, default_spectrum(3), e, w0)
        g4 = build_g(CellPoint(SL4_V, SL4_W, (1, 1, 1)))
        r4 = verify_moment_closure(g4, default_spectrum(4), SL4_V, SL4_W.target)
        return r3, r4

    (r3, r4), dt = _timed(run)
    nv = (len(r3.polytope.vertices), len(r4.polytope.vertices))
    viol = r3.containment_violations + r4.containment_violations
    ok = r3.passed and r4.passed and nv == (6, 8) and viol == 0
    assert _record(acceptance_log, 8, "moment polytopes", ok,
                   f"vertices {nv}, containment violations {viol}", dt, 30)


def test_c09_minkowski(acceptance_log):
    def run():
        cells = []
        for w in symmetric_group(3):
            for v in symmetric_group(3):
                if bruhat_leq(v, w):
                    cells.append(CellPoint(v, reduced_word_of(w), (1,) * (w.length() - v.length())))
        rng = np.random.default_rng(9)
        cells += [random_cell(4, rng, random_word=True) for _ in range(10)]
        bad = 0
        for c in cells:
            S = MomentMap(spectrum=default_spectrum(c.n)).fit(build_g(c)).polytope()
            bad += not S.same_as(bruhat_interval_polytope(c.v, c.w, "moment"))
        return len(cells), bad

    (count, bad), dt = _timed(run)
    assert _record(acceptance_log, 9, "Minkowski identity", bad == 0,
                   f"{count} cells, {bad} mismatches", dt, 300)


def _edge_sweep():
    n_pairs = non_cover = non_parallel = non_unit = 0
    group = list(symmetric_group(4))
    for w in group:
        for v in group:
            if not bruhat_leq(v, w):
                continue
            n_pairs += 1
            P = bruhat_interval_polytope(v, w, "appendix")
            for i, j in P.edges:
                a, b = P.labels[i], P.labels[j]
                lo, hi = (a, b) if a.length() < b.length() else (b, a)
                diff = [x - y for x, y in zip(P.vertices[i], P.vertices[j])]
                nz = [d for d in diff if d != 0]
                cover = hi.length() == lo.length() + 1 and bruhat_leq(lo, hi) and len(nz) == 2
                non_cover += not cover
                non_parallel += not (len(nz) == 2 and nz[0] == -nz[1])
                non_unit += sorted(nz) != [-1, 1]
    return n_pairs, non_cover, non_parallel, non_unit


def test_c10_edge_covers(acceptance_log):
    def run():
        sweep = _edge_sweep()
        perm4 = bruhat_interval_polytope(identity(4), longest(4), "appendix")
        weak = oracles.weak_order_edges(4)
        mine = {frozenset([tuple(perm4.labels[i]), tuple(perm4.labels[j])]) for i, j in perm4.edges}
        return sweep, len(perm4.edges), mine == weak

    ((n_pairs, non_cover, non_parallel, non_unit), n_perm4, weak_ok), dt = _timed(run)
    ok = non_cover == 0 and non_parallel == 0 and n_perm4 == 36 and weak_ok
    detail = (f"{n_pairs} intervals, {non_cover} non-cover edges, {non_parallel} not parallel to "
              f"e_i - e_j, Perm4 edges {n_perm4}; {non_unit} edges have difference "
              "c(e_i - e_j) with |c| > 1")
    assert _record(acceptance_log, 10, "interval polytope edges", ok, detail, dt, 300)


@pytest.mark.xfail(strict=True, reason="unit-length edge differences are false in general, "
                   "e.g. the edge 213 -- 231 of P_{123,231} has difference 2(e_2 - e_3)")
def test_c10_literal_unit_difference():
    assert _edge_sweep()[3] == 0


def test_c11_symmetric(acceptance_log):
    def run():
        rng = np.random.default_rng(11)
        spec = default_spectrum(4)
        grid = np.linspace(-10, 10, 21)
        dev = lim = 0.0
        matroids_ok = closure_ok = True
        for _ in range(10):
            cell = random_cell(4, rng, strict=True, random_word=True)
            g = build_g(cell)
            dev = max(dev, consistency_psi(g, spec, grid).max_deviation)
            fs = SymmetricTodaFlow(spectrum=spec).fit(g)
            lim = max(
                lim,
                float(np.max(np.abs(fs.lax(-40.0).astype(float) - np.diag(spec.permuted(cell.v))))),
                float(np.max(np.abs(fs.lax(40.0).astype(float) - np.diag(spec.permuted(cell.w))))),
            )
            flow = fk.KostantTodaFlow(spectrum=spec).fit(g)
            q0 = fs.orthogonal(0.0)
            for lev in flow.tau_data_.levels[:-1]:
                pq = plucker_Q(q0, lev.k)
                support = {I for I, d in pq.items() if abs(d) > 1e-12}
                matroids_ok &= support == set(lev.index_sets)
            sym = verify_sym_moment(g, spec, cell.v, cell.w)
            closure_ok &= sym.passed and sym.closure_matches
        return dev, lim, matroids_ok, closure_ok

    (dev, lim, matroids_ok, closure_ok), dt = _timed(run)
    ok = dev < 1e-8 and lim < 1e-6 and matroids_ok and closure_ok
    detail = (f"psi deviation {dev:.2e}, limit error {lim:.2e}, "
              f"M(Q_k) = M(A_k): {matroids_ok}, sym moment = closure: {closure_ok}")
    assert _record(acceptance_log, 11, "symmetric Toda consistency", ok, detail, dt, 60)


CLI_RUNS = [
    ["cell", "--v", "1,2,4,3", "--w-word", "2,3,2,1", "--params", "random:4"],
    ["flow", "--v", "1,3,5,2,4", "--w-word", "2,3,1,4,3,2", "--params", "random:7", "--kind", "both"],
    ["verify", "--w", "3,2,1", "--params", "random:1"],
    ["polytope", "--v", "1,2,4,3", "--w-word", "2,3,2,1", "--params", "random:2"],
]


def test_c12_determinism(acceptance_log, tmp_path):
    def run_once(tag):
        outs = []
        for k, args in enumerate(CLI_RUNS):
            extra = ["--trajectory", str(tmp_path / f"traj{tag}.csv")] if args[0] == "polytope" else []
            res = subprocess.run(
                [sys.executable, "-m", "todaflag.cli", *args, *extra],
                capture_output=True, check=False,
            )
            outs.append((res.returncode, res.stdout))
            if extra:
                outs.append((0, (tmp_path / f"traj{tag}.csv").read_bytes()))
        return outs

    def run():
        return run_once("a"), run_once("b")

    (first, second), dt = _timed(run)
    ok = first == second and all(rc == 0 and out for rc, out in first)
    assert _record(acceptance_log, 12, "determinism", ok,
                   f"{len(first)} outputs byte-identical: {first == second}", dt, 120)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
