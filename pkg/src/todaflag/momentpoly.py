"""
Moment maps and the exact polytopes they sweep out.

Vertices are tuples of :class:`~fractions.Fraction`; hull membership and edge
tests are exact LPs (:mod:`todaflag._lp`).  Two conventions for the vertex of
a permutation ``z`` are kept apart:

* ``"appendix"``: the one-line word ``(z(1), ..., z(n))``;
* ``"moment"``: ``p_z`` with ``p_z[i] = n - z^{-1}(i)``, the limit of the
  moment map along the direction that orders the exponentials by ``z``.

The two are related by ``x -> n 1 - x`` together with ``z -> z^{-1}``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._lp import find_feasible
from .fktflow import build_tau_data, direction_to_fixed_point
from .symgroup import NotBruhatComparable, Permutation, bruhat_leq, interval
from .tnncell import default_spectrum, is_matroid
from .validation import check_exact_square, check_spectrum, check_time_grid, check_times

__all__ = [
    "Polytope",
    "MomentMap",
    "moment_point",
    "moment_vertex",
    "appendix_vertex",
    "matroid_polytope",
    "bruhat_interval_polytope",
    "minkowski_sum",
    "hull_vertices",
    "edges",
    "is_convex_combination",
    "contains",
    "rationalize",
    "default_sample_plan",
    "verify_moment_closure",
    "verify_sym_moment",
    "MomentClosureReport",
    "SymMomentReport",
]

Point = tuple


def _pt(p: Iterable) -> Point:
    return tuple(Fraction(x) for x in p)


def rationalize(x: Sequence[float], max_den: int = 10**12) -> Point:
    return tuple(Fraction(float(a)).limit_denominator(max_den) for a in x)


def is_convex_combination(p: Sequence, pts: Sequence[Sequence]) -> bool:
    """Exact test ``p in conv(pts)``."""
    if not pts:
        return False
    n = len(p)
    A = [[q[i] for q in pts] for i in range(n)] + [[1] * len(pts)]
    b = list(p) + [1]
    return find_feasible(A, b) is not None


def hull_vertices(points: Iterable[Sequence]) -> list[Point]:
    """Distinct points that are not convex combinations of the others.

    Points that all share one Euclidean norm lie on a sphere, so each is
    extreme and no LP is needed.
    """
    pts = list(dict.fromkeys(_pt(p) for p in points))
    if len(pts) <= 2:
        return pts
    norms = {sum(x * x for x in p) for p in pts}
    if len(norms) == 1:
        return pts
    return [p for i, p in enumerate(pts) if not is_convex_combination(p, pts[:i] + pts[i + 1:])]


def _is_edge(a: Point, b: Point, others: Sequence[Point]) -> bool:
    """``[a, b]`` is an edge iff the line through ``a, b`` misses ``conv(others)``.

    Solved as: no ``mu >= 0`` with ``sum mu = 1`` and free ``gamma`` such that
    ``sum mu_v (v - m) + gamma (a - b) = 0`` for the midpoint ``m``.
    """
    if not others:
        return True
    n = len(a)
    m = [(x + y) / 2 for x, y in zip(a, b)]
    A = [[v[i] - m[i] for v in others] + [a[i] - b[i]] for i in range(n)]
    A.append([1] * len(others) + [0])
    b_ = [0] * n + [1]
    return find_feasible(A, b_, free=[len(others)]) is None


def _edge_certificate(a: Point, b: Point, others: Sequence[Point]) -> list | None:
    """A functional ``f`` with ``f(b - a) = 0`` and ``f(v - a) <= -1`` on the others."""
    n = len(a)
    k = len(others)
    # variables: f (free, n), slacks (k)
    A = [[b[i] - a[i] for i in range(n)] + [0] * k]
    rhs = [0]
    for j, v in enumerate(others):
        A.append([v[i] - a[i] for i in range(n)] + [int(j == l) for l in range(k)])
        rhs.append(-1)
    sol = find_feasible(A, rhs, free=list(range(n)))
    return None if sol is None else sol[:n]


def edges(P: "Polytope", debug: bool = False) -> list[tuple[int, int]]:
    """Index pairs of vertices joined by an edge."""
    V = P.vertices
    out = []
    for i, j in itertools.combinations(range(len(V)), 2):
        others = [V[k] for k in range(len(V)) if k not in (i, j)]
        if _is_edge(V[i], V[j], others):
            if debug and _edge_certificate(V[i], V[j], others) is None:
                raise AssertionError(f"edge {V[i]}-{V[j]} has no supporting functional")
            out.append((i, j))
    return out


@dataclass(frozen=True)
class Polytope:
    """Convex hull of exact points, stored by its vertices."""

    vertices: tuple
    embedding: str = "none"
    labels: tuple | None = None
    non_vertices: tuple = field(default=(), compare=False)

    @property
    def dim(self) -> int:
        return len(self.vertices[0])

    @cached_property
    def edges(self) -> list[tuple[int, int]]:
        return edges(self)

    def vertex_set(self) -> frozenset:
        return frozenset(self.vertices)

    def same_as(self, other: "Polytope") -> bool:
        return self.vertex_set() == other.vertex_set()

    def contains(self, p: Sequence, shell: Fraction | float = 0) -> bool:
        return contains(self, p, shell)

    def to_json(self) -> dict:
        out = {
            "embedding": self.embedding,
            "vertices": [[str(x) for x in v] for v in self.vertices],
            "edges": [list(e) for e in self.edges],
        }
        if self.labels is not None:
            out["labels"] = [list(z) for z in self.labels]
        if self.non_vertices:
            out["non_vertex_labels"] = [list(z) for z in self.non_vertices]
        return out


def contains(P: Polytope, p: Sequence, shell=0) -> bool:
    """``p`` in ``P`` inflated by ``shell`` in the sup norm (exact LP)."""
    p = _pt(p)
    eps = Fraction(shell)
    V = P.vertices
    n, m = len(p), len(V)
    if eps == 0:
        return is_convex_combination(p, V)
    # variables: mu (m), d+ (n), d- (n), s+ (n), s- (n)
    width = m + 4 * n
    A, b = [], []
    for i in range(n):
        row = [v[i] for v in V] + [0] * (4 * n)
        row[m + i] = 1
        row[m + n + i] = -1
        A.append(row)
        b.append(p[i])
    A.append([1] * m + [0] * (4 * n))
    b.append(1)
    for i in range(n):
        for off in (0, n):
            row = [0] * width
            row[m + off + i] = 1
            row[m + 2 * n + off + i] = 1
            A.append(row)
            b.append(eps)
    return find_feasible(A, b) is not None


def appendix_vertex(z: Sequence[int]) -> Point:
    return _pt(z)


def moment_vertex(z: Sequence[int]) -> Point:
    """``p_z[i] = n - z^{-1}(i)``."""
    zi = Permutation(z).inverse()
    n = len(zi)
    return tuple(Fraction(n - zi[i]) for i in range(n))


def matroid_polytope(bases: Iterable[Sequence[int]], n: int | None = None) -> Polytope:
    """``conv{e_I : I in M}`` for a matroid on ``{1..n}``."""
    B = sorted({tuple(sorted(b)) for b in bases})
    if not is_matroid(B):
        raise ValueError("bases violate the exchange axiom")
    n = max(max(b, default=0) for b in B) if n is None else n
    pts = [tuple(Fraction(int(i in b)) for i in range(1, n + 1)) for b in B]
    return Polytope(tuple(hull_vertices(pts)), "matroid")


def bruhat_interval_polytope(v: Permutation, w: Permutation, embedding: str = "moment") -> Polytope:
    """Hull of the interval points; interval points that are not vertices are
    listed in ``non_vertices``."""
    if embedding not in ("moment", "appendix"):
        raise ValueError(f"unknown embedding {embedding!r}")
    if not bruhat_leq(v, w):
        raise NotBruhatComparable(f"{v} is not below {w}")
    zs = interval(Permutation(v), Permutation(w))
    emb = moment_vertex if embedding == "moment" else appendix_vertex
    pts = [emb(z) for z in zs]
    verts = hull_vertices(pts)
    vset = set(verts)
    labels = tuple(z for z, p in zip(zs, pts) if p in vset)
    non = tuple(z for z, p in zip(zs, pts) if p not in vset)
    return Polytope(tuple(emb(z) for z in labels), embedding, labels, non)


def minkowski_sum(ps: Sequence[Polytope]) -> Polytope:
    """Vertex-sum candidates reduced to the hull, one summand at a time."""
    if not ps:
        raise ValueError("empty Minkowski sum")
    dims = {P.dim for P in ps}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch: {sorted(dims)}")
    acc = list(ps[0].vertices)
    for P in ps[1:]:
        cand = {tuple(a + b for a, b in zip(x, y)) for x in acc for y in P.vertices}
        acc = hull_vertices(sorted(cand))
    return Polytope(tuple(acc), "minkowski")


class MomentMap(TransformerMixin, BaseEstimator):
    """``phi(t; g) = sum_k sum_I alpha_I^k(t) e_I`` for ``k = 1..n-1``.

    ``alpha^k`` is the softmax of ``2 theta_I(t) + 2 log |Delta_I(A_k)|``
    over the level-``k`` bases.
    """

    def __init__(self, spectrum=None):
        self.spectrum = spectrum

    def fit(self, X, y=None):
        g = check_exact_square(X)
        n = g.shape[0]
        spec = default_spectrum(n) if self.spectrum is None else check_spectrum(self.spectrum)
        self.n_ = n
        self.spectrum_ = spec
        self.tau_data_ = build_tau_data(g, spec)
        self.log_abs_ = [
            np.array([2 * _log_abs(d) for d in lev.plucker]) for lev in self.tau_data_.levels
        ]
        self.indicators_ = [
            np.array([[int(i in I) for i in range(1, n + 1)] for I in lev.index_sets], dtype=float)
            for lev in self.tau_data_.levels
        ]
        return self

    def weights(self, t, k: int) -> np.ndarray:
        check_is_fitted(self)
        t = check_times(t, self.n_)
        lev = self.tau_data_.level(k)
        a = self.log_abs_[k - 1] + 2 * lev.theta(t)
        w = np.exp(a - np.max(a))
        return w / np.sum(w)

    def point(self, t) -> np.ndarray:
        check_is_fitted(self)
        out = np.zeros(self.n_)
        for k in range(1, self.n_):
            out += self.weights(t, k) @ self.indicators_[k - 1]
        return out

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self)
        return np.array([self.point(t) for t in check_time_grid(X, self.n_)])

    def matroids(self) -> list[frozenset]:
        check_is_fitted(self)
        return [frozenset(lev.index_sets) for lev in self.tau_data_.levels[:-1]]

    def polytope(self) -> Polytope:
        """``sum_k Gamma_{M(A_k)}`` (exact)."""
        return minkowski_sum([matroid_polytope(M, self.n_) for M in self.matroids()])


def _log_abs(d: Fraction) -> float:
    from .fktflow import _log_fraction

    return _log_fraction(abs(d))


def moment_point(g, spectrum, t) -> np.ndarray:
    return MomentMap(spectrum=spectrum).fit(g).point(t)


def default_sample_plan(spectrum, v: Permutation, w: Permutation, n_line: int = 21) -> dict:
    """``t_1`` line over ``[-T, T]`` with ``T = 40/min-gap`` and one ray per
    interval element at ``s in {1, 2, 4, 8, 16} / min-gap``; limits along the
    rays are read at ``s = 40 / min-gap``."""
    spec = check_spectrum(spectrum)
    gap = spec.min_gap()
    T = 40.0 / gap
    return {
        "line": np.linspace(-T, T, n_line),
        "ray_scales": [s / gap for s in (1, 2, 4, 8, 16)],
        "limit_scale": T,
        "interval": interval(Permutation(v), Permutation(w)),
    }


@dataclass
class MomentClosureReport:
    v: Permutation
    w: Permutation
    polytope: Polytope
    n_samples: int
    containment_violations: int
    limit_errors: dict
    max_limit_error: float
    limit_hull_matches: bool
    cell_matches: bool
    coordinate_sum_error: float
    samples: np.ndarray = field(repr=False, default=None)
    passed: bool = False

    def to_json(self) -> dict:
        return {
            "v": self.v.to_json(),
            "w": self.w.to_json(),
            "polytope": self.polytope.to_json(),
            "n_samples": self.n_samples,
            "containment_violations": self.containment_violations,
            "limit_errors": {" ".join(map(str, z)): e for z, e in self.limit_errors.items()},
            "max_limit_error": self.max_limit_error,
            "limit_hull_matches": self.limit_hull_matches,
            "cell_matches": self.cell_matches,
            "coordinate_sum_error": self.coordinate_sum_error,
            "pass": self.passed,
        }


def _sample_times(plan: dict, spec, n: int) -> tuple[list[np.ndarray], dict]:
    times = [check_times([t], n) for t in plan["line"]]
    limits = {}
    for z in plan["interval"]:
        c = direction_to_fixed_point(z, spec)
        times.extend(s * c for s in plan["ray_scales"])
        limits[z] = plan["limit_scale"] * c
    return times, limits


def verify_moment_closure(
    g, spectrum, v: Permutation, w: Permutation, plan: dict | None = None,
    shell: float = 1e-8, limit_tol: float = 1e-6,
) -> MomentClosureReport:
    """Trajectory containment, fixed-point limits and closure of the moment image."""
    spec = check_spectrum(spectrum)
    v, w = Permutation(v), Permutation(w)
    mm = MomentMap(spectrum=spec).fit(g)
    n = mm.n_
    plan = default_sample_plan(spec, v, w) if plan is None else plan
    P = bruhat_interval_polytope(v, w, "moment")
    times, rays = _sample_times(plan, spec, n)
    times.extend(rays.values())
    pts = np.array([mm.point(t) for t in times])
    target_sum = n * (n - 1) / 2
    sum_err = float(np.max(np.abs(pts.sum(axis=1) - target_sum)))
    violations = sum(
        1 for p in pts if not contains(P, rationalize(p), Fraction(shell))
    )
    errs, limits = {}, []
    for z, t_lim in rays.items():
        p = mm.point(t_lim)
        target = np.array([float(x) for x in moment_vertex(z)])
        errs[tuple(z)] = float(np.max(np.abs(p - target)))
        limits.append(tuple(Fraction(round(x)) for x in p))
    max_err = max(errs.values(), default=0.0)
    hull_ok = max_err < limit_tol and set(hull_vertices(limits)) == P.vertex_set()
    lo, hi = mm.tau_data_.lex_extremes()
    cell_ok = (lo, hi) == (v, w)
    passed = violations == 0 and hull_ok and cell_ok and sum_err < 1e-9
    return MomentClosureReport(
        v, w, P, len(pts), violations, errs, max_err, hull_ok, cell_ok, sum_err, pts, passed
    )


@dataclass
class SymMomentReport:
    matroids_equal: bool
    max_minor_ratio_error: float
    max_weight_deviation: float
    max_point_deviation: float
    closure_matches: bool
    passed: bool

    def to_json(self) -> dict:
        return {
            "matroids_equal": self.matroids_equal,
            "max_minor_ratio_error": self.max_minor_ratio_error,
            "max_weight_deviation": self.max_weight_deviation,
            "max_point_deviation": self.max_point_deviation,
            "closure_matches": self.closure_matches,
            "pass": self.passed,
        }


def verify_sym_moment(
    g, spectrum, v: Permutation, w: Permutation, plan: dict | None = None,
    zero_tol: float = 1e-10, tol: float = 1e-8,
) -> SymMomentReport:
    """Moment weights from ``Delta_I(Q_k)^2`` against those from ``Delta_I(A_k)^2``.

    ``Q_k`` are the first ``k`` columns of ``q0`` (``g = q0 r0``).  The
    numerically nonzero minors must form the same matroid as the exact ones,
    and ``Delta_I(Q_k) r0_11 ... r0_kk = Delta_I(A_k)``.  The symmetric moment
    trajectory is then rebuilt from the ``Q`` minors alone and compared.
    """
    from .linalg import qr_special
    from .symtoda import plucker_Q
    from .validation import to_dtype

    spec = check_spectrum(spectrum)
    G = check_exact_square(g)
    n = G.shape[0]
    mm = MomentMap(spectrum=spec).fit(G)
    qr = qr_special(to_dtype(G, np.float64))
    rdiag = np.diag(qr.r_upper)
    same, ratio_err = True, 0.0
    q_levels = []
    for k in range(1, n):
        lev = mm.tau_data_.level(k)
        dq = plucker_Q(qr.q_orth, k)
        scale = float(np.max(np.abs(list(dq.values()))))
        MQ = {I for I, d in dq.items() if abs(d) > zero_tol * scale}
        same &= MQ == set(lev.index_sets)
        for I, d in zip(lev.index_sets, lev.plucker):
            ratio_err = max(ratio_err, abs(dq[I] * np.prod(rdiag[:k]) / float(d) - 1))
        sets = sorted(MQ)
        q_levels.append(
            (
                sets,
                np.array([2 * np.log(abs(dq[I])) for I in sets]),
                np.array([[int(i in I) for i in range(1, n + 1)] for I in sets], dtype=float),
                np.array(
                    [[sum(float(spec.lambdas[i - 1]) ** m for i in I) for m in range(1, n)] for I in sets]
                ),
            )
        )
    plan = default_sample_plan(spec, v, w) if plan is None else plan
    times, _ = _sample_times(plan, spec, n)
    wdev = pdev = 0.0
    sym_pts = []
    for t in times:
        p = np.zeros(n)
        for k, (sets, la2, ind, expo) in enumerate(q_levels, start=1):
            a = la2 + 2 * expo.reshape(len(sets), n - 1) @ t
            wq = np.exp(a - np.max(a))
            wq /= wq.sum()
            if same:
                wa = mm.weights(t, k)
                wdev = max(wdev, float(np.max(np.abs(wq - wa))))
            p += wq @ ind
        sym_pts.append(p)
        pdev = max(pdev, float(np.max(np.abs(p - mm.point(t)))))
    P = bruhat_interval_polytope(v, w, "moment")
    closure = same and minkowski_sum(
        [matroid_polytope(sets, n) for sets, *_ in q_levels]
    ).same_as(P)
    passed = same and ratio_err < tol and wdev < tol and pdev < tol and closure
    return SymMomentReport(same, float(ratio_err), wdev, pdev, closure, passed)
