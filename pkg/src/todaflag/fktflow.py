"""
The full Kostant-Toda hierarchy with initial data on a tnn cell.

For a cell point ``g`` and spectrum ``Lambda`` the initial Hessenberg matrix is
``L0 = u0^{-1} C u0`` where ``E g = u0 b0``.  The solution at multi-time ``t``
is ``L(t) = U(t)^{-1} C U(t)`` with ``U(t) = u0 u(t)`` the unit-lower factor of
``E D(t) g`` and ``D(t) = diag(exp(theta_i(t)))``,
``theta_i(t) = sum_m lambda_i^m t_m``.

Two evaluation routes are available:

* ``"plucker"`` (default): each column of ``U(t)`` is a ratio of Plucker
  coordinates of ``E D(t) g``, expanded by Binet-Cauchy over the exact flag
  minors of ``g``.  Exponentials are shifted by their maximum per level, so
  the route is stable for large ``|t|``.
* ``"lu"``: Doolittle factorization of ``u0^{-1} E D(t) g``.  Loses accuracy
  once the exponentials spread over many orders of magnitude and then raises
  :class:`~todaflag.linalg.SingularPrincipalMinor`.

>>> from todaflag.symgroup import Permutation, ReducedWord
>>> from todaflag.tnncell import CellPoint, build_g
>>> c = CellPoint(Permutation([1, 2, 3]), ReducedWord.from_letters([1, 2, 1], 3), (1, 1, 1))
>>> flow = KostantTodaFlow().fit(build_g(c))
>>> np.round(flow.transform([[40.0]]), 6)
array([[ 1.,  0., -1.]])
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import linalg as la
from .symgroup import Permutation
from .tnncell import Spectrum, default_spectrum
from .validation import (
    check_exact_square,
    check_spectrum,
    check_times,
    float_dtype,
    to_dtype,
)

__all__ = [
    "TauLevel",
    "TauData",
    "AsymptoticReport",
    "KostantTodaFlow",
    "build_tau_data",
    "initial_L0",
    "tau",
    "flow_L",
    "diag_via_tau",
    "asymptotic_check",
    "direction_to_fixed_point",
    "chevalley",
    "companion_embed",
    "fixed_point_test",
    "lax_vector_field",
    "strict_lower_norm",
    "default_horizon",
]


def _log_fraction(x: Fraction) -> float:
    return math.log(x.numerator) - math.log(x.denominator)


def _logsumexp_signed(a: np.ndarray, s: np.ndarray) -> tuple[float, int]:
    m = np.max(a)
    tot = np.sum(s * np.exp(a - m))
    if tot == 0:
        return -np.inf, 0
    return m + np.log(np.abs(tot)), int(np.sign(tot))


@dataclass(frozen=True)
class TauLevel:
    """Binet-Cauchy data for ``tau_k``.

    ``index_sets`` are the bases of the level-``k`` matroid; ``exponents[I, m]``
    is ``sum_{i in I} lambda_i^(m+1)`` so that ``theta_I(t) = exponents @ t``.
    ``coeffs[I] = d_k Delta_I(A_k) V_I`` with ``V_I`` the Vandermonde product.
    """

    k: int
    index_sets: tuple
    plucker: tuple
    coeffs: tuple
    log_weights: np.ndarray
    signs: np.ndarray
    exponents: np.ndarray
    d_k: object

    def theta(self, t: np.ndarray) -> np.ndarray:
        return self.exponents @ t


@dataclass(frozen=True)
class TauData:
    n: int
    spectrum: Spectrum
    levels: tuple

    def level(self, k: int) -> TauLevel:
        return self.levels[k - 1]

    def log_tau(self, t: np.ndarray, k: int) -> tuple[float, int]:
        if k == 0:
            return 0.0, 1
        lev = self.level(k)
        return _logsumexp_signed(lev.log_weights + lev.theta(t), lev.signs)

    def lex_extremes(self) -> tuple[Permutation, Permutation]:
        """Permutations whose prefix sets are the lex-min / lex-max bases."""
        mins = [min(lev.index_sets) for lev in self.levels[:-1]]
        maxs = [max(lev.index_sets) for lev in self.levels[:-1]]
        return _perm_from_chain(mins, self.n), _perm_from_chain(maxs, self.n)


def _perm_from_chain(chain: Sequence[tuple], n: int) -> Permutation:
    word, prev = [], set()
    for S in chain:
        new = set(S) - prev
        if len(new) != 1 or not prev <= set(S):
            raise ValueError(f"index sets {chain} are not a flag")
        word.append(new.pop())
        prev = set(S)
    word.append((set(range(1, n + 1)) - prev).pop())
    return Permutation(word)


def _spectrum_values(spec: Spectrum) -> list:
    return list(spec.lambdas)


def build_tau_data(g, spectrum: Spectrum) -> TauData:
    """Exact flag minors of ``g`` and the Vandermonde weights of each level."""
    G = check_exact_square(g)
    n = G.shape[0]
    lam = _spectrum_values(spectrum)
    exact = spectrum.exact
    levels = []
    for k in range(1, n + 1):
        sets, minors, vand = [], [], []
        for I in itertools.combinations(range(1, n + 1), k):
            d = la.flag_minor(G, I, k)
            if d != 0:
                sets.append(I)
                minors.append(d)
                vand.append(_vandermonde_product([lam[i - 1] for i in I]))
        if not sets:
            raise la.SingularPrincipalMinor(k)
        total = sum(d * V for d, V in zip(minors, vand))
        if total == 0:
            raise la.SingularPrincipalMinor(k, total)
        d_k = 1 / total if exact else 1.0 / float(total)
        coeffs = [d_k * d * V for d, V in zip(minors, vand)]
        signs = np.array([1 if c > 0 else -1 for c in coeffs], dtype=float)
        logw = np.array(
            [
                _log_fraction(abs(c)) if isinstance(c, Fraction) else math.log(abs(float(c)))
                for c in coeffs
            ]
        )
        expo = np.array(
            [[float(sum(lam[i - 1] ** m for i in I)) for m in range(1, n)] for I in sets]
        ).reshape(len(sets), n - 1)
        levels.append(
            TauLevel(k, tuple(sets), tuple(minors), tuple(coeffs), logw, signs, expo, d_k)
        )
    return TauData(n, spectrum, tuple(levels))


def _vandermonde_product(xs: Sequence) -> object:
    p = Fraction(1) if all(isinstance(x, Fraction) for x in xs) else 1.0
    for a, b in itertools.combinations(xs, 2):
        p = p * (b - a)
    return p


def _plucker_coefficients(tau: TauData, E: np.ndarray) -> list[np.ndarray]:
    """Per level ``k < n``: rows ``[k]`` then ``[k-1] + {i}`` for ``i > k``,
    columns the bases ``I``; entry ``det E[J, I] * Delta_I(A_k)``."""
    n = tau.n
    out = []
    for k in range(1, n):
        lev = tau.level(k)
        base = list(range(k - 1))
        rows = [list(range(k))] + [base + [i] for i in range(k, n)]
        C = np.empty((len(rows), len(lev.index_sets)), dtype=object)
        for r, J in enumerate(rows):
            for c, (I, d) in enumerate(zip(lev.index_sets, lev.plucker)):
                C[r, c] = la.minor(E, J, [i - 1 for i in I]) * d
        out.append(C)
    return out


def default_horizon(spectrum: Spectrum) -> float:
    """``40 / min-gap``: the time scale at which the flow is at its limit to ~1e-6."""
    return 40.0 / spectrum.min_gap()


def strict_lower_norm(L: np.ndarray) -> float:
    return float(np.max(np.abs(np.tril(np.asarray(L, dtype=float), -1)), initial=0.0))


def _hessenberg_clean(L: np.ndarray) -> np.ndarray:
    n = L.shape[0]
    out = L.copy()
    zero, one = (Fraction(0), Fraction(1)) if L.dtype == object else (0, 1)
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = one if j == i + 1 else zero
    return out


class KostantTodaFlow(TransformerMixin, BaseEstimator):
    """Full Kostant-Toda flow started at a tnn cell point.

    Parameters
    ----------
    spectrum : sequence or Spectrum, optional
        Eigenvalues; defaults to :func:`~todaflag.tnncell.default_spectrum`.
    precision : {"double", "extended"}
        Float type for time evaluation (``float64`` or ``longdouble``).
    method : {"plucker", "lu"}
        Evaluation route, see the module docstring.
    min_pivot : float
        Zero-pivot threshold for the ``"lu"`` route.

    ``fit`` takes the cell matrix ``g``; ``transform`` maps an array of
    multi-times (one row per sample, missing trailing times are zero) to the
    diagonal of ``L(t)``.
    """

    def __init__(self, spectrum=None, precision="double", method="plucker", min_pivot=1e-300):
        self.spectrum = spectrum
        self.precision = precision
        self.method = method
        self.min_pivot = min_pivot

    def fit(self, X, y=None):
        g = check_exact_square(X)
        n = g.shape[0]
        if self.method not in ("plucker", "lu"):
            raise ValueError(f"unknown method {self.method!r}")
        self.dtype_ = float_dtype(self.precision)
        spec = default_spectrum(n) if self.spectrum is None else check_spectrum(self.spectrum)
        if spec.n != n:
            raise ValueError(f"spectrum has {spec.n} eigenvalues, matrix is {n}x{n}")
        self.n_ = n
        self.g_ = g
        self.spectrum_ = spec
        lam = _spectrum_values(spec)
        self.E_ = la.vandermonde(lam)
        self.C_ = la.companion(lam)
        fac = la.lu_unipotent(self.E_ @ g)
        self.u0_, self.b0_ = fac.u_lower, fac.b_upper
        self.lax0_ = _hessenberg_clean(la.inv_unit_lower(self.u0_) @ self.C_ @ self.u0_)
        self.tau_data_ = build_tau_data(g, spec)
        for lev in self.tau_data_.levels:
            if not lev.d_k > 0:
                raise AssertionError(f"d_{lev.k} is not positive")
        self.plucker_coeffs_ = [to_dtype(C, self.dtype_) for C in _plucker_coefficients(self.tau_data_, self.E_)]
        self.lam_ = to_dtype(np.array(lam, dtype=object), self.dtype_)
        return self

    # single-time evaluation -------------------------------------------------
    def _t(self, t) -> np.ndarray:
        return check_times(t, self.n_)

    def theta(self, t) -> np.ndarray:
        """``theta_i(t) = sum_m lambda_i^m t_m``."""
        check_is_fitted(self)
        t = self._t(t).astype(self.dtype_)
        powers = np.vstack([self.lam_ ** m for m in range(1, self.n_)]).T
        return powers @ t

    def unipotent(self, t) -> np.ndarray:
        """``U(t) = u0 u(t)``, the unit-lower factor of ``E D(t) g``."""
        check_is_fitted(self)
        t = self._t(t)
        n = self.n_
        if not np.any(t):
            return to_dtype(self.u0_, self.dtype_)
        if self.method == "lu":
            return to_dtype(self.u0_, self.dtype_) @ self._u_lu(t)
        U = np.eye(n, dtype=self.dtype_)
        tt = t.astype(self.dtype_)
        for k in range(1, n):
            lev = self.tau_data_.level(k)
            x = lev.exponents.astype(self.dtype_) @ tt
            w = np.exp(x - np.max(x))
            P = self.plucker_coeffs_[k - 1] @ w
            U[k:, k - 1] = P[1:] / P[0]
        return U

    def _u_lu(self, t: np.ndarray) -> np.ndarray:
        th = self.theta(t)
        D = np.exp(th - np.max(th))
        M = la.inv_unit_lower(to_dtype(self.u0_, self.dtype_)) @ to_dtype(self.E_, self.dtype_)
        M = M @ (D[:, None] * to_dtype(self.g_, self.dtype_))
        return la.lu_unipotent(M, min_pivot=self.min_pivot).u_lower

    def lax(self, t) -> np.ndarray:
        """``L(t)``; superdiagonal exactly 1 and zeros above it."""
        check_is_fitted(self)
        t = self._t(t)
        if not np.any(t):
            return to_dtype(self.lax0_, self.dtype_)
        U = self.unipotent(t)
        C = to_dtype(self.C_, self.dtype_)
        return _hessenberg_clean(la.inv_unit_lower(U) @ C @ U)

    def log_tau(self, t) -> np.ndarray:
        """``(log tau_1(t), ..., log tau_n(t))``; raises if some tau_k <= 0."""
        check_is_fitted(self)
        t = self._t(t)
        out = np.empty(self.n_)
        for k in range(1, self.n_ + 1):
            val, sign = self.tau_data_.log_tau(t, k)
            if sign != 1:
                raise ArithmeticError(f"tau_{k} is not positive at t={t}")
            out[k - 1] = val
        return out

    def diag_via_tau(self, t) -> np.ndarray:
        """``a_kk = d/dt_1 (log tau_k - log tau_{k-1})`` by softmax weights."""
        check_is_fitted(self)
        t = self._t(t)
        means = [0.0]
        for k in range(1, self.n_ + 1):
            lev = self.tau_data_.level(k)
            a = lev.log_weights + lev.theta(t)
            w = lev.signs * np.exp(a - np.max(a))
            means.append(float(w @ lev.exponents[:, 0] / np.sum(w)))
        return np.diff(means)

    # batch API ----------------------------------------------------------------
    def _times(self, X) -> np.ndarray:
        from .validation import check_time_grid

        return check_time_grid(X, self.n_)

    def transform(self, X) -> np.ndarray:
        """Diagonals of ``L(t)``, shape ``(n_samples, n)``."""
        check_is_fitted(self)
        T = self._times(X)
        return np.array([np.diag(self.lax(t)).astype(float) for t in T])

    def trajectory(self, X) -> np.ndarray:
        check_is_fitted(self)
        return np.array([self.lax(t) for t in self._times(X)])

    def log_tau_grid(self, X) -> np.ndarray:
        check_is_fitted(self)
        return np.array([self.log_tau(t) for t in self._times(X)])

    def limits(self) -> tuple[Permutation, Permutation]:
        """``(v, w)`` read from the lex-min / lex-max bases of each level."""
        check_is_fitted(self)
        return self.tau_data_.lex_extremes()


def _fit(g, spectrum, **kw) -> KostantTodaFlow:
    return KostantTodaFlow(spectrum=spectrum, **kw).fit(g)


def initial_L0(g, spectrum) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(L0, u0, b0)`` with ``E g = u0 b0`` and ``L0 = u0^{-1} C u0``."""
    f = _fit(g, spectrum)
    return f.lax0_, f.u0_, f.b0_


def tau(g, spectrum, t, k: int) -> tuple[float, int]:
    """``(log tau_k(t), sign)``."""
    f = _fit(g, spectrum)
    if not 1 <= k <= f.n_:
        raise ValueError(f"k={k} out of range")
    val, sign = f.tau_data_.log_tau(f._t(t), k)
    if sign == 0:
        raise ArithmeticError("all tau weights cancel")
    return val, sign


def flow_L(g, spectrum, t, **kw) -> np.ndarray:
    return _fit(g, spectrum, **kw).lax(t)


def diag_via_tau(g, spectrum, t) -> np.ndarray:
    return _fit(g, spectrum).diag_via_tau(t)


@dataclass(frozen=True)
class AsymptoticReport:
    v: Permutation
    w: Permutation
    T: float
    diag_minus: np.ndarray
    diag_plus: np.ndarray
    max_subdiag: float
    max_diag_error: float
    passed: bool

    def to_json(self) -> dict:
        return {
            "v": self.v.to_json(),
            "w": self.w.to_json(),
            "T": self.T,
            "diag_minus": [float(x) for x in self.diag_minus],
            "diag_plus": [float(x) for x in self.diag_plus],
            "max_subdiag": self.max_subdiag,
            "max_diag_error": self.max_diag_error,
            "pass": self.passed,
        }


def asymptotic_check(g, spectrum, T: float | None = None, tol: float = 1e-6, **kw) -> AsymptoticReport:
    """Compare ``L(-T)`` and ``L(T)`` with the fixed points sorted by ``v`` and ``w``."""
    f = _fit(g, spectrum, **kw)
    if T is None:
        T = default_horizon(f.spectrum_)
    if not T > 0:
        raise ValueError("T must be positive")
    v, w = f.limits()
    Lm, Lp = f.lax([-T]), f.lax([T])
    dm, dp = np.diag(Lm).astype(float), np.diag(Lp).astype(float)
    err = max(
        np.max(np.abs(dm - f.spectrum_.permuted(v))),
        np.max(np.abs(dp - f.spectrum_.permuted(w))),
    )
    sub = max(strict_lower_norm(Lm), strict_lower_norm(Lp))
    return AsymptoticReport(v, w, float(T), dm, dp, sub, float(err), bool(err < tol and sub < tol))


def direction_to_fixed_point(z: Sequence[int], spectrum, r: Sequence | None = None) -> np.ndarray:
    """Multi-time ``c`` with ``theta_{z(1)}(c) > ... > theta_{z(n)}(c)``.

    Solves ``E^T (t0, c) = r`` with ``r_{z(j)} = n - j`` by default and drops ``t0``.
    """
    spec = check_spectrum(spectrum)
    z = Permutation(z)
    n = spec.n
    if z.n != n:
        raise ValueError("permutation and spectrum sizes differ")
    if r is None:
        r = [0] * n
        for j in range(1, n + 1):
            r[z(j) - 1] = n - j
    E = la.vandermonde(_spectrum_values(spec))
    if spec.exact:
        x = la.solve(E.T, la.as_exact(np.array(r, dtype=object)))
        return np.array([float(a) for a in x[1:]])
    return np.linalg.solve(np.asarray(E, dtype=float).T, np.asarray(r, dtype=float))[1:]


def chevalley(L) -> np.ndarray:
    """``H_k = tr(L^(k+1))`` for ``k = 1..n-1``."""
    A = np.asarray(L)
    n = A.shape[0]
    out, P = [], A.copy()
    for _ in range(1, n):
        P = P @ A
        out.append(np.trace(P))
    return np.array(out, dtype=A.dtype if A.dtype != object else object)


def companion_embed(L, spectrum, tol: float = 1e-8) -> np.ndarray:
    """Unit-lower ``u`` with ``u L = C u``: row ``r`` of ``u`` is ``e_1^T L^r``."""
    spec = check_spectrum(spectrum)
    A = np.asarray(L)
    n = A.shape[0]
    if spec.n != n:
        raise ValueError("spectrum and matrix sizes differ")
    u = np.zeros_like(A) if A.dtype != object else la.as_exact(np.zeros((n, n), dtype=int))
    u[0, 0] = 1
    for r in range(1, n):
        u[r] = u[r - 1] @ A
    C = la.companion(_spectrum_values(spec))
    if A.dtype != object:
        C = to_dtype(C, A.dtype)
    resid = u[n - 1] @ A - C[n - 1] @ u
    if A.dtype == object:
        bad = any(x != 0 for x in resid)
    else:
        bad = np.max(np.abs(resid)) > tol * max(1.0, float(np.max(np.abs(u))) * float(np.max(np.abs(A))) ** 2)
    if bad:
        raise ValueError("matrix is not isospectral to the given spectrum")
    return u


def fixed_point_test(L, tol: float = 1e-6) -> bool:
    return strict_lower_norm(L) < tol


def lax_vector_field(L, m: int = 1) -> np.ndarray:
    """``[(L^m)_{>=0}, L]``, the right-hand side of the ``t_m`` flow."""
    A = np.asarray(L)
    P = np.linalg.matrix_power(A, m) if A.dtype != object else _pow(A, m)
    B = np.triu(P)
    return B @ A - A @ B


def _pow(A, m):
    P = A
    for _ in range(m - 1):
        P = P @ A
    return P
