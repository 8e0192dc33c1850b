"""
The full symmetric Toda hierarchy.

With ``g = q0 r0`` (QR, positive ``r0`` diagonal) the initial matrix is
``S0 = q0^T Lambda q0`` and the solution is ``S(t) = q(t)^T S0 q(t)`` where
``q0^T D(t) q0 = q(t) r(t)``.  Equivalently ``S(t) = Q^T Lambda Q`` with ``Q``
the Gram-Schmidt factor of ``D(t) g``.

Two routes:

* ``"minors"`` (default): the columns of ``Q`` are written through the exact
  flag minors of ``g``.  Column ``k`` at row ``i`` is
  ``sum_J (-1)^#{j in J, j > i} P_{k-1}(J) P_k(J + i) / sqrt(G_{k-1} G_k)``
  with ``P_k(I) = Delta_I(A_k) exp(theta_I(t))`` and ``G_k = sum_I P_k(I)^2``.
  Every factor is invariant under rescaling a level, so each level is shifted
  by its largest exponent and the route is stable for large ``|t|``.
* ``"qr"``: the literal factorization of ``q0^T D(t) q0``.  Accurate for
  moderate ``|t|`` only, since rounding in ``q0`` breaks the structural zero
  minors that large exponentials then amplify.

The map from the Kostant-Toda side is :func:`psi_map`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import linalg as la
from .fktflow import KostantTodaFlow, build_tau_data, companion_embed
from .tnncell import default_spectrum
from .validation import (
    check_exact_square,
    check_spectrum,
    check_time_grid,
    check_times,
    float_dtype,
    to_dtype,
)

__all__ = [
    "SymmetricTodaFlow",
    "psi_map",
    "initial_sym",
    "initial_sym_general",
    "flow_sym",
    "tau_sym",
    "consistency_psi",
    "symmetric_vector_field",
    "plucker_Q",
    "ConsistencyReport",
]


def psi_map(L, u, spectrum) -> np.ndarray:
    """``beta^{-1} L beta`` with ``beta beta^T = gamma gamma^T``, ``gamma = u^{-1} E``."""
    spec = check_spectrum(spectrum)
    Lf = to_dtype(L, np.float64) if np.asarray(L).dtype == object else np.asarray(L)
    dtype = Lf.dtype
    uf = to_dtype(u, dtype)
    E = to_dtype(la.vandermonde(list(spec.lambdas)), dtype)
    gamma = la.inv_unit_lower(uf) @ E
    beta = la.cholesky_upper(gamma @ gamma.T)
    return la.inv_upper(beta) @ Lf @ beta


def initial_sym(g, spectrum) -> tuple[np.ndarray, np.ndarray]:
    """``(S0, q0)`` with ``g = q0 r0`` and ``S0 = q0^T Lambda q0``."""
    spec = check_spectrum(spectrum)
    qr = la.qr_special(to_dtype(check_exact_square(g), np.float64))
    lam = spec.as_float()
    return qr.q_orth.T @ (lam[:, None] * qr.q_orth), qr.q_orth


def initial_sym_general(g, spectrum) -> tuple[np.ndarray, np.ndarray]:
    """Same as :func:`initial_sym` for any nonsingular float ``g``.

    No tnn assumption is made; the symmetric flow is complete for such data
    and is run with :func:`flow_sym`.
    """
    spec = check_spectrum(spectrum)
    A = np.asarray(g, dtype=float)
    if A.shape != (spec.n, spec.n):
        raise ValueError("matrix and spectrum sizes differ")
    qr = la.qr_special(A)
    lam = spec.as_float()
    return qr.q_orth.T @ (lam[:, None] * qr.q_orth), qr.q_orth


def _theta(lam: np.ndarray, t: np.ndarray) -> np.ndarray:
    n = lam.size
    return np.vstack([lam ** m for m in range(1, n)]).T @ t


def flow_sym(S0, q0, spectrum, t) -> np.ndarray:
    """QR route: ``q0^T D(t) q0 = q r`` and ``S(t) = q^T S0 q``."""
    spec = check_spectrum(spectrum)
    n = spec.n
    tt = check_times(t, n)
    S0 = np.asarray(S0, dtype=float)
    if not np.any(tt):
        return S0.copy()
    th = _theta(spec.as_float(), tt)
    D = np.exp(th - np.max(th))
    q0 = np.asarray(q0, dtype=float)
    q = la.qr_special(q0.T @ (D[:, None] * q0)).q_orth
    return q.T @ S0 @ q


def tau_sym(S0, q0, spectrum, t1: float, k: int, g=None) -> float:
    """``log tau^sym_k(t1) = log [exp(2 t1 S0)]_k``.

    Expanded by Binet-Cauchy as ``sum_I Delta_I(Q_k)^2 exp(2 theta_I)``.  With
    ``g`` given, the exact flag minors of ``g`` replace those of ``q0`` (they
    differ by a positive factor per level).
    """
    spec = check_spectrum(spectrum)
    n = spec.n
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range")
    lam = spec.as_float()
    rows, minors = [], []
    if g is not None:
        lev = build_tau_data(g, spec).level(k)
        rows = [tuple(i - 1 for i in I) for I in lev.index_sets]
        minors = [float(d) for d in lev.plucker]
    else:
        Q = np.asarray(q0, dtype=float)
        import itertools

        for I in itertools.combinations(range(n), k):
            d = np.linalg.det(Q[np.ix_(I, range(k))])
            rows.append(I)
            minors.append(d)
    a = np.array([2 * np.log(abs(d)) if d != 0 else -np.inf for d in minors])
    s = np.array([sum(lam[i] for i in I) for I in rows])
    x = a + 2 * t1 * s
    x0 = a
    return float(_lse(x) - _lse(x0))


def _lse(a: np.ndarray) -> float:
    m = np.max(a)
    return m + np.log(np.sum(np.exp(a - m)))


def plucker_Q(q0, k: int) -> dict:
    """Numerical flag minors ``Delta_I(Q_k)`` of an orthogonal matrix."""
    import itertools

    Q = np.asarray(q0, dtype=float)
    n = Q.shape[0]
    return {
        tuple(i + 1 for i in I): float(np.linalg.det(Q[np.ix_(I, range(k))]))
        for I in itertools.combinations(range(n), k)
    }


def symmetric_vector_field(S, m: int = 1) -> np.ndarray:
    """``[pi_so(S^m), S]`` with ``pi_so(X) = X_{>0} - X_{<0}``."""
    S = np.asarray(S)
    P = np.linalg.matrix_power(S, m)
    B = np.triu(P, 1) - np.tril(P, -1)
    return B @ S - S @ B


@dataclass(frozen=True)
class _Level:
    sets: tuple            # 0-based index tuples
    log_abs: np.ndarray    # log |Delta_I(A_k)|
    signs: np.ndarray
    lamsum: np.ndarray     # exponents: sum_{i in I} lambda_i^m, shape (nI, n-1)
    index: dict            # set -> position


class SymmetricTodaFlow(TransformerMixin, BaseEstimator):
    """Full symmetric Toda flow started at ``q0`` from ``g = q0 r0``.

    Same interface as :class:`~todaflag.fktflow.KostantTodaFlow`: ``fit``
    takes the cell matrix, ``transform`` maps multi-times to diagonals.
    """

    def __init__(self, spectrum=None, precision="double", method="minors"):
        self.spectrum = spectrum
        self.precision = precision
        self.method = method

    def fit(self, X, y=None):
        g = check_exact_square(X)
        n = g.shape[0]
        if self.method not in ("minors", "qr"):
            raise ValueError(f"unknown method {self.method!r}")
        spec = default_spectrum(n) if self.spectrum is None else check_spectrum(self.spectrum)
        if spec.n != n:
            raise ValueError(f"spectrum has {spec.n} eigenvalues, matrix is {n}x{n}")
        self.dtype_ = float_dtype(self.precision)
        self.n_ = n
        self.g_ = g
        self.spectrum_ = spec
        qr = la.qr_special(to_dtype(g, np.float64))
        self.q0_, self.r0_ = qr.q_orth, qr.r_upper
        self.det_sign_ = 1 if la.det(g) > 0 else -1
        lam = spec.as_float()
        self.lam_ = to_dtype(np.array(spec.lambdas, dtype=object), self.dtype_)
        self.lax0_ = self.q0_.T @ (lam[:, None] * self.q0_)
        tau = build_tau_data(g, spec)
        self.levels_ = []
        for lev in tau.levels:
            sets = tuple(tuple(i - 1 for i in I) for I in lev.index_sets)
            self.levels_.append(
                _Level(
                    sets,
                    np.array([_log_abs(d) for d in lev.plucker]),
                    np.array([1.0 if d > 0 else -1.0 for d in lev.plucker]),
                    lev.exponents,
                    {I: j for j, I in enumerate(sets)},
                )
            )
        self.log_gram0_ = np.array([_lse(2 * lev.log_abs) for lev in self.levels_])
        return self

    def _t(self, t) -> np.ndarray:
        return check_times(t, self.n_)

    def _scaled_plucker(self, t: np.ndarray) -> list[np.ndarray]:
        out = []
        tt = t.astype(self.dtype_)
        for lev in self.levels_:
            a = lev.log_abs.astype(self.dtype_) + lev.lamsum.astype(self.dtype_) @ tt
            out.append(lev.signs.astype(self.dtype_) * np.exp(a - np.max(a)))
        return out

    def orthogonal(self, t) -> np.ndarray:
        """``Q(t) = q0 q(t)``, the orthogonal factor of ``D(t) g``."""
        check_is_fitted(self)
        t = self._t(t)
        n = self.n_
        if self.method == "qr":
            th = _theta(self.lam_, t.astype(self.dtype_))
            D = np.exp(th - np.max(th))
            q0 = self.q0_.astype(self.dtype_)
            return q0 @ la.qr_special(q0.T @ (D[:, None] * q0)).q_orth
        P = self._scaled_plucker(t)
        Q = np.zeros((n, n), dtype=self.dtype_)
        prev_sets, prev_P, prev_G = ((),), np.ones(1, dtype=self.dtype_), self.dtype_(1)
        for k in range(1, n + 1):
            lev = self.levels_[k - 1]
            Pk = P[k - 1]
            Gk = np.sum(Pk * Pk)
            col = np.zeros(n, dtype=self.dtype_)
            for J, pj in zip(prev_sets, prev_P):
                for i in range(n):
                    if i in J:
                        continue
                    K = tuple(sorted(J + (i,)))
                    pos = lev.index.get(K)
                    if pos is None:
                        continue
                    sign = -1 if sum(1 for j in J if j > i) % 2 else 1
                    col[i] += sign * pj * Pk[pos]
            Q[:, k - 1] = col / np.sqrt(prev_G * Gk)
            prev_sets, prev_P, prev_G = lev.sets, Pk, Gk
        if self.det_sign_ < 0:
            Q[:, -1] = -Q[:, -1]
        return Q

    def lax(self, t) -> np.ndarray:
        check_is_fitted(self)
        t = self._t(t)
        if not np.any(t):
            return self.lax0_.astype(self.dtype_)
        Q = self.orthogonal(t)
        return Q.T @ (self.lam_[:, None] * Q)

    def log_tau(self, t) -> np.ndarray:
        """``log tau^sym_k(t)`` for ``k = 1..n``, ``tau^sym_k = [exp(2 Theta_{S0}(t))]_k``."""
        check_is_fitted(self)
        t = self._t(t)
        out = np.empty(self.n_)
        for k, lev in enumerate(self.levels_):
            out[k] = _lse(2 * lev.log_abs + 2 * (lev.lamsum @ t)) - self.log_gram0_[k]
        return out

    def diag_via_tau(self, t) -> np.ndarray:
        """``alpha_kk = 1/2 d/dt_1 log(tau^sym_k / tau^sym_{k-1})``."""
        check_is_fitted(self)
        t = self._t(t)
        means = [0.0]
        for lev in self.levels_:
            a = 2 * lev.log_abs + 2 * (lev.lamsum @ t)
            w = np.exp(a - np.max(a))
            means.append(float(w @ lev.lamsum[:, 0] / np.sum(w)))
        return np.diff(means)

    def moment_weights(self, t, k: int) -> dict:
        """Normalized ``Delta_I(A_k)^2 exp(2 theta_I)`` over the level-``k`` bases."""
        check_is_fitted(self)
        t = self._t(t)
        lev = self.levels_[k - 1]
        a = 2 * lev.log_abs + 2 * (lev.lamsum @ t)
        w = np.exp(a - np.max(a))
        w /= np.sum(w)
        return {tuple(i + 1 for i in I): float(x) for I, x in zip(lev.sets, w)}

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self)
        return np.array([np.diag(self.lax(t)).astype(float) for t in check_time_grid(X, self.n_)])

    def trajectory(self, X) -> np.ndarray:
        check_is_fitted(self)
        return np.array([self.lax(t) for t in check_time_grid(X, self.n_)])


def _log_abs(d) -> float:
    from .fktflow import _log_fraction

    return _log_fraction(abs(d))


@dataclass(frozen=True)
class ConsistencyReport:
    times: np.ndarray
    deviations: np.ndarray
    max_deviation: float
    max_asymmetry: float

    def to_json(self) -> dict:
        return {
            "times": self.times.tolist(),
            "deviations": [float(x) for x in self.deviations],
            "max_deviation": self.max_deviation,
            "max_asymmetry": self.max_asymmetry,
        }


def consistency_psi(g, spectrum, grid) -> ConsistencyReport:
    """Compare ``psi(L(t))`` with the symmetric flow over a grid of times."""
    spec = check_spectrum(spectrum)
    fk = KostantTodaFlow(spectrum=spec).fit(g)
    fs = SymmetricTodaFlow(spectrum=spec).fit(g)
    T = check_time_grid(grid, fk.n_)
    dev, asym = [], 0.0
    for t in T:
        L = fk.lax(t)
        S = psi_map(L, companion_embed(L, spec), spec)
        asym = max(asym, float(np.max(np.abs(S - S.T))))
        dev.append(float(np.max(np.abs(S - fs.lax(t)))))
    dev = np.array(dev)
    return ConsistencyReport(T, dev, float(np.max(dev)), asym)
