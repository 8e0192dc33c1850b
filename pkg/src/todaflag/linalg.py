"""
Dense matrix kernels over two scalar regimes.

*Exact* matrices are numpy ``object`` arrays of :class:`fractions.Fraction`;
*float* matrices are ``float64`` or ``longdouble`` arrays.  Every kernel here
accepts either regime and returns results in the same regime, except
:func:`qr_special` and :func:`cholesky_upper`, which need square roots and are
float only.

The LU factorization is Doolittle elimination without pivoting, since the
``U^- B^+`` structure is the point; a vanishing pivot is reported, never
repaired.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "SingularPrincipalMinor",
    "NotPositiveDefinite",
    "LUFactors",
    "QRFactors",
    "as_exact",
    "as_float",
    "is_exact",
    "lu_unipotent",
    "principal_minors",
    "det",
    "minor",
    "flag_minor",
    "qr_special",
    "cholesky_upper",
    "vandermonde",
    "companion",
    "elementary_symmetric",
    "inv_unit_lower",
    "inv_upper",
    "solve",
    "matrix_to_json",
    "matrix_from_json",
]

DEFAULT_MIN_PIVOT = 1e-300


class SingularPrincipalMinor(ArithmeticError):
    """The ``k``-th leading principal minor vanishes (1-based ``k``)."""

    def __init__(self, k: int, value=None):
        self.k = k
        self.value = value
        super().__init__(f"leading principal minor {k} is zero or below threshold")


class NotPositiveDefinite(ArithmeticError):
    pass


@dataclass(frozen=True)
class LUFactors:
    u_lower: np.ndarray
    b_upper: np.ndarray


@dataclass(frozen=True)
class QRFactors:
    q_orth: np.ndarray
    r_upper: np.ndarray


def is_exact(M: np.ndarray) -> bool:
    return np.asarray(M).dtype == object


def as_exact(M) -> np.ndarray:
    """Convert to an object array of Fractions (floats are converted exactly)."""
    A = np.asarray(M, dtype=object)
    out = np.empty(A.shape, dtype=object)
    for idx, x in np.ndenumerate(A):
        out[idx] = x if isinstance(x, Fraction) else Fraction(x)
    return out


def as_float(M, dtype=np.float64) -> np.ndarray:
    A = np.asarray(M)
    if A.dtype == object:
        return np.array([float(x) for x in A.ravel()], dtype=dtype).reshape(A.shape)
    return A.astype(dtype)


def _square(M) -> np.ndarray:
    A = np.asarray(M)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {A.shape}")
    return A


def _eye_like(n: int, like: np.ndarray) -> np.ndarray:
    if is_exact(like):
        I = np.full((n, n), Fraction(0), dtype=object)
        for i in range(n):
            I[i, i] = Fraction(1)
        return I
    return np.eye(n, dtype=like.dtype)


def _zero(like: np.ndarray):
    return Fraction(0) if is_exact(like) else like.dtype.type(0)


def lu_unipotent(M, min_pivot: float = DEFAULT_MIN_PIVOT) -> LUFactors:
    """Factor ``M = u b`` with ``u`` unit lower and ``b`` upper triangular.

    Only the first ``n - 1`` leading principal minors must be nonzero; the
    last pivot may vanish.  In the float regime a pivot counts as zero when
    ``|pivot| <= min_pivot * max|M|``, or when it is not finite.
    """
    A = _square(M)
    A = A.copy() if is_exact(A) else A.astype(np.result_type(A.dtype, np.float64))
    n = A.shape[0]
    u = _eye_like(n, A)
    exact = is_exact(A)
    scale = None if exact else float(np.max(np.abs(A))) or 1.0
    for j in range(n - 1):
        piv = A[j, j]
        if exact:
            if piv == 0:
                raise SingularPrincipalMinor(j + 1, piv)
        elif not np.isfinite(piv) or abs(piv) <= min_pivot * scale:
            raise SingularPrincipalMinor(j + 1, piv)
        for i in range(j + 1, n):
            f = A[i, j] / piv
            u[i, j] = f
            A[i, j:] = A[i, j:] - f * A[j, j:]
            A[i, j] = _zero(A)
    return LUFactors(u, A)


def det(M):
    """Determinant by elimination (first nonzero pivot exact, partial pivoting float)."""
    A = _square(M)
    exact = is_exact(A)
    A = A.copy() if exact else A.astype(np.result_type(A.dtype, np.float64))
    n = A.shape[0]
    d = Fraction(1) if exact else A.dtype.type(1)
    for j in range(n):
        col = A[j:, j]
        if exact:
            nz = [i for i in range(n - j) if col[i] != 0]
            if not nz:
                return Fraction(0)
            p = j + nz[0]
        else:
            p = j + int(np.argmax(np.abs(col)))
            if col[p - j] == 0:
                return A.dtype.type(0)
        if p != j:
            A[[j, p]] = A[[p, j]]
            d = -d
        d = d * A[j, j]
        for i in range(j + 1, n):
            f = A[i, j] / A[j, j]
            A[i, j:] = A[i, j:] - f * A[j, j:]
    return d


def minor(M, rows: Sequence[int], cols: Sequence[int]):
    """Determinant of the submatrix on 0-based ``rows`` and ``cols``."""
    rows, cols = list(rows), list(cols)
    if len(rows) != len(cols):
        raise ValueError("minor needs as many rows as columns")
    A = np.asarray(M)
    if not rows:
        return Fraction(1) if is_exact(A) else A.dtype.type(1)
    return det(A[np.ix_(rows, cols)])


def principal_minors(M) -> list:
    """Leading principal minors ``[M]_1, ..., [M]_n``."""
    A = _square(M)
    return [minor(A, range(k), range(k)) for k in range(1, A.shape[0] + 1)]


def flag_minor(g, I: Iterable[int], k: int | None = None):
    """``Delta^k_I(g)``: rows ``I`` (1-based), columns ``1..k``."""
    I = tuple(I)
    A = np.asarray(g)
    n = A.shape[0]
    k = len(I) if k is None else k
    if len(I) != k or len(set(I)) != k or any(not 1 <= i <= n for i in I):
        raise ValueError(f"bad index set {I} for k={k}, n={n}")
    return minor(A, [i - 1 for i in sorted(I)], range(k))


def _householder_qr(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = A.shape[0]
    R = A.copy()
    Q = np.eye(n, dtype=A.dtype)
    for j in range(n - 1):
        x = R[j:, j].copy()
        nx = np.sqrt(np.sum(x * x))
        if nx == 0:
            continue
        alpha = -nx if x[0] >= 0 else nx
        v = x
        v[0] -= alpha
        nv = np.sum(v * v)
        if nv == 0:
            continue
        R[j:, :] -= np.outer(v, (2 / nv) * (v @ R[j:, :]))
        Q[:, j:] -= np.outer(Q[:, j:] @ v, (2 / nv) * v)
    return Q, np.triu(R)


def qr_special(M) -> QRFactors:
    """``M = q r`` with ``q`` in SO(n) and ``diag(r) > 0``.

    Householder reflections, then columns of ``q`` (rows of ``r``) are negated
    so the diagonal of ``r`` is positive.  If the resulting ``q`` has
    determinant -1 (only possible when ``det M < 0``) the last column of ``q``
    and last row of ``r`` are negated, so ``r_nn`` carries the sign.
    """
    A = _square(M)
    A = as_float(A) if is_exact(A) else A.astype(np.result_type(A.dtype, np.float64))
    Q, R = _householder_qr(A)
    d = np.diag(R)
    scale = np.max(np.abs(A)) or 1.0
    if not np.all(np.isfinite(d)) or np.any(np.abs(d) <= np.finfo(A.dtype).tiny * scale):
        raise np.linalg.LinAlgError("qr_special: singular input")
    s = np.where(d < 0, -1, 1).astype(A.dtype)
    Q = Q * s
    R = (R.T * s).T
    if _det_sign(Q) < 0:
        Q[:, -1] = -Q[:, -1]
        R[-1, :] = -R[-1, :]
    return QRFactors(Q, R)


def _det_sign(Q: np.ndarray) -> float:
    return float(np.sign(np.linalg.det(Q.astype(np.float64))))


def cholesky_upper(S) -> np.ndarray:
    """Upper triangular ``beta`` with positive diagonal and ``beta beta^T = S``.

    Computed as ``J chol(J S J) J`` with ``J`` the order-reversing permutation.
    """
    A = _square(S)
    A = as_float(A) if is_exact(A) else A.astype(np.result_type(A.dtype, np.float64))
    if np.max(np.abs(A - A.T)) > 1e-10 * (np.max(np.abs(A)) or 1.0):
        raise NotPositiveDefinite("matrix is not symmetric")
    B = A[::-1, ::-1]
    n = A.shape[0]
    Lc = np.zeros_like(B)
    for j in range(n):
        d = B[j, j] - np.sum(Lc[j, :j] ** 2)
        if not d > 0:
            raise NotPositiveDefinite(f"non-positive pivot at step {j + 1}")
        Lc[j, j] = np.sqrt(d)
        for i in range(j + 1, n):
            Lc[i, j] = (B[i, j] - np.sum(Lc[i, :j] * Lc[j, :j])) / Lc[j, j]
    return Lc[::-1, ::-1].copy()


def _spectrum_array(lambdas) -> np.ndarray:
    lam = list(lambdas)
    if len(set(lam)) != len(lam):
        raise ValueError(f"repeated eigenvalue in {lam}")
    if all(isinstance(x, (int, Fraction)) for x in lam):
        return as_exact(lam)
    return np.asarray(lam)


def vandermonde(lambdas) -> np.ndarray:
    """``E[i, j] = lambda_j ** i`` (rows are powers 0..n-1)."""
    lam = _spectrum_array(lambdas)
    n = len(lam)
    if is_exact(lam):
        E = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                E[i, j] = lam[j] ** i
        return E
    return np.vander(lam, n, increasing=True).T.copy()


def elementary_symmetric(lambdas) -> list:
    """``[sigma_0, sigma_1, ..., sigma_n]`` with ``sigma_0 = 1``."""
    lam = list(lambdas)
    one = Fraction(1) if all(isinstance(x, (int, Fraction)) for x in lam) else 1.0
    e = [one] + [one * 0] * len(lam)
    for x in lam:
        for k in range(len(lam), 0, -1):
            e[k] = e[k] + e[k - 1] * x
    return e


def companion(lambdas, tol: float = 1e-12) -> np.ndarray:
    """Companion matrix ``C = E Lambda E^{-1}``: superdiagonal 1 and bottom row
    ``C[n-1, n-i] = (-1)^(i+1) sigma_i``."""
    lam = _spectrum_array(lambdas)
    n = len(lam)
    exact = is_exact(lam)
    s = sum(lam)
    if (s != 0) if exact else abs(s) > tol * max(1.0, float(np.max(np.abs(lam)))):
        raise ValueError(f"spectrum must sum to zero, got {s}")
    sig = elementary_symmetric(lam)
    C = np.full((n, n), Fraction(0), dtype=object) if exact else np.zeros((n, n), dtype=lam.dtype)
    for i in range(n - 1):
        C[i, i + 1] = 1
    for i in range(1, n + 1):
        C[n - 1, n - i] = (-1) ** (i + 1) * sig[i]
    if exact:
        C = as_exact(C)
    return C


def inv_unit_lower(u) -> np.ndarray:
    """Inverse of a unit lower triangular matrix by forward substitution."""
    A = _square(u)
    n = A.shape[0]
    X = _eye_like(n, A) if is_exact(A) else np.eye(n, dtype=A.dtype)
    for i in range(n):
        for j in range(i):
            X[i, :] = X[i, :] - A[i, j] * X[j, :]
    return X


def inv_upper(b) -> np.ndarray:
    """Inverse of an upper triangular matrix by back substitution."""
    A = _square(b)
    n = A.shape[0]
    X = _eye_like(n, A) if is_exact(A) else np.eye(n, dtype=A.dtype)
    for i in range(n - 1, -1, -1):
        for j in range(i + 1, n):
            X[i, :] = X[i, :] - A[i, j] * X[j, :]
        X[i, :] = X[i, :] / A[i, i]
    return X


def solve(A, B) -> np.ndarray:
    """Solve ``A X = B`` through the unpivoted LU (falls back to numpy in float64)."""
    A = _square(A)
    if not is_exact(A) and A.dtype == np.float64:
        return np.linalg.solve(A, B)
    f = lu_unipotent(A, min_pivot=0.0)
    return inv_upper(f.b_upper) @ (inv_unit_lower(f.u_lower) @ np.asarray(B))


def _fmt(x) -> str | float:
    if isinstance(x, Fraction):
        return str(x)
    return float(x)


def matrix_to_json(M) -> list:
    """Nested lists; exact entries as ``"p/q"`` strings."""
    return [[_fmt(x) for x in row] for row in np.asarray(M)]


def matrix_from_json(data) -> np.ndarray:
    rows = [list(r) for r in data]
    if any(isinstance(x, str) for r in rows for x in r):
        return as_exact([[Fraction(x) for x in r] for r in rows])
    return np.asarray(rows, dtype=float)
