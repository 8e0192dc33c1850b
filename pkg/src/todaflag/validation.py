"""Input validation shared by the estimators and the CLI."""

from __future__ import annotations

import os
from fractions import Fraction

import numpy as np
from sklearn.utils import check_array

from .linalg import as_exact
from .tnncell import Spectrum

PRECISION_ENV = "TODA_FLAG_PRECISION"

_DTYPES = {"double": np.float64, "extended": np.longdouble}


def float_dtype(precision: str | None = None):
    """``float64`` or ``longdouble``; ``None`` reads ``TODA_FLAG_PRECISION``."""
    if precision is None:
        precision = os.environ.get(PRECISION_ENV, "double")
    try:
        return _DTYPES[precision]
    except KeyError:
        raise ValueError(f"precision must be one of {sorted(_DTYPES)}, got {precision!r}") from None


def to_dtype(M, dtype) -> np.ndarray:
    """Cast to a float type; Fractions go through numerator/denominator so
    ``longdouble`` keeps its extra bits."""
    A = np.asarray(M)
    dtype = np.dtype(dtype).type
    if A.dtype != object:
        return A.astype(dtype)
    out = np.empty(A.shape, dtype=dtype)
    for idx, x in np.ndenumerate(A):
        if isinstance(x, Fraction):
            out[idx] = dtype(x.numerator) / dtype(x.denominator)
        else:
            out[idx] = dtype(x)
    return out


def check_exact_square(g) -> np.ndarray:
    """A non-empty square matrix as an exact Fraction array."""
    A = np.asarray(g)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 2:
        raise ValueError(f"expected a square matrix of size >= 2, got shape {A.shape}")
    if A.dtype != object and not np.all(np.isfinite(A.astype(float))):
        raise ValueError("matrix has non-finite entries")
    return as_exact(A)


def check_spectrum(spectrum) -> Spectrum:
    if isinstance(spectrum, Spectrum):
        return spectrum
    vals = []
    for x in spectrum:
        if isinstance(x, (int, np.integer)):
            vals.append(int(x))
        elif isinstance(x, (Fraction, str)):
            vals.append(Fraction(x))
        else:
            xf = float(x)
            vals.append(int(xf) if xf.is_integer() else xf)
    return Spectrum(tuple(vals))


def check_times(t, n: int) -> np.ndarray:
    """One multi-time ``(t_1, ..., t_{n-1})``; scalars and short vectors are
    padded with zeros."""
    a = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
    if a.size > n - 1:
        raise ValueError(f"at most {n - 1} times for n={n}, got {a.size}")
    if not np.all(np.isfinite(a)):
        raise ValueError("times must be finite")
    out = np.zeros(n - 1)
    out[: a.size] = a
    return out


def check_time_grid(X, n: int) -> np.ndarray:
    """``(n_samples, n - 1)`` array of multi-times; a 1-D input is a t_1 grid."""
    A = np.asarray(X, dtype=float)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    A = check_array(A, ensure_2d=True, dtype=np.float64)
    if A.shape[1] > n - 1:
        raise ValueError(f"at most {n - 1} time columns for n={n}, got {A.shape[1]}")
    out = np.zeros((A.shape[0], n - 1))
    out[:, : A.shape[1]] = A
    return out
