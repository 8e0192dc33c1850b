"""
Cells of the totally nonnegative flag variety.

A point of the cell indexed by ``v <= w`` is a product ``g = g_1 ... g_m``
along a reduced word of ``w``: positions where the positive distinguished
subexpression for ``v`` skips the letter carry ``y_i(p)`` with a positive
parameter, the others carry the signed permutation matrix ``s_i``.  Matrices
built here are exact (Fraction object arrays).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .linalg import as_exact, flag_minor, _eye_like
from .symgroup import (
    Permutation,
    ReducedWord,
    Subexpression,
    NotBruhatComparable,
    act_prefix,
    bruhat_leq,
    pds,
    reduced_word_of,
    symmetric_group,
)

__all__ = [
    "Spectrum",
    "CellPoint",
    "default_spectrum",
    "generator_y",
    "generator_sdot",
    "build_g",
    "interval_by_minors",
    "matroid_of_projection",
    "is_matroid",
    "flag_minors_nonnegative",
    "random_params",
    "random_reduced_word",
    "random_cell",
    "PARAM_CHOICES",
]

PARAM_CHOICES = (Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(1), Fraction(2), Fraction(3))


@dataclass(frozen=True)
class Spectrum:
    """Strictly increasing eigenvalues summing to zero."""

    lambdas: tuple

    def __post_init__(self):
        lam = tuple(
            Fraction(x) if isinstance(x, (int, Fraction, str)) else float(x)
            for x in self.lambdas
        )
        if len(lam) < 2:
            raise ValueError("spectrum needs at least two eigenvalues")
        if any(b <= a for a, b in zip(lam, lam[1:])):
            raise ValueError(f"eigenvalues must be strictly increasing: {lam}")
        total = sum(lam)
        if abs(total) > 1e-12 * max(abs(float(x)) for x in lam):
            raise ValueError(f"eigenvalues must sum to zero, got {total}")
        object.__setattr__(self, "lambdas", lam)

    @property
    def n(self) -> int:
        return len(self.lambdas)

    @property
    def exact(self) -> bool:
        return all(isinstance(x, Fraction) for x in self.lambdas)

    def as_float(self, dtype=np.float64) -> np.ndarray:
        return np.array([float(x) for x in self.lambdas], dtype=dtype)

    def min_gap(self) -> float:
        return float(min(b - a for a, b in zip(self.lambdas, self.lambdas[1:])))

    def permuted(self, z: Sequence[int]) -> np.ndarray:
        """``(lambda_{z(1)}, ..., lambda_{z(n)})`` as floats."""
        lam = self.as_float()
        return np.array([lam[i - 1] for i in z])

    def to_json(self) -> list:
        return [str(x) if isinstance(x, Fraction) else x for x in self.lambdas]


def default_spectrum(n: int) -> Spectrum:
    """Evenly spaced integers summing to zero.

    ``(-(n-1)/2, ..., (n-1)/2)`` for odd ``n``; for even ``n`` the same
    points doubled, so ``(-3, -1, 1, 3)`` at ``n = 4``.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if n % 2:
        h = (n - 1) // 2
        return Spectrum(tuple(range(-h, h + 1)))
    return Spectrum(tuple(range(-(n - 1), n, 2)))


def generator_y(i: int, p, n: int) -> np.ndarray:
    """``y_i(p)``: identity with ``p`` at row ``i + 1``, column ``i`` (1-based)."""
    if not 1 <= i <= n - 1:
        raise ValueError(f"generator index {i} out of range for n={n}")
    M = _eye_like(n, np.empty(0, dtype=object))
    M[i, i - 1] = Fraction(p)
    return M


def generator_sdot(i: int, n: int) -> np.ndarray:
    """``s_i`` lifted to SL_n: the block ``[[0, -1], [1, 0]]`` at rows/cols ``i, i+1``."""
    if not 1 <= i <= n - 1:
        raise ValueError(f"generator index {i} out of range for n={n}")
    M = _eye_like(n, np.empty(0, dtype=object))
    M[i - 1, i - 1] = Fraction(0)
    M[i, i] = Fraction(0)
    M[i - 1, i] = Fraction(-1)
    M[i, i - 1] = Fraction(1)
    return M


@dataclass(frozen=True)
class CellPoint:
    """A point of the cell ``(v, w)``: parameters follow the skipped positions
    of the positive distinguished subexpression, left to right."""

    v: Permutation
    w_word: ReducedWord
    params: tuple
    subexpr: Subexpression = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = Permutation(self.v)
        object.__setattr__(self, "v", v)
        if not isinstance(self.w_word, ReducedWord):
            object.__setattr__(self, "w_word", ReducedWord.from_letters(self.w_word, v.n))
        if not bruhat_leq(v, self.w_word.target):
            raise NotBruhatComparable(f"{v} is not below {self.w_word.target}")
        params = tuple(Fraction(p) for p in self.params)
        sub = pds(v, self.w_word)
        if len(params) != len(sub.Jplus):
            raise ValueError(
                f"expected {len(sub.Jplus)} parameters (l(w) - l(v)), got {len(params)}"
            )
        if any(p <= 0 for p in params):
            raise ValueError("parameters must be positive")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "subexpr", sub)

    @property
    def n(self) -> int:
        return self.v.n

    @property
    def w(self) -> Permutation:
        return self.w_word.target

    def to_json(self) -> dict:
        return {
            "v": self.v.to_json(),
            "w_word": self.w_word.to_json(),
            "params": [str(p) for p in self.params],
        }

    @classmethod
    def from_json(cls, data: dict) -> "CellPoint":
        v = Permutation(data["v"])
        return cls(v, ReducedWord.from_letters(data["w_word"], v.n), tuple(data["params"]))


def build_g(c: CellPoint) -> np.ndarray:
    """Exact product of generators; ``det g = 1``."""
    n = c.n
    g = _eye_like(n, np.empty(0, dtype=object))
    params = iter(c.params)
    for pos, i in enumerate(c.w_word.letters, start=1):
        if pos in c.subexpr.Jplus:
            g = g @ generator_y(i, next(params), n)
        else:
            g = g @ generator_sdot(i, n)
    return g


def interval_by_minors(g, v: Permutation, w: Permutation, z: Permutation) -> bool:
    """True iff ``Delta^k_{z[k]}(g) > 0`` for every ``k``; equals ``v <= z <= w``
    for ``g`` in the cell ``(v, w)``."""
    A = as_exact(g)
    return all(flag_minor(A, act_prefix(z, k), k) > 0 for k in range(1, len(z) + 1))


def matroid_of_projection(g, k: int, check: bool = False) -> frozenset:
    """Nonvanishing Plucker coordinates of the first ``k`` columns, as sorted
    1-based tuples."""
    A = as_exact(g)
    n = A.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range 1..{n}")
    bases = frozenset(
        I for I in itertools.combinations(range(1, n + 1), k) if flag_minor(A, I, k) != 0
    )
    if check and not is_matroid(bases):
        raise AssertionError(f"level-{k} projection violates basis exchange")
    return bases


def is_matroid(bases: Iterable[Sequence[int]]) -> bool:
    """Basis-exchange axiom by brute force."""
    B = {frozenset(b) for b in bases}
    if not B:
        return False
    if len({len(b) for b in B}) != 1:
        return False
    for b1 in B:
        for b2 in B:
            for x in b1 - b2:
                if not any((b1 - {x}) | {y} in B for y in b2 - b1):
                    return False
    return True


def flag_minors_nonnegative(g) -> bool:
    A = as_exact(g)
    n = A.shape[0]
    return all(
        flag_minor(A, I, k) >= 0
        for k in range(1, n + 1)
        for I in itertools.combinations(range(1, n + 1), k)
    )


def random_params(rng: np.random.Generator, m: int) -> tuple:
    idx = rng.integers(0, len(PARAM_CHOICES), size=m)
    return tuple(PARAM_CHOICES[i] for i in idx)


def random_reduced_word(w: Permutation, rng: np.random.Generator) -> ReducedWord:
    """Strip uniformly chosen right descents until the identity is reached."""
    letters = []
    z = Permutation(w)
    while True:
        desc = [i for i in range(1, z.n) if z.has_right_descent(i)]
        if not desc:
            break
        i = desc[int(rng.integers(len(desc)))]
        letters.append(i)
        z = z.times_simple(i)
    return ReducedWord(tuple(reversed(letters)), Permutation(w))


def random_cell(
    n: int, rng: np.random.Generator, strict: bool = False, random_word: bool = False
) -> CellPoint:
    """A random Bruhat pair with random parameters; ``strict`` forces ``v < w``."""
    group = list(symmetric_group(n))
    while True:
        w = group[int(rng.integers(len(group)))]
        below = [v for v in group if bruhat_leq(v, w) and (not strict or v != w)]
        if below:
            break
    v = below[int(rng.integers(len(below)))]
    word = random_reduced_word(w, rng) if random_word else reduced_word_of(w)
    return CellPoint(v, word, random_params(rng, w.length() - v.length()))
