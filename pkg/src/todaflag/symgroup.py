"""
Type-A Weyl group combinatorics: permutations of ``{1, ..., n}`` in one-line
notation, strong Bruhat order, Bruhat intervals and covers, reduced words and
positive distinguished subexpressions.

Conventions
-----------
* ``z(i) = z.word[i - 1]``; permutations are 1-indexed throughout.
* The product ``x * y`` is composition of functions, ``(x * y)(i) = x(y(i))``.
  Right multiplication by the simple reflection ``s_i`` swaps the entries at
  positions ``i`` and ``i + 1`` of the one-line word.
* A reduced word is a tuple of letters ``(i_1, ..., i_m)`` standing for
  ``s_{i_1} s_{i_2} ... s_{i_m}``.

>>> w = Permutation.from_word([2, 3, 1, 4, 3, 2], 5)
>>> w
Permutation(3, 5, 1, 4, 2)
>>> w.length()
6
>>> act_prefix(w, 2)
(3, 5)
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

__all__ = [
    "Permutation",
    "ReducedWord",
    "Subexpression",
    "NotBruhatComparable",
    "identity",
    "longest",
    "simple_reflection",
    "transposition",
    "symmetric_group",
    "bruhat_leq",
    "interval",
    "covers",
    "reduced_word_of",
    "pds",
    "act_prefix",
]


class NotBruhatComparable(ValueError):
    """Raised when an operation needs ``v <= w`` in Bruhat order and it fails."""


class Permutation(tuple):
    """A permutation in one-line notation, 1-indexed.

    Subclasses ``tuple`` so permutations hash, compare and serialize like their
    one-line words; calling ``z(i)`` evaluates the permutation at ``i``.
    """

    def __new__(cls, word: Iterable[int]):
        word = tuple(int(a) for a in word)
        if sorted(word) != list(range(1, len(word) + 1)):
            raise ValueError(f"not a permutation of 1..{len(word)}: {word}")
        return super().__new__(cls, word)

    @classmethod
    def from_word(cls, letters: Iterable[int], n: int) -> "Permutation":
        """Product ``s_{i_1} ... s_{i_m}`` of simple reflections in ``S_n``."""
        z = list(range(1, n + 1))
        for i in letters:
            if not 1 <= i <= n - 1:
                raise ValueError(f"simple reflection s_{i} out of range for n={n}")
            z[i - 1], z[i] = z[i], z[i - 1]
        return cls(z)

    @property
    def n(self) -> int:
        return len(self)

    @property
    def word(self) -> tuple[int, ...]:
        return tuple(self)

    def __call__(self, i: int) -> int:
        if not 1 <= i <= len(self):
            raise IndexError(f"position {i} out of range 1..{len(self)}")
        return self[i - 1]

    def __mul__(self, other):
        if not isinstance(other, Permutation):
            return NotImplemented
        _check_same_size(self, other)
        return Permutation(self[other[i] - 1] for i in range(len(self)))

    def __repr__(self) -> str:
        return f"Permutation{tuple(self)!r}".replace(",)", ")")

    def inverse(self) -> "Permutation":
        inv = [0] * len(self)
        for i, a in enumerate(self):
            inv[a - 1] = i + 1
        return Permutation(inv)

    def length(self) -> int:
        """Number of inversions."""
        return sum(
            1 for i, j in itertools.combinations(range(len(self)), 2) if self[i] > self[j]
        )

    def times_simple(self, i: int) -> "Permutation":
        """``self * s_i`` (swap positions ``i`` and ``i + 1``)."""
        z = list(self)
        z[i - 1], z[i] = z[i], z[i - 1]
        return Permutation(z)

    def has_right_descent(self, i: int) -> bool:
        """True iff ``length(self * s_i) < length(self)``."""
        return self[i - 1] > self[i]

    def to_json(self) -> list[int]:
        return list(self)


def _check_same_size(x: Sequence[int], y: Sequence[int]) -> None:
    if len(x) != len(y):
        raise ValueError(f"permutations of different sizes: {len(x)} vs {len(y)}")


def identity(n: int) -> Permutation:
    return Permutation(range(1, n + 1))


def longest(n: int) -> Permutation:
    return Permutation(range(n, 0, -1))


def simple_reflection(i: int, n: int) -> Permutation:
    return Permutation.from_word([i], n)


def transposition(i: int, j: int, n: int) -> Permutation:
    z = list(range(1, n + 1))
    z[i - 1], z[j - 1] = z[j - 1], z[i - 1]
    return Permutation(z)


def symmetric_group(n: int) -> Iterator[Permutation]:
    """All of ``S_n`` in lexicographic order of one-line words."""
    for word in itertools.permutations(range(1, n + 1)):
        yield Permutation(word)


@dataclass(frozen=True)
class ReducedWord:
    """A reduced expression ``s_{i_1} ... s_{i_m}`` for ``target``."""

    letters: tuple[int, ...]
    target: Permutation

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(int(i) for i in self.letters))
        if not isinstance(self.target, Permutation):
            object.__setattr__(self, "target", Permutation(self.target))
        if Permutation.from_word(self.letters, self.target.n) != self.target:
            raise ValueError(f"word {self.letters} does not multiply to {self.target}")
        if len(self.letters) != self.target.length():
            raise ValueError(f"word {self.letters} is not reduced")

    @classmethod
    def from_letters(cls, letters: Iterable[int], n: int) -> "ReducedWord":
        letters = tuple(letters)
        return cls(letters, Permutation.from_word(letters, n))

    @property
    def n(self) -> int:
        return self.target.n

    def __len__(self) -> int:
        return len(self.letters)

    def to_json(self) -> list[int]:
        return list(self.letters)


@dataclass(frozen=True)
class Subexpression:
    """A subexpression of a reduced word together with its index partition.

    ``mask[l]`` is True when position ``l + 1`` keeps ``s_{i_l}`` and False
    when it is replaced by 1.  The index sets are 1-based positions.
    """

    word: ReducedWord
    mask: tuple[bool, ...]
    Jcirc: frozenset[int]
    Jplus: frozenset[int]
    Jbullet: frozenset[int]
    prefixes: tuple[Permutation, ...]

    @property
    def value(self) -> Permutation:
        return self.prefixes[-1]

    def is_positive_distinguished(self) -> bool:
        """PDS test: ``v_(j-1) < v_(j-1) s_{i_j}`` at every position."""
        return all(
            not self.prefixes[j].has_right_descent(i)
            for j, i in enumerate(self.word.letters)
        )

    def pretty(self) -> str:
        """Render as e.g. ``1 s3 1 s4 1 1 s2``."""
        return " ".join(
            f"s{i}" if keep else "1" for i, keep in zip(self.word.letters, self.mask)
        )


def subexpression(word: ReducedWord, mask: Sequence[bool]) -> Subexpression:
    """Build a :class:`Subexpression` and classify its positions."""
    if len(mask) != len(word):
        raise ValueError("mask length differs from word length")
    prefixes = [identity(word.n)]
    jcirc, jplus, jbullet = set(), set(), set()
    for pos, (i, keep) in enumerate(zip(word.letters, mask), start=1):
        prev = prefixes[-1]
        if not keep:
            prefixes.append(prev)
            jplus.add(pos)
            continue
        nxt = prev.times_simple(i)
        prefixes.append(nxt)
        (jbullet if prev.has_right_descent(i) else jcirc).add(pos)
    return Subexpression(
        word,
        tuple(bool(b) for b in mask),
        frozenset(jcirc),
        frozenset(jplus),
        frozenset(jbullet),
        tuple(prefixes),
    )


def bruhat_leq(x: Sequence[int], y: Sequence[int]) -> bool:
    """Strong Bruhat order by the tableau criterion.

    ``x <= y`` iff for every ``k`` the increasing rearrangement of
    ``x(1..k)`` is entrywise at most that of ``y(1..k)``.
    """
    _check_same_size(x, y)
    for k in range(1, len(x)):
        xs, ys = sorted(x[:k]), sorted(y[:k])
        if any(a > b for a, b in zip(xs, ys)):
            return False
    return True


def interval(v: Permutation, w: Permutation) -> list[Permutation]:
    """The Bruhat interval ``[v, w]``, sorted by length then one-line word."""
    if not bruhat_leq(v, w):
        raise NotBruhatComparable(f"{v} is not below {w} in Bruhat order")
    out = [z for z in symmetric_group(len(v)) if bruhat_leq(v, z) and bruhat_leq(z, w)]
    return sorted(out, key=lambda z: (z.length(), tuple(z)))


def covers(y: Permutation, z: Permutation) -> bool:
    """True iff ``z = y t`` for a transposition ``t`` and ``l(z) = l(y) + 1``."""
    _check_same_size(y, z)
    diff = [i for i in range(len(y)) if y[i] != z[i]]
    if len(diff) != 2:
        return False
    i, j = diff
    if y[i] != z[j] or y[j] != z[i]:
        return False
    return Permutation(z).length() == Permutation(y).length() + 1


def reduced_word_of(w: Permutation) -> ReducedWord:
    """A reduced word for ``w`` by bubble-sort factorization.

    Repeatedly strip a right descent ``s_i`` (the leftmost one); the letters
    collected in reverse give a reduced word.
    """
    letters = []
    z = Permutation(w)
    while True:
        i = next((i for i in range(1, z.n) if z.has_right_descent(i)), None)
        if i is None:
            break
        letters.append(i)
        z = z.times_simple(i)
    return ReducedWord(tuple(reversed(letters)), Permutation(w))


def pds(v: Permutation, w_word: ReducedWord) -> Subexpression:
    """The unique positive distinguished subexpression for ``v`` in ``w_word``.

    Built right to left: at position ``l`` (from ``m`` down to 1) keep
    ``s_{i_l}`` exactly when it shortens the running right quotient.
    """
    v = Permutation(v)
    _check_same_size(v, w_word.target)
    if not bruhat_leq(v, w_word.target):
        raise NotBruhatComparable(f"{v} is not below {w_word.target} in Bruhat order")
    mask = [False] * len(w_word)
    z = v
    for pos in range(len(w_word) - 1, -1, -1):
        i = w_word.letters[pos]
        if z.has_right_descent(i):
            mask[pos] = True
            z = z.times_simple(i)
    if z != identity(v.n):
        raise NotBruhatComparable(f"{v} has no subexpression in {w_word.letters}")
    sub = subexpression(w_word, mask)
    if sub.Jbullet or not sub.is_positive_distinguished() or sub.value != v:
        raise AssertionError(f"greedy PDS construction failed for {v} in {w_word}")
    return sub


def act_prefix(z: Sequence[int], k: int) -> tuple[int, ...]:
    """The sorted set ``z . [k] = {z(1), ..., z(k)}``."""
    if not 1 <= k <= len(z):
        raise ValueError(f"k={k} out of range 1..{len(z)}")
    return tuple(sorted(z[:k]))
