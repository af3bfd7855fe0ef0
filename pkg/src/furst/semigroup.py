"""Exact enumeration of products in a matrix semigroup.

Products of length n are built breadth first, right-multiplying the
previous level by each generator and merging equal matrices, so only the
distinct products of each level are stored. A word ``(i1, ..., in)`` stands
for the product ``g[i1] @ ... @ g[in]``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetExceeded, DeterminantError, EmptyReport
from .geometry import Mat2

DEFAULT_BUDGET = 20_000_000


@dataclass(frozen=True)
class Mat2Q:
    """2x2 matrix with exact rational entries and determinant 1."""

    a: Fraction
    b: Fraction
    c: Fraction
    d: Fraction

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        det = self.a * self.d - self.b * self.c
        if det != 1:
            raise DeterminantError(float(det), 0.0)

    @classmethod
    def parse(cls, rows) -> "Mat2Q":
        """Build from nested rows whose entries are ints or strings like ``"3/2"``."""
        (a, b), (c, d) = rows
        return cls(*(Fraction(str(e)) for e in (a, b, c, d)))

    @classmethod
    def identity(cls) -> "Mat2Q":
        return cls(1, 0, 0, 1)

    @classmethod
    def diag(cls, x) -> "Mat2Q":
        x = Fraction(x)
        return cls(x, 0, 0, 1 / x)

    def __matmul__(self, o: "Mat2Q") -> "Mat2Q":
        m = object.__new__(Mat2Q)
        object.__setattr__(m, "a", self.a * o.a + self.b * o.c)
        object.__setattr__(m, "b", self.a * o.b + self.b * o.d)
        object.__setattr__(m, "c", self.c * o.a + self.d * o.c)
        object.__setattr__(m, "d", self.c * o.b + self.d * o.d)
        return m

    def entries(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return self.a, self.b, self.c, self.d

    def transpose(self) -> "Mat2Q":
        return Mat2Q(self.a, self.c, self.b, self.d)

    def to_mat2(self) -> Mat2:
        return Mat2(float(self.a), float(self.b), float(self.c), float(self.d))

    def denominator(self) -> int:
        return math.lcm(*(e.denominator for e in self.entries()))

    def __str__(self):
        return "[[{}, {}], [{}, {}]]".format(*self.entries())


def s_lambda(lam) -> list[Mat2Q]:
    """The pair {[[1, 0], [lam, 1]], [[1, lam], [0, 1]]}."""
    lam = Fraction(lam)
    return [Mat2Q(1, 0, lam, 1), Mat2Q(1, lam, 0, 1)]


def transversality_pair(lam) -> list[Mat2Q]:
    """The pair {[[1, 0], [1, 1]], [[1, lam], [1, 1 + lam]]}."""
    lam = Fraction(lam)
    return [Mat2Q(1, 0, 1, 1), Mat2Q(1, lam, 1, 1 + lam)]


@dataclass
class Level:
    """Distinct length-n products with their mass and one witness word."""

    n: int
    mass: dict
    words: dict
    collision: tuple | None = None


def _check_budget(frontier: int, ngens: int, budget: int, n: int) -> None:
    if frontier * ngens > budget:
        raise BudgetExceeded(f"level {n} needs {frontier * ngens} products, budget is {budget}")


def iter_levels(gens: Sequence[Mat2Q], maxlen: int, weights=None, budget: int = DEFAULT_BUDGET) -> Iterator[Level]:
    """Yield levels 0..maxlen. Masses are counts, or exact probabilities when ``weights`` is given.

    The budget bounds the number of products formed per level after
    deduplication. ``collision`` on a level records the first pair of
    distinct words found with equal product.
    """
    gens = list(gens)
    ws = [1] * len(gens) if weights is None else [Fraction(w) for w in weights]
    one = 1 if weights is None else Fraction(1)
    level = Level(0, {Mat2Q.identity(): one}, {Mat2Q.identity(): ()})
    yield level
    for n in range(1, maxlen + 1):
        _check_budget(len(level.mass), len(gens), budget, n)
        mass: dict = {}
        words: dict = {}
        collision = None
        for prod, m in level.mass.items():
            w = level.words[prod]
            for i, (g, wi) in enumerate(zip(gens, ws)):
                p = prod @ g
                if p in mass:
                    mass[p] += m * wi
                    if collision is None:
                        collision = (words[p], w + (i,))
                else:
                    mass[p] = m * wi
                    words[p] = w + (i,)
        level = Level(n, mass, words, collision)
        yield level


def exact_products(gens: Sequence[Mat2Q], n: int, weights=None, budget: int = DEFAULT_BUDGET) -> dict:
    """All length-n products mapped to their multiplicity (or exact weight)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    for level in iter_levels(gens, n, weights, budget):
        pass
    return level.mass


@dataclass(frozen=True)
class FreenessReport:
    free_up_to: int
    collision: tuple | None = None

    @property
    def free(self) -> bool:
        return self.collision is None


def freeness_check(gens: Sequence[Mat2Q], maxlen: int, budget: int = DEFAULT_BUDGET) -> FreenessReport:
    """Scan lengths 1..maxlen for two distinct same-length words with equal product."""
    for level in iter_levels(gens, maxlen, budget=budget):
        if level.collision is not None:
            return FreenessReport(level.n - 1, level.collision)
    return FreenessReport(maxlen)


def entropy_of_masses(probs) -> float:
    """Shannon entropy (bits) of exact rational probabilities.

    Equal probabilities are grouped so that, e.g., 2^n atoms of mass 2^-n
    give exactly n.
    """
    groups: dict = defaultdict(int)
    for p in probs:
        if p:
            groups[Fraction(p)] += 1
    terms = []
    for p, k in groups.items():
        log_p = math.log2(p.numerator) - math.log2(p.denominator)
        terms.append(-float(k * p) * log_p)
    return math.fsum(terms)


@dataclass(frozen=True)
class EntropyRateEstimate:
    h_n: tuple[float, ...]
    estimate: float
    maxlen: int
    exact: bool = True


def rw_entropy_profile(mu, maxlen: int, budget: int = DEFAULT_BUDGET) -> EntropyRateEstimate:
    """h_n = H(mu^{*n}) / n for n = 1..maxlen from the exact product distribution."""
    hs = []
    for level in iter_levels(mu.atoms, maxlen, mu.weights, budget):
        if level.n:
            hs.append(entropy_of_masses(level.mass.values()) / level.n)
    return EntropyRateEstimate(tuple(hs), hs[-1] if hs else 0.0, maxlen)


@dataclass(frozen=True)
class SeparationReport:
    n: int
    min_separation: Fraction
    c_n: float
    pair_witness: tuple
    # min_separation ** (1/n) before capping; exceeds 1 for well-spread integer products
    raw_rate: float = float("nan")

    @property
    def min_separation_float(self) -> float:
        return float(self.min_separation)


def _integer_table(products: list[Mat2Q]) -> tuple[list[tuple[int, ...]], int]:
    den = math.lcm(*(p.denominator() for p in products))
    rows = [tuple(int(e * den) for e in p.entries()) for p in products]
    return rows, den


def _min_pair(rows: list[tuple[int, ...]]) -> tuple[int, int, int]:
    """Smallest max-entry difference over unordered pairs; returns (value, i, j)."""
    biggest = max(abs(e) for r in rows for e in r)
    if biggest < 2**61:
        arr = np.asarray(rows, dtype=np.int64)
        best, bi, bj = None, -1, -1
        for i in range(len(arr) - 1):
            diff = np.abs(arr[i + 1 :] - arr[i]).max(axis=1)
            k = int(diff.argmin())
            if best is None or diff[k] < best:
                best, bi, bj = int(diff[k]), i, i + 1 + k
        return best, bi, bj
    best, bi, bj = None, -1, -1
    for i in range(len(rows) - 1):
        ri = rows[i]
        for j in range(i + 1, len(rows)):
            v = max(abs(x - y) for x, y in zip(ri, rows[j]))
            if best is None or v < best:
                best, bi, bj = v, i, j
    return best, bi, bj


def diophantine_separation(gens: Sequence[Mat2Q], n: int, budget: int = DEFAULT_BUDGET) -> SeparationReport:
    """Minimum max-entry distance between distinct length-n products, exactly.

    The max-entry norm is within a factor 2 of the operator norm, which
    does not affect the growth rate. ``c_n`` is the witnessed Diophantine
    constant min(1, min_separation^(1/n)); a separation of at least 1 already
    gives the strongest bound of the form c^n with c <= 1.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    for level in iter_levels(gens, n, budget=budget):
        pass
    products = list(level.mass)
    if len(products) < 2:
        raise EmptyReport(f"all length-{n} products coincide")
    rows, den = _integer_table(products)
    value, i, j = _min_pair(rows)
    sep = Fraction(value, den)
    witness = (level.words[products[i]], level.words[products[j]])
    rate = float(sep) ** (1.0 / n)
    return SeparationReport(n, sep, min(1.0, rate), witness, rate)
