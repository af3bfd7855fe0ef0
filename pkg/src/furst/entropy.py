"""Dyadic histograms of empirical measures on [0, 1) and their entropies.

Histograms are stored sparsely (occupied cells and their counts) so levels
up to the resolution cap of 40 are cheap; ``counts`` materializes the dense
array of 2^level cells when it is small enough. Entropies are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import parallel
from .errors import EmptyComponent, EmptySampleError, LevelMismatch, ResolutionError

MAX_LEVEL = 40
DENSE_LIMIT = 26


def _cells(points: np.ndarray, level: int) -> np.ndarray:
    idx = np.floor(points * float(2**level)).astype(np.int64)
    return np.clip(idx, 0, 2**level - 1)


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float).ravel()
    if pts.size == 0:
        raise EmptySampleError("empty sample: a histogram needs total > 0")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    return pts


def _check_level(level: int) -> None:
    if level < 0 or level > MAX_LEVEL:
        raise ResolutionError(f"level {level} outside [0, {MAX_LEVEL}]")


@dataclass(frozen=True, eq=False)
class DyadicHistogram:
    level: int
    cells: np.ndarray  # sorted occupied cell indices
    weights: np.ndarray  # counts in those cells (integers)
    total: int

    @classmethod
    def from_dense(cls, counts) -> "DyadicHistogram":
        counts = np.asarray(counts)
        level = int(round(math.log2(counts.size)))
        if 2**level != counts.size:
            raise ValueError("dense counts must have length 2^level")
        nz = np.flatnonzero(counts)
        total = int(counts.sum())
        if total <= 0:
            raise EmptySampleError("histogram total must be positive")
        return cls(level, nz.astype(np.int64), counts[nz].copy(), total)

    @property
    def counts(self) -> np.ndarray:
        if self.level > DENSE_LIMIT:
            raise ResolutionError(f"dense view of level {self.level} is too large")
        dtype = self.weights.dtype if self.weights.dtype != object else object
        out = np.zeros(2**self.level, dtype=dtype)
        out[self.cells] = self.weights
        return out

    def probabilities(self) -> np.ndarray:
        return self.weights.astype(float) / float(self.total)

    def coarsen(self, level: int) -> "DyadicHistogram":
        if level > self.level:
            raise ValueError("can only coarsen to a lower level")
        parents = self.cells >> (self.level - level)
        cells, start = np.unique(parents, return_index=True)
        return DyadicHistogram(level, cells, np.add.reduceat(self.weights, start), self.total)

    def merge(self, other: "DyadicHistogram") -> "DyadicHistogram":
        if other.level != self.level:
            raise LevelMismatch("histograms must share a level")
        cells = np.concatenate([self.cells, other.cells])
        weights = np.concatenate([self.weights, other.weights])
        order = np.argsort(cells, kind="stable")
        cells, weights = cells[order], weights[order]
        uniq, start = np.unique(cells, return_index=True)
        return DyadicHistogram(self.level, uniq, np.add.reduceat(weights, start), self.total + other.total)

    def __eq__(self, other):
        return (
            isinstance(other, DyadicHistogram)
            and self.level == other.level
            and self.total == other.total
            and np.array_equal(self.cells, other.cells)
            and np.array_equal(self.weights, other.weights)
        )

    def to_csv(self) -> str:
        """``level,total`` header followed by the 2^level counts, one per line."""
        lines = [f"{self.level},{self.total}"]
        lines.extend(str(int(c)) for c in self.counts)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "DyadicHistogram":
        rows = [r.strip() for r in text.strip().splitlines() if r.strip()]
        level, total = (int(v) for v in rows[0].split(","))
        counts = np.array([int(r) for r in rows[1:]], dtype=np.int64)
        if counts.size != 2**level:
            raise ValueError(f"expected {2**level} counts, found {counts.size}")
        hist = cls.from_dense(counts)
        if hist.total != total:
            raise ValueError(f"header total {total} disagrees with counts sum {hist.total}")
        return hist


def histogram(points, level: int) -> DyadicHistogram:
    """Counts of ``points`` in the level-``level`` dyadic cells of [0, 1)."""
    _check_level(level)
    pts = _as_points(points)
    cells, counts = np.unique(_cells(pts, level), return_counts=True)
    return DyadicHistogram(level, cells, counts.astype(np.int64), int(pts.size))


def shannon_entropy(h: DyadicHistogram, miller_madow: bool = False) -> float:
    """-sum p log2 p over occupied cells.

    With ``miller_madow`` the first-order plug-in bias (K - 1) / (2 N ln 2),
    K occupied cells, is added back.
    """
    w = h.weights.astype(float)
    n = float(h.total)
    ent = math.log2(n) - float(np.dot(w, np.log2(w))) / n
    ent = max(ent, 0.0)
    if miller_madow:
        ent += (h.cells.size - 1) / (2.0 * n * math.log(2))
    return ent


def entropy_profile(points, levels) -> np.ndarray:
    """H(points, D_k) for each k in ``levels``, from one histogram at the finest level."""
    levels = list(levels)
    top = histogram(points, max(levels))
    return np.array([shannon_entropy(top.coarsen(k)) for k in levels])


def conditional_entropy(points, m: int, n: int) -> float:
    """H(., D_m | D_n) = H(., D_m) - H(., D_n) for n < m."""
    if not n < m:
        raise ValueError("need n < m")
    hm = histogram(points, m)
    return shannon_entropy(hm) - shannon_entropy(hm.coarsen(n))


def conditional_entropy_direct(h: DyadicHistogram, n: int) -> float:
    """sum over level-n cells F of eta(F) H(eta_F, D_level), without the identity."""
    parents = h.cells >> (h.level - n)
    _, start = np.unique(parents, return_index=True)
    masses = np.add.reduceat(h.weights, start).astype(float)
    ents = _grouped_entropy(h.weights.astype(float), start)
    return float(np.dot(masses / h.total, ents))


def _grouped_entropy(w: np.ndarray, start: np.ndarray) -> np.ndarray:
    """Entropy of each contiguous group of counts ``w`` beginning at ``start``."""
    tot = np.add.reduceat(w, start)
    wlogw = np.add.reduceat(w * np.log2(w), start)
    return np.maximum(np.log2(tot) - wlogw / tot, 0.0)


# --- components -------------------------------------------------------------


def component(points, x: float, i: int, m: int = 8) -> DyadicHistogram:
    """Points in D_i(x), rescaled affinely onto [0, 1), binned at level m."""
    _check_level(i + m)
    pts = _as_points(points)
    scale = float(2**i)
    cell = math.floor(x * scale)
    inside = pts[np.floor(pts * scale) == cell]
    if inside.size == 0:
        raise EmptyComponent(f"no points in the level-{i} cell of {x}")
    return histogram(inside * scale - cell, m)


@dataclass(frozen=True)
class ComponentTable:
    """Entropies of all level-i components measured m levels deeper."""

    i: int
    m: int
    cells: np.ndarray
    masses: np.ndarray  # counts per level-i cell
    entropies: np.ndarray  # H(eta_{x,i}, D_{i+m}) per cell, in bits
    total: int

    def expected(self) -> float:
        return float(np.dot(self.masses, self.entropies) / self.total)

    def lookup(self, x: np.ndarray) -> np.ndarray:
        cell = _cells(x, self.i)
        pos = np.searchsorted(self.cells, cell)
        pos = np.clip(pos, 0, self.cells.size - 1)
        found = self.cells[pos] == cell
        out = np.full(cell.shape, np.nan)
        out[found] = self.entropies[pos[found]]
        return out


def component_table(points, i: int, m: int, fine: DyadicHistogram | None = None) -> ComponentTable:
    _check_level(i + m)
    if fine is None or fine.level != i + m:
        fine = histogram(points, i + m)
    parents = fine.cells >> m
    cells, start = np.unique(parents, return_index=True)
    w = fine.weights.astype(float)
    masses = np.add.reduceat(fine.weights, start)
    return ComponentTable(i, m, cells, masses, _grouped_entropy(w, start), fine.total)


def multiscale_average(points, m: int, n: int) -> float:
    """E_{1<=i<=n} (1/m) H(eta_{x,i}, D_{i+m}), averaging exactly over all components."""
    pts = _as_points(points)
    top = histogram(pts, n + m)
    vals = [component_table(pts, i, m, top.coarsen(i + m)).expected() for i in range(1, n + 1)]
    return float(np.mean(vals)) / m


def multiscale_residual(points, m: int, n: int) -> float:
    """|(1/n) H(eta, D_n) - E_{1<=i<=n} (1/m) H(eta_{x,i}, D_{i+m})|."""
    return abs(shannon_entropy(histogram(points, n)) / n - multiscale_average(points, m, n))


def components_tv(n: int, m: int) -> float:
    """Total variation between one-stage and two-stage component sampling.

    One stage draws i uniform in [0, n] and the cell D_i(x) with x from the
    measure; two stages draw such a component and then its own component at
    j uniform in [i, i + m]. Given the level, both cells are distributed as
    the measure at that level, so only the level laws differ and the
    distance does not depend on the measure.
    """
    if n < 1 or m < 0:
        raise ValueError("need n >= 1 and m >= 0")
    one = np.zeros(n + m + 1)
    one[: n + 1] = 1.0 / (n + 1)
    two = np.zeros(n + m + 1)
    for i in range(n + 1):
        two[i : i + m + 1] += 1.0 / ((n + 1) * (m + 1))
    return 0.5 * float(np.abs(one - two).sum())


@dataclass(frozen=True)
class PorosityProfile:
    h: float
    delta: float
    m: int
    n1: int
    n2: int
    fraction: float
    samples: int
    empty_resampled: int = 0

    @property
    def porous(self) -> bool:
        return self.fraction > 1.0 - self.delta


def porosity_profile(points, h: float, delta: float, m: int, n1: int, n2: int, probes: int, seed: int) -> PorosityProfile:
    """Fraction of random components with (1/m) H(eta_{x,i}, D_{i+m}) <= h + delta.

    i is uniform on [n1, n2] and x is drawn from the sample.
    """
    if not n2 > n1 or m < 1:
        raise ValueError("need n2 > n1 and m >= 1")
    pts = _as_points(points)
    rng = parallel.rng_for(seed, parallel.PROBES)
    levels = rng.integers(n1, n2 + 1, size=probes)
    xs = pts[rng.integers(0, pts.size, size=probes)]
    top = histogram(pts, n2 + m)
    ents = np.empty(probes)
    empty = 0
    for i in np.unique(levels):
        sel = levels == i
        table = component_table(pts, int(i), m, top.coarsen(int(i) + m))
        vals = table.lookup(xs[sel])
        while np.isnan(vals).any():  # only possible for probes not drawn from the sample
            bad = np.isnan(vals)
            empty += int(bad.sum())
            sub = xs[sel]
            sub[bad] = pts[rng.integers(0, pts.size, size=int(bad.sum()))]
            xs[sel] = sub
            vals = table.lookup(sub)
        ents[sel] = vals
    frac = float(np.mean(ents / m <= h + delta))
    return PorosityProfile(h, delta, m, n1, n2, frac, probes, empty)


# --- convolution and rescaling ------------------------------------------------


def circle_convolve(a: DyadicHistogram, b: DyadicHistogram) -> DyadicHistogram:
    """Convolution under addition mod 1 with exact integer counts (total = total_a * total_b)."""
    if a.level != b.level:
        raise LevelMismatch(f"levels differ: {a.level} vs {b.level}")
    big = a.total * b.total >= 2**62
    dtype = object if big else np.int64
    bd = b.counts.astype(dtype)
    out = np.zeros(2**a.level, dtype=dtype)
    for j, w in zip(a.cells.tolist(), a.weights.tolist()):
        out += int(w) * np.roll(bd, j)
    nz = np.flatnonzero(out)
    return DyadicHistogram(a.level, nz.astype(np.int64), out[nz], a.total * b.total)


def rescale(points, t: int) -> np.ndarray:
    """Push points through x -> 2^t x, keeping those that stay in [0, 1)."""
    pts = _as_points(points) * float(2.0**t)
    return pts[(pts >= 0.0) & (pts < 1.0)]


def mixture(a: DyadicHistogram, b: DyadicHistogram, alpha: float) -> np.ndarray:
    """Probability vector of alpha * a + (1 - alpha) * b at their common level."""
    if a.level != b.level:
        raise LevelMismatch("levels differ")
    return alpha * a.counts / a.total + (1 - alpha) * b.counts / b.total


def entropy_of_probabilities(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(max(-np.dot(p, np.log2(p)), 0.0))
