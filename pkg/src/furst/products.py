"""Random matrix products: word sampling, Lyapunov exponents, Oseledets rates.

Products are accumulated left to right, Z_n = X_1 X_2 ... X_n. Long
products are kept as (normalized matrix, accumulated log2 scale) pairs.
Every estimator is a pure function of its inputs and the master seed; each
trial draws from its own stream keyed by the trial index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import parallel
from .errors import DegenerateError
from .geometry import DEGENERACY_RATIO, Mat2, operator_norm
from .semigroup import Mat2Q

RENORM_EVERY = 32


@dataclass(frozen=True)
class AtomicMeasureG:
    """Finitely supported probability measure on SL2(R).

    ``atoms`` are Mat2Q (exact) or Mat2 (float-only, e.g. irrational
    parameters); ``weights`` are exact rationals summing to 1.
    """

    atoms: tuple
    weights: tuple = field(default=())

    def __post_init__(self):
        atoms = tuple(self.atoms)
        if not atoms:
            raise ValueError("a measure needs at least one atom")
        weights = tuple(Fraction(w) for w in self.weights) or tuple(Fraction(1, len(atoms)) for _ in atoms)
        if len(weights) != len(atoms):
            raise ValueError("one weight per atom is required")
        if any(w <= 0 for w in weights):
            raise ValueError("weights must be positive")
        if sum(weights) != 1:
            raise ValueError(f"weights sum to {sum(weights)}, not 1")
        if len(set(atoms)) != len(atoms):
            raise ValueError("atoms must be pairwise distinct")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, atoms: Sequence) -> "AtomicMeasureG":
        return cls(tuple(atoms))

    @property
    def exact(self) -> bool:
        return all(isinstance(a, Mat2Q) for a in self.atoms)

    def mat2(self) -> list[Mat2]:
        return [a.to_mat2() if isinstance(a, Mat2Q) else a for a in self.atoms]

    def matrices(self) -> np.ndarray:
        """Float atoms as an array of shape (k, 2, 2)."""
        return np.array([m.as_array() for m in self.mat2()])

    def probabilities(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights])

    def max_log_norm(self) -> float:
        return max(math.log2(m.norm()) for m in self.mat2())

    def __len__(self):
        return len(self.atoms)


def _draw(mu: AtomicMeasureG, n: int, rng: np.random.Generator) -> np.ndarray:
    if len(mu) == 1:
        return np.zeros(n, dtype=np.int64)
    return rng.choice(len(mu), size=n, p=mu.probabilities())


def sample_word(mu: AtomicMeasureG, n: int, seed: int) -> list[int]:
    """n i.i.d. atom indices distributed by the weights of ``mu``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return _draw(mu, n, parallel.rng_for(seed, parallel.WORD)).tolist()


def _entries(mu: AtomicMeasureG) -> list[tuple[float, float, float, float]]:
    return [(m.a, m.b, m.c, m.d) for m in mu.mat2()]


def word_log_norm(mats, word) -> float:
    """log2 ||mats[w1] ... mats[wn]||, renormalizing every 32 steps."""
    a, b, c, d = 1.0, 0.0, 0.0, 1.0
    acc = 0.0
    for k, i in enumerate(word, 1):
        ma, mb, mc, md = mats[i]
        a, b, c, d = a * ma + b * mc, a * mb + b * md, c * ma + d * mc, c * mb + d * md
        if k % RENORM_EVERY == 0:
            s = operator_norm(a, b, c, d)
            a, b, c, d = a / s, b / s, c / s, d / s
            acc += math.log2(s)
    return acc + math.log2(operator_norm(a, b, c, d))


@dataclass(frozen=True)
class LyapunovEstimate:
    chi_hat: float
    std_err: float
    n_steps: int
    n_trials: int
    seed: int

    @property
    def lam(self) -> float:
        return 2.0**self.chi_hat


def lyapunov_estimate(mu: AtomicMeasureG, n: int, trials: int, seed: int) -> LyapunovEstimate:
    """Mean over trials of (1/n) log2 ||X_1 ... X_n||."""
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be positive")
    mats = _entries(mu)

    def one(t):
        word = _draw(mu, n, parallel.rng_for(seed, parallel.LYAPUNOV, t)).tolist()
        return word_log_norm(mats, word) / n

    vals = np.array(parallel.pmap(one, range(trials)))
    err = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return LyapunovEstimate(float(vals.mean()), err, n, trials, seed)


# --- scaled products -------------------------------------------------------


def _right_singular(a, b, c, d):
    """Top right singular vector and the norm of [[a, b], [c, d]]."""
    p = a * a + c * c
    q = a * b + c * d
    r = b * b + d * d
    phi = 0.5 * math.atan2(2.0 * q, p - r)
    return (math.cos(phi), math.sin(phi)), operator_norm(a, b, c, d)


def _prefix_products(mats, word):
    """Normalized prefixes Z_n (unit operator norm) and log2 of the removed scale."""
    a, b, c, d = 1.0, 0.0, 0.0, 1.0
    acc = 0.0
    out = []
    for i in word:
        ma, mb, mc, md = mats[i]
        a, b, c, d = a * ma + b * mc, a * mb + b * md, c * ma + d * mc, c * mb + d * md
        s = operator_norm(a, b, c, d)
        a, b, c, d = a / s, b / s, c / s, d / s
        acc += math.log2(s)
        out.append(((a, b, c, d), acc))
    return out


def _suffix_images(mats, word, vec):
    """Unit vectors X_{n+1} ... X_N vec for n = 0..N."""
    x, y = vec
    out = [None] * (len(word) + 1)
    out[len(word)] = (x, y)
    for n in range(len(word) - 1, -1, -1):
        ma, mb, mc, md = mats[word[n]]
        x, y = ma * x + mb * y, mc * x + md * y
        s = math.hypot(x, y)
        x, y = x / s, y / s
        out[n] = (x, y)
    return out


def _log2_image_distance(Z, scale, logdet, p, q) -> float:
    """log2 d(Zp, Zq) for unit vectors p, q; Z is normalized with log2 scale ``scale``.

    Uses sin(angle) = |det Z| |p x q| / (|Zp| |Zq|) with det Z carried in
    logs, which keeps full relative accuracy far below machine epsilon.
    """
    a, b, c, d = Z
    cross = abs(p[0] * q[1] - p[1] * q[0])
    if cross == 0.0:
        return -math.inf
    zp = math.hypot(a * p[0] + b * p[1], c * p[0] + d * p[1])
    zq = math.hypot(a * q[0] + b * q[1], c * q[0] + d * q[1])
    log_sin = logdet - 2.0 * scale + math.log2(cross) - math.log2(zp) - math.log2(zq)
    if log_sin < -20:
        return log_sin - math.log2(math.pi)
    return math.log2(math.asin(min(1.0, 2.0**log_sin)) / math.pi)


def _log_dets(mu, word):
    dets = [math.log2(abs(m.det())) for m in mu.mat2()]
    return np.cumsum([dets[i] for i in word]).tolist()


@dataclass(frozen=True)
class OseledetsReport:
    mean_slope: float
    slope_std_err: float
    target_slope: float
    chi_hat: float
    exact_convergence: bool
    n_max: int
    trials: int
    seed: int
    window: tuple[int, int]
    used_trials: int

    @property
    def relative_gap(self) -> float:
        if self.exact_convergence or self.target_slope == 0:
            return math.nan
        return abs(self.mean_slope - self.target_slope) / abs(self.target_slope)


def oseledets_diagnostic(mu: AtomicMeasureG, n_max: int, trials: int, seed: int) -> OseledetsReport:
    """Decay rate of d(w_n+, u+) where w_n+ = Z_n u+_{Z_n} and u+ is proxied by w_{n_max}+.

    Fits log2 d against n over [n_max/4, 3 n_max/4] per trial and compares
    the mean slope with -2 chi_hat from the same products.
    """
    if n_max < 16:
        raise ValueError("n_max must be at least 16")
    mats = _entries(mu)
    lo, hi = n_max // 4, (3 * n_max) // 4

    def one(t):
        word = _draw(mu, n_max, parallel.rng_for(seed, parallel.OSELEDETS, t)).tolist()
        prefixes = _prefix_products(mats, word)
        logdets = _log_dets(mu, word)
        for n, (Z, scale) in enumerate(prefixes, 1):
            # singular values of the unnormalized product: 2^scale and 2^(logdet - scale)
            if 2 * scale - logdets[n - 1] <= math.log2(DEGENERACY_RATIO):
                raise DegenerateError(f"partial product of length {n} has equal singular values")
        ZN, _ = prefixes[-1]
        uN, _ = _right_singular(*ZN)
        images = _suffix_images(mats, word, uN)
        ns, ys = [], []
        for n in range(lo, hi + 1):
            Z, scale = prefixes[n - 1]
            un, _ = _right_singular(*Z)
            y = _log2_image_distance(Z, scale, logdets[n - 1], un, images[n])
            if math.isfinite(y):
                ns.append(n)
                ys.append(y)
        chi = prefixes[-1][1] / n_max
        slope = float(np.polyfit(ns, ys, 1)[0]) if len(ns) >= 2 else math.nan
        return slope, chi, len(ns) == 0

    results = parallel.pmap(one, range(trials))
    slopes = np.array([r[0] for r in results])
    chis = np.array([r[1] for r in results])
    exact = all(r[2] for r in results)
    good = slopes[np.isfinite(slopes)]
    chi_hat = float(chis.mean())
    if exact or good.size == 0:
        return OseledetsReport(math.nan, math.nan, -2 * chi_hat, chi_hat, exact, n_max, trials, seed, (lo, hi), 0)
    err = float(good.std(ddof=1) / math.sqrt(good.size)) if good.size > 1 else 0.0
    return OseledetsReport(float(good.mean()), err, -2 * chi_hat, chi_hat, False, n_max, trials, seed, (lo, hi), int(good.size))


@dataclass(frozen=True)
class FurstenbergHitReport:
    fraction: float
    n: int
    epsilon: float
    chi_hat: float
    trials: int


def furstenberg_hit_fraction(mu: AtomicMeasureG, n: int, z, trials: int, seed: int, chi_hat: float | None = None) -> FurstenbergHitReport:
    """Fraction of trials with d(X_1...X_n z, u+) < 2^(-2 (chi - eps_n) n), eps_n = n^(-1/2).

    u+ is proxied by w_{2n}+ of the same word.
    """
    mats = _entries(mu)
    if chi_hat is None:
        chi_hat = lyapunov_estimate(mu, 4 * n, trials, seed).chi_hat
    eps = n**-0.5
    threshold = -2.0 * (chi_hat - eps) * n
    zv = z.vector()

    def one(t):
        word = _draw(mu, 2 * n, parallel.rng_for(seed, parallel.FURSTENBERG, t)).tolist()
        prefixes = _prefix_products(mats, word)
        logdets = _log_dets(mu, word)
        uN, _ = _right_singular(*prefixes[-1][0])
        b = _suffix_images(mats, word, uN)[n]
        Z, scale = prefixes[n - 1]
        return _log2_image_distance(Z, scale, logdets[n - 1], zv, b) < threshold

    hits = parallel.pmap(one, range(trials))
    return FurstenbergHitReport(float(np.mean(hits)), n, eps, chi_hat, trials)
