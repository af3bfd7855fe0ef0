"""Stationary measures on the projective line and their dimension.

A stationary sample is X_1 ... X_n z for i.i.d. X_i ~ mu, which converges
to the Furstenberg measure geometrically fast in n. Points are returned as
arrays of canonical chart coordinates in [0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import parallel
from .entropy import MAX_LEVEL, entropy_profile, histogram, shannon_entropy
from .errors import DomainError, UndersampledError
from .geometry import (
    Mat2,
    ProjPoint,
    chart,
    chart_derivative,
    chart_vectors,
    circle_distance,
    singular_decomposition,
)
from .products import AtomicMeasureG

BLOCK = 1 << 16


def _indices(cum: np.ndarray, rng: np.random.Generator, n: int) -> np.ndarray:
    if cum.size == 1:
        return np.zeros(n, dtype=np.int64)
    return np.minimum(np.searchsorted(cum, rng.random(n), side="right"), cum.size - 1)


def _apply_random(mats: np.ndarray, cum: np.ndarray, x: np.ndarray, y: np.ndarray, rng, steps: int):
    a, b, c, d = mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 0], mats[:, 1, 1]
    for s in range(steps):
        idx = _indices(cum, rng, x.size)
        x, y = a[idx] * x + b[idx] * y, c[idx] * x + d[idx] * y
        if s % 4 == 3:
            r = np.hypot(x, y)
            x, y = x / r, y / r
    return x, y


def sample_stationary(mu: AtomicMeasureG, n_word: int, n_samples: int, z: ProjPoint | None = None, seed: int = 0) -> np.ndarray:
    """``n_samples`` independent points X_1 ... X_{n_word} z as chart coordinates.

    Work is cut into fixed blocks with their own seed streams, so the output
    does not depend on FURST_THREADS.
    """
    if n_word < 1:
        raise ValueError("n_word must be positive")
    z = ProjPoint(0.3) if z is None else z
    mats = mu.matrices()
    cum = np.cumsum(mu.probabilities())
    zx, zy = z.vector()
    nblocks = -(-n_samples // BLOCK)

    def block(k):
        size = min(BLOCK, n_samples - k * BLOCK)
        rng = parallel.rng_for(seed, parallel.STATIONARY, k)
        x, y = _apply_random(mats, cum, np.full(size, zx), np.full(size, zy), rng, n_word)
        return chart(x, y)

    parts = parallel.pmap(block, range(nblocks))
    return np.concatenate(parts) if parts else np.empty(0)


def action_convolution(theta: AtomicMeasureG, points, seed: int = 0) -> np.ndarray:
    """g x for independent g ~ theta and x drawn from ``points``; as many outputs as inputs."""
    pts = np.asarray(points, dtype=float)
    rng = parallel.rng_for(seed, parallel.STEP, 1)
    xs = pts[rng.integers(0, pts.size, size=pts.size)]
    x, y = chart_vectors(xs)
    x, y = _apply_random(theta.matrices(), np.cumsum(theta.probabilities()), x, y, rng, 1)
    return chart(x, y)


def total_variation(p_points, q_points, level: int) -> float:
    hp, hq = histogram(p_points, level), histogram(q_points, level)
    cells = np.union1d(hp.cells, hq.cells)
    p = np.zeros(cells.size)
    q = np.zeros(cells.size)
    p[np.searchsorted(cells, hp.cells)] = hp.probabilities()
    q[np.searchsorted(cells, hq.cells)] = hq.probabilities()
    return 0.5 * float(np.abs(p - q).sum())


def stationarity_distance(mu: AtomicMeasureG, points, level: int, seed: int = 0) -> float:
    """TV distance at ``level`` between the sample and the sample pushed one random mu-step."""
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise ValueError("points must be nonempty")
    rng = parallel.rng_for(seed, parallel.STEP, 0)
    x, y = chart_vectors(pts)
    x, y = _apply_random(mu.matrices(), np.cumsum(mu.probabilities()), x, y, rng, 1)
    return total_variation(pts, chart(x, y), level)


@dataclass(frozen=True)
class ActionEntropyDiagnostic:
    ell: int
    N: int
    h_in: float
    h_out: float

    @property
    def gain(self) -> float:
        """(1/N) [H(theta.eta, D_{N+ell}) - H(eta, D_N)]."""
        return (self.h_out - self.h_in) / self.N


def action_entropy_diagnostic(theta: AtomicMeasureG, points, N: int, seed: int = 0) -> ActionEntropyDiagnostic:
    """Entropy of theta.eta at scale N + ell against eta at scale N, ell = floor(2 log2 ||g0||).

    g0 is the heaviest atom of theta (first on ties).
    """
    g0 = theta.mat2()[int(np.argmax(theta.probabilities()))]
    ell = int(math.floor(2 * math.log2(g0.norm()) + 1e-12))
    out = action_convolution(theta, points, seed)
    h_in = shannon_entropy(histogram(points, N))
    h_out = shannon_entropy(histogram(out, N + ell))
    return ActionEntropyDiagnostic(ell, N, h_in, h_out)


# --- dimension estimators -----------------------------------------------------


def default_k_window(total: int, k_min: int = 6) -> tuple[int, int]:
    return k_min, min(20, int(math.floor(math.log2(total / 100))))


@dataclass(frozen=True)
class EntropyDimensionEstimate:
    slope: float
    intercept: float
    levels: np.ndarray
    entropies: np.ndarray
    residuals: np.ndarray
    # first-order plug-in bias per level, (K - 1) / (2 N ln 2); reported, not subtracted
    bias: np.ndarray


def entropy_dimension_estimate(points, k_min: int, k_max: int, miller_madow: bool = False) -> EntropyDimensionEstimate:
    """Least-squares slope of H(points, D_k) against k for k in [k_min, k_max]."""
    pts = np.asarray(points, dtype=float)
    if k_max > MAX_LEVEL:
        raise UndersampledError(f"k_max {k_max} above the resolution cap")
    if pts.size < 100 * 2**k_max:
        raise UndersampledError(f"{pts.size} points is fewer than 100 * 2^{k_max}")
    if k_max <= k_min:
        raise ValueError("need k_min < k_max")
    levels = np.arange(k_min, k_max + 1)
    top = histogram(pts, k_max)
    hists = [top.coarsen(int(k)) for k in levels]
    ents = np.array([shannon_entropy(h, miller_madow) for h in hists])
    bias = np.array([(h.cells.size - 1) / (2.0 * pts.size * math.log(2)) for h in hists])
    slope, intercept = np.polyfit(levels, ents, 1)
    resid = ents - (slope * levels + intercept)
    return EntropyDimensionEstimate(float(slope), float(intercept), levels, ents, resid, bias)


@dataclass(frozen=True)
class LocalDimensionProfile:
    mean: float
    std: float
    dims: np.ndarray
    radii: np.ndarray
    min_count: int


def ball_counts(sorted_pts: np.ndarray, centers: np.ndarray, r: float) -> np.ndarray:
    """Number of points within circular distance r of each center (r < 1/2)."""
    lo = centers - r
    hi = centers + r
    n = sorted_pts.size
    count = np.searchsorted(sorted_pts, hi, side="right") - np.searchsorted(sorted_pts, lo, side="left")
    # wrap-around pieces of the arc
    count += np.where(lo < 0, n - np.searchsorted(sorted_pts, lo + 1.0, side="left"), 0)
    count += np.where(hi >= 1.0, np.searchsorted(sorted_pts, hi - 1.0, side="right"), 0)
    return count


def local_dimension_profile(points, probes: int, r_min: float, r_max: float, seed: int = 0, n_radii: int = 9, min_count: int = 50) -> LocalDimensionProfile:
    """Local dimension fits at random sample points.

    For each probe x (drawn from the sample) the least-squares slope of
    log2 nu(B_r(x)) against log2 r is fitted on ``n_radii`` geometric radii
    in [r_min, r_max]. Exact dimensionality shows up as the spread of the
    slopes shrinking as the window moves to smaller radii.
    """
    if not r_min < r_max <= 0.5:
        raise ValueError("need r_min < r_max <= 1/2")
    if probes < 100:
        raise ValueError("probes must be at least 100")
    pts = np.sort(np.asarray(points, dtype=float))
    rng = parallel.rng_for(seed, parallel.PROBES, 1)
    centers = pts[rng.integers(0, pts.size, size=probes)]
    radii = np.geomspace(r_min, r_max, n_radii)
    counts = np.stack([ball_counts(pts, centers, r) for r in radii])
    smallest = int(counts[0].min())
    if smallest < min_count:
        raise UndersampledError(f"a ball of radius {r_min:g} holds only {smallest} points (< {min_count})")
    dims = np.polyfit(np.log2(radii), np.log2(counts), 1)[0]
    return LocalDimensionProfile(float(dims.mean()), float(dims.std(ddof=1)), dims, radii, smallest)


def dimension_formula(h_rw: float, chi: float) -> float:
    """min(1, h_rw / (2 chi))."""
    if not chi > 0:
        raise DomainError(f"the dimension formula needs chi > 0, got {chi}")
    if h_rw < 0:
        raise DomainError(f"random-walk entropy must be nonnegative, got {h_rw}")
    return min(1.0, h_rw / (2.0 * chi))


# --- hypotheses ----------------------------------------------------------------


def _eigenlines(m: np.ndarray, tol: float) -> list[float]:
    tr, det = np.trace(m), np.linalg.det(m)
    disc = tr * tr / 4 - det
    if disc < -tol:
        return []
    vals = np.linalg.eigvals(m).real
    if abs(vals[0] - vals[1]) <= tol * max(1.0, abs(vals).max()) and np.allclose(m, vals[0] * np.eye(2), atol=tol):
        return []  # scalar: fixes every line, no information
    lines = []
    for v in vals:
        k = m - v * np.eye(2)
        row = k[0] if np.abs(k[0]).sum() > np.abs(k[1]).sum() else k[1]
        lines.append(chart(float(-row[1]), float(row[0])))
    return lines


def _fixes(m: np.ndarray, theta: float, tol: float) -> bool:
    x, y = chart_vectors(theta)
    return float(circle_distance(chart(m[0, 0] * x + m[0, 1] * y, m[1, 0] * x + m[1, 1] * y), theta)) <= tol


def check_hypotheses(mu: AtomicMeasureG, tol: float = 1e-9) -> None:
    """Raise DomainError when the generated group visibly fails total irreducibility.

    Detects a common invariant line or a common invariant pair of lines, and
    groups of conformal (rotation-like) matrices, which are bounded.
    """
    mats = list(mu.matrices())
    if all(singular_decomposition(Mat2.from_array(m)).degenerate for m in mats):
        raise DomainError("all atoms are conformal; the generated group is bounded")
    candidates: list[float] = []
    for m in mats:
        candidates += _eigenlines(m, tol)
        candidates += _eigenlines(m @ m, tol)
    for t in candidates:
        if all(_fixes(m, t, 1e-9) for m in mats):
            raise DomainError("the atoms share an invariant line (reducible group, no unique stationary measure)")
    for i, s in enumerate(candidates):
        for t in candidates[i + 1 :]:
            if circle_distance(s, t) < 1e-9:
                continue
            pair = (s, t)
            ok = True
            for m in mats:
                x, y = chart_vectors(np.array(pair))
                img = chart(m[0, 0] * x + m[0, 1] * y, m[1, 0] * x + m[1, 1] * y)
                if not all(min(circle_distance(v, s), circle_distance(v, t)) <= 1e-9 for v in img):
                    ok = False
                    break
            if ok:
                raise DomainError("the atoms preserve a pair of lines (not totally irreducible)")


# --- linearization -------------------------------------------------------------


@dataclass(frozen=True)
class LinearizationReport:
    slope: float
    intercept: float
    radii: np.ndarray
    max_errors: np.ndarray


def _signed(v: np.ndarray) -> np.ndarray:
    return (v + 0.5) % 1.0 - 0.5


def linearization_probe(g0: Mat2, x0: ProjPoint, radii, samples: int, seed: int = 0, eps: float = 0.1) -> LinearizationReport:
    """Fit the exponent of the first-order error of (g, x) -> g x near (g0, x0).

    For each radius r, g = g0 (I + E) / sqrt(det(I + E)) with max|E| <= r and
    x within r of x0; the error is |g x - (g x0 + D (x - x0))| in chart
    coordinates, D the derivative of g0 at x0.
    """
    sd = singular_decomposition(g0)
    if not sd.degenerate and circle_distance(x0.theta, sd.u_minus.theta) < eps:
        raise DomainError(f"x0 lies within {eps} of the contracting direction of g0")
    deriv = chart_derivative(g0, x0.theta)
    rng = parallel.rng_for(seed, parallel.PERTURB)
    radii = np.asarray(radii, dtype=float)
    errs = []
    x0x, x0y = x0.vector()
    for r in radii:
        E = rng.uniform(-r, r, size=(4, samples))
        ha, hb, hc, hd = 1 + E[0], E[1], E[2], 1 + E[3]
        s = np.sqrt(ha * hd - hb * hc)
        ha, hb, hc, hd = ha / s, hb / s, hc / s, hd / s
        ga = g0.a * ha + g0.b * hc
        gb = g0.a * hb + g0.b * hd
        gc = g0.c * ha + g0.d * hc
        gd = g0.c * hb + g0.d * hd
        dx = rng.uniform(-r, r, size=samples)
        xt = x0.theta + dx
        xx, xy = chart_vectors(xt)
        gx = chart(ga * xx + gb * xy, gc * xx + gd * xy)
        gx0 = chart(ga * x0x + gb * x0y, gc * x0x + gd * x0y)
        err = np.abs(_signed(gx - gx0 - deriv * dx))
        errs.append(err.max())
    errs = np.array(errs)
    slope, intercept = np.polyfit(np.log2(radii), np.log2(errs), 1)
    return LinearizationReport(float(slope), float(intercept), radii, errs)


def largest_cell_mass(points, level: int) -> float:
    h = histogram(points, level)
    return float(h.weights.max()) / h.total


def entropy_levels(points, k_max: int) -> np.ndarray:
    return entropy_profile(points, range(0, k_max + 1))
