"""2x2 matrices acting on the projective line.

The projective line is identified with [0, 1) through the canonical chart

    (x, y) -> 1/2 + arctan(y / x) / pi,

so the horizontal line sits at 1/2 and the vertical line at 0. Distances
are normalized so orthogonal lines are 1/2 apart and the circumference is 1.
All logarithms in the package are base 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, DeterminantError

DEGENERACY_RATIO = 1 + 1e-9


def _wrap(t):
    """Reduce mod 1 into [0, 1), guarding the ``-tiny % 1.0 == 1.0`` case."""
    if isinstance(t, np.ndarray):
        r = np.mod(t, 1.0)
        r[r >= 1.0] = 0.0
        return r
    r = t % 1.0
    return 0.0 if r >= 1.0 else r


@dataclass(frozen=True)
class Mat2:
    """Real matrix [[a, b], [c, d]]."""

    a: float
    b: float
    c: float
    d: float

    @classmethod
    def from_array(cls, arr) -> "Mat2":
        arr = np.asarray(arr, dtype=float)
        return cls(float(arr[0, 0]), float(arr[0, 1]), float(arr[1, 0]), float(arr[1, 1]))

    @classmethod
    def identity(cls) -> "Mat2":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def diag(cls, x: float, y: float) -> "Mat2":
        return cls(x, 0.0, 0.0, y)

    @classmethod
    def rotation(cls, t: float) -> "Mat2":
        """Rotation of the plane by angle pi*t (shifts chart coordinates by +t)."""
        co, si = math.cos(math.pi * t), math.sin(math.pi * t)
        return cls(co, -si, si, co)

    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def transpose(self) -> "Mat2":
        return Mat2(self.a, self.c, self.b, self.d)

    def inverse(self) -> "Mat2":
        det = self.det()
        return Mat2(self.d / det, -self.b / det, -self.c / det, self.a / det)

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return Mat2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def __sub__(self, other: "Mat2") -> "Mat2":
        return Mat2(self.a - other.a, self.b - other.b, self.c - other.c, self.d - other.d)

    def __neg__(self) -> "Mat2":
        return Mat2(-self.a, -self.b, -self.c, -self.d)

    def scaled(self, s: float) -> "Mat2":
        return Mat2(s * self.a, s * self.b, s * self.c, s * self.d)

    def apply(self, x: float, y: float) -> tuple[float, float]:
        return self.a * x + self.b * y, self.c * x + self.d * y

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    def norm(self) -> float:
        return operator_norm(self.a, self.b, self.c, self.d)


def operator_norm(a: float, b: float, c: float, d: float) -> float:
    """Largest singular value of [[a, b], [c, d]] in closed form.

    Written as the sum of the conformal and anti-conformal parts, which stays
    accurate when the two singular values nearly coincide.
    """
    return 0.5 * (math.hypot(a + d, b - c) + math.hypot(a - d, b + c))


def validate_sl2(entries, tol: float = 1e-9) -> Mat2:
    """Return ``entries`` (a, b, c, d) as a Mat2 after checking ``|det - 1| <= tol``.

    No normalization by sqrt(det) is attempted.
    """
    a, b, c, d = (float(e) for e in entries)
    m = Mat2(a, b, c, d)
    det = m.det()
    if not abs(det - 1.0) <= tol:
        raise DeterminantError(det, tol)
    return m


@dataclass(frozen=True)
class ProjPoint:
    """A line through the origin, stored by its canonical chart coordinate."""

    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", _wrap(float(self.theta)))

    @classmethod
    def line(cls, x: float, y: float) -> "ProjPoint":
        if x == 0.0 and y == 0.0:
            raise ValueError("the zero vector does not span a line")
        return cls(chart(x, y))

    def vector(self) -> tuple[float, float]:
        """Unit representative of the line."""
        phi = math.pi * (self.theta - 0.5)
        return math.cos(phi), math.sin(phi)


def chart(x, y):
    """Canonical chart coordinate of the line through (x, y); vectorizes over arrays."""
    if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
        return _wrap(np.arctan2(y, x) / np.pi + 0.5)
    return _wrap(math.atan2(y, x) / math.pi + 0.5)


def chart_vectors(theta):
    """Unit representatives (x, y) for chart coordinates ``theta``."""
    phi = np.pi * (np.asarray(theta, dtype=float) - 0.5)
    return np.cos(phi), np.sin(phi)


def proj_distance(p: ProjPoint, q: ProjPoint) -> float:
    t = abs(p.theta - q.theta)
    return min(t, 1.0 - t)


def circle_distance(s, t):
    """Vectorized projective distance between chart coordinates."""
    diff = np.abs(np.asarray(s) - np.asarray(t)) % 1.0
    return np.minimum(diff, 1.0 - diff)


def arcsin_distance(x, y) -> float:
    """Projective distance from representatives via the arcsine formula."""
    x1, x2 = x
    y1, y2 = y
    # arcsin(sin angle) evaluated as atan2(|sin|, |cos|), accurate near 0 and 1/2
    return math.atan2(abs(x1 * y2 - x2 * y1), abs(x1 * y1 + x2 * y2)) / math.pi


def _perp(u):
    return -u[1], u[0]


def angle_coordinate(u, x) -> float:
    """Angle of the line through ``x`` measured from the unit vector ``u``, in [0, 1).

    Lines on ``R u`` map to 0 and lines on ``R u_perp`` map to 1/2, so that
    ``angle_coordinate(u, gamma(u, t)) == t mod 1``.
    """
    if isinstance(x, ProjPoint):
        x = x.vector()
    up = _perp(u)
    along = x[0] * u[0] + x[1] * u[1]
    across = x[0] * up[0] + x[1] * up[1]
    return _wrap(math.atan2(across, along) / math.pi)


def gamma(u, theta: float) -> tuple[float, float]:
    """Section of ``angle_coordinate(u, .)``: cos(pi t) u + sin(pi t) u_perp."""
    up = _perp(u)
    co, si = math.cos(math.pi * theta), math.sin(math.pi * theta)
    return co * u[0] + si * up[0], co * u[1] + si * up[1]


def act(A: Mat2, p: ProjPoint) -> ProjPoint:
    x, y = p.vector()
    return ProjPoint.line(*A.apply(x, y))


def act_theta(A: Mat2, theta):
    """Action of ``A`` on an array of chart coordinates."""
    x, y = chart_vectors(theta)
    return chart(A.a * x + A.b * y, A.c * x + A.d * y)


@dataclass(frozen=True)
class SingularDecomposition:
    lambda_plus: float
    lambda_minus: float
    u_plus: ProjPoint | None
    u_minus: ProjPoint | None
    v_plus: ProjPoint | None
    v_minus: ProjPoint | None
    degenerate: bool
    # unit vectors, first nonzero coordinate positive; None when degenerate
    vectors: tuple | None = None


def _sign_fix(x: float, y: float) -> tuple[float, float]:
    if x < 0 or (x == 0 and y < 0):
        return -x, -y
    return x, y


def singular_decomposition(A: Mat2) -> SingularDecomposition:
    """Singular values and vectors of a nonsingular 2x2 matrix.

    ``u`` are the eigenvectors of A^T A (right singular vectors) and
    ``v = A u / lambda``. The smaller singular value is computed as
    |det| / lambda_plus to keep its relative accuracy for large norms.
    """
    lam_p = A.norm()
    det = abs(A.det())
    lam_m = det / lam_p
    if lam_p <= lam_m * DEGENERACY_RATIO:
        return SingularDecomposition(lam_p, lam_m, None, None, None, None, True)
    p = A.a * A.a + A.c * A.c
    q = A.a * A.b + A.c * A.d
    r = A.b * A.b + A.d * A.d
    phi = 0.5 * math.atan2(2.0 * q, p - r)
    up = (math.cos(phi), math.sin(phi))
    um = (-up[1], up[0])
    vp = A.apply(*up)
    vp = (vp[0] / lam_p, vp[1] / lam_p)
    vm = A.apply(*um)
    vm = (vm[0] / lam_m, vm[1] / lam_m)
    up, um, vp, vm = (_sign_fix(*w) for w in (up, um, vp, vm))
    return SingularDecomposition(
        lam_p,
        lam_m,
        ProjPoint.line(*up),
        ProjPoint.line(*um),
        ProjPoint.line(*vp),
        ProjPoint.line(*vm),
        False,
        (up, um, vp, vm),
    )


def induced_map(A: Mat2, theta: float) -> tuple[float, float]:
    """The action of ``A`` read in singular coordinates.

    ``theta`` is measured from u+ in the domain and the value from v+ in the
    range. Returns (value mod 1, derivative).
    """
    sd = singular_decomposition(A)
    if sd.degenerate:
        raise DegenerateError("singular values coincide; the singular frame is undefined")
    lam = sd.lambda_plus
    co, si = math.cos(math.pi * theta), math.sin(math.pi * theta)
    value = _wrap(math.atan2(si / lam, lam * co) / math.pi)
    deriv = 1.0 / (lam * lam * co * co + si * si / (lam * lam))
    return value, deriv


def chart_derivative(A: Mat2, theta: float) -> float:
    """Derivative of the action of ``A`` at canonical coordinate ``theta``.

    Charts differ by translations, so this equals the derivative of the
    induced map at the angle of ``theta`` from u+. Conformal matrices
    (equal singular values) act isometrically and return 1.
    """
    sd = singular_decomposition(A)
    if sd.degenerate:
        return 1.0
    return induced_map(A, theta - sd.u_plus.theta)[1]


def group_distance(g: Mat2, h: Mat2) -> float:
    """Operator-norm distance ``||g - h||``; stands in for a left-invariant metric."""
    return (g - h).norm()
