"""Upper half-plane kernel: points, Moebius maps, flows and Busemann functions.

Boundary points are plain floats, with ``INFINITY`` (``math.inf``) standing
for the point at infinity.  Frames are elements of PSL(2, R): the frame of
``g`` sits at ``g(i)`` and points towards ``g(inf)``.  The geodesic and
horocycle flows act on the right.

Busemann functions use the convention ``B_xi(x, y) = lim d(x, z) - d(y, z)``
as ``z -> xi``, so ``B_xi(x, y) >= 0`` exactly when ``y`` lies in the closed
horoball at ``xi`` through ``x``.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Union

from .config import TOL
from .errors import DegenerateError, NonpositiveScaleError, NotHyperbolicError

INFINITY = math.inf
_EPS = 2.0**-52

BoundaryPoint = float


@dataclass(frozen=True)
class HPoint:
    re: float
    im: float

    def __post_init__(self):
        if not (self.im > 0) or not math.isfinite(self.im) or not math.isfinite(self.re):
            raise ValueError(f"not a point of the upper half-plane: {self.re} + {self.im}i")

    @classmethod
    def of(cls, z: complex) -> "HPoint":
        return cls(z.real, z.imag)

    @property
    def z(self) -> complex:
        return complex(self.re, self.im)


I = HPoint(0.0, 1.0)


def boundary(x: float) -> BoundaryPoint:
    """Validate a boundary coordinate; both signed infinities mean ``INFINITY``."""
    x = float(x)
    if math.isnan(x):
        raise ValueError("NaN is not a boundary point")
    return INFINITY if math.isinf(x) else x


def is_infinity(x: BoundaryPoint) -> bool:
    return math.isinf(x)


@dataclass(frozen=True, eq=False)
class MoebiusMap:
    """Element of PSL(2, R) stored as a det-1 matrix ``[[a, b], [c, d]]``."""

    a: float
    b: float
    c: float
    d: float

    @classmethod
    def from_entries(cls, a, b, c, d) -> "MoebiusMap":
        """Build a map, rescaling the entries to determinant one."""
        det = a * d - b * c
        if not (det > 0):
            raise ValueError(f"matrix determinant must be positive, got {det}")
        s = math.sqrt(det)
        return cls(a / s, b / s, c / s, d / s)

    @classmethod
    def renormalized(cls, a, b, c, d) -> "MoebiusMap":
        """Rescale a product of det-1 matrices back to determinant one.

        Rescaling only happens when ``ad - bc`` differs from 1 by more than
        its rounding noise; otherwise the entries already represent a det-1
        matrix to working precision and dividing by a noisy determinant would
        only add error (badly so for large entries).
        """
        det = a * d - b * c
        noise = 8 * _EPS * (abs(a * d) + abs(b * c))
        if det > 0 and noise < 1e-3 and abs(det - 1.0) > 1e3 * noise:
            s = math.sqrt(det)
            return cls(a / s, b / s, c / s, d / s)
        return cls(a, b, c, d)

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls(1.0, 0.0, 0.0, 1.0)

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> float:
        return self.a + self.d

    def entries(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    def inverse(self) -> "MoebiusMap":
        return MoebiusMap(self.d, -self.b, -self.c, self.a)

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        a1, b1, c1, d1 = self.a, self.b, self.c, self.d
        a2, b2, c2, d2 = other.a, other.b, other.c, other.d
        return MoebiusMap.renormalized(
            a1 * a2 + b1 * c2, a1 * b2 + b1 * d2, c1 * a2 + d1 * c2, c1 * b2 + d1 * d2
        )

    def __pow__(self, k: int) -> "MoebiusMap":
        base = self if k >= 0 else self.inverse()
        out = MoebiusMap.identity()
        for _ in range(abs(k)):
            out = out @ base
        return out

    def __neg__(self) -> "MoebiusMap":
        return MoebiusMap(-self.a, -self.b, -self.c, -self.d)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MoebiusMap):
            return NotImplemented
        return projective_distance(self, other) <= TOL.proj

    __hash__ = None

    def canonical(self) -> "MoebiusMap":
        """Sign representative with the first nonzero of (c, d, a) positive."""
        for x in (self.c, self.d, self.a):
            if x != 0:
                return self if x > 0 else -self
        return self

    def __repr__(self) -> str:
        return f"MoebiusMap({self.a!r}, {self.b!r}, {self.c!r}, {self.d!r})"


def projective_distance(m: MoebiusMap, n: MoebiusMap) -> float:
    """min(|m - n|, |m + n|) in the max-entry norm."""
    e1, e2 = m.entries(), n.entries()
    minus = max(abs(x - y) for x, y in zip(e1, e2))
    plus = max(abs(x + y) for x, y in zip(e1, e2))
    return min(minus, plus)


def diag(t: float) -> MoebiusMap:
    """Geodesic flow element a_t = diag(e^{t/2}, e^{-t/2})."""
    return MoebiusMap(math.exp(t / 2), 0.0, 0.0, math.exp(-t / 2))


def unipotent(s: float) -> MoebiusMap:
    """Horocycle flow element u_s = [[1, s], [0, 1]]."""
    return MoebiusMap(1.0, float(s), 0.0, 1.0)


def moebius_apply(m: MoebiusMap, p: Union[HPoint, BoundaryPoint]):
    a, b, c, d = m.a, m.b, m.c, m.d
    if isinstance(p, HPoint):
        z = p.z
        w = (a * z + b) / (c * z + d)
        # im(w) = im(z) / |cz + d|^2 exactly; avoids cancellation
        return HPoint(w.real, p.im / abs(c * z + d) ** 2)
    x = boundary(p)
    if math.isinf(x):
        return INFINITY if c == 0 else a / c
    den = c * x + d
    if den == 0:
        return INFINITY
    return (a * x + b) / den


def hyp_distance(p: HPoint, q: HPoint) -> float:
    # 2 asinh form of arccosh(1 + |p-q|^2 / (2 y1 y2)); accurate for small d
    return 2.0 * math.asinh(abs(p.z - q.z) / (2.0 * math.sqrt(p.im * q.im)))


class Isometry(enum.Enum):
    IDENTITY = "identity"
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"
    HYPERBOLIC = "hyperbolic"


def classify_isometry(m: MoebiusMap, tol: float | None = None) -> Isometry:
    tol = TOL.trace if tol is None else tol
    if projective_distance(m, MoebiusMap.identity()) <= TOL.proj:
        return Isometry.IDENTITY
    t = abs(m.trace)
    if t > 2 + tol:
        return Isometry.HYPERBOLIC
    if t < 2 - tol:
        return Isometry.ELLIPTIC
    return Isometry.PARABOLIC


def translation_length(m: MoebiusMap) -> float:
    return 2.0 * math.acosh(max(abs(m.trace) / 2.0, 1.0))


def axis_data(m: MoebiusMap) -> tuple[BoundaryPoint, BoundaryPoint, float]:
    """Return ``(repelling, attracting, translation_length)`` of a hyperbolic map."""
    if classify_isometry(m) is not Isometry.HYPERBOLIC:
        raise NotHyperbolicError(f"{m!r} is not hyperbolic")
    a, b, c, d = m.entries()
    length = translation_length(m)
    # fixed points are eigenvectors (r, 1): r = (lam - d) / c = b / (lam - a);
    # of lam - d and lam - a, the larger one is free of cancellation
    disc = math.sqrt(max((a + d) ** 2 - 4.0, 0.0))
    sgn = 1.0 if a + d >= 0 else -1.0

    def fixed(s):  # s = +1: larger eigenvalue (attracting), s = -1: smaller
        lam_d = 0.5 * (a - d + s * sgn * disc)
        lam_a = 0.5 * (d - a + s * sgn * disc)
        if abs(lam_d) >= abs(lam_a):
            return INFINITY if c == 0 else lam_d / c
        return b / lam_a

    return fixed(-1.0), fixed(1.0), length


@dataclass(frozen=True)
class Frame:
    g: MoebiusMap

    @classmethod
    def identity(cls) -> "Frame":
        return cls(MoebiusMap.identity())

    @property
    def base(self) -> HPoint:
        return moebius_apply(self.g, I)

    @property
    def forward(self) -> BoundaryPoint:
        return moebius_apply(self.g, INFINITY)


@dataclass(frozen=True)
class GeodesicLine:
    endpoint_minus: BoundaryPoint
    endpoint_plus: BoundaryPoint

    def __post_init__(self):
        m, p = boundary(self.endpoint_minus), boundary(self.endpoint_plus)
        if m == p:
            raise DegenerateError("geodesic endpoints must be distinct")


def geodesic_flow(u: Frame, t: float) -> Frame:
    return Frame(u.g @ diag(t))


def horocycle_flow(u: Frame, s: float) -> Frame:
    return Frame(u.g @ unipotent(s))


def affine_act(u: Frame, alpha: float, beta: float) -> Frame:
    """Right action of the affine element ``[[alpha, beta], [0, 1/alpha]]``."""
    if not (alpha > 0):
        raise NonpositiveScaleError(f"alpha must be positive, got {alpha}")
    return Frame(u.g @ MoebiusMap(alpha, beta, 0.0, 1.0 / alpha))


def frame_distance(u: Frame, v: Frame) -> float:
    return projective_distance(u.g, v.g)


def frame_geometry(u: Frame) -> tuple[HPoint, float, BoundaryPoint]:
    """Base point, tangent direction angle in [0, 2pi), forward endpoint."""
    g = u.g
    # pushforward of the upward vector at i: arg g'(i) + pi/2, g'(z) = (cz+d)^-2
    direction = math.pi / 2 - 2.0 * cmath.phase(complex(g.d, g.c))
    return moebius_apply(g, I), direction % (2 * math.pi), moebius_apply(g, INFINITY)


def poisson_kernel(z: HPoint, xi: BoundaryPoint) -> float:
    if math.isinf(xi):
        return z.im
    return z.im / ((z.re - xi) ** 2 + z.im**2)


def busemann(xi: BoundaryPoint, x: HPoint, y: HPoint) -> float:
    """``lim d(x, z) - d(y, z)`` as ``z -> xi``, in closed form."""
    xi = boundary(xi)
    if math.isinf(xi):
        return math.log(y.im / x.im)
    # hypot keeps |z - xi| finite for huge xi
    return math.log(y.im / x.im) + 2.0 * math.log(
        math.hypot(x.re - xi, x.im) / math.hypot(y.re - xi, y.im)
    )


def _unit_tangent(v: HPoint, p: HPoint) -> complex:
    """Unit tangent at ``v`` of the geodesic segment from ``v`` to ``p``."""
    dx = p.re - v.re
    if abs(dx) <= 1e-15 * max(1.0, abs(v.re), abs(p.re)):
        return 1j if p.im > v.im else -1j
    center = (abs(p.z) ** 2 - abs(v.z) ** 2) / (2.0 * dx)
    t = 1j * (v.z - center)
    chord = p.z - v.z
    if (t.conjugate() * chord).real < 0:
        t = -t
    return t / abs(t)


def hyp_angle(vertex: HPoint, p: HPoint, q: HPoint) -> float:
    """Angle in (0, pi] at ``vertex`` between the segments towards ``p`` and ``q``."""
    if p == vertex or q == vertex or hyp_distance(vertex, p) == 0 or hyp_distance(vertex, q) == 0:
        raise DegenerateError("angle undefined when an endpoint coincides with the vertex")
    t1, t2 = _unit_tangent(vertex, p), _unit_tangent(vertex, q)
    return abs(cmath.phase(t2 / t1))


def triangle_defect(theta: float) -> float:
    """d(theta) = log(2 / (1 - cos theta)) for a triangle angle bounded below by theta."""
    return math.log(2.0 / (1.0 - math.cos(theta)))
