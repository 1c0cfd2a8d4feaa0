"""Hyperbolic geometry in the unit-disk model.

Points live in the open unit disk (complex coordinate), boundary points on
the unit circle, and orientation-preserving isometries are unit-determinant
matrices [[a, b], [conj(b), conj(a)]] acting by Moebius transformations.
Everything here is dimension n = 1 (surfaces); the constants that make sense
for general boundary dimension are in :mod:`eisenlab.special`.

The scalar API below works on plain complex numbers and numpy arrays alike;
the wrapper types exist to carry validation where single objects flow through
higher-level code.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalDegeneracyError

# Interior points must keep a safe distance from the boundary circle.
POINT_BOUNDARY_GAP = 1e-14
#: |a|^2 - |b|^2 may drift this far from 1 before renormalization kicks in.
DET_TOLERANCE = 1e-12
# Renormalizing |a|^2 - |b|^2 is catastrophically cancellative once the
# entries are huge; beyond this size the drift is below representable anyway.
RENORM_ENTRY_LIMIT = 1e6


@dataclass(frozen=True)
class DiskPoint:
    """A point of the hyperbolic plane, |z| < 1 strictly."""

    z: complex

    def __post_init__(self):
        if not abs(self.z) < 1.0 - POINT_BOUNDARY_GAP:
            raise ValueError(f"point {self.z} too close to the boundary circle")

    def __complex__(self):
        return complex(self.z)


@dataclass(frozen=True)
class BoundaryPoint:
    """A point of the boundary circle, stored by its angle in [0, 2pi)."""

    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta) % (2.0 * math.pi))

    @property
    def z(self) -> complex:
        return cmath.exp(1j * self.theta)

    def __complex__(self):
        return self.z


@dataclass(frozen=True)
class SpectralParameter:
    """Spectral parameter s = n/2 + i t on the critical line."""

    t: float
    n: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("boundary dimension n must be a positive integer")
        if not math.isfinite(self.t):
            raise ValueError("frequency t must be finite")

    @property
    def s(self) -> complex:
        return self.n / 2 + 1j * self.t


def _as_z(p):
    """Accept DiskPoint/BoundaryPoint/complex/ndarray, return the raw value."""
    if isinstance(p, (DiskPoint, BoundaryPoint)):
        return p.z
    return p


@dataclass(frozen=True)
class DiskIsometry:
    """Unit-determinant matrix [[a, b], [conj(b), conj(a)]] preserving the disk."""

    a: complex
    b: complex

    @staticmethod
    def identity() -> "DiskIsometry":
        return DiskIsometry(1.0 + 0j, 0j)

    @staticmethod
    def rotation(alpha: float) -> "DiskIsometry":
        """Rotation of the disk by angle alpha about the origin."""
        return DiskIsometry(cmath.exp(0.5j * alpha), 0j)

    @staticmethod
    def translation(length: float, direction: float = 0.0) -> "DiskIsometry":
        """Hyperbolic translation by `length` along the diameter at angle `direction`."""
        g = DiskIsometry(math.cosh(length / 2), math.sinh(length / 2) * cmath.exp(1j * direction))
        return g.renormalized()

    def inverse(self) -> "DiskIsometry":
        return DiskIsometry(self.a.conjugate(), -self.b)

    def __matmul__(self, other: "DiskIsometry") -> "DiskIsometry":
        a1, b1 = self.a, self.b
        a2, b2 = other.a, other.b
        out = DiskIsometry(a1 * a2 + b1 * b2.conjugate(), a1 * b2 + b1 * a2.conjugate())
        return out.renormalized()

    def renormalized(self) -> "DiskIsometry":
        if abs(self.b) > RENORM_ENTRY_LIMIT:
            return self
        det = abs(self.a) ** 2 - abs(self.b) ** 2
        # below the measurement noise of det itself, "renormalizing" would
        # only inject a spurious scale
        noise = 16.0 * 2.2e-16 * (abs(self.a) ** 2 + abs(self.b) ** 2)
        if abs(det - 1.0) <= max(DET_TOLERANCE, noise) or det <= 0.0:
            return self
        r = math.sqrt(det)
        return DiskIsometry(self.a / r, self.b / r)

    @property
    def det_defect(self) -> float:
        return abs(abs(self.a) ** 2 - abs(self.b) ** 2 - 1.0)

    def is_identity(self, tol: float = 1e-12) -> bool:
        return abs(self.b) < tol and abs(self.a.imag) < tol

    @property
    def trace(self) -> float:
        """Real part of the trace a + conj(a)."""
        return 2.0 * self.a.real

    def is_hyperbolic(self) -> bool:
        return abs(self.a.real) > 1.0 + 1e-14


@dataclass(frozen=True)
class IsometricCircle:
    """Circle on which a Moebius transformation has unit derivative."""

    center: complex
    radius: float


def isometric_circle(g: DiskIsometry) -> IsometricCircle:
    """Isometric circle of g: center -conj(a)/conj(b), radius 1/|b|."""
    if abs(g.b) == 0.0:
        raise ValueError("elliptic/identity element has no isometric circle")
    return IsometricCircle(-g.a.conjugate() / g.b.conjugate(), 1.0 / abs(g.b))


def hyp_distance(m, m2):
    """Hyperbolic distance, via sinh^2(d/2) = |m-m'|^2 / ((1-|m|^2)(1-|m'|^2))."""
    z1, z2 = _as_z(m), _as_z(m2)
    q = np.abs(z1 - z2) ** 2 / ((1.0 - np.abs(z1) ** 2) * (1.0 - np.abs(z2) ** 2))
    return 2.0 * np.arcsinh(np.sqrt(q))


def displacement(g: DiskIsometry) -> float:
    """d(o, g o); equals 2 asinh |b| for unit-determinant matrices."""
    return 2.0 * math.asinh(abs(g.b))


def translation_length(g: DiskIsometry) -> float:
    """Axis translation length 2 arccosh(|Re a|) of a hyperbolic element."""
    half_tr = abs(g.a.real)
    if half_tr <= 1.0:
        raise ValueError("translation length requires a hyperbolic element (|tr|/2 > 1)")
    return 2.0 * math.acosh(half_tr)


def apply(g: DiskIsometry, m):
    """Moebius action z -> (a z + b) / (conj(b) z + conj(a)) on interior points."""
    z = _as_z(m)
    den = g.b.conjugate() * z + g.a.conjugate()
    if np.min(np.abs(den)) < 1e-14:
        raise NumericalDegeneracyError("Moebius denominator vanished")
    w = (g.a * z + g.b) / den
    if isinstance(m, DiskPoint):
        return DiskPoint(complex(w))
    return w


def apply_boundary(g: DiskIsometry, xi):
    """Boundary action of g; maps the unit circle to itself."""
    z = _as_z(xi)
    den = g.b.conjugate() * z + g.a.conjugate()
    if np.min(np.abs(den)) < 1e-14:
        raise NumericalDegeneracyError("Moebius denominator vanished on the boundary")
    w = (g.a * z + g.b) / den
    if isinstance(xi, BoundaryPoint):
        return BoundaryPoint(cmath.phase(complex(w)))
    # renormalize onto the circle; |w| = 1 up to roundoff
    return w / np.abs(w)


def boundary_derivative(g: DiskIsometry, xi):
    """|Dg(xi)| = 1 / |conj(b) xi + conj(a)|^2, the boundary conformal factor."""
    z = _as_z(xi)
    den = g.b.conjugate() * z + g.a.conjugate()
    if np.min(np.abs(den)) < 1e-14:
        raise NumericalDegeneracyError("Moebius denominator vanished on the boundary")
    return 1.0 / np.abs(den) ** 2


def bdf(m):
    """Boundary defining function 2 e^{-d(m,o)} = 2 (1-|m|)/(1+|m|)."""
    r = np.abs(_as_z(m))
    return 2.0 * (1.0 - r) / (1.0 + r)


def phase(xi, m):
    """Horocyclic phase log((1-|m|^2) / (4 |m-xi|^2)), computed in log space."""
    z, x = _as_z(m), _as_z(xi)
    return np.log1p(-np.abs(z) ** 2) - math.log(4.0) - 2.0 * np.log(np.abs(z - x))


def e0(s, m, xi):
    """Elementary kernel ((1-|m|^2) / (4 |m-xi|^2))^s = exp(s * phase).

    `s` may be a SpectralParameter, a real exponent, or any complex number.
    Positive real for real s.
    """
    if isinstance(s, SpectralParameter):
        s = s.s
    ph = phase(xi, m)
    if isinstance(s, complex) and s.imag != 0.0:
        return np.exp(s * ph)
    return np.exp(np.real(s) * ph)


def phase_gradient(xi, m):
    """Euclidean gradient of phase(xi, .) at m, as the complex number gx + i gy."""
    z, x = _as_z(m), _as_z(xi)
    return -2.0 * z / (1.0 - np.abs(z) ** 2) - 2.0 * (z - x) / np.abs(z - x) ** 2


def gradient_g_norm(m, grad):
    """Norm of a Euclidean gradient with respect to the metric 4|dm|^2/(1-|m|^2)^2.

    Covectors scale by the inverse conformal factor, so the g-norm of the
    gradient of phase comes out identically 1.
    """
    z = _as_z(m)
    return 0.5 * (1.0 - np.abs(z) ** 2) * np.abs(grad)


def busemann(xi, m, m2):
    """Signed horospherical distance B_xi(m, m') = phase(xi, m) - phase(xi, m')."""
    return phase(xi, m) - phase(xi, m2)


def beardon_identity_check(g: DiskIsometry, xi, xi2) -> float:
    """Residual of the boundary-contraction identity for a non-identity g.

    Compares |g xi - g xi'| against |xi - xi'| / (sinh^2(d(o,go)/2) |xi-a_g| |xi'-a_g|)
    with a_g the isometric-circle center; returns |LHS - RHS|.
    """
    z1, z2 = _as_z(xi), _as_z(xi2)
    lhs = abs(complex(apply_boundary(g, z1)) - complex(apply_boundary(g, z2)))
    circ = isometric_circle(g)
    sinh2 = abs(g.b) ** 2
    rhs = abs(z1 - z2) / (sinh2 * abs(z1 - circ.center) * abs(z2 - circ.center))
    return abs(lhs - rhs)


def fixed_boundary_points(g: DiskIsometry):
    """The two boundary fixed points of a hyperbolic element.

    Roots of conj(b) z^2 + (conj(a) - a) z - b = 0, returned as
    (attracting, repelling); the boundary derivative is < 1 at the
    attracting point.
    """
    if not g.is_hyperbolic():
        raise ValueError("fixed boundary points require a hyperbolic element")
    A = g.b.conjugate()
    B = g.a.conjugate() - g.a
    C = -g.b
    disc = cmath.sqrt(B * B - 4.0 * A * C)
    r1 = (-B + disc) / (2.0 * A)
    r2 = (-B - disc) / (2.0 * A)
    r1 /= abs(r1)
    r2 /= abs(r2)
    if boundary_derivative(g, r1) < 1.0:
        return r1, r2
    return r2, r1


def geodesic_map(q: complex, p: complex) -> DiskIsometry:
    """Disk isometry taking the real diameter to the geodesic from q to p.

    q and p are distinct boundary points (unit complex numbers); -1 maps to q
    and +1 to p, so tau -> apply(., tanh(tau/2)) traverses the geodesic at
    unit speed.
    """
    # a + b must align with p^{1/2}, b - a with (-q)^{1/2}; scale to det 1.
    w = cmath.exp(0.5j * cmath.phase(p))
    v = cmath.exp(0.5j * (cmath.phase(q) + math.pi))
    c = -(v * w.conjugate()).real
    if abs(c) < 1e-15:
        raise ValueError("degenerate boundary endpoints for a geodesic")
    if c < 0:
        v = -v
        c = -c
    r = 1.0 / math.sqrt(c)
    a = 0.5 * r * (w - v)
    b = 0.5 * r * (w + v)
    return DiskIsometry(a, b)


def axis_map(g: DiskIsometry) -> DiskIsometry:
    """Isometry taking the real diameter onto the axis of g (repelling to attracting)."""
    p, q = fixed_boundary_points(g)
    return geodesic_map(q, p)


def axis_point(g: DiskIsometry, tau) -> complex:
    """Point on the axis of g at arclength parameter tau (repelling -> attracting)."""
    return apply(axis_map(g), np.tanh(np.asarray(tau) / 2.0))


def axis_distance(g: DiskIsometry, m) -> float:
    """Hyperbolic distance from m to the axis of g."""
    w = apply(axis_map(g).inverse(), _as_z(m))
    return np.arcsinh(2.0 * np.abs(np.imag(w)) / (1.0 - np.abs(w) ** 2))
