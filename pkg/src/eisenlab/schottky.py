"""Fuchsian Schottky groups: construction, enumeration, counting, exponent.

A group is specified by 2k pairing circles orthogonal to the unit circle,
listed so that generator i maps the exterior of circle 2i onto the interior
of circle 2i+1 (the two circles are the isometric circles of the generator
and of its inverse, which forces equal radii within a pair).  Disjointness of
the closed disks certifies a free, convex co-compact group, and the exterior
of all disks is a fundamental domain.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidConfigurationError,
    DeltaDisagreementError,
    NumericalError,
    ResourceLimitError,
)
from .geom import DiskIsometry, apply, translation_length

WORD_CAP_DEFAULT = 10_000_000


@dataclass(frozen=True)
class PairingCircle:
    """Circle orthogonal to the unit circle: boundary-arc center angle and Euclidean radius."""

    angle: float
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise InvalidConfigurationError("pairing circle radius must be positive")
        object.__setattr__(self, "angle", float(self.angle) % (2.0 * math.pi))

    @property
    def center(self) -> complex:
        return math.sqrt(1.0 + self.radius**2) * cmath.exp(1j * self.angle)

    @property
    def half_width(self) -> float:
        """Angular half-width of the boundary arc cut out by the circle."""
        return math.atan(self.radius)

    def contains(self, z) -> np.ndarray:
        """Membership of the closed disk bounded by the circle."""
        return np.abs(np.asarray(z) - self.center) <= self.radius


def generator_for_pair(c_out: PairingCircle, c_in: PairingCircle) -> DiskIsometry:
    """The isometry with isometric circle c_out mapping its exterior into c_in.

    Requires equal radii (isometric circles of g and g^{-1} always match).
    """
    if abs(c_out.radius - c_in.radius) > 1e-12 * (1 + c_out.radius):
        raise InvalidConfigurationError("paired circles must have equal radii")
    rho = c_out.radius
    big = math.sqrt(1.0 + rho**2)
    # isometric-circle conditions -conj(a)/conj(b) = center_out, a/conj(b) = center_in
    a = (big / rho) * cmath.exp(0.5j * (c_in.angle - c_out.angle + math.pi))
    b = a.conjugate() * cmath.exp(1j * c_in.angle) / big
    return DiskIsometry(a, b).renormalized()


@dataclass(frozen=True)
class SchottkyGroup:
    """Schottky data: 2k pairing circles and the k derived generators."""

    circles: tuple
    generators: tuple
    valid: bool = field(default=False)

    @property
    def rank(self) -> int:
        return len(self.generators)

    @staticmethod
    def from_circles(circles) -> "SchottkyGroup":
        circles = tuple(circles)
        if len(circles) % 2 != 0:
            raise InvalidConfigurationError("need an even number of pairing circles")
        gens = tuple(
            generator_for_pair(circles[2 * i], circles[2 * i + 1])
            for i in range(len(circles) // 2)
        )
        group = SchottkyGroup(circles, gens, valid=False)
        group.validate()
        return SchottkyGroup(circles, gens, valid=True)

    @staticmethod
    def trivial() -> "SchottkyGroup":
        """The trivial group (no generators); fundamental domain is the whole disk."""
        return SchottkyGroup((), (), valid=True)

    def validate(self):
        """Certify pairwise disjointness of the closed pairing disks."""
        cs = [c.center for c in self.circles]
        rs = [c.radius for c in self.circles]
        for i in range(len(cs)):
            for j in range(i + 1, len(cs)):
                gap = abs(cs[i] - cs[j]) - (rs[i] + rs[j])
                if gap <= 1e-12:
                    raise InvalidConfigurationError(
                        f"pairing disks {i} and {j} overlap or touch (gap {gap:.3e})"
                    )

    def letter_isometries(self):
        """(label, isometry) for labels 1..k and -1..-k."""
        out = []
        for i, g in enumerate(self.generators):
            out.append((i + 1, g))
            out.append((-(i + 1), g.inverse()))
        return out

    def letter_map(self):
        return {lab: g for lab, g in self.letter_isometries()}

    def circle_for_letter(self, label: int) -> PairingCircle:
        """Isometric circle of the letter's isometry."""
        i = abs(label) - 1
        return self.circles[2 * i] if label > 0 else self.circles[2 * i + 1]

    def to_text(self) -> str:
        lines = [f"rank {self.rank}"]
        for c in self.circles:
            lines.append(f"circle {c.angle!r} {c.radius!r}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "SchottkyGroup":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("rank"):
            raise InvalidConfigurationError("group text must start with a rank line")
        k = int(lines[0].split()[1])
        circles = []
        for ln in lines[1:]:
            parts = ln.split()
            if parts[0] != "circle":
                raise InvalidConfigurationError(f"unexpected line {ln!r}")
            circles.append(PairingCircle(float(parts[1]), float(parts[2])))
        if len(circles) != 2 * k:
            raise InvalidConfigurationError("rank/circle count mismatch")
        if k == 0:
            return SchottkyGroup.trivial()
        return SchottkyGroup.from_circles(circles)


def build_symmetric_schottky(k: int, half_width: float) -> SchottkyGroup:
    """Equally spaced pairing circles at angles pi j / k, antipodal pairing.

    Generator i pairs the circle at angle pi i/k with the one at pi i/k + pi,
    so every generator axis is a diameter through the origin.  The 2k arcs of
    angular half-width `half_width` must be disjoint, i.e. half_width < pi/(2k).
    """
    if k < 1:
        raise InvalidConfigurationError("need at least one generator")
    if not 0 < half_width:
        raise InvalidConfigurationError("half_width must be positive")
    rho = math.tan(half_width)
    circles = []
    for i in range(k):
        circles.append(PairingCircle(math.pi * i / k, rho))
        circles.append(PairingCircle(math.pi * i / k + math.pi, rho))
    return SchottkyGroup.from_circles(circles)


@dataclass(frozen=True)
class Word:
    """Reduced word with its cached matrix and displacement d(o, w o)."""

    letters: tuple
    a: complex
    b: complex

    @property
    def length(self) -> int:
        return len(self.letters)

    @property
    def displacement(self) -> float:
        return 2.0 * math.asinh(abs(self.b))

    @property
    def matrix(self) -> DiskIsometry:
        return DiskIsometry(self.a, self.b)

    def inverse_letters(self) -> tuple:
        return tuple(-l for l in reversed(self.letters))


IDENTITY_WORD = Word((), 1.0 + 0j, 0j)


def _extend(word: Word, label: int, iso: DiskIsometry) -> Word:
    g = DiskIsometry(
        word.a * iso.a + word.b * iso.b.conjugate(),
        word.a * iso.b + word.b * iso.a.conjugate(),
    ).renormalized()
    return Word(word.letters + (label,), g.a, g.b)


def enumerate_words(group: SchottkyGroup, max_word_length=None, max_displacement=None,
                    cap: int = WORD_CAP_DEFAULT):
    """Yield every reduced word exactly once, identity first, by word length.

    Exactly one of the two policies may bound the stream: a word-length cap or
    a displacement cap (shells stop once an entire shell exceeds it; shell
    minima grow along reduced words for disjoint pairing disks).
    """
    if max_word_length is None and max_displacement is None:
        raise ValueError("need max_word_length or max_displacement")
    letters = group.letter_isometries()
    yield IDENTITY_WORD
    count = 1
    shell = [IDENTITY_WORD]
    length = 0
    while shell:
        length += 1
        if max_word_length is not None and length > max_word_length:
            return
        nxt = []
        shell_min = math.inf
        for w in shell:
            last = w.letters[-1] if w.letters else 0
            for lab, iso in letters:
                if lab == -last:
                    continue
                nw = _extend(w, lab, iso)
                shell_min = min(shell_min, nw.displacement)
                if max_displacement is not None and nw.displacement > max_displacement:
                    continue
                count += 1
                if count > cap:
                    raise ResourceLimitError(f"word enumeration exceeded cap {cap}")
                nxt.append(nw)
                yield nw
        if max_displacement is not None and shell_min > max_displacement:
            return
        # under a displacement cap, children of excluded words are safe to drop:
        # displacement grows strictly along reduced words (nested pairing disks)
        shell = nxt


def free_group_word_count(k: int, length: int) -> int:
    """Number of reduced words of length <= `length` in the free group of rank k."""
    if k == 0:
        return 1
    total = 1
    for j in range(1, length + 1):
        total += 2 * k * (2 * k - 1) ** (j - 1)
    return total


def orbit_count(group: SchottkyGroup, T: float) -> int:
    """N(T) = #{words w : d(o, w o) <= T}."""
    if T <= 0:
        raise ValueError("T must be positive")
    return sum(1 for _ in enumerate_words(group, max_displacement=T))


@dataclass(frozen=True)
class DeltaEstimate:
    """One exponent estimate; value in (0, 1) for nonelementary groups."""

    value: float
    method: str
    uncertainty: float


@dataclass(frozen=True)
class DeltaResult:
    counting: DeltaEstimate
    bisection: DeltaEstimate
    value: float
    uncertainty: float

    @property
    def upper(self) -> float:
        return self.value + self.uncertainty


def _shell_displacements(group, max_word_length, cap):
    shells = [[] for _ in range(max_word_length + 1)]
    for w in enumerate_words(group, max_word_length=max_word_length, cap=cap):
        shells[w.length].append(w.displacement)
    return [np.array(s) for s in shells]


def estimate_delta(group: SchottkyGroup, max_word_length: int = 9,
                   cap: int = WORD_CAP_DEFAULT,
                   bisection_tol: float = 1e-3) -> DeltaResult:
    """Exponent of orbit growth by two independent estimators.

    (a) least-squares slope of log N(T) against T over the window
    [0.4 T_max, T_max]; (b) bisection in s on the growth/decay transition of
    the length-shell sums of e^{-s d(o, w o)}.  The estimators must agree
    within 3x their combined uncertainty.
    """
    shells = _shell_displacements(group, max_word_length, cap)
    alld = np.sort(np.concatenate(shells[1:]))
    if len(alld) < 8:
        raise NumericalError("too few words to estimate the exponent")

    def counting_slope(window_lo: float):
        tmax = alld[-1] * 0.999
        ts = np.linspace(window_lo * tmax, tmax, 25)
        nt = np.searchsorted(alld, ts, side="right") + 1.0  # identity included
        A = np.vstack([ts, np.ones_like(ts)]).T
        coef, res, *_ = np.linalg.lstsq(A, np.log(nt), rcond=None)
        resid = float(np.sqrt(np.mean((A @ coef - np.log(nt)) ** 2)))
        span = ts[-1] - ts[0]
        return float(coef[0]), resid / span

    slope_a, err_a = counting_slope(0.4)
    slope_b, _ = counting_slope(0.55)
    # window sensitivity scaled up: for polynomial (non-exponential) growth the
    # local slope drifts like 1/T and the drift between windows underestimates
    # the remaining bias by roughly the window/extrapolation ratio
    unc_count = max(err_a, 2.5 * abs(slope_a - slope_b)) + 1e-4

    def shell_ratio_exceeds_one(s: float, tail: int) -> bool:
        sums = [float(np.sum(np.exp(-s * d))) for d in shells[1:]]
        return sums[-(tail + 1)] < sums[-tail]

    def bisect(tail: int) -> float:
        lo, hi = 1e-4, 0.9999
        while hi - lo > bisection_tol:
            mid = 0.5 * (lo + hi)
            if shell_ratio_exceeds_one(mid, tail):
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    d_last = bisect(1)
    d_prev = bisect(2)
    unc_bis = max(bisection_tol, abs(d_last - d_prev)) + 1e-4

    counting = DeltaEstimate(slope_a, "counting-regression", unc_count)
    bisection = DeltaEstimate(d_last, "poincare-bisection", unc_bis)
    gap = abs(counting.value - bisection.value)
    if gap > 3.0 * (unc_count + unc_bis):
        raise DeltaDisagreementError(
            f"exponent estimators disagree: {counting.value:.4f} vs "
            f"{bisection.value:.4f} (combined uncertainty {unc_count + unc_bis:.4f})"
        )
    value = 0.5 * (counting.value + bisection.value)
    unc = max(unc_count, unc_bis, 0.5 * gap + 1e-4)
    return DeltaResult(counting, bisection, value, unc)


@dataclass(frozen=True)
class ClosedGeodesic:
    """Conjugacy class of a hyperbolic element, keyed by its cyclic word."""

    cyclic_word: tuple
    length: float
    primitive: bool
    multiplicity_base: tuple
    matrix: DiskIsometry
    holonomy: float = 1.0  # trivial in dimension 1

    @property
    def power(self) -> int:
        return len(self.cyclic_word) // len(self.multiplicity_base)


def _canonical_rotation(letters: tuple) -> tuple:
    rots = [letters[i:] + letters[:i] for i in range(len(letters))]
    return min(rots)


def _primitive_root(letters: tuple) -> tuple:
    n = len(letters)
    for p in range(1, n):
        if n % p == 0 and letters[:p] * (n // p) == letters:
            return letters[:p]
    return letters


def enumerate_geodesics(group: SchottkyGroup, max_length: float,
                        cap: int = WORD_CAP_DEFAULT) -> list:
    """All closed geodesics with translation length <= max_length.

    One entry per conjugacy class (canonical form: lexicographically least
    cyclic rotation of the cyclically reduced word); inverse classes are kept
    distinct and non-primitive powers are included and flagged.
    """
    if group.rank == 0:
        return []
    letter_map = group.letter_map()
    out = {}
    word_length = 0
    count = 0
    while True:
        word_length += 1
        shell_min = math.inf
        found_any = False
        for letters in _cyclically_reduced_words(group.rank, word_length):
            count += 1
            if count > cap:
                raise ResourceLimitError(f"geodesic enumeration exceeded cap {cap}")
            canon = _canonical_rotation(letters)
            if canon in out:
                continue
            g = DiskIsometry.identity()
            for lab in canon:
                g = g @ letter_map[lab]
            if not g.is_hyperbolic():
                continue
            ell = translation_length(g)
            shell_min = min(shell_min, ell)
            found_any = True
            if ell > max_length:
                continue
            base = _primitive_root(canon)
            out[canon] = ClosedGeodesic(
                cyclic_word=canon,
                length=ell,
                primitive=(base == canon),
                multiplicity_base=_canonical_rotation(base),
                matrix=g,
            )
        if not found_any or shell_min > max_length:
            break
    return sorted(out.values(), key=lambda geo: (geo.length, geo.cyclic_word))


def _cyclically_reduced_words(k: int, length: int):
    """All reduced words of given length whose first letter is not the inverse of the last."""
    labels = [i for i in range(1, k + 1)] + [-i for i in range(1, k + 1)]

    def rec(prefix):
        if len(prefix) == length:
            if length == 1 or prefix[0] != -prefix[-1]:
                yield tuple(prefix)
            return
        for lab in labels:
            if prefix and lab == -prefix[-1]:
                continue
            prefix.append(lab)
            yield from rec(prefix)
            prefix.pop()

    yield from rec([])


def point_in_fundamental_domain(group: SchottkyGroup, m) -> bool:
    """True iff m lies outside all closed pairing disks."""
    z = complex(m) if not isinstance(m, complex) else m
    return not any(c.contains(z) for c in group.circles)


def reduce_to_fundamental_domain(group: SchottkyGroup, m, max_steps: int = 10_000):
    """Map m into the fundamental domain by ping-pong; returns (point, letters).

    `letters` is the reduced word w (in matrix-product order) with
    w(m) = returned point.
    """
    z = complex(m)
    letter_map = group.letter_map()
    applied = []
    for _ in range(max_steps):
        for idx, c in enumerate(group.circles):
            if c.contains(z):
                # disk 2i is the isometric circle of generator i+1, whose
                # action maps the disk interior outside its partner circle
                lab = idx // 2 + 1 if idx % 2 == 0 else -(idx // 2 + 1)
                z = complex(apply(letter_map[lab], z))
                applied.append(lab)
                break
        else:
            return z, tuple(reversed(applied))
    raise NumericalError("fundamental-domain reduction did not terminate")
