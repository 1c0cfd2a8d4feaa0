"""Tail-controlled evaluation of the boundary Poincare series.

For a Schottky group the series is evaluated in the reindexed form

    E(s; m, xi) = sum_w exp(s * (phase_{w xi}(m) + log|Dw(xi)|)),

summing over reduced words w by length shells.  For fixed xi the orbit data
(w xi, log|Dw(xi)|) is precomputed once and shared across evaluation points,
which is what makes grid-level evaluation affordable; the truncation tail is
certified from measured shell decay combined with the exponent estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ToleranceNotMetError, XiInLimitSetError
from .geom import SpectralParameter
from .schottky import SchottkyGroup, enumerate_words

# nodes are processed in fixed-size chunks with a fixed reduction order, so
# results do not depend on how many evaluations run or in what grouping
CHUNK = 512


def check_xi_admissible(group: SchottkyGroup, xi: complex, margin: float = 1e-6):
    """Certify that xi keeps an angular margin from every pairing-disk arc.

    The limit set lies inside the union of the boundary arcs cut out by the
    pairing disks, so arc clearance implies clearance from the limit set.
    """
    ang = math.atan2(complex(xi).imag, complex(xi).real)
    for c in group.circles:
        dist = abs((ang - c.angle + math.pi) % (2 * math.pi) - math.pi)
        if dist <= c.half_width + margin:
            raise XiInLimitSetError(
                f"boundary point at angle {ang:.6f} is within {dist - c.half_width:.2e} "
                "of a pairing arc"
            )


@dataclass(frozen=True)
class OrbitData:
    """Per-word boundary data for a fixed xi: images, conformal factors, shells."""

    xi: complex
    eta: np.ndarray          # w(xi), unit complex per word
    logD: np.ndarray         # log |Dw(xi)|
    displacements: np.ndarray
    shell_start: np.ndarray  # index where each word-length shell begins

    @property
    def max_word_length(self) -> int:
        return len(self.shell_start) - 1

    def shell_slice(self, length: int) -> slice:
        start = self.shell_start[length]
        end = self.shell_start[length + 1] if length + 1 < len(self.shell_start) else len(self.eta)
        return slice(start, end)


def build_orbit(group: SchottkyGroup, xi: complex, max_word_length: int,
                margin: float = 1e-6) -> OrbitData:
    xi = complex(xi)
    xi /= abs(xi)
    check_xi_admissible(group, xi, margin)
    eta, logD, disp, lengths = [], [], [], []
    for w in enumerate_words(group, max_word_length=max_word_length):
        den = w.b.conjugate() * xi + w.a.conjugate()
        eta.append((w.a * xi + w.b) / den)
        logD.append(-2.0 * math.log(abs(den)))
        disp.append(w.displacement)
        lengths.append(w.length)
    lengths = np.array(lengths)
    shell_start = np.searchsorted(lengths, np.arange(max_word_length + 1))
    return OrbitData(
        xi=xi,
        eta=np.array(eta),
        logD=np.array(logD),
        displacements=np.array(disp),
        shell_start=shell_start,
    )


def envelope_bound(region_radius: float, sig: float) -> float:
    """sup over |m| <= R of the elementary kernel at real exponent sig."""
    R = region_radius
    return ((1.0 + R) / (4.0 * (1.0 - R))) ** sig


def tail_bound(orbit: OrbitData, sig: float, region_radius: float,
               delta_upper: float) -> float:
    """Bound on the dropped tail of the series at real exponent sig.

    Combines the measured decay ratio of the last shells of sum exp(sig logD)
    with the theoretical shell ratio exp(-(sig - delta') Delta) at the
    estimated exponent; the larger (more pessimistic) ratio is used.
    """
    if len(orbit.eta) == 1:
        return 0.0  # trivial group: the single term is the whole series
    L = orbit.max_word_length
    if L < 3:
        raise ToleranceNotMetError("need at least three shells for a tail bound")
    sums = [float(np.sum(np.exp(sig * orbit.logD[orbit.shell_slice(j)])))
            for j in (L - 2, L - 1, L)]
    gaps = [float(np.min(orbit.displacements[orbit.shell_slice(j)]))
            for j in (L - 1, L)]
    measured = max(sums[2] / sums[1], sums[1] / sums[0])
    theoretical = math.exp(-(sig - delta_upper) * max(gaps[1] - gaps[0], 0.0)) \
        if sig > delta_upper else math.inf
    ratio = max(measured, theoretical if math.isfinite(theoretical) else measured)
    if ratio >= 0.95:
        raise ToleranceNotMetError(
            f"shell ratio {ratio:.3f} too close to 1; series numerically divergent"
        )
    return envelope_bound(region_radius, sig) * sums[2] * ratio / (1.0 - ratio)


def _phase_matrix(z_chunk: np.ndarray, P_chunk: np.ndarray, orbit: OrbitData):
    """x[i, j] = phase_{eta_j}(z_i) + logD_j for a chunk of points."""
    return (
        P_chunk[:, None]
        - 2.0 * np.log(np.abs(z_chunk[:, None] - orbit.eta[None, :]))
        + orbit.logD[None, :]
    )


def series_on_nodes(orbit: OrbitData, s, nodes: np.ndarray) -> np.ndarray:
    """E(s; m, xi) on an array of interior points, fixed summation order."""
    if isinstance(s, SpectralParameter):
        s = s.s
    s = complex(s)
    z = np.asarray(nodes, dtype=complex).ravel()
    P = np.log1p(-np.abs(z) ** 2) - math.log(4.0)
    out = np.empty(len(z), dtype=complex)
    for i0 in range(0, len(z), CHUNK):
        x = _phase_matrix(z[i0:i0 + CHUNK], P[i0:i0 + CHUNK], orbit)
        out[i0:i0 + CHUNK] = np.sum(np.exp(s * x), axis=1)
    return out.reshape(np.shape(nodes))


def weighted_moments(orbit: OrbitData, nodes: np.ndarray, weights: np.ndarray,
                     t_values) -> tuple:
    """For each t: sum_i weights_i |E(1/2 + it; m_i)|^2, plus sum_i weights_i E(1; m_i).

    The harmonic value reuses the same phase matrix, so the diagonal part of
    |E|^2 and the reference density are consistent by construction.
    """
    z = np.asarray(nodes, dtype=complex).ravel()
    wgt = np.asarray(weights, dtype=float).ravel()
    ts = np.asarray(t_values, dtype=float)
    P = np.log1p(-np.abs(z) ** 2) - math.log(4.0)
    vals2 = np.zeros(len(ts))
    valh = 0.0
    for i0 in range(0, len(z), CHUNK):
        x = _phase_matrix(z[i0:i0 + CHUNK], P[i0:i0 + CHUNK], orbit)
        amp = np.exp(0.5 * x)
        wc = wgt[i0:i0 + CHUNK]
        valh += float(np.dot(wc, np.einsum("ij,ij->i", amp, amp)))
        for q, t in enumerate(ts):
            ph = t * x
            re = np.sum(amp * np.cos(ph), axis=1)
            im = np.sum(amp * np.sin(ph), axis=1)
            vals2[q] += float(np.dot(wc, re * re + im * im))
    return vals2, valh


@dataclass(frozen=True)
class SeriesEvaluation:
    value: complex
    truncation_length: int
    tail_bound: float
    terms_used: int


def _required_length(group, xi, sig, tol, region_radius, delta_upper,
                     start_length=5, max_length=14):
    """Smallest orbit depth whose certified tail is below tol."""
    L = start_length
    orbit = build_orbit(group, xi, L)
    while True:
        try:
            tb = tail_bound(orbit, sig, region_radius, delta_upper)
        except ToleranceNotMetError:
            tb = math.inf
        if tb < tol:
            return orbit, tb
        if L >= max_length:
            raise ToleranceNotMetError(
                f"series tail {tb:.3e} still above tol {tol:.3e} at depth {max_length}",
                achieved=tb,
            )
        L += 1
        orbit = build_orbit(group, xi, L)


def eisenstein(group: SchottkyGroup, s, m, xi, tol: float = 1e-8,
               delta_upper: float = None, orbit: OrbitData = None) -> SeriesEvaluation:
    """Tail-certified evaluation of the series at one interior point.

    `s` is a SpectralParameter (critical line) or a real exponent above the
    group's critical exponent; `delta_upper` is the exponent estimate plus its
    uncertainty (estimated on the fly when not provided).
    """
    if isinstance(s, SpectralParameter):
        sval = s.s
    else:
        sval = complex(s)
    z = complex(m)
    if delta_upper is None:
        delta_upper = _default_delta_upper(group)
    sig = sval.real
    if sig <= delta_upper:
        raise ValueError(f"Re s = {sig} not above the exponent bound {delta_upper}")
    if orbit is None:
        orbit, tb = _required_length(group, xi, sig, tol, abs(z), delta_upper)
    else:
        check_xi_admissible(group, complex(orbit.xi))
        tb = tail_bound(orbit, sig, abs(z), delta_upper)
        if tb >= tol:
            raise ToleranceNotMetError(
                f"supplied orbit depth gives tail {tb:.3e} > tol {tol:.3e}", achieved=tb
            )
    value = complex(series_on_nodes(orbit, sval, np.array([z]))[0])
    return SeriesEvaluation(
        value=value,
        truncation_length=orbit.max_word_length,
        tail_bound=tb,
        terms_used=len(orbit.eta),
    )


def _default_delta_upper(group: SchottkyGroup) -> float:
    if group.rank == 0:
        return 0.0
    from .schottky import estimate_delta

    res = estimate_delta(group, max_word_length=7)
    return res.upper


def harmonic_density(group: SchottkyGroup, m, xi, tol: float = 1e-8,
                     delta_upper: float = None, orbit: OrbitData = None) -> SeriesEvaluation:
    """The series at real exponent 1 (n = 1): a positive harmonic density."""
    ev = eisenstein(group, 1.0, m, xi, tol=tol, delta_upper=delta_upper, orbit=orbit)
    val = ev.value.real
    if val <= 0:
        raise ToleranceNotMetError("harmonic density evaluated nonpositive")
    return SeriesEvaluation(val, ev.truncation_length, ev.tail_bound, ev.terms_used)


def gradient_angles(z_chunk: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Direction angle of the phase gradient d phase_{eta_j} at z_i (shape i x j)."""
    z = z_chunk[:, None]
    grad = -2.0 * z / (1.0 - np.abs(z) ** 2) - 2.0 * (z - eta[None, :]) / np.abs(z - eta[None, :]) ** 2
    return np.angle(grad)


def mu_functional(orbit: OrbitData, symbol, nodes: np.ndarray, weights: np.ndarray) -> float:
    """Phase-space functional: quadrature of sum_j a(m, angle_j(m)) e^{phase_j + logD_j}.

    `symbol` is a vectorized callable symbol(z, theta); the n = 1 exponent
    makes the inner series rapidly convergent.
    """
    z = np.asarray(nodes, dtype=complex).ravel()
    wgt = np.asarray(weights, dtype=float).ravel()
    P = np.log1p(-np.abs(z) ** 2) - math.log(4.0)
    total = 0.0
    for i0 in range(0, len(z), CHUNK):
        zc = z[i0:i0 + CHUNK]
        x = _phase_matrix(zc, P[i0:i0 + CHUNK], orbit)
        theta = gradient_angles(zc, orbit.eta)
        vals = np.sum(symbol(zc[:, None], theta) * np.exp(x), axis=1)
        total += float(np.dot(wgt[i0:i0 + CHUNK], vals))
    return total
