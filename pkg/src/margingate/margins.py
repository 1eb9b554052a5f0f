"""Crossover detection and phase/gain margin computation.

Gain crossovers are the frequencies where |L| = 1; the phase margin is
180 deg plus the loop-gain angle there, normalized to (-180, 180]. Phase
crossovers are where the unwrapped phase passes through -180 deg plus any
multiple of 360; the gain margin is 1/|L| there. Margins can also be
decomposed through the pre-connection loop gain:

    PM_new = (180 + angle L_old) - angle(1 + rho)
    GM_new = |1 + rho| / |L_old|

evaluated at the new crossover frequencies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import KindMismatch, SingularSensitivity
from .freqresp import (
    FrequencyResponse,
    normalize_deg,
    principal_angle_deg,
    value_at,
)
from .loopgain import one_plus
from .speclimit import MarginPolicy

__all__ = [
    "CrossoverPoint",
    "MarginSummary",
    "MarginDecomposition",
    "find_crossovers",
    "margin_at",
    "decompose_margins",
    "summarize_margins",
]

GAIN_MAG_TOL = 1e-9       # | |L| - 1 | at a refined gain crossover
PHASE_ANGLE_TOL = 1e-6    # deg from -180 at a refined phase crossover
_MERGE_RTOL = 1e-6        # crossovers closer than this (relative) merge
_BISECT_MAX_ITER = 200


def _angle_from_minus180(z: complex) -> float:
    """Absolute angular distance (deg) of z's angle from -180, mod 360."""
    return abs(normalize_deg(principal_angle_deg(z) + 180.0))


@dataclass(frozen=True)
class CrossoverPoint:
    """A gain or phase crossover with the interpolated loop-gain value.

    Gain kind carries the phase margin; phase kind carries the gain margin
    in linear and dB form.
    """

    kind: str
    f_hz: float
    l_value: complex
    pm_deg: float | None = None
    gm_lin: float | None = None
    gm_db: float | None = None

    def __post_init__(self):
        if self.kind == "gain":
            if abs(abs(self.l_value) - 1.0) >= GAIN_MAG_TOL:
                raise KindMismatch("gain crossover value not on the unit circle")
            if self.pm_deg is None or not (-180.0 < self.pm_deg <= 180.0):
                raise KindMismatch("gain crossover needs pm_deg in (-180, 180]")
        elif self.kind == "phase":
            if _angle_from_minus180(self.l_value) >= PHASE_ANGLE_TOL:
                raise KindMismatch("phase crossover value not at -180 deg")
            if self.gm_lin is None or self.gm_db is None:
                raise KindMismatch("phase crossover needs gm_lin and gm_db")
        else:
            raise ValueError(f"kind must be gain or phase, got {self.kind!r}")


@dataclass(frozen=True)
class MarginSummary:
    """All crossovers of a loop gain plus worst cases and policy verdict."""

    crossovers: tuple[CrossoverPoint, ...]
    worst_pm: CrossoverPoint | None
    worst_gm: CrossoverPoint | None
    policy: MarginPolicy
    verdict: str


@dataclass(frozen=True)
class MarginDecomposition:
    """Margins at one frequency expressed through the old loop gain."""

    f_hz: float
    pm_old_newgc_deg: float
    angle_one_plus_rho_deg: float
    pm_new_deg: float
    gm_new_lin: float
    abs_one_plus_rho: float
    l_old_mag: float


def margin_at(l_value: complex, kind: str):
    """Margin from an interpolated loop-gain value at a crossover.

    Gain kind returns the phase margin in degrees (normalized to
    (-180, 180]); phase kind returns ``(gm_lin, gm_db)``. The value must
    satisfy the invariants of its kind, else ``KindMismatch``.
    """
    if kind == "gain":
        if abs(abs(l_value) - 1.0) >= GAIN_MAG_TOL:
            raise KindMismatch("value is not on the unit circle")
        return normalize_deg(180.0 + principal_angle_deg(l_value))
    if kind == "phase":
        if _angle_from_minus180(l_value) >= PHASE_ANGLE_TOL:
            raise KindMismatch("value angle is not -180 deg")
        gm_lin = 1.0 / abs(l_value)
        return gm_lin, 20.0 * math.log10(gm_lin)
    raise ValueError(f"kind must be gain or phase, got {kind!r}")


def _bisect_level(
    u_lo: float, u_hi: float, y_lo: float, y_hi: float, level: float
) -> float:
    """Root of the linear interpolant y(u) = level inside [u_lo, u_hi].

    Bisection on the interpolant; robust to the kinks of piecewise-linear
    data and converges far below the 1e-9 relative target.
    """
    a, b = u_lo, u_hi
    slope = (y_hi - y_lo) / (b - a)

    def val(u: float) -> float:
        return y_lo + (u - a) * slope - level

    lo, hi = a, b
    f_lo = val(lo)
    if f_lo == 0.0:
        return lo
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = val(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _detect_levels(
    logf: np.ndarray, y: np.ndarray, levels, grid_pts: np.ndarray
) -> list[float]:
    roots: list[float] = []
    for c in levels:
        r = y - c
        for i in np.flatnonzero(r == 0.0):
            roots.append(float(grid_pts[i]))
        s = np.sign(r)  # sign products cannot underflow like raw products
        for i in np.flatnonzero(s[:-1] * s[1:] < 0.0):
            u = _bisect_level(logf[i], logf[i + 1], y[i], y[i + 1], c)
            roots.append(math.exp(u))
    return roots


def _merge_close(freqs: list[float]) -> list[float]:
    freqs = sorted(freqs)
    out: list[float] = []
    for f in freqs:
        if out and (f - out[-1]) <= _MERGE_RTOL * out[-1]:
            continue
        out.append(f)
    return out


def find_crossovers(l: FrequencyResponse, kind: str) -> list[CrossoverPoint]:
    """All gain or phase crossovers of a loop-gain curve, sorted by f.

    Gain kind: sign changes of log|L|. Phase kind: crossings of the
    unwrapped phase through -180 + k*360 for any integer k (high-order
    loops wrap several times). Brackets on the sample grid are refined by
    bisection on the log-frequency interpolant; near-duplicates within
    1e-6 relative frequency are merged.
    """
    if kind not in ("gain", "phase"):
        raise ValueError(f"kind must be gain or phase, got {kind!r}")
    logf, logmag, phase = l._tables  # raises ZeroMagnitudeSample
    g = l.grid.points

    if kind == "gain":
        levels = [0.0]
        y = logmag
    else:
        k_min = math.ceil((float(phase.min()) + 180.0) / 360.0)
        k_max = math.floor((float(phase.max()) + 180.0) / 360.0)
        levels = [-180.0 + 360.0 * k for k in range(k_min, k_max + 1)]
        y = phase

    points: list[CrossoverPoint] = []
    for f in _merge_close(_detect_levels(logf, y, levels, g)):
        lv = value_at(l, f)
        if kind == "gain":
            pm = normalize_deg(180.0 + principal_angle_deg(lv))
            points.append(CrossoverPoint("gain", f, lv, pm_deg=pm))
        else:
            gm_lin = 1.0 / abs(lv)
            points.append(
                CrossoverPoint(
                    "phase", f, lv, gm_lin=gm_lin, gm_db=20.0 * math.log10(gm_lin)
                )
            )
    return points


def decompose_margins(
    l_old: FrequencyResponse, ratio: FrequencyResponse, f: float, kind: str
) -> MarginDecomposition:
    """Margins at ``f`` expressed through the pre-connection loop gain.

    Interpolates L_old and the curve 1+rho at ``f`` and fills every field;
    the identities against the direct computation on L_new hold to float
    rounding. The stored pm_old_newgc does not assume |L_old| = 1 at ``f``.
    """
    if kind not in ("gain", "phase"):
        raise ValueError(f"kind must be gain or phase, got {kind!r}")
    l_o = value_at(l_old, f)          # OutOfRange if f outside span
    opr = value_at(one_plus(ratio), f)
    if abs(opr) <= 1e-12:
        raise SingularSensitivity(f"|1+rho| vanishes at {f} Hz")
    pm_old = normalize_deg(180.0 + principal_angle_deg(l_o))
    ang = principal_angle_deg(opr)
    return MarginDecomposition(
        f_hz=f,
        pm_old_newgc_deg=pm_old,
        angle_one_plus_rho_deg=ang,
        pm_new_deg=normalize_deg(pm_old - ang),
        gm_new_lin=abs(opr) / abs(l_o),
        abs_one_plus_rho=abs(opr),
        l_old_mag=abs(l_o),
    )


def summarize_margins(l: FrequencyResponse, policy: MarginPolicy) -> MarginSummary:
    """Detect all crossovers, pick worst cases, and apply the policy.

    Verdict: ``violation`` if the worst phase margin is below the minimum
    or any gain margin is below the dB floor; ``caution`` if the worst
    phase margin sits below the caution threshold; else ``compliant``.
    A curve with no gain crossover cannot produce a PM violation.
    """
    gains = find_crossovers(l, "gain")
    phases = find_crossovers(l, "phase")
    crossovers = tuple(sorted(gains + phases, key=lambda c: (c.f_hz, c.kind)))

    worst_pm = min(gains, key=lambda c: c.pm_deg, default=None)
    worst_gm = max(phases, key=lambda c: abs(c.l_value), default=None)

    violation = (worst_pm is not None and worst_pm.pm_deg < policy.pm_min_deg) or any(
        c.gm_db < policy.gm_min_db for c in phases
    )
    if violation:
        verdict = "violation"
    elif worst_pm is not None and worst_pm.pm_deg < policy.pm_cau_deg:
        verdict = "caution"
    else:
        verdict = "compliant"

    return MarginSummary(
        crossovers=crossovers,
        worst_pm=worst_pm,
        worst_gm=worst_gm,
        policy=policy,
        verdict=verdict,
    )
