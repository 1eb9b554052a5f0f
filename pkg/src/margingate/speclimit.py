"""Headroom and maximum-allowable-impedance specification.

At each critical frequency the phase-margin headroom of the existing
connection is dPM = PM_old - PM_min. While headroom remains, the new
plant's impedance magnitude must stay below

    Z_limit = |Z_net,old| / (2 * sin(dPM / 2))

a sufficient condition derived from the geometric bound
|r*e^{j*theta} - 1| >= |e^{j*theta} - 1| = 2*|sin(theta/2)|. That bound
needs r = |1+rho| >= 1; frequencies where the diagnostic shows r < 1 are
flagged rather than silently trusted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NonpositiveImpedanceMagnitude, OutOfRange
from .freqresp import FrequencyResponse, normalize_deg, principal_angle_deg, value_at
from .loopgain import one_plus

__all__ = [
    "MarginPolicy",
    "LimitCurve",
    "ComplianceRecord",
    "pm_old_at",
    "impedance_limit",
    "limit_curve",
    "check_compliance",
    "FLAG_PREEXISTING",
    "FLAG_R_CAVEAT",
    "FLAG_UNCONSTRAINED",
]

FLAG_PREEXISTING = "preexisting_violation"
FLAG_R_CAVEAT = "bound_caveat_r_lt_1"
FLAG_UNCONSTRAINED = "unconstrained"

# sine values that are short binary fractions; radians conversion would
# lose the exactness (sin(radians(30)) is one ulp below 1/2)
_SIN_DEG_EXACT = {0.0: 0.0, 30.0: 0.5, 90.0: 1.0, 150.0: 0.5, 180.0: 0.0}


def _sin_deg(x: float) -> float:
    """Sine of an angle in degrees, exact on the 30-degree lattice."""
    r = math.fmod(x, 360.0)
    if r < 0.0:
        r += 360.0
    if r in _SIN_DEG_EXACT:
        return _SIN_DEG_EXACT[r]
    if (r - 180.0) in _SIN_DEG_EXACT:
        return -_SIN_DEG_EXACT[r - 180.0]
    return math.sin(math.radians(x))


@dataclass(frozen=True)
class MarginPolicy:
    """Operator margin thresholds.

    Defaults are the offshore requirement: 15 deg minimum phase margin,
    30 deg caution threshold, 15 dB minimum gain margin.
    """

    pm_min_deg: float = 15.0
    pm_cau_deg: float = 30.0
    gm_min_db: float = 15.0

    def __post_init__(self):
        if not (0.0 < self.pm_min_deg <= self.pm_cau_deg < 180.0):
            raise ValueError(
                "need 0 < pm_min_deg <= pm_cau_deg < 180, got "
                f"({self.pm_min_deg}, {self.pm_cau_deg})"
            )
        if not (self.gm_min_db >= 0.0):
            raise ValueError(f"gm_min_db must be >= 0, got {self.gm_min_db}")

    @property
    def gm_circle_radius(self) -> float:
        """Nyquist-plane radius 10^(-gm_min_db/20) of the GM circle."""
        return 10.0 ** (-self.gm_min_db / 20.0)


@dataclass(frozen=True)
class LimitCurve:
    """Per-frequency maximum allowable impedance with diagnostics.

    ``z_limit_ohm`` entries are None where headroom is exhausted
    (pre-existing violation) and may be ``math.inf`` as an explicit
    no-constraint sentinel. ``r_diag`` carries |1+rho| when rho was
    available, else None.
    """

    freqs: tuple[float, ...]
    z_limit_ohm: tuple[float | None, ...]
    delta_pm_deg: tuple[float, ...]
    z_net_old_mag_ohm: tuple[float, ...]
    r_diag: tuple[float | None, ...]
    flags: tuple[frozenset[str], ...]

    def __post_init__(self):
        n = len(self.freqs)
        for name in ("z_limit_ohm", "delta_pm_deg", "z_net_old_mag_ohm", "r_diag", "flags"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length must match freqs")
        for zl, dpm, zn, fl in zip(
            self.z_limit_ohm, self.delta_pm_deg, self.z_net_old_mag_ohm, self.flags
        ):
            if dpm <= 0.0:
                if FLAG_PREEXISTING not in fl or zl is not None:
                    raise ValueError(
                        "exhausted headroom must be flagged with no limit value"
                    )
            elif FLAG_UNCONSTRAINED not in fl and zl is not None and math.isfinite(zl):
                ref = zn / (2.0 * _sin_deg(dpm / 2.0))
                if abs(zl - ref) > 1e-12 * ref:
                    raise ValueError("limit value inconsistent with its headroom")

    def __len__(self) -> int:
        return len(self.freqs)


@dataclass(frozen=True)
class ComplianceRecord:
    """One Table-style row: measured |Z_new| against the limit."""

    f_hz: float
    z_new_mag_ohm: float
    z_limit_ohm: float | None
    verdict: str

    def __post_init__(self):
        if self.verdict not in ("compliant", "violation"):
            raise ValueError(f"bad verdict {self.verdict!r}")
        if self.z_limit_ohm is not None:
            ok = self.z_new_mag_ohm <= self.z_limit_ohm
            if (self.verdict == "compliant") != ok:
                raise ValueError("verdict inconsistent with magnitudes")


def pm_old_at(l_old: FrequencyResponse, f: float) -> float:
    """Phase margin of the pre-connection loop gain read off at ``f``.

    180 deg plus the interpolated angle, normalized to (-180, 180].
    |L_old| need not be 1 at ``f``; this is the Bode-plot readout used at
    the new (or operator-specified) crossover frequencies.
    """
    return normalize_deg(180.0 + principal_angle_deg(value_at(l_old, f)))


def impedance_limit(
    z_net_old_mag: float, pm_old_deg: float, policy: MarginPolicy
) -> tuple[float | None, float, frozenset[str]]:
    """Maximum allowable new-plant impedance magnitude at one frequency.

    Returns ``(z_limit, delta_pm, flags)``. With headroom exhausted
    (delta_pm <= 0) there is no limit to state: the existing plant already
    violates the requirement, flagged ``preexisting_violation``. Headroom
    of 180 deg or more clamps the sine argument at 90 deg (limit
    |Z_net,old|/2) so the bound stays monotone-conservative, flagged
    ``unconstrained``.
    """
    if not (math.isfinite(z_net_old_mag) and z_net_old_mag > 0.0):
        raise NonpositiveImpedanceMagnitude(
            f"|Z_net,old| must be positive, got {z_net_old_mag!r}"
        )
    delta_pm = pm_old_deg - policy.pm_min_deg
    if delta_pm <= 0.0:
        return None, delta_pm, frozenset({FLAG_PREEXISTING})
    if delta_pm >= 180.0:
        return z_net_old_mag / 2.0, delta_pm, frozenset({FLAG_UNCONSTRAINED})
    z_limit = z_net_old_mag / (2.0 * _sin_deg(delta_pm / 2.0))
    return z_limit, delta_pm, frozenset()


def limit_curve(
    l_old: FrequencyResponse,
    z_net_old: FrequencyResponse,
    freqs,
    policy: MarginPolicy,
    ratio: FrequencyResponse | None = None,
) -> LimitCurve:
    """Evaluate the impedance limit over a set of critical frequencies.

    ``freqs`` is either the detected new gain crossovers or an
    operator-specified critical set. When ``ratio`` (rho) is given, the
    r = |1+rho| diagnostic is recorded and r < 1 raises the
    ``bound_caveat_r_lt_1`` flag: the geometric bound underlying the limit
    is not guaranteed in that regime.
    """
    fs = sorted(set(float(f) for f in freqs))
    opr = one_plus(ratio) if ratio is not None else None

    z_limits: list[float | None] = []
    dpms: list[float] = []
    znet_mags: list[float] = []
    r_diags: list[float | None] = []
    flag_sets: list[frozenset[str]] = []
    for f in fs:
        pm_old = pm_old_at(l_old, f)
        znet_mag = abs(value_at(z_net_old, f))
        z_lim, dpm, flags = impedance_limit(znet_mag, pm_old, policy)
        r = abs(value_at(opr, f)) if opr is not None else None
        if r is not None and r < 1.0:
            flags = flags | {FLAG_R_CAVEAT}
        z_limits.append(z_lim)
        dpms.append(dpm)
        znet_mags.append(znet_mag)
        r_diags.append(r)
        flag_sets.append(flags)

    return LimitCurve(
        freqs=tuple(fs),
        z_limit_ohm=tuple(z_limits),
        delta_pm_deg=tuple(dpms),
        z_net_old_mag_ohm=tuple(znet_mags),
        r_diag=tuple(r_diags),
        flags=tuple(flag_sets),
    )


def check_compliance(
    z_new: FrequencyResponse, limits: LimitCurve
) -> list[ComplianceRecord]:
    """Check |Z_new| against the limit at every limit frequency.

    The verdict is boundary-inclusive: |Z_new| equal to the limit is
    compliant. Frequencies flagged as pre-existing violations yield a
    violation with no limit value.
    """
    g = z_new.grid.points
    for f in limits.freqs:
        if not (g[0] <= f <= g[-1]):
            raise OutOfRange(f"limit frequency {f} Hz outside new-plant span")

    records: list[ComplianceRecord] = []
    for f, z_lim, flags in zip(limits.freqs, limits.z_limit_ohm, limits.flags):
        z_mag = abs(value_at(z_new, f))
        if FLAG_PREEXISTING in flags or z_lim is None:
            records.append(ComplianceRecord(f, z_mag, None, "violation"))
        else:
            verdict = "compliant" if z_mag <= z_lim else "violation"
            records.append(ComplianceRecord(f, z_mag, z_lim, verdict))
    return records
