"""Complex frequency-response curves.

Data model, text-table I/O, log-frequency interpolation, grid alignment and
phase unwrapping. Everything downstream (impedances, loop gains, ratios)
is a ``FrequencyResponse``; the ``unit`` field distinguishes ohm curves
from dimensionless ones.

Objects are immutable after construction and safe to share across threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    DisjointSpans,
    EmptyTable,
    NonFiniteValue,
    NonMonotonicFrequency,
    OutOfRange,
    UnknownHeader,
    ZeroMagnitudeSample,
)

__all__ = [
    "FrequencyGrid",
    "FrequencyResponse",
    "PhaseSeries",
    "log_grid",
    "parse_response",
    "write_response",
    "value_at",
    "values_at",
    "align",
    "unwrap_phase",
    "normalize_deg",
    "principal_angle_deg",
]

UNITS = ("ohm", "dimensionless")
SEQUENCES = ("positive", "negative", "untagged")

# header -> (unit, row form)
_HEADERS = {
    "freq_hz,re_ohm,im_ohm": ("ohm", "rect"),
    "freq_hz,mag_ohm,phase_deg": ("ohm", "polar"),
    "freq_hz,re,im": ("dimensionless", "rect"),
    "freq_hz,mag,phase_deg": ("dimensionless", "polar"),
}
_META_KEYS = ("sequence", "label", "operating_point")


def normalize_deg(angle: float) -> float:
    """Reduce an angle in degrees to the interval (-180, 180]."""
    r = math.fmod(angle + 180.0, 360.0)
    if r <= 0.0:
        r += 360.0
    return r - 180.0


def principal_angle_deg(z: complex) -> float:
    """Principal angle of a complex value in degrees, in (-180, 180]."""
    return normalize_deg(math.degrees(math.atan2(z.imag, z.real)))


def _unwrap_deg(principal: np.ndarray) -> np.ndarray:
    """Unwrap a principal-phase series (degrees).

    Each step is chosen within +-180 deg of its predecessor; a step of
    exactly 180 deg resolves toward the negative side (capacitive-to-
    inductive transitions wrap downward).
    """
    d = np.diff(principal)
    d = d - 360.0 * np.floor((d + 180.0) / 360.0)  # -> [-180, 180)
    out = np.empty_like(principal)
    out[0] = principal[0]
    out[1:] = principal[0] + np.cumsum(d)
    return out


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing, positive frequency axis in Hz (length >= 2)."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise NonMonotonicFrequency("grid needs at least two frequencies")
        if not np.all(np.isfinite(pts)):
            raise NonFiniteValue("grid contains non-finite frequencies")
        if pts[0] <= 0.0 or np.any(np.diff(pts) <= 0.0):
            raise NonMonotonicFrequency(
                "frequencies must be positive and strictly increasing"
            )
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.size

    @property
    def span(self) -> tuple[float, float]:
        return float(self.points[0]), float(self.points[-1])

    def __eq__(self, other):
        if not isinstance(other, FrequencyGrid):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    __hash__ = None


def log_grid(start_hz: float, stop_hz: float, points: int) -> FrequencyGrid:
    """Logarithmically spaced grid with exact endpoints."""
    pts = np.geomspace(start_hz, stop_hz, points)
    pts[0], pts[-1] = start_hz, stop_hz
    return FrequencyGrid(pts)


@dataclass(frozen=True, eq=False)
class FrequencyResponse:
    """A complex-valued curve over a frequency grid.

    Houses impedances (unit ``ohm``) and loop gains / impedance ratios
    (unit ``dimensionless``). ``sequence`` carries positive/negative
    sequence tagging as metadata only; ``operating_point`` is free text
    such as ``P=1 pu, Q=0 pu``.
    """

    grid: FrequencyGrid
    samples: np.ndarray
    unit: str = "ohm"
    sequence: str = "untagged"
    label: str = ""
    operating_point: str = ""

    def __post_init__(self):
        z = np.asarray(self.samples, dtype=complex)
        if z.ndim != 1 or z.size != len(self.grid):
            raise NonFiniteValue("samples length must equal grid length")
        if not np.all(np.isfinite(z.real)) or not np.all(np.isfinite(z.imag)):
            raise NonFiniteValue("samples contain NaN or infinite components")
        if self.unit not in UNITS:
            raise ValueError(f"unit must be one of {UNITS}, got {self.unit!r}")
        if self.sequence not in SEQUENCES:
            raise ValueError(
                f"sequence must be one of {SEQUENCES}, got {self.sequence!r}"
            )
        for name in ("label", "operating_point"):
            value = getattr(self, name)
            if "\n" in value or "\r" in value:
                raise ValueError(f"{name} must be a single line")
            # surrounding whitespace would not survive the file round-trip
            object.__setattr__(self, name, value.strip())
        z = z.copy()
        z.setflags(write=False)
        object.__setattr__(self, "samples", z)

    def __eq__(self, other):
        if not isinstance(other, FrequencyResponse):
            return NotImplemented
        return (
            self.grid == other.grid
            and np.array_equal(self.samples, other.samples)
            and self.unit == other.unit
            and self.sequence == other.sequence
            and self.label == other.label
            and self.operating_point == other.operating_point
        )

    __hash__ = None

    def with_samples(
        self, samples, unit: str | None = None, label: str | None = None
    ) -> "FrequencyResponse":
        """Same grid and metadata, new sample values."""
        return FrequencyResponse(
            grid=self.grid,
            samples=samples,
            unit=self.unit if unit is None else unit,
            sequence=self.sequence,
            label=self.label if label is None else label,
            operating_point=self.operating_point,
        )

    @cached_property
    def _tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Interpolation tables: (log f, log |Z|, unwrapped phase deg)."""
        mag = np.abs(self.samples)
        if np.any(mag == 0.0):
            raise ZeroMagnitudeSample(
                "curve has a zero-magnitude sample; log interpolation undefined"
            )
        logf = np.log(self.grid.points)
        logmag = np.log(mag)
        phase = _unwrap_deg(np.degrees(np.angle(self.samples)))
        return logf, logmag, phase


@dataclass(frozen=True)
class PhaseSeries:
    """Unwrapped phase in degrees over a frequency grid."""

    grid: FrequencyGrid
    degrees: np.ndarray

    def __post_init__(self):
        deg = np.asarray(self.degrees, dtype=float)
        if deg.ndim != 1 or deg.size != len(self.grid):
            raise NonFiniteValue("phase length must equal grid length")
        if not np.all(np.isfinite(deg)):
            raise NonFiniteValue("phase contains non-finite values")
        # ties at exactly 180 deg resolve to a -180 step, hence <=
        if np.any(np.abs(np.diff(deg)) > 180.0):
            raise ValueError("phase series is not unwrapped (step > 180 deg)")
        deg = deg.copy()
        deg.setflags(write=False)
        object.__setattr__(self, "degrees", deg)


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------

def parse_response(data: bytes) -> FrequencyResponse:
    """Parse a comma-separated impedance / loop-gain table.

    Recognized headers: ``freq_hz,re_ohm,im_ohm``, ``freq_hz,mag_ohm,phase_deg``
    (unit ohm) and ``freq_hz,re,im``, ``freq_hz,mag,phase_deg``
    (dimensionless). Comment lines start with ``#`` and may carry
    ``sequence=``, ``label=`` and ``operating_point=`` metadata. Phases are
    in degrees; mag/phase rows are converted to rectangular form.
    """
    text = data.decode("utf-8")
    meta: dict[str, str] = {}
    header: tuple[str, str] | None = None
    rows: list[tuple[float, float, float]] = []

    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            key, sep, value = body.partition("=")
            if sep and key.strip() in _META_KEYS:
                meta[key.strip()] = value.strip()
            continue
        if header is None:
            key = ",".join(tok.strip() for tok in line.split(","))
            if key not in _HEADERS:
                raise UnknownHeader(f"unrecognized header {line!r}")
            header = _HEADERS[key]
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise NonFiniteValue(f"malformed row {line!r}")
        try:
            f, a, b = (float(p) for p in parts)
        except ValueError as exc:
            raise NonFiniteValue(f"unparseable row {line!r}") from exc
        if not (math.isfinite(f) and math.isfinite(a) and math.isfinite(b)):
            raise NonFiniteValue(f"non-finite value in row {line!r}")
        rows.append((f, a, b))

    if header is None:
        raise EmptyTable("no table content found")
    if not rows:
        raise EmptyTable("no data rows after header")

    unit, form = header
    freqs = np.array([r[0] for r in rows])
    if form == "polar":
        mag = np.array([r[1] for r in rows])
        ph = np.radians([r[2] for r in rows])
        samples = mag * np.cos(ph) + 1j * mag * np.sin(ph)
    else:
        samples = np.array([complex(r[1], r[2]) for r in rows])

    return FrequencyResponse(
        grid=FrequencyGrid(freqs),
        samples=samples,
        unit=unit,
        sequence=meta.get("sequence", "untagged"),
        label=meta.get("label", ""),
        operating_point=meta.get("operating_point", ""),
    )


def write_response(resp: FrequencyResponse) -> bytes:
    """Serialize to the rectangular table form.

    Values are printed with 17 significant digits, which round-trips IEEE
    doubles exactly. Output is deterministic: two writes of the same
    response are byte-identical.
    """
    lines: list[str] = []
    if resp.sequence != "untagged":
        lines.append(f"# sequence={resp.sequence}")
    if resp.label:
        lines.append(f"# label={resp.label}")
    if resp.operating_point:
        lines.append(f"# operating_point={resp.operating_point}")
    lines.append("freq_hz,re_ohm,im_ohm" if resp.unit == "ohm" else "freq_hz,re,im")
    for f, z in zip(resp.grid.points, resp.samples):
        lines.append(f"{f:.17g},{z.real:.17g},{z.imag:.17g}")
    return ("\n".join(lines) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# interpolation
# ---------------------------------------------------------------------------

def value_at(resp: FrequencyResponse, f: float) -> complex:
    """Evaluate the curve at ``f`` Hz.

    Returns the stored sample bit-for-bit when ``f`` is a grid point.
    Between points, log-magnitude and unwrapped phase are interpolated
    linearly in log-frequency (Bode-plot behavior) and recombined. No
    extrapolation: ``f`` outside the grid span raises ``OutOfRange``.
    """
    g = resp.grid.points
    if not (g[0] <= f <= g[-1]):
        raise OutOfRange(f"{f} Hz outside span [{g[0]}, {g[-1]}] Hz")
    i = int(np.searchsorted(g, f))
    if i < g.size and g[i] == f:
        return complex(resp.samples[i])
    logf, logmag, phase = resp._tables
    x = math.log(f)
    m = math.exp(float(np.interp(x, logf, logmag)))
    p = math.radians(float(np.interp(x, logf, phase)))
    return complex(m * math.cos(p), m * math.sin(p))


def values_at(resp: FrequencyResponse, freqs) -> np.ndarray:
    """Vectorized ``value_at`` for an array of frequencies."""
    f = np.asarray(freqs, dtype=float)
    g = resp.grid.points
    if f.size == 0:
        return np.zeros(0, dtype=complex)
    if f.min() < g[0] or f.max() > g[-1]:
        raise OutOfRange(
            f"frequencies outside span [{g[0]}, {g[-1]}] Hz"
        )
    idx = np.searchsorted(g, f)
    idx_c = np.minimum(idx, g.size - 1)
    hit = g[idx_c] == f
    if np.all(hit):
        return resp.samples[idx_c].astype(complex)
    logf, logmag, phase = resp._tables
    x = np.log(f)
    m = np.exp(np.interp(x, logf, logmag))
    p = np.radians(np.interp(x, logf, phase))
    out = m * np.cos(p) + 1j * m * np.sin(p)
    out[hit] = resp.samples[idx_c[hit]]
    return out


def align(responses: list[FrequencyResponse]) -> list[FrequencyResponse]:
    """Resample responses onto a shared grid.

    The target grid is the union of all grid points restricted to the
    common span, so no measured point inside the overlap is discarded.
    Responses already on a common grid are returned unchanged; the
    operation is idempotent.
    """
    if not responses:
        return []
    grids = [r.grid.points for r in responses]
    first = grids[0]
    if all(g.size == first.size and np.array_equal(g, first) for g in grids[1:]):
        return list(responses)

    lo = max(g[0] for g in grids)
    hi = min(g[-1] for g in grids)
    if lo > hi:
        raise DisjointSpans(f"no common span (intersection [{lo}, {hi}] Hz)")
    densest = max(grids, key=lambda g: g.size)
    if int(np.count_nonzero((densest >= lo) & (densest <= hi))) < 2:
        raise DisjointSpans(
            "common span holds fewer than two points of the densest grid"
        )

    union = np.unique(np.concatenate(grids))
    union = union[(union >= lo) & (union <= hi)]
    target = FrequencyGrid(union)

    out: list[FrequencyResponse] = []
    for r in responses:
        if np.array_equal(r.grid.points, union):
            out.append(r)
        else:
            out.append(
                FrequencyResponse(
                    grid=target,
                    samples=values_at(r, union),
                    unit=r.unit,
                    sequence=r.sequence,
                    label=r.label,
                    operating_point=r.operating_point,
                )
            )
    return out


def unwrap_phase(resp: FrequencyResponse) -> PhaseSeries:
    """Unwrapped phase of the curve in degrees.

    Starts at the principal phase of the first sample; each subsequent
    value is chosen within +-180 deg of its predecessor.
    """
    mag = np.abs(resp.samples)
    if np.any(mag == 0.0):
        raise ZeroMagnitudeSample("phase of a zero sample is undefined")
    principal = np.degrees(np.angle(resp.samples))
    return PhaseSeries(resp.grid, _unwrap_deg(principal))
