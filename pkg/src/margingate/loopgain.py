"""Minor-loop gain construction and update algebra.

The loop gain is the ratio of network-side impedance to PPM impedance.
Adding a plant in parallel updates it through the impedance ratio rho and
the sensitivity factor F = 1/(1+rho):  L_new = L_old * F. Both the direct
quotient and the factored update are first-class so they can be
cross-checked against each other.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, SingularSensitivity, ZeroDenominator
from .freqresp import FrequencyResponse

__all__ = [
    "LoopGainDerivation",
    "LoopGain",
    "loop_gain",
    "rho",
    "update_loop_gain",
    "one_plus",
    "consistency_error",
]

_SENSITIVITY_ATOL = 1e-12
_REL_FLOOR = 1e-30


@dataclass(frozen=True)
class LoopGainDerivation:
    """How a loop-gain curve was produced.

    ``direct`` means a pointwise impedance quotient; ``factored`` means the
    update through 1/(1+rho). ``inputs`` records the labels of the source
    curves.
    """

    method: str
    inputs: tuple[str, ...]

    def __post_init__(self):
        if self.method not in ("direct", "factored"):
            raise ValueError(f"method must be direct or factored, got {self.method!r}")
        object.__setattr__(self, "inputs", tuple(self.inputs))


@dataclass(frozen=True)
class LoopGain:
    """A dimensionless loop-gain curve plus its derivation record.

    Factored curves also expose the sensitivity factor F = 1/(1+rho).
    """

    response: FrequencyResponse
    derivation: LoopGainDerivation
    sensitivity: FrequencyResponse | None = None


def _require_same_grid(a: FrequencyResponse, b: FrequencyResponse) -> None:
    if a.grid != b.grid:
        raise GridMismatch("curves are not on a common grid; align() first")


def _merged_meta(a: FrequencyResponse, b: FrequencyResponse) -> dict:
    return {
        "sequence": a.sequence if a.sequence == b.sequence else "untagged",
        "operating_point": a.operating_point
        if a.operating_point == b.operating_point
        else "",
    }


def loop_gain(
    z_net: FrequencyResponse, z_ppm: FrequencyResponse, label: str = ""
) -> LoopGain:
    """Minor-loop gain Z_net / Z_ppm (direct construction)."""
    _require_same_grid(z_net, z_ppm)
    if np.any(z_ppm.samples == 0):
        raise ZeroDenominator("PPM impedance has a zero sample")
    resp = FrequencyResponse(
        grid=z_net.grid,
        samples=z_net.samples / z_ppm.samples,
        unit="dimensionless",
        label=label or f"{z_net.label or 'Z_net'}/{z_ppm.label or 'Z_ppm'}",
        **_merged_meta(z_net, z_ppm),
    )
    return LoopGain(resp, LoopGainDerivation("direct", (z_net.label, z_ppm.label)))


def rho(
    z_net_old: FrequencyResponse, z_new: FrequencyResponse, label: str = "rho"
) -> FrequencyResponse:
    """Impedance ratio Z_net,old / Z_new of the newly paralleled plant."""
    _require_same_grid(z_net_old, z_new)
    if np.any(z_new.samples == 0):
        raise ZeroDenominator("new PPM impedance has a zero sample")
    return FrequencyResponse(
        grid=z_net_old.grid,
        samples=z_net_old.samples / z_new.samples,
        unit="dimensionless",
        label=label,
        **_merged_meta(z_net_old, z_new),
    )


def one_plus(ratio: FrequencyResponse, label: str = "1+rho") -> FrequencyResponse:
    """The curve 1 + rho, interpolated as a curve in its own right.

    Margin decomposition and the r = |1+rho| diagnostic must interpolate
    1+rho itself (not add 1 to interpolated rho) to stay consistent with
    the factored loop-gain curve between grid points.
    """
    return ratio.with_samples(1.0 + ratio.samples, unit="dimensionless", label=label)


def update_loop_gain(l_old: FrequencyResponse, ratio: FrequencyResponse) -> LoopGain:
    """Updated loop gain L_old / (1 + rho), with the sensitivity factor.

    Raises ``SingularSensitivity`` where |1+rho| falls below 1e-12.
    """
    _require_same_grid(l_old, ratio)
    denom = 1.0 + ratio.samples
    if float(np.min(np.abs(denom))) <= _SENSITIVITY_ATOL:
        raise SingularSensitivity("|1+rho| vanishes on the grid")
    f_samples = 1.0 / denom
    sens = FrequencyResponse(
        grid=l_old.grid,
        samples=f_samples,
        unit="dimensionless",
        label="F",
        **_merged_meta(l_old, ratio),
    )
    resp = FrequencyResponse(
        grid=l_old.grid,
        samples=l_old.samples * f_samples,
        unit="dimensionless",
        label="L_new",
        **_merged_meta(l_old, ratio),
    )
    return LoopGain(
        resp,
        LoopGainDerivation("factored", (l_old.label, ratio.label)),
        sensitivity=sens,
    )


def consistency_error(
    l_direct: FrequencyResponse, l_factored: FrequencyResponse
) -> float:
    """Worst pointwise relative deviation between two loop-gain curves.

    max over frequency of |direct - factored| / max(|direct|, 1e-30); the
    floor keeps the metric defined where the loop gain is near zero.
    """
    _require_same_grid(l_direct, l_factored)
    num = np.abs(l_direct.samples - l_factored.samples)
    den = np.maximum(np.abs(l_direct.samples), _REL_FLOOR)
    return float(np.max(num / den))
