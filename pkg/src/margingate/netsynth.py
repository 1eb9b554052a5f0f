"""Impedance algebra and synthetic network generation.

Composable element trees (R, L, C, rational, Thevenin, series, parallel)
evaluate to ``FrequencyResponse`` curves. These provide analytic oracles
and reproducible test fixtures standing in for vendor impedance models.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    GenerationFailed,
    ResonanceSingular,
    SingularAtFrequency,
)
from .freqresp import FrequencyGrid, FrequencyResponse, log_grid

__all__ = [
    "NetworkElement",
    "Resistor",
    "Inductor",
    "Capacitor",
    "Rational",
    "Thevenin",
    "Series",
    "Parallel",
    "CaseFixture",
    "eval_network",
    "par",
    "ser",
    "random_case",
    "scale_network",
    "network_to_obj",
    "network_from_obj",
    "network_to_json",
    "network_from_json",
]

_NOMINAL_HZ = 50.0  # Thevenin X/R split is anchored at nominal grid frequency
_SINGULAR_RTOL = 1e-12


class NetworkElement:
    """Base class for impedance tree nodes."""

    __slots__ = ()


def _check_positive(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class Resistor(NetworkElement):
    r_ohm: float

    def __post_init__(self):
        _check_positive("r_ohm", self.r_ohm)


@dataclass(frozen=True)
class Inductor(NetworkElement):
    l_henry: float

    def __post_init__(self):
        _check_positive("l_henry", self.l_henry)


@dataclass(frozen=True)
class Capacitor(NetworkElement):
    c_farad: float

    def __post_init__(self):
        _check_positive("c_farad", self.c_farad)


@dataclass(frozen=True)
class Rational(NetworkElement):
    """gain * prod(s - z) / prod(s - p) evaluated on s = j*2*pi*f.

    Complex zeros and poles must appear in conjugate pairs so the response
    is realizable with real coefficients. Non-passive responses are
    allowed deliberately (converter-like negative-resistance bands).
    """

    gain: float
    zeros_rad_s: tuple[complex, ...] = ()
    poles_rad_s: tuple[complex, ...] = ()

    def __post_init__(self):
        if not (math.isfinite(self.gain) and self.gain != 0):
            raise ValueError("rational gain must be finite and nonzero")
        object.__setattr__(
            self, "zeros_rad_s", tuple(complex(z) for z in self.zeros_rad_s)
        )
        object.__setattr__(
            self, "poles_rad_s", tuple(complex(p) for p in self.poles_rad_s)
        )
        for name, roots in (
            ("zeros", self.zeros_rad_s),
            ("poles", self.poles_rad_s),
        ):
            pool = [r for r in roots if r.imag != 0.0]
            while pool:
                r = pool.pop()
                try:
                    pool.remove(r.conjugate())
                except ValueError:
                    raise ValueError(
                        f"rational {name} must come in conjugate pairs: {r}"
                    ) from None


@dataclass(frozen=True)
class Thevenin(NetworkElement):
    """Grid equivalent sized from short-circuit power.

    |Z| = V^2 / S_sc, split into a series R-L so that X/R at 50 Hz equals
    the given ratio: R = |Z| / sqrt(1 + XR^2), X(50 Hz) = R * XR.
    """

    v_ll_volt: float
    s_sc_va: float
    xr: float

    def __post_init__(self):
        _check_positive("v_ll_volt", self.v_ll_volt)
        _check_positive("s_sc_va", self.s_sc_va)
        _check_positive("xr", self.xr)

    @property
    def r_ohm(self) -> float:
        zmag = self.v_ll_volt**2 / self.s_sc_va
        return zmag / math.sqrt(1.0 + self.xr**2)

    @property
    def l_henry(self) -> float:
        return self.r_ohm * self.xr / (2.0 * math.pi * _NOMINAL_HZ)


def _check_children(children) -> tuple[NetworkElement, ...]:
    kids = tuple(children)
    if len(kids) < 2:
        raise ValueError("series/parallel need at least two children")
    for k in kids:
        if not isinstance(k, NetworkElement):
            raise ValueError(f"child is not a NetworkElement: {k!r}")
    return kids


@dataclass(frozen=True)
class Series(NetworkElement):
    children: tuple[NetworkElement, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", _check_children(self.children))


@dataclass(frozen=True)
class Parallel(NetworkElement):
    children: tuple[NetworkElement, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", _check_children(self.children))


# ---------------------------------------------------------------------------
# algebra
# ---------------------------------------------------------------------------

def ser(z1, z2):
    """Series combination Z1 + Z2."""
    a = np.asarray(z1, dtype=complex)
    b = np.asarray(z2, dtype=complex)
    out = a + b
    return complex(out) if out.ndim == 0 else out


def par(z1, z2):
    """Parallel combination Z1*Z2 / (Z1+Z2).

    Raises ``ResonanceSingular`` when |Z1+Z2| falls below
    1e-12 * max(|Z1|, |Z2|) (genuine antiresonance, not rounding).
    Equal operands return Z/2 exactly.
    """
    a = np.asarray(z1, dtype=complex)
    b = np.asarray(z2, dtype=complex)
    s = a + b
    tol = _SINGULAR_RTOL * np.maximum(np.abs(a), np.abs(b))
    if np.any(np.abs(s) <= tol):
        raise ResonanceSingular("parallel branches cancel: |Z1+Z2| ~ 0")
    out = np.where(a == b, a / 2.0, a * b / s)
    return complex(out) if out.ndim == 0 else out


def _eval_tree(desc: NetworkElement, f: np.ndarray) -> np.ndarray:
    w = 2.0 * math.pi * f
    if isinstance(desc, Resistor):
        return np.full(f.size, desc.r_ohm, dtype=complex)
    if isinstance(desc, Inductor):
        return 1j * w * desc.l_henry
    if isinstance(desc, Capacitor):
        return 1.0 / (1j * w * desc.c_farad)
    if isinstance(desc, Thevenin):
        return desc.r_ohm + 1j * w * desc.l_henry
    if isinstance(desc, Rational):
        s = 1j * w
        for p in desc.poles_rad_s:
            close = np.abs(s - p) <= _SINGULAR_RTOL * np.maximum(np.abs(s), abs(p))
            if np.any(close):
                f_bad = f[np.argmax(close)]
                raise SingularAtFrequency(
                    f"rational pole {p} on the evaluated axis near {f_bad} Hz"
                )
        num = np.full(f.size, desc.gain, dtype=complex)
        for z in desc.zeros_rad_s:
            num *= s - z
        den = np.ones(f.size, dtype=complex)
        for p in desc.poles_rad_s:
            den *= s - p
        return num / den
    if isinstance(desc, Series):
        acc = _eval_tree(desc.children[0], f)
        for child in desc.children[1:]:
            acc = acc + _eval_tree(child, f)
        return acc
    if isinstance(desc, Parallel):
        acc = _eval_tree(desc.children[0], f)
        for child in desc.children[1:]:
            v = _eval_tree(child, f)
            s = acc + v
            bad = np.abs(s) <= _SINGULAR_RTOL * np.maximum(np.abs(acc), np.abs(v))
            if np.any(bad):
                f_bad = f[np.argmax(bad)]
                raise SingularAtFrequency(
                    f"parallel branch sum vanishes near {f_bad} Hz"
                )
            acc = np.where(acc == v, acc / 2.0, acc * v / s)
        return acc
    raise ValueError(f"unknown network element {type(desc).__name__}")


def eval_network(
    desc: NetworkElement, grid: FrequencyGrid, label: str = ""
) -> FrequencyResponse:
    """Evaluate an element tree to an impedance curve on the grid."""
    samples = _eval_tree(desc, grid.points)
    return FrequencyResponse(grid=grid, samples=samples, unit="ohm", label=label)


def scale_network(desc: NetworkElement, k: float) -> NetworkElement:
    """Scale the impedance of a tree by k > 0 (R,L *= k; C /= k)."""
    _check_positive("scale factor", k)
    if isinstance(desc, Resistor):
        return Resistor(desc.r_ohm * k)
    if isinstance(desc, Inductor):
        return Inductor(desc.l_henry * k)
    if isinstance(desc, Capacitor):
        return Capacitor(desc.c_farad / k)
    if isinstance(desc, Thevenin):
        return Thevenin(desc.v_ll_volt * math.sqrt(k), desc.s_sc_va, desc.xr)
    if isinstance(desc, Rational):
        return Rational(desc.gain * k, desc.zeros_rad_s, desc.poles_rad_s)
    if isinstance(desc, Series):
        return Series(tuple(scale_network(c, k) for c in desc.children))
    if isinstance(desc, Parallel):
        return Parallel(tuple(scale_network(c, k) for c in desc.children))
    raise ValueError(f"unknown network element {type(desc).__name__}")


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def _pairs(roots: tuple[complex, ...]) -> list[list[float]]:
    return [[r.real, r.imag] for r in roots]


def network_to_obj(desc: NetworkElement):
    if isinstance(desc, Resistor):
        return {"type": "resistor", "r_ohm": desc.r_ohm}
    if isinstance(desc, Inductor):
        return {"type": "inductor", "l_henry": desc.l_henry}
    if isinstance(desc, Capacitor):
        return {"type": "capacitor", "c_farad": desc.c_farad}
    if isinstance(desc, Thevenin):
        return {
            "type": "thevenin",
            "v_ll_volt": desc.v_ll_volt,
            "s_sc_va": desc.s_sc_va,
            "xr": desc.xr,
        }
    if isinstance(desc, Rational):
        return {
            "type": "rational",
            "gain": desc.gain,
            "zeros_rad_s": _pairs(desc.zeros_rad_s),
            "poles_rad_s": _pairs(desc.poles_rad_s),
        }
    if isinstance(desc, (Series, Parallel)):
        return {
            "type": "series" if isinstance(desc, Series) else "parallel",
            "children": [network_to_obj(c) for c in desc.children],
        }
    raise ValueError(f"unknown network element {type(desc).__name__}")


def network_from_obj(obj) -> NetworkElement:
    kind = obj.get("type")
    if kind == "resistor":
        return Resistor(float(obj["r_ohm"]))
    if kind == "inductor":
        return Inductor(float(obj["l_henry"]))
    if kind == "capacitor":
        return Capacitor(float(obj["c_farad"]))
    if kind == "thevenin":
        return Thevenin(float(obj["v_ll_volt"]), float(obj["s_sc_va"]), float(obj["xr"]))
    if kind == "rational":
        return Rational(
            float(obj["gain"]),
            tuple(complex(re, im) for re, im in obj.get("zeros_rad_s", [])),
            tuple(complex(re, im) for re, im in obj.get("poles_rad_s", [])),
        )
    if kind in ("series", "parallel"):
        children = tuple(network_from_obj(c) for c in obj["children"])
        return Series(children) if kind == "series" else Parallel(children)
    raise ValueError(f"unknown network type {kind!r}")


def network_to_json(desc: NetworkElement) -> bytes:
    return (json.dumps(network_to_obj(desc), indent=2) + "\n").encode("utf-8")


def network_from_json(data: bytes) -> NetworkElement:
    return network_from_obj(json.loads(data.decode("utf-8")))


# ---------------------------------------------------------------------------
# random fixtures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CaseFixture:
    """Synthetic stand-in for one interconnection study case."""

    z_ppm_existing: NetworkElement
    z_net_old: NetworkElement
    z_ppm_new: NetworkElement
    grid: FrequencyGrid
    seed: int

    def __post_init__(self):
        for desc in (self.z_ppm_existing, self.z_net_old, self.z_ppm_new):
            _eval_tree(desc, self.grid.points)  # must evaluate without error

    def responses(self) -> tuple[FrequencyResponse, FrequencyResponse, FrequencyResponse]:
        return (
            eval_network(self.z_ppm_existing, self.grid, label="Z_ppm_existing"),
            eval_network(self.z_net_old, self.grid, label="Z_net_old"),
            eval_network(self.z_ppm_new, self.grid, label="Z_ppm_new"),
        )


def _rand_string_branch(rng) -> NetworkElement:
    # aggregated wind string: series R-L, sometimes with inter-array C
    r = Resistor(rng.uniform(0.5, 3.0))
    l = Inductor(rng.uniform(1.0, 8.0) * 1e-3)
    if rng.random() < 0.5:
        return Series((r, l, Capacitor(rng.uniform(50.0, 400.0) * 1e-6)))
    return Series((r, l))


def _rand_ppm_tree(rng) -> NetworkElement:
    # transformer R-L in front of a damped shunt tank; inductive at both ends
    r_s = Resistor(rng.uniform(0.3, 1.0))
    l_s = Inductor(rng.uniform(1.0, 5.0) * 1e-3)
    tank = Parallel(
        (
            Series((Resistor(rng.uniform(0.3, 2.0)), Inductor(rng.uniform(1.0, 6.0) * 1e-3))),
            Capacitor(rng.uniform(2.0, 20.0) * 1e-6),
        )
    )
    parts: list[NetworkElement] = [r_s, l_s, tank]
    if rng.random() < 0.3:
        # converter-like biquad wiggle, stable poles, conjugate pairs
        wn = 2.0 * math.pi * rng.uniform(200.0, 1500.0)
        zp = rng.uniform(0.1, 0.6)
        zz = rng.uniform(0.1, 0.6)
        wz = wn * rng.uniform(0.6, 1.6)
        poles = (
            complex(-zp * wn, wn * math.sqrt(1 - zp**2)),
            complex(-zp * wn, -wn * math.sqrt(1 - zp**2)),
        )
        zeros = (
            complex(-zz * wz, wz * math.sqrt(1 - zz**2)),
            complex(-zz * wz, -wz * math.sqrt(1 - zz**2)),
        )
        gain = rng.uniform(0.2, 1.0) * (wn / wz) ** 2
        parts.append(Rational(gain, zeros, poles))
    return Series(tuple(parts))


def _max_phase_step_deg(samples: np.ndarray) -> float:
    principal = np.degrees(np.angle(samples))
    d = np.diff(principal)
    d = d - 360.0 * np.floor((d + 180.0) / 360.0)
    return float(np.max(np.abs(d))) if d.size else 0.0


def _build_case(rng, seed: int, n_strings: int, grid: FrequencyGrid) -> CaseFixture:
    f = grid.points
    z_grid = Thevenin(66e3, rng.uniform(4e8, 2e9), rng.uniform(3.0, 12.0))
    strings = tuple(_rand_string_branch(rng) for _ in range(n_strings))
    z_net_old = Parallel((z_grid,) + strings)
    znet = _eval_tree(z_net_old, f)

    ppm_raw = _rand_ppm_tree(rng)
    zppm_raw = _eval_tree(ppm_raw, f)
    l_raw = np.abs(znet) / np.abs(zppm_raw)
    # center |L_old| geometrically around 1 so a gain crossover exists
    k_ppm = math.sqrt(float(l_raw.max()) * float(l_raw.min()))
    if float(l_raw.max() / l_raw.min()) < 4.0:
        raise ResonanceSingular("flat |L|; retry")
    z_ppm = scale_network(ppm_raw, k_ppm)

    new_raw = _rand_ppm_tree(rng)
    znew_raw = _eval_tree(new_raw, f)
    rho_raw = np.abs(znet) / np.abs(znew_raw)
    k_new = math.exp(float(np.mean(np.log(rho_raw)))) * rng.uniform(0.3, 3.0)
    z_new = scale_network(new_raw, 1.0 / k_new)

    # conditioning guards: bounded rho, no near-cancellation of 1+rho,
    # well-sampled phases (keeps factored/direct identities in float range)
    rho = znet / _eval_tree(z_new, f)
    if float(np.abs(rho).min()) < 2e-3 or float(np.abs(rho).max()) > 2e2:
        raise ResonanceSingular("ill-conditioned rho; retry")
    one_plus = 1.0 + rho
    if float(np.abs(one_plus).min()) < 2e-2:
        raise ResonanceSingular("1+rho near zero; retry")
    l_old = znet / _eval_tree(z_ppm, f)
    if _max_phase_step_deg(l_old) > 90.0 or _max_phase_step_deg(one_plus) > 90.0:
        raise ResonanceSingular("under-sampled phase; retry")

    return CaseFixture(z_ppm, z_net_old, z_new, grid, seed)


def random_case(
    seed: int, n_strings: int, span: tuple[float, float]
) -> CaseFixture:
    """Deterministic random study-case fixture.

    Generates passive RLC (plus occasional stable rational) trees for the
    existing PPM, the pre-connection network and the new PPM, scaled so the
    old loop gain crosses unit magnitude. Evaluation is non-singular on a
    2000-point log grid over ``span``. Identical seeds reproduce identical
    fixtures; generation retries with recorded sub-seeds before failing.
    """
    if n_strings < 1:
        raise ValueError("n_strings must be >= 1")
    lo, hi = float(span[0]), float(span[1])
    if not (0 < lo < hi):
        raise ValueError(f"invalid span {span!r}")
    grid = log_grid(lo, hi, 2000)

    tried: list[int] = []
    for sub in range(16):
        rng = np.random.default_rng([int(seed), sub])
        try:
            return _build_case(rng, int(seed), n_strings, grid)
        except (SingularAtFrequency, ResonanceSingular):
            tried.append(sub)
    raise GenerationFailed(
        f"no usable fixture for seed {seed} after sub-seeds {tried}"
    )
