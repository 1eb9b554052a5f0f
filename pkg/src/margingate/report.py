"""Assessment report assembly and rendering.

Reports aggregate the whole assessment pipeline: margins before and after
the new connection, decompositions through the old loop gain, the
impedance limit curve, compliance records, encirclement results and the
direct-vs-factored consistency error. Renderers produce canonical JSON
(schema ``margin-gate/1``, lossless round-trip), a markdown summary and
self-contained Nyquist / Bode SVG charts.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InconsistentInputs, UnsupportedFormat
from .freqresp import FrequencyResponse, unwrap_phase
from .margins import CrossoverPoint, MarginDecomposition, MarginSummary
from .regions import EncirclementResult, classify_crossing
from .speclimit import ComplianceRecord, LimitCurve, MarginPolicy

__all__ = [
    "AssessmentReport",
    "build_report",
    "render",
    "parse_report",
    "nyquist_svg_chart",
    "bode_svg_chart",
    "SCHEMA",
    "FORMATS",
]

SCHEMA = "margin-gate/1"
FORMATS = ("json", "markdown", "nyquist_svg", "bode_svg")

_RANK = {"compliant": 0, "caution": 1, "violation": 2, "error": 3}


def _worst(*verdicts: str) -> str:
    return max(verdicts, key=lambda v: _RANK[v])


@dataclass(frozen=True)
class AssessmentReport:
    """Deterministic aggregate of one assessment run.

    ``curves`` optionally carries the loop-gain curves for SVG loci; it is
    not part of the JSON schema and is dropped on parse.
    """

    inputs: dict
    l_old_summary: MarginSummary
    l_new_summary: MarginSummary
    decompositions: tuple[MarginDecomposition, ...]
    limit_curve: LimitCurve
    compliance: tuple[ComplianceRecord, ...]
    encirclements: dict[str, EncirclementResult]
    consistency_error: float
    overall_verdict: str
    curves: tuple[tuple[str, FrequencyResponse], ...] = ()

    def __post_init__(self):
        if self.overall_verdict not in _RANK:
            raise ValueError(f"bad overall verdict {self.overall_verdict!r}")
        expected = _expected_verdict(
            self.l_new_summary, self.compliance, self.encirclements
        )
        if self.overall_verdict != expected:
            raise InconsistentInputs(
                f"overall verdict {self.overall_verdict!r}, components say {expected!r}"
            )


def _expected_verdict(l_new_summary, compliance, encirclements) -> str:
    verdict = l_new_summary.verdict
    if any(rec.verdict == "violation" for rec in compliance):
        verdict = _worst(verdict, "violation")
    if any(res.winding != 0 for res in encirclements.values()):
        verdict = _worst(verdict, "violation")
    return verdict


def build_report(
    inputs: dict,
    l_old_summary: MarginSummary,
    l_new_summary: MarginSummary,
    decompositions,
    limit_curve: LimitCurve,
    compliance,
    encirclements: dict[str, EncirclementResult],
    consistency_error: float,
    curves=(),
) -> AssessmentReport:
    """Assemble the report and derive the overall verdict.

    The verdict is the worst of the post-connection margin verdict, any
    compliance violation, and a nonzero winding number (which forces
    violation).
    """
    if l_old_summary.policy != l_new_summary.policy:
        raise InconsistentInputs("old/new margin summaries use different policies")
    compliance = tuple(compliance)
    if len(compliance) != len(limit_curve):
        raise InconsistentInputs("compliance records do not match limit frequencies")
    for rec, f in zip(compliance, limit_curve.freqs):
        if rec.f_hz != f:
            raise InconsistentInputs(
                f"compliance record at {rec.f_hz} Hz does not match limit {f} Hz"
            )
    return AssessmentReport(
        inputs=dict(inputs),
        l_old_summary=l_old_summary,
        l_new_summary=l_new_summary,
        decompositions=tuple(decompositions),
        limit_curve=limit_curve,
        compliance=compliance,
        encirclements=dict(encirclements),
        consistency_error=float(consistency_error),
        overall_verdict=_expected_verdict(l_new_summary, compliance, encirclements),
        curves=tuple(curves),
    )


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def _num_out(x):
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _num_in(v):
    if v is None:
        return None
    if isinstance(v, str):
        return float(v)
    return float(v)


def _entry_region(cp: CrossoverPoint, policy: MarginPolicy) -> str:
    if cp.kind == "gain":
        return classify_crossing(cp.l_value, policy)
    return "critical" if cp.gm_db < policy.gm_min_db else "compliant"


def _crossover_obj(cp: CrossoverPoint, policy: MarginPolicy) -> dict:
    obj = {
        "f_hz": cp.f_hz,
        "kind": cp.kind,
        "l_value": [cp.l_value.real, cp.l_value.imag],
    }
    if cp.kind == "gain":
        obj["pm_deg"] = cp.pm_deg
    else:
        obj["gm_lin"] = cp.gm_lin
        obj["gm_db"] = cp.gm_db
    obj["region"] = _entry_region(cp, policy)
    return obj


def _crossover_from_obj(obj: dict) -> CrossoverPoint:
    lv = complex(obj["l_value"][0], obj["l_value"][1])
    if obj["kind"] == "gain":
        return CrossoverPoint("gain", obj["f_hz"], lv, pm_deg=obj["pm_deg"])
    return CrossoverPoint(
        "phase", obj["f_hz"], lv, gm_lin=obj["gm_lin"], gm_db=obj["gm_db"]
    )


def _summary_obj(s: MarginSummary) -> dict:
    return {
        "policy": {
            "pm_min_deg": s.policy.pm_min_deg,
            "pm_cau_deg": s.policy.pm_cau_deg,
            "gm_min_db": s.policy.gm_min_db,
        },
        "crossovers": [_crossover_obj(c, s.policy) for c in s.crossovers],
        "worst_pm": None if s.worst_pm is None else _crossover_obj(s.worst_pm, s.policy),
        "worst_gm": None if s.worst_gm is None else _crossover_obj(s.worst_gm, s.policy),
        "verdict": s.verdict,
    }


def _summary_from_obj(obj: dict) -> MarginSummary:
    policy = MarginPolicy(**obj["policy"])
    return MarginSummary(
        crossovers=tuple(_crossover_from_obj(c) for c in obj["crossovers"]),
        worst_pm=None if obj["worst_pm"] is None else _crossover_from_obj(obj["worst_pm"]),
        worst_gm=None if obj["worst_gm"] is None else _crossover_from_obj(obj["worst_gm"]),
        policy=policy,
        verdict=obj["verdict"],
    )


def _report_to_obj(report: AssessmentReport) -> dict:
    lc = report.limit_curve
    return {
        "schema": SCHEMA,
        "inputs": report.inputs,
        "l_old": _summary_obj(report.l_old_summary),
        "l_new": _summary_obj(report.l_new_summary),
        "decompositions": [
            {
                "f_hz": d.f_hz,
                "kind": "gain",
                "pm_old_newgc_deg": d.pm_old_newgc_deg,
                "angle_one_plus_rho_deg": d.angle_one_plus_rho_deg,
                "pm_new_deg": d.pm_new_deg,
                "gm_new_lin": d.gm_new_lin,
                "abs_one_plus_rho": d.abs_one_plus_rho,
                "l_old_mag": d.l_old_mag,
            }
            for d in report.decompositions
        ],
        "limit_curve": {
            "freqs_hz": list(lc.freqs),
            "z_limit_ohm": [_num_out(z) for z in lc.z_limit_ohm],
            "delta_pm_deg": list(lc.delta_pm_deg),
            "z_net_old_mag_ohm": list(lc.z_net_old_mag_ohm),
            "r_diag": [_num_out(r) for r in lc.r_diag],
            "flags": [sorted(f) for f in lc.flags],
        },
        "compliance": [
            {
                "f_hz": rec.f_hz,
                "z_new_mag_ohm": rec.z_new_mag_ohm,
                "z_limit_ohm": _num_out(rec.z_limit_ohm),
                "verdict": rec.verdict,
            }
            for rec in report.compliance
        ],
        "encirclements": {
            name: {
                "winding": res.winding,
                "min_distance_to_critical_point": res.min_distance_to_critical_point,
                "resolution_warnings": [
                    [_num_out(a), _num_out(b)] for a, b in res.resolution_warnings
                ],
            }
            for name, res in report.encirclements.items()
        },
        "consistency_error": report.consistency_error,
        "overall_verdict": report.overall_verdict,
    }


def parse_report(data: bytes) -> AssessmentReport:
    """Reconstruct a report from its JSON rendering."""
    obj = json.loads(data.decode("utf-8"))
    if obj.get("schema") != SCHEMA:
        raise UnsupportedFormat(f"unsupported report schema {obj.get('schema')!r}")
    lc = obj["limit_curve"]
    limit = LimitCurve(
        freqs=tuple(lc["freqs_hz"]),
        z_limit_ohm=tuple(_num_in(z) for z in lc["z_limit_ohm"]),
        delta_pm_deg=tuple(lc["delta_pm_deg"]),
        z_net_old_mag_ohm=tuple(lc["z_net_old_mag_ohm"]),
        r_diag=tuple(_num_in(r) for r in lc["r_diag"]),
        flags=tuple(frozenset(f) for f in lc["flags"]),
    )
    return AssessmentReport(
        inputs=obj["inputs"],
        l_old_summary=_summary_from_obj(obj["l_old"]),
        l_new_summary=_summary_from_obj(obj["l_new"]),
        decompositions=tuple(
            MarginDecomposition(
                f_hz=d["f_hz"],
                pm_old_newgc_deg=d["pm_old_newgc_deg"],
                angle_one_plus_rho_deg=d["angle_one_plus_rho_deg"],
                pm_new_deg=d["pm_new_deg"],
                gm_new_lin=d["gm_new_lin"],
                abs_one_plus_rho=d["abs_one_plus_rho"],
                l_old_mag=d["l_old_mag"],
            )
            for d in obj["decompositions"]
        ),
        limit_curve=limit,
        compliance=tuple(
            ComplianceRecord(
                f_hz=rec["f_hz"],
                z_new_mag_ohm=rec["z_new_mag_ohm"],
                z_limit_ohm=_num_in(rec["z_limit_ohm"]),
                verdict=rec["verdict"],
            )
            for rec in obj["compliance"]
        ),
        encirclements={
            name: EncirclementResult(
                winding=int(res["winding"]),
                min_distance_to_critical_point=res["min_distance_to_critical_point"],
                resolution_warnings=tuple(
                    (_num_in(a), _num_in(b)) for a, b in res["resolution_warnings"]
                ),
            )
            for name, res in obj["encirclements"].items()
        },
        consistency_error=obj["consistency_error"],
        overall_verdict=obj["overall_verdict"],
    )


# ---------------------------------------------------------------------------
# markdown
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return "n/a"
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return str(x)
    return str(x)


def _markdown(report: AssessmentReport) -> str:
    lines: list[str] = []
    lines.append("# Stability margin assessment")
    lines.append("")
    lines.append(f"- overall verdict: **{report.overall_verdict}**")
    lines.append(
        f"- loop-gain consistency error (direct vs factored): {_fmt(report.consistency_error)}"
    )
    for key, value in report.inputs.items():
        lines.append(f"- {key}: {_fmt_inputs(value)}")
    lines.append("")

    for title, summary in (
        ("Margins before connection (L_old)", report.l_old_summary),
        ("Margins after connection (L_new)", report.l_new_summary),
    ):
        lines.append(f"## {title}")
        lines.append("")
        lines.append(f"- verdict: {summary.verdict}")
        if summary.crossovers:
            lines.append("")
            lines.append("| f (Hz) | kind | margin | region |")
            lines.append("| --- | --- | --- | --- |")
            for cp in summary.crossovers:
                margin = (
                    f"PM {_fmt(cp.pm_deg)} deg"
                    if cp.kind == "gain"
                    else f"GM {_fmt(cp.gm_db)} dB"
                )
                region = _entry_region(cp, summary.policy)
                lines.append(f"| {_fmt(cp.f_hz)} | {cp.kind} | {margin} | {region} |")
        lines.append("")

    if report.decompositions:
        lines.append("## Margin decomposition through L_old")
        lines.append("")
        lines.append("| f (Hz) | PM_old (deg) | angle(1+rho) (deg) | PM_new (deg) | GM_new |")
        lines.append("| --- | --- | --- | --- | --- |")
        for d in report.decompositions:
            lines.append(
                f"| {_fmt(d.f_hz)} | {_fmt(d.pm_old_newgc_deg)} | "
                f"{_fmt(d.angle_one_plus_rho_deg)} | {_fmt(d.pm_new_deg)} | "
                f"{_fmt(d.gm_new_lin)} |"
            )
        lines.append("")

    lines.append("## Impedance limit compliance")
    lines.append("")
    if report.compliance:
        lines.append("| f (Hz) | |Z_new| (ohm) | Z_limit (ohm) | verdict |")
        lines.append("| --- | --- | --- | --- |")
        for rec in report.compliance:
            lines.append(
                f"| {_fmt(rec.f_hz)} | {_fmt(rec.z_new_mag_ohm)} | "
                f"{_fmt(rec.z_limit_ohm)} | {rec.verdict} |"
            )
    else:
        lines.append("No limit frequencies were evaluated.")
    lines.append("")

    flagged = [
        (f, sorted(fl)) for f, fl in zip(report.limit_curve.freqs, report.limit_curve.flags) if fl
    ]
    if flagged:
        lines.append("## Limit caveats")
        lines.append("")
        for f, fl in flagged:
            lines.append(f"- {_fmt(f)} Hz: {', '.join(fl)}")
        lines.append("")

    lines.append("## Nyquist encirclements of -1")
    lines.append("")
    for name, res in report.encirclements.items():
        warn = (
            "; ".join(f"[{_fmt(a)}, {_fmt(b)}] Hz" for a, b in res.resolution_warnings)
            or "none"
        )
        lines.append(
            f"- {name}: winding {res.winding}, min distance to -1 "
            f"{_fmt(res.min_distance_to_critical_point)}, warnings: {warn}"
        )
    lines.append("")
    return "\n".join(lines)


def _fmt_inputs(value) -> str:
    if isinstance(value, dict):
        return ", ".join(f"{k}={v}" for k, v in value.items())
    if isinstance(value, (list, tuple)):
        return ", ".join(str(v) for v in value)
    return str(value)


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

_SVG_STYLE = """\
    .axis { stroke: #888; stroke-width: 0.01; }
    .unit { fill: none; stroke: #333; stroke-width: 0.012; }
    .gm-circle { fill: none; stroke: #7a5c00; stroke-width: 0.012; stroke-dasharray: 0.05 0.03; }
    .wedge-critical { fill: #d62728; fill-opacity: 0.25; stroke: #d62728; stroke-width: 0.008; }
    .wedge-caution { fill: #ff9900; fill-opacity: 0.20; stroke: #ff9900; stroke-width: 0.008; }
    .locus-0 { fill: none; stroke: #1f77b4; stroke-width: 0.02; }
    .locus-1 { fill: none; stroke: #2ca02c; stroke-width: 0.02; }
    .locus-2 { fill: none; stroke: #9467bd; stroke-width: 0.02; }
    .marker-gain { fill: #1f77b4; stroke: #fff; stroke-width: 0.006; }
    .marker-phase { fill: #d62728; stroke: #fff; stroke-width: 0.006; }
    .critical-point { stroke: #d62728; stroke-width: 0.02; }
    text { font-family: sans-serif; }
"""


def _f6(x: float) -> str:
    return f"{x:.6g}"


def _sector_path(theta_lo_deg: float, theta_hi_deg: float, radius: float) -> str:
    """Origin-anchored sector, math angles, y emitted flipped for SVG."""
    t0, t1 = math.radians(theta_lo_deg), math.radians(theta_hi_deg)
    x0, y0 = radius * math.cos(t0), -radius * math.sin(t0)
    x1, y1 = radius * math.cos(t1), -radius * math.sin(t1)
    large = 1 if (theta_hi_deg - theta_lo_deg) > 180.0 else 0
    # math-CCW becomes SVG sweep 0 once y is flipped
    return (
        f"M 0 0 L {_f6(x0)} {_f6(y0)} "
        f"A {_f6(radius)} {_f6(radius)} 0 {large} 0 {_f6(x1)} {_f6(y1)} Z"
    )


def _locus_subpath(points: np.ndarray) -> str:
    coords = [f"{_f6(p.real)} {_f6(-p.imag)}" for p in points]
    return "M " + " L ".join(coords)


def _nyquist_svg(report: AssessmentReport) -> str:
    return nyquist_svg_chart(
        report.l_new_summary.policy,
        report.curves,
        (report.l_old_summary, report.l_new_summary),
    )


def nyquist_svg_chart(
    policy: MarginPolicy, curves, summaries=()
) -> str:
    """Nyquist chart with the critical/caution wedges and GM circle.

    ``curves`` is a sequence of (name, FrequencyResponse) loci;
    ``summaries`` supply crossover markers.
    """
    extent = 2.6
    wedge_r = 2.45
    parts: list[str] = []
    parts.append(
        '<svg xmlns="http://www.w3.org/2000/svg" width="600" height="600" '
        f'viewBox="{-extent} {-extent} {2*extent} {2*extent}">'
    )
    parts.append(f"<style>\n{_SVG_STYLE}</style>")
    parts.append(
        f'<line class="axis" x1="{-extent}" y1="0" x2="{extent}" y2="0"/>'
    )
    parts.append(
        f'<line class="axis" x1="0" y1="{-extent}" x2="0" y2="{extent}"/>'
    )
    # angle wedges about the negative real axis, evaluated at |L| = 1
    parts.append(
        f'<path class="wedge-critical" d="{_sector_path(180.0 - policy.pm_min_deg, 180.0 + policy.pm_min_deg, wedge_r)}"/>'
    )
    caution_d = (
        _sector_path(180.0 - policy.pm_cau_deg, 180.0 - policy.pm_min_deg, wedge_r)
        + " "
        + _sector_path(180.0 + policy.pm_min_deg, 180.0 + policy.pm_cau_deg, wedge_r)
    )
    parts.append(f'<path class="wedge-caution" d="{caution_d}"/>')
    parts.append('<circle class="unit" cx="0" cy="0" r="1"/>')
    parts.append(
        f'<circle class="gm-circle" cx="0" cy="0" r="{policy.gm_circle_radius!r}"/>'
    )
    # critical point -1 + 0j
    parts.append('<line class="critical-point" x1="-1.04" y1="-0.04" x2="-0.96" y2="0.04"/>')
    parts.append('<line class="critical-point" x1="-1.04" y1="0.04" x2="-0.96" y2="-0.04"/>')

    for i, (name, curve) in enumerate(curves):
        pts = curve.samples
        d = _locus_subpath(pts) + " " + _locus_subpath(np.conj(pts)[::-1])
        parts.append(f'<path class="locus locus-{i % 3}" id="locus-{_xml(name)}" d="{d}"/>')
        parts.append(
            f'<text x="{_f6(extent - 0.1)}" y="{_f6(-extent + 0.18 + 0.14 * i)}" '
            f'text-anchor="end" font-size="0.12" class="locus-{i % 3}" '
            f'style="fill: currentColor; stroke: none;">{_xml(name)}</text>'
        )

    for summary in summaries:
        for cp in summary.crossovers:
            cls = "marker-gain" if cp.kind == "gain" else "marker-phase"
            parts.append(
                f'<circle class="{cls}" cx="{_f6(cp.l_value.real)}" '
                f'cy="{_f6(-cp.l_value.imag)}" r="0.035"/>'
            )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _xml(s: str) -> str:
    return (
        s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )


def _ticks_db(lo: float, hi: float) -> list[float]:
    step = 20.0
    while (hi - lo) / step > 8:
        step *= 2
    start = math.floor(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step) + 2)]


def _bode_svg(report: AssessmentReport) -> str:
    return bode_svg_chart(
        report.curves, (report.l_old_summary, report.l_new_summary)
    )


def bode_svg_chart(curves, summaries=()) -> str:
    """Two-panel Bode chart (dB magnitude, unwrapped phase) with markers."""
    width, height = 720, 560
    margin_l, margin_r, margin_t, gap = 64, 16, 24, 44
    panel_h = (height - margin_t - gap - 48) / 2
    panel_w = width - margin_l - margin_r

    curves = list(curves)
    if curves:
        f_lo = min(float(c.grid.points[0]) for _, c in curves)
        f_hi = max(float(c.grid.points[-1]) for _, c in curves)
    else:
        f_lo, f_hi = 1.0, 1000.0
    lx_lo, lx_hi = math.log10(f_lo), math.log10(f_hi)

    mags, phases = [], []
    for _, c in curves:
        mags.append(20.0 * np.log10(np.abs(c.samples)))
        phases.append(unwrap_phase(c).degrees)
    if mags:
        m_lo = min(float(m.min()) for m in mags) - 5.0
        m_hi = max(float(m.max()) for m in mags) + 5.0
        p_lo = min(float(p.min()) for p in phases) - 15.0
        p_hi = max(float(p.max()) for p in phases) + 15.0
    else:
        m_lo, m_hi, p_lo, p_hi = -40.0, 20.0, -270.0, 0.0
    m_lo, m_hi = min(m_lo, -5.0), max(m_hi, 5.0)
    p_lo, p_hi = min(p_lo, -190.0), max(p_hi, 10.0)

    def x_of(f: float) -> float:
        return margin_l + (math.log10(f) - lx_lo) / (lx_hi - lx_lo) * panel_w

    def y_mag(v: float) -> float:
        return margin_t + (m_hi - v) / (m_hi - m_lo) * panel_h

    def y_ph(v: float) -> float:
        return margin_t + panel_h + gap + (p_hi - v) / (p_hi - p_lo) * panel_h

    parts: list[str] = []
    parts.append(
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">'
    )
    parts.append(
        "<style>\n"
        "    .frame { fill: none; stroke: #444; stroke-width: 1; }\n"
        "    .grid { stroke: #ddd; stroke-width: 1; }\n"
        "    .zero { stroke: #999; stroke-width: 1; stroke-dasharray: 5 3; }\n"
        "    .locus-0 { fill: none; stroke: #1f77b4; stroke-width: 1.6; }\n"
        "    .locus-1 { fill: none; stroke: #2ca02c; stroke-width: 1.6; }\n"
        "    .locus-2 { fill: none; stroke: #9467bd; stroke-width: 1.6; }\n"
        "    .marker-gain { fill: #1f77b4; stroke: #fff; }\n"
        "    .marker-phase { fill: #d62728; stroke: #fff; }\n"
        "    text { font-family: sans-serif; font-size: 11px; fill: #333; }\n"
        "</style>"
    )

    for y0, label in ((margin_t, "magnitude (dB)"), (margin_t + panel_h + gap, "phase (deg)")):
        parts.append(
            f'<rect class="frame" x="{margin_l}" y="{_f6(y0)}" '
            f'width="{_f6(panel_w)}" height="{_f6(panel_h)}"/>'
        )
        parts.append(
            f'<text x="{margin_l}" y="{_f6(y0 - 6)}">{label}</text>'
        )

    for dec in range(math.ceil(lx_lo), math.floor(lx_hi) + 1):
        x = x_of(10.0**dec)
        for y0 in (margin_t, margin_t + panel_h + gap):
            parts.append(
                f'<line class="grid" x1="{_f6(x)}" y1="{_f6(y0)}" '
                f'x2="{_f6(x)}" y2="{_f6(y0 + panel_h)}"/>'
            )
        parts.append(
            f'<text x="{_f6(x)}" y="{_f6(height - 28)}" text-anchor="middle">1e{dec}</text>'
        )
    parts.append(
        f'<text x="{_f6(margin_l + panel_w / 2)}" y="{_f6(height - 8)}" '
        'text-anchor="middle">frequency (Hz)</text>'
    )

    for v in _ticks_db(m_lo, m_hi):
        if m_lo <= v <= m_hi:
            y = y_mag(v)
            parts.append(
                f'<line class="grid" x1="{margin_l}" y1="{_f6(y)}" '
                f'x2="{_f6(margin_l + panel_w)}" y2="{_f6(y)}"/>'
            )
            parts.append(
                f'<text x="{margin_l - 6}" y="{_f6(y + 4)}" text-anchor="end">{_f6(v)}</text>'
            )
    if m_lo <= 0.0 <= m_hi:
        parts.append(
            f'<line class="zero" x1="{margin_l}" y1="{_f6(y_mag(0.0))}" '
            f'x2="{_f6(margin_l + panel_w)}" y2="{_f6(y_mag(0.0))}"/>'
        )
    k = math.ceil(p_lo / 90.0)
    while 90.0 * k <= p_hi:
        v = 90.0 * k
        y = y_ph(v)
        cls = "zero" if v % 360.0 == -180.0 % 360.0 else "grid"
        parts.append(
            f'<line class="{cls}" x1="{margin_l}" y1="{_f6(y)}" '
            f'x2="{_f6(margin_l + panel_w)}" y2="{_f6(y)}"/>'
        )
        parts.append(
            f'<text x="{margin_l - 6}" y="{_f6(y + 4)}" text-anchor="end">{_f6(v)}</text>'
        )
        k += 1

    for i, ((name, curve), mag, ph) in enumerate(zip(curves, mags, phases)):
        xs = [x_of(float(f)) for f in curve.grid.points]
        d_mag = "M " + " L ".join(
            f"{_f6(x)} {_f6(y_mag(float(v)))}" for x, v in zip(xs, mag)
        )
        d_ph = "M " + " L ".join(
            f"{_f6(x)} {_f6(y_ph(float(v)))}" for x, v in zip(xs, ph)
        )
        parts.append(
            f'<path class="locus locus-mag locus-{i % 3}" id="bode-mag-{_xml(name)}" d="{d_mag}"/>'
        )
        parts.append(
            f'<path class="locus locus-phase locus-{i % 3}" id="bode-phase-{_xml(name)}" d="{d_ph}"/>'
        )
        parts.append(
            f'<text x="{_f6(margin_l + panel_w - 8)}" y="{_f6(margin_t + 16 + 14 * i)}" '
            f'text-anchor="end" style="fill: currentColor;" class="locus-{i % 3}">{_xml(name)}</text>'
        )

    for summary in summaries:
        for cp in summary.crossovers:
            if not (f_lo <= cp.f_hz <= f_hi):
                continue
            x = x_of(cp.f_hz)
            if cp.kind == "gain":
                parts.append(
                    f'<circle class="marker-gain" cx="{_f6(x)}" cy="{_f6(y_mag(0.0))}" r="4"/>'
                )
            else:
                level = -180.0
                parts.append(
                    f'<circle class="marker-phase" cx="{_f6(x)}" '
                    f'cy="{_f6(y_ph(max(p_lo, min(p_hi, level))))}" r="4"/>'
                )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def render(report: AssessmentReport, format: str) -> bytes:
    """Render the report as json, markdown, nyquist_svg or bode_svg.

    JSON output is canonical: fixed key order and repr floats, so the
    render -> parse -> render cycle is byte-identical.
    """
    if format == "json":
        text = json.dumps(_report_to_obj(report), indent=2, allow_nan=False) + "\n"
    elif format == "markdown":
        text = _markdown(report)
    elif format == "nyquist_svg":
        text = _nyquist_svg(report)
    elif format == "bode_svg":
        text = _bode_svg(report)
    else:
        raise UnsupportedFormat(f"unknown format {format!r}; expected one of {FORMATS}")
    return text.encode("utf-8")
