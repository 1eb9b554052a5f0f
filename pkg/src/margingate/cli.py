"""Command-line margin gate.

Wires the assessment pipeline over impedance files: parse -> align ->
loop gains (direct and factored, cross-checked) -> crossovers and margins
-> decompositions -> impedance limit -> compliance -> Nyquist regions ->
report. Exit codes are CI-friendly: 0 compliant, 1 caution or violation,
2 input/processing error.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fixtures as _fixtures
from .errors import MarginGateError, ResonanceSingular
from .freqresp import (
    FrequencyResponse,
    align,
    log_grid,
    parse_response,
    write_response,
)
from .loopgain import consistency_error, loop_gain, rho, update_loop_gain
from .margins import decompose_margins, summarize_margins
from .netsynth import eval_network, network_from_json, random_case
from .regions import winding_number
from .report import (
    FORMATS,
    AssessmentReport,
    build_report,
    nyquist_svg_chart,
    render,
)
from .speclimit import MarginPolicy, check_compliance, limit_curve

__all__ = ["RunConfig", "run_assessment", "main"]

_EXIT_BY_VERDICT = {"compliant": 0, "caution": 1, "violation": 1}
_SINGULAR_RTOL = 1e-12

_ASSERTED_PRECONDITIONS = (
    "subsystems are individually stable (no right-half-plane poles); "
    "asserted, not verifiable from impedance data",
)


@dataclass(frozen=True)
class RunConfig:
    """Inputs and options for one assessment run.

    Exactly one input mode: three impedance file paths, or a synthetic
    case description file.
    """

    z_ppm_existing: Path | None = None
    z_net_old: Path | None = None
    z_ppm_new: Path | None = None
    synth_case: Path | None = None
    policy: MarginPolicy = MarginPolicy()
    critical_freqs: tuple[float, ...] | None = None
    out_dir: Path = Path(".")
    formats: tuple[str, ...] = ("json",)

    def __post_init__(self):
        file_mode = all(
            p is not None for p in (self.z_ppm_existing, self.z_net_old, self.z_ppm_new)
        )
        synth_mode = self.synth_case is not None
        if file_mode == synth_mode:
            raise ValueError(
                "exactly one input mode: three impedance files or --synth case"
            )
        unknown = set(self.formats) - set(FORMATS)
        if unknown:
            raise ValueError(f"unknown formats {sorted(unknown)}; choose from {FORMATS}")


class StageFailure(Exception):
    """Pipeline failure annotated with the stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[stage={stage}] {cause}")
        self.stage = stage
        self.cause = cause


@contextlib.contextmanager
def _stage(name: str):
    try:
        yield
    except StageFailure:
        raise
    except (MarginGateError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise StageFailure(name, exc) from exc


def _read_response(path: Path) -> FrequencyResponse:
    return parse_response(Path(path).read_bytes())


def _load_synth_case(path: Path):
    obj = json.loads(Path(path).read_bytes().decode("utf-8"))
    gspec = obj["grid"]
    grid = log_grid(
        float(gspec["start_hz"]), float(gspec["stop_hz"]), int(gspec["points"])
    )
    out = []
    for role in ("z_ppm_existing", "z_net_old", "z_ppm_new"):
        desc = network_from_json(json.dumps(obj[role]).encode("utf-8"))
        out.append(eval_network(desc, grid, label=role))
    return tuple(out)


def _par_curves(
    z_a: FrequencyResponse, z_b: FrequencyResponse, label: str
) -> FrequencyResponse:
    s = z_a.samples + z_b.samples
    tol = _SINGULAR_RTOL * np.maximum(np.abs(z_a.samples), np.abs(z_b.samples))
    if np.any(np.abs(s) <= tol):
        raise ResonanceSingular("new plant antiresonates with the network")
    return z_a.with_samples(z_a.samples * z_b.samples / s, label=label)


def run_assessment(cfg: RunConfig) -> tuple[AssessmentReport, int]:
    """Execute the pipeline; returns the report and the process exit code.

    Failures raise ``StageFailure`` naming the failing stage (exit 2 in
    ``main``).
    """
    with _stage("parse"):
        if cfg.synth_case is not None:
            z_ppm, z_net, z_new = _load_synth_case(cfg.synth_case)
        else:
            z_ppm = _read_response(cfg.z_ppm_existing)
            z_net = _read_response(cfg.z_net_old)
            z_new = _read_response(cfg.z_ppm_new)
            if not z_ppm.label:
                z_ppm = z_ppm.with_samples(z_ppm.samples, label="z_ppm_existing")
            if not z_net.label:
                z_net = z_net.with_samples(z_net.samples, label="z_net_old")
            if not z_new.label:
                z_new = z_new.with_samples(z_new.samples, label="z_ppm_new")

    with _stage("align"):
        z_ppm, z_net, z_new = align([z_ppm, z_net, z_new])

    with _stage("loopgain"):
        l_old_lg = loop_gain(z_net, z_ppm, label="L_old")
        l_old = l_old_lg.response
        ratio = rho(z_net, z_new)
        l_new_lg = update_loop_gain(l_old, ratio)
        l_new = l_new_lg.response
        z_net_new = _par_curves(z_net, z_new, label="z_net_new")
        l_new_direct = loop_gain(z_net_new, z_ppm, label="L_new_direct")
        cons_err = consistency_error(l_new_direct.response, l_new)

    with _stage("margins"):
        s_old = summarize_margins(l_old, cfg.policy)
        s_new = summarize_margins(l_new, cfg.policy)

    with _stage("decompose"):
        decomps = tuple(
            decompose_margins(l_old, ratio, cp.f_hz, cp.kind)
            for cp in s_new.crossovers
        )

    with _stage("limit"):
        if cfg.critical_freqs is not None:
            freqs = cfg.critical_freqs
            mode = "operator-specified"
        else:
            freqs = tuple(cp.f_hz for cp in s_new.crossovers if cp.kind == "gain")
            mode = "detected-crossovers"
        limits = limit_curve(l_old, z_net, freqs, cfg.policy, ratio)

    with _stage("compliance"):
        compliance = check_compliance(z_new, limits)

    with _stage("regions"):
        encirclements = {
            "l_old": winding_number(l_old),
            "l_new": winding_number(l_new),
        }

    with _stage("report"):
        inputs = {
            "labels": {
                "z_ppm_existing": z_ppm.label,
                "z_net_old": z_net.label,
                "z_ppm_new": z_new.label,
            },
            "sequence": {
                "z_ppm_existing": z_ppm.sequence,
                "z_net_old": z_net.sequence,
                "z_ppm_new": z_new.sequence,
            },
            "operating_point": {
                "z_ppm_existing": z_ppm.operating_point,
                "z_net_old": z_net.operating_point,
                "z_ppm_new": z_new.operating_point,
            },
            "critical_frequency_mode": mode,
            "asserted_preconditions": list(_ASSERTED_PRECONDITIONS),
        }
        report = build_report(
            inputs=inputs,
            l_old_summary=s_old,
            l_new_summary=s_new,
            decompositions=decomps,
            limit_curve=limits,
            compliance=compliance,
            encirclements=encirclements,
            consistency_error=cons_err,
            curves=(("L_old", l_old), ("L_new", l_new)),
        )

    return report, _EXIT_BY_VERDICT[report.overall_verdict]


# ---------------------------------------------------------------------------
# terminal output
# ---------------------------------------------------------------------------

def _style(text: str, code: str, stream) -> str:
    if os.environ.get("MARGIN_GATE_NO_COLOR"):
        return text
    if not hasattr(stream, "isatty") or not stream.isatty():
        return text
    return f"\x1b[{code}m{text}\x1b[0m"


def _print_verdict(report: AssessmentReport) -> None:
    verdict = report.overall_verdict
    line = f"overall verdict: {verdict}"
    if verdict == "compliant":
        print(_style(line, "32", sys.stdout))
    elif verdict == "caution":
        print(_style(line, "33", sys.stdout))
    else:
        print(_style(line, "31", sys.stdout))
    if verdict == "violation":
        offenders = [rec for rec in report.compliance if rec.verdict == "violation"]
        for rec in offenders:
            print(
                _style(
                    f"violation at {rec.f_hz} Hz: |Z_new| = {rec.z_new_mag_ohm} ohm "
                    f"exceeds limit {rec.z_limit_ohm} ohm",
                    "31",
                    sys.stderr,
                ),
                file=sys.stderr,
            )
        if not offenders:
            print(_style("margin or encirclement violation", "31", sys.stderr), file=sys.stderr)


_REPORT_FILES = {
    "json": "report.json",
    "markdown": "report.md",
    "nyquist_svg": "nyquist.svg",
    "bode_svg": "bode.svg",
}


def _write_outputs(report: AssessmentReport, cfg: RunConfig) -> None:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    for fmt in cfg.formats:
        data = render(report, fmt)
        (cfg.out_dir / _REPORT_FILES[fmt]).write_bytes(data)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_policy_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pm-min-deg", type=float, default=15.0,
                   help="minimum phase margin (default 15)")
    p.add_argument("--pm-cau-deg", type=float, default=30.0,
                   help="caution phase-margin threshold (default 30)")
    p.add_argument("--gm-min-db", type=float, default=15.0,
                   help="minimum gain margin in dB (default 15)")


def _policy_from(args) -> MarginPolicy:
    return MarginPolicy(args.pm_min_deg, args.pm_cau_deg, args.gm_min_db)


def _parse_freq_list(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _parse_span(text: str) -> tuple[float, float]:
    lo, _, hi = text.partition(":")
    return float(lo), float(hi)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="margin-gate",
        description="Impedance-based stability margin gate for paralleled power park modules.",
    )
    sub = p.add_subparsers(dest="cmd", required=True)

    check = sub.add_parser("check", help="run the full assessment pipeline")
    check.add_argument("--z-ppm", help="existing PPM impedance file")
    check.add_argument("--z-net-old", help="pre-connection network impedance file")
    check.add_argument("--z-ppm-new", help="new PPM impedance file")
    check.add_argument("--synth", help="synthetic case JSON (networks + grid)")
    _add_policy_flags(check)
    check.add_argument(
        "--critical-freqs",
        help="comma-separated operator critical frequencies in Hz "
        "(default: detected new gain crossovers)",
    )
    check.add_argument("--out-dir", default=".", help="report output directory")
    check.add_argument(
        "--format",
        default="json",
        help="comma-separated outputs: json,markdown,nyquist_svg,bode_svg",
    )

    lg = sub.add_parser("loopgain", help="compute a minor-loop gain file")
    lg.add_argument("--z-net", required=True)
    lg.add_argument("--z-ppm", required=True)
    lg.add_argument("--out", required=True)

    mg = sub.add_parser("margins", help="crossovers and margins of a loop-gain file")
    mg.add_argument("--loop-gain", required=True)
    _add_policy_flags(mg)

    lim = sub.add_parser("limit", help="maximum allowable new-plant impedance")
    lim.add_argument("--l-old", required=True, help="pre-connection loop-gain file")
    lim.add_argument("--z-net-old", required=True)
    lim.add_argument("--critical-freqs", help="comma-separated frequencies in Hz")
    lim.add_argument(
        "--detect-from", help="loop-gain file whose gain crossovers set the frequencies"
    )
    lim.add_argument("--z-new", help="optional new-plant impedance file to check")
    lim.add_argument("--out", help="write the table here instead of stdout")
    _add_policy_flags(lim)

    sy = sub.add_parser("synth", help="evaluate network descriptions to impedance files")
    mode = sy.add_mutually_exclusive_group(required=True)
    mode.add_argument("--network", help="single NetworkDescription JSON file")
    mode.add_argument("--case", help="case JSON with three networks and a grid")
    mode.add_argument("--bundled", help=f"bundled case name {_fixtures.BUNDLED_CASES}")
    mode.add_argument("--seed", type=int, help="random CaseFixture seed")
    sy.add_argument("--n-strings", type=int, default=3, help="strings in a random case")
    sy.add_argument("--span", default="10:5000", help="frequency span lo:hi in Hz")
    sy.add_argument("--points", type=int, default=2000, help="grid points for --network")
    sy.add_argument("--out", help="output file for --network")
    sy.add_argument("--out-dir", default=".", help="output directory for case modes")

    ny = sub.add_parser("nyquist", help="render a Nyquist chart from loop-gain files")
    ny.add_argument("--loop-gain", action="append", required=True,
                    help="loop-gain file (repeatable)")
    ny.add_argument("--out", required=True)
    _add_policy_flags(ny)

    return p


def _cmd_check(args) -> int:
    cfg = RunConfig(
        z_ppm_existing=Path(args.z_ppm) if args.z_ppm else None,
        z_net_old=Path(args.z_net_old) if args.z_net_old else None,
        z_ppm_new=Path(args.z_ppm_new) if args.z_ppm_new else None,
        synth_case=Path(args.synth) if args.synth else None,
        policy=_policy_from(args),
        critical_freqs=(
            _parse_freq_list(args.critical_freqs) if args.critical_freqs else None
        ),
        out_dir=Path(args.out_dir),
        formats=tuple(f.strip() for f in args.format.split(",") if f.strip()),
    )
    report, code = run_assessment(cfg)
    with _stage("io"):
        _write_outputs(report, cfg)
    _print_verdict(report)
    return code


def _cmd_loopgain(args) -> int:
    with _stage("parse"):
        z_net = _read_response(Path(args.z_net))
        z_ppm = _read_response(Path(args.z_ppm))
    with _stage("loopgain"):
        z_net, z_ppm = align([z_net, z_ppm])
        lg = loop_gain(z_net, z_ppm, label="L")
    with _stage("io"):
        Path(args.out).write_bytes(write_response(lg.response))
    print(f"wrote {args.out} ({lg.derivation.method} construction)")
    return 0


def _cmd_margins(args) -> int:
    with _stage("parse"):
        l = _read_response(Path(args.loop_gain))
    with _stage("margins"):
        summary = summarize_margins(l, _policy_from(args))
    print("| f (Hz) | kind | margin |")
    print("| --- | --- | --- |")
    for cp in summary.crossovers:
        margin = f"PM {cp.pm_deg} deg" if cp.kind == "gain" else f"GM {cp.gm_db} dB"
        print(f"| {cp.f_hz} | {cp.kind} | {margin} |")
    print(f"verdict: {summary.verdict}")
    return _EXIT_BY_VERDICT[summary.verdict]


def _cmd_limit(args) -> int:
    with _stage("parse"):
        l_old = _read_response(Path(args.l_old))
        z_net = _read_response(Path(args.z_net_old))
    with _stage("limit"):
        if args.critical_freqs:
            freqs = _parse_freq_list(args.critical_freqs)
        elif args.detect_from:
            l_probe = _read_response(Path(args.detect_from))
            freqs = tuple(
                cp.f_hz for cp in summarize_margins(l_probe, _policy_from(args)).crossovers
                if cp.kind == "gain"
            )
        else:
            raise ValueError("need --critical-freqs or --detect-from")
        limits = limit_curve(l_old, z_net, freqs, _policy_from(args))

    lines = []
    code = 0
    if args.z_new:
        with _stage("compliance"):
            z_new = _read_response(Path(args.z_new))
            records = check_compliance(z_new, limits)
        lines.append("freq_hz,z_new_ohm,z_limit_ohm,verdict")
        for rec in records:
            z_lim = "" if rec.z_limit_ohm is None else repr(rec.z_limit_ohm)
            lines.append(f"{rec.f_hz!r},{rec.z_new_mag_ohm!r},{z_lim},{rec.verdict}")
        if any(rec.verdict == "violation" for rec in records):
            code = 1
    else:
        lines.append("freq_hz,z_limit_ohm,delta_pm_deg,flags")
        for f, z_lim, dpm, flags in zip(
            limits.freqs, limits.z_limit_ohm, limits.delta_pm_deg, limits.flags
        ):
            z_txt = "" if z_lim is None else repr(z_lim)
            lines.append(f"{f!r},{z_txt},{dpm!r},{'|'.join(sorted(flags))}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with _stage("io"):
            Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code


def _cmd_synth(args) -> int:
    span = _parse_span(args.span)
    if args.network:
        with _stage("parse"):
            desc = network_from_json(Path(args.network).read_bytes())
        with _stage("io"):
            grid = log_grid(span[0], span[1], args.points)
            resp = eval_network(desc, grid)
            out = Path(args.out or "network.csv")
            out.write_bytes(write_response(resp))
        print(f"wrote {out}")
        return 0
    if args.bundled:
        with _stage("io"):
            paths = _fixtures.write_bundled_case(args.bundled, Path(args.out_dir))
        for role, path in paths.items():
            print(f"wrote {path} ({role})")
        return 0
    if args.case:
        with _stage("parse"):
            curves = _load_synth_case(Path(args.case))
        with _stage("io"):
            out_dir = Path(args.out_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            for resp in curves:
                path = out_dir / f"{resp.label}.csv"
                path.write_bytes(write_response(resp))
                print(f"wrote {path}")
        return 0
    # --seed: random fixture
    with _stage("synth"):
        case = random_case(args.seed, args.n_strings, span)
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for resp in case.responses():
            path = out_dir / f"{resp.label}.csv"
            path.write_bytes(write_response(resp))
            print(f"wrote {path}")
    return 0


def _cmd_nyquist(args) -> int:
    with _stage("parse"):
        curves = []
        for path in args.loop_gain:
            resp = _read_response(Path(path))
            curves.append((resp.label or Path(path).stem, resp))
    with _stage("regions"):
        policy = _policy_from(args)
        summaries = [summarize_margins(resp, policy) for _, resp in curves]
    with _stage("io"):
        Path(args.out).write_text(
            nyquist_svg_chart(policy, curves, summaries), encoding="utf-8"
        )
    print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "check": _cmd_check,
    "loopgain": _cmd_loopgain,
    "margins": _cmd_margins,
    "limit": _cmd_limit,
    "synth": _cmd_synth,
    "nyquist": _cmd_nyquist,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.cmd](args)
    except StageFailure as exc:
        print(f"error {exc}", file=sys.stderr)
        return 2
    except MarginGateError as exc:
        print(f"error [stage={args.cmd}] {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error [stage=config] {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
