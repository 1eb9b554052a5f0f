import cmath
import math
import re
import xml.etree.ElementTree as ET

import pytest

from margingate.errors import InconsistentInputs, UnsupportedFormat
from margingate.freqresp import log_grid
from margingate.margins import CrossoverPoint, MarginDecomposition, MarginSummary
from margingate.regions import EncirclementResult
from margingate.report import SCHEMA, build_report, parse_report, render
from margingate.speclimit import (
    FLAG_PREEXISTING,
    ComplianceRecord,
    LimitCurve,
    MarginPolicy,
)

from conftest import first_order
from test_speclimit import ROWS_WITHIN_LIMIT, ROWS_EXCEEDING_LIMIT, table_limit_curve, table_z_new
from margingate.speclimit import check_compliance

POLICY = MarginPolicy(15.0, 30.0, 15.0)


def unit_angle(deg):
    return cmath.exp(1j * math.radians(deg))


def empty_summary(verdict="compliant"):
    return MarginSummary(
        crossovers=(), worst_pm=None, worst_gm=None, policy=POLICY, verdict=verdict
    )


def summary_with_crossover(pm_deg=60.0, verdict="compliant"):
    cp = CrossoverPoint("gain", 120.0, unit_angle(pm_deg - 180.0), pm_deg=pm_deg)
    return MarginSummary(
        crossovers=(cp,), worst_pm=cp, worst_gm=None, policy=POLICY, verdict=verdict
    )


def empty_limits():
    return LimitCurve((), (), (), (), (), ())


def no_encirclement():
    return EncirclementResult(0, 2.0, ())


def basic_report(compliance_rows=ROWS_WITHIN_LIMIT, limit=None, windings=(0, 0), curves=()):
    limit = limit if limit is not None else table_limit_curve(compliance_rows)
    compliance = check_compliance(table_z_new(compliance_rows), limit)
    return build_report(
        inputs={"labels": {"z_ppm_existing": "A", "z_net_old": "B", "z_ppm_new": "C"}},
        l_old_summary=summary_with_crossover(70.0),
        l_new_summary=summary_with_crossover(60.0),
        decompositions=(
            MarginDecomposition(120.0, 70.0, 10.0, 60.0, 1.2, 1.4, 1.1666),
        ),
        limit_curve=limit,
        compliance=compliance,
        encirclements={
            "l_old": EncirclementResult(windings[0], 1.5, ()),
            "l_new": EncirclementResult(windings[1], 1.2, ((0.0, 10.0),)),
        },
        consistency_error=3.2e-15,
        curves=curves,
    )


class TestBuild:
    def test_all_compliant(self):
        rep = basic_report()
        assert rep.overall_verdict == "compliant"

    def test_compliance_violation_dominates(self):
        rep = basic_report(compliance_rows=[r[:3] for r in ROWS_EXCEEDING_LIMIT])
        assert rep.overall_verdict == "violation"

    def test_winding_forces_violation(self):
        rep = basic_report(windings=(0, 2))
        assert rep.overall_verdict == "violation"

    def test_caution_propagates(self):
        limit = empty_limits()
        rep = build_report(
            inputs={},
            l_old_summary=empty_summary(),
            l_new_summary=summary_with_crossover(20.0, verdict="caution"),
            decompositions=(),
            limit_curve=limit,
            compliance=(),
            encirclements={"l_new": no_encirclement()},
            consistency_error=0.0,
        )
        assert rep.overall_verdict == "caution"

    def test_policy_mismatch_rejected(self):
        other = MarginSummary((), None, None, MarginPolicy(10.0, 20.0, 10.0), "compliant")
        with pytest.raises(InconsistentInputs):
            build_report(
                inputs={},
                l_old_summary=empty_summary(),
                l_new_summary=other,
                decompositions=(),
                limit_curve=empty_limits(),
                compliance=(),
                encirclements={},
                consistency_error=0.0,
            )

    def test_adding_violation_never_improves_verdict(self):
        severity = {"compliant": 0, "caution": 1, "violation": 2}
        base = basic_report(ROWS_WITHIN_LIMIT)
        rows_with_violation = ROWS_WITHIN_LIMIT + [(3000.0, 50.0, 10.0)]
        worse = basic_report(rows_with_violation)
        assert severity[worse.overall_verdict] >= severity[base.overall_verdict]
        assert worse.overall_verdict == "violation"

    def test_compliance_limit_mismatch_rejected(self):
        with pytest.raises(InconsistentInputs):
            build_report(
                inputs={},
                l_old_summary=empty_summary(),
                l_new_summary=empty_summary(),
                decompositions=(),
                limit_curve=empty_limits(),
                compliance=(ComplianceRecord(10.0, 1.0, 2.0, "compliant"),),
                encirclements={},
                consistency_error=0.0,
            )


class TestJson:
    def test_round_trip_byte_identical(self):
        rep = basic_report()
        blob = render(rep, "json")
        assert render(parse_report(blob), "json") == blob

    def test_top_level_key_order(self):
        import json

        obj = json.loads(render(basic_report(), "json"))
        assert list(obj.keys()) == [
            "schema",
            "inputs",
            "l_old",
            "l_new",
            "decompositions",
            "limit_curve",
            "compliance",
            "encirclements",
            "consistency_error",
            "overall_verdict",
        ]
        assert obj["schema"] == SCHEMA

    def test_margin_entries_carry_required_keys(self):
        import json

        obj = json.loads(render(basic_report(), "json"))
        entry = obj["l_new"]["crossovers"][0]
        assert {"f_hz", "kind", "pm_deg", "region"} <= set(entry)

    def test_infinity_and_none_round_trip(self):
        limit = LimitCurve(
            freqs=(50.0, 100.0),
            z_limit_ohm=(math.inf, None),
            delta_pm_deg=(1e-14, -3.0),
            z_net_old_mag_ohm=(5.0, 5.0),
            r_diag=(1.5, None),
            flags=(frozenset(), frozenset({FLAG_PREEXISTING})),
        )
        z_new = table_z_new([(50.0, 1.0, None), (100.0, 1.0, None)])
        compliance = check_compliance(z_new, limit)
        rep = build_report(
            inputs={},
            l_old_summary=empty_summary(),
            l_new_summary=empty_summary("violation" if any(
                r.verdict == "violation" for r in compliance) else "compliant"),
            decompositions=(),
            limit_curve=limit,
            compliance=compliance,
            encirclements={"l_new": EncirclementResult(0, 0.5, ((1000.0, math.inf),))},
            consistency_error=0.0,
        )
        blob = render(rep, "json")
        back = parse_report(blob)
        assert back.limit_curve.z_limit_ohm[0] == math.inf
        assert back.limit_curve.z_limit_ohm[1] is None
        assert back.encirclements["l_new"].resolution_warnings[0][1] == math.inf
        assert render(back, "json") == blob

    def test_schema_guard(self):
        with pytest.raises(UnsupportedFormat):
            parse_report(b'{"schema": "other/9"}')

    def test_tampered_verdict_rejected(self):
        import json

        obj = json.loads(render(basic_report(), "json"))
        obj["overall_verdict"] = "violation"
        with pytest.raises(InconsistentInputs):
            parse_report(json.dumps(obj).encode())


class TestMarkdown:
    def test_table_one_row_rendering(self):
        text = render(basic_report(), "markdown").decode()
        assert "354.07 | 11.22 | 201.27 | compliant" in text

    def test_violation_row_rendering(self):
        text = render(basic_report([r[:3] for r in ROWS_EXCEEDING_LIMIT]), "markdown").decode()
        assert "794.76 | 70.03 | 7.15 | violation" in text
        assert "1628.8 | 194.24 | 156.76 | violation" in text

    def test_byte_stable(self):
        rep = basic_report()
        assert render(rep, "markdown") == render(rep, "markdown")


class TestSvg:
    def make_with_curves(self):
        g = log_grid(1, 10000, 400)
        return basic_report(
            curves=(
                ("L_old", first_order(2.0, 100.0, g)),
                ("L_new", first_order(1.6, 140.0, g)),
            )
        )

    def test_nyquist_structure(self):
        rep = self.make_with_curves()
        data = render(rep, "nyquist_svg")
        root = ET.fromstring(data)
        assert root.tag.endswith("svg")
        text = data.decode()
        assert text.count('<path class="wedge-critical"') == 1
        assert text.count('<path class="wedge-caution"') == 1
        loci = re.findall(r'<path class="locus locus-\d"', text)
        assert len(loci) == 2  # one locus path per input curve
        m = re.search(r'class="gm-circle"[^/]*\br="([0-9.eE+-]+)"', text)
        assert abs(float(m.group(1)) - 10.0 ** (-15.0 / 20.0)) < 1e-12

    def test_bode_structure(self):
        rep = self.make_with_curves()
        data = render(rep, "bode_svg")
        root = ET.fromstring(data)
        assert root.tag.endswith("svg")
        text = data.decode()
        assert len(re.findall(r'class="locus locus-mag', text)) == 2
        assert len(re.findall(r'class="locus locus-phase', text)) == 2

    def test_deterministic(self):
        rep = self.make_with_curves()
        assert render(rep, "nyquist_svg") == render(rep, "nyquist_svg")
        assert render(rep, "bode_svg") == render(rep, "bode_svg")


class TestDispatch:
    def test_unsupported_format(self):
        with pytest.raises(UnsupportedFormat):
            render(basic_report(), "pdf")
