import json
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from margingate.cli import RunConfig, build_parser, main, run_assessment
from margingate.fixtures import BUNDLED_CASES, bundled_case, write_bundled_case
from margingate.freqresp import log_grid, parse_response
from margingate.netsynth import Inductor, Resistor, Series, eval_network, network_to_json
from margingate.speclimit import MarginPolicy


@pytest.fixture(scope="module")
def compliant_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("compliant")
    return write_bundled_case("compliant-A", d)


def check_args(paths, out_dir, *extra):
    return [
        "check",
        "--z-ppm", str(paths["z_ppm_existing"]),
        "--z-net-old", str(paths["z_net_old"]),
        "--z-ppm-new", str(paths["z_ppm_new"]),
        "--out-dir", str(out_dir),
        *extra,
    ]


class TestExitCodes:
    def test_compliant_exit_0(self, compliant_dir, tmp_path):
        assert main(check_args(compliant_dir, tmp_path)) == 0

    def test_tableii_exit_1(self, tmp_path):
        paths = write_bundled_case("tableII-like", tmp_path / "in")
        assert main(check_args(paths, tmp_path / "out")) == 1

    def test_caution_exit_1(self, compliant_dir, tmp_path):
        # raising the caution threshold above the fixture's ~67 deg PM
        # pushes the verdict into the caution band
        code = main(
            check_args(compliant_dir, tmp_path, "--pm-cau-deg", "80")
        )
        assert code == 1
        obj = json.loads((tmp_path / "report.json").read_bytes())
        assert obj["overall_verdict"] == "caution"

    def test_invalid_header_exit_2(self, tmp_path, capsys):
        paths = write_bundled_case("invalid-header", tmp_path / "in")
        assert main(check_args(paths, tmp_path / "out")) == 2
        assert "stage=parse" in capsys.readouterr().err

    def test_missing_file_exit_2(self, tmp_path, capsys):
        code = main(
            [
                "check",
                "--z-ppm", str(tmp_path / "missing.csv"),
                "--z-net-old", str(tmp_path / "missing2.csv"),
                "--z-ppm-new", str(tmp_path / "missing3.csv"),
                "--out-dir", str(tmp_path),
            ]
        )
        assert code == 2
        assert "stage=parse" in capsys.readouterr().err

    def test_violation_noted_on_stderr(self, tmp_path, capsys):
        paths = write_bundled_case("tableII-like", tmp_path / "in")
        main(check_args(paths, tmp_path / "out"))
        err = capsys.readouterr().err
        assert "violation" in err and "exceeds limit" in err

    def test_unknown_format_exit_2(self, compliant_dir, tmp_path, capsys):
        code = main(check_args(compliant_dir, tmp_path, "--format", "pdf"))
        assert code == 2
        assert "unknown formats" in capsys.readouterr().err

    def test_conflicting_modes_exit_2(self, compliant_dir, tmp_path, capsys):
        code = main(
            check_args(compliant_dir, tmp_path, "--synth", str(tmp_path / "case.json"))
        )
        assert code == 2
        assert "exactly one input mode" in capsys.readouterr().err


class TestDeterminism:
    def test_byte_identical_reports(self, compliant_dir, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        fmt = ["--format", "json,markdown,nyquist_svg,bode_svg"]
        assert main(check_args(compliant_dir, a, *fmt)) == 0
        assert main(check_args(compliant_dir, b, *fmt)) == 0
        for name in ("report.json", "report.md", "nyquist.svg", "bode.svg"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name


class TestRunConfig:
    def test_exactly_one_mode(self, tmp_path):
        with pytest.raises(ValueError):
            RunConfig()  # neither mode
        with pytest.raises(ValueError):
            RunConfig(
                z_ppm_existing=Path("a"),
                z_net_old=Path("b"),
                z_ppm_new=Path("c"),
                synth_case=Path("d"),
            )

    def test_run_assessment_report(self, compliant_dir):
        cfg = RunConfig(
            z_ppm_existing=compliant_dir["z_ppm_existing"],
            z_net_old=compliant_dir["z_net_old"],
            z_ppm_new=compliant_dir["z_ppm_new"],
        )
        report, code = run_assessment(cfg)
        assert code == 0
        assert report.overall_verdict == "compliant"
        assert report.consistency_error < 1e-10
        assert report.inputs["critical_frequency_mode"] == "detected-crossovers"
        assert any("right-half-plane" in p for p in report.inputs["asserted_preconditions"])

    def test_critical_freqs_mode(self, compliant_dir):
        cfg = RunConfig(
            z_ppm_existing=compliant_dir["z_ppm_existing"],
            z_net_old=compliant_dir["z_net_old"],
            z_ppm_new=compliant_dir["z_ppm_new"],
            critical_freqs=(100.0, 500.0),
        )
        report, _ = run_assessment(cfg)
        assert report.inputs["critical_frequency_mode"] == "operator-specified"
        assert report.limit_curve.freqs == (100.0, 500.0)
        assert len(report.compliance) == 2


class TestReportContents:
    def test_json_is_valid_and_complete(self, compliant_dir, tmp_path):
        main(check_args(compliant_dir, tmp_path, "--format", "json,nyquist_svg"))
        obj = json.loads((tmp_path / "report.json").read_bytes())
        assert obj["overall_verdict"] == "compliant"
        assert obj["consistency_error"] < 1e-10
        assert obj["encirclements"]["l_new"]["winding"] == 0
        ET.fromstring((tmp_path / "nyquist.svg").read_bytes())


class TestSubcommands:
    def test_loopgain_roundtrip(self, compliant_dir, tmp_path):
        out = tmp_path / "lg.csv"
        code = main(
            [
                "loopgain",
                "--z-net", str(compliant_dir["z_net_old"]),
                "--z-ppm", str(compliant_dir["z_ppm_existing"]),
                "--out", str(out),
            ]
        )
        assert code == 0
        lg = parse_response(out.read_bytes())
        z_net = parse_response(compliant_dir["z_net_old"].read_bytes())
        z_ppm = parse_response(compliant_dir["z_ppm_existing"].read_bytes())
        assert lg.unit == "dimensionless"
        assert lg.samples[0] == z_net.samples[0] / z_ppm.samples[0]

    def test_margins_subcommand(self, compliant_dir, tmp_path, capsys):
        lg_file = tmp_path / "lg.csv"
        main(
            [
                "loopgain",
                "--z-net", str(compliant_dir["z_net_old"]),
                "--z-ppm", str(compliant_dir["z_ppm_existing"]),
                "--out", str(lg_file),
            ]
        )
        capsys.readouterr()
        code = main(["margins", "--loop-gain", str(lg_file)])
        out = capsys.readouterr().out
        assert code == 0
        assert "gain" in out and "verdict: compliant" in out

    def test_limit_subcommand_with_compliance(self, compliant_dir, tmp_path, capsys):
        lg_file = tmp_path / "lg.csv"
        main(
            [
                "loopgain",
                "--z-net", str(compliant_dir["z_net_old"]),
                "--z-ppm", str(compliant_dir["z_ppm_existing"]),
                "--out", str(lg_file),
            ]
        )
        out_file = tmp_path / "limit.csv"
        code = main(
            [
                "limit",
                "--l-old", str(lg_file),
                "--z-net-old", str(compliant_dir["z_net_old"]),
                "--critical-freqs", "150,500",
                "--z-new", str(compliant_dir["z_ppm_new"]),
                "--out", str(out_file),
            ]
        )
        text = out_file.read_text()
        assert text.splitlines()[0] == "freq_hz,z_new_ohm,z_limit_ohm,verdict"
        assert len(text.splitlines()) == 3
        assert code in (0, 1)

    def test_synth_network(self, tmp_path):
        net_file = tmp_path / "net.json"
        net_file.write_bytes(network_to_json(Series((Resistor(2.0), Inductor(1e-3)))))
        out = tmp_path / "z.csv"
        code = main(
            [
                "synth",
                "--network", str(net_file),
                "--span", "10:1000",
                "--points", "50",
                "--out", str(out),
            ]
        )
        assert code == 0
        resp = parse_response(out.read_bytes())
        assert len(resp.grid) == 50
        expected = eval_network(
            Series((Resistor(2.0), Inductor(1e-3))), log_grid(10, 1000, 50)
        )
        assert resp == expected

    def test_synth_bundled(self, tmp_path):
        code = main(["synth", "--bundled", "compliant-A", "--out-dir", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "z_ppm_existing.csv").exists()

    def test_synth_random_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            assert main(
                ["synth", "--seed", "7", "--n-strings", "2",
                 "--span", "1:10000", "--out-dir", str(d)]
            ) == 0
        for name in ("Z_ppm_existing.csv", "Z_net_old.csv", "Z_ppm_new.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_nyquist_subcommand(self, compliant_dir, tmp_path):
        lg_file = tmp_path / "lg.csv"
        main(
            [
                "loopgain",
                "--z-net", str(compliant_dir["z_net_old"]),
                "--z-ppm", str(compliant_dir["z_ppm_existing"]),
                "--out", str(lg_file),
            ]
        )
        out = tmp_path / "ny.svg"
        code = main(["nyquist", "--loop-gain", str(lg_file), "--out", str(out)])
        assert code == 0
        ET.fromstring(out.read_bytes())

    def test_synth_case_mode(self, tmp_path):
        case = {
            "grid": {"start_hz": 10.0, "stop_hz": 1000.0, "points": 64},
            "z_ppm_existing": {"type": "resistor", "r_ohm": 10.0},
            "z_net_old": {"type": "resistor", "r_ohm": 5.0},
            "z_ppm_new": {"type": "resistor", "r_ohm": 20.0},
        }
        case_file = tmp_path / "case.json"
        case_file.write_text(json.dumps(case))
        code = main(["check", "--synth", str(case_file), "--out-dir", str(tmp_path)])
        assert code == 0  # constant L = 0.5: no crossovers, no violations
        obj = json.loads((tmp_path / "report.json").read_bytes())
        assert obj["l_new"]["crossovers"] == []


class TestParser:
    def test_policy_flags(self):
        args = build_parser().parse_args(
            ["check", "--z-ppm", "a", "--z-net-old", "b", "--z-ppm-new", "c",
             "--pm-min-deg", "20", "--pm-cau-deg", "40", "--gm-min-db", "10"]
        )
        assert MarginPolicy(args.pm_min_deg, args.pm_cau_deg, args.gm_min_db) == MarginPolicy(
            20.0, 40.0, 10.0
        )


class TestFixtures:
    def test_bundled_names(self):
        assert set(BUNDLED_CASES) == {"compliant-A", "tableII-like", "invalid-header"}
        with pytest.raises(ValueError):
            write_bundled_case("nope", "/tmp")

    def test_tableii_targets_twice_the_limit(self):
        # dense-sweep oracle: the scaled plant sits at 2x the limit at the
        # first detected new gain crossover
        from margingate.freqresp import value_at
        from margingate.loopgain import loop_gain, rho, update_loop_gain
        from margingate.margins import find_crossovers
        from margingate.speclimit import limit_curve

        z_ppm, z_net, z_new = bundled_case("tableII-like")
        l_old = loop_gain(z_net, z_ppm).response
        ratio = rho(z_net, z_new)
        l_new = update_loop_gain(l_old, ratio).response
        gains = find_crossovers(l_new, "gain")
        assert gains
        f1 = gains[0].f_hz
        limits = limit_curve(l_old, z_net, [f1], MarginPolicy(), ratio)
        assert abs(value_at(z_new, f1)) == pytest.approx(
            2.0 * limits.z_limit_ohm[0], rel=1e-9
        )

    def test_compliant_case_margins_oracle(self):
        # dense-sweep oracle: every crossover of both curves keeps PM > 30
        from margingate.loopgain import loop_gain, rho, update_loop_gain
        from margingate.margins import find_crossovers

        z_ppm, z_net, z_new = bundled_case("compliant-A")
        l_old = loop_gain(z_net, z_ppm).response
        l_new = update_loop_gain(l_old, rho(z_net, z_new)).response
        for curve in (l_old, l_new):
            gains = find_crossovers(curve, "gain")
            assert gains, "fixture must exercise a crossover"
            assert all(cp.pm_deg > 30.0 for cp in gains)
