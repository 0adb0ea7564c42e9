import math

import numpy as np
import pytest

from macap import cli, save_channel
from macap.verify import random_channel
from macap.model import MacType

from conftest import make_adder, make_bsc


@pytest.fixture(scope="module")
def adder_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("chan") / "adder.mac"
    path.write_text(save_channel(make_adder()))
    return str(path)


@pytest.fixture(scope="module")
def nonelem_path(tmp_path_factory):
    rng = np.random.default_rng(32)
    P = random_channel(MacType((3, 2), 2), rng)
    path = tmp_path_factory.mktemp("chan") / "rand.mac"
    path.write_text(save_channel(P))
    return str(path)


def run_to_file(argv, tmp_path, name="out.txt"):
    out = tmp_path / name
    code = cli.run(argv + ["--out", str(out)])
    return code, out.read_bytes()


class TestCapacityCommand:
    def test_adder_report(self, adder_path, tmp_path):
        code, body = run_to_file(["capacity", adder_path], tmp_path)
        text = body.decode()
        assert code == 0
        assert "schema: mac-report/1" in text
        assert "capacity-bits: 1.5" in text
        assert "kt-satisfied: true" in text
        value = float(
            next(l for l in text.splitlines() if l.startswith("capacity-nats:")).split()[1]
        )
        assert value == pytest.approx(1.5 * math.log(2.0), abs=1e-9)

    def test_oracle_flag(self, adder_path, tmp_path):
        code, body = run_to_file(["capacity", adder_path, "--oracle", "51"], tmp_path)
        assert code == 0
        assert "oracle-consistent: true" in body.decode()


class TestKtCheckCommand:
    def test_uniform(self, adder_path, tmp_path):
        code, body = run_to_file(
            ["kt-check", adder_path, "--ipd", "uniform"], tmp_path
        )
        assert code == 0
        assert "kt-satisfied: true" in body.decode()

    def test_inline_and_vertex(self, adder_path, tmp_path):
        code, body = run_to_file(
            ["kt-check", adder_path, "--ipd", "0.5,0.5;0.25,0.75"], tmp_path
        )
        assert code == 0
        code, body = run_to_file(
            ["kt-check", adder_path, "--ipd", "vertex:1,0"], tmp_path
        )
        assert code == 0
        assert "mutual-information-nats: 0.0" in body.decode()

    def test_bad_ipd(self, adder_path):
        assert cli.run(["kt-check", adder_path, "--ipd", "0.5,0.6;0.5,0.5"]) == 1
        assert cli.run(["kt-check", adder_path, "--ipd", "0.5,0.5"]) == 1


class TestFacesCommand:
    def test_three_faces(self, nonelem_path, tmp_path):
        code, body = run_to_file(["faces", nonelem_path], tmp_path)
        assert code == 0
        text = body.decode()
        assert "face-count: 3" in text
        assert "elementary: false" in text
        assert text.count("user1={") == 3


class TestRegionCommand:
    def test_report_and_csv(self, adder_path, tmp_path):
        code, body = run_to_file(
            ["region", adder_path, "--resolution", "11"], tmp_path
        )
        assert code == 0
        assert "hull-vertices:" in body.decode()
        code, body = run_to_file(
            ["region", adder_path, "--resolution", "5", "--format", "csv"],
            tmp_path,
            "cloud.csv",
        )
        assert code == 0
        lines = body.decode().splitlines()
        assert lines[0] == "order,R1,R2"
        assert lines[1].startswith("1-2,")
        code, _ = run_to_file(
            ["region", adder_path, "--resolution", "5", "--orders", "1"], tmp_path
        )
        assert code == 0


class TestOracleCommand:
    def test_bsc(self, tmp_path):
        path = tmp_path / "bsc.mac"
        path.write_text(save_channel(make_bsc(0.1)))
        code, body = run_to_file(["oracle", str(path), "--resolution", "201"], tmp_path)
        assert code == 0
        value = float(
            next(
                l for l in body.decode().splitlines()
                if l.startswith("oracle-value-nats:")
            ).split()[1]
        )
        eps = 0.1
        expect = math.log(2) + eps * math.log(eps) + (1 - eps) * math.log(1 - eps)
        assert value == pytest.approx(expect, abs=1e-4)

    def test_guard_exit(self, adder_path):
        assert cli.run(["oracle", adder_path, "--resolution", "100000"]) == 2


class TestVerifyCommand:
    def test_oracle_suite_passes(self, tmp_path):
        code, body = run_to_file(
            ["verify", "--suite", "oracle", "--trials", "2", "--resolution", "25"],
            tmp_path,
        )
        assert code == 0
        assert "passed: true" in body.decode()

    def test_failing_suite_exits_3(self, monkeypatch, tmp_path):
        from macap import suites

        monkeypatch.setattr(
            suites,
            "run_suite",
            lambda *a, **k: suites.SuiteResult("kt", False, ("FAIL simulated",)),
        )
        code, body = run_to_file(["verify", "--suite", "kt"], tmp_path)
        assert code == 3
        assert "passed: false" in body.decode()


class TestExitCodes:
    def test_unknown_subcommand(self, capsys):
        assert cli.run(["frobnicate"]) == 64
        assert cli.run([]) == 64

    def test_missing_file(self):
        assert cli.run(["capacity", "/nonexistent/chan.mac"]) == 1

    def test_invalid_file(self, tmp_path):
        bad = tmp_path / "bad.mac"
        bad.write_text("type 2 : 2\n0 : 0.5 0.4\n1 : 0 1\n")
        assert cli.run(["capacity", str(bad)]) == 1


class TestDeterminism:
    def test_reports_byte_identical(self, adder_path, tmp_path, capsys):
        argv = ["capacity", adder_path, "--seed", "3"]
        assert cli.run(argv) == 0
        first = capsys.readouterr().out
        assert cli.run(argv) == 0
        second = capsys.readouterr().out
        assert first == second

    def test_threads_byte_identical(self, nonelem_path, tmp_path):
        out = tmp_path / "rep.txt"
        argv = ["capacity", nonelem_path, "--threads", "8", "--out", str(out)]
        assert cli.run(argv) == 0
        first = out.read_bytes()
        assert cli.run(argv) == 0
        assert out.read_bytes() == first
