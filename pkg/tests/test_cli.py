import csv
import math

import pytest

from hlsverify import cli


def run_cli(args):
    return cli.main(args)


class TestEndToEnd:
    def test_constants_csv(self, tmp_path):
        code = run_cli(["constants", "--n", "3", "--out", str(tmp_path)])
        assert code == 0
        lines = (tmp_path / "constants.csv").read_text().splitlines()
        assert lines[0] == "n,S_n,C_n,kappa_n,ustar_p_norm_p"
        fields = lines[1].split(",")
        assert fields[0] == "3"
        assert float(fields[1]) == pytest.approx(3 * (math.pi / 2) ** (4 / 3))
        assert float(fields[2]) == pytest.approx(1 / (3 * (math.pi / 2) ** (4 / 3)))
        assert float(fields[3]) == pytest.approx(32 / 1575)
        assert float(fields[4]) == pytest.approx(math.pi ** 2 / 4)

    def test_gap_csv_columns(self, tmp_path):
        code = run_cli(["gap", "--n", "3", "--K", "8", "--out", str(tmp_path)])
        assert code == 0
        with open(tmp_path / "gap.csv", newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert [r["k"] for r in rows] == [str(k) for k in range(2, 9)]
        assert rows[0]["mu_k"] == "35"
        assert all(r["pass"] == "true" for r in rows)

    def test_deterministic_bodies(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        args = ["verify-ruc", "--n", "3", "--eps", "0.5", "--trials", "4",
                "--seed", "11"]
        assert run_cli(args + ["--out", str(out1)]) == 0
        assert run_cli(args + ["--out", str(out2)]) == 0
        assert (out1 / "verify-ruc.csv").read_bytes() \
            == (out2 / "verify-ruc.csv").read_bytes()

    def test_lf_line_endings(self, tmp_path):
        run_cli(["constants", "--n", "4", "--out", str(tmp_path)])
        raw = (tmp_path / "constants.csv").read_bytes()
        assert b"\r" not in raw
        assert raw.endswith(b"\n")

    def test_summary_written(self, tmp_path):
        run_cli(["constants", "--n", "3", "--out", str(tmp_path)])
        text = (tmp_path / "constants_summary.txt").read_text()
        assert "command: constants" in text
        assert "exit: 0" in text
        assert "timestamp:" in text

    def test_precondition_violation_exit2(self, tmp_path, capsys):
        code = run_cli(["constants", "--n", "2", "--out", str(tmp_path)])
        assert code == 2
        assert "n >= 3" in capsys.readouterr().err


class TestConfigFile:
    def test_file_then_flag_precedence(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n=4\nout=" + str(tmp_path) + "\n")
        code = run_cli(["constants", "--config", str(cfg)])
        assert code == 0
        assert (tmp_path / "constants.csv").read_text().splitlines()[1] \
            .startswith("4,")
        code = run_cli(["constants", "--config", str(cfg), "--n", "5"])
        assert code == 0
        assert (tmp_path / "constants.csv").read_text().splitlines()[1] \
            .startswith("5,")

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("n=3\nwibble=1\n")
        code = run_cli(["constants", "--config", str(cfg)])
        assert code == 2
        assert "unknown key" in capsys.readouterr().err

    def test_malformed_line_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("just some words\n")
        assert run_cli(["constants", "--config", str(cfg)]) == 2

    def test_comments_and_lists(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# suite setup\nn=3\neps=0.3,0.6\ntrials=2\nseed=1\n"
                       f"out={tmp_path}\n")
        code = run_cli(["verify-ruc", "--config", str(cfg)])
        assert code == 0
        with open(tmp_path / "verify-ruc.csv", newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 4
        assert {r["eps"] for r in rows} == {"0.29999999999999999",
                                            "0.59999999999999998"}


class TestExitCodes:
    def test_failed_verdict_exit1(self, tmp_path, monkeypatch):
        payload = {"command": "gap", "passed": False,
                   "counts": {"pass": 1, "fail": 1, "not-applicable": 0,
                              "exploratory": 0},
                   "notes": [],
                   "rows": [{"k": "2", "mu_k": 35, "quotient": 0.03,
                             "bound": 0.028, "status": "fail"}]}
        monkeypatch.setattr(cli.ServiceClient, "post",
                            lambda self, endpoint, body: payload)
        code = run_cli(["gap", "--n", "3", "--out", str(tmp_path)])
        assert code == 1
        text = (tmp_path / "gap.csv").read_text().splitlines()
        assert text[1].endswith("false")

    def test_unknown_command_rejected(self):
        with pytest.raises(SystemExit) as exc:
            cli.build_parser().parse_args(["frobnicate"])
        assert exc.value.code == 2
