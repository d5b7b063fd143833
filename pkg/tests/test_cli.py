import csv
import io
import json
import subprocess
import sys

import pytest

from fhsplit import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestDimension:
    def test_4165(self, capsys):
        code, out, _ = run(capsys, "dimension", "--bw", "100", "--layers", "8", "--om", "8", "--format", "csv")
        assert code == 0
        row = next(r for r in csv_rows(out) if (r["split"], r["direction"]) == ("S73", "DL"))
        assert row["gbps"] == "4.165"

    def test_cpri(self, capsys):
        _, out, _ = run(capsys, "dimension", "--bw", "20", "--ant", "2", "--format", "csv")
        row = next(r for r in csv_rows(out) if (r["split"], r["direction"]) == ("S8", "DL"))
        assert row["mbps"] == "2457.6"

    def test_empty_grid(self, capsys):
        _, out, _ = run(capsys, "dimension", "--n-rb", "0", "--format", "csv")
        row = next(r for r in csv_rows(out) if (r["split"], r["direction"]) == ("S73", "DL"))
        assert row["mbps"] == "133.0"

    def test_config_file(self, capsys, tmp_path):
        conf = tmp_path / "cell.conf"
        conf.write_text("# 100 MHz massive cell\nbandwidth = 100\nlayers = 8\no_m = 8\n")
        _, out, _ = run(capsys, "dimension", "--config", str(conf), "--format", "csv")
        row = next(r for r in csv_rows(out) if (r["split"], r["direction"]) == ("S73", "DL"))
        assert row["mbps"] == "4165.0"

    def test_flag_overrides_config(self, capsys, tmp_path):
        conf = tmp_path / "cell.conf"
        conf.write_text("bandwidth = 100\n")
        _, out, _ = run(capsys, "dimension", "--config", str(conf), "--bw", "20", "--format", "csv")
        assert "2457.6" in out


class TestTables:
    def test_capacity_footnote(self, capsys):
        code, out, _ = run(capsys, "capacity-table")
        assert code == 0
        assert "1440.0*" in out and "1140.0" in out
        assert "5.5" in out

    def test_peak_table(self, capsys):
        _, out, _ = run(capsys, "peak-table", "--format", "csv")
        rows = csv_rows(out)
        row = next(r for r in rows if (r["direction"], r["layers"], r["o_m"]) == ("DL", "2", "6"))
        assert row["20MHz"] == "151.2"

    def test_gain_table(self, capsys):
        _, out, _ = run(capsys, "gain-table", "--format", "csv")
        rows = {r["o_m"]: r for r in csv_rows(out)}
        assert (rows["6"]["ul_sbw5"], rows["6"]["dl"]) == ("1.1", "5.3")


class TestDelegates:
    def test_placement(self, capsys):
        _, out, _ = run(capsys, "placement", "--format", "summary")
        assert json.loads(out)["summary"]["max_distance_km"] == 100.0

    def test_mux(self, capsys):
        _, out, _ = run(capsys, "mux", "--peak", "1", "--activity", "0.5", "--format", "summary")
        summary = json.loads(out)["summary"]
        assert summary["percentile_demand_mbps"] == 8.0 and summary["mux_gain"] == 1.25

    def test_emulate(self, capsys, tmp_path):
        code, out, _ = run(capsys, "emulate", "--duration-ms", "50", "--out", str(tmp_path))
        assert code == 0 and "DL" in out and "UL" in out
        assert (tmp_path / "emulate_tti.csv").read_text().count("\n") == 51

    def test_emulate_sweep(self, capsys):
        _, out, _ = run(capsys, "emulate", "--duration-ms", "20", "--sweep", "0,50%,100%", "--format", "csv")
        assert len(csv_rows(out)) == 3


class TestExitCodes:
    def test_configuration(self, capsys):
        code, _, err = run(capsys, "dimension", "--bw", "7")
        assert code == 2 and "bandwidth" in err

    def test_bad_config_key(self, capsys, tmp_path):
        conf = tmp_path / "bad.conf"
        conf.write_text("colour = blue\n")
        assert run(capsys, "dimension", "--config", str(conf))[0] == 2

    def test_capacity(self, capsys):
        assert run(capsys, "dimension", "--load", "1000")[0] == 3

    def test_infeasible(self, capsys):
        assert run(capsys, "placement", "--dl-ms", "5", "--ul-ms", "5")[0] == 3

    def test_emulator_overload(self, capsys):
        assert run(capsys, "emulate", "--load", "500", "--duration-ms", "5")[0] == 3

    def test_session_error(self, capsys):
        # a port that cannot be bound
        code, _, err = run(capsys, "emulate", "--transport", "udp", "--port", "70000", "--duration-ms", "5")
        assert code == 4

    def test_argparse_usage(self):
        with pytest.raises(SystemExit) as info:
            cli.main(["dimension", "--format", "xml"])
        assert info.value.code == 2


class TestStructuredOutput:
    @pytest.mark.parametrize("argv", [
        ["dimension", "--bw", "20"],
        ["capacity-table"],
        ["mux", "--cells", "5", "--trials", "5000", "--seed", "7"],
        ["emulate", "--duration-ms", "20", "--direction", "dl"],
    ])
    def test_byte_identical_reruns(self, capsys, tmp_path, argv):
        outputs = []
        for i in range(2):
            out_dir = tmp_path / str(i)
            assert run(capsys, *argv, "--out", str(out_dir))[0] == 0
            name = argv[0].replace("-", "_")
            doc = json.loads((out_dir / f"{name}.json").read_text())
            assert set(doc["manifest"]["timestamps"]) == {"started", "finished"}
            del doc["manifest"]["timestamps"]
            outputs.append((json.dumps(doc, sort_keys=True), (out_dir / f"{name}.csv").read_bytes()))
        assert outputs[0] == outputs[1]

    def test_full_precision_in_structured_output(self, capsys, tmp_path):
        run(capsys, "capacity-table", "--out", str(tmp_path))
        rows = json.loads((tmp_path / "capacity_table.json").read_text())["rows"]
        fs7 = next(r for r in rows if r["split"] == "FS-VII")
        assert fs7["1.4_exact"] == pytest.approx(5.544)

    def test_env_out_dir(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUT_ENV, str(tmp_path))
        run(capsys, "gain-table")
        assert (tmp_path / "gain_table.csv").exists()


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "fhsplit.cli", "gain-table"], capture_output=True, text=True)
    assert out.returncode == 0 and "256QAM" in out.stdout
