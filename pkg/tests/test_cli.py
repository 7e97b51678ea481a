import csv
import json
import os

import pytest

from satabr.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main

FAST = ["--preset", "table1a", "--scale", "100", "--duration", "4", "-q"]


def read_queue(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_default_run_writes_three_files(tmp_path):
    out = tmp_path / "r"
    assert main(FAST + ["--out", str(out)]) == EXIT_OK
    assert sorted(os.listdir(out)) == ["queue.csv", "summary.json", "summary.txt"]


def test_queue_csv_columns_and_time_order(tmp_path):
    main(FAST + ["--out", str(tmp_path)])
    rows = read_queue(tmp_path / "queue.csv")
    assert rows[0] == ["time_ms", "abr_queue_cells", "total_queue_cells"]
    times = [float(r[0]) for r in rows[1:]]
    assert len(times) > 10
    assert all(b > a for a, b in zip(times, times[1:]))


def test_summary_json_and_text_agree(tmp_path):
    main(FAST + ["--out", str(tmp_path)])
    data = json.loads((tmp_path / "summary.json").read_text())
    text = (tmp_path / "summary.txt").read_text()
    assert f"max_abr_queue_cells: {data['max_abr_queue_cells']}\n" in text
    assert f"bounded_verdict: {data['bounded_verdict']}\n" in text
    assert data["config"]["n_sources"] == 5


def test_default_config_reports_full_rtt_in_cells(tmp_path):
    # short run at default scale; only the header metric matters here
    assert main(["--n", "1", "--duration", "0.01", "-q", "--out", str(tmp_path)]) == EXIT_OK
    data = json.loads((tmp_path / "summary.json").read_text())
    assert data["rtt_in_cells"] == 200_750


def test_flags_override_preset(tmp_path):
    main(FAST + ["--n", "2", "--service", "ubr", "--set", "mss=256", "--out", str(tmp_path)])
    cfg = json.loads((tmp_path / "summary.json").read_text())["config"]
    assert cfg["n_sources"] == 2 and cfg["service"] == "ubr" and cfg["mss"] == 256


def test_config_file(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("n = 2\nscale = 100\nduration = 3\nvbr = on\n")
    assert main(["--config", str(path), "-q", "--out", str(tmp_path / "o")]) == EXIT_OK


def test_traces_and_figures(tmp_path):
    args = FAST + ["--trace", "queue,acr,cwnd,erica", "--figures", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    names = set(os.listdir(tmp_path))
    assert {"acr.csv", "cwnd.csv", "erica.csv", "queue.png", "acr.png", "cwnd.png"} <= names
    assert (tmp_path / "queue.png").read_bytes()[:4] == b"\x89PNG"


@pytest.mark.parametrize(
    "argv",
    [
        ["--preset", "nope"],
        ["--set", "warp=1"],
        ["--set", "novalue"],
        ["--feedback-delay", "600"],
        ["--trace", "bogus"],
        ["--config", "does-not-exist.cfg"],
    ],
)
def test_config_errors_exit_1(argv, tmp_path, capsys):
    assert main(argv + ["--out", str(tmp_path)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["--scheme", "erica++"], ["--preset", "table1a", "--config", "x.cfg"]])
def test_usage_errors_exit_1(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == EXIT_CONFIG


def test_unwritable_output_exits_2(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(FAST + ["--out", str(blocker / "sub")]) == EXIT_RUNTIME
    assert "cannot write" in capsys.readouterr().err


def test_list_presets(capsys):
    assert main(["--list-presets"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "table2b" in out and "ubr5" in out
