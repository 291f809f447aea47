import json

import pytest

from avprosody.cli import EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, main
from avprosody.io import CSV_COLUMNS


@pytest.fixture
def synth_dir(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"label": "MANN", "duration": 1.6, "fps": 60.0,
                                "focus_interval": [0.6, 1.2]}))
    out = tmp_path / "synth"
    assert main(["synth", str(spec), "--strengths", "50,100,150,200", "-o", str(out)]) == EXIT_OK
    return out


def test_synth_writes_sessions(synth_dir):
    names = sorted(p.name for p in synth_dir.iterdir())
    assert "audio.wav" in names and "real.csv" in names and "vh_200.json" in names
    assert json.loads((synth_dir / "vh_50.json").read_text())["strength_percent"] == 50.0


def test_analyze_to_file_and_stdout(synth_dir, tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["analyze", str(synth_dir / "real.json"), "-o", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["label"] == "MANN" and doc["contours"] is not None
    assert main(["analyze", str(synth_dir / "vh_100.json")]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["strength_percent"] == 100.0


def test_compare_writes_table_report_and_figure(synth_dir, tmp_path, capsys):
    out = tmp_path / "cmp"
    vh = [str(synth_dir / f"vh_{s}.json") for s in (50, 100, 150, 200)]
    code = main(["compare", str(synth_dir / "real.json"), *vh, "-o", str(out),
                 "--feature", "focal-extremum", "--focus-interval", "0.6,1.2", "--save-results"])
    assert code == EXIT_OK
    table = (out / "table.txt").read_text()
    assert table == capsys.readouterr().out
    assert 'Focus "MANN"' in table and "all p < 0.001" in table
    assert (out / "figure.svg").read_text().count('class="panel"') == 3
    assert (out / "real.result.json").exists()

    # results saved by --save-results can be plotted and reported
    assert main(["plot", str(out / "real.result.json"), str(out / "vh_100.result.json"),
                 "-o", str(tmp_path / "p.svg")]) == EXIT_OK
    assert main(["report", str(out / "report.json"), "-o", str(tmp_path / "t.txt")]) == EXIT_OK
    assert (tmp_path / "t.txt").read_text() == table


def test_compare_is_reproducible(synth_dir, tmp_path):
    args = [str(synth_dir / "real.json"), str(synth_dir / "vh_100.json")]
    main(["compare", *args, "-o", str(tmp_path / "a")])
    main(["compare", *args, "-o", str(tmp_path / "b")])
    for name in ("table.txt", "figure.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_flags_override_config(synth_dir, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"sg": {"window": 4}}))
    m = str(synth_dir / "real.json")
    assert main(["analyze", m, "--config", str(cfg), "-o", str(tmp_path / "x.json")]) == EXIT_INPUT
    assert main(["analyze", m, "--config", str(cfg), "--sg-window", "7",
                 "-o", str(tmp_path / "x.json")]) == EXIT_OK
    assert json.loads((tmp_path / "x.json").read_text())["provenance"]["sg"]["window"] == 7


def test_input_errors_exit_1(tmp_path):
    assert main(["analyze", str(tmp_path / "missing.json")]) == EXIT_INPUT
    bad = tmp_path / "bad.csv"
    bad.write_text(",".join(CSV_COLUMNS[:-1]) + "\n")
    (tmp_path / "m.json").write_text(json.dumps(
        {"label": "x", "landmark_path": "bad.csv", "interocular_mm": 63}))
    assert main(["analyze", str(tmp_path / "m.json")]) == EXIT_INPUT


def test_numerical_failure_exits_2(tmp_path):
    # all landmarks on one line: the pose problem is degenerate
    rows = [",".join(CSV_COLUMNS)]
    for k in range(15):
        pts = []
        for i in range(68):
            pts += [str(100.0 + i), str(200.0 + 0.5 * i)]
        rows.append(",".join([str(k), repr(k / 30)] + pts))
    (tmp_path / "flat.csv").write_text("\n".join(rows) + "\n")
    (tmp_path / "m.json").write_text(json.dumps(
        {"label": "x", "landmark_path": "flat.csv", "interocular_mm": 63}))
    assert main(["analyze", str(tmp_path / "m.json")]) == EXIT_NUMERICAL
