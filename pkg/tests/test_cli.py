import json
import pathlib

import pytest

from dualpol import cli, obs
from dualpol.detector import ThresholdCurve

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture
def almanac_path():
    return str(DATA / "almanac.yuma")


def write_scene(path, buildings=(), ground=False):
    path.write_text(
        json.dumps(
            {
                "origin": {"lat": 37.0, "lon": 127.0},
                "ground_plane": ground,
                "buildings": list(buildings),
            }
        )
    )


def run_ok(argv):
    assert cli.run(argv) == cli.EXIT_OK


def test_merge_roundtrip(tmp_path):
    rhcp = tmp_path / "r.csv"
    lhcp = tmp_path / "l.csv"
    out = tmp_path / "merged.csv"
    rhcp.write_text(obs.CHANNEL_HEADER + "\n1,5,R,45\n2,5,R,44\n")
    lhcp.write_text(obs.CHANNEL_HEADER + "\n1,5,L,31\n3,5,L,30\n")
    run_ok(["merge", "--rhcp", str(rhcp), "--lhcp", str(lhcp), "--out", str(out)])
    parsed = obs.parse_observations(out.read_text())
    assert [r.key for r in parsed.records] == [(1, 5)]
    assert parsed.records[0].diff_db == 14


def test_full_chain(tmp_path, almanac_path):
    scene = tmp_path / "scene.json"
    write_scene(scene)  # open sky: every visible satellite is LOS-only
    labels = tmp_path / "labels.json"
    observations = tmp_path / "obs.csv"
    curve_path = tmp_path / "curve.json"
    decisions = tmp_path / "decisions.csv"
    report = tmp_path / "report.json"
    verdicts = tmp_path / "verdicts.json"
    epochs = "1700000000:1700003600:600"
    rx = ["--rx-lat", "37.0", "--rx-lon", "127.0", "--rx-height", "0"]

    run_ok(["trace", "--scene", str(scene), "--almanac", almanac_path,
            "--epochs", epochs, "--out", str(labels)])
    assert json.loads(labels.read_text())["entries"]

    run_ok(["synth", "--labels", str(labels), "--sigma", "0",
            "--out", str(observations)])
    assert obs.parse_observations(observations.read_text()).records

    run_ok(["calibrate", "--obs", str(observations), "--almanac", almanac_path,
            *rx, "--out", str(curve_path)])
    curve = ThresholdCurve.from_json(curve_path.read_text())
    assert curve.bins

    run_ok(["detect", "--obs", str(observations), "--curve", str(curve_path),
            "--almanac", almanac_path, *rx, "--out", str(decisions),
            "--verdicts-out", str(verdicts)])
    assert decisions.read_text().startswith("epoch,")
    assert isinstance(json.loads(verdicts.read_text()), list)

    run_ok(["evaluate", "--decisions", str(decisions), "--labels", str(labels),
            "--out", str(report)])
    doc = json.loads(report.read_text())
    # open sky: there are no multipath epochs to detect
    assert doc["confusion"]["true_positive"] == 0
    assert doc["confusion"]["false_negative"] == 0
    assert doc["detection_rate"] is None


def test_trace_and_synth_deterministic(tmp_path, almanac_path):
    scene = tmp_path / "scene.json"
    write_scene(
        scene,
        buildings=[{"footprint": [[-16, -30], [-8, -30], [-8, 30], [-16, 30]],
                    "height_m": 30}],
    )
    out_a = tmp_path / "a.json"
    out_b = tmp_path / "b.json"
    args = ["trace", "--scene", str(scene), "--almanac", almanac_path,
            "--epochs", "1700000000,1700000600", "--prns", "1,2,3,4,5,6,7,8"]
    run_ok(args + ["--out", str(out_a)])
    run_ok(args + ["--out", str(out_b)])
    assert out_a.read_bytes() == out_b.read_bytes()

    synth_a = tmp_path / "sa.csv"
    synth_b = tmp_path / "sb.csv"
    run_ok(["synth", "--labels", str(out_a), "--seed", "9", "--out", str(synth_a)])
    run_ok(["synth", "--labels", str(out_b), "--seed", "9", "--out", str(synth_b)])
    assert synth_a.read_bytes() == synth_b.read_bytes()


def test_usage_error_exit_code(capsys):
    assert cli.run(["merge", "--rhcp", "only"]) == cli.EXIT_USAGE
    assert cli.run(["no-such-command"]) == cli.EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_missing_input_exit_code(tmp_path, capsys):
    out = tmp_path / "out.csv"
    code = cli.run(["merge", "--rhcp", str(tmp_path / "nope.csv"),
                    "--lhcp", str(tmp_path / "nope2.csv"), "--out", str(out)])
    assert code == cli.EXIT_DATA
    assert "error" in capsys.readouterr().err
    assert not out.exists()


def test_malformed_data_exit_code(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("not,a,header\n")
    out = tmp_path / "out.csv"
    code = cli.run(["merge", "--rhcp", str(bad), "--lhcp", str(bad),
                    "--out", str(out)])
    assert code == cli.EXIT_DATA
    assert not out.exists()


def test_bad_epoch_spec_is_data_error(tmp_path, almanac_path):
    scene = tmp_path / "scene.json"
    write_scene(scene)
    code = cli.run(["trace", "--scene", str(scene), "--almanac", almanac_path,
                    "--epochs", "10:5:1", "--out", str(tmp_path / "x.json")])
    assert code == cli.EXIT_DATA
