from __future__ import annotations

import hashlib
import json
from pathlib import Path

import pytest

from iotforge.cli import main


def _hash_tree(root: Path) -> dict[str, str]:
    out = {}
    for path in sorted(root.rglob("*")):
        if path.is_file():
            out[str(path.relative_to(root))] = hashlib.sha256(path.read_bytes()).hexdigest()
    return out


def test_compile_fire_detection(corpus_copy, capsys):
    root = corpus_copy("fire_detection_bedroom")
    assert main(["compile", str(root), "--seed", "42"]) == 0
    out = root / "out"
    assert (out / "resolved.json").is_file()
    assert (out / "mapping.json").is_file()
    assert (out / "linkset.json").is_file()
    assert len(list((out / "device").glob("*.pkg.json"))) == 8
    assert "8 package(s)" in capsys.readouterr().out


def test_compile_twice_is_byte_identical(corpus_copy):
    root = corpus_copy("fire_detection_bedroom")
    assert main(["compile", str(root), "--seed", "42"]) == 0
    first = _hash_tree(root / "out")
    assert main(["compile", str(root), "--seed", "42"]) == 0
    assert _hash_tree(root / "out") == first


def test_compile_diagnostics_exit_one(corpus_copy, capsys):
    root = corpus_copy("fire_detection_bedroom")
    deploy = root / "spec" / "app.deploy"
    deploy.write_text(deploy.read_text().replace("TemperatureSensor", "Sprinkler", 1))
    assert main(["compile", str(root)]) == 1
    err = capsys.readouterr().err
    assert "Sprinkler" in err and "error" in err


def test_missing_spec_file_exit_two(tmp_path, capsys):
    root = tmp_path / "hollow"
    (root / "spec").mkdir(parents=True)
    (root / "spec" / "app.vocab").write_text("vocabulary v\n")
    assert main(["compile", str(root)]) == 2


def test_simulate_requires_compile(corpus_copy, capsys):
    root = corpus_copy("fire_detection_bedroom")
    assert main(["simulate", str(root)]) == 1
    assert "compile" in capsys.readouterr().err


def test_simulate_fire_matches_expected_log(corpus_copy):
    root = corpus_copy("fire_detection_bedroom")
    assert main(["compile", str(root), "--seed", "42"]) == 0
    assert main(["simulate", str(root)]) == 0  # settings come from iotforge.toml
    log = (root / "out" / "actuation.log").read_text()
    lines = [json.loads(line) for line in log.splitlines()]
    assert [(l["t"], l["device"], l["action"]) for l in lines] == [
        (300020, "bedroomSmokeAlarm", "activate"),
        (300020, "bedroomSiren", "activate"),
    ]


def test_simulate_horizon_zero_empty_log(corpus_copy):
    root = corpus_copy("fire_detection_bedroom")
    main(["compile", str(root)])
    assert main(["simulate", str(root), "--horizon", "0", "--trace", "traces/acceptance.trace"]) == 0
    assert (root / "out" / "actuation.log").read_text() == ""


def test_simulate_unknown_device_exit_three(corpus_copy, capsys):
    root = corpus_copy("fire_detection_bedroom")
    main(["compile", str(root)])
    (root / "traces" / "bad.trace").write_text(
        '{"t": 1, "device": "ghost", "resource": "TemperatureSensor", "data": "tempMeasurement", "value": 1.0}\n'
    )
    assert main(["simulate", str(root), "--trace", "traces/bad.trace"]) == 3
    assert "ghost" in capsys.readouterr().err


def test_simulate_twice_identical_logs(corpus_copy):
    root = corpus_copy("fire_detection_bedroom")
    main(["compile", str(root)])
    main(["simulate", str(root)])
    first = (root / "out" / "actuation.log").read_bytes()
    main(["simulate", str(root)])
    assert (root / "out" / "actuation.log").read_bytes() == first


def test_map_with_new_seed_changes_only_mapping_dependents(corpus_copy):
    root = corpus_copy("fire_detection_bedroom")
    main(["compile", str(root), "--seed", "42"])
    before = json.loads((root / "out" / "mapping.json").read_text())
    assert main(["map", str(root), "--seed", "7"]) == 0
    after = json.loads((root / "out" / "mapping.json").read_text())
    assert after["seed"] == 7
    assert before != after
    resolved = json.loads((root / "out" / "resolved.json").read_text())
    assert resolved["deployment"] == "fireBedroom"


def test_link_uses_existing_mapping(corpus_copy):
    root = corpus_copy("fire_detection_bedroom")
    main(["compile", str(root), "--seed", "42"])
    mapping_bytes = (root / "out" / "mapping.json").read_bytes()
    assert main(["link", str(root)]) == 0
    assert (root / "out" / "mapping.json").read_bytes() == mapping_bytes
    assert len(list((root / "out" / "device").glob("*.pkg.json"))) == 8


def test_metrics_unknown_kind_is_usage_error(corpus_copy, capsys):
    root = corpus_copy("fire_detection_bedroom")
    assert main(["metrics", "--kind", "bogus", str(root)]) == 64


def test_metrics_loc_and_sizes(corpus_copy):
    root = corpus_copy("fire_detection_bedroom")
    main(["compile", str(root)])
    assert main(["metrics", "--kind", "loc", str(root)]) == 0
    report = root / "out" / "reports" / "report.csv"
    assert report.read_text().splitlines()[0] == "concern,app,loc"
    assert main(["metrics", "--kind", "sizes", str(root)]) == 0
    sizes = (root / "out" / "reports" / "sizes.csv").read_text()
    assert len(sizes.splitlines()) == 9  # header + 8 devices


def test_metrics_reuse_pair(corpus_copy):
    base = corpus_copy("fire_detection_bedroom")
    variant = corpus_copy("fire_detection_kitchen")
    assert main(["metrics", "--kind", "reuse", str(base), str(variant)]) == 0
    text = (base / "out" / "reports" / "reuse.csv").read_text()
    rows = [line.split(",") for line in text.splitlines()[1:]]
    changed = {row[2]: int(row[3]) for row in rows}
    assert changed["vocabulary"] == 0
    assert changed["deployment"] > 0


def test_metrics_reuse_needs_two_projects(corpus_copy):
    root = corpus_copy("fire_detection_bedroom")
    assert main(["metrics", "--kind", "reuse", str(root)]) == 64


def test_metrics_scaling_with_plot(corpus_copy, tmp_path):
    root = corpus_copy("road_traffic")
    plot = tmp_path / "scaling.svg"
    assert main(
        ["metrics", "--kind", "scaling", str(root), "--counts", "6,12", "--plot", str(plot)]
    ) == 0
    csv_text = (root / "out" / "reports" / "scaling.csv").read_text()
    assert csv_text.splitlines()[0].startswith("devices,")
    assert plot.read_text().startswith("<svg")


def test_metrics_expressiveness(corpus_copy):
    fire = corpus_copy("fire_detection_bedroom")
    road = corpus_copy("road_traffic")
    assert main(["metrics", "--kind", "expressiveness", str(fire), str(road)]) == 0
    md = (fire / "out" / "reports" / "expressiveness.md").read_text()
    assert "| Fire Detection |" in md
    assert "| Road Traffic Monitoring & Control |" in md


def test_config_precedence_env_over_toml(corpus_copy, monkeypatch):
    root = corpus_copy("fire_detection_bedroom")
    main(["compile", str(root)])
    monkeypatch.setenv("IOTFORGE_HORIZON_MS", "0")
    assert main(["simulate", str(root)]) == 0
    assert (root / "out" / "actuation.log").read_text() == ""
    # Flag beats env: full horizon restores the two activations.
    assert main(["simulate", str(root), "--horizon", "360000"]) == 0
    assert len((root / "out" / "actuation.log").read_text().splitlines()) == 2


def test_seed_flows_from_toml_default(corpus_copy):
    root = corpus_copy("fire_detection_bedroom")
    main(["compile", str(root)])
    mapping = json.loads((root / "out" / "mapping.json").read_text())
    assert mapping["seed"] == 42


def test_out_flag_overrides_output_root(corpus_copy, tmp_path):
    root = corpus_copy("fire_detection_bedroom")
    out = tmp_path / "elsewhere"
    assert main(["compile", str(root), "--out", str(out)]) == 0
    assert (out / "linkset.json").is_file()
    assert not (root / "out").exists()


def test_corpus_command(tmp_path, capsys):
    assert main(["corpus", "--out", str(tmp_path / "run")]) == 0
    out = capsys.readouterr().out
    assert out.count("[ok]") == 8
    assert "[fail]" not in out
