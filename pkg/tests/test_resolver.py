from __future__ import annotations

import itertools

import pytest

from iotforge.parser import parse_architecture, parse_deployment, parse_vocabulary
from iotforge.project import discover_layout, load_specs
from iotforge.resolver import ResolvedApp, instantiate_services, resolve
from iotforge.specs import DeploymentSpec

from test_parser import BUILDING_VOCAB, EIGHT_DEVICE_DEPLOY, FIRE_ARCH


def _parse_triple(vocab=BUILDING_VOCAB, arch=FIRE_ARCH, deploy=EIGHT_DEVICE_DEPLOY):
    v = parse_vocabulary(vocab, "v.vocab")
    a = parse_architecture(arch, "a.arch")
    d = parse_deployment(deploy, "d.deploy")
    assert not isinstance(v, list) and not isinstance(a, list) and not isinstance(d, list)
    return v, a, d


@pytest.fixture
def fire_triple():
    return _parse_triple()


def test_fire_triple_resolves_clean(fire_triple):
    resolved = resolve(*fire_triple)
    assert isinstance(resolved, ResolvedApp)
    assert [w for w in resolved.warnings if w.severity == "error"] == []


def test_empty_architecture_and_deployment():
    v, a, d = _parse_triple(
        arch="architecture empty uses building",
        deploy="deployment none uses building",
    )
    resolved = resolve(v, a, d)
    assert isinstance(resolved, ResolvedApp)
    assert resolved.service_instances == ()
    assert resolved.topics == ()


def test_undeclared_resource_rejected():
    deploy = (
        "deployment D uses building\n"
        "device d1 {\n"
        "  region: Room = 1;\n"
        "  resources: Sprinkler;\n"
        "  platform: SimNode;\n"
        "}\n"
    )
    v, a, d = _parse_triple(deploy=deploy)
    diags = resolve(v, a, d)
    assert isinstance(diags, list)
    assert any("not declared in the vocabulary" in x.message for x in diags)


def test_vocabulary_name_mismatch():
    v, a, d = _parse_triple(arch=FIRE_ARCH.replace("uses building", "uses factory", 1))
    diags = resolve(v, a, d)
    assert isinstance(diags, list)
    assert any("factory" in x.message for x in diags)


@pytest.mark.parametrize(
    "arch_line, expected",
    [
        ("consume mysteryData;", "unknown data name"),
        ("command engage() to Sprinkler;", "unknown actuator"),
        ("command explode() to Alarm;", "no action"),
        ("command setTemp() to Heater;", "argument"),
        ("request preferredTemp(tempMeasurement) from ProfileDB;", "type"),
        ("request nosuch(tempMeasurement) from ProfileDB;", "provides"),
        ("request preferredTemp(tempMeasurement) from NoDB;", "unknown storage"),
        ("consume preferredTemp;", "request clause"),
    ],
)
def test_resolution_error_catalogue(arch_line, expected):
    arch = (
        "architecture A uses building\n"
        "service S {\n"
        "  scope: Room;\n"
        "  consume tempMeasurement;\n"
        f"  {arch_line}\n"
        "  logic: builtin passthrough;\n"
        "}\n"
    )
    v, a, d = _parse_triple(arch=arch)
    diags = resolve(v, a, d)
    assert isinstance(diags, list), arch_line
    assert any(expected in x.message for x in diags), [x.message for x in diags]


def test_unknown_scope_region():
    arch = (
        "architecture A uses building\n"
        "service S {\n"
        "  scope: Wing;\n"
        "  consume tempMeasurement;\n"
        "  logic: builtin passthrough;\n"
        "}\n"
    )
    v, a, d = _parse_triple(arch=arch)
    diags = resolve(v, a, d)
    assert isinstance(diags, list)
    assert any("Wing" in x.message for x in diags)


def test_produced_name_colliding_with_vocabulary():
    arch = (
        "architecture A uses building\n"
        "service S {\n"
        "  scope: Room;\n"
        "  consume tempMeasurement;\n"
        "  produce smokeDetected: boolean;\n"
        "  logic: builtin passthrough;\n"
        "}\n"
    )
    v, a, d = _parse_triple(arch=arch)
    diags = resolve(v, a, d)
    assert isinstance(diags, list)
    assert any("collides" in x.message for x in diags)


def test_mixed_period_consumption_rejected():
    arch = (
        "architecture A uses building\n"
        "service S {\n"
        "  scope: Room;\n"
        "  consume tempMeasurement every 60 s;\n"
        "  logic: builtin passthrough;\n"
        "}\n"
        "service T {\n"
        "  scope: Room;\n"
        "  consume tempMeasurement every 30 s;\n"
        "  logic: builtin passthrough;\n"
        "}\n"
    )
    v, a, d = _parse_triple(arch=arch)
    diags = resolve(v, a, d)
    assert isinstance(diags, list)
    assert any("different period" in x.message for x in diags)


def test_periodic_consumption_of_service_output_rejected():
    arch = (
        "architecture A uses building\n"
        "service S {\n"
        "  scope: Room;\n"
        "  consume tempMeasurement every 60 s;\n"
        "  produce cooked: double;\n"
        "  logic: builtin average;\n"
        "}\n"
        "service T {\n"
        "  scope: Room;\n"
        "  consume cooked every 30 s;\n"
        "  logic: builtin passthrough;\n"
        "}\n"
    )
    v, a, d = _parse_triple(arch=arch)
    diags = resolve(v, a, d)
    assert isinstance(diags, list)
    assert any("periodic collection" in x.message for x in diags)


# ---------------------------------------------------------------------------
# Instance expansion


def test_fire_detector_expands_to_two_rooms(fire_triple):
    resolved = resolve(*fire_triple)
    detectors = resolved.instances_of("FireStateDetector")
    assert [(i.scope_region, i.scope_value) for i in detectors] == [("Room", 1), ("Room", 2)]


def test_controller_collapses_to_global(fire_triple):
    resolved = resolve(*fire_triple)
    [controller] = resolved.instances_of("FireController")
    assert controller.is_global
    assert controller.key == "FireController@global"


def test_single_room_single_instance():
    deploy = (
        "deployment D uses building\n"
        "device only {\n"
        "  region: Room = 1;\n"
        "  resources: TemperatureSensor, SmokeDetector, Alarm;\n"
        "  platform: SimNode;\n"
        "}\n"
    )
    v, a, d = _parse_triple(deploy=deploy)
    resolved = resolve(v, a, d)
    assert len(resolved.instances_of("AverageTempCalculator")) == 1
    assert len(resolved.instances_of("FireStateDetector")) == 1


def test_road_traffic_four_sector_expansion(corpus_copy):
    resolved = load_specs(discover_layout(corpus_copy("road_traffic")))
    speeds = resolved.instances_of("AvgSpeedCalculator")
    assert [i.scope_value for i in speeds] == [1, 2, 3, 4]
    ramps = resolved.instances_of("RampController")
    assert [i.scope_value for i in ramps] == [1, 2, 3, 4]


def test_empty_expansion_warns(fire_triple):
    v, a, _ = fire_triple
    deploy = (
        "deployment D uses building\n"
        "device lonely {\n"
        "  region: Room = 1;\n"
        "  resources: Alarm;\n"
        "  platform: SimNode;\n"
        "}\n"
    )
    d = parse_deployment(deploy, "d.deploy")
    resolved = resolve(v, a, d)
    assert isinstance(resolved, ResolvedApp)
    assert resolved.instances_of("AverageTempCalculator") == []
    assert any("expands to no instance" in w.message for w in resolved.warnings)


def test_expansion_is_device_order_independent(fire_triple):
    v, a, d = fire_triple
    baseline = resolve(v, a, d).service_instances
    for perm in itertools.islice(itertools.permutations(d.devices), 12):
        shuffled = DeploymentSpec(d.name, d.vocabulary_name, tuple(perm), d.span)
        assert resolve(v, a, shuffled).service_instances == baseline


# ---------------------------------------------------------------------------
# Topics


def test_temperature_topic_wiring(fire_triple):
    resolved = resolve(*fire_triple)
    topic = next(t for t in resolved.topics if t.topic == "tempMeasurement/Room=1")
    assert topic.mode == "periodic"
    assert topic.period_ms == 60_000
    assert topic.publishers == (("device", "temp1"), ("device", "temp2"))
    assert topic.subscribers == ("AverageTempCalculator@Room=1",)


def test_fire_state_topic_reaches_global_controller(fire_triple):
    resolved = resolve(*fire_triple)
    topic = next(t for t in resolved.topics if t.topic == "fireState/Room=1")
    assert topic.publishers == (("service", "FireStateDetector@Room=1"),)
    assert topic.subscribers == ("FireController@global",)


def test_unconsumed_produce_yields_empty_subscribers_and_warning():
    arch = (
        "architecture A uses building\n"
        "service S {\n"
        "  scope: Room;\n"
        "  consume tempMeasurement;\n"
        "  produce orphan: double;\n"
        "  logic: builtin average;\n"
        "}\n"
    )
    v, a, d = _parse_triple(arch=arch)
    resolved = resolve(v, a, d)
    assert isinstance(resolved, ResolvedApp)
    assert all(t.data_name != "orphan" for t in resolved.topics)
    assert any("never consumed" in w.message for w in resolved.warnings)


def test_every_subscriber_maps_to_a_consume_clause(fire_triple):
    resolved = resolve(*fire_triple)
    consumers = {
        (svc.name, c.data_name)
        for svc in resolved.architecture.services
        for c in svc.consumes
    }
    for t in resolved.topics:
        for sub in t.subscribers:
            service = sub.split("@")[0]
            assert (service, t.data_name) in consumers


def test_vocabulary_reuse_across_architectures(fire_triple):
    v, _, d = fire_triple
    arch2 = (
        "architecture other uses building\n"
        "service Watcher {\n"
        "  scope: Room;\n"
        "  consume smokeDetected;\n"
        "  produce seen: boolean;\n"
        "  logic: builtin passthrough;\n"
        "}\n"
    )
    a2 = parse_architecture(arch2, "other.arch")
    first = resolve(v, parse_architecture(FIRE_ARCH, "fire.arch"), d)
    second = resolve(v, a2, d)
    assert first.vocabulary == second.vocabulary


def test_resolution_is_total_on_corpus(corpus_copy):
    for name in ("personalized_hvac", "safety_kitchen", "avg_temperature"):
        resolved = load_specs(discover_layout(corpus_copy(name)))
        assert isinstance(resolved, ResolvedApp)
        assert tuple(instantiate_services(resolved)) == resolved.service_instances
