from __future__ import annotations

import pytest

from iotforge.linker import (
    LinkError,
    canonical_json,
    generate_architecture_framework,
    generate_vocabulary_framework,
    link,
    package_from_jsonable,
    package_size,
    package_to_jsonable,
    _check_closure,
)
from iotforge.mapper import Mapping, map_random
from iotforge.parser import parse_architecture, parse_deployment, parse_vocabulary
from iotforge.project import discover_layout, load_specs
from iotforge.resolver import resolve
from iotforge.specs import VocabularySpec

from test_parser import BUILDING_VOCAB, EIGHT_DEVICE_DEPLOY, FIRE_ARCH


@pytest.fixture
def fire_resolved_local():
    v = parse_vocabulary(BUILDING_VOCAB, "v.vocab")
    a = parse_architecture(FIRE_ARCH, "a.arch")
    d = parse_deployment(EIGHT_DEVICE_DEPLOY, "d.deploy")
    return resolve(v, a, d)


def test_fire_architecture_framework(fire_resolved_local):
    contracts = generate_architecture_framework(fire_resolved_local)
    assert [c.service_name for c in contracts] == [
        "AverageTempCalculator",
        "FireStateDetector",
        "FireController",
    ]
    avg = contracts[0]
    assert len(avg.input_slots) == 1
    slot = avg.input_slots[0]
    assert (slot.window, slot.delivery, slot.period_ms) == (4, "periodic", 60_000)
    assert avg.output_slots == (("avgTemp", "double"),)


def test_empty_architecture_framework():
    v = parse_vocabulary(BUILDING_VOCAB, "v.vocab")
    a = parse_architecture("architecture A uses building", "a.arch")
    d = parse_deployment("deployment D uses building", "d.deploy")
    assert generate_architecture_framework(resolve(v, a, d)) == []


def test_hvac_contract_has_request_and_command_slots(corpus_copy):
    resolved = load_specs(discover_layout(corpus_copy("personalized_hvac")))
    contracts = {c.service_name: c for c in generate_architecture_framework(resolved)}
    comfort = contracts["ComfortManager"]
    assert len(comfort.request_slots) == 1
    data, dtype, key_arg, key_type, storage = comfort.request_slots[0]
    assert (data, dtype) == ("preferredTemp", "double")
    assert (key_arg, key_type) == ("badgeDetected", "string")
    assert storage == "ProfileDB"
    assert comfort.command_slots == (("setTemp", "Heater", ("preferredTemp",)),)


def test_vocabulary_framework_counts():
    vocab = parse_vocabulary(BUILDING_VOCAB, "v.vocab")
    contracts = generate_vocabulary_framework(vocab)
    assert len(contracts) == 6
    assert generate_vocabulary_framework(VocabularySpec("empty")) == []
    storage = next(c for c in contracts if c.kind == "storage")
    assert storage.resource_name == "ProfileDB"
    assert storage.key == ("workerId", "string")
    assert storage.data_items == (("preferredTemp", "double"),)


def test_link_produces_one_package_per_device(fire_resolved_local):
    mapping = map_random(fire_resolved_local, seed=42)
    packages = link(fire_resolved_local, mapping)
    assert [p.device_name for p in packages] == [
        d.name for d in fire_resolved_local.deployment.devices
    ]
    # Alarm hosts carry the actuator contract; the controller task targets them.
    controller_tasks = [
        t for p in packages for t in p.tasks if t.instance.service_name == "FireController"
    ]
    assert len(controller_tasks) == 1
    assert controller_tasks[0].commands[0]["devices"] == ["smokeAlarm1", "siren1"]


def test_link_conserves_instances(fire_resolved_local):
    mapping = map_random(fire_resolved_local, seed=7)
    packages = link(fire_resolved_local, mapping)
    linked = sorted(t.instance.key for p in packages for t in p.tasks)
    assert linked == sorted(i.key for i in fire_resolved_local.service_instances)


def test_single_device_colocation():
    v = parse_vocabulary(BUILDING_VOCAB, "v.vocab")
    a = parse_architecture(FIRE_ARCH, "a.arch")
    d = parse_deployment(
        "deployment D uses building\n"
        "device only {\n"
        "  region: Room = 1;\n"
        "  resources: TemperatureSensor, SmokeDetector, Alarm;\n"
        "  platform: SimNode;\n"
        "}\n",
        "d.deploy",
    )
    resolved = resolve(v, a, d)
    packages = link(resolved, map_random(resolved, seed=1))
    assert len(packages) == 1
    pkg = packages[0]
    published = {t for s in pkg.samplers for t in s.topics}
    published |= {t for task in pkg.tasks for out in task.outputs for t in out["topics"]}
    subscribed = {
        t for task in pkg.tasks for slot in task.inputs for t in slot["topics"]
    }
    assert subscribed <= published | {"smokeDetected/Room=1"}


def test_road_traffic_packages_stay_sector_local(corpus_copy):
    resolved = load_specs(discover_layout(corpus_copy("road_traffic")))
    packages = link(resolved, map_random(resolved, seed=42))
    assert len(packages) == 24
    for pkg in packages:
        sector = dict(pkg.region_coords)["Sector"]
        for task in pkg.tasks:
            for slot in task.inputs:
                for topic in slot["topics"]:
                    assert topic.endswith(f"Sector={sector}")
            for cmd in task.commands:
                for device in cmd["devices"]:
                    target = next(p for p in packages if p.device_name == device)
                    assert dict(target.region_coords)["Sector"] == sector


def test_link_output_is_stable(fire_resolved_local):
    mapping = map_random(fire_resolved_local, seed=42)
    first = [canonical_json(package_to_jsonable(p)) for p in link(fire_resolved_local, mapping)]
    second = [canonical_json(package_to_jsonable(p)) for p in link(fire_resolved_local, mapping)]
    assert first == second


def test_package_roundtrips_through_json(fire_resolved_local):
    mapping = map_random(fire_resolved_local, seed=42)
    for pkg in link(fire_resolved_local, mapping):
        doc = package_to_jsonable(pkg)
        again = package_to_jsonable(package_from_jsonable(doc))
        assert canonical_json(doc) == canonical_json(again)


def test_package_size_positive_and_monotonic(fire_resolved_local):
    mapping = map_random(fire_resolved_local, seed=42)
    packages = link(fire_resolved_local, mapping)
    empty = next(p for p in packages if not p.tasks)
    assert package_size(empty) > 0
    with_task = next(p for p in packages if p.tasks)
    stripped = package_from_jsonable(
        {**package_to_jsonable(with_task), "tasks": []}
    )
    assert package_size(with_task) > package_size(stripped)


def test_storage_host_resolution(corpus_copy):
    resolved = load_specs(discover_layout(corpus_copy("personalized_hvac")))
    packages = link(resolved, map_random(resolved, seed=42))
    comfort_tasks = [
        t
        for p in packages
        for t in p.tasks
        if t.instance.service_name == "ComfortManager"
    ]
    assert len(comfort_tasks) == 2
    assert all(t.requests[0]["device"] == "profileServer" for t in comfort_tasks)


def test_unhosted_storage_is_a_link_error():
    vocab = BUILDING_VOCAB
    arch = (
        "architecture A uses building\n"
        "service S {\n"
        "  scope: Room;\n"
        "  consume badgeDetected;\n"
        "  request preferredTemp(badgeDetected) from ProfileDB;\n"
        "  logic: builtin keyed-lookup-forward;\n"
        "}\n"
    )
    deploy = (
        "deployment D uses building\n"
        "device badge {\n"
        "  region: Room = 1;\n"
        "  resources: BadgeReader;\n"
        "  platform: SimNode;\n"
        "}\n"
    )
    v = parse_vocabulary(vocab, "v.vocab")
    a = parse_architecture(arch, "a.arch")
    d = parse_deployment(deploy, "d.deploy")
    resolved = resolve(v, a, d)
    with pytest.raises(LinkError, match="ProfileDB"):
        link(resolved, map_random(resolved, seed=1))


def test_closure_check_catches_missing_publisher(fire_resolved_local):
    mapping = map_random(fire_resolved_local, seed=42)
    packages = link(fire_resolved_local, mapping)
    broken = []
    for pkg in packages:
        broken.append(
            package_from_jsonable(
                {**package_to_jsonable(pkg), "samplers": []}
            )
        )
    with pytest.raises(LinkError, match="closure"):
        _check_closure(fire_resolved_local, broken)
