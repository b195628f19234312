from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iotforge.parser import parse_architecture, parse_deployment, parse_vocabulary
from iotforge.printer import print_architecture, print_deployment, print_vocabulary
from iotforge.project import corpus_apps
from iotforge.specs import (
    ActionDecl,
    ActuatorDecl,
    ArchitectureSpec,
    CommandClause,
    ConsumeClause,
    DataItem,
    DeploymentSpec,
    DeviceDecl,
    LogicBinding,
    ProduceClause,
    RegionDecl,
    SensorDecl,
    ServiceDecl,
    VocabularySpec,
)

idents = st.from_regex(r"[A-Za-z][A-Za-z0-9_]{0,8}", fullmatch=True).filter(
    lambda s: s not in {"window", "every", "uses"}
)
types = st.sampled_from(["double", "long", "string", "boolean"])


@st.composite
def vocab_specs(draw):
    regions = draw(st.lists(idents, max_size=3, unique=True))
    sensor_names = draw(st.lists(idents, max_size=3, unique=True))
    sensors = []
    data_pool = []
    for i, name in enumerate(sensor_names):
        item = DataItem(f"d{i}_{name}", draw(types))
        data_pool.append(item.name)
        sensors.append(SensorDecl(f"S_{name}", (item,)))
    actuators = tuple(
        ActuatorDecl(f"A_{n}", (ActionDecl(f"act_{n}", ()),))
        for n in draw(st.lists(idents, max_size=2, unique=True))
    )
    return VocabularySpec(
        name=draw(idents),
        regions=tuple(RegionDecl(r) for r in regions),
        sensors=tuple(sensors),
        actuators=actuators,
    )


@st.composite
def arch_specs(draw):
    services = []
    names = draw(st.lists(idents, min_size=0, max_size=3, unique=True))
    for i, name in enumerate(names):
        window = draw(st.one_of(st.none(), st.integers(1, 9)))
        period = draw(st.one_of(st.none(), st.sampled_from([1000, 60_000, 90_000, 7])))
        services.append(
            ServiceDecl(
                name=f"svc{i}_{name}",
                scope_region=draw(idents),
                consumes=(ConsumeClause(f"in{i}", window, period),),
                produces=(ProduceClause(f"out{i}", draw(types)),),
                commands=(CommandClause(f"go{i}", f"Act{i}", (f"out{i}",)),),
                logic=draw(
                    st.sampled_from(
                        [
                            LogicBinding("builtin", "average"),
                            LogicBinding("builtin", "threshold", (("gt", 50),)),
                            LogicBinding("builtin", "threshold", (("lt", -2.5),)),
                            LogicBinding("extern", handler_key=f"h{i}"),
                        ]
                    )
                ),
            )
        )
    return ArchitectureSpec(draw(idents), draw(idents), tuple(services))


@st.composite
def deploy_specs(draw):
    devices = []
    names = draw(st.lists(idents, min_size=0, max_size=4, unique=True))
    for i, name in enumerate(names):
        coords = draw(
            st.lists(
                st.tuples(idents, st.integers(0, 99)),
                min_size=1,
                max_size=3,
                unique_by=lambda rv: rv[0],
            )
        )
        devices.append(
            DeviceDecl(
                name=f"dev{i}_{name}",
                region_coords=tuple(coords),
                resources=(f"R{i}a", f"R{i}b"),
                platform=draw(idents),
            )
        )
    return DeploymentSpec(draw(idents), draw(idents), tuple(devices))


@settings(max_examples=60, deadline=None)
@given(vocab_specs())
def test_vocabulary_roundtrip(spec):
    assert parse_vocabulary(print_vocabulary(spec), "rt.vocab") == spec


@settings(max_examples=60, deadline=None)
@given(arch_specs())
def test_architecture_roundtrip(spec):
    assert parse_architecture(print_architecture(spec), "rt.arch") == spec


@settings(max_examples=60, deadline=None)
@given(deploy_specs())
def test_deployment_roundtrip(spec):
    assert parse_deployment(print_deployment(spec), "rt.deploy") == spec


@pytest.mark.parametrize("app", [p.name for p in corpus_apps()])
def test_corpus_specs_roundtrip(app):
    root = next(p for p in corpus_apps() if p.name == app)
    vocab = parse_vocabulary((root / "spec" / "app.vocab").read_text(), "app.vocab")
    arch = parse_architecture((root / "spec" / "app.arch").read_text(), "app.arch")
    deploy = parse_deployment((root / "spec" / "app.deploy").read_text(), "app.deploy")
    assert not isinstance(vocab, list)
    assert not isinstance(arch, list)
    assert not isinstance(deploy, list)
    assert parse_vocabulary(print_vocabulary(vocab), "x") == vocab
    assert parse_architecture(print_architecture(arch), "x") == arch
    assert parse_deployment(print_deployment(deploy), "x") == deploy
