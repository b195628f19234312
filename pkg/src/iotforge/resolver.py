"""Cross-spec resolution: name checking, service instantiation, topic wiring.

Resolution makes the vocabulary's concepts available to the architecture and
deployment by checking every cross-reference, then expands each service into
one instance per distinct scope-region value and wires publish/subscribe
topics between them.

Scope expansion keys on devices hosting *producing* resources: a service
consuming at least one sensor datum gets one instance per distinct value of
its scope region among the devices that host a generating resource. Services
fed purely by other services inherit the upstream values when the upstream
shares the scope region, and collapse to a single GLOBAL instance otherwise
(a building-wide controller over room-scoped detectors).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .diagnostics import Diagnostic
from .specs import (
    ArchitectureSpec,
    ConsumeClause,
    DeploymentSpec,
    DeviceDecl,
    SensorDecl,
    ServiceDecl,
    StorageDecl,
    VocabularySpec,
)

GLOBAL_SCOPE = "global"


@dataclass(frozen=True)
class DataOrigin:
    kind: str  # "sensor" | "service" | "storage"
    origin: str  # declaring resource or service name
    data_type: str


@dataclass(frozen=True)
class ServiceInstance:
    service_name: str
    scope_region: str
    scope_value: int | None  # None = GLOBAL

    @property
    def is_global(self) -> bool:
        return self.scope_value is None

    @property
    def scope_text(self) -> str:
        if self.is_global:
            return GLOBAL_SCOPE
        return f"{self.scope_region}={self.scope_value}"

    @property
    def key(self) -> str:
        return f"{self.service_name}@{self.scope_text}"


@dataclass(frozen=True)
class TopicBinding:
    data_name: str
    scope_region: str | None  # None for the global qualifier
    scope_value: int | None
    mode: str  # "periodic" | "event"
    period_ms: int | None
    publishers: tuple[tuple[str, str], ...]  # ("device"|"service", name or instance key)
    subscribers: tuple[str, ...]  # instance keys

    @property
    def topic(self) -> str:
        if self.scope_region is None:
            return f"{self.data_name}/{GLOBAL_SCOPE}"
        return f"{self.data_name}/{self.scope_region}={self.scope_value}"


@dataclass(frozen=True)
class ResolvedApp:
    vocabulary: VocabularySpec
    architecture: ArchitectureSpec
    deployment: DeploymentSpec
    data_index: dict[str, DataOrigin]
    service_instances: tuple[ServiceInstance, ...] = ()
    topics: tuple[TopicBinding, ...] = ()
    warnings: tuple[Diagnostic, ...] = ()

    def device(self, name: str) -> DeviceDecl:
        for d in self.deployment.devices:
            if d.name == name:
                return d
        raise KeyError(name)

    def service(self, name: str) -> ServiceDecl:
        for s in self.architecture.services:
            if s.name == name:
                return s
        raise KeyError(name)

    def instances_of(self, service_name: str) -> list[ServiceInstance]:
        return [i for i in self.service_instances if i.service_name == service_name]

    def sensors_generating(self, data_name: str) -> list[SensorDecl]:
        return [s for s in self.vocabulary.sensors if any(g.name == data_name for g in s.generates)]

    def storage_named(self, name: str) -> StorageDecl | None:
        for st in self.vocabulary.storages:
            if st.name == name:
                return st
        return None


def resolve(
    v: VocabularySpec, a: ArchitectureSpec, d: DeploymentSpec
) -> ResolvedApp | list[Diagnostic]:
    diags: list[Diagnostic] = []
    warnings: list[Diagnostic] = []

    if a.vocabulary_name != v.name:
        diags.append(
            Diagnostic(
                a.span,
                f"architecture uses vocabulary '{a.vocabulary_name}' but '{v.name}' was given",
            )
        )
    if d.vocabulary_name != v.name:
        diags.append(
            Diagnostic(
                d.span,
                f"deployment uses vocabulary '{d.vocabulary_name}' but '{v.name}' was given",
            )
        )

    data_index = _build_data_index(v, a, diags)
    _check_services(v, a, data_index, diags)
    _check_devices(v, d, diags)
    _check_consumption_modes(a, data_index, diags)

    if diags:
        return diags

    app = ResolvedApp(
        vocabulary=v,
        architecture=a,
        deployment=d,
        data_index=data_index,
    )
    instances = instantiate_services(app, warnings)
    app = replace(app, service_instances=tuple(instances))
    topics = build_topics(app)
    _warn_unconsumed(app, topics, warnings)
    return replace(app, topics=tuple(topics), warnings=tuple(warnings))


def _build_data_index(
    v: VocabularySpec, a: ArchitectureSpec, diags: list[Diagnostic]
) -> dict[str, DataOrigin]:
    index: dict[str, DataOrigin] = {}
    for s in v.sensors:
        for item in s.generates:
            index[item.name] = DataOrigin("sensor", s.name, item.type)
    for st in v.storages:
        index[st.data_name] = DataOrigin("storage", st.name, st.data_type)
    for svc in a.services:
        for pr in svc.produces:
            if pr.data_name in index:
                diags.append(
                    Diagnostic(
                        pr.span,
                        f"produced data '{pr.data_name}' collides with a vocabulary data name",
                    )
                )
            else:
                index[pr.data_name] = DataOrigin("service", svc.name, pr.data_type)
    return index


def _check_services(
    v: VocabularySpec,
    a: ArchitectureSpec,
    data_index: dict[str, DataOrigin],
    diags: list[Diagnostic],
) -> None:
    regions = set(v.region_names())
    actuators = {act.name: act for act in v.actuators}
    for svc in a.services:
        if svc.scope_region not in regions:
            diags.append(
                Diagnostic(svc.span, f"unknown region '{svc.scope_region}' in scope of service '{svc.name}'")
            )
        available: dict[str, str] = {}  # names usable as command args -> type
        for c in svc.consumes:
            origin = data_index.get(c.data_name)
            if origin is None:
                diags.append(Diagnostic(c.span, f"unknown data name '{c.data_name}'"))
                continue
            if origin.kind == "storage":
                diags.append(
                    Diagnostic(
                        c.span,
                        f"storage data '{c.data_name}' must be accessed with a request clause",
                    )
                )
                continue
            available[c.data_name] = origin.data_type
        for pr in svc.produces:
            available[pr.data_name] = pr.data_type
        for rq in svc.requests:
            storage = next((st for st in v.storages if st.name == rq.storage_name), None)
            if storage is None:
                diags.append(Diagnostic(rq.span, f"unknown storage '{rq.storage_name}'"))
                continue
            if storage.data_name != rq.data_name:
                diags.append(
                    Diagnostic(
                        rq.span,
                        f"storage '{storage.name}' provides '{storage.data_name}', not '{rq.data_name}'",
                    )
                )
                continue
            key_type = available.get(rq.key_arg)
            if rq.key_arg not in {c.data_name for c in svc.consumes}:
                diags.append(
                    Diagnostic(
                        rq.span,
                        f"request key '{rq.key_arg}' is not consumed by service '{svc.name}'",
                    )
                )
            elif key_type is not None and key_type != storage.key_type:
                diags.append(
                    Diagnostic(
                        rq.span,
                        f"request key '{rq.key_arg}' has type {key_type}, storage key is {storage.key_type}",
                    )
                )
            available[rq.data_name] = storage.data_type
        for cmd in svc.commands:
            actuator = actuators.get(cmd.actuator_name)
            if actuator is None:
                diags.append(Diagnostic(cmd.span, f"unknown actuator '{cmd.actuator_name}'"))
                continue
            action = next((x for x in actuator.actions if x.name == cmd.action_name), None)
            if action is None:
                diags.append(
                    Diagnostic(
                        cmd.span,
                        f"actuator '{actuator.name}' has no action '{cmd.action_name}'",
                    )
                )
                continue
            if len(cmd.args) != len(action.params):
                diags.append(
                    Diagnostic(
                        cmd.span,
                        f"action '{action.name}' takes {len(action.params)} argument(s), {len(cmd.args)} given",
                    )
                )
                continue
            for arg, param in zip(cmd.args, action.params):
                arg_type = available.get(arg)
                if arg_type is None:
                    diags.append(
                        Diagnostic(
                            cmd.span,
                            f"command argument '{arg}' is not consumed, produced or requested by '{svc.name}'",
                        )
                    )
                elif arg_type != param.type:
                    diags.append(
                        Diagnostic(
                            cmd.span,
                            f"command argument '{arg}' has type {arg_type}, parameter '{param.name}' wants {param.type}",
                        )
                    )


def _check_devices(v: VocabularySpec, d: DeploymentSpec, diags: list[Diagnostic]) -> None:
    regions = set(v.region_names())
    resource_names = {r.name for r in v.resources()}
    for dev in d.devices:
        for region, _value in dev.region_coords:
            if region not in regions:
                diags.append(
                    Diagnostic(dev.span, f"unknown region '{region}' in device '{dev.name}'")
                )
        for res in dev.resources:
            if res not in resource_names:
                diags.append(
                    Diagnostic(
                        dev.span,
                        f"resource '{res}' on device '{dev.name}' is not declared in the vocabulary",
                    )
                )


def _check_consumption_modes(
    a: ArchitectureSpec, data_index: dict[str, DataOrigin], diags: list[Diagnostic]
) -> None:
    # A datum is collected one way everywhere: every consume clause for it
    # must agree on periodic-vs-event and on the period itself.
    modes: dict[str, tuple[ConsumeClause, str]] = {}
    for svc in a.services:
        for c in svc.consumes:
            origin = data_index.get(c.data_name)
            if origin is None or origin.kind == "storage":
                continue
            if c.periodic and origin.kind != "sensor":
                diags.append(
                    Diagnostic(
                        c.span,
                        f"periodic collection applies to sensor data, '{c.data_name}' is produced by a service",
                    )
                )
                continue
            prev = modes.get(c.data_name)
            if prev is None:
                modes[c.data_name] = (c, svc.name)
                continue
            prev_clause, prev_svc = prev
            if prev_clause.period_ms != c.period_ms:
                diags.append(
                    Diagnostic(
                        c.span,
                        f"'{c.data_name}' is consumed with a different period by service '{prev_svc}'",
                    )
                )


def instantiate_services(
    r: ResolvedApp, warnings: list[Diagnostic] | None = None
) -> list[ServiceInstance]:
    """Expand each service into one instance per distinct scope value."""
    sink = warnings if warnings is not None else []
    instances_by_service: dict[str, list[ServiceInstance]] = {}

    producers: dict[str, str] = {}
    for svc in r.architecture.services:
        for pr in svc.produces:
            producers[pr.data_name] = svc.name

    pending: list[ServiceDecl] = []
    for svc in r.architecture.services:
        sensor_data = [
            c.data_name
            for c in svc.consumes
            if r.data_index.get(c.data_name, DataOrigin("?", "?", "?")).kind == "sensor"
        ]
        if sensor_data or not svc.consumes:
            values = _device_scope_values(r, svc.scope_region, sensor_data)
            if not values:
                sink.append(
                    Diagnostic(
                        svc.span,
                        f"service '{svc.name}' expands to no instance: no device in scope "
                        f"region '{svc.scope_region}' hosts a producing resource",
                        severity="warning",
                    )
                )
                instances_by_service[svc.name] = []
            else:
                instances_by_service[svc.name] = [
                    ServiceInstance(svc.name, svc.scope_region, v) for v in values
                ]
        else:
            pending.append(svc)

    # Services fed only by other services inherit upstream scope values once
    # those are known; anything left over (dependency cycles) goes global.
    progress = True
    while pending and progress:
        progress = False
        for svc in list(pending):
            upstream = {
                producers[c.data_name]
                for c in svc.consumes
                if c.data_name in producers
            }
            if not upstream.issubset(instances_by_service.keys()):
                continue
            values = sorted(
                {
                    inst.scope_value
                    for u in upstream
                    for inst in instances_by_service[u]
                    if inst.scope_region == svc.scope_region
                    and inst.scope_value is not None
                }
            )
            if values:
                instances_by_service[svc.name] = [
                    ServiceInstance(svc.name, svc.scope_region, v) for v in values
                ]
            else:
                instances_by_service[svc.name] = [
                    ServiceInstance(svc.name, svc.scope_region, None)
                ]
            pending.remove(svc)
            progress = True
    for svc in pending:
        sink.append(
            Diagnostic(
                svc.span,
                f"service '{svc.name}' sits on a dependency cycle; expanded globally",
                severity="warning",
            )
        )
        instances_by_service[svc.name] = [ServiceInstance(svc.name, svc.scope_region, None)]

    out: list[ServiceInstance] = []
    for svc in r.architecture.services:
        out.extend(instances_by_service[svc.name])
    return out


def _device_scope_values(
    r: ResolvedApp, scope_region: str, sensor_data: list[str]
) -> list[int]:
    generating: set[str] = set()
    for name in sensor_data:
        for s in r.sensors_generating(name):
            generating.add(s.name)
    values: set[int] = set()
    for dev in r.deployment.devices:
        coords = dev.coords()
        if scope_region not in coords:
            continue
        # A no-input service anchors on every scoped device; otherwise only
        # devices hosting a generating resource count.
        if sensor_data and not generating.intersection(dev.resources):
            continue
        values.add(coords[scope_region])
    return sorted(values)


def build_topics(r: ResolvedApp) -> list[TopicBinding]:
    """One binding per (data name, scope qualifier), fully wired."""
    instances_by_service: dict[str, list[ServiceInstance]] = {}
    for inst in r.service_instances:
        instances_by_service.setdefault(inst.service_name, []).append(inst)

    consume_by_data: dict[str, list[tuple[ServiceDecl, ConsumeClause]]] = {}
    for svc in r.architecture.services:
        for c in svc.consumes:
            consume_by_data.setdefault(c.data_name, []).append((svc, c))

    # Qualifier universe per data name.
    quals: dict[str, set[tuple[str, int] | None]] = {}
    for data_name, uses in consume_by_data.items():
        origin = r.data_index[data_name]
        for svc, _c in uses:
            if origin.kind == "sensor":
                for inst in instances_by_service.get(svc.name, []):
                    if not inst.is_global:
                        quals.setdefault(data_name, set()).add(
                            (inst.scope_region, inst.scope_value)
                        )
            else:
                for inst in instances_by_service.get(origin.origin, []):
                    qual = None if inst.is_global else (inst.scope_region, inst.scope_value)
                    quals.setdefault(data_name, set()).add(qual)

    data_order = {name: i for i, name in enumerate(r.data_index)}
    bindings: list[TopicBinding] = []
    for data_name in sorted(quals, key=lambda n: data_order[n]):
        origin = r.data_index[data_name]
        clauses = [c for _s, c in consume_by_data[data_name]]
        period = next((c.period_ms for c in clauses if c.periodic), None)
        mode = "periodic" if period is not None else "event"
        all_quals = quals[data_name]
        for qual in sorted(all_quals, key=lambda q: (q is None, q or ("", 0))):
            publishers: list[tuple[str, str]] = []
            if origin.kind == "sensor":
                assert qual is not None
                region, value = qual
                for dev in r.deployment.devices:
                    if dev.coords().get(region) != value:
                        continue
                    if any(
                        s.name in dev.resources for s in r.sensors_generating(data_name)
                    ):
                        publishers.append(("device", dev.name))
            else:
                for inst in instances_by_service.get(origin.origin, []):
                    inst_qual = (
                        None if inst.is_global else (inst.scope_region, inst.scope_value)
                    )
                    if inst_qual == qual:
                        publishers.append(("service", inst.key))
            subscribers: list[str] = []
            for svc, _c in consume_by_data[data_name]:
                for inst in instances_by_service.get(svc.name, []):
                    if _subscribes(inst, qual, all_quals):
                        subscribers.append(inst.key)
            region_name = qual[0] if qual is not None else None
            region_value = qual[1] if qual is not None else None
            bindings.append(
                TopicBinding(
                    data_name=data_name,
                    scope_region=region_name,
                    scope_value=region_value,
                    mode=mode,
                    period_ms=period,
                    publishers=tuple(publishers),
                    subscribers=tuple(subscribers),
                )
            )
    return bindings


def _subscribes(
    inst: ServiceInstance,
    qual: tuple[str, int] | None,
    all_quals: set[tuple[str, int] | None],
) -> bool:
    if inst.is_global or qual is None:
        return True
    region, value = qual
    if inst.scope_region == region:
        return inst.scope_value == value
    # Cross-region consumption cannot be correlated on flat axes: the consumer
    # sees every qualifier, unless the datum also carries its own axis.
    return not any(q is not None and q[0] == inst.scope_region for q in all_quals)


def _warn_unconsumed(
    r: ResolvedApp, topics: list[TopicBinding], warnings: list[Diagnostic]
) -> None:
    consumed = {c.data_name for svc in r.architecture.services for c in svc.consumes}
    requested = {rq.data_name for svc in r.architecture.services for rq in svc.requests}
    used_args = {
        arg for svc in r.architecture.services for cmd in svc.commands for arg in cmd.args
    }
    for svc in r.architecture.services:
        for pr in svc.produces:
            if pr.data_name not in consumed | requested | used_args:
                warnings.append(
                    Diagnostic(
                        pr.span,
                        f"produced data '{pr.data_name}' is never consumed",
                        severity="warning",
                    )
                )


def resolved_to_jsonable(r: ResolvedApp) -> dict:
    """Canonical JSON shape for resolved.json; spans deliberately omitted."""
    return {
        "vocabulary": r.vocabulary.name,
        "architecture": r.architecture.name,
        "deployment": r.deployment.name,
        "dataIndex": {
            name: {"kind": o.kind, "origin": o.origin, "type": o.data_type}
            for name, o in sorted(r.data_index.items())
        },
        "serviceInstances": [
            {
                "service": i.service_name,
                "scopeRegion": i.scope_region,
                "scope": i.scope_text,
            }
            for i in r.service_instances
        ],
        "topics": [
            {
                "topic": t.topic,
                "data": t.data_name,
                "mode": t.mode,
                "periodMs": t.period_ms,
                "publishers": [list(p) for p in t.publishers],
                "subscribers": list(t.subscribers),
            }
            for t in r.topics
        ],
        "warnings": [w.render() for w in r.warnings],
    }
