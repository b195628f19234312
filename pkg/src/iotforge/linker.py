"""Framework generation and linking into self-contained device packages.

Packages are declarative artifacts interpreted by the simulated runtime, not
emitted source code: each one carries the task wiring, sampling timers,
request endpoints and command targets a device needs, so the link set as a
whole is closed — every subscription has a publisher somewhere in it.

Sampling lives on the sensor-hosting device (sensors push), window assembly
lives in the consuming task (services aggregate).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .mapper import Mapping
from .resolver import ResolvedApp, ServiceInstance, TopicBinding


class LinkError(Exception):
    """Internal closure violation or unroutable endpoint."""


def canonical_json(obj) -> str:
    """Stable key order, two-space indent, trailing LF."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


@dataclass(frozen=True)
class InputSlot:
    data_name: str
    data_type: str
    delivery: str  # "periodic" | "event"
    window: int | None
    period_ms: int | None


@dataclass(frozen=True)
class LogicContract:
    service_name: str
    scope_region: str
    input_slots: tuple[InputSlot, ...]
    output_slots: tuple[tuple[str, str], ...]  # (data, type)
    request_slots: tuple[tuple[str, str, str, str, str], ...]  # data, type, keyArg, keyType, storage
    command_slots: tuple[tuple[str, str, tuple[str, ...]], ...]  # action, actuator, args


@dataclass(frozen=True)
class DriverContract:
    resource_name: str
    kind: str  # "sensor" | "actuator" | "storage"
    binding_key: str
    data_items: tuple[tuple[str, str], ...] = ()  # (data, type); storage key appended for storages
    actions: tuple[tuple[str, tuple[tuple[str, str], ...]], ...] = ()
    key: tuple[str, str] | None = None  # storage only: (keyName, keyType)


@dataclass(frozen=True)
class TaskBinding:
    instance: ServiceInstance
    logic: dict
    inputs: tuple[dict, ...]
    outputs: tuple[dict, ...]
    requests: tuple[dict, ...]
    commands: tuple[dict, ...]
    timers: tuple[tuple[int, str], ...]


@dataclass(frozen=True)
class Sampler:
    resource: str
    data_name: str
    period_ms: int
    topics: tuple[str, ...]


@dataclass(frozen=True)
class DevicePackage:
    device_name: str
    platform: str
    region_coords: tuple[tuple[str, int], ...]
    tasks: tuple[TaskBinding, ...]
    samplers: tuple[Sampler, ...]
    drivers: tuple[DriverContract, ...]
    runtime_config: dict


def generate_architecture_framework(r: ResolvedApp) -> list[LogicContract]:
    """One logic contract per declared service, in architecture order."""
    storages = {st.name: st for st in r.vocabulary.storages}
    contracts = []
    for svc in r.architecture.services:
        inputs = tuple(
            InputSlot(
                data_name=c.data_name,
                data_type=r.data_index[c.data_name].data_type,
                delivery="periodic" if c.periodic else "event",
                window=c.window,
                period_ms=c.period_ms,
            )
            for c in svc.consumes
        )
        requests = tuple(
            (
                rq.data_name,
                storages[rq.storage_name].data_type,
                rq.key_arg,
                storages[rq.storage_name].key_type,
                rq.storage_name,
            )
            for rq in svc.requests
        )
        contracts.append(
            LogicContract(
                service_name=svc.name,
                scope_region=svc.scope_region,
                input_slots=inputs,
                output_slots=tuple((p.data_name, p.data_type) for p in svc.produces),
                request_slots=requests,
                command_slots=tuple(
                    (c.action_name, c.actuator_name, c.args) for c in svc.commands
                ),
            )
        )
    return contracts


def generate_vocabulary_framework(vocab) -> list[DriverContract]:
    """One adapter contract per vocabulary resource."""
    contracts: list[DriverContract] = []
    for s in vocab.sensors:
        contracts.append(
            DriverContract(
                resource_name=s.name,
                kind="sensor",
                binding_key=s.name,
                data_items=tuple((g.name, g.type) for g in s.generates),
            )
        )
    for a in vocab.actuators:
        contracts.append(
            DriverContract(
                resource_name=a.name,
                kind="actuator",
                binding_key=a.name,
                actions=tuple(
                    (act.name, tuple((p.name, p.type) for p in act.params))
                    for act in a.actions
                ),
            )
        )
    for st in vocab.storages:
        contracts.append(
            DriverContract(
                resource_name=st.name,
                kind="storage",
                binding_key=st.name,
                data_items=((st.data_name, st.data_type),),
                key=(st.key_name, st.key_type),
            )
        )
    return contracts


def _storage_host(r: ResolvedApp, storage_name: str, inst: ServiceInstance) -> str:
    """First deployment-order device hosting the storage without contradicting
    the instance's scope binding."""
    for dev in r.deployment.devices:
        if storage_name not in dev.resources:
            continue
        if inst.is_global:
            return dev.name
        bound = dev.coords().get(inst.scope_region)
        if bound is None or bound == inst.scope_value:
            return dev.name
    raise LinkError(
        f"no device hosts storage '{storage_name}' reachable from instance {inst.key}"
    )


def _command_targets(r: ResolvedApp, actuator: str, inst: ServiceInstance) -> list[str]:
    out = []
    for dev in r.deployment.devices:
        if actuator not in dev.resources:
            continue
        if inst.is_global or dev.coords().get(inst.scope_region) == inst.scope_value:
            out.append(dev.name)
    return out


def link(r: ResolvedApp, m: Mapping) -> list[DevicePackage]:
    """One package per deployed device; raises LinkError on closure gaps."""
    driver_contracts = {c.resource_name: c for c in generate_vocabulary_framework(r.vocabulary)}
    topics_by_data: dict[str, list[TopicBinding]] = {}
    for t in r.topics:
        topics_by_data.setdefault(t.data_name, []).append(t)

    device_tasks: dict[str, list[ServiceInstance]] = {d.name: [] for d in r.deployment.devices}
    for inst, dev in m.assignments:
        if dev not in device_tasks:
            raise LinkError(f"mapping assigns {inst.key} to unknown device '{dev}'")
        device_tasks[dev].append(inst)

    packages: list[DevicePackage] = []
    for dev in r.deployment.devices:
        tasks = tuple(_bind_task(r, inst, topics_by_data) for inst in device_tasks[dev.name])
        samplers = _device_samplers(r, dev, topics_by_data)
        drivers = tuple(driver_contracts[res] for res in dev.resources)
        packages.append(
            DevicePackage(
                device_name=dev.name,
                platform=dev.platform,
                region_coords=dev.region_coords,
                tasks=tasks,
                samplers=samplers,
                drivers=drivers,
                runtime_config={"broker": "sim://local", "qos": "exactly-once"},
            )
        )
    _check_closure(r, packages)
    return packages


def _bind_task(
    r: ResolvedApp, inst: ServiceInstance, topics_by_data: dict[str, list[TopicBinding]]
) -> TaskBinding:
    svc = r.service(inst.service_name)
    inputs = []
    timers = []
    for c in svc.consumes:
        subscribed = [
            t.topic
            for t in topics_by_data.get(c.data_name, [])
            if inst.key in t.subscribers
        ]
        inputs.append(
            {
                "data": c.data_name,
                "type": r.data_index[c.data_name].data_type,
                "delivery": "periodic" if c.periodic else "event",
                "window": c.window,
                "periodMs": c.period_ms,
                "topics": subscribed,
            }
        )
        if c.periodic:
            timers.append((c.period_ms, c.data_name))
    outputs = []
    for pr in svc.produces:
        published = [
            t.topic
            for t in topics_by_data.get(pr.data_name, [])
            if ("service", inst.key) in t.publishers
        ]
        outputs.append({"data": pr.data_name, "type": pr.data_type, "topics": published})
    requests = []
    for rq in svc.requests:
        storage = r.storage_named(rq.storage_name)
        requests.append(
            {
                "data": rq.data_name,
                "type": storage.data_type,
                "keyArg": rq.key_arg,
                "keyType": storage.key_type,
                "storage": rq.storage_name,
                "device": _storage_host(r, rq.storage_name, inst),
            }
        )
    commands = []
    for cmd in svc.commands:
        commands.append(
            {
                "action": cmd.action_name,
                "actuator": cmd.actuator_name,
                "args": list(cmd.args),
                "devices": _command_targets(r, cmd.actuator_name, inst),
            }
        )
    logic = svc.logic
    if logic.kind == "builtin":
        logic_doc = {
            "kind": "builtin",
            "name": logic.builtin_name,
            "params": {k: v for k, v in logic.builtin_params},
        }
    else:
        logic_doc = {"kind": "extern", "handler": logic.handler_key}
    return TaskBinding(
        instance=inst,
        logic=logic_doc,
        inputs=tuple(inputs),
        outputs=tuple(outputs),
        requests=tuple(requests),
        commands=tuple(commands),
        timers=tuple(timers),
    )


def _device_samplers(
    r: ResolvedApp, dev, topics_by_data: dict[str, list[TopicBinding]]
) -> tuple[Sampler, ...]:
    samplers = []
    coords = dev.coords()
    for s in r.vocabulary.sensors:
        if s.name not in dev.resources:
            continue
        for item in s.generates:
            periodic = [
                t
                for t in topics_by_data.get(item.name, [])
                if t.mode == "periodic"
                and t.scope_region is not None
                and coords.get(t.scope_region) == t.scope_value
            ]
            if not periodic:
                continue
            period = periodic[0].period_ms
            samplers.append(
                Sampler(
                    resource=s.name,
                    data_name=item.name,
                    period_ms=period,
                    topics=tuple(t.topic for t in periodic),
                )
            )
    return tuple(samplers)


def _check_closure(r: ResolvedApp, packages: list[DevicePackage]) -> None:
    published: set[str] = set()
    for p in packages:
        for sampler in p.samplers:
            published.update(sampler.topics)
        for task in p.tasks:
            for out in task.outputs:
                published.update(out["topics"])
    # Event-driven sensor topics are fed by the hosting device's driver.
    for t in r.topics:
        if t.mode == "event" and any(kind == "device" for kind, _name in t.publishers):
            published.add(t.topic)
    for p in packages:
        for task in p.tasks:
            for slot in task.inputs:
                for topic in slot["topics"]:
                    if topic not in published:
                        raise LinkError(
                            f"closure violation: task {task.instance.key} subscribes to "
                            f"'{topic}' which no package publishes"
                        )


def package_to_jsonable(p: DevicePackage) -> dict:
    return {
        "device": p.device_name,
        "platform": p.platform,
        "region": {region: value for region, value in p.region_coords},
        "tasks": [
            {
                "instance": t.instance.key,
                "service": t.instance.service_name,
                "scopeRegion": t.instance.scope_region,
                "scope": t.instance.scope_text,
                "logic": t.logic,
                "inputs": list(t.inputs),
                "outputs": list(t.outputs),
                "requests": list(t.requests),
                "commands": list(t.commands),
                "timers": [list(timer) for timer in t.timers],
            }
            for t in p.tasks
        ],
        "samplers": [
            {
                "resource": s.resource,
                "data": s.data_name,
                "periodMs": s.period_ms,
                "topics": list(s.topics),
            }
            for s in p.samplers
        ],
        "drivers": [driver_to_jsonable(d) for d in p.drivers],
        "runtime": p.runtime_config,
    }


def driver_to_jsonable(d: DriverContract) -> dict:
    doc: dict = {"resource": d.resource_name, "kind": d.kind, "bindingKey": d.binding_key}
    if d.kind in ("sensor", "storage"):
        doc["items"] = [{"data": name, "type": t} for name, t in d.data_items]
    if d.kind == "actuator":
        doc["actions"] = [
            {"action": name, "params": [{"name": pn, "type": pt} for pn, pt in params]}
            for name, params in d.actions
        ]
    if d.key is not None:
        doc["key"] = {"name": d.key[0], "type": d.key[1]}
    return doc


def contract_to_jsonable(c: LogicContract) -> dict:
    return {
        "service": c.service_name,
        "scopeRegion": c.scope_region,
        "inputs": [
            {
                "data": s.data_name,
                "type": s.data_type,
                "delivery": s.delivery,
                "window": s.window,
                "periodMs": s.period_ms,
            }
            for s in c.input_slots
        ],
        "outputs": [{"data": name, "type": t} for name, t in c.output_slots],
        "requests": [
            {"data": d, "type": t, "keyArg": k, "keyType": kt, "storage": st}
            for d, t, k, kt, st in c.request_slots
        ],
        "commands": [
            {"action": a, "actuator": act, "args": list(args)}
            for a, act, args in c.command_slots
        ],
    }


def linkset_to_jsonable(r: ResolvedApp, packages: list[DevicePackage]) -> dict:
    return {
        "app": {
            "vocabulary": r.vocabulary.name,
            "architecture": r.architecture.name,
            "deployment": r.deployment.name,
        },
        "packages": [
            {"device": p.device_name, "file": f"device/{p.device_name}.pkg.json"}
            for p in packages
        ],
        "topics": [
            {
                "topic": t.topic,
                "data": t.data_name,
                "mode": t.mode,
                "periodMs": t.period_ms,
                "publishers": [list(pub) for pub in t.publishers],
                "subscribers": list(t.subscribers),
            }
            for t in r.topics
        ],
        "records": {
            rec.name: [{"field": f.name, "type": f.type} for f in rec.fields]
            for rec in r.vocabulary.records
        },
    }


def package_size(p: DevicePackage) -> int:
    """Byte length of the serialized package file."""
    return len(canonical_json(package_to_jsonable(p)).encode("utf-8"))


def _instance_from_key(service: str, scope_region: str, scope: str) -> ServiceInstance:
    if scope == "global":
        return ServiceInstance(service, scope_region, None)
    region, _eq, value = scope.partition("=")
    return ServiceInstance(service, region, int(value))


def package_from_jsonable(doc: dict) -> DevicePackage:
    tasks = tuple(
        TaskBinding(
            instance=_instance_from_key(t["service"], t["scopeRegion"], t["scope"]),
            logic=t["logic"],
            inputs=tuple(t["inputs"]),
            outputs=tuple(t["outputs"]),
            requests=tuple(t["requests"]),
            commands=tuple(t["commands"]),
            timers=tuple((period, data) for period, data in t["timers"]),
        )
        for t in doc["tasks"]
    )
    samplers = tuple(
        Sampler(s["resource"], s["data"], s["periodMs"], tuple(s["topics"]))
        for s in doc["samplers"]
    )
    drivers = tuple(
        DriverContract(
            resource_name=d["resource"],
            kind=d["kind"],
            binding_key=d["bindingKey"],
            data_items=tuple((it["data"], it["type"]) for it in d.get("items", [])),
            actions=tuple(
                (a["action"], tuple((p["name"], p["type"]) for p in a["params"]))
                for a in d.get("actions", [])
            ),
            key=(d["key"]["name"], d["key"]["type"]) if "key" in d else None,
        )
        for d in doc["drivers"]
    )
    return DevicePackage(
        device_name=doc["device"],
        platform=doc["platform"],
        region_coords=tuple(sorted(doc["region"].items())),
        tasks=tasks,
        samplers=samplers,
        drivers=drivers,
        runtime_config=doc["runtime"],
    )
