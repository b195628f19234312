"""Service placement: seeded random assignment of instances to devices."""

from __future__ import annotations

from dataclasses import dataclass

from .resolver import ResolvedApp, ServiceInstance
from .rng import SplitMix64


class PlacementError(Exception):
    """No device can host an instance."""


@dataclass(frozen=True)
class Mapping:
    seed: int
    assignments: tuple[tuple[ServiceInstance, str], ...]

    def device_for(self, inst: ServiceInstance) -> str | None:
        for candidate, device in self.assignments:
            if candidate == inst:
                return device
        return None

    def tasks_on(self, device: str) -> list[ServiceInstance]:
        return [inst for inst, dev in self.assignments if dev == device]


@dataclass(frozen=True)
class Violation:
    instance: ServiceInstance
    device: str | None
    reason: str


def eligible_devices(inst: ServiceInstance, r: ResolvedApp) -> list[str]:
    """Devices that may host the instance, in deployment declaration order."""
    if inst.is_global:
        out = [d.name for d in r.deployment.devices]
    else:
        out = [
            d.name
            for d in r.deployment.devices
            if d.coords().get(inst.scope_region) == inst.scope_value
        ]
    if not out:
        raise PlacementError(f"no eligible device for instance {inst.key}")
    return out


def map_random(r: ResolvedApp, seed: int) -> Mapping:
    """One uniform draw per instance, in canonical instance order."""
    rng = SplitMix64(seed)
    assignments = []
    for inst in r.service_instances:
        candidates = eligible_devices(inst, r)
        assignments.append((inst, candidates[rng.next_below(len(candidates))]))
    return Mapping(seed=seed, assignments=tuple(assignments))


def validate_mapping(m: Mapping, r: ResolvedApp) -> list[Violation]:
    """Independent totality + validity check, straight off device coords."""
    violations: list[Violation] = []
    devices = {d.name: d for d in r.deployment.devices}
    assigned = {inst: dev for inst, dev in m.assignments}
    for inst in r.service_instances:
        device_name = assigned.pop(inst, None)
        if device_name is None:
            violations.append(Violation(inst, None, "instance has no assignment"))
            continue
        device = devices.get(device_name)
        if device is None:
            violations.append(Violation(inst, device_name, "assigned device does not exist"))
            continue
        if inst.scope_value is not None:
            bound = dict(device.region_coords).get(inst.scope_region)
            if bound != inst.scope_value:
                violations.append(
                    Violation(
                        inst,
                        device_name,
                        f"device binds {inst.scope_region}={bound}, instance wants {inst.scope_value}",
                    )
                )
    for inst, device_name in assigned.items():
        violations.append(Violation(inst, device_name, "assignment for unknown instance"))
    return violations


def mapping_to_jsonable(m: Mapping) -> dict:
    return {
        "seed": m.seed,
        "assignments": sorted(
            (
                {"service": inst.service_name, "scope": inst.scope_text, "device": dev}
                for inst, dev in m.assignments
            ),
            key=lambda a: (a["service"], a["scope"]),
        ),
    }


def mapping_from_jsonable(doc: dict, r: ResolvedApp) -> Mapping:
    by_key = {inst.key: inst for inst in r.service_instances}
    assignments = []
    for entry in doc["assignments"]:
        key = f"{entry['service']}@{entry['scope']}"
        inst = by_key.get(key)
        if inst is None:
            raise PlacementError(f"mapping names unknown instance {key}")
        assignments.append((inst, entry["device"]))
    order = {inst: i for i, inst in enumerate(r.service_instances)}
    assignments.sort(key=lambda pair: order[pair[0]])
    return Mapping(seed=int(doc["seed"]), assignments=tuple(assignments))
