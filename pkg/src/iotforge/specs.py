"""AST types for the vocabulary, architecture, and deployment languages.

Span fields use ``compare=False`` so two parses of equivalent text compare
structurally equal regardless of where the constructs sat in the file.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .diagnostics import SourceSpan

PRIMITIVE_TYPES = ("double", "long", "string", "boolean")

# Closed set of logic primitives the simulated runtime ships with.
BUILTIN_NAMES = (
    "average",
    "threshold",
    "all",
    "any",
    "passthrough",
    "latch",
    "keyed-lookup-forward",
)


def _nospan() -> SourceSpan:
    return SourceSpan("<none>", 1, 1, 0)


@dataclass(frozen=True)
class RegionDecl:
    name: str
    span: SourceSpan = field(default_factory=_nospan, compare=False)


@dataclass(frozen=True)
class FieldDecl:
    name: str
    type: str
    span: SourceSpan = field(default_factory=_nospan, compare=False)


@dataclass(frozen=True)
class RecordDecl:
    name: str
    fields: tuple[FieldDecl, ...]
    span: SourceSpan = field(default_factory=_nospan, compare=False)


@dataclass(frozen=True)
class DataItem:
    """A named, typed datum generated by a sensor or storage resource."""

    name: str
    type: str
    span: SourceSpan = field(default_factory=_nospan, compare=False)


@dataclass(frozen=True)
class SensorDecl:
    name: str
    generates: tuple[DataItem, ...]
    span: SourceSpan = field(default_factory=_nospan, compare=False)


@dataclass(frozen=True)
class ParamDecl:
    name: str
    type: str
    span: SourceSpan = field(default_factory=_nospan, compare=False)


@dataclass(frozen=True)
class ActionDecl:
    name: str
    params: tuple[ParamDecl, ...]
    span: SourceSpan = field(default_factory=_nospan, compare=False)


@dataclass(frozen=True)
class ActuatorDecl:
    name: str
    actions: tuple[ActionDecl, ...]
    span: SourceSpan = field(default_factory=_nospan, compare=False)


@dataclass(frozen=True)
class StorageDecl:
    name: str
    data_name: str
    data_type: str
    key_name: str
    key_type: str
    span: SourceSpan = field(default_factory=_nospan, compare=False)


@dataclass(frozen=True)
class VocabularySpec:
    name: str
    regions: tuple[RegionDecl, ...] = ()
    records: tuple[RecordDecl, ...] = ()
    sensors: tuple[SensorDecl, ...] = ()
    actuators: tuple[ActuatorDecl, ...] = ()
    storages: tuple[StorageDecl, ...] = ()
    span: SourceSpan = field(default_factory=_nospan, compare=False)

    def resources(self) -> tuple[SensorDecl | ActuatorDecl | StorageDecl, ...]:
        return tuple(self.sensors) + tuple(self.actuators) + tuple(self.storages)

    def region_names(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.regions)


@dataclass(frozen=True)
class ConsumeClause:
    data_name: str
    window: int | None = None
    period_ms: int | None = None
    span: SourceSpan = field(default_factory=_nospan, compare=False)

    @property
    def periodic(self) -> bool:
        return self.period_ms is not None


@dataclass(frozen=True)
class ProduceClause:
    data_name: str
    data_type: str
    span: SourceSpan = field(default_factory=_nospan, compare=False)


@dataclass(frozen=True)
class RequestClause:
    data_name: str
    key_arg: str
    storage_name: str
    span: SourceSpan = field(default_factory=_nospan, compare=False)


@dataclass(frozen=True)
class CommandClause:
    action_name: str
    actuator_name: str
    args: tuple[str, ...] = ()
    span: SourceSpan = field(default_factory=_nospan, compare=False)


@dataclass(frozen=True)
class LogicBinding:
    kind: str  # "builtin" | "extern"
    builtin_name: str | None = None
    builtin_params: tuple[tuple[str, int | float | str], ...] = ()
    handler_key: str | None = None
    span: SourceSpan = field(default_factory=_nospan, compare=False)


@dataclass(frozen=True)
class ServiceDecl:
    name: str
    scope_region: str
    consumes: tuple[ConsumeClause, ...] = ()
    produces: tuple[ProduceClause, ...] = ()
    requests: tuple[RequestClause, ...] = ()
    commands: tuple[CommandClause, ...] = ()
    logic: LogicBinding = field(default_factory=lambda: LogicBinding("builtin", "passthrough"))
    span: SourceSpan = field(default_factory=_nospan, compare=False)


@dataclass(frozen=True)
class ArchitectureSpec:
    name: str
    vocabulary_name: str
    services: tuple[ServiceDecl, ...] = ()
    span: SourceSpan = field(default_factory=_nospan, compare=False)


@dataclass(frozen=True)
class DeviceDecl:
    name: str
    region_coords: tuple[tuple[str, int], ...]
    resources: tuple[str, ...]
    platform: str
    span: SourceSpan = field(default_factory=_nospan, compare=False)

    def coords(self) -> dict[str, int]:
        return dict(self.region_coords)


@dataclass(frozen=True)
class DeploymentSpec:
    name: str
    vocabulary_name: str
    devices: tuple[DeviceDecl, ...] = ()
    span: SourceSpan = field(default_factory=_nospan, compare=False)
