"""Deterministic discrete-event execution of a link set.

One simulated process plays every device: an in-process broker delivers
publications with a constant per-hop latency (default 5 ms), storage
requests answer after a constant round trip (default 1 ms), commands are
fire-and-forget. All ties break on a monotonically assigned sequence
number, so two runs over identical inputs produce byte-identical logs.

Sensors are trace-driven by default: a trace entry either latches a new
reading (periodic data, published by the device's sampling timer) or is
published immediately (event-driven data). Entries addressed to a storage
resource carry a key and act as puts. Programmatic drivers may replace the
trace for a resource via the same registry mechanism as logic handlers.

The horizon gates event creation (timer reschedules and trace admission),
after which the queue drains; a periodic consumer therefore sees exactly
floor(horizon/period) + 1 samples per producing sensor, the first at t=0.
"""

from __future__ import annotations

import heapq
import inspect
import json
from dataclasses import dataclass, field
from typing import Callable

from .linker import DevicePackage

DEFAULT_LATENCY_MS = 5
DEFAULT_REQUEST_LATENCY_MS = 1
_EVENT_CAP = 10_000_000

_TYPE_DEFAULTS = {"double": 0.0, "long": 0, "string": "", "boolean": False}


class SimulationError(Exception):
    pass


class ABSENT:
    """Sentinel for a storage response that found no value under the key."""

    def __repr__(self) -> str:  # pragma: no cover
        return "ABSENT"


ABSENT = ABSENT()


# ---------------------------------------------------------------------------
# Values


def check_value(value, type_name: str, records: dict[str, list[tuple[str, str]]], where: str):
    """Validate and normalize a value against a declared type."""
    if type_name == "double":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SimulationError(f"{where}: expected double, got {value!r}")
        return float(value)
    if type_name == "long":
        if isinstance(value, bool) or not isinstance(value, int):
            raise SimulationError(f"{where}: expected long, got {value!r}")
        return value
    if type_name == "string":
        if not isinstance(value, str):
            raise SimulationError(f"{where}: expected string, got {value!r}")
        return value
    if type_name == "boolean":
        if not isinstance(value, bool):
            raise SimulationError(f"{where}: expected boolean, got {value!r}")
        return value
    fields = records.get(type_name)
    if fields is None:
        raise SimulationError(f"{where}: unknown type '{type_name}'")
    if not isinstance(value, dict):
        raise SimulationError(f"{where}: expected record {type_name}, got {value!r}")
    declared = {name for name, _t in fields}
    given = set(value.keys())
    if declared != given:
        raise SimulationError(
            f"{where}: record {type_name} wants fields {sorted(declared)}, got {sorted(given)}"
        )
    return {
        name: check_value(value[name], ftype, records, f"{where}.{name}")
        for name, ftype in fields
    }


def default_value(type_name: str, records: dict[str, list[tuple[str, str]]]):
    if type_name in _TYPE_DEFAULTS:
        return _TYPE_DEFAULTS[type_name]
    return {name: default_value(t, records) for name, t in records[type_name]}


# ---------------------------------------------------------------------------
# Traces and registries


@dataclass(frozen=True)
class TraceEntry:
    time_ms: int
    device: str
    resource: str
    data_name: str
    value: object
    key: object = None


def parse_trace(text: str) -> list[TraceEntry]:
    """Line-delimited JSON, one entry per line; blank lines ignored."""
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as e:
            raise SimulationError(f"trace line {lineno}: invalid JSON ({e.msg})")
        try:
            entries.append(
                TraceEntry(
                    time_ms=int(doc["t"]),
                    device=doc["device"],
                    resource=doc["resource"],
                    data_name=doc["data"],
                    value=doc["value"],
                    key=doc.get("key"),
                )
            )
        except KeyError as e:
            raise SimulationError(f"trace line {lineno}: missing field {e}")
    entries.sort(key=lambda e: e.time_ms)
    return entries


@dataclass(frozen=True)
class TraceFeed:
    """Marker binding a resource's data items to the simulation trace."""

    data_names: tuple[str, ...]


def trace_feed(*data_names: str) -> TraceFeed:
    return TraceFeed(tuple(data_names))


class HandlerRegistry:
    """Extern logic handlers and programmatic drivers, by key."""

    def __init__(self):
        self.handlers: dict[str, Callable] = {}
        self.drivers: dict[str, object] = {}

    def register(self, key: str, fn: Callable) -> "HandlerRegistry":
        if key in self.handlers:
            raise SimulationError(f"handler key '{key}' already registered")
        self.handlers[key] = fn
        return self

    def register_driver(self, resource: str, feed) -> "HandlerRegistry":
        if resource in self.drivers:
            raise SimulationError(f"driver for resource '{resource}' already registered")
        self.drivers[resource] = feed
        return self


def register_handler(registry: HandlerRegistry, key: str, fn: Callable) -> HandlerRegistry:
    return registry.register(key, fn)


# ---------------------------------------------------------------------------
# Logic execution


@dataclass
class LogicContext:
    """What one logic step may see and do."""

    trigger: tuple[str, str]  # ("input" | "response", data name)
    value: object
    inputs: dict
    windows: dict
    responses: dict
    state: dict
    topic: str | None = None  # topic the triggering delivery arrived on
    _outputs: list = field(default_factory=list)
    _commands: list = field(default_factory=list)
    _requests: list = field(default_factory=list)

    def output(self, data_name: str, value) -> None:
        self._outputs.append((data_name, value))

    def command(self, action_name: str | None = None) -> None:
        """Emit declared command slot(s): one by action name, or all."""
        self._commands.append(action_name)

    def request(self, data_name: str, key) -> None:
        self._requests.append((data_name, key))


def _numeric_pool(ctx: LogicContext) -> list:
    values = []
    for name in ctx.inputs:
        if name in ctx.windows:
            values.extend(ctx.windows[name])
        elif ctx.inputs[name] is not None:
            values.append(ctx.inputs[name])
    return values


_THRESHOLD_OPS = {
    "gt": lambda a, b: a > b,
    "ge": lambda a, b: a >= b,
    "lt": lambda a, b: a < b,
    "le": lambda a, b: a <= b,
    "eq": lambda a, b: a == b,
}


def builtin_logic(name: str, params: dict, contract: dict) -> Callable:
    """Build the step function for a builtin against a task's slot layout.

    ``contract`` is the task binding document: inputs/outputs/requests as
    linked. Raises SimulationError for an unknown name or bad params.
    """
    outputs = [o["data"] for o in contract.get("outputs", [])]
    requests = [r["data"] for r in contract.get("requests", [])]

    def first_output(ctx: LogicContext, value) -> None:
        if outputs:
            ctx.output(outputs[0], value)

    if name == "average":
        if params:
            raise SimulationError(f"builtin average takes no params, got {sorted(params)}")
        if not outputs:
            raise SimulationError("builtin average needs a produce clause")

        def average(ctx: LogicContext):
            pool = _numeric_pool(ctx)
            if not pool:
                return
            ctx.output(outputs[0], sum(pool) / len(pool))
            ctx.command()

        return average

    if name == "threshold":
        ops = [(k, v) for k, v in params.items() if k in _THRESHOLD_OPS]
        if len(ops) != 1 or len(params) != 1:
            raise SimulationError(
                "builtin threshold wants exactly one of gt/ge/lt/le/eq"
            )
        op_name, bound = ops[0]
        if isinstance(bound, (bool, str)):
            raise SimulationError(f"threshold {op_name} wants a number, got {bound!r}")
        op = _THRESHOLD_OPS[op_name]

        def threshold(ctx: LogicContext):
            if ctx.trigger[0] != "input" or ctx.value is None:
                return
            result = bool(op(ctx.value, bound))
            first_output(ctx, result)
            if result:
                ctx.command()

        return threshold

    if name in ("all", "any"):
        if params:
            raise SimulationError(f"builtin {name} takes no params, got {sorted(params)}")
        want_all = name == "all"

        def fold(ctx: LogicContext):
            pool = []
            missing = False
            for slot, latest in ctx.inputs.items():
                if slot in ctx.windows:
                    pool.extend(bool(v) for v in ctx.windows[slot])
                elif latest is None:
                    missing = True
                else:
                    pool.append(bool(latest))
            if want_all:
                result = bool(pool) and not missing and all(pool)
            else:
                result = any(pool)
            first_output(ctx, result)
            if result:
                ctx.command()

        return fold

    if name == "passthrough":
        if params:
            raise SimulationError(f"builtin passthrough takes no params, got {sorted(params)}")

        def passthrough(ctx: LogicContext):
            if ctx.trigger[0] != "input":
                return
            first_output(ctx, ctx.value)
            ctx.command()

        return passthrough

    if name == "latch":
        if params:
            raise SimulationError(f"builtin latch takes no params, got {sorted(params)}")

        def latch(ctx: LogicContext):
            # Rising-edge detector, tracked per source topic so one stream's
            # steady false never resets a latch set by another.
            if ctx.trigger[0] != "input":
                return
            latched = ctx.state.setdefault("latched", {})
            source = ctx.topic or ctx.trigger[1]
            current = bool(ctx.value)
            previous = latched.get(source, False)
            if current and not previous:
                latched[source] = True
                first_output(ctx, True)
                ctx.command()
            elif not current and previous:
                latched[source] = False
                first_output(ctx, False)

        return latch

    if name == "keyed-lookup-forward":
        if params:
            raise SimulationError(
                f"builtin keyed-lookup-forward takes no params, got {sorted(params)}"
            )
        if len(requests) != 1:
            raise SimulationError("builtin keyed-lookup-forward needs exactly one request clause")
        key_arg = contract["requests"][0]["keyArg"]
        request_name = requests[0]

        def lookup_forward(ctx: LogicContext):
            kind, data = ctx.trigger
            if kind == "input" and data == key_arg:
                ctx.request(request_name, ctx.value)
            elif kind == "response" and data == request_name:
                if ctx.value is ABSENT:
                    return
                first_output(ctx, ctx.value)
                ctx.command()

        return lookup_forward

    raise SimulationError(f"unknown builtin '{name}'")


# ---------------------------------------------------------------------------
# Simulation


@dataclass(frozen=True)
class ActuationEntry:
    time_ms: int
    device: str
    actuator: str
    action: str
    args: tuple

    def render(self) -> str:
        doc = {
            "t": self.time_ms,
            "device": self.device,
            "resource": self.actuator,
            "action": self.action,
            "args": list(self.args),
        }
        return json.dumps(doc, separators=(", ", ": "))


@dataclass
class SimResult:
    actuations: list[ActuationEntry]
    topic_published: dict[str, int]
    topic_delivered: dict[str, int]
    task_invocations: dict[str, int]
    task_states: dict[str, dict]
    events_processed: int

    def actuation_log(self) -> str:
        if not self.actuations:
            return ""
        return "\n".join(e.render() for e in self.actuations) + "\n"

    def coverage(self) -> float:
        """Fraction of linked tasks that executed at least one event."""
        if not self.task_invocations:
            return 1.0
        live = sum(1 for n in self.task_invocations.values() if n > 0)
        return live / len(self.task_invocations)


class _Task:
    def __init__(self, device: str, doc: dict, logic_fn: Callable):
        self.device = device
        self.doc = doc
        self.key = doc["instance"]
        self.logic_fn = logic_fn
        self.inputs: dict[str, object] = {s["data"]: None for s in doc["inputs"]}
        self.windows: dict[str, list] = {}
        self.window_size: dict[str, int] = {}
        for s in doc["inputs"]:
            if s["window"]:
                self.windows[s["data"]] = []
                self.window_size[s["data"]] = s["window"]
        self.responses: dict[str, object] = {}
        self.state: dict = {}
        self.outputs_latest: dict[str, object] = {}
        self.invocations = 0

    def slot_for(self, data_name: str) -> dict | None:
        for s in self.doc["inputs"]:
            if s["data"] == data_name:
                return s
        return None


class Simulator:
    def __init__(
        self,
        packages: list[DevicePackage],
        topics: list[dict],
        records: dict[str, list[tuple[str, str]]],
        traces: list[TraceEntry],
        registry: HandlerRegistry | None,
        horizon_ms: int,
        seed: int = 0,
        latency_ms: int = DEFAULT_LATENCY_MS,
        request_latency_ms: int = DEFAULT_REQUEST_LATENCY_MS,
    ):
        self.packages = {p.device_name: p for p in packages}
        self.records = records
        self.registry = registry or HandlerRegistry()
        self.horizon = horizon_ms
        self.seed = seed
        self.latency = latency_ms
        self.request_latency = request_latency_ms

        self.queue: list[tuple[int, int, tuple]] = []
        self.seq = 0
        self.now = 0

        self.readings: dict[tuple[str, str], object] = {}
        self.reading_types: dict[tuple[str, str], str] = {}
        self.stores: dict[tuple[str, str], dict] = {}
        self.store_types: dict[tuple[str, str], tuple[str, str]] = {}
        self.actuator_hosts: dict[str, set[str]] = {}
        self.event_topics: dict[tuple[str, str], list[str]] = {}

        self.tasks: list[_Task] = []
        self.subscribers: dict[str, list[tuple[_Task, str]]] = {}
        self.topic_published: dict[str, int] = {}
        self.topic_delivered: dict[str, int] = {}
        self.actuations: list[ActuationEntry] = []
        self.events_processed = 0

        self._index_devices(packages, topics)
        self._spawn_tasks(packages)
        self._seed_events(packages, traces)

    # -- setup ------------------------------------------------------------

    def _index_devices(self, packages: list[DevicePackage], topics: list[dict]) -> None:
        for t in topics:
            self.topic_published.setdefault(t["topic"], 0)
        event_publishers: dict[str, list[str]] = {}
        for t in topics:
            if t["mode"] == "event":
                event_publishers[t["topic"]] = [
                    name for kind, name in t["publishers"] if kind == "device"
                ]
        for p in packages:
            for driver in p.drivers:
                if driver.kind == "sensor":
                    for data, type_name in driver.data_items:
                        key = (p.device_name, data)
                        self.readings[key] = default_value(type_name, self.records)
                        self.reading_types[key] = type_name
                        self.event_topics[key] = [
                            topic
                            for topic, devs in event_publishers.items()
                            if p.device_name in devs and topic.split("/")[0] == data
                        ]
                elif driver.kind == "storage":
                    skey = (p.device_name, driver.resource_name)
                    self.stores[skey] = {}
                    data, data_type = driver.data_items[0]
                    self.store_types[skey] = (driver.key[1], data_type)
                elif driver.kind == "actuator":
                    self.actuator_hosts.setdefault(driver.resource_name, set()).add(
                        p.device_name
                    )

    def _spawn_tasks(self, packages: list[DevicePackage]) -> None:
        for p in packages:
            for binding in p.tasks:
                doc = {
                    "instance": binding.instance.key,
                    "inputs": list(binding.inputs),
                    "outputs": list(binding.outputs),
                    "requests": list(binding.requests),
                    "commands": list(binding.commands),
                }
                logic = binding.logic
                if logic["kind"] == "builtin":
                    fn = builtin_logic(logic["name"], dict(logic["params"]), doc)
                else:
                    fn = self.registry.handlers.get(logic["handler"])
                    if fn is None:
                        raise SimulationError(
                            f"missing handler '{logic['handler']}' for service "
                            f"instance {binding.instance.key}"
                        )
                    sig = inspect.signature(fn)
                    required = [
                        prm
                        for prm in sig.parameters.values()
                        if prm.default is inspect.Parameter.empty
                        and prm.kind
                        in (
                            inspect.Parameter.POSITIONAL_ONLY,
                            inspect.Parameter.POSITIONAL_OR_KEYWORD,
                        )
                    ]
                    if len(required) != 1:
                        raise SimulationError(
                            f"handler '{logic['handler']}' must take exactly one "
                            f"positional argument (the logic context)"
                        )
                task = _Task(p.device_name, doc, fn)
                self.tasks.append(task)
                for slot in binding.inputs:
                    for topic in slot["topics"]:
                        self.subscribers.setdefault(topic, []).append((task, slot["data"]))

    def _seed_events(self, packages: list[DevicePackage], traces: list[TraceEntry]) -> None:
        # Programmatic drivers synthesize extra trace entries.
        synthetic: list[TraceEntry] = []
        for p in packages:
            for driver in p.drivers:
                feed = self.registry.drivers.get(driver.resource_name)
                if feed is None or isinstance(feed, TraceFeed):
                    continue
                doc = {"resource": driver.resource_name, "items": list(driver.data_items)}
                for t, data, value in feed(p.device_name, doc, self.horizon):
                    synthetic.append(
                        TraceEntry(int(t), p.device_name, driver.resource_name, data, value)
                    )
        merged = sorted(traces + synthetic, key=lambda e: e.time_ms)
        for entry in merged:
            if entry.time_ms > self.horizon:
                continue
            self._validate_trace_entry(entry)
            self._push(entry.time_ms, ("trace", entry))
        for p in packages:
            for i, _sampler in enumerate(p.samplers):
                self._push(0, ("sample", p.device_name, i))

    def _validate_trace_entry(self, entry: TraceEntry) -> None:
        pkg = self.packages.get(entry.device)
        if pkg is None:
            raise SimulationError(f"trace names unknown device '{entry.device}'")
        driver = next(
            (d for d in pkg.drivers if d.resource_name == entry.resource), None
        )
        if driver is None:
            raise SimulationError(
                f"device '{entry.device}' does not host resource '{entry.resource}'"
            )
        if driver.kind == "actuator":
            raise SimulationError(
                f"trace cannot feed actuator '{entry.resource}' on '{entry.device}'"
            )
        item = next((it for it in driver.data_items if it[0] == entry.data_name), None)
        if item is None:
            raise SimulationError(
                f"resource '{entry.resource}' does not provide data '{entry.data_name}'"
            )
        where = f"trace t={entry.time_ms} {entry.device}/{entry.data_name}"
        check_value(entry.value, item[1], self.records, where)
        if driver.kind == "storage":
            if entry.key is None:
                raise SimulationError(f"{where}: storage entry needs a 'key'")
            check_value(entry.key, self.store_types[(entry.device, entry.resource)][0],
                        self.records, f"{where} key")

    # -- event machinery ---------------------------------------------------

    def _push(self, time_ms: int, event: tuple) -> None:
        heapq.heappush(self.queue, (time_ms, self.seq, event))
        self.seq += 1

    def _publish(self, topic: str, value, at_time: int) -> None:
        self.topic_published[topic] = self.topic_published.get(topic, 0) + 1
        for task, slot_name in self.subscribers.get(topic, []):
            self._push(at_time + self.latency, ("deliver", topic, slot_name, value, task))

    def run(self) -> SimResult:
        while self.queue:
            time_ms, _seq, event = heapq.heappop(self.queue)
            self.now = time_ms
            self.events_processed += 1
            if self.events_processed > _EVENT_CAP:
                raise SimulationError("event cap exceeded; feedback loop in the link set?")
            kind = event[0]
            if kind == "trace":
                self._on_trace(event[1])
            elif kind == "sample":
                self._on_sample(event[1], event[2])
            elif kind == "deliver":
                self._on_deliver(event[1], event[2], event[3], event[4])
            elif kind == "response":
                self._on_response(event[1], event[2], event[3], event[4])
            elif kind == "command":
                _, device, actuator, action, args = event
                self.actuations.append(
                    ActuationEntry(self.now, device, actuator, action, tuple(args))
                )
        return SimResult(
            actuations=self.actuations,
            topic_published=dict(sorted(self.topic_published.items())),
            topic_delivered=dict(sorted(self.topic_delivered.items())),
            task_invocations={t.key: t.invocations for t in self.tasks},
            task_states={t.key: t.state for t in self.tasks},
            events_processed=self.events_processed,
        )

    def _on_trace(self, entry: TraceEntry) -> None:
        pkg = self.packages[entry.device]
        driver = next(d for d in pkg.drivers if d.resource_name == entry.resource)
        if driver.kind == "storage":
            store = self.stores[(entry.device, entry.resource)]
            store[entry.key] = entry.value
            return
        key = (entry.device, entry.data_name)
        value = check_value(
            entry.value, self.reading_types[key], self.records, f"trace {entry.data_name}"
        )
        self.readings[key] = value
        for topic in self.event_topics.get(key, []):
            self._publish(topic, value, self.now)

    def _on_sample(self, device: str, index: int) -> None:
        sampler = self.packages[device].samplers[index]
        value = self.readings[(device, sampler.data_name)]
        for topic in sampler.topics:
            self._publish(topic, value, self.now)
        next_fire = self.now + sampler.period_ms
        if next_fire <= self.horizon:
            self._push(next_fire, ("sample", device, index))

    def _on_deliver(self, topic: str, slot_name: str, value, task: _Task) -> None:
        self.topic_delivered[topic] = self.topic_delivered.get(topic, 0) + 1
        task.inputs[slot_name] = value
        fire = True
        if slot_name in task.window_size:
            window = task.windows[slot_name]
            window.append(value)
            if len(window) > task.window_size[slot_name]:
                window.pop(0)
            if len(window) < task.window_size[slot_name]:
                fire = False
        if fire:
            self._invoke(task, ("input", slot_name), value, topic=topic)

    def _on_response(self, task: _Task, request_doc: dict, data_name: str, key) -> None:
        store = self.stores[(request_doc["device"], request_doc["storage"])]
        value = store.get(key, ABSENT)
        task.responses[data_name] = value
        self._invoke(task, ("response", data_name), value)

    def storage_put(self, device: str, storage: str, key, value) -> None:
        self.stores[(device, storage)][key] = value

    def storage_get(self, device: str, storage: str, key):
        return self.stores[(device, storage)].get(key, ABSENT)

    def _invoke(
        self, task: _Task, trigger: tuple[str, str], value, topic: str | None = None
    ) -> None:
        task.invocations += 1
        ctx = LogicContext(
            trigger=trigger,
            value=value,
            inputs=task.inputs,
            windows={name: tuple(w) for name, w in task.windows.items()},
            responses=task.responses,
            state=task.state,
            topic=topic,
        )
        task.logic_fn(ctx)
        for data_name, out_value in ctx._outputs:
            slot = next((o for o in task.doc["outputs"] if o["data"] == data_name), None)
            if slot is None:
                raise SimulationError(
                    f"task {task.key} emitted undeclared output '{data_name}'"
                )
            out_value = check_value(
                out_value, slot["type"], self.records, f"{task.key} output {data_name}"
            )
            task.outputs_latest[data_name] = out_value
            for topic in slot["topics"]:
                self._publish(topic, out_value, self.now)
        for data_name, key in ctx._requests:
            request = next(
                (q for q in task.doc["requests"] if q["data"] == data_name), None
            )
            if request is None:
                raise SimulationError(
                    f"task {task.key} issued undeclared request '{data_name}'"
                )
            self._push(
                self.now + self.request_latency,
                ("response", task, request, data_name, key),
            )
        for action_name in ctx._commands:
            for command in task.doc["commands"]:
                if action_name is not None and command["action"] != action_name:
                    continue
                args = []
                resolved = True
                for arg in command["args"]:
                    if arg in task.outputs_latest:
                        args.append(task.outputs_latest[arg])
                    elif arg in task.responses and task.responses[arg] is not ABSENT:
                        args.append(task.responses[arg])
                    elif task.inputs.get(arg) is not None:
                        args.append(task.inputs[arg])
                    else:
                        resolved = False
                        break
                if not resolved:
                    task.state["_suppressed_commands"] = (
                        task.state.get("_suppressed_commands", 0) + 1
                    )
                    continue
                for device in command["devices"]:
                    self._push(
                        self.now + self.latency,
                        ("command", device, command["actuator"], command["action"], args),
                    )


def run(
    packages: list[DevicePackage],
    topics: list[dict],
    records: dict[str, list[tuple[str, str]]],
    traces: list[TraceEntry],
    handlers: HandlerRegistry | None,
    horizon_ms: int,
    seed: int = 0,
    latency_ms: int = DEFAULT_LATENCY_MS,
    request_latency_ms: int = DEFAULT_REQUEST_LATENCY_MS,
) -> SimResult:
    """Execute a link set to completion and return the observable results."""
    sim = Simulator(
        packages,
        topics,
        records,
        traces,
        handlers,
        horizon_ms,
        seed=seed,
        latency_ms=latency_ms,
        request_latency_ms=request_latency_ms,
    )
    return sim.run()
