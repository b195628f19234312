"""Pretty-printers whose output reparses to a structurally equal spec."""

from __future__ import annotations

from .specs import (
    ArchitectureSpec,
    ConsumeClause,
    DeploymentSpec,
    LogicBinding,
    ServiceDecl,
    VocabularySpec,
)


def print_vocabulary(spec: VocabularySpec) -> str:
    out = [f"vocabulary {spec.name}"]
    if spec.regions:
        out.append("")
        out.append("regions:")
        for r in spec.regions:
            out.append(f"  {r.name};")
    if spec.records:
        out.append("")
        out.append("datatypes:")
        for rec in spec.records:
            out.append(f"  datatype {rec.name} {{")
            for f in rec.fields:
                out.append(f"    {f.name}: {f.type};")
            out.append("  }")
    if spec.sensors or spec.actuators or spec.storages:
        out.append("")
        out.append("resources:")
        for s in spec.sensors:
            out.append(f"  sensor {s.name} {{")
            for item in s.generates:
                out.append(f"    generate {item.name}: {item.type};")
            out.append("  }")
        for a in spec.actuators:
            out.append(f"  actuator {a.name} {{")
            for act in a.actions:
                params = ", ".join(f"{p.name}: {p.type}" for p in act.params)
                out.append(f"    action {act.name}({params});")
            out.append("  }")
        for st in spec.storages:
            out.append(f"  storage {st.name} {{")
            out.append(
                f"    generate {st.data_name}: {st.data_type} "
                f"accessed-by {st.key_name}: {st.key_type};"
            )
            out.append("  }")
    return "\n".join(out) + "\n"


def _print_consume(c: ConsumeClause) -> str:
    parts = [f"consume {c.data_name}"]
    if c.window is not None:
        parts.append(f"window {c.window}")
    if c.period_ms is not None:
        if c.period_ms % 60000 == 0:
            parts.append(f"every {c.period_ms // 60000} min")
        elif c.period_ms % 1000 == 0:
            parts.append(f"every {c.period_ms // 1000} s")
        else:
            parts.append(f"every {c.period_ms} ms")
    return " ".join(parts) + ";"


def _print_logic(logic: LogicBinding) -> str:
    if logic.kind == "extern":
        return f"logic: extern {logic.handler_key};"
    params = ""
    if logic.builtin_params:
        params = "(" + ", ".join(f"{k}={v}" for k, v in logic.builtin_params) + ")"
    return f"logic: builtin {logic.builtin_name}{params};"


def _print_service(svc: ServiceDecl) -> list[str]:
    out = [f"service {svc.name} {{"]
    out.append(f"  scope: {svc.scope_region};")
    for c in svc.consumes:
        out.append(f"  {_print_consume(c)}")
    for pr in svc.produces:
        out.append(f"  produce {pr.data_name}: {pr.data_type};")
    for rq in svc.requests:
        out.append(f"  request {rq.data_name}({rq.key_arg}) from {rq.storage_name};")
    for cmd in svc.commands:
        args = ", ".join(cmd.args)
        out.append(f"  command {cmd.action_name}({args}) to {cmd.actuator_name};")
    out.append(f"  {_print_logic(svc.logic)}")
    out.append("}")
    return out


def print_architecture(spec: ArchitectureSpec) -> str:
    out = [f"architecture {spec.name} uses {spec.vocabulary_name}"]
    for svc in spec.services:
        out.append("")
        out.extend(_print_service(svc))
    return "\n".join(out) + "\n"


def print_deployment(spec: DeploymentSpec) -> str:
    out = [f"deployment {spec.name} uses {spec.vocabulary_name}"]
    for dev in spec.devices:
        out.append("")
        out.append(f"device {dev.name} {{")
        coords = ", ".join(f"{r} = {v}" for r, v in dev.region_coords)
        out.append(f"  region: {coords};")
        out.append(f"  resources: {', '.join(dev.resources)};")
        out.append(f"  platform: {dev.platform};")
        out.append("}")
    return "\n".join(out) + "\n"
