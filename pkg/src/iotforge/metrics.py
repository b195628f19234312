"""Evaluation instruments: LOC accounting, reuse diffs, scaling, expressiveness.

A line counts iff it is non-blank and not comment-only; trailing comments do
not disqualify a line. Comment syntax follows the file kind: ``//`` for the
three spec languages, ``#`` for Python handler and driver manifests.
"""

from __future__ import annotations

import csv
import difflib
import io
from dataclasses import dataclass, field
from pathlib import Path

from .parser import parse_deployment
from .printer import print_deployment
from .project import CONCERNS, ProjectLayout, discover_layout, load_app_config, load_specs
from .specs import DeploymentSpec, DeviceDecl

_COMMENT_PREFIX = {".vocab": "//", ".arch": "//", ".deploy": "//", ".py": "#"}


def stripped_lines(path: Path) -> list[str]:
    """Countable lines of a file: blanks and comment-only lines removed."""
    marker = _COMMENT_PREFIX.get(Path(path).suffix)
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        bare = line.strip()
        if not bare:
            continue
        if marker and bare.startswith(marker):
            continue
        out.append(line)
    return out


def count_loc(files: list[Path], concern: str | None = None) -> int:
    return sum(len(stripped_lines(f)) for f in files)


@dataclass
class LocReport:
    concerns: dict[str, int]
    generated_lines: int = 0
    generated_bytes: int = 0
    generated_files: int = 0

    @property
    def handwritten(self) -> int:
        return sum(self.concerns.values())


def _generated_files(out_dir: Path) -> list[Path]:
    if not out_dir.is_dir():
        return []
    files = sorted((out_dir / "contracts").glob("*.json"))
    files += sorted((out_dir / "device").glob("*.pkg.json"))
    return files


def loc_report(root: Path | str, out_dir: Path | None = None) -> LocReport:
    layout = discover_layout(root)
    out = Path(out_dir) if out_dir is not None else layout.out_dir
    concerns = {c: count_loc(layout.concern_files(c), c) for c in CONCERNS}
    generated = _generated_files(out)
    lines = sum(
        len(f.read_text(encoding="utf-8").splitlines()) for f in generated
    )
    size = sum(f.stat().st_size for f in generated)
    return LocReport(
        concerns=concerns,
        generated_lines=lines,
        generated_bytes=size,
        generated_files=len(generated),
    )


# ---------------------------------------------------------------------------
# Reuse


@dataclass
class ReuseReport:
    base: str
    variant: str
    changed: dict[str, int]

    def reused(self, concern: str) -> bool:
        return self.changed[concern] == 0


def _concern_lines(layout: ProjectLayout, concern: str) -> list[str]:
    lines: list[str] = []
    for f in layout.concern_files(concern):
        lines.extend(stripped_lines(f))
    return lines


def reuse_report(base: Path | str, variant: Path | str) -> ReuseReport:
    """Per-concern changed-line counts between two project directories."""
    base_layout = discover_layout(base)
    variant_layout = discover_layout(variant)
    changed = {}
    for concern in CONCERNS:
        a = _concern_lines(base_layout, concern)
        b = _concern_lines(variant_layout, concern)
        delta = 0
        for op, i1, i2, j1, j2 in difflib.SequenceMatcher(
            a=a, b=b, autojunk=False
        ).get_opcodes():
            if op != "equal":
                delta += (i2 - i1) + (j2 - j1)
        changed[concern] = delta
    return ReuseReport(base=Path(base).name, variant=Path(variant).name, changed=changed)


# ---------------------------------------------------------------------------
# Scaling


@dataclass
class ScalingSeries:
    rows: list[tuple[int, LocReport]] = field(default_factory=list)


class SynthesisError(Exception):
    pass


def synthesize_deployment(template: DeploymentSpec, device_count: int) -> DeploymentSpec:
    """Scale a deployment by replicating its first scope block.

    The devices sharing the template's first region value form the unit
    block; the result repeats that block with fresh names and consecutive
    region values until ``device_count`` devices exist.
    """
    if not template.devices:
        raise SynthesisError("template deployment has no devices")
    region = template.devices[0].region_coords[0][0]
    first_value = template.devices[0].coords()[region]
    block = [d for d in template.devices if d.coords().get(region) == first_value]
    if device_count % len(block) != 0:
        raise SynthesisError(
            f"cannot synthesize {device_count} devices from a block of {len(block)}"
        )
    sectors = device_count // len(block)
    devices = []
    for s in range(1, sectors + 1):
        for i, d in enumerate(block):
            coords = tuple(
                (r, s if r == region else v) for r, v in d.region_coords
            )
            devices.append(
                DeviceDecl(
                    name=f"{region.lower()}{s}_unit{i + 1}",
                    region_coords=coords,
                    resources=d.resources,
                    platform=d.platform,
                )
            )
    return DeploymentSpec(
        name=f"{template.name}_n{device_count}",
        vocabulary_name=template.vocabulary_name,
        devices=tuple(devices),
    )


def synthesize_project(template_root: Path | str, device_count: int, dest: Path) -> Path:
    """Materialize a scaled copy of a project with a synthesized deployment."""
    layout = discover_layout(template_root)
    parsed = parse_deployment(
        layout.deploy_file.read_text(encoding="utf-8"), str(layout.deploy_file)
    )
    if isinstance(parsed, list):
        raise SynthesisError(f"template deployment does not parse: {parsed[0].render()}")
    scaled = synthesize_deployment(parsed, device_count)
    dest.mkdir(parents=True, exist_ok=True)
    (dest / "spec").mkdir(exist_ok=True)
    (dest / "spec" / "app.vocab").write_text(
        layout.vocab_file.read_text(encoding="utf-8"), encoding="utf-8"
    )
    (dest / "spec" / "app.arch").write_text(
        layout.arch_file.read_text(encoding="utf-8"), encoding="utf-8"
    )
    (dest / "spec" / "app.deploy").write_text(print_deployment(scaled), encoding="utf-8")
    for concern in ("logic", "driver"):
        for f in layout.concern_files(concern):
            target_dir = dest / f.parent.name
            target_dir.mkdir(exist_ok=True)
            (target_dir / f.name).write_text(f.read_text(encoding="utf-8"), encoding="utf-8")
    toml = layout.root / "iotforge.toml"
    if toml.is_file():
        (dest / "iotforge.toml").write_text(toml.read_text(encoding="utf-8"), encoding="utf-8")
    return dest


def scaling_series(
    template_root: Path | str, device_counts: list[int], workdir: Path
) -> ScalingSeries:
    """Per-size LOC reports over synthesized deployments of the template."""
    series = ScalingSeries()
    for n in device_counts:
        dest = synthesize_project(template_root, n, Path(workdir) / f"n{n}")
        series.rows.append((n, loc_report(dest)))
    return series


# ---------------------------------------------------------------------------
# Generation ratio


def generation_ratio(root: Path | str, out_dir: Path | None = None) -> float:
    """Generated artifact lines over generated plus handwritten lines."""
    report = loc_report(root, out_dir)
    total = report.generated_lines + report.handwritten
    if total == 0:
        return 0.0
    return report.generated_lines / total


# ---------------------------------------------------------------------------
# Expressiveness


def expressiveness_matrix(app_dirs: list[Path]) -> list[dict]:
    rows = []
    for root in app_dirs:
        config = load_app_config(Path(root)).get("app", {})
        layout = discover_layout(root)
        resolved = load_specs(layout)
        services = resolved.architecture.services
        modes = []
        if any(c.periodic for s in services for c in s.consumes):
            modes.append("periodic")
        if any(not c.periodic for s in services for c in s.consumes):
            modes.append("event-driven")
        if any(s.requests for s in services):
            modes.append("request-response")
        if any(s.commands for s in services):
            modes.append("command")
        components = []
        if any(
            resolved.data_index[c.data_name].kind == "sensor"
            for s in services
            for c in s.consumes
            if c.data_name in resolved.data_index
        ):
            components.append("sensor")
        if services:
            components.append("computation")
        if any(s.requests for s in services):
            components.append("storage")
        if any(s.commands for s in services):
            components.append("actuator")
        rows.append(
            {
                "app": config.get("name", Path(root).name),
                "behaviors": config.get("behavior", ""),
                "components": components,
                "modes": modes,
                "topology": "static",
                "networkSize": len(resolved.deployment.devices),
            }
        )
    return rows


# ---------------------------------------------------------------------------
# Report emission


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def loc_csv(reports: dict[str, LocReport]) -> str:
    rows = []
    for app, report in reports.items():
        for concern in CONCERNS:
            rows.append([concern, app, report.concerns[concern]])
        rows.append(["generated", app, report.generated_lines])
    return _csv_text(["concern", "app", "loc"], rows)


def reuse_csv(reports: list[ReuseReport]) -> str:
    rows = [
        [r.base, r.variant, concern, r.changed[concern]]
        for r in reports
        for concern in CONCERNS
    ]
    return _csv_text(["base", "variant", "concern", "changed"], rows)


def scaling_csv(series: ScalingSeries) -> str:
    rows = [
        [n] + [report.concerns[c] for c in CONCERNS]
        for n, report in series.rows
    ]
    return _csv_text(["devices", *CONCERNS], rows)


def sizes_csv(app_sizes: dict[str, list[tuple[str, int]]]) -> str:
    rows = [
        [app, device, size]
        for app, sizes in app_sizes.items()
        for device, size in sizes
    ]
    return _csv_text(["app", "device", "bytes"], rows)


def package_sizes(out_dir: Path) -> list[tuple[str, int]]:
    out = []
    for f in sorted((Path(out_dir) / "device").glob("*.pkg.json")):
        out.append((f.name[: -len(".pkg.json")], f.stat().st_size))
    return out


def expressiveness_markdown(rows: list[dict]) -> str:
    header = "| Application | Behaviors | Components | Interaction modes | Topology | Network size |"
    sep = "| --- | --- | --- | --- | --- | --- |"
    lines = [header, sep]
    for r in rows:
        lines.append(
            "| {app} | {behaviors} | {components} | {modes} | {topology} | {size} |".format(
                app=r["app"],
                behaviors=r["behaviors"],
                components=", ".join(r["components"]),
                modes=", ".join(r["modes"]),
                topology=r["topology"],
                size=r["networkSize"],
            )
        )
    return "\n".join(lines) + "\n"


def svg_bar_chart(title: str, labels: list[str], series: dict[str, list[float]]) -> str:
    """Small static grouped bar chart; values are drawn to scale, no axes math."""
    width, height, margin = 640, 360, 48
    plot_w, plot_h = width - 2 * margin, height - 2 * margin
    peak = max((v for vs in series.values() for v in vs), default=1.0) or 1.0
    groups = max(len(labels), 1)
    group_w = plot_w / groups
    bar_w = group_w / (len(series) + 1) if series else group_w
    palette = ["#4878d0", "#ee854a", "#6acc64", "#d65f5f", "#956cb4"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{width / 2}" y="24" text-anchor="middle" font-size="16">{title}</text>',
    ]
    for g, label in enumerate(labels):
        for s, (name, values) in enumerate(series.items()):
            v = values[g]
            h = plot_h * v / peak
            x = margin + g * group_w + s * bar_w
            y = height - margin - h
            color = palette[s % len(palette)]
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w * 0.9:.1f}" '
                f'height="{h:.1f}" fill="{color}"><title>{name}={v}</title></rect>'
            )
        parts.append(
            f'<text x="{margin + (g + 0.5) * group_w:.1f}" y="{height - margin + 16}" '
            f'text-anchor="middle" font-size="11">{label}</text>'
        )
    legend_y = 40
    for s, name in enumerate(series):
        color = palette[s % len(palette)]
        parts.append(
            f'<rect x="{width - margin - 130}" y="{legend_y + s * 18 - 10}" width="12" height="12" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{width - margin - 112}" y="{legend_y + s * 18}" font-size="11">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
