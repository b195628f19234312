"""Project layout, configuration, and the compile/simulate pipeline.

A project directory holds one authored file set per concern:

    spec/app.vocab, spec/app.arch, spec/app.deploy
    logic/*.py      extern handler manifests (HANDLERS = {key: fn})
    drivers/*.py    resource adapter manifests (DRIVERS = {resource: feed})
    traces/*.trace  line-delimited JSON sensor feeds
    iotforge.toml   app metadata and default run settings
    out/            fully regenerable build output

Configuration precedence: CLI flags > IOTFORGE_* environment > iotforge.toml.
"""

from __future__ import annotations

import importlib.resources
import importlib.util
import json
import os
import shutil
import sys
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .diagnostics import Diagnostic
from .linker import (
    DevicePackage,
    canonical_json,
    contract_to_jsonable,
    driver_to_jsonable,
    generate_architecture_framework,
    generate_vocabulary_framework,
    link,
    linkset_to_jsonable,
    package_from_jsonable,
    package_to_jsonable,
)
from .mapper import Mapping, map_random, mapping_from_jsonable, mapping_to_jsonable
from .parser import parse_architecture, parse_deployment, parse_vocabulary
from .resolver import ResolvedApp, resolve, resolved_to_jsonable
from .runtime import HandlerRegistry, SimResult, TraceEntry, parse_trace, run

DEFAULT_SEED = 42
DEFAULT_HORIZON_MS = 60_000
DEFAULT_LATENCY_MS = 5


class LayoutError(Exception):
    pass


class CompileFailure(Exception):
    """Compilation stopped on diagnostics."""

    def __init__(self, diags: list[Diagnostic]):
        super().__init__(f"{len(diags)} diagnostic(s)")
        self.diagnostics = diags


@dataclass(frozen=True)
class ProjectLayout:
    root: Path
    vocab_file: Path
    arch_file: Path
    deploy_file: Path

    @property
    def logic_dir(self) -> Path:
        return self.root / "logic"

    @property
    def drivers_dir(self) -> Path:
        return self.root / "drivers"

    @property
    def traces_dir(self) -> Path:
        return self.root / "traces"

    @property
    def out_dir(self) -> Path:
        return self.root / "out"

    def concern_files(self, concern: str) -> list[Path]:
        if concern == "vocabulary":
            return [self.vocab_file]
        if concern == "architecture":
            return [self.arch_file]
        if concern == "deployment":
            return [self.deploy_file]
        if concern == "logic":
            return sorted(self.logic_dir.glob("*.py")) if self.logic_dir.is_dir() else []
        if concern == "driver":
            return sorted(self.drivers_dir.glob("*.py")) if self.drivers_dir.is_dir() else []
        raise ValueError(f"unknown concern '{concern}'")


CONCERNS = ("vocabulary", "architecture", "deployment", "logic", "driver")


def discover_layout(root: Path | str) -> ProjectLayout:
    root = Path(root)
    spec_dir = root / "spec"
    if not spec_dir.is_dir():
        raise LayoutError(f"{root}: no spec/ directory")
    files = {}
    for ext in ("vocab", "arch", "deploy"):
        found = sorted(spec_dir.glob(f"*.{ext}"))
        if len(found) != 1:
            raise LayoutError(
                f"{root}: expected exactly one spec/*.{ext}, found {len(found)}"
            )
        files[ext] = found[0]
    return ProjectLayout(root, files["vocab"], files["arch"], files["deploy"])


def load_app_config(root: Path) -> dict:
    path = Path(root) / "iotforge.toml"
    if not path.is_file():
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def resolve_settings(root: Path, flags: dict, environ: dict | None = None) -> dict:
    """Merge flags > IOTFORGE_* env > iotforge.toml [defaults] > built-ins."""
    env = os.environ if environ is None else environ
    toml_defaults = load_app_config(root).get("defaults", {})
    settings = {}
    spec = {
        "seed": ("IOTFORGE_SEED", int, DEFAULT_SEED),
        "horizon_ms": ("IOTFORGE_HORIZON_MS", int, DEFAULT_HORIZON_MS),
        "latency_ms": ("IOTFORGE_LATENCY_MS", int, DEFAULT_LATENCY_MS),
        "trace": ("IOTFORGE_TRACE", str, None),
        "out": ("IOTFORGE_OUT", str, None),
    }
    for key, (env_name, cast, default) in spec.items():
        if flags.get(key) is not None:
            settings[key] = flags[key]
        elif env_name in env:
            settings[key] = cast(env[env_name])
        elif key in toml_defaults:
            settings[key] = toml_defaults[key]
        else:
            settings[key] = default
    return settings


def load_specs(layout: ProjectLayout) -> ResolvedApp:
    """Parse and resolve the three concern files; raises CompileFailure."""
    diags: list[Diagnostic] = []
    vocab = parse_vocabulary(layout.vocab_file.read_text(encoding="utf-8"), str(layout.vocab_file))
    if isinstance(vocab, list):
        diags.extend(vocab)
    arch = parse_architecture(layout.arch_file.read_text(encoding="utf-8"), str(layout.arch_file))
    if isinstance(arch, list):
        diags.extend(arch)
    deploy = parse_deployment(
        layout.deploy_file.read_text(encoding="utf-8"), str(layout.deploy_file)
    )
    if isinstance(deploy, list):
        diags.extend(deploy)
    if diags:
        raise CompileFailure(diags)
    resolved = resolve(vocab, arch, deploy)
    if isinstance(resolved, list):
        raise CompileFailure(resolved)
    return resolved


@dataclass
class BuildResult:
    resolved: ResolvedApp
    mapping: Mapping
    packages: list[DevicePackage]
    out_dir: Path


def compile_project(root: Path | str, seed: int, out_dir: Path | None = None) -> BuildResult:
    """Run resolve, frameworks, mapping and linking; write out/ artifacts."""
    layout = discover_layout(root)
    resolved = load_specs(layout)
    mapping = map_random(resolved, seed)
    packages = link(resolved, mapping)
    out = Path(out_dir) if out_dir is not None else layout.out_dir
    write_build(out, resolved, mapping, packages)
    return BuildResult(resolved, mapping, packages, out)


def write_build(
    out: Path, resolved: ResolvedApp, mapping: Mapping, packages: list[DevicePackage]
) -> None:
    # Regenerate from scratch so stale packages never survive a re-link.
    shutil.rmtree(out / "device", ignore_errors=True)
    shutil.rmtree(out / "contracts", ignore_errors=True)
    (out / "device").mkdir(parents=True, exist_ok=True)
    (out / "contracts").mkdir(parents=True, exist_ok=True)
    _write(out / "resolved.json", canonical_json(resolved_to_jsonable(resolved)))
    _write(out / "mapping.json", canonical_json(mapping_to_jsonable(mapping)))
    arch_contracts = [
        contract_to_jsonable(c) for c in generate_architecture_framework(resolved)
    ]
    vocab_contracts = [
        driver_to_jsonable(c) for c in generate_vocabulary_framework(resolved.vocabulary)
    ]
    _write(out / "contracts" / "architecture.json", canonical_json(arch_contracts))
    _write(out / "contracts" / "vocabulary.json", canonical_json(vocab_contracts))
    for p in packages:
        _write(out / "device" / f"{p.device_name}.pkg.json", canonical_json(package_to_jsonable(p)))
    _write(out / "linkset.json", canonical_json(linkset_to_jsonable(resolved, packages)))


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def load_linkset(out: Path) -> tuple[list[DevicePackage], list[dict], dict]:
    """Load packages, topic table, and record table back from out/."""
    index_path = out / "linkset.json"
    if not index_path.is_file():
        raise FileNotFoundError(f"{index_path}: run compile first")
    index = json.loads(index_path.read_text(encoding="utf-8"))
    packages = []
    for entry in index["packages"]:
        doc = json.loads((out / entry["file"]).read_text(encoding="utf-8"))
        packages.append(package_from_jsonable(doc))
    records = {
        name: [(f["field"], f["type"]) for f in fields]
        for name, fields in index["records"].items()
    }
    return packages, index["topics"], records


def load_mapping(out: Path, resolved: ResolvedApp) -> Mapping:
    doc = json.loads((out / "mapping.json").read_text(encoding="utf-8"))
    return mapping_from_jsonable(doc, resolved)


def _load_module_attr(path: Path, attr: str) -> dict:
    name = f"_iotforge_dyn_{abs(hash(str(path)))}"
    spec = importlib.util.spec_from_file_location(name, path)
    module = importlib.util.module_from_spec(spec)
    sys.modules[name] = module
    try:
        spec.loader.exec_module(module)
        return getattr(module, attr, {})
    finally:
        sys.modules.pop(name, None)


def load_registry(layout: ProjectLayout) -> HandlerRegistry:
    """Collect extern handlers from logic/ and driver feeds from drivers/."""
    registry = HandlerRegistry()
    for path in layout.concern_files("logic"):
        for key, fn in _load_module_attr(path, "HANDLERS").items():
            registry.register(key, fn)
    for path in layout.concern_files("driver"):
        for resource, feed in _load_module_attr(path, "DRIVERS").items():
            registry.register_driver(resource, feed)
    return registry


def simulate_project(
    root: Path | str,
    trace: Path | str | None,
    horizon_ms: int,
    seed: int,
    latency_ms: int,
    out_dir: Path | None = None,
) -> SimResult:
    """Execute a compiled project's link set; writes out/actuation.log."""
    layout = discover_layout(root)
    out = Path(out_dir) if out_dir is not None else layout.out_dir
    packages, topics, records = load_linkset(out)
    registry = load_registry(layout)
    entries: list[TraceEntry] = []
    if trace is not None:
        trace_path = Path(trace)
        if not trace_path.is_absolute():
            trace_path = layout.root / trace_path
        entries = parse_trace(trace_path.read_text(encoding="utf-8"))
    result = run(
        packages,
        topics,
        records,
        entries,
        registry,
        horizon_ms,
        seed=seed,
        latency_ms=latency_ms,
    )
    _write(out / "actuation.log", result.actuation_log())
    return result


def corpus_dir() -> Path:
    return Path(importlib.resources.files("iotforge") / "corpus")


def corpus_apps() -> list[Path]:
    return sorted(p for p in corpus_dir().iterdir() if p.is_dir())
