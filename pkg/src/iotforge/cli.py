"""Command-line pipeline: compile, map, link, simulate, metrics, corpus.

Exit codes: 0 ok, 1 diagnostics, 2 I/O failure, 3 runtime error, 64 usage.
"""

from __future__ import annotations

import argparse
import shutil
import sys
from pathlib import Path

from . import metrics as metrics_mod
from .diagnostics import format_diagnostics
from .linker import LinkError, link
from .mapper import PlacementError, map_random, validate_mapping
from .project import (
    CompileFailure,
    LayoutError,
    compile_project,
    corpus_apps,
    discover_layout,
    load_app_config,
    load_linkset,
    load_mapping,
    load_specs,
    resolve_settings,
    simulate_project,
    write_build,
)
from .runtime import SimulationError

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_IO = 2
EXIT_RUNTIME = 3
EXIT_USAGE = 64


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="iotforge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    def add_common(p):
        p.add_argument("project", type=Path, help="project directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=Path, default=None, help="output root override")

    p_compile = sub.add_parser("compile", help="parse, resolve, map, and link a project")
    add_common(p_compile)

    p_map = sub.add_parser("map", help="re-map with a new seed and re-link")
    add_common(p_map)

    p_link = sub.add_parser("link", help="re-link using the existing mapping.json")
    add_common(p_link)

    p_sim = sub.add_parser("simulate", help="execute the compiled link set")
    add_common(p_sim)
    p_sim.add_argument("--trace", type=Path, default=None)
    p_sim.add_argument("--horizon", type=int, default=None, metavar="MS")
    p_sim.add_argument("--latency", type=int, default=None, metavar="MS")

    p_metrics = sub.add_parser("metrics", help="emit evaluation reports")
    p_metrics.add_argument(
        "--kind",
        required=True,
        choices=["loc", "reuse", "scaling", "expressiveness", "sizes"],
    )
    p_metrics.add_argument("projects", nargs="+", type=Path)
    p_metrics.add_argument("--out", type=Path, default=None, help="report directory")
    p_metrics.add_argument(
        "--counts", default="6,12,24,48,96", help="device counts for --kind scaling"
    )
    p_metrics.add_argument("--plot", type=Path, default=None, help="also write an SVG chart")

    p_corpus = sub.add_parser("corpus", help="build and run every bundled example app")
    p_corpus.add_argument("--out", type=Path, default=Path("iotforge-corpus"))
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _dispatch(args)
    except CompileFailure as e:
        sys.stderr.write(format_diagnostics(e.diagnostics))
        return EXIT_DIAGNOSTICS
    except (PlacementError, LinkError) as e:
        print(f"iotforge: {e}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    except LayoutError as e:
        print(f"iotforge: {e}", file=sys.stderr)
        return EXIT_IO
    except FileNotFoundError as e:
        if args.command == "simulate" and "linkset" in str(e):
            print(f"iotforge: {e}", file=sys.stderr)
            return EXIT_DIAGNOSTICS
        print(f"iotforge: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"iotforge: {e}", file=sys.stderr)
        return EXIT_IO
    except SimulationError as e:
        print(f"iotforge: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def _dispatch(args) -> int:
    if args.command == "compile":
        return _cmd_compile(args)
    if args.command == "map":
        return _cmd_map(args, remap=True)
    if args.command == "link":
        return _cmd_map(args, remap=False)
    if args.command == "simulate":
        return _cmd_simulate(args)
    if args.command == "metrics":
        return _cmd_metrics(args)
    if args.command == "corpus":
        return _cmd_corpus(args)
    raise AssertionError(args.command)


def _settings(args, extra: dict | None = None) -> dict:
    flags = {"seed": getattr(args, "seed", None), "out": getattr(args, "out", None)}
    if extra:
        flags.update(extra)
    return resolve_settings(args.project, flags)


def _cmd_compile(args) -> int:
    settings = _settings(args)
    out = Path(settings["out"]) if settings["out"] else None
    result = compile_project(args.project, seed=settings["seed"], out_dir=out)
    for w in result.resolved.warnings:
        print(w.render(), file=sys.stderr)
    print(
        f"compiled {args.project}: {len(result.resolved.service_instances)} instance(s), "
        f"{len(result.packages)} package(s), seed {settings['seed']} -> {result.out_dir}"
    )
    return EXIT_OK


def _cmd_map(args, remap: bool) -> int:
    settings = _settings(args)
    layout = discover_layout(args.project)
    out = Path(settings["out"]) if settings["out"] else layout.out_dir
    resolved = load_specs(layout)
    if remap:
        mapping = map_random(resolved, settings["seed"])
    else:
        mapping = load_mapping(out, resolved)
        violations = validate_mapping(mapping, resolved)
        if violations:
            for v in violations:
                print(f"iotforge: invalid mapping: {v.instance.key}: {v.reason}", file=sys.stderr)
            return EXIT_DIAGNOSTICS
    packages = link(resolved, mapping)
    write_build(out, resolved, mapping, packages)
    verb = "mapped" if remap else "linked"
    print(f"{verb} {args.project}: {len(packages)} package(s) -> {out}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    settings = _settings(
        args,
        {
            "trace": str(args.trace) if args.trace else None,
            "horizon_ms": args.horizon,
            "latency_ms": args.latency,
        },
    )
    out = Path(settings["out"]) if settings["out"] else None
    result = simulate_project(
        args.project,
        trace=settings["trace"],
        horizon_ms=settings["horizon_ms"],
        seed=settings["seed"],
        latency_ms=settings["latency_ms"],
        out_dir=out,
    )
    log_dir = out if out else discover_layout(args.project).out_dir
    print(
        f"simulated {args.project}: {len(result.actuations)} actuation(s), "
        f"{result.events_processed} event(s) -> {log_dir / 'actuation.log'}"
    )
    return EXIT_OK


def _cmd_metrics(args) -> int:
    first_layout = discover_layout(args.projects[0])
    report_dir = args.out if args.out else first_layout.out_dir / "reports"
    report_dir.mkdir(parents=True, exist_ok=True)

    if args.kind == "loc":
        reports = {p.name: metrics_mod.loc_report(p) for p in args.projects}
        _write_report(report_dir / "report.csv", metrics_mod.loc_csv(reports))
    elif args.kind == "reuse":
        if len(args.projects) < 2:
            print("iotforge: --kind reuse needs a base and at least one variant", file=sys.stderr)
            return EXIT_USAGE
        base = args.projects[0]
        reports = [metrics_mod.reuse_report(base, v) for v in args.projects[1:]]
        _write_report(report_dir / "reuse.csv", metrics_mod.reuse_csv(reports))
    elif args.kind == "scaling":
        counts = [int(x) for x in args.counts.split(",") if x]
        workdir = report_dir / "scaling-work"
        series = metrics_mod.scaling_series(args.projects[0], counts, workdir)
        _write_report(report_dir / "scaling.csv", metrics_mod.scaling_csv(series))
        if args.plot:
            chart = metrics_mod.svg_bar_chart(
                "Handwritten lines of code by deployment size",
                [str(n) for n, _r in series.rows],
                {
                    concern: [r.concerns[concern] for _n, r in series.rows]
                    for concern in metrics_mod.CONCERNS
                },
            )
            _write_report(args.plot, chart)
        shutil.rmtree(workdir, ignore_errors=True)
    elif args.kind == "expressiveness":
        rows = metrics_mod.expressiveness_matrix(args.projects)
        _write_report(report_dir / "expressiveness.md", metrics_mod.expressiveness_markdown(rows))
    elif args.kind == "sizes":
        sizes = {}
        for p in args.projects:
            out = discover_layout(p).out_dir
            if not (out / "linkset.json").is_file():
                print(f"iotforge: {p} is not compiled; run compile first", file=sys.stderr)
                return EXIT_DIAGNOSTICS
            sizes[p.name] = metrics_mod.package_sizes(out)
        _write_report(report_dir / "sizes.csv", metrics_mod.sizes_csv(sizes))
    print(f"metrics ({args.kind}) -> {report_dir}")
    return EXIT_OK


def _write_report(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _cmd_corpus(args) -> int:
    workdir = args.out
    workdir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for app in corpus_apps():
        dest = workdir / app.name
        if dest.exists():
            shutil.rmtree(dest)
        shutil.copytree(app, dest)
        config = load_app_config(dest)
        defaults = config.get("defaults", {})
        try:
            built = compile_project(dest, seed=defaults.get("seed", 42))
            result = simulate_project(
                dest,
                trace=defaults.get("trace"),
                horizon_ms=defaults.get("horizon_ms", 60_000),
                seed=defaults.get("seed", 42),
                latency_ms=defaults.get("latency_ms", 5),
            )
        except (CompileFailure, PlacementError, LinkError, SimulationError) as e:
            print(f"[fail] {app.name}: {e}")
            failures += 1
            continue
        print(
            f"[ok]   {app.name}: {len(built.packages)} device(s), "
            f"{len(built.resolved.service_instances)} instance(s), "
            f"{len(result.actuations)} actuation(s)"
        )
    return EXIT_OK if failures == 0 else EXIT_DIAGNOSTICS


if __name__ == "__main__":
    raise SystemExit(main())
