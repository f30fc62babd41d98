"""Command line entry points.

    sgml compile <dir> [--out DIR] [--tick-ms N]
    sgml validate <dir>
    sgml run <dir> [--realtime|--headless] [--ticks N] [--scenario F]
                   [--attack F] [--out DIR]
    sgml serve <dir> [--port P] [--realtime] [--ticks N] [--attack F]
    sgml genfixture {epic,multisub} <outdir>

`compile` consolidates the model files and writes the consolidated SSD/SCD
plus a machine-readable build report; `run` accepts either a raw input
directory or a compiled one. Diagnostics go to stderr as
`file:line:col: severity: message`.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from pathlib import Path

from sgml.attack import AttackScript, AttackScriptError
from sgml.build import BuildError, BuildResult, build_range_model, load_sources_from_dir
from sgml.fixtures import FIXTURE_KINDS, write_fixture
from sgml.kernel import Kernel
from sgml.parsing import FileKind, Severity, serialize, source_from_bytes

MANIFEST_NAME = "manifest.json"


def _print_diagnostics(diagnostics) -> None:
    for d in diagnostics:
        print(str(d), file=sys.stderr)


def _build_from_dir(directory: str, tick_ms: int = 100) -> BuildResult:
    sources = load_sources_from_dir(directory)
    if not sources:
        raise BuildError([], [])
    return build_range_model(sources, tick_ms=tick_ms)


def cmd_compile(args) -> int:
    try:
        result = _build_from_dir(args.input_dir, tick_ms=args.tick_ms)
    except BuildError as exc:
        _print_diagnostics(exc.diagnostics)
        for v in exc.violations:
            print(str(v), file=sys.stderr)
        return 1
    _print_diagnostics(result.diagnostics)
    for v in result.violations:
        print(str(v), file=sys.stderr)

    outdir = Path(args.out or (Path(args.input_dir) / "build"))
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "consolidated.ssd.xml").write_bytes(serialize(result.model.substation))
    (outdir / "consolidated.scd.xml").write_bytes(serialize(result.model.cyber))
    copied = []
    indir = Path(args.input_dir)
    for path in sorted(indir.rglob("*")):
        if not path.is_file() or outdir in path.parents:
            continue
        try:
            kind = source_from_bytes(path.read_bytes(), str(path)).kind
        except Exception:
            continue
        if kind in (FileKind.ICD, FileKind.IED_CONFIG, FileKind.SCADA_CONFIG,
                    FileKind.PS_EXTRA, FileKind.PLC_LOGIC):
            rel = path.relative_to(indir)
            target = outdir / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(path, target)
            copied.append(str(rel))
    manifest = {
        "format_version": 1,
        "consolidated_ssd": "consolidated.ssd.xml",
        "consolidated_scd": "consolidated.scd.xml",
        "supplementary": copied,
        "tick_ms": args.tick_ms,
    }
    (outdir / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2) + "\n")
    (outdir / "build_report.json").write_text(json.dumps(result.report, indent=2) + "\n")
    print(json.dumps(result.report, indent=2))
    return 0 if result.ok else 1


def cmd_validate(args) -> int:
    try:
        result = _build_from_dir(args.input_dir)
    except BuildError as exc:
        _print_diagnostics(exc.diagnostics)
        for v in exc.violations:
            print(str(v), file=sys.stderr)
        return 1
    _print_diagnostics(result.diagnostics)
    for v in result.violations:
        print(str(v), file=sys.stderr)
    print(f"{len(result.violations)} violation(s), "
          f"{sum(1 for d in result.diagnostics if d.severity == Severity.WARNING)} warning(s)")
    return 0 if result.ok else 1


def _load_model_dir(directory: str, tick_ms: int):
    """Accept a compiled dir (manifest present) or a raw input dir."""
    root = Path(directory)
    manifest_path = root / MANIFEST_NAME
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
        names = [manifest["consolidated_ssd"], manifest["consolidated_scd"]]
        names += manifest.get("supplementary", [])
        sources = [source_from_bytes((root / n).read_bytes(), str(root / n))
                   for n in names]
        return build_range_model(sources, tick_ms=manifest.get("tick_ms", tick_ms))
    return _build_from_dir(directory, tick_ms=tick_ms)


def cmd_run(args) -> int:
    try:
        result = _load_model_dir(args.model_dir, tick_ms=args.tick_ms)
    except BuildError as exc:
        _print_diagnostics(exc.diagnostics)
        return 1
    if not result.ok:
        _print_diagnostics(result.diagnostics)
        for v in result.violations:
            print(str(v), file=sys.stderr)
        return 1
    model = result.model

    if args.scenario:
        from sgml.model import ScenarioTimeline, TimelineEntry
        from sgml.parsing import parse_ps_extra, resolve_name
        src = source_from_bytes(Path(args.scenario).read_bytes(), args.scenario)
        timeline, _ = parse_ps_extra(src)
        ids = model.substation.element_ids()
        entries = []
        for e in timeline.entries:
            target = resolve_name(e.target, ids)
            if target is None:
                print(f"{args.scenario}: unknown scenario target {e.target!r}",
                      file=sys.stderr)
                return 1
            entries.append(TimelineEntry(e.tick, target, e.field, e.value))
        from dataclasses import replace
        model = replace(model, timeline=ScenarioTimeline(tuple(entries)))

    script = None
    if args.attack:
        try:
            script = AttackScript.load(args.attack)
        except (AttackScriptError, OSError, json.JSONDecodeError) as exc:
            print(f"{args.attack}: {exc}", file=sys.stderr)
            return 1

    kernel = Kernel(model, attack_script=script)
    kernel.run(ticks=args.ticks, realtime=args.realtime)

    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "events.jsonl").write_text(kernel.events.export())
        (outdir / "frames.jsonl").write_text(kernel.net.export_frame_log())
        (outdir / "ticks.jsonl").write_text(kernel.export_tick_reports())
        (outdir / "final_snapshot.json").write_text(
            json.dumps(kernel.export_snapshot(), indent=2, default=str) + "\n")
    reports = kernel.tick_reports
    if reports:
        durations = sorted(r.duration_ms for r in reports)
        mean = sum(durations) / len(durations)
        p95 = durations[min(len(durations) - 1, int(0.95 * len(durations)))]
        print(json.dumps({
            "ticks": len(reports),
            "mean_tick_ms": round(mean, 3),
            "p95_tick_ms": round(p95, 3),
            "events": kernel.events.count(),
            "frames": len(kernel.net.frame_log),
            "converged_final": kernel.grid.converged if kernel.grid else None,
        }))
    else:
        print(json.dumps({"ticks": 0, "events": 0, "frames": 0}))
    return 0


def cmd_serve(args) -> int:
    import threading

    import uvicorn

    from sgml.service import create_app

    try:
        result = _load_model_dir(args.model_dir, tick_ms=args.tick_ms)
    except BuildError as exc:
        _print_diagnostics(exc.diagnostics)
        return 1
    if not result.ok:
        for v in result.violations:
            print(str(v), file=sys.stderr)
        return 1
    script = AttackScript.load(args.attack) if args.attack else None
    kernel = Kernel(result.model, attack_script=script)
    ticks = args.ticks if args.ticks else 10 ** 9
    worker = threading.Thread(target=kernel.run,
                              kwargs={"ticks": ticks, "realtime": not args.headless},
                              daemon=True)
    worker.start()
    app = create_app(kernel)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    kernel.stop()
    return 0


def cmd_genfixture(args) -> int:
    written = write_fixture(args.kind, args.outdir)
    print(f"wrote {len(written)} files under {args.outdir}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sgml",
                                     description="Compile and run smart-grid cyber ranges")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="consolidate model files and write a build report")
    p.add_argument("input_dir")
    p.add_argument("--out", default=None)
    p.add_argument("--tick-ms", type=int, default=100)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("validate", help="parse and validate without writing artifacts")
    p.add_argument("input_dir")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run the kernel headless or realtime")
    p.add_argument("model_dir")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--realtime", action="store_true")
    mode.add_argument("--headless", dest="realtime", action="store_false")
    p.set_defaults(realtime=False)
    p.add_argument("--ticks", type=int, default=600)
    p.add_argument("--scenario", default=None)
    p.add_argument("--attack", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--tick-ms", type=int, default=100)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("serve", help="run the kernel with the HTTP API (realtime paced)")
    p.add_argument("model_dir")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--headless", action="store_true",
                   help="run unpaced (testing only)")
    p.add_argument("--ticks", type=int, default=0)
    p.add_argument("--attack", default=None)
    p.add_argument("--tick-ms", type=int, default=100)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("genfixture", help="write a synthetic model file set")
    p.add_argument("kind", choices=FIXTURE_KINDS)
    p.add_argument("outdir")
    p.set_defaults(func=cmd_genfixture)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
