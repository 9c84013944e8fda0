"""leakward command line.

Subcommands: check, infer, transform, fix, run, explain-escape, pipeline.
Pipeline exit codes: 0 = all materialized patches validated, 2 = unfixable
warnings remain, 3 = validation failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

from . import cfg as C
from .checker import check_program, filter_constructor_first_writes
from .errors import MaterializationFailure, StaleWarning
from .escape import EscapeAnalyzer
from .inference import infer_specs
from .interp import run as interp_run
from .libspec import LibrarySpec, load_library_spec
from .parser import parse
from .pipeline import PipelineConfig, run_pipeline
from .printer import pretty_print
from .repair import Unfixable, apply_plan_in_place, plan_fix, rebind_warning, unified_diff_text
from .specs import SpecSet
from .transforms import EditLog, field_to_local, finalize_fields, inject_finalizers


def _load_libspec(path: str) -> LibrarySpec:
    return load_library_spec(Path(path).read_text())


def _load_specs(path: str | None, program=None) -> SpecSet:
    if path is None:
        return SpecSet.from_declared(program) if program is not None else SpecSet()
    return SpecSet.from_json(json.loads(Path(path).read_text()))


def _parse_file(path: str):
    p = Path(path)
    return parse(p.read_text(), p.name)


def cmd_check(args: argparse.Namespace) -> int:
    libspec = _load_libspec(args.libspec)
    all_warnings = []
    for f in args.files:
        program = _parse_file(f)
        specs = _load_specs(args.specs, program)
        warnings = filter_constructor_first_writes(check_program(program, specs, libspec), program)
        all_warnings.extend(warnings)
        if args.dump_cfg:
            outdir = Path(args.dump_cfg)
            outdir.mkdir(parents=True, exist_ok=True)
            for cls in program.classes:
                for meth in cls.all_methods():
                    g = C.lower(program, cls, meth, libspec)
                    name = g.method_name.replace("<init>#", "init")
                    (outdir / f"{program.source_name}.{cls.name}.{name}.dot").write_text(g.to_dot())
    if args.json:
        print(json.dumps([w.to_json() for w in all_warnings], indent=2))
    else:
        for w in all_warnings:
            print(f"{w.file}:{w.line}: [{w.kind}] {w.message} (id {w.id})")
        print(f"{len(all_warnings)} warning(s)")
    return 1 if all_warnings else 0


def cmd_infer(args: argparse.Namespace) -> int:
    libspec = _load_libspec(args.libspec)
    merged = SpecSet()
    for f in args.files:
        program = _parse_file(f)
        specs = infer_specs(program, libspec)
        merged.class_mustcall.update(specs.class_mustcall)
        merged.field_ownership.update(specs.field_ownership)
        merged.field_provenance.update(specs.field_provenance)
        merged.method_ensures.update(specs.method_ensures)
    Path(args.output).write_text(merged.to_json_text())
    print(f"wrote {args.output}")
    return 0


def cmd_transform(args: argparse.Namespace) -> int:
    libspec = _load_libspec(args.libspec)
    warnings_data = json.loads(Path(args.warnings).read_text()) if args.warnings else []
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    for f in args.files:
        program = _parse_file(f)
        specs = infer_specs(program, libspec)
        bound = []
        for wd in warnings_data:
            if wd["file"] != program.source_name:
                continue
            try:
                bound.append(rebind_warning(wd, program))
            except StaleWarning:
                pass
        log = EditLog()
        out, l1 = finalize_fields(program, libspec)
        log.extend(l1)
        out, l2 = field_to_local(out, libspec)
        log.extend(l2)
        out, l3 = inject_finalizers(out, bound, specs, libspec)
        log.extend(l3)
        (outdir / program.source_name).write_text(pretty_print(out))
        (outdir / f"{program.source_name}.editlog.json").write_text(json.dumps(log.to_json(), indent=2) + "\n")
        print(f"transformed {program.source_name}: {len(log.entries)} edit(s)")
    return 0


def cmd_fix(args: argparse.Namespace) -> int:
    libspec = _load_libspec(args.libspec)
    warnings_data = json.loads(Path(args.warnings).read_text())
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    fixreport = []
    for f in args.files:
        program = _parse_file(f)
        specs = _load_specs(args.specs, program)
        patched = copy.deepcopy(program)
        applied = 0
        for wd in sorted((w for w in warnings_data if w["file"] == program.source_name), key=lambda w: (w["line"], w["id"])):
            try:
                w = rebind_warning(wd, patched)
            except StaleWarning:
                fixreport.append({"warningId": wd["id"], "unfixableReason": "NoIrMatch", "detail": "stale"})
                continue
            er = None
            if w.kind == "UnsatisfiedObligation":
                from .pipeline import _escape_for

                er = _escape_for(w, patched, specs, libspec, PipelineConfig())
            plan = plan_fix(w, patched, specs, er, libspec)
            if isinstance(plan, Unfixable):
                fixreport.append(plan.to_json())
                continue
            try:
                apply_plan_in_place(patched, plan)
                fixreport.append(plan.to_json())
                applied += 1
            except MaterializationFailure as mf:
                fixreport.append({"warningId": w.id, "unfixableReason": f"MaterializationFailure({mf.reason})"})
        diff = unified_diff_text(pretty_print(program), pretty_print(patched), program.source_name)
        (outdir / f"{program.source_name}.patch").write_text(diff)
        print(f"{program.source_name}: {applied} repair(s) materialized")
    (outdir / "fixreport.json").write_text(json.dumps(fixreport, indent=2) + "\n")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    libspec = _load_libspec(args.libspec)
    program = _parse_file(args.file)
    report = interp_run(program, libspec, step_limit=args.step_limit)
    if args.trace:
        for line in report.stdout:
            print(line)
    payload = report.to_json()
    if not args.trace:
        payload.pop("stdout")
    print(json.dumps(payload, indent=2))
    return 0 if report.status == "Completed" else 1


def cmd_explain_escape(args: argparse.Namespace) -> int:
    libspec = _load_libspec(args.libspec)
    program = _parse_file(args.file)
    specs = _load_specs(args.specs, program)
    analyzer = EscapeAnalyzer(program, specs, libspec)
    for cls in program.classes:
        for meth in cls.all_methods():
            g = C.lower(program, cls, meth, libspec)
            for node, ins in enumerate(g.nodes):
                if isinstance(ins, C.Alloc) and ins.site == args.site:
                    result = analyzer.escapes_from(g, node)
                    print(f"site {args.site}: new {ins.class_name} in {cls.name}.{g.method_name}")
                    print(f"escapes: {result.escapes}")
                    for r in result.routes:
                        print(f"  route {r.kind}: {r.detail}")
                    for sink, kind in result.wrapper_sinks:
                        print(f"  wrapper sink {sink} ({kind})")
                    return 0
    print(f"site {args.site} not found", file=sys.stderr)
    return 1


def cmd_pipeline(args: argparse.Namespace) -> int:
    libspec = _load_libspec(args.libspec)
    indir = Path(args.directory)
    sources = [(p.name, p.read_text()) for p in sorted(indir.glob("*.mj"))]
    config = PipelineConfig(
        max_iterations=args.max_iterations,
        enable_transforms=not args.no_transforms,
        enable_fixer_enhancements=not args.no_enhancements,
        enable_overwrite_handling=not args.no_overwrite_handling,
    )
    report = run_pipeline(sources, libspec, config)
    outdir = Path(args.output)
    (outdir / "patched").mkdir(parents=True, exist_ok=True)
    (outdir / "patches").mkdir(parents=True, exist_ok=True)
    for name, fr in sorted(report.files.items()):
        (outdir / "patched" / name).write_text(pretty_print(fr.patched))
        (outdir / "patches" / f"{name}.patch").write_text(fr.diff)
    (outdir / "report.json").write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    (outdir / "metrics.json").write_text(json.dumps(report.metrics.to_json(), indent=2, sort_keys=True) + "\n")
    (outdir / "summary.txt").write_text(report.metrics.summary_table())
    print(report.metrics.summary_table())
    print(f"exit code {report.exit_code}")
    return report.exit_code


def main(argv: list[str] | None = None) -> int:
    top = argparse.ArgumentParser(prog="leakward", description="MiniJ resource-leak detection and repair")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="report leak warnings")
    p.add_argument("files", nargs="+")
    p.add_argument("--libspec", required=True)
    p.add_argument("--specs")
    p.add_argument("--json", action="store_true")
    p.add_argument("--dump-cfg", metavar="DIR")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("infer", help="infer resource-management specifications")
    p.add_argument("files", nargs="+")
    p.add_argument("--libspec", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(fn=cmd_infer)

    p = sub.add_parser("transform", help="apply the code transformations")
    p.add_argument("files", nargs="+")
    p.add_argument("--libspec", required=True)
    p.add_argument("--warnings", help="warnings JSON from `leakward check --json`")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(fn=cmd_transform)

    p = sub.add_parser("fix", help="plan and materialize repairs")
    p.add_argument("files", nargs="+")
    p.add_argument("--libspec", required=True)
    p.add_argument("--warnings", required=True)
    p.add_argument("--specs")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(fn=cmd_fix)

    p = sub.add_parser("run", help="interpret a program's static main")
    p.add_argument("file")
    p.add_argument("--libspec", required=True)
    p.add_argument("--trace", action="store_true")
    p.add_argument("--step-limit", type=int, default=100_000)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("explain-escape", help="print escape routes for an allocation site")
    p.add_argument("file")
    p.add_argument("--site", type=int, required=True)
    p.add_argument("--libspec", required=True)
    p.add_argument("--specs")
    p.set_defaults(fn=cmd_explain_escape)

    p = sub.add_parser("pipeline", help="run the full leak-repair pipeline over a directory")
    p.add_argument("directory")
    p.add_argument("--libspec", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--max-iterations", type=int, default=3)
    p.add_argument("--no-transforms", action="store_true")
    p.add_argument("--no-enhancements", action="store_true")
    p.add_argument("--no-overwrite-handling", action="store_true")
    p.set_defaults(fn=cmd_pipeline)

    args = top.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
