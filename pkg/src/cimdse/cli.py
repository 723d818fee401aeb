"""Command-line front end.

Subcommands: simulate one design point, explore a restricted space, compare
the eight dataflow disciplines, run the bundled regression model rows, or
re-execute a recorded manifest.  All outputs are CSV plus a JSON manifest;
figures are left to downstream plotting tools.

Exit codes: 0 ok, 2 usage/parse, 3 validation, 4 empty result.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from importlib import resources
from pathlib import Path

from . import __version__, design_space as ds, dse
from .array_scheduler import format_trace, trace
from .cost_model import estimate, load_calibration
from .design_space import FIELD_NAMES, parse_point, parse_space_file, point_values_to_point, validate
from .errors import CalibrationError, EmptySpaceError, ParseError, TraceCapError, ValidationError
from .workload import (GemmWorkload, model_from_block, parse_models,
                       parse_workload, qkv_workload, simulate_workload)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_EMPTY = 4

REPORT_COLUMNS = (
    ("id",) + FIELD_NAMES
    + ("mode", "cycles", "macs_executed", "weight_rows_written",
       "idle_macro_cycles", "activation_transfers", "weight_transfers",
       "output_transfers", "frequency_hz", "latency_s", "power_w",
       "area_mm2", "objective")
)

FRONTIER_COLUMNS = (
    ("id",) + FIELD_NAMES
    + ("cycles", "frequency_hz", "latency_s", "power_w", "area_mm2",
       "objective", "origin")
)

CASESTUDY_COLUMNS = (
    "model", "layers", "hidden_dim", "seq_len", "batch", "cores",
    "best_dataflow", "LSL", "AL", "PC", "PL", "BC", "BR", "TL",
    "cycles", "frequency_hz", "latency_ms", "power_w", "area_mm2",
    "objective", "total_macs", "within_capacity_bound", "calibration",
)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(columns, rows) -> str:
    lines = [",".join(columns)]
    lines.extend(",".join(_fmt(row[c]) for c in columns) for row in rows)
    return "\n".join(lines) + "\n"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, command: str, args: dict, inputs: dict) -> None:
    manifest = {
        "tool": "cimdse",
        "version": __version__,
        "command": command,
        "args": args,
        "inputs": {k: str(v) for k, v in inputs.items()},
        "input_hashes": {k: _sha256(Path(v)) for k, v in inputs.items()
                         if v and Path(v).is_file()},
        "out_dir": str(out_dir),
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_calibration_arg(path: str | None, strict: bool):
    if path is None:
        text = resources.files("cimdse.data").joinpath("default_calibration.txt").read_text()
        label = "default"
    else:
        text = Path(path).read_text()
        label = path
    cal, provenance = load_calibration(text, path)
    if strict:
        missing = sorted(k for k, src in provenance.items() if src == "default")
        if path is None or missing:
            raise ValidationError(
                "calibration",
                f"--strict requires every calibration key in the file; missing: {', '.join(missing) or 'all'}")
    return cal, label


def _frontier_rows(evaluated, origin=None):
    rows = []
    for e in evaluated:
        row = {"id": e.point.id, **e.point.field_values()}
        row.update(
            cycles=e.ppa.cycles, frequency_hz=e.ppa.frequency_hz,
            latency_s=e.ppa.latency_s, power_w=e.ppa.power_w,
            area_mm2=e.ppa.area_mm2, objective=e.ppa.objective,
            origin=(origin or {}).get(e.point.id, e.point.field_values()["dataflow"]),
        )
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Subcommands

def cmd_simulate(args) -> int:
    point = parse_point(Path(args.point).read_text(), args.point, kappa=args.kappa)
    validate(point)
    wl = parse_workload(Path(args.workload).read_text(), args.workload)
    cal, cal_label = _load_calibration_arg(args.calibration, args.strict)
    sim = simulate_workload(wl, point, args.mode)
    ppa = estimate(point, sim, cal)
    row = {"id": point.id, **point.field_values(), "mode": args.mode,
           "cycles": sim.total_cycles, "macs_executed": sim.macs_executed,
           "weight_rows_written": sim.weight_rows_written,
           "idle_macro_cycles": sim.idle_macro_cycles,
           "activation_transfers": sim.activation_transfers,
           "weight_transfers": sim.weight_transfers,
           "output_transfers": sim.output_transfers,
           "frequency_hz": ppa.frequency_hz,
           "latency_s": ppa.latency_s,
           "power_w": ppa.power_w,
           "area_mm2": ppa.area_mm2,
           "objective": ppa.objective}
    text = _csv_text(REPORT_COLUMNS, [row])
    sys.stdout.write(text)
    if args.trace:
        gemm = wl.items[0][0]
        try:
            segments = trace(gemm, point, args.mode)
        except TraceCapError as exc:
            segments = exc.partial
            print(f"warning: {exc}; writing partial trace", file=sys.stderr)
        Path(args.trace).write_text(format_trace(segments))
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.csv").write_text(text)
        _write_manifest(out_dir, "simulate",
                        _manifest_args(args, ("mode", "kappa", "strict")),
                        {"point": args.point, "workload": args.workload,
                         "calibration": cal_label})
    return EXIT_OK


def cmd_explore(args) -> int:
    space = parse_space_file(Path(args.space).read_text(), args.space) \
        if args.space else ds.FULL_SPACE
    wl = parse_workload(Path(args.workload).read_text(), args.workload)
    cal, cal_label = _load_calibration_arg(args.calibration, args.strict)
    strategy = dse.parse_strategy(args.strategy)
    point_filter = (dse.capacity_filter(cal, args.capacity_bound)
                    if args.capacity_bound else None)
    result = dse.explore(space, wl, cal, strategy, args.budget,
                         seed=args.seed, mode=args.mode, jobs=args.jobs,
                         point_filter=point_filter)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "frontier.csv").write_text(
        _csv_text(FRONTIER_COLUMNS, _frontier_rows(result.front.points)))
    (out_dir / "evaluations.csv").write_text(
        _csv_text(FRONTIER_COLUMNS, _frontier_rows(result.evaluated)))
    _write_manifest(out_dir, "explore",
                    _manifest_args(args, ("strategy", "budget", "seed", "mode",
                                          "capacity_bound", "strict")),
                    {"space": args.space or "", "workload": args.workload,
                     "calibration": cal_label})
    print(f"evaluated {len(result.evaluated)} points; "
          f"frontier size {len(result.front.points)}; "
          f"best objective {result.best.ppa.objective!r}")
    return EXIT_OK


def cmd_compare(args) -> int:
    space = parse_space_file(Path(args.space).read_text(), args.space) \
        if args.space else ds.FULL_SPACE
    wl = parse_workload(Path(args.workload).read_text(), args.workload)
    cal, cal_label = _load_calibration_arg(args.calibration, args.strict)
    strategy = dse.parse_strategy(args.strategy)
    result = dse.compare_dataflows(wl, cal, args.budget_per_flow, space=space,
                                   strategy=strategy, seed=args.seed,
                                   mode=args.mode, jobs=args.jobs)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for label, flow_result in result.per_flow.items():
        rows = _frontier_rows(flow_result.front.points, result.origin)
        (out_dir / f"frontier_{label}.csv").write_text(_csv_text(FRONTIER_COLUMNS, rows))
    merged_rows = _frontier_rows(result.merged.points, result.origin)
    (out_dir / "merged.csv").write_text(_csv_text(FRONTIER_COLUMNS, merged_rows))
    _write_manifest(out_dir, "compare",
                    _manifest_args(args, ("strategy", "budget_per_flow",
                                          "seed", "mode", "strict")),
                    {"space": args.space or "", "workload": args.workload,
                     "calibration": cal_label})
    print(f"wrote {len(result.per_flow)} per-flow frontiers; "
          f"merged frontier size {len(result.merged.points)}")
    return EXIT_OK


def cmd_casestudy(args) -> int:
    models_path = args.models
    if models_path is None:
        text = resources.files("cimdse.data").joinpath("table3_models.txt").read_text()
    else:
        text = Path(models_path).read_text()
    blocks = parse_models(text, models_path)
    cal, cal_label = _load_calibration_arg(args.calibration, args.strict)
    bound_ok = dse.capacity_filter(cal, args.capacity_bound) if args.capacity_bound else None
    rows = []
    for block in blocks:
        model = model_from_block(block)
        point = _block_point(block, models_path)
        validate(point)
        wl = qkv_workload(model)
        sim = simulate_workload(wl, point, args.mode)
        ppa = estimate(point, sim, cal)
        values = point.field_values()
        flow = (f"{values['dataflow']}-{values['interconnect']}-"
                f"{'OL' if values['OL'] else 'NOL'}")
        rows.append({
            "model": model.name, "layers": model.layers,
            "hidden_dim": model.hidden_dim, "seq_len": model.seq_len,
            "batch": model.batch, "cores": values["cores"],
            "best_dataflow": flow,
            **{k: values[k] for k in ("LSL", "AL", "PC", "PL", "BC", "BR", "TL")},
            "cycles": ppa.cycles, "frequency_hz": ppa.frequency_hz,
            "latency_ms": ppa.latency_s * 1e3, "power_w": ppa.power_w,
            "area_mm2": ppa.area_mm2, "objective": ppa.objective,
            "total_macs": wl.total_macs,
            "within_capacity_bound": (bound_ok(point) if bound_ok else True),
            "calibration": "local",
        })
    text_out = "# calibration: local -- values are not comparable to published numbers\n"
    text_out += _csv_text(CASESTUDY_COLUMNS, rows)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "casestudy.csv").write_text(text_out)
    _write_manifest(out_dir, "casestudy",
                    _manifest_args(args, ("capacity_bound", "mode", "strict")),
                    {"models": models_path or "", "calibration": cal_label})
    sys.stdout.write(text_out)
    return EXIT_OK


_POINT_KEYS = ("LSL", "AL", "PC", "PL", "BC", "BR", "TL", "cores",
               "dataflow", "interconnect", "OL")


def _block_point(block: dict, path):
    missing = [k for k in _POINT_KEYS if k not in block]
    if missing:
        raise ParseError(
            f"model block {block.get('name', '?')!r} missing design keys: "
            f"{', '.join(missing)}", path)
    values = {"WBW": 8, "IBW": 8}
    for key in _POINT_KEYS:
        values[key] = ds._parse_field(key, str(block[key]), path, None) \
            if key in ("dataflow", "interconnect", "OL") else int(block[key])
    return point_values_to_point(values)


def cmd_rerun(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    argv = [manifest["command"]]
    inputs = manifest["inputs"]
    flags = {
        "simulate": [("--point", inputs.get("point")),
                     ("--workload", inputs.get("workload"))],
        "explore": [("--space", inputs.get("space")),
                    ("--workload", inputs.get("workload"))],
        "compare": [("--space", inputs.get("space")),
                    ("--workload", inputs.get("workload"))],
        "casestudy": [("--models", inputs.get("models"))],
    }[manifest["command"]]
    for flag, value in flags:
        if value:
            argv.extend([flag, value])
    if inputs.get("calibration") and inputs["calibration"] != "default":
        argv.extend(["--calibration", inputs["calibration"]])
    for key, value in manifest["args"].items():
        if value in (None, False, ""):
            continue
        flag = "--" + key.replace("_", "-")
        argv.extend([flag] if value is True else [flag, str(value)])
    if manifest["command"] != "simulate":
        argv.extend(["--out", manifest["out_dir"]])
    elif manifest["out_dir"]:
        argv.extend(["--out", manifest["out_dir"]])
    argv.extend(["--jobs", str(args.jobs)])
    return main(argv)


def _manifest_args(args, names) -> dict:
    return {name: getattr(args, name) for name in names
            if getattr(args, name, None) is not None}


# ---------------------------------------------------------------------------

def _add_common(p, workload=True, jobs=True):
    if workload:
        p.add_argument("--workload", required=True, help="GEMM workload file (M,N,K,repeat lines)")
    p.add_argument("--calibration", help="calibration file (defaults to the shipped one)")
    p.add_argument("--mode", choices=("paper", "exact"), default="paper")
    p.add_argument("--strict", action="store_true",
                   help="require every calibration key to come from the file")
    if jobs:
        p.add_argument("--jobs", type=int, default=1, help="parallel evaluation width")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cimdse",
        description="Simulate and explore compute-in-memory macro-array dataflows.")
    parser.add_argument("--version", action="version", version=f"cimdse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one design point on a workload")
    p.add_argument("--point", required=True, help="design-point file (key = value)")
    p.add_argument("--kappa", type=float, default=1.0, help="weight-write speed factor")
    p.add_argument("--trace", help="write per-macro occupancy trace to this file")
    p.add_argument("--out", help="optional output directory (report + manifest)")
    _add_common(p, jobs=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("explore", help="search a (restricted) design space")
    p.add_argument("--space", help="space restriction file (field = v1, v2, ...)")
    p.add_argument("--strategy", default="exhaustive",
                   choices=("exhaustive", "random", "evolutionary"))
    p.add_argument("--budget", type=int, required=True, help="max unique evaluations")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--capacity-bound", type=float, dest="capacity_bound",
                   help="drop points whose peak throughput exceeds this many TOPS")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("compare", help="frontier per dataflow discipline")
    p.add_argument("--space", help="space restriction file shared by all flows")
    p.add_argument("--strategy", default="random",
                   choices=("exhaustive", "random", "evolutionary"))
    p.add_argument("--budget-per-flow", type=int, required=True, dest="budget_per_flow")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("casestudy", help="run the bundled regression model rows")
    p.add_argument("--models", help="models file (defaults to the bundled rows)")
    p.add_argument("--capacity-bound", type=float, dest="capacity_bound",
                   help="flag designs whose peak throughput exceeds this many TOPS")
    p.add_argument("--out", required=True)
    _add_common(p, workload=False, jobs=False)
    p.set_defaults(func=cmd_casestudy)

    p = sub.add_parser("rerun", help="re-execute a recorded manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"cimdse: parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, CalibrationError) as exc:
        print(f"cimdse: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except EmptySpaceError as exc:
        print(f"cimdse: empty result: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except FileNotFoundError as exc:
        print(f"cimdse: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"cimdse: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
