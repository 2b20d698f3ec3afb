"""Command-line entry point.

Verbs:
  segment   run one method on one volume (seed or outline initialization)
  evaluate  run a case manifest, write records + report
  phantoms  generate a synthetic phantom suite with ground truth
  report    re-render a records file as JSON or a text table

Exit codes: 0 full success, 1 any case/segmentation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .balloon import BalloonParams, OutlineInit, run_balloon
from .mesh import save_off, save_stl
from .metrics import dsc, load_mask, save_mask
from .raygraph import RayGraphSpec, run_graph
from .volume import load_volume


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _collect_params(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise SystemExit(f"--param expects k=v, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key] = _parse_value(value)
    return out


def _cmd_segment(args) -> int:
    volume = load_volume(args.volume)
    overrides = _collect_params(args.param)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.method == "balloon":
        if not args.outline:
            print("balloon method requires --outline", file=sys.stderr)
            return 2
        outline = OutlineInit.from_json(Path(args.outline))
        result = run_balloon(volume, outline, BalloonParams(**overrides))
    else:
        if not args.seed:
            print("graph method requires --seed x,y,z", file=sys.stderr)
            return 2
        seed = [float(c) for c in args.seed.split(",")]
        if len(seed) != 3:
            print("--seed expects three comma-separated mm coordinates", file=sys.stderr)
            return 2
        result = run_graph(volume, seed, RayGraphSpec(**overrides))

    summary = result.to_dict()
    if args.reference:
        summary["dsc"] = dsc(result.mask, load_mask(args.reference))
    save_mask(result.mask, out_dir / "mask.vol.json")
    save_off(result.mesh, out_dir / "surface.off")
    save_stl(result.mesh, out_dir / "surface.stl")
    (out_dir / "result.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_evaluate(args) -> int:
    manifest = harness.load_manifest(args.manifest)
    records = harness.run_manifest(manifest, jobs=args.jobs)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = harness.write_report(records, out_dir / "report.json")
    table = harness.render_table(report["summary"])
    (out_dir / "report.txt").write_text(table + "\n")
    print(table)
    failed = [r["id"] for r in records if r.get("failed")]
    if failed:
        print(f"failed cases: {', '.join(map(str, failed))}", file=sys.stderr)
        return 1
    return 0


def _cmd_phantoms(args) -> int:
    manifest_path = harness.generate_phantom_suite(args.seed, args.count, args.out)
    print(manifest_path)
    return 0


def _cmd_report(args) -> int:
    payload = json.loads(Path(args.records).read_text())
    records = payload["cases"] if isinstance(payload, dict) and "cases" in payload else payload
    summary = harness.summarize(records)
    if args.format == "json":
        print(json.dumps(summary, indent=2, sort_keys=True))
    else:
        print(harness.render_table(summary))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tumorseg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="segment one volume")
    seg.add_argument("--method", choices=("balloon", "graph"), required=True)
    seg.add_argument("--volume", required=True)
    seg.add_argument("--seed", help="seed point in mm: x,y,z (graph method)")
    seg.add_argument("--outline", help="outline JSON file (balloon method)")
    seg.add_argument("--reference", help="optional reference mask for DSC")
    seg.add_argument("--param", action="append", default=[], metavar="K=V")
    seg.add_argument("--out", required=True)
    seg.set_defaults(func=_cmd_segment)

    ev = sub.add_parser("evaluate", help="run a case manifest")
    ev.add_argument("--manifest", required=True)
    ev.add_argument("--out", required=True)
    ev.add_argument("--jobs", type=int, default=1)
    ev.set_defaults(func=_cmd_evaluate)

    ph = sub.add_parser("phantoms", help="generate a phantom suite")
    ph.add_argument("--seed", type=int, required=True)
    ph.add_argument("--count", type=int, required=True)
    ph.add_argument("--out", required=True)
    ph.set_defaults(func=_cmd_phantoms)

    rp = sub.add_parser("report", help="render a records file")
    rp.add_argument("--records", required=True)
    rp.add_argument("--format", choices=("json", "table"), default="table")
    rp.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
