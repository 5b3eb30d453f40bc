"""fitzcal command line: synth | split | sweep | calibrate | evaluate | report | selftest.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal-consistency
failure. All errors go to stderr with the prefix ``fitzcal: <category>:``.
Freezing discipline is structural: calibrate only ever loads tune-split
records and evaluate only test-split records.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import calibration, metrics, report as report_mod, splitting, synthgen
from .data_model import GroupLabel, load_manifest, save_manifest
from .errors import ConsistencyError, DataError, FitzcalError
from .metrics import METRICS, aggregate_curves, curve_from_counts
from .pipeline import sweep_split

PROG = "fitzcal"


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors must exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{PROG}: usage: {message}", file=sys.stderr)
        raise SystemExit(1)


def _err(category: str, message: str) -> None:
    print(f"{PROG}: {category}: {message}", file=sys.stderr)


def _apply_config(args: argparse.Namespace) -> None:
    """Fill in flags from a JSON config file; explicit flags win."""
    if not getattr(args, "config", None):
        return
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read config {args.config}: {exc}", category="config")
    if not isinstance(cfg, dict):
        raise DataError("config file must be a JSON object", category="config")
    subparser = args._subparser
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if attr.startswith("_") or not hasattr(args, attr):
            raise DataError(f"config key {key!r} matches no flag", category="config")
        if getattr(args, attr) == subparser.get_default(attr):
            setattr(args, attr, value)


def build_parser() -> _Parser:
    parser = _Parser(prog=PROG, description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="JSON file with the same keys as the flags")
        p.set_defaults(_subparser=p)
        return p

    p = common(sub.add_parser("synth", help="generate a synthetic dataset"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--images-per-group", type=int, default=30)
    p.add_argument("--size", default="64x64", help="WxH in pixels")
    p.add_argument("--lesion-frac", type=float, default=0.05)
    p.add_argument("--mu-fg", type=float, default=3.0)
    p.add_argument("--mu-bg", type=float, default=-3.0)
    p.add_argument("--sigma", type=float, default=1.5)
    p.add_argument("--shift", default="", help="per-group logit shifts, e.g. VI=1.0,V=0.5")
    p.add_argument("--out", help="output directory")

    p = common(sub.add_parser("split", help="assign patients to train/tune/test"))
    p.add_argument("--manifest")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output manifest path")

    p = common(sub.add_parser("sweep", help="compute and cache per-image metric curves"))
    p.add_argument("--manifest")
    p.add_argument("--cache", help="cache directory")
    p.add_argument("--threads", type=int, default=None)

    p = common(sub.add_parser("calibrate", help="select operating points on the tune split"))
    p.add_argument("--manifest")
    p.add_argument("--cache", default=None)
    p.add_argument("--mode", choices=("macro", "micro"), default="macro")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", help="operating-point document path")

    p = common(sub.add_parser("evaluate", help="evaluate frozen operating points on the test split"))
    p.add_argument("--manifest")
    p.add_argument("--ops", help="operating-point document from calibrate")
    p.add_argument("--cache", default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", help="run-report document path")

    p = common(sub.add_parser("report", help="render tables and curve plots"))
    p.add_argument("--run", help="run-report document from evaluate")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--out", default=None, help="table output path (default stdout)")
    p.add_argument("--curves-dir", default=None, help="write per-metric SVG curves here")

    p = common(sub.add_parser("selftest", help="run oracle-equivalence and dominance suites"))
    p.add_argument("--datasets", type=int, default=10)
    p.add_argument("--images", type=int, default=60, help="random images for oracle check")

    return parser


def _cmd_synth(args) -> int:
    try:
        width, height = (int(v) for v in args.size.lower().split("x"))
    except ValueError:
        raise DataError(f"bad --size {args.size!r}, expected WxH", category="size")
    cfg = synthgen.SynthConfig(
        seed=args.seed, images_per_group=args.images_per_group,
        width=width, height=height, lesion_fraction=args.lesion_frac,
        mu_fg=args.mu_fg, mu_bg=args.mu_bg, sigma=args.sigma,
        shift_by_group=synthgen.parse_shift_spec(args.shift))
    manifest = synthgen.generate(cfg, args.out)
    print(f"wrote {len(manifest.records)} images to {args.out}")
    return 0


def _cmd_split(args) -> int:
    manifest = load_manifest(args.manifest)
    result = splitting.split(manifest, splitting.SplitConfig(seed=args.seed))
    splitting.verify_split(result)
    save_manifest(result, args.out)
    print(f"wrote split manifest to {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    manifest = load_manifest(args.manifest)
    base_dir = Path(args.manifest).parent
    total = 0
    for split_name in ("train", "tune", "test", "unassigned"):
        images = sweep_split(manifest, base_dir, split_name,
                             cache_dir=args.cache, threads=args.threads)
        total += len(images)
    print(f"swept {total} images into cache {args.cache}")
    return 0


def _tune_images(args):
    manifest = load_manifest(args.manifest)
    base_dir = Path(args.manifest).parent
    tune = sweep_split(manifest, base_dir, "tune",
                       cache_dir=args.cache, threads=args.threads)
    if not tune:
        raise DataError("manifest has no tune-split records", category="empty-tune-split")
    return tune


def _cmd_calibrate(args) -> int:
    tune = _tune_images(args)
    ops_by_metric = {}
    for metric in METRICS:
        ops = calibration.select_optima(tune, metric, mode=args.mode)
        calibration.tuning_dominance_check(tune, ops, mode=args.mode)
        ops_by_metric[metric] = ops
    checksum = report_mod.manifest_checksum(args.manifest)
    report_mod.write_ops_document(ops_by_metric, checksum, args.mode, args.out)
    print(f"wrote operating points to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    ops_by_metric, doc = report_mod.read_ops_document(args.ops)
    mode = doc.get("mode", "macro")
    manifest = load_manifest(args.manifest)
    base_dir = Path(args.manifest).parent
    test = sweep_split(manifest, base_dir, "test",
                       cache_dir=args.cache, threads=args.threads)
    if not test:
        raise DataError("manifest has no test-split records", category="empty-test-split")

    checksum = report_mod.manifest_checksum(args.manifest)
    recorded = doc.get("tuning_manifest_checksum")
    checksum_match = recorded == checksum
    if not checksum_match:
        _err("provenance", "operating-point document checksum does not match manifest; "
              "evaluating anyway")

    rows = {}
    curves = {}
    for metric, ops in sorted(ops_by_metric.items()):
        rows[metric] = calibration.evaluate_frozen(test, ops, mode=mode)
        subset_curves = {"Overall": _aggregate_values(test, metric, mode)}
        for g in GroupLabel:
            members = [im for im in test if im.group == g]
            if members:
                subset_curves[g.token] = _aggregate_values(members, metric, mode)
        curves[metric] = subset_curves

    run = report_mod.RunReport(
        metadata={
            "tool_version": report_mod.TOOL_VERSION,
            "mode": mode,
            "manifest_checksum": checksum,
            "ops_document": str(args.ops),
            "ops_checksum_match": checksum_match,
            "frozen_tau": {m: report_mod.ops_to_dict(o) for m, o in sorted(ops_by_metric.items())},
        },
        operating_points=ops_by_metric, rows=rows, curves=curves)
    report_mod.write_run_document(run, args.out)
    print(f"wrote run report to {args.out}")
    return 0


def _aggregate_values(images, metric, mode):
    curve = aggregate_curves([curve_from_counts(im.counts, metric) for im in images],
                             mode=mode, counts=[im.counts for im in images],
                             image_ids=[im.image_id for im in images])
    return [float(v) for v in curve.values]


def _cmd_report(args) -> int:
    run = report_mod.read_run_document(args.run)
    table = report_mod.render_table(run, format=args.format)
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
    else:
        sys.stdout.write(table)
    if args.curves_dir:
        out_dir = Path(args.curves_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for metric, subset_curves in run.curves.items():
            ops = run.operating_points[metric]
            curves = {s: metrics.MetricCurve(metric, _as_array(v))
                      for s, v in subset_curves.items()}
            report_mod.render_curves(curves, ops, out_dir / f"curves-{metric}.svg")
        print(f"wrote curve plots to {args.curves_dir}", file=sys.stderr)
    return 0


def _as_array(values):
    import numpy as np

    return np.asarray(values, dtype=float)


def _cmd_selftest(args) -> int:
    from . import selftest

    failures = selftest.run(datasets=args.datasets, images=args.images, out=sys.stdout)
    if failures:
        raise ConsistencyError(f"{failures} selftest check(s) failed", category="selftest")
    return 0


# checked after --config merges in file-supplied values
_REQUIRED = {
    "synth": ("out",),
    "split": ("manifest", "out"),
    "sweep": ("manifest", "cache"),
    "calibrate": ("manifest", "out"),
    "evaluate": ("manifest", "ops", "out"),
    "report": ("run",),
    "selftest": (),
}

_COMMANDS = {
    "synth": _cmd_synth,
    "split": _cmd_split,
    "sweep": _cmd_sweep,
    "calibrate": _cmd_calibrate,
    "evaluate": _cmd_evaluate,
    "report": _cmd_report,
    "selftest": _cmd_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        missing = [f for f in _REQUIRED[args.command] if getattr(args, f) is None]
        if missing:
            flags = ", ".join(f"--{f.replace('_', '-')}" for f in missing)
            _err("usage", f"missing required flag(s): {flags}")
            return 1
        return _COMMANDS[args.command](args)
    except ConsistencyError as exc:
        _err(exc.category, str(exc))
        return 3
    except DataError as exc:
        _err(exc.category, str(exc))
        return 2
    except FitzcalError as exc:
        _err(exc.category, str(exc))
        return 2
    except OSError as exc:
        _err("io", str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
