"""Command-line interface.

Verbs: ``gen`` (synthetic dataset), ``corrupt`` (standalone corruption),
``run`` (one incremental experiment), ``sweep`` (quantity-quality grid),
``select`` (exemplar selection on a feature cache), ``dump-severity``
(audit print of the corruption tables).

Exit codes: 0 success, 2 I/O error, 3 invalid configuration or usage,
4 runtime error. stdout carries only machine-readable output (``run``
prints exactly one ``avg_oa=<value>`` line); progress goes to stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ExperimentConfig, read_config
from .corruption import (
    CorruptionSpec,
    apply_corruption,
    expand_test_set,
    severity_table_text,
)
from .dataset import CorruptionType, load_dataset, save_dataset, tag_name
from .errors import InvalidConfigError, ParseError, ToolkitError
from .features import GeometricFeatureExtractor, read_feature_cache
from .harness import build_scenario, prepare_scenario, run_prepared
from .replay import BudgetConfig
from .reporting import write_run_report, write_sweep_report
from .rng import derive_rng
from .synthetic import gen_synthetic_dataset

__all__ = ["main"]

CORRUPTION_NAMES = {
    "scale": CorruptionType.SCALE,
    "rotate": CorruptionType.ROTATE,
    "jitter": CorruptionType.JITTER,
    "addglobal": CorruptionType.ADD_GLOBAL,
    "addlocal": CorruptionType.ADD_LOCAL,
    "dropglobal": CorruptionType.DROP_GLOBAL,
    "droplocal": CorruptionType.DROP_LOCAL,
}


def _log(message: str) -> None:
    print(message, file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    """Argparse that reports usage problems through the exit-code contract."""

    def error(self, message):
        raise InvalidConfigError(message)


def _cmd_gen(args) -> int:
    manifest, samples = gen_synthetic_dataset(
        num_classes=args.classes,
        per_class=args.per_class,
        points_per_cloud=args.points,
        seed=args.seed,
    )
    save_dataset(args.out, samples, manifest.class_names(), args.points)
    _log(f"wrote {len(samples)} samples in {args.classes} classes to {args.out}")
    return 0


def _cmd_corrupt(args) -> int:
    manifest, samples = load_dataset(_manifest_path(args.manifest))
    level = args.level
    if args.type == "all":
        expanded = expand_test_set(samples, level, derive_rng(args.seed, "expand"))
        # corrupted copies need unique ids on disk
        out_samples = [
            s if s.corruption is None
            else type(s)(
                cloud=s.cloud,
                label=s.label,
                source_id=f"{s.source_id}.{tag_name(s.corruption).lower()}",
                corruption=s.corruption,
            )
            for s in expanded
        ]
    else:
        ctype = CORRUPTION_NAMES[args.type]
        spec = CorruptionSpec(ctype, level)
        out_samples = [
            s.with_cloud(
                apply_corruption(spec, s.cloud, derive_rng(args.seed, "corrupt", s.source_id)),
                ctype,
            )
            for s in samples
        ]
    save_dataset(args.out, out_samples, manifest.class_names(), manifest.point_count)
    _log(f"wrote {len(out_samples)} samples to {args.out}")
    return 0


def _overrides_from(args) -> dict[str, str]:
    overrides: dict[str, str] = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise InvalidConfigError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = value.strip()
    if getattr(args, "selection", None):
        overrides["selection"] = args.selection
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = str(args.seed)
    if getattr(args, "out", None):
        overrides["out"] = args.out
    return overrides


def _cmd_run(args) -> int:
    cfg = read_config(args.config, _overrides_from(args))
    result = _run_config(cfg)
    paths = write_run_report(cfg.out, cfg, result)
    _log(f"report written to {paths['metadata'].parent}")
    print(f"avg_oa={result.average_oa:.9f}")
    return 0


def _run_config(cfg: ExperimentConfig):
    samples = cfg.load_samples()
    extractor = GeometricFeatureExtractor()
    scenario = build_scenario(
        samples, cfg.tasks, cfg.mix_policy(), cfg.seed, cfg.split_test_fraction
    )
    _log(f"scenario: {scenario.num_tasks} tasks over {sum(len(t) for t in scenario.task_class_sets)} classes")
    prep = prepare_scenario(scenario, extractor)
    result = run_prepared(prep, cfg.budget(), cfg.strategy(), extractor)
    for t, oa in enumerate(result.per_task_oa, start=1):
        _log(f"task {t}: oa={oa:.4f}")
    return result


def _cmd_sweep(args) -> int:
    cfg = read_config(args.config, _overrides_from(args))
    alphas = sorted({float(a) for a in args.alpha.split(",")} | {0.0})
    rates = [float(r) for r in args.r.split(",")]
    if not rates:
        raise InvalidConfigError("sweep needs at least one downsampling rate")

    samples = cfg.load_samples()
    extractor = GeometricFeatureExtractor()
    scenario = build_scenario(
        samples, cfg.tasks, cfg.mix_policy(), cfg.seed, cfg.split_test_fraction
    )
    prep = prepare_scenario(scenario, extractor)
    strategy = cfg.strategy()

    rows = []
    for alpha in alphas:
        for r in rates if alpha > 0.0 else [1.0]:
            budget = BudgetConfig(M=cfg.budget_m, alpha=alpha, r=r, n=cfg.budget_n)
            result = run_prepared(prep, budget, strategy, extractor)
            rows.append((alpha, r, result.capacity, result.average_oa, result.per_task_oa[-1]))
            _log(f"alpha={alpha:g} r={r:g}: capacity={result.capacity} avg_oa={result.average_oa:.4f}")
    paths = write_sweep_report(cfg.out, rows)
    _log(f"sweep written to {paths['sweep'].parent}")
    return 0


def _cmd_select(args) -> int:
    from .selection import strategy_from_name

    _, records = read_feature_cache(args.cache)
    if not records:
        raise InvalidConfigError(f"feature cache {args.cache} holds no records")
    strategy = strategy_from_name(args.strategy, k=args.k, c=args.c)
    features = [vec for _, _, vec in records]
    chosen = strategy.select(features, args.n, derive_rng(args.seed, "select"))
    lines = [records[i][0] for i in chosen]
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
        _log(f"wrote {len(lines)} ids to {args.out}")
    else:
        for line in lines:
            print(line)
    return 0


def _cmd_dump_severity(args) -> int:
    print(severity_table_text())
    return 0


def _manifest_path(path: str) -> Path:
    p = Path(path)
    return p / "manifest.txt" if p.is_dir() else p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="robust3dcil", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[], help="generate a synthetic dataset")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--points", type=int, default=1024)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("corrupt", help="corrupt a dataset with one type or all")
    p.add_argument("manifest")
    p.add_argument("--type", required=True, choices=list(CORRUPTION_NAMES) + ["all"])
    p.add_argument("--level", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_corrupt)

    p = sub.add_parser("run", help="run one incremental experiment")
    p.add_argument("config")
    p.add_argument("--selection", choices=["farthest", "herding", "random"])
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--out")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="grid over alpha and r with one shared scenario")
    p.add_argument("config")
    p.add_argument("--alpha", default="0,0.25,0.5,0.75,1")
    p.add_argument("--r", default="2,4,8,16")
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--out")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("select", help="run exemplar selection over a feature cache")
    p.add_argument("cache")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--strategy", default="farthest", choices=["farthest", "herding", "random"])
    p.add_argument("--k", type=float, default=20.0)
    p.add_argument("--c", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("dump-severity", help="print the severity parameter tables")
    p.set_defaults(func=_cmd_dump_severity)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except InvalidConfigError as exc:
        _log(f"error: {exc}")
        return 3
    except OSError as exc:
        _log(f"io error: {exc}")
        return 2
    except (ToolkitError, ParseError) as exc:
        _log(f"error: {exc}")
        return 4


if __name__ == "__main__":
    sys.exit(main())
