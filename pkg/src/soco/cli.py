"""Command-line surface.

Verbs mirror the library layers: data generation, attribution, map
modification, single-metric evaluation, curve comparison, full config-driven
runs, and plot-data export.  Exit codes: 0 success, 2 bad configuration or
arguments, 3 model bridge failure, 4 bad data.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ._version import __version__
from .analysis import CurveSet, min_pairwise_hausdorff, pairwise_hausdorff
from .core import ConfigError, DataError, ModelBridgeError
from .experiment import evaluate_metric, load_config, run_experiment
from .io import (
    emit_plot_data,
    read_curve,
    read_dataset,
    read_maps,
    write_curve,
    write_dataset,
    write_maps,
)
from .models import MlpModel, MlpWeights
from .modify import DIRECTIONS, SCHEME_KINDS, ModScheme, apply_scheme
from .synthetic import LinearStepModel, generate_synthetic, ground_truth_attribution, oracle_info


def _cmd_gen_synthetic(args) -> int:
    dataset = generate_synthetic(args.n_samples, args.n_features, args.seed)
    write_dataset(dataset, args.out, format=args.format)
    print(f"wrote {len(dataset.samples)} samples to {args.out}")
    return 0


def _cmd_attribute(args) -> int:
    dataset = read_dataset(args.dataset)
    maps = ground_truth_attribution(dataset)
    write_maps(maps, args.out, dataset=dataset, format=args.format)
    print(f"wrote {len(maps)} ground-truth maps to {args.out}")
    return 0


def _cmd_modify(args) -> int:
    dataset = read_dataset(args.dataset) if args.dataset else None
    maps = read_maps(args.maps, dataset)
    scheme = ModScheme(
        kind=args.kind,
        direction=args.direction,
        magnitude=args.magnitude,
        fraction=args.fraction,
        seed=args.seed,
        renormalize=args.renormalize,
    )
    oracle = None
    if scheme.kind == "synth_introduce":
        if dataset is None:
            raise ConfigError("synth_introduce needs --dataset for oracle information")
        oracle = oracle_info(dataset)
    out = apply_scheme(maps, scheme, oracle)
    write_maps(out, args.out, dataset=dataset, format=args.format)
    print(f"wrote {len(out)} modified maps to {args.out}")
    return 0


def _metric_options(args) -> dict:
    if args.metric == "soundness":
        return {
            "epsilon": args.epsilon,
            "imputer": args.imputer,
            "noise_std": args.noise_std,
            "weighting": args.weighting,
        }
    if args.metric == "completeness":
        return {"imputer": args.imputer, "noise_std": args.noise_std}
    if args.metric == "road":
        return {"order": args.order, "noise_std": args.noise_std}
    return {"order": args.order, "imputer": args.imputer, "noise_std": args.noise_std}


def _cmd_eval(args) -> int:
    dataset = read_dataset(args.dataset)
    if args.mlp_weights:
        model = MlpModel(MlpWeights.from_json(args.mlp_weights))
    else:
        model = LinearStepModel()
    if args.maps:
        maps = read_maps(args.maps, dataset)
    else:
        if args.mlp_weights:
            raise ConfigError("ground-truth maps are only defined for the builtin model")
        maps = ground_truth_attribution(dataset)
    curve = evaluate_metric(
        args.metric, _metric_options(args), model, dataset, maps, args.seed
    )
    write_curve(curve, args.out)
    print(f"wrote {args.metric} curve ({len(curve.points)} points) to {args.out}")
    return 0


def _curve_label(path: Path, taken: set) -> str:
    name = path.name
    for suffix in (".curve.json", ".json"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
            break
    label = name
    bump = 1
    while label in taken:
        bump += 1
        label = f"{name}~{bump}"
    return label


def _cmd_compare(args) -> int:
    curves = {}
    for raw in args.curves:
        path = Path(raw)
        curves[_curve_label(path, set(curves))] = read_curve(path)
    curve_set = CurveSet(curves)
    if args.min_hausdorff:
        print(f"{min_pairwise_hausdorff(curve_set):.9f}")
        return 0
    for (a, b), dist in sorted(pairwise_hausdorff(curve_set).items()):
        print(f"{a} vs {b}: {dist:.9f}")
    return 0


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    manifest = run_experiment(cfg)
    print(f"run complete; manifest at {cfg.output_dir / 'manifest.json'}")
    for variant, metrics in sorted(manifest.outputs.items()):
        for metric, path in sorted(metrics.items()):
            print(f"  {variant}/{metric}: {path}")
    return 0


def _cmd_emit_plot(args) -> int:
    emit_plot_data(read_curve(args.curve), args.out, format=args.format)
    print(f"wrote plot data to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="soco", description="Attribution-map faithfulness evaluation."
    )
    parser.add_argument("--version", action="version", version=f"soco {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("gen-synthetic", help="generate the synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--n-samples", type=int, default=1000)
    p.add_argument("--n-features", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("binary", "json"), default="binary")
    p.set_defaults(func=_cmd_gen_synthetic)

    p = sub.add_parser("attribute", help="write ground-truth attribution maps")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("binary", "json"), default="binary")
    p.set_defaults(func=_cmd_attribute)

    p = sub.add_parser("modify", help="apply a modification scheme to maps")
    p.add_argument("--maps", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", required=True, choices=SCHEME_KINDS)
    p.add_argument("--direction", choices=DIRECTIONS, default="remove")
    p.add_argument("--magnitude", type=float, default=-1.0)
    p.add_argument("--fraction", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--renormalize", action="store_true")
    p.add_argument("--dataset", help="required for synth_introduce; validates alignment")
    p.add_argument("--format", choices=("binary", "json"), default="binary")
    p.set_defaults(func=_cmd_modify)

    p = sub.add_parser("eval", help="evaluate one metric")
    p.add_argument(
        "--metric",
        required=True,
        choices=("soundness", "completeness", "deletion", "insertion", "road"),
    )
    p.add_argument("--dataset", required=True)
    p.add_argument("--maps", help="map file; omitted = ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--mlp-weights")
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--imputer", choices=("mean", "zero", "noisy_linear"), default="mean")
    p.add_argument("--noise-std", type=float, default=0.0)
    p.add_argument("--weighting", choices=("attribution", "cardinality"), default="attribution")
    p.add_argument("--order", choices=("MoRF", "LeRF"), default="MoRF")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("compare", help="Hausdorff distances between curves")
    p.add_argument("curves", nargs="+")
    p.add_argument(
        "--min-hausdorff",
        action="store_true",
        help="print only the minimum pairwise distance",
    )
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("run", help="run a full experiment config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("emit-plot", help="export a curve as CSV or JSON columns")
    p.add_argument("--curve", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_emit_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ModelBridgeError as exc:
        print(f"model bridge error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
