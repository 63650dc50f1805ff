"""Command-line interface: ``kmlp gen|train|eval|inspect``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .config import ConfigError, load_config
from .data import data_dir, gen_blobs, gen_rectangles, load_csv, load_idx, resolve, save_csv, save_idx
from .errors import DivergenceError, KMLPError
from .modelio import load_network, save_network
from .training import evaluate, predict, train_network

log = logging.getLogger("kmlp")

EXIT_INPUT = 2
EXIT_DIVERGED = 3


def _fail(code, exc, field=None):
    record = {"error": str(exc), "kind": type(exc).__name__, "exit": code}
    if field:
        record["field"] = field
    print(json.dumps(record), file=sys.stderr)
    return code


def cmd_gen(args):
    out = Path(args.out) if args.out else data_dir()
    out.mkdir(parents=True, exist_ok=True)
    if args.name == "rectangles":
        ds = gen_rectangles(args.n, args.side, args.seed)
    else:
        ds = gen_blobs(args.n, args.d, args.separation, args.seed)
    if args.format == "idx":
        if args.name != "rectangles":
            raise KMLPError("IDX output is only available for image datasets")
        images = np.rint(ds.features * 255).astype(np.uint8).reshape(args.n, args.side, args.side)
        paths = [out / f"{args.name}-images-idx3-ubyte", out / f"{args.name}-labels-idx1-ubyte"]
        save_idx(images, ds.labels, *paths)
    else:
        paths = [out / f"{args.name}.csv"]
        save_csv(ds, paths[0], header=args.header)
    for p in paths:
        print(p)
    return 0


def cmd_train(args):
    exp = load_config(args.config)
    dataset = exp.load_dataset()
    try:
        net, reports = train_network(exp.net, dataset, exp.train)
    except DivergenceError as exc:
        exp.output_dir.mkdir(parents=True, exist_ok=True)
        for report in getattr(exc, "reports", []):
            report.write(exp.output_dir / f"layer_{report.layer + 1}.jsonl")
        raise
    exp.output_dir.mkdir(parents=True, exist_ok=True)
    model_path = exp.output_dir / "model.kmlp"
    save_network(net, model_path)
    for report in reports:
        report.write(exp.output_dir / f"layer_{report.layer + 1}.jsonl")
    errors = {s: evaluate(net, dataset, s) for s in ("train", "validation", "test")
              if dataset.mask(s).any()}
    manifest = {"config_sha256": exp.digest, "seed": exp.seed, "model": model_path.name,
                "reports": [f"layer_{r.layer + 1}.jsonl" for r in reports],
                "error_rates": errors}
    (exp.output_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    for split_name, err in errors.items():
        print(f"{split_name}_error={err:.6f}")
    print(model_path)
    return 0


def _load_data(args):
    if args.labels:
        return load_idx(resolve(args.data), resolve(args.labels))
    return load_csv(args.data, args.label_column, args.header)


def cmd_eval(args):
    net = load_network(args.model)
    ds = _load_data(args)
    error = float(np.mean(predict(net, ds.features) != ds.labels))
    print(f"error_rate={error}")
    return 0


def cmd_inspect(args):
    net = load_network(args.model)
    ds = _load_data(args)
    rows = [analysis.representation_report(net, ds.features, ds.labels, i)
            for i in range(net.depth)]
    if args.json:
        for i, diag in enumerate(rows, start=1):
            print(json.dumps({"layer": i, **diag.as_dict()}))
        return 0
    print(f"{'layer':>5} {'l1':>10} {'l2':>10} {'alignment':>10} {'max_norm':>10} {'bound':>10}")
    for i, diag in enumerate(rows, start=1):
        d = diag.dissimilarity_to_ideal
        print(f"{i:>5} {d['l1']:>10.6f} {d['l2']:>10.6f} {d['alignment']:>10.6f} "
              f"{diag.max_rkhs_norm:>10.4f} {diag.complexity_bound:>10.6f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="kmlp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic dataset")
    gen.add_argument("--name", choices=["rectangles", "blobs"], required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", help="output directory (default: $KMLP_DATA_DIR)")
    gen.add_argument("--side", type=int, default=28)
    gen.add_argument("--d", type=int, default=2)
    gen.add_argument("--separation", type=float, default=6.0)
    gen.add_argument("--format", choices=["csv", "idx"], default="csv")
    gen.add_argument("--header", action="store_true")
    gen.set_defaults(func=cmd_gen)

    train = sub.add_parser("train", help="train a network from a JSON config")
    train.add_argument("--config", required=True)
    train.set_defaults(func=cmd_train)

    for name, func, text in (("eval", cmd_eval, "print the error rate of a model"),
                             ("inspect", cmd_inspect, "per-layer representation diagnostics")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--model", required=True)
        p.add_argument("--data", required=True, help="CSV file, or IDX images with --labels")
        p.add_argument("--labels", help="IDX labels file")
        p.add_argument("--label-column", type=int, default=-1)
        p.add_argument("--header", action="store_true")
        if name == "inspect":
            p.add_argument("--json", action="store_true", help="one JSON record per layer")
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(EXIT_INPUT, exc, exc.field)
    except DivergenceError as exc:
        return _fail(EXIT_DIVERGED, exc)
    except (KMLPError, OSError, TypeError, ValueError) as exc:
        return _fail(EXIT_INPUT, exc)


if __name__ == "__main__":
    sys.exit(main())
