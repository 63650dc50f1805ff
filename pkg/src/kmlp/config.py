"""Experiment configuration files (JSON) and their validation.

Example::

    {
      "seed": 0,
      "output_dir": "runs/blobs",
      "dataset": {"generator": "blobs", "params": {"n": 200, "d": 2, "separation": 6},
                  "split": [0.6, 0.2, 0.2]},
      "architecture": {"widths": [2, 1], "sigmas": [1.0, 1.0], "a": 0.0},
      "train": {"learning_rate": 0.01, "epochs": 100, "batch_size": 32}
    }

``dataset`` takes exactly one of ``generator``, ``csv`` or ``idx``.  Unknown
keys anywhere are rejected with the dotted path of the offending field.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict

from .data import LabeledDataset, gen_blobs, gen_rectangles, load_csv, load_idx, resolve, split
from .errors import InvalidArgument
from .seeding import derive_seed
from .training import NetSpec, TrainConfig

GENERATORS = {"blobs": gen_blobs, "rectangles": gen_rectangles}
_GEN_PARAMS = {"blobs": {"n", "d", "separation"}, "rectangles": {"n", "side"}}
_TRAIN_FIELDS = {f.name for f in dataclasses.fields(TrainConfig)} - {"seed"}


class ConfigError(InvalidArgument):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class ExperimentConfig:
    seed: int
    output_dir: Path
    dataset: Dict[str, Any]
    net: NetSpec
    train: TrainConfig
    digest: str
    base_dir: Path = Path(".")

    def _path(self, p):
        p = Path(p)
        if not p.is_absolute() and (self.base_dir / p).exists():
            return self.base_dir / p
        return resolve(p)

    def load_dataset(self) -> LabeledDataset:
        src = self.dataset
        if "generator" in src:
            params = dict(src.get("params", {}))
            ds = GENERATORS[src["generator"]](seed=derive_seed(self.seed, "data"), **params)
        elif "csv" in src:
            ds = load_csv(self._path(src["csv"]), src.get("label_column", -1),
                          src.get("header", False), src.get("normalize", False))
        else:
            ds = load_idx(self._path(src["idx"]["images"]), self._path(src["idx"]["labels"]))
        return split(ds, src.get("split", [0.8, 0.1, 0.1]), derive_seed(self.seed, "split"))


def _check_keys(obj, allowed, path, required=()):
    if not isinstance(obj, dict):
        raise ConfigError(path or "<root>", "expected an object")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown key")
    for key in required:
        if key not in obj:
            raise ConfigError(f"{path}.{key}" if path else key, "missing required key")


def _dataset_section(src):
    _check_keys(src, {"generator", "params", "csv", "label_column", "header", "normalize",
                      "idx", "split"}, "dataset")
    sources = [k for k in ("generator", "csv", "idx") if k in src]
    if len(sources) != 1:
        raise ConfigError("dataset", "give exactly one of generator, csv, idx")
    if "generator" in src:
        name = src["generator"]
        if name not in GENERATORS:
            raise ConfigError("dataset.generator", f"unknown generator {name!r}")
        _check_keys(src.get("params", {}), _GEN_PARAMS[name], "dataset.params")
    if "idx" in src:
        _check_keys(src["idx"], {"images", "labels"}, "dataset.idx", ("images", "labels"))
    if "split" in src:
        fr = src["split"]
        if not isinstance(fr, list) or len(fr) != 3 or abs(sum(fr) - 1) > 1e-9:
            raise ConfigError("dataset.split", "three fractions summing to 1")
    return src


def parse_config(raw: dict, base_dir=".") -> ExperimentConfig:
    _check_keys(raw, {"seed", "output_dir", "dataset", "architecture", "train"}, "",
                ("dataset", "architecture"))
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed", "must be an integer")
    dataset = _dataset_section(raw["dataset"])
    arch = raw["architecture"]
    _check_keys(arch, {"widths", "sigmas", "a"}, "architecture", ("widths", "sigmas"))
    try:
        net = NetSpec(arch["widths"], arch["sigmas"], arch.get("a", 0.0))
    except (InvalidArgument, TypeError, ValueError) as exc:
        raise ConfigError("architecture", str(exc)) from None
    train = raw.get("train", {})
    _check_keys(train, _TRAIN_FIELDS, "train")
    try:
        config = TrainConfig(seed=seed, **train)
    except (InvalidArgument, TypeError) as exc:
        raise ConfigError("train", str(exc)) from None
    if config.retention is not None and len(config.retention) != net.depth:
        raise ConfigError("train.retention", "needs one fraction per layer")
    out = Path(raw.get("output_dir", "run"))
    if not out.is_absolute():
        out = Path(base_dir) / out
    digest = hashlib.sha256(json.dumps(raw, sort_keys=True).encode()).hexdigest()
    return ExperimentConfig(seed, out, dataset, net, config, digest, Path(base_dir))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(raw, path.parent)
