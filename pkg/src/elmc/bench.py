"""Benchmark sweeps over (method, rank, train_size, seed) cells.

Each cell splits the dataset with its own seed, trains one model,
predicts the held-out fields and records the MSE in original units.
Failed cells are recorded with an error status instead of aborting the
sweep. Cell rows are sorted deterministically and followed by
mean/std aggregate rows per (method, rank, train_size) group.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import models, serialize
from .data import FieldDataset, load_dataset, split
from .datagen import GeneratorSpec, generate_dataset
from .models import TrainingConfig

__all__ = ["BenchConfig", "run_bench", "rows_to_csv", "CSV_HEADER"]

CSV_HEADER = "method,rank,train_size,seed,mse,status,wall_seconds"

METHODS = ("elmc", "lmc", "mlp")


@dataclass(frozen=True)
class BenchConfig:
    train_sizes: tuple
    methods: tuple = ("elmc", "lmc")
    ranks: tuple = (1, 2, 5, 10)
    seeds: tuple = (0, 1, 2, 3, 4)
    dataset: str | None = None
    generator: dict | None = None
    training: TrainingConfig = field(default_factory=TrainingConfig)
    record_timing: bool = True

    def __post_init__(self):
        for name in ("train_sizes", "methods", "ranks", "seeds"):
            value = tuple(getattr(self, name))
            object.__setattr__(self, name, value)
            if not value:
                raise ValueError(f"{name} must be non-empty")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
        if max(self.ranks) > min(self.train_sizes):
            raise ValueError(
                f"ranks {self.ranks} exceed smallest train size {min(self.train_sizes)}"
            )
        if (self.dataset is None) == (self.generator is None):
            raise ValueError("exactly one of dataset or generator must be given")

    @classmethod
    def from_dict(cls, d: dict) -> "BenchConfig":
        kwargs = {k: d[k] for k in ("train_sizes", "methods", "ranks", "seeds",
                                    "dataset", "generator", "record_timing")
                  if k in d}
        if "training" in d:
            kwargs["training"] = TrainingConfig.from_dict(d["training"])
        return cls(**kwargs)


def _load_bench_dataset(cfg: BenchConfig) -> FieldDataset:
    if cfg.dataset is not None:
        return load_dataset(cfg.dataset)
    g = dict(cfg.generator)
    spec = GeneratorSpec(name=g["name"],
                         grid_shape=tuple(g.get("grid", (32, 32))),
                         n_samples=int(g.get("n_samples", 100)),
                         seed=int(g.get("seed", 0)))
    return generate_dataset(spec)


def run_cell(ds: FieldDataset, method: str, rank, train_size: int, seed: int,
             training: TrainingConfig):
    """Train and evaluate one sweep cell; returns the test MSE."""
    train, test = split(ds, train_size, seed)
    if method == "elmc":
        model = models.train_elmc(train, rank, training, seed)
        pred = models.predict_elmc(model, test.inputs)
    elif method == "lmc":
        model = models.train_lmc(train, rank, training, seed)
        pred = models.predict_lmc(model, test.inputs)
    elif method == "mlp":
        model = models.train_mlp_baseline(train, training, seed)
        pred = models.predict_mlp_baseline(model, test.inputs)
    else:
        raise ValueError(f"unknown method {method!r}")
    return models.evaluate_mse(pred, test.fields)


def run_bench(cfg: BenchConfig, progress=None) -> list:
    """Execute every sweep cell and return the result rows (dicts)."""
    ds = _load_bench_dataset(cfg)
    # mlp ignores rank; run it once per (size, seed) with a blank rank cell
    cells = []
    for method in sorted(cfg.methods):
        ranks = [""] if method == "mlp" else sorted(cfg.ranks)
        for rank in ranks:
            for size in sorted(cfg.train_sizes):
                for seed in sorted(cfg.seeds):
                    cells.append((method, rank, size, seed))
    rows = []
    group_rows: dict = {}
    for method, rank, size, seed in cells:
        if progress is not None:
            progress(method, rank, size, seed)
        t0 = time.perf_counter()
        try:
            mse = run_cell(ds, method, rank, size, seed, cfg.training)
            status = "ok"
        except Exception as exc:
            mse = None
            status = f"error:{type(exc).__name__}"
        wall = time.perf_counter() - t0 if cfg.record_timing else 0.0
        row = {"method": method, "rank": rank, "train_size": size,
               "seed": seed, "mse": mse, "status": status,
               "wall_seconds": wall}
        rows.append(row)
        group_rows.setdefault((method, rank, size), []).append(row)
    out = []
    emitted = set()
    for row in rows:
        out.append(row)
        key = (row["method"], row["rank"], row["train_size"])
        if key in emitted:
            continue
        group = group_rows[key]
        if group[-1] is row:
            emitted.add(key)
            out.extend(_aggregate(group))
    return out


def _aggregate(group: list) -> list:
    ok = [r for r in group if r["status"] == "ok"]
    method, rank, size = group[0]["method"], group[0]["rank"], group[0]["train_size"]
    walls = [r["wall_seconds"] for r in ok]
    mses = [r["mse"] for r in ok]
    status = "ok" if len(ok) == len(group) else "partial" if ok else "error"
    mean_row = {"method": method, "rank": rank, "train_size": size,
                "seed": "mean", "mse": float(np.mean(mses)) if ok else None,
                "status": status,
                "wall_seconds": float(np.mean(walls)) if ok else 0.0}
    std_row = {"method": method, "rank": rank, "train_size": size,
               "seed": "std", "mse": float(np.std(mses)) if ok else None,
               "status": status,
               "wall_seconds": float(np.std(walls)) if ok else 0.0}
    return [mean_row, std_row]


def rows_to_csv(rows: list) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        mse = serialize.format_real(r["mse"]) if r["mse"] is not None else ""
        lines.append(",".join([
            str(r["method"]), str(r["rank"]), str(r["train_size"]),
            str(r["seed"]), mse, r["status"],
            format(r["wall_seconds"], ".3f"),
        ]))
    return "\n".join(lines) + "\n"
