"""Dataset container, on-disk format, splits, and field normalization.

A dataset pairs low-dimensional design inputs (m x l) with flattened
spatial fields (m x d) sampled on an H x W grid, d = H*W, row-major
(index = row*W + col). On disk a dataset is a directory with
``inputs.csv``, ``fields.csv`` (headerless CSV) and ``meta.json``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import serialize
from .optim import make_rng

__all__ = ["AffineTransform", "FieldDataset", "load_dataset", "save_dataset",
           "split", "fit_normalizer"]


@dataclass(frozen=True)
class AffineTransform:
    """Invertible scalar map v -> scale*v + offset applied elementwise."""

    scale: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if not (self.scale > 0.0):
            raise ValueError(f"scale must be positive, got {self.scale}")

    def apply(self, values):
        return self.scale * np.asarray(values, dtype=float) + self.offset

    def invert(self, values):
        return (np.asarray(values, dtype=float) - self.offset) / self.scale

    def to_dict(self) -> dict:
        return {"scale": self.scale, "offset": self.offset}

    @classmethod
    def from_dict(cls, d: dict) -> "AffineTransform":
        return cls(scale=float(d["scale"]), offset=float(d["offset"]))


def _default_meta() -> dict:
    return {"generator": "unknown", "seed": 0, "transform": {"scale": 1.0, "offset": 0.0}}


@dataclass(frozen=True)
class FieldDataset:
    """Paired design inputs and flattened spatial fields.

    Attributes
    ----------
    inputs : (m, l) array of design inputs.
    fields : (m, d) array of field values, row-major over the grid.
    grid_shape : (H, W) with d = H*W.
    meta : generator name, seed, and value-range transform.
    """

    inputs: np.ndarray
    fields: np.ndarray
    grid_shape: tuple
    meta: dict = field(default_factory=_default_meta)

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=float)
        fields = np.asarray(self.fields, dtype=float)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "fields", fields)
        object.__setattr__(self, "grid_shape", tuple(int(v) for v in self.grid_shape))
        if inputs.ndim != 2 or fields.ndim != 2:
            raise ValueError("inputs and fields must be 2-D arrays")
        if inputs.shape[0] != fields.shape[0]:
            raise ValueError(
                f"row-count mismatch: {inputs.shape[0]} inputs vs {fields.shape[0]} fields"
            )
        H, W = self.grid_shape
        if fields.shape[1] != H * W:
            raise ValueError(
                f"field dimension {fields.shape[1]} does not equal grid {H}x{W} = {H * W}"
            )
        if not (np.isfinite(inputs).all() and np.isfinite(fields).all()):
            raise ValueError("dataset contains non-finite values")

    @property
    def m(self) -> int:
        return self.inputs.shape[0]

    @property
    def l(self) -> int:
        return self.inputs.shape[1]

    @property
    def d(self) -> int:
        return self.fields.shape[1]


def save_dataset(ds: FieldDataset, dir_path) -> None:
    """Write inputs.csv, fields.csv and meta.json into ``dir_path``."""
    os.makedirs(dir_path, exist_ok=True)
    serialize.write_matrix(os.path.join(dir_path, "inputs.csv"), ds.inputs)
    serialize.write_matrix(os.path.join(dir_path, "fields.csv"), ds.fields)
    meta = {
        "grid": list(ds.grid_shape),
        "n_samples": ds.m,
        "input_dim": ds.l,
        "generator": ds.meta.get("generator", "unknown"),
        "seed": int(ds.meta.get("seed", 0)),
        "transform": ds.meta.get("transform", {"scale": 1.0, "offset": 0.0}),
    }
    with open(os.path.join(dir_path, "meta.json"), "w") as fh:
        fh.write(serialize.dumps(meta))
        fh.write("\n")


def load_dataset(dir_path) -> FieldDataset:
    """Load a dataset directory written by :func:`save_dataset`."""
    for name in ("inputs.csv", "fields.csv", "meta.json"):
        if not os.path.exists(os.path.join(dir_path, name)):
            raise ValueError(f"missing file: {os.path.join(dir_path, name)}")
    with open(os.path.join(dir_path, "meta.json")) as fh:
        meta = serialize.loads(fh.read())
    H, W = (int(v) for v in meta["grid"])
    inputs = serialize.read_matrix(os.path.join(dir_path, "inputs.csv"),
                                   n_cols=int(meta["input_dim"]))
    fields = serialize.read_matrix(os.path.join(dir_path, "fields.csv"), n_cols=H * W)
    return FieldDataset(
        inputs=inputs,
        fields=fields,
        grid_shape=(H, W),
        meta={
            "generator": meta.get("generator", "unknown"),
            "seed": int(meta.get("seed", 0)),
            "transform": meta.get("transform", {"scale": 1.0, "offset": 0.0}),
        },
    )


def split(ds: FieldDataset, n_train: int, seed: int):
    """Seeded disjoint train/test partition; the test set is never empty."""
    if not (0 < n_train < ds.m):
        raise ValueError(f"n_train must be in (0, {ds.m}), got {n_train}")
    perm = make_rng(seed).permutation(ds.m)
    tr, te = perm[:n_train], perm[n_train:]
    train = replace(ds, inputs=ds.inputs[tr], fields=ds.fields[tr])
    test = replace(ds, inputs=ds.inputs[te], fields=ds.fields[te])
    return train, test


def fit_normalizer(ds: FieldDataset) -> AffineTransform:
    """Affine map sending the dataset field range [min, max] onto [0, 1].

    Degenerate range (max == min) keeps scale 1 and just shifts the
    constant value to 0.
    """
    if ds.fields.size == 0:
        raise ValueError("cannot fit a normalizer on an empty dataset")
    lo = float(ds.fields.min())
    hi = float(ds.fields.max())
    if hi > lo:
        scale = 1.0 / (hi - lo)
        return AffineTransform(scale=scale, offset=-lo * scale)
    return AffineTransform(scale=1.0, offset=-lo)
