"""Deterministic analytic spatial-field generators.

Each generator maps a 3-dimensional design input in [0,1]^3 to a field
on an H x W grid of cell centers x = ((i+1/2)/H, (j+1/2)/W), flattened
row-major. Three families with controlled structure are provided:

- ``front``: a sharp tanh interface whose position along x1 varies
  nonlinearly with the inputs (a hard case for linear bases),
- ``bump``:  a moving Gaussian bump with input-dependent width,
- ``linear``: an exact rank-3 combination of fixed sine modes with
  smooth coefficients (a favorable control for linear bases).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import FieldDataset
from .optim import make_rng

__all__ = ["GeneratorSpec", "gen_front_field", "gen_bump_field",
           "gen_linear_field", "generate_dataset", "GENERATORS"]

INPUT_DIM = 3


@dataclass(frozen=True)
class GeneratorSpec:
    name: str
    grid_shape: tuple = (32, 32)
    n_samples: int = 100
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "grid_shape", tuple(int(v) for v in self.grid_shape))
        H, W = self.grid_shape
        if H < 2 or W < 2:
            raise ValueError(f"grid must be at least 2x2, got {H}x{W}")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.name not in GENERATORS:
            raise ValueError(f"unknown generator {self.name!r}; "
                             f"choose from {sorted(GENERATORS)}")


def _grid_coords(grid_shape):
    H, W = grid_shape
    x1 = (np.arange(H) + 0.5) / H
    x2 = (np.arange(W) + 0.5) / W
    return np.meshgrid(x1, x2, indexing="ij")


def gen_front_field(xi, grid_shape) -> np.ndarray:
    """Smoothed moving interface: y = (1 + tanh((x1 - f(x2))/w)) / 2 with
    front position f(x2) = 0.3 + 0.4*xi1 + 0.15*xi2*sin(2pi(x2 + xi3))
    and width w = 0.05. Strictly increasing in x1 for each fixed x2."""
    xi = np.asarray(xi, dtype=float)
    X1, X2 = _grid_coords(grid_shape)
    f = 0.3 + 0.4 * xi[0] + 0.15 * xi[1] * np.sin(2.0 * np.pi * (X2 + xi[2]))
    y = 0.5 * (1.0 + np.tanh((X1 - f) / 0.05))
    return y.ravel()


def gen_bump_field(xi, grid_shape) -> np.ndarray:
    """Gaussian bump at c = (0.2 + 0.6*xi1, 0.2 + 0.6*xi2) with width
    s = 0.05 + 0.15*xi3."""
    xi = np.asarray(xi, dtype=float)
    X1, X2 = _grid_coords(grid_shape)
    c1 = 0.2 + 0.6 * xi[0]
    c2 = 0.2 + 0.6 * xi[1]
    s = 0.05 + 0.15 * xi[2]
    y = np.exp(-((X1 - c1) ** 2 + (X2 - c2) ** 2) / (2.0 * s * s))
    return y.ravel()


def gen_linear_field(xi, grid_shape) -> np.ndarray:
    """Exact rank-3 field: sum_q sin(pi*xi_q) * v_q(x) over the fixed
    modes v1 = sin(pi x1)sin(pi x2), v2 = sin(2pi x1)sin(pi x2),
    v3 = sin(pi x1)sin(2pi x2)."""
    xi = np.asarray(xi, dtype=float)
    X1, X2 = _grid_coords(grid_shape)
    modes = (
        np.sin(np.pi * X1) * np.sin(np.pi * X2),
        np.sin(2.0 * np.pi * X1) * np.sin(np.pi * X2),
        np.sin(np.pi * X1) * np.sin(2.0 * np.pi * X2),
    )
    g = np.sin(np.pi * xi)
    y = g[0] * modes[0] + g[1] * modes[1] + g[2] * modes[2]
    return y.ravel()


GENERATORS = {
    "front": gen_front_field,
    "bump": gen_bump_field,
    "linear": gen_linear_field,
}


def generate_dataset(spec: GeneratorSpec) -> FieldDataset:
    """Draw n_samples inputs uniformly on [0,1]^3 from the seeded PRNG
    and evaluate the named generator on each."""
    gen = GENERATORS[spec.name]
    rng = make_rng(spec.seed)
    inputs = rng.random((spec.n_samples, INPUT_DIM))
    fields = np.stack([gen(xi, spec.grid_shape) for xi in inputs])
    return FieldDataset(
        inputs=inputs,
        fields=fields,
        grid_shape=spec.grid_shape,
        meta={"generator": spec.name, "seed": spec.seed,
              "transform": {"scale": 1.0, "offset": 0.0}},
    )
