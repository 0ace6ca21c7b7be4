"""Composed surrogate models and persistence.

Three learners share one dataset contract:

- E-LMC: an MLP autoencoder (disentangle/reconstruct halves) wrapped
  around a rank-r PCA basis, with one independent GP per latent
  coordinate mapping the design inputs to the PCA coefficients.
  Prediction composes GP posterior means -> inverse PCA -> reconstruct
  half -> inverse field normalization.
- LMC (PCA-GP): the same without the MLP halves; PCA is fit directly
  on the (normalized) fields.
- MLP baseline: a plain feed-forward regression from the design inputs
  straight to the flattened field.

With the identity-bypass configuration (empty MLP halves) E-LMC is by
construction the same model as LMC, which is the main correctness
anchor for the composition.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field

import numpy as np

from . import gp, mlp, pca, serialize
from .data import AffineTransform, FieldDataset, fit_normalizer

__all__ = ["TrainingConfig", "ElmcModel", "LmcModel", "MlpBaselineModel",
           "train_elmc", "predict_elmc", "predict_latent", "train_lmc",
           "predict_lmc", "train_mlp_baseline", "predict_mlp_baseline",
           "evaluate_mse", "save_model", "load_model"]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TrainingConfig:
    """Hyperparameters shared by the trainers; None widths mean the
    desk-scale defaults derived from the field dimension."""

    epochs: int = 300
    batch_size: int = 32
    lr: float = 0.001
    gp_iters: int = 500
    gp_lr: float = 0.001
    widths_disentangle: tuple | None = None
    widths_reconstruct: tuple | None = None
    latent_dim: int | None = None
    identity_bypass: bool = False
    normalize: bool = True
    final_activation: str = "relu"
    latent_activation: str = "relu"
    mlp_widths: tuple = (64, 256)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("widths_disentangle", "widths_reconstruct", "mlp_widths"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingConfig":
        kwargs = dict(d)
        for k in ("widths_disentangle", "widths_reconstruct", "mlp_widths"):
            if kwargs.get(k) is not None:
                kwargs[k] = tuple(kwargs[k])
        return cls(**kwargs)

    def resolve_widths(self, d: int):
        """Concrete (widths_dis, widths_rec, latent_dim) for field dim d."""
        if self.identity_bypass:
            latent = self.latent_dim if self.latent_dim is not None else d
            if latent != d:
                raise ValueError("identity bypass requires latent_dim == d")
            return (), (), d
        wd = self.widths_disentangle
        wr = self.widths_reconstruct
        latent = self.latent_dim
        if wd is None:
            latent = latent if latent is not None else d
            wd = (2 * d, latent)
        elif latent is None:
            latent = wd[-1] if wd else d
        if wr is None:
            wr = (2 * d, d)
        return tuple(wd), tuple(wr), latent


@dataclass(frozen=True)
class ElmcModel:
    net: mlp.MlpNet
    basis: pca.PcaBasis
    gps: list
    normalizer: AffineTransform
    grid_shape: tuple
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_latent_parts(self.basis, self.gps)


@dataclass(frozen=True)
class LmcModel:
    basis: pca.PcaBasis
    gps: list
    normalizer: AffineTransform
    grid_shape: tuple
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_latent_parts(self.basis, self.gps)


@dataclass(frozen=True)
class MlpBaselineModel:
    layers: list
    input_dim: int
    normalizer: AffineTransform
    grid_shape: tuple
    config: dict = field(default_factory=dict)


def _check_latent_parts(basis: pca.PcaBasis, gps: list) -> None:
    if basis.rank != len(gps):
        raise ValueError(f"basis rank {basis.rank} != number of GPs {len(gps)}")
    for g in gps[1:]:
        if g.train_inputs.shape != gps[0].train_inputs.shape:
            raise ValueError("all latent GPs must share the same training inputs")


def _normalizer_for(train: FieldDataset, cfg: TrainingConfig) -> AffineTransform:
    return fit_normalizer(train) if cfg.normalize else AffineTransform()


def _fit_latent_gps(X, Z, cfg: TrainingConfig, seed: int) -> list:
    return [gp.fit(X, Z[:, q], iters=cfg.gp_iters, lr=cfg.gp_lr, seed=seed)
            for q in range(Z.shape[1])]


def train_elmc(train: FieldDataset, r: int, cfg: TrainingConfig,
               seed: int) -> ElmcModel:
    """Two sequential phases: autoencoder training around the rank-r PCA
    bottleneck, then one GP per latent PCA coefficient of the final
    disentangled training fields."""
    if train.m < 2:
        raise ValueError("training requires at least 2 samples")
    normalizer = _normalizer_for(train, cfg)
    Yn = normalizer.apply(train.fields)
    wd, wr, latent = cfg.resolve_widths(train.d)
    net = mlp.init_mlp(wd, wr, train.d, latent, seed=seed,
                       final_activation=cfg.final_activation,
                       latent_activation=cfg.latent_activation)
    # seed+1 keeps batch shuffling independent of the weight init stream
    net, basis = mlp.train_autoencoder(net, Yn, r, cfg.epochs, cfg.batch_size,
                                       cfg.lr, seed=seed + 1)
    Z = pca.project(basis, mlp.forward_disentangle(net, Yn))
    gps = _fit_latent_gps(train.inputs, Z, cfg, seed)
    return ElmcModel(net=net, basis=basis, gps=gps, normalizer=normalizer,
                     grid_shape=train.grid_shape, config=cfg.to_dict())


def predict_latent(model, Xq: np.ndarray):
    """Per-latent GP posterior means and variances, each (n, r)."""
    Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
    means = np.empty((Xq.shape[0], len(model.gps)))
    variances = np.empty_like(means)
    for q, g in enumerate(model.gps):
        means[:, q], variances[:, q] = gp.predict(g, Xq)
    return means, variances


def predict_elmc(model: ElmcModel, Xq: np.ndarray) -> np.ndarray:
    """GP means -> inverse PCA -> reconstruct half -> original units."""
    Z, _ = predict_latent(model, Xq)
    Mp = pca.reconstruct(model.basis, Z)
    Yn = mlp.forward_reconstruct(model.net, Mp)
    return model.normalizer.invert(Yn)


def train_lmc(train: FieldDataset, r: int, cfg: TrainingConfig,
              seed: int) -> LmcModel:
    """PCA directly on the (normalized) fields, one GP per coefficient."""
    if train.m < 2:
        raise ValueError("training requires at least 2 samples")
    normalizer = _normalizer_for(train, cfg)
    Yn = normalizer.apply(train.fields)
    basis = pca.fit_pca(Yn, r)
    Z = pca.project(basis, Yn)
    gps = _fit_latent_gps(train.inputs, Z, cfg, seed)
    return LmcModel(basis=basis, gps=gps, normalizer=normalizer,
                    grid_shape=train.grid_shape, config=cfg.to_dict())


def predict_lmc(model: LmcModel, Xq: np.ndarray) -> np.ndarray:
    Z, _ = predict_latent(model, Xq)
    return model.normalizer.invert(pca.reconstruct(model.basis, Z))


def train_mlp_baseline(train: FieldDataset, cfg: TrainingConfig,
                       seed: int) -> MlpBaselineModel:
    """Direct regression from design inputs to normalized fields."""
    normalizer = _normalizer_for(train, cfg)
    Yn = normalizer.apply(train.fields)
    widths = tuple(cfg.mlp_widths) + (train.d,)
    layers = mlp.init_layers(train.l, widths, seed=seed,
                             final_activation=cfg.final_activation)
    mlp.train_supervised(layers, train.inputs, Yn, cfg.epochs,
                         cfg.batch_size, cfg.lr, seed=seed + 1)
    return MlpBaselineModel(layers=layers, input_dim=train.l,
                            normalizer=normalizer, grid_shape=train.grid_shape,
                            config=cfg.to_dict())


def predict_mlp_baseline(model: MlpBaselineModel, Xq: np.ndarray) -> np.ndarray:
    Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
    if Xq.shape[1] != model.input_dim:
        raise ValueError(f"query dimension {Xq.shape[1]} != {model.input_dim}")
    return model.normalizer.invert(mlp.forward_layers(model.layers, Xq))


def evaluate_mse(pred: np.ndarray, truth: np.ndarray) -> float:
    """Mean squared error over all entries, in whatever units are given
    (callers pass original field units)."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    diff = pred - truth
    return float(np.mean(diff * diff))


# ---------------------------------------------------------------------------
# persistence

def _layer_to_dict(ly: mlp.Layer) -> dict:
    return {"w": ly.weight, "b": ly.bias, "act": ly.activation}


def _layer_from_dict(d: dict) -> mlp.Layer:
    return mlp.Layer(weight=np.array(d["w"], dtype=float),
                     bias=np.array(d["b"], dtype=float),
                     activation=d["act"])


def _pca_to_dict(b: pca.PcaBasis) -> dict:
    return {"mean": b.mean, "basis": b.basis, "variances": b.component_variances}


def _pca_from_dict(d: dict) -> pca.PcaBasis:
    return pca.PcaBasis(mean=np.array(d["mean"], dtype=float),
                        basis=np.array(d["basis"], dtype=float),
                        component_variances=np.array(d["variances"], dtype=float))


def _gp_to_dict(g: gp.GpModel) -> dict:
    return {"log_signal_variance": g.hyper.log_signal_variance,
            "log_lengthscales": g.hyper.log_lengthscales,
            "log_noise_variance": g.hyper.log_noise_variance,
            "jitter": g.jitter,
            "train_inputs": g.train_inputs,
            "train_targets": g.train_targets}


def _gp_from_dict(d: dict) -> gp.GpModel:
    hyper = gp.RbfHyperparams(
        log_signal_variance=float(d["log_signal_variance"]),
        log_lengthscales=np.array(d["log_lengthscales"], dtype=float),
        log_noise_variance=float(d["log_noise_variance"]))
    return gp.GpModel(hyper=hyper,
                      train_inputs=np.array(d["train_inputs"], dtype=float),
                      train_targets=np.array(d["train_targets"], dtype=float),
                      jitter=float(d["jitter"]))


def save_model(model, path) -> None:
    """Write any of the three model kinds as a single JSON file."""
    doc = {"schema": SCHEMA_VERSION}
    if isinstance(model, ElmcModel):
        doc["kind"] = "elmc"
    elif isinstance(model, LmcModel):
        doc["kind"] = "lmc"
    elif isinstance(model, MlpBaselineModel):
        doc["kind"] = "mlp"
    else:
        raise TypeError(f"cannot save object of type {type(model).__name__}")
    doc["grid"] = list(model.grid_shape)
    doc["normalizer"] = model.normalizer.to_dict()
    if isinstance(model, ElmcModel):
        doc["mlp"] = {
            "disentangle": [_layer_to_dict(ly) for ly in model.net.disentangle_layers],
            "reconstruct": [_layer_to_dict(ly) for ly in model.net.reconstruct_layers],
            "d": model.net.d,
            "latent_dim": model.net.latent_dim,
        }
    elif isinstance(model, MlpBaselineModel):
        doc["mlp"] = {"layers": [_layer_to_dict(ly) for ly in model.layers],
                      "input_dim": model.input_dim}
    if isinstance(model, (ElmcModel, LmcModel)):
        doc["pca"] = _pca_to_dict(model.basis)
        doc["gps"] = [_gp_to_dict(g) for g in model.gps]
    doc["config"] = model.config
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(serialize.dumps(doc))
        fh.write("\n")


def load_model(path):
    """Inverse of save_model; validates schema and latent invariants."""
    with open(path) as fh:
        doc = serialize.loads(fh.read())
    if doc.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema {doc.get('schema')!r}")
    kind = doc.get("kind")
    grid = tuple(int(v) for v in doc["grid"])
    normalizer = AffineTransform.from_dict(doc["normalizer"])
    config = doc.get("config", {})
    if kind == "mlp":
        layers = [_layer_from_dict(d) for d in doc["mlp"]["layers"]]
        return MlpBaselineModel(layers=layers,
                                input_dim=int(doc["mlp"]["input_dim"]),
                                normalizer=normalizer, grid_shape=grid,
                                config=config)
    if kind not in ("elmc", "lmc"):
        raise ValueError(f"unknown model kind {kind!r}")
    basis = _pca_from_dict(doc["pca"])
    gps = [_gp_from_dict(d) for d in doc["gps"]]
    if kind == "lmc":
        return LmcModel(basis=basis, gps=gps, normalizer=normalizer,
                        grid_shape=grid, config=config)
    m = doc["mlp"]
    net = mlp.MlpNet(
        disentangle_layers=[_layer_from_dict(d) for d in m["disentangle"]],
        reconstruct_layers=[_layer_from_dict(d) for d in m["reconstruct"]],
        d=int(m["d"]), latent_dim=int(m["latent_dim"]))
    return ElmcModel(net=net, basis=basis, gps=gps, normalizer=normalizer,
                     grid_shape=grid, config=config)
