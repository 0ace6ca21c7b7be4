"""Fully-connected network with backprop: the disentangle half maps a
field y to a latent h = ReLU(b + W y) layer by layer, the reconstruct
half maps a latent back to a field y_hat = ReLU(b' + W' h'). Training
minimizes MSE through an optional PCA bottleneck between the halves
(project then reconstruct with a fixed basis), which is how the
autoencoder around the linear-coregionalization core is trained.

Width lists give the output dimension of every layer in a half; an
empty list means that half is the identity map (the bypass mode under
which the composed model degenerates to plain PCA-GP).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .optim import AdamState, adam_step, make_rng
from .pca import PcaBasis, fit_pca

__all__ = ["Layer", "MlpNet", "init_mlp", "forward_disentangle",
           "forward_reconstruct", "mse_loss", "backward", "pack_params",
           "unpack_params", "train_autoencoder", "init_layers",
           "forward_layers", "supervised_gradient", "train_supervised"]

_ACTIVATIONS = ("relu", "identity")


def _act(name: str, pre: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(pre, 0.0)
    return pre


def _act_grad(name: str, pre: np.ndarray) -> np.ndarray:
    # ReLU subgradient at exactly 0 is 0.
    if name == "relu":
        return (pre > 0).astype(float)
    return np.ones_like(pre)


@dataclass
class Layer:
    """One affine layer out = act(X @ W^T + b); weight is (out_dim, in_dim)."""

    weight: np.ndarray
    bias: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ValueError("weight must be 2-D with one bias per output unit")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


@dataclass
class MlpNet:
    """Disentangle and reconstruct layer stacks around a latent space."""

    disentangle_layers: list
    reconstruct_layers: list
    d: int
    latent_dim: int

    def __post_init__(self):
        _check_chain(self.disentangle_layers, self.d, self.latent_dim, "disentangle")
        _check_chain(self.reconstruct_layers, self.latent_dim, self.d, "reconstruct")


def _check_chain(layers, in_dim, out_dim, label):
    if not layers:
        if in_dim != out_dim:
            raise ValueError(
                f"{label}: empty layer list is the identity, so input dim "
                f"{in_dim} must equal output dim {out_dim}"
            )
        return
    dims = [in_dim] + [ly.out_dim for ly in layers]
    for ly, din in zip(layers, dims):
        if ly.in_dim != din:
            raise ValueError(f"{label}: layer expects {ly.in_dim} inputs, got {din}")
    if dims[-1] != out_dim:
        raise ValueError(f"{label}: final layer emits {dims[-1]}, expected {out_dim}")


def init_mlp(widths_disentangle, widths_reconstruct, d: int,
             latent_dim: int | None = None, seed: int = 0,
             final_activation: str = "relu",
             latent_activation: str = "relu") -> MlpNet:
    """Seeded network init: weights uniform in +-sqrt(6/fan_in), zero biases.

    ``widths_disentangle`` must end at ``latent_dim`` and
    ``widths_reconstruct`` at ``d`` when non-empty; empty lists build the
    identity bypass. The reconstruct half's last activation is
    ``final_activation`` and the disentangle half's is
    ``latent_activation``; everything else is ReLU.
    """
    if latent_dim is None:
        latent_dim = d
    widths_disentangle = list(widths_disentangle)
    widths_reconstruct = list(widths_reconstruct)
    if widths_disentangle and widths_disentangle[-1] != latent_dim:
        raise ValueError(
            f"disentangle widths must end at latent_dim={latent_dim}, "
            f"got {widths_disentangle}"
        )
    if widths_reconstruct and widths_reconstruct[-1] != d:
        raise ValueError(f"reconstruct widths must end at d={d}, got {widths_reconstruct}")
    rng = make_rng(seed)

    def build(in_dim, widths, last_act):
        layers = []
        for k, out in enumerate(widths):
            bound = np.sqrt(6.0 / in_dim)
            W = rng.uniform(-bound, bound, size=(out, in_dim))
            act = last_act if k == len(widths) - 1 else "relu"
            layers.append(Layer(weight=W, bias=np.zeros(out), activation=act))
            in_dim = out
        return layers

    dis = build(d, widths_disentangle, latent_activation)
    rec = build(latent_dim, widths_reconstruct, final_activation)
    return MlpNet(disentangle_layers=dis, reconstruct_layers=rec,
                  d=d, latent_dim=latent_dim)


def _forward(layers, X, caches=None):
    out = X
    for ly in layers:
        pre = out @ ly.weight.T + ly.bias
        if caches is not None:
            caches.append((out, pre))
        out = _act(ly.activation, pre)
        if not np.isfinite(out).all():
            raise ValueError("non-finite activation in forward pass")
    return out


def forward_disentangle(net: MlpNet, Y: np.ndarray) -> np.ndarray:
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[1] != net.d:
        raise ValueError(f"expected {net.d} columns, got {Y.shape[1]}")
    return _forward(net.disentangle_layers, Y)


def forward_reconstruct(net: MlpNet, Hp: np.ndarray) -> np.ndarray:
    Hp = np.atleast_2d(np.asarray(Hp, dtype=float))
    if Hp.shape[1] != net.latent_dim:
        raise ValueError(f"expected {net.latent_dim} columns, got {Hp.shape[1]}")
    return _forward(net.reconstruct_layers, Hp)


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff))


def pack_params(net: MlpNet) -> np.ndarray:
    """Flatten all weights and biases (disentangle first, W before b)."""
    parts = []
    for ly in net.disentangle_layers + net.reconstruct_layers:
        parts.append(ly.weight.ravel())
        parts.append(ly.bias)
    if not parts:
        return np.zeros(0)
    return np.concatenate(parts)


def unpack_params(net: MlpNet, vec: np.ndarray) -> None:
    """Write a flat parameter vector (pack_params order) back into net."""
    pos = 0
    for ly in net.disentangle_layers + net.reconstruct_layers:
        n = ly.weight.size
        ly.weight = vec[pos:pos + n].reshape(ly.weight.shape).copy()
        pos += n
        n = ly.bias.size
        ly.bias = vec[pos:pos + n].copy()
        pos += n
    if pos != vec.size:
        raise ValueError(f"parameter vector length {vec.size}, expected {pos}")


def _forward_full(net: MlpNet, Y, bottleneck: PcaBasis | None,
                  caches_dis=None, caches_rec=None):
    H = _forward(net.disentangle_layers, Y, caches_dis)
    if bottleneck is not None:
        Z = (H - bottleneck.mean) @ bottleneck.basis
        Hp = Z @ bottleneck.basis.T + bottleneck.mean
    else:
        Hp = H
    return _forward(net.reconstruct_layers, Hp, caches_rec)


def _backward_layers(layers, caches, dout):
    grads = []
    for ly, (x_in, pre) in zip(reversed(layers), reversed(caches)):
        dpre = dout * _act_grad(ly.activation, pre)
        grads.append((dpre.T @ x_in, dpre.sum(axis=0)))
        dout = dpre @ ly.weight
    grads.reverse()
    return grads, dout


def backward(net: MlpNet, Y: np.ndarray, target: np.ndarray,
             bottleneck: PcaBasis | None = None) -> np.ndarray:
    """Gradient of the full MSE reconstruction loss w.r.t. all parameters.

    The loss is mse(reconstruct(pca_roundtrip(disentangle(Y))), target),
    with the PCA round trip treated as the fixed linear map V V^T
    (centering drops out of the gradient). Returns a flat vector in
    pack_params order.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    target = np.atleast_2d(np.asarray(target, dtype=float))
    caches_dis: list = []
    caches_rec: list = []
    pred = _forward_full(net, Y, bottleneck, caches_dis, caches_rec)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    dout = 2.0 * (pred - target) / pred.size
    grads_rec, dHp = _backward_layers(net.reconstruct_layers, caches_rec, dout)
    if bottleneck is not None:
        dH = (dHp @ bottleneck.basis) @ bottleneck.basis.T
    else:
        dH = dHp
    grads_dis, _ = _backward_layers(net.disentangle_layers, caches_dis, dH)
    parts = []
    for dW, db in grads_dis + grads_rec:
        parts.append(dW.ravel())
        parts.append(db)
    if not parts:
        return np.zeros(0)
    return np.concatenate(parts)


def _train_minibatch(net: MlpNet, X, T, rank, epochs, batch_size, lr, seed):
    """Shared minibatch Adam loop; ``rank`` not None adds the PCA
    bottleneck, refit on the full set's latents at each epoch start and
    once more after the final update."""
    X = np.asarray(X, dtype=float)
    T = np.asarray(T, dtype=float)
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    m = X.shape[0]
    rng = make_rng(seed)
    params = pack_params(net)
    state = AdamState.initial(params.size, lr=lr)

    def refit():
        return fit_pca(_forward(net.disentangle_layers, X), rank)

    basis = refit() if rank is not None else None
    for epoch in range(epochs):
        if rank is not None:
            basis = refit()
        order = rng.permutation(m)
        for start in range(0, m, batch_size):
            idx = order[start:start + batch_size]
            grads = backward(net, X[idx], T[idx], basis)
            if grads.size == 0:
                continue
            loss = mse_loss(_forward_full(net, X[idx], basis), T[idx])
            if not np.isfinite(loss):
                raise ValueError(
                    f"non-finite loss at epoch {epoch}, batch {start // batch_size}"
                )
            params, state = adam_step(params, grads, state)
            unpack_params(net, params)
    if rank is not None:
        basis = refit()
    return net, basis


def train_autoencoder(net: MlpNet, Y: np.ndarray, r: int, epochs: int,
                      batch_size: int, lr: float, seed: int):
    """Train the two halves to reconstruct Y through a rank-r PCA
    bottleneck on the disentangled latents. Returns (net, final basis)."""
    Y = np.asarray(Y, dtype=float)
    if not (1 <= r <= min(Y.shape[0], net.latent_dim)):
        raise ValueError(
            f"rank must be in [1, {min(Y.shape[0], net.latent_dim)}], got {r}"
        )
    return _train_minibatch(net, Y, Y, r, epochs, batch_size, lr, seed)


def _pack_layers(layers) -> np.ndarray:
    parts = []
    for ly in layers:
        parts.append(ly.weight.ravel())
        parts.append(ly.bias)
    if not parts:
        return np.zeros(0)
    return np.concatenate(parts)


def _unpack_layers(layers, vec) -> None:
    pos = 0
    for ly in layers:
        n = ly.weight.size
        ly.weight = vec[pos:pos + n].reshape(ly.weight.shape).copy()
        pos += n
        n = ly.bias.size
        ly.bias = vec[pos:pos + n].copy()
        pos += n


def init_layers(in_dim: int, widths, seed: int,
                final_activation: str = "relu") -> list:
    """Seeded stand-alone layer stack in_dim -> widths[0] -> ... -> widths[-1]."""
    rng = make_rng(seed)
    layers = []
    for k, out in enumerate(widths):
        bound = np.sqrt(6.0 / in_dim)
        W = rng.uniform(-bound, bound, size=(out, in_dim))
        act = final_activation if k == len(widths) - 1 else "relu"
        layers.append(Layer(weight=W, bias=np.zeros(out), activation=act))
        in_dim = out
    return layers


def forward_layers(layers, X: np.ndarray) -> np.ndarray:
    return _forward(layers, np.atleast_2d(np.asarray(X, dtype=float)))


def supervised_gradient(layers, X: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Flat MSE-loss gradient for a stand-alone layer stack."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T = np.atleast_2d(np.asarray(T, dtype=float))
    caches: list = []
    pred = _forward(layers, X, caches)
    if pred.shape != T.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {T.shape}")
    grads, _ = _backward_layers(layers, caches, 2.0 * (pred - T) / pred.size)
    parts = []
    for dW, db in grads:
        parts.append(dW.ravel())
        parts.append(db)
    return np.concatenate(parts) if parts else np.zeros(0)


def train_supervised(layers, X: np.ndarray, T: np.ndarray, epochs: int,
                     batch_size: int, lr: float, seed: int):
    """Minibatch Adam regression of T on X for a stand-alone layer stack
    (the direct input-to-field baseline)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T = np.atleast_2d(np.asarray(T, dtype=float))
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    m = X.shape[0]
    rng = make_rng(seed)
    params = _pack_layers(layers)
    state = AdamState.initial(params.size, lr=lr)
    for epoch in range(epochs):
        order = rng.permutation(m)
        for start in range(0, m, batch_size):
            idx = order[start:start + batch_size]
            loss = mse_loss(_forward(layers, X[idx]), T[idx])
            if not np.isfinite(loss):
                raise ValueError(
                    f"non-finite loss at epoch {epoch}, batch {start // batch_size}"
                )
            grads = supervised_gradient(layers, X[idx], T[idx])
            params, state = adam_step(params, grads, state)
            _unpack_layers(layers, params)
    return layers
