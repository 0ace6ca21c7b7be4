"""Exact scalar-output Gaussian process regression with an ARD RBF kernel.

Hyperparameters (signal variance, per-dimension lengthscales, noise
variance) live in the log domain and are trained by Adam ascent on the
marginal log likelihood

    L = -1/2 t^T C^-1 t - 1/2 log|C| - (M/2) log 2pi,

with C the kernel matrix plus (noise + jitter) on the diagonal. All
linear algebra goes through the Cholesky factorization of C.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .optim import AdamState, adam_step

__all__ = ["RbfHyperparams", "GpModel", "rbf_kernel", "build_covariance",
           "log_marginal_likelihood", "mll_gradient", "fit", "predict"]

DEFAULT_JITTER = 1e-6


@dataclass(frozen=True)
class RbfHyperparams:
    """Log-domain RBF kernel hyperparameters (ARD lengthscales)."""

    log_signal_variance: float
    log_lengthscales: np.ndarray
    log_noise_variance: float

    def __post_init__(self):
        object.__setattr__(self, "log_lengthscales",
                           np.atleast_1d(np.asarray(self.log_lengthscales, dtype=float)))
        vec = self.to_vector()
        if not np.isfinite(vec).all():
            raise ValueError("hyperparameters must be finite")

    @property
    def signal_variance(self) -> float:
        return float(np.exp(self.log_signal_variance))

    @property
    def lengthscales(self) -> np.ndarray:
        return np.exp(self.log_lengthscales)

    @property
    def noise_variance(self) -> float:
        return float(np.exp(self.log_noise_variance))

    def to_vector(self) -> np.ndarray:
        """Pack as [log sig var, log lengthscales..., log noise var]."""
        return np.concatenate(([self.log_signal_variance],
                               self.log_lengthscales,
                               [self.log_noise_variance]))

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "RbfHyperparams":
        vec = np.asarray(vec, dtype=float)
        return cls(log_signal_variance=float(vec[0]),
                   log_lengthscales=vec[1:-1].copy(),
                   log_noise_variance=float(vec[-1]))


@dataclass(frozen=True)
class GpModel:
    """RBF hyperparameters plus retained training data for one output."""

    hyper: RbfHyperparams
    train_inputs: np.ndarray
    train_targets: np.ndarray
    jitter: float = DEFAULT_JITTER

    def __post_init__(self):
        X = np.asarray(self.train_inputs, dtype=float)
        t = np.asarray(self.train_targets, dtype=float)
        object.__setattr__(self, "train_inputs", X)
        object.__setattr__(self, "train_targets", t)
        if X.ndim != 2:
            raise ValueError("train_inputs must be 2-D")
        if t.ndim != 1 or t.shape[0] != X.shape[0]:
            raise ValueError("train_targets length must match train_inputs rows")
        if X.shape[1] != self.hyper.log_lengthscales.shape[0]:
            raise ValueError("lengthscale count must match input dimension")


def rbf_kernel(x: np.ndarray, x2: np.ndarray, hyper: RbfHyperparams) -> float:
    """k(x, x') = sig_var * exp(-sum_i (x_i - x'_i)^2 / (2 l_i^2))."""
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != x2.shape or x.shape != hyper.log_lengthscales.shape:
        raise ValueError("dimension mismatch between inputs and lengthscales")
    z = (x - x2) / hyper.lengthscales
    return hyper.signal_variance * float(np.exp(-0.5 * np.dot(z, z)))


def _kernel_matrix(X: np.ndarray, X2: np.ndarray, hyper: RbfHyperparams) -> np.ndarray:
    """Noise-free cross-kernel matrix between two point sets."""
    ell = hyper.lengthscales
    A = X / ell
    B = X2 / ell
    sq = (np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :]
          - 2.0 * (A @ B.T))
    np.maximum(sq, 0.0, out=sq)
    return hyper.signal_variance * np.exp(-0.5 * sq)


def build_covariance(X: np.ndarray, hyper: RbfHyperparams,
                     jitter: float = DEFAULT_JITTER) -> np.ndarray:
    """Training covariance C = K + (noise + jitter) I, symmetrized exactly.

    If Cholesky fails the jitter is escalated once by a factor of 10;
    a second failure raises.
    """
    X = np.asarray(X, dtype=float)
    K = _kernel_matrix(X, X, hyper)
    K = 0.5 * (K + K.T)
    C = K + (hyper.noise_variance + jitter) * np.eye(X.shape[0])
    try:
        cholesky(C, lower=True)
    except np.linalg.LinAlgError:
        C = C + (9.0 * jitter) * np.eye(X.shape[0])
        try:
            cholesky(C, lower=True)
        except np.linalg.LinAlgError:
            raise ValueError("singular kernel matrix: Cholesky failed after "
                             "jitter escalation") from None
    return C


def _chol_factor(model: GpModel):
    C = build_covariance(model.train_inputs, model.hyper, model.jitter)
    L = cholesky(C, lower=True)
    alpha = cho_solve((L, True), model.train_targets)
    return L, alpha


def log_marginal_likelihood(model: GpModel) -> float:
    L, alpha = _chol_factor(model)
    t = model.train_targets
    M = t.shape[0]
    return float(-0.5 * t @ alpha - np.sum(np.log(np.diag(L)))
                 - 0.5 * M * np.log(2.0 * np.pi))


def _mll_and_gradient(model: GpModel):
    """Marginal log likelihood and its gradient w.r.t. the log hyperparameters.

    Uses the trace identity dL/dp = 1/2 tr((alpha alpha^T - C^-1) dC/dp)
    with alpha = C^-1 t.
    """
    X = model.train_inputs
    t = model.train_targets
    M, l = X.shape
    hyper = model.hyper
    L, alpha = _chol_factor(model)
    mll = float(-0.5 * t @ alpha - np.sum(np.log(np.diag(L)))
                - 0.5 * M * np.log(2.0 * np.pi))
    Cinv = cho_solve((L, True), np.eye(M))
    A = np.outer(alpha, alpha) - Cinv
    K = _kernel_matrix(X, X, hyper)
    grad = np.empty(2 + l)
    # dC/d log sig_var = K (K scales linearly with the signal variance)
    grad[0] = 0.5 * np.sum(A * K)
    ell = hyper.lengthscales
    for k in range(l):
        D = (X[:, k][:, None] - X[:, k][None, :]) ** 2
        grad[1 + k] = 0.5 * np.sum(A * (K * D / ell[k] ** 2))
    grad[-1] = 0.5 * hyper.noise_variance * np.trace(A)
    return mll, grad


def mll_gradient(model: GpModel) -> np.ndarray:
    """Gradient of the MLL in the order [log sig, log ell_1..l, log noise]."""
    return _mll_and_gradient(model)[1]


def _initial_hyper(X: np.ndarray) -> RbfHyperparams:
    # Scale-aware, deterministic init: unit signal, 1% noise, lengthscales
    # at the per-dimension input spread (unit when a dimension is constant).
    std = np.std(X, axis=0)
    std = np.where(std > 0, std, 1.0)
    return RbfHyperparams(log_signal_variance=0.0,
                          log_lengthscales=np.log(std),
                          log_noise_variance=np.log(0.01))


def fit(X: np.ndarray, t: np.ndarray, iters: int = 500, lr: float = 0.001,
        seed: int = 0, jitter: float = DEFAULT_JITTER) -> GpModel:
    """Train hyperparameters by Adam ascent on the marginal log likelihood.

    Initialization is deterministic, so the seed only pins the contract
    that equal seeds give equal models.
    """
    X = np.asarray(X, dtype=float)
    t = np.asarray(t, dtype=float)
    if X.shape[0] < 2:
        raise ValueError("GP fitting requires at least 2 training points")
    model = GpModel(hyper=_initial_hyper(X), train_inputs=X, train_targets=t,
                    jitter=jitter)
    params = model.hyper.to_vector()
    state = AdamState.initial(params.size, lr=lr)
    for it in range(iters):
        mll, grad = _mll_and_gradient(model)
        if not np.isfinite(mll):
            raise ValueError(f"non-finite marginal likelihood at iteration {it}")
        # Ascent on the MLL = descent on its negation.
        params, state = adam_step(params, -grad, state)
        model = replace(model, hyper=RbfHyperparams.from_vector(params))
    return model


def predict(model: GpModel, Xq: np.ndarray):
    """Posterior mean and pointwise predictive variance at query points.

    mean = c(x)^T C^-1 t; var = (sig + noise) - c(x)^T C^-1 c(x), clamped
    at zero after checking it never drops below -1e-10.
    """
    Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
    if Xq.shape[1] != model.train_inputs.shape[1]:
        raise ValueError(
            f"query dimension {Xq.shape[1]} != training dimension "
            f"{model.train_inputs.shape[1]}"
        )
    L, alpha = _chol_factor(model)
    Ks = _kernel_matrix(model.train_inputs, Xq, model.hyper)
    mean = Ks.T @ alpha
    V = solve_triangular(L, Ks, lower=True)
    var = (model.hyper.signal_variance + model.hyper.noise_variance
           - np.sum(V * V, axis=0))
    if np.any(var < -1e-10):
        raise ValueError(f"negative predictive variance: {var.min()}")
    return mean, np.maximum(var, 0.0)
