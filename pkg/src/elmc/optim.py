"""Shared optimizer and numerical-testing utilities.

Adam with bias correction (beta1=0.9, beta2=0.999, eps=1e-8, lr=0.001),
a seeded PRNG factory, and a central finite-difference gradient checker
used as the oracle for all analytic gradients in the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["AdamState", "adam_step", "finite_diff_grad", "make_rng"]


def make_rng(seed: int) -> np.random.Generator:
    """Seeded 64-bit generator (NumPy PCG64); identical seed, identical stream."""
    return np.random.default_rng(int(seed))


@dataclass
class AdamState:
    """Optimizer state for one parameter vector."""

    step: int
    first_moment: np.ndarray
    second_moment: np.ndarray
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not (self.lr > 0):
            raise ValueError(f"lr must be positive, got {self.lr}")

    @classmethod
    def initial(cls, n_params: int, lr: float = 0.001) -> "AdamState":
        return cls(step=0, first_moment=np.zeros(n_params),
                   second_moment=np.zeros(n_params), lr=lr)


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState):
    """One bias-corrected Adam descent step.

    m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2,
    theta <- theta - lr * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps).

    Returns (new_params, new_state); inputs are not mutated.
    """
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or params.shape != state.first_moment.shape:
        raise ValueError(
            f"length mismatch: params {params.shape}, grads {grads.shape}, "
            f"moments {state.first_moment.shape}"
        )
    if not np.isfinite(grads).all():
        raise ValueError("non-finite gradient passed to adam_step")
    t = state.step + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    new_state = AdamState(step=t, first_moment=m, second_moment=v,
                          lr=state.lr, beta1=state.beta1, beta2=state.beta2,
                          eps=state.eps)
    return new_params, new_state


def finite_diff_grad(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient (f(x+h*e_i) - f(x-h*e_i)) / (2h)."""
    if not (h > 0):
        raise ValueError(f"h must be positive, got {h}")
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp.flat[i] += h
        xm.flat[i] -= h
        fp = float(f(xp))
        fm = float(f(xm))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ValueError(f"non-finite function value at coordinate {i}")
        grad.flat[i] = (fp - fm) / (2.0 * h)
    return grad
