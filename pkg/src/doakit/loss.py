"""Permutation-invariant RMSPE between DoA vectors.

The error is wrapped modulo pi (a DoA and its pi-shift are the same
wavefront), the assignment between estimates and targets is resolved by
exhaustive search over all d! permutations (exact for the d <= 8 this
toolkit targets), and the gradient follows the envelope theorem: the
minimizing permutation is held fixed, ties broken lexicographically, and
the non-differentiable point at value 0 gets the zero subgradient.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np

from .nn import Node

MAX_SOURCES = 8


@dataclass
class RmspeResult:
    value: float
    best_perm: tuple[int, ...]  # theta_hat[best_perm[i]] is matched to theta[i]


def wrap_mod_pi(e: np.ndarray) -> np.ndarray:
    """Wrap to [-pi/2, pi/2); the boundary pi/2 maps to -pi/2."""
    e = np.asarray(e, dtype=np.float64)
    if not np.all(np.isfinite(e)):
        raise ValueError("angles must be finite")
    return np.mod(e + np.pi / 2, np.pi) - np.pi / 2


@lru_cache(maxsize=None)
def _perm_table(d: int) -> np.ndarray:
    # lexicographic order, so argmin's first-hit rule breaks ties
    # toward the lexicographically smallest permutation
    return np.array(list(permutations(range(d))), dtype=np.intp)


def _check_pair(theta, theta_hat):
    theta = np.asarray(theta, dtype=np.float64)
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    if theta.shape != theta_hat.shape:
        raise ValueError(f"length mismatch: {theta.shape} vs {theta_hat.shape}")
    d = theta.shape[-1]
    if not (1 <= d <= MAX_SOURCES):
        raise ValueError(f"need 1 <= d <= {MAX_SOURCES}, got {d}")
    return theta, theta_hat, d


def rmspe_many(theta: np.ndarray, theta_hat: np.ndarray):
    """Vectorized over a leading batch axis: (B, d) x (B, d) -> values (B,),
    permutation rows (B, d)."""
    theta, theta_hat, d = _check_pair(theta, theta_hat)
    perms = _perm_table(d)
    errs = wrap_mod_pi(theta[:, None, :] - theta_hat[:, perms])
    msev = np.mean(errs**2, axis=2)
    pick = np.argmin(msev, axis=1)
    rows = np.arange(theta.shape[0])
    return np.sqrt(msev[rows, pick]), perms[pick]


def rmspe(theta: np.ndarray, theta_hat: np.ndarray) -> RmspeResult:
    values, perms = rmspe_many(
        np.asarray(theta, dtype=np.float64)[None],
        np.asarray(theta_hat, dtype=np.float64)[None],
    )
    return RmspeResult(float(values[0]), tuple(int(i) for i in perms[0]))


def rmspe_grad(theta: np.ndarray, theta_hat: np.ndarray) -> np.ndarray:
    """d(value)/d(theta_hat) with the best permutation held fixed; zero
    vector when the value is exactly 0."""
    theta, theta_hat, d = _check_pair(theta, theta_hat)
    res = rmspe(theta, theta_hat)
    grad = np.zeros(d)
    if res.value == 0.0:
        return grad
    perm = np.array(res.best_perm)
    w = wrap_mod_pi(theta - theta_hat[perm])
    grad[perm] = -w / (d * res.value)
    return grad


def rmspe_loss(theta_hat: Node, theta: np.ndarray) -> Node:
    """Tape node: mean RMSPE over the batch (or one pair if unbatched)."""
    hat = theta_hat.value
    squeeze = hat.ndim == 1
    hat2 = hat[None] if squeeze else hat
    th2 = np.asarray(theta, dtype=np.float64)
    th2 = th2[None] if th2.ndim == 1 else th2
    if th2.shape != hat2.shape:
        raise ValueError(f"target shape {th2.shape} != estimate shape {hat2.shape}")
    values, perms = rmspe_many(th2, hat2)
    b, d = hat2.shape
    out = theta_hat.tape.node(np.mean(values), (theta_hat,))

    def bwd(g):
        grad = np.zeros_like(hat2)
        w = wrap_mod_pi(th2 - np.take_along_axis(hat2, perms, axis=1))
        ok = values > 0.0
        scale = np.where(ok, g / (b * d * np.where(ok, values, 1.0)), 0.0)
        np.put_along_axis(grad, perms, -w * scale[:, None], axis=1)
        theta_hat._accum(grad[0] if squeeze else grad)

    out._bwd = bwd
    return out
