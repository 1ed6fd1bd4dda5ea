"""Exact gradients of the empirical risk by backpropagation through time.

With mean-field scaling the sensitivity of the output to the preactivation
``a_k(j)`` is ``G_k(j) / n`` where

    G_0(j)      = W_hy(j) * sigma'(a_0(j))
    G_{k+1}(j') = (1/n) * sum_j G_k(j) W_hh(j, j') sigma'(a_{k+1}(j'))

and the per-block gradients follow by contracting ``dF * G_k`` with the
activations or inputs.  ``chain_oracle`` evaluates the same quantity by
summing over every index chain explicitly and is used to cross-check.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .data import SequenceBatch
from .errors import ConfigError, GuardError, NumericError
from .model import HiddenTrace, WeightSet, _check_sequence, activation, forward, forward_batch

SCALINGS = ("meanfield", "plain")


@dataclass(frozen=True, eq=False)
class AdjointStack:
    trace: HiddenTrace
    G: np.ndarray
    deltaF: float


@dataclass(frozen=True, eq=False)
class GradientSet:
    """Gradients with the same block shapes as a :class:`WeightSet`."""

    g_xh: np.ndarray
    g_hh: np.ndarray
    g_hy: np.ndarray
    scaling: str

    def norms(self) -> tuple[float, float, float]:
        """``(||g_hy||_2, ||g_hh||_F, ||g_xh||_F)``."""
        return (float(np.linalg.norm(self.g_hy)), float(np.linalg.norm(self.g_hh)),
                float(np.linalg.norm(self.g_xh)))


def backward(w: WeightSet, trace: HiddenTrace, target: float) -> AdjointStack:
    n, L = w.n, w.config.L
    if trace.a.shape != (L + 1, n):
        raise ConfigError(f"trace has shape {trace.a.shape}, expected {(L + 1, n)}")
    _, dsigma = activation(w.config.activation)
    D = dsigma(trace.a, trace.s)
    G = np.empty((L + 1, n))
    G[0] = w.W_hy * D[0]
    for k in range(L):
        G[k + 1] = (G[k] @ w.W_hh) / n * D[k + 1]
        if not np.all(np.isfinite(G[k + 1])):
            raise NumericError(f"non-finite adjoint at lag {k + 1}", index=k + 1)
    dF = trace.output - float(target)
    if not np.isfinite(dF):
        raise NumericError("non-finite output error", index=0)
    return AdjointStack(trace=trace, G=G, deltaF=dF)


def adjoint_batch(w: WeightSet, A: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Adjoint recursion for a batched trace; returns ``G`` of shape ``(L+1, m, n)``."""
    n, L = w.n, w.config.L
    _, dsigma = activation(w.config.activation)
    Wn = w.W_hh / n
    G = np.empty_like(A)
    buf = np.empty_like(A[0])
    np.multiply(w.W_hy, dsigma(A[0], S[0], out=buf), out=G[0])
    for k in range(L):
        np.matmul(G[k], Wn, out=G[k + 1])
        G[k + 1] *= dsigma(A[k + 1], S[k + 1], out=buf)
    if not np.all(np.isfinite(G)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(G.reshape(L + 1, -1)), axis=1))[0])
        raise NumericError(f"non-finite adjoint at lag {bad}", index=bad)
    return G


def _factors(n: int):
    return {"xh": n, "hh": n * n, "hy": n}


def value_and_gradient(w: WeightSet, batch: SequenceBatch, scaling: str = "meanfield"):
    """Empirical risk ``mean(0.5 * dF**2)`` together with its gradient.

    The accumulation always produces the true derivative of the risk
    (``plain``); ``meanfield`` multiplies it by ``n`` (``W_xh``, ``W_hy``) and
    ``n**2`` (``W_hh``).
    """
    if scaling not in SCALINGS:
        raise ConfigError(f"scaling must be one of {SCALINGS}, got {scaling!r}")
    y = batch.require_labels()
    c = w.config
    if batch.L != c.L or batch.d != c.d:
        raise ConfigError(f"batch (L={batch.L}, d={batch.d}) does not match net (L={c.L}, d={c.d})")
    X = batch.sequences
    n, L, m = c.n, c.L, batch.m
    A, S = forward_batch(w, X)
    F = S[0] @ w.W_hy / n
    dF = F - y
    with np.errstate(over="ignore", invalid="ignore"):
        loss = 0.5 * float(np.mean(dF * dF))
    if not np.isfinite(loss):
        raise NumericError("non-finite empirical risk", index=0)
    G = adjoint_batch(w, A, S)
    G *= dF[None, :, None]
    inv = 1.0 / (m * n)
    g_hy = (S[0].T @ dF) * inv
    # X[:, ::-1] is indexed by lag, matching G
    g_xh = np.tensordot(G, X[:, ::-1, :], axes=([0, 1], [1, 0])) * inv
    if L > 0:
        g_hh = (G[:L].reshape(-1, n).T @ S[1:].reshape(-1, n)) * (inv / n)
    else:
        g_hh = np.zeros((n, n))
    if scaling == "meanfield":
        f = _factors(n)
        g_xh, g_hh, g_hy = g_xh * f["xh"], g_hh * f["hh"], g_hy * f["hy"]
    return loss, GradientSet(g_xh=g_xh, g_hh=g_hh, g_hy=g_hy, scaling=scaling)


def gradient(w: WeightSet, batch: SequenceBatch, scaling: str = "meanfield") -> GradientSet:
    return value_and_gradient(w, batch, scaling)[1]


def to_scaling(g: GradientSet, scaling: str, n: int) -> GradientSet:
    """Convert a gradient between scalings (exact only in the plain -> meanfield direction)."""
    if g.scaling == scaling:
        return g
    f = _factors(n)
    if scaling == "meanfield":
        return GradientSet(g.g_xh * f["xh"], g.g_hh * f["hh"], g.g_hy * f["hy"], scaling)
    return GradientSet(g.g_xh / f["xh"], g.g_hh / f["hh"], g.g_hy / f["hy"], scaling)


MAX_ORACLE_WIDTH = 64
MAX_ORACLE_DEPTH = 4


def chain_oracle(w: WeightSet, x, i: int) -> np.ndarray:
    """Explicit nested-sum evaluation of the depth-``i`` sensitivity chain.

    Sums over all chains ``(j_0, ..., j_{i-1}, j)`` of
    ``W_hy(j_0) s'_0(j_0) W_hh(j_0, j_1) s'_1(j_1) ... W_hh(j_{i-1}, j) s'_i(j)``
    with a factor ``1/n`` per link.  Deliberately slow; independent of
    :func:`backward`.
    """
    n, L = w.n, w.config.L
    if n > MAX_ORACLE_WIDTH or i > MAX_ORACLE_DEPTH:
        raise GuardError(f"chain_oracle limited to n <= {MAX_ORACLE_WIDTH}, i <= {MAX_ORACLE_DEPTH}")
    if not 0 <= i <= L:
        raise ConfigError(f"depth index i={i} outside 0..{L}")
    x = _check_sequence(w, x)
    # recompute the preactivations directly from the definition
    sigma, dsigma = activation(w.config.activation)
    a = [None] * (L + 1)
    a[L] = np.array([float(w.W_xh[j] @ x[0]) for j in range(n)])
    for k in range(L - 1, -1, -1):
        s_next = sigma(a[k + 1])
        a[k] = np.array([sum(w.W_hh[j, jj] * s_next[jj] for jj in range(n)) / n
                         + float(w.W_xh[j] @ x[L - k]) for j in range(n)])
    ds = [dsigma(ak, sigma(ak)) for ak in a]
    out = np.zeros(n)
    for j in range(n):
        total = 0.0
        for chain in itertools.product(range(n), repeat=i):
            path = chain + (j,)
            term = w.W_hy[path[0]] * ds[0][path[0]]
            for lvl in range(1, i + 1):
                term *= w.W_hh[path[lvl - 1], path[lvl]] / n * ds[lvl][path[lvl]]
            total += term
        out[j] = total
    return out
