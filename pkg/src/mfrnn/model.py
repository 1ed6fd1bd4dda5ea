"""Finite-width Elman RNN with mean-field (1/n) scaling.

Sequences are stored in time order ``x[0] = x_{-L}, ..., x[L] = x_0``.  Hidden
traces are stored by lag: row ``k`` of a trace holds the quantities at
``x_{-k}``, so ``a[0]`` feeds the readout and ``a[L]`` only sees the input.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import ConfigError, NumericError


def _dtanh(a, s, out=None):
    out = np.multiply(s, s, out=out)
    return np.subtract(1.0, out, out=out)


# tag -> (sigma(a, out=None), sigma'(a, sigma(a), out=None))
ACTIVATIONS: dict[str, tuple[Callable, Callable]] = {
    "tanh": (np.tanh, _dtanh),
}


def activation(tag: str):
    try:
        return ACTIVATIONS[tag]
    except KeyError:
        raise ConfigError(f"unknown activation {tag!r}; available: {sorted(ACTIVATIONS)}") from None


@dataclass(frozen=True)
class NetConfig:
    """Shape and truncation parameters of a network.

    Parameters
    ----------
    n : int
        Hidden width.
    d : int
        Input dimension.
    L : int
        Memory length; sequences carry ``L + 1`` input vectors.
    R : float
        Truncation radius for the hidden-to-hidden weights.
    activation : str
        Nonlinearity tag, see :data:`ACTIVATIONS`.
    """

    n: int
    d: int = 1
    L: int = 0
    R: float = 1.0
    activation: str = "tanh"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"width n must be a positive integer, got {self.n!r}")
        if int(self.d) != self.d or self.d < 1:
            raise ConfigError(f"input dimension d must be a positive integer, got {self.d!r}")
        if int(self.L) != self.L or self.L < 0:
            raise ConfigError(f"memory length L must be a non-negative integer, got {self.L!r}")
        if not np.isfinite(self.R) or self.R <= 0:
            raise ConfigError(f"truncation radius R must be positive, got {self.R!r}")
        sigma, dsigma = activation(self.activation)
        zero = np.zeros(1)
        s0 = sigma(zero)
        if s0[0] != 0.0:
            raise ConfigError(f"activation {self.activation!r} has sigma(0) != 0")
        if dsigma(zero, s0)[0] == 0.0:
            raise ConfigError(f"activation {self.activation!r} has sigma'(0) == 0")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "R", float(self.R))

    def with_width(self, n: int) -> "NetConfig":
        return replace(self, n=n)


def _frozen(a, shape, name):
    a = np.array(a, dtype=np.float64)
    if a.shape != shape:
        raise ConfigError(f"{name} has shape {a.shape}, expected {shape}")
    if not np.all(np.isfinite(a)):
        raise NumericError(f"{name} contains non-finite entries")
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class WeightSet:
    """Immutable container for the three weight blocks.

    ``W_xh`` is ``n x d``, ``W_hh`` is ``n x n`` and ``W_hy`` has length ``n``.
    Arrays are copied on construction and marked read-only.
    """

    W_xh: np.ndarray
    W_hh: np.ndarray
    W_hy: np.ndarray
    config: NetConfig
    t: float = 0.0

    def __post_init__(self):
        c = self.config
        object.__setattr__(self, "W_xh", _frozen(self.W_xh, (c.n, c.d), "W_xh"))
        object.__setattr__(self, "W_hh", _frozen(self.W_hh, (c.n, c.n), "W_hh"))
        object.__setattr__(self, "W_hy", _frozen(self.W_hy, (c.n,), "W_hy"))
        if not np.isfinite(self.t) or self.t < 0:
            raise ConfigError(f"time t must be finite and non-negative, got {self.t!r}")
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return self.config.n

    @classmethod
    def zeros(cls, config: NetConfig) -> "WeightSet":
        return cls(np.zeros((config.n, config.d)), np.zeros((config.n, config.n)),
                   np.zeros(config.n), config)

    def replace(self, **changes) -> "WeightSet":
        return replace(self, **changes)

    def equals(self, other: "WeightSet") -> bool:
        """Bit-exact equality of weights, time and config."""
        return (self.config == other.config and self.t == other.t
                and np.array_equal(self.W_xh, other.W_xh)
                and np.array_equal(self.W_hh, other.W_hh)
                and np.array_equal(self.W_hy, other.W_hy))


@dataclass(frozen=True, eq=False)
class HiddenTrace:
    """Forward trace of one sequence.

    ``a[k, j]`` is the preactivation of neuron ``j`` at lag ``k`` and
    ``s = sigma(a)``.
    """

    a: np.ndarray
    s: np.ndarray
    output: float


def _check_sequence(w: WeightSet, x) -> np.ndarray:
    c = w.config
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1 and c.d == 1:
        x = x[:, None]
    if x.shape != (c.L + 1, c.d):
        raise ConfigError(f"sequence has shape {x.shape}, expected {(c.L + 1, c.d)}")
    return x


def forward(w: WeightSet, x) -> HiddenTrace:
    """Run the unrolled network on a single sequence ``x_{-L}, ..., x_0``.

    ``x`` has shape ``(L+1, d)`` (or ``(L+1,)`` when ``d == 1``).
    """
    x = _check_sequence(w, x)
    A, S = forward_batch(w, x[None])
    out = float(S[0, 0] @ w.W_hy / w.n)
    return HiddenTrace(a=A[:, 0, :].copy(), s=S[:, 0, :].copy(), output=out)


def forward_batch(w: WeightSet, X) -> tuple[np.ndarray, np.ndarray]:
    """Batched forward pass.

    Parameters
    ----------
    X : array, shape (m, L+1, d)

    Returns
    -------
    A, S : arrays, shape (L+1, m, n)
        Preactivations and activations indexed by lag.
    """
    c = w.config
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3 or X.shape[1:] != (c.L + 1, c.d):
        raise ConfigError(f"batch has shape {X.shape}, expected (m, {c.L + 1}, {c.d})")
    sigma, _ = activation(c.activation)
    L, n = c.L, c.n
    m = X.shape[0]
    A = np.empty((L + 1, m, n))
    S = np.empty((L + 1, m, n))
    WhhT = w.W_hh.T / n
    WxhT = w.W_xh.T
    np.matmul(X[:, 0, :], WxhT, out=A[L])
    sigma(A[L], out=S[L])
    for k in range(L - 1, -1, -1):
        np.matmul(S[k + 1], WhhT, out=A[k])
        A[k] += X[:, L - k, :] @ WxhT
        sigma(A[k], out=S[k])
        if not np.all(np.isfinite(A[k])):
            raise NumericError(f"non-finite preactivation at lag {k}", index=k)
    if not np.all(np.isfinite(A[L])):
        raise NumericError(f"non-finite preactivation at lag {L}", index=L)
    return A, S


def predict(w: WeightSet, X) -> np.ndarray:
    """Network outputs for a batch of sequences, shape ``(m,)``."""
    _, S = forward_batch(w, X)
    return S[0] @ w.W_hy / w.n


def chi_R(w_value, R: float):
    """Smooth indicator used to truncate the hidden-weight dynamics.

    Equals 1 for ``|w| <= R/2``, 0 for ``|w| >= R`` and follows a quintic
    smoothstep in ``u = (2|w| - R)/R`` in between.  Works elementwise on arrays.
    """
    if not R > 0:
        raise ConfigError(f"R must be positive, got {R!r}")
    u = np.clip((2.0 * np.abs(w_value) - R) / R, 0.0, 1.0)
    out = 1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
    if np.ndim(out) == 0:
        return float(out)
    return out


def permute(w: WeightSet, pi) -> WeightSet:
    """Relabel neurons: neuron ``j`` of the result is neuron ``pi[j]`` of ``w``.

    ``pi`` is a 0-based permutation of ``range(n)``.
    """
    pi = np.asarray(pi)
    if (pi.shape != (w.n,) or not np.issubdtype(pi.dtype, np.integer)
            or not np.array_equal(np.sort(pi), np.arange(w.n))):
        raise ConfigError("pi is not a permutation of range(n)")
    return WeightSet(w.W_xh[pi], w.W_hh[np.ix_(pi, pi)], w.W_hy[pi], w.config, w.t)
