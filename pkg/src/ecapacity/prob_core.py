"""Information measures over finite alphabets.

All logarithms are base 2, so every quantity is in bits.  Terms carrying
zero probability mass are dropped before any logarithm is taken, which
gives the usual ``0 log 0 = 0`` and ``0 log(0/0) = 0`` conventions.  An
absolute-continuity failure in a divergence yields ``math.inf``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

STOCHASTIC_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_stochastic(a: np.ndarray, what: str) -> np.ndarray:
    """Validate rows of ``a`` as probability vectors, renormalizing tiny drift."""
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{what} has non-finite entries")
    if np.any(a < 0):
        bad = int(np.argwhere(a < 0)[0][0]) if a.ndim == 2 else None
        where = f" (row {bad})" if bad is not None else ""
        raise ValidationError(f"{what} has negative entries{where}")
    sums = a.sum(axis=-1)
    dev = np.abs(sums - 1.0)
    if np.any(dev > STOCHASTIC_TOL):
        if a.ndim == 2:
            row = int(np.argmax(dev > STOCHASTIC_TOL))
            raise ValidationError(
                f"{what} row {row} sums to {float(sums[row])!r}, not 1 (tolerance {STOCHASTIC_TOL:g})"
            )
        raise ValidationError(f"{what} sums to {float(sums)!r}, not 1 (tolerance {STOCHASTIC_TOL:g})")
    # rows already within float rounding of 1 are kept bit-exact so that
    # normalization is idempotent
    exact = dev <= 4 * np.finfo(float).eps * a.shape[-1]
    sums = np.where(exact, 1.0, sums)
    return a / sums[..., None] if a.ndim == 2 else a / sums


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector on a finite alphabet."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValidationError("distribution must be a nonempty 1-D vector")
        object.__setattr__(self, "probs", _frozen(_check_stochastic(p, "distribution")))

    def __len__(self) -> int:
        return self.probs.size

    def __eq__(self, other) -> bool:
        return isinstance(other, Distribution) and np.array_equal(self.probs, other.probs)

    @classmethod
    def uniform(cls, k: int) -> "Distribution":
        return cls(np.full(k, 1.0 / k))


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic matrix ``rows[x, y] = W(y|x)``.

    Also used for hypothetical channels ``V`` and for square matrices
    ``X -> X`` in the expurgated bound.
    """

    rows: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.rows, dtype=float)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise ValidationError("channel must be a 2-D matrix with at least one row and column")
        object.__setattr__(self, "rows", _frozen(_check_stochastic(w, "channel")))

    @property
    def input_size(self) -> int:
        return self.rows.shape[0]

    @property
    def output_size(self) -> int:
        return self.rows.shape[1]

    def __eq__(self, other) -> bool:
        return isinstance(other, Channel) and np.array_equal(self.rows, other.rows)

    @classmethod
    def identity(cls, k: int) -> "Channel":
        return cls(np.eye(k))


def as_distribution(P) -> np.ndarray:
    if isinstance(P, Distribution):
        return P.probs
    return Distribution(P).probs


def as_channel(W) -> np.ndarray:
    if isinstance(W, Channel):
        return W.rows
    return Channel(W).rows


def _check_shapes(p: np.ndarray, v: np.ndarray) -> None:
    if p.size != v.shape[0]:
        raise ValidationError(
            f"distribution has {p.size} letters but channel has {v.shape[0]} input rows"
        )


# Vectorized kernels, no validation; used by the solvers on raw arrays.

def _plogp(a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a, dtype=float)
    m = a > 0
    out[m] = a[m] * np.log2(a[m])
    return out


def _rel(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise a*log2(a/b) with 0 where a == 0 and inf where b == 0 < a."""
    out = np.zeros(np.broadcast(a, b).shape)
    a, b = np.broadcast_arrays(a, b)
    m = a > 0
    with np.errstate(divide="ignore"):
        out[m] = a[m] * (np.log2(a[m]) - np.log2(b[m]))
    return out


def _cond_divergence(p, v, w) -> float:
    m = p > 0
    rows = _rel(v[m], w[m]).sum(axis=1)
    return float(np.dot(p[m], rows))


def _mutual_information(p, v) -> float:
    q = p @ v
    val = float(np.dot(p, _rel(v, q[None, :]).sum(axis=1)))
    return max(val, 0.0)


def _cond_entropy(p, v) -> float:
    return float(-np.dot(p, _plogp(v).sum(axis=1))) + 0.0


def entropy(P) -> float:
    """Shannon entropy ``H(P)`` in bits."""
    p = as_distribution(P)
    return float(-_plogp(p).sum()) + 0.0


def conditional_entropy(P, V) -> float:
    """``H(Y|X)`` for input distribution ``P`` and channel ``V``."""
    p, v = as_distribution(P), as_channel(V)
    _check_shapes(p, v)
    return _cond_entropy(p, v)


def output_distribution(P, V) -> Distribution:
    """Output marginal ``PV``."""
    p, v = as_distribution(P), as_channel(V)
    _check_shapes(p, v)
    return Distribution(p @ v)


def joint_entropy(P, V) -> float:
    p, v = as_distribution(P), as_channel(V)
    _check_shapes(p, v)
    return float(-_plogp(p[:, None] * v).sum()) + 0.0


def mutual_information(P, V) -> float:
    """``I(X;Y)`` in bits, computed as ``sum P V log(V / PV)`` and floored at 0."""
    p, v = as_distribution(P), as_channel(V)
    _check_shapes(p, v)
    return _mutual_information(p, v)


def divergence(P, Q) -> float:
    """Kullback-Leibler divergence ``D(P||Q)``; ``inf`` if ``P`` is not dominated by ``Q``."""
    p, q = as_distribution(P), as_distribution(Q)
    if p.size != q.size:
        raise ValidationError(f"length mismatch: {p.size} vs {q.size}")
    return max(float(_rel(p, q).sum()), 0.0)


def conditional_divergence(V, W, P) -> float:
    """``D(V||W|P) = sum_x P(x) D(V(.|x) || W(.|x))``.

    Rows with ``P(x) = 0`` contribute nothing, even if their divergence is infinite.
    """
    v, w, p = as_channel(V), as_channel(W), as_distribution(P)
    if v.shape != w.shape:
        raise ValidationError(f"channel shapes differ: {v.shape} vs {w.shape}")
    _check_shapes(p, v)
    return max(_cond_divergence(p, v, w), 0.0)


def bhattacharyya_matrix(W) -> np.ndarray:
    """Pairwise Bhattacharyya distances ``-log2 sum_y sqrt(W(y|x) W(y|x'))``.

    The result is exactly symmetric with an exactly zero diagonal; disjoint
    row supports give ``inf``.
    """
    w = as_channel(W)
    k = w.shape[0]
    root = np.sqrt(w)
    d = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            overlap = float(np.dot(root[i], root[j]))
            val = math.inf if overlap <= 0.0 else max(-math.log2(overlap), 0.0)
            d[i, j] = d[j, i] = val
    return _frozen(d)


def channel_digest(W) -> str:
    """Stable SHA-256 identifier of a channel's shape and exact entries."""
    w = np.ascontiguousarray(as_channel(W), dtype="<f8")
    h = hashlib.sha256()
    h.update(f"{w.shape[0]}x{w.shape[1]}:".encode())
    h.update(w.tobytes())
    return h.hexdigest()
