"""Channel matrices, probability vectors and basic information measures.

All logarithms are natural, so every measure is in nats. Terms of the
form ``0 * log 0`` are skipped explicitly rather than regularized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidDistribution,
    NegativeEntry,
    NonSquare,
    RowSumViolation,
    SupportViolation,
)

#: rows of a validated channel sum to one within this
ROW_SUM_TOL = 1e-12
#: rows deviating by at most this much are renormalized on input
RENORMALIZE_TOL = 1e-9

ROLES = ("input", "output", "invariant", "capacity-achieving")


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """Row-stochastic square matrix ``W[j, k] = P(y_k | x_j)``."""

    entries: np.ndarray
    renormalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.entries)

    def joint(self, p) -> np.ndarray:
        return joint_distribution(self, p)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __repr__(self):
        return f"ChannelMatrix(n={self.n}, entries={self.entries.tolist()})"


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector tagged with the role it plays."""

    weights: np.ndarray
    role: str = "input"

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1:
            raise InvalidDistribution("distribution must be a vector")
        if np.any(w < 0):
            raise InvalidDistribution(f"negative weight {w.min():g}")
        if abs(w.sum() - 1.0) > ROW_SUM_TOL * max(1, w.size):
            raise InvalidDistribution(f"weights sum to {w.sum():.17g}")
        if self.role not in ROLES:
            raise InvalidDistribution(f"unknown role {self.role!r}")
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.size

    def __array__(self, dtype=None, copy=None):
        return self.weights if dtype is None else self.weights.astype(dtype)

    def __len__(self):
        return self.weights.size


@dataclass(frozen=True)
class InfoMeasures:
    H: float
    D: float
    I: float
    row_H: np.ndarray = field(repr=False)


def validate_channel(raw) -> ChannelMatrix:
    """Check that ``raw`` is a square row-stochastic matrix.

    Rows whose sums are off by no more than ``RENORMALIZE_TOL`` are
    rescaled and the result is flagged ``renormalized``.
    """
    W = np.array(raw, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise NonSquare(f"channel must be square, got shape {W.shape}")
    if W.shape[0] < 2:
        raise NonSquare("channel needs at least two symbols")
    if not np.all(np.isfinite(W)):
        raise NegativeEntry("channel has non-finite entries")
    if np.any(W < 0):
        raise NegativeEntry(f"channel has negative entry {W.min():g}")
    dev = np.abs(W.sum(axis=1) - 1.0)
    if np.any(dev > RENORMALIZE_TOL):
        j = int(np.argmax(dev))
        raise RowSumViolation(f"row {j} sums to {W[j].sum():.17g}")
    renormalized = bool(np.any(dev > ROW_SUM_TOL))
    if renormalized:
        W = W / W.sum(axis=1, keepdims=True)
    return ChannelMatrix(W, renormalized=renormalized)


def as_matrix(W) -> np.ndarray:
    if isinstance(W, ChannelMatrix):
        return W.entries
    return np.asarray(W, dtype=float)


def as_vector(p) -> np.ndarray:
    if isinstance(p, Distribution):
        return p.weights
    return np.asarray(p, dtype=float)


def make_distribution(weights, role="input") -> Distribution:
    """Build a Distribution, renormalizing sums that are off by <= 1e-9."""
    w = np.array(weights, dtype=float)
    if np.any(w < 0):
        raise InvalidDistribution(f"negative weight {w.min():g}")
    s = w.sum()
    if abs(s - 1.0) > RENORMALIZE_TOL:
        raise InvalidDistribution(f"weights sum to {s:.17g}")
    return Distribution(w / s, role)


def _check_dims(W, p):
    if W.shape[0] != p.size:
        raise DimensionMismatch(
            f"channel has {W.shape[0]} inputs, distribution has {p.size} weights"
        )


def _xlogy(x, y):
    """Elementwise ``x * log(y)`` with zero wherever ``x == 0``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros(np.broadcast(x, y).shape)
    x, y = np.broadcast_arrays(x, y)
    nz = x != 0
    out[nz] = x[nz] * np.log(y[nz])
    return out


def output_distribution(W, p) -> Distribution:
    W, p = as_matrix(W), as_vector(p)
    _check_dims(W, p)
    q = p @ W
    return Distribution(q / q.sum(), "output")


def joint_distribution(W, p) -> np.ndarray:
    W, p = as_matrix(W), as_vector(p)
    _check_dims(W, p)
    return p[:, None] * W


def entropy(p) -> float:
    p = as_vector(p)
    return float(-_xlogy(p, p).sum())


def relative_entropy(p, q) -> float:
    """KL divergence ``D(p || q)``. Arrays of any matching shape are flattened."""
    p = as_vector(p).ravel()
    q = as_vector(q).ravel()
    if p.shape != q.shape:
        raise DimensionMismatch(f"shapes {p.shape} and {q.shape} differ")
    bad = (p > 0) & (q <= 0)
    if np.any(bad):
        raise SupportViolation(
            f"p has mass where q vanishes at indices {np.flatnonzero(bad).tolist()}"
        )
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz] / q[nz])))


def row_entropies(W) -> np.ndarray:
    W = as_matrix(W)
    return -_xlogy(W, W).sum(axis=1)


def row_divergences(W, q) -> np.ndarray:
    """``D(W[j] || q)`` for every row; ``inf`` where a row leaves q's support."""
    W = as_matrix(W)
    q = as_vector(q)
    out = np.empty(W.shape[0])
    for j, row in enumerate(W):
        nz = row > 0
        if np.any(q[nz] <= 0):
            out[j] = np.inf
        else:
            out[j] = np.sum(row[nz] * np.log(row[nz] / q[nz]))
    return out


def mutual_information(W, p) -> float:
    W, p = as_matrix(W), as_vector(p)
    _check_dims(W, p)
    V = p[:, None] * W
    q = V.sum(axis=0)
    j, k = np.nonzero(V)
    # difference of logs: p_j * q_k can underflow even when V_jk does not
    terms = V[j, k] * (np.log(V[j, k]) - np.log(p[j]) - np.log(q[k]))
    return float(max(0.0, terms.sum()))


def info_measures(W, p) -> InfoMeasures:
    """All measures for one channel/input pair; ``D`` is ``D(V || p x q)``."""
    W, p = as_matrix(W), as_vector(p)
    V = joint_distribution(W, p)
    q = V.sum(axis=0)
    return InfoMeasures(
        H=entropy(p),
        D=relative_entropy(V, np.outer(p, q)),
        I=mutual_information(W, p),
        row_H=row_entropies(W),
    )
