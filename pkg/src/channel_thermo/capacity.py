"""Channel capacity: Blahut-Arimoto iteration, the Muroga closed form,
and the capacity gradient with a finite-difference oracle."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .core import Distribution, as_matrix, row_divergences, row_entropies, validate_channel
from .errors import (
    InvalidPerturbation,
    NoConvergence,
    NotApplicable,
    SingularChannel,
    StepOutOfRange,
    ZeroEntry,
)

#: Muroga applies only if every d_j exceeds this
MUROGA_D_MIN = 1e-12
#: condition numbers above this make a channel singular
MAX_CONDITION = 1e12
#: BA iterations from the uniform start before warm-starting instead
QUICK_BA_ITER = 200
#: capacity-achieving masses below this count as zero
SUPPORT_TOL = 1e-10


@dataclass(frozen=True)
class CapacityResult:
    C: float
    p_star: Distribution
    method: str
    iterations: int = 0
    gap: float = 0.0
    d_positive: bool = False
    converged: bool = True
    history: np.ndarray | None = field(default=None, repr=False)

    @property
    def support(self) -> np.ndarray:
        return self.p_star.weights > SUPPORT_TOL

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "p_star": self.p_star.weights.tolist(),
            "method": self.method,
            "iterations": self.iterations,
            "gap": self.gap,
            "d_positive": self.d_positive,
        }


@dataclass(frozen=True)
class CapacityGradient:
    """``psi[j, k]`` and ``grad[j, k] = dC/dW[j, k]`` for ``j != k``.

    The diagonal holds NaN: ``W[j, j]`` is the dependent variable that
    absorbs each off-diagonal perturbation.
    """

    psi: np.ndarray
    grad: np.ndarray
    p: np.ndarray


def blahut_arimoto(
    W, tol=1e-10, max_iter=100_000, *, p0=None, strict=True, record_history=False
):
    """Capacity by alternating maximization from the uniform input.

    Each step computes ``q = p W`` and the row divergences
    ``D_j = D(W_j || q)``; ``sum_j p_j D_j`` is the mutual information (a
    lower bound on C) and ``max_j D_j`` an upper bound. Iteration stops once
    the two differ by less than ``tol``.

    Parameters
    ----------
    W : ChannelMatrix or array_like
    tol : float
        Target gap between the capacity bounds, in nats.
    max_iter : int
    strict : bool
        Raise :class:`NoConvergence` (carrying the partial result) when
        ``max_iter`` is exhausted; otherwise return it with
        ``converged=False``.
    p0 : array_like, optional
        Starting input; uniform by default. Symbols with zero starting mass
        stay at zero, but still enter the upper bound.
    record_history : bool
        Keep the lower bound from every iteration.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    W = as_matrix(W)
    n = W.shape[0]
    neg_H = -row_entropies(W)
    p = np.full(n, 1.0 / n) if p0 is None else np.array(p0, dtype=float) / np.sum(p0)
    history = [] if record_history else None
    lower = gap = np.nan
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        q = p @ W
        logq = np.zeros_like(q)
        pos = q > 0
        logq[pos] = np.log(q[pos])
        D = neg_H - W @ logq
        lower = float(p @ D)
        top = float(D.max())
        gap = top - lower
        if history is not None:
            history.append(lower)
        if gap < tol:
            converged = True
            break
        p = p * np.exp(D - top)
        p /= p.sum()
    result = CapacityResult(
        C=max(lower, 0.0),
        p_star=Distribution(p / p.sum(), "capacity-achieving"),
        method="blahut-arimoto",
        iterations=it,
        gap=gap,
        converged=converged,
        history=None if history is None else np.array(history),
    )
    if not converged and strict:
        raise NoConvergence(
            f"gap {gap:.3g} still above {tol:.3g} after {it} iterations", result
        )
    return result


def _inverse(W):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", linalg.LinAlgWarning)
            lu, piv = linalg.lu_factor(W, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SingularChannel(str(exc)) from exc
    if np.any(np.diag(lu) == 0):
        raise SingularChannel("channel matrix is exactly singular")
    anorm = np.abs(W).sum(axis=0).max()
    rcond, info = linalg.lapack.dgecon(lu, anorm, norm="1")
    if info != 0 or rcond * MAX_CONDITION < 1:
        raise SingularChannel(
            f"channel matrix is ill-conditioned (cond ~ {1 / max(rcond, 1e-300):.3g})"
        )
    return linalg.lu_solve((lu, piv), np.eye(W.shape[0]))


def muroga_capacity(W) -> CapacityResult:
    """Closed-form capacity of an invertible channel.

    With ``M = W^-1`` and row entropies ``H``, let ``e_i = exp(-(M H)_i)``
    and ``d = M^T e``. When ``d > 0`` the capacity is ``log sum(e)`` and the
    input ``d / sum(e)`` achieves it.

    Raises
    ------
    SingularChannel
        ``W`` is not invertible to working precision.
    NotApplicable
        Some ``d_j <= 1e-12``; the vector is attached as ``exc.d``.
    """
    W = as_matrix(W)
    M = _inverse(W)
    with np.errstate(over="ignore"):
        e = np.exp(-(M @ row_entropies(W)))
    Z = e.sum()
    if not np.isfinite(Z):
        raise SingularChannel("Muroga exponents overflow; W is nearly singular")
    d = M.T @ e
    if d.min() <= MUROGA_D_MIN:
        raise NotApplicable(f"min d = {d.min():.3g} is not positive", d=d)
    p = np.clip(d / Z, 0.0, None)
    return CapacityResult(
        C=float(np.log(Z)),
        p_star=Distribution(p / p.sum(), "capacity-achieving"),
        method="muroga",
        d_positive=True,
    )


def capacity(W, method="auto", tol=1e-10, max_iter=100_000) -> CapacityResult:
    """Dispatch on ``method``; ``auto`` tries Muroga and falls back to BA."""
    if method == "ba":
        return blahut_arimoto(W, tol, max_iter)
    if method == "muroga":
        return muroga_capacity(W)
    if method != "auto":
        raise ValueError(f"unknown capacity method {method!r}")
    try:
        return muroga_capacity(W)
    except (SingularChannel, NotApplicable):
        pass
    quick = blahut_arimoto(W, tol, min(max_iter, QUICK_BA_ITER), strict=False)
    if quick.converged:
        return quick
    start = kkt_start(W, guess=quick.p_star.weights)
    return blahut_arimoto(W, tol, max_iter, p0=start)


def _face_newton(W, S, iters=100):
    """Maximize I(p) over inputs supported on ``S`` by damped Newton steps.

    Returns the maximizer or ``None`` if it sits on the boundary of the face.
    """
    Ws = W[S]
    m = len(S)
    p = np.full(m, 1.0 / m)
    if m == 1:
        return p

    def info(p):
        q = p @ Ws
        lq = np.zeros_like(q)
        lq[q > 0] = np.log(q[q > 0])
        D = -row_entropies(Ws) - Ws @ lq
        return float(p @ D), D, q

    val, D, q = info(p)
    ones = np.ones(m)
    for _ in range(iters):
        inv_q = np.where(q > 0, 1 / np.where(q > 0, q, 1), 0.0)
        Hm = -(Ws * inv_q) @ Ws.T
        K = np.block([[Hm, ones[:, None]], [ones[None, :], np.zeros((1, 1))]])
        rhs = np.concatenate([-(D - 1), [0.0]])
        step = np.linalg.lstsq(K, rhs, rcond=None)[0][:m]
        step -= step.mean()
        neg = step < 0
        t = 1.0
        if np.any(neg):
            t = min(1.0, 0.99 * float(np.min(-p[neg] / step[neg])))
        while t > 1e-12:
            trial = p + t * step
            tval, tD, tq = info(trial)
            if tval >= val - 1e-15:
                break
            t /= 2
        else:
            break
        moved = np.max(np.abs(trial - p))
        p, val, D, q = trial / trial.sum(), tval, tD, tq
        if moved < 1e-15 or p.min() < 1e-12:
            break
    if p.min() < 1e-12:
        return None
    return p


def _kkt_candidate(W, S):
    """Face optimum on support ``S`` padded with zeros, or ``None`` if it violates KKT."""
    pS = _face_newton(W, S)
    if pS is None:
        return None, -np.inf
    p = np.zeros(W.shape[0])
    p[S] = pS
    D = row_divergences(W, p @ W)
    val = float(p @ D)
    if D.max() > val + 1e-9:
        return None, -np.inf
    return p, val


def kkt_start(W, guess=None, max_inputs=8):
    """Capacity-achieving input found by solving on candidate supports.

    On each support the face optimum comes from Newton's method; it is
    accepted when every unused symbol satisfies the KKT inequality
    ``D_j <= C``. By concavity only the true support passes, so the search
    stops at the first success. Supports are tried in order of the mass
    ``guess`` puts on the symbols they leave out. Returns ``None`` for more
    than ``max_inputs`` symbols or when nothing qualifies.
    """
    W = as_matrix(W)
    n = W.shape[0]
    if n > max_inputs:
        return None
    weight = np.ones(n) / n if guess is None else np.asarray(guess, dtype=float)
    masks = sorted(
        range(1, 2**n),
        key=lambda m: (sum(weight[j] for j in range(n) if not m >> j & 1), -bin(m).count("1")),
    )
    for mask in masks:
        p, _ = _kkt_candidate(W, [j for j in range(n) if mask >> j & 1])
        if p is not None:
            return p
    return None


def capacity_gradient(W, p=None, tol=1e-12) -> CapacityGradient:
    """Exact partial derivatives of C with respect to off-diagonal entries.

    ``psi[j, k] = sum_m (M[k, m] - M[j, m]) H[m] + log(W[j, k] / W[j, j])``
    and ``grad[j, k] = psi[j, k] * p[j]``. When ``p`` is omitted it comes
    from Muroga, or from Blahut-Arimoto at ``tol`` if Muroga does not apply.
    """
    W = as_matrix(W)
    n = W.shape[0]
    off = ~np.eye(n, dtype=bool)
    if np.any(W <= 0):
        j, k = np.argwhere(W <= 0)[0]
        raise ZeroEntry(f"W[{j}, {k}] = 0 makes log(W_jk / W_jj) undefined")
    M = _inverse(W)
    a = M @ row_entropies(W)
    psi = a[None, :] - a[:, None] + np.log(W / np.diag(W)[:, None])
    psi[~off] = np.nan
    if p is None:
        p = capacity(W, "auto", tol=tol).p_star.weights
    else:
        p = np.asarray(p, dtype=float)
    return CapacityGradient(psi=psi, grad=psi * p[:, None], p=p)


def perturb(W, j, k, h):
    """Move mass ``h`` from ``W[j, j]`` to ``W[j, k]``."""
    W = np.array(as_matrix(W), dtype=float)
    W[j, k] += h
    W[j, j] -= h
    return W


def fd_capacity_gradient(W, j, k, h=1e-5, tol=1e-12, max_iter=1_000_000) -> float:
    """Central difference of the Blahut-Arimoto capacity along ``perturb(W, j, k, .)``."""
    W = as_matrix(W)
    if j == k:
        raise StepOutOfRange("j and k must differ")
    for s in (h, -h):
        if not (0 < W[j, k] + s < 1 and 0 < W[j, j] - s < 1):
            raise StepOutOfRange(f"step {s:g} leaves (0, 1) at row {j}")
    up = blahut_arimoto(perturb(W, j, k, h), tol, max_iter).C
    down = blahut_arimoto(perturb(W, j, k, -h), tol, max_iter).C
    return (up - down) / (2 * h)


def _check_generator(Q):
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    if Q.ndim != 2 or Q.shape != (n, n):
        raise InvalidPerturbation("Q must be square")
    off = Q[~np.eye(n, dtype=bool)]
    if np.any(np.abs(Q.sum(axis=1)) > 1e-12) or np.any(np.diag(Q) >= 0) or np.any(off < 0):
        raise InvalidPerturbation(
            "Q needs zero row sums, negative diagonal and nonnegative off-diagonal"
        )
    return Q


def good_channel(Q, eps):
    """The near-identity channel ``I + eps Q``."""
    Q = _check_generator(Q)
    W = np.eye(Q.shape[0]) + eps * Q
    if np.any(W < 0):
        raise InvalidPerturbation(f"eps = {eps:g} is too large for this Q")
    return validate_channel(W)


def good_channel_expansion_check(Q, eps) -> float:
    """``max_j |(M H)_j - H_j|`` for ``W = I + eps Q``; second order in eps."""
    W = as_matrix(good_channel(Q, eps))
    H = row_entropies(W)
    if eps == 0:
        return 0.0
    return float(np.max(np.abs(_inverse(W) @ H - H)))


def good_channel_first_order(Q, eps) -> np.ndarray:
    """Leading term shared by ``(M H)_j`` and ``H_j`` for ``W = I + eps Q``."""
    Q = _check_generator(Q)
    n = Q.shape[0]
    out = np.empty(n)
    for j in range(n):
        others = [l for l in range(n) if l != j and Q[j, l] > 0]
        out[j] = -eps * (
            Q[j, j] * (1 - np.log(eps)) + sum(Q[j, l] * np.log(Q[j, l]) for l in others)
        )
    return out


def bsc(eps) -> np.ndarray:
    return np.array([[1 - eps, eps], [eps, 1 - eps]])


def bsc_capacity(eps) -> float:
    """``ln 2 + eps ln eps + (1 - eps) ln(1 - eps)``."""
    h = 0.0
    for x in (eps, 1 - eps):
        if x > 0:
            h -= x * np.log(x)
    return float(np.log(2) - h)


__all__ = [
    "CapacityGradient",
    "CapacityResult",
    "blahut_arimoto",
    "bsc",
    "bsc_capacity",
    "capacity",
    "capacity_gradient",
    "fd_capacity_gradient",
    "good_channel",
    "good_channel_expansion_check",
    "good_channel_first_order",
    "muroga_capacity",
    "perturb",
]
