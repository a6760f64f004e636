"""Effective temperature, energies and free energy of a stationary distribution.

A strictly positive distribution ``p`` over n states together with a
timescale ``t_inf`` maps one-to-one onto energies ``E`` and an inverse
temperature ``beta`` (units with hbar = 1)::

    gamma_k = mean(log p) - log p_k = beta E_k
    beta    = t_inf * ||p||_2 * sqrt(||gamma||_2^2 + 1)

For a channel the distribution is the capacity-achieving input and the
timescale is the L2 mixing time of the channel viewed as a Markov chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .capacity import capacity
from .core import (
    Distribution,
    as_matrix,
    as_vector,
    entropy,
    joint_distribution,
    make_distribution,
    mutual_information,
)
from .errors import DegenerateDistribution, IdentityViolation, InfiniteTimescale, NonPositiveBeta
from .mixing import spectral_gap

DEFAULT_SUPPORT_EPS = 1e-6


@dataclass(frozen=True)
class ThermoState:
    gamma: np.ndarray
    beta: float
    E: np.ndarray
    logZ: float
    F: float
    H: float
    U_internal: float
    t_inf: float
    p: Distribution

    @property
    def Z(self) -> float:
        return math.exp(self.logZ)

    def gibbs(self) -> np.ndarray:
        w = np.exp(-self.beta * self.E)
        return w / self.Z

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma.tolist(),
            "beta": self.beta,
            "E": self.E.tolist(),
            "logZ": self.logZ,
            "F": self.F,
            "H": self.H,
            "U_internal": self.U_internal,
            "t_inf": self.t_inf,
            "p": self.p.weights.tolist(),
        }


@dataclass(frozen=True)
class DmcThermo:
    C: float
    p_star: Distribution
    t_mix: float
    beta_mix: float
    F_mix: float
    H: float
    degenerate: bool
    method: str = ""
    state: ThermoState | None = None

    @property
    def beta_inv_mix(self) -> float:
        return 0.0 if math.isinf(self.beta_mix) else 1.0 / self.beta_mix

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "p_star": self.p_star.weights.tolist(),
            "t_mix": self.t_mix,
            "beta_mix": self.beta_mix,
            "F_mix": self.F_mix,
            "H": self.H,
            "degenerate": self.degenerate,
        }


def effective_state(p, t_inf) -> ThermoState:
    p = as_vector(p)
    if p.ndim != 1 or np.any(p <= 0):
        raise DegenerateDistribution("effective temperature needs p > 0")
    if not (t_inf > 0):
        raise DegenerateDistribution("t_inf must be positive")
    if math.isinf(t_inf):
        raise InfiniteTimescale("t_inf is infinite, so beta would be too")
    logp = np.log(p)
    mean = logp.mean()
    gamma = mean - logp
    beta = t_inf * np.linalg.norm(p) * math.sqrt(gamma @ gamma + 1)
    E = gamma / beta
    logZ = -mean
    H = entropy(p)
    return ThermoState(
        gamma=gamma,
        beta=float(beta),
        E=E,
        logZ=float(logZ),
        F=float(-logZ / beta),
        H=H,
        U_internal=float(p @ E),
        t_inf=float(t_inf),
        p=make_distribution(p),
    )


def inverse_state(E, beta):
    """Recover ``(p, t_inf)`` from energies and inverse temperature.

    Energies matter only up to an additive constant; ``gamma`` is
    recomputed from ``p`` and so is always centered.
    """
    if not (beta > 0):
        raise NonPositiveBeta(f"beta = {beta!r}")
    x = -beta * np.asarray(E, dtype=float)
    x -= x.max()
    w = np.exp(x)
    p = w / w.sum()
    logp = np.log(p)
    gamma = logp.mean() - logp
    t_inf = beta / (np.linalg.norm(p) * math.sqrt(gamma @ gamma + 1))
    return Distribution(p), float(t_inf)


def dmc_thermo(
    W, ba_tol=1e-10, support_eps=DEFAULT_SUPPORT_EPS, method="auto", ba_max_iter=100_000
) -> DmcThermo:
    """Capacity, mixing time and effective thermodynamics of one channel.

    If the capacity-achieving input puts less than ``support_eps`` on some
    symbol the result is flagged degenerate and reports the limiting values
    ``F_mix = 0`` and ``beta_mix = inf``.
    """
    W = as_matrix(W)
    cap = capacity(W, method, tol=ba_tol, max_iter=ba_max_iter)
    mix = spectral_gap(W)
    p = cap.p_star.weights
    H = entropy(p)
    if p.min() < support_eps:
        return DmcThermo(
            C=cap.C,
            p_star=cap.p_star,
            t_mix=mix.t_mix,
            beta_mix=math.inf,
            F_mix=0.0,
            H=H,
            degenerate=True,
            method=cap.method,
        )
    st = effective_state(p, mix.t_mix)
    return DmcThermo(
        C=cap.C,
        p_star=cap.p_star,
        t_mix=mix.t_mix,
        beta_mix=st.beta,
        F_mix=st.F,
        H=H,
        degenerate=False,
        method=cap.method,
        state=st,
    )


def factoring_work(W, p, beta=1.0, F=0.0) -> float:
    """Work needed to factor the joint law ``V = p W`` into its marginals.

    With joint energies ``E_jk = F - log(V_jk) / beta`` and marginal
    energies ``E_A = F - log(p) / beta``, ``E_B = F - log(q) / beta``,
    returns ``sum_jk V_jk (E_jk - E_A_j - E_B_k)``. Satisfies
    ``I(X;Y) = -beta (F + dW)``; a violation raises IdentityViolation.
    """
    if not (beta > 0):
        raise NonPositiveBeta(f"beta = {beta!r}")
    W, p = as_matrix(W), as_vector(p)
    V = joint_distribution(W, p)
    a = V.sum(axis=1)
    b = V.sum(axis=0)
    dW = 0.0
    for j, k in zip(*np.nonzero(V)):
        E_jk = F - math.log(V[j, k]) / beta
        E_a = F - math.log(a[j]) / beta
        E_b = F - math.log(b[k]) / beta
        dW += V[j, k] * (E_jk - (E_a + E_b))
    residual = abs(mutual_information(W, p) + beta * (F + dW))
    if residual > 1e-10 * max(1.0, abs(beta * F)):
        raise IdentityViolation(f"I + beta (F + dW) = {residual:.3g}")
    return float(dW)
