"""L2 mixing time of a stochastic matrix.

The time reversal ``P†`` and the multiplicative reversibilization ``P† P``
give a Dirichlet form whose symmetric normalization ``U`` has the spectral
gap ``lambda_*`` as its smallest nonzero eigenvalue; ``t_mix = 1 /
lambda_*``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Distribution, as_matrix, as_vector
from .errors import (
    NonUniqueInvariant,
    NotFound,
    NotInvariant,
    SymmetryViolation,
    ZeroInvariantMass,
)

#: eigenvalues of U at most this large count as zero
ZERO_EIG_TOL = 1e-10
#: eigenvalues of P within this of 1 count as unit eigenvalues
UNIT_EIG_TOL = 1e-8
INVARIANCE_TOL = 1e-8
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class MixingResult:
    lambda_star: float
    t_mix: float
    spectrum_U: np.ndarray
    invariant: Distribution

    def to_dict(self) -> dict:
        return {
            "lambda_star": self.lambda_star,
            "t_mix": self.t_mix,
            "spectrum_U": self.spectrum_U.tolist(),
            "invariant": self.invariant.weights.tolist(),
        }


@dataclass(frozen=True)
class ReversibilizationParts:
    P_dagger: np.ndarray
    S: np.ndarray
    T: np.ndarray
    U: np.ndarray


def invariant_distribution(P) -> Distribution:
    """Left eigenvector of ``P`` for eigenvalue 1, normalized to sum to one.

    Raises :class:`NonUniqueInvariant` when eigenvalue 1 is repeated
    (reducible chain).
    """
    P = as_matrix(P)
    vals, vecs = np.linalg.eig(P.T)
    unit = np.flatnonzero(np.abs(vals - 1.0) <= UNIT_EIG_TOL)
    if unit.size > 1:
        raise NonUniqueInvariant(f"eigenvalue 1 has multiplicity {unit.size}")
    if unit.size == 0:
        raise NotFound("no eigenvalue equal to 1; is P stochastic?")
    v = np.real(vecs[:, unit[0]])
    v = v / v.sum()
    if v.min() < -INVARIANCE_TOL:
        raise NotFound("invariant eigenvector has mixed signs")
    v = np.clip(v, 0.0, None)
    return Distribution(v / v.sum(), "invariant")


def _checked_invariant(P, p):
    p = as_vector(p)
    if np.any(p <= 0):
        raise ZeroInvariantMass(
            f"invariant distribution vanishes at {np.flatnonzero(p <= 0).tolist()}"
        )
    if np.max(np.abs(p @ P - p)) > INVARIANCE_TOL:
        raise NotInvariant("p P != p")
    return p


def time_reversal(P, p) -> np.ndarray:
    """``P†[j, k] = p[k] P[k, j] / p[j]``."""
    P = as_matrix(P)
    p = _checked_invariant(P, p)
    return P.T * p[None, :] / p[:, None]


def reversibilization(P, p) -> ReversibilizationParts:
    P = as_matrix(P)
    p = _checked_invariant(P, p)
    Pd = time_reversal(P, p)
    S = p[:, None] * (Pd @ P - np.eye(P.shape[0]))
    asym = np.max(np.abs(S - S.T))
    if asym > SYMMETRY_TOL:
        raise SymmetryViolation(f"S is asymmetric by {asym:.3g}")
    T = (S + S.T) / 2
    r = 1 / np.sqrt(p)
    U = -(r[:, None] * T * r[None, :])
    U = (U + U.T) / 2
    return ReversibilizationParts(P_dagger=Pd, S=S, T=T, U=U)


def spectral_gap(P, p=None) -> MixingResult:
    """Spectral gap and L2 mixing time; ``t_mix`` is ``inf`` if ``U == 0``."""
    P = as_matrix(P)
    inv = invariant_distribution(P) if p is None else Distribution(as_vector(p), "invariant")
    parts = reversibilization(P, inv)
    eigs = np.linalg.eigvalsh(parts.U)
    nonzero = eigs[np.abs(eigs) > ZERO_EIG_TOL]
    if nonzero.size == 0:
        lam, t = 0.0, math.inf
    else:
        lam = float(nonzero.min())
        t = 1.0 / lam
    return MixingResult(lambda_star=lam, t_mix=t, spectrum_U=eigs, invariant=inv)


def dirichlet_form(K, p, f) -> float:
    """``E_K(f) = 1/2 sum_jk p_j K_jk (f_j - f_k)^2``."""
    K = as_matrix(K)
    p = as_vector(p)
    f = np.asarray(f, dtype=float)
    diff = f[:, None] - f[None, :]
    return float(0.5 * np.sum(p[:, None] * K * diff**2))


def variance(p, f) -> float:
    p = as_vector(p)
    f = np.asarray(f, dtype=float)
    mean = p @ f
    return float(p @ (f - mean) ** 2)


def gap_minimizer(P, p=None) -> np.ndarray:
    """Test function attaining ``lambda_*``: the U-eigenvector scaled by p^-1/2."""
    P = as_matrix(P)
    p = invariant_distribution(P).weights if p is None else as_vector(p)
    U = reversibilization(P, p).U
    vals, vecs = np.linalg.eigh(U)
    idx = np.flatnonzero(np.abs(vals) > ZERO_EIG_TOL)
    if idx.size == 0:
        raise NotFound("U has no nonzero eigenvalue")
    g = vecs[:, idx[np.argmin(vals[idx])]]
    return g / np.sqrt(p)


def variational_ratios(P, fs, p=None) -> np.ndarray:
    """``E_{P†P}(f) / Var_p(f)`` for each row of ``fs``."""
    P = as_matrix(P)
    p = invariant_distribution(P).weights if p is None else as_vector(p)
    K = time_reversal(P, p) @ P
    out = []
    for f in np.atleast_2d(fs):
        v = variance(p, f)
        out.append(dirichlet_form(K, p, f) / v if v > 0 else np.nan)
    return np.array(out)


def variational_gap_samples(P, n_samples=1000, seed=0, extra=None) -> float:
    """Smallest Rayleigh ratio over random Gaussian test functions.

    ``extra`` test functions, if given, join the sample. The result upper
    bounds ``lambda_*`` whenever U has a single zero eigenvalue.
    """
    P = as_matrix(P)
    rng = np.random.default_rng(seed)
    fs = rng.standard_normal((n_samples, P.shape[0]))
    if extra is not None:
        fs = np.vstack([fs, np.atleast_2d(extra)])
    ratios = variational_ratios(P, fs)
    return float(np.nanmin(ratios))
