"""Two-parameter channel families and sweeps over the unit square.

A sweep evaluates :func:`dmc_thermo` on an ``n_u x n_v`` grid inset from
the boundary by ``margin`` and stores capacity, mixing time, effective
temperature, free energy, input entropy and the capacity-achieving input
per cell. Cells that fail are flagged with an error code and never abort
the sweep.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .capacity import capacity_gradient
from .core import validate_channel
from .errors import (
    AllCellsFailed,
    ChannelThermoError,
    InvalidParams,
    MissingPStar,
    NegativeEntry,
    OutOfRange,
    SingularNeighborhood,
)
from .thermo import DEFAULT_SUPPORT_EPS, dmc_thermo

FAMILIES = ("biodmc", "constrained3", "convex3")

CONSTRAINED_DEFAULTS = {"W11": 0.35, "W22": 0.05, "W31": 0.15, "W32": 0.2, "W33": 0.65}

CONVEX_DEFAULTS = {
    "a": 0.2,
    "Wu": [[0.25, 0.14, 0.61], [0.29, 0.67, 0.04], [0.08, 0.74, 0.18]],
    "Wv": [[0.31, 0.04, 0.65], [0.50, 0.10, 0.40], [0.01, 0.58, 0.41]],
}

#: Blahut-Arimoto converges slowly next to zero-support regions
SWEEP_MAX_ITER = 1_000_000

QUANTITIES = ("C", "t_mix", "beta_inv_mix", "F_mix", "H")


def biodmc(a, b) -> np.ndarray:
    """Binary channel with crossover probabilities ``W12 = a``, ``W21 = b``."""
    if not (0 < a < 1 and 0 < b < 1):
        raise OutOfRange(f"crossovers ({a}, {b}) must lie in (0, 1)")
    return np.array([[1 - a, a], [b, 1 - b]])


def family_constrained(u, v, params=None) -> np.ndarray:
    """3x3 channel with fixed success probabilities W11, W22 and fixed row 3.

    ``u`` splits row 1's error mass between outputs 2 and 3, ``v`` splits
    row 2's between outputs 3 and 1.
    """
    P = _constrained_params(params)
    if not (0 <= u <= 1 and 0 <= v <= 1):
        raise OutOfRange(f"(u, v) = ({u}, {v}) outside the unit square")
    W11, W22 = P["W11"], P["W22"]
    return np.array(
        [
            [W11, (1 - W11) * u, (1 - W11) * (1 - u)],
            [(1 - W22) * (1 - v), W22, (1 - W22) * v],
            [P["W31"], P["W32"], P["W33"]],
        ]
    )


def _constrained_params(params):
    P = dict(CONSTRAINED_DEFAULTS)
    if params:
        unknown = set(params) - set(P)
        if unknown:
            raise InvalidParams(f"unknown parameters {sorted(unknown)}")
        P.update(params)
    try:
        P = {k: float(x) for k, x in P.items()}
    except (TypeError, ValueError) as exc:
        raise InvalidParams(str(exc)) from exc
    if not (0 < P["W11"] < 1 and 0 < P["W22"] < 1):
        raise InvalidParams("W11 and W22 must lie in (0, 1)")
    row3 = np.array([P["W31"], P["W32"], P["W33"]])
    if np.any(row3 < 0) or abs(row3.sum() - 1) > 1e-12:
        raise InvalidParams(f"third row {row3.tolist()} is not a distribution")
    return P


def convex_coefficients(u, v, a):
    """``(c0, cu, cv)``; they sum to one for every ``(u, v)``."""
    return 1 - a * (u + v - 1), a * (u - 0.5), a * (v - 0.5)


def family_convex(u, v, a=0.2, Wu=None, Wv=None) -> np.ndarray:
    """``c0 * 11^T / n + cu * Wu + cv * Wv``; equals ``11^T / n`` at the center."""
    Wu = np.asarray(CONVEX_DEFAULTS["Wu"] if Wu is None else Wu, dtype=float)
    Wv = np.asarray(CONVEX_DEFAULTS["Wv"] if Wv is None else Wv, dtype=float)
    n = Wu.shape[0]
    c0, cu, cv = convex_coefficients(u, v, a)
    W = c0 * np.full((n, n), 1 / n) + cu * Wu + cv * Wv
    if np.any(W < 0):
        raise NegativeEntry(f"a = {a} makes entries negative at ({u}, {v})")
    return W


@dataclass(frozen=True)
class ChannelFamily:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise InvalidParams(f"unknown family {self.kind!r}; choose from {FAMILIES}")
        params = dict(self.params or {})
        if self.kind == "biodmc" and params:
            raise InvalidParams("biodmc takes no parameters")
        if self.kind == "constrained3":
            params = _constrained_params(params)
        if self.kind == "convex3":
            params = _convex_params(params)
        object.__setattr__(self, "params", params)

    @property
    def n(self) -> int:
        return 2 if self.kind == "biodmc" else 3

    def matrix(self, u, v) -> np.ndarray:
        if self.kind == "biodmc":
            return biodmc(u, v)
        if self.kind == "constrained3":
            return family_constrained(u, v, self.params)
        return family_convex(u, v, **self.params)

    def __call__(self, u, v):
        return validate_channel(self.matrix(u, v))


def _convex_params(params):
    P = {
        "a": CONVEX_DEFAULTS["a"],
        "Wu": CONVEX_DEFAULTS["Wu"],
        "Wv": CONVEX_DEFAULTS["Wv"],
    }
    unknown = set(params) - set(P)
    if unknown:
        raise InvalidParams(f"unknown parameters {sorted(unknown)}")
    P.update(params)
    try:
        a = float(P["a"])
        Wu = validate_channel(P["Wu"]).entries
        Wv = validate_channel(P["Wv"]).entries
    except (TypeError, ValueError) as exc:
        raise InvalidParams(str(exc)) from exc
    if Wu.shape != Wv.shape:
        raise InvalidParams("Wu and Wv must have the same shape")
    # entries are affine in (u, v): checking the corners covers the square
    try:
        for u in (0.0, 1.0):
            for v in (0.0, 1.0):
                family_convex(u, v, a, Wu, Wv)
    except NegativeEntry as exc:
        raise InvalidParams(str(exc)) from exc
    return {"a": a, "Wu": Wu.tolist(), "Wv": Wv.tolist()}


def grid_axis(n, margin) -> np.ndarray:
    return np.linspace(margin, 1 - margin, n)


@dataclass
class LandscapeGrid:
    """Per-cell sweep results; arrays are indexed ``[i_u, i_v]``."""

    u: np.ndarray
    v: np.ndarray
    C: np.ndarray
    t_mix: np.ndarray
    beta_inv_mix: np.ndarray
    F_mix: np.ndarray
    H: np.ndarray
    p_star: np.ndarray
    degenerate: np.ndarray
    error: np.ndarray
    margin: float = 0.0
    kind: str = ""

    @property
    def shape(self):
        return self.C.shape

    @property
    def n(self) -> int:
        return self.p_star.shape[-1]

    @property
    def ok(self) -> np.ndarray:
        return self.error == ""

    @property
    def step(self):
        du = self.u[1] - self.u[0] if self.u.size > 1 else 0.0
        dv = self.v[1] - self.v[0] if self.v.size > 1 else 0.0
        return du, dv

    def field(self, name) -> np.ndarray:
        if name in QUANTITIES:
            return getattr(self, name)
        if name.startswith("p") and name[1:].isdigit():
            return self.p_star[..., int(name[1:]) - 1]
        raise KeyError(name)

    def columns(self):
        return ["u", "v", *QUANTITIES, *(f"p{j + 1}" for j in range(self.n)), "degenerate", "error"]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns())
        for i, u in enumerate(self.u):
            for j, v in enumerate(self.v):
                row = [_fmt(u), _fmt(v)]
                row += [_fmt(getattr(self, q)[i, j]) for q in QUANTITIES]
                row += [_fmt(x) for x in self.p_star[i, j]]
                row += [int(self.degenerate[i, j]), self.error[i, j]]
                w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path_or_text) -> LandscapeGrid:
        if isinstance(path_or_text, str) and "\n" in path_or_text:
            rows = list(csv.DictReader(io.StringIO(path_or_text)))
        else:
            with open(path_or_text, newline="") as fh:
                rows = list(csv.DictReader(fh))
        if not rows:
            raise InvalidParams("grid file has no rows")
        missing = {"u", "v", *QUANTITIES, "degenerate", "error"} - set(rows[0])
        if missing:
            raise InvalidParams(f"grid file lacks columns {sorted(missing)}")
        n = sum(1 for c in rows[0] if c.startswith("p") and c[1:].isdigit())
        us = sorted({float(r["u"]) for r in rows})
        vs = sorted({float(r["v"]) for r in rows})
        grid = empty_grid(np.array(us), np.array(vs), n)
        iu = {x: i for i, x in enumerate(us)}
        iv = {x: j for j, x in enumerate(vs)}
        for r in rows:
            i, j = iu[float(r["u"])], iv[float(r["v"])]
            for q in QUANTITIES:
                getattr(grid, q)[i, j] = float(r[q])
            grid.p_star[i, j] = [float(r[f"p{k + 1}"]) for k in range(n)]
            grid.degenerate[i, j] = r["degenerate"] in ("1", "True", "true")
            grid.error[i, j] = r["error"]
        grid.margin = us[0]
        return grid


def _fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def empty_grid(u, v, n) -> LandscapeGrid:
    shape = (u.size, v.size)
    nan = lambda: np.full(shape, np.nan)  # noqa: E731
    return LandscapeGrid(
        u=u,
        v=v,
        C=nan(),
        t_mix=nan(),
        beta_inv_mix=nan(),
        F_mix=nan(),
        H=nan(),
        p_star=np.full(shape + (n,), np.nan),
        degenerate=np.zeros(shape, dtype=bool),
        error=np.full(shape, "", dtype=object),
    )


def evaluate_cell(family, u, v, ba_tol=1e-10, support_eps=DEFAULT_SUPPORT_EPS, ba_max_iter=SWEEP_MAX_ITER):
    """One grid cell as ``(C, t_mix, beta_inv, F, H, p_star, degenerate, error)``."""
    nan = math.nan
    try:
        r = dmc_thermo(family(u, v), ba_tol=ba_tol, support_eps=support_eps, ba_max_iter=ba_max_iter)
    except ChannelThermoError as exc:
        return (nan, nan, nan, nan, nan, [nan] * family.n, False, exc.code)
    return (r.C, r.t_mix, r.beta_inv_mix, r.F_mix, r.H, r.p_star.weights.tolist(), r.degenerate, "")


def _row(args):
    family, u, vs, ba_tol, support_eps = args
    return [evaluate_cell(family, u, v, ba_tol, support_eps) for v in vs]


def default_workers() -> int:
    env = os.environ.get("CHANNEL_THERMO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise InvalidParams(f"CHANNEL_THERMO_THREADS={env!r} is not an integer") from exc
    return os.cpu_count() or 1


def sweep(
    family,
    n_u=101,
    n_v=101,
    margin=0.02,
    workers=None,
    ba_tol=1e-10,
    support_eps=DEFAULT_SUPPORT_EPS,
) -> LandscapeGrid:
    """Evaluate ``family`` on a grid; rows are farmed out to worker processes.

    Results land in preallocated slots, so the grid does not depend on the
    number of workers.
    """
    if isinstance(family, str):
        family = ChannelFamily(family)
    if n_u < 2 or n_v < 2:
        raise InvalidParams("grid needs at least 2 points per axis")
    if not (0 <= margin < 0.5):
        raise InvalidParams("margin must lie in [0, 0.5)")
    workers = default_workers() if workers is None else max(1, int(workers))
    u, v = grid_axis(n_u, margin), grid_axis(n_v, margin)
    grid = empty_grid(u, v, family.n)
    grid.margin = margin
    grid.kind = family.kind
    tasks = [(family, float(ui), v.tolist(), ba_tol, support_eps) for ui in u]
    if workers == 1:
        rows = map(_row, tasks)
    else:
        pool = ProcessPoolExecutor(max_workers=min(workers, n_u))
        rows = pool.map(_row, tasks, chunksize=max(1, n_u // (4 * workers)))
    try:
        for i, row in enumerate(rows):
            for j, (C, t, bi, F, H, p, deg, err) in enumerate(row):
                grid.C[i, j], grid.t_mix[i, j], grid.beta_inv_mix[i, j] = C, t, bi
                grid.F_mix[i, j], grid.H[i, j] = F, H
                grid.p_star[i, j] = p
                grid.degenerate[i, j] = deg
                grid.error[i, j] = err
    finally:
        if workers != 1:
            pool.shutdown()
    return grid


@dataclass
class ArgminReport:
    quantity: str
    value: float
    cells: list
    tie_tol: float
    diagonal_distance: list | None = None
    step: float = 0.0

    def to_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "value": self.value,
            "tie_tol": self.tie_tol,
            "step": self.step,
            "minimizers": [
                {"i": i, "j": j, "u": u, "v": v, "value": val} for i, j, u, v, val in self.cells
            ],
            "diagonal_distance": self.diagonal_distance,
        }


def diagonal_distance(u, v) -> float:
    """L-infinity distance from ``(u, v)`` to the zero-capacity line ``u + v = 1``."""
    return abs(u + v - 1) / 2


def argmin_report(grid, quantity, tie_tol=1e-9, biodmc_grid=None) -> ArgminReport:
    """Grid minimizers of ``quantity``, with every cell within ``tie_tol`` of the min."""
    vals = grid.field(quantity)
    good = grid.ok & np.isfinite(vals)
    if not good.any():
        raise AllCellsFailed(f"no usable cells for {quantity}")
    vmin = float(vals[good].min())
    hits = np.argwhere(good & (vals <= vmin + tie_tol))
    cells = [(int(i), int(j), float(grid.u[i]), float(grid.v[j]), float(vals[i, j])) for i, j in hits]
    if biodmc_grid is None:
        biodmc_grid = grid.kind == "biodmc" or (not grid.kind and grid.n == 2)
    dist = [diagonal_distance(c[2], c[3]) for c in cells] if biodmc_grid else None
    return ArgminReport(
        quantity=quantity,
        value=vmin,
        cells=cells,
        tie_tol=tie_tol,
        diagonal_distance=dist,
        step=float(max(grid.step)),
    )


def _set_distance(a, b):
    """Smallest L-infinity distance between two lists of argmin cells."""
    return min(max(abs(x[2] - y[2]), abs(x[3] - y[3])) for x in a for y in b)


def diagonal_argmin_check(grid, tie_tol=1e-9) -> dict:
    """Do the minimizers of C and F_mix sit on the zero-capacity diagonal?

    Entropy is reported alongside as the contrast case. Distances are in
    units of the grid step; "on the diagonal" means within one step and
    the two minimizer sets must come within two steps of each other.
    """
    step = max(grid.step)
    out = {"step": step, "tie_tol": tie_tol}
    reports = {q: argmin_report(grid, q, tie_tol, biodmc_grid=True) for q in ("C", "F_mix", "H")}
    for q, rep in reports.items():
        worst = max(rep.diagonal_distance) / step
        out[q] = {
            "value": rep.value,
            "n_minimizers": len(rep.cells),
            "max_diagonal_distance_steps": worst,
            "on_diagonal": bool(worst <= 1 + 1e-9),
        }
    sep = _set_distance(reports["C"].cells, reports["F_mix"].cells) / step
    out["C_F_separation_steps"] = sep
    out["passed"] = bool(
        out["C"]["on_diagonal"]
        and out["F_mix"]["on_diagonal"]
        and sep <= 2 + 1e-9
        and not out["H"]["on_diagonal"]
    )
    return out


def support_masks(grid, support_eps=DEFAULT_SUPPORT_EPS) -> np.ndarray:
    """Boolean masks ``[j, i_u, i_v]``: cells where input symbol j is unused."""
    if grid.p_star is None or np.all(np.isnan(grid.p_star)):
        raise MissingPStar("grid carries no capacity-achieving distributions")
    p = np.where(np.isnan(grid.p_star), np.inf, grid.p_star)
    return np.moveaxis(p < support_eps, -1, 0) & grid.ok[None]


def _distance_to(mask, step_u, step_v):
    """L-infinity distance (in (u, v) units) from every cell to the nearest cell of ``mask``."""
    idx = np.argwhere(mask)
    if idx.size == 0:
        return np.full(mask.shape, np.inf)
    I, J = np.indices(mask.shape)
    out = np.full(mask.shape, np.inf)
    for i, j in idx:
        d = np.maximum(np.abs(I - i) * step_u, np.abs(J - j) * step_v)
        np.minimum(out, d, out=out)
    return out


def local_minima(values, ok=None) -> np.ndarray:
    """Cells strictly below all of their (up to four) axis neighbors."""
    vals = np.where(np.isfinite(values), values, np.inf)
    if ok is not None:
        vals = np.where(ok, vals, np.inf)
    out = np.isfinite(vals)
    for axis in (0, 1):
        for shift in (1, -1):
            nb = np.roll(vals, shift, axis=axis)
            edge = [slice(None)] * 2
            edge[axis] = 0 if shift == 1 else -1
            nb[tuple(edge)] = np.inf
            out &= vals < nb
    return out


def corner_basin_diagnostics(
    grid, support_eps=DEFAULT_SUPPORT_EPS, band_width=0.05, required_fraction=0.7
) -> dict:
    """Where do free-energy basins sit relative to the capacity corners?

    The corners of C are the edges of the masks ``M_j`` on which the
    capacity-achieving input drops symbol j. A full-support cell belongs to
    the boundary band between ``M_j`` and ``M_k`` when its distances to the
    two masks differ by at most ``band_width`` (in (u, v) units), i.e. it
    lies near the ridge equidistant from both. The report gives the
    fraction of strict 4-neighbor local minima of F_mix that fall in a band.
    """
    masks = support_masks(grid, support_eps)
    n = masks.shape[0]
    nonempty = [int(j) for j in range(n) if masks[j].any()]
    report = {
        "support_eps": support_eps,
        "band_width": band_width,
        "required_fraction": required_fraction,
        "mask_sizes": {f"p{j + 1}": int(masks[j].sum()) for j in range(n)},
        "mask_centroids": {},
        "disjoint": True,
        "plateau_min_F": {},
    }
    for j in nonempty:
        ii, jj = np.nonzero(masks[j])
        report["mask_centroids"][f"p{j + 1}"] = [float(grid.u[ii].mean()), float(grid.v[jj].mean())]
        report["plateau_min_F"][f"p{j + 1}"] = float(np.nanmin(grid.F_mix[masks[j]]))
    for a in range(n):
        for b in range(a + 1, n):
            if np.any(masks[a] & masks[b]):
                report["disjoint"] = False
    minima = local_minima(grid.F_mix, grid.ok)
    report["n_local_minima"] = int(minima.sum())
    report["local_minima"] = [
        [float(grid.u[i]), float(grid.v[j]), float(grid.F_mix[i, j])] for i, j in np.argwhere(minima)
    ]
    if len(nonempty) < 2:
        report["note"] = "fewer than two zero-support masks: no corners"
        report["band_size"] = 0
        report["fraction_in_band"] = None
        report["passed"] = False
        return report
    du, dv = grid.step
    dist = {j: _distance_to(masks[j], du, dv) for j in nonempty}
    any_mask = masks.any(axis=0)
    band = np.zeros(grid.shape, dtype=bool)
    for x in nonempty:
        for y in nonempty:
            if x < y:
                band |= np.abs(dist[x] - dist[y]) <= band_width
    band &= ~any_mask & grid.ok
    report["band_size"] = int(band.sum())
    frac = float((minima & band).sum() / minima.sum()) if minima.any() else 0.0
    report["fraction_in_band"] = frac
    report["passed"] = bool(report["disjoint"] and frac >= required_fraction)
    return report


def log_partition(p) -> float:
    """``log Z = -mean(log p)`` of the effective Gibbs form of ``p``."""
    p = np.asarray(p, dtype=float)
    return float(-np.mean(np.log(p)))


def log_partition_gradient(W, j, k, h=1e-6, ba_tol=1e-12) -> float:
    """Central difference of ``log Z`` of the capacity-achieving input along ``W[j, k]``."""
    from .capacity import capacity, perturb

    up = capacity(perturb(W, j, k, h), tol=ba_tol).p_star.weights
    down = capacity(perturb(W, j, k, -h), tol=ba_tol).p_star.weights
    return (log_partition(up) - log_partition(down)) / (2 * h)


def partition_premise(W, p, rel_tol=0.05):
    """Pairs ``(j, k)`` with ``sum_l M[j, l] / p_l`` and ``sum_l M[k, l] / p_l`` within ``rel_tol``."""
    M = np.linalg.inv(np.asarray(W, dtype=float))
    s = M @ (1 / np.asarray(p, dtype=float))
    pairs = []
    n = len(s)
    for j in range(n):
        for k in range(n):
            if j != k and abs(s[j] - s[k]) <= rel_tol * max(abs(s[j]), abs(s[k])):
                pairs.append((j, k))
    return s, pairs


def log_partition_check(W, rel_tol=0.05, h=1e-6) -> dict:
    """Compare ``|d log Z / dW_jk|`` with ``|dC / dW_jk|`` where the premise holds."""
    W = np.asarray(W, dtype=float)
    g = capacity_gradient(W)
    if g.p.min() < DEFAULT_SUPPORT_EPS:
        # log Z and the row sums need every input in use
        return {"applicable": False, "p_star": g.p.tolist(), "row_sums": None, "pairs": []}
    s, pairs = partition_premise(W, g.p, rel_tol)
    entries = []
    for j, k in pairs:
        entries.append(
            {
                "j": j,
                "k": k,
                "dlogZ": log_partition_gradient(W, j, k, h),
                "dC": float(g.grad[j, k]),
                "psi": float(g.psi[j, k]),
            }
        )
    return {"applicable": True, "p_star": g.p.tolist(), "row_sums": s.tolist(), "pairs": entries}


def near_argmin_psi_check(grid, family, radius=2, ratio=0.1, rel_tol=0.05) -> dict:
    """Is ``psi`` small around the capacity minimizer compared with the whole grid?

    ``psi`` is evaluated on every grid cell where the gradient formula is
    defined. The check passes when the largest ``|psi|`` within ``radius``
    cells of argmin C is at most ``ratio`` times the grid-wide largest.
    """
    if isinstance(family, str):
        family = ChannelFamily(family)
    rep = argmin_report(grid, "C")
    i0, j0 = rep.cells[0][:2]
    psi_max = np.full(grid.shape, np.nan)
    for i, u in enumerate(grid.u):
        for j, v in enumerate(grid.v):
            try:
                g = capacity_gradient(family.matrix(u, v), p=np.ones(family.n))
            except ChannelThermoError:
                continue
            psi_max[i, j] = np.nanmax(np.abs(g.psi))
    if np.isnan(psi_max[i0, j0]):
        raise SingularNeighborhood(
            f"capacity gradient undefined at argmin C ({grid.u[i0]:.4g}, {grid.v[j0]:.4g})"
        )
    lo_i, hi_i = max(0, i0 - radius), min(grid.shape[0], i0 + radius + 1)
    lo_j, hi_j = max(0, j0 - radius), min(grid.shape[1], j0 + radius + 1)
    local = float(np.nanmax(psi_max[lo_i:hi_i, lo_j:hi_j]))
    glob = float(np.nanmax(psi_max))
    premise = log_partition_check(family.matrix(grid.u[i0], grid.v[j0]), rel_tol)
    return {
        "argmin": {"u": float(grid.u[i0]), "v": float(grid.v[j0]), "C": rep.value},
        "radius": radius,
        "ratio_threshold": ratio,
        "local_max_abs_psi": local,
        "global_max_abs_psi": glob,
        "ratio": local / glob,
        "singular_cells": int(np.isnan(psi_max).sum()),
        "log_partition": premise,
        "passed": bool(local <= ratio * glob),
    }
