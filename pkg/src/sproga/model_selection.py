"""Analytic parameter ranges, grids, cluster extraction, and path sweeps.

The fusion strength has a closed two-point window: an edge (i, j) fuses in
isolation once lam * w_ij >= ||x_i - x_j||_2 / 2, giving
lam_min = min over edges and lam_max = max over edges of
||x_i - x_j|| / (2 w_ij). The sparsity strength has a hard ceiling
gamma_max = max_k ||X_k,.||_2 / nu_k beyond which every feature row is
shrunk to zero from a cold start.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .core import ClusterResult, EdgeGraph, SolverConfig, as_data_matrix

__all__ = [
    "ParamRange",
    "PathPoint",
    "lambda_range",
    "gamma_max",
    "param_range",
    "geometric_grid",
    "edge_length_scale",
    "extract_clusters",
    "selected_features",
    "path_sweep",
]

#: default fusion tolerance for cluster extraction, relative to the longest edge
DEFAULT_CLUSTER_TOL = 1e-3


@dataclass(frozen=True)
class ParamRange:
    """Analytic hyper-parameter window; degenerate marks lambda_min == 0
    (some edge has coincident endpoints)."""

    lambda_min: float
    lambda_max: float
    gamma_max: float
    degenerate: bool = False


def lambda_range(X, G: EdgeGraph) -> tuple[float, float]:
    """Min and max over edges of ||x_i - x_j||_2 / (2 w_ij)."""
    X = as_data_matrix(X)
    if G.m == 0:
        raise ValueError("graph has no edges")
    D = X.values[:, G.edges[:, 0]] - X.values[:, G.edges[:, 1]]
    ratios = np.sqrt((D * D).sum(axis=0)) / (2.0 * G.weights)
    return float(ratios.min()), float(ratios.max())


def gamma_max(X, nu) -> float:
    """max_k ||X_k,.||_2 / nu_k; at or above this every feature row zeroes out."""
    X = as_data_matrix(X)
    nu = np.asarray(nu, dtype=float).reshape(-1)
    if nu.shape[0] != X.p or not (nu > 0).all():
        raise ValueError("nu must be positive with one entry per feature")
    row_norms = np.sqrt((X.values ** 2).sum(axis=1))
    return float((row_norms / nu).max())


def param_range(X, G: EdgeGraph, nu=None) -> ParamRange:
    X = as_data_matrix(X)
    lmin, lmax = lambda_range(X, G)
    if nu is None:
        nu = np.ones(X.p)
    return ParamRange(lmin, lmax, gamma_max(X, nu), degenerate=lmin == 0.0)


def geometric_grid(upper: float, lower_bound: float, rho: float,
                   length: Optional[int] = None) -> np.ndarray:
    """Descending sequence upper * rho^i.

    Truncated before dropping below lower_bound, or cut to exactly
    ``length`` points when given (the gamma grid uses a fixed length with
    lower_bound 0). upper <= lower_bound degenerates to the single point
    {upper}.
    """
    if not 0 < rho < 1:
        raise ValueError("rho must be in (0, 1)")
    if not upper > 0:
        raise ValueError("upper must be > 0")
    if length is not None:
        return upper * rho ** np.arange(length)
    if upper <= lower_bound:
        return np.asarray([upper])
    # count points with upper * rho^i >= lower_bound (tiny slack for roundoff)
    limit = math.floor(math.log(lower_bound / upper) / math.log(rho) + 1e-9) + 1 \
        if lower_bound > 0 else None
    if limit is None:
        raise ValueError("lower_bound must be > 0 unless length is given")
    return upper * rho ** np.arange(max(limit, 1))


def edge_length_scale(X, G: EdgeGraph) -> float:
    """Longest edge length ||x_i - x_j||_2 at fit time; the reference scale
    for the fusion tolerance."""
    X = as_data_matrix(X)
    D = X.values[:, G.edges[:, 0]] - X.values[:, G.edges[:, 1]]
    return float(np.sqrt((D * D).sum(axis=0)).max()) if G.m else 0.0


def extract_clusters(U, G: EdgeGraph, tol: float = DEFAULT_CLUSTER_TOL,
                     scale: float = 1.0) -> tuple[np.ndarray, int]:
    """Round fused centers into hard clusters.

    Samples i and j join when (i, j) is a graph edge and
    ||u_i - u_j||_2 <= tol * scale; labels are connected components of the
    surviving edges, numbered by each component's smallest member index.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    U = np.asarray(U, dtype=float)
    n = G.n
    D = U[:, G.edges[:, 0]] - U[:, G.edges[:, 1]]
    fused = np.sqrt((D * D).sum(axis=0)) <= tol * scale
    e = G.edges[fused]
    adj = sp.csr_matrix((np.ones(e.shape[0]), (e[:, 0], e[:, 1])), shape=(n, n))
    k, comp = connected_components(adj, directed=False)
    # renumber components by smallest member index
    first = np.full(k, n, dtype=np.int64)
    np.minimum.at(first, comp, np.arange(n))
    rank = np.empty(k, dtype=np.int64)
    rank[np.argsort(first)] = np.arange(k)
    return rank[comp], int(k)


def selected_features(result: ClusterResult) -> np.ndarray:
    """Mask of feature rows that survived shrinkage (row norm above the
    feature-zero tolerance fixed at fit time)."""
    return result.selected_features.copy()


@dataclass(frozen=True)
class PathPoint:
    """One solved (lam, gamma) grid cell; error is set when the fit failed."""

    lam: float
    gamma: float
    result: Optional[ClusterResult]
    error: Optional[str] = None


def path_sweep(X, G: EdgeGraph, base_cfg: SolverConfig,
               lambda_grid: Sequence[float], gamma_grid: Sequence[float],
               *, warm_start: bool = True, trace: bool = False) -> list[PathPoint]:
    """Fit every (lam, gamma) grid cell, largest lam first.

    Each cell warm-starts from its neighbor: the first cell of a lam row
    from the head of the previous row, later cells from the previous gamma
    cell. Individual fit failures are recorded on the PathPoint and the
    sweep continues. Points come back ordered by decreasing lam, then
    decreasing gamma.
    """
    from .solver import sproga_fit

    X = as_data_matrix(X)
    lams = np.sort(np.asarray(list(lambda_grid), dtype=float))[::-1]
    gammas = np.sort(np.asarray(list(gamma_grid), dtype=float))[::-1]
    if lams.size == 0 or gammas.size == 0:
        raise ValueError("grids must be nonempty")
    points: list[PathPoint] = []
    row_head = None
    for lam in lams:
        prev = row_head
        row_head = None
        for gi, gamma in enumerate(gammas):
            cfg = replace(base_cfg, lam=float(lam), gamma=float(gamma))
            init = prev if warm_start else None
            try:
                res = sproga_fit(X, G, cfg, init_centers=init, trace=trace)
                points.append(PathPoint(float(lam), float(gamma), res))
                prev = res.centers
                if gi == 0:
                    row_head = res.centers
            except (ValueError, RuntimeError) as exc:
                points.append(PathPoint(float(lam), float(gamma), None, error=str(exc)))
    return points
