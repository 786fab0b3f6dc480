"""Euclidean projections onto unit norm balls and the group-lasso row prox.

These are the closed-form kernels the solver calls once per edge and once
per feature row in every iteration. The fusion norm q and its dual s pair
up as 1/q + 1/s = 1: q=2 <-> s=2, q=1 <-> s=inf, q=inf <-> s=1.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "dual_exponent",
    "project_l2_ball",
    "project_linf_ball",
    "project_l1_ball",
    "prox_group_row",
    "project_dual_ball_columns",
]

_DUAL = {1.0: math.inf, 2.0: 2.0, math.inf: 1.0}


def dual_exponent(q: float) -> float:
    """Dual exponent s of a fusion norm q in {1, 2, inf}."""
    try:
        return _DUAL[float(q)]
    except KeyError:
        raise ValueError(f"q must be one of 1, 2, inf, got {q!r}") from None


def project_l2_ball(z):
    """Project onto the Euclidean unit ball: rescale iff ||z||_2 > 1."""
    z = np.asarray(z, dtype=float)
    nrm = np.linalg.norm(z)
    if nrm <= 1.0:
        return z.copy()
    return z / nrm


def project_linf_ball(z):
    """Project onto the max-norm unit ball: clamp every entry to [-1, 1]."""
    return np.clip(np.asarray(z, dtype=float), -1.0, 1.0)


def project_l1_ball(z):
    """Project onto the l1 unit ball.

    Inside the ball z is returned unchanged. Otherwise the projection is
    the soft threshold S(z, t*) = sgn(z) (|z| - t*)_+ where t* solves
    sum_i (|z_i| - t)_+ = 1; t* is found by sorting |z| in descending
    order u_1 >= u_2 >= ... and taking the largest count m with
    u_m > (sum_{k<=m} u_k - 1)/m.
    """
    z = np.asarray(z, dtype=float)
    mag = np.abs(z)
    if mag.sum() <= 1.0:
        return z.copy()
    u = np.sort(mag)[::-1]
    css = np.cumsum(u)
    counts = np.arange(1, z.size + 1)
    active = u > (css - 1.0) / counts
    m = int(np.nonzero(active)[0].max()) + 1
    t = (css[m - 1] - 1.0) / m
    return np.sign(z) * np.maximum(mag - t, 0.0)


def prox_group_row(u, shrink: float):
    """Proximal operator of shrink * ||.||_2: rescale by (1 - shrink/||u||)_+.

    Returns the zero vector exactly when ||u||_2 <= shrink, which is what
    makes whole feature rows drop out of the fit.
    """
    if shrink < 0:
        raise ValueError("shrink must be >= 0")
    u = np.asarray(u, dtype=float)
    if shrink == 0.0:
        return u.copy()
    nrm = np.linalg.norm(u)
    if nrm <= shrink:
        return np.zeros_like(u)
    return (1.0 - shrink / nrm) * u


def _project_l1_rows(Z: np.ndarray) -> np.ndarray:
    """Row-wise l1-ball projection of a 2-D array."""
    mag = np.abs(Z)
    inside = mag.sum(axis=1) <= 1.0
    out = Z.copy()
    if inside.all():
        return out
    sub = mag[~inside]
    u = -np.sort(-sub, axis=1)
    css = np.cumsum(u, axis=1)
    counts = np.arange(1, Z.shape[1] + 1)
    active = u > (css - 1.0) / counts
    m = Z.shape[1] - np.argmax(active[:, ::-1], axis=1)  # largest active count
    t = (css[np.arange(sub.shape[0]), m - 1] - 1.0) / m
    out[~inside] = np.sign(Z[~inside]) * np.maximum(sub - t[:, None], 0.0)
    return out


def project_dual_ball_columns(Z: np.ndarray, s: float) -> np.ndarray:
    """Project every column of a p x m array onto the unit s-ball.

    Vectorized across columns; this is the per-edge dual update of the
    smoothed fusion penalty.
    """
    if s == 2.0:
        nrm = np.sqrt((Z * Z).sum(axis=0))
        return Z / np.maximum(nrm, 1.0)
    if s == math.inf:
        return np.clip(Z, -1.0, 1.0)
    if s == 1.0:
        return _project_l1_rows(Z.T).T
    raise ValueError(f"unsupported dual exponent {s!r}")
