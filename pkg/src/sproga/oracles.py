"""Independent slow-but-sure references used to validate the main solver.

None of these share code with the fast path: the two-point solution is a
closed form obtained by dualizing the single-edge problem, the subgradient
reference minimizes the raw nonsmooth objective directly, and the l1-ball
reference is a grid search. They exist so solver results can be checked
against values computed another way.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .core import EdgeGraph, SolverConfig, as_data_matrix, objective_raw

__all__ = [
    "two_point_solution",
    "subgradient_reference",
    "l1_ball_qp_oracle",
]


def two_point_solution(x1, x2, lam: float, omega: float):
    """Exact minimizer of the single-edge problem (q = 2, gamma = 0).

    Both centers collapse to the midpoint once lam * omega reaches half the
    point distance; below that the dual solution pulls each center toward
    the other by exactly lam * omega along the connecting direction:

        u1 = x1 - lam*omega*(x1 - x2)/||x1 - x2||,  u2 symmetric.
    """
    if lam < 0 or omega < 0:
        raise ValueError("lam and omega must be >= 0")
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    d = x1 - x2
    dist = float(np.linalg.norm(d))
    if dist / 2.0 <= lam * omega:
        mid = 0.5 * (x1 + x2)
        return mid.copy(), mid.copy()
    pull = lam * omega * d / dist
    return x1 - pull, x2 + pull


def _fusion_subgrad(D: np.ndarray, q: float) -> np.ndarray:
    """A valid subgradient of ||d||_q per edge column; zero where d = 0."""
    if q == 2.0:
        nrm = np.sqrt((D * D).sum(axis=0))
        out = np.zeros_like(D)
        np.divide(D, nrm, out=out, where=nrm > 0)
        return out
    if q == 1.0:
        return np.sign(D)
    out = np.zeros_like(D)
    idx = np.abs(D).argmax(axis=0)
    cols = np.arange(D.shape[1])
    vals = D[idx, cols]
    out[idx, cols] = np.sign(vals)
    return out


def subgradient_reference(X, G: EdgeGraph, cfg: SolverConfig, iters: int = 20000) -> np.ndarray:
    """Minimize the raw objective by normalized subgradient descent.

    Steps are s0/sqrt(t) along the negative normalized subgradient, with
    s0 tied to the data spread; the best-objective iterate is returned.
    Intended for tiny instances only; convergence is slow but needs no
    smoothing, so it is an independent check on the main solver.
    """
    X = as_data_matrix(X)
    Xv = X.values
    nu = cfg.resolve_nu(X.p)
    ei, ej = G.edges[:, 0], G.edges[:, 1]

    U = Xv.copy()
    best_U = U.copy()
    best_f = objective_raw(X, U, G, cfg)
    s0 = 0.5 * float(np.abs(Xv - Xv.mean(axis=1, keepdims=True)).max() + 1e-12)

    for t in range(1, iters + 1):
        g = U - Xv
        if cfg.lam > 0 and G.m:
            D = U[:, ei] - U[:, ej]
            S = _fusion_subgrad(D, cfg.q) * (cfg.lam * G.weights)
            np.add.at(g, (slice(None), ei), S)
            np.subtract.at(g, (slice(None), ej), S)
        if cfg.gamma > 0:
            rn = np.sqrt((U * U).sum(axis=1))
            rsub = np.zeros_like(U)
            np.divide(U, rn[:, None], out=rsub, where=rn[:, None] > 0)
            g += cfg.gamma * nu[:, None] * rsub
        gn = float(np.linalg.norm(g))
        if gn == 0.0:
            break
        U = U - (s0 / math.sqrt(t)) * g / gn
        f = objective_raw(X, U, G, cfg)
        if f < best_f:
            best_f = f
            best_U = U.copy()
    return best_U


def _simplex_grid(step: float, center=None, radius: float = 1.0):
    """Grid over {(w1, w2) : w >= 0, w1 + w2 <= 1}, optionally windowed."""
    if center is None:
        lo1 = lo2 = 0.0
        hi1 = hi2 = 1.0
    else:
        lo1, lo2 = max(center[0] - radius, 0.0), max(center[1] - radius, 0.0)
        hi1, hi2 = min(center[0] + radius, 1.0), min(center[1] + radius, 1.0)
    w1 = np.arange(lo1, hi1 + step / 2, step)
    w2 = np.arange(lo2, hi2 + step / 2, step)
    g1, g2 = np.meshgrid(w1, w2, indexing="ij")
    keep = g1 + g2 <= 1.0 + 1e-12
    return g1[keep], g2[keep]


def l1_ball_qp_oracle(z) -> np.ndarray:
    """Nearest point in the l1 unit ball by face-wise grid search (dim <= 3).

    Points inside the ball are their own projection; exterior points
    project onto the boundary, which is searched face by face (each sign
    pattern) on a grid refined down to step 1e-4. The objective is convex
    on every face, so local refinement around the coarse minimum is sound.
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    d = z.size
    if d > 3:
        raise ValueError("oracle supports dimension <= 3")
    if np.abs(z).sum() <= 1.0:
        return z.copy()

    if d == 1:
        grid = np.arange(-1.0, 1.0 + 5e-5, 1e-4)
        return np.asarray([grid[np.argmin((grid - z[0]) ** 2)]])

    best_x, best_val = None, np.inf
    for signs in itertools.product((1.0, -1.0), repeat=d):
        s = np.asarray(signs)
        if d == 2:
            w = np.arange(0.0, 1.0 + 5e-5, 1e-4)
            cand = np.column_stack([s[0] * w, s[1] * (1.0 - w)])
            vals = ((cand - z) ** 2).sum(axis=1)
            j = int(np.argmin(vals))
            if vals[j] < best_val:
                best_val, best_x = vals[j], cand[j]
        else:
            center, radius = None, 1.0
            for step in (2e-3, 2e-4, 1e-4):
                w1, w2 = _simplex_grid(step, center, radius)
                cand = np.column_stack([s[0] * w1, s[1] * w2, s[2] * (1.0 - w1 - w2)])
                vals = ((cand - z) ** 2).sum(axis=1)
                j = int(np.argmin(vals))
                center, radius = (w1[j], w2[j]), 2.5 * step
                if vals[j] < best_val:
                    best_val, best_x = vals[j], cand[j]
    return best_x
