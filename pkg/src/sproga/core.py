"""Shared numeric types and objective evaluation for sparse convex clustering.

The model assigns every sample x_i its own center u_i and balances three
terms: a quadratic fidelity 0.5 * sum_i ||x_i - u_i||^2, a fusion penalty
lam * sum_l w_l ||u_i - u_j||_q over a weighted sample graph that drags
centers together until they merge, and a group penalty
gamma * sum_k nu_k ||a_k||_2 on the feature rows a_k of the center matrix
that shrinks uninformative features to exactly zero.

Matrices follow the features-by-samples convention: X and U are p x n,
column i is sample/center i, row k is feature k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .projections import dual_exponent, project_dual_ball_columns

__all__ = [
    "DataMatrix",
    "EdgeGraph",
    "SolverConfig",
    "SolverState",
    "ClusterResult",
    "as_data_matrix",
    "check_centers",
    "objective_raw",
    "objective_smoothed",
    "fusion_edge_norms",
    "smoothed_fusion_terms",
    "row_group_penalty",
    "feature_zero_tolerance",
]

#: relative factor defining when a feature row counts as shrunk to zero
FEATURE_ZERO_REL_TOL = 1e-8


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DataMatrix:
    """p x n observation matrix; column i is sample x_i."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValueError("data matrix must be 2-D (features x samples)")
        p, n = vals.shape
        if p < 1 or n < 2:
            raise ValueError(f"need p >= 1 features and n >= 2 samples, got p={p}, n={n}")
        if not np.isfinite(vals).all():
            raise ValueError("data matrix contains non-finite entries")
        object.__setattr__(self, "values", _readonly(vals))

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_samples(cls, rows) -> "DataMatrix":
        """Build from an n x p samples-as-rows array (the usual CSV layout)."""
        return cls(np.asarray(rows, dtype=float).T)


def as_data_matrix(X) -> DataMatrix:
    """Coerce a DataMatrix or a raw p x n array into a DataMatrix."""
    if isinstance(X, DataMatrix):
        return X
    return DataMatrix(np.asarray(X, dtype=float))


@dataclass(frozen=True)
class EdgeGraph:
    """Weighted undirected edge set over n samples in canonical order.

    Edges are an (m, 2) integer array with i < j in every row, sorted by
    (i, j), so the implicit incidence operator (one +1/-1 column pair per
    edge) is deterministic. Weights are strictly positive, one per edge.
    """

    edges: np.ndarray
    weights: np.ndarray
    n: int

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if edges.shape[0] != weights.shape[0]:
            raise ValueError("edges and weights length mismatch")
        if edges.size:
            if edges.min() < 0 or edges.max() >= self.n:
                raise ValueError("edge index out of range")
            if not (edges[:, 0] < edges[:, 1]).all():
                raise ValueError("edges must satisfy i < j")
            order = np.lexsort((edges[:, 1], edges[:, 0]))
            if not (order == np.arange(edges.shape[0])).all():
                raise ValueError("edges must be sorted by (i, j); use from_pairs")
            if edges.shape[0] > 1 and (edges[1:] == edges[:-1]).all(axis=1).any():
                raise ValueError("duplicate edges")
        if weights.size and not ((weights > 0) & np.isfinite(weights)).all():
            raise ValueError("edge weights must be positive and finite")
        object.__setattr__(self, "edges", _readonly(edges))
        object.__setattr__(self, "weights", _readonly(weights))

    @property
    def m(self) -> int:
        return self.edges.shape[0]

    def total_weight(self) -> float:
        return float(self.weights.sum())

    def with_weights(self, weights) -> "EdgeGraph":
        return EdgeGraph(self.edges, np.asarray(weights, dtype=float), self.n)

    @classmethod
    def from_pairs(cls, pairs, weights, n: int) -> "EdgeGraph":
        """Canonicalize arbitrary (i, j) pairs: orient i < j, sort, check dups."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        lo = pairs.min(axis=1)
        hi = pairs.max(axis=1)
        if pairs.size and (lo == hi).any():
            raise ValueError("self-loop edge")
        order = np.lexsort((hi, lo))
        edges = np.column_stack([lo, hi])[order]
        if edges.shape[0] > 1 and (edges[1:] == edges[:-1]).all(axis=1).any():
            raise ValueError("duplicate edges")
        return cls(edges, weights[order], n)


_VALID_Q = (1.0, 2.0, math.inf)


@dataclass(frozen=True)
class SolverConfig:
    """Tuning constants for one solve.

    lam      fusion strength (must be > 0 to run the solver)
    gamma    feature-sparsity strength
    q        fusion norm, one of 1, 2, inf
    epsilon  smoothing error budget; None picks 1e-3 * f(0) at fit time
    eta      relative-change stopping tolerance
    maxit    iteration-counter cap
    nu       optional positive per-feature weights (None means all ones)
    """

    lam: float
    gamma: float = 0.0
    q: float = 2.0
    epsilon: Optional[float] = None
    eta: float = 1e-6
    maxit: int = 20000
    nu: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError("lam must be finite and >= 0")
        if not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise ValueError("gamma must be finite and >= 0")
        if float(self.q) not in _VALID_Q:
            raise ValueError("q must be one of 1, 2, inf")
        object.__setattr__(self, "q", float(self.q))
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if not self.eta > 0:
            raise ValueError("eta must be > 0")
        if not self.maxit >= 1:
            raise ValueError("maxit must be >= 1")
        if self.nu is not None:
            nu = np.asarray(self.nu, dtype=float).reshape(-1)
            if not ((nu > 0) & np.isfinite(nu)).all():
                raise ValueError("nu entries must be positive and finite")
            object.__setattr__(self, "nu", _readonly(nu))

    def resolve_nu(self, p: int) -> np.ndarray:
        if self.nu is None:
            return np.ones(p)
        if self.nu.shape[0] != p:
            raise ValueError(f"nu has length {self.nu.shape[0]}, expected {p}")
        return np.asarray(self.nu)


@dataclass
class SolverState:
    """Per-iteration quantities of the accelerated proximal loop.

    alpha holds the weighted dual matrix A = [w_1 a*_1, ..., w_m a*_m]
    (p x m); each unweighted dual column satisfies the unit ball constraint
    of the norm dual to q.
    """

    U: np.ndarray
    V: np.ndarray
    tau: float
    t: int
    mu: float
    L: float
    alpha: Optional[np.ndarray] = None


@dataclass(frozen=True)
class ClusterResult:
    """Fitted centers plus the derived clustering and feature readouts."""

    centers: np.ndarray
    labels: np.ndarray
    num_clusters: int
    selected_features: np.ndarray
    iterations: int
    objective_trace: np.ndarray
    converged: bool
    final_state: Optional[SolverState] = None

    def __post_init__(self):
        object.__setattr__(self, "centers", _readonly(np.asarray(self.centers, dtype=float)))
        object.__setattr__(self, "labels", _readonly(np.asarray(self.labels, dtype=np.int64)))
        object.__setattr__(self, "selected_features", _readonly(np.asarray(self.selected_features, dtype=bool)))
        object.__setattr__(self, "objective_trace", _readonly(np.asarray(self.objective_trace, dtype=float)))


def check_centers(U, p: int, n: int) -> np.ndarray:
    """Validate a center matrix against the data shape and return it as ndarray."""
    U = np.asarray(U, dtype=float)
    if U.shape != (p, n):
        raise ValueError(f"center matrix shape {U.shape} does not match data ({p}, {n})")
    if not np.isfinite(U).all():
        raise ValueError("center matrix contains non-finite entries")
    return U


def _column_norms(D: np.ndarray, q: float) -> np.ndarray:
    if q == 2.0:
        return np.sqrt((D * D).sum(axis=0))
    if q == 1.0:
        return np.abs(D).sum(axis=0)
    return np.abs(D).max(axis=0)


def fusion_edge_norms(U: np.ndarray, G: EdgeGraph, q: float) -> np.ndarray:
    """Per-edge norms ||u_i - u_j||_q, in canonical edge order."""
    D = U[:, G.edges[:, 0]] - U[:, G.edges[:, 1]]
    return _column_norms(D, q)


def row_group_penalty(U: np.ndarray, gamma: float, nu: np.ndarray) -> float:
    if gamma == 0.0:
        return 0.0
    return float(gamma * (nu * np.sqrt((U * U).sum(axis=1))).sum())


def objective_raw(X, U, G: EdgeGraph, cfg: SolverConfig) -> float:
    """Exact nonsmooth objective value.

    0.5 * sum_i ||x_i - u_i||^2
      + lam * sum_l w_l ||u_i - u_j||_q
      + gamma * sum_k nu_k ||a_k||_2
    """
    X = as_data_matrix(X)
    U = check_centers(U, X.p, X.n)
    if G.n != X.n:
        raise ValueError(f"graph has {G.n} nodes, data has {X.n} samples")
    fidelity = 0.5 * float(((X.values - U) ** 2).sum())
    fusion = float((G.weights * fusion_edge_norms(U, G, cfg.q)).sum())
    group = row_group_penalty(U, cfg.gamma, cfg.resolve_nu(X.p))
    return fidelity + cfg.lam * fusion + group


def smoothed_fusion_terms(U: np.ndarray, G: EdgeGraph, mu: float, q: float) -> np.ndarray:
    """Per-edge smoothed penalty values g_l(U).

    g_l is the strongly-concave regularized support function
    max_{||a||_s <= 1} a^T (u_i - u_j) - (mu/2)||a||_2^2 with s the dual
    exponent of q. The maximizer is the Euclidean projection of
    (u_i - u_j)/mu onto the dual unit ball, so g_l evaluates in closed form.
    """
    if not mu > 0:
        raise ValueError("mu must be > 0")
    D = U[:, G.edges[:, 0]] - U[:, G.edges[:, 1]]
    alpha = project_dual_ball_columns(D / mu, dual_exponent(q))
    return (alpha * D).sum(axis=0) - 0.5 * mu * (alpha * alpha).sum(axis=0)


def objective_smoothed(X, U, G: EdgeGraph, cfg: SolverConfig, mu: float) -> float:
    """Smoothed surrogate objective; differs from objective_raw only in the
    fusion term, where each edge norm is replaced by g_l(U).

    The gap satisfies 0 <= raw - smoothed <= lam * mu * sum_l w_l / 2 for
    q = 2 (dual vectors then have Euclidean norm at most one).
    """
    X = as_data_matrix(X)
    U = check_centers(U, X.p, X.n)
    if G.n != X.n:
        raise ValueError(f"graph has {G.n} nodes, data has {X.n} samples")
    fidelity = 0.5 * float(((X.values - U) ** 2).sum())
    fusion = float((G.weights * smoothed_fusion_terms(U, G, mu, cfg.q)).sum())
    group = row_group_penalty(U, cfg.gamma, cfg.resolve_nu(X.p))
    return fidelity + cfg.lam * fusion + group


def feature_zero_tolerance(X) -> float:
    """Row-norm threshold below which a feature counts as shrunk to zero.

    Relative: FEATURE_ZERO_REL_TOL times the largest data row norm.
    """
    X = as_data_matrix(X)
    row_norms = np.sqrt((X.values ** 2).sum(axis=1))
    return FEATURE_ZERO_REL_TOL * float(row_norms.max())
