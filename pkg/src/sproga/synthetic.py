"""Seeded benchmark generators.

Four reproducible regimes: Gaussian clusters on a circle embedded in a
higher-dimensional space through a random row-orthonormal map, with the
remaining features pure noise (settings 1, 2, and the large-scale 4), and
two interlocking noisy half-moon arcs padded with low-variance noise
features (setting 3). All generators are pure functions of their spec and
seed and return (X, labels, informative_mask) with X in p x n layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DataMatrix

__all__ = [
    "GaussianCircleSpec",
    "HalfMoonSpec",
    "gen_gaussian_circle",
    "gen_half_moons",
    "gen_setting4",
    "generate_setting",
    "SETTING_SIZES",
]


@dataclass(frozen=True)
class GaussianCircleSpec:
    """K Gaussian clusters centered evenly on a circle of radius ``radius``.

    n_per_cluster and sigma2 are per-cluster (length K); p_in of the p
    features carry the mapped 2-D signal, the rest are noise with variance
    sigma2[cluster]/2 per sample.
    """

    n_per_cluster: tuple
    radius: float
    sigma2: tuple
    p: int
    p_in: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "n_per_cluster", tuple(int(v) for v in self.n_per_cluster))
        object.__setattr__(self, "sigma2", tuple(float(v) for v in self.sigma2))
        if len(self.n_per_cluster) != len(self.sigma2):
            raise ValueError("n_per_cluster and sigma2 must have equal length")
        if min(self.n_per_cluster) < 1:
            raise ValueError("cluster sizes must be >= 1")
        if not all(v > 0 for v in self.sigma2):
            raise ValueError("variances must be > 0")
        if not 2 <= self.p_in <= self.p:
            raise ValueError("need 2 <= p_in <= p")


@dataclass(frozen=True)
class HalfMoonSpec:
    """Two interlocking arcs: (|r cos t|, r sin t) and (a - |r cos t|, b - r sin t),
    t uniform on (0, pi), plus coordinate noise N(0, sigma2)."""

    n_per_moon: int
    r: float = 1.0
    a: float = 1.0
    b: float = 0.5
    sigma2: float = 0.1
    p: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.n_per_moon < 1:
            raise ValueError("n_per_moon must be >= 1")
        if self.p < 2:
            raise ValueError("p must be >= 2")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be >= 0")


def _random_row_orthonormal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """rows x cols matrix with orthonormal rows, from seeded Gaussians."""
    if cols < rows:
        raise ValueError("need cols >= rows")
    g = rng.standard_normal((cols, rows))
    q, r = np.linalg.qr(g)
    # fix signs so the map is a deterministic function of the draws
    q *= np.sign(np.diag(r))
    return q.T


def gen_gaussian_circle(spec: GaussianCircleSpec):
    """Generate one circle-of-Gaussians dataset.

    Returns (X, labels, informative_mask): X is p x n, labels length n,
    mask marks the p_in informative features.
    """
    rng = np.random.default_rng(spec.seed)
    K = len(spec.n_per_cluster)
    n = sum(spec.n_per_cluster)
    angles = 2.0 * math.pi * np.arange(K) / K
    centers = spec.radius * np.column_stack([np.cos(angles), np.sin(angles)])

    blocks = []
    labels = []
    for i, (ni, s2) in enumerate(zip(spec.n_per_cluster, spec.sigma2)):
        pts = centers[i] + math.sqrt(s2) * rng.standard_normal((ni, 2))
        blocks.append(pts)
        labels.extend([i] * ni)
    cloud = np.vstack(blocks)
    labels = np.asarray(labels, dtype=np.int64)

    W = _random_row_orthonormal(rng, 2, spec.p_in)
    informative = cloud @ W

    noise_sd = np.sqrt(np.asarray(spec.sigma2)[labels] / 2.0)
    noise = rng.standard_normal((n, spec.p - spec.p_in)) * noise_sd[:, None]

    X = np.hstack([informative, noise]).T
    mask = np.zeros(spec.p, dtype=bool)
    mask[: spec.p_in] = True
    return DataMatrix(X), labels, mask


def gen_half_moons(spec: HalfMoonSpec):
    """Generate one two-moon dataset; the first two features are informative,
    the remaining p - 2 are N(0, 0.01) noise."""
    rng = np.random.default_rng(spec.seed)
    npm = spec.n_per_moon
    sd = math.sqrt(spec.sigma2)

    t1 = rng.uniform(0.0, math.pi, npm)
    m1 = np.column_stack([np.abs(spec.r * np.cos(t1)), spec.r * np.sin(t1)])
    t2 = rng.uniform(0.0, math.pi, npm)
    m2 = np.column_stack([spec.a - np.abs(spec.r * np.cos(t2)),
                          spec.b - spec.r * np.sin(t2)])
    pts = np.vstack([m1, m2]) + sd * rng.standard_normal((2 * npm, 2))

    noise = rng.standard_normal((2 * npm, spec.p - 2)) * math.sqrt(0.01)
    X = np.hstack([pts, noise]).T
    labels = np.repeat([0, 1], npm)
    mask = np.zeros(spec.p, dtype=bool)
    mask[:2] = True
    return DataMatrix(X), labels, mask


#: per-setting cluster sizes and dimensions at full scale
SETTING_SIZES = {
    1: dict(sizes=(200,) * 6, p=200, p_in=20),
    2: dict(sizes=(20, 60, 120, 100, 300, 400), p=200, p_in=20),
    3: dict(n_per_moon=500, p=200),
    4: dict(sizes=(200, 600, 1200, 1000, 3000, 4000), p=500, p_in=100),
}


def _scaled(sizes: Sequence[int], scale: float) -> tuple:
    return tuple(max(1, round(s * scale)) for s in sizes)


def _positive_normal_variances(rng: np.random.Generator, k: int,
                               mean: float = 1.0, sd: float = 1.0) -> tuple:
    """k draws from N(mean, sd^2), redrawing any non-positive value."""
    out = []
    while len(out) < k:
        v = float(rng.normal(mean, sd))
        if v > 0:
            out.append(v)
    return tuple(out)


def gen_setting4(seed: int, scale: float = 1.0):
    """Large-scale uneven-cluster regime (full size n=10000, p=500)."""
    return generate_setting(4, seed, scale)


def generate_setting(setting: int, seed: int, scale: float = 1.0):
    """Run one of the four canonical benchmark generators.

    ``scale`` shrinks cluster sizes proportionally for desk runs; feature
    counts stay fixed. Returns (X, labels, informative_mask).
    """
    if setting not in (1, 2, 3, 4):
        raise ValueError(f"setting must be 1..4, got {setting}")
    if setting == 3:
        info = SETTING_SIZES[3]
        npm = max(1, round(info["n_per_moon"] * scale))
        return gen_half_moons(HalfMoonSpec(n_per_moon=npm, p=info["p"], seed=seed))
    info = SETTING_SIZES[setting]
    sizes = _scaled(info["sizes"], scale)
    if setting == 1:
        sigma2 = (0.5,) * len(sizes)
    else:
        # per-cluster variances drawn from the positive part of N(1, 1)
        sigma2 = _positive_normal_variances(np.random.default_rng(seed ^ 0x5EED), len(sizes))
    spec = GaussianCircleSpec(n_per_cluster=sizes, radius=4.0, sigma2=sigma2,
                              p=info["p"], p_in=info["p_in"], seed=seed)
    return gen_gaussian_circle(spec)
