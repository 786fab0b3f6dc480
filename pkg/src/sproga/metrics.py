"""External clustering-quality and feature-selection metrics.

ARI follows Hubert & Arabie (J. Classification 2, 1985); NMI normalizes
mutual information by the geometric mean of the two label entropies
(natural logs). Both are symmetric and invariant to relabeling.
"""

from __future__ import annotations

import warnings

import numpy as np

__all__ = [
    "adjusted_rand_index",
    "normalized_mutual_info",
    "feature_pd_fdr",
]


def _contingency(a, b) -> np.ndarray:
    a = np.asarray(a).reshape(-1)
    b = np.asarray(b).reshape(-1)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"label vectors differ in length: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    ka, kb = ai.max() + 1, bi.max() + 1
    table = np.zeros((ka, kb), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def _comb2(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x * (x - 1.0) / 2.0


def adjusted_rand_index(a, b) -> float:
    """Chance-corrected pair-counting agreement of two partitions.

    (sum_ij C(n_ij,2) - E) / (0.5*(sum_i C(a_i,2) + sum_j C(b_j,2)) - E)
    with E = sum_i C(a_i,2) * sum_j C(b_j,2) / C(n,2). Identical partitions
    give 1; the degenerate zero-denominator cases (both partitions trivial)
    are defined as 1 since the partitions are then necessarily identical.
    """
    table = _contingency(a, b)
    n = table.sum()
    sum_cells = _comb2(table).sum()
    sum_a = _comb2(table.sum(axis=1)).sum()
    sum_b = _comb2(table.sum(axis=0)).sum()
    expected = sum_a * sum_b / _comb2(n)
    denom = 0.5 * (sum_a + sum_b) - expected
    if denom == 0.0:
        return 1.0
    return float((sum_cells - expected) / denom)


def normalized_mutual_info(a, b) -> float:
    """I(a;b) / sqrt(H(a) H(b)) with natural-log entropies, in [0, 1].

    A degenerate single-cluster partition has zero entropy; the convention
    here returns 1 when the two partitions are identical (both degenerate)
    and 0 otherwise, with a warning.
    """
    table = _contingency(a, b)
    n = table.sum()
    pa = table.sum(axis=1) / n
    pb = table.sum(axis=0) / n
    ha = float(-(pa * np.log(pa)).sum())
    hb = float(-(pb * np.log(pb)).sum())
    if ha == 0.0 or hb == 0.0:
        if ha == 0.0 and hb == 0.0:
            return 1.0
        warnings.warn("degenerate single-cluster partition; NMI defined as 0",
                      RuntimeWarning, stacklevel=2)
        return 0.0
    pij = table / n
    mask = pij > 0
    outer = pa[:, None] * pb[None, :]
    info = float((pij[mask] * np.log(pij[mask] / outer[mask])).sum())
    return float(info / np.sqrt(ha * hb))


def feature_pd_fdr(selected, truth) -> tuple[float, float]:
    """Power of detection and false discovery rate of a selected-feature mask.

    pd = |selected & truth| / |truth|; fdr = |selected & ~truth| / |selected|
    with the empty-selection convention fdr = 0. An empty truth set leaves
    pd undefined (returned as nan with a warning).
    """
    selected = np.asarray(selected, dtype=bool).reshape(-1)
    truth = np.asarray(truth, dtype=bool).reshape(-1)
    if selected.shape[0] != truth.shape[0]:
        raise ValueError("masks differ in length")
    n_true = int(truth.sum())
    n_sel = int(selected.sum())
    fdr = float((selected & ~truth).sum() / max(n_sel, 1))
    if n_true == 0:
        warnings.warn("empty truth mask; PD undefined", RuntimeWarning, stacklevel=2)
        return float("nan"), fdr
    pd = float((selected & truth).sum() / n_true)
    return pd, fdr
