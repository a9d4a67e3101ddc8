"""k-NN (KSG variant 1) mutual information between feature columns.

MI(x, y) = psi(k) + psi(n) - mean[psi(nx + 1) + psi(ny + 1)] with Chebyshev
joint distances and strict marginal counts inside the k-th joint radius.
Inputs get deterministic 1e-10 jitter to break ties; the jitter stream is
derived from the variable's content, so the estimate is exactly symmetric
in its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .convenc import fnv1a64
from .errors import ConfigError

JITTER_SCALE = 1e-10


def digamma(x) -> np.ndarray:
    """Digamma for x > 0: recurrence below 10, then the asymptotic series.

    Accurate to ~1e-13 for x >= 1; the test suite checks integer arguments
    against an exact harmonic-series oracle at 1e-10.
    """
    x = np.array(x, dtype=np.float64, copy=True)
    if np.any(x <= 0.0):
        raise ConfigError("digamma defined here for positive arguments only")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    acc = np.zeros_like(x)
    while True:
        small = x < 10.0
        if not small.any():
            break
        acc[small] -= 1.0 / x[small]
        x[small] += 1.0
    inv2 = 1.0 / (x * x)
    series = (
        np.log(x)
        - 0.5 / x
        - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)))
    )
    out = acc + series
    return float(out[0]) if scalar else out


def _content_jitter(values: np.ndarray, seed: int) -> np.ndarray:
    """Deterministic tie-breaking noise seeded by the data bytes themselves."""
    data = np.ascontiguousarray(values, dtype=np.float64)
    stream_seed = fnv1a64(data.tobytes()) ^ (seed & 0xFFFFFFFFFFFFFFFF)
    rng = np.random.default_rng(stream_seed)
    return data + rng.uniform(-JITTER_SCALE, JITTER_SCALE, size=data.shape)


def ksg_mi(x: np.ndarray, y: np.ndarray, k: int = 10, seed: int = 0) -> float:
    """KSG estimate in nats between two scalar sample vectors, clamped at 0."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape[0] != y.shape[0]:
        raise ConfigError(f"sample count mismatch: {x.shape[0]} vs {y.shape[0]}")
    n = x.shape[0]
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if n <= k:
        raise ConfigError(f"need more than k={k} samples, got {n}")

    xj = _content_jitter(x, seed)
    yj = _content_jitter(y, seed)
    joint = np.column_stack([xj, yj])
    tree = cKDTree(joint)
    # distance to the k-th neighbor excluding self
    eps = tree.query(joint, k=k + 1, p=np.inf)[0][:, k]

    def strict_counts(values: np.ndarray) -> np.ndarray:
        order = np.sort(values)
        hi = np.searchsorted(order, values + eps, side="left")
        lo = np.searchsorted(order, values - eps, side="right")
        return hi - lo - 1  # exclude the point itself

    nx = strict_counts(xj)
    ny = strict_counts(yj)
    mi = digamma(k) + digamma(n) - float(np.mean(digamma(nx + 1) + digamma(ny + 1)))
    return max(mi, 0.0)


@dataclass(frozen=True)
class MiConfig:
    k_neighbors: int = 10
    max_samples: int = 2000
    max_pairs: int = 2000
    seed: int = 0
    reduction: str = "mean_pairs"  # or "max_pairs"

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ConfigError(f"k_neighbors must be >= 1, got {self.k_neighbors}")
        if self.max_samples <= self.k_neighbors:
            raise ConfigError("max_samples must exceed k_neighbors")
        if self.reduction not in ("mean_pairs", "max_pairs"):
            raise ConfigError(f"unknown reduction {self.reduction!r}")


@dataclass
class MiLayerResult:
    mi_nats: float
    pairs_computed: int
    samples_used: int


def mi_layer(mfcc_rows: np.ndarray, act_rows: np.ndarray, cfg: MiConfig = MiConfig()) -> MiLayerResult:
    """Reduce per-(mfcc dim, activation dim) KSG estimates to one scalar.

    Rows must be aligned (same segments in the same order). Rows beyond
    max_samples and pairs beyond max_pairs are subsampled with cfg.seed.
    """
    mfcc_rows = np.asarray(mfcc_rows, dtype=np.float64)
    act_rows = np.asarray(act_rows, dtype=np.float64)
    if mfcc_rows.shape[0] != act_rows.shape[0]:
        raise ConfigError(
            f"row mismatch: {mfcc_rows.shape[0]} mfcc rows vs {act_rows.shape[0]} activation rows"
        )
    n = mfcc_rows.shape[0]
    rng = np.random.default_rng(cfg.seed)
    if n > cfg.max_samples:
        rows = np.sort(rng.choice(n, size=cfg.max_samples, replace=False))
        mfcc_rows, act_rows = mfcc_rows[rows], act_rows[rows]

    dx, dy = mfcc_rows.shape[1], act_rows.shape[1]
    all_pairs = dx * dy
    if all_pairs <= cfg.max_pairs:
        pairs = [(i, j) for i in range(dx) for j in range(dy)]
    else:
        chosen = rng.choice(all_pairs, size=cfg.max_pairs, replace=False)
        chosen.sort()
        pairs = [(int(p) // dy, int(p) % dy) for p in chosen]

    estimates = np.array(
        [ksg_mi(mfcc_rows[:, i], act_rows[:, j], cfg.k_neighbors, cfg.seed) for i, j in pairs]
    )
    value = float(estimates.max() if cfg.reduction == "max_pairs" else estimates.mean())
    return MiLayerResult(mi_nats=value, pairs_computed=len(pairs), samples_used=mfcc_rows.shape[0])


def mi_discrete_labels(columns: np.ndarray, labels: np.ndarray, k: int = 10, seed: int = 0) -> float:
    """Continuous-vs-discrete k-NN MI (activation columns vs class labels).

    Per column: radius = distance to the k-th neighbor within the same class,
    m_i = strict count within that radius over all samples; columns averaged.
    Exposed behind a flag; no parity with the pairwise table is claimed.
    """
    columns = np.atleast_2d(np.asarray(columns, dtype=np.float64))
    if columns.shape[0] != np.asarray(labels).shape[0]:
        columns = columns.T
    labels = np.asarray(labels)
    n = labels.shape[0]
    values = []
    for col in columns.T:
        x = _content_jitter(col, seed)
        order = np.sort(x)
        psi_terms = np.zeros(n)
        count_terms = np.zeros(n)
        for cls in np.unique(labels):
            members = np.flatnonzero(labels == cls)
            if members.size <= k:
                raise ConfigError(f"class {cls!r} has {members.size} rows, needs more than k={k}")
            sub = np.sort(x[members])
            pos = np.searchsorted(sub, x[members])
            # distance to k-th neighbor within the class, via the sorted order
            for local, idx in enumerate(members):
                lo = max(pos[local] - k, 0)
                hi = min(pos[local] + k + 1, sub.size)
                window = np.abs(sub[lo:hi] - x[idx])
                window = np.sort(window)
                radius = window[k]  # window[0] == 0 is the point itself
                hi_all = np.searchsorted(order, x[idx] + radius, side="left")
                lo_all = np.searchsorted(order, x[idx] - radius, side="right")
                count_terms[idx] = hi_all - lo_all  # strict radius, self included
                psi_terms[idx] = digamma(members.size)
        mi = (
            digamma(n)
            + digamma(k)
            - float(np.mean(psi_terms))
            - float(np.mean(digamma(np.maximum(count_terms, 1))))
        )
        values.append(max(mi, 0.0))
    return float(np.mean(values))
