"""Brute-force references that validate the fast path.

``kde_exact`` is classical Gaussian kernel density estimation with no
approximation; ``qde_bruteforce`` expands the density-matrix quadratic
form into an explicit per-sample sum; ``reference_classifier`` is the
whole detection pipeline with exact KDE in place of Fourier features.

The quadratic form approximates a squared-kernel transform of classical
KDE, not its raw value: comparisons against ``kde_exact`` are meaningful
on rankings and labels, with the KDE bandwidth set to sigma / sqrt(2)
(squaring a Gaussian kernel halves its effective variance).
"""

from __future__ import annotations

import numpy as np

from .detector import compute_threshold
from .errors import InsufficientDataError, InvalidArgumentError

#: Bandwidth ratio under which exact KDE tracks the squared-kernel scores.
KDE_BANDWIDTH_RATIO = 1.0 / np.sqrt(2.0)


def kde_exact(train: np.ndarray, sigma: float, x: np.ndarray) -> float:
    """Exact Gaussian KDE value at ``x``:

    ``(1/n) sum_i (2 pi sigma^2)^(-d/2) exp(-||x - x_i||^2 / (2 sigma^2))``
    """
    train = np.asarray(train, dtype=np.float64)
    if train.ndim != 2 or train.shape[0] == 0:
        raise InsufficientDataError("training matrix must be 2-D and nonempty")
    if sigma <= 0:
        raise InvalidArgumentError("sigma must be > 0")
    x = np.asarray(x, dtype=np.float64)
    d = train.shape[1]
    if x.shape != (d,):
        raise InvalidArgumentError(f"query must have shape ({d},), got {x.shape}")
    sq = np.sum((train - x) ** 2, axis=1)
    norm = (2.0 * np.pi * sigma ** 2) ** (-d / 2.0)
    return float(norm * np.mean(np.exp(-sq / (2.0 * sigma ** 2))))


def kde_exact_batch(train: np.ndarray, sigma: float, queries: np.ndarray) -> np.ndarray:
    """Exact KDE for each query row, in input order."""
    return np.array([kde_exact(train, sigma, q) for q in np.asarray(queries, dtype=np.float64)])


def qde_bruteforce(embeddings, phi: np.ndarray) -> float:
    """Mean squared inner product with the embeddings, by explicit loop.

    Never forms the density matrix; this is the anti-regression oracle
    for ``density.estimate_density``.
    """
    rows = [np.asarray(e, dtype=np.float64) for e in embeddings]
    if not rows:
        raise InsufficientDataError("need at least one embedding")
    phi = np.asarray(phi, dtype=np.float64)
    if any(r.shape != phi.shape for r in rows):
        raise InvalidArgumentError("embeddings and query must share one dimension")
    total = 0.0
    for row in rows:
        ip = float(np.dot(row, phi))
        total += ip * ip
    return total / len(rows)


def reference_classifier(train, val, test, anomaly_rate: float, sigma: float) -> np.ndarray:
    """Labels for ``test`` from exact-KDE densities and quantile thresholding.

    Validation KDE densities set the threshold at the anomaly-rate
    quantile; test densities at or above it are normal (0), below it
    anomalous (1).
    """
    val = np.asarray(val, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if val.ndim != 2 or val.shape[0] == 0 or test.ndim != 2 or test.shape[0] == 0:
        raise InsufficientDataError("validation and test matrices must be 2-D and nonempty")
    val_densities = kde_exact_batch(train, sigma, val)
    theta = compute_threshold(val_densities, anomaly_rate)
    test_densities = kde_exact_batch(train, sigma, test)
    return np.where(test_densities >= theta, 0, 1).astype(np.int64)
