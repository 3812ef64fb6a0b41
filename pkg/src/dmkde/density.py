"""Mixed-state density matrix over embedded samples and density estimates.

The matrix is the average of the outer products of unit-norm embeddings,
``R = (1/n) sum_i phi_i phi_i^T``: symmetric, positive semidefinite,
trace 1.  The density estimate for a query embedding is the quadratic
form ``phi^T R phi``, whose cost depends only on the embedding dimension
and never on the number of training samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, InvalidArgumentError

_SYMMETRY_TOL = 1e-12
_TRACE_TOL = 1e-9
_ENTRY_TOL = 1e-12


@dataclass
class DensityMatrix:
    """Average outer product of ``sample_count`` unit-norm embeddings."""

    matrix: np.ndarray
    sample_count: int

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        self.sample_count = int(self.sample_count)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise InvalidArgumentError(f"matrix must be square, got shape {self.matrix.shape}")
        if self.sample_count < 1:
            raise InvalidArgumentError("sample_count must be >= 1")
        if not np.all(np.isfinite(self.matrix)):
            raise InvalidArgumentError("matrix contains non-finite entries")
        if np.max(np.abs(self.matrix - self.matrix.T)) > _SYMMETRY_TOL:
            raise InvalidArgumentError("matrix is not symmetric")
        if abs(float(np.trace(self.matrix)) - 1.0) > _TRACE_TOL:
            raise InvalidArgumentError("matrix trace must equal 1")
        if np.max(np.abs(self.matrix)) > 1.0 + _ENTRY_TOL:
            raise InvalidArgumentError("matrix entries must lie in [-1, 1]")

    @property
    def embed_dim(self) -> int:
        return self.matrix.shape[0]


def _as_embedding_matrix(embeddings) -> np.ndarray:
    if isinstance(embeddings, np.ndarray) and embeddings.ndim == 2:
        return np.asarray(embeddings, dtype=np.float64)
    rows = [np.asarray(e, dtype=np.float64) for e in embeddings]
    if not rows:
        return np.empty((0, 0))
    dims = {r.shape for r in rows}
    if len(dims) > 1 or rows[0].ndim != 1:
        raise InvalidArgumentError("embeddings must all be 1-D vectors of equal length")
    return np.vstack(rows)


def build_density_matrix(embeddings) -> DensityMatrix:
    """Average the outer products of the given unit-norm embeddings.

    Accepts a sequence of vectors or an (n, D) array.  The result is
    explicitly symmetrized to kill floating-point drift, making the
    symmetry invariant exactly testable.
    """
    phi = _as_embedding_matrix(embeddings)
    if phi.shape[0] == 0:
        raise InsufficientDataError("cannot build a density matrix from zero embeddings")
    n = phi.shape[0]
    matrix = phi.T @ phi / n
    matrix = (matrix + matrix.T) / 2.0
    return DensityMatrix(matrix, n)


def merge_density_matrices(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    """Sample-weighted average of two density matrices.

    Merging the matrices of a partition of one embedding set equals
    building from the whole set, up to float addition order.
    """
    if a.embed_dim != b.embed_dim:
        raise InvalidArgumentError(
            f"dimension mismatch: {a.embed_dim} vs {b.embed_dim}"
        )
    total = a.sample_count + b.sample_count
    # Weight-first form keeps merge(a, a) bit-identical to a.
    wa = a.sample_count / total
    wb = b.sample_count / total
    matrix = wa * a.matrix + wb * b.matrix
    matrix = (matrix + matrix.T) / 2.0
    return DensityMatrix(matrix, total)


def estimate_density(dm: DensityMatrix, phi: np.ndarray) -> float:
    """Quadratic form ``phi^T R phi`` for a unit-norm query embedding.

    Equals the mean squared inner product with the embeddings the matrix
    was built from, and lies in [0, 1] up to roundoff.
    """
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape != (dm.embed_dim,):
        raise InvalidArgumentError(
            f"query must have shape ({dm.embed_dim},), got {phi.shape}"
        )
    return float(phi @ (dm.matrix @ phi))


def estimate_density_batch(dm: DensityMatrix, phis) -> np.ndarray:
    """Densities for a sequence of query embeddings, in input order.

    Implemented as the elementwise map of :func:`estimate_density` so the
    batch result is bit-identical to per-query calls.
    """
    return np.array([estimate_density(dm, row) for row in phis], dtype=np.float64)
