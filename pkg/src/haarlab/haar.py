"""Haar-distributed unitaries built by Gram-Schmidt from Gaussian panels.

Orthonormalizing the columns of an i.i.d. complex Gaussian matrix yields a
Haar-distributed unitary, and keeping the Gaussian panel next to its
orthonormalized image gives a coupled pair whose entrywise distance the
limit experiments measure.  Column j of the output depends only on columns
1..j of the input, so an n x k panel reproduces the first k columns of the
full n x n construction at O(n k^2) cost -- enough for all corner statistics
without ever materializing an n x n matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .streams import (
    PAIRWISE_CUTOVER,
    RandomStream,
    sample_gaussian_matrix,
    vector_norm_sq,
)


class RankDeficientError(RuntimeError):
    """A residual norm collapsed below tolerance: columns are (numerically)
    linearly dependent.  For Gaussian input this has probability zero, so it
    is raised as an error and never silently regularized."""


def rank_tolerance(rows: int, cols: int) -> float:
    """Residual-norm floor below which a column set counts as dependent."""
    return 1e-12 * math.sqrt(rows) * cols


@dataclass(frozen=True)
class CoupledSample:
    """An n x k Gaussian panel and its Gram-Schmidt image, sharing one stream.

    The first j columns of `unitary` depend only on the first j columns of
    `gaussian` (sequential construction), which is what makes the pair a
    coupling rather than two unrelated draws.
    """

    n: int
    k: int
    gaussian: np.ndarray
    unitary: np.ndarray


def gram_schmidt_columns(g: np.ndarray, m: int) -> np.ndarray:
    """Orthonormalize the first m columns of g (modified Gram-Schmidt).

    Column j is the normalized residual of ``g[:, j]`` against the span of
    the previous output columns; the projection coefficient is the
    conjugate-first inner product of the basis column with the residual.
    Columns beyond the 64th get one re-orthogonalization pass; the trigger
    depends only on the column's own index, so prefixes of the output are
    bit-identical across different m.

    Raises
    ------
    RankDeficientError
        If some residual norm falls below ``rank_tolerance(n, m)``.
    """
    g = np.asarray(g, dtype=np.complex128)
    if g.ndim != 2:
        raise ValueError("expected a matrix")
    n, cols = g.shape
    if not 1 <= m <= cols:
        raise ValueError(f"m must be in 1..{cols}, got {m}")
    if m > n:
        raise ValueError(f"cannot orthonormalize {m} columns in dimension {n}")
    tol = rank_tolerance(n, m)
    pairwise = n > PAIRWISE_CUTOVER
    basis = np.empty((m, n), dtype=np.complex128)  # row ell = output column ell
    for j in range(m):
        r = g[:, j].copy()
        passes = 2 if j >= 64 else 1
        for _ in range(passes):
            for ell in range(j):
                if pairwise:
                    coeff = np.sum(np.conj(basis[ell]) * r)
                else:
                    coeff = np.vdot(basis[ell], r)
                r -= coeff * basis[ell]
        norm = math.sqrt(vector_norm_sq(r))
        if norm < tol:
            raise RankDeficientError(
                f"column {j} residual norm {norm:.3e} below tolerance {tol:.3e}"
            )
        basis[j] = r / norm
    return np.ascontiguousarray(basis.T)


def sample_coupled(stream: RandomStream, n: int, k: int) -> CoupledSample:
    """Draw an n x k Gaussian panel and orthonormalize it, from one stream."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    g = sample_gaussian_matrix(stream, n, k)
    u = gram_schmidt_columns(g, k)
    return CoupledSample(n=n, k=k, gaussian=g, unitary=u)


def sample_haar_unitary(stream: RandomStream, n: int) -> np.ndarray:
    """Full n x n Haar-distributed unitary (the k = n coupled construction)."""
    return sample_coupled(stream, n, n).unitary


def sample_sphere_marginal(stream: RandomStream, n: int, k: int) -> np.ndarray:
    """sqrt(n) times the first k coordinates of a uniform unit vector in C^n.

    Implemented as the normalized first Gaussian column, truncated -- the
    one-column special case of the coupled construction.
    """
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    g = sample_gaussian_matrix(stream, n, 1)[:, 0]
    norm = math.sqrt(vector_norm_sq(g))
    if norm < rank_tolerance(n, 1):
        raise RankDeficientError("degenerate draw for the sphere marginal")
    return math.sqrt(n) * g[:k] / norm
