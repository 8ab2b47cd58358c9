"""Deterministic random streams and standard complex Gaussian sampling.

Every sampler in this package draws from an explicit :class:`RandomStream`.
A stream is identified by a 64-bit master seed plus a path of 64-bit labels;
streams with different paths are statistically independent, and replaying
any (seed, path) reproduces the exact output sequence.  The bit generator is
counter-based (Philox, period 2**256), so deriving a child stream is O(1)
and never consumes state from the parent.

Streams are single-owner: never advance one stream from two places at once.
Fan out with :func:`derive_stream` instead; everything else in this package
is immutable after construction and safe to share read-only.
"""

from __future__ import annotations

import math
import operator

import numpy as np

MASK64 = (1 << 64) - 1

# Inner products and norms accumulated over more than this many terms switch
# from BLAS dot products to numpy's pairwise-summed reduction; the large runs
# need the extra digits, the small ones need the speed.
PAIRWISE_CUTOVER = 1 << 16

_SQRT_HALF = math.sqrt(0.5)


def _check_u64(value: int, what: str) -> int:
    v = operator.index(value)
    if not 0 <= v <= MASK64:
        raise ValueError(f"{what} must be an unsigned 64-bit integer, got {value!r}")
    return v


class RandomStream:
    """Seeded, splittable deterministic random source.

    Parameters
    ----------
    master_seed : int
        Unsigned 64-bit root seed.
    path : sequence of int, optional
        Derivation labels, each unsigned 64-bit.  ``()`` is the root stream.
    """

    __slots__ = ("master_seed", "path", "_generator")

    def __init__(self, master_seed: int, path: tuple[int, ...] = ()):
        self.master_seed = _check_u64(master_seed, "master_seed")
        self.path = tuple(_check_u64(label, "path label") for label in path)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self.path)
        self._generator = np.random.Generator(np.random.Philox(seq))

    @property
    def generator(self) -> np.random.Generator:
        """Underlying numpy generator; drawing from it advances this stream."""
        return self._generator

    def child(self, label: int) -> "RandomStream":
        return derive_stream(self, label)

    def __repr__(self) -> str:
        return f"RandomStream(master_seed={self.master_seed}, path={self.path})"


def derive_stream(master: RandomStream, label: int) -> RandomStream:
    """Child stream with `label` appended to the parent's path.

    Deterministic and O(1); the parent's position is not consumed, so
    deriving the same label twice yields identical child sequences.
    """
    return RandomStream(master.master_seed, master.path + (label,))


def sample_std_complex_gaussian(stream: RandomStream) -> complex:
    """One standard complex Gaussian X + iY with Var X = Var Y = 1/2.

    The modulus-squared then has mean one (rate-1 exponential), which is the
    normalization every other module assumes.
    """
    x, y = stream.generator.standard_normal(2) * _SQRT_HALF
    return complex(x, y)


def sample_gaussian_matrix(stream: RandomStream, rows: int, cols: int) -> np.ndarray:
    """rows x cols matrix of i.i.d. standard complex Gaussian entries.

    Entries are filled in row-major order by successive scalar draws; the
    result is bit-identical to rows*cols calls of
    :func:`sample_std_complex_gaussian` reshaped.  This fill order is part of
    the determinism contract and is pinned by tests.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix dimensions must be positive, got {rows} x {cols}")
    raw = stream.generator.standard_normal(2 * rows * cols) * _SQRT_HALF
    return (raw[0::2] + 1j * raw[1::2]).reshape(rows, cols)


def vector_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Conjugate-first inner product sum_i conj(a_i) * b_i.

    Uses numpy's pairwise-summed reduction above PAIRWISE_CUTOVER terms.
    """
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] > PAIRWISE_CUTOVER:
        return complex(np.sum(np.conj(a) * b))
    return complex(np.vdot(a, b))


def vector_norm_sq(a: np.ndarray) -> float:
    """Squared Euclidean norm, same summation policy as vector_inner."""
    if a.shape[0] > PAIRWISE_CUTOVER:
        return float(np.sum(a.real * a.real + a.imag * a.imag))
    return float(np.vdot(a, a).real)


def column_inner(m: np.ndarray, j: int, other: np.ndarray, ell: int) -> complex:
    """Inner product of column j of `m` with column ell of `other`.

    Conjugation is on the first argument, so
    ``column_inner(m, j, m, j).real`` is the squared column norm.
    """
    m = np.asarray(m)
    other = np.asarray(other)
    if m.ndim != 2 or other.ndim != 2:
        raise ValueError("column_inner expects two matrices")
    if m.shape[0] != other.shape[0]:
        raise ValueError(f"row-count mismatch: {m.shape[0]} vs {other.shape[0]}")
    return vector_inner(m[:, j], other[:, ell])


def column_norm_sq(m: np.ndarray, j: int) -> float:
    """Squared norm of column j; equals column_inner(m, j, m, j).real."""
    return vector_norm_sq(np.asarray(m)[:, j])
