"""Density matrices and the Gaussian / adjusted / projected measure family.

For a density matrix rho, G(rho) is the mean-zero Gaussian measure on the
finite-dimensional Hilbert space with covariance rho; GA(rho) reweights it by
the squared norm (an exact mixture construction, no rejection); GAP(rho)
projects GA(rho) to the unit sphere.  The module also draws conditional wave
functions of Haar-random entangled states -- the normalized system component
obtained by picking an environment basis index with Born weights -- whose
distribution approaches GAP of the reduced density matrix as the environment
grows, and provides the comparison tests for exactly that claim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dist_tests import TestReport, ks_two_sample
from .haar import gram_schmidt_columns
from .streams import RandomStream, sample_gaussian_matrix

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
ORTHO_TOL = 1e-10
EIGENVALUE_CLAMP = 1e-12


class DegenerateSampleError(RuntimeError):
    """A projected sample's norm underflowed (probability zero event)."""


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian positive-semidefinite trace-one matrix with cached spectrum.

    `weights` holds the eigenvalues in descending order and `vectors[:, m]`
    the matching orthonormal eigenvectors, so samplers never re-decompose.
    """

    matrix: np.ndarray
    weights: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])

    def purity(self) -> float:
        """Trace of rho^2."""
        return float(np.sum(self.weights**2))


def make_density_matrix(weights, vectors=None) -> DensityMatrix:
    """Build rho = sum_m p_m |chi_m><chi_m| from weights and an optional basis.

    Weights must be nonnegative and sum to one within 1e-10; vectors (columns)
    must be orthonormal within 1e-10.  Omitting vectors uses the standard
    basis.  Weights are sorted descending, permuting the basis alongside.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a nonempty vector")
    if np.any(w < 0.0):
        raise ValueError("weights must be nonnegative")
    if abs(float(w.sum()) - 1.0) > TRACE_TOL:
        raise ValueError(f"weights must sum to 1 within {TRACE_TOL}, got {w.sum()!r}")
    k = w.size
    if vectors is None:
        v = np.eye(k, dtype=np.complex128)
    else:
        v = np.asarray(vectors, dtype=np.complex128)
        if v.shape != (k, k):
            raise ValueError(f"vectors must be {k} x {k}")
        gram_dev = np.max(np.abs(v.conj().T @ v - np.eye(k)))
        if gram_dev > ORTHO_TOL:
            raise ValueError(
                f"vectors are not orthonormal (max Gram deviation {gram_dev:.2e})"
            )
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    matrix = (v * w) @ v.conj().T
    return DensityMatrix(matrix=matrix, weights=w, vectors=v)


def density_matrix_from_hermitian(matrix) -> DensityMatrix:
    """Validate and spectrally decompose a raw Hermitian trace-one matrix.

    Eigenvalues in [-1e-12, 0) are floating-point noise and clamp to zero
    (with trace renormalization); anything more negative is rejected.
    """
    m = np.asarray(matrix, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    herm_dev = np.max(np.abs(m - m.conj().T))
    if herm_dev > HERMITIAN_TOL:
        raise ValueError(f"matrix is not Hermitian (max deviation {herm_dev:.2e})")
    trace = float(np.trace(m).real)
    if abs(trace - 1.0) > TRACE_TOL:
        raise ValueError(f"trace must be 1 within {TRACE_TOL}, got {trace!r}")
    evals, evecs = jacobi_eigenh(m)
    if np.any(evals < -EIGENVALUE_CLAMP):
        raise ValueError(
            f"matrix is not positive semidefinite (min eigenvalue {evals.min():.2e})"
        )
    evals = np.maximum(evals, 0.0)
    evals = evals / evals.sum()
    order = np.argsort(-evals, kind="stable")
    return make_density_matrix(evals[order], evecs[:, order])


def gibbs_density_matrix(energies, beta: float) -> DensityMatrix:
    """Canonical state at inverse temperature beta for a diagonal Hamiltonian.

    Weights exp(-beta * E_m)/Z, computed after shifting by the minimum energy
    so that large beta cannot overflow; beta = 0 gives the maximally mixed
    state.
    """
    e = np.asarray(energies, dtype=float)
    if e.ndim != 1 or e.size == 0:
        raise ValueError("energies must be a nonempty vector")
    if not np.all(np.isfinite(e)):
        raise ValueError("energies must be finite")
    if beta < 0.0:
        raise ValueError("beta must be >= 0")
    shifted = -beta * (e - e.min())
    raw = np.exp(shifted)
    weights = raw / raw.sum()
    # keep the energy-level order in the matrix: pass the standard basis so
    # make_density_matrix's descending sort only permutes the cached spectrum
    return make_density_matrix(weights, np.eye(e.size, dtype=np.complex128))


def jacobi_eigenh(
    matrix, tol: float = 1e-12, max_sweeps: int = 60
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.

    Rotates pairs (p, q) until the off-diagonal Frobenius norm drops below
    `tol`.  Meant for the small dimensions used here (k <= 64); returns
    eigenvalues in ascending order with matching eigenvector columns.
    """
    a = np.array(matrix, dtype=np.complex128)
    k = a.shape[0]
    v = np.eye(k, dtype=np.complex128)
    if k == 1:
        return np.array([a[0, 0].real]), v
    skip = tol / (10.0 * k * k)
    for _ in range(max_sweeps):
        hollow = a.copy()
        np.fill_diagonal(hollow, 0.0)
        off = float(np.linalg.norm(hollow))
        if off <= tol:
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= skip:
                    continue
                phase = apq / mag
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                # smaller root of t^2 - 2*tau*t - 1 = 0 (annihilates the pivot
                # for this rotation layout)
                if tau >= 0.0:
                    t = -1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = 1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # columns: a <- a @ R with R[[p,q],[p,q]] = [[c, -s*phase],
                #                                            [s*conj(phase), c]]
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p + s * np.conj(phase) * col_q
                a[:, q] = -s * phase * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p + s * phase * row_q
                a[q, :] = -s * np.conj(phase) * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vcol_p = v[:, p].copy()
                vcol_q = v[:, q].copy()
                v[:, p] = c * vcol_p + s * np.conj(phase) * vcol_q
                v[:, q] = -s * phase * vcol_p + c * vcol_q
    else:
        raise RuntimeError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    evals = np.diag(a).real.copy()
    order = np.argsort(evals, kind="stable")
    return evals[order], v[:, order]


def sample_gaussian_state(rho: DensityMatrix, stream: RandomStream) -> np.ndarray:
    """Mean-zero Gaussian vector with covariance rho (E psi psi^dagger = rho).

    psi = sum_m sqrt(p_m) z_m chi_m with i.i.d. standard complex Gaussian z_m;
    coordinates with p_m = 0 are exactly zero.
    """
    z = sample_gaussian_matrix(stream, rho.dim, 1)[:, 0]
    return rho.vectors @ (np.sqrt(rho.weights) * z)


def _pick_component(weights: np.ndarray, u: float) -> int:
    """Inverse-CDF draw over nonnegative weights summing to ~1.

    Cumulative rounding is handled by clamping to the last positive-weight
    index, so zero-weight components are never selected.
    """
    cum = np.cumsum(weights)
    idx = int(np.searchsorted(cum, u * cum[-1], side="right"))
    positive = np.flatnonzero(weights > 0.0)
    if positive.size == 0:
        raise ValueError("all weights are zero")
    return min(idx, int(positive[-1]))


def sample_ga(rho: DensityMatrix, stream: RandomStream) -> np.ndarray:
    """Exact draw from the norm^2-adjusted Gaussian measure for rho.

    In the eigenbasis the adjusted density factorizes into a mixture: pick
    component m with probability p_m, give that coordinate squared magnitude
    Gamma(shape 2, scale p_m) with a uniform phase (the size-biased version
    of its exponential law), and draw every other coordinate as under the
    plain Gaussian.  Constant cost, no rejection loop.

    Draw order (fixed for reproducibility): component uniform, radial Gamma,
    phase uniform, then `dim` standard complex Gaussians.
    """
    gen = stream.generator
    w = rho.weights
    m = _pick_component(w, float(gen.random()))
    radial_sq = float(gen.gamma(2.0)) * float(w[m])
    theta = 2.0 * math.pi * float(gen.random())
    z = sample_gaussian_matrix(stream, rho.dim, 1)[:, 0]
    coords = np.sqrt(w) * z
    coords[m] = math.sqrt(radial_sq) * complex(math.cos(theta), math.sin(theta))
    return rho.vectors @ coords


def sample_gap(rho: DensityMatrix, stream: RandomStream) -> np.ndarray:
    """Draw from the adjusted measure projected to the unit sphere."""
    psi = sample_ga(rho, stream)
    norm = float(np.linalg.norm(psi))
    if norm < 1e-150:
        raise DegenerateSampleError("adjusted Gaussian sample norm underflowed")
    return psi / norm


def conditional_wavefunction_detail(
    coeffs, n: int, stream: RandomStream
) -> tuple[np.ndarray, np.ndarray, int]:
    """Conditional wave function plus its Born weights and chosen index.

    The environment side of the entangled state is built as k orthonormalized
    Gaussian n-vectors -- the first k rows of a Haar unitary, by the coupled
    construction transposed.  For environment basis index j the unnormalized
    system vector is (c_i * row_i[j])_i; its squared norm is the Born weight
    of j, and the weights sum to one exactly because the rows are orthonormal.

    Draw order: the n x k panel of Gaussians, then one uniform for the index.
    Returns (normalized system vector, Born weights over 0..n-1, index).
    """
    c = np.asarray(coeffs, dtype=np.complex128)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("coeffs must be a nonempty vector")
    norm_sq = float(np.sum(c.real**2 + c.imag**2))
    if abs(norm_sq - 1.0) > TRACE_TOL:
        raise ValueError(f"squared coefficients must sum to 1, got {norm_sq!r}")
    k = c.size
    if n < k:
        raise ValueError(f"environment dimension n={n} must be >= k={k}")
    panel = sample_gaussian_matrix(stream, n, k)
    rows = gram_schmidt_columns(panel, k).T  # (k, n), orthonormal rows
    amps = c[:, None] * rows
    born = np.sum(amps.real**2 + amps.imag**2, axis=0)
    j = _pick_component(born, float(stream.generator.random()))
    psi = amps[:, j]
    return psi / np.linalg.norm(psi), born, j


def sample_conditional_wavefunction(
    coeffs, n: int, stream: RandomStream
) -> np.ndarray:
    """Normalized conditional wave function of a Haar-typical entangled
    state with Schmidt coefficients `coeffs` and environment dimension n."""
    return conditional_wavefunction_detail(coeffs, n, stream)[0]


def _covariance_report(
    batch: np.ndarray,
    target: np.ndarray,
    description: str,
    sigmas: float | None = 5.0,
    absolute: float | None = None,
) -> TestReport:
    """Empirical covariance of a batch of vectors against a target matrix.

    With `sigmas`, the statistic is the worst entry deviation in standard
    error units; with `absolute`, it is the worst absolute entry deviation.
    """
    count = batch.shape[0]
    outer = batch[:, :, None] * np.conj(batch[:, None, :])
    cov = outer.mean(axis=0)
    dev = np.abs(cov - target)
    if absolute is not None:
        stat = float(dev.max())
        return TestReport(
            statistic=stat,
            threshold=float(absolute),
            passed=stat < absolute,
            n_samples=count,
            description=description,
        )
    se = np.sqrt(
        (outer.real.var(axis=0, ddof=1) + outer.imag.var(axis=0, ddof=1)) / count
    )
    se = np.maximum(se, 1e-300)
    stat = float((dev / se).max())
    return TestReport(
        statistic=stat,
        threshold=float(sigmas),
        passed=stat < sigmas,
        n_samples=count,
        description=description,
    )


def compare_to_gap(
    samples,
    rho: DensityMatrix,
    stream: RandomStream,
    alpha: float = 0.01,
    sigmas: float = 5.0,
) -> list[TestReport]:
    """Test a batch of unit vectors against the projected measure for rho.

    Two families of checks: the empirical covariance against rho entrywise
    (in Monte Carlo standard-error units), and two-sample KS on the squared
    eigenbasis overlaps |<chi_m, psi>|^2 against fresh projected draws (one
    per input sample) taken from `stream`.
    """
    s = np.asarray(samples, dtype=np.complex128)
    if s.ndim != 2:
        raise ValueError("samples must be a (count, dim) array")
    count, k = s.shape
    if k != rho.dim:
        raise ValueError(f"sample dimension {k} does not match rho (dim {rho.dim})")
    if count < 1000:
        raise ValueError("need at least 1000 samples")
    norms = np.linalg.norm(s, axis=1)
    worst = float(np.max(np.abs(norms - 1.0)))
    if worst > 1e-8:
        raise ValueError(f"samples must be unit vectors (worst deviation {worst:.2e})")
    reports = [
        _covariance_report(
            s, rho.matrix, "covariance vs rho (max entry dev, MC-sigma units)", sigmas
        )
    ]
    fresh = np.empty_like(s)
    for t in range(count):
        fresh[t] = sample_gap(rho, stream)
    overlaps = np.abs(s @ np.conj(rho.vectors)) ** 2
    overlaps_fresh = np.abs(fresh @ np.conj(rho.vectors)) ** 2
    for m in range(k):
        reports.append(
            ks_two_sample(
                overlaps[:, m],
                overlaps_fresh[:, m],
                alpha,
                f"overlap |<chi_{m + 1}, psi>|^2 vs fresh projected draws",
            )
        )
    return reports


def importance_resampled_ga_norms(
    rho: DensityMatrix,
    stream: RandomStream,
    count: int,
    oversample: int = 10,
) -> np.ndarray:
    """Squared norms under the adjusted measure via reweighted plain Gaussians.

    Draws count*oversample Gaussian samples, weights them by squared norm,
    and resamples `count` values.  Independent of the exact mixture sampler,
    which makes it the cross-check oracle for it.
    """
    if count < 1:
        raise ValueError("count must be positive")
    proposals = count * oversample
    norms_sq = np.empty(proposals)
    for t in range(proposals):
        psi = sample_gaussian_state(rho, stream)
        norms_sq[t] = float(np.sum(psi.real**2 + psi.imag**2))
    cum = np.cumsum(norms_sq / norms_sq.sum())
    picks = np.searchsorted(cum, stream.generator.random(count), side="right")
    picks = np.minimum(picks, proposals - 1)
    return norms_sq[picks]


def gap_chain_check(
    rho: DensityMatrix,
    stream: RandomStream,
    cov_samples: int = 100_000,
    ga_samples: int = 100_000,
    ks_samples: int = 10_000,
    alpha: float = 0.01,
    sigmas: float = 5.0,
    gap_cov_tol: float | None = None,
) -> list[TestReport]:
    """End-to-end checks of the Gaussian / adjusted / projected chain.

    * plain Gaussian: empirical covariance = rho (MC-sigma units);
    * adjusted: E||psi||^2 = 1 + tr rho^2 (exact fourth-moment identity),
      and two-sample KS of ||psi||^2 from the exact mixture sampler against
      the importance-resampling oracle;
    * projected: unit norms to 1e-12 and empirical covariance within
      `gap_cov_tol` of rho (max entry).  The default tolerance is 0.01 at
      100k covariance samples, rescaled by 1/sqrt(cov_samples) otherwise.
    """
    k = rho.dim
    if gap_cov_tol is None:
        gap_cov_tol = 0.01 * math.sqrt(100_000 / cov_samples)
    gauss = np.empty((cov_samples, k), dtype=np.complex128)
    for t in range(cov_samples):
        gauss[t] = sample_gaussian_state(rho, stream)
    reports = [
        _covariance_report(
            gauss, rho.matrix, "plain Gaussian covariance vs rho (MC-sigma units)",
            sigmas,
        )
    ]

    ga_norms = np.empty(ga_samples)
    for t in range(ga_samples):
        psi = sample_ga(rho, stream)
        ga_norms[t] = float(np.sum(psi.real**2 + psi.imag**2))
    target = 1.0 + rho.purity()
    dev = abs(float(ga_norms.mean()) - target)
    se = math.sqrt(ga_norms.var(ddof=1) / ga_samples)
    reports.append(
        TestReport(
            statistic=dev,
            threshold=sigmas * se,
            passed=dev < sigmas * se,
            n_samples=ga_samples,
            description=f"adjusted E||psi||^2 vs 1 + tr rho^2 = {target:.6g}",
        )
    )

    exact_norms = np.empty(ks_samples)
    for t in range(ks_samples):
        psi = sample_ga(rho, stream)
        exact_norms[t] = float(np.sum(psi.real**2 + psi.imag**2))
    oracle_norms = importance_resampled_ga_norms(rho, stream, ks_samples)
    reports.append(
        ks_two_sample(
            exact_norms,
            oracle_norms,
            alpha,
            "adjusted ||psi||^2: exact mixture vs importance-resampled oracle",
        )
    )

    projected = np.empty((cov_samples, k), dtype=np.complex128)
    for t in range(cov_samples):
        projected[t] = sample_gap(rho, stream)
    norm_dev = float(np.max(np.abs(np.linalg.norm(projected, axis=1) - 1.0)))
    reports.append(
        TestReport(
            statistic=norm_dev,
            threshold=1e-12,
            passed=norm_dev < 1e-12,
            n_samples=cov_samples,
            description="projected samples: max | ||psi|| - 1 |",
        )
    )
    reports.append(
        _covariance_report(
            projected,
            rho.matrix,
            f"projected covariance vs rho (max entry, tol {gap_cov_tol})",
            absolute=gap_cov_tol,
        )
    )
    return reports
