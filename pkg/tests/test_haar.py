"""Gram-Schmidt construction, coupling sequentiality, and Haar statistics."""

import math

import numpy as np
import pytest

from haarlab import (
    RandomStream,
    RankDeficientError,
    gram_schmidt_columns,
    sample_coupled,
    sample_gaussian_matrix,
    sample_haar_unitary,
    sample_sphere_marginal,
)

SQRT_HALF = math.sqrt(0.5)


def ortho_dev(u):
    k = u.shape[1]
    return float(np.max(np.abs(u.conj().T @ u - np.eye(k))))


def qr_haar(gen, n):
    """Cross-check oracle: Haar unitary via QR with phase correction."""
    z = (gen.standard_normal((n, n)) + 1j * gen.standard_normal((n, n))) * SQRT_HALF
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


class TestGramSchmidt:
    def test_identity_fixed_point(self):
        eye = np.eye(3, dtype=complex)
        assert np.allclose(gram_schmidt_columns(eye, 3), eye)

    def test_orthogonal_input_only_normalized(self):
        g = np.array([[1.0, 0.0], [0.0, 2.0]], dtype=complex)
        assert np.allclose(gram_schmidt_columns(g, 2), np.eye(2))

    def test_hand_worked_two_columns(self):
        # Columns (1,1) and (0,1): second residual is (0,1) - (1/2)(1,1).
        g = np.array([[1.0, 0.0], [1.0, 1.0]], dtype=complex)
        u = gram_schmidt_columns(g, 2)
        s = 1.0 / math.sqrt(2.0)
        expected = np.array([[s, -s], [s, s]])
        assert np.allclose(u, expected, atol=1e-14)
        assert ortho_dev(u) < 1e-14

    def test_complex_projection_keeps_orthogonality(self):
        # The projection coefficient must be conjugated the right way round:
        # with the wrong orientation this panel loses orthogonality at O(1).
        g = np.array([[1.0, 1.0], [1j, 0.0]], dtype=complex)
        u = gram_schmidt_columns(g, 2)
        assert ortho_dev(u) < 1e-14

    @pytest.mark.parametrize("n", [16, 1024, 100_000])
    def test_orthonormality_tolerance(self, n):
        g = sample_gaussian_matrix(RandomStream(600 + n), n, 4)
        assert ortho_dev(gram_schmidt_columns(g, 4)) <= 1e-10

    def test_rank_deficient_raises(self):
        g = np.ones((4, 2), dtype=complex)
        with pytest.raises(RankDeficientError):
            gram_schmidt_columns(g, 2)

    def test_reorthogonalization_beyond_64_columns(self):
        # Full 80-column run: columns past the 64th get a second pass, and
        # prefixes must still match a shorter run bit for bit.
        g = sample_gaussian_matrix(RandomStream(66), 80, 80)
        u = gram_schmidt_columns(g, 80)
        assert ortho_dev(u) <= 1e-10
        u48 = gram_schmidt_columns(g[:, :48], 48)
        assert np.array_equal(u[:, :48], u48)

    def test_argument_validation(self):
        g = sample_gaussian_matrix(RandomStream(3), 4, 2)
        with pytest.raises(ValueError):
            gram_schmidt_columns(g, 3)
        with pytest.raises(ValueError):
            gram_schmidt_columns(g, 0)
        with pytest.raises(ValueError):
            gram_schmidt_columns(sample_gaussian_matrix(RandomStream(3), 2, 3), 3)


class TestCoupledSample:
    def test_single_entry_has_unit_modulus(self):
        cs = sample_coupled(RandomStream(12), 1, 1)
        assert abs(abs(cs.unitary[0, 0]) - 1.0) < 1e-14

    def test_orthonormality_contract(self):
        cs = sample_coupled(RandomStream(13), 64, 4)
        assert ortho_dev(cs.unitary) <= 1e-10

    def test_coupling_sequentiality_bit_identical(self):
        cs = sample_coupled(RandomStream(14), 128, 5)
        for j in range(1, 6):
            prefix = gram_schmidt_columns(cs.gaussian[:, :j], j)
            assert np.array_equal(cs.unitary[:, :j], prefix)

    def test_panel_matches_full_construction(self):
        # The n x k panel must equal the first k columns of the full n x n run.
        g = sample_gaussian_matrix(RandomStream(15), 48, 48)
        full = gram_schmidt_columns(g, 48)
        panel = gram_schmidt_columns(g[:, :3], 3)
        assert np.array_equal(full[:, :3], panel)

    def test_first_column_moment_vs_qr_oracle(self):
        # Exact identity n * E|U_11|^2 = 1; checked for the Gram-Schmidt
        # sampler and for an independent QR-based sampler.
        n, trials = 32, 20_000
        root = RandomStream(16)
        vals = np.empty(trials)
        for t in range(trials):
            cs = sample_coupled(root.child(t), n, 1)
            vals[t] = n * abs(cs.unitary[0, 0]) ** 2
        se = math.sqrt(vals.var(ddof=1) / trials)
        assert abs(vals.mean() - 1.0) < 5.0 * se

        gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(99)))
        oracle = np.empty(4000)
        for t in range(4000):
            oracle[t] = n * abs(qr_haar(gen, n)[0, 0]) ** 2
        se_o = math.sqrt(oracle.var(ddof=1) / oracle.size)
        assert abs(oracle.mean() - 1.0) < 5.0 * se_o

    def test_validation(self):
        with pytest.raises(ValueError):
            sample_coupled(RandomStream(0), 2, 3)
        with pytest.raises(ValueError):
            sample_coupled(RandomStream(0), 2, 0)


class TestHaarUnitary:
    def test_scalar_case_uniform_phase(self):
        trials = 100_000
        stream = RandomStream(17)
        phases = np.empty(trials, dtype=complex)
        for t in range(trials):
            phases[t] = sample_haar_unitary(stream, 1)[0, 0]
        assert abs(phases.mean()) < 0.02

    @pytest.mark.parametrize("n", [4, 16, 64])
    def test_unit_determinant_modulus(self, n):
        u = sample_haar_unitary(RandomStream(700 + n), n)
        assert abs(abs(np.linalg.det(u)) - 1.0) < 1e-8

    def test_unitarity(self):
        u = sample_haar_unitary(RandomStream(18), 16)
        assert ortho_dev(u) <= 1e-10

    def test_left_invariance_smoke(self):
        # A fixed row permutation must leave corner statistics unchanged:
        # first two moments agree within five standard errors.
        n, k, trials = 16, 2, 10_000
        root = RandomStream(19)
        perm = np.arange(n)[::-1]
        plain = np.empty((trials, k, k), dtype=complex)
        permuted = np.empty((trials, k, k), dtype=complex)
        for t in range(trials):
            u = sample_haar_unitary(root.child(t), n)
            plain[t] = u[:k, :k]
            permuted[t] = u[perm, :][:k, :k]
        for stat in (lambda z: np.abs(z), lambda z: np.abs(z) ** 2):
            a = stat(plain).ravel()
            b = stat(permuted).ravel()
            se = math.sqrt(a.var(ddof=1) / a.size + b.var(ddof=1) / b.size)
            assert abs(a.mean() - b.mean()) < 5.0 * se

    def test_corner_moment_identity(self):
        n, k, trials = 8, 2, 20_000
        root = RandomStream(20)
        vals = np.empty((trials, k, k))
        for t in range(trials):
            cs = sample_coupled(root.child(t), n, k)
            vals[t] = n * np.abs(cs.unitary[:k, :]) ** 2
        for i in range(k):
            for j in range(k):
                col = vals[:, i, j]
                se = math.sqrt(col.var(ddof=1) / trials)
                assert abs(col.mean() - 1.0) < 5.0 * se


class TestSphereMarginal:
    def test_scalar_case(self):
        v = sample_sphere_marginal(RandomStream(21), 1, 1)
        assert v.shape == (1,)
        assert abs(abs(v[0]) - 1.0) < 1e-12

    def test_full_vector_is_unit_after_unscaling(self):
        n = 512
        v = sample_sphere_marginal(RandomStream(22), n, n)
        assert abs(np.sum(np.abs(v / math.sqrt(n)) ** 2) - 1.0) < 1e-12

    def test_truncation_consistency(self):
        full = sample_sphere_marginal(RandomStream(23), 256, 256)
        head = sample_sphere_marginal(RandomStream(23), 256, 3)
        assert np.array_equal(full[:3], head)

    def test_validation(self):
        with pytest.raises(ValueError):
            sample_sphere_marginal(RandomStream(0), 4, 5)
