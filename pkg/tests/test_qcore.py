import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from resilience_lab.qcore import (
    PAULI_X,
    CompositeDims,
    DensityError,
    DimensionError,
    Observable,
    RandomKind,
    RandomSpec,
    hermitian_spectrum,
    ket,
    maximally_mixed,
    operator_norm,
    partial_trace,
    projector,
    sample_random,
    tensor_product,
    trace_distance,
    validate_density,
)

seeds = st.integers(0, 2**32 - 1)


def hs(dim, seed):
    return sample_random(RandomSpec("hs_random_state", dim, seed))


class TestTensorProduct:
    def test_maximally_mixed(self):
        assert_allclose(tensor_product(maximally_mixed(2), maximally_mixed(2)), np.eye(4) / 4)

    def test_dimensions_multiply(self):
        assert tensor_product(np.eye(2), np.eye(3)).shape == (6, 6)

    def test_basis_projectors(self):
        out = tensor_product(projector(ket(0, 2)), projector(ket(1, 2)))
        assert_allclose(out, projector(ket(1, 4)))

    def test_needs_operand(self):
        with pytest.raises(ValueError):
            tensor_product()


class TestPartialTrace:
    def test_bell_state(self):
        bell = (ket(0, 4) + ket(3, 4)) / np.sqrt(2)
        assert_allclose(partial_trace(projector(bell), (2, 2), 0), np.eye(2) / 2, atol=1e-15)

    def test_keep_all_is_identity(self):
        rho = hs(6, 1)
        assert_array_equal(partial_trace(rho, (2, 3), [0, 1]), rho)

    def test_three_parties(self):
        a, b, c = hs(2, 1), hs(3, 2), hs(2, 3)
        rho = tensor_product(a, b, c)
        assert_allclose(partial_trace(rho, (2, 3, 2), [0, 2]), np.kron(a, c), atol=1e-14)
        assert_allclose(partial_trace(rho, (2, 3, 2), 1), b, atol=1e-14)

    def test_errors(self):
        with pytest.raises(DimensionError):
            partial_trace(np.eye(4) / 4, (2, 3), 0)
        with pytest.raises(ValueError):
            partial_trace(np.eye(4) / 4, (2, 2), [])
        with pytest.raises(DimensionError):
            partial_trace(np.eye(4) / 4, (2, 2), 2)

    @given(seeds, st.integers(1, 4), st.integers(1, 4))
    def test_product_reduction(self, seed, d1, d2):
        a, b = hs(d1, seed), hs(d2, seed ^ 0xFFFF)
        rho = tensor_product(a, b)
        assert_allclose(partial_trace(rho, (d1, d2), 0), a, atol=1e-12)
        assert_allclose(partial_trace(rho, (d1, d2), 1), b, atol=1e-12)


class TestTraceDistance:
    def test_identical(self):
        rho = hs(3, 5)
        assert trace_distance(rho, rho) == pytest.approx(0.0, abs=1e-15)

    def test_orthogonal(self):
        assert trace_distance(projector(ket(0, 2)), projector(ket(1, 2))) == pytest.approx(1.0)

    def test_hand_value(self):
        # eigenvalues of the difference are +-1/4
        assert trace_distance(np.diag([0.75, 0.25]), np.eye(2) / 2) == pytest.approx(0.25, abs=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            trace_distance(np.eye(2), np.eye(3))

    @given(seeds)
    def test_metric(self, seed):
        a, b, c = hs(4, seed), hs(4, seed + 1), hs(4, seed + 2)
        assert trace_distance(a, b) == trace_distance(b, a)
        assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-12
        assert 0.0 <= trace_distance(a, b) <= 1.0 + 1e-12


class TestOperatorNorm:
    @pytest.mark.parametrize(
        "m, expected", [(PAULI_X, 1.0), (np.diag([0.0, 1.0, 3.0]), 3.0), (np.zeros((3, 3)), 0.0)]
    )
    def test_examples(self, m, expected):
        assert operator_norm(m) == pytest.approx(expected)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            operator_norm(np.array([[0, 1], [0, 0]]))

    @given(seeds)
    def test_multiplicative_on_tensor_products(self, seed):
        a = sample_random(RandomSpec(RandomKind.GUE_HAMILTONIAN, 3, seed))
        b = sample_random(RandomSpec(RandomKind.GUE_HAMILTONIAN, 2, seed + 7))
        assert_allclose(operator_norm(np.kron(a, b)), operator_norm(a) * operator_norm(b), rtol=1e-10)

    def test_observable_symmetrizes(self):
        m = np.array([[1.0, 1e-12], [0.0, -1.0]])
        obs = Observable(m)
        assert_allclose(obs.entries, obs.entries.conj().T)


class TestValidateDensity:
    def test_accepts_maximally_mixed(self):
        assert validate_density(np.eye(4) / 4).dim == 4

    def test_trace_violation(self):
        with pytest.raises(DensityError, match="trace"):
            validate_density(np.diag([0.5, 0.6]))

    def test_negative_eigenvalue(self):
        with pytest.raises(DensityError, match="negative"):
            validate_density(np.diag([1.2, -0.2]))

    def test_non_hermitian(self):
        with pytest.raises(DensityError, match="Hermitian"):
            validate_density(np.array([[0.5, 0.1], [0.0, 0.5]]))

    def test_small_drift_repaired(self):
        out = validate_density(np.diag([0.5, 0.5 + 5e-10]))
        assert np.trace(np.asarray(out)).real == pytest.approx(1.0, abs=1e-15)

    def test_hs_states_always_valid(self):
        for seed in range(1000):
            validate_density(hs(4, seed))


class TestSampling:
    def test_gue_bit_identical(self):
        spec = RandomSpec("gue_hamiltonian", 8, 1)
        assert_array_equal(sample_random(spec), sample_random(spec))

    def test_haar_unitary(self):
        u = sample_random(RandomSpec("haar_unitary", 4, 7))
        assert np.max(np.abs(u.conj().T @ u - np.eye(4))) <= 1e-12

    def test_hs_state_valid(self):
        validate_density(hs(4, 3), tol=1e-9)

    def test_gue_hermitian(self):
        h = sample_random(RandomSpec("gue_hamiltonian", 6, 0))
        assert_array_equal(h, h.conj().T)

    def test_zero_dim(self):
        with pytest.raises(ValueError):
            sample_random(RandomSpec("gue_hamiltonian", 0, 0))

    def test_gue_entry_variance(self):
        d = 64
        h = sample_random(RandomSpec("gue_hamiltonian", d, 11))
        off = h[np.triu_indices(d, 1)]
        assert np.mean(np.abs(off) ** 2) == pytest.approx(1 / d, rel=0.1)


class TestCompositeDims:
    def test_total(self):
        dims = CompositeDims([2, 3, 4])
        assert dims.total == 24 and len(dims) == 3 and dims[1] == 3

    def test_rejects_zero(self):
        with pytest.raises(DimensionError):
            CompositeDims([2, 0])


class TestHermitianSpectrum:
    def test_block_path_matches_dense(self, rng):
        d = 300
        m = np.diag(rng.uniform(size=d)).astype(complex)
        m[3, 7] = m[7, 3] = 0.1
        m[10, 200] = 0.05j
        m[200, 10] = -0.05j
        assert_allclose(hermitian_spectrum(m), np.linalg.eigvalsh(m), atol=1e-13)

    def test_diagonal_path(self, rng):
        v = rng.uniform(size=400)
        assert_array_equal(hermitian_spectrum(np.diag(v)), np.sort(v))
