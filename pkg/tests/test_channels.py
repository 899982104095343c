import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from resilience_lab.channels import (
    KrausChannel,
    NonStationaryError,
    UnitalChannel,
    apply_kraus,
    apply_unital,
    check_t_independence,
    compose,
    dephasing_channel,
    dilate_mixture,
    embed_local_channel,
    evolution_channel,
    identity_channel,
    is_unital,
    random_kraus,
    random_unital,
    swap_unitary,
    unitary_channel,
    verify_corollary2,
    verify_theorem1,
)
from resilience_lab.metrics import resilience
from resilience_lab.qcore import PAULI_X, gue, haar_unitary, hs_state, ket, maximally_mixed, projector
from resilience_lab.spectral import dephase, eigendecompose

flip = UnitalChannel((np.eye(2), PAULI_X), np.array([0.5, 0.5]))
replacement = KrausChannel((projector(ket(0, 2)), np.outer(ket(0, 2), ket(1, 2))))


def basis_operators(d):
    for i in range(d):
        for j in range(d):
            m = np.zeros((d, d), dtype=complex)
            m[i, j] = 1
            yield m


def stationary(d, rng):
    h = eigendecompose(gue(d, rng))
    return h, dephase(hs_state(d, rng), h)


class TestUnitalChannel:
    def test_identity(self, rng):
        rho = hs_state(3, rng)
        assert_allclose(apply_unital(identity_channel(3), rho), rho)

    def test_bit_flip_mixture(self):
        assert_allclose(flip(projector(ket(0, 2))), np.eye(2) / 2)

    def test_fixes_maximally_mixed(self, rng):
        ch = random_unital(5, 4, rng)
        assert np.max(np.abs(ch(maximally_mixed(5)) - maximally_mixed(5))) <= 1e-10

    def test_validation(self):
        with pytest.raises(ValueError):
            UnitalChannel((np.eye(2),), np.array([0.9]))
        with pytest.raises(ValueError):
            UnitalChannel((np.eye(2) * 1.1,), np.array([1.0]))
        with pytest.raises(ValueError):
            UnitalChannel((), np.array([]))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            flip(np.eye(3) / 3)

    def test_compose_order(self, rng):
        a, b = random_unital(3, 2, rng), random_unital(3, 3, rng)
        rho = hs_state(3, rng)
        assert_allclose(compose(b, a)(rho), b(a(rho)), atol=1e-14)


class TestKrausChannel:
    def test_identity(self, rng):
        rho = hs_state(2, rng)
        assert_allclose(apply_kraus(KrausChannel((np.eye(2),)), rho), rho)

    def test_replacement(self, rng):
        assert_allclose(replacement(hs_state(2, rng)), projector(ket(0, 2)), atol=1e-15)

    def test_unitary_conjugation(self, rng):
        u, rho = haar_unitary(3, rng), hs_state(3, rng)
        assert_allclose(apply_kraus(KrausChannel((u,)), rho), u @ rho @ u.conj().T, atol=1e-14)

    def test_completeness_enforced(self):
        with pytest.raises(ValueError):
            KrausChannel((np.eye(2) * 0.5,))

    def test_trace_preserved(self, rng):
        ch = random_kraus(3, 4, rng)
        assert np.trace(ch(hs_state(3, rng))).real == pytest.approx(1.0, abs=1e-10)


class TestIsUnital:
    def test_mixture(self, rng):
        assert is_unital(random_unital(3, 3, rng).to_kraus())

    def test_replacement(self):
        assert not is_unital(replacement)

    def test_dephasing_projectors(self):
        assert is_unital(KrausChannel((projector(ket(0, 2)), projector(ket(1, 2)))))


class TestEmbedLocal:
    def test_identity(self, rng):
        ch = embed_local_channel(KrausChannel((np.eye(2),)), (2, 3), 0)
        rho = hs_state(6, rng)
        assert_allclose(ch(rho), rho)

    def test_bit_flip_first_factor(self):
        ch = embed_local_channel(KrausChannel((PAULI_X,)), (2, 2), 0)
        assert_allclose(ch.kraus_ops[0], np.kron(PAULI_X, np.eye(2)))

    def test_replaces_only_target(self, rng):
        r1, r2, r3 = hs_state(2, rng), hs_state(2, rng), hs_state(2, rng)
        ch = embed_local_channel(replacement, (2, 2, 2), 1)
        out = ch(np.kron(np.kron(r1, r2), r3))
        assert_allclose(out, np.kron(np.kron(r1, projector(ket(0, 2))), r3), atol=1e-15)

    def test_errors(self):
        with pytest.raises(ValueError):
            embed_local_channel(replacement, (2, 2), 2)
        with pytest.raises(ValueError):
            embed_local_channel(replacement, (3, 2), 0)


class TestDilation:
    def test_identity(self, rng):
        dil = dilate_mixture(identity_channel(2))
        assert dil.ancilla_dim == 1
        rho = hs_state(2, rng)
        assert_allclose(dil.apply(rho), rho)

    def test_flip(self):
        dil = dilate_mixture(flip)
        assert_allclose(dil.ancilla_state, np.eye(2) / 2)
        expected = np.kron(np.eye(2), np.diag([1, 0])) + np.kron(PAULI_X, np.diag([0, 1]))
        assert_allclose(dil.global_unitary, expected)
        for m in basis_operators(2):
            assert_allclose(dil.apply(m), flip(m), atol=1e-15)

    @pytest.mark.parametrize("seed", range(10))
    def test_reconstruction_on_basis(self, seed):
        rng = np.random.default_rng(seed)
        ch = random_unital(3, 4, rng)
        dil = dilate_mixture(ch)
        for m in basis_operators(3):
            assert np.max(np.abs(dil.apply(m) - ch(m))) <= 1e-9
        rho = hs_state(3, rng)
        assert_allclose(dil.ancilla_marginal(rho), np.diag(ch.probabilities), atol=1e-12)


class TestDephasingChannel:
    def test_matches_dephase(self, rng):
        h = eigendecompose(gue(4, rng))
        rho = hs_state(4, rng)
        assert_allclose(dephasing_channel(h)(rho), dephase(rho, h), atol=1e-13)

    def test_degenerate(self, rng):
        h = eigendecompose(np.diag([0.0, 0.0, 1.0, 2.0]))
        rho = hs_state(4, rng)
        assert len(dephasing_channel(h).unitaries) == 3
        assert_allclose(dephasing_channel(h)(rho), dephase(rho, h), atol=1e-14)


class TestTIndependence:
    grid = (0.4, 1.1, 2.5)

    def test_stationary_input(self, rng):
        h_i, sigma = stationary(3, rng)
        rep = check_t_independence(random_unital(3, 3, rng), sigma, h_i, gue(3, rng), self.grid)
        assert rep.holds
        assert all(r.best_t_prime == pytest.approx(0.0, abs=1e-6) for r in rep.rows)
        assert rep.max_residual <= 1e-10

    def test_dephase_first(self, rng):
        h_i = eigendecompose(gue(3, rng))
        ch = compose(random_unital(3, 2, rng), dephasing_channel(h_i))
        rep = check_t_independence(ch, hs_state(3, rng), h_i, gue(3, rng), self.grid)
        assert rep.max_residual <= 1e-10

    def test_covariant(self, rng):
        h = eigendecompose(gue(3, rng))
        rep = check_t_independence(evolution_channel(h, 0.7), hs_state(3, rng), h, h, self.grid)
        assert rep.max_residual <= 1e-10
        for row in rep.rows:
            assert row.best_t_prime == pytest.approx(row.t, abs=1e-6)

    def test_generic_channel_fails(self, rng):
        h_i = eigendecompose(gue(3, rng))
        rho = projector(np.ones(3) / np.sqrt(3))
        rep = check_t_independence(random_unital(3, 2, rng), rho, h_i, np.diag([0.0, 1.0, 1.5]), self.grid)
        assert not rep.holds

    def test_empty_grid(self, rng):
        with pytest.raises(ValueError):
            check_t_independence(identity_channel(2), np.eye(2) / 2, np.eye(2), np.eye(2), [])

    @pytest.mark.parametrize("seed", range(10))
    def test_chain_identity(self, seed):
        # for stationary input, dephasing before the channel changes nothing downstream
        rng = np.random.default_rng(seed)
        h_i, sigma = stationary(4, rng)
        h_f = eigendecompose(gue(4, rng))
        ch = random_unital(4, 3, rng)
        assert check_t_independence(ch, sigma, h_i, h_f, (1.0,)).holds
        assert_allclose(dephase(ch(dephase(sigma, h_i)), h_f), dephase(ch(sigma), h_f), atol=1e-9)


class TestTheorem1:
    def test_identity_channel(self, rng):
        h_q, s_q = stationary(3, rng)
        h_r, s_r = stationary(2, rng)
        c = verify_theorem1(s_q, s_r, h_q, h_r, identity_channel(6), h_q)
        assert c.delta_r_q == pytest.approx(0, abs=1e-14)
        assert c.slack == pytest.approx(resilience(s_r, h_r))
        assert c.holds

    def test_swap_saturates(self, rng):
        h = eigendecompose(gue(3, rng))
        s_q = maximally_mixed(3)
        s_r = projector(h.eigenvectors[:, 0])
        c = verify_theorem1(s_q, s_r, h, h, unitary_channel(swap_unitary(3)), h)
        assert c.delta_r_q == pytest.approx(math.log(3), abs=1e-12)
        assert c.slack == pytest.approx(0, abs=1e-12)

    def test_rejects_non_stationary(self, rng):
        h = eigendecompose(gue(2, rng))
        with pytest.raises(NonStationaryError):
            verify_theorem1(hs_state(2, rng), np.eye(2) / 2, h, h, identity_channel(4), h)

    @pytest.mark.parametrize("seed", range(100))
    def test_random(self, seed):
        rng = np.random.default_rng(seed)
        h_q, s_q = stationary(3, rng)
        h_r, s_r = stationary(3, rng)
        c = verify_theorem1(s_q, s_r, h_q, h_r, random_unital(9, 3, rng), gue(3, rng))
        assert c.slack >= -1e-9

    @pytest.mark.parametrize("seed", range(100))
    def test_monotonicity_without_resource(self, seed):
        rng = np.random.default_rng(seed)
        h_i, sigma = stationary(4, rng)
        out = random_unital(4, 3, rng)(sigma)
        assert resilience(out, gue(4, rng)) <= resilience(sigma, h_i) + 1e-9


class TestCorollary2:
    def test_identity_local(self, rng):
        h, s = stationary(4, rng)
        c = verify_corollary2(s, h, KrausChannel((np.eye(2),)), 0, (2, 2), h)
        assert c.delta_r == pytest.approx(0, abs=1e-14)
        assert c.bound == pytest.approx(0.693147, abs=1e-6)

    def test_replacement_on_mixed(self):
        # maximally mixed input, reset one qubit: d_eff halves so dR = log 2 exactly
        h = eigendecompose(np.diag(np.sqrt([2.0, 3.0, 5.0, 7.0])))
        c = verify_corollary2(maximally_mixed(4), h, replacement, 1, (2, 2), h)
        assert c.delta_r == pytest.approx(math.log(2), abs=1e-12)
        assert c.holds

    @pytest.mark.parametrize("seed", range(100))
    def test_random(self, seed):
        rng = np.random.default_rng(seed)
        h, s = stationary(8, rng)
        pos = seed % 3
        c = verify_corollary2(s, h, random_kraus(2, 3, rng), pos, (2, 2, 2), gue(8, rng))
        assert c.delta_r <= math.log(2) + 1e-9
