"""The explicit MUB state vectors and their 2-design behaviour."""

import numpy as np
import pytest
from scipy import stats

from chitomo.mub import (
    DesignStateId,
    base_probabilities,
    design_average_survival,
    design_basis,
    measure_in_base,
    mub_state,
    sample_design_state,
    transition_target,
)
from chitomo.oracle import haar_closed_form
from chitomo.pauli import (
    DenseCapError,
    PauliLabel,
    label_from_index,
    mub_class,
    pauli_matrix,
)


class TestStateConstruction:
    def test_computational_base_is_j0(self):
        np.testing.assert_allclose(mub_state(DesignStateId(1, 0, 0)), [1, 0], atol=1e-15)
        np.testing.assert_allclose(mub_state(DesignStateId(1, 0, 1)), [0, 1], atol=1e-15)

    def test_x_base_plus_state(self):
        v = mub_state(DesignStateId(1, 1, 0))
        np.testing.assert_allclose(v, [1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_generator_eigenvalue_labels(self, n):
        """P^J_i |psi^J_k> = (-1)^{k_i} |psi^J_k> for every state."""
        d = 2**n
        for j in range(d + 1):
            gens = [pauli_matrix(g) for g in mub_class(n, j).generators]
            for k in range(d):
                v = mub_state(DesignStateId(n, j, k))
                for i, g in enumerate(gens):
                    sign = -1.0 if (k >> i) & 1 else 1.0
                    np.testing.assert_allclose(g @ v, sign * v, atol=1e-10)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_unit_norm_and_phase_convention(self, n):
        d = 2**n
        for j in range(d + 1):
            for k in range(d):
                v = mub_state(DesignStateId(n, j, k))
                assert abs(np.linalg.norm(v) - 1) < 1e-12
                first = v[np.argmax(np.abs(v) > 1e-8)]
                assert first.real > 0 and abs(first.imag) < 1e-12

    def test_all_twenty_states_cross_unbiased_at_n2(self):
        states = [
            mub_state(DesignStateId(2, j, k)) for j in range(5) for k in range(4)
        ]
        for a in range(20):
            for b in range(20):
                if a // 4 == b // 4:
                    continue
                overlap = abs(np.vdot(states[a], states[b])) ** 2
                assert abs(overlap - 0.25) < 1e-10

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_bases_are_orthonormal(self, n):
        d = 2**n
        for j in range(d + 1):
            b = design_basis(n, j)
            np.testing.assert_allclose(b.conj().T @ b, np.eye(d), atol=1e-10)

    def test_invalid_ids_rejected(self):
        with pytest.raises(ValueError):
            DesignStateId(1, 3, 0)
        with pytest.raises(ValueError):
            DesignStateId(1, 0, 2)
        with pytest.raises(ValueError):
            DesignStateId(2, -1, 0)

    def test_dense_cap(self):
        with pytest.raises(DenseCapError):
            design_basis(7, 0)


class TestDesignAverage:
    def test_identity_pair(self):
        assert abs(design_average_survival(np.eye(2), np.eye(2)) - 1) < 1e-12

    def test_z_pair_single_qubit(self):
        z = np.diag([1.0, -1.0])
        assert abs(design_average_survival(z, z) - 1 / 3) < 1e-12

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_matches_haar_closed_form(self, n):
        rng = np.random.default_rng(n)
        d = 2**n
        for _ in range(20):
            o1 = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            o2 = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            assert abs(design_average_survival(o1, o2) - haar_closed_form(o1, o2)) < 1e-10

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            design_average_survival(np.eye(3), np.eye(3))
        with pytest.raises(ValueError):
            design_average_survival(np.eye(2), np.eye(4))


class TestSampling:
    def test_uniform_over_six_single_qubit_states(self):
        rng = np.random.default_rng(123)
        counts = np.zeros(6)
        for _ in range(60000):
            sid = sample_design_state(1, rng)
            counts[sid.J * 2 + sid.k] += 1
        assert stats.chisquare(counts).pvalue > 0.001

    def test_deterministic_under_seed(self):
        draws = [
            [sample_design_state(2, np.random.default_rng(42)) for _ in range(50)]
            for _ in range(2)
        ]
        assert draws[0] == draws[1]

    def test_large_n_never_builds_states(self):
        rng = np.random.default_rng(0)
        sid = sample_design_state(10, rng)
        assert 0 <= sid.J <= 1024 and 0 <= sid.k < 1024


class TestTransitionTarget:
    def test_identity_fixes_everything(self):
        sid = DesignStateId(2, 3, 2)
        assert transition_target(sid, PauliLabel.identity(2)) == sid

    def test_x_flips_computational_bit(self):
        sid = DesignStateId(1, 0, 0)
        out = transition_target(sid, PauliLabel.from_string("X"))
        assert (out.J, out.k) == (0, 1)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_matches_matrix_action_up_to_phase(self, n):
        rng = np.random.default_rng(n + 40)
        d = 2**n
        for _ in range(70):
            sid = DesignStateId(n, int(rng.integers(0, d + 1)), int(rng.integers(0, d)))
            a = label_from_index(n, int(rng.integers(0, 4**n)))
            moved = pauli_matrix(a) @ mub_state(sid)
            target = mub_state(transition_target(sid, a))
            assert abs(abs(np.vdot(moved, target)) - 1) < 1e-10

    def test_mismatched_n_rejected(self):
        with pytest.raises(ValueError):
            transition_target(DesignStateId(2, 0, 0), PauliLabel.from_string("X"))


class TestMeasureInBase:
    def test_eigenstate_measured_in_own_base(self):
        rng = np.random.default_rng(5)
        for j in range(5):
            for k in range(4):
                v = mub_state(DesignStateId(2, j, k))
                rho = np.outer(v, v.conj())
                assert all(measure_in_base(rho, j, rng) == k for _ in range(5))

    def test_maximally_mixed_is_uniform(self):
        rng = np.random.default_rng(6)
        counts = np.zeros(4)
        for _ in range(10000):
            counts[measure_in_base(np.eye(4) / 4, 2, rng)] += 1
        assert stats.chisquare(counts).pvalue > 0.001

    def test_flipped_state_in_computational_base(self):
        rng = np.random.default_rng(7)
        rho = np.diag([0.0, 1.0]).astype(complex)  # X|0><0|X
        assert all(measure_in_base(rho, 0, rng) == 1 for _ in range(10))

    def test_invalid_density_matrix_rejected(self):
        with pytest.raises(ValueError):
            base_probabilities(2 * np.eye(2), 0)

    def test_distribution_sums_to_one(self):
        rng = np.random.default_rng(8)
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = g @ g.conj().T
        rho /= np.trace(rho)
        for j in range(5):
            probs = base_probabilities(rho, j)
            assert abs(probs.sum() - 1) < 1e-12
            assert probs.min() >= 0
