import numpy as np
import pytest

from divwitness import channels, linalg, serialization as ser
from divwitness.divisibility import check_divisible
from divwitness.errors import DimensionMismatchError, InvalidChannelError
from divwitness.families import (
    CollisionModel,
    amplitude_damping_channel,
    bsc_matrix,
    classical_chain,
    collision_mapping,
    dephasing_channel,
    dephasing_family,
    depolarizing_channel,
    partial_swap_unitary,
    random_cptp_channel,
    random_divisible,
    random_povm,
    unitary_family,
)


class TestAnalyticFamilies:
    def test_dephasing_limits(self):
        assert channels.is_identity(dephasing_channel(1.0))
        full = dephasing_channel(0.0)
        plus = channels.pure_state(np.array([1, 1]) / np.sqrt(2))
        assert np.allclose(channels.apply(full, plus), np.eye(2) / 2)

    def test_dephasing_family_requires_identity(self):
        with pytest.raises(InvalidChannelError):
            dephasing_family([0.5, 0.8])

    def test_amplitude_damping(self):
        n = amplitude_damping_channel(0.36)
        excited = np.diag([0.0, 1.0]).astype(complex)
        out = channels.apply(n, excited)
        assert out[1, 1].real == pytest.approx(0.36)
        plus = channels.pure_state(np.array([1, 1]) / np.sqrt(2))
        assert channels.apply(n, plus)[0, 1].real == pytest.approx(0.3)  # sqrt(0.36)/2

    def test_depolarizing(self, rng):
        from divwitness.discrimination import random_density

        eps = 0.3
        rho = random_density(2, rng)
        out = channels.apply(depolarizing_channel(eps), rho)
        assert np.allclose(out, eps * rho + (1 - eps) * np.eye(2) / 2)

    def test_depolarizing_rank(self):
        assert channels.linear_map_rank(depolarizing_channel(0.0)) == (1, False)
        for eps in (1e-3, 0.1, 1.0):
            assert channels.linear_map_rank(depolarizing_channel(eps)) == (4, True)

    def test_unitary_family(self):
        x = np.array([[0, 1], [1, 0]], dtype=complex)
        m = unitary_family([np.eye(2), x])
        out = channels.apply(m.channels[1], np.diag([1.0, 0.0]).astype(complex))
        assert np.allclose(out, np.diag([0.0, 1.0]))


class TestClassicalChain:
    def test_starts_with_quantum_identity(self):
        mats, mapping = classical_chain([0.0, 0.25, 0.4])
        assert channels.is_identity(mapping.channels[0])
        assert np.allclose(mats[1], bsc_matrix(0.25))

    def test_embeddings_match_matrices(self):
        mats, mapping = classical_chain([0.0, 0.25])
        p = np.diag([0.7, 0.3]).astype(complex)
        out = channels.apply(mapping.channels[1], p)
        assert np.allclose(np.diag(out).real, mats[1] @ np.array([0.7, 0.3]))

    def test_requires_zero_start(self):
        with pytest.raises(DimensionMismatchError):
            classical_chain([0.1, 0.2])


class TestCollisionModels:
    def _env(self, d=2):
        env = np.zeros((d, d), dtype=complex)
        env[0, 0] = 1.0
        return env

    def test_fresh_units_divisible(self):
        us = [partial_swap_unitary(2, 0.4), partial_swap_unitary(2, 0.7)]
        model = CollisionModel(2, 2, self._env(), us)
        mapping = collision_mapping(model, 2, memory=False)
        assert check_divisible(mapping).verdict == "divisible"

    def test_memory_swap_back_not_divisible(self):
        # full swap then swap back: N^2 = id but N^1 loses the state, so no
        # propagator can restore it
        half_pi = np.pi / 2
        us = [partial_swap_unitary(2, half_pi), partial_swap_unitary(2, half_pi)]
        model = CollisionModel(2, 2, self._env(), us)
        mapping = collision_mapping(model, 2, memory=True)
        assert channels.is_identity(mapping.channels[2])
        assert check_divisible(mapping).verdict == "not_divisible"

    def test_memory_and_fresh_agree_on_first_step(self):
        us = [partial_swap_unitary(2, 0.3), partial_swap_unitary(2, 0.3)]
        model = CollisionModel(2, 2, self._env(), us)
        fresh = collision_mapping(model, 2, memory=False)
        mem = collision_mapping(model, 2, memory=True)
        assert linalg.frob(fresh.channels[1].choi - mem.channels[1].choi) < 1e-10

    def test_rejects_non_unitary(self):
        with pytest.raises(InvalidChannelError):
            CollisionModel(2, 2, self._env(), [np.eye(4) * 0.5])

    def test_partial_swap_unitary(self):
        u = partial_swap_unitary(3, 0.37)
        assert np.allclose(u.conj().T @ u, np.eye(9), atol=1e-12)


class TestRandomInstances:
    def test_random_cptp_valid(self, rng):
        for d in (2, 3):
            for _ in range(5):
                n = random_cptp_channel(d, rng)
                assert channels.validate_cptp(n).verdict

    def test_random_divisible_is_divisible(self):
        for seed in (0, 5):
            assert check_divisible(random_divisible(2, 3, seed=seed)).verdict == "divisible"

    def test_random_divisible_deterministic(self):
        a = random_divisible(2, 3, seed=42)
        b = random_divisible(2, 3, seed=42)
        text_a = ser.dumps(ser.mapping_to_json(a))
        text_b = ser.dumps(ser.mapping_to_json(b))
        assert text_a == text_b

    def test_random_divisible_bounds(self):
        with pytest.raises(DimensionMismatchError):
            random_divisible(4, 2)
        with pytest.raises(DimensionMismatchError):
            random_divisible(2, 9)

    def test_random_povm(self, rng):
        povm = random_povm(3, 4, rng)
        povm.validate()
        assert linalg.frob(sum(povm.elements) - np.eye(3)) < 1e-9
