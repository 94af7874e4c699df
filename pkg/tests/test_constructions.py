import numpy as np
import pytest

from divwitness import channels, constructions as ct, linalg
from divwitness.channels import Povm
from divwitness.discrimination import random_density
from divwitness.divisibility import DIVISIBLE_STEP, find_step_propagator
from divwitness.errors import OrderingViolationError
from divwitness.families import dephasing_channel, random_divisible


class TestHermitianBasis:
    def test_spans(self):
        for d in (2, 3):
            basis = ct.hermitian_basis(d)
            assert len(basis) == d * d
            flat = np.array([b.reshape(-1) for b in basis])
            assert np.linalg.matrix_rank(flat) == d * d
            for b in basis:
                assert linalg.is_hermitian(b)


class TestWeylUnitaries:
    def test_count_and_unitarity(self):
        for d in (2, 3):
            us = ct.weyl_unitaries(d)
            assert len(us) == d * d
            for u in us:
                assert np.allclose(u.conj().T @ u, np.eye(d), atol=1e-12)

    def test_qubit_paulis(self):
        us = ct.weyl_unitaries(2)
        assert np.allclose(us[0], np.eye(2))
        assert np.allclose(us[1], np.diag([1, -1]))  # Z
        assert np.allclose(us[2], [[0, 1], [1, 0]])  # X
        assert np.allclose(us[3], [[0, -1], [1, 0]])  # XZ

    def test_orthogonality(self):
        # Tr[U_a† U_b] = d * delta_ab
        for d in (2, 3):
            us = ct.weyl_unitaries(d)
            gram = np.array([[np.trace(a.conj().T @ b) for b in us] for a in us])
            assert np.allclose(gram, d * np.eye(d * d), atol=1e-12)


class TestTeleportKit:
    def test_bell_povm_valid(self):
        for d in (2, 3):
            kit = ct.make_teleport_kit(d)
            total = sum(kit.bell_povm.elements)
            assert linalg.frob(total - np.eye(d * d)) < 1e-10

    def test_teleport_identity(self, rng):
        for d in (2, 3):
            kit = ct.make_teleport_kit(d)
            for _ in range(5):
                rho = random_density(d, rng)
                assert linalg.frob(ct.teleport(kit, rho) - rho) < 1e-9


class TestSimulatePovm:
    def test_dephasing_feasible(self):
        # measure X on the output of gamma' = 0.8 * 0.625, simulated through
        # gamma = 0.8: the simulating element is (I + 0.625 X) / 2
        n = dephasing_channel(0.8)
        nprime = dephasing_channel(0.5)
        x = np.array([[0, 1], [1, 0]], dtype=complex)
        q = Povm(2, [(np.eye(2) + x) / 2, (np.eye(2) - x) / 2])
        sim = ct.simulate_povm(n, nprime, q)
        assert sim is not None
        assert sim.residual < 1e-5
        expected = (np.eye(2) + 0.625 * x) / 2
        assert linalg.frob(sim.simulating_povm.elements[0] - expected) < 1e-4

    def test_reverse_infeasible(self):
        n = dephasing_channel(0.5)
        nprime = dephasing_channel(0.8)
        x = np.array([[0, 1], [1, 0]], dtype=complex)
        q = Povm(2, [(np.eye(2) + x) / 2, (np.eye(2) - x) / 2])
        assert ct.simulate_povm(n, nprime, q) is None

    def test_statistics_match(self, rng):
        n = dephasing_channel(0.9)
        nprime = dephasing_channel(0.45)
        q = Povm(2, channels.basis_povm(2).elements)
        sim = ct.simulate_povm(n, nprime, q)
        for _ in range(5):
            rho = random_density(2, rng)
            for p_el, q_el in zip(sim.simulating_povm.elements, q.elements):
                lhs = np.trace(channels.apply(n, rho) @ p_el).real
                rhs = np.trace(channels.apply(nprime, rho) @ q_el).real
                assert abs(lhs - rhs) < 1e-5


class TestQcPropagator:
    def test_semiclassical_step(self):
        n = dephasing_channel(0.8)
        target_povm = channels.basis_povm(2)
        prop = ct.build_qc_propagator(n, target_povm)
        target = channels.qc_channel(target_povm)
        assert linalg.frob(channels.compose(prop, n).choi - target.choi) < 1e-6

    def test_ordering_violation(self):
        # the fully dephasing measure-and-prepare target cannot be reached
        # from a constant channel that forgot the input
        constant = channels.choi_from_kraus(
            [np.array([[1, 0], [0, 0]], dtype=complex),
             np.array([[0, 1], [0, 0]], dtype=complex)]
        )
        with pytest.raises(OrderingViolationError):
            ct.build_qc_propagator(constant, channels.basis_povm(2))


class TestTeleportPropagator:
    def test_matches_exact_route(self):
        for seed in (0, 1):
            m = random_divisible(2, 2, seed=seed)
            exact = find_step_propagator(m.channels[1], m.channels[2], route="exact")
            if exact.status != DIVISIBLE_STEP:
                continue
            prop = ct.build_teleport_propagator(m.channels[1], m.channels[2])
            assert linalg.frob(
                channels.compose(prop, m.channels[1]).choi - m.channels[2].choi
            ) < 1e-5

    def test_identity_target(self):
        n = channels.identity_channel(2)
        prop = ct.build_teleport_propagator(n, n)
        assert linalg.frob(prop.choi - n.choi) < 1e-5

    def test_ordering_violation_backflow(self):
        with pytest.raises(OrderingViolationError):
            ct.build_teleport_propagator(dephasing_channel(0.5), dephasing_channel(0.8))
