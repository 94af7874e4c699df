import numpy as np
import pytest

from divwitness import channels, discrimination as disc
from divwitness.channels import QuantumChannel
from divwitness.discrimination import Ensemble
from divwitness.errors import DimensionMismatchError, InvalidEnsembleError
from divwitness.families import (
    dephasing_channel,
    dephasing_family,
    depolarizing_channel,
    random_cptp_channel,
)

P0 = np.diag([1.0, 0.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)
PLUS = np.full((2, 2), 0.5, dtype=complex)


class TestEnsemble:
    def test_valid(self):
        e = Ensemble(np.array([0.5, 0.5]), [P0, P1])
        assert e.dim == 2

    def test_rejects_bad_probs(self):
        with pytest.raises(InvalidEnsembleError):
            Ensemble(np.array([0.6, 0.5]), [P0, P1])
        with pytest.raises(InvalidEnsembleError):
            Ensemble(np.array([1.0, 0.0]), [P0, P1])

    def test_rejects_non_state(self):
        with pytest.raises(Exception):
            Ensemble(np.array([0.5, 0.5]), [P0, 2 * P1])

    def test_evolve(self):
        e = Ensemble(np.array([0.5, 0.5]), [P0, PLUS])
        out = e.evolve(dephasing_channel(0.0))
        assert np.allclose(out.states[1], np.eye(2) / 2)


class TestHelstrom:
    def test_orthogonal(self):
        assert disc.helstrom(0.5, P0, P1) == pytest.approx(1.0)

    def test_identical(self):
        assert disc.helstrom(0.5, P0, P0) == pytest.approx(0.5)

    def test_zero_plus(self):
        assert disc.helstrom(0.5, P0, PLUS) == pytest.approx(0.8535534, abs=1e-7)

    def test_biased_prior(self):
        # with prior 0.9 the trivial guess already wins 0.9
        assert disc.helstrom(0.9, P0, P0) == pytest.approx(0.9)

    def test_matches_sdp(self, rng):
        for _ in range(20):
            p = rng.random()
            r0 = disc.random_density(3, rng)
            r1 = disc.random_density(3, rng)
            h = disc.helstrom(p, r0, r1)
            g = disc.pguess(Ensemble(np.array([p, 1 - p]), [r0, r1])) if 0 < p < 1 else h
            assert abs(h - g) < 1e-5


class TestPguess:
    def test_trivial_single(self):
        assert disc.pguess(Ensemble(np.array([1.0]), [P0])) == pytest.approx(1.0)

    def test_lower_bound_best_prior(self, rng):
        for _ in range(10):
            e = disc.random_ensemble(2, rng)
            assert disc.pguess(e) >= float(e.probs.max()) - 1e-9

    def test_unitary_invariance(self, rng):
        e = disc.random_ensemble(3, rng)
        u = disc.haar_unitary(3, rng)
        rotated = Ensemble(e.probs, [u @ s @ u.conj().T for s in e.states])
        assert abs(disc.pguess(e) - disc.pguess(rotated)) < 1e-6

    def test_commuting_classical_value(self, rng):
        # for simultaneously diagonal states the value is sum_i max_x p_x d_x(i)
        probs = rng.dirichlet(np.ones(3))
        diags = [rng.dirichlet(np.ones(4)) for _ in range(3)]
        e = Ensemble(probs, [np.diag(d).astype(complex) for d in diags])
        expected = sum(
            max(p * d[i] for p, d in zip(probs, diags)) for i in range(4)
        )
        assert disc.pguess(e) == pytest.approx(expected, abs=1e-6)

    def test_data_processing(self, rng):
        # a channel never increases the guessing probability
        for _ in range(5):
            e = disc.random_ensemble(2, rng)
            n = random_cptp_channel(2, rng)
            assert disc.pguess(e.evolve(n)) <= disc.pguess(e) + 1e-6


class TestGuessingTrace:
    def test_extended_dephasing_example(self):
        mapping = dephasing_family([1.0, 0.5, 0.8])
        phi_p = channels.pure_state(np.array([1, 0, 0, 1]) / np.sqrt(2))
        phi_m = channels.pure_state(np.array([1, 0, 0, -1]) / np.sqrt(2))
        e = Ensemble(np.array([0.5, 0.5]), [phi_p, phi_m])
        trace = disc.guessing_trace(mapping, e, extended=True)
        assert np.allclose(trace.values, [1.0, 0.75, 0.9], atol=1e-6)
        assert trace.extended

    def test_unextended_dim_check(self):
        mapping = dephasing_family([1.0, 0.5])
        e = Ensemble(np.array([0.5, 0.5]), [P0, P1])
        trace = disc.guessing_trace(mapping, e, extended=False)
        # basis states survive dephasing untouched
        assert np.allclose(trace.values, [1.0, 1.0], atol=1e-6)
        with pytest.raises(DimensionMismatchError):
            disc.guessing_trace(mapping, e, extended=True)

    def test_monotone_on_divisible(self, rng):
        from divwitness.families import random_divisible

        mapping = random_divisible(2, 3, seed=7)
        for _ in range(3):
            e = disc.random_ensemble(4, rng)
            vals = disc.guessing_trace(mapping, e, extended=True).values
            for a, b in zip(vals, vals[1:]):
                assert b <= a + 1e-6


class TestRandomSources:
    def test_haar_unitary(self, rng):
        u = disc.haar_unitary(4, rng)
        assert np.allclose(u.conj().T @ u, np.eye(4), atol=1e-10)

    def test_random_density(self, rng):
        rho = disc.random_density(3, rng)
        assert np.trace(rho).real == pytest.approx(1.0)
        assert np.linalg.eigvalsh(rho)[0] >= -1e-12

    def test_uniform_average(self, rng):
        for _ in range(5):
            e = disc.uniform_average_ensemble(3, rng)
            avg = sum(p * s for p, s in zip(e.probs, e.states))
            assert np.allclose(avg, np.eye(3) / 3, atol=1e-8)


class TestIsMoreInformative:
    def test_holds_for_composition(self, rng):
        n = dephasing_channel(0.5)
        worse = channels.compose(dephasing_channel(0.6), n)
        verdict = disc.is_more_informative(n, worse, trials=20, seed=5)
        assert verdict.status == "holds"

    def test_violated_for_backflow(self):
        mapping = dephasing_family([1.0, 0.5, 0.8])
        # compare the extended channels, where the increase is visible
        n1 = channels.tensor_with_identity(mapping.channels[1], 2)
        n2 = channels.tensor_with_identity(mapping.channels[2], 2)
        verdict = disc.is_more_informative(n1, n2, trials=50, seed=3)
        assert verdict.status == "violated"
        assert verdict.gap > 1e-4
        assert verdict.witness is not None
        # the returned ensemble is a concrete counterexample
        gap = disc.pguess(verdict.witness.evolve(n2)) - disc.pguess(verdict.witness.evolve(n1))
        assert gap > 1e-6

    def test_identity_dominates_everything(self, rng):
        n = random_cptp_channel(2, rng)
        verdict = disc.is_more_informative(channels.identity_channel(2), n, trials=10, seed=1)
        assert verdict.status == "holds"

    def test_dimension_check(self):
        with pytest.raises(DimensionMismatchError):
            disc.is_more_informative(channels.identity_channel(2), channels.identity_channel(3))
