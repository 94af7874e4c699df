"""Guessing probabilities, ensembles, information-decreasing checks and a
randomized falsifier for the "more informative" channel ordering."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import channels, linalg, sdp
from .channels import QuantumChannel
from .errors import (
    DimensionMismatchError,
    InvalidEnsembleError,
    NumericalFailureError,
)


@dataclass(frozen=True)
class Ensemble:
    """Finite list of (probability, density matrix) pairs on a common space."""

    probs: np.ndarray
    states: list

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or len(probs) != len(self.states) or len(self.states) == 0:
            raise InvalidEnsembleError("need one probability per state")
        if np.any(probs <= 0) or abs(probs.sum() - 1.0) > 1e-10:
            raise InvalidEnsembleError("probabilities must be in (0,1] and sum to 1")
        states = [channels.check_density(s) for s in self.states]
        dims = {s.shape[0] for s in states}
        if len(dims) != 1:
            raise InvalidEnsembleError(f"mixed state dimensions {dims}")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]

    def evolve(self, n: QuantumChannel) -> "Ensemble":
        return Ensemble(self.probs, [channels.apply(n, s) for s in self.states])


@dataclass(frozen=True)
class GuessingTrace:
    """Guessing probabilities of one ensemble along a dynamical mapping."""

    values: list
    ensemble: Ensemble
    extended: bool


@dataclass(frozen=True)
class OrderingVerdict:
    status: str  # "holds" | "violated" | "undecided"
    witness: Ensemble | None = None
    gap: float = 0.0
    trials_run: int = 0


def helstrom(p: float, rho0: np.ndarray, rho1: np.ndarray) -> float:
    """Two-state guessing probability 1/2 + 1/2 ||p rho0 - (1-p) rho1||_1."""
    if not 0.0 <= p <= 1.0:
        raise InvalidEnsembleError(f"prior {p} outside [0,1]")
    rho0 = np.asarray(rho0, dtype=complex)
    rho1 = np.asarray(rho1, dtype=complex)
    if rho0.shape != rho1.shape:
        raise DimensionMismatchError("states must share a dimension")
    return 0.5 + 0.5 * linalg.trace_norm(p * rho0 - (1.0 - p) * rho1)


def pguess(e: Ensemble, tol: float = sdp.DEFAULT_TOL) -> float:
    """Optimal guessing probability via the minimum-trace domination SDP."""
    result = sdp.solve_min_trace_dominating(
        list(zip(e.probs, e.states)), tol=tol
    )
    if result.status != sdp.OPTIMAL:
        raise NumericalFailureError(
            "guessing-probability SDP undecided", diagnostics=result.diagnostics
        )
    value = float(np.trace(result.solution).real)
    return min(1.0, max(value, float(e.probs.max())))


def _step_channels(mapping, extended: bool):
    if extended:
        d = mapping.system_dim
        return [channels.tensor_with_identity(n, d) for n in mapping.channels]
    return list(mapping.channels)


def guessing_trace(mapping, e: Ensemble, extended: bool = False,
                   tol: float = sdp.DEFAULT_TOL) -> GuessingTrace:
    """Guessing probability of the (optionally ancilla-extended) ensemble at
    every time index of the mapping.

    In extended mode the ancilla is a copy of the system, so the ensemble
    must live on a space of dimension system_dim**2.
    """
    d = mapping.system_dim
    expected = d * d if extended else d
    if e.dim != expected:
        raise DimensionMismatchError(
            f"ensemble dimension {e.dim} != expected {expected} "
            f"({'extended' if extended else 'unextended'} mode with system dim {d})"
        )
    values = [pguess(e.evolve(n), tol=tol) for n in _step_channels(mapping, extended)]
    return GuessingTrace(values=values, ensemble=e, extended=extended)


# ---------------------------------------------------------------------------
# Random ensembles and the ordering falsifier
# ---------------------------------------------------------------------------

def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return channels.pure_state(v)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = rank or d
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return linalg.hermitianize(rho / np.trace(rho).real)


def random_ensemble(d: int, rng: np.random.Generator, size: int | None = None) -> Ensemble:
    """Sizes 2-4, Haar-random pure states mixed with full-rank states,
    Dirichlet-uniform priors."""
    size = size or int(rng.integers(2, 5))
    probs = rng.dirichlet(np.ones(size))
    probs = probs / probs.sum()
    states = [
        random_pure(d, rng) if rng.random() < 0.5 else random_density(d, rng)
        for _ in range(size)
    ]
    return Ensemble(probs, states)


def uniform_average_ensemble(d: int, rng: np.random.Generator) -> Ensemble:
    """Ensemble whose average state is the maximally mixed state I/d.

    Built from a random POVM {A_x} via p(x) = Tr[A_x]/d, rho_x = A_x^T/Tr[A_x].
    """
    m = int(rng.integers(2, 5))
    gs = [random_density(d, rng) * rng.random() for _ in range(m)]
    s = sum(gs)
    w, v = np.linalg.eigh(s)
    s_isqrt = (v / np.sqrt(np.maximum(w, 1e-12))) @ v.conj().T
    elements = [linalg.hermitianize(s_isqrt @ g @ s_isqrt) for g in gs]
    probs = np.array([np.trace(a).real / d for a in elements])
    states = [linalg.hermitianize(a.T / np.trace(a).real) for a in elements]
    return Ensemble(probs / probs.sum(), states)


def is_more_informative(n: QuantumChannel, nprime: QuantumChannel,
                        trials: int = 50, seed: int = 0,
                        gap_tol: float = 1e-6) -> OrderingVerdict:
    """Randomized falsifier for "n is more informative than nprime".

    Samples ensembles (roughly half with maximally mixed average) and checks
    that the guessing probability after `n` dominates the one after `nprime`.
    `holds` is a sampling verdict only; `violated` comes with the concrete
    counterexample ensemble.
    """
    if n.dim_in != nprime.dim_in:
        raise DimensionMismatchError("channels must share an input dimension")
    rng = np.random.default_rng(seed)
    for t in range(trials):
        if t % 2 == 0:
            e = uniform_average_ensemble(n.dim_in, rng)
        else:
            e = random_ensemble(n.dim_in, rng)
        try:
            gap = pguess(e.evolve(nprime)) - pguess(e.evolve(n))
        except NumericalFailureError:
            return OrderingVerdict("undecided", trials_run=t + 1)
        if gap > gap_tol:
            return OrderingVerdict("violated", witness=e, gap=float(gap), trials_run=t + 1)
    return OrderingVerdict("holds", trials_run=trials)
