"""Generators of dynamical mappings: collision models, canonical analytic
families (dephasing, amplitude damping, depolarizing), classical chains, and
seeded random divisible instances for property testing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channels, linalg
from .channels import QuantumChannel
from .discrimination import haar_unitary
from .divisibility import DynamicalMapping, check_stochastic
from .errors import DimensionMismatchError, InvalidChannelError

PAULI_Z = np.diag([1.0, -1.0]).astype(complex)


# ---------------------------------------------------------------------------
# Canonical analytic families
# ---------------------------------------------------------------------------

def dephasing_channel(gamma: float) -> QuantumChannel:
    """Qubit channel scaling off-diagonals by `gamma`."""
    if not -1.0 <= gamma <= 1.0:
        raise InvalidChannelError(f"dephasing factor {gamma} outside [-1, 1]")
    k0 = np.sqrt((1.0 + gamma) / 2.0) * np.eye(2, dtype=complex)
    k1 = np.sqrt((1.0 - gamma) / 2.0) * PAULI_Z
    return channels.choi_from_kraus([k0, k1])


def dephasing_family(gammas) -> DynamicalMapping:
    gammas = list(gammas)
    if not gammas or gammas[0] != 1:
        raise InvalidChannelError("family must start with factor 1 (identity)")
    return DynamicalMapping(2, [dephasing_channel(g) for g in gammas])


def amplitude_damping_channel(eta: float) -> QuantumChannel:
    """Qubit amplitude damping with excited-state survival probability `eta`."""
    if not 0.0 <= eta <= 1.0:
        raise InvalidChannelError(f"survival probability {eta} outside [0, 1]")
    k0 = np.diag([1.0, np.sqrt(eta)]).astype(complex)
    k1 = np.zeros((2, 2), dtype=complex)
    k1[0, 1] = np.sqrt(1.0 - eta)
    return channels.choi_from_kraus([k0, k1])


def amplitude_damping_family(etas) -> DynamicalMapping:
    etas = list(etas)
    if not etas or etas[0] != 1:
        raise InvalidChannelError("family must start with survival 1 (identity)")
    return DynamicalMapping(2, [amplitude_damping_channel(e) for e in etas])


def depolarizing_channel(eps: float, dim: int = 2) -> QuantumChannel:
    """rho -> eps * rho + (1 - eps) * I/d."""
    if not 0.0 <= eps <= 1.0:
        raise InvalidChannelError(f"depolarizing parameter {eps} outside [0, 1]")
    ident = channels.identity_channel(dim).choi
    # the constant-output map has Choi I_in (x) I_out / d
    constant = np.eye(dim * dim, dtype=complex) / dim
    return QuantumChannel(dim, dim, eps * ident + (1.0 - eps) * constant)


def unitary_channel(u: np.ndarray) -> QuantumChannel:
    return channels.choi_from_kraus([np.asarray(u, dtype=complex)])


def unitary_family(unitaries) -> DynamicalMapping:
    us = [np.asarray(u, dtype=complex) for u in unitaries]
    d = us[0].shape[0]
    return DynamicalMapping(d, [unitary_channel(u) for u in us])


# ---------------------------------------------------------------------------
# Classical chains
# ---------------------------------------------------------------------------

def bsc_matrix(flip: float) -> np.ndarray:
    """Binary symmetric channel transition matrix (column-stochastic)."""
    if not 0.0 <= flip <= 1.0:
        raise DimensionMismatchError(f"flip probability {flip} outside [0, 1]")
    return np.array([[1.0 - flip, flip], [flip, 1.0 - flip]])


def classical_chain(flips, kind: str = "bsc"):
    """Cumulative BSC transition matrices P_i and their quantum embedding.

    `flips[i]` is the total flip probability from time 0 to time i;
    flips[0] must be 0 so that P_0 is the identity.
    """
    if kind != "bsc":
        raise DimensionMismatchError(f"unknown chain kind {kind!r}")
    flips = list(flips)
    if not flips or flips[0] != 0:
        raise DimensionMismatchError("chain must start with flip probability 0")
    mats = [check_stochastic(bsc_matrix(f)) for f in flips]
    # the time-0 entry is the true quantum identity (the system is quantum at
    # the initial time); later entries are the classical embeddings
    embedded = [channels.identity_channel(2)] + [channels.embed_stochastic(m) for m in mats[1:]]
    mapping = DynamicalMapping(2, embedded)
    return mats, mapping


# ---------------------------------------------------------------------------
# Collision models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CollisionModel:
    """Sequential unitary interactions between the system and environment
    units, all drawn in the fixed unit state `env_state`."""

    system_dim: int
    env_unit_dim: int
    env_state: np.ndarray
    interactions: list

    def __post_init__(self):
        channels.check_density(self.env_state)
        joint = self.system_dim * self.env_unit_dim
        for k, u in enumerate(self.interactions):
            u = np.asarray(u, dtype=complex)
            if u.shape != (joint, joint):
                raise DimensionMismatchError(f"interaction {k} is not a joint unitary")
            if linalg.frob(u.conj().T @ u - np.eye(joint)) > 1e-10 * joint:
                raise InvalidChannelError(f"interaction {k} is not unitary within tolerance")


def _stinespring_channel(u: np.ndarray, sigma: np.ndarray, d_sys: int, d_env: int) -> QuantumChannel:
    """Channel rho -> Tr_env[U (rho (x) sigma) U†] as a Choi matrix."""
    w, v = linalg.eig_hermitian(np.asarray(sigma, dtype=complex))
    kraus = []
    for lam, vec in zip(w, v.T):
        if lam <= 1e-14:
            continue
        inject = linalg.kron(np.eye(d_sys, dtype=complex), np.sqrt(lam) * vec.reshape(d_env, 1))
        lifted = u @ inject  # (d_sys*d_env, d_sys)
        for e in range(d_env):
            bra = linalg.kron(np.eye(d_sys, dtype=complex), np.eye(d_env)[e].reshape(1, d_env))
            kraus.append(bra @ lifted)
    return channels.choi_from_kraus(kraus, dims=(d_sys, d_sys), check=False)


def collision_mapping(m: CollisionModel, steps: int, memory: bool = False) -> DynamicalMapping:
    """Dynamical mapping generated by `steps` collisions.

    Fresh-unit mode applies each interaction to a new environment unit, so
    the mapping is divisible by construction.  Memory mode keeps a single
    persistent unit: N^i traces the accumulated joint unitary over it, and
    divisibility is no longer guaranteed.
    """
    if steps < 1:
        raise DimensionMismatchError("need at least one collision step")
    if len(m.interactions) < steps:
        raise DimensionMismatchError("not enough interaction unitaries for the requested steps")
    d, de = m.system_dim, m.env_unit_dim
    seq = [channels.identity_channel(d)]
    if memory:
        acc = np.eye(d * de, dtype=complex)
        for i in range(steps):
            acc = m.interactions[i] @ acc
            seq.append(_stinespring_channel(acc, m.env_state, d, de))
    else:
        current = channels.identity_channel(d)
        for i in range(steps):
            step = _stinespring_channel(m.interactions[i], m.env_state, d, de)
            current = channels.compose(step, current)
            seq.append(current)
    return DynamicalMapping(d, seq)


def partial_swap_unitary(d: int, angle: float) -> np.ndarray:
    """exp(-i * angle * SWAP) on two d-dimensional factors."""
    swap = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            swap[i * d + j, j * d + i] = 1.0
    # SWAP is an involution: exp(-i a S) = cos(a) I - i sin(a) S
    return np.cos(angle) * np.eye(d * d) - 1j * np.sin(angle) * swap


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------

def random_cptp_channel(d: int, rng: np.random.Generator,
                        kraus_rank: int | None = None) -> QuantumChannel:
    """Random CPTP channel via a Haar isometry truncation; the Kraus rank is
    drawn uniformly in {1, ..., d^2} unless specified (rank 1 gives a random
    unitary channel)."""
    r = kraus_rank or int(rng.integers(1, d * d + 1))
    if r == 1:
        return unitary_channel(haar_unitary(d, rng))
    g = rng.standard_normal((d * r, d)) + 1j * rng.standard_normal((d * r, d))
    q, _ = np.linalg.qr(g)  # isometry: columns orthonormal, q† q = I_d
    kraus = [q[k * d : (k + 1) * d, :] for k in range(r)]
    return channels.choi_from_kraus(kraus)


def random_divisible(system_dim: int, steps: int, seed: int = 0) -> DynamicalMapping:
    """Divisible-by-construction mapping: cumulative composition of random
    CPTP step channels; byte-reproducible for a fixed seed."""
    if system_dim not in (2, 3):
        raise DimensionMismatchError("random instances support dimensions 2 and 3")
    if steps < 0 or steps > 8:
        raise DimensionMismatchError("step count must be between 0 and 8")
    rng = np.random.default_rng(seed)
    seq = [channels.identity_channel(system_dim)]
    for _ in range(steps):
        step = random_cptp_channel(system_dim, rng)
        seq.append(channels.compose(step, seq[-1]))
    return DynamicalMapping(system_dim, seq)


def random_povm(d: int, m: int, rng: np.random.Generator) -> channels.Povm:
    """Random POVM with m outcomes (whitened random PSD operators)."""
    gs = []
    for _ in range(m):
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        gs.append(g @ g.conj().T)
    s = sum(gs)
    w, v = np.linalg.eigh(s)
    s_isqrt = (v / np.sqrt(np.maximum(w, 1e-14))) @ v.conj().T
    return channels.Povm(d, [linalg.hermitianize(s_isqrt @ g @ s_isqrt) for g in gs])
