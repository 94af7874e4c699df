"""Constructive propagator builders.

Two ways of producing a propagator C with nprime = C ∘ n, given that n is
(completely) more informative than nprime:

* semiclassical route: when nprime has commuting outputs it is a
  measure-and-prepare channel; simulating its basis measurement through n
  yields a POVM whose qc channel is exactly C.
* teleportation route: in the general case, a POVM on the joint
  (reference (x) n-output) space is found by semidefinite feasibility such
  that Bell measurement + Weyl correction against a maximally entangled
  resource reproduces nprime; the assembled map is C.

Both constructions raise `OrderingViolationError` when the required
feasibility fails, which certifies that the step is not information
decreasing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channels, linalg, sdp
from .channels import Povm, QuantumChannel
from .errors import (
    DimensionMismatchError,
    InvalidChannelError,
    NumericalFailureError,
    OrderingViolationError,
)

SIM_TOL = 1e-7
RECOMPOSE_TOL = 1e-6


@dataclass(frozen=True)
class PovmSimulation:
    """POVM on the output of `n` reproducing the statistics of `target_povm`
    measured on the output of `nprime`, for every input state."""

    target_povm: Povm
    simulating_povm: Povm
    residual: float


@dataclass(frozen=True)
class TeleportKit:
    """Generalized-teleportation toolbox in dimension d: Weyl correction
    unitaries, the Bell POVM they generate, and the maximally entangled
    resource state."""

    dim: int
    bell_povm: Povm
    correction_unitaries: list
    max_ent_state: np.ndarray


def hermitian_basis(d: int) -> list[np.ndarray]:
    """d^2 Hermitian matrices spanning the operator space."""
    basis = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[i, j] = s[j, i] = 1.0
            basis.append(s)
            a = np.zeros((d, d), dtype=complex)
            a[i, j] = -1j
            a[j, i] = 1j
            basis.append(a)
    return basis


def _block_embed(op: np.ndarray, block: int, count: int) -> np.ndarray:
    """Place `op` in diagonal block `block` of a count-block matrix."""
    d = op.shape[0]
    out = np.zeros((count * d, count * d), dtype=complex)
    out[block * d : (block + 1) * d, block * d : (block + 1) * d] = op
    return out


def _joint_povm_feasibility(dim: int, count: int, equality_rows,
                            tol: float) -> list[np.ndarray] | None:
    """Solve for POVM elements {P^y} (y < count, each dim x dim) subject to
    `equality_rows`: iterable of (y, coefficient operator A, rhs) meaning
    Tr[A P^y] = rhs, plus completeness sum_y P^y = I.

    Uses one block-diagonal PSD variable; off-diagonal blocks are slack.
    Returns the elements, or None when infeasible; raises on undecided.
    """
    prob = sdp.AffinePsdProblem(variable_dim=count * dim)
    for y, a, rhs in equality_rows:
        prob.add(_block_embed(a, y, count), rhs)
    for g in hermitian_basis(dim):
        full = sum(_block_embed(g, y, count) for y in range(count))
        prob.add(full, float(np.trace(g).real))
    res = sdp.solve_feasibility(prob, tol=tol)
    if res.status == sdp.INFEASIBLE:
        return None
    if res.status != sdp.FEASIBLE:
        raise NumericalFailureError(
            "POVM feasibility undecided", diagnostics=res.diagnostics
        )
    x = res.solution
    elements = [
        linalg.psd_project(linalg.hermitianize(x[y * dim : (y + 1) * dim, y * dim : (y + 1) * dim]))
        for y in range(count)
    ]
    # repair the tiny completeness defect left by the solver
    s = sum(elements)
    w, v = np.linalg.eigh(s)
    s_isqrt = (v / np.sqrt(np.maximum(w, 1e-14))) @ v.conj().T
    return [linalg.hermitianize(s_isqrt @ e @ s_isqrt) for e in elements]


# ---------------------------------------------------------------------------
# POVM simulation (statistical ordering, condition 3)
# ---------------------------------------------------------------------------

def simulate_povm(n: QuantumChannel, nprime: QuantumChannel, q: Povm,
                  tol: float = SIM_TOL) -> PovmSimulation | None:
    """Find a POVM {P^y} on the output of `n` with
    Tr[nprime(rho) Q^y] = Tr[n(rho) P^y] for every input state and outcome.

    Imposed through the adjoint identity n†(P^y) = nprime†(Q^y) on a
    Hermitian operator basis.  Returns None when infeasible, which falsifies
    "n is more informative than nprime".
    """
    if n.dim_in != nprime.dim_in:
        raise DimensionMismatchError("channels must share the input space")
    q.validate()
    if q.dim != nprime.dim_out:
        raise DimensionMismatchError("POVM must act on the output of nprime")
    count = len(q.elements)
    basis = hermitian_basis(n.dim_in)
    rows = []
    for y, qy in enumerate(q.elements):
        target = channels.adjoint_apply(nprime, np.asarray(qy, dtype=complex))
        for h in basis:
            rows.append((y, channels.apply(n, h), float(np.trace(h @ target).real)))
    elements = _joint_povm_feasibility(n.dim_out, count, rows, tol)
    if elements is None:
        return None
    povm = Povm(n.dim_out, elements)
    residual = max(
        linalg.frob(channels.adjoint_apply(n, p) - channels.adjoint_apply(nprime, np.asarray(qy)))
        for p, qy in zip(elements, q.elements)
    )
    return PovmSimulation(target_povm=q, simulating_povm=povm, residual=float(residual))


# ---------------------------------------------------------------------------
# Semiclassical (qc) propagator
# ---------------------------------------------------------------------------

def build_qc_propagator(n: QuantumChannel, nprime_povm: Povm,
                        tol: float = SIM_TOL) -> QuantumChannel:
    """Propagator C with qc(nprime_povm) = C ∘ n, built by simulating the
    output-basis measurement of the measure-and-prepare channel through n.

    Raises `OrderingViolationError` when the simulation is infeasible.
    """
    nprime = channels.qc_channel(nprime_povm)
    q = channels.basis_povm(nprime.dim_out)
    sim = simulate_povm(n, nprime, q, tol=tol)
    if sim is None:
        raise OrderingViolationError(
            "channel is not more informative than the measure-and-prepare target"
        )
    prop = channels.qc_channel(sim.simulating_povm)
    residual = linalg.frob(channels.compose(prop, n).choi - nprime.choi)
    if residual > RECOMPOSE_TOL:
        raise NumericalFailureError(
            f"qc propagator recomposition residual {residual:.3e} exceeds tolerance"
        )
    return prop


# ---------------------------------------------------------------------------
# Teleportation propagator
# ---------------------------------------------------------------------------

def weyl_unitaries(d: int) -> list[np.ndarray]:
    """d^2 unitaries U_(a,b) = sum_k w^{bk} |k+a><k| (indices mod d)."""
    omega = np.exp(2j * np.pi / d)
    out = []
    for a in range(d):
        for b in range(d):
            u = np.zeros((d, d), dtype=complex)
            for k in range(d):
                u[(k + a) % d, k] = omega ** (b * k)
            out.append(u)
    return out


def make_teleport_kit(d: int) -> TeleportKit:
    """Bell POVM {(I (x) U_y) |Phi+><Phi+| (I (x) U_y)†} with Weyl
    corrections; for d = 2 these are the four Bell projectors with
    corrections {I, X, Z, XZ}."""
    if d < 2:
        raise DimensionMismatchError("teleportation needs dimension >= 2")
    us = weyl_unitaries(d)
    phi = np.eye(d).reshape(-1).astype(complex) / np.sqrt(d)
    eye = np.eye(d, dtype=complex)
    elements = []
    for u in us:
        v = linalg.kron(eye, u) @ phi
        elements.append(np.outer(v, v.conj()))
    povm = Povm(d * d, elements).validate()
    return TeleportKit(
        dim=d,
        bell_povm=povm,
        correction_unitaries=us,
        max_ent_state=np.outer(phi, phi.conj()),
    )


def teleport(kit: TeleportKit, rho: np.ndarray) -> np.ndarray:
    """Run the teleportation identity: Bell-measure the (resource, input)
    pair and apply the matching Weyl correction.  Returns the input state."""
    d = kit.dim
    out = np.zeros((d, d), dtype=complex)
    resource = kit.max_ent_state  # on B''' (x) B''
    for u, q in zip(kit.correction_unitaries, kit.bell_povm.elements):
        joint = linalg.kron(resource, np.asarray(rho, dtype=complex))
        meas = linalg.kron(np.eye(d, dtype=complex), np.asarray(q))
        post = linalg.partial_trace(joint @ meas, (d, d * d), keep=0)
        out += u @ post @ u.conj().T
    return out


def _teleport_branch(kit: TeleportKit, op_b: np.ndarray, povm_el: np.ndarray) -> np.ndarray:
    """Tr_{B''B}[(Phi+ (x) op) (I (x) P)] on the correction space."""
    d = kit.dim
    db = op_b.shape[0]
    joint = linalg.kron(kit.max_ent_state, np.asarray(op_b, dtype=complex))
    meas = linalg.kron(np.eye(d, dtype=complex), np.asarray(povm_el))
    return linalg.partial_trace(joint @ meas, (d, d * db), keep=0)


def build_teleport_propagator(n: QuantumChannel, nprime: QuantumChannel,
                              tol: float = SIM_TOL) -> QuantumChannel:
    """Propagator C with nprime = C ∘ n for a fully quantum target.

    Solves for a POVM {P^y} on the (reference (x) n-output) space such that
    each teleportation branch of nprime through the Bell measurement is
    matched by the corresponding branch of n through {P^y}; the matched
    branches assemble into C.  The operator-valued matching condition is
    imposed on a Hermitian basis of inputs, which spans the input space.

    Raises `OrderingViolationError` when the feasibility fails (the step is
    not completely information decreasing) and `InvalidChannelError` when the
    assembled map unexpectedly fails CPTP validation.
    """
    if n.dim_in != nprime.dim_in:
        raise DimensionMismatchError("channels must share the input space")
    d = nprime.dim_out
    db = n.dim_out
    kit = make_teleport_kit(d)
    basis_in = hermitian_basis(n.dim_in)
    basis_ref = hermitian_basis(d)
    count = d * d

    # For the Bell POVM the branch of nprime has the closed form
    # U_y† nprime(rho) U_y / d^2, so the matching condition per outcome is
    #   Tr_{B''B}[(Phi+ (x) n(rho)) (I (x) P^y)] = U_y† nprime(rho) U_y / d^2.
    rows = []
    for h in basis_in:
        nh = channels.apply(n, h)
        nph = channels.apply(nprime, h)
        for y, u in enumerate(kit.correction_unitaries):
            lhs_target = u.conj().T @ nph @ u / (d * d)
            for g in basis_ref:
                coeff = linalg.kron(np.asarray(g).T / d, nh)
                rows.append((y, linalg.hermitianize(coeff),
                             float(np.trace(g @ lhs_target).real)))
    elements = _joint_povm_feasibility(d * db, count, rows, tol)
    if elements is None:
        raise OrderingViolationError(
            "no teleportation POVM exists: the step is not completely information decreasing"
        )

    def c_map(op):
        out = np.zeros((d, d), dtype=complex)
        for u, p in zip(kit.correction_unitaries, elements):
            out += u @ _teleport_branch(kit, op, p) @ u.conj().T
        return out

    basis_units = []
    for i in range(db):
        for j in range(db):
            e = np.zeros((db, db), dtype=complex)
            e[i, j] = 1.0
            basis_units.append(c_map(e))
    choi = np.zeros((db * d, db * d), dtype=complex)
    for idx, img in enumerate(basis_units):
        i, j = divmod(idx, db)
        e_ij = np.zeros((db, db), dtype=complex)
        e_ij[i, j] = 1.0
        choi += linalg.kron(e_ij, img)
    prop = QuantumChannel(db, d, linalg.hermitianize(choi))
    rep = channels.validate_cptp(prop)
    scale = max(1.0, linalg.frob(prop.choi))
    if rep.cp_residual > 100 * tol * scale or rep.tp_residual > 100 * tol * scale:
        raise InvalidChannelError(
            "assembled teleportation propagator failed CPTP validation",
            cp_residual=rep.cp_residual, tp_residual=rep.tp_residual,
        )
    residual = linalg.frob(channels.compose(prop, n).choi - nprime.choi)
    if residual > RECOMPOSE_TOL:
        raise NumericalFailureError(
            f"teleportation propagator recomposition residual {residual:.3e}"
        )
    return prop
