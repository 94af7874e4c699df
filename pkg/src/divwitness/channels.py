"""Quantum channels in Choi form: CPTP validation, composition, Kraus
interchange, classical embeddings and measure-and-prepare (qc) channels.

Convention used everywhere: the Choi matrix of a map N with input dimension
d_in and output dimension d_out is

    J(N) = sum_{ij} |i><j| (x) N(|i><j|)

i.e. the *input* factor comes first and the maximally entangled reference
vector is unnormalized.  J is PSD iff N is CP, and Tr_out J = I_in iff N is
trace preserving.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.linalg as npl

from . import linalg
from .errors import (
    DimensionMismatchError,
    InvalidChannelError,
    InvalidPovmError,
    InvalidStateError,
)

CP_RTOL = 1e-9
TP_RTOL = 1e-9
KRAUS_CUTOFF = 1e-10


# ---------------------------------------------------------------------------
# States and POVMs
# ---------------------------------------------------------------------------

def check_density(rho: np.ndarray, rtol: float = 1e-8, trace_tol: float = 1e-10) -> np.ndarray:
    """Validate a density matrix (PSD within tolerance, unit trace)."""
    rho = np.asarray(rho, dtype=complex)
    linalg.check_square(rho)
    if not linalg.is_hermitian(rho):
        raise InvalidStateError("state is not Hermitian within tolerance")
    if linalg.min_eigval(rho) < -linalg.rel_tol(rho, rtol):
        raise InvalidStateError(f"state has negative eigenvalue {linalg.min_eigval(rho):.3e}")
    if abs(np.trace(rho).real - 1.0) > trace_tol:
        raise InvalidStateError(f"state trace {np.trace(rho).real} != 1")
    return rho


def pure_state(vec: np.ndarray) -> np.ndarray:
    """Projector |v><v| / <v|v>."""
    v = np.asarray(vec, dtype=complex).ravel()
    return np.outer(v, v.conj()) / (v.conj() @ v).real


@dataclass(frozen=True)
class Povm:
    """Finite positive-operator valued measure on a `dim`-dimensional space."""

    dim: int
    elements: list = field(default_factory=list)

    def validate(self, rtol: float = 1e-9):
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for k, e in enumerate(self.elements):
            e = np.asarray(e, dtype=complex)
            if e.shape != (self.dim, self.dim):
                raise InvalidPovmError(f"element {k} has shape {e.shape}, expected ({self.dim},{self.dim})")
            if not linalg.is_hermitian(e):
                raise InvalidPovmError(f"element {k} not Hermitian")
            if linalg.min_eigval(e) < -linalg.rel_tol(e, rtol):
                raise InvalidPovmError(f"element {k} has negative eigenvalue {linalg.min_eigval(e):.3e}")
            total += e
        defect = linalg.frob(total - np.eye(self.dim))
        if defect > max(1e-9, rtol * self.dim):
            raise InvalidPovmError(f"elements sum to identity only within {defect:.3e}")
        return self


def basis_povm(dim: int) -> Povm:
    """Computational-basis projective measurement."""
    return Povm(dim, [np.diag(np.eye(dim)[i]).astype(complex) for i in range(dim)])


# ---------------------------------------------------------------------------
# Channels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuantumChannel:
    """A CPTP map stored as an (unnormalized, input-first) Choi matrix."""

    dim_in: int
    dim_out: int
    choi: np.ndarray

    def __post_init__(self):
        choi = np.asarray(self.choi, dtype=complex)
        n = self.dim_in * self.dim_out
        if choi.shape != (n, n):
            raise DimensionMismatchError(
                f"choi shape {choi.shape} inconsistent with dims ({self.dim_in},{self.dim_out})"
            )
        object.__setattr__(self, "choi", choi)

    @property
    def choi4(self) -> np.ndarray:
        """Choi reshaped to indices (i, k, j, l) = (in, out, in, out)."""
        di, do = self.dim_in, self.dim_out
        return self.choi.reshape(di, do, di, do)


@dataclass(frozen=True)
class CptpReport:
    cp_residual: float
    tp_residual: float
    verdict: bool


def identity_channel(dim: int) -> QuantumChannel:
    omega = maximally_entangled_unnormalized(dim)
    return QuantumChannel(dim, dim, omega)


def maximally_entangled_unnormalized(dim: int) -> np.ndarray:
    """Omega = sum_{ij} |ii><jj| (rank one, trace d)."""
    v = np.eye(dim).reshape(-1).astype(complex)
    return np.outer(v, v)


def choi_from_kraus(kraus: list[np.ndarray], dims: tuple[int, int] | None = None,
                    check: bool = True) -> QuantumChannel:
    """Build the Choi matrix of the channel with the given Kraus operators.

    Kraus operators are (d_out x d_in); completeness sum K†K = I is enforced
    when `check` is set.
    """
    ks = [np.asarray(k, dtype=complex) for k in kraus]
    if not ks:
        raise InvalidChannelError("empty Kraus list")
    do, di = ks[0].shape
    if dims is not None:
        di, do = dims
    comp = sum(k.conj().T @ k for k in ks)
    residual = linalg.frob(comp - np.eye(di))
    if check and residual > 1e-8 * max(1.0, di):
        raise InvalidChannelError(
            f"Kraus completeness violated (residual {residual:.3e})", tp_residual=residual
        )
    # one Kraus K contributes the rank-1 term v v† with v[(i,o)] = K[o,i]
    choi = np.zeros((di * do, di * do), dtype=complex)
    for k in ks:
        v = k.T.reshape(-1)
        choi += np.outer(v, v.conj())
    return QuantumChannel(di, do, choi)


def kraus_from_choi(n: QuantumChannel, cutoff: float = KRAUS_CUTOFF) -> list[np.ndarray]:
    """Extract a Kraus decomposition by eigen-decomposing the Choi matrix.

    Eigenvalues below `cutoff` (relative to the largest) are dropped, which
    fixes the Kraus rank.
    """
    w, v = linalg.eig_hermitian(n.choi)
    scale = max(abs(w[0]), abs(w[-1]), 1.0)
    ks = []
    for lam, vec in zip(w, v.T):
        if lam > cutoff * scale:
            ks.append(np.sqrt(lam) * vec.reshape(n.dim_in, n.dim_out).T)
    return ks


def apply(n: QuantumChannel, rho: np.ndarray) -> np.ndarray:
    """Evaluate N(rho) = Tr_in[(rho^T (x) I) J]."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (n.dim_in, n.dim_in):
        raise DimensionMismatchError(
            f"state dim {rho.shape} does not match channel input {n.dim_in}"
        )
    return np.einsum("ij,ikjl->kl", rho, n.choi4)


def adjoint_apply(n: QuantumChannel, op: np.ndarray) -> np.ndarray:
    """Heisenberg-picture action N†(P), defined by Tr[N(rho) P] = Tr[rho N†(P)]."""
    op = np.asarray(op, dtype=complex)
    if op.shape != (n.dim_out, n.dim_out):
        raise DimensionMismatchError("operator dim does not match channel output")
    t = transfer_matrix(n)
    return (t.conj().T @ op.reshape(-1)).reshape(n.dim_in, n.dim_in)


def transfer_matrix(n: QuantumChannel) -> np.ndarray:
    """Matrix T with vec(N(rho)) = T vec(rho), row-major vec."""
    di, do = n.dim_in, n.dim_out
    return n.choi4.transpose(1, 3, 0, 2).reshape(do * do, di * di)


def channel_from_transfer(t: np.ndarray, dim_in: int, dim_out: int) -> QuantumChannel:
    """Inverse of `transfer_matrix` (no CPTP validation)."""
    choi = (
        np.asarray(t, dtype=complex)
        .reshape(dim_out, dim_out, dim_in, dim_in)
        .transpose(2, 0, 3, 1)
        .reshape(dim_in * dim_out, dim_in * dim_out)
    )
    return QuantumChannel(dim_in, dim_out, choi)


def compose(later: QuantumChannel, earlier: QuantumChannel) -> QuantumChannel:
    """Choi matrix of later ∘ earlier."""
    if earlier.dim_out != later.dim_in:
        raise DimensionMismatchError(
            f"cannot compose: earlier output {earlier.dim_out} != later input {later.dim_in}"
        )
    t = transfer_matrix(later) @ transfer_matrix(earlier)
    return channel_from_transfer(t, earlier.dim_in, later.dim_out)


def tensor_with_identity(n: QuantumChannel, anc_dim: int) -> QuantumChannel:
    """Choi matrix of id_anc (x) N, ancilla factor first."""
    if anc_dim < 1:
        raise DimensionMismatchError("ancilla dimension must be >= 1")
    if anc_dim == 1:
        return n
    ks = kraus_from_choi(n)
    eye = np.eye(anc_dim)
    return choi_from_kraus([linalg.kron(eye, k) for k in ks], check=False)


def validate_cptp(n: QuantumChannel) -> CptpReport:
    """Report CP and TP residuals; verdict is True iff both are in tolerance."""
    w = npl.eigvalsh(linalg.hermitianize(n.choi))
    cp_residual = float(max(0.0, -w[0]))
    herm = linalg.herm_defect(n.choi)
    tp = linalg.partial_trace(n.choi, (n.dim_in, n.dim_out), keep=0)
    tp_residual = float(linalg.frob(tp - np.eye(n.dim_in)))
    scale = max(1.0, linalg.frob(n.choi))
    verdict = (
        cp_residual <= CP_RTOL * scale
        and tp_residual <= TP_RTOL * scale
        and herm <= linalg.rel_tol(n.choi, linalg.HERM_RTOL)
    )
    return CptpReport(cp_residual=cp_residual, tp_residual=tp_residual, verdict=verdict)


def require_cptp(n: QuantumChannel, rtol: float = 1e-7) -> QuantumChannel:
    rep = validate_cptp(n)
    scale = max(1.0, linalg.frob(n.choi))
    if rep.cp_residual > rtol * scale or rep.tp_residual > rtol * scale:
        raise InvalidChannelError(
            f"map is not CPTP (cp {rep.cp_residual:.3e}, tp {rep.tp_residual:.3e})",
            cp_residual=rep.cp_residual,
            tp_residual=rep.tp_residual,
        )
    return n


def qc_channel(povm: Povm) -> QuantumChannel:
    """Measure-and-prepare channel C(rho) = sum_i |i><i| Tr[rho P_i].

    The output lives in a fresh computational basis indexed by the POVM
    outcomes, so all outputs commute.
    """
    povm.validate()
    m = len(povm.elements)
    d = povm.dim
    choi = np.zeros((d * m, d * m), dtype=complex)
    for i, p in enumerate(povm.elements):
        e_ii = np.zeros((m, m), dtype=complex)
        e_ii[i, i] = 1.0
        choi += linalg.kron(np.asarray(p, dtype=complex).T, e_ii)
    return QuantumChannel(d, m, choi)


def linear_map_rank(n: QuantumChannel, rtol: float = 1e-9) -> tuple[int, bool]:
    """Rank of the channel as a linear map and the completeness flag.

    The channel is complete iff its image spans the whole output operator
    space, i.e. the transfer matrix has full row rank d_out^2.
    """
    t = transfer_matrix(n)
    rank = int(npl.matrix_rank(t, tol=rtol * max(1.0, npl.norm(t, 2))))
    return rank, rank == n.dim_out ** 2


def embed_stochastic(t: np.ndarray) -> QuantumChannel:
    """Quantum embedding of a column-stochastic matrix:
    rho -> sum_{r,s} t(r|s) <s|rho|s> |r><r|."""
    t = np.asarray(t, dtype=float)
    d = linalg.check_square(t)
    if np.any(t < -1e-12) or linalg.frob(t.sum(axis=0) - np.ones(d)) > 1e-10:
        raise InvalidChannelError("matrix is not column-stochastic")
    choi = np.zeros((d * d, d * d), dtype=complex)
    for s in range(d):
        e_ss = np.zeros((d, d), dtype=complex)
        e_ss[s, s] = 1.0
        choi += linalg.kron(e_ss, np.diag(t[:, s]).astype(complex))
    return QuantumChannel(d, d, choi)


def is_identity(n: QuantumChannel, rtol: float = 1e-9) -> bool:
    if n.dim_in != n.dim_out:
        return False
    ref = maximally_entangled_unnormalized(n.dim_in)
    return linalg.frob(n.choi - ref) <= rtol * max(1.0, linalg.frob(ref))
