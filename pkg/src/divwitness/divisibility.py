"""Step-propagator existence for discrete-time dynamical mappings, classical
LP divisibility, reversibility, and information-backflow witness search.

A mapping (N^0 = id, N^1, ..., N^T) is divisible iff every step admits a
CPTP propagator C with N^{i+1} = C ∘ N^i.  Two routes decide a step:

* route A (exact): when the transfer matrix of N^i is invertible, the linear
  candidate C = N^{i+1} ∘ (N^i)^{-1} is unique; its Choi negativity and TP
  residual decide the step.
* route B (general): semidefinite feasibility over Choi(C) with the TP
  constraint and the composition identity imposed linearly.

When a step is certified non-divisible, a strict guessing-probability
increase exists for some ancilla-extended ensemble; `witness_search` looks
for one by seeded local search.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.linalg as npl
from scipy.optimize import linprog

from . import channels, linalg, sdp
from .channels import QuantumChannel
from .discrimination import Ensemble, helstrom, pguess
from .errors import DimensionMismatchError, InvalidChannelError

ROUTE_A_COND_LIMIT = 1e10
STEP_TOL = 1e-7
WITNESS_DELTA_MIN = 1e-6

DIVISIBLE_STEP = "divisible_step"
NOT_DIVISIBLE_STEP = "not_divisible_step"
UNDECIDED = "undecided"


@dataclass(frozen=True)
class DynamicalMapping:
    """Ordered channel sequence (N^i) with N^0 = id on a fixed system."""

    system_dim: int
    channels: list

    def __post_init__(self):
        if not self.channels:
            raise DimensionMismatchError("mapping needs at least the initial identity")
        for k, n in enumerate(self.channels):
            if n.dim_in != self.system_dim or n.dim_out != self.system_dim:
                raise DimensionMismatchError(f"channel {k} is not an endomap of the system")
            rep = channels.validate_cptp(n)
            if not rep.verdict:
                raise InvalidChannelError(
                    f"channel {k} fails CPTP validation",
                    cp_residual=rep.cp_residual,
                    tp_residual=rep.tp_residual,
                )
        if not channels.is_identity(self.channels[0]):
            raise InvalidChannelError("first channel must be the identity")

    def __len__(self):
        return len(self.channels)


@dataclass(frozen=True)
class PropagatorCertificate:
    status: str
    propagator: QuantumChannel | None = None
    negativity: float | None = None
    residual: float = 0.0
    route: str = "exact"


@dataclass(frozen=True)
class DivisibilityReport:
    verdict: str  # "divisible" | "not_divisible" | "undecided"
    steps: list = field(default_factory=list)


@dataclass(frozen=True)
class WitnessReport:
    step: int
    ensemble: Ensemble
    pguess_before: float
    pguess_after: float
    delta: float
    mode: str


@dataclass(frozen=True)
class ClassicalCertificate:
    status: str  # "divisible" | "not_divisible"
    transition: np.ndarray | None = None
    farkas: np.ndarray | None = None
    residual: float = 0.0


@dataclass(frozen=True)
class ReversibilityReport:
    reversible: bool
    unitary_flags: list = field(default_factory=list)
    failed_step: int | None = None


# ---------------------------------------------------------------------------
# Step propagators
# ---------------------------------------------------------------------------

def _recomposition_residual(prop: QuantumChannel, n_i: QuantumChannel,
                            n_j: QuantumChannel) -> float:
    return linalg.frob(channels.compose(prop, n_i).choi - n_j.choi)


def _route_a(n_i: QuantumChannel, n_j: QuantumChannel, tol: float) -> PropagatorCertificate | None:
    t_i = channels.transfer_matrix(n_i)
    if npl.cond(t_i) >= ROUTE_A_COND_LIMIT:
        return None
    t_c = channels.transfer_matrix(n_j) @ npl.inv(t_i)
    cand = channels.channel_from_transfer(t_c, n_i.dim_out, n_j.dim_out)
    choi = linalg.hermitianize(cand.choi)
    cand = QuantumChannel(cand.dim_in, cand.dim_out, choi)
    negativity = max(0.0, -linalg.min_eigval(choi))
    tp = linalg.frob(
        linalg.partial_trace(choi, (cand.dim_in, cand.dim_out), keep=0) - np.eye(cand.dim_in)
    )
    scale = max(1.0, linalg.frob(choi))
    if negativity <= tol * scale and tp <= tol * scale:
        return PropagatorCertificate(
            DIVISIBLE_STEP, propagator=cand, negativity=negativity,
            residual=_recomposition_residual(cand, n_i, n_j), route="exact",
        )
    return PropagatorCertificate(
        NOT_DIVISIBLE_STEP, negativity=negativity, residual=max(negativity, tp),
        route="exact",
    )


def _route_b(n_i: QuantumChannel, n_j: QuantumChannel, tol: float) -> PropagatorCertificate:
    d_mid, d_out = n_i.dim_out, n_j.dim_out
    t_i = channels.transfer_matrix(n_i)
    p = sdp.AffinePsdProblem(variable_dim=d_mid * d_out)

    def comp_coeff(row, col):
        # coefficient operator G with Tr[G X] = (T_C @ T_i)[row, col] where
        # T_C[(k,l),(m,n)] = X[(m,k),(n,l)]
        k, l = divmod(row, d_out)
        c = t_i[:, col].reshape(d_mid, d_mid)
        g = np.zeros((d_mid, d_out, d_mid, d_out), dtype=complex)
        g[:, l, :, k] = c.T
        return g.reshape(d_mid * d_out, d_mid * d_out)

    p.add_operator_equality(comp_coeff, channels.transfer_matrix(n_j))

    eye_out = np.eye(d_out, dtype=complex)

    def tp_coeff(i, j):
        e_ji = np.zeros((d_mid, d_mid), dtype=complex)
        e_ji[j, i] = 1.0
        return linalg.kron(e_ji, eye_out)

    p.add_operator_equality(tp_coeff, np.eye(d_mid, dtype=complex))

    res = sdp.solve_feasibility(p, tol=tol)
    if res.status == sdp.FEASIBLE:
        prop = QuantumChannel(d_mid, d_out, res.solution)
        return PropagatorCertificate(
            DIVISIBLE_STEP, propagator=prop,
            negativity=max(0.0, -linalg.min_eigval(prop.choi)),
            residual=_recomposition_residual(prop, n_i, n_j), route="sdp",
        )
    if res.status == sdp.INFEASIBLE:
        return PropagatorCertificate(NOT_DIVISIBLE_STEP, residual=res.residual, route="sdp")
    return PropagatorCertificate(UNDECIDED, residual=res.residual, route="sdp")


def find_step_propagator(n_i: QuantumChannel, n_j: QuantumChannel,
                         route: str = "auto", tol: float = STEP_TOL) -> PropagatorCertificate:
    """Decide whether a CPTP propagator C with n_j = C ∘ n_i exists.

    `route` is one of auto (exact inverse when well conditioned, SDP
    otherwise), exact, or sdp.
    """
    if n_i.dim_in != n_j.dim_in:
        raise DimensionMismatchError("channels must share the input space")
    if route not in ("auto", "exact", "sdp"):
        raise ValueError(f"unknown route {route!r}")
    if route in ("auto", "exact"):
        cert = _route_a(n_i, n_j, tol)
        if cert is not None:
            return cert
        if route == "exact":
            return PropagatorCertificate(UNDECIDED, residual=float("inf"), route="exact")
    return _route_b(n_i, n_j, tol)


def check_divisible(mapping: DynamicalMapping, route: str = "auto",
                    tol: float = STEP_TOL) -> DivisibilityReport:
    """Per-step certificates plus the overall verdict."""
    certs = [
        find_step_propagator(mapping.channels[i], mapping.channels[i + 1], route=route, tol=tol)
        for i in range(len(mapping) - 1)
    ]
    if all(c.status == DIVISIBLE_STEP for c in certs):
        verdict = "divisible"
    elif any(c.status == NOT_DIVISIBLE_STEP for c in certs):
        verdict = "not_divisible"
    else:
        verdict = "undecided"
    return DivisibilityReport(verdict=verdict, steps=certs)


def interval_propagator(report: DivisibilityReport, i: int, j: int) -> QuantumChannel:
    """Composite propagator from time i to time j, assembled from the step
    propagators C^j ∘ ... ∘ C^{i+1}."""
    if not 0 <= i <= j <= len(report.steps):
        raise DimensionMismatchError(f"invalid interval ({i},{j})")
    steps = report.steps[i:j]
    if any(c.status != DIVISIBLE_STEP for c in steps):
        raise InvalidChannelError("interval contains a non-divisible step")
    if not steps:
        dim = report.steps[0].propagator.dim_in if report.steps else 1
        return channels.identity_channel(dim)
    out = steps[0].propagator
    for c in steps[1:]:
        out = channels.compose(c.propagator, out)
    return out


# ---------------------------------------------------------------------------
# Classical (stochastic matrix) route
# ---------------------------------------------------------------------------

def check_stochastic(t: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    d = linalg.check_square(t)
    if np.any(t < -tol) or np.max(np.abs(t.sum(axis=0) - np.ones(d))) > tol:
        raise DimensionMismatchError("matrix is not column-stochastic")
    return t


def classical_step_propagator(p_i: np.ndarray, p_j: np.ndarray) -> ClassicalCertificate:
    """Exact LP: find column-stochastic T with T P_i = P_j.

    Feasible instances return T; infeasible ones return a Farkas dual ray y
    with A^T y <= 0 and b^T y > 0 for the standard-form system.
    """
    p_i = check_stochastic(p_i)
    p_j = check_stochastic(p_j)
    d = p_i.shape[0]
    if p_j.shape != (d, d):
        raise DimensionMismatchError("transition matrices must share a dimension")

    # equalities over x = vec_row(T): T P_i = P_j and unit column sums
    n_var = d * d
    rows = []
    rhs = []
    for r in range(d):
        for c in range(d):
            a = np.zeros(n_var)
            a[r * d : (r + 1) * d] = p_i[:, c]
            rows.append(a)
            rhs.append(p_j[r, c])
    for s in range(d):
        a = np.zeros(n_var)
        a[s::d] = 1.0
        rows.append(a)
        rhs.append(1.0)
    a_eq = np.array(rows)
    b_eq = np.array(rhs)

    res = linprog(np.zeros(n_var), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status == 0:
        t = res.x.reshape(d, d)
        residual = float(npl.norm(a_eq @ res.x - b_eq))
        return ClassicalCertificate("divisible", transition=t, residual=residual)

    # phase-1 elastic problem; its equality duals are a Farkas certificate
    m = len(b_eq)
    c_el = np.concatenate([np.zeros(n_var), np.ones(2 * m)])
    a_el = np.hstack([a_eq, np.eye(m), -np.eye(m)])
    el = linprog(c_el, A_eq=a_el, b_eq=b_eq, bounds=(0, None), method="highs")
    y = np.asarray(el.eqlin.marginals, dtype=float)
    if float(y @ b_eq) < 0:
        y = -y
    return ClassicalCertificate(
        "not_divisible", farkas=y, residual=float(el.fun)
    )


# ---------------------------------------------------------------------------
# Witness search
# ---------------------------------------------------------------------------

def _max_entangled_vec(d: int, phase_index: int = 0) -> np.ndarray:
    omega = np.exp(2j * np.pi * phase_index / d)
    v = np.zeros(d * d, dtype=complex)
    for k in range(d):
        v[k * d + k] = omega ** k
    return v / np.sqrt(d)


def _normalize(v: np.ndarray) -> np.ndarray:
    return v / npl.norm(v)


def _witness_seeds(mapping: DynamicalMapping, step: int, mode: str,
                   rng: np.random.Generator) -> list:
    d = mapping.system_dim
    seeds = []
    if mode == "entangled":
        seeds.append((_max_entangled_vec(d, 0), _max_entangled_vec(d, 1)))
        # eigenvectors of the exact step candidate, when it exists: the most
        # negative direction of the candidate Choi marks the backflow
        t_i = channels.transfer_matrix(mapping.channels[step - 1])
        if npl.cond(t_i) < ROUTE_A_COND_LIMIT:
            t_c = channels.transfer_matrix(mapping.channels[step]) @ npl.inv(t_i)
            cand = channels.channel_from_transfer(t_c, d, d)
            w, v = linalg.eig_hermitian(linalg.hermitianize(cand.choi))
            seeds.append((_normalize(v[:, -1]), _normalize(v[:, 0])))
        for _ in range(3):
            z0 = rng.standard_normal(d * d) + 1j * rng.standard_normal(d * d)
            z1 = rng.standard_normal(d * d) + 1j * rng.standard_normal(d * d)
            seeds.append((_normalize(z0), _normalize(z1)))
    else:
        e = np.eye(d, dtype=complex)
        plus = _normalize(e[:, 0] + e[:, 1])
        minus = _normalize(e[:, 0] - e[:, 1])
        anc = e[:, 0]
        seeds.append(((anc, e[:, 0]), (anc, e[:, 1])))
        seeds.append(((anc, plus), (anc, minus)))
        for _ in range(3):
            fac = [
                _normalize(rng.standard_normal(d) + 1j * rng.standard_normal(d))
                for _ in range(4)
            ]
            seeds.append(((fac[0], fac[1]), (fac[2], fac[3])))
    return seeds


def _seed_to_states(seed, mode: str):
    if mode == "entangled":
        return [channels.pure_state(seed[0]), channels.pure_state(seed[1])]
    (a0, b0), (a1, b1) = seed
    return [
        channels.pure_state(np.kron(a0, b0)),
        channels.pure_state(np.kron(a1, b1)),
    ]


def _perturb(seed, mode: str, sigma: float, rng: np.random.Generator):
    if mode == "entangled":
        return tuple(
            _normalize(v + sigma * (rng.standard_normal(v.shape) + 1j * rng.standard_normal(v.shape)))
            for v in seed
        )
    return tuple(
        tuple(
            _normalize(f + sigma * (rng.standard_normal(f.shape) + 1j * rng.standard_normal(f.shape)))
            for f in pair
        )
        for pair in seed
    )


def witness_search(mapping: DynamicalMapping, step: int, mode: str = "entangled",
                   budget: int = 300, seed: int = 0,
                   ensemble_size: int = 2) -> WitnessReport | None:
    """Search for an extended two-state ensemble whose guessing probability
    strictly increases across `step` (the transition N^{step-1} -> N^{step}).

    Seeded local search: maximally entangled pairs plus, when the exact step
    candidate exists, its extreme Choi eigenvectors; separable mode restricts
    to product-state pairs.  Returns None when no probe exceeds the backflow
    threshold (search failure is not a divisibility proof).
    """
    if not 1 <= step < len(mapping):
        raise DimensionMismatchError(f"step {step} out of range for mapping of length {len(mapping)}")
    if mode not in ("entangled", "separable"):
        raise ValueError(f"unknown mode {mode!r}")
    if ensemble_size != 2:
        raise DimensionMismatchError(
            "witness search currently evaluates equal-prior two-state ensembles only"
        )
    d = mapping.system_dim
    before = channels.tensor_with_identity(mapping.channels[step - 1], d)
    after = channels.tensor_with_identity(mapping.channels[step], d)
    rng = np.random.default_rng(seed)

    def evaluate(candidate):
        s0, s1 = _seed_to_states(candidate, mode)
        pb = helstrom(0.5, channels.apply(before, s0), channels.apply(before, s1))
        pa = helstrom(0.5, channels.apply(after, s0), channels.apply(after, s1))
        return pa - pb, pb, pa

    best = None
    best_delta = -np.inf
    evals = 0
    for start in _witness_seeds(mapping, step, mode, rng):
        current = start
        delta, pb, pa = evaluate(current)
        evals += 1
        if delta > best_delta:
            best, best_delta, best_vals = current, delta, (pb, pa)
        sigma = 0.25
        while evals < budget:
            trial = _perturb(current, mode, sigma, rng)
            t_delta, t_pb, t_pa = evaluate(trial)
            evals += 1
            if t_delta > delta:
                current, delta = trial, t_delta
                if t_delta > best_delta:
                    best, best_delta, best_vals = trial, t_delta, (t_pb, t_pa)
            else:
                sigma *= 0.97
            if sigma < 1e-4:
                break
        if evals >= budget:
            break

    if best_delta <= WITNESS_DELTA_MIN:
        return None
    states = _seed_to_states(best, mode)
    return WitnessReport(
        step=step,
        ensemble=Ensemble(np.array([0.5, 0.5]), states),
        pguess_before=best_vals[0],
        pguess_after=best_vals[1],
        delta=float(best_delta),
        mode=mode,
    )


# ---------------------------------------------------------------------------
# Reversibility
# ---------------------------------------------------------------------------

def _choi_rank(n: QuantumChannel, rtol: float = 1e-9) -> int:
    w = npl.eigvalsh(linalg.hermitianize(n.choi))
    return int(np.sum(w > rtol * max(1.0, abs(w[-1]))))


def detect_reversible(mapping: DynamicalMapping, tol: float = STEP_TOL) -> ReversibilityReport:
    """A mapping is reversible iff every step has both a forward and a
    reverse CPTP propagator; each channel is additionally flagged as unitary
    when its Choi rank is one."""
    flags = [_choi_rank(n) == 1 for n in mapping.channels]
    for i in range(len(mapping) - 1):
        fwd = find_step_propagator(mapping.channels[i], mapping.channels[i + 1], tol=tol)
        if fwd.status != DIVISIBLE_STEP:
            return ReversibilityReport(False, flags, failed_step=i + 1)
        rev = find_step_propagator(mapping.channels[i + 1], mapping.channels[i], tol=tol)
        if rev.status != DIVISIBLE_STEP:
            return ReversibilityReport(False, flags, failed_step=i + 1)
    return ReversibilityReport(True, flags)
