"""Small dense semidefinite feasibility and optimization.

Two problem classes are supported, matching what the rest of the toolkit
needs:

* affine-PSD feasibility: find X >= 0 with Tr[A_k X] = b_k for Hermitian
  A_k and real b_k.  Solved by minimizing the Euclidean norm of the
  constraint-residual vector over the PSD cone, so an infeasible problem
  reports the (converged) distance between the cone and the affine set.
* minimum-trace domination: minimize Tr K subject to K >= p_x rho_x, the
  dual of the optimal state-discrimination problem.  The optimal value is
  the guessing probability; a primal POVM is recovered from the dual
  variables to certify the gap.

Both are handled by an interior-point solver (CLARABEL through cvxpy) on
a Hermitian matrix variable; dimensions stay small (<= ~81) by design.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np
import numpy.linalg as npl

from . import linalg
from .errors import DimensionMismatchError

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 50000
INFEASIBLE_FACTOR = 10.0

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
OPTIMAL = "optimal"
UNDECIDED = "undecided"


@dataclass
class AffinePsdProblem:
    """find X >= 0 (Hermitian, `variable_dim` x `variable_dim`) with
    Tr[A_k X] = b_k for every (A_k, b_k) in `constraints`."""

    variable_dim: int
    constraints: list = field(default_factory=list)
    objective: np.ndarray | None = None

    def add(self, a: np.ndarray, b: float):
        a = np.asarray(a, dtype=complex)
        if a.shape != (self.variable_dim, self.variable_dim):
            raise DimensionMismatchError(
                f"constraint operator shape {a.shape} != variable dim {self.variable_dim}"
            )
        if not linalg.is_hermitian(a):
            raise DimensionMismatchError("constraint operator must be Hermitian")
        self.constraints.append((a, float(b)))

    def add_operator_equality(self, coeff_map, target: np.ndarray):
        """Add the matrix equality sum-over-variable of a linear map == target.

        `coeff_map(i, j)` must return the (generally non-Hermitian) operator G
        such that entry (i, j) of the left-hand side equals Tr[G X]; the
        complex equality is split into two Hermitian scalar constraints.
        """
        target = np.asarray(target, dtype=complex)
        rows, cols = target.shape
        for i in range(rows):
            for j in range(cols):
                g = np.asarray(coeff_map(i, j), dtype=complex)
                gh = (g + g.conj().T) / 2
                ga = (g - g.conj().T) / (2j)
                self.add(gh, target[i, j].real)
                self.add(ga, target[i, j].imag)


@dataclass
class SdpResult:
    status: str
    solution: np.ndarray | None
    residual: float
    gap: float | None = None
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)


def _solver_iterations(problem) -> int:
    stats = problem.solver_stats
    return int(stats.num_iters) if stats is not None and stats.num_iters is not None else 0


def _solve_with_fallback(problem: cp.Problem, max_iter: int) -> str | None:
    """Try the interior-point solver first, then a first-order fallback.

    Returns the error string when both fail, None on success (the status is
    on the problem object).
    """
    try:
        problem.solve(solver=cp.CLARABEL, max_iter=max_iter)
        if problem.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            return None
    except cp.error.SolverError:
        pass
    try:
        problem.solve(solver=cp.SCS, eps=1e-9, max_iters=max_iter)
        return None
    except cp.error.SolverError as exc:
        return str(exc)


def _constraint_residual(p: AffinePsdProblem, x: np.ndarray) -> float:
    r = [np.real(np.trace(a @ x)) - b for a, b in p.constraints]
    return float(npl.norm(r))


def solve_feasibility(p: AffinePsdProblem, tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER) -> SdpResult:
    """Decide affine-PSD feasibility.

    `feasible` if a PSD X satisfies all constraints within `tol`;
    `infeasible` if the converged cone-to-affine distance exceeds 10*tol;
    `undecided` otherwise (including solver failure).
    """
    if p.objective is not None:
        raise DimensionMismatchError("solve_feasibility takes problems without objective")
    n = p.variable_dim
    x = cp.Variable((n, n), hermitian=True)
    resid = cp.hstack([cp.real(cp.trace(a @ x)) - b for a, b in p.constraints])
    prob = cp.Problem(cp.Minimize(cp.norm2(resid)), [x >> 0])
    err = _solve_with_fallback(prob, max_iter)
    if err is not None:
        return SdpResult(UNDECIDED, None, float("inf"), diagnostics={"error": err})
    iters = _solver_iterations(prob)
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        return SdpResult(UNDECIDED, None, float("inf"), iterations=iters,
                         diagnostics={"status": prob.status})
    xv = linalg.hermitianize(np.asarray(x.value, dtype=complex))
    # independent recheck: project onto the cone and measure the violation
    xv = linalg.psd_project(xv)
    residual = _constraint_residual(p, xv)
    if residual <= tol:
        return SdpResult(FEASIBLE, xv, residual, iterations=iters)
    converged = prob.status == cp.OPTIMAL
    if converged and residual > INFEASIBLE_FACTOR * tol:
        return SdpResult(INFEASIBLE, None, residual, iterations=iters)
    return SdpResult(UNDECIDED, None, residual, iterations=iters,
                     diagnostics={"status": prob.status})


# compiled minimum-trace problems, keyed by (dimension, number of states)
_DOMINATION_CACHE: dict = {}


def _build_domination_problem(dim: int, count: int):
    k = cp.Variable((dim, dim), hermitian=True)
    params = [cp.Parameter((dim, dim), hermitian=True) for _ in range(count)]
    constraints = [k - p >> 0 for p in params]
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(k))), constraints)
    return prob, k, params, constraints


def _domination_problem(dim: int, count: int):
    key = (dim, count)
    if key not in _DOMINATION_CACHE:
        _DOMINATION_CACHE[key] = _build_domination_problem(dim, count)
    return _DOMINATION_CACHE[key]


def _recover_povm(duals: list[np.ndarray], dim: int) -> list[np.ndarray]:
    """Turn dual variables into an exactly valid POVM via the symmetric
    normalization S^{-1/2} Z_x S^{-1/2}."""
    zs = [linalg.psd_project(linalg.hermitianize(z)) for z in duals]
    s = sum(zs)
    w, v = npl.eigh(s)
    w = np.maximum(w, 1e-14)
    s_isqrt = (v / np.sqrt(w)) @ v.conj().T
    return [linalg.hermitianize(s_isqrt @ z @ s_isqrt) for z in zs]


def _solve_primal_discrimination(weighted: list[np.ndarray], max_iter: int):
    """Maximize sum_x Tr[E_x (p_x rho_x)] over POVMs {E_x}; returns
    (value, POVM) or (0.0, None) when the solve fails."""
    dim = weighted[0].shape[0]
    es = [cp.Variable((dim, dim), hermitian=True) for _ in weighted]
    obj = cp.Maximize(sum(cp.real(cp.trace(e @ w)) for e, w in zip(es, weighted)))
    cons = [e >> 0 for e in es] + [sum(es) == np.eye(dim)]
    prob = cp.Problem(obj, cons)
    if _solve_with_fallback(prob, max_iter) is not None:
        return 0.0, None
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        return 0.0, None
    povm = _recover_povm([np.asarray(e.value) for e in es], dim)
    value = float(sum(np.trace(e @ w).real for e, w in zip(povm, weighted)))
    return value, povm


def _solve_domination_once(prob, k, params, constraints, states, tol, max_iter) -> SdpResult:
    dim = np.asarray(states[0][1]).shape[0]
    for par, (w, rho) in zip(params, states):
        par.value = linalg.hermitianize(w * np.asarray(rho, dtype=complex))
    err = _solve_with_fallback(prob, max_iter)
    if err is not None:
        return SdpResult(UNDECIDED, None, float("inf"), diagnostics={"error": err})
    iters = _solver_iterations(prob)
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or k.value is None:
        return SdpResult(UNDECIDED, None, float("inf"), iterations=iters,
                         diagnostics={"status": prob.status})
    kv = linalg.hermitianize(np.asarray(k.value, dtype=complex))
    value = float(np.trace(kv).real)
    residual = max(
        max(0.0, -linalg.min_eigval(kv - par.value)) for par in params
    )
    povm = _recover_povm([np.asarray(c.dual_value) for c in constraints], dim)
    primal = float(sum(np.trace(e @ par.value).real for e, par in zip(povm, params)))
    gap = value - primal
    if abs(gap) > 100 * tol:
        # degenerate duals can spoil the recovered measurement; certify the
        # value against the primal discrimination problem instead
        primal_opt, povm_opt = _solve_primal_discrimination(
            [par.value for par in params], max_iter
        )
        if povm_opt is not None:
            povm, primal = povm_opt, primal_opt
            gap = value - primal
    if residual > INFEASIBLE_FACTOR * tol or abs(gap) > 100 * tol:
        return SdpResult(UNDECIDED, kv, residual, gap=gap, iterations=iters,
                         diagnostics={"status": prob.status, "primal": primal})
    return SdpResult(OPTIMAL, kv, residual, gap=gap, iterations=iters,
                     diagnostics={"primal": primal, "povm": povm})


def solve_min_trace_dominating(states: list[tuple[float, np.ndarray]],
                               tol: float = DEFAULT_TOL,
                               max_iter: int = DEFAULT_MAX_ITER) -> SdpResult:
    """Minimize Tr K subject to K >= p_x rho_x for every weighted state.

    The optimal Tr K is the guessing probability of the ensemble; the
    duality gap against the recovered measurement is reported in `gap`.
    """
    if not states:
        raise DimensionMismatchError("empty state list")
    dim = np.asarray(states[0][1]).shape[0]
    weights = np.array([w for w, _ in states], dtype=float)
    if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-8:
        raise DimensionMismatchError("weights must be positive and sum to 1")
    cached = _domination_problem(dim, len(states))
    res = _solve_domination_once(*cached, states, tol, max_iter)
    if res.status == OPTIMAL:
        return res
    # rare cached-problem hiccup: retry once on a freshly built problem
    fresh = _build_domination_problem(dim, len(states))
    return _solve_domination_once(*fresh, states, tol, max_iter)
