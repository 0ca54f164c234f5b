"""Exact solvers for strictly convex projected QPs.

:func:`solve_enumerate` walks every candidate active set of size at most
``min(m, k)`` (increasing size, lexicographic within a size), solves its KKT
system and returns the first candidate that is primal and dual feasible.
Since the objective is strictly convex, any such candidate is the unique
minimizer. :func:`solve_iterative` is a textbook primal active-set method used
as a cheaper cross-check.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from . import kkt
from .core import ProjectedQp, as_projection

OPTIMAL = "optimal"
INFEASIBLE_NUMERICS = "infeasible_numerics"
BUDGET_EXCEEDED = "budget_exceeded"

DEFAULT_BUDGET = 2_000_000
FEAS_TOL = 1e-9
CERT_TOL = 1e-8
PD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SolveResult:
    value: float
    y: np.ndarray
    active: tuple[int, ...]
    lambda_full: np.ndarray
    status: str
    candidates: int = 0

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def _failed(pqp, status, candidates=0):
    return SolveResult(
        value=float("nan"),
        y=np.full(pqp.k, np.nan),
        active=(),
        lambda_full=np.full(pqp.m, np.nan),
        status=status,
        candidates=candidates,
    )


def _result(pqp, y, active, lam, candidates):
    lam_full = np.zeros(pqp.m)
    lam_full[list(active)] = lam
    return SolveResult(
        value=pqp.objective(y),
        y=y,
        active=tuple(active),
        lambda_full=lam_full,
        status=OPTIMAL,
        candidates=candidates,
    )


def require_strictly_convex(pqp: ProjectedQp):
    w = np.linalg.eigvalsh(pqp.Qt)
    if not (w[-1] > 0 and w[0] >= PD_TOL * w[-1]):
        raise ValueError(
            "projected curvature is not positive definite "
            f"(eigenvalues in [{w[0]:.3g}, {w[-1]:.3g}]); perturb the instance first"
        )


def enumeration_size(m: int, k: int) -> int:
    return sum(comb(m, a) for a in range(min(m, k) + 1))


def solve_enumerate(pqp: ProjectedQp, budget: int = DEFAULT_BUDGET, tol: float = FEAS_TOL) -> SolveResult:
    require_strictly_convex(pqp)
    if enumeration_size(pqp.m, pqp.k) > budget:
        return _failed(pqp, BUDGET_EXCEEDED)
    At, b = pqp.At, pqp.b
    tried = 0
    for size in range(min(pqp.m, pqp.k) + 1):
        for active in combinations(range(pqp.m), size):
            tried += 1
            sol = kkt.solve(kkt.assemble(pqp, active))
            if not sol.det_ok:
                continue
            slack = b - At @ sol.y
            slack[list(active)] = 0.0
            if np.any(slack < -tol) or np.any(sol.lam < -tol):
                continue
            return _result(pqp, sol.y, active, sol.lam, tried)
    return _failed(pqp, INFEASIBLE_NUMERICS, tried)


def solve_for_solution(pqp: ProjectedQp, P, **kw):
    """Like :func:`solve_enumerate`, also returning the recovered point ``P y``."""
    P = as_projection(P)
    res = solve_enumerate(pqp, **kw)
    return res, P @ res.y


def solve_iterative(pqp: ProjectedQp, max_iters: int = 200, tol: float = FEAS_TOL) -> SolveResult:
    """Primal active-set method started at ``y = 0`` with an empty working set.

    One iteration is one equality-constrained solve followed by either a step
    (possibly adding a blocking constraint) or a multiplier check (possibly
    dropping the most negative one).
    """
    require_strictly_convex(pqp)
    At, b = pqp.At, pqp.b
    y = np.zeros(pqp.k)
    work: list[int] = []
    for it in range(1, max_iters + 1):
        sol = kkt.solve(kkt.assemble(pqp, work))
        if not sol.det_ok:
            return _failed(pqp, INFEASIBLE_NUMERICS, it)
        p = sol.y - y
        alpha, blocking = 1.0, None
        for j in range(pqp.m):
            if j in work:
                continue
            ap = At[j] @ p
            if ap > tol:
                ratio = max(b[j] - At[j] @ y, 0.0) / ap
                if ratio < alpha:
                    alpha, blocking = ratio, j
        if blocking is not None:
            y = y + alpha * p
            work = sorted(work + [blocking])
            continue
        y = sol.y
        if len(work) == 0 or sol.lam.min() >= -tol:
            return _result(pqp, y, work, sol.lam, it)
        work.pop(int(np.argmin(sol.lam)))
    return _failed(pqp, BUDGET_EXCEEDED, max_iters)


def kkt_residuals(pqp: ProjectedQp, y, lambda_full) -> dict[str, float]:
    """Worst violation of each KKT condition (all zero at an exact optimum)."""
    y = np.asarray(y, dtype=float)
    lam = np.asarray(lambda_full, dtype=float)
    g = pqp.Qt @ y + pqp.ct + pqp.At.T @ lam
    b_minus = pqp.At @ y - pqp.b
    return {
        "stationarity": float(np.linalg.norm(g)),
        "primal": float(max(0.0, b_minus.max(initial=0.0))),
        "dual": float(max(0.0, -lam.min(initial=0.0))),
        "complementarity": float(np.abs(lam * b_minus).max(initial=0.0)),
    }


def certify(pqp: ProjectedQp, res: SolveResult, tol: float = CERT_TOL) -> bool:
    """Check the full KKT certificate of an optimal result."""
    if not res.ok:
        return False
    r = kkt_residuals(pqp, res.y, res.lambda_full)
    return (
        r["primal"] <= tol
        and r["dual"] <= tol
        and r["complementarity"] <= tol
        and r["stationarity"] <= tol * (1 + np.linalg.norm(pqp.ct))
    )


def active_rows(pqp: ProjectedQp, y, tol: float = CERT_TOL) -> tuple[int, ...]:
    return tuple(int(i) for i in np.flatnonzero(np.abs(pqp.At @ y - pqp.b) <= tol))


def verify_localization(pqp: ProjectedQp, result: SolveResult, tol: float = CERT_TOL) -> bool:
    """Search for ``B`` within the active constraints at ``result.y`` such that
    the rows ``At_B`` are linearly independent, ``|B| <= k``, and the
    equality-constrained problem on ``B`` reproduces ``result.y``.
    """
    y = np.asarray(result.y, dtype=float)
    if not np.all(np.isfinite(y)):
        return False
    cand = sorted(set(active_rows(pqp, y, tol)) | set(result.active))
    scale = 1.0 + np.max(np.abs(y), initial=0.0)
    for size in range(min(len(cand), pqp.k) + 1):
        for B in combinations(cand, size):
            if size:
                s = np.linalg.svd(pqp.At[list(B)], compute_uv=False)
                if s[-1] <= 1e-10 * s[0]:
                    continue
            sol = kkt.solve(kkt.assemble(pqp, B))
            if sol.det_ok and np.max(np.abs(sol.y - y)) <= tol * scale:
                return True
    return False
