"""Equality-constrained KKT systems for a candidate active set."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .core import ProjectedQp

PIVOT_TOL = 1e-10
REFINE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class KktSystem:
    """``K = [[Qt, At_A'], [At_A, 0]]`` and ``rhs = [-ct; b_A]``."""

    K: np.ndarray
    rhs: np.ndarray
    active: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.rhs) - len(self.active)


@dataclass(frozen=True, eq=False)
class KktSolution:
    y: np.ndarray
    lam: np.ndarray
    det_ok: bool


def assemble(pqp: ProjectedQp, active=()) -> KktSystem:
    active = tuple(int(i) for i in active)
    if list(active) != sorted(set(active)):
        raise ValueError(f"active set must be strictly increasing, got {active}")
    if active and (active[0] < 0 or active[-1] >= pqp.m):
        raise IndexError(f"active index out of range for m={pqp.m}: {active}")
    if len(active) > min(pqp.m, pqp.k):
        raise ValueError(f"|active|={len(active)} exceeds min(m, k)={min(pqp.m, pqp.k)}")
    k, a = pqp.k, len(active)
    idx = list(active)
    K = np.zeros((k + a, k + a))
    K[:k, :k] = pqp.Qt
    Aa = pqp.At[idx]
    K[k:, :k] = Aa
    K[:k, k:] = Aa.T
    rhs = np.concatenate([-pqp.ct, pqp.b[idx]])
    return KktSystem(K=K, rhs=rhs, active=active)


def solve(sys: KktSystem) -> KktSolution:
    """Factor ``K`` with partial pivoting and solve.

    ``K`` is declared singular when its smallest pivot is below 1e-10 times the
    largest; in that case ``det_ok`` is False and ``y``/``lam`` are NaN.
    """
    k = sys.k
    size = len(sys.rhs)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        warnings.simplefilter("ignore", RuntimeWarning)
        lu, piv = lu_factor(sys.K, check_finite=False)
        pivots = np.abs(np.diag(lu))
        if not pivots.max() > 0 or pivots.min() <= PIVOT_TOL * pivots.max():
            nan = np.full(size, np.nan)
            return KktSolution(y=nan[:k], lam=nan[k:], det_ok=False)
        z = lu_solve((lu, piv), sys.rhs, check_finite=False)
        r = sys.rhs - sys.K @ z
        if np.linalg.norm(r) > REFINE_TOL * np.linalg.norm(sys.rhs):
            z = z + lu_solve((lu, piv), r, check_finite=False)
    return KktSolution(y=z[:k], lam=z[k:], det_ok=True)
