"""Constrained projection classes ``P = [T; I_k; -I_k]``.

The lower-bound instances leave ``x_1 .. x_{n-2k}`` unconstrained, so an
arbitrary ``P`` can make the projected problem unbounded (only the Tikhonov
term keeps it finite). Restricting ``P`` to the stacked form fixes
``A P = [I; -I]`` and only the top block ``T`` is learned.

Each class offers two views used by the trainers:

* ``project(P)`` maps an arbitrary ``n x k`` matrix back into the class
  (projected gradient descent on a fixed ``P``);
* ``from_raw(raw)`` / ``raw_grad(raw, dP)`` parametrize the class smoothly
  from an unconstrained ``n x k`` output (used by the input-aware network).
"""
from __future__ import annotations

import numpy as np


class LowerBoundStructure:
    def __init__(self, n: int, k: int):
        if not n > 2 * k:
            raise ValueError(f"need n > 2k, got n={n}, k={k}")
        self.n, self.k = n, k
        self.rows = n - 2 * k

    def stack(self, T) -> np.ndarray:
        return np.vstack([T, np.eye(self.k), -np.eye(self.k)])

    def top(self, P) -> np.ndarray:
        return np.asarray(P)[: self.rows]

    def random(self, rng) -> np.ndarray:
        """Random ``{0, -1}`` pattern."""
        return self.stack(-rng.integers(0, 2, size=(self.rows, self.k)).astype(float))


class LowerBoundBox(LowerBoundStructure):
    """``T`` entrywise in ``[-1, 0]``; the best mean loss is ``-1``."""

    lo, hi = -1.0, 0.0

    def init(self, rng) -> np.ndarray:
        return self.stack(rng.uniform(self.lo, self.hi, size=(self.rows, self.k)))

    def project(self, P) -> np.ndarray:
        return self.stack(np.clip(self.top(P), self.lo, self.hi))

    def from_raw(self, raw) -> np.ndarray:
        return self.project(raw)

    def raw_grad(self, raw, dP) -> np.ndarray:
        g = np.zeros_like(dP)
        T = self.top(raw)
        inside = (T > self.lo) & (T < self.hi)
        g[: self.rows] = np.where(inside, dP[: self.rows], 0.0)
        return g

    def best_mean(self, sample) -> float:
        return -1.0


def _project_simplex(v):
    # Euclidean projection onto {x >= 0, sum x = 1}
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def _softmax(z):
    e = np.exp(z - z.max(axis=0, keepdims=True))
    return e / e.sum(axis=0, keepdims=True)


class LowerBoundSimplex(LowerBoundStructure):
    """Each column of ``-T`` lies in the probability simplex.

    Every instance ``pi_{r,s}`` then competes for the same unit budget in
    column ``s``: a single ``P`` achieves a mean loss of ``-1/(n-2k)`` on a
    sample covering every row uniformly, while a per-instance ``P`` reaches
    ``-1``.
    """

    def init(self, rng) -> np.ndarray:
        return self.stack(-_softmax(0.1 * rng.standard_normal((self.rows, self.k))))

    def random(self, rng) -> np.ndarray:
        return self.stack(-_softmax(rng.standard_normal((self.rows, self.k))))

    def project(self, P) -> np.ndarray:
        T = self.top(P)
        return self.stack(-np.column_stack([_project_simplex(-T[:, s]) for s in range(self.k)]))

    def from_raw(self, raw) -> np.ndarray:
        return self.stack(-_softmax(self.top(raw)))

    def raw_grad(self, raw, dP) -> np.ndarray:
        p = _softmax(self.top(raw))
        dT = -dP[: self.rows]
        g = np.zeros_like(dP)
        g[: self.rows] = p * (dT - (p * dT).sum(axis=0, keepdims=True))
        return g

    def best_mean(self, sample) -> float:
        """Closed-form best mean over a single ``P`` (noise-free limit)."""
        counts = np.zeros((self.rows, self.k))
        for inst in sample:
            counts[inst.meta["r"], inst.meta["s"]] += 1
        return -counts.max(axis=0).sum() / len(sample)
