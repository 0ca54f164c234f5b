"""Empirical risk minimization over the projection matrix.

Two losses are supported:

* ``objective``: the optimal value of the (perturbed) projected problem.
  Its gradient follows from the envelope theorem applied to the Lagrangian
  ``1/2 y'P'QPy + c'Py + lam'(APy - b)``, giving ``(Q P y + c + A'lam) y'``.
* ``matching``: ``|x* - P y*(P)|^2`` where ``x*`` solves the original
  problem. Differentiated implicitly through the KKT system of the optimal
  active set.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kkt
from .core import QpInstance, as_projection, orthonormalize, perturb, project, random_projection, validate_instance
from .oracle import solve_enumerate
from .parallel import pmap

log = logging.getLogger(__name__)

STRICT_TOL = 1e-6
FD_STEP = 1e-5


class OracleError(RuntimeError):
    """The exact solver did not return an optimal result."""


@dataclass(frozen=True)
class TrainConfig:
    k: int = 1
    step_size: float = 1e-2
    iters: int = 100
    gamma: float = 1e-6
    loss_kind: str = "objective"
    seed: int = 0
    rank_floor: float = 1e-3

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.iters < 0:
            raise ValueError("iters must be nonnegative")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.loss_kind not in ("objective", "matching"):
            raise ValueError(f"unknown loss_kind {self.loss_kind!r}")
        if not 0 < self.rank_floor < 1:
            raise ValueError("rank_floor must lie in (0, 1)")


@dataclass
class TrainReport:
    loss_trace: list
    final_P: np.ndarray
    per_instance_final: list
    reorthonormalized: int = 0
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "trace": [[int(t), float(v)] for t, v in self.loss_trace],
            "P": np.asarray(self.final_P).ravel().tolist(),
            "shape": list(np.shape(self.final_P)),
            "per_instance": [float(v) for v in self.per_instance_final],
            "reorthonormalized": self.reorthonormalized,
        }
        out.update(self.extra)
        return out


def _perturbed(inst, gamma):
    return perturb(inst, gamma) if gamma > 0 else inst


def solve_projected(inst: QpInstance, P, gamma: float = 0.0):
    """Solve the projected problem of ``inst`` (perturbed by ``gamma``)."""
    P = as_projection(P)
    target = _perturbed(inst, gamma)
    pqp = project(target, P)
    res = solve_enumerate(pqp)
    if not res.ok:
        raise OracleError(f"oracle returned status {res.status}")
    return target, pqp, res


def objective_loss(inst: QpInstance, P, gamma: float = 0.0) -> float:
    return solve_projected(inst, P, gamma)[2].value


def _envelope(target, P, res):
    y = res.y
    return np.outer(target.Q @ (P @ y) + target.c + target.A.T @ res.lambda_full, y)


def envelope_grad(inst: QpInstance, P, gamma: float = 0.0) -> np.ndarray:
    """Gradient of the projected optimal value with respect to ``P``.

    At points where the optimal active set changes the value function has a
    kink; the formula then returns the one-sided gradient of whichever active
    set the oracle certified.
    """
    P = as_projection(P)
    target, _, res = solve_projected(inst, P, gamma)
    return _envelope(target, P, res)


def value_and_grad(inst: QpInstance, P, gamma: float = 0.0):
    P = as_projection(P)
    target, _, res = solve_projected(inst, P, gamma)
    return res.value, _envelope(target, P, res)


def is_strict(pqp, res, tol: float = STRICT_TOL) -> bool:
    """True when active multipliers and inactive slacks are all above ``tol``."""
    act = list(res.active)
    slack = pqp.b - pqp.At @ res.y
    inactive = np.ones(pqp.m, dtype=bool)
    inactive[act] = False
    return bool(np.all(res.lambda_full[act] > tol) and np.all(slack[inactive] > tol))


def _require_pd(inst):
    w = np.linalg.eigvalsh(inst.Q)
    if not (w[-1] > 0 and w[0] > 1e-10 * w[-1]):
        raise ValueError("matching loss requires a positive definite Q")


def original_solution(inst: QpInstance) -> np.ndarray:
    _require_pd(inst)
    return solve_projected(inst, np.eye(inst.n))[2].y


def matching_loss(inst: QpInstance, P) -> float:
    x_star = original_solution(inst)
    P = as_projection(P)
    y = solve_projected(inst, P)[2].y
    return float(np.sum((x_star - P @ y) ** 2))


def fd_grad(f, P, h: float = FD_STEP) -> np.ndarray:
    """Central finite differences of a scalar function of a matrix."""
    P = np.array(P, dtype=float)
    g = np.zeros_like(P)
    for idx in np.ndindex(P.shape):
        Pp, Pm = P.copy(), P.copy()
        Pp[idx] += h
        Pm[idx] -= h
        g[idx] = (f(Pp) - f(Pm)) / (2 * h)
    return g


def matching_grad(inst: QpInstance, P):
    """Gradient of :func:`matching_loss`; returns ``(grad, exact)``.

    With a strict optimal active set ``B`` the solution ``y(P)`` is smooth and
    solves ``K [y; lam] = [-P'c; b_B]`` with ``K = [[P'QP, (A_B P)'], [A_B P, 0]]``.
    One adjoint solve with ``K`` yields the gradient. Otherwise a central
    finite difference is returned with ``exact=False``.
    """
    x_star = original_solution(inst)
    P = as_projection(P)
    _, pqp, res = solve_projected(inst, P)
    if not is_strict(pqp, res):
        log.debug("non-strict active set %s; falling back to finite differences", res.active)
        return fd_grad(lambda M: matching_loss(inst, M), P), False
    y, B = res.y, list(res.active)
    lam = res.lambda_full[B]
    A_B = inst.A[B]
    r = x_star - P @ y
    sys = kkt.assemble(pqp, B)
    adj = kkt.solve(kkt.KktSystem(K=sys.K, rhs=np.concatenate([-2 * P.T @ r, np.zeros(len(B))]), active=sys.active))
    u, v = adj.y, adj.lam
    Q, c = inst.Q, inst.c
    grad = -2 * np.outer(r, y) - (
        np.outer(c + Q @ (P @ y) + A_B.T @ lam, u) + np.outer(Q @ (P @ u), y) + np.outer(A_B.T @ v, y)
    )
    return grad, True


def init_projection(n: int, k: int, seed: int) -> np.ndarray:
    return random_projection(n, k, np.random.default_rng(seed))


def _check_sample(sample):
    if not sample:
        raise ValueError("empty sample")
    n = sample[0].n
    for i, inst in enumerate(sample):
        if inst.n != n:
            raise ValueError(f"instance {i} has n={inst.n}, expected {n}")
        bad = validate_instance(inst)
        if bad:
            raise ValueError(f"instance {i} is invalid: {'; '.join(bad)}")
    return n


def _loss_fn(cfg):
    if cfg.loss_kind == "objective":
        return lambda inst, P: value_and_grad(inst, P, cfg.gamma)
    return lambda inst, P: (matching_loss(inst, P), matching_grad(inst, P)[0])


def evaluate(sample, P, cfg: TrainConfig):
    """Per-instance losses and gradients at ``P`` (deterministic order)."""
    f = _loss_fn(cfg)

    def one(item):
        i, inst = item
        try:
            return f(inst, P)
        except (OracleError, ValueError, np.linalg.LinAlgError) as e:
            raise OracleError(f"instance {i}: {e}") from e

    out = pmap(one, list(enumerate(sample)))
    return np.array([v for v, _ in out]), [g for _, g in out]


def train(sample, cfg: TrainConfig, init=None, structure=None) -> TrainReport:
    """Fixed-step gradient descent on the mean empirical loss.

    ``structure`` (see :mod:`qproject.structure`) turns the update into
    projected gradient descent on a constrained class of matrices. Without
    it, columns are re-orthonormalized whenever the relative smallest
    singular value drops below ``cfg.rank_floor``; the projected problem only
    depends on ``range(P)``, so this leaves every loss unchanged.
    """
    n = _check_sample(sample)
    rng = np.random.default_rng(cfg.seed)
    if init is not None:
        P = np.array(as_projection(init), dtype=float)
    elif structure is not None:
        P = structure.init(rng)
    else:
        P = random_projection(n, cfg.k, rng)
    if P.shape != (n, cfg.k):
        raise ValueError(f"initial P has shape {P.shape}, expected ({n}, {cfg.k})")
    trace = []
    reorth = 0
    for t in range(cfg.iters + 1):
        losses, grads = evaluate(sample, P, cfg)
        trace.append((t, float(losses.mean())))
        log.debug("iter %d mean loss %.6g", t, trace[-1][1])
        if t == cfg.iters:
            break
        P = P - cfg.step_size * np.mean(grads, axis=0)
        if structure is not None:
            P = structure.project(P)
            continue
        s = np.linalg.svd(P, compute_uv=False)
        if s[-1] < cfg.rank_floor * s[0]:
            P = orthonormalize(P)
            reorth += 1
    return TrainReport(loss_trace=trace, final_P=P, per_instance_final=losses.tolist(), reorthonormalized=reorth)


def report_from_json(d: dict) -> TrainReport:
    P = np.array(d["P"], dtype=float).reshape(d["shape"])
    return TrainReport(loss_trace=[tuple(x) for x in d["trace"]], final_P=P, per_instance_final=d["per_instance"])
