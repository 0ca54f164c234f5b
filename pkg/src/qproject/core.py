"""Original, projected and perturbed QPs.

An instance is ``min 1/2 x'Qx + c'x  s.t.  Ax <= b`` with ``Q`` symmetric PSD
and the origin feasible. Substituting ``x = P y`` for a full-column-rank
``P`` (n x k) gives the projected problem in ``y``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

SYM_TOL = 1e-10
PSD_TOL = 1e-8
ORIGIN_TOL = 1e-12
RANK_TOL = 1e-8


def _frozen(a, ndim):
    arr = np.array(a, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def infer_radius(A, b) -> float:
    """Radius of the smallest origin-centred ball containing the box implied by
    coordinate rows of ``A`` (rows that are multiples of +-e_i).

    Returns ``inf`` when some coordinate is not boxed on both sides.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = A.shape[1]
    hi = np.full(n, np.inf)
    lo = np.full(n, np.inf)
    for row, bi in zip(A, b):
        nz = np.flatnonzero(row)
        if len(nz) != 1:
            continue
        j = nz[0]
        if row[j] > 0:
            hi[j] = min(hi[j], bi / row[j])
        else:
            lo[j] = min(lo[j], bi / -row[j])
    bound = np.maximum(np.abs(hi), np.abs(lo))
    if not np.all(np.isfinite(bound)):
        return float("inf")
    return float(np.linalg.norm(bound))


def objective_bound(Q, c, R) -> float:
    """Safe over-estimate of |OPT| given the feasible radius ``R``."""
    if not np.isfinite(R):
        return float("inf")
    lmax = max(np.linalg.eigvalsh(Q)[-1], 0.0) if len(Q) else 0.0
    return float(0.5 * R**2 * lmax + np.linalg.norm(c) * R)


@dataclass(frozen=True, eq=False)
class QpInstance:
    """A QP ``(Q, c, A, b)`` plus regularity metadata.

    ``R`` bounds the norm of every feasible point and ``H`` bounds ``|OPT|``.
    When omitted they are derived from box rows of ``A`` (see
    :func:`infer_radius`) and the safe bound ``R^2 lmax(Q)/2 + |c| R``.
    """

    Q: np.ndarray
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    R: float | None = None
    H: float | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "Q", _frozen(self.Q, 2))
        set_(self, "c", _frozen(self.c, 1))
        A = np.asarray(self.A, dtype=float)
        if A.ndim == 1 and A.size == 0:
            A = A.reshape(0, len(self.c))
        set_(self, "A", _frozen(A, 2))
        set_(self, "b", _frozen(self.b, 1))
        if self.R is None:
            set_(self, "R", infer_radius(self.A, self.b) if self.A.shape[1] == len(self.c) else float("inf"))
        if self.H is None:
            ok = self.Q.shape == (len(self.c), len(self.c))
            set_(self, "H", objective_bound(self.Q, self.c, self.R) if ok else float("inf"))
        set_(self, "R", float(self.R))
        set_(self, "H", float(self.H))
        set_(self, "meta", dict(self.meta))

    @property
    def n(self) -> int:
        return len(self.c)

    @property
    def m(self) -> int:
        return len(self.b)

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.Q @ x + self.c @ x)

    def replace(self, **changes) -> "QpInstance":
        fields = dict(Q=self.Q, c=self.c, A=self.A, b=self.b, R=self.R, H=self.H, meta=self.meta)
        fields.update(changes)
        return QpInstance(**fields)

    def __eq__(self, other):
        if not isinstance(other, QpInstance):
            return NotImplemented
        return (
            all(np.array_equal(getattr(self, f), getattr(other, f)) for f in "QcAb")
            and self.R == other.R
            and self.H == other.H
            and self.meta == other.meta
        )

    __hash__ = None


def as_projection(P) -> np.ndarray:
    """Validate a projection matrix and return it as a read-only float array.

    Raises ``ValueError`` when ``P`` is not 2-d, has more columns than rows,
    or is numerically rank deficient (relative smallest singular value below
    1e-8).
    """
    if isinstance(P, ProjectionMatrix):
        return P.P
    P = np.array(P, dtype=float)
    if P.ndim != 2:
        raise ValueError(f"projection must be a matrix, got shape {P.shape}")
    n, k = P.shape
    if k == 0 or k > n:
        raise ValueError(f"projection dimension k={k} must satisfy 1 <= k <= n={n}")
    s = np.linalg.svd(P, compute_uv=False)
    if not s[0] > 0 or s[-1] < RANK_TOL * s[0]:
        raise ValueError("projection matrix is not full column rank")
    P.setflags(write=False)
    return P


@dataclass(frozen=True, eq=False)
class ProjectionMatrix:
    P: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "P", as_projection(np.asarray(self.P)))

    @property
    def k(self) -> int:
        return self.P.shape[1]

    @property
    def n(self) -> int:
        return self.P.shape[0]


@dataclass(frozen=True, eq=False)
class ProjectedQp:
    """``min 1/2 y'Qt y + ct'y  s.t.  At y <= b``."""

    Qt: np.ndarray
    ct: np.ndarray
    At: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        for name, nd in (("Qt", 2), ("ct", 1), ("At", 2), ("b", 1)):
            object.__setattr__(self, name, _frozen(getattr(self, name), nd))

    @property
    def k(self) -> int:
        return len(self.ct)

    @property
    def m(self) -> int:
        return len(self.b)

    def objective(self, y) -> float:
        y = np.asarray(y, dtype=float)
        return float(0.5 * y @ self.Qt @ y + self.ct @ y)


@dataclass(frozen=True)
class PerturbSpec:
    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


def check_psd(M, tol=PSD_TOL) -> bool:
    w = np.linalg.eigvalsh(M)
    if len(w) == 0:
        return True
    scale = max(abs(w[0]), abs(w[-1]))
    return bool(w[0] >= -tol * scale)


def check_symmetric(M, tol=SYM_TOL) -> bool:
    scale = np.max(np.abs(M)) if M.size else 0.0
    return bool(np.max(np.abs(M - M.T), initial=0.0) <= tol * scale)


def validate_instance(inst: QpInstance) -> list[str]:
    """Return a list of violated regularity conditions (empty when valid)."""
    out = []
    n, m = inst.n, inst.m
    dims_ok = True
    if inst.Q.shape != (n, n):
        out.append(f"dims: Q has shape {inst.Q.shape}, expected ({n}, {n})")
        dims_ok = False
    if inst.A.shape != (m, n):
        out.append(f"dims: A has shape {inst.A.shape}, expected ({m}, {n})")
        dims_ok = False
    if not dims_ok:
        return out
    if not all(np.all(np.isfinite(a)) for a in (inst.Q, inst.c, inst.A, inst.b)):
        out.append("non-finite entries")
        return out
    if not check_symmetric(inst.Q):
        out.append("Q not symmetric")
    if not check_psd(0.5 * (inst.Q + inst.Q.T)):
        out.append("Q not PSD")
    if np.any(inst.b < -ORIGIN_TOL):
        out.append("origin infeasible (b has a negative entry)")
    if not (inst.R >= 0 and np.isfinite(inst.R)):
        out.append(f"feasible region radius R={inst.R} is not a finite nonnegative bound")
    if not (inst.H >= 0 and np.isfinite(inst.H)):
        out.append(f"objective bound H={inst.H} is not a finite nonnegative bound")
    return out


def perturb(inst: QpInstance, spec: PerturbSpec | float) -> QpInstance:
    """Tikhonov perturbation ``Q -> Q + gamma I``."""
    gamma = spec.gamma if isinstance(spec, PerturbSpec) else PerturbSpec(float(spec)).gamma
    return inst.replace(Q=inst.Q + gamma * np.eye(inst.n))


def project(inst: QpInstance, P) -> ProjectedQp:
    P = as_projection(P)
    if P.shape[0] != inst.n:
        raise ValueError(f"projection has {P.shape[0]} rows, instance has n={inst.n}")
    Qt = P.T @ inst.Q @ P
    return ProjectedQp(Qt=0.5 * (Qt + Qt.T), ct=P.T @ inst.c, At=inst.A @ P, b=inst.b)


def orthonormalize(P) -> np.ndarray:
    """Column-orthonormal basis of ``range(P)`` with a deterministic sign."""
    q, r = np.linalg.qr(np.asarray(P, dtype=float))
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d


def random_projection(n: int, k: int, rng) -> np.ndarray:
    """Gaussian ``n x k`` matrix scaled by ``1/sqrt(n)``, column-orthonormalized."""
    return orthonormalize(rng.standard_normal((n, k)) / np.sqrt(n))
