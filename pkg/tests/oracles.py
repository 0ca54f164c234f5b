"""Independent reference computations used to freeze expected values.

Nothing here imports the active-set machinery; the dual solver below only
needs ``numpy`` and serves as the third opinion in oracle cross-checks.
"""
import numpy as np

from qproject.instances import GenSpec, generate
from qproject.core import project, random_projection


def dual_fista(pqps, max_steps=100_000, tol=1e-13):
    """Batched accelerated projected gradient on the QP duals.

    For ``min 1/2 y'Qy + c'y  s.t.  Ay <= b`` with ``Q`` positive definite the
    dual is ``min_{lam >= 0} 1/2 lam'M lam + q'lam`` with ``M = A Q^-1 A'``
    and ``q = b + A Q^-1 c``; the primal value is minus the dual value minus
    ``1/2 c'Q^-1 c``. Problems are padded to a common ``m`` with inert rows
    (zero ``M`` row, ``q = 1``) so every step is one batched matmul.
    """
    N = len(pqps)
    mmax = max(p.m for p in pqps)
    M = np.zeros((N, mmax, mmax))
    q = np.ones((N, mmax))
    const = np.zeros(N)
    for i, p in enumerate(pqps):
        Qi = np.linalg.inv(p.Qt)
        M[i, : p.m, : p.m] = p.At @ Qi @ p.At.T
        q[i, : p.m] = p.b + p.At @ Qi @ p.ct
        const[i] = 0.5 * p.ct @ Qi @ p.ct
    L = np.linalg.eigvalsh(M)[:, -1].clip(min=1e-12)[:, None]

    def f(lam):
        return 0.5 * np.einsum("ni,nij,nj->n", lam, M, lam) + np.einsum("ni,ni->n", q, lam)

    lam = np.zeros((N, mmax))
    z, t = lam.copy(), np.ones(N)
    for step in range(max_steps):
        grad = np.einsum("nij,nj->ni", M, z) + q
        new = np.maximum(z - grad / L, 0.0)
        t_new = (1 + np.sqrt(1 + 4 * t * t)) / 2
        mom = ((t - 1) / t_new)[:, None]
        # restart momentum where the objective went up
        restart = f(new) > f(lam)
        mom[restart] = 0.0
        t_new[restart] = 1.0
        z = new + mom * (new - lam)
        moved = np.abs(new - lam).max()
        lam, t = new, t_new
        if step > 10 and moved < tol:
            break
    return -(f(lam) + const), lam, step + 1


def pd_suite(count=100, seed=0):
    """Seeded random PD projected problems with n <= 4, m <= 8, k <= 3."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(2 * n, 9))
        k = int(rng.integers(1, min(n, 3) + 1))
        inst = generate(GenSpec("random_pd", n=n, m=m, k=k, seed=seed * 1000 + i))[0]
        P = random_projection(n, k, rng)
        out.append((inst, P, project(inst, P)))
    return out
