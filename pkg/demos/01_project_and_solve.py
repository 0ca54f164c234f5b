# Projecting a small QP and solving it exactly.
#
# We take x^2 - 2x on [-1, 1] first, then a 2-d box problem squeezed
# through two different one-column projections.

import numpy as np

from qproject import QpInstance, project, solve_enumerate
from qproject.oracle import kkt_residuals, solve_for_solution

inst = QpInstance(Q=[[2.0]], c=[-2.0], A=[[1.0], [-1.0]], b=[1.0, 1.0])
res = solve_enumerate(project(inst, np.eye(1)))
print("1-d value", res.value, "at y =", res.y, "active", res.active)

# 1/2 |x|^2 - x_1 on the unit box. The optimum is x* = (1, 0).
box = QpInstance(Q=np.eye(2), c=[-1.0, 0.0], A=np.vstack([np.eye(2), -np.eye(2)]), b=np.ones(4))
for P in (np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])):
    pqp = project(box, P)
    res, x = solve_for_solution(pqp, P)
    print(f"P = {P.ravel()}: value {res.value:+.3f}, recovered x = {x}")
    print("   residuals", {k: f"{v:.0e}" for k, v in kkt_residuals(pqp, res.y, res.lambda_full).items()})

# The second projection misses the e_1 direction, so the best it can do is
# the origin with value 0. Any projected value sits between OPT and 0.
