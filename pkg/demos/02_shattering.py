# The lower-bound family: four LP instances whose projected value can be
# switched between 0 and -1 independently by choosing T in P = [T; I; -I].

import itertools

import numpy as np

from qproject import GenSpec, generate, lower_bound_projection, objective_loss

insts = generate(GenSpec("lower_bound_family", n=6, k=1))
gamma = 1e-8  # Q = 0, so a tiny ridge keeps the solver's strict convexity

seen = set()
for pattern in itertools.product([0.0, -1.0], repeat=4):
    P = lower_bound_projection(np.array(pattern).reshape(4, 1))
    values = [objective_loss(i, P, gamma) for i in insts]
    below = tuple(v <= -0.5 for v in values)
    seen.add(below)
    print(pattern, "->", np.round(values, 6))

print(len(seen), "of 16 labelings realized")
