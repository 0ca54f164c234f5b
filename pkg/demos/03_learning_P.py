# Learning a projection matrix by gradient descent on the mean optimal value.
#
# Instances share a low-dimensional subspace for Q and c, so a good P should
# find it and beat a random projection of the same width.

import numpy as np

from qproject import GenSpec, TrainConfig, generate, objective_loss, random_projection, train

data = generate(GenSpec("lowrank_plus_box", n=8, m=16, k=2, count=30, seed=1))
tr, te = data[:20], data[20:]

cfg = TrainConfig(k=2, step_size=0.1, iters=60, seed=0)
P0 = random_projection(8, 2, np.random.default_rng(cfg.seed))
rep = train(tr, cfg, init=P0)
for t, v in rep.loss_trace[::10]:
    print(f"iter {t:3d}  mean train loss {v:+.4f}")

opt = np.mean([objective_loss(i, np.eye(8), cfg.gamma) for i in te])
rand = np.mean([objective_loss(i, P0, cfg.gamma) for i in te])
learned = np.mean([objective_loss(i, rep.final_P, cfg.gamma) for i in te])
print(f"test: OPT {opt:+.4f}   random {rand:+.4f}   learned {learned:+.4f}")
