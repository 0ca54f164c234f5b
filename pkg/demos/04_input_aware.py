# A network that reads the instance and emits its own P.
#
# Under a budget constraint (each column of -T sums to one), a single fixed P
# has to split its unit budget across the four lower-bound instances. A
# network that sees c can put the whole budget where each instance needs it.

from qproject import GenSpec, LowerBoundSimplex, TrainConfig, generate, train, train_input_aware

sample = generate(GenSpec("lower_bound_family", n=6, k=1))
structure = LowerBoundSimplex(6, 1)
cfg = TrainConfig(k=1, iters=200, step_size=0.5)

fixed = train(sample, cfg, structure=structure)
net, rep = train_input_aware(sample, [16], cfg, structure=structure)

print("best single P  ", round(fixed.loss_trace[-1][1], 4), "(closed form", structure.best_mean(sample), ")")
print("input-aware net", round(rep.loss_trace[-1][1], 4))
print("per instance   ", [round(v, 3) for v in rep.per_instance_final])
