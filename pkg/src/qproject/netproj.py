"""Input-aware projections: a ReLU MLP from a flattened instance to ``P``.

The network maps ``flatten(inst)`` (``Q`` row-major, then ``c``, ``A``
row-major, ``b``; length ``n^2 + n + nm + m``) to ``n*k`` numbers, reshaped
row-major into ``P``. Training backpropagates the envelope gradient of the
projected optimal value through the network.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import QpInstance, RANK_TOL, random_projection
from .learn import TrainConfig, TrainReport, _check_sample, _loss_fn, OracleError
from .parallel import pmap


def flat_size(n: int, m: int) -> int:
    return n * n + n + n * m + m


def flatten(inst: QpInstance) -> np.ndarray:
    return np.concatenate([inst.Q.ravel(), inst.c, inst.A.ravel(), inst.b])


@dataclass
class InputAwareNet:
    """Fully connected network with ReLU on every hidden layer.

    ``weights[i]`` has shape ``(widths[i+1], widths[i])``.
    """

    widths: list
    weights: list
    biases: list
    repairs: int = field(default=0, compare=False)

    def __post_init__(self):
        self.widths = [int(w) for w in self.widths]
        if len(self.widths) < 2:
            raise ValueError("need at least input and output widths")
        if len(self.weights) != len(self.widths) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("one weight matrix and bias per layer required")
        self.weights = [np.array(W, dtype=float) for W in self.weights]
        self.biases = [np.array(b, dtype=float) for b in self.biases]
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (self.widths[i + 1], self.widths[i]) or b.shape != (self.widths[i + 1],):
                raise ValueError(f"layer {i}: W{W.shape} / b{b.shape} inconsistent with widths {self.widths}")

    @property
    def theta_count(self) -> int:
        return sum(W.size + b.size for W, b in zip(self.weights, self.biases))

    @property
    def hidden_units(self) -> int:
        return sum(self.widths[1:-1])

    @classmethod
    def create(cls, n, m, k, hidden=(64, 64), seed=0, out_bias=None, out_scale=0.1):
        """He-initialized network; the output bias defaults to a random orthonormal ``P``."""
        rng = np.random.default_rng(seed)
        widths = [flat_size(n, m), *hidden, n * k]
        weights, biases = [], []
        for i in range(len(widths) - 1):
            W = rng.standard_normal((widths[i + 1], widths[i])) * np.sqrt(2.0 / widths[i])
            weights.append(W)
            biases.append(np.zeros(widths[i + 1]))
        weights[-1] *= out_scale
        if out_bias is None:
            out_bias = random_projection(n, k, rng)
        biases[-1] = np.asarray(out_bias, dtype=float).ravel().copy()
        return cls(widths, weights, biases)

    @classmethod
    def constant(cls, widths, P):
        """All weights zero; every input maps to ``P``."""
        weights = [np.zeros((widths[i + 1], widths[i])) for i in range(len(widths) - 1)]
        biases = [np.zeros(w) for w in widths[1:]]
        biases[-1] = np.asarray(P, dtype=float).ravel().copy()
        return cls(list(widths), weights, biases)

    def params(self):
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def raw(self, x):
        """Output vector and the pre-activations needed by :meth:`backward`."""
        acts, pre = [np.asarray(x, dtype=float)], []
        h = acts[0]
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = W @ h + b
            pre.append(z)
            h = z if i == last else np.maximum(z, 0.0)
            acts.append(h)
        return h, (acts, pre)

    def backward(self, cache, d_out):
        """Gradients ``[dW0, db0, dW1, db1, ...]`` for an upstream output gradient."""
        acts, pre = cache
        grads = []
        d = np.asarray(d_out, dtype=float)
        for i in range(len(self.weights) - 1, -1, -1):
            if i != len(self.weights) - 1:
                d = d * (pre[i] > 0)
            grads.append(d.copy())
            grads.append(np.outer(d, acts[i]))
            d = self.weights[i].T @ d
        grads.reverse()
        return grads

    def to_json(self) -> dict:
        return {
            "widths": self.widths,
            "layers": [{"W": W.ravel().tolist(), "b": b.tolist()} for W, b in zip(self.weights, self.biases)],
        }

    @classmethod
    def from_json(cls, d):
        widths = d["widths"]
        weights = [np.array(L["W"], dtype=float).reshape(widths[i + 1], widths[i]) for i, L in enumerate(d["layers"])]
        return cls(widths, weights, [L["b"] for L in d["layers"]])


def repair_rank(P):
    """Nudge a numerically rank-deficient ``P`` by ``1e-6 |P|`` times ``[I_k; 0]``."""
    s = np.linalg.svd(P, compute_uv=False)
    if s[0] > 0 and s[-1] >= RANK_TOL * s[0]:
        return P, False
    n, k = P.shape
    eps = 1e-6 * max(np.linalg.norm(P), 1.0)
    return P + eps * np.eye(n, k), True


def _to_projection(net, inst, k, structure):
    out, cache = net.raw(flatten(inst))
    raw = out.reshape(inst.n, k)
    if structure is not None:
        return structure.from_raw(raw), raw, cache, False
    P, repaired = repair_rank(raw)
    return P, raw, cache, repaired


def forward(net: InputAwareNet, inst: QpInstance, structure=None) -> np.ndarray:
    if net.widths[0] != flat_size(inst.n, inst.m):
        raise ValueError(f"network expects input size {net.widths[0]}, instance flattens to {flat_size(inst.n, inst.m)}")
    if net.widths[-1] % inst.n:
        raise ValueError(f"network output size {net.widths[-1]} is not a multiple of n={inst.n}")
    P, _, _, repaired = _to_projection(net, inst, net.widths[-1] // inst.n, structure)
    if repaired:
        net.repairs += 1
    return P


def loss_and_grads(net, sample, cfg: TrainConfig, structure=None):
    """Per-instance losses and the mean gradient w.r.t. every parameter."""
    f = _loss_fn(cfg)
    k = net.widths[-1] // sample[0].n

    def one(item):
        i, inst = item
        P, raw, cache, repaired = _to_projection(net, inst, k, structure)
        try:
            val, dP = f(inst, P)
        except (OracleError, ValueError, np.linalg.LinAlgError) as e:
            raise OracleError(f"instance {i}: {e}") from e
        draw = structure.raw_grad(raw, dP) if structure is not None else dP
        return val, net.backward(cache, draw.ravel()), repaired

    out = pmap(one, list(enumerate(sample)))
    losses = np.array([v for v, _, _ in out])
    grads = [np.mean([g[j] for _, g, _ in out], axis=0) for j in range(len(out[0][1]))]
    net.repairs += sum(r for _, _, r in out)
    return losses, grads


def train_input_aware(sample, widths, cfg: TrainConfig, structure=None, net=None):
    """Gradient descent on the mean loss of ``P = f_theta(flatten(inst))``.

    ``widths`` are the hidden-layer widths. Returns ``(net, report)``; the
    report's ``final_P`` stacks the per-instance projections.
    """
    n = _check_sample(sample)
    m = sample[0].m
    if any(inst.m != m for inst in sample):
        raise ValueError("all instances must share m")
    if net is None:
        out_bias = np.zeros((n, cfg.k)) if structure is not None else None
        net = InputAwareNet.create(n, m, cfg.k, hidden=widths, seed=cfg.seed, out_bias=out_bias)
    if net.widths[0] != flat_size(n, m) or net.widths[-1] != n * cfg.k:
        raise ValueError(f"network widths {net.widths} do not match n={n}, m={m}, k={cfg.k}")
    trace = []
    for t in range(cfg.iters + 1):
        losses, grads = loss_and_grads(net, sample, cfg, structure)
        trace.append((t, float(losses.mean())))
        if t == cfg.iters:
            break
        for p, g in zip(net.params(), grads):
            p -= cfg.step_size * g
    Ps = np.stack([forward(net, inst, structure) for inst in sample])
    report = TrainReport(loss_trace=trace, final_P=Ps, per_instance_final=losses.tolist(),
                         extra={"rank_repairs": net.repairs})
    return net, report
