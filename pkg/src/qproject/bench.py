"""Held-out comparison of random, learned and input-aware projections."""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from .core import random_projection
from .learn import OracleError, TrainConfig, objective_loss, train
from .netproj import forward, train_input_aware

CAPS = {"n": 12, "m": 16, "k": 4}
CSV_FIELDS = ("method", "k", "mean_loss", "mean_gap", "wall_time")


@dataclass
class BenchReport:
    rows: list
    split: tuple
    seeds: list
    per_instance: dict = field(default_factory=dict)

    def to_json(self, timing: bool = True) -> dict:
        rows = [dict(r) for r in self.rows]
        per = {key: dict(v) for key, v in self.per_instance.items()}
        if not timing:
            for r in rows:
                r.pop("wall_time", None)
            for v in per.values():
                v.pop("wall_time", None)
        return {"rows": rows, "split": list(self.split), "seeds": list(self.seeds), "per_instance": per}

    def to_csv(self, timing: bool = True) -> str:
        buf = io.StringIO()
        fields = [f for f in CSV_FIELDS if timing or f != "wall_time"]
        w = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow(r)
        return buf.getvalue()


def _timed_losses(test, Ps, gamma, method):
    losses, elapsed = [], 0.0
    for i, (inst, P) in enumerate(zip(test, Ps)):
        t0 = time.perf_counter()
        try:
            losses.append(objective_loss(inst, P, gamma))
        except (OracleError, ValueError) as e:
            raise OracleError(f"{method}: test instance {i}: {e}") from e
        elapsed += time.perf_counter() - t0
    return np.array(losses), elapsed / max(len(test), 1)


def run_bench(train_set, test_set, ks, cfg: TrainConfig, structure=None, net_widths=(64, 64),
              include_identity=True, caps=CAPS) -> BenchReport:
    """Evaluate each method for every ``k`` in ``ks`` on ``test_set``.

    ``OPT`` is the identity-projection value on the same perturbed instance,
    so every reported gap is nonnegative up to solver tolerance. Passing
    ``net_widths=None`` skips the input-aware method.
    """
    if not train_set or not test_set:
        raise ValueError("empty split")
    n, m = test_set[0].n, test_set[0].m
    if n > caps["n"] or m > caps["m"] or max(ks) > caps["k"]:
        raise ValueError(f"bench caps exceeded (n={n}, m={m}, k={max(ks)}; caps {caps})")
    gamma = cfg.gamma
    opt = np.array([objective_loss(inst, np.eye(n), gamma) for inst in test_set])
    rows, per = [], {}

    def record(method, k, losses, wall):
        gaps = losses - opt
        rows.append({"method": method, "k": k, "mean_loss": float(losses.mean()),
                     "mean_gap": float(gaps.mean()), "wall_time": wall})
        per[f"{method}/k={k}"] = {"loss": losses.tolist(), "gap": gaps.tolist(), "wall_time": wall}

    if include_identity:
        losses, wall = _timed_losses(test_set, [np.eye(n)] * len(test_set), gamma, "identity")
        record("identity", n, losses, wall)
    for k in ks:
        kcfg = TrainConfig(**{**cfg.__dict__, "k": k})
        rng = np.random.default_rng(cfg.seed)
        P_rand = structure.random(rng) if structure is not None else random_projection(n, k, rng)
        losses, wall = _timed_losses(test_set, [P_rand] * len(test_set), gamma, "random")
        record("random", k, losses, wall)

        # unstructured learning starts from the random baseline itself
        init = None if structure is not None else P_rand
        rep = train(train_set, kcfg, init=init, structure=structure)
        losses, wall = _timed_losses(test_set, [rep.final_P] * len(test_set), gamma, "learned")
        record("learned", k, losses, wall)

        if net_widths is not None:
            net, _ = train_input_aware(train_set, list(net_widths), kcfg, structure=structure)
            Ps = [forward(net, inst, structure) for inst in test_set]
            losses, wall = _timed_losses(test_set, Ps, gamma, "input_aware")
            record("input_aware", k, losses, wall)
    return BenchReport(rows=rows, split=(len(train_set), len(test_set)), seeds=[cfg.seed], per_instance=per)
