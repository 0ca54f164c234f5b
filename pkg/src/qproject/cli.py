"""Command-line entry point: ``qproject {gen,solve,train,train-net,bench,eval}``.

Exit codes: 0 success, 1 usage error, 2 data/schema error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import instances as io
from .bench import run_bench
from .core import perturb, project, random_projection, validate_instance
from .instances import GenSpec, SchemaError, write_json_atomic
from .learn import OracleError, TrainConfig, objective_loss, train
from .netproj import InputAwareNet, forward, train_input_aware
from .oracle import kkt_residuals, solve_enumerate
from .structure import LowerBoundBox, LowerBoundSimplex

EXIT_USAGE, EXIT_DATA, EXIT_SOLVER = 1, 2, 3
STRUCTURES = {"none": None, "lower_bound_box": LowerBoundBox, "lower_bound_simplex": LowerBoundSimplex}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _overrides(pairs, cls):
    names = {f.name: f.type for f in fields(cls)}
    out = {}
    for pair in pairs or []:
        key, sep, val = pair.partition("=")
        key = key.replace("-", "_")
        if not sep or key not in names:
            raise UsageError(f"bad override {pair!r}; known keys: {', '.join(names)}")
        cur = cls.__dataclass_fields__[key].default
        out[key] = type(cur)(val) if cur is not None else val
    return out


def _train_config(args) -> TrainConfig:
    base = dict(k=args.k, step_size=args.step_size, iters=args.iters, gamma=args.gamma,
                loss_kind=args.loss, seed=args.seed)
    base.update(_overrides(args.set, TrainConfig))
    return TrainConfig(**base)


def _projection(spec: str, n: int, k: int, seed: int):
    if spec == "identity":
        return np.eye(n)
    if spec == "random":
        return random_projection(n, k, np.random.default_rng(seed))
    if spec.startswith("file:"):
        d = io.read_json(spec[5:])
        if isinstance(d, dict) and "P" in d:
            P = np.array(d["P"], dtype=float)
            shape = d.get("shape")
            return P.reshape(shape) if shape else P.reshape(n, -1)
        return np.array(d, dtype=float)
    raise UsageError(f"--P must be identity, random or file:<path>, got {spec!r}")


def _structure(name, n, k):
    cls = STRUCTURES[name]
    return cls(n, k) if cls else None


def _emit(obj, out):
    if out:
        write_json_atomic(out, obj)
    else:
        print(json.dumps(obj, indent=1))


def cmd_gen(args):
    kw = dict(family=args.family, n=args.n, m=args.m if args.m is not None else 2 * args.n,
              k=args.k, box_bound=args.box_bound, seed=args.seed, count=args.count)
    kw.update(_overrides(args.set, GenSpec))
    spec = GenSpec(**kw)
    insts = io.generate(spec)
    if not args.out:
        raise UsageError("gen requires --out")
    paths = io.save(args.out, insts, spec)
    print(json.dumps({"written": len(paths), "out": str(args.out)}))


def cmd_solve(args):
    inst = _one_instance(args.instance)
    target = perturb(inst, args.gamma) if args.gamma > 0 else inst
    P = _projection(args.P, inst.n, args.k, args.seed)
    pqp = project(target, P)
    try:
        res = solve_enumerate(pqp)
    except ValueError as e:
        raise OracleError(str(e)) from e
    if not res.ok:
        raise OracleError(f"oracle status {res.status}")
    slack = args.gamma * inst.R**2 / 2
    _emit({
        "status": res.status,
        "value": res.value,
        "value_interval": [res.value - slack, res.value],
        "gamma": args.gamma,
        "y": res.y.tolist(),
        "x": (np.asarray(P) @ res.y).tolist(),
        "active": list(res.active),
        "lambda": res.lambda_full.tolist(),
        "kkt_residuals": kkt_residuals(pqp, res.y, res.lambda_full),
    }, args.out)


def _one_instance(path):
    if not path:
        raise UsageError("--instance is required")
    insts = io.load(path)
    if len(insts) != 1:
        raise UsageError(f"{path} holds {len(insts)} instances; solve expects one")
    return insts[0]


def _sample(path):
    if not path:
        raise UsageError("--instance is required")
    insts = io.load(path)
    for i, inst in enumerate(insts):
        bad = validate_instance(inst)
        if bad:
            raise SchemaError(f"{path}: instance {i}: {'; '.join(bad)}")
    return insts


def cmd_train(args):
    sample = _sample(args.instance)
    cfg = _train_config(args)
    rep = train(sample, cfg, structure=_structure(args.structure, sample[0].n, cfg.k))
    _emit({"config": asdict(cfg), **rep.to_json()}, args.out)


def cmd_train_net(args):
    sample = _sample(args.instance)
    cfg = _train_config(args)
    widths = [int(w) for w in args.widths.split(",") if w]
    net, rep = train_input_aware(sample, widths, cfg, structure=_structure(args.structure, sample[0].n, cfg.k))
    if not args.out:
        raise UsageError("train-net requires --out (a directory)")
    out = Path(args.out)
    write_json_atomic(out / "net.json", net.to_json())
    write_json_atomic(out / "report.json", {"config": asdict(cfg), "widths": net.widths, **rep.to_json()})
    print(json.dumps({"out": str(out), "final_loss": rep.loss_trace[-1][1]}))


def cmd_bench(args):
    train_set = _sample(args.instance)
    test_set = _sample(args.test) if args.test else train_set
    cfg = _train_config(args)
    ks = [int(k) for k in args.ks.split(",")] if args.ks else [cfg.k]
    widths = [int(w) for w in args.widths.split(",") if w] if args.widths else None
    rep = run_bench(train_set, test_set, ks, cfg, structure=_structure(args.structure, train_set[0].n, max(ks)),
                    net_widths=widths)
    if not args.out:
        raise UsageError("bench requires --out (a directory)")
    out = Path(args.out)
    write_json_atomic(out / "bench.json", rep.to_json(timing=not args.no_timing))
    out.mkdir(parents=True, exist_ok=True)
    tmp = out / ".bench.csv.tmp"
    tmp.write_text(rep.to_csv(timing=not args.no_timing))
    tmp.replace(out / "bench.csv")
    print(rep.to_csv(timing=not args.no_timing), end="")


def cmd_eval(args):
    sample = _sample(args.instance)
    n = sample[0].n
    if args.net:
        net = InputAwareNet.from_json(io.read_json(args.net))
        structure = _structure(args.structure, n, net.widths[-1] // n)
        Ps = [forward(net, inst, structure) for inst in sample]
    else:
        Ps = [_projection(args.P, n, args.k, args.seed)] * len(sample)
    losses = [objective_loss(inst, P, args.gamma) for inst, P in zip(sample, Ps)]
    _emit({"gamma": args.gamma, "losses": losses, "mean_loss": float(np.mean(losses))}, args.out)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qproject", description="Data-driven projections for convex QPs.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, gamma=1e-6):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--k", type=int, default=1)
        sp.add_argument("--gamma", type=float, default=gamma, help="Tikhonov weight (default %(default)g)")
        sp.add_argument("--out", default=None)
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field")

    def training(sp):
        sp.add_argument("--instance", help="instance directory, manifest or file")
        sp.add_argument("--step-size", type=float, default=1e-2)
        sp.add_argument("--iters", type=int, default=100)
        sp.add_argument("--loss", choices=("objective", "matching"), default="objective")
        sp.add_argument("--structure", choices=tuple(STRUCTURES), default="none")

    g = sub.add_parser("gen", help="generate instances")
    common(g)
    g.add_argument("--family", default="random_pd")
    g.add_argument("--n", type=int, default=4)
    g.add_argument("--m", type=int, default=None)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--box-bound", type=float, default=1.0)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve one projected instance")
    common(s)
    s.add_argument("--instance")
    s.add_argument("--P", default="identity", help="identity | random | file:<path>")
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("train", help="learn a projection matrix")
    common(t)
    training(t)
    t.set_defaults(func=cmd_train)

    tn = sub.add_parser("train-net", help="learn an input-aware projection network")
    common(tn)
    training(tn)
    tn.add_argument("--widths", default="64,64")
    tn.set_defaults(func=cmd_train_net)

    b = sub.add_parser("bench", help="compare projections on held-out instances")
    common(b)
    training(b)
    b.add_argument("--test", help="test instances (default: the training set)")
    b.add_argument("--ks", default=None, help="comma-separated projection dimensions")
    b.add_argument("--widths", default="", help="hidden widths for the input-aware method (empty: skip)")
    b.add_argument("--no-timing", action="store_true", help="omit wall-clock fields")
    b.set_defaults(func=cmd_bench)

    e = sub.add_parser("eval", help="evaluate a projection or network on instances")
    common(e)
    e.add_argument("--instance")
    e.add_argument("--P", default="identity")
    e.add_argument("--net", default=None, help="network checkpoint JSON")
    e.add_argument("--structure", choices=tuple(STRUCTURES), default="none")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            parser.print_usage(sys.stderr)
            raise UsageError("a subcommand is required")
        args.func(args)
    except UsageError as e:
        print(f"qproject: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except OracleError as e:
        print(f"qproject: solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except (SchemaError, ValueError, OSError) as e:
        print(f"qproject: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
