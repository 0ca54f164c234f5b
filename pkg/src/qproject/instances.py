"""Instance generators and the JSON instance format.

Every random family contains the box rows ``+-I`` with offset ``B``, so the
feasible region lies in a ball of radius ``B sqrt(n)``. The ``lower_bound``
family is the shattering construction: ``Q = 0``, ``c_r = [e_r; 0]``,
``A = [0 I_2k]``, ``b_s = [e_s; 0]``.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .core import QpInstance, objective_bound, validate_instance

FAMILIES = ("random_pd", "random_psd", "lowrank_plus_box", "lower_bound_family")
_ALIASES = {"lower_bound": "lower_bound_family", "pd": "random_pd", "psd": "random_psd", "lowrank": "lowrank_plus_box"}


class SchemaError(ValueError):
    """Malformed instance or manifest file."""


@dataclass(frozen=True)
class GenSpec:
    family: str = "random_pd"
    n: int = 4
    m: int = 8
    k: int = 1
    box_bound: float = 1.0
    seed: int = 0
    count: int = 1

    def __post_init__(self):
        fam = _ALIASES.get(self.family, self.family)
        object.__setattr__(self, "family", fam)
        if fam not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.n < 1 or self.k < 1 or self.count < 0:
            raise ValueError("n and k must be positive, count nonnegative")
        if not self.box_bound > 0:
            raise ValueError("box_bound must be positive")
        if fam == "lower_bound_family":
            if not self.n > 2 * self.k:
                raise ValueError(f"lower_bound_family needs n > 2k, got n={self.n}, k={self.k}")
            object.__setattr__(self, "m", 2 * self.k)
        elif self.m < 2 * self.n:
            raise ValueError(f"{fam} includes 2n={2 * self.n} box rows; m={self.m} is too small")


def _box_rows(n, B):
    return np.vstack([np.eye(n), -np.eye(n)]), np.full(2 * n, float(B))


def _extra_rows(rng, count, n):
    if count == 0:
        return np.zeros((0, n)), np.zeros(0)
    G = rng.standard_normal((count, n))
    G /= np.linalg.norm(G, axis=1, keepdims=True)
    return G, rng.uniform(0.1, 1.0, size=count)


def _unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def _finish(spec, index, Q, c, extra=(np.zeros((0, 0)), np.zeros(0))):
    n, B = spec.n, spec.box_bound
    A, b = _box_rows(n, B)
    if len(extra[1]):
        A = np.vstack([A, extra[0]])
        b = np.concatenate([b, extra[1]])
    Q = 0.5 * (Q + Q.T)
    R = B * np.sqrt(n)
    meta = {"family": spec.family, "seed": spec.seed + index, "index": index, "box_bound": B,
            "radius_source": "box rows"}
    return QpInstance(Q=Q, c=c, A=A, b=b, R=R, H=objective_bound(Q, c, R), meta=meta)


def _random_pd(spec, index):
    rng = np.random.default_rng(spec.seed + index)
    n = spec.n
    G = rng.standard_normal((n, n))
    Q = G.T @ G + 1e-3 * np.eye(n)
    Q /= np.linalg.eigvalsh(Q)[-1]
    c = _unit(rng, n)
    return _finish(spec, index, Q, c, _extra_rows(rng, spec.m - 2 * n, n))


def _random_psd(spec, index):
    rng = np.random.default_rng(spec.seed + index)
    n = spec.n
    G = rng.standard_normal((max(1, n // 2), n))
    Q = G.T @ G
    Q /= np.linalg.eigvalsh(Q)[-1]
    c = _unit(rng, n)
    return _finish(spec, index, Q, c, _extra_rows(rng, spec.m - 2 * n, n))


def _lowrank_plus_box(spec, index, basis):
    # the subspace is shared by the whole batch, so a learned P can find it
    rng = np.random.default_rng(spec.seed + index)
    n, r = spec.n, basis.shape[1]
    d = rng.uniform(0.5, 1.0, size=r)
    Q = (basis * d) @ basis.T + 1e-2 * np.eye(n)
    Q /= np.linalg.eigvalsh(Q)[-1]
    c = basis @ rng.standard_normal(r) + 0.05 * rng.standard_normal(n)
    c /= np.linalg.norm(c)
    return _finish(spec, index, Q, c, _extra_rows(rng, spec.m - 2 * n, n))


def lower_bound_instance(n: int, k: int, r: int, s: int) -> QpInstance:
    """Instance ``pi_{r,s}`` (0-based ``r < n-2k``, ``s < k``)."""
    if not (0 <= r < n - 2 * k and 0 <= s < k):
        raise ValueError(f"(r, s)=({r}, {s}) out of range for n={n}, k={k}")
    c = np.zeros(n)
    c[r] = 1.0
    A = np.hstack([np.zeros((2 * k, n - 2 * k)), np.eye(2 * k)])
    b = np.zeros(2 * k)
    b[s] = 1.0
    # R bounds |P y| over P = [T; I; -I] with T in [-1, 0]; the instance itself is unbounded in x_r
    meta = {"family": "lower_bound_family", "r": r, "s": s, "radius_source": "structured projection class"}
    return QpInstance(Q=np.zeros((n, n)), c=c, A=A, b=b, R=np.sqrt(n - 2 * k + 2), H=1.0, meta=meta)


def generate(spec: GenSpec) -> list[QpInstance]:
    """Generate instances; each random instance ``i`` uses seed ``spec.seed + i``."""
    if spec.family == "lower_bound_family":
        n, k = spec.n, spec.k
        out = [lower_bound_instance(n, k, r, s) for r in range(n - 2 * k) for s in range(k)]
    elif spec.family == "lowrank_plus_box":
        rng = np.random.default_rng(spec.seed)
        r = max(1, min(spec.k, spec.n))
        basis = np.linalg.qr(rng.standard_normal((spec.n, r)))[0]
        out = [_lowrank_plus_box(spec, i, basis) for i in range(spec.count)]
    else:
        make = _random_pd if spec.family == "random_pd" else _random_psd
        out = [make(spec, i) for i in range(spec.count)]
    for inst in out:
        bad = validate_instance(inst)
        assert not bad, bad
    return out


def lower_bound_projection(T) -> np.ndarray:
    """Stack ``[T; I_k; -I_k]`` for a ``{0, -1}``-valued ``T``."""
    T = np.asarray(T, dtype=float)
    if T.ndim != 2:
        raise ValueError("T must be a matrix")
    if not np.all(np.isin(T, (0.0, -1.0))):
        raise ValueError("T entries must be 0 or -1")
    k = T.shape[1]
    return np.vstack([T, np.eye(k), -np.eye(k)])


# -- serialization ---------------------------------------------------------

def to_dict(inst: QpInstance) -> dict:
    d = {
        "n": inst.n,
        "m": inst.m,
        "Q": inst.Q.ravel().tolist(),
        "c": inst.c.tolist(),
        "A": inst.A.ravel().tolist(),
        "b": inst.b.tolist(),
        "R": inst.R,
        "H": inst.H,
    }
    if inst.meta:
        d["meta"] = inst.meta
    return d


def _matrix(d, key, rows, cols, where):
    val = d[key]
    if not isinstance(val, list):
        raise SchemaError(f"{where}: field {key!r} must be an array")
    if val and isinstance(val[0], list):
        if len(val) != rows or any(not isinstance(r, list) or len(r) != cols for r in val):
            raise SchemaError(f"{where}: field {key!r} is not a rectangular {rows}x{cols} array")
        val = [x for r in val for x in r]
    if len(val) != rows * cols:
        raise SchemaError(f"{where}: field {key!r} has {len(val)} entries, expected {rows}*{cols}")
    try:
        return np.array(val, dtype=float).reshape(rows, cols)
    except (TypeError, ValueError) as e:
        raise SchemaError(f"{where}: field {key!r} has non-numeric entries") from e


def _vector(d, key, size, where):
    val = d[key]
    if not isinstance(val, list) or len(val) != size:
        raise SchemaError(f"{where}: field {key!r} must be an array of length {size}")
    try:
        return np.array(val, dtype=float)
    except (TypeError, ValueError) as e:
        raise SchemaError(f"{where}: field {key!r} has non-numeric entries") from e


def from_dict(d: dict, where: str = "<dict>") -> QpInstance:
    if not isinstance(d, dict):
        raise SchemaError(f"{where}: expected a JSON object")
    for key in ("n", "m", "Q", "c", "A", "b"):
        if key not in d:
            raise SchemaError(f"{where}: missing required key {key!r}")
    n, m = d["n"], d["m"]
    if not (isinstance(n, int) and isinstance(m, int) and n >= 1 and m >= 0):
        raise SchemaError(f"{where}: 'n' and 'm' must be integers (n >= 1, m >= 0)")
    return QpInstance(
        Q=_matrix(d, "Q", n, n, where),
        c=_vector(d, "c", n, where),
        A=_matrix(d, "A", m, n, where),
        b=_vector(d, "b", m, where),
        R=d.get("R"),
        H=d.get("H"),
        meta=d.get("meta", {}),
    )


def write_json_atomic(path, obj) -> None:
    """Write ``obj`` as JSON via a temp file in the same directory and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            json.dump(obj, f, indent=1)
            f.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise SchemaError(f"{path}: cannot read ({e.strerror})") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e


def save_instance(path, inst: QpInstance) -> None:
    write_json_atomic(path, to_dict(inst))


def load_instance(path) -> QpInstance:
    return from_dict(read_json(path), where=str(path))


def save(path, instances, spec: GenSpec | None = None) -> list[Path]:
    """Write one JSON file per instance into directory ``path`` plus ``manifest.json``."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    names = []
    for i, inst in enumerate(instances):
        name = f"instance_{i:04d}.json"
        save_instance(root / name, inst)
        names.append(name)
    manifest = {"instances": names, "spec": asdict(spec) if spec else None}
    write_json_atomic(root / "manifest.json", manifest)
    return [root / n for n in names]


def load(path) -> list[QpInstance]:
    """Load a directory (via its manifest), a manifest file, or one instance file."""
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    data = read_json(path)
    if isinstance(data, dict) and "instances" in data and "Q" not in data:
        names = data["instances"]
        if not isinstance(names, list):
            raise SchemaError(f"{path}: 'instances' must be a list of file names")
        return [load_instance(path.parent / name) for name in names]
    return [from_dict(data, where=str(path))]
