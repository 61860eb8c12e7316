"""Seeded instance generation and the JSON instance format.

Random numbers come from numpy's counter-based Philox generator seeded
with the 64-bit ``InstanceSpec.seed``; draws happen in a fixed order
(frame, unitary, controller spectrum, K, T, isometry, M, perturbation), so
a spec determines its instance bit for bit on a given platform.

File format (version 1)::

    {"version": 1, "d": d, "n": n, "m": m,
     "frame": [vector_1, ..., vector_m],      # vector = n blocks, block = d x d
     "C": nd x nd, "K": nd x nd,
     "extras": {"T": ..., "T_iso": ..., "M": ..., "G": [vectors]},
     "spec": {...} | null}

Complex numbers are ``[re, im]`` pairs and matrices are row-major nested
lists.  Floats are written with ``repr``, which round-trips exactly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import ModuleOperator, UsageError, adjoint
from .frames import FrameSystem

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """A malformed or unsupported instance file."""


@dataclass(frozen=True)
class InstanceSpec:
    d: int
    n: int
    m: int
    seed: int = 0
    commuting_CK: bool = True
    K_rank: int | None = None
    C_condition: float = 4.0
    make_tight: bool = False
    # C (and K, T, M when commuting_CK) share the eigenbasis of the Gram
    # matrix, so that S_C = C S is self-adjoint
    commuting_CS: bool = True

    def __post_init__(self):
        for name in ("d", "n", "m"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise UsageError(f"{name} must be a positive integer, got {value!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise UsageError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        nd = self.n * self.d
        if self.K_rank is not None and not 0 <= self.K_rank <= nd:
            raise UsageError(f"K_rank={self.K_rank} outside [0, nd={nd}]")
        if not self.C_condition >= 1.0:
            raise UsageError(f"C_condition must be >= 1, got {self.C_condition}")
        if self.make_tight and self.m < self.n:
            raise UsageError("make_tight needs m >= n so that the Gram matrix is invertible")

    @property
    def rank_K(self) -> int:
        return self.n * self.d if self.K_rank is None else self.K_rank

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "InstanceSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SchemaError(f"unknown spec fields {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True, eq=False)
class Instance:
    F: FrameSystem
    C: ModuleOperator
    K: ModuleOperator
    T: ModuleOperator | None = None
    T_iso: ModuleOperator | None = None
    M: ModuleOperator | None = None
    G: FrameSystem | None = None
    spec: InstanceSpec | None = None
    bounds: tuple[float, float] | None = None
    label: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.F.d

    @property
    def n(self) -> int:
        return self.F.n

    @property
    def m(self) -> int:
        return self.F.m

    def for_theorem(self, theorem_id: str) -> "Instance":
        """The operands a theorem row expects; the isometry row gets ``T_iso``."""
        if theorem_id == "isometry_transfer" and self.T_iso is not None:
            return dataclasses.replace(self, T=self.T_iso)
        return self


# ---------------------------------------------------------------------------
# generation


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def _cgauss(rng, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_unitary(rng, size: int) -> np.ndarray:
    q, r = np.linalg.qr(_cgauss(rng, (size, size)))
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def _in_basis(V: np.ndarray, diag: np.ndarray) -> np.ndarray:
    return (V * diag) @ adjoint(V)


def gen_instance(spec: InstanceSpec) -> Instance:
    d, n, m = spec.d, spec.n, spec.m
    nd = n * d
    rng = make_rng(spec.seed)

    psi = _cgauss(rng, (m * d, nd))
    if spec.make_tight:
        # right-multiplying by G^{-1/2} turns the analysis map into a co-isometry
        w, v = np.linalg.eigh(adjoint(psi) @ psi)
        psi = psi @ _in_basis(v, 1.0 / np.sqrt(w))
    F = FrameSystem.from_stacked(psi, d)

    Q = random_unitary(rng, nd)
    if spec.commuting_CS and not spec.make_tight:
        V = np.linalg.eigh(F.gram)[1]
    else:
        V = Q

    u = rng.uniform(0.0, 1.0, nd)
    if nd > 1:
        u[np.argmin(u)], u[np.argmax(u)] = 0.0, 1.0
    c = np.exp(u * np.log(spec.C_condition))
    C = ModuleOperator(_in_basis(V, c), d)

    k = _cgauss(rng, nd)
    k[rng.permutation(nd)[spec.rank_K:]] = 0.0
    K_raw = _cgauss(rng, (nd, nd))
    if spec.commuting_CK:
        K = ModuleOperator(_in_basis(V, k), d)
    else:
        uu, s, vh = np.linalg.svd(K_raw)
        s[spec.rank_K:] = 0.0
        K = ModuleOperator((uu * s) @ vh, d)

    t = _cgauss(rng, nd)
    if nd > 1:
        t[rng.integers(nd)] = 0.0
    T = ModuleOperator(_in_basis(V, t), d)
    theta = rng.uniform(0.0, 2 * np.pi, nd)
    T_iso = ModuleOperator(_in_basis(V, np.exp(1j * theta)), d)

    mu = _cgauss(rng, nd)
    if spec.commuting_CK:
        M = ModuleOperator(_in_basis(V, mu * (k != 0)), d)
    else:
        # M = K D has R(M) inside R(K)
        M = K @ ModuleOperator(_in_basis(V, mu), d)

    z = _cgauss(rng, nd)
    W = ModuleOperator(_in_basis(V, 1.0 + 0.1 * z), d)
    G = F.mapped(W)

    return Instance(F=F, C=C, K=K, T=T, T_iso=T_iso, M=M, G=G, spec=spec)


# ---------------------------------------------------------------------------
# persistence


def _c2j(z: complex) -> list:
    return [float(z.real), float(z.imag)]


def _mat2j(a: np.ndarray) -> list:
    return [[_c2j(z) for z in row] for row in np.asarray(a)]


def _vec2j(flat: np.ndarray, d: int) -> list:
    n = flat.shape[1] // d
    return [_mat2j(flat[:, i * d:(i + 1) * d]) for i in range(n)]


def _frame2j(F: FrameSystem) -> list:
    return [_vec2j(F.psi[j], F.d) for j in range(F.m)]


def instance_to_dict(inst: Instance) -> dict:
    extras = {}
    for name in ("T", "T_iso", "M"):
        op = getattr(inst, name)
        if op is not None:
            extras[name] = _mat2j(op.matrix)
    if inst.G is not None:
        extras["G"] = _frame2j(inst.G)
    if inst.bounds is not None:
        extras["bounds"] = [float(inst.bounds[0]), float(inst.bounds[1])]
    return {
        "version": SCHEMA_VERSION,
        "d": inst.d,
        "n": inst.n,
        "m": inst.m,
        "frame": _frame2j(inst.F),
        "C": _mat2j(inst.C.matrix),
        "K": _mat2j(inst.K.matrix),
        "extras": extras,
        "spec": None if inst.spec is None else inst.spec.to_dict(),
    }


def dumps_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=1) + "\n"


def save_instance(path, inst: Instance) -> None:
    Path(path).write_text(dumps_instance(inst), encoding="utf-8")


def _j2mat(obj, shape, where: str) -> np.ndarray:
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: not a numeric array ({exc})") from None
    if arr.shape != (*shape, 2):
        raise SchemaError(f"{where}: expected shape {shape} of [re, im] pairs, got {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _j2frame(obj, d: int, n: int, where: str) -> FrameSystem:
    if not isinstance(obj, list) or not obj:
        raise SchemaError(f"{where}: expected a non-empty list of vectors")
    vecs = []
    for j, vec in enumerate(obj):
        if not isinstance(vec, list) or len(vec) != n:
            raise SchemaError(f"{where}[{j}]: expected {n} blocks")
        vecs.append(np.hstack([_j2mat(b, (d, d), f"{where}[{j}][{i}]") for i, b in enumerate(vec)]))
    return FrameSystem(np.array(vecs))


def instance_from_dict(data: dict, source: str = "<instance>") -> Instance:
    if not isinstance(data, dict):
        raise SchemaError(f"{source}: top level must be an object")
    version = data.get("version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"{source}: unsupported schema version {version!r} "
                          f"(expected {SCHEMA_VERSION})")
    missing = [k for k in ("d", "n", "m", "frame", "C", "K") if k not in data]
    if missing:
        raise SchemaError(f"{source}: missing fields {missing}")
    d, n, m = data["d"], data["n"], data["m"]
    if not all(isinstance(v, int) and v > 0 for v in (d, n, m)):
        raise SchemaError(f"{source}: d, n, m must be positive integers")
    nd = n * d
    F = _j2frame(data["frame"], d, n, f"{source}:$.frame")
    if F.m != m:
        raise SchemaError(f"{source}:$.frame has {F.m} vectors but m={m}")
    C = ModuleOperator(_j2mat(data["C"], (nd, nd), f"{source}:$.C"), d)
    K = ModuleOperator(_j2mat(data["K"], (nd, nd), f"{source}:$.K"), d)
    extras = data.get("extras") or {}
    ops = {}
    for name in ("T", "T_iso", "M"):
        if name in extras:
            ops[name] = ModuleOperator(_j2mat(extras[name], (nd, nd), f"{source}:$.extras.{name}"), d)
    G = _j2frame(extras["G"], d, n, f"{source}:$.extras.G") if "G" in extras else None
    bounds = tuple(extras["bounds"]) if "bounds" in extras else None
    spec = data.get("spec")
    try:
        spec = None if spec is None else InstanceSpec.from_dict(spec)
    except (TypeError, UsageError) as exc:
        raise SchemaError(f"{source}:$.spec: {exc}") from None
    return Instance(F=F, C=C, K=K, G=G, spec=spec, bounds=bounds, **ops)


def load_instance(path) -> Instance:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON at line {exc.lineno} ({exc.msg})") from None
    return instance_from_dict(data, str(path))
