"""Seeded circuit families for testing and benchmarks.

Two geometries share one slice layout (B = 1 plane, M = 2 planes, F = 1 plane,
slices every 6 planes along z starting at ``offset``):

* ``chain``: 1×1×L brickwork, layer 0 pairs (1,2),(3,4),…; layer 1 pairs (0,1),(2,3),…
* ``slab``:  2×2×L, the same z-brickwork in layer 0; layer 1 runs z-pairs on the
  columns (0,0),(1,1) and diagonal in-plane gates on (0,1)-(1,0).

Profiles: ``near-identity`` (heavy slices, oracle-checked), ``random`` (Haar
gates), ``product`` (every slice exactly product across B|F), ``adversarial``
(most M regions pushed away from |0⟩) and ``entangled`` (chain only: heavy
slices whose second Schmidt weight is large enough for κ to converge visibly).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dense
from .blockenc import rho_dense, top_eigen
from .lattice import CNOT, X, Gate, LatticeDims, LayeredCircuit, Qubit, SliceSpec, dumps_circuit, \
    enumerate_slices, extract_slice_circuit, haar_unitary, near_identity

PROFILES = ("near-identity", "random", "product", "adversarial", "entangled")
SHAPES = ("chain", "slab")
SLICE_GEOMETRY = {"w_slice": 1, "m_width": 2, "spacing": 2}
MANIFEST_VERSION = 1


@dataclass(frozen=True)
class Instance:
    circuit: LayeredCircuit
    profile: str
    shape: str
    seed: int
    index: int
    theta: float
    offset: int
    meta: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return f"{self.profile}-{self.shape}-s{self.seed}-{self.index:03d}"

    def slices(self) -> list[SliceSpec]:
        return enumerate_slices(self.circuit, 2, offset=self.offset, **SLICE_GEOMETRY)


def _pairs(dims: LatticeDims, layer: int) -> list[tuple[Qubit, Qubit]]:
    nz = dims.nz
    start = 1 if layer == 0 else 0
    if dims.nx == 1 and dims.ny == 1:
        return [(Qubit(0, 0, z), Qubit(0, 0, z + 1)) for z in range(start, nz - 1, 2)]
    if (dims.nx, dims.ny) != (2, 2):
        raise ValueError("slab geometry is defined for 2×2×L lattices only")
    out = []
    cols = [(0, 0), (0, 1), (1, 0), (1, 1)] if layer == 0 else [(0, 0), (1, 1)]
    for x, y in cols:
        out += [(Qubit(x, y, z), Qubit(x, y, z + 1)) for z in range(start, nz - 1, 2)]
    if layer == 1:
        out += [(Qubit(0, 1, z), Qubit(1, 0, z)) for z in range(nz)]
    return out


def _dims(shape: str, length: int) -> LatticeDims:
    if shape == "chain":
        return LatticeDims(1, 1, length)
    if shape == "slab":
        return LatticeDims(2, 2, length)
    raise ValueError(f"unknown shape {shape!r}; choose from {SHAPES}")


def _m_planes(length: int, offset: int) -> set[int]:
    planes, s = set(), offset
    while s + 4 <= length:
        planes |= {s + 1, s + 2}
        s += 6
    return planes


def _entangler(angle: float) -> np.ndarray:
    """CNOT·(R_y(2·angle) ⊗ I): |00⟩ ↦ cos|00⟩ + sin|11⟩."""
    c, s = np.cos(angle), np.sin(angle)
    ry = np.array([[c, -s], [s, c]], dtype=complex)
    return CNOT @ np.kron(ry, np.eye(2))


def _givens(angle: float) -> np.ndarray:
    """Rotation mixing |00⟩ and |11⟩."""
    u = np.eye(4, dtype=complex)
    c, s = np.cos(angle), np.sin(angle)
    u[0, 0], u[0, 3], u[3, 0], u[3, 3] = c, -s, s, c
    return u


def build(profile: str, shape: str, length: int, rng: np.random.Generator, theta: float = 0.15,
          offset: int = 1, depth: int = 2) -> LayeredCircuit:
    """One circuit of the given profile; depth 1 keeps only layer 0."""
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}; choose from {PROFILES}")
    if depth not in (1, 2):
        raise ValueError("corpus circuits have depth 1 or 2")
    if offset % 2 != 1:
        raise ValueError("slice offset must be odd to align with the brickwork")
    dims = _dims(shape, length)
    if profile == "entangled" and shape != "chain":
        raise ValueError("the entangled profile is defined on chains only")
    m_planes = _m_planes(length, offset)
    gates = []
    flipped = set()
    for layer in range(depth):
        for a, b in _pairs(dims, layer):
            inside_m = a.z in m_planes and b.z in m_planes
            if profile == "random":
                u = haar_unitary(4, rng)
            elif profile == "entangled" and (a.z in m_planes) != (b.z in m_planes):
                u = near_identity(4, theta / 4, rng) @ _entangler(rng.uniform(0.6, 0.75))
            elif profile == "entangled" and inside_m:
                u = near_identity(4, theta / 4, rng) @ _givens(rng.uniform(0.6, 0.75))
            elif profile == "product" and layer == 1 and inside_m:
                u = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, 4)))
            else:
                u = near_identity(4, theta, rng)
            if profile == "adversarial" and layer == depth - 1 and a.z in m_planes and a.z not in flipped:
                # push one M qubit towards |1⟩ in two of every three slices
                slot = sorted(m_planes).index(a.z) // 2
                if slot % 3 != 2:
                    u = np.kron(X, np.eye(2)) @ u
                    flipped.add(a.z)
            gates.append(Gate((a, b), u, layer))
    return LayeredCircuit.from_gates(dims, gates, depth)


def random_lattice_circuit(dims: LatticeDims, depth: int, rng: np.random.Generator,
                           fill: float = 1.0, theta: float | None = None) -> LayeredCircuit:
    """Brickwork on a full lattice; layer l couples neighbours along axis l mod 3
    (skipping flat axes) starting at parity ⌊l/3⌋ mod 2.  ``fill`` thins the layers.
    Gates are Haar random, or within ``theta`` of the identity when it is given."""
    axes = [a for a in range(3) if dims.extent(a) > 1] or [0]
    gates = []
    for layer in range(depth):
        axis = axes[layer % len(axes)]
        parity = (layer // len(axes)) % 2
        for q in dims.qubits():
            if q.coord(axis) % 2 != parity or q.coord(axis) + 1 >= dims.extent(axis):
                continue
            if rng.random() >= fill:
                continue
            step = [0, 0, 0]
            step[axis] = 1
            other = Qubit(q.x + step[0], q.y + step[1], q.z + step[2])
            u = haar_unitary(4, rng) if theta is None else near_identity(4, theta, rng)
            gates.append(Gate((q, other), u, layer))
    return LayeredCircuit.from_gates(dims, gates, depth)


def slice_report(c: LayeredCircuit, slices: list[SliceSpec]) -> list[dict]:
    """Oracle weight p(M=0) and normalized top Schmidt weight of every slice."""
    out = []
    for sl in slices:
        sc = extract_slice_circuit(c, sl)
        rho = rho_dense(sc, sl, "F")
        lam, _ = top_eigen(rho)
        weight = float(np.trace(rho).real)
        out.append({"index": sl.index, "weight": weight, "lambda1": lam,
                    "lambda1_normalized": lam / weight if weight > 0 else 0.0})
    return out


def _accept(profile: str, report: list[dict], heavy_floor: float) -> bool:
    if profile in ("near-identity", "entangled"):
        return all(r["weight"] >= heavy_floor for r in report)
    if profile == "product":
        return all(r["weight"] >= heavy_floor and abs(r["lambda1_normalized"] - 1) <= 1e-10 for r in report)
    return True


def generate(profile: str, seed: int, count: int = 10, shape: str = "chain", lengths=(18,),
             theta: float = 0.15, offset: int = 1, depth: int = 2, heavy_floor: float = 0.5,
             max_attempts: int = 50) -> list[Instance]:
    """``count`` instances cycling through ``lengths``; identical output for identical arguments."""
    out = []
    for idx in range(count):
        length = lengths[idx % len(lengths)]
        for attempt in range(max_attempts):
            rng = np.random.default_rng([seed, idx, attempt])
            c = build(profile, shape, length, rng, theta, offset, depth)
            inst = Instance(c, profile, shape, seed, idx, theta, offset)
            report = slice_report(c, inst.slices())
            if _accept(profile, report, heavy_floor):
                break
        else:
            raise RuntimeError(f"{profile} instance {idx}: no draw passed the oracle check in {max_attempts} tries")
        meta = {"length": length, "attempt": attempt, "slices": report}
        if c.dims.n <= dense.dense_cap():
            meta["oracle"] = dense.zero_probability(c)
        out.append(Instance(c, profile, shape, seed, idx, theta, offset, meta))
    return out


def write_corpus(instances: list[Instance], out_dir: str | Path) -> Path:
    """Circuit files plus manifest.json; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for inst in instances:
        path = out_dir / f"{inst.name}.json"
        path.write_text(dumps_circuit(inst.circuit) + "\n")
        entries.append({
            "file": path.name, "profile": inst.profile, "shape": inst.shape, "seed": inst.seed,
            "index": inst.index, "dims": list(inst.circuit.dims.as_tuple()), "depth": inst.circuit.depth,
            "theta": inst.theta, "slice_geometry": dict(SLICE_GEOMETRY, offset=inst.offset, axis=2),
            **inst.meta,
        })
    manifest = out_dir / "manifest.json"
    manifest.write_text(json.dumps({"version": MANIFEST_VERSION, "instances": entries}, indent=1, sort_keys=True) + "\n")
    return manifest


def read_manifest(path: str | Path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    data = json.loads(path.read_text())
    if data.get("version") != MANIFEST_VERSION:
        raise ValueError(f"{path}: unsupported manifest version {data.get('version')!r}")
    return data


def fixture_instances() -> list[Instance]:
    """The small mixed corpus shipped with the package for ``verify``."""
    return (generate("near-identity", 11, 3, "chain", (14, 16))
            + generate("product", 12, 2, "chain", (14,), theta=0.3)
            + generate("entangled", 13, 2, "chain", (14,), heavy_floor=0.2)
            + generate("random", 14, 1, "chain", (14,))
            + generate("near-identity", 15, 1, "slab", (5,)))
