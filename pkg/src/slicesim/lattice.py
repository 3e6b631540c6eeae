"""Layered circuits on 3D qubit lattices.

Qubits are addressed by lattice coordinates.  Registers that live "on top of"
a lattice site (copies of a slice used by block encodings, flag qubits, Bell
references) reuse the site coordinate and carry a non-empty ``reg`` tag, so
every geometric question (which side of a cut, distance along the cut axis)
is answered by the coordinate alone.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

UNITARY_TOL = 1e-12
AXES = {"x": 0, "y": 1, "z": 2}


class Qubit(NamedTuple):
    x: int
    y: int
    z: int
    reg: str = ""

    def coord(self, axis: int) -> int:
        return (self.x, self.y, self.z)[axis]

    @property
    def site(self) -> tuple[int, int, int]:
        return (self.x, self.y, self.z)

    def tagged(self, reg: str) -> "Qubit":
        return Qubit(self.x, self.y, self.z, reg)

    def to_json(self) -> list:
        return [self.x, self.y, self.z] + ([self.reg] if self.reg else [])

    @classmethod
    def from_json(cls, item: Sequence) -> "Qubit":
        if len(item) == 3:
            return cls(int(item[0]), int(item[1]), int(item[2]))
        if len(item) == 4:
            return cls(int(item[0]), int(item[1]), int(item[2]), str(item[3]))
        raise ValueError(f"qubit coordinate must have 3 or 4 entries, got {item!r}")


Region = frozenset  # frozenset[Qubit]


def region(qubits: Iterable[Qubit]) -> frozenset[Qubit]:
    return frozenset(Qubit(*q) for q in qubits)


def axis_index(axis: int | str) -> int:
    if isinstance(axis, str):
        if axis not in AXES:
            raise ValueError(f"unknown axis {axis!r}")
        return AXES[axis]
    if axis not in (0, 1, 2):
        raise ValueError(f"unknown axis {axis!r}")
    return int(axis)


@dataclass(frozen=True)
class LatticeDims:
    nx: int
    ny: int
    nz: int

    def __post_init__(self):
        if min(self.nx, self.ny, self.nz) < 1:
            raise ValueError(f"lattice extents must be >= 1, got {self.as_tuple()}")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def n(self) -> int:
        return self.nx * self.ny * self.nz

    def extent(self, axis: int) -> int:
        return self.as_tuple()[axis]

    def contains(self, q: Qubit) -> bool:
        return 0 <= q.x < self.nx and 0 <= q.y < self.ny and 0 <= q.z < self.nz

    def qubits(self) -> list[Qubit]:
        """All lattice qubits in row-major (x, y, z) order."""
        return [Qubit(x, y, z) for x in range(self.nx) for y in range(self.ny) for z in range(self.nz)]

    def long_axis(self) -> int:
        ext = self.as_tuple()
        return max(range(3), key=lambda a: (ext[a], a))


@dataclass(frozen=True, eq=False)
class Gate:
    """A 1- or 2-qubit unitary placed in a layer.  Identity-hashed."""

    support: tuple[Qubit, ...]
    unitary: np.ndarray
    layer: int
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(Qubit(*q) for q in self.support))
        object.__setattr__(self, "unitary", np.asarray(self.unitary, dtype=complex))

    @property
    def arity(self) -> int:
        return len(self.support)

    def at_layer(self, layer: int) -> "Gate":
        return Gate(self.support, self.unitary, layer, self.label)

    def relabel(self, mapping) -> "Gate":
        return Gate(tuple(mapping(q) for q in self.support), self.unitary, self.layer, self.label)

    def dagger(self, layer: int) -> "Gate":
        return Gate(self.support, self.unitary.conj().T, layer, self.label + "^dg" if self.label else "")


@dataclass(frozen=True)
class LayeredCircuit:
    dims: LatticeDims
    layers: tuple[tuple[Gate, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(tuple(layer) for layer in self.layers))

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def gates(self) -> list[Gate]:
        return [g for layer in self.layers for g in layer]

    def __iter__(self) -> Iterator[Gate]:
        return iter(self.gates)

    def __len__(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def qubits(self) -> frozenset[Qubit]:
        return frozenset(q for g in self.gates for q in g.support)

    @classmethod
    def from_gates(cls, dims: LatticeDims, gates: Iterable[Gate], depth: int | None = None) -> "LayeredCircuit":
        gates = list(gates)
        top = max((g.layer for g in gates), default=-1) + 1
        depth = top if depth is None else max(depth, top)
        layers: list[list[Gate]] = [[] for _ in range(depth)]
        for g in gates:
            layers[g.layer].append(g)
        for layer in layers:
            layer.sort(key=lambda g: g.support)
        return cls(dims, tuple(tuple(layer) for layer in layers))

    def subcircuit(self, keep: Iterable[Gate]) -> "LayeredCircuit":
        """Gates of ``keep`` at their original layers (depth unchanged)."""
        keep = set(keep)
        return LayeredCircuit(self.dims, tuple(tuple(g for g in layer if g in keep) for layer in self.layers))

    def then(self, other: "LayeredCircuit") -> "LayeredCircuit":
        """Circuit applying ``self`` first and ``other`` afterwards."""
        shift = self.depth
        moved = [g.at_layer(g.layer + shift) for g in other.gates]
        return LayeredCircuit.from_gates(self.dims, self.gates + moved, self.depth + other.depth)

    def dagger(self) -> "LayeredCircuit":
        d = self.depth
        return LayeredCircuit.from_gates(self.dims, [g.dagger(d - 1 - g.layer) for g in self.gates], d)

    def relabel(self, mapping) -> "LayeredCircuit":
        return LayeredCircuit.from_gates(self.dims, [g.relabel(mapping) for g in self.gates], self.depth)

    def compact(self) -> "LayeredCircuit":
        """ASAP re-layering; per-qubit gate order (hence the operator) is preserved."""
        ready: dict[Qubit, int] = {}
        out = []
        for g in self.gates:
            layer = max((ready.get(q, 0) for q in g.support), default=0)
            out.append(g.at_layer(layer))
            for q in g.support:
                ready[q] = layer + 1
        return LayeredCircuit.from_gates(self.dims, out)


def compose(*circuits: LayeredCircuit) -> LayeredCircuit:
    """Apply the circuits in the order given."""
    out = circuits[0]
    for c in circuits[1:]:
        out = out.then(c)
    return out


# ---------------------------------------------------------------- validation


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def chebyshev(a: Qubit, b: Qubit) -> int:
    return max(abs(a.x - b.x), abs(a.y - b.y), abs(a.z - b.z))


def validate_circuit(c: LayeredCircuit) -> ValidationReport:
    report = ValidationReport()
    add = report.violations.append
    for idx, layer in enumerate(c.layers):
        used: set[Qubit] = set()
        for g in layer:
            where = f"layer {idx}, support {[q.to_json() for q in g.support]}"
            if g.layer != idx:
                add(f"layer index mismatch: gate says {g.layer}, placed in {idx} ({where})")
            if not 1 <= g.arity <= 2:
                add(f"arity {g.arity} not in {{1, 2}} ({where})")
            if len(set(g.support)) != g.arity:
                add(f"repeated qubit in support ({where})")
            for q in g.support:
                if not c.dims.contains(q):
                    add(f"qubit {q.to_json()} outside lattice {c.dims.as_tuple()} ({where})")
            if g.arity == 2 and chebyshev(*g.support) > 1:
                add(f"locality violation: Chebyshev distance {chebyshev(*g.support)} > 1 ({where})")
            dim = 2 ** g.arity
            if g.unitary.shape != (dim, dim):
                add(f"matrix shape {g.unitary.shape} does not match arity {g.arity} ({where})")
            elif np.max(np.abs(g.unitary @ g.unitary.conj().T - np.eye(dim))) > UNITARY_TOL:
                add(f"unitarity violation ({where})")
            clash = used.intersection(g.support)
            if clash:
                add(f"layer collision on {[q.to_json() for q in sorted(clash)]} ({where})")
            used.update(g.support)
    return report


def require_valid(c: LayeredCircuit) -> None:
    report = validate_circuit(c)
    if not report.ok:
        raise ValueError("invalid circuit:\n  " + "\n  ".join(report.violations))


# ---------------------------------------------------------------- lightcones


def lightcone(c: LayeredCircuit, r: Iterable[Qubit], direction: str = "forward") -> frozenset[Qubit]:
    cone = set(region(r))
    if not cone:
        raise ValueError("lightcone of an empty region is undefined")
    if direction not in ("forward", "reverse"):
        raise ValueError(f"direction must be 'forward' or 'reverse', got {direction!r}")
    layers = c.layers if direction == "forward" else tuple(reversed(c.layers))
    for layer in layers:
        for g in layer:
            if cone.intersection(g.support):
                cone.update(g.support)
    return frozenset(cone)


def past_gates(c: LayeredCircuit, r: Iterable[Qubit]) -> list[Gate]:
    """Gates that can influence the final state of ``r`` (the reverse cone as a gate set)."""
    cone = set(r)
    keep = []
    for layer in reversed(c.layers):
        for g in layer:
            if cone.intersection(g.support):
                keep.append(g)
                cone.update(g.support)
    return keep


# ---------------------------------------------------------------- slices


@dataclass(frozen=True)
class SliceSpec:
    """A cut K = B ∪ M ∪ F perpendicular to ``axis``; B sits on the low side."""

    axis: int
    b_region: frozenset[Qubit]
    m_region: frozenset[Qubit]
    f_region: frozenset[Qubit]
    width_unit: int
    index: int = 0

    @property
    def k_region(self) -> frozenset[Qubit]:
        return self.b_region | self.m_region | self.f_region

    def span(self, part: str = "K") -> tuple[int, int]:
        reg = {"B": self.b_region, "M": self.m_region, "F": self.f_region, "K": self.k_region}[part]
        coords = [q.coord(self.axis) for q in reg]
        return min(coords), max(coords)

    def side_region(self, side: str) -> frozenset[Qubit]:
        if side == "F":
            return self.f_region
        if side == "B":
            return self.b_region
        raise ValueError(f"side must be 'F' or 'B', got {side!r}")

    def left_of(self, q: Qubit) -> bool:
        return q.coord(self.axis) < self.span("M")[0]

    def right_of(self, q: Qubit) -> bool:
        return q.coord(self.axis) > self.span("M")[1]

    def describe(self) -> dict:
        return {"index": self.index, "axis": self.axis, "B": list(self.span("B")),
                "M": list(self.span("M")), "F": list(self.span("F"))}


def slab(dims: LatticeDims, axis: int, lo: int, hi: int) -> frozenset[Qubit]:
    """All lattice qubits with ``lo <= coord(axis) <= hi``."""
    return frozenset(q for q in dims.qubits() if lo <= q.coord(axis) <= hi)


def make_slice(dims: LatticeDims, axis: int | str, start: int, width: int,
               m_width: int | None = None, index: int = 0) -> SliceSpec:
    axis = axis_index(axis)
    wm = width if m_width is None else m_width
    b = slab(dims, axis, start, start + width - 1)
    m = slab(dims, axis, start + width, start + width + wm - 1)
    f = slab(dims, axis, start + width + wm, start + 2 * width + wm - 1)
    return SliceSpec(axis, b, m, f, width, index)


def slice_violations(c: LayeredCircuit, s: SliceSpec) -> list[str]:
    """Structural conditions a slice must meet; empty list means valid."""
    out = []
    parts = (s.b_region, s.m_region, s.f_region)
    if not all(parts):
        out.append("B, M and F must be non-empty")
        return out
    if any(a & b for a, b in itertools.combinations(parts, 2)):
        out.append("B, M, F overlap")
    (_, b1), (m0, m1), (f0, _) = s.span("B"), s.span("M"), s.span("F")
    if not (b1 < m0 and m1 < f0):
        out.append("B, M, F not ordered along the axis")
    bmf = c.subcircuit(past_gates(c, s.m_region))
    reach = bmf.qubits() | s.m_region
    if not reach <= s.k_region:
        out.append(f"reverse lightcone of M leaves the slice at {sorted(q.to_json() for q in reach - s.k_region)}")
    cone_b = lightcone(bmf, s.b_region, "reverse")
    cone_f = lightcone(bmf, s.f_region, "reverse")
    if cone_b & cone_f:
        out.append("reverse lightcones of B and F intersect inside the slice circuit")
    return out


def _wrap_support(c: LayeredCircuit, s: SliceSpec) -> frozenset[Qubit]:
    bmf, wl, wr, _, _ = _partition(c, s)
    return frozenset(q for g in bmf + wl + wr for q in g.support) | s.k_region


def separation_violations(c: LayeredCircuit, s: SliceSpec, t: SliceSpec) -> list[str]:
    out = []
    if lightcone(c, s.m_region, "reverse") & lightcone(c, t.m_region, "reverse"):
        out.append(f"M regions of slices {s.index} and {t.index} share a reverse lightcone")
    if _wrap_support(c, s) & _wrap_support(c, t):
        out.append(f"slices {s.index} and {t.index} have overlapping wrap regions")
    return out


def enumerate_slices(c: LayeredCircuit, axis: int | str | None = None, w_slice: int = 1,
                     spacing: int = 1, offset: int | None = None, m_width: int | None = None,
                     check: bool = True) -> list[SliceSpec]:
    """Slices placed at pitch 3*w_slice + spacing starting at ``offset`` (default ``spacing``).

    With ``check`` every slice and every pair is validated structurally and a
    ValueError names the first violation.
    """
    axis = c.dims.long_axis() if axis is None else axis_index(axis)
    wm = w_slice if m_width is None else m_width
    width = 2 * w_slice + wm
    start = spacing if offset is None else offset
    extent = c.dims.extent(axis)
    if extent < start + width:
        raise ValueError(f"lattice extent {extent} along axis {axis} is below the minimum {start + width}")
    pitch = width + spacing
    slices = []
    while start + width <= extent:
        slices.append(make_slice(c.dims, axis, start, w_slice, wm, index=len(slices)))
        start += pitch
    if check:
        for s in slices:
            bad = slice_violations(c, s)
            if bad:
                raise ValueError(f"slice {s.index} invalid: {'; '.join(bad)}")
        for s, t in itertools.combinations(slices, 2):
            bad = separation_violations(c, s, t)
            if bad:
                raise ValueError("; ".join(bad))
    return slices


# ------------------------------------------------------------ sub-circuits


def _partition(c: LayeredCircuit, s: SliceSpec):
    """Split gates into (BMF, left wrap, right wrap, L', R')."""
    bmf = past_gates(c, s.m_region)
    in_bmf = set(bmf)
    m0, m1 = s.span("M")
    b0, _ = s.span("B")
    _, f1 = s.span("F")
    clean: dict[Qubit, bool] = {}
    wl, wr, lp, rp = [], [], [], []
    for g in c.gates:
        if g in in_bmf:
            for q in g.support:
                clean[q] = False
            continue
        pos = [q.coord(s.axis) for q in g.support]
        fresh = all(clean.get(q, True) for q in g.support)
        if fresh and all(p < b0 for p in pos):
            lp.append(g)
            continue
        if fresh and all(p > f1 for p in pos):
            rp.append(g)
            continue
        for q in g.support:
            clean[q] = False
        if all(p < m0 for p in pos):
            wl.append(g)
        elif all(p > m1 for p in pos):
            wr.append(g)
        else:
            raise ValueError(f"gate on {[q.to_json() for q in g.support]} straddles M of slice {s.index}")
    return bmf, wl, wr, lp, rp


def extract_slice_circuit(c: LayeredCircuit, s: SliceSpec) -> LayeredCircuit:
    """The minimal prefix C_BMF holding every gate that acts on M (the past closure of M)."""
    return c.subcircuit(past_gates(c, s.m_region))


def remainder_circuit(c: LayeredCircuit, s: SliceSpec) -> LayeredCircuit:
    keep = set(past_gates(c, s.m_region))
    return c.subcircuit(g for g in c.gates if g not in keep)


def decompose_wrap(c: LayeredCircuit, s: SliceSpec):
    """Return (C_Wrap_L, C_Wrap_R, C'_L, C'_R).

    C'_L (C'_R) are the gates acting only on L (R) whose whole causal past is
    also L-only (R-only); the wrap circuits hold every other gate outside C_BMF,
    so C = (C_Wrap_L C_Wrap_R)(C'_L ⊗ C_BMF ⊗ C'_R).
    """
    _, wl, wr, lp, rp = _partition(c, s)
    return c.subcircuit(wl), c.subcircuit(wr), c.subcircuit(lp), c.subcircuit(rp)


def bridge_circuit(c: LayeredCircuit, s_i: SliceSpec, s_j: SliceSpec) -> LayeredCircuit:
    """Gates strictly between M_i and M_j that belong to neither slice circuit."""
    if s_i.axis != s_j.axis:
        raise ValueError("slices cut different axes")
    if s_i.k_region & s_j.k_region or s_i.span("K")[1] >= s_j.span("K")[0]:
        raise ValueError(f"slices {s_i.index} and {s_j.index} overlap or are out of order")
    lo, hi = s_i.span("M")[1], s_j.span("M")[0]
    taken = set(past_gates(c, s_i.m_region)) | set(past_gates(c, s_j.m_region))
    keep = [g for g in c.gates if g not in taken and all(lo < q.coord(s_i.axis) < hi for q in g.support)]
    return c.subcircuit(keep)


# -------------------------------------------------------------------- gates

SQ2 = 1 / np.sqrt(2)
I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) * SQ2
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def near_identity(dim: int, theta: float, rng: np.random.Generator) -> np.ndarray:
    """exp(-i θ H) for a random Hermitian H of unit spectral norm."""
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = (a + a.conj().T) / 2
    w, v = np.linalg.eigh(h)
    w = w / np.max(np.abs(w))
    return (v * np.exp(-1j * theta * w)) @ v.conj().T


# --------------------------------------------------------------------- JSON


def _matrix_to_json(u: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(u).reshape(-1)]


def _matrix_from_json(data, arity: int) -> np.ndarray:
    dim = 2 ** arity
    flat = np.array([complex(re, im) for re, im in data], dtype=complex)
    if flat.size != dim * dim:
        raise ValueError(f"unitary has {flat.size} entries, expected {dim * dim}")
    return flat.reshape(dim, dim)


CIRCUIT_KEYS = frozenset({"dims", "layers", "L", "M", "N", "ancilla", "system", "meta"})


def circuit_to_dict(c: LayeredCircuit) -> dict:
    return {
        "dims": list(c.dims.as_tuple()),
        "layers": [[{"support": [q.to_json() for q in g.support], "u": _matrix_to_json(g.unitary)}
                    for g in layer] for layer in c.layers],
    }


def circuit_from_dict(data: dict) -> LayeredCircuit:
    unknown = set(data) - CIRCUIT_KEYS
    if unknown:
        raise ValueError(f"unknown keys in circuit JSON: {sorted(unknown)}")
    dims = LatticeDims(*[int(v) for v in data["dims"]])
    layers = []
    for idx, layer in enumerate(data["layers"]):
        row = []
        for item in layer:
            support = tuple(Qubit.from_json(q) for q in item["support"])
            row.append(Gate(support, _matrix_from_json(item["u"], len(support)), idx))
        layers.append(tuple(row))
    return LayeredCircuit(dims, tuple(layers))


def dumps_circuit(c: LayeredCircuit, **extra) -> str:
    data = circuit_to_dict(c)
    data.update(extra)
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def loads_circuit(text: str) -> LayeredCircuit:
    return circuit_from_dict(json.loads(text))
