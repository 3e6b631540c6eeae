"""Block encodings of reduced slice states and their powers.

For a slice circuit C_BMF with ψ = ⟨0_M|C_BMF|0⟩ on B ∪ F, the circuit built
here acts on a data register D (a copy of F, or of B) plus K fresh copies of
the slice and one flag qubit per M qubit per copy::

    U = (⊗_j C_j†) · SWAP(D, F^K) ··· SWAP(D, F^1) · (⊗_j CNOT(M^j → G^j)) · (⊗_j C_j)

Post-selecting every copy and flag on |0⟩ leaves exactly ρ_F^K on D, where
ρ_F = tr_B ψψ† (the flags enforce the M = 0 projection mid-circuit).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import dense
from .lattice import CNOT, SWAP, Gate, LayeredCircuit, Qubit, SliceSpec, compose, decompose_wrap, \
    extract_slice_circuit


@dataclass(frozen=True)
class BlockEncoding:
    circuit: LayeredCircuit
    system: tuple[Qubit, ...]
    ancilla: frozenset[Qubit]
    power: int
    side: str
    prep_depth: int = 0

    @property
    def depth(self) -> int:
        return self.circuit.depth

    def extract(self) -> np.ndarray:
        return dense.circuit_block(self.circuit, self.system, self.ancilla)


@dataclass(frozen=True)
class SchmidtProjector:
    encoding: BlockEncoding
    lam: float
    side: str

    @property
    def scale(self) -> float:
        return self.lam ** (-self.encoding.power)

    def operator(self) -> np.ndarray:
        return self.encoding.extract() * self.scale


@dataclass(frozen=True)
class WrappedProjector:
    projector: SchmidtProjector
    wrap: LayeredCircuit
    circuit: LayeredCircuit = field(repr=False)
    system: tuple[Qubit, ...] = ()

    def operator(self) -> np.ndarray:
        enc = self.projector.encoding
        return dense.circuit_block(self.circuit, self.system, enc.ancilla) * self.projector.scale


def _side_check(side: str) -> None:
    if side not in ("F", "B"):
        raise ValueError(f"side must be 'F' or 'B', got {side!r}")


def encode_rho_power(slice_circuit: LayeredCircuit, spec: SliceSpec, side: str, K: int, *,
                     tag: str | None = None, data: Mapping[Qubit, Qubit] | None = None,
                     avoid: Iterable[Qubit] = ()) -> BlockEncoding:
    """Block encoding of ρ_side^K for the slice state of ``slice_circuit``.

    ``data`` maps each qubit of the encoded side to the register that holds the
    operand (identity by default).  Copy registers are tagged ``{tag}.{j}``.
    """
    _side_check(side)
    if K < 1:
        raise ValueError(f"power K must be >= 1, got {K}")
    tag = tag if tag is not None else f"s{spec.index}{side}"
    side_q = sorted(spec.side_region(side))
    data = {q: q for q in side_q} if data is None else dict(data)
    system = tuple(data[q] for q in side_q)
    prep = slice_circuit.compact()
    touched = prep.qubits()
    if not touched <= spec.k_region:
        raise ValueError("slice circuit acts outside its slice")
    base = sorted(touched | set(side_q))
    flagged = sorted(touched & spec.m_region)

    copies = [{q: q.tagged(f"{tag}.{j}") for q in base} for j in range(1, K + 1)]
    flags = [{q: q.tagged(f"{tag}.{j}g") for q in flagged} for j in range(1, K + 1)]
    ancilla = frozenset(v for cp in copies for v in cp.values()) | frozenset(v for fl in flags for v in fl.values())
    clash = ancilla & (set(system) | set(avoid))
    if clash:
        raise ValueError(f"register collision on {sorted(clash)[:4]}")

    gates: list[Gate] = []
    d = prep.depth
    for cp in copies:
        gates += [Gate(tuple(cp[q] for q in g.support), g.unitary, g.layer) for g in prep.gates]
    t = d
    if flagged:
        for cp, fl in zip(copies, flags):
            gates += [Gate((cp[q], fl[q]), CNOT, t, "flag") for q in flagged]
        t += 1
    for cp in copies:
        gates += [Gate((data[q], cp[q]), SWAP, t, "swap") for q in side_q]
        t += 1
    undo = prep.dagger()
    for cp in copies:
        gates += [Gate(tuple(cp[q] for q in g.support), g.unitary, g.layer + t) for g in undo.gates]
    circuit = LayeredCircuit.from_gates(prep.dims, gates, t + d)
    return BlockEncoding(circuit, system, ancilla, K, side, d)


def encode_rho(slice_circuit: LayeredCircuit, spec: SliceSpec, side: str, **kw) -> BlockEncoding:
    return encode_rho_power(slice_circuit, spec, side, 1, **kw)


def schmidt_projector(slice_circuit: LayeredCircuit, spec: SliceSpec, side: str, K: int,
                      lam: float, **kw) -> SchmidtProjector:
    if not lam > 0:
        raise ValueError(f"λ₁ estimate must be positive, got {lam}")
    return SchmidtProjector(encode_rho_power(slice_circuit, spec, side, K, **kw), float(lam), side)


def wrapped_projector(c: LayeredCircuit, spec: SliceSpec, K: int, lam: float,
                      side: str = "F") -> WrappedProjector:
    """Π = C_Wrap P^K C_Wrap†; only the wrap half on ``side`` survives the conjugation."""
    _side_check(side)
    proj = schmidt_projector(extract_slice_circuit(c, spec), spec, side, K, lam)
    wl, wr, _, _ = decompose_wrap(c, spec)
    wrap = wr if side == "F" else wl
    wrap = wrap.compact()
    circuit = compose(wrap.dagger(), proj.encoding.circuit, wrap) if wrap.depth else proj.encoding.circuit
    system = tuple(sorted(set(proj.encoding.system) | wrap.qubits()))
    return WrappedProjector(proj, wrap, circuit, system)


# ------------------------------------------------------------ dense references


def slice_state(slice_circuit: LayeredCircuit, spec: SliceSpec) -> dense.DenseState:
    """ψ = ⟨0_M| C_BMF |0⟩ on B ∪ F (sorted order)."""
    order = tuple(sorted(spec.k_region))
    return dense.project_zero(dense.run(slice_circuit, order), spec.m_region)


def rho_dense(slice_circuit: LayeredCircuit, spec: SliceSpec, side: str) -> np.ndarray:
    _side_check(side)
    psi = slice_state(slice_circuit, spec)
    keep = tuple(sorted(spec.side_region(side)))
    op = dense.partial_trace(psi, keep)
    assert op.qubit_order == keep
    return op.matrix


def top_eigen(rho: np.ndarray) -> tuple[float, np.ndarray]:
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    return float(w[-1]), v[:, -1]


def projector_distance(rho: np.ndarray, K: int, lam: float | None = None) -> float:
    """‖(ρ/λ)^K − |w₁⟩⟨w₁|‖₁ with λ the true top eigenvalue unless given."""
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    top = float(w[-1])
    lam = top if lam is None else lam
    powk = (v * (np.clip(w, 0, None) / lam) ** K) @ v.conj().T
    w1 = v[:, -1]
    return dense.trace_norm(powk - np.outer(w1, w1.conj()))
