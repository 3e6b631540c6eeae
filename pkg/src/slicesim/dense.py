"""Reference statevector and operator algebra.

Every dense object carries the qubit order of its tensor legs; the first qubit
is the most significant bit of a basis index.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .lattice import Gate, LayeredCircuit, Qubit, region

RANK_TOL = 1e-12


def dense_cap() -> int:
    return int(os.environ.get("SLICESIM_DENSE_CAP", "24"))


def _check_cap(n: int) -> None:
    cap = dense_cap()
    if n > cap:
        raise ValueError(f"{n} qubits exceeds the dense cap of {cap} (set SLICESIM_DENSE_CAP to raise it)")


@dataclass(frozen=True)
class DenseState:
    amplitudes: np.ndarray
    qubit_order: tuple[Qubit, ...]

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2 ** len(self.qubit_order):
            raise ValueError(f"{amps.size} amplitudes for {len(self.qubit_order)} qubits")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "qubit_order", tuple(Qubit(*q) for q in self.qubit_order))

    @property
    def n(self) -> int:
        return len(self.qubit_order)

    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n)

    def reorder(self, order: Sequence[Qubit]) -> "DenseState":
        order = tuple(order)
        perm = [self.qubit_order.index(q) for q in order]
        return DenseState(np.transpose(self.tensor(), perm).reshape(-1), order)


@dataclass(frozen=True)
class DenseOperator:
    matrix: np.ndarray
    qubit_order: tuple[Qubit, ...]

    @property
    def n(self) -> int:
        return len(self.qubit_order)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0)) <= tol


@dataclass(frozen=True)
class SchmidtData:
    coefficients: np.ndarray  # singular values, descending
    left_vectors: list[DenseState]
    right_vectors: list[DenseState]

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.coefficients ** 2


def default_order(c: LayeredCircuit, extra: Iterable[Qubit] = ()) -> tuple[Qubit, ...]:
    lattice = c.dims.qubits()
    others = sorted((c.qubits() | set(extra)) - set(lattice), key=lambda q: (q.site, q.reg))
    return tuple(lattice) + tuple(others)


def apply_gate(psi: np.ndarray, axes: dict[Qubit, int], gate: Gate) -> np.ndarray:
    """Apply ``gate`` to a tensor whose leg ``axes[q]`` belongs to qubit q."""
    k = gate.arity
    legs = [axes[q] for q in gate.support]
    u = gate.unitary.reshape((2,) * (2 * k))
    out = np.tensordot(u, psi, axes=(list(range(k, 2 * k)), legs))
    return np.moveaxis(out, list(range(k)), legs)


def run(c: LayeredCircuit, qubit_order: Sequence[Qubit] | None = None,
        initial: np.ndarray | None = None, cap: bool = True) -> DenseState:
    order = tuple(default_order(c) if qubit_order is None else qubit_order)
    missing = c.qubits() - set(order)
    if missing:
        raise ValueError(f"circuit acts on qubits missing from the order: {sorted(missing)[:4]}")
    if cap:
        _check_cap(len(order))
    if initial is None:
        psi = np.zeros((2,) * len(order), dtype=complex)
        psi[(0,) * len(order)] = 1.0
    else:
        psi = np.asarray(initial, dtype=complex).reshape((2,) * len(order))
    axes = {q: i for i, q in enumerate(order)}
    for g in c.gates:
        psi = apply_gate(psi, axes, g)
    return DenseState(psi.reshape(-1), order)


def statevector(c: LayeredCircuit) -> DenseState:
    return run(c, c.dims.qubits())


def zero_probability(c: LayeredCircuit) -> float:
    amp = statevector(c).amplitudes[0]
    return float(abs(amp) ** 2)


def project_zero(state: DenseState, zero_region: Iterable[Qubit]) -> DenseState:
    """⟨0|_r applied to ``state``; the result lives on the remaining qubits."""
    zero = region(zero_region)
    unknown = zero - set(state.qubit_order)
    if unknown:
        raise ValueError(f"qubits {sorted(unknown)[:4]} are not in the state")
    idx = tuple(0 if q in zero else slice(None) for q in state.qubit_order)
    rest = tuple(q for q in state.qubit_order if q not in zero)
    return DenseState(state.tensor()[idx].reshape(-1), rest)


def marginal_zero_probability(c: LayeredCircuit, r: Iterable[Qubit]) -> float:
    return project_zero(statevector(c), r).norm2()


def projected_state(c: LayeredCircuit, zero_region: Iterable[Qubit]) -> DenseState:
    return project_zero(statevector(c), zero_region)


def _split(state: DenseState, left: Iterable[Qubit]) -> tuple[np.ndarray, tuple, tuple]:
    left = region(left)
    lq = tuple(q for q in state.qubit_order if q in left)
    rq = tuple(q for q in state.qubit_order if q not in left)
    if len(lq) != len(left):
        raise ValueError("left region contains qubits outside the state")
    if not lq or not rq:
        raise ValueError("degenerate partition: both sides must be non-empty")
    mat = state.reorder(lq + rq).amplitudes.reshape(2 ** len(lq), 2 ** len(rq))
    return mat, lq, rq


def schmidt_across(state: DenseState, left: Iterable[Qubit]) -> SchmidtData:
    mat, lq, rq = _split(state, left)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    keep = s > RANK_TOL * max(s[0], 1e-300) if s.size else s.astype(bool)
    if s.size and s[0] == 0:
        keep[:] = False
        keep[0] = True
    s = s[keep]
    lv = [DenseState(u[:, i], lq) for i in range(s.size)]
    rv = [DenseState(vh[i, :], rq) for i in range(s.size)]
    return SchmidtData(s, lv, rv)


def density(state: DenseState) -> DenseOperator:
    a = state.amplitudes
    return DenseOperator(np.outer(a, a.conj()), state.qubit_order)


def partial_trace(obj: DenseState | DenseOperator, keep: Iterable[Qubit]) -> DenseOperator:
    keep = region(keep)
    order = obj.qubit_order
    if not keep <= set(order):
        raise ValueError("keep region is not contained in the operand")
    kq = tuple(q for q in order if q in keep)
    tq = tuple(q for q in order if q not in keep)
    if isinstance(obj, DenseState):
        mat = obj.reorder(kq + tq).amplitudes.reshape(2 ** len(kq), 2 ** len(tq))
        return DenseOperator(mat @ mat.conj().T, kq)
    n = len(order)
    if obj.matrix.shape != (2 ** n, 2 ** n):
        raise ValueError(f"operator shape {obj.matrix.shape} does not match {n} qubits")
    t = obj.matrix.reshape((2,) * (2 * n))
    perm = [order.index(q) for q in kq + tq]
    t = np.transpose(t, perm + [p + n for p in perm])
    dk, dt = 2 ** len(kq), 2 ** len(tq)
    t = t.reshape(dk, dt, dk, dt)
    return DenseOperator(np.einsum("iaja->ij", t), kq)


def reduced_eigenvalues(state: DenseState, keep: Iterable[Qubit]) -> np.ndarray:
    """Eigenvalues of the reduced density matrix on ``keep``, descending."""
    mat, _, _ = _split(state, keep)
    s = np.linalg.svd(mat, compute_uv=False)
    return s ** 2


def circuit_block(c: LayeredCircuit, system: Sequence[Qubit], ancilla: Iterable[Qubit],
                  scratch: Iterable[Qubit] = ()) -> np.ndarray:
    """⟨0_anc| U |0_anc⟩ as a matrix on ``system`` (ancillas start and end in |0⟩)."""
    system = tuple(system)
    anc = tuple(sorted(region(ancilla) | region(scratch) | (c.qubits() - set(system)),
                       key=lambda q: (q.site, q.reg)))
    order = system + anc
    _check_cap(len(order))
    s = len(system)
    block = np.zeros((2 ** s, 2 ** s), dtype=complex)
    zero_anc = (0,) * len(anc)
    for col in range(2 ** s):
        init = np.zeros((2,) * len(order), dtype=complex)
        bits = tuple((col >> (s - 1 - k)) & 1 for k in range(s))
        init[bits + zero_anc] = 1.0
        out = run(c, order, init, cap=False).tensor()
        block[:, col] = out[(Ellipsis,) + zero_anc].reshape(-1) if anc else out.reshape(-1)
    return block


def circuit_unitary(c: LayeredCircuit, order: Sequence[Qubit]) -> np.ndarray:
    order = tuple(order)
    _check_cap(2 * len(order))
    n = len(order)
    eye = np.eye(2 ** n, dtype=complex).reshape((2,) * n + (2 ** n,))
    axes = {q: i for i, q in enumerate(order)}
    psi = eye
    for g in c.gates:
        psi = apply_gate(psi, axes, g)
    return psi.reshape(2 ** n, 2 ** n)


def trace_norm(a: np.ndarray) -> float:
    return float(np.sum(np.abs(np.linalg.eigvalsh((a + a.conj().T) / 2))))


def lowrank_trace_norm(vectors: np.ndarray, coeffs: np.ndarray) -> float:
    """‖Σ_k c_k v_k v_k†‖₁ for the columns v_k of ``vectors`` (real c_k)."""
    q, r = np.linalg.qr(vectors)
    core = (r * np.asarray(coeffs, dtype=float)) @ r.conj().T
    return trace_norm(core)


def spectral_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, 2)) if a.size else 0.0
