"""Synthesized states (Γ, L, M, N) and the children of a division step.

A synthesis represents φ = tr_L ⟨0_M| Γ|0⟩⟨0| Γ† |0_M⟩ on the active register N;
the number we care about is ``factor · ⟨0_N|φ|0_N⟩``, i.e. the probability that
M ∪ N all read zero with L ignored.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from . import dense
from .blockenc import BlockEncoding, encode_rho_power
from .lattice import CNOT, H, Gate, LayeredCircuit, Qubit, SliceSpec, compose, past_gates, \
    circuit_to_dict

BaseCase = Callable[["Synthesis", float], float]


@dataclass(frozen=True)
class Synthesis:
    circuit: LayeredCircuit
    L: frozenset[Qubit]
    M: frozenset[Qubit]
    N: frozenset[Qubit]
    axis: int
    factor: float = 1.0
    label: str = "root"

    def __post_init__(self):
        regs = (self.L, self.M, self.N)
        if any(a & b for a, b in itertools.combinations(regs, 2)):
            raise ValueError(f"{self.label}: L, M, N overlap")
        stray = self.circuit.qubits() - (self.L | self.M | self.N)
        if stray:
            raise ValueError(f"{self.label}: circuit acts on unregistered qubits {sorted(stray)[:4]}")

    @property
    def qubits(self) -> frozenset[Qubit]:
        return self.L | self.M | self.N

    @property
    def depth_meta(self) -> int:
        return self.circuit.depth

    def span(self) -> tuple[int, int] | None:
        if not self.N:
            return None
        coords = [q.coord(self.axis) for q in self.N]
        return min(coords), max(coords)

    def width(self) -> int:
        sp = self.span()
        return 0 if sp is None else sp[1] - sp[0] + 1

    def relevant_gates(self) -> list[Gate]:
        """Gates in the reverse lightcone of M ∪ N; the rest cancel in the trace."""
        keep = set(past_gates(self.circuit, self.M | self.N))
        return [g for g in self.circuit.gates if g in keep]

    def to_dict(self) -> dict:
        data = circuit_to_dict(self.circuit)
        for key in ("L", "M", "N"):
            data[key] = [q.to_json() for q in sorted(getattr(self, key))]
        data["axis"] = self.axis
        data["factor"] = self.factor
        data["label"] = self.label
        return data


def make_root_synthesis(c: LayeredCircuit, axis: int | None = None) -> Synthesis:
    axis = c.dims.long_axis() if axis is None else axis
    return Synthesis(c, frozenset(), frozenset(), frozenset(c.dims.qubits()), axis, label="root")


def synthesis_value_dense(s: Synthesis) -> float:
    """factor · ⟨0_N|φ|0_N⟩ by statevector simulation of the relevant gates."""
    gates = s.relevant_gates()
    order = tuple(sorted({q for g in gates for q in g.support}))
    if not order:
        return float(s.factor)
    sub = LayeredCircuit.from_gates(s.circuit.dims, gates, s.circuit.depth)
    state = dense.run(sub, order)
    return float(s.factor * dense.project_zero(state, (s.M | s.N) & set(order)).norm2())


# ------------------------------------------------------------------ division


@dataclass(frozen=True)
class _Parts:
    bmf: list[Gate]
    left: list[Gate]
    right: list[Gate]


def _check_slice(s: Synthesis, sl: SliceSpec) -> None:
    if sl.axis != s.axis:
        raise ValueError(f"slice {sl.index} cuts axis {sl.axis}, synthesis uses axis {s.axis}")
    if not sl.k_region <= s.N:
        raise ValueError(f"slice {sl.index} is not inside the active register of {s.label}")
    lo, hi = sl.span("K")
    crowd = {q for q in s.qubits if lo <= q.coord(s.axis) <= hi} - sl.k_region
    if crowd:
        raise ValueError(f"slice {sl.index} overlaps registers {sorted(crowd)[:4]} of {s.label}")


def _parts(s: Synthesis, sl: SliceSpec) -> _Parts:
    _check_slice(s, sl)
    bmf = past_gates(s.circuit, sl.m_region)
    touched = {q for g in bmf for q in g.support}
    if not touched <= sl.k_region:
        raise ValueError(f"slice {sl.index}: reverse lightcone of M leaves the slice in {s.label}")
    inb = set(bmf)
    m0, m1 = sl.span("M")
    left, right = [], []
    for g in s.circuit.gates:
        if g in inb:
            continue
        pos = [q.coord(s.axis) for q in g.support]
        if max(pos) < m0:
            left.append(g)
        elif min(pos) > m1:
            right.append(g)
        else:
            raise ValueError(f"gate on {[q.to_json() for q in g.support]} straddles slice {sl.index}")
    return _Parts(bmf, left, right)


def slice_circuit_of(s: Synthesis, sl: SliceSpec) -> LayeredCircuit:
    return s.circuit.subcircuit(_parts(s, sl).bmf)


def _with_encodings(base: LayeredCircuit, encodings: Sequence[BlockEncoding]) -> LayeredCircuit:
    out = base
    for enc in encodings:
        out = out.then(enc.circuit)
    return out.compact()


def left_child(s: Synthesis, sl: SliceSpec, K: int) -> Synthesis:
    """S_{L,i}: ρ_F^K applied to F_i after the gates left of M_i; F_i traced."""
    p = _parts(s, sl)
    m0 = sl.span("M")[0]
    side = frozenset(q for q in s.qubits if q.coord(s.axis) < m0)
    enc = encode_rho_power(s.circuit.subcircuit(p.bmf), sl, "F", K, tag=f"s{sl.index}F", avoid=s.qubits)
    gamma = _with_encodings(s.circuit.subcircuit(p.bmf + p.left), [enc])
    return Synthesis(gamma, (s.L & side) | sl.f_region, (s.M & side) | sl.m_region | enc.ancilla,
                     s.N & side, s.axis, label=f"{s.label}/L{sl.index}")


def right_child(s: Synthesis, sl: SliceSpec, K: int) -> Synthesis:
    """S_{i,R}: ρ_B^K applied to B_i after the gates right of M_i; B_i traced."""
    p = _parts(s, sl)
    m1 = sl.span("M")[1]
    side = frozenset(q for q in s.qubits if q.coord(s.axis) > m1)
    enc = encode_rho_power(s.circuit.subcircuit(p.bmf), sl, "B", K, tag=f"s{sl.index}B", avoid=s.qubits)
    gamma = _with_encodings(s.circuit.subcircuit(p.bmf + p.right), [enc])
    return Synthesis(gamma, (s.L & side) | sl.b_region, (s.M & side) | sl.m_region | enc.ancilla,
                     s.N & side, s.axis, label=f"{s.label}/R{sl.index}")


def middle_child(s: Synthesis, si: SliceSpec, sj: SliceSpec, K: int,
                 inner: Sequence[SliceSpec] = ()) -> Synthesis:
    """S_{i,j}; with ``inner`` slices the unnormalized ρ_F^K of each is folded in
    right after its slice circuit and its M is post-selected (the multi-cut operand).
    The caller divides by κ^{2K} per inner slice."""
    if si.span("K")[1] >= sj.span("K")[0]:
        raise ValueError(f"slices {si.index} and {sj.index} overlap or are out of order")
    lo, hi = si.span("M")[1], sj.span("M")[0]
    for sk in inner:
        if not (si.span("K")[1] < sk.span("K")[0] and sk.span("K")[1] < sj.span("K")[0]):
            raise ValueError(f"inner slice {sk.index} is not strictly between {si.index} and {sj.index}")
    pi, pj = _parts(s, si), _parts(s, sj)
    between = frozenset(q for q in s.qubits if lo < q.coord(s.axis) < hi)
    taken = set(pi.bmf) | set(pj.bmf)
    mids = [g for g in s.circuit.gates
            if g not in taken and all(lo < q.coord(s.axis) < hi for q in g.support)]
    inner_bmf: list[Gate] = []
    inner_enc: list[BlockEncoding] = []
    for sk in inner:
        pk = _parts(s, sk)
        inner_bmf += pk.bmf
        inner_enc.append(encode_rho_power(s.circuit.subcircuit(pk.bmf), sk, "F", K,
                                          tag=f"s{sk.index}P", avoid=s.qubits))
    first = set(inner_bmf)
    core = s.circuit.subcircuit(first)
    for enc in inner_enc:
        core = core.then(enc.circuit)
    rest = s.circuit.subcircuit([g for g in pi.bmf + pj.bmf + mids if g not in first])
    enc_i = encode_rho_power(s.circuit.subcircuit(pi.bmf), si, "B", K, tag=f"s{si.index}B", avoid=s.qubits)
    enc_j = encode_rho_power(s.circuit.subcircuit(pj.bmf), sj, "F", K, tag=f"s{sj.index}F", avoid=s.qubits)
    gamma = compose(core, rest).then(enc_i.circuit).then(enc_j.circuit).compact()
    anc = enc_i.ancilla | enc_j.ancilla | frozenset().union(*[e.ancilla for e in inner_enc])
    inner_m = frozenset().union(*[sk.m_region for sk in inner])
    tag = "".join(f",{sk.index}" for sk in inner)
    return Synthesis(gamma, (s.L & between) | si.b_region | sj.f_region,
                     (s.M & between) | si.m_region | sj.m_region | inner_m | anc,
                     (s.N & between) - inner_m, s.axis, label=f"{s.label}/M{si.index}-{sj.index}{tag}")


@dataclass(frozen=True)
class DivisionResult:
    left: Synthesis
    right: Synthesis
    middle: Synthesis | None
    kappa_values: dict[int, float] = field(default_factory=dict)


def divide(s: Synthesis, s_i: SliceSpec, s_j: SliceSpec | None = None, K: int = 1,
           kappa: dict[int, float] | None = None) -> DivisionResult:
    """S_{L,i} and S_{j,R} (j = i without a second slice) plus S_{i,j} for pairs."""
    right_slice = s_i if s_j is None else s_j
    middle = None if s_j is None else middle_child(s, s_i, s_j, K)
    return DivisionResult(left_child(s, s_i, K), right_child(s, right_slice, K), middle, dict(kappa or {}))


def product_estimate(s_left: float, s_right: float, lam: float, K: int) -> float:
    """One-cut reconstruction A_L·A_R/λ^{4K+1}."""
    return s_left * s_right / lam ** (4 * K + 1)


# --------------------------------------------------------- scalar syntheses


def trace_power_synthesis(slice_circuit: LayeredCircuit, spec: SliceSpec, p: int,
                          side: str = "B") -> Synthesis:
    """Scalar synthesis with value tr(ρ_side^p).

    Odd p = 2a+1 uses ‖ρ^a ψ‖²; even p = 2a uses a Bell reference,
    2^{|side|}·‖(ρ^a ⊗ I)|Φ⟩‖², since the state ψ alone only yields odd powers.
    """
    if p < 1:
        raise ValueError(f"trace power must be >= 1, got {p}")
    side_q = sorted(spec.side_region(side))
    axis = spec.axis
    tag = f"k{spec.index}"
    if p % 2:
        a = p // 2
        touched = slice_circuit.qubits() | spec.b_region | spec.f_region
        gamma = slice_circuit.compact()
        anc: frozenset[Qubit] = frozenset()
        if a:
            enc = encode_rho_power(slice_circuit, spec, side, a, tag=tag, avoid=touched)
            gamma = gamma.then(enc.circuit).compact()
            anc = enc.ancilla
        m_reg = (slice_circuit.qubits() & spec.m_region) | anc
        l_reg = (touched | gamma.qubits()) - m_reg
        return Synthesis(gamma, frozenset(l_reg), frozenset(m_reg), frozenset(), axis,
                         label=f"trace{p}[{spec.index}]")
    a = p // 2
    data = {q: q.tagged(f"{tag}d") for q in side_q}
    ref = {q: q.tagged(f"{tag}r") for q in side_q}
    bell = [Gate((data[q],), H, 0) for q in side_q] + [Gate((data[q], ref[q]), CNOT, 1) for q in side_q]
    prep = LayeredCircuit.from_gates(slice_circuit.dims, bell, 2)
    enc = encode_rho_power(slice_circuit, spec, side, a, tag=tag, data=data,
                           avoid=set(data.values()) | set(ref.values()))
    gamma = prep.then(enc.circuit).compact()
    return Synthesis(gamma, frozenset(data.values()) | frozenset(ref.values()), enc.ancilla, frozenset(),
                     axis, factor=float(2 ** len(side_q)), label=f"trace{p}[{spec.index}]")


def kappa_syntheses(slice_circuit: LayeredCircuit, spec: SliceSpec, T: int,
                    side: str = "B") -> tuple[Synthesis, Synthesis]:
    """(Λ^T, Z^T) with Λ^T = tr ρ^{2T+1} and Z^T = tr ρ^T."""
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    return (trace_power_synthesis(slice_circuit, spec, 2 * T + 1, side),
            trace_power_synthesis(slice_circuit, spec, T, side))


@dataclass(frozen=True)
class KappaEstimate:
    value: float
    T: int
    eps2: float
    numerator: float
    denominator: float


def evaluate(s: Synthesis, base: BaseCase, eps: float) -> float:
    return s.factor * base(replace(s, factor=1.0), eps)


def estimate_kappa(slice_circuit: LayeredCircuit, spec: SliceSpec, T: int, eps2: float,
                   base: BaseCase, side: str = "B") -> KappaEstimate:
    """κ = B(tr ρ^{2T+1}) / B(tr ρ^{2T})."""
    if not eps2 > 0:
        raise ValueError(f"ε₂ must be positive, got {eps2}")
    num_s = trace_power_synthesis(slice_circuit, spec, 2 * T + 1, side)
    den_s = trace_power_synthesis(slice_circuit, spec, 2 * T, side)
    num = evaluate(num_s, base, eps2)
    den = evaluate(den_s, base, eps2 / den_s.factor)
    if den <= eps2:
        raise ValueError(f"slice {spec.index} too light for κ: denominator {den:.3e} <= ε₂ = {eps2:.3e}")
    return KappaEstimate(num / den, T, eps2, num, den)


def dense_base(s: Synthesis, eps: float = 0.0) -> float:
    return synthesis_value_dense(s)
