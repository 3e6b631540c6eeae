"""Base-case probability estimation for thin syntheses.

``estimate`` runs a matrix-product-state simulation of the synthesis circuit
with sites ordered along the long axis.  Qubits enter the chain at their first
gate and, when post-selected, leave it right after their last gate, so the
chain only ever holds the live frontier plus traced qubits.  ``exact_contract``
is an independent route: the doubled ket/bra tensor network contracted with
opt_einsum.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import opt_einsum as oe

from .lattice import SWAP, Gate, Qubit
from .synthesis import Synthesis

_SWAP4 = SWAP.reshape(2, 2, 2, 2)


@dataclass(frozen=True)
class MpsConfig:
    max_bond: int | None = None
    truncation_tol: float = 1e-14
    contraction_order: str = "axis"
    w_max: int = 4
    chi_start: int = 8
    gate_schedule: str = "frontier"

    def __post_init__(self):
        if self.max_bond is not None and self.max_bond < 1:
            raise ValueError("max_bond must be >= 1")
        if self.truncation_tol < 0:
            raise ValueError("truncation_tol must be >= 0")
        if self.contraction_order not in ("axis", "register"):
            raise ValueError(f"unknown contraction order {self.contraction_order!r}")
        if self.gate_schedule not in ("frontier", "layer"):
            raise ValueError(f"unknown gate schedule {self.gate_schedule!r}")


@dataclass(frozen=True)
class SlabSynthesis:
    synthesis: Synthesis
    thin_axis: int
    thickness: int

    @classmethod
    def wrap(cls, s: Synthesis, w_max: int = 4) -> "SlabSynthesis":
        sites = {q.site for q in s.qubits} or {(0, 0, 0)}
        others = [a for a in range(3) if a != s.axis]
        ext = {a: max(p[a] for p in sites) - min(p[a] for p in sites) + 1 for a in others}
        thin = min(others, key=lambda a: (ext[a], a))
        if ext[thin] > w_max:
            raise ValueError(f"slab thickness {ext[thin]} exceeds w_max={w_max}; "
                             "divide further or evaluate in dense mode")
        return cls(s, thin, ext[thin])


@dataclass
class RunInfo:
    chi: int | None
    max_bond: int = 1
    discarded: float = 0.0
    sites_peak: int = 0
    bond_profile: list[int] = field(default_factory=list)
    seconds: float = 0.0


class MPS:
    """Unnormalized MPS over a dynamic set of qubits, tensors shaped (χl, 2, χr)."""

    def __init__(self, rank, max_bond: int | None, tol: float):
        self.rank = rank
        self.max_bond = max_bond
        self.tol = tol
        self.sites: list[Qubit] = []
        self.tensors: list[np.ndarray] = []
        self.center = 0
        self.scalar = 1.0 + 0j
        self.discarded = 0.0
        self.peak_bond = 1
        self.peak_sites = 0

    # -- structure
    def _bond(self, k: int) -> int:
        """Dimension of the bond to the left of position k."""
        if k < len(self.tensors):
            return self.tensors[k].shape[0]
        return self.tensors[-1].shape[2] if self.tensors else 1

    def add(self, q: Qubit) -> None:
        r = self.rank(q)
        k = next((i for i, p in enumerate(self.sites) if self.rank(p) > r), len(self.sites))
        chi = self._bond(k)
        t = np.zeros((chi, 2, chi), dtype=complex)
        t[:, 0, :] = np.eye(chi)
        self.sites.insert(k, q)
        self.tensors.insert(k, t)
        if self.center >= k and len(self.tensors) > 1:
            self.center += 1
        self.peak_sites = max(self.peak_sites, len(self.sites))

    def index(self, q: Qubit) -> int:
        return self.sites.index(q)

    def _move_center(self, k: int) -> None:
        while self.center < k:
            c = self.center
            a = self.tensors[c]
            l, d, r = a.shape
            qm, rm = np.linalg.qr(a.reshape(l * d, r))
            self.tensors[c] = qm.reshape(l, d, -1)
            self.tensors[c + 1] = np.tensordot(rm, self.tensors[c + 1], axes=(1, 0))
            self.center += 1
        while self.center > k:
            c = self.center
            a = self.tensors[c]
            l, d, r = a.shape
            qm, rm = np.linalg.qr(a.reshape(l, d * r).T)
            self.tensors[c] = qm.T.reshape(-1, d, r)
            self.tensors[c - 1] = np.tensordot(self.tensors[c - 1], rm.T, axes=(2, 0))
            self.center -= 1

    def _two_site(self, k: int, u4: np.ndarray) -> None:
        """Apply a 4-index gate u4[o1, o2, i1, i2] on positions (k, k+1)."""
        self._move_center(k)
        a, b = self.tensors[k], self.tensors[k + 1]
        theta = np.einsum("aib,bjc->aijc", a, b)
        theta = np.einsum("xyij,aijc->axyc", u4, theta)
        l, _, _, r = theta.shape
        u, s, vh = np.linalg.svd(theta.reshape(l * 2, 2 * r), full_matrices=False)
        total = float(np.sum(s ** 2))
        keep = int(np.sum(s > self.tol * s[0])) if s.size and s[0] > 0 else 1
        keep = max(keep, 1)
        if self.max_bond is not None:
            keep = min(keep, self.max_bond)
        if total > 0:
            self.discarded += float(np.sum(s[keep:] ** 2)) / total
        u, s, vh = u[:, :keep], s[:keep], vh[:keep]
        self.tensors[k] = u.reshape(l, 2, keep)
        self.tensors[k + 1] = (s[:, None] * vh).reshape(keep, 2, r)
        self.center = k + 1
        self.peak_bond = max(self.peak_bond, keep)

    # -- gates
    def apply1(self, q: Qubit, u: np.ndarray) -> None:
        k = self.index(q)
        self.tensors[k] = np.einsum("ij,ajb->aib", u, self.tensors[k])

    def apply2(self, q1: Qubit, q2: Qubit, u: np.ndarray) -> None:
        i, j = self.index(q1), self.index(q2)
        lo, hi = min(i, j), max(i, j)
        # pull the far qubit toward the near one with adjacent swaps
        target = lo if abs(self.center - lo) <= abs(self.center - hi) else hi
        if target == lo:
            for k in range(hi - 1, lo, -1):
                self._swap(k)
            pos1, pos2 = (lo, lo + 1) if i < j else (lo + 1, lo)
        else:
            for k in range(lo, hi - 1):
                self._swap(k)
            pos1, pos2 = (hi - 1, hi) if i < j else (hi, hi - 1)
        u4 = u.reshape(2, 2, 2, 2)
        if pos1 > pos2:
            u4 = u4.transpose(1, 0, 3, 2)
        self._two_site(min(pos1, pos2), u4)

    def _swap(self, k: int) -> None:
        self._two_site(k, _SWAP4)
        self.sites[k], self.sites[k + 1] = self.sites[k + 1], self.sites[k]

    def project_zero(self, q: Qubit) -> None:
        k = self.index(q)
        self._move_center(k)
        p = self.tensors[k][:, 0, :]
        del self.tensors[k]
        del self.sites[k]
        if k < len(self.tensors):
            self.tensors[k] = np.tensordot(p, self.tensors[k], axes=(1, 0))
            self.center = k
        elif k > 0:
            self.tensors[k - 1] = np.tensordot(self.tensors[k - 1], p, axes=(2, 0))
            self.center = k - 1
        else:
            self.scalar *= complex(p.reshape(-1)[0])
            self.center = 0

    def norm2(self) -> float:
        env = np.ones((1, 1), dtype=complex)
        for a in self.tensors:
            env = np.einsum("ab,asc,bsd->cd", env, a, a.conj())
        return float(abs(self.scalar) ** 2 * env.reshape(-1)[0].real) if self.tensors else float(abs(self.scalar) ** 2)

    def bonds(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]


def _rank(s: Synthesis, policy: str):
    axis = s.axis
    others = [a for a in range(3) if a != axis]
    if policy == "axis":
        return lambda q: (q.coord(axis), q.coord(others[0]), q.coord(others[1]), q.reg)
    return lambda q: (q.reg.split(".")[0], q.coord(axis), q.coord(others[0]), q.coord(others[1]), q.reg)


def frontier_order(gates: list[Gate]) -> list[Gate]:
    """A dependency-respecting gate order that keeps few qubits live.

    Among the gates whose predecessors (on every qubit) are done, take the one
    that introduces the fewest new qubits, earliest first.  Block encodings
    then run copy by copy instead of holding all K copies at once.
    """
    prev: dict[Qubit, int] = {}
    waiting = [0] * len(gates)
    followers: list[list[int]] = [[] for _ in gates]
    for idx, g in enumerate(gates):
        for q in g.support:
            if q in prev:
                followers[prev[q]].append(idx)
                waiting[idx] += 1
            prev[q] = idx
    ready = {i for i, w in enumerate(waiting) if w == 0}
    live: set[Qubit] = set()
    order = []
    while ready:
        pick = min(ready, key=lambda i: (sum(q not in live for q in gates[i].support), i))
        ready.remove(pick)
        order.append(gates[pick])
        live.update(gates[pick].support)
        for j in followers[pick]:
            waiting[j] -= 1
            if waiting[j] == 0:
                ready.add(j)
    return order


def simulate(s: Synthesis, max_bond: int | None, tol: float, policy: str = "axis",
             schedule: str = "frontier") -> tuple[float, RunInfo]:
    """Probability that M ∪ N read zero (L traced) from one MPS sweep."""
    start = time.perf_counter()
    gates = s.relevant_gates()
    if schedule == "frontier":
        gates = frontier_order(gates)
    elif schedule != "layer":
        raise ValueError(f"unknown gate schedule {schedule!r}")
    info = RunInfo(chi=max_bond)
    if not gates:
        info.seconds = time.perf_counter() - start
        return float(s.factor), info
    last: dict[Qubit, int] = {}
    for idx, g in enumerate(gates):
        for q in g.support:
            last[q] = idx
    selected = s.M | s.N
    mps = MPS(_rank(s, policy), max_bond, tol)
    live: set[Qubit] = set()
    for idx, g in enumerate(gates):
        for q in g.support:
            if q not in live:
                mps.add(q)
                live.add(q)
        if g.arity == 1:
            mps.apply1(g.support[0], g.unitary)
        else:
            mps.apply2(g.support[0], g.support[1], g.unitary)
        for q in g.support:
            if last[q] == idx and q in selected:
                mps.project_zero(q)
                live.discard(q)
        bonds = mps.bonds()
        if max(bonds, default=1) > max(info.bond_profile, default=0):
            info.bond_profile = bonds  # snapshot at the widest point
    value = s.factor * mps.norm2()
    info.max_bond = mps.peak_bond
    info.discarded = mps.discarded
    info.sites_peak = mps.peak_sites
    info.seconds = time.perf_counter() - start
    return float(value), info


def estimate_with_info(slab: SlabSynthesis | Synthesis, eps: float, cfg: MpsConfig = MpsConfig()):
    if not eps > 0:
        raise ValueError(f"ε must be positive, got {eps}")
    s = slab.synthesis if isinstance(slab, SlabSynthesis) else SlabSynthesis.wrap(slab, cfg.w_max).synthesis
    if cfg.max_bond is None:
        value, info = simulate(s, None, cfg.truncation_tol, cfg.contraction_order, cfg.gate_schedule)
        return value, [info]
    runs = []
    chi = min(cfg.chi_start, cfg.max_bond)
    prev, info = simulate(s, chi, cfg.truncation_tol, cfg.contraction_order, cfg.gate_schedule)
    runs.append(info)
    while info.max_bond >= chi and chi < cfg.max_bond:
        chi = min(2 * chi, cfg.max_bond)
        cur, info = simulate(s, chi, cfg.truncation_tol, cfg.contraction_order, cfg.gate_schedule)
        runs.append(info)
        done = abs(cur - prev) < eps / 2
        prev = cur
        if done:
            break
    return prev, runs


def estimate(slab: SlabSynthesis | Synthesis, eps: float, cfg: MpsConfig = MpsConfig()) -> float:
    value, _ = estimate_with_info(slab, eps, cfg)
    return float(min(max(value, 0.0), 1.0)) if slab_factor(slab) == 1.0 else value


def slab_factor(slab) -> float:
    s = slab.synthesis if isinstance(slab, SlabSynthesis) else slab
    return s.factor


def exact_contract(slab: SlabSynthesis | Synthesis, cap: int = 20000) -> float:
    """Contract ⟨0|Γ† (|0⟩⟨0|_{M∪N} ⊗ I_L) Γ|0⟩ as one tensor network."""
    s = slab.synthesis if isinstance(slab, SlabSynthesis) else slab
    gates = s.relevant_gates()
    if not gates:
        return float(s.factor)
    ket0 = np.array([1.0, 0.0], dtype=complex)
    operands: list = []
    counter = iter(range(10 ** 9))
    ket_leg: dict[Qubit, int] = {}
    bra_leg: dict[Qubit, int] = {}
    for q in sorted({q for g in gates for q in g.support}):
        ket_leg[q], bra_leg[q] = next(counter), next(counter)
        operands += [ket0, [ket_leg[q]], ket0, [bra_leg[q]]]
    for g in gates:
        k = g.arity
        u = g.unitary.reshape((2,) * (2 * k))
        out_k = [next(counter) for _ in range(k)]
        out_b = [next(counter) for _ in range(k)]
        operands += [u, out_k + [ket_leg[q] for q in g.support]]
        operands += [u.conj(), out_b + [bra_leg[q] for q in g.support]]
        for q, a, b in zip(g.support, out_k, out_b):
            ket_leg[q], bra_leg[q] = a, b
    selected = s.M | s.N
    for q in ket_leg:
        if q in selected:
            operands += [ket0, [ket_leg[q]], ket0, [bra_leg[q]]]
        else:
            operands += [np.eye(2, dtype=complex), [ket_leg[q], bra_leg[q]]]
    if len(operands) // 2 > cap:
        raise ValueError(f"network has {len(operands) // 2} tensors, above the cap of {cap}")
    value = oe.contract(*operands, [], optimize="auto")
    return float(s.factor * complex(value).real)


class MpsBase:
    """Callable base case B(S, ε) backed by ``estimate``; keeps call statistics."""

    def __init__(self, cfg: MpsConfig = MpsConfig()):
        self.cfg = cfg
        self.calls = 0
        self.seconds = 0.0
        self.peak_bond = 0
        self.discarded = 0.0
        self.last_runs: list[RunInfo] = []

    def __call__(self, s: Synthesis, eps: float) -> float:
        t0 = time.perf_counter()
        value, runs = estimate_with_info(s, max(eps, 1e-300), self.cfg)
        self.calls += 1
        self.seconds += time.perf_counter() - t0
        self.peak_bond = max(self.peak_bond, max(r.max_bond for r in runs))
        self.discarded = max(self.discarded, runs[-1].discarded)
        self.last_runs = runs
        return float(min(max(value, 0.0), 1.0)) if s.factor == 1.0 else value


class ExactBase:
    def __init__(self, cap: int = 20000):
        self.cap = cap
        self.calls = 0
        self.seconds = 0.0

    def __call__(self, s: Synthesis, eps: float) -> float:
        t0 = time.perf_counter()
        value = exact_contract(s, self.cap)
        self.calls += 1
        self.seconds += time.perf_counter() - t0
        return value
