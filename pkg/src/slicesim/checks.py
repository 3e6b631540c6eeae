"""Dense-oracle property suites.

Each suite states one structural fact about slices, block encodings or the
recombination step, checks it on a list of cases and returns a SuiteResult
holding every violation and the measured constants.  Used by ``verify`` and the
acceptance tests.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import dense
from .blockenc import encode_rho_power, projector_distance, rho_dense, top_eigen
from .lattice import Gate, LatticeDims, LayeredCircuit, Qubit, SliceSpec, decompose_wrap, \
    extract_slice_circuit, haar_unitary
from .synthesis import estimate_kappa


@dataclass
class SuiteResult:
    name: str
    statement: str
    checked: int = 0
    violations: list[dict] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.checked > 0 and not self.violations

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.name}: {self.checked} checks, {len(self.violations)} violations | {self.statement}"

    def to_dict(self) -> dict:
        return {"name": self.name, "statement": self.statement, "checked": self.checked,
                "passed": self.passed, "violations": self.violations[:20], "stats": self.stats}


@dataclass(frozen=True)
class Case:
    """A circuit together with the slices the suites should look at."""

    name: str
    circuit: LayeredCircuit
    slices: tuple[SliceSpec, ...]


# ------------------------------------------------------------ block encodings


@dataclass(frozen=True)
class EncodingCase:
    slice_circuit: LayeredCircuit
    spec: SliceSpec
    side: str
    K: int

    def register_count(self) -> int:
        touched = self.slice_circuit.qubits()
        side = self.spec.side_region(self.side)
        per_copy = len(touched | side) + len(touched & self.spec.m_region)
        return len(side) + self.K * per_copy


def random_encoding_cases(rng: np.random.Generator, count: int, max_qubits: int = 12,
                          powers: Sequence[int] = (1, 2, 3), depths: Sequence[int] = (1, 2, 3),
                          max_tries: int = 100000) -> list[EncodingCase]:
    """Random brickwork circuits on a 1×1×(b+m+f) slice, rejected above ``max_qubits`` registers."""
    out = []
    for _ in range(max_tries):
        if len(out) == count:
            break
        b, m, f = (int(v) for v in rng.integers(1, 3, size=3))
        d = int(rng.choice(depths))
        K = int(rng.choice(powers))
        side = "F" if rng.random() < 0.5 else "B"
        n = b + m + f
        dims = LatticeDims(1, 1, n)
        spec = SliceSpec(2, frozenset(Qubit(0, 0, z) for z in range(b)),
                          frozenset(Qubit(0, 0, z) for z in range(b, b + m)),
                          frozenset(Qubit(0, 0, z) for z in range(b + m, n)), 1)
        gates = []
        start = int(rng.integers(0, 2))
        for layer in range(d):
            for z in range((layer + start) % 2, n - 1, 2):
                if rng.random() < 0.85:
                    gates.append(Gate((Qubit(0, 0, z), Qubit(0, 0, z + 1)), haar_unitary(4, rng), layer))
        c = LayeredCircuit.from_gates(dims, gates, d)
        case = EncodingCase(c, spec, side, K)
        if c.depth and case.register_count() <= max_qubits:
            out.append(case)
    return out


def block_encoding_suite(cases: Sequence[EncodingCase], tol: float = 1e-10) -> SuiteResult:
    res = SuiteResult("block-encoding",
                      "post-selected block of the copy/swap circuit equals ρ^K of the slice state")
    worst, depth_ratio = 0.0, 0.0
    for idx, case in enumerate(cases):
        enc = encode_rho_power(case.slice_circuit, case.spec, case.side, case.K)
        block = enc.extract()
        target = np.linalg.matrix_power(rho_dense(case.slice_circuit, case.spec, case.side), case.K)
        err = dense.spectral_norm(block - target)
        worst = max(worst, err)
        d = max(case.slice_circuit.depth, 1)
        depth_ratio = max(depth_ratio, enc.depth / (d * case.K ** 2))
        res.checked += 1
        if err > tol:
            res.violations.append({"case": idx, "K": case.K, "side": case.side, "error": err})
    res.stats = {"max_spectral_error": worst, "max_depth_over_dK2": depth_ratio}
    return res


# --------------------------------------------------------- slice properties


def _slice_data(c: LayeredCircuit, sl: SliceSpec, side: str = "F"):
    sc = extract_slice_circuit(c, sl)
    rho = rho_dense(sc, sl, side)
    lam, _ = top_eigen(rho)
    return sc, rho, lam


def projector_bound_suite(cases: Sequence[Case], powers: Sequence[int] = (1, 2, 3, 4, 5),
                          lam_range: tuple[float, float] = (0.7, 1.0), limit: int | None = None) -> SuiteResult:
    """Slices whose normalized top weight is 1 must give distance 0 (within 1e-12)."""
    res = SuiteResult("projector-bound", "‖(ρ/λ₁)^K − |w₁⟩⟨w₁|‖₁ ≤ ((1−λ₁)/λ₁)^K with λ₁ the top eigenvalue")
    used, unit_slices, at_unit = 0, 0, 0.0
    for case in cases:
        for sl in case.slices:
            if limit is not None and used >= limit:
                break
            _, rho, lam = _slice_data(case.circuit, sl)
            rank_one = lam >= (1 - 1e-12) * float(np.trace(rho).real)
            if not (lam_range[0] <= lam <= lam_range[1] or rank_one):
                continue
            used += 1
            unit_slices += rank_one
            for K in powers:
                dist = projector_distance(rho, K)
                bound = ((1 - lam) / lam) ** K
                res.checked += 1
                if rank_one:
                    at_unit = max(at_unit, dist)
                if dist > bound + 1e-12 or (rank_one and dist > 1e-12):
                    res.violations.append({"case": case.name, "slice": sl.index, "K": K, "distance": dist,
                                           "bound": bound})
    res.stats = {"slices": used, "rank_one_slices": unit_slices, "max_distance_rank_one": at_unit}
    return res


def independence_suite(cases: Sequence[Case], tol: float = 1e-12) -> SuiteResult:
    res = SuiteResult("slice-independence", "p(M_i=0 ∧ M_j=0) = p(M_i=0)·p(M_j=0) for separated slices")
    worst = 0.0
    for case in cases:
        psi = dense.statevector(case.circuit)
        for si, sj in itertools.combinations(case.slices, 2):
            pi = dense.project_zero(psi, si.m_region).norm2()
            pj = dense.project_zero(psi, sj.m_region).norm2()
            pij = dense.project_zero(psi, si.m_region | sj.m_region).norm2()
            gap = abs(pij - pi * pj)
            worst = max(worst, gap)
            res.checked += 1
            if gap > tol:
                res.violations.append({"case": case.name, "pair": [si.index, sj.index], "gap": gap})
    res.stats = {"max_gap": worst}
    return res


def slice_weights(c: LayeredCircuit, slices: Sequence[SliceSpec]) -> list[float]:
    psi = dense.statevector(c)
    return [dense.project_zero(psi, sl.m_region).norm2() for sl in slices]


def heavy_count_suite(cases: Sequence[Case], fractions: Sequence[float] = (0.25, 0.5, 0.75)) -> SuiteResult:
    """For value > 1/q, at least ⌈h|K|⌉ slices have p(M_i=0) ≥ (1/q)^{1/((1−h)|K|)}.

    q runs over 1/value (the tightest choice, nudged up) and a few looser powers of two.
    """
    res = SuiteResult("heavy-slice-count",
                      "value > 1/q forces ⌈h|K|⌉ slices with weight ≥ (1/q)^{1/((1−h)|K|)}")
    for case in cases:
        value = dense.zero_probability(case.circuit)
        if value <= 0 or not case.slices:
            continue
        weights = slice_weights(case.circuit, case.slices)
        n = len(case.slices)
        qs = [1 / value * (1 + 1e-9)] + [2.0 ** k for k in range(1, 41) if 2.0 ** k > 1 / value][:4]
        for q, h in itertools.product(qs, fractions):
            thr = (1 / q) ** (1 / ((1 - h) * n))
            need = math.ceil(h * n)
            have = sum(w >= thr for w in weights)
            res.checked += 1
            if have < need:
                res.violations.append({"case": case.name, "q": q, "h": h, "have": have, "need": need})
    return res


def top_schmidt_suite(cases: Sequence[Case], c_max: float = 4.0) -> SuiteResult:
    res = SuiteResult("top-schmidt-bound", "p(M=0) ≥ 1−e implies top eigenvalue λ₁ ≥ 1 − 4e")
    worst_c = 0.0
    for case in cases:
        for sl in case.slices:
            _, rho, lam = _slice_data(case.circuit, sl)
            e = 1 - float(np.trace(rho).real)
            res.checked += 1
            if e > 1e-14:
                worst_c = max(worst_c, (1 - lam) / e)
            if lam < 1 - c_max * e - 1e-12:
                res.violations.append({"case": case.name, "slice": sl.index, "e": e, "lambda1": lam})
    res.stats = {"empirical_constant": worst_c}
    return res


# --------------------------------------------------- recombination properties


def _apply(state: dense.DenseState, qubits: Sequence[Qubit], mat: np.ndarray) -> dense.DenseState:
    legs = [state.qubit_order.index(q) for q in qubits]
    k = len(qubits)
    out = np.tensordot(mat.reshape((2,) * (2 * k)), state.tensor(), axes=(list(range(k, 2 * k)), legs))
    return dense.DenseState(np.moveaxis(out, list(range(k)), legs).reshape(-1), state.qubit_order)


def _run_on(state: dense.DenseState, c: LayeredCircuit) -> dense.DenseState:
    axes = {q: i for i, q in enumerate(state.qubit_order)}
    t = state.tensor()
    for g in c.gates:
        t = dense.apply_gate(t, axes, g)
    return dense.DenseState(t.reshape(-1), state.qubit_order)


def _projector_power(rho: np.ndarray, lam: float, K: int) -> np.ndarray:
    return np.linalg.matrix_power(rho / lam, K)


def alternating_residual(c: LayeredCircuit, slices: Sequence[SliceSpec], K: int) -> tuple[float, float, float]:
    """(‖Σ_σ (−1)^{|σ|} ⟨0_M|Π_σ ψ⟩⟨…|‖₁, e, g) with Π_σ the wrapped projectors of σ."""
    psi = dense.statevector(c)
    ms = frozenset().union(*[sl.m_region for sl in slices])
    ops, lams = [], []
    for sl in slices:
        _, rho, lam = _slice_data(c, sl)
        lams.append(lam)
        wr = decompose_wrap(c, sl)[1]
        ops.append((wr, tuple(sorted(sl.f_region)), _projector_power(rho, lam, K)))
    vecs, coef = [], []
    for r in range(len(slices) + 1):
        for sigma in itertools.combinations(range(len(slices)), r):
            st = psi
            for k in sigma:
                wr, fq, pk = ops[k]
                st = _run_on(_apply(_run_on(st, wr.dagger()), fq, pk), wr)
            st = dense.project_zero(st, ms)
            vecs.append(st.amplitudes)
            coef.append((-1) ** r)
    lhs = dense.lowrank_trace_norm(np.array(vecs).T, np.array(coef, dtype=float))
    e = max(1 - lam for lam in lams)
    g = max(((1 - lam) / lam) ** K for lam in lams)
    return lhs, e, g


def inclusion_exclusion_suite(cases: Sequence[Case], Delta: int = 2, K: int = 3) -> SuiteResult:
    res = SuiteResult("inclusion-exclusion",
                      "alternating sum over projector subsets has trace norm ≤ (2e+2g)^Δ")
    ratio = 0.0
    for case in cases:
        if len(case.slices) < Delta:
            continue
        lhs, e, g = alternating_residual(case.circuit, case.slices[:Delta], K)
        bound = (2 * e + 2 * g) ** Delta
        ratio = max(ratio, lhs / bound if bound > 0 else (0.0 if lhs < 1e-12 else math.inf))
        res.checked += 1
        if lhs > bound + 1e-12:
            res.violations.append({"case": case.name, "residual": lhs, "bound": bound, "e": e, "g": g})
    res.stats = {"max_residual_over_bound": ratio}
    return res


def product_split_distance(c: LayeredCircuit, sl: SliceSpec, K: int) -> tuple[float, float, float]:
    """(‖ΩΩ† − (1/λ₁) tr_F ΞΞ†_L ⊗ tr_B ΞΞ†_R‖₁, g, λ₁)."""
    bmf, rho_f, lam = _slice_data(c, sl, "F")
    rho_b = rho_dense(bmf, sl, "B")
    wl, wr, lp, rp = decompose_wrap(c, sl)
    pf = _projector_power(rho_f, lam, K)
    pb = _projector_power(rho_b, lam, K)
    fq, bq = tuple(sorted(sl.f_region)), tuple(sorted(sl.b_region))
    all_q = c.dims.qubits()
    left_q = [q for q in all_q if q.coord(sl.axis) < sl.span("B")[0]]
    right_q = [q for q in all_q if q.coord(sl.axis) > sl.span("F")[1]]

    psi = dense.statevector(c)
    omega = _run_on(_apply(_run_on(psi, wr.dagger()), fq, pf), wr)
    omega = dense.project_zero(omega, sl.m_region)

    def xi(extra: list[Qubit], side_gates: LayeredCircuit, proj_q, proj):
        order = tuple(sorted(set(extra) | sl.k_region))
        st = dense.run(bmf.then(side_gates), order)
        st = dense.project_zero(st, sl.m_region)
        return _apply(st, proj_q, proj)

    xl = xi(left_q, c.subcircuit(wl.gates + lp.gates), fq, pf)
    xr = xi(right_q, c.subcircuit(wr.gates + rp.gates), bq, pb)

    def pieces(state: dense.DenseState, traced: Sequence[Qubit]):
        keep = tuple(q for q in state.qubit_order if q not in traced)
        t = state.reorder(tuple(traced) + keep).amplitudes.reshape(2 ** len(traced), -1)
        return [row for row in t], keep

    a_rows, a_order = pieces(xl, fq)
    b_rows, b_order = pieces(xr, bq)
    vecs, coef = [omega.amplitudes], [1.0]
    for a, b in itertools.product(a_rows, b_rows):
        prod = dense.DenseState(np.kron(a, b), a_order + b_order).reorder(omega.qubit_order)
        vecs.append(prod.amplitudes)
        coef.append(-1.0 / lam)
    dist = dense.lowrank_trace_norm(np.array(vecs).T, np.array(coef))
    g = ((1 - lam) / lam) ** K
    return dist, g, lam


def product_split_suite(cases: Sequence[Case], K: int = 3, exact_tol: float = 1e-10) -> SuiteResult:
    res = SuiteResult("product-split",
                      "projected state is within 6g of (1/λ₁)·tr_F ΞΞ†_L ⊗ tr_B ΞΞ†_R; exact when product")
    ratio = 0.0
    exact, worst_exact = 0, 0.0
    for case in cases:
        for sl in case.slices:
            dist, g, lam = product_split_distance(case.circuit, sl, K)
            _, rho, _ = _slice_data(case.circuit, sl)
            rank_one = lam >= (1 - 1e-12) * float(np.trace(rho).real)
            res.checked += 1
            if g > 1e-13:
                ratio = max(ratio, dist / (6 * g))
            if rank_one:
                exact += 1
                worst_exact = max(worst_exact, dist)
            if dist > max(6 * g, exact_tol) or (rank_one and dist > exact_tol):
                res.violations.append({"case": case.name, "slice": sl.index, "distance": dist, "g": g,
                                       "rank_one": rank_one})
    res.stats = {"max_distance_over_6g": ratio, "rank_one_slices": exact, "max_distance_rank_one": worst_exact}
    return res


def kappa_bound(lam: float, T: int, eps2: float) -> float:
    return 10 * ((1 - lam) ** (2 * T) + eps2) / lam ** (2 * T + 1)


def kappa_suite(cases: Sequence[Case], base: Callable, Ts: Sequence[int] = (2, 3, 4), eps2: float = 1e-8,
                limit: int | None = None, floor: float = 1e-13) -> SuiteResult:
    """The decrease-with-T share counts only slices whose error at the smallest T exceeds ``floor``."""
    res = SuiteResult("kappa-accuracy",
                      "|κ − λ₁| ≤ 10((1−λ₁)^{2T}+ε₂)/λ₁^{2T+1}; error shrinks as T grows")
    monotone, slices_seen, skipped, at_floor = 0, 0, 0, 0
    worst_c = 0.0
    for case in cases:
        for sl in case.slices:
            if limit is not None and slices_seen >= limit:
                break
            sc, _, lam = _slice_data(case.circuit, sl, "B")
            errs = []
            try:
                ests = [estimate_kappa(sc, sl, T, eps2, base) for T in Ts]
            except ValueError:
                skipped += 1  # denominator below ε₂: slice too light for κ
                continue
            for T, est in zip(Ts, ests):
                err = abs(est.value - lam)
                errs.append(err)
                res.checked += 1
                bound = kappa_bound(lam, T, eps2)
                worst_c = max(worst_c, 10 * err / bound)
                if err > bound:
                    res.violations.append({"case": case.name, "slice": sl.index, "T": T, "error": err,
                                           "bound": bound})
            slices_seen += 1
            if errs[0] <= floor:
                at_floor += 1  # already at rounding level, nothing left to shrink
                continue
            monotone += all(b < a or max(a, b) <= floor for a, b in zip(errs, errs[1:]))
    resolved = slices_seen - at_floor
    share = monotone / resolved if resolved else 1.0
    res.stats = {"slices": slices_seen, "skipped_light": skipped, "at_rounding_floor": at_floor,
                 "decreasing_share": share, "empirical_constant": worst_c}
    if resolved and share < 0.95:
        res.violations.append({"decreasing_share": share, "required": 0.95})
    return res


SUITES = ("block-encoding", "projector-bound", "slice-independence", "heavy-slice-count", "top-schmidt-bound",
          "inclusion-exclusion", "product-split", "kappa-accuracy")
