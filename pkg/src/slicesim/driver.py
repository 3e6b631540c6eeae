"""The divide-and-conquer estimator for |⟨0…0|C|0…0⟩|².

``a_full`` handles the easy cases (large δ, tiny δ, too many light slices) and
otherwise hands the root synthesis to ``a_recursive``, which cuts the active
region at Δ heavy slices and recombines the pieces with an inclusion–exclusion
sum over the Schmidt-projector insertions.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

from . import dense
from .lattice import LayeredCircuit, SliceSpec, enumerate_slices, extract_slice_circuit, require_valid
from .mps import ExactBase, MpsBase
from .synthesis import KappaEstimate, Synthesis, estimate_kappa, left_child, make_root_synthesis, \
    middle_child, right_child, trace_power_synthesis

BaseCase = Callable[[Synthesis, float], float]


@dataclass(frozen=True)
class EstimatorParams:
    """Knobs of the estimator.  ``None`` geometry fields take derived defaults."""

    Delta: int = 1
    K: int = 3
    T: int = 3
    eta: int = 1
    eps: float = 1e-8
    eps2: float = 1e-8
    h: float = 1.0
    w0: int | None = None
    z_width: int | None = None
    w_slice: int = 1
    m_width: int | None = 2
    spacing: int = 2
    offset: int | None = 1
    axis: int | None = None
    brute_force_delta: float | None = None
    memoize: bool = True
    asymptotic: bool = False
    depth_hint: int | None = None

    def __post_init__(self):
        for name in ("Delta", "K", "T", "w_slice"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if not (self.eps > 0 and self.eps2 > 0 and self.h > 0):
            raise ValueError("eps, eps2 and h must be positive")
        if self.spacing < 0:
            raise ValueError("spacing must be >= 0")

    @property
    def pitch(self) -> int:
        wm = self.w_slice if self.m_width is None else self.m_width
        return 2 * self.w_slice + wm + self.spacing

    def zone(self, depth: int) -> int:
        if self.z_width is not None:
            return self.z_width
        if self.asymptotic:
            return 10 * depth * (self.Delta + math.ceil(self.h) + 2)
        return (self.Delta + 1) * self.pitch

    def stop_width(self, depth: int) -> int:
        if self.w0 is not None:
            return self.w0
        if self.asymptotic:
            return 20 * depth * (self.Delta + math.ceil(self.h) + 2)
        return 2 * self.zone(depth)


def asymptotic_params(n: int, delta: float) -> dict:
    """The parameter schedule of the asymptotic analysis for ``n`` qubits."""
    ln = math.log2(n)
    lln = math.log2(max(ln, 2.0))
    eps = delta * 2 ** (-10 * ln * lln)
    return {
        "Delta": ln, "K": ln ** 3, "T": ln ** 3, "h": ln ** 7, "eps": eps, "eps2": eps,
        "eta": ln / (3 * math.log2(4 / 3)), "brute_force_delta": float(n) ** (-(ln ** 2)),
    }


def asymptotic_feasible(n: int, dims: tuple[int, int, int], depth: int) -> tuple[bool, str]:
    p = asymptotic_params(n, 0.25)
    w0 = 20 * depth * (math.ceil(p["Delta"]) + math.ceil(p["h"]) + 2)
    longest = max(dims)
    if w0 > longest:
        return False, f"stopping width {w0} exceeds the longest lattice side {longest}"
    return True, "ok"


# ------------------------------------------------------------------ reports


@dataclass
class HeavySliceReport:
    weights: dict[int, float]
    eps_tilde: float
    threshold: float
    accepted: list[int]
    slices: list[SliceSpec] = field(repr=False, default_factory=list)

    @property
    def accept_level(self) -> float:
        return self.threshold + self.eps_tilde

    def to_dict(self) -> dict:
        return {"weights": {str(k): v for k, v in self.weights.items()}, "eps_tilde": self.eps_tilde,
                "threshold": self.threshold, "accepted": list(self.accepted),
                "slices": [s.describe() for s in self.slices]}


@dataclass
class BudgetReport:
    E1: float
    E2: float
    E3: float
    residual: float
    total: float
    e: float
    g: float
    eta: int
    Delta: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EstimateTrace:
    value: float
    raw: float
    budget: float
    tree: list
    branch: str
    heavy: HeavySliceReport | None = None
    budget_report: BudgetReport | None = None
    kappas: dict[int, dict] = field(default_factory=dict)
    seconds: float = 0.0
    base_calls: int = 0
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "value": self.value, "raw": self.raw, "budget": self.budget, "tree": self.tree,
            "branch": self.branch, "heavy": None if self.heavy is None else self.heavy.to_dict(),
            "budget_report": None if self.budget_report is None else self.budget_report.to_dict(),
            "kappas": {str(k): v for k, v in self.kappas.items()}, "base_calls": self.base_calls,
            "notes": list(self.notes),
        }


class InsufficientSlices(ValueError):
    def __init__(self, achievable: int, wanted: int, where: str):
        super().__init__(f"only {achievable} heavy slices fit the central zone of {where}; Δ={wanted} requested")
        self.achievable = achievable


def error_budget(params: EstimatorParams, e: float, g: float | None = None, eta: int | None = None) -> BudgetReport:
    """Error bound of the recursion for measured slice quality e = 1 − λ₁ and projector error g."""
    K, T, D = params.K, params.T, params.Delta
    eta = params.eta if eta is None else eta
    e = float(min(max(e, 0.0), 1.0))
    if g is None:
        g = (e / (1 - e)) ** K if e < 1 else math.inf
    E1 = 10 * K * (e ** (2 * T) + 6 * g + params.eps2)
    E2 = E1 + params.eps
    E3 = 2 ** D * E1 + params.eps
    residual = (2 * e + 2 * g) ** D
    total = params.eps if eta == 0 else eta * 20 ** eta * D ** (2 * eta) * (E3 + residual)
    return BudgetReport(E1, E2, E3, residual, total, e, g, eta, D)


# --------------------------------------------------------------- algorithm


def heavy_threshold(delta: float, h: float) -> tuple[float, float]:
    """(threshold, ε̃) with threshold = δ^{1/h} and ε̃ = (δ^{1/2h} − δ^{1/h})/2."""
    if not 0 < delta < 1:
        raise ValueError(f"δ must lie in (0, 1), got {delta}")
    thr = delta ** (1.0 / h)
    eps_tilde = (delta ** (1.0 / (2 * h)) - thr) / 2
    if eps_tilde <= 0:
        raise ValueError("separation ε̃ is not positive")
    return thr, eps_tilde


def slice_weight_synthesis(c: LayeredCircuit, sl: SliceSpec) -> Synthesis:
    """Scalar synthesis for p(M=0), built from the slice circuit only."""
    return trace_power_synthesis(extract_slice_circuit(c, sl), sl, 1)


def detect_heavy_slices(c: LayeredCircuit, slices: list[SliceSpec], delta: float, h: float,
                        base: BaseCase) -> HeavySliceReport:
    thr, eps_tilde = heavy_threshold(delta, h)
    weights = {sl.index: float(base(slice_weight_synthesis(c, sl), eps_tilde)) for sl in slices}
    accepted = [i for i, w in weights.items() if w >= thr + eps_tilde]
    return HeavySliceReport(weights, eps_tilde, thr, accepted, list(slices))


def _pick(candidates: list[SliceSpec], count: int, lo: int, hi: int) -> list[SliceSpec]:
    """The ``count`` candidates closest to evenly dividing [lo, hi]."""
    targets = [lo + (hi - lo + 1) * (m + 1) / (count + 1) for m in range(count)]

    def centre(sl):
        a, b = sl.span("M")
        return (a + b) / 2

    best = min(itertools.combinations(sorted(candidates, key=centre), count),
               key=lambda combo: (sum(abs(centre(sl) - t) for sl, t in zip(combo, targets)),
                                  [centre(sl) for sl in combo]))
    return list(best)


@dataclass
class _Context:
    circuit: LayeredCircuit
    params: EstimatorParams
    base: BaseCase
    heavy: list[SliceSpec]
    depth: int
    kappas: dict[int, KappaEstimate] = field(default_factory=dict)
    memo: dict[str, tuple[float, dict]] = field(default_factory=dict)
    base_calls: int = 0

    def call_base(self, s: Synthesis, eps: float) -> float:
        self.base_calls += 1
        return float(self.base(s, eps))

    def kappa(self, sl: SliceSpec) -> float:
        if sl.index not in self.kappas:
            sc = extract_slice_circuit(self.circuit, sl)
            self.base_calls += 2
            self.kappas[sl.index] = estimate_kappa(sc, sl, self.params.T, self.params.eps2, self.base)
        return self.kappas[sl.index].value


def _zone(s: Synthesis, z: int) -> tuple[int, int]:
    lo, hi = s.span()
    mid = (lo + hi + 1) / 2
    zlo = int(math.floor(mid - z / 2))
    return zlo, zlo + z - 1


def a_recursive(s: Synthesis, eta: int, ctx: _Context) -> tuple[float, dict]:
    p = ctx.params
    width = s.width()
    node = {"synthesis": s.label, "width": width, "eta": eta, "qubits": len(s.qubits)}
    if width < p.stop_width(ctx.depth) or eta < 1:
        value = ctx.call_base(s, p.eps)
        node.update(branch="base", value=value, base_calls=1)
        return value, node

    zlo, zhi = _zone(s, p.zone(ctx.depth))
    inside = [sl for sl in ctx.heavy
              if sl.k_region <= s.N and zlo <= sl.span("K")[0] and sl.span("K")[1] <= zhi]
    if len(inside) < p.Delta:
        raise InsufficientSlices(len(inside), p.Delta, s.label)
    chosen = _pick(inside, p.Delta, zlo, zhi)
    kap = [ctx.kappa(sl) for sl in chosen]
    K = p.K
    node.update(zone=[zlo, zhi], slices=[sl.index for sl in chosen], kappas=kap, children=[])

    def child(kind: str, i: int) -> float:
        builder = left_child if kind == "L" else right_child
        key = f"{s.label}/{kind}{chosen[i].index}"
        if p.memoize and key in ctx.memo:
            return ctx.memo[key][0]
        sub = builder(s, chosen[i], K)
        value, sub_node = a_recursive(sub, eta - 1, ctx)
        sub_node["ratio"] = sub.width() / width
        if not (p.memoize and key in ctx.memo):
            node["children"].append(sub_node)
        ctx.memo[key] = (value, sub_node)
        return value

    D = p.Delta
    terms = {"one": 0.0, "two": 0.0, "multi": 0.0}
    calls = 0
    for i in range(D):
        terms["one"] += child("L", i) * child("R", i) / kap[i] ** (4 * K + 1)
    for i, j in itertools.combinations(range(D), 2):
        mid = ctx.call_base(middle_child(s, chosen[i], chosen[j], K), p.eps)
        calls += 1
        norm = (kap[i] * kap[j]) ** (4 * K + 1)
        terms["two"] -= child("L", i) * mid * child("R", j) / norm
        if j >= i + 2:
            inner_sum = 0.0
            for r in range(1, j - i):
                for sigma in itertools.combinations(range(i + 1, j), r):
                    op = middle_child(s, chosen[i], chosen[j], K, inner=[chosen[k] for k in sigma])
                    val = ctx.call_base(op, p.eps / 2 ** D)
                    calls += 1
                    scale = math.prod(kap[k] ** (2 * K) for k in sigma)
                    inner_sum += (-1) ** (r + 1) * val / scale
            terms["multi"] += child("L", i) * child("R", j) / norm * inner_sum
    value = terms["one"] + terms["two"] + terms["multi"]
    node.update(branch="divide", value=value, terms=terms, base_calls=calls,
                cut_type="one-cut" if D == 1 else ("two-cut" if D == 2 else "multi-cut"))
    return value, node


def _tree_depth(node: dict) -> int:
    kids = node.get("children", [])
    return 0 if node.get("branch") != "divide" else 1 + max((_tree_depth(k) for k in kids), default=0)


def default_base() -> BaseCase:
    return MpsBase()


def a_full(c: LayeredCircuit, base: BaseCase | None, delta: float, params: EstimatorParams = EstimatorParams()
           ) -> EstimateTrace:
    require_valid(c)
    base = default_base() if base is None else base
    t0 = time.perf_counter()
    n = c.dims.n
    if delta >= 0.5:
        return EstimateTrace(0.5, 0.5, delta, [], "half", seconds=time.perf_counter() - t0)
    floor = params.brute_force_delta
    if floor is None:
        floor = float(n) ** (-(math.log2(n) ** 2)) if n > 1 else 0.0
    if delta <= floor:
        if n <= dense.dense_cap():
            value = dense.zero_probability(c)
        else:
            value = ExactBase()(make_root_synthesis(c, params.axis), 0.0)
        return EstimateTrace(value, value, 0.0, [], "brute-force", seconds=time.perf_counter() - t0)

    axis = c.dims.long_axis() if params.axis is None else params.axis
    wm = params.w_slice if params.m_width is None else params.m_width
    start = params.spacing if params.offset is None else params.offset
    if c.dims.extent(axis) >= start + 2 * params.w_slice + wm:
        slices = enumerate_slices(c, axis, params.w_slice, params.spacing, params.offset, params.m_width)
    else:
        slices = []
    report = detect_heavy_slices(c, slices, delta, params.h, base)
    if len(report.accepted) < len(slices) - params.h:
        return EstimateTrace(0.0, 0.0, delta, [], "light", heavy=report, seconds=time.perf_counter() - t0)

    heavy = [sl for sl in slices if sl.index in report.accepted]
    detect_calls = len(slices)
    depth = params.depth_hint or max(c.depth, 1)
    notes: list[str] = []
    root = make_root_synthesis(c, axis)
    run_params = params
    while True:
        ctx = _Context(c, run_params, base, heavy, depth)
        try:
            raw, node = a_recursive(root, run_params.eta, ctx)
            break
        except InsufficientSlices as exc:
            if exc.achievable >= 1 and exc.achievable < run_params.Delta:
                notes.append(f"Δ lowered from {run_params.Delta} to {exc.achievable}: {exc}")
                run_params = replace(run_params, Delta=exc.achievable)
            else:
                notes.append(f"no heavy slice in the zone, evaluated directly: {exc}")
                run_params = replace(run_params, eta=0)
    eta_used = _tree_depth(node)
    lams = [k.value for k in ctx.kappas.values()]
    e = max((1 - lam for lam in lams), default=0.0)
    e = max(e, 0.0)
    g = max((((1 - lam) / lam) ** run_params.K if lam > 0 else math.inf for lam in lams), default=0.0)
    g = max(g, 0.0)
    budget = error_budget(run_params, e, g, eta_used)
    value = float(min(max(raw, 0.0), 1.0))
    kappas = {i: asdict(k) for i, k in ctx.kappas.items()}
    return EstimateTrace(value, float(raw), budget.total, [node], "recursive", heavy=report, budget_report=budget,
                         kappas=kappas, seconds=time.perf_counter() - t0, base_calls=ctx.base_calls + detect_calls,
                         notes=notes)
