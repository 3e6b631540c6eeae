"""Acceptance criteria 1-13, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL criterion N`` line; the lines are also
collected and repeated in the terminal summary.  Corpora are seeded and built
once per session.
"""

import functools
import statistics
import time

import numpy as np
import pytest

from slicesim import checks, dense
from slicesim.corpus import generate, random_lattice_circuit
from slicesim.driver import EstimatorParams, a_full
from slicesim.lattice import LatticeDims
from slicesim.mps import MpsBase, estimate, exact_contract
from slicesim.synthesis import make_root_synthesis

from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.slow

DELTA = 0.01
CHAIN_GEOMETRY = dict(w0=8, z_width=14)
SLAB_GEOMETRY = dict(w0=4, z_width=4)


def report(number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert ok, line


def cases(instances):
    return [checks.Case(i.name, i.circuit, tuple(i.slices())) for i in instances]


# ------------------------------------------------------------------ corpora


@functools.lru_cache(maxsize=None)
def heavy_chains():
    return tuple(generate("near-identity", 1001, 60, "chain", (14, 16, 18)))


@functools.lru_cache(maxsize=None)
def random_chains():
    return tuple(generate("random", 1002, 100, "chain", (14, 16, 18, 20)))


@functools.lru_cache(maxsize=None)
def product_chains():
    return tuple(generate("product", 1003, 15, "chain", (14, 16, 18, 20, 22), theta=0.3))


@functools.lru_cache(maxsize=None)
def entangled_chains():
    return tuple(generate("entangled", 1004, 50, "chain", (14,), heavy_floor=0.2))


@functools.lru_cache(maxsize=None)
def adversarial_chains():
    return tuple(generate("adversarial", 1005, 12, "chain", (14, 16, 18, 20)))


@functools.lru_cache(maxsize=None)
def approximate_corpus():
    return tuple(generate("near-identity", 1006, 12, "chain", (16, 18, 20, 22, 24, 20))
                 + generate("near-identity", 1007, 4, "slab", (6,)))


def all_instances():
    return (heavy_chains() + random_chains() + product_chains() + entangled_chains() + adversarial_chains()
            + approximate_corpus())


def geometry(inst):
    return CHAIN_GEOMETRY if inst.shape == "chain" else SLAB_GEOMETRY


def run(inst, **overrides):
    params = EstimatorParams(**{"Delta": 2, "K": 3, "T": 3, **geometry(inst), **overrides})
    t0 = time.perf_counter()
    trace = a_full(inst.circuit, MpsBase(), DELTA, params)
    return {"inst": inst, "params": params, "trace": trace, "seconds": time.perf_counter() - t0}


@functools.lru_cache(maxsize=None)
def product_runs():
    return tuple(run(i) for i in product_chains())


@functools.lru_cache(maxsize=None)
def approximate_runs():
    return tuple(run(i) for i in approximate_corpus())


@functools.lru_cache(maxsize=None)
def soundness_runs():
    return tuple(run(i) for i in adversarial_chains() + random_chains()[:20])


@functools.lru_cache(maxsize=None)
def deep_runs():
    long = [i for i in approximate_corpus() if i.shape == "chain" and i.circuit.dims.nz >= 22]
    return tuple(run(i, eta=2) for i in long)


# ----------------------------------------------------------------- criteria


def test_01_block_encoding_identity():
    t0 = time.perf_counter()
    enc = checks.random_encoding_cases(np.random.default_rng(2001), 200, max_qubits=12)
    res = checks.block_encoding_suite(enc, tol=1e-10)
    seconds = time.perf_counter() - t0
    ks = sorted({c.K for c in enc})
    ok = res.passed and res.checked == 200 and seconds < 60
    report(1, ok, f"{res.checked} encodings (K in {ks}, ≤12 registers), max spectral error "
                  f"{res.stats['max_spectral_error']:.2e} ≤ 1e-10, {seconds:.1f}s < 60s")


def test_02_schmidt_projector_bound():
    res = checks.projector_bound_suite(cases(product_chains() + heavy_chains()), limit=100)
    ok = res.passed and res.stats["slices"] == 100 and res.stats["rank_one_slices"] > 0
    report(2, ok, f"{res.stats['slices']} slices × K=1..5, {len(res.violations)} violations; "
                  f"{res.stats['rank_one_slices']} slices at λ₁=1 with distance "
                  f"{res.stats['max_distance_rank_one']:.1e} ≤ 1e-12")


def test_03_independence():
    cs = [c for c in cases(random_chains()) if len(c.slices) >= 2 and c.circuit.dims.n <= 20]
    res = checks.independence_suite(cs, tol=1e-12)
    ok = res.passed and len(cs) == 100
    report(3, ok, f"{len(cs)} circuits, {res.checked} slice pairs, max gap {res.stats['max_gap']:.1e} ≤ 1e-12")


def test_04_heavy_slice_counting():
    res = checks.heavy_count_suite(cases(all_instances()))
    report(4, res.passed, f"{res.checked} (instance, q, h) triples, {len(res.violations)} counterexamples")


def test_05_top_schmidt_bound():
    res = checks.top_schmidt_suite(cases(all_instances()))
    report(5, res.passed, f"{res.checked} slices, {len(res.violations)} violations of λ₁ ≥ 1−4e; "
                          f"empirical constant {res.stats['empirical_constant']:.3f}")


def ie_corpus():
    return cases(heavy_chains()[:40] + entangled_chains()[:10])


def test_06_inclusion_exclusion_residual():
    cs = ie_corpus()
    res = checks.inclusion_exclusion_suite(cs, Delta=2, K=3)
    ok = res.passed and res.checked == 50 and max(c.circuit.dims.n for c in cs) <= 18
    report(6, ok, f"{res.checked} instances at Δ=2, {len(res.violations)} violations; "
                  f"max residual/bound {res.stats['max_residual_over_bound']:.2e}")


def test_07_product_splitting():
    res = checks.product_split_suite(ie_corpus() + cases(product_chains()), K=3)
    ok = res.passed and res.stats["rank_one_slices"] > 0
    report(7, ok, f"{res.checked} slices, {len(res.violations)} violations; max distance/6g "
                  f"{res.stats['max_distance_over_6g']:.2e}; {res.stats['rank_one_slices']} product slices "
                  f"with distance {res.stats['max_distance_rank_one']:.1e} ≤ 1e-10")


def test_08_kappa_accuracy():
    res = checks.kappa_suite(cases(entangled_chains()), MpsBase(), Ts=(2, 3, 4), eps2=1e-8, limit=100)
    s = res.stats
    ok = res.passed and s["slices"] == 100 and s["at_rounding_floor"] == 0
    report(8, ok, f"{s['slices']} heavy slices × T=2,3,4, {len(res.violations)} bound violations; error "
                  f"decreases with T on {100 * s['decreasing_share']:.0f}% (≥95%)")


def test_09_base_case_correctness():
    rng = np.random.default_rng(2009)
    shapes = [(2, 2, 1), (3, 2, 1), (3, 3, 1), (4, 2, 1), (4, 3, 1), (4, 4, 1)]
    worst_mps, worst_exact, total = 0.0, 0.0, 0
    for k in range(100):
        dims = LatticeDims(*shapes[k % len(shapes)])
        theta = None if k % 2 else 0.3
        c = random_lattice_circuit(dims, 1 + k % 3, rng, theta=theta)
        s = make_root_synthesis(c)
        oracle = dense.zero_probability(c)
        worst_mps = max(worst_mps, abs(estimate(s, 1e-3) - oracle))
        worst_exact = max(worst_exact, abs(exact_contract(s) - oracle))
        total += 1
    ok = total == 100 and worst_mps <= 1e-3 and worst_exact <= 1e-10
    report(9, ok, f"{total} slabs ≤4×4×1, d ≤ 3: MPS error {worst_mps:.1e} ≤ 1e-3, "
                  f"exact contraction error {worst_exact:.1e} ≤ 1e-10")


def test_10_end_to_end_exact_regime():
    rows = product_runs()
    bad, worst = [], 0.0
    for r in rows:
        err = abs(r["trace"].value - r["inst"].meta["oracle"])
        worst = max(worst, err)
        if err > r["params"].eps + 1e-9 or r["trace"].branch != "recursive":
            bad.append(r["inst"].name)
    report(10, not bad, f"{len(rows)} product instances through the recursion, max |a_full − oracle| "
                        f"{worst:.1e} ≤ ε + 1e-9; failures {bad}")


def test_11_end_to_end_approximate_regime():
    rows = approximate_runs()
    within = sum(abs(r["trace"].value - r["inst"].meta["oracle"]) <= r["trace"].budget for r in rows)
    beyond = [r["inst"].name for r in rows if abs(r["trace"].value - r["inst"].meta["oracle"]) > 5 * r["trace"].budget]
    median = statistics.median(r["seconds"] for r in rows)
    n_max = max(r["inst"].circuit.dims.n for r in rows)
    share = within / len(rows)
    ok = share >= 0.95 and not beyond and median < 10 and n_max <= 24
    shapes = sorted({r["inst"].shape for r in rows})
    report(11, ok, f"{len(rows)} instances ({', '.join(shapes)}, n ≤ {n_max}): {100 * share:.0f}% within budget, "
                   f"{len(beyond)} beyond 5×, median runtime {median:.2f}s < 10s")


def test_12_light_branch_soundness():
    rows = [r for r in soundness_runs() + approximate_runs() + product_runs() if r["trace"].branch == "light"]
    bad = [r["inst"].name for r in rows if r["inst"].meta["oracle"] > DELTA]
    ok = rows and not bad
    report(12, bool(ok), f"{len(rows)} light-branch returns, {len(bad)} with oracle > δ={DELTA}")


def _edges(node):
    for kid in node.get("children", []):
        yield node, kid
        yield from _edges(kid)


def _depth(node):
    if node.get("branch") != "divide":
        return 0
    return 1 + max((_depth(k) for k in node.get("children", [])), default=0)


def test_13_child_size_contraction():
    rows = soundness_runs() + approximate_runs() + product_runs() + deep_runs()
    edges, worst, bad = 0, 0.0, []
    deepest = 0
    for r in rows:
        for root in r["trace"].tree:
            depth = _depth(root)
            deepest = max(deepest, depth)
            if depth > r["params"].eta:
                bad.append((r["inst"].name, "depth", depth))
            for parent, kid in _edges(root):
                edges += 1
                ratio = kid["width"] / parent["width"]
                worst = max(worst, ratio)
                if ratio > 0.75:
                    bad.append((r["inst"].name, kid["synthesis"], ratio))
    ok = edges > 0 and not bad and deepest >= 2
    report(13, ok, f"{len(rows)} runs, {edges} recursion edges, max child/parent width {worst:.3f} ≤ 0.75, "
                   f"deepest tree {deepest} ≤ η; violations {bad[:3]}")
