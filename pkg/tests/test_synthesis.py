"""Syntheses, the division step and the κ estimator."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slicesim import dense
from slicesim.blockenc import rho_dense, top_eigen
from slicesim.checks import kappa_bound
from slicesim.corpus import generate
from slicesim.lattice import extract_slice_circuit
from slicesim.mps import exact_contract
from slicesim.synthesis import (Synthesis, divide, estimate_kappa, kappa_syntheses, left_child,
                                make_root_synthesis, middle_child, product_estimate, right_child,
                                synthesis_value_dense, trace_power_synthesis)


def test_root_value_is_the_oracle(near_identity_chain):
    c = near_identity_chain.circuit
    assert synthesis_value_dense(make_root_synthesis(c)) == pytest.approx(dense.zero_probability(c), abs=1e-14)


def test_registers_must_be_disjoint(near_identity_chain):
    c = near_identity_chain.circuit
    everything = frozenset(c.dims.qubits())
    with pytest.raises(ValueError, match="overlap"):
        Synthesis(c, everything, everything, frozenset(), 2)
    with pytest.raises(ValueError, match="unregistered"):
        Synthesis(c, frozenset(), frozenset(), frozenset(), 2)


@pytest.mark.parametrize("K", [1, 2, 3])
def test_one_cut_is_exact_on_product_slices(product_chain, K):
    c = product_chain.circuit
    root = make_root_synthesis(c)
    for sl in product_chain.slices():
        lam, _ = top_eigen(rho_dense(extract_slice_circuit(c, sl), sl, "F"))
        res = divide(root, sl, K=K)
        est = product_estimate(exact_contract(res.left), exact_contract(res.right), lam, K)
        assert est == pytest.approx(dense.zero_probability(c), rel=1e-9, abs=1e-12)
        assert res.middle is None


def test_children_are_narrower(near_identity_chain):
    root = make_root_synthesis(near_identity_chain.circuit)
    s0, s1 = near_identity_chain.slices()
    for child in (left_child(root, s0, 2), right_child(root, s1, 2), middle_child(root, s0, s1, 2)):
        assert child.width() < root.width()
        assert child.label.startswith("root/")
    with pytest.raises(ValueError):
        middle_child(root, s1, s0, 2)


def test_two_cut_terms_recover_the_oracle_on_product_slices():
    inst = generate("product", 21, 1, "chain", (20,), theta=0.3)[0]
    c = inst.circuit
    root = make_root_synthesis(c)
    s0, s1 = inst.slices()[:2]
    lams = [top_eigen(rho_dense(extract_slice_circuit(c, sl), sl, "F"))[0] for sl in (s0, s1)]
    K = 2
    v = exact_contract
    one = sum(v(left_child(root, sl, K)) * v(right_child(root, sl, K)) / lam ** (4 * K + 1)
              for sl, lam in zip((s0, s1), lams))
    two = (v(left_child(root, s0, K)) * v(middle_child(root, s0, s1, K)) * v(right_child(root, s1, K))
           / (lams[0] * lams[1]) ** (4 * K + 1))
    assert one - two == pytest.approx(dense.zero_probability(c), rel=1e-8)


@settings(max_examples=10, deadline=None)
@given(idx=st.integers(0, 1), p=st.integers(1, 5), side=st.sampled_from("BF"))
def test_trace_power_synthesis(near_identity_chain, idx, p, side):
    c = near_identity_chain.circuit
    sl = near_identity_chain.slices()[idx]
    sc = extract_slice_circuit(c, sl)
    rho = rho_dense(sc, sl, side)
    target = np.trace(np.linalg.matrix_power(rho, p)).real
    assert synthesis_value_dense(trace_power_synthesis(sc, sl, p, side)) == pytest.approx(target, abs=1e-12)


def test_kappa_within_its_bound_and_validated(near_identity_chain):
    c = near_identity_chain.circuit
    sl = near_identity_chain.slices()[0]
    sc = extract_slice_circuit(c, sl)
    lam, _ = top_eigen(rho_dense(sc, sl, "B"))
    for T in (1, 2, 3):
        est = estimate_kappa(sc, sl, T, 1e-8, lambda s, eps: synthesis_value_dense(s))
        assert abs(est.value - lam) <= kappa_bound(lam, T, 1e-8)
    with pytest.raises(ValueError):
        estimate_kappa(sc, sl, 2, 0.0, lambda s, eps: synthesis_value_dense(s))
    with pytest.raises(ValueError):
        kappa_syntheses(sc, sl, 0)
    with pytest.raises(ValueError, match="too light"):
        estimate_kappa(sc, sl, 2, 1e-8, lambda s, eps: 0.0)
