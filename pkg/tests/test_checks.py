"""The property suites must also catch violations, not just pass."""

import numpy as np
import pytest

from slicesim.checks import (Case, SuiteResult, alternating_residual, heavy_count_suite, independence_suite,
                             kappa_suite, product_split_distance,
                             product_split_suite, projector_bound_suite, top_schmidt_suite)
from slicesim.corpus import generate
from slicesim.lattice import make_slice
from slicesim.synthesis import dense_base

from conftest import chain_brick


def as_case(inst):
    return Case(inst.name, inst.circuit, tuple(inst.slices()))


def test_empty_suite_does_not_pass():
    assert not SuiteResult("x", "nothing").passed
    assert SuiteResult("x", "nothing", checked=1).line().startswith("PASS x: 1 checks")


def test_independence_catches_overlapping_cones(rng):
    c = chain_brick(10, 3, rng)
    close = (make_slice(c.dims, 2, 1, 1, 1, 0), make_slice(c.dims, 2, 4, 1, 1, 1))
    res = independence_suite([Case("close", c, close)])
    assert not res.passed and res.stats["max_gap"] > 1e-6


def test_kappa_suite_catches_a_broken_base(near_identity_chain):
    res = kappa_suite([as_case(near_identity_chain)], lambda s, eps: 1.1 * dense_base(s) if s.label.startswith(
        "trace7") else dense_base(s), Ts=(3,))
    assert not res.passed


def test_suites_pass_on_heavy_chains(near_identity_chain):
    cases = [as_case(near_identity_chain)]
    for suite in (projector_bound_suite, top_schmidt_suite, heavy_count_suite):
        assert suite(cases).passed
    assert top_schmidt_suite(cases).stats["empirical_constant"] <= 4


def test_product_slices_split_exactly(product_chain):
    c, slices = product_chain.circuit, product_chain.slices()
    for sl in slices:
        dist, g, lam = product_split_distance(c, sl, 3)
        assert dist <= 1e-10
    lhs, e, g = alternating_residual(c, slices, 3)
    assert lhs <= 1e-10


@pytest.mark.parametrize("K", [1, 3, 5])
def test_residual_within_its_bound(K):
    inst = generate("near-identity", 41, 1, "chain", (14,))[0]
    lhs, e, g = alternating_residual(inst.circuit, inst.slices(), K)
    assert np.isfinite(lhs) and lhs <= (2 * e + 2 * g) ** 2


def test_product_split_suite_flags_rank_one_slices(product_chain):
    res = product_split_suite([as_case(product_chain)])
    assert res.passed and res.stats["rank_one_slices"] == len(product_chain.slices())
