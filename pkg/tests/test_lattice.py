"""Lattice IR: validation, lightcones, slices and the wrap decomposition."""

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slicesim import dense
from slicesim.lattice import (CNOT, Gate, LatticeDims, LayeredCircuit, Qubit, bridge_circuit, circuit_from_dict,
                              circuit_to_dict, compose, decompose_wrap, dumps_circuit, enumerate_slices,
                              extract_slice_circuit, haar_unitary, lightcone, loads_circuit, make_slice,
                              past_gates, remainder_circuit, slice_violations, validate_circuit)

from conftest import chain_brick


def q(z, x=0, y=0):
    return Qubit(x, y, z)


def test_validation_flags_each_problem():
    dims = LatticeDims(1, 1, 4)
    far = Gate((q(0), q(2)), CNOT, 0)
    clash = [Gate((q(0), q(1)), CNOT, 0), Gate((q(1), q(2)), CNOT, 0)]
    outside = Gate((q(3), q(4)), CNOT, 0)
    bad_u = Gate((q(0), q(1)), 2 * CNOT, 0)
    for gates, needle in [([far], "locality"), (clash, "collision"), ([outside], "outside"),
                          ([bad_u], "unitarity")]:
        report = validate_circuit(LayeredCircuit.from_gates(dims, gates, 1))
        assert not report.ok
        assert any(needle in v for v in report.violations)


def test_diagonal_neighbours_are_local():
    dims = LatticeDims(2, 2, 1)
    c = LayeredCircuit.from_gates(dims, [Gate((Qubit(0, 0, 0), Qubit(1, 1, 0)), CNOT, 0)], 1)
    assert validate_circuit(c).ok


def test_lightcone_of_empty_region_is_rejected(rng):
    with pytest.raises(ValueError, match="empty"):
        lightcone(chain_brick(4, 2, rng), [])


def _reduced(c, order, pre=None):
    """Single-qubit reduced states after C (optionally after a local kick ``pre``)."""
    if pre is not None:
        c = LayeredCircuit.from_gates(c.dims, [pre], 1).then(c)
    psi = dense.run(c, order)
    return {qb: dense.partial_trace(psi, [qb]).matrix for qb in order}


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 31), n=st.integers(3, 7), depth=st.integers(1, 3), start=st.integers(0, 6))
def test_forward_lightcone_contains_every_influenced_qubit(seed, n, depth, start):
    rng = np.random.default_rng(seed)
    c = chain_brick(n, depth, rng, fill=0.8)
    src = q(start % n)
    order = tuple(c.dims.qubits())
    before = _reduced(c, order)
    kick = Gate((src,), haar_unitary(2, rng), 0)
    after = _reduced(c, order, kick)
    cone = lightcone(c, [src])
    for qb in order:
        if np.max(np.abs(before[qb] - after[qb])) > 1e-9:
            assert qb in cone


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 31), n=st.integers(3, 8), depth=st.integers(1, 3))
def test_past_gates_reproduce_the_marginal(seed, n, depth):
    rng = np.random.default_rng(seed)
    c = chain_brick(n, depth, rng)
    region = [q(n // 2)]
    sub = c.subcircuit(past_gates(c, region))
    assert dense.marginal_zero_probability(sub, region) == pytest.approx(
        dense.marginal_zero_probability(c, region), abs=1e-12)


def test_reverse_cone_grows_by_one_per_layer(rng):
    c = chain_brick(12, 3, rng)
    cone = lightcone(c, [q(6)], "reverse")
    assert cone <= {q(z) for z in range(3, 10)}
    with pytest.raises(ValueError):
        lightcone(c, [q(6)], "sideways")


def test_enumerated_slices_are_valid(near_identity_chain):
    c = near_identity_chain.circuit
    slices = near_identity_chain.slices()
    assert [sl.index for sl in slices] == [0, 1]
    for sl in slices:
        assert slice_violations(c, sl) == []
        assert sl.span("B")[1] < sl.span("M")[0] <= sl.span("M")[1] < sl.span("F")[0]


def test_slices_need_room(rng):
    with pytest.raises(ValueError, match="extent"):
        enumerate_slices(chain_brick(3, 1, rng), 2, offset=1, m_width=2)


def test_slice_with_escaping_cone_is_reported(rng):
    c = chain_brick(10, 3, rng)
    sl = make_slice(c.dims, 2, 3, 1, 1)
    assert any("lightcone" in v for v in slice_violations(c, sl))


def test_wrap_decomposition_reassembles_the_circuit(near_identity_chain):
    c = near_identity_chain.circuit
    order = tuple(c.dims.qubits())
    target = dense.run(c, order).amplitudes
    for sl in near_identity_chain.slices():
        wl, wr, lp, rp = decompose_wrap(c, sl)
        bmf = extract_slice_circuit(c, sl)
        inner = c.subcircuit(lp.gates + bmf.gates + rp.gates)
        rebuilt = compose(inner, c.subcircuit(wl.gates + wr.gates))
        assert np.allclose(dense.run(rebuilt, order).amplitudes, target, atol=1e-12)
        pieces = [g for part in (wl, wr, lp, rp, bmf) for g in part.gates]
        assert len(pieces) == len(set(pieces)) == len(c)
        assert set(remainder_circuit(c, sl).gates) == set(c.gates) - set(bmf.gates)


def test_bridge_sits_between_the_slices(near_identity_chain):
    c = near_identity_chain.circuit
    s0, s1 = near_identity_chain.slices()
    mid = bridge_circuit(c, s0, s1)
    lo, hi = s0.span("M")[1], s1.span("M")[0]
    assert mid.gates
    assert all(lo < qb.z < hi for g in mid.gates for qb in g.support)
    with pytest.raises(ValueError):
        bridge_circuit(c, s1, s0)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 31), n=st.integers(2, 9), depth=st.integers(1, 4))
def test_json_round_trip(seed, n, depth):
    c = chain_brick(n, depth, np.random.default_rng(seed), fill=0.7)
    back = loads_circuit(dumps_circuit(c))
    assert back.dims == c.dims and back.depth == c.depth
    assert [g.support for g in back.gates] == [g.support for g in c.gates]
    for a, b in zip(back.gates, c.gates):
        assert np.array_equal(a.unitary, b.unitary)


def test_unknown_keys_are_rejected(rng):
    data = circuit_to_dict(chain_brick(4, 1, rng))
    data["colour"] = "red"
    with pytest.raises(ValueError, match="colour"):
        circuit_from_dict(json.loads(json.dumps(data)))
