"""The statevector oracle against hand-computable states and linear-algebra identities."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slicesim import dense
from slicesim.lattice import CNOT, H, Gate, LatticeDims, LayeredCircuit, Qubit

from conftest import chain_brick


def bell_chain(n=2):
    dims = LatticeDims(1, 1, n)
    gates = [Gate((Qubit(0, 0, 0),), H, 0), Gate((Qubit(0, 0, 0), Qubit(0, 0, 1)), CNOT, 1)]
    return LayeredCircuit.from_gates(dims, gates, 2)


def test_empty_circuit_leaves_all_zeros():
    c = LayeredCircuit.from_gates(LatticeDims(1, 1, 5), [], 0)
    assert dense.zero_probability(c) == 1.0


def test_bell_pair():
    c = bell_chain(3)
    assert dense.zero_probability(c) == pytest.approx(0.5)
    psi = dense.statevector(c)
    sch = dense.schmidt_across(psi, [Qubit(0, 0, 0)])
    assert np.allclose(sch.eigenvalues, [0.5, 0.5])
    rho = dense.partial_trace(psi, [Qubit(0, 0, 1)])
    assert np.allclose(rho.matrix, np.eye(2) / 2)
    assert dense.marginal_zero_probability(c, [Qubit(0, 0, 2)]) == pytest.approx(1.0)


def test_dense_cap_is_enforced(monkeypatch):
    monkeypatch.setenv("SLICESIM_DENSE_CAP", "4")
    with pytest.raises(ValueError, match="dense cap"):
        dense.statevector(LayeredCircuit.from_gates(LatticeDims(1, 1, 5), [], 0))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 31), n=st.integers(2, 9), depth=st.integers(1, 4))
def test_states_are_normalized_and_reduced_states_agree(seed, n, depth):
    c = chain_brick(n, depth, np.random.default_rng(seed))
    psi = dense.statevector(c)
    assert psi.norm2() == pytest.approx(1.0, abs=1e-12)
    cut = list(c.dims.qubits())[: n // 2]
    rho = dense.partial_trace(psi, cut)
    assert rho.is_hermitian()
    assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-12)
    # via the density operator, and via the singular values of the split
    rho2 = dense.partial_trace(dense.density(psi), cut)
    assert np.allclose(rho.matrix, rho2.matrix, atol=1e-12)
    assert np.allclose(np.sort(np.linalg.eigvalsh(rho.matrix))[::-1][: 2 ** len(cut)],
                       np.pad(dense.reduced_eigenvalues(psi, cut), (0, 2 ** len(cut)))[: 2 ** len(cut)],
                       atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 31), n=st.integers(2, 6))
def test_unitary_matches_statevector_columns(seed, n):
    c = chain_brick(n, 3, np.random.default_rng(seed))
    order = c.dims.qubits()
    u = dense.circuit_unitary(c, order)
    assert np.allclose(u.conj().T @ u, np.eye(2 ** n), atol=1e-12)
    assert np.allclose(u[:, 0], dense.run(c, order).amplitudes, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 31), dim=st.integers(2, 16), k=st.integers(1, 5))
def test_lowrank_trace_norm_matches_full(seed, dim, k):
    rng = np.random.default_rng(seed)
    vecs = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    coef = rng.normal(size=k)
    full = sum(c * np.outer(v, v.conj()) for c, v in zip(coef, vecs.T))
    assert dense.lowrank_trace_norm(vecs, coef) == pytest.approx(dense.trace_norm(full), rel=1e-9, abs=1e-12)


def test_projection_removes_qubits():
    psi = dense.statevector(bell_chain(3))
    out = dense.project_zero(psi, [Qubit(0, 0, 0)])
    assert out.n == 2 and out.norm2() == pytest.approx(0.5)
    with pytest.raises(ValueError):
        dense.project_zero(out, [Qubit(0, 0, 0)])
