"""Walk through one near-identity chain: its slices, their weights and top Schmidt values.

    python demos/slices_and_oracle.py
"""

from slicesim import dense
from slicesim.blockenc import rho_dense, top_eigen
from slicesim.corpus import generate
from slicesim.lattice import extract_slice_circuit

inst = generate("near-identity", seed=5, count=1, lengths=(20,))[0]
c = inst.circuit
print(f"{inst.name}: {c.dims.n} qubits, depth {c.depth}, {len(c)} gates")
print(f"oracle |<0|C|0>|^2 = {dense.zero_probability(c):.6f}")

for sl in inst.slices():
    sc = extract_slice_circuit(c, sl)
    rho = rho_dense(sc, sl, "F")
    lam, _ = top_eigen(rho)
    weight = rho.trace().real
    print(f"slice {sl.index}: B={sl.span('B')} M={sl.span('M')} F={sl.span('F')}  "
          f"p(M=0)={weight:.5f}  lambda1={lam:.5f}  lambda1/p={lam / weight:.5f}  "
          f"slice circuit has {len(sc)} gates")

# slices far enough apart are independent: the joint weight factorizes
psi = dense.statevector(c)
s0, s1 = inst.slices()[:2]
p0 = dense.project_zero(psi, s0.m_region).norm2()
p1 = dense.project_zero(psi, s1.m_region).norm2()
p01 = dense.project_zero(psi, s0.m_region | s1.m_region).norm2()
print(f"p(M0=0, M1=0) - p(M0=0) p(M1=0) = {p01 - p0 * p1:.2e}")
