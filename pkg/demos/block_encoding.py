"""Build the copy/swap circuit that block-encodes rho^K and compare it with numpy.

    python demos/block_encoding.py
"""

import numpy as np

from slicesim import dense
from slicesim.blockenc import encode_rho_power, projector_distance, rho_dense, top_eigen
from slicesim.corpus import generate
from slicesim.lattice import extract_slice_circuit

inst = generate("entangled", seed=3, count=1, lengths=(14,), heavy_floor=0.2)[0]
sl = inst.slices()[0]
sc = extract_slice_circuit(inst.circuit, sl)
rho = rho_dense(sc, sl, "F")
lam, _ = top_eigen(rho)

for K in (1, 2, 3):
    enc = encode_rho_power(sc, sl, "F", K)
    err = dense.spectral_norm(enc.extract() - np.linalg.matrix_power(rho, K))
    print(f"K={K}: {len(enc.ancilla)} ancilla registers, depth {enc.depth}, "
          f"|block - rho^K| = {err:.1e}")

print(f"\nnormalized top weight lambda1/p = {lam / rho.trace().real:.4f}, lambda1 = {lam:.4f}")
print("the bound below only bites once lambda1 > 1/2; the distance itself halves with each K")
for K in range(1, 7):
    print(f"K={K}: |(rho/lambda1)^K - w1 w1^dag|_1 = {projector_distance(rho, K):.3e}   "
          f"bound ((1-lambda1)/lambda1)^K = {((1 - lam) / lam) ** K:.3e}")
