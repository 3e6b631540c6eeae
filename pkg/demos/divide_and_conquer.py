"""Run the estimator on a 24-qubit chain and a 2x2x6 slab and print the recursion tree.

    python demos/divide_and_conquer.py
"""

import time

from slicesim import dense
from slicesim.corpus import generate
from slicesim.driver import EstimatorParams, a_full
from slicesim.mps import MpsBase


def show(node, indent=0):
    pad = "  " * indent
    extra = f" cuts at slices {node['slices']}, kappa={[round(k, 5) for k in node['kappas']]}" \
        if node["branch"] == "divide" else ""
    ratio = f" (width ratio {node['ratio']:.2f})" if "ratio" in node else ""
    print(f"{pad}{node['synthesis']}: width {node['width']}, {node['branch']}{ratio}{extra}, value {node['value']:.6f}")
    for kid in node.get("children", []):
        show(kid, indent + 1)


cases = [
    (generate("near-identity", seed=8, count=1, lengths=(24,))[0], dict(w0=8, z_width=14)),
    (generate("near-identity", seed=9, count=1, shape="slab", lengths=(6,))[0], dict(w0=4, z_width=4)),
]
for inst, geometry in cases:
    params = EstimatorParams(Delta=2, K=3, T=3, eta=1, **geometry)
    t0 = time.perf_counter()
    trace = a_full(inst.circuit, MpsBase(), 0.01, params)
    seconds = time.perf_counter() - t0
    oracle = dense.zero_probability(inst.circuit)
    print(f"\n{inst.name} ({inst.circuit.dims.n} qubits), branch {trace.branch}, {seconds:.2f}s")
    for note in trace.notes:
        print(f"  note: {note}")
    show(trace.tree[0], 1)
    print(f"  estimate {trace.value:.10f}  oracle {oracle:.10f}  |error| {abs(trace.value - oracle):.1e}  "
          f"budget {trace.budget:.2e}")

adv = generate("adversarial", seed=4, count=1, lengths=(20,))[0]
trace = a_full(adv.circuit, MpsBase(), 0.01, EstimatorParams(w0=8, z_width=14))
print(f"\n{adv.name}: branch {trace.branch}, heavy slices {trace.heavy.accepted} of "
      f"{len(trace.heavy.slices)}, oracle {dense.zero_probability(adv.circuit):.2e} <= delta=0.01")
