"""Divide-and-conquer estimation of |⟨0…0|C|0…0⟩|² for shallow lattice circuits."""

__version__ = "0.1.0"

from .dense import statevector, zero_probability
from .driver import EstimateTrace, EstimatorParams, a_full, a_recursive, error_budget
from .lattice import Gate, LatticeDims, LayeredCircuit, Qubit, SliceSpec, enumerate_slices, loads_circuit
from .mps import ExactBase, MpsBase, MpsConfig

__all__ = [
    "EstimateTrace", "EstimatorParams", "ExactBase", "Gate", "LatticeDims", "LayeredCircuit", "MpsBase",
    "MpsConfig", "Qubit", "SliceSpec", "a_full", "a_recursive", "enumerate_slices", "error_budget",
    "loads_circuit", "statevector", "zero_probability",
]
