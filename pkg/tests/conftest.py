import numpy as np
import pytest

from slicesim.corpus import generate
from slicesim.lattice import Gate, LatticeDims, LayeredCircuit, Qubit, haar_unitary


def chain_brick(length: int, depth: int, rng: np.random.Generator, fill: float = 1.0) -> LayeredCircuit:
    """Haar brickwork on a 1×1×length chain, layer l starting at parity l mod 2."""
    gates = []
    for layer in range(depth):
        for z in range(layer % 2, length - 1, 2):
            if rng.random() < fill:
                gates.append(Gate((Qubit(0, 0, z), Qubit(0, 0, z + 1)), haar_unitary(4, rng), layer))
    return LayeredCircuit.from_gates(LatticeDims(1, 1, length), gates, depth)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def near_identity_chain():
    return generate("near-identity", 7, 1, "chain", (14,))[0]


@pytest.fixture(scope="session")
def product_chain():
    return generate("product", 8, 1, "chain", (14,), theta=0.3)[0]


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
