import numpy as np
import pytest
from hypothesis import strategies as st

from stabsw.oracle import to_dense
from stabsw.pauli import PauliSum


def dense(op) -> np.ndarray:
    return to_dense(op).toarray()


@st.composite
def pauli_sums(draw, nqubits=None, max_terms=5, max_n=5):
    n = draw(st.integers(1, max_n)) if nqubits is None else nqubits
    k = draw(st.integers(0, max_terms))
    labels = [draw(st.text("IXYZ", min_size=n, max_size=n)) for _ in range(k)]
    re = draw(st.lists(st.integers(-4, 4), min_size=k, max_size=k))
    im = draw(st.lists(st.integers(-4, 4), min_size=k, max_size=k))
    coeffs = np.array(re, dtype=float) + 1j * np.array(im, dtype=float)
    if k == 0:
        return PauliSum.zero(n)
    return PauliSum.from_labels(labels, coeffs)


@st.composite
def pauli_pairs(draw, max_n=5):
    n = draw(st.integers(1, max_n))
    return draw(pauli_sums(nqubits=n)), draw(pauli_sums(nqubits=n))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
