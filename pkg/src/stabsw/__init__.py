"""Stabilizer perturbation theory through a local Schrieffer-Wolff transformation.

Operators are sums of Pauli strings stored as packed bit rows.  The
unperturbed Hamiltonian is a stabilizer Hamiltonian; the generator is solved
order by order and observables are evaluated in the stabilizer ground state.
"""

from .pauli import PauliSum, PauliTerm, commutator, multiply
from .stabilizer import (
    GroundStateSpec,
    StabilizerHamiltonian,
    build_stabilizer_hamiltonian,
    complete_ground_state,
    ground_state_from_hamiltonian,
)
from .sw import SWGenerator, TermCapExceeded, build_generator, transformed_orders
from .translation import TISum, TranslationGroup, chain_group
from .observables import (
    ExpectationReport,
    connected_correlation,
    expectation,
    order_expectations,
    perimeter_fit,
)
from .models import (
    LatticeModel,
    build_kagome_tc,
    build_tfim_chain,
    build_toric_bilayer,
    build_toric_square,
)

__version__ = "0.1.0"

__all__ = [
    "PauliSum",
    "PauliTerm",
    "commutator",
    "multiply",
    "GroundStateSpec",
    "StabilizerHamiltonian",
    "build_stabilizer_hamiltonian",
    "complete_ground_state",
    "ground_state_from_hamiltonian",
    "SWGenerator",
    "TermCapExceeded",
    "build_generator",
    "transformed_orders",
    "TISum",
    "TranslationGroup",
    "chain_group",
    "ExpectationReport",
    "connected_correlation",
    "expectation",
    "order_expectations",
    "perimeter_fit",
    "LatticeModel",
    "build_kagome_tc",
    "build_tfim_chain",
    "build_toric_bilayer",
    "build_toric_square",
]
