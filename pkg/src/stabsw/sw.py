"""Order-by-order local Schrieffer-Wolff generator.

All orders are stored as orbit representatives under a translation group
(the trivial group gives the explicit operators), so the same code path
serves both modes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import pauli
from .pauli import PauliSum, _PHASES, _phase_exponent
from .stabilizer import StabilizerHamiltonian, excitation_energy
from .translation import TISum, TranslationGroup, expand_full, from_group_sum, rep_commutator_full, to_group_weights

log = logging.getLogger(__name__)

__all__ = [
    "SWGenerator",
    "TransformedHamiltonian",
    "TermCapExceeded",
    "compositions",
    "compute_vm",
    "solve_sm",
    "build_generator",
    "transformed_orders",
    "dump_orders",
]


class TermCapExceeded(RuntimeError):
    def __init__(self, what: str, order: int, nterms: int, cap: int):
        super().__init__(f"{what} at order {order} has {nterms} terms, cap is {cap}")
        self.what = what
        self.order = order
        self.nterms = nterms
        self.cap = cap


@lru_cache(maxsize=None)
def compositions(m: int, min_parts: int = 1) -> tuple[tuple[int, ...], ...]:
    """Ordered compositions of ``m`` (parts >= 1) with at least ``min_parts`` parts."""
    if m == 0:
        return ((),) if min_parts == 0 else ()
    out = []
    for first in range(1, m + 1):
        for rest in compositions(m - first, max(0, min_parts - 1)):
            out.append((first,) + rest)
    return tuple(out)


@dataclass(eq=False)
class SWGenerator:
    """``S^(1..M)`` as representatives; ``full`` holds the explicit operators."""

    orders: list[PauliSum]
    group: TranslationGroup
    vm: list[PauliSum] = field(default_factory=list)
    term_counts: list[int] = field(default_factory=list)
    tie_break: str = "first"
    _full: dict[int, PauliSum] = field(default_factory=dict, repr=False)

    @property
    def M(self) -> int:
        return len(self.orders)

    @property
    def nqubits(self) -> int:
        return self.group.nqubits

    def order(self, m: int) -> PauliSum:
        if not 1 <= m <= self.M:
            raise IndexError(f"generator holds orders 1..{self.M}, asked for {m}")
        return self.orders[m - 1]

    def full(self, m: int) -> PauliSum:
        if m not in self._full:
            self._full[m] = expand_full(TISum(self.order(m), self.group))
        return self._full[m]


@dataclass(eq=False)
class TransformedHamiltonian:
    base: StabilizerHamiltonian
    orders: list[PauliSum]
    group: TranslationGroup

    def full(self, m: int) -> PauliSum:
        return expand_full(TISum(self.orders[m - 1], self.group))

    def total(self, M: int | None = None) -> PauliSum:
        """Explicit ``H0 + sum_{m<=M} H^(m)``."""
        M = len(self.orders) if M is None else M
        parts = [self.base.terms] + [self.full(m) for m in range(1, M + 1)]
        return pauli.canonicalize(pauli.concat(parts))


class _Nested:
    """Memoized nested commutators ``[..[B, S^(n1)], .., S^(nc)]`` keyed by prefix."""

    def __init__(self, bases: dict[str, PauliSum], gen: SWGenerator):
        self.gen = gen
        self.cache: dict[tuple, PauliSum] = {(name, ()): rep for name, rep in bases.items()}

    def get(self, base: str, parts: tuple[int, ...]) -> PauliSum:
        key = (base, parts)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        inner = self.get(base, parts[:-1])
        out = rep_commutator_full(inner, self.gen.full(parts[-1]), self.gen.group)
        self.cache[key] = out
        return out


def _vm_from_nested(nested: _Nested, m: int, nq: int) -> PauliSum:
    pieces = []
    for comp in compositions(m - 1, 0 if m == 1 else 1):
        pieces.append((1.0 / math.factorial(len(comp)), nested.get("H1", comp)))
    for comp in compositions(m, 2):
        pieces.append((1.0 / math.factorial(len(comp)), nested.get("H0", comp)))
    return pauli.linear_combination(pieces, nq)


def compute_vm(H0: StabilizerHamiltonian, H1: PauliSum | TISum, S: SWGenerator, m: int) -> PauliSum:
    """Driving term ``V_m`` (representative) from the generator orders ``< m``."""
    if m < 1:
        raise ValueError("order must be >= 1")
    if S.M < m - 1:
        raise ValueError(f"generator holds {S.M} orders, V_{m} needs {m - 1}")
    group = S.group
    h1 = H1.rep if isinstance(H1, TISum) else TISum.from_full(H1, group).rep
    h0 = TISum.from_full(H0.terms, group).rep
    return _vm_from_nested(_Nested({"H0": h0, "H1": h1}, S), m, H0.nqubits)


def solve_sm(
    Vm: PauliSum,
    H: StabilizerHamiltonian,
    group: TranslationGroup | None = None,
    tie_break: str = "first",
) -> PauliSum:
    """Particular solution ``S^(m) = sum_P c_P / dE_P * s_P P``.

    ``s_P`` is the first (or last) term of ``H`` in canonical order that
    anticommutes with ``P``; rows commuting with all of ``H`` are dropped
    before the division.
    """
    if tie_break not in ("first", "last"):
        raise ValueError("tie_break must be 'first' or 'last'")
    group = group or TranslationGroup.trivial(Vm.nqubits)
    v = to_group_weights(pauli.canonicalize(Vm), group)
    de, first, last = excitation_energy(v, H)
    keep = first >= 0
    if not keep.any():
        return PauliSum.zero(Vm.nqubits)
    idx = (first if tie_break == "first" else last)[keep]
    px, pz, c = v.x[keep], v.z[keep], v.coeffs[keep]
    sx, sz = H.terms.x[idx], H.terms.z[idx]
    e = _phase_exponent(sx, sz, px, pz)
    coeffs = c / de[keep] * _PHASES[e]
    return from_group_sum(PauliSum(Vm.nqubits, sx ^ px, sz ^ pz, coeffs), group)


def _check_cap(what: str, m: int, n: int, cap: int | None) -> None:
    if cap is not None and n > cap:
        raise TermCapExceeded(what, m, n, cap)


def build_generator(
    H0spec: StabilizerHamiltonian,
    H1: PauliSum | TISum,
    M: int,
    group: TranslationGroup | None = None,
    tie_break: str = "first",
    term_cap: int | None = None,
) -> SWGenerator:
    """Generator orders ``1..M``; pass ``group`` to work with orbit representatives."""
    if M < 1:
        raise ValueError("order M must be >= 1")
    if isinstance(H1, TISum):
        group = H1.group
        h1 = H1.rep
    else:
        group = group or TranslationGroup.trivial(H1.nqubits)
        h1 = TISum.from_full(H1, group).rep
    if H0spec.nqubits != group.nqubits:
        raise ValueError("H0 and H1 act on different qubit counts")
    h0 = TISum.from_full(H0spec.terms, group).rep
    gen = SWGenerator([], group, tie_break=tie_break)
    nested = _Nested({"H0": h0, "H1": h1}, gen)
    for m in range(1, M + 1):
        vm = _vm_from_nested(nested, m, H0spec.nqubits)
        _check_cap("V", m, vm.nterms, term_cap)
        sm = solve_sm(vm, H0spec, group, tie_break)
        _check_cap("S", m, sm.nterms, term_cap)
        gen.vm.append(vm)
        gen.orders.append(sm)
        gen.term_counts.append(sm.nterms)
        log.info("order %d: |V|=%d |S|=%d", m, vm.nterms, sm.nterms)
    return gen


def transformed_orders(
    H0spec: StabilizerHamiltonian, H1: PauliSum | TISum, S: SWGenerator, M: int | None = None
) -> TransformedHamiltonian:
    """``H^(m) = V_m + [H0, S^(m)]`` for ``m = 1..M``."""
    M = S.M if M is None else M
    if M > S.M:
        raise ValueError(f"generator holds {S.M} orders, asked for {M}")
    group = S.group
    out = []
    for m in range(1, M + 1):
        vm = S.vm[m - 1] if len(S.vm) >= m else compute_vm(H0spec, H1, S, m)
        # [H0, S] = -[S, H0]
        comm = rep_commutator_full(S.order(m), H0spec.terms, group)
        out.append(pauli.canonicalize(pauli.concat([vm, pauli.scale(-1.0, comm)])))
    return TransformedHamiltonian(H0spec, out, group)


def dump_orders(ops: list[PauliSum], directory: str | Path, prefix: str) -> list[Path]:
    """Write each order in the PauliSum text format as ``<prefix>_<m>.txt``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for m, op in enumerate(ops, start=1):
        p = d / f"{prefix}_{m}.txt"
        p.write_text(pauli.to_text(op))
        paths.append(p)
    return paths
