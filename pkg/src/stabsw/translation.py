"""Translation-invariant operators stored by one representative per orbit.

A :class:`TISum` with representative ``rep`` denotes the operator in which
every *distinct* translate of each representative row appears once with the
row's coefficient.  Rows that are invariant under a subgroup of size ``k``
(long strings wrapping a small torus) are therefore weighted by ``1/k``
whenever the full-group sum ``sum_g g(.)`` is used internally; this is the
multiplicity bookkeeping that keeps :func:`expand_full` from double counting.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import pauli
from .pauli import PauliSum, canonicalize, pack_bits, unpack_bits

__all__ = [
    "TranslationGroup",
    "TISum",
    "ti_add",
    "ti_sub",
    "ti_multiply",
    "ti_commutator",
    "expand_full",
    "orbit_data",
    "chain_group",
]


@dataclass(frozen=True, eq=False)
class TranslationGroup:
    """Abelian group generated by commuting site permutations.

    ``generators[k][q]`` is the image of site ``q`` under the k-th generator,
    and ``orbit_sizes[k]`` its order.
    """

    nqubits: int
    generators: tuple[tuple[int, ...], ...]
    orbit_sizes: tuple[int, ...]
    elements: tuple[np.ndarray, ...] = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.generators) != len(self.orbit_sizes):
            raise ValueError("one orbit size per generator")
        gens = [np.asarray(g, dtype=np.int64) for g in self.generators]
        ident = np.arange(self.nqubits)
        for g, size in zip(gens, self.orbit_sizes):
            if sorted(g.tolist()) != list(range(self.nqubits)):
                raise ValueError("generator is not a permutation of the sites")
            p = ident.copy()
            for _ in range(size):
                p = g[p]
            if not np.array_equal(p, ident):
                raise ValueError("generator does not return to identity after its orbit size")
        for g1, g2 in itertools.combinations(gens, 2):
            if not np.array_equal(g1[g2], g2[g1]):
                raise ValueError("translation generators must commute")
        elems = []
        for powers in itertools.product(*(range(s) for s in self.orbit_sizes)):
            p = ident.copy()
            for g, n in zip(gens, powers):
                for _ in range(n):
                    p = g[p]
            elems.append(p)
        object.__setattr__(self, "elements", tuple(elems))

    @classmethod
    def trivial(cls, nqubits: int) -> "TranslationGroup":
        return cls(nqubits, (), ())

    @property
    def order(self) -> int:
        return len(self.elements)

    def same_as(self, other: "TranslationGroup") -> bool:
        return (
            self.nqubits == other.nqubits
            and self.orbit_sizes == other.orbit_sizes
            and all(np.array_equal(np.asarray(a), np.asarray(b)) for a, b in zip(self.generators, other.generators))
        )

    @cached_property
    def _gathers(self) -> tuple[np.ndarray, ...]:
        # new_bits[:, perm[q]] = bits[:, q]  <=>  new_bits = bits[:, inverse(perm)]
        out = []
        for p in self.elements:
            inv = np.empty_like(p)
            inv[p] = np.arange(p.shape[0])
            out.append(inv)
        return tuple(out)

    def translate_bits(self, bits: np.ndarray, k: int) -> np.ndarray:
        return bits[:, self._gathers[k]]

    def translate(self, a: PauliSum, k: int) -> PauliSum:
        xb = unpack_bits(a.x, a.nqubits)
        zb = unpack_bits(a.z, a.nqubits)
        g = self._gathers[k]
        return PauliSum(a.nqubits, pack_bits(xb[:, g]), pack_bits(zb[:, g]), a.coeffs)


def _lex_less(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise lexicographic ``a < b`` for unsigned word matrices."""
    diff = a != b
    anyd = diff.any(axis=1)
    first = diff.argmax(axis=1)
    idx = np.arange(a.shape[0])
    return anyd & (a[idx, first] < b[idx, first])


def orbit_data(a: PauliSum, group: TranslationGroup) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-row canonical representative and stabilizer-subgroup size.

    Returns ``(rep_x, rep_z, k)`` where the representative is the
    lexicographically smallest translate and ``k`` counts group elements
    fixing the row.
    """
    n = a.nterms
    if group.order == 1 or n == 0:
        return a.x, a.z, np.ones(n, dtype=np.int64)
    xb = unpack_bits(a.x, a.nqubits)
    zb = unpack_bits(a.z, a.nqubits)
    orig = a.row_keys()
    best = orig.copy()
    k = np.zeros(n, dtype=np.int64)
    w = a.x.shape[1]
    for idx in range(group.order):
        g = group._gathers[idx]
        keys = np.concatenate([pack_bits(xb[:, g]), pack_bits(zb[:, g])], axis=1)
        k += np.all(keys == orig, axis=1)
        less = _lex_less(keys, best)
        best[less] = keys[less]
    return best[:, :w], best[:, w:], k


def ti_canonical(a: PauliSum, group: TranslationGroup) -> PauliSum:
    """Move each row (orbit-sum convention) to its representative and merge."""
    if group.order == 1:
        return canonicalize(a)
    rx, rz, _ = orbit_data(a, group)
    return canonicalize(PauliSum(a.nqubits, rx, rz, a.coeffs))


def from_group_sum(a: PauliSum, group: TranslationGroup) -> PauliSum:
    """Representative (orbit convention) of ``sum_g g(a)``."""
    if group.order == 1:
        return canonicalize(a)
    rx, rz, k = orbit_data(a, group)
    return canonicalize(PauliSum(a.nqubits, rx, rz, a.coeffs * k))


def to_group_weights(a: PauliSum, group: TranslationGroup) -> PauliSum:
    """Rescale representative rows so that ``sum_g g(result)`` is the denoted operator."""
    if group.order == 1:
        return a
    _, _, k = orbit_data(a, group)
    return PauliSum(a.nqubits, a.x, a.z, a.coeffs / k)


@dataclass(frozen=True, eq=False)
class TISum:
    rep: PauliSum
    group: TranslationGroup

    def __post_init__(self):
        if self.rep.nqubits != self.group.nqubits:
            raise ValueError("representative and group act on different qubit counts")

    @classmethod
    def from_rep(cls, rep: PauliSum, group: TranslationGroup) -> "TISum":
        return cls(ti_canonical(rep, group), group)

    @classmethod
    def from_full(cls, full: PauliSum, group: TranslationGroup, check: bool = True) -> "TISum":
        """Pick one row per orbit from an explicit translation-invariant operator."""
        full = canonicalize(full)
        if group.order == 1 or full.nterms == 0:
            return cls(full, group)
        rx, rz, _ = orbit_data(full, group)
        is_rep = np.all(rx == full.x, axis=1) & np.all(rz == full.z, axis=1)
        out = cls(full.take(is_rep), group)
        if check and not pauli.allclose(expand_full(out), full):
            raise ValueError("operator is not invariant under the translation group")
        return out

    @cached_property
    def full(self) -> PauliSum:
        return expand_full(self)

    @property
    def nterms(self) -> int:
        return self.rep.nterms


def _check_group(a: TISum, b: TISum) -> None:
    if a.group is not b.group and not a.group.same_as(b.group):
        raise ValueError("TISum operands carry different translation groups")


def expand_full(a: TISum) -> PauliSum:
    """Explicit operator: every distinct translate of every representative row."""
    g = a.group
    if g.order == 1:
        return a.rep
    weighted = to_group_weights(a.rep, g)
    parts = [g.translate(weighted, k) for k in range(g.order)]
    return canonicalize(pauli.concat(parts, a.rep.nqubits))


def ti_add(a: TISum, b: TISum) -> TISum:
    _check_group(a, b)
    return TISum(ti_canonical(pauli.concat([a.rep, b.rep]), a.group), a.group)


def ti_sub(a: TISum, b: TISum) -> TISum:
    _check_group(a, b)
    neg = PauliSum(b.rep.nqubits, b.rep.x, b.rep.z, -b.rep.coeffs)
    return TISum(ti_canonical(pauli.concat([a.rep, neg]), a.group), a.group)


def rep_times_full(a_rep: PauliSum, b_full: PauliSum, group: TranslationGroup) -> PauliSum:
    """Representative of ``A B`` given A's representative and B explicitly."""
    return from_group_sum(pauli.multiply(to_group_weights(a_rep, group), b_full), group)


def rep_commutator_full(a_rep: PauliSum, b_full: PauliSum, group: TranslationGroup) -> PauliSum:
    """Representative of ``[A, B]`` given A's representative and B explicitly."""
    return from_group_sum(pauli.commutator(to_group_weights(a_rep, group), b_full), group)


def ti_multiply(a: TISum, b: TISum) -> TISum:
    _check_group(a, b)
    return TISum(rep_times_full(a.rep, b.full, a.group), a.group)


def ti_commutator(a: TISum, b: TISum) -> TISum:
    _check_group(a, b)
    return TISum(rep_commutator_full(a.rep, b.full, a.group), a.group)


def chain_group(n: int) -> TranslationGroup:
    """Cyclic shift by one site on a ring of ``n`` qubits."""
    return TranslationGroup(n, (tuple((q + 1) % n for q in range(n)),), (n,))
