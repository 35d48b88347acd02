"""Stabilizer Hamiltonians, their ground states and destabilizers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import pauli
from .f2 import BitMatrix, RankDeficiencyError, nullspace, row_reduce, smith_normal_form
from .pauli import PauliSum, PauliTerm, _phase_exponent, _symplectic_parity

__all__ = [
    "StabilizerHamiltonian",
    "GroundStateSpec",
    "StabilizerDecomposition",
    "build_stabilizer_hamiltonian",
    "complete_ground_state",
    "ground_state_from_hamiltonian",
    "excitation_energy",
    "compute_destabilizers",
    "stabilizer_decompose",
    "decompose_rows",
    "excitation_profile",
    "centralizer_basis",
    "NotInStabilizerGroup",
]


class NotInStabilizerGroup(ValueError):
    pass


def psum_to_bitmatrix(p: PauliSum) -> BitMatrix:
    return BitMatrix.from_array(p.check_matrix())


def bitmatrix_to_psum(m: BitMatrix, coeffs=None) -> PauliSum:
    arr = m.to_array()
    n = m.ncols // 2
    if coeffs is None:
        coeffs = np.ones(m.nrows)
    return PauliSum.from_bits(arr[:, :n], arr[:, n:], coeffs)


@dataclass(frozen=True, eq=False)
class StabilizerHamiltonian:
    """``H0 = -sum_i h_i g_i`` with mutually commuting Pauli terms.

    ``terms`` holds the rows in canonical order with coefficients ``-h``.
    ``generator_index`` lists a maximal independent subset (first in canonical
    order) and ``generators`` is its check matrix.
    """

    terms: PauliSum
    h: np.ndarray
    generator_index: tuple[int, ...]
    generators: BitMatrix

    @property
    def nqubits(self) -> int:
        return self.terms.nqubits

    @property
    def rank(self) -> int:
        return len(self.generator_index)


def _independent_subset(rows: Sequence[int]) -> list[int]:
    basis: dict[int, int] = {}  # pivot bit -> reduced row
    keep = []
    for i, r in enumerate(rows):
        v = r
        while v:
            top = v.bit_length() - 1
            if top in basis:
                v ^= basis[top]
            else:
                basis[top] = v
                keep.append(i)
                break
    return keep


def build_stabilizer_hamiltonian(terms: PauliSum) -> StabilizerHamiltonian:
    """Validate ``terms`` as a stabilizer Hamiltonian and pick generators."""
    t = pauli.canonicalize(terms)
    if t.nterms == 0:
        raise ValueError("empty stabilizer Hamiltonian")
    c = t.coeffs
    if np.any(np.abs(c.imag) > 1e-12):
        raise ValueError("stabilizer Hamiltonian coefficients must be real")
    h = -c.real
    if np.any(h <= 0):
        raise ValueError("stabilizer Hamiltonian must be -sum h_i g_i with h_i > 0")
    if np.any(t.weights() == 0):
        raise ValueError("identity term in stabilizer Hamiltonian")
    if np.any(pauli.anticommutes_with_any(t, t)):
        raise ValueError("stabilizer Hamiltonian terms do not commute")
    cm = psum_to_bitmatrix(t)
    idx = _independent_subset(cm.rows)
    gens = BitMatrix(len(idx), cm.ncols, tuple(cm.rows[i] for i in idx))
    return StabilizerHamiltonian(t, h, tuple(idx), gens)


@dataclass(frozen=True, eq=False)
class GroundStateSpec:
    """Signed stabilizer generators ``sigma_i g_i`` plus destabilizers.

    ``stabilizers`` and ``destabilizers`` keep generator order (they are not
    canonicalized); the stabilizer coefficients are the signs.
    """

    stab: BitMatrix
    signs: np.ndarray
    destab: BitMatrix
    stabilizers: PauliSum = field(init=False, repr=False)
    destabilizers: PauliSum = field(init=False, repr=False)

    def __post_init__(self):
        n = self.stab.ncols // 2
        if self.stab.nrows != n or self.destab.nrows != n:
            raise ValueError("ground state needs exactly N generators and N destabilizers")
        object.__setattr__(self, "signs", np.asarray(self.signs, dtype=np.int64))
        object.__setattr__(self, "stabilizers", bitmatrix_to_psum(self.stab, self.signs.astype(complex)))
        object.__setattr__(self, "destabilizers", bitmatrix_to_psum(self.destab))

    @property
    def nqubits(self) -> int:
        return self.stab.ncols // 2

    def to_text(self) -> str:
        lines = []
        for s, lab in zip(self.signs, self.stabilizers.labels()):
            lines.append(f"{'+1' if s > 0 else '-1'} 1.0 0.0 {lab}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GroundStateSpec":
        signs, labels = [], []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"bad ground-state line: {line!r}")
            signs.append(int(float(parts[0])))
            labels.append(parts[3])
        p = PauliSum.from_labels(labels)
        return complete_ground_state(p, signs)


def compute_destabilizers(stab: BitMatrix) -> BitMatrix:
    """Destabilizer check matrix with ``D L G^T = I`` (``L`` swaps x and z)."""
    n = stab.ncols // 2
    if stab.nrows != n:
        raise RankDeficiencyError(stab.nrows, n)
    p, q = smith_normal_form(stab)
    q11 = q.block(0, n, 0, n)
    q21 = q.block(n, 2 * n, 0, n)
    dx = (q21 @ p).T
    dz = (q11 @ p).T
    d = dx.hstack(dz)
    if not _symplectic_product(d, stab).is_identity():
        raise RuntimeError("destabilizer construction failed")
    return d


def _symplectic_product(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    n = a.ncols // 2
    mask = (1 << n) - 1
    b_swapped = BitMatrix(b.nrows, b.ncols, tuple(((r >> n) & mask) | ((r & mask) << n) for r in b.rows))
    return a @ b_swapped.T


def complete_ground_state(gens: PauliSum, signs: Sequence[int] | None = None) -> GroundStateSpec:
    """Build a ground-state spec from ``N`` independent commuting generators.

    ``gens`` keeps its given order; ``signs`` default to +1.
    """
    n = gens.nqubits
    if signs is None:
        signs = [1] * gens.nterms
    signs = [int(s) for s in signs]
    if any(s not in (1, -1) for s in signs):
        raise ValueError("stabilizer signs must be +1 or -1")
    if len(signs) != gens.nterms:
        raise ValueError("one sign per generator")
    if np.any(pauli.anticommutes_with_any(gens, gens)):
        raise ValueError("stabilizer generators do not commute")
    stab = psum_to_bitmatrix(gens)
    _, piv, _ = row_reduce(stab.rows, stab.ncols)
    if len(piv) != gens.nterms or gens.nterms != n:
        raise RankDeficiencyError(len(piv), n)
    return GroundStateSpec(stab, np.array(signs), compute_destabilizers(stab))


def ground_state_from_hamiltonian(
    H0: StabilizerHamiltonian, extra: PauliSum | None = None, extra_signs: Sequence[int] | None = None
) -> GroundStateSpec:
    """Ground state of ``H0`` (all generator signs +1) completed by ``extra``.

    Terms of ``H0`` are already frustration free with eigenvalue +1, so the
    generators carry sign +1; ``extra`` rows (logical operators fixing the
    sector) are appended with ``extra_signs``.
    """
    gens = H0.terms.take(np.array(H0.generator_index, dtype=np.int64))
    gens = PauliSum(gens.nqubits, gens.x, gens.z, np.ones(gens.nterms, dtype=complex))
    signs = [1] * gens.nterms
    if extra is not None and extra.nterms:
        if np.any(pauli.anticommutes_with_any(extra, H0.terms)):
            raise ValueError("sector operators must commute with the stabilizer Hamiltonian")
        gens = pauli.concat([gens, PauliSum(extra.nqubits, extra.x, extra.z, np.ones(extra.nterms, dtype=complex))])
        signs += [1] * extra.nterms if extra_signs is None else [int(s) for s in extra_signs]
    return complete_ground_state(gens, signs)


@dataclass(frozen=True)
class StabilizerDecomposition:
    exponents: tuple[int, ...]
    sign: int


def decompose_rows(p: PauliSum, gs: GroundStateSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized stabilizer decomposition.

    Returns ``(in_group, exponents, signs)``: ``in_group`` marks rows that
    commute with every generator (hence lie in the stabilizer group up to
    sign), ``exponents`` is the ``(nrows, N)`` 0/1 matrix from destabilizer
    commutation, and ``signs`` is ``<psi| P |psi>`` for those rows (0 for
    rows outside the group).  Row coefficients are ignored.
    """
    n = gs.nqubits
    k = p.nterms
    st, ds = gs.stabilizers, gs.destabilizers
    in_group = ~pauli.anticommutes_with_any(p, st)
    exps = np.zeros((k, n), dtype=np.uint8)
    for j in range(n):
        exps[:, j] = _symplectic_parity(p.x, p.z, ds.x[j : j + 1], ds.z[j : j + 1])
    exps[~in_group] = 0
    signs = np.zeros(k, dtype=np.int64)
    if not in_group.any():
        return in_group, exps, signs
    rows = np.flatnonzero(in_group)
    e = exps[rows]
    ax = np.zeros((rows.size, p.x.shape[1]), dtype=np.uint64)
    az = np.zeros_like(ax)
    ph = np.zeros(rows.size, dtype=np.int64)
    for j in np.flatnonzero(e.any(axis=0)):
        m = e[:, j].astype(bool)
        gx, gz = st.x[j : j + 1], st.z[j : j + 1]
        ph[m] += _phase_exponent(ax[m], az[m], gx, gz)
        if gs.signs[j] < 0:
            ph[m] += 2
        ax[m] ^= gx
        az[m] ^= gz
    if not (np.array_equal(ax, p.x[rows]) and np.array_equal(az, p.z[rows])):
        raise RuntimeError("stabilizer product does not reproduce the row")
    ph %= 4
    if np.any(ph % 2):
        raise RuntimeError("imaginary stabilizer sign")
    signs[rows] = 1 - ph
    return in_group, exps, signs


def stabilizer_decompose(term: PauliTerm | PauliSum, gs: GroundStateSpec) -> StabilizerDecomposition:
    """Exponents ``a`` and sign with ``P = sign * prod_j (sigma_j g_j)^{a_j}``."""
    p = PauliSum.from_terms([term]) if isinstance(term, PauliTerm) else term
    if p.nterms != 1:
        raise ValueError("decompose a single Pauli string")
    ok, e, s = decompose_rows(p, gs)
    if not ok[0]:
        raise NotInStabilizerGroup("Pauli string anticommutes with a stabilizer")
    return StabilizerDecomposition(tuple(int(v) for v in e[0]), int(s[0]))


def excitation_profile(p: PauliSum, H0: StabilizerHamiltonian) -> tuple[np.ndarray, np.ndarray]:
    """Per-row mask of flipped ``H0`` terms and the excitation energy ``2 sum h``."""
    flipped = _symplectic_parity(
        p.x[:, None, :], p.z[:, None, :], H0.terms.x[None, :, :], H0.terms.z[None, :, :]
    ).astype(bool)
    return flipped, 2.0 * (flipped * H0.h[None, :]).sum(axis=1)


def excitation_energy(p: PauliSum, H0: StabilizerHamiltonian, chunk: int = 4096) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Excitation energy and indices of the first and last flipped ``H0`` terms (-1 if none).

    Chunked version of :func:`excitation_profile` that avoids materializing
    the full mask.
    """
    k = p.nterms
    de = np.zeros(k)
    first = np.full(k, -1, dtype=np.int64)
    last = np.full(k, -1, dtype=np.int64)
    for s in range(0, k, chunk):
        sl = slice(s, s + chunk)
        f, e = excitation_profile(p.take(np.arange(s, min(s + chunk, k))), H0)
        de[sl] = e
        anyf = f.any(axis=1)
        first[sl] = np.where(anyf, f.argmax(axis=1), -1)
        last[sl] = np.where(anyf, f.shape[1] - 1 - f[:, ::-1].argmax(axis=1), -1)
    return de, first, last


def centralizer_basis(stab: BitMatrix) -> BitMatrix:
    """Basis of Pauli rows commuting with every row of ``stab``."""
    n = stab.ncols // 2
    mask = (1 << n) - 1
    swapped = BitMatrix(stab.nrows, stab.ncols, tuple(((r >> n) & mask) | ((r & mask) << n) for r in stab.rows))
    return nullspace(swapped)
