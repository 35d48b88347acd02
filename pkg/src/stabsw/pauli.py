"""Binary-symplectic Pauli algebra.

A Pauli string on ``N`` qubits is stored as two bit vectors ``(x, z)`` and
denotes the Heisenberg-Weyl operator ``T(x, z) = i^{x.z} X^x Z^z`` (so the
rows ``(1,0)``, ``(1,1)``, ``(0,1)`` are exactly ``X``, ``Y``, ``Z``).  A
:class:`PauliSum` is a check matrix (one such row per term) plus a complex
coefficient vector.

Rows are packed into ``uint64`` words with qubit ``q`` stored in word
``q // 64`` at bit ``63 - q % 64``.  With that layout, comparing the word
sequences as unsigned integers is the same as comparing the bit vectors
lexicographically in qubit order, which is the fixed total order used by
:func:`canonicalize`: rows sort by ``(xbits, zbits)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "DROP_TOL",
    "PauliTerm",
    "PauliSum",
    "CommutationMatrix",
    "phase_f",
    "multiply",
    "commutator",
    "add",
    "sub",
    "scale",
    "commutation_matrix",
    "canonicalize",
    "is_anti_hermitian",
    "is_hermitian",
    "from_text",
    "to_text",
]

#: coefficients below this fraction of the largest magnitude are dropped
DROP_TOL = 1e-14

_PHASES = np.array([1.0, 1.0j, -1.0, -1.0j], dtype=np.complex128)
_LETTERS = "IXZY"  # indexed by x + 2 z
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}

# pair blocks are processed in chunks of roughly this many candidate pairs
_CHUNK_PAIRS = 1 << 21
# above this many candidate pairs, commutators prune by support overlap first
_OVERLAP_PRUNE_PAIRS = 1 << 22


def nwords(nqubits: int) -> int:
    return (nqubits + 63) // 64


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack an ``(n, N)`` 0/1 array into ``(n, nwords(N))`` uint64 words."""
    bits = np.asarray(bits, dtype=np.uint8)
    n, nq = bits.shape
    w = nwords(nq)
    padded = np.zeros((n, w * 64), dtype=np.uint8)
    padded[:, :nq] = bits
    packed = np.packbits(padded, axis=1)  # big-endian bit order inside bytes
    return packed.view(">u8").astype(np.uint64).reshape(n, w)


def unpack_bits(words: np.ndarray, nqubits: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`; returns an ``(n, N)`` uint8 array."""
    words = np.ascontiguousarray(words, dtype=np.uint64)
    n = words.shape[0]
    if n == 0:
        return np.zeros((0, nqubits), dtype=np.uint8)
    raw = words.astype(">u8").view(np.uint8).reshape(n, -1)
    return np.unpackbits(raw, axis=1)[:, :nqubits]


def _popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a).sum(axis=-1, dtype=np.int64)


def _symplectic_parity(x1, z1, x2, z2) -> np.ndarray:
    """1 where the row pairs anticommute (broadcasting over leading axes)."""
    return (_popcount((x1 & z2) ^ (z1 & x2)) & 1).astype(bool)


def _phase_exponent(x1, z1, x2, z2) -> np.ndarray:
    """Exponent ``e`` (mod 4) with ``T(r1) T(r2) = i^e T(r1 xor r2)``.

    Both factors of the product phase are collected into integer inner
    products: ``(a2.b1 - a1.b2) + (a1+a2).(b1+b2) - (a1^a2).(b1^b2)``
    simplifies to ``2 a2.b1 + a1.b1 + a2.b2 - |(a1^a2)&(b1^b2)|``.
    """
    e = (
        2 * _popcount(x2 & z1)
        + _popcount(x1 & z1)
        + _popcount(x2 & z2)
        - _popcount((x1 ^ x2) & (z1 ^ z2))
    )
    return e % 4


@dataclass(frozen=True)
class PauliTerm:
    """A single Pauli string with prefactor +1.

    ``xbits`` and ``zbits`` are Python integers with qubit ``q`` at bit ``q``.
    """

    nqubits: int
    xbits: int = 0
    zbits: int = 0

    def __post_init__(self):
        if self.nqubits < 1:
            raise ValueError("a Pauli term needs at least one qubit")
        limit = 1 << self.nqubits
        if not (0 <= self.xbits < limit and 0 <= self.zbits < limit):
            raise ValueError("bit vectors longer than nqubits")

    @classmethod
    def from_label(cls, label: str) -> "PauliTerm":
        x = z = 0
        for q, ch in enumerate(label.upper()):
            a, b = _LETTER_BITS[ch]
            x |= a << q
            z |= b << q
        return cls(len(label), x, z)

    @classmethod
    def from_sparse(cls, nqubits: int, ops: Mapping[int, str]) -> "PauliTerm":
        x = z = 0
        for q, ch in ops.items():
            if not 0 <= q < nqubits:
                raise ValueError(f"site {q} outside 0..{nqubits - 1}")
            a, b = _LETTER_BITS[ch.upper()]
            x |= a << q
            z |= b << q
        return cls(nqubits, x, z)

    @property
    def label(self) -> str:
        return "".join(
            _LETTERS[((self.xbits >> q) & 1) + 2 * ((self.zbits >> q) & 1)] for q in range(self.nqubits)
        )

    def bits(self) -> np.ndarray:
        """Row as a length-2N 0/1 array ``[x | z]``."""
        xs = [(self.xbits >> q) & 1 for q in range(self.nqubits)]
        zs = [(self.zbits >> q) & 1 for q in range(self.nqubits)]
        return np.array(xs + zs, dtype=np.uint8)

    @classmethod
    def from_bits(cls, row: Sequence[int]) -> "PauliTerm":
        row = [int(v) & 1 for v in row]
        n = len(row) // 2
        x = sum(b << q for q, b in enumerate(row[:n]))
        z = sum(b << q for q, b in enumerate(row[n:]))
        return cls(n, x, z)

    def commutes_with(self, other: "PauliTerm") -> bool:
        return ((self.xbits & other.zbits).bit_count() + (self.zbits & other.xbits).bit_count()) % 2 == 0

    def __mul__(self, other: "PauliTerm") -> tuple[complex, "PauliTerm"]:
        return phase_f(self, other), PauliTerm(self.nqubits, self.xbits ^ other.xbits, self.zbits ^ other.zbits)

    def __str__(self):
        return self.label


def phase_f(row1: PauliTerm, row2: PauliTerm) -> complex:
    """Phase ``F`` with ``T(row1) T(row2) = F * T(row1 xor row2)``; one of 1, i, -1, -i."""
    if row1.nqubits != row2.nqubits:
        raise ValueError(f"length mismatch: {row1.nqubits} vs {row2.nqubits}")
    a1, b1, a2, b2 = row1.xbits, row1.zbits, row2.xbits, row2.zbits
    e = 2 * (a2 & b1).bit_count() + (a1 & b1).bit_count() + (a2 & b2).bit_count() - ((a1 ^ a2) & (b1 ^ b2)).bit_count()
    return complex(_PHASES[e % 4])


class PauliSum:
    """An operator ``sum_i c_i T(x_i, z_i)`` on ``nqubits`` qubits.

    Instances are treated as immutable.  All arithmetic returns canonical sums
    (sorted rows, merged duplicates, negligible coefficients removed).
    """

    __slots__ = ("nqubits", "x", "z", "coeffs")

    def __init__(self, nqubits: int, x: np.ndarray, z: np.ndarray, coeffs: np.ndarray):
        if nqubits < 1:
            raise ValueError("nqubits must be positive")
        w = nwords(nqubits)
        x = np.asarray(x, dtype=np.uint64).reshape(-1, w)
        z = np.asarray(z, dtype=np.uint64).reshape(-1, w)
        coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
        if not (x.shape[0] == z.shape[0] == coeffs.shape[0]):
            raise ValueError("rows and coefficients must have equal length")
        self.nqubits = nqubits
        self.x = x
        self.z = z
        self.coeffs = coeffs

    # -- construction -------------------------------------------------------
    @classmethod
    def zero(cls, nqubits: int) -> "PauliSum":
        w = nwords(nqubits)
        return cls(nqubits, np.zeros((0, w), np.uint64), np.zeros((0, w), np.uint64), np.zeros(0, complex))

    @classmethod
    def identity(cls, nqubits: int, coeff: complex = 1.0) -> "PauliSum":
        w = nwords(nqubits)
        return cls(nqubits, np.zeros((1, w), np.uint64), np.zeros((1, w), np.uint64), [coeff])

    @classmethod
    def from_bits(cls, xbits: np.ndarray, zbits: np.ndarray, coeffs) -> "PauliSum":
        """From ``(n, N)`` 0/1 arrays."""
        xbits = np.atleast_2d(xbits)
        zbits = np.atleast_2d(zbits)
        return cls(xbits.shape[1], pack_bits(xbits), pack_bits(zbits), coeffs)

    @classmethod
    def from_terms(cls, terms: Sequence[PauliTerm], coeffs=None) -> "PauliSum":
        if not terms:
            raise ValueError("need at least one term to infer nqubits; use PauliSum.zero")
        n = terms[0].nqubits
        rows = np.array([t.bits() for t in terms], dtype=np.uint8)
        if coeffs is None:
            coeffs = np.ones(len(terms))
        return cls.from_bits(rows[:, :n], rows[:, n:], coeffs)

    @classmethod
    def from_labels(cls, labels: Sequence[str], coeffs=None) -> "PauliSum":
        return cls.from_terms([PauliTerm.from_label(s) for s in labels], coeffs)

    @classmethod
    def from_sparse(cls, nqubits: int, terms: Iterable[Mapping[int, str]], coeffs=None) -> "PauliSum":
        terms = list(terms)
        if not terms:
            return cls.zero(nqubits)
        xb = np.zeros((len(terms), nqubits), np.uint8)
        zb = np.zeros((len(terms), nqubits), np.uint8)
        for i, ops in enumerate(terms):
            for q, ch in ops.items():
                if not 0 <= q < nqubits:
                    raise ValueError(f"site {q} outside 0..{nqubits - 1}")
                a, b = _LETTER_BITS[ch.upper()]
                xb[i, q] ^= a
                zb[i, q] ^= b
        if coeffs is None:
            coeffs = np.ones(len(terms))
        return cls(nqubits, pack_bits(xb), pack_bits(zb), coeffs)

    # -- views --------------------------------------------------------------
    def __len__(self) -> int:
        return self.coeffs.shape[0]

    @property
    def nterms(self) -> int:
        return self.coeffs.shape[0]

    def term(self, i: int) -> PauliTerm:
        xb = unpack_bits(self.x[i : i + 1], self.nqubits)[0]
        zb = unpack_bits(self.z[i : i + 1], self.nqubits)[0]
        return PauliTerm.from_bits(np.concatenate([xb, zb]))

    def terms(self) -> list[PauliTerm]:
        return [self.term(i) for i in range(self.nterms)]

    def labels(self) -> list[str]:
        xb = unpack_bits(self.x, self.nqubits)
        zb = unpack_bits(self.z, self.nqubits)
        codes = xb + 2 * zb
        return ["".join(_LETTERS[c] for c in row) for row in codes]

    def check_matrix(self) -> np.ndarray:
        """The ``(n_terms, 2N)`` 0/1 check matrix ``[x | z]``."""
        return np.concatenate([unpack_bits(self.x, self.nqubits), unpack_bits(self.z, self.nqubits)], axis=1)

    def support_bits(self) -> np.ndarray:
        return unpack_bits(self.x | self.z, self.nqubits)

    def weights(self) -> np.ndarray:
        """Number of non-identity sites of each row."""
        return _popcount(self.x | self.z)

    def row_keys(self) -> np.ndarray:
        """``(n, 2W)`` word matrix; lexicographic order on it is the canonical row order."""
        return np.concatenate([self.x, self.z], axis=1)

    def is_zero(self) -> bool:
        return self.nterms == 0

    def coefficient_of(self, term: PauliTerm | str) -> complex:
        if isinstance(term, str):
            term = PauliTerm.from_label(term)
        probe = PauliSum.from_terms([term])
        hit = np.all(self.x == probe.x[0], axis=1) & np.all(self.z == probe.z[0], axis=1)
        return complex(self.coeffs[hit].sum())

    def as_dict(self) -> dict[str, complex]:
        return dict(zip(self.labels(), (complex(c) for c in self.coeffs)))

    def take(self, mask_or_index) -> "PauliSum":
        return PauliSum(self.nqubits, self.x[mask_or_index], self.z[mask_or_index], self.coeffs[mask_or_index])

    def __repr__(self):
        if self.nterms > 8:
            return f"PauliSum(nqubits={self.nqubits}, nterms={self.nterms})"
        body = " + ".join(f"({c:.6g}){lab}" for lab, c in zip(self.labels(), self.coeffs))
        return f"PauliSum({body or '0'})"

    # -- operators ----------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __neg__(self):
        return scale(-1.0, self)

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            return multiply(self, other)
        return scale(other, self)

    def __rmul__(self, other):
        return scale(other, self)

    def __matmul__(self, other):
        return multiply(self, other)

    def dagger(self) -> "PauliSum":
        return PauliSum(self.nqubits, self.x, self.z, np.conj(self.coeffs))


@dataclass(frozen=True)
class CommutationMatrix:
    """``entries[i, j]`` is 1 iff row ``i`` of the first operator anticommutes with row ``j`` of the second."""

    entries: np.ndarray

    def __array__(self, dtype=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def _check_same(a: PauliSum, b: PauliSum) -> None:
    if a.nqubits != b.nqubits:
        raise ValueError(f"size mismatch: {a.nqubits} vs {b.nqubits} qubits")


def canonicalize(a: PauliSum, tol: float = DROP_TOL) -> PauliSum:
    """Sort rows, merge duplicates, and drop negligible coefficients."""
    n = a.nterms
    if n == 0:
        return a
    keys = a.row_keys()
    order = np.lexsort(keys.T[::-1])
    keys = keys[order]
    coeffs = a.coeffs[order]
    if n > 1:
        new_group = np.empty(n, dtype=bool)
        new_group[0] = True
        np.any(keys[1:] != keys[:-1], axis=1, out=new_group[1:])
        gid = np.cumsum(new_group) - 1
        starts = np.flatnonzero(new_group)
        ng = starts.shape[0]
        if ng < n:
            coeffs = np.bincount(gid, weights=coeffs.real, minlength=ng) + 1j * np.bincount(
                gid, weights=coeffs.imag, minlength=ng
            )
            keys = keys[starts]
    mags = np.abs(coeffs)
    cut = tol * mags.max() if mags.size else 0.0
    keep = mags > cut
    w = a.x.shape[1]
    return PauliSum(a.nqubits, keys[keep, :w], keys[keep, w:], coeffs[keep])


def scale(lam: complex, a: PauliSum) -> PauliSum:
    return canonicalize(PauliSum(a.nqubits, a.x, a.z, lam * a.coeffs))


def concat(parts: Sequence[PauliSum], nqubits: int | None = None) -> PauliSum:
    """Stack rows without merging."""
    if not parts:
        if nqubits is None:
            raise ValueError("cannot infer nqubits of an empty concatenation")
        return PauliSum.zero(nqubits)
    n = parts[0].nqubits
    for p in parts:
        _check_same(parts[0], p)
    return PauliSum(
        n,
        np.concatenate([p.x for p in parts]),
        np.concatenate([p.z for p in parts]),
        np.concatenate([p.coeffs for p in parts]),
    )


def add(a: PauliSum, b: PauliSum) -> PauliSum:
    _check_same(a, b)
    return canonicalize(concat([a, b]))


def sub(a: PauliSum, b: PauliSum) -> PauliSum:
    _check_same(a, b)
    return canonicalize(concat([a, PauliSum(b.nqubits, b.x, b.z, -b.coeffs)]))


def linear_combination(parts: Sequence[tuple[complex, PauliSum]], nqubits: int) -> PauliSum:
    """``sum_k lam_k * A_k`` with a single merge."""
    scaled = [PauliSum(p.nqubits, p.x, p.z, lam * p.coeffs) for lam, p in parts if p.nterms]
    return canonicalize(concat(scaled, nqubits))


def commutation_matrix(a: PauliSum, b: PauliSum) -> CommutationMatrix:
    """``CM_a L CM_b^T mod 2`` as a boolean matrix."""
    _check_same(a, b)
    ent = _symplectic_parity(a.x[:, None, :], a.z[:, None, :], b.x[None, :, :], b.z[None, :, :])
    return CommutationMatrix(ent.astype(np.uint8))


def anticommutes_with_any(a: PauliSum, b: PauliSum) -> np.ndarray:
    """Per-row flag of ``a``: anticommutes with at least one row of ``b``."""
    _check_same(a, b)
    out = np.zeros(a.nterms, dtype=bool)
    for j in range(b.nterms):
        out |= _symplectic_parity(a.x, a.z, b.x[j], b.z[j])
    return out


def _support_incidence(p: PauliSum) -> sp.csr_matrix:
    bits = p.support_bits()
    return sp.csr_matrix(bits.astype(np.int32))


def _overlap_pairs(a: PauliSum, inc_bt: sp.csc_matrix) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs whose supports intersect (only these can anticommute)."""
    prod = (_support_incidence(a) @ inc_bt).tocoo()
    ia = prod.row.astype(np.int64)
    ib = prod.col.astype(np.int64)
    order = np.lexsort((ib, ia))
    return ia[order], ib[order]


def _products_from_pairs(a: PauliSum, b: PauliSum, ia, ib, factor: float) -> PauliSum:
    x1, z1, x2, z2 = a.x[ia], a.z[ia], b.x[ib], b.z[ib]
    e = _phase_exponent(x1, z1, x2, z2)
    coeffs = factor * a.coeffs[ia] * b.coeffs[ib] * _PHASES[e]
    return canonicalize(PauliSum(a.nqubits, x1 ^ x2, z1 ^ z2, coeffs))


def _merge_chunks(chunks: list[PauliSum], nqubits: int) -> PauliSum:
    if not chunks:
        return PauliSum.zero(nqubits)
    if len(chunks) == 1:
        return chunks[0]
    return canonicalize(concat(chunks))


def multiply(a: PauliSum, b: PauliSum) -> PauliSum:
    """Operator product ``a b`` (all row pairs)."""
    _check_same(a, b)
    na, nb = a.nterms, b.nterms
    if na == 0 or nb == 0:
        return PauliSum.zero(a.nqubits)
    step = max(1, _CHUNK_PAIRS // nb)
    chunks = []
    for lo in range(0, na, step):
        ia = np.repeat(np.arange(lo, min(na, lo + step)), nb)
        ib = np.tile(np.arange(nb), min(na, lo + step) - lo)
        chunks.append(_products_from_pairs(a, b, ia, ib, 1.0))
    return _merge_chunks(chunks, a.nqubits)


def commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """``[a, b]``; only anticommuting row pairs contribute ``2 c_a c_b F``."""
    _check_same(a, b)
    na, nb = a.nterms, b.nterms
    if na == 0 or nb == 0:
        return PauliSum.zero(a.nqubits)
    chunks = []
    if na * nb <= _OVERLAP_PRUNE_PAIRS:
        step = max(1, _CHUNK_PAIRS // nb)
        for lo in range(0, na, step):
            hi = min(na, lo + step)
            mask = _symplectic_parity(
                a.x[lo:hi, None, :], a.z[lo:hi, None, :], b.x[None, :, :], b.z[None, :, :]
            )
            ia, ib = np.nonzero(mask)
            if ia.size:
                chunks.append(_products_from_pairs(a, b, ia + lo, ib, 2.0))
    else:
        # split a so that the overlap product stays bounded in memory
        inc_bt = _support_incidence(b).T.tocsc()
        step = max(1, (_OVERLAP_PRUNE_PAIRS << 4) // nb)
        for lo in range(0, na, step):
            part = a.take(slice(lo, min(na, lo + step)))
            ia, ib = _overlap_pairs(part, inc_bt)
            for clo in range(0, ia.size, _CHUNK_PAIRS):
                ja, jb = ia[clo : clo + _CHUNK_PAIRS], ib[clo : clo + _CHUNK_PAIRS]
                keep = _symplectic_parity(part.x[ja], part.z[ja], b.x[jb], b.z[jb])
                if keep.any():
                    chunks.append(_products_from_pairs(part, b, ja[keep], jb[keep], 2.0))
    return _merge_chunks(chunks, a.nqubits)


def is_anti_hermitian(a: PauliSum, tol: float = 1e-12) -> bool:
    if a.nterms == 0:
        return True
    scale_ = max(1.0, float(np.abs(a.coeffs).max()))
    return bool(np.all(np.abs(a.coeffs.real) <= tol * scale_))


def is_hermitian(a: PauliSum, tol: float = 1e-12) -> bool:
    if a.nterms == 0:
        return True
    scale_ = max(1.0, float(np.abs(a.coeffs).max()))
    return bool(np.all(np.abs(a.coeffs.imag) <= tol * scale_))


def allclose(a: PauliSum, b: PauliSum, atol: float = 1e-12) -> bool:
    """Coefficient-wise equality of two operators."""
    diff = sub(a, b)
    return diff.nterms == 0 or bool(np.abs(diff.coeffs).max() <= atol)


# -- text serialization --------------------------------------------------------

_SPARSE_TOKEN = re.compile(r"^\s*(\d+)\s*:\s*([IXYZixyz])\s*$")


def to_text(a: PauliSum) -> str:
    """One line per term: ``<re> <im> <letters>``."""
    lines = [f"{float(c.real)!r} {float(c.imag)!r} {lab}" for lab, c in zip(a.labels(), a.coeffs)]
    return "\n".join(lines) + ("\n" if lines else "")


def _parse_string_field(field: str, nqubits: int | None) -> tuple[int, dict[int, str]]:
    if ":" in field:
        if nqubits is None:
            raise ValueError("sparse (site:letter) terms need an explicit nqubits")
        ops = {}
        for tok in field.strip("()").split(","):
            if not tok.strip():
                continue
            m = _SPARSE_TOKEN.match(tok)
            if not m:
                raise ValueError(f"bad sparse token {tok!r}")
            ops[int(m.group(1))] = m.group(2).upper()
        return nqubits, ops
    field = field.strip()
    if not field or any(ch not in "IXYZixyz" for ch in field):
        raise ValueError(f"bad Pauli string {field!r}")
    if nqubits is not None and len(field) != nqubits:
        raise ValueError(f"string {field!r} has length {len(field)}, expected {nqubits}")
    return len(field), {q: ch.upper() for q, ch in enumerate(field) if ch.upper() != "I"}


def from_text(text: str, nqubits: int | None = None) -> PauliSum:
    """Parse the format written by :func:`to_text`.

    The third field may also be a sparse list such as ``0:X,3:Z``, in which
    case ``nqubits`` must be given.  Blank lines and ``#`` comments are skipped.
    """
    terms, coeffs = [], []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 2)
        if len(parts) != 3:
            raise ValueError(f"expected '<re> <im> <string>', got {raw!r}")
        n, ops = _parse_string_field(parts[2], nqubits)
        if nqubits is None:
            nqubits = n
        terms.append(ops)
        coeffs.append(complex(float(parts[0]), float(parts[1])))
    if nqubits is None:
        raise ValueError("empty operator text needs an explicit nqubits")
    return canonicalize(PauliSum.from_sparse(nqubits, terms, coeffs))


def max_weight(a: PauliSum) -> int:
    return int(a.weights().max()) if a.nterms else 0


def norm1(a: PauliSum) -> float:
    return float(np.abs(a.coeffs).sum()) if a.nterms else 0.0


def isclose_complex(u: complex, v: complex, tol: float) -> bool:
    return math.isclose(u.real, v.real, abs_tol=tol) and math.isclose(u.imag, v.imag, abs_tol=tol)
