"""Exact-diagonalization oracle for small systems (N <= 14).

Basis states are integers with qubit 0 as the most significant bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .pauli import PauliSum, PauliTerm, unpack_bits

__all__ = [
    "MAX_QUBITS",
    "OracleSizeError",
    "DenseOperator",
    "to_dense",
    "sector_ground_state",
    "exact_expectation",
    "stabilizer_state",
    "pinning_field",
    "ground_space_projector",
    "offdiagonal_residual",
]

MAX_QUBITS = 14
DENSE_EIGH_MAX = 10
PINNING_EPS = 1e-6


class OracleSizeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DenseOperator:
    nqubits: int
    matrix: sp.csr_matrix

    @property
    def dim(self) -> int:
        return 1 << self.nqubits

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        d = self.matrix - self.matrix.conj().T
        return d.nnz == 0 or float(np.abs(d.data).max()) <= tol

    def __add__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator(self.nqubits, (self.matrix + other.matrix).tocsr())

    def __matmul__(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator(self.nqubits, (self.matrix @ other.matrix).tocsr())


def _term_ints(p: PauliSum) -> tuple[np.ndarray, np.ndarray]:
    n = p.nqubits
    w = (1 << np.arange(n - 1, -1, -1, dtype=np.int64))
    xb = unpack_bits(p.x, n).astype(np.int64)
    zb = unpack_bits(p.z, n).astype(np.int64)
    return xb @ w, zb @ w


def _parity(v: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(v.astype(np.uint64)) & 1).astype(np.int64)


def to_dense(a: PauliSum | PauliTerm) -> DenseOperator:
    """Sparse matrix of ``sum_i c_i P_i`` in the computational basis."""
    if isinstance(a, PauliTerm):
        a = PauliSum.from_terms([a])
    n = a.nqubits
    if n > MAX_QUBITS:
        raise OracleSizeError(f"{n} qubits exceeds the oracle cap of {MAX_QUBITS}")
    dim = 1 << n
    states = np.arange(dim, dtype=np.int64)
    xs, zs = _term_ints(a)
    rows, cols, vals = [], [], []
    ipow = np.array([1, 1j, -1, -1j])
    for xi, zi, c in zip(xs, zs, a.coeffs):
        # T(x,z)|s> = i^{x.z} (-1)^{z.s} |s xor x>
        ph = c * ipow[int(np.bitwise_count(np.uint64(xi & zi))) % 4]
        rows.append(states ^ xi)
        cols.append(states)
        vals.append(ph * (1 - 2 * _parity(states & zi)))
    if not rows:
        return DenseOperator(n, sp.csr_matrix((dim, dim), dtype=complex))
    m = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim), dtype=complex
    ).tocsr()
    m.sum_duplicates()
    return DenseOperator(n, m)


def _as_sector(sector, n: int) -> list[tuple[int, PauliSum]]:
    out = []
    if isinstance(sector, PauliSum):
        for k in range(sector.nterms):
            c = sector.coeffs[k]
            sgn = 1 if c.real > 0 else -1
            row = sector.take(np.array([k]))
            out.append((sgn, PauliSum(n, row.x, row.z, np.ones(1, dtype=complex))))
        return out
    for sgn, term in sector:
        if isinstance(term, str):
            term = PauliTerm.from_label(term)
        p = PauliSum.from_terms([term]) if isinstance(term, PauliTerm) else term
        out.append((int(sgn), PauliSum(p.nqubits, p.x, p.z, np.ones(p.nterms, dtype=complex))))
    return out


def _lowest(mat: sp.csr_matrix) -> tuple[float, np.ndarray]:
    dim = mat.shape[0]
    if dim <= (1 << DENSE_EIGH_MAX):
        w, v = np.linalg.eigh(mat.toarray())
        return float(w[0]), v[:, 0]
    v0 = np.random.default_rng(0).standard_normal(dim) + 0j
    w, v = spla.eigsh(mat, k=1, which="SA", v0=v0, tol=1e-14, ncv=min(dim, 40))
    return float(w[0]), v[:, 0]


def sector_ground_state(H: DenseOperator, sector: Sequence | PauliSum = ()) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of ``H`` restricted to ``sigma_i g_i = +1`` for all sector operators.

    The restriction is imposed with a penalty ``Lambda * sum (1 - sigma g)/2``
    whose scale exceeds the spectral width of ``H``; inside the sector this
    leaves ``H`` untouched, so the returned pair is the projected one.
    """
    n = H.nqubits
    ops = _as_sector(sector, n)
    mats = [(s, to_dense(p).matrix) for s, p in ops]
    tol = 1e-10
    for s, g in mats:
        if abs(H.matrix @ g - g @ H.matrix).max() > tol:
            raise ValueError("sector operator does not commute with H")
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            g1, g2 = mats[i][1], mats[j][1]
            if abs(g1 @ g2 - g2 @ g1).max() > tol:
                raise ValueError("sector operators do not commute")
    width = float(abs(H.matrix).sum(axis=1).max()) if H.matrix.nnz else 0.0
    lam = 2.0 * width + 10.0
    dim = H.dim
    pen = sp.csr_matrix((dim, dim), dtype=complex)
    ident = sp.identity(dim, dtype=complex, format="csr")
    for s, g in mats:
        pen = pen + 0.5 * lam * (ident - s * g)
    e, v = _lowest((H.matrix + pen).tocsr())
    v = v / np.linalg.norm(v)
    for s, g in mats:
        if abs(np.vdot(v, g @ v) - s) > 1e-6:
            raise ValueError("empty sector: no state satisfies all sector constraints")
    return float(np.real(np.vdot(v, H.matrix @ v))), v


def exact_expectation(O: DenseOperator | PauliSum, state: np.ndarray) -> complex:
    if isinstance(O, PauliSum):
        O = to_dense(O)
    if O.dim != state.shape[0]:
        raise ValueError(f"dimension mismatch {O.dim} vs {state.shape[0]}")
    return complex(np.vdot(state, O.matrix @ state))


def stabilizer_state(gs) -> np.ndarray:
    """State vector of a ground-state spec (unique +1 eigenvector of its signed generators)."""
    n = gs.nqubits
    zero = DenseOperator(n, sp.csr_matrix((1 << n, 1 << n), dtype=complex))
    _, v = sector_ground_state(zero, gs.stabilizers)
    return v


def pinning_field(nqubits: int, eps: float = PINNING_EPS, sites: Sequence[int] | None = None) -> PauliSum:
    """Longitudinal field ``-eps sum Z`` used only inside the oracle."""
    sites = list(range(nqubits) if sites is None else sites)
    return PauliSum.from_sparse(nqubits, [{q: "Z"} for q in sites], -eps * np.ones(len(sites)))


def ground_space_projector(H0) -> np.ndarray:
    """Dense projector onto the joint +1 space of the stabilizer Hamiltonian's terms."""
    n = H0.nqubits
    if n > MAX_QUBITS:
        raise OracleSizeError(f"{n} qubits exceeds the oracle cap of {MAX_QUBITS}")
    p = np.eye(1 << n, dtype=complex)
    terms = H0.terms
    for k in H0.generator_index:
        g = to_dense(PauliSum(n, terms.x[k : k + 1], terms.z[k : k + 1], np.ones(1, dtype=complex))).toarray()
        p = p @ (0.5 * (np.eye(1 << n) + g))
    return p


def offdiagonal_residual(H: PauliSum, S: PauliSum, P0: np.ndarray) -> float:
    """Spectral norm of ``(1 - P0) e^{-S} H e^{S} P0`` for dense ``S``."""
    from scipy.linalg import expm

    h = to_dense(H).toarray()
    s = to_dense(S).toarray()
    u = expm(s)
    ht = expm(-s) @ h @ u
    q = np.eye(P0.shape[0]) - P0
    return float(np.linalg.norm(q @ ht @ P0, 2))
