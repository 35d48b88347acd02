"""Perturbative ground-state expectation values and correlators."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import pauli
from .pauli import PauliSum, _PHASES, _phase_exponent, _symplectic_parity, pack_bits
from .stabilizer import GroundStateSpec, decompose_rows
from .sw import SWGenerator, compositions

__all__ = [
    "ExpectationReport",
    "conjugate_expand",
    "order_expectations",
    "expectation",
    "connected_correlation",
    "connected_correlation_orders",
    "correlation_length",
    "ground_value",
    "pair_ground_value",
    "syndromes",
    "perimeter_fit",
    "loop_deviation",
    "deviation_onset",
]

_IMAG_RTOL = 1e-10
_IMAG_ATOL = 1e-14


@dataclass
class ExpectationReport:
    observable: str
    orders: list[complex]
    cumulative: list[complex] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.cumulative:
            self.cumulative = list(np.cumsum(np.asarray(self.orders, dtype=complex)))

    @property
    def M(self) -> int:
        return len(self.orders) - 1

    def value(self, M: int | None = None) -> float:
        M = self.M if M is None else M
        return float(np.real(self.cumulative[M]))

    def is_real(self) -> bool:
        return all(abs(c.imag) <= _IMAG_RTOL * abs(c.real) + _IMAG_ATOL for c in map(complex, self.orders))

    def to_dict(self) -> dict:
        def enc(c):
            c = complex(c)
            return c.real if c.imag == 0 else [c.real, c.imag]

        return {
            "observable": self.observable,
            "orders": [enc(c) for c in self.orders],
            "cumulative": [enc(c) for c in self.cumulative],
            "params": self.params,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _nested_cache(O: PauliSum, S: SWGenerator):
    cache: dict[tuple[int, ...], PauliSum] = {(): pauli.canonicalize(O)}

    def nested(parts):
        hit = cache.get(parts)
        if hit is None:
            hit = pauli.commutator(nested(parts[:-1]), S.full(parts[-1]))
            cache[parts] = hit
        return hit

    return nested


def conjugate_expand(O: PauliSum, S: SWGenerator, M: int) -> list[PauliSum]:
    """``[O^(0), .., O^(M)]`` of ``e^{-S} O e^{S}`` in explicit form."""
    if M > S.M:
        raise ValueError(f"generator holds {S.M} orders, expansion needs {M}")
    nested = _nested_cache(O, S)
    out = [nested(())]
    for m in range(1, M + 1):
        pieces = [(1.0 / math.factorial(len(c)), nested(c)) for c in compositions(m, 1)]
        out.append(pauli.linear_combination(pieces, O.nqubits))
    return out


def ground_value(op: PauliSum, gs: GroundStateSpec) -> complex:
    """``<psi|op|psi>`` for the stabilizer state ``gs``."""
    if op.nterms == 0:
        return 0j
    ok, _, signs = decompose_rows(op, gs)
    return complex(np.sum(op.coeffs[ok] * signs[ok]))


def syndromes(p: PauliSum, gs: GroundStateSpec) -> np.ndarray:
    """Packed anticommutation pattern of each row against the stabilizer generators."""
    st = gs.stabilizers
    bits = np.empty((p.nterms, st.nterms), dtype=np.uint8)
    for j in range(st.nterms):
        bits[:, j] = _symplectic_parity(p.x, p.z, st.x[j], st.z[j])
    return pack_bits(bits)


def _generator_syndromes(S: SWGenerator, gs: GroundStateSpec, m: int) -> np.ndarray:
    cache = S.__dict__.setdefault("_syndrome_cache", {})
    key = (id(gs), m)
    if key not in cache:
        cache[key] = (gs, syndromes(S.full(m), gs))
    return cache[key][1]


def _matching_pairs(ka: np.ndarray, kb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All index pairs ``(i, j)`` with ``ka[i] == kb[j]`` (rows of packed words)."""
    if ka.shape[0] == 0 or kb.shape[0] == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    both = np.concatenate([ka, kb])
    _, inv = np.unique(both, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    ga, gb = inv[: ka.shape[0]], inv[ka.shape[0] :]
    ngroups = int(inv.max()) + 1
    order_b = np.argsort(gb, kind="stable")
    cnt_b = np.bincount(gb, minlength=ngroups)
    start_b = np.concatenate([[0], np.cumsum(cnt_b)[:-1]])
    reps = cnt_b[ga]
    ia = np.repeat(np.arange(ka.shape[0]), reps)
    offs = np.arange(ia.size) - np.repeat(np.cumsum(reps) - reps, reps)
    ib = order_b[start_b[ga[ia]] + offs]
    return ia, ib


def pair_ground_value(
    a: PauliSum,
    b: PauliSum,
    gs: GroundStateSpec,
    commutator: bool,
    synd_a: np.ndarray | None = None,
    synd_b: np.ndarray | None = None,
    chunk: int = 1 << 20,
) -> complex:
    """``<psi|[a, b]|psi>`` (or ``<psi|a b|psi>``) without forming the full product.

    Only row pairs with equal syndromes have a product inside the stabilizer
    group, so they are the only ones contributing.
    """
    if a.nterms == 0 or b.nterms == 0:
        return 0j
    synd_a = syndromes(a, gs) if synd_a is None else synd_a
    synd_b = syndromes(b, gs) if synd_b is None else synd_b
    ia, ib = _matching_pairs(synd_a, synd_b)
    total = 0j
    for lo in range(0, ia.size, chunk):
        ja, jb = ia[lo : lo + chunk], ib[lo : lo + chunk]
        x1, z1, x2, z2 = a.x[ja], a.z[ja], b.x[jb], b.z[jb]
        if commutator:
            keep = _symplectic_parity(x1, z1, x2, z2)
            ja, jb, x1, z1, x2, z2 = ja[keep], jb[keep], x1[keep], z1[keep], x2[keep], z2[keep]
            factor = 2.0
        else:
            factor = 1.0
        if ja.size == 0:
            continue
        coeffs = factor * a.coeffs[ja] * b.coeffs[jb] * _PHASES[_phase_exponent(x1, z1, x2, z2)]
        prod = PauliSum(a.nqubits, x1 ^ x2, z1 ^ z2, coeffs)
        total += ground_value(pauli.canonicalize(prod), gs)
    return total


def order_expectations(O: PauliSum, S: SWGenerator, gs: GroundStateSpec, M: int) -> list[complex]:
    """``<0|O^(m)|0>`` for ``m = 0..M``; the outermost commutator is evaluated by syndrome matching."""
    if M > S.M:
        raise ValueError(f"generator holds {S.M} orders, expansion needs {M}")
    nested = _nested_cache(O, S)
    vals = [ground_value(nested(()), gs)]
    inner_synd: dict[tuple[int, ...], np.ndarray] = {}
    for m in range(1, M + 1):
        acc = 0j
        for comp in compositions(m, 1):
            head, last = comp[:-1], comp[-1]
            inner = nested(head)
            if head not in inner_synd:
                inner_synd[head] = syndromes(inner, gs)
            v = pair_ground_value(
                inner, S.full(last), gs, True, inner_synd[head], _generator_syndromes(S, gs, last)
            )
            acc += v / math.factorial(len(comp))
        vals.append(acc)
    return vals


def expectation(
    O: PauliSum, S: SWGenerator, gs: GroundStateSpec, M: int, name: str = "O", params: dict | None = None
) -> ExpectationReport:
    if not pauli.is_hermitian(O):
        warnings.warn(f"observable {name} is not Hermitian; returning complex values", stacklevel=2)
    vals = order_expectations(O, S, gs, M)
    return ExpectationReport(name, vals, params=dict(params or {}))


def connected_correlation_orders(
    O1: PauliSum, O2: PauliSum, S: SWGenerator, gs: GroundStateSpec, M: int
) -> list[complex]:
    """Per-order connected part with both products truncated by total order."""
    e1 = conjugate_expand(O1, S, M)
    e2 = conjugate_expand(O2, S, M)
    s1 = [syndromes(o, gs) for o in e1]
    s2 = [syndromes(o, gs) for o in e2]
    g1 = [ground_value(o, gs) for o in e1]
    g2 = [ground_value(o, gs) for o in e2]
    out = []
    for m in range(M + 1):
        joint = sum(pair_ground_value(e1[a], e2[m - a], gs, False, s1[a], s2[m - a]) for a in range(m + 1))
        disc = sum(g1[a] * g2[m - a] for a in range(m + 1))
        out.append(complex(joint - disc))
    return out


def connected_correlation(O1: PauliSum, O2: PauliSum, S: SWGenerator, gs: GroundStateSpec, M: int) -> float:
    """``<O1 O2> - <O1><O2>`` through total order ``M``."""
    return float(np.real(sum(connected_correlation_orders(O1, O2, S, gs, M))))


def correlation_length(logvals) -> float:
    """``1 / (log|C(d)| - log|C(d+1)|)`` from the pair of log-magnitudes."""
    a, b = (float(v) for v in logvals)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("log-magnitudes must be finite (magnitudes must be positive)")
    diff = a - b
    if diff == 0:
        raise ValueError("equal magnitudes give an infinite correlation length")
    return 1.0 / diff


def correlation_length_from_values(c_d: float, c_d1: float) -> float:
    if c_d == 0 or c_d1 == 0:
        raise ValueError("correlator magnitude must be positive")
    return correlation_length((math.log(abs(c_d)), math.log(abs(c_d1))))


def perimeter_fit(circumference, logvals, nfit: int = 2) -> tuple[float, np.ndarray, float]:
    """Fit ``log<loop> = -alpha * L`` through the origin on the ``nfit`` smallest loops.

    Returns ``(alpha, residuals, last_residual)`` where residuals are
    ``log<loop> + alpha L`` for every loop and ``last_residual`` is the one of
    the largest loop.
    """
    c = np.asarray(circumference, dtype=float)
    y = np.asarray(logvals, dtype=float)
    order = np.argsort(c, kind="stable")
    c, y = c[order], y[order]
    cf, yf = c[:nfit], y[:nfit]
    alpha = -float(cf @ yf) / float(cf @ cf)
    res = y + alpha * c
    out = np.empty_like(res)
    out[order] = res
    return alpha, out, float(res[-1])


def loop_deviation(circumference, values, nfit: int = 2) -> float:
    """Signed residual of the largest loop; ``-inf`` when some ``<loop>`` is not positive."""
    v = np.asarray(values, dtype=float)
    if np.any(v <= 0):
        return -math.inf
    return perimeter_fit(circumference, np.log(v), nfit)[2]


def deviation_onset(couplings, residuals, threshold: float = 0.5) -> float | None:
    """Smallest ``|coupling|`` whose largest-loop residual exceeds ``threshold`` in magnitude."""
    pairs = sorted(zip(couplings, residuals), key=lambda t: abs(t[0]))
    for c, r in pairs:
        if not math.isfinite(r) or abs(r) > threshold:
            return float(c)
    return None
