"""Invariant checks behind ``stabsw validate``.

Each check returns a dict with ``name``, ``passed``, ``measured`` and
``tolerance``.  All randomness flows from one seed, so reports are
reproducible.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import pauli
from .models import build_tfim_chain
from .observables import order_expectations
from .oracle import (
    exact_expectation,
    ground_space_projector,
    offdiagonal_residual,
    pinning_field,
    sector_ground_state,
    to_dense,
)
from .pauli import PauliSum
from .stabilizer import _symplectic_product, complete_ground_state
from .sw import build_generator

__all__ = ["run_checks", "check_phase_identities", "random_stabilizer_set"]


def _check(name: str, measured: float, tol: float, passed: bool | None = None) -> dict:
    ok = bool(measured <= tol) if passed is None else bool(passed)
    return {"name": name, "passed": ok, "measured": float(measured), "tolerance": float(tol)}


def _random_labels(rng: np.random.Generator, k: int, n: int) -> list[str]:
    return ["".join(rng.choice(list("IXYZ"), n)) for _ in range(k)]


def check_phase_identities(seed: int = 0, trials: int = 40, phase_fn: Callable | None = None) -> dict:
    """Pauli products and commutators against dense matrices.

    ``phase_fn`` replaces the product phase exponent (negative-control hook).
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    saved = pauli._phase_exponent
    try:
        if phase_fn is not None:
            pauli._phase_exponent = phase_fn
        for _ in range(trials):
            n = int(rng.integers(1, 7))
            a = PauliSum.from_labels(_random_labels(rng, 4, n), rng.normal(size=4) + 1j * rng.normal(size=4))
            b = PauliSum.from_labels(_random_labels(rng, 4, n), rng.normal(size=4) + 1j * rng.normal(size=4))
            da, db = to_dense(a).toarray(), to_dense(b).toarray()
            worst = max(worst, np.abs(to_dense(pauli.multiply(a, b)).toarray() - da @ db).max())
            worst = max(worst, np.abs(to_dense(pauli.commutator(a, b)).toarray() - (da @ db - db @ da)).max())
    finally:
        pauli._phase_exponent = saved
    return _check("phase identities (dense oracle, N<=6)", worst, 1e-12)


def random_stabilizer_set(rng: np.random.Generator, n: int) -> PauliSum:
    """Random full-rank commuting set: a random Clifford-like scramble of the Z basis.

    Built by applying random symplectic transvections to ``Z_0..Z_{n-1}``.
    """
    rows = [(0, 1 << q) for q in range(n)]  # (x, z) bit masks
    for _ in range(4 * n):
        hx = int(rng.integers(0, 1 << n))
        hz = int(rng.integers(0, 1 << n))
        if hx == 0 and hz == 0:
            continue
        new = []
        for x, z in rows:
            # transvection v -> v + <v, h> h
            if (bin(x & hz).count("1") + bin(z & hx).count("1")) % 2:
                x, z = x ^ hx, z ^ hz
            new.append((x, z))
        rows = new
    bits_x = np.array([[(x >> q) & 1 for q in range(n)] for x, _ in rows], dtype=np.uint8)
    bits_z = np.array([[(z >> q) & 1 for q in range(n)] for _, z in rows], dtype=np.uint8)
    return PauliSum.from_bits(bits_x, bits_z, np.ones(n))


def check_destabilizers(seed: int = 0, trials: int = 200) -> dict:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(trials):
        n = int(rng.integers(1, 11))
        gens = random_stabilizer_set(rng, n)
        gs = complete_ground_state(gens, rng.choice([-1, 1], n))
        if not _symplectic_product(gs.destab, gs.stab).is_identity():
            bad += 1
    return _check(f"destabilizer identity ({trials} random sets, N<=10)", bad, 0)


def _tfim_full(N: int, h: float) -> PauliSum:
    m = build_tfim_chain(N, h, "all_up")
    return pauli.canonicalize(pauli.concat([m.H0.terms, m.H1]))


def residual_slope(M: int, N: int = 8, hs=(0.05, 0.1, 0.2)) -> float:
    """Log-log slope of the dense off-diagonal residual versus ``h``."""
    res = []
    for h in hs:
        m = build_tfim_chain(N, h, "all_up")
        g = build_generator(m.H0, m.H1, M)
        S = pauli.canonicalize(pauli.concat([g.full(k) for k in range(1, M + 1)]))
        P0 = ground_space_projector(m.H0)
        res.append(offdiagonal_residual(_tfim_full(N, h), S, P0))
    return float(np.polyfit(np.log(hs), np.log(res), 1)[0])


def check_residual_scaling() -> list[dict]:
    out = []
    for M in (1, 2, 3):
        s = residual_slope(M)
        out.append(_check(f"SW residual slope M={M}", abs(s - (M + 1)), 0.3))
    return out


def _tfim_values(N: int, h: float, M: int, names, group: bool, tie_break: str) -> np.ndarray:
    m = build_tfim_chain(N, h, "all_up")
    g = build_generator(m.H0, m.H1, M, group=m.group if group else None, tie_break=tie_break)
    return np.array([sum(order_expectations(m.observable(n), g, m.gs, M)) for n in names])


def check_tie_break(N: int = 10, M: int = 4, h: float = 0.3) -> dict:
    names = ["Z", "ZZ_1", "YY_1", "YY_2", "YY_3"]
    a = _tfim_values(N, h, M, names, False, "first")
    b = _tfim_values(N, h, M, names, False, "last")
    return _check("tie-break invariance (TFIM)", float(np.abs(a - b).max()), 1e-12)


def check_ti_equivalence(N: int = 12, M: int = 4, h: float = 0.3) -> dict:
    names = ["Z", "ZZ_1", "YY_1", "YY_2", "YY_3"]
    a = _tfim_values(N, h, M, names, True, "first")
    b = _tfim_values(N, h, M, names, False, "first")
    return _check("TI vs explicit pipeline (TFIM N=12, M=4)", float(np.abs(a - b).max()), 1e-12)


def check_oracle(N: int = 10, h: float = 0.2, M: int = 6) -> dict:
    m = build_tfim_chain(N, h, "all_up")
    g = build_generator(m.H0, m.H1, M, group=m.group)
    pert = float(np.real(sum(order_expectations(m.observable("Z"), g, m.gs, M))))
    H = pauli.concat([_tfim_full(N, h), pinning_field(N)])
    _, psi = sector_ground_state(to_dense(H))
    exact = float(np.real(exact_expectation(m.observable("Z"), psi)))
    return _check(f"oracle <Z> TFIM N={N} h={h} M={M}", abs(pert - exact), 1e-4)


def run_checks(seed: int = 0, phase_fn: Callable | None = None) -> list[dict]:
    checks = [check_phase_identities(seed, phase_fn=phase_fn), check_destabilizers(seed)]
    checks += check_residual_scaling()
    checks += [check_tie_break(), check_ti_equivalence(), check_oracle()]
    return checks
