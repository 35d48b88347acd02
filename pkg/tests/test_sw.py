import numpy as np
import pytest
import scipy.linalg as sla

from stabsw import pauli
from stabsw.models import build_tfim_chain, build_toric_square
from stabsw.oracle import ground_space_projector
from stabsw.pauli import PauliSum
from stabsw.stabilizer import build_stabilizer_hamiltonian
from stabsw.sw import (
    TermCapExceeded,
    build_generator,
    compositions,
    compute_vm,
    solve_sm,
    transformed_orders,
)
from stabsw.translation import TISum

from conftest import dense


def ring(n, letters, sites_fn, coeff):
    return PauliSum.from_sparse(n, [dict(zip(sites_fn(j), letters)) for j in range(n)], coeff * np.ones(n))


def tfim_ops(n, h):
    """Explicit TFIM strings: S1, S2 and H2 rows of the analytic form, indexed by site j."""
    nb = lambda *qs: [q % n for q in qs]
    s1 = ring(n, "ZY", lambda j: nb(j - 1, j), -1j * h / 4)
    s2 = pauli.add(
        ring(n, "ZXY", lambda j: nb(j - 1, j, j + 1), -1j * 3 * h * h / 32),
        ring(n, "YXZ", lambda j: nb(j, j + 1, j + 2), -1j * h * h / 32),
    )
    v2 = pauli.concat(
        [
            ring(n, "ZZ", lambda j: nb(j, j + 1), -h * h / 4),
            ring(n, "YY", lambda j: nb(j, j + 1), 3 * h * h / 8),
            ring(n, "ZXXZ", lambda j: nb(j - 1, j, j + 1, j + 2), -h * h / 8),
        ]
    )
    h1 = pauli.add(ring(n, "X", lambda j: nb(j), -h / 2), ring(n, "ZXZ", lambda j: nb(j - 1, j, j + 1), h / 2))
    h2 = pauli.concat(
        [
            ring(n, "ZZ", lambda j: nb(j, j + 1), -h * h / 4),
            ring(n, "YY", lambda j: nb(j, j + 1), h * h / 8),
            ring(n, "ZXXZ", lambda j: nb(j - 1, j, j + 1, j + 2), h * h / 8),
        ]
    )
    return s1, s2, pauli.canonicalize(v2), h1, pauli.canonicalize(h2)


def test_compositions():
    assert compositions(1) == ((1,),)
    assert set(compositions(3)) == {(3,), (1, 2), (2, 1), (1, 1, 1)}
    assert set(compositions(3, 2)) == {(1, 2), (2, 1), (1, 1, 1)}
    assert len(compositions(6)) == 2**5


@pytest.mark.parametrize("N", [8, 12])
def test_tfim_analytic_orders(N):
    h = 0.3
    m = build_tfim_chain(N, h)
    g = build_generator(m.H0, m.H1, 2, group=m.group)
    s1, s2, v2, h1, h2 = tfim_ops(N, h)
    assert pauli.allclose(g.full(1), s1, atol=1e-14)
    assert pauli.allclose(g.full(2), s2, atol=1e-14)
    assert pauli.allclose(TISum(g.vm[0], m.group).full, m.H1, atol=1e-14)
    assert pauli.allclose(TISum(g.vm[1], m.group).full, v2, atol=1e-14)
    T = transformed_orders(m.H0, m.H1, g)
    assert pauli.allclose(T.full(1), h1, atol=1e-14)
    assert pauli.allclose(T.full(2), h2, atol=1e-14)


def test_v2_composition_form():
    m = build_tfim_chain(8, 0.25)
    g = build_generator(m.H0, m.H1, 1)
    s1 = g.full(1)
    expect = pauli.add(
        pauli.commutator(m.H1, s1),
        pauli.scale(0.5, pauli.commutator(pauli.commutator(m.H0.terms, s1), s1)),
    )
    assert pauli.allclose(compute_vm(m.H0, m.H1, g, 2), expect)


def test_single_qubit_solution():
    lam = 0.37
    H0 = build_stabilizer_hamiltonian(PauliSum.from_labels(["Z"], [-1.0]))
    S = solve_sm(PauliSum.from_labels(["X"], [lam]), H0)
    assert S.as_dict() == pytest.approx({"Y": 0.5j * lam})
    p0 = np.diag([1.0, 0.0])
    r = (np.eye(2) - p0) @ (lam * dense(PauliSum.from_labels(["X"])) + dense(pauli.commutator(H0.terms, S))) @ p0
    assert np.abs(r).max() < 1e-15


def test_block_diagonal_input_gives_empty_s():
    H0 = build_stabilizer_hamiltonian(PauliSum.from_labels(["Z"], [-1.0]))
    assert solve_sm(PauliSum.from_labels(["Z"], [0.5]), H0).nterms == 0


def test_zero_perturbation():
    m = build_tfim_chain(6, 0.0)
    g = build_generator(m.H0, m.H1, 4)
    assert all(g.full(k).nterms == 0 for k in range(1, 5))
    T = transformed_orders(m.H0, m.H1, g)
    assert all(T.full(k).nterms == 0 for k in range(1, 5))


def test_bad_order():
    m = build_tfim_chain(6, 0.1)
    with pytest.raises(ValueError):
        build_generator(m.H0, m.H1, 0)
    with pytest.raises(ValueError):
        solve_sm(m.H1, m.H0, tie_break="middle")


def test_term_cap():
    m = build_tfim_chain(8, 0.2)
    with pytest.raises(TermCapExceeded) as exc:
        build_generator(m.H0, m.H1, 4, term_cap=5)
    assert exc.value.nterms > 5


@pytest.mark.parametrize("group", [True, False])
def test_generator_invariants(group):
    m = build_tfim_chain(10, 0.2)
    g = build_generator(m.H0, m.H1, 5, group=m.group if group else None)
    parity = PauliSum.from_labels(["X" * 10])
    for k in range(1, 6):
        s = g.full(k)
        assert pauli.is_anti_hermitian(s)
        # each row is off-diagonal: it anticommutes with some H0 term
        assert pauli.anticommutes_with_any(s, m.H0.terms).all()
        # global Z2 symmetry survives every order
        assert pauli.commutator(s, parity).nterms == 0
        # strings grow by at most one site per order
        assert pauli.max_weight(s) <= k + 1


def test_homogeneity():
    a = build_tfim_chain(8, 0.1)
    b = build_tfim_chain(8, 0.2)
    ga = build_generator(a.H0, a.H1, 4, group=a.group)
    gb = build_generator(b.H0, b.H1, 4, group=b.group)
    for k in range(1, 5):
        assert pauli.allclose(pauli.scale(2.0**k, ga.full(k)), gb.full(k), atol=1e-14)


def test_toric_generator_rows_off_diagonal():
    m = build_toric_square(6, 6, 0.1)
    g = build_generator(m.H0, m.H1, 4, group=m.group)
    for k in range(1, 5):
        rep = g.order(k)
        assert rep.nterms > 0
        assert pauli.anticommutes_with_any(rep, m.H0.terms).all()


@pytest.mark.parametrize("model", ["tfim", "toric"])
def test_transformed_orders_do_not_leave_ground_space(model):
    """``|(1 - P0) H^(m) |0>|^2 = <H^(m)+ H^(m)> - |<H^(m)>|^2`` vanishes order by order."""
    from stabsw.observables import ground_value, pair_ground_value

    m = build_tfim_chain(12, 0.3) if model == "tfim" else build_toric_square(4, 4, 0.2)
    g = build_generator(m.H0, m.H1, 4, group=m.group)
    T = transformed_orders(m.H0, m.H1, g)
    for k in range(1, 5):
        hk = T.full(k)
        leak = pair_ground_value(hk.dagger(), hk, m.gs, False) - abs(ground_value(hk, m.gs)) ** 2
        assert abs(leak) < 1e-12
        # single rows may still leave the ground space; only their sum may not
        if k == 1:
            assert pauli.anticommutes_with_any(hk, m.H0.terms).any()


def _models_small():
    return [build_tfim_chain(6, 0.1), build_tfim_chain(8, 0.1), build_toric_square(2, 2, 0.1)]


@pytest.mark.parametrize("idx", [0, 1, 2])
def test_conjugation_agrees_with_dense(idx):
    """``e^{-S} H e^{S} - H0 - sum_m H^(m)`` is of order ``lam^(M+1)``."""
    M = 3
    base = _models_small()[idx]
    errs = []
    for lam in (0.1, 0.05):
        m = base.rebuild(lam)
        g = build_generator(m.H0, m.H1, M, group=m.group)
        T = transformed_orders(m.H0, m.H1, g)
        S = dense(pauli.concat([g.full(k) for k in range(1, M + 1)]))
        H = dense(pauli.concat([m.H0.terms, m.H1]))
        Ht = sla.expm(-S) @ H @ sla.expm(S)
        approx = dense(pauli.concat([m.H0.terms] + [T.full(k) for k in range(1, M + 1)]))
        errs.append(np.linalg.norm(Ht - approx, 2))
        # the truncated series itself is exactly block-diagonal
        P0 = ground_space_projector(m.H0)
        assert np.abs((np.eye(P0.shape[0]) - P0) @ approx @ P0).max() < 1e-12
    slope = np.log2(errs[0] / errs[1])
    assert M + 0.7 <= slope <= M + 1.3


def test_tie_break_changes_only_gauge():
    m = build_toric_square(3, 3, 0.15)
    a = build_generator(m.H0, m.H1, 3, group=m.group, tie_break="first")
    b = build_generator(m.H0, m.H1, 3, group=m.group, tie_break="last")
    Ta = transformed_orders(m.H0, m.H1, a)
    Tb = transformed_orders(m.H0, m.H1, b)
    # the ground-state energy series is choice independent
    from stabsw.observables import ground_value

    for k in range(1, 4):
        assert abs(ground_value(Ta.full(k), m.gs) - ground_value(Tb.full(k), m.gs)) < 1e-12
