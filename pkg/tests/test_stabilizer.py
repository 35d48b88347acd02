import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabsw import pauli
from stabsw.f2 import BitMatrix, RankDeficiencyError
from stabsw.models import build_tfim_chain, build_toric_square
from stabsw.oracle import exact_expectation, stabilizer_state
from stabsw.pauli import PauliSum
from stabsw.stabilizer import (
    GroundStateSpec,
    NotInStabilizerGroup,
    _symplectic_product,
    build_stabilizer_hamiltonian,
    complete_ground_state,
    compute_destabilizers,
    decompose_rows,
    excitation_energy,
    excitation_profile,
    ground_state_from_hamiltonian,
    psum_to_bitmatrix,
    stabilizer_decompose,
)
from stabsw.validation import random_stabilizer_set


def ring_bonds(n):
    return PauliSum.from_sparse(n, [{j: "Z", (j + 1) % n: "Z"} for j in range(n)], -np.ones(n))


class TestHamiltonian:
    def test_tfim_ring_rank(self):
        H0 = build_stabilizer_hamiltonian(ring_bonds(4))
        assert H0.terms.nterms == 4 and H0.rank == 3

    def test_toric_2x2_rank(self):
        m = build_toric_square(2, 2, 0.1)
        assert m.H0.terms.nterms == 8 and m.H0.rank == 6

    def test_noncommuting(self):
        with pytest.raises(ValueError, match="commute"):
            build_stabilizer_hamiltonian(PauliSum.from_labels(["X", "Z"], [-1, -1]))

    @pytest.mark.parametrize(
        "labels,coeffs",
        [(["ZI"], [1.0]), (["ZI"], [-1j]), (["II"], [-1.0])],
    )
    def test_rejects_bad_terms(self, labels, coeffs):
        with pytest.raises(ValueError):
            build_stabilizer_hamiltonian(PauliSum.from_labels(labels, coeffs))

    def test_excitation_energy_tfim(self):
        H0 = build_stabilizer_hamiltonian(ring_bonds(6))
        xs = PauliSum.from_sparse(6, [{j: "X"} for j in range(6)])
        mask, de = excitation_profile(xs, H0)
        assert (mask.sum(axis=1) == 2).all()
        np.testing.assert_array_equal(de, 4.0)

    def test_excitation_commuting(self):
        H0 = build_stabilizer_hamiltonian(ring_bonds(6))
        de, first, last = excitation_energy(PauliSum.from_labels(["ZZZZZZ"]), H0)
        assert de[0] == 0 and first[0] == -1 and last[0] == -1

    def test_toric_zeeman_flips_two_plaquettes(self):
        m = build_toric_square(3, 3, 0.1)
        mask, de = excitation_profile(m.H1, m.H0)
        assert (mask.sum(axis=1) == 2).all()
        np.testing.assert_array_equal(de, 4.0)


def chain_gs(n, sign=1, kind="Z"):
    H0 = build_stabilizer_hamiltonian(ring_bonds(n))
    extra = PauliSum.from_sparse(n, [{n - 1: "Z"}] if kind == "Z" else [{q: "X" for q in range(n)}])
    return H0, ground_state_from_hamiltonian(H0, extra, [sign])


class TestGroundState:
    @pytest.mark.parametrize("sign", [1, -1])
    def test_chain_magnetization(self, sign):
        n = 6
        _, gs = chain_gs(n, sign)
        for j in range(n):
            d = stabilizer_decompose(PauliSum.from_sparse(n, [{j: "Z"}]), gs)
            assert d.sign == sign

    def test_chain_decomposition_in_bond_basis(self):
        # generators Z_j Z_{j+1} (j < N-1) plus Z_{N-1}: Z_j is the product g_j ... g_{N-1}
        n = 5
        gens = PauliSum.from_sparse(n, [{j: "Z", j + 1: "Z"} for j in range(n - 1)] + [{n - 1: "Z"}])
        gs = complete_ground_state(gens)
        for j in range(n):
            d = stabilizer_decompose(PauliSum.from_sparse(n, [{j: "Z"}]), gs)
            assert d.exponents == tuple(int(i >= j) for i in range(n))
            assert d.sign == 1
        # the destabilizers X_0 ... X_j are one valid choice
        alt = BitMatrix.from_array(
            np.hstack([np.tril(np.ones((n, n), dtype=np.uint8)), np.zeros((n, n), dtype=np.uint8)])
        )
        assert _symplectic_product(alt, gs.stab).is_identity()

    def test_identity_decomposition(self):
        _, gs = chain_gs(4)
        d = stabilizer_decompose(PauliSum.identity(4), gs)
        assert d.exponents == (0, 0, 0, 0) and d.sign == 1

    def test_not_in_group(self):
        _, gs = chain_gs(4)
        with pytest.raises(NotInStabilizerGroup):
            stabilizer_decompose(PauliSum.from_labels(["XIII"]), gs)

    def test_ghz(self):
        n = 4
        _, gs = chain_gs(n, 1, "X")
        assert gs.stabilizers.labels()[-1] == "XXXX"
        assert gs.signs[-1] == 1
        ok, _, signs = decompose_rows(PauliSum.from_labels(["ZIII", "XXXX", "YYXX"]), gs)
        assert ok.tolist() == [False, True, True]
        assert signs.tolist() == [0, 1, -1]

    def test_single_qubit_destabilizer(self):
        gs = complete_ground_state(PauliSum.from_labels(["Z"]))
        assert gs.destabilizers.labels()[0] in ("X", "Y")

    def test_rank_deficient(self):
        with pytest.raises(RankDeficiencyError):
            complete_ground_state(PauliSum.from_labels(["ZZ", "ZZ"]))
        with pytest.raises(RankDeficiencyError):
            compute_destabilizers(psum_to_bitmatrix(PauliSum.from_labels(["ZI"])))

    def test_bad_sign(self):
        with pytest.raises(ValueError):
            complete_ground_state(PauliSum.from_labels(["Z"]), [2])

    def test_text_roundtrip(self):
        _, gs = chain_gs(5, -1)
        back = GroundStateSpec.from_text(gs.to_text())
        assert back.stabilizers.labels() == gs.stabilizers.labels()
        np.testing.assert_array_equal(back.signs, gs.signs)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_destabilizer_identity_random(n, seed):
    rng = np.random.default_rng(seed)
    gens = random_stabilizer_set(rng, n)
    gs = complete_ground_state(gens, rng.choice([-1, 1], n))
    assert _symplectic_product(gs.destab, gs.stab).is_identity()
    # each destabilizer anticommutes with exactly its own generator
    ac = pauli.commutation_matrix(gs.destabilizers, gs.stabilizers).entries
    np.testing.assert_array_equal(ac, np.eye(n, dtype=ac.dtype))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_signs_match_dense_state(n, seed):
    rng = np.random.default_rng(seed)
    gens = random_stabilizer_set(rng, n)
    gs = complete_ground_state(gens, rng.choice([-1, 1], n))
    psi = stabilizer_state(gs)
    labels = ["".join(t) for t in itertools.product("IXYZ", repeat=n)]
    p = PauliSum.from_labels(labels)
    _, _, signs = decompose_rows(p, gs)
    for k in range(p.nterms):
        v = exact_expectation(p.take(np.array([k])), psi)
        assert abs(v - signs[k]) < 1e-9


def test_model_ground_states_are_consistent():
    m = build_tfim_chain(6, 0.2, "all_down")
    psi = stabilizer_state(m.gs)
    assert abs(exact_expectation(m.observable("Z"), psi) + 1) < 1e-10
