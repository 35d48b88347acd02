"""Lattice models: Ising chain, toric codes on the square and kagome lattices."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import pauli
from .pauli import PauliSum
from .stabilizer import (
    GroundStateSpec,
    StabilizerHamiltonian,
    build_stabilizer_hamiltonian,
    ground_state_from_hamiltonian,
)
from .translation import TranslationGroup, chain_group

log = logging.getLogger(__name__)

__all__ = [
    "LatticeModel",
    "build_tfim_chain",
    "build_toric_square",
    "build_toric_bilayer",
    "build_kagome_tc",
    "loop_observable",
    "build_model",
    "MODEL_BUILDERS",
]

TFIM_STATES = ("all_up", "all_down", "ghz", "all_right")
KAGOME_PERTURBATIONS = ("xx_ising", "zz_ising", "heisenberg")
KAGOME_FRAMES = ("x_loops", "z_loops")


@dataclass(eq=False)
class LatticeModel:
    name: str
    geometry: str
    extents: tuple[int, ...]
    H0: StabilizerHamiltonian
    H1: PauliSum
    gs: GroundStateSpec
    observables: dict[str, PauliSum] = field(default_factory=dict)
    circumference: dict[str, int] = field(default_factory=dict)
    group: TranslationGroup | None = None
    coupling: float = 0.0
    meta: dict = field(default_factory=dict)
    # rebuilds the same model at another coupling (used for grid runs)
    rebuild: Callable[[float], "LatticeModel"] | None = field(default=None, repr=False)

    @property
    def nqubits(self) -> int:
        return self.H0.nqubits

    def observable(self, name: str) -> PauliSum:
        try:
            return self.observables[name]
        except KeyError:
            raise KeyError(f"model {self.name} has no observable {name!r}; known: {sorted(self.observables)}") from None


def _single(n: int, ops: dict[int, str], coeff: float = 1.0) -> PauliSum:
    return PauliSum.from_sparse(n, [ops], [coeff])


def _product_string(n: int, sites: Iterable[int], letter: str) -> dict[int, str]:
    out: dict[int, str] = {}
    for q in sites:
        if q in out:
            del out[q]  # P^2 = I for a repeated site
        else:
            out[q] = letter
    return out


# --- transverse-field Ising chain -----------------------------------------


def build_tfim_chain(N: int, h: float, state: str = "all_up") -> LatticeModel:
    """Periodic Ising chain ``-sum Z Z - h sum X``.

    ``all_up``/``all_down``/``ghz`` use the ferromagnetic frame with ``h``
    as perturbation.  ``all_right`` uses the paramagnetic frame
    ``H0 = -sum X`` and ``H1 = -(1/h) sum Z Z`` (the Hamiltonian divided by
    ``h``, which leaves the ground state unchanged).
    """
    if N < 3:
        raise ValueError("Ising ring needs N >= 3")
    if state not in TFIM_STATES:
        raise ValueError(f"unknown TFIM state {state!r}; choose from {TFIM_STATES}")
    bonds = [{j: "Z", (j + 1) % N: "Z"} for j in range(N)]
    fields = [{j: "X"} for j in range(N)]
    if state == "all_right":
        if h == 0:
            raise ValueError("paramagnetic frame needs h != 0")
        H0 = build_stabilizer_hamiltonian(PauliSum.from_sparse(N, fields, -np.ones(N)))
        H1 = PauliSum.from_sparse(N, bonds, -np.ones(N) / h)
        gs = ground_state_from_hamiltonian(H0)
    else:
        H0 = build_stabilizer_hamiltonian(PauliSum.from_sparse(N, bonds, -np.ones(N)))
        H1 = pauli.canonicalize(PauliSum.from_sparse(N, fields, -h * np.ones(N)))
        if state == "ghz":
            extra, sign = _single(N, {q: "X" for q in range(N)}), 1
        else:
            extra, sign = _single(N, {N - 1: "Z"}), 1 if state == "all_up" else -1
        gs = ground_state_from_hamiltonian(H0, extra, [sign])
    obs = {"Z": _single(N, {0: "Z"}), "X": _single(N, {0: "X"})}
    for d in range(1, N // 2 + 1):
        obs[f"ZZ_{d}"] = _single(N, {0: "Z", d: "Z"})
        obs[f"YY_{d}"] = _single(N, {0: "Y", d: "Y"})
        obs[f"XX_{d}"] = _single(N, {0: "X", d: "X"})
    return LatticeModel(
        name="tfim",
        geometry="chain",
        extents=(N,),
        H0=H0,
        H1=H1,
        gs=gs,
        observables=obs,
        group=chain_group(N),
        coupling=h,
        meta={"state": state, "boundary": "periodic"},
        rebuild=lambda c: build_tfim_chain(N, c, state),
    )


# --- square-lattice toric code --------------------------------------------


class SquareLattice:
    """Edges of an ``Lx x Ly`` torus: index ``(y Lx + x) 2 + d`` with d=0 horizontal, d=1 vertical."""

    def __init__(self, Lx: int, Ly: int, offset: int = 0):
        self.Lx, self.Ly, self.offset = Lx, Ly, offset

    @property
    def nedges(self) -> int:
        return 2 * self.Lx * self.Ly

    def edge(self, x: int, y: int, d: int) -> int:
        return self.offset + ((y % self.Ly) * self.Lx + (x % self.Lx)) * 2 + d

    def star(self, x: int, y: int) -> list[int]:
        return [self.edge(x, y, 0), self.edge(x - 1, y, 0), self.edge(x, y, 1), self.edge(x, y - 1, 1)]

    def plaquette(self, x: int, y: int) -> list[int]:
        return [self.edge(x, y, 0), self.edge(x, y + 1, 0), self.edge(x, y, 1), self.edge(x + 1, y, 1)]

    def cells(self):
        for y in range(self.Ly):
            for x in range(self.Lx):
                yield x, y

    def z_loops(self) -> list[list[int]]:
        return [[self.edge(x, 0, 1) for x in range(self.Lx)], [self.edge(0, y, 0) for y in range(self.Ly)]]

    def translations(self, nqubits: int) -> tuple[list[int], list[int]]:
        tx = list(range(nqubits))
        ty = list(range(nqubits))
        for x, y in self.cells():
            for d in (0, 1):
                tx[self.edge(x, y, d)] = self.edge(x + 1, y, d)
                ty[self.edge(x, y, d)] = self.edge(x, y + 1, d)
        return tx, ty


def _check_extents(Lx: int, Ly: int) -> None:
    if Lx < 2 or Ly < 2:
        raise ValueError("lattice extents must be >= 2 in both directions")


def _toric_terms(lat: SquareLattice, n: int) -> list[tuple[dict[int, str], float]]:
    terms = []
    for x, y in lat.cells():
        terms.append(({q: "Z" for q in lat.star(x, y)}, -1.0))
    for x, y in lat.cells():
        terms.append(({q: "X" for q in lat.plaquette(x, y)}, -1.0))
    return terms


def _psum(n: int, terms) -> PauliSum:
    if not terms:
        return PauliSum.zero(n)
    return pauli.canonicalize(PauliSum.from_sparse(n, [t for t, _ in terms], [c for _, c in terms]))


def _square_loops(lat: SquareLattice, n: int, kmax: int, prefix: str, obs: dict, circ: dict) -> None:
    for k in range(1, kmax + 1):
        sites = []
        for y in range(k):
            for x in range(k):
                sites += lat.plaquette(x, y)
        s = _product_string(n, sites, "X")
        name = f"{prefix}_{k}"
        obs[name] = _single(n, s)
        circ[name] = len(s)


def _max_loop(Lx: int, Ly: int, cap: int = 5) -> int:
    return max(1, min(cap, min(Lx, Ly) - 1))


def build_toric_square(Lx: int, Ly: int, h_zeeman: float) -> LatticeModel:
    """Toric code ``-sum A_v - sum B_p`` with Zeeman field ``-h sum Z``."""
    _check_extents(Lx, Ly)
    lat = SquareLattice(Lx, Ly)
    n = lat.nedges
    H0 = build_stabilizer_hamiltonian(_psum(n, _toric_terms(lat, n)))
    H1 = _psum(n, [({q: "Z"}, -h_zeeman) for q in range(n)] if h_zeeman != 0 else [])
    loops = PauliSum.from_sparse(n, [{q: "Z" for q in l} for l in lat.z_loops()])
    gs = ground_state_from_hamiltonian(H0, loops, [1, 1])
    obs: dict[str, PauliSum] = {}
    circ: dict[str, int] = {}
    _square_loops(lat, n, _max_loop(Lx, Ly), "X_loop", obs, circ)
    obs["B_p"] = _single(n, {q: "X" for q in lat.plaquette(0, 0)})
    obs["A_v"] = _single(n, {q: "Z" for q in lat.star(0, 0)})
    obs["Z"] = _single(n, {lat.edge(0, 0, 0): "Z"})
    for d in range(0, Lx // 2 + 1):
        obs[f"B_p@{d}"] = _single(n, {q: "X" for q in lat.plaquette(d, 0)})
    for d in range(1, Lx // 2 + 1):
        obs[f"BB_{d}"] = _single(n, _product_string(n, lat.plaquette(0, 0) + lat.plaquette(d, 0), "X"))
    tx, ty = lat.translations(n)
    return LatticeModel(
        name="toric",
        geometry="square",
        extents=(Lx, Ly),
        H0=H0,
        H1=H1,
        gs=gs,
        observables=obs,
        circumference=circ,
        group=TranslationGroup(n, (tuple(tx), tuple(ty)), (Lx, Ly)),
        coupling=h_zeeman,
        meta={"boundary": "periodic", "frame": "z_loops", "loop_shape": "k x k plaquette square"},
        rebuild=lambda c: build_toric_square(Lx, Ly, c),
    )


def build_toric_bilayer(Lx: int, Ly: int, J: float) -> LatticeModel:
    """Two toric-code layers coupled by ``-J sum Z^(1) Z^(2)`` on matched edges."""
    _check_extents(Lx, Ly)
    l1 = SquareLattice(Lx, Ly)
    l2 = SquareLattice(Lx, Ly, offset=l1.nedges)
    n = 2 * l1.nedges
    H0 = build_stabilizer_hamiltonian(_psum(n, _toric_terms(l1, n) + _toric_terms(l2, n)))
    H1 = _psum(n, [({q: "Z", q + l1.nedges: "Z"}, -J) for q in range(l1.nedges)] if J != 0 else [])
    loops = PauliSum.from_sparse(n, [{q: "Z" for q in l} for l in l1.z_loops() + l2.z_loops()])
    gs = ground_state_from_hamiltonian(H0, loops, [1] * 4)
    obs: dict[str, PauliSum] = {}
    circ: dict[str, int] = {}
    km = _max_loop(Lx, Ly)
    _square_loops(l1, n, km, "X_loop", obs, circ)
    _square_loops(l2, n, km, "X_loop_L2", obs, circ)
    obs["B_p"] = _single(n, {q: "X" for q in l1.plaquette(0, 0)})
    t1x, t1y = l1.translations(n)
    t2x, t2y = l2.translations(n)
    tx = t1x[: l1.nedges] + t2x[l1.nedges :]
    ty = t1y[: l1.nedges] + t2y[l1.nedges :]
    return LatticeModel(
        name="bilayer",
        geometry="square_bilayer",
        extents=(Lx, Ly),
        H0=H0,
        H1=H1,
        gs=gs,
        observables=obs,
        circumference=circ,
        group=TranslationGroup(n, (tuple(tx), tuple(ty)), (Lx, Ly)),
        coupling=J,
        meta={"boundary": "periodic", "frame": "z_loops", "loop_shape": "k x k plaquette square, layer 1"},
        rebuild=lambda c: build_toric_bilayer(Lx, Ly, c),
    )


# --- kagome toric code ----------------------------------------------------


class KagomeLattice:
    """Sites ``(y Lx + x) 3 + s`` with sublattices s = A(0), B(1), C(2).

    A sits at the cell origin, B at half of the first lattice vector and C
    at half of the second.
    """

    A, B, C = 0, 1, 2

    def __init__(self, Lx: int, Ly: int):
        self.Lx, self.Ly = Lx, Ly

    @property
    def nsites(self) -> int:
        return 3 * self.Lx * self.Ly

    def site(self, x: int, y: int, s: int) -> int:
        return ((y % self.Ly) * self.Lx + (x % self.Lx)) * 3 + s

    def cells(self):
        for y in range(self.Ly):
            for x in range(self.Lx):
                yield x, y

    def up(self, x, y):
        return [self.site(x, y, self.A), self.site(x, y, self.B), self.site(x, y, self.C)]

    def down(self, x, y):
        return [self.site(x, y, self.A), self.site(x - 1, y, self.B), self.site(x, y - 1, self.C)]

    def hexagon(self, x, y):
        s = self.site
        return [s(x, y, self.B), s(x + 1, y, self.A), s(x + 1, y, self.C), s(x, y + 1, self.B), s(x, y + 1, self.A), s(x, y, self.C)]

    def bonds(self) -> list[tuple[int, int]]:
        out = []
        for x, y in self.cells():
            for tri in (self.up(x, y), self.down(x, y)):
                out += [(tri[0], tri[1]), (tri[1], tri[2]), (tri[0], tri[2])]
        return out

    def z_loops(self) -> list[list[int]]:
        return [
            [q for x in range(self.Lx) for q in (self.site(x, 0, self.A), self.site(x, 0, self.B))],
            [q for y in range(self.Ly) for q in (self.site(0, y, self.A), self.site(0, y, self.C))],
        ]

    def x_loops(self) -> list[list[int]]:
        return [[self.site(x, 0, self.C) for x in range(self.Lx)], [self.site(0, y, self.B) for y in range(self.Ly)]]

    def translations(self) -> tuple[list[int], list[int]]:
        n = self.nsites
        tx, ty = list(range(n)), list(range(n))
        for x, y in self.cells():
            for s in range(3):
                tx[self.site(x, y, s)] = self.site(x + 1, y, s)
                ty[self.site(x, y, s)] = self.site(x, y + 1, s)
        return tx, ty


def _kagome_loops(lat: KagomeLattice, n: int, regions, obs: dict, circ: dict) -> None:
    for tag, (a, b) in regions:
        hexes, tris = [], []
        for y in range(b):
            for x in range(a):
                hexes += lat.hexagon(x, y)
                tris += lat.up(x, y) + lat.down(x, y)
        zs = _product_string(n, hexes, "Z")
        xs = _product_string(n, tris, "X")
        obs[f"Z_loop_{tag}"] = _single(n, zs)
        circ[f"Z_loop_{tag}"] = len(zs)
        obs[f"X_loop_{tag}"] = _single(n, xs)
        circ[f"X_loop_{tag}"] = len(xs)


def build_kagome_tc(
    Lx: int, Ly: int, perturbation: str = "heisenberg", J: float = 0.0, frame: str = "x_loops"
) -> LatticeModel:
    """Kagome toric code ``-sum A_t - sum B_h`` (A_t = prod X on triangles, B_h = prod Z on hexagons).

    Perturbations: ``xx_ising`` ``J sum X X``, ``zz_ising`` ``J sum Z Z``,
    ``heisenberg`` ``J sum (XX + YY + ZZ)`` over nearest-neighbour bonds.
    """
    _check_extents(Lx, Ly)
    if perturbation not in KAGOME_PERTURBATIONS:
        raise ValueError(f"unknown kagome perturbation {perturbation!r}; choose from {KAGOME_PERTURBATIONS}")
    if frame not in KAGOME_FRAMES:
        raise ValueError(f"unknown kagome frame {frame!r}; choose from {KAGOME_FRAMES}")
    if (perturbation, frame) in (("xx_ising", "z_loops"), ("zz_ising", "x_loops")):
        warnings.warn(
            f"{perturbation} does not conserve the global loops of the {frame} frame", stacklevel=2
        )
    lat = KagomeLattice(Lx, Ly)
    n = lat.nsites
    terms = []
    for x, y in lat.cells():
        terms.append(({q: "X" for q in lat.up(x, y)}, -1.0))
        terms.append(({q: "X" for q in lat.down(x, y)}, -1.0))
    for x, y in lat.cells():
        terms.append(({q: "Z" for q in lat.hexagon(x, y)}, -1.0))
    H0 = build_stabilizer_hamiltonian(_psum(n, terms))
    letters = {"xx_ising": "X", "zz_ising": "Z", "heisenberg": "XYZ"}[perturbation]
    h1 = [({i: a, j: a}, J) for i, j in lat.bonds() for a in letters] if J != 0 else []
    H1 = _psum(n, h1)
    if frame == "x_loops":
        loops = PauliSum.from_sparse(n, [{q: "X" for q in l} for l in lat.x_loops()])
    else:
        loops = PauliSum.from_sparse(n, [{q: "Z" for q in l} for l in lat.z_loops()])
    gs = ground_state_from_hamiltonian(H0, loops, [1, 1])
    obs: dict[str, PauliSum] = {}
    circ: dict[str, int] = {}
    km = _max_loop(Lx, Ly)
    _kagome_loops(lat, n, [(str(k), (k, k)) for k in range(1, km + 1)], obs, circ)
    _kagome_loops(lat, n, [("1x2", (2, 1))], obs, circ)
    obs["A_t"] = _single(n, {q: "X" for q in lat.up(0, 0)})
    obs["B_h"] = _single(n, {q: "Z" for q in lat.hexagon(0, 0)})
    tx, ty = lat.translations()
    return LatticeModel(
        name="kagome",
        geometry="kagome",
        extents=(Lx, Ly),
        H0=H0,
        H1=H1,
        gs=gs,
        observables=obs,
        circumference=circ,
        group=TranslationGroup(n, (tuple(tx), tuple(ty)), (Lx, Ly)),
        coupling=J,
        meta={
            "boundary": "periodic",
            "frame": frame,
            "perturbation": perturbation,
            "loop_shape": "k x k rhombus of cells (hexagons for Z_loop, up+down triangles for X_loop); 1x2 = two cells",
        },
        rebuild=lambda c: build_kagome_tc(Lx, Ly, perturbation, c, frame),
    )


def loop_observable(model: LatticeModel, kind: str, k: int | str) -> tuple[PauliSum, int]:
    """Tiled loop operator and its circumference (qubit count of the boundary string)."""
    if kind not in ("x_loop", "z_loop"):
        raise ValueError("kind must be x_loop or z_loop")
    name = f"{'X' if kind == 'x_loop' else 'Z'}_loop_{k}"
    if name not in model.observables:
        raise ValueError(f"loop {name} does not fit the {model.geometry} lattice {model.extents}")
    return model.observables[name], model.circumference[name]


def loop_names(model: LatticeModel, kind: str = "x_loop") -> list[str]:
    """Square ``k x k`` loop names in increasing size."""
    prefix = "X_loop_" if kind == "x_loop" else "Z_loop_"
    names = [n for n in model.observables if n.startswith(prefix) and n[len(prefix) :].isdigit()]
    return sorted(names, key=lambda s: int(s[len(prefix) :]))


def build_model(name: str, extents, coupling: float, **kw) -> LatticeModel:
    ext = tuple(int(e) for e in extents)
    if name == "tfim":
        return build_tfim_chain(ext[0], coupling, kw.get("state", "all_up"))
    if len(ext) != 2:
        raise ValueError(f"model {name} needs two extents")
    if name == "toric":
        return build_toric_square(ext[0], ext[1], coupling)
    if name == "bilayer":
        return build_toric_bilayer(ext[0], ext[1], coupling)
    if name == "kagome":
        return build_kagome_tc(ext[0], ext[1], kw.get("perturbation", "heisenberg"), coupling, kw.get("frame", "x_loops"))
    raise ValueError(f"unknown model {name!r}")


MODEL_BUILDERS = {
    "tfim": build_tfim_chain,
    "toric": build_toric_square,
    "bilayer": build_toric_bilayer,
    "kagome": build_kagome_tc,
}
