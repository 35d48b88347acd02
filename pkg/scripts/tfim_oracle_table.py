"""Perturbative TFIM magnetization per order next to exact diagonalization.

usage: python3 scripts/tfim_oracle_table.py [N] [h ...]

The oracle picks the symmetry-broken state with a weak longitudinal field.
Once the finite-ring tunneling splitting (roughly h^N) exceeds that field the
exact state is no longer polarized and the error column stops shrinking with
M (visible from h around 0.3 at N=10).
"""
import sys

import numpy as np

from stabsw import pauli
from stabsw.models import build_tfim_chain
from stabsw.observables import order_expectations
from stabsw.oracle import exact_expectation, pinning_field, sector_ground_state, to_dense
from stabsw.sw import build_generator

M = 6


def row(N: int, h: float) -> str:
    m = build_tfim_chain(N, h)
    g = build_generator(m.H0, m.H1, M, group=m.group)
    vals = np.real(np.cumsum(order_expectations(m.observable("Z"), g, m.gs, M)))
    _, psi = sector_ground_state(to_dense(pauli.concat([m.H0.terms, m.H1, pinning_field(N)])))
    exact = float(np.real(exact_expectation(m.observable("Z"), psi)))
    errs = " ".join(f"{abs(v - exact):9.2e}" for v in vals[2::2])
    return f"{h:5.2f} {exact:.10f} {errs}"


if __name__ == "__main__":
    N = int(sys.argv[1]) if len(sys.argv) > 1 else 12
    hs = [float(x) for x in sys.argv[2:]] or [0.1, 0.2, 0.3, 0.4]
    print(f"N={N}; columns: h, exact <Z>, |error| at M=2,4,6")
    for h in hs:
        print(row(N, h))
