"""protofield: one block-skew first-order operator on tensor-field grids,
and the classical linear systems of mathematical physics derived from it
by projection.

The package builds the operator [[0, -nabla*], [nabla, 0]] on the full
stack of tensor ranks over a flat grid, projects it onto subspaces to
obtain acoustics, heat conduction, elasticity, Maxwell, Dirac, transport,
thermo-elasticity, plate and beam models, verifies the structural
identities relating them numerically, and integrates the resulting
systems in time with energy and causality diagnostics.
"""

from . import catalog, cli, evolve, flatgrid, linops, matlaw, subspaces, verify

__all__ = [
    "catalog",
    "cli",
    "evolve",
    "flatgrid",
    "linops",
    "matlaw",
    "subspaces",
    "verify",
]

__version__ = "0.1.0"
