"""Annealing simulator for lattice fermions under a low-weight local encoding."""

from .encoder import EncodedModel, EncodingError, encode_hubbard, encode_tv
from .lattice import InvalidLattice, Lattice, build_lattice
from .models import TV, Hubbard
from .pauli import PauliHamiltonian, PauliString, single
from .subspace import (
    DegenerateAux,
    KronOperator,
    NonSymmetricOperator,
    ProductBasis,
    SectorForbidden,
    SubspaceBasis,
    embed_bulk_product_state,
    logical_basis,
    restrict,
)

__all__ = [
    "DegenerateAux",
    "EncodedModel",
    "EncodingError",
    "Hubbard",
    "InvalidLattice",
    "KronOperator",
    "Lattice",
    "NonSymmetricOperator",
    "PauliHamiltonian",
    "PauliString",
    "ProductBasis",
    "SectorForbidden",
    "SubspaceBasis",
    "TV",
    "build_lattice",
    "embed_bulk_product_state",
    "encode_hubbard",
    "encode_tv",
    "logical_basis",
    "restrict",
    "single",
]

__version__ = "0.1.0"
