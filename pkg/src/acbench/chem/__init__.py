"""Molecular graphs: SMILES parsing, ring perception and canonicalization."""

from acbench.chem.canon import (
    canonical_parity,
    canonical_ranks,
    canonicalize,
    graph_key,
    symmetry_classes,
    write_canonical_smiles,
)
from acbench.chem.molecule import Atom, Bond, BondOrder, Molecule, Parity, ring_membership
from acbench.chem.smiles import (
    SmilesError,
    SmilesSyntaxError,
    UnclosedRingError,
    UnsupportedFeatureError,
    ValenceError,
    parse_smiles,
)

__all__ = [
    "Atom", "Bond", "BondOrder", "Molecule", "Parity",
    "SmilesError", "SmilesSyntaxError", "UnclosedRingError", "UnsupportedFeatureError", "ValenceError",
    "canonical_parity", "canonical_ranks", "canonicalize", "graph_key", "parse_smiles",
    "ring_membership", "symmetry_classes", "write_canonical_smiles",
]
