"""Element tables: masses, default valences, SMILES symbol sets."""

from __future__ import annotations

# Standard atomic weights (IUPAC, conventional values).
ATOMIC_MASS: dict[str, float] = {
    "H": 1.008, "He": 4.0026, "Li": 6.94, "Be": 9.0122, "B": 10.81, "C": 12.011,
    "N": 14.007, "O": 15.999, "F": 18.998, "Ne": 20.180, "Na": 22.990, "Mg": 24.305,
    "Al": 26.982, "Si": 28.085, "P": 30.974, "S": 32.06, "Cl": 35.45, "Ar": 39.948,
    "K": 39.098, "Ca": 40.078, "Sc": 44.956, "Ti": 47.867, "V": 50.942, "Cr": 51.996,
    "Mn": 54.938, "Fe": 55.845, "Co": 58.933, "Ni": 58.693, "Cu": 63.546, "Zn": 65.38,
    "Ga": 69.723, "Ge": 72.630, "As": 74.922, "Se": 78.971, "Br": 79.904, "Kr": 83.798,
    "Rb": 85.468, "Sr": 87.62, "Y": 88.906, "Zr": 91.224, "Nb": 92.906, "Mo": 95.95,
    "Tc": 98.0, "Ru": 101.07, "Rh": 102.91, "Pd": 106.42, "Ag": 107.87, "Cd": 112.41,
    "In": 114.82, "Sn": 118.71, "Sb": 121.76, "Te": 127.60, "I": 126.90, "Xe": 131.29,
    "Cs": 132.91, "Ba": 137.33, "La": 138.91, "Ce": 140.12, "Gd": 157.25, "Yb": 173.05,
    "Hf": 178.49, "Ta": 180.95, "W": 183.84, "Re": 186.21, "Os": 190.23, "Ir": 192.22,
    "Pt": 195.08, "Au": 196.97, "Hg": 200.59, "Tl": 204.38, "Pb": 207.2, "Bi": 208.98,
    "U": 238.03,
}

# Atom used as attachment point in fragments; weightless, not a heavy atom.
WILDCARD = "*"

ORGANIC_SUBSET = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")
AROMATIC_ORGANIC = ("b", "c", "n", "o", "p", "s")
# Extra lowercase symbols accepted only inside brackets.
AROMATIC_BRACKET = ("b", "c", "n", "o", "p", "s", "se", "as", "te")

# Allowed valences of neutral atoms, lowest first.
DEFAULT_VALENCES: dict[str, tuple[int, ...]] = {
    "B": (3,), "C": (4,), "N": (3, 5), "O": (2,), "P": (3, 5), "S": (2, 4, 6),
    "F": (1,), "Cl": (1,), "Br": (1,), "I": (1,), "Si": (4,), "Se": (2, 4, 6),
    "As": (3, 5), "Te": (2, 4, 6), "H": (1,),
}

# Valences for common charged states; anything absent is not checked.
CHARGED_VALENCES: dict[tuple[str, int], tuple[int, ...]] = {
    ("B", -1): (4,), ("C", -1): (3,), ("C", 1): (3,), ("N", 1): (4,), ("N", -1): (2,),
    ("O", 1): (3,), ("O", -1): (1,), ("P", 1): (4,), ("P", -1): (2,),
    ("S", 1): (3, 5), ("S", -1): (1, 3, 5), ("Se", -1): (1,),
    ("F", -1): (0,), ("Cl", -1): (0,), ("Br", -1): (0,), ("I", -1): (0,),
}


def allowed_valences(element: str, charge: int) -> tuple[int, ...] | None:
    """Return allowed valences for ``element`` at ``charge``, or None if unchecked."""
    if charge == 0:
        return DEFAULT_VALENCES.get(element)
    return CHARGED_VALENCES.get((element, charge))
