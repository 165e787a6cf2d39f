"""Non-trainable molecular representations.

* :func:`ecfp` - hashed extended-connectivity fingerprints
* :func:`descriptor_vector` - a frozen list of 32 physicochemical descriptors
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import struct
from collections import Counter, deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from acbench.chem.canon import canonical_parity, symmetry_classes
from acbench.chem.elements import ATOMIC_MASS
from acbench.chem.molecule import BondOrder, Molecule

DESCRIPTOR_SET_VERSION = "pdv-1"


def _hash32(payload: bytes) -> int:
    """Platform-independent 32-bit identifier (first 4 bytes of BLAKE2b, little endian)."""
    return int.from_bytes(hashlib.blake2b(payload, digest_size=4).digest(), "little")


@dataclass(frozen=True)
class Fingerprint:
    bits: np.ndarray
    nbits: int = 2048
    radius: int = 2

    def to_hex(self) -> str:
        return np.packbits(self.bits.astype(np.uint8), bitorder="little").tobytes().hex()

    @classmethod
    def from_hex(cls, text: str, nbits: int = 2048, radius: int = 2) -> "Fingerprint":
        raw = np.frombuffer(bytes.fromhex(text), dtype=np.uint8)
        bits = np.unpackbits(raw, bitorder="little")[:nbits]
        return cls(bits.astype(np.uint8), nbits, radius)

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())


def atom_invariant(mol: Molecule, idx: int, use_chirality: bool, classes: list[int] | None = None) -> tuple:
    a = mol.atoms[idx]
    parity = int(canonical_parity(mol, idx, classes)) if use_chirality else 0
    return (a.element, a.formal_charge, mol.degree(idx), a.implicit_h, int(a.aromatic), int(a.in_ring), parity)


def ecfp_identifiers(mol: Molecule, radius: int = 2, use_chirality: bool = True) -> list[tuple[int, int]]:
    """Surviving (identifier, iteration) pairs after duplicate-environment removal.

    Environments covering an atom set already seen are dropped; within one
    iteration the smaller identifier wins.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    n = len(mol.atoms)
    classes = symmetry_classes(mol) if use_chirality else None
    ids = [_hash32("|".join(map(str, atom_invariant(mol, i, use_chirality, classes))).encode()) for i in range(n)]
    envs = [frozenset((i,)) for i in range(n)]
    out = [(ids[i], 0) for i in range(n)]
    seen = set(envs)
    for it in range(1, radius + 1):
        new_ids, new_envs = [], []
        for i in range(n):
            nbrs = sorted((int(mol.bonds[bi].order), ids[j]) for j, bi in mol.adjacency[i])
            payload = struct.pack(f"<II{2 * len(nbrs)}I", it, ids[i], *[x for p in nbrs for x in p])
            new_ids.append(_hash32(payload))
            env = set(envs[i])
            for j, _ in mol.adjacency[i]:
                env |= envs[j]
            new_envs.append(frozenset(env))
        for i in sorted(range(n), key=lambda k: new_ids[k]):
            if new_envs[i] in seen:
                continue
            seen.add(new_envs[i])
            out.append((new_ids[i], it))
        ids, envs = new_ids, new_envs
    return out


def ecfp(mol: Molecule, radius: int = 2, nbits: int = 2048, use_chirality: bool = True) -> Fingerprint:
    if nbits < 64 or nbits & (nbits - 1):
        raise ValueError("nbits must be a power of two >= 64")
    bits = np.zeros(nbits, dtype=np.uint8)
    for ident, _ in ecfp_identifiers(mol, radius, use_chirality):
        bits[ident % nbits] = 1
    return Fingerprint(bits, nbits, radius)


def tanimoto(a: Fingerprint | np.ndarray, b: Fingerprint | np.ndarray) -> float:
    x = a.bits if isinstance(a, Fingerprint) else a
    y = b.bits if isinstance(b, Fingerprint) else b
    union = int(np.count_nonzero(x | y))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(x & y)) / union


def ecfp_matrix(mols: Sequence[Molecule], radius: int = 2, nbits: int = 2048, use_chirality: bool = True) -> np.ndarray:
    return np.stack([ecfp(m, radius, nbits, use_chirality).bits for m in mols]) if mols else np.zeros((0, nbits), np.uint8)


# -- physicochemical descriptors ---------------------------------------------

DESCRIPTOR_NAMES: tuple[str, ...] = (
    "mol_weight", "heavy_atoms", "n_C", "n_N", "n_O", "n_S", "n_P", "n_F", "n_Cl", "n_Br", "n_I",
    "n_other_elements", "n_hydrogens", "n_heteroatoms", "n_ring_bonds", "n_ring_atoms",
    "n_aromatic_atoms", "n_rings", "n_rotatable_bonds", "n_hbond_donors", "n_hbond_acceptors",
    "formal_charge_sum", "formal_charge_abs_sum", "n_double_bonds", "n_triple_bonds", "tpsa_approx",
    "wiener_index", "graph_diameter", "degree_mean", "degree_variance", "fraction_csp3", "bertz_proxy",
)

_COUNTED = ("C", "N", "O", "S", "P", "F", "Cl", "Br", "I")


@dataclass(frozen=True)
class DescriptorVector:
    values: np.ndarray
    names: tuple[str, ...] = DESCRIPTOR_NAMES

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.tolist()))


def _distances(mol: Molecule) -> list[list[int]]:
    n = len(mol.atoms)
    out = []
    for s in range(n):
        dist = [-1] * n
        dist[s] = 0
        q = deque([s])
        while q:
            v = q.popleft()
            for w, _ in mol.adjacency[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    q.append(w)
        out.append(dist)
    return out


def _polar_contribution(mol: Molecule, i: int) -> float:
    """Simplified Ertl polar-surface contributions for N and O."""
    a = mol.atoms[i]
    orders = [mol.bonds[bi].order for _, bi in mol.adjacency[i]]
    if a.element == "O":
        if a.aromatic:
            return 13.14
        if a.implicit_h:
            return 20.23
        if a.formal_charge < 0:
            return 23.06
        return 17.07 if BondOrder.DOUBLE in orders else 9.23
    if a.element == "N":
        if a.aromatic:
            return 15.79 if a.implicit_h else (4.41 if a.formal_charge > 0 else 12.89)
        if a.formal_charge > 0:
            return 0.0 if a.implicit_h == 0 and len(orders) == 4 else 3.01 + 10.0 * a.implicit_h
        if BondOrder.TRIPLE in orders:
            return 23.79
        if BondOrder.DOUBLE in orders:
            return 23.85 if a.implicit_h else 12.36
        return {0: 3.24, 1: 12.03, 2: 26.02}.get(a.implicit_h, 26.02)
    return 0.0


def descriptor_vector(mol: Molecule) -> DescriptorVector:
    heavy = [i for i, a in enumerate(mol.atoms) if a.is_heavy]
    elems = Counter(mol.atoms[i].element for i in heavy)
    n_h = sum(mol.atoms[i].implicit_h for i in heavy)
    # fsum is exactly rounded, so atom order cannot change the result
    mw = math.fsum([ATOMIC_MASS.get(mol.atoms[i].element, 0.0) for i in heavy] + [n_h * ATOMIC_MASS["H"]])
    ring_bonds = sum(1 for b in mol.bonds if b.in_ring)
    ring_atoms = sum(1 for i in heavy if mol.atoms[i].in_ring)
    n_comp = len(mol.components()) if len(mol.atoms) else 0
    n_rings = len(mol.bonds) - len(mol.atoms) + n_comp

    rotatable = 0
    for b in mol.bonds:
        if b.order is BondOrder.SINGLE and not b.in_ring and mol.degree(b.begin) > 1 and mol.degree(b.end) > 1:
            triple_adj = any(mol.bonds[bi].order is BondOrder.TRIPLE
                             for k in (b.begin, b.end) for _, bi in mol.adjacency[k])
            if not triple_adj:
                rotatable += 1
    donors = sum(1 for i in heavy if mol.atoms[i].element in ("N", "O") and mol.atoms[i].implicit_h > 0)
    acceptors = sum(1 for i in heavy if mol.atoms[i].element in ("N", "O") and mol.atoms[i].formal_charge <= 0)
    charges = [mol.atoms[i].formal_charge for i in heavy]
    n_double = sum(1 for b in mol.bonds if b.order is BondOrder.DOUBLE)
    n_triple = sum(1 for b in mol.bonds if b.order is BondOrder.TRIPLE)
    tpsa = math.fsum(_polar_contribution(mol, i) for i in heavy)

    dist = _distances(mol)
    finite = [d for row in dist for d in row if d > 0]
    wiener = sum(finite) / 2.0
    diameter = max(finite) if finite else 0
    degrees = np.array(sorted(mol.degree(i) for i in heavy), dtype=float) if heavy else np.zeros(1)
    carbons = [i for i in heavy if mol.atoms[i].element == "C"]
    sp3 = sum(1 for i in carbons
              if not mol.atoms[i].aromatic and all(mol.bonds[bi].order is BondOrder.SINGLE for _, bi in mol.adjacency[i]))
    frac_sp3 = sp3 / len(carbons) if carbons else 0.0

    # Bertz-style: information content of the "connections" (pairs of adjacent bonds).
    conn = Counter()
    for v in range(len(mol.atoms)):
        nb = mol.adjacency[v]
        for x in range(len(nb)):
            for y in range(x + 1, len(nb)):
                ends = tuple(sorted((mol.atoms[nb[x][0]].element, mol.atoms[nb[y][0]].element)))
                conn[(mol.atoms[v].element, ends)] += 1
    eta = sum(conn.values())
    bertz = 0.0
    if eta > 0:
        bertz = 2 * eta * math.log2(eta) - math.fsum(c * math.log2(c) for c in sorted(conn.values()))

    values = [
        mw, len(heavy), *[elems.get(e, 0) for e in _COUNTED],
        sum(c for e, c in elems.items() if e not in _COUNTED), n_h,
        sum(c for e, c in elems.items() if e not in ("C", "H")), ring_bonds, ring_atoms,
        sum(1 for i in heavy if mol.atoms[i].aromatic), n_rings, rotatable, donors, acceptors,
        sum(charges), sum(abs(c) for c in charges), n_double, n_triple, tpsa,
        wiener, diameter, float(degrees.mean()), float(degrees.var()), frac_sp3, bertz,
    ]
    arr = np.asarray(values, dtype=np.float64)
    assert arr.shape == (len(DESCRIPTOR_NAMES),)
    return DescriptorVector(arr)


def descriptor_matrix(mols: Sequence[Molecule]) -> np.ndarray:
    if not mols:
        return np.zeros((0, len(DESCRIPTOR_NAMES)))
    return np.stack([descriptor_vector(m).values for m in mols])


def descriptors_to_csv(ids: Iterable[str], vectors: Iterable[DescriptorVector]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", *DESCRIPTOR_NAMES])
    for cid, vec in zip(ids, vectors):
        w.writerow([cid, *[repr(float(x)) for x in vec.values]])
    return buf.getvalue()
