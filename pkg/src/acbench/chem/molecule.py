"""Molecular graph types.

Hydrogens are never explicit atoms: every atom carries an ``implicit_h``
count instead, so the atom count of a molecule is its heavy-atom count (plus
attachment markers for fragments).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from acbench.chem.elements import WILDCARD


class BondOrder(enum.IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def valence(self) -> float:
        return 1.5 if self is BondOrder.AROMATIC else float(self.value)


class Parity(enum.IntEnum):
    """Tetrahedral parity as written in SMILES (``@`` / ``@@``)."""

    NONE = 0
    CCW = 1  # '@'
    CW = 2  # '@@'

    def flipped(self) -> "Parity":
        if self is Parity.NONE:
            return self
        return Parity.CW if self is Parity.CCW else Parity.CCW


# Placeholder for the implicit hydrogen inside a stereo reference order.
IMPLICIT_H = -1


@dataclass(frozen=True, slots=True)
class Atom:
    element: str
    formal_charge: int = 0
    aromatic: bool = False
    implicit_h: int = 0
    parity: Parity = Parity.NONE
    # Neighbor order (atom indices, IMPLICIT_H for the hydrogen) that parity refers to.
    stereo_ref: tuple[int, ...] = ()
    in_ring: bool = False

    @property
    def is_heavy(self) -> bool:
        return self.element != WILDCARD


@dataclass(frozen=True, slots=True)
class Bond:
    begin: int
    end: int
    order: BondOrder = BondOrder.SINGLE
    in_ring: bool = False

    @property
    def endpoints(self) -> frozenset[int]:
        return frozenset((self.begin, self.end))

    def other(self, idx: int) -> int:
        return self.end if idx == self.begin else self.begin


@dataclass(frozen=True)
class Molecule:
    """Immutable molecular graph; build instances through :meth:`build`."""

    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    # adjacency[i] = ((neighbor, bond index), ...) in insertion order
    adjacency: tuple[tuple[tuple[int, int], ...], ...] = field(repr=False)

    @classmethod
    def build(cls, atoms: Sequence[Atom], bonds: Sequence[Bond]) -> "Molecule":
        n = len(atoms)
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        seen: set[frozenset[int]] = set()
        for bi, b in enumerate(bonds):
            if b.begin == b.end or not (0 <= b.begin < n and 0 <= b.end < n):
                raise ValueError(f"invalid bond endpoints {b.begin}-{b.end}")
            key = b.endpoints
            if key in seen:
                raise ValueError(f"duplicate bond {b.begin}-{b.end}")
            seen.add(key)
            adj[b.begin].append((b.end, bi))
            adj[b.end].append((b.begin, bi))
        ring_bonds = _ring_bonds(n, bonds, adj)
        new_bonds = tuple(replace(b, in_ring=(i in ring_bonds)) for i, b in enumerate(bonds))
        ring_atoms = {a for i in ring_bonds for a in (bonds[i].begin, bonds[i].end)}
        new_atoms = tuple(replace(a, in_ring=(i in ring_atoms)) for i, a in enumerate(atoms))
        return cls(new_atoms, new_bonds, tuple(tuple(x) for x in adj))

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def heavy_atom_count(self) -> int:
        return sum(1 for a in self.atoms if a.is_heavy)

    def degree(self, idx: int) -> int:
        return len(self.adjacency[idx])

    def neighbors(self, idx: int) -> list[int]:
        return [j for j, _ in self.adjacency[idx]]

    def bond_between(self, i: int, j: int) -> Bond | None:
        for k, bi in self.adjacency[i]:
            if k == j:
                return self.bonds[bi]
        return None

    def bond_valence(self, idx: int) -> float:
        return sum(self.bonds[bi].order.valence for _, bi in self.adjacency[idx])

    def components(self) -> list[list[int]]:
        """Connected components as sorted atom-index lists, ordered by first atom."""
        seen = [False] * len(self.atoms)
        comps = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            stack, comp = [start], []
            seen[start] = True
            while stack:
                v = stack.pop()
                comp.append(v)
                for w, _ in self.adjacency[v]:
                    if not seen[w]:
                        seen[w] = True
                        stack.append(w)
            comps.append(sorted(comp))
        return comps

    def subgraph(self, keep: Iterable[int]) -> "Molecule":
        """Induced subgraph on ``keep`` (order preserved); stereo refs are remapped."""
        keep = list(keep)
        remap = {old: new for new, old in enumerate(keep)}
        atoms = [_remap_atom(self.atoms[i], remap) for i in keep]
        bonds = [Bond(remap[b.begin], remap[b.end], b.order)
                 for b in self.bonds if b.begin in remap and b.end in remap]
        return Molecule.build(atoms, bonds)

    def renumber(self, order: Sequence[int]) -> "Molecule":
        """Return the same graph with atom ``order[k]`` moved to position ``k``."""
        if sorted(order) != list(range(len(self.atoms))):
            raise ValueError("order must be a permutation of atom indices")
        remap = {old: new for new, old in enumerate(order)}
        atoms = [_remap_atom(self.atoms[i], remap) for i in order]
        bonds = [Bond(remap[b.begin], remap[b.end], b.order) for b in self.bonds]
        return Molecule.build(atoms, bonds)


def _remap_atom(atom: Atom, remap: dict[int, int]) -> Atom:
    if atom.parity is Parity.NONE:
        return replace(atom, stereo_ref=())
    ref = []
    for r in atom.stereo_ref:
        if r == IMPLICIT_H:
            ref.append(IMPLICIT_H)
        elif r in remap:
            ref.append(remap[r])
        else:
            # neighbor cut away: stereo is no longer defined on this subgraph
            return replace(atom, parity=Parity.NONE, stereo_ref=())
    return replace(atom, stereo_ref=tuple(ref))


def _ring_bonds(n: int, bonds: Sequence[Bond], adj: list[list[tuple[int, int]]]) -> set[int]:
    """Bonds lying on a cycle, i.e. all bonds that are not bridges (iterative Tarjan)."""
    disc = [-1] * n
    low = [0] * n
    bridges: set[int] = set()
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = timer
        timer += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            v, parent_bond, it = stack[-1]
            advanced = False
            for w, bi in it:
                if bi == parent_bond:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, bi, iter(adj[w])))
                    advanced = True
                    break
                low[v] = min(low[v], disc[w])
            if advanced:
                continue
            stack.pop()
            if stack:
                u = stack[-1][0]
                low[u] = min(low[u], low[v])
                if low[v] > disc[u]:
                    bridges.add(parent_bond)
    return set(range(len(bonds))) - bridges


def ring_membership(mol: Molecule) -> tuple[list[bool], list[bool]]:
    """Per-atom and per-bond ring flags."""
    return [a.in_ring for a in mol.atoms], [b.in_ring for b in mol.bonds]
