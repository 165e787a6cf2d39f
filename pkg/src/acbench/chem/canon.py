"""Canonical atom ranking, canonical SMILES and graph identity keys.

Ranks come from iterative refinement of atom invariants. Remaining ties are
broken by individualizing one atom of the lowest tied class; every choice is
explored and the lexicographically smallest SMILES wins. Terminal atoms that
hang off the same neighbor are interchangeable, so only one of them is tried.
"""

from __future__ import annotations

import hashlib
from dataclasses import replace
from functools import lru_cache

from acbench.chem.elements import AROMATIC_ORGANIC, ORGANIC_SUBSET, WILDCARD
from acbench.chem.molecule import IMPLICIT_H, BondOrder, Molecule, Parity
from acbench.chem.smiles import ValenceError, _default_h, parse_smiles


def initial_invariants(mol: Molecule) -> list[tuple]:
    return [
        (a.element, a.formal_charge, mol.degree(i), a.implicit_h, a.aromatic, a.in_ring)
        for i, a in enumerate(mol.atoms)
    ]


def _ranks_from_keys(keys: list) -> list[int]:
    """Rank = number of atoms with a strictly smaller key."""
    order = sorted(range(len(keys)), key=keys.__getitem__)
    ranks = [0] * len(keys)
    for pos, idx in enumerate(order):
        if pos and keys[idx] == keys[order[pos - 1]]:
            ranks[idx] = ranks[order[pos - 1]]
        else:
            ranks[idx] = pos
    return ranks


def _refine(mol: Molecule, ranks: list[int]) -> list[int]:
    n_classes = len(set(ranks))
    adj = mol.adjacency
    bonds = mol.bonds
    while True:
        keys = [
            (ranks[i], sorted((int(bonds[bi].order), ranks[j]) for j, bi in adj[i]))
            for i in range(len(ranks))
        ]
        new = _ranks_from_keys(keys)
        k = len(set(new))
        if k == n_classes:
            return new
        ranks, n_classes = new, k


def symmetry_classes(mol: Molecule) -> list[int]:
    """Refined invariant classes (no tie-breaking); equal for symmetry-equivalent atoms."""
    return _refine(mol, _ranks_from_keys(initial_invariants(mol)))


def clean_stereo(mol: Molecule) -> Molecule:
    """Drop parity from atoms whose neighbors are not pairwise distinguishable."""
    flagged = [i for i, a in enumerate(mol.atoms) if a.parity is not Parity.NONE]
    if not flagged:
        return mol
    classes = symmetry_classes(mol)
    atoms = list(mol.atoms)
    changed = False
    for i in flagged:
        if _stereo_keys(mol, i, classes) is None:
            atoms[i] = replace(atoms[i], parity=Parity.NONE, stereo_ref=())
            changed = True
    if not changed:
        return mol
    return Molecule(tuple(atoms), mol.bonds, mol.adjacency)


def _stereo_keys(mol: Molecule, idx: int, classes: list[int]) -> list[int] | None:
    atom = mol.atoms[idx]
    ref = atom.stereo_ref
    if len(ref) not in (3, 4) or sorted(r for r in ref if r != IMPLICIT_H) != sorted(mol.neighbors(idx)):
        return None
    keys = [-1 if r == IMPLICIT_H else classes[r] for r in ref]
    if len(set(keys)) != len(keys):
        return None
    return keys


def _permutation_parity(seq: list, target: list) -> int:
    """0 if ``target`` is an even permutation of ``seq``, else 1."""
    pos = {v: k for k, v in enumerate(seq)}
    perm = [pos[v] for v in target]
    inversions = sum(1 for a in range(len(perm)) for b in range(a + 1, len(perm)) if perm[a] > perm[b])
    return inversions % 2


def canonical_parity(mol: Molecule, idx: int, classes: list[int] | None = None) -> Parity:
    """Parity relative to neighbors sorted by symmetry class (hydrogen first).

    Unlike the raw ``@``/``@@`` flag this does not depend on atom order, so
    it can enter permutation-invariant descriptors.
    """
    atom = mol.atoms[idx]
    if atom.parity is Parity.NONE:
        return Parity.NONE
    classes = symmetry_classes(mol) if classes is None else classes
    keys = _stereo_keys(mol, idx, classes)
    if keys is None:
        return Parity.NONE
    ref = list(atom.stereo_ref)
    target = [r for _, r in sorted(zip(keys, ref))]
    return atom.parity.flipped() if _permutation_parity(ref, target) else atom.parity


# -- SMILES writer -----------------------------------------------------------

def _atom_symbol(mol: Molecule, idx: int, parity: Parity) -> str:
    a = mol.atoms[idx]
    if a.element == WILDCARD:
        return "*"
    sym = a.element.lower() if a.aromatic else a.element
    bare_ok = (
        a.formal_charge == 0
        and parity is Parity.NONE
        and (sym in AROMATIC_ORGANIC if a.aromatic else sym in ORGANIC_SUBSET)
    )
    if bare_ok:
        orders = [mol.bonds[bi].order for _, bi in mol.adjacency[idx]]
        try:
            bare_ok = _default_h(a.element, a.aromatic, orders, "") == a.implicit_h
        except ValenceError:
            bare_ok = False
    if bare_ok:
        return sym
    out = ["[", sym]
    if parity is Parity.CCW:
        out.append("@")
    elif parity is Parity.CW:
        out.append("@@")
    if a.implicit_h:
        out.append("H" if a.implicit_h == 1 else f"H{a.implicit_h}")
    if a.formal_charge:
        c = a.formal_charge
        out.append(("+" if c > 0 else "-") + (str(abs(c)) if abs(c) > 1 else ""))
    out.append("]")
    return "".join(out)


def _bond_symbol(mol: Molecule, bi: int) -> str:
    b = mol.bonds[bi]
    if b.order is BondOrder.SINGLE:
        both_arom = mol.atoms[b.begin].aromatic and mol.atoms[b.end].aromatic
        return "-" if both_arom else ""
    if b.order is BondOrder.DOUBLE:
        return "="
    if b.order is BondOrder.TRIPLE:
        return "#"
    return ""


def _ring_label(d: int) -> str:
    return str(d) if d < 10 else f"%{d:02d}"


def write_smiles(mol: Molecule, ranks: list[int]) -> str:
    """Write SMILES visiting atoms in ``ranks`` order (lower first)."""
    n = len(mol.atoms)
    if n == 0:
        return ""
    visited = [False] * n
    children: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    closes: list[list[tuple[int, int]]] = [[] for _ in range(n)]  # (ancestor, bond)
    opens: list[list[tuple[int, int]]] = [[] for _ in range(n)]  # (descendant, bond)
    parent: list[int] = [-1] * n
    used_bonds: set[int] = set()
    roots = []

    def dfs(root: int) -> None:
        visited[root] = True
        stack = [(root, iter(sorted(mol.adjacency[root], key=lambda t: ranks[t[0]])))]
        while stack:
            v, it = stack[-1]
            for w, bi in it:
                if bi in used_bonds:
                    continue
                used_bonds.add(bi)
                if visited[w]:
                    closes[v].append((w, bi))
                    opens[w].append((v, bi))
                else:
                    visited[w] = True
                    parent[w] = v
                    children[v].append((w, bi))
                    stack.append((w, iter(sorted(mol.adjacency[w], key=lambda t: ranks[t[0]]))))
                    break
            else:
                stack.pop()

    for start in sorted(range(n), key=ranks.__getitem__):
        if not visited[start]:
            roots.append(start)
            dfs(start)

    free_digits: list[int] = []
    next_digit = [1]
    edge_digit: dict[int, int] = {}
    parts: list[str] = []

    def take_digit() -> int:
        if free_digits:
            free_digits.sort()
            return free_digits.pop(0)
        d = next_digit[0]
        next_digit[0] += 1
        return d

    def emit(root: int) -> None:
        # iterative emission: stack entries are either atoms or literal strings
        work: list = [("atom", root, -1)]
        while work:
            item = work.pop()
            if item[0] == "text":
                parts.append(item[1])
                continue
            _, v, via_bond = item
            if via_bond >= 0:
                parts.append(_bond_symbol(mol, via_bond))
            ring_nbrs: list[int] = []
            ring_text: list[str] = []
            for w, bi in closes[v]:
                d = edge_digit.pop(bi)
                ring_text.append(_ring_label(d))
                free_digits.append(d)
                ring_nbrs.append(w)
            for w, bi in opens[v]:
                d = take_digit()
                edge_digit[bi] = d
                ring_text.append(_bond_symbol(mol, bi) + _ring_label(d))
                ring_nbrs.append(w)
            parity = Parity.NONE
            atom = mol.atoms[v]
            if atom.parity is not Parity.NONE:
                order = [] if parent[v] < 0 else [parent[v]]
                if atom.implicit_h == 1 and IMPLICIT_H in atom.stereo_ref:
                    order.append(IMPLICIT_H)
                order += ring_nbrs + [w for w, _ in children[v]]
                flip = _permutation_parity(list(atom.stereo_ref), order)
                parity = atom.parity.flipped() if flip else atom.parity
            parts.append(_atom_symbol(mol, v, parity))
            parts.extend(ring_text)
            kids = children[v]
            # push in reverse so the first branch is emitted first
            if kids:
                work.append(("atom", kids[-1][0], kids[-1][1]))
                for w, bi in reversed(kids[:-1]):
                    work.append(("text", ")"))
                    work.append(("atom", w, bi))
                    work.append(("text", "("))

    for k, root in enumerate(roots):
        if k:
            parts.append(".")
        emit(root)
    return "".join(parts)


def _individualize(ranks: list[int], atom: int) -> list[int]:
    r = ranks[atom]
    return [x + 1 if (x == r and i != atom) else x for i, x in enumerate(ranks)]


def _candidates(mol: Molecule, ranks: list[int]) -> list[int]:
    counts: dict[int, int] = {}
    for r in ranks:
        counts[r] = counts.get(r, 0) + 1
    target = min(r for r, c in counts.items() if c > 1)
    cands = [i for i, r in enumerate(ranks) if r == target]
    pruned, seen_parents = [], set()
    for i in cands:
        if mol.degree(i) == 1:
            (p, bi), = mol.adjacency[i]
            key = (p, int(mol.bonds[bi].order))
            if key in seen_parents:
                continue
            seen_parents.add(key)
        pruned.append(i)
    return pruned


def _search(mol: Molecule) -> tuple[str, list[int]]:
    start = symmetry_classes(mol)
    best: tuple[str, list[int]] | None = None
    stack = [start]
    while stack:
        ranks = stack.pop()
        if len(set(ranks)) == len(ranks):
            s = write_smiles(mol, ranks)
            if best is None or s < best[0]:
                best = (s, ranks)
            continue
        for c in reversed(_candidates(mol, ranks)):
            stack.append(_refine(mol, _individualize(ranks, c)))
    assert best is not None
    return best


def canonical_ranks(mol: Molecule) -> list[int]:
    """Canonical rank of each atom (0 = first atom written)."""
    if len(mol.atoms) == 0:
        return []
    return _search(mol)[1]


def write_canonical_smiles(mol: Molecule) -> str:
    if len(mol.atoms) == 0:
        return ""
    return _search(mol)[0]


def smiles_digest(canonical_smiles: str) -> str:
    return hashlib.blake2b(canonical_smiles.encode("utf-8"), digest_size=16).hexdigest()


def graph_key(mol: Molecule) -> str:
    """Fixed-length hex digest (128 bit) of the canonical SMILES."""
    return smiles_digest(write_canonical_smiles(mol))


@lru_cache(maxsize=65536)
def canonicalize(smiles: str, allow_wildcard: bool = False) -> str:
    """Canonical form of a SMILES string (cached)."""
    return write_canonical_smiles(parse_smiles(smiles, allow_wildcard=allow_wildcard))
