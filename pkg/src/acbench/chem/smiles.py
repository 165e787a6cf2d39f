"""SMILES reader.

Supported subset:

* organic-subset atoms ``B C N O P S F Cl Br I`` and aromatic ``b c n o p s``
* bracket atoms ``[iso? symbol chirality? Hn? charge? :class?]`` for the
  element table in :mod:`acbench.chem.elements` plus aromatic ``se as te``
* bonds ``- = # :``; directional ``/ \\`` are read as single bonds
* branches, ring closures ``0-9`` and ``%nn``, dot-separated components
* tetrahedral ``@ @@`` (``@TH1``/``@TH2`` aliases)
* ``*`` attachment markers, only when ``allow_wildcard=True``

Isotope numbers and atom classes are parsed and dropped. Explicit ``[H]``
atoms are folded into the hydrogen count of their neighbor. Anything else
(quadruple bonds, ``@SP``/``@TB``/``@OH`` classes, unknown elements) raises
:class:`UnsupportedFeatureError`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from acbench.chem.elements import (
    AROMATIC_BRACKET,
    AROMATIC_ORGANIC,
    ATOMIC_MASS,
    DEFAULT_VALENCES,
    ORGANIC_SUBSET,
    WILDCARD,
    allowed_valences,
)
from acbench.chem.molecule import IMPLICIT_H, Atom, Bond, BondOrder, Molecule, Parity


class SmilesError(ValueError):
    kind = "error"

    def __init__(self, message: str, text: str = "", position: int | None = None):
        self.text = text
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"{message}{where}" + (f" in {text!r}" if text else ""))


class SmilesSyntaxError(SmilesError):
    kind = "syntax"


class UnclosedRingError(SmilesError):
    kind = "unclosed_ring"


class ValenceError(SmilesError):
    kind = "valence"


class UnsupportedFeatureError(SmilesError):
    kind = "unsupported"


_BOND_SYMBOLS = {"-": BondOrder.SINGLE, "=": BondOrder.DOUBLE, "#": BondOrder.TRIPLE,
                 ":": BondOrder.AROMATIC, "/": BondOrder.SINGLE, "\\": BondOrder.SINGLE}


@dataclass
class _AtomDraft:
    element: str
    aromatic: bool
    bracket: bool
    charge: int = 0
    hcount: int = 0
    parity: Parity = Parity.NONE
    # neighbor order as written; ring placeholders are ("ring", n) tuples until closed
    order: list = field(default_factory=list)
    has_prev: bool = False


@dataclass
class _BondDraft:
    a: int
    b: int
    order: BondOrder
    implicit: bool


def parse_smiles(text: str, allow_wildcard: bool = False) -> Molecule:
    """Parse ``text`` into a :class:`Molecule`."""
    if not text or not text.strip():
        raise SmilesSyntaxError("empty SMILES", text, 0)
    text = text.strip()
    atoms: list[_AtomDraft] = []
    bonds: list[_BondDraft] = []
    bonded: set[frozenset[int]] = set()
    open_rings: dict[int, tuple[int, BondOrder | None, int, int]] = {}
    ring_serial = 0
    branch_stack: list[int] = []
    prev: int | None = None
    pending: BondOrder | None = None
    pending_pos = -1
    i, n = 0, len(text)

    def add_bond(a: int, b: int, order: BondOrder | None, pos: int) -> None:
        key = frozenset((a, b))
        if a == b or key in bonded:
            raise SmilesSyntaxError("duplicate or self bond", text, pos)
        bonded.add(key)
        implicit = order is None
        if order is None:
            order = BondOrder.AROMATIC if atoms[a].aromatic and atoms[b].aromatic else BondOrder.SINGLE
        bonds.append(_BondDraft(a, b, order, implicit))

    def new_atom(draft: _AtomDraft, pos: int) -> None:
        nonlocal prev, pending
        idx = len(atoms)
        atoms.append(draft)
        if prev is not None:
            add_bond(prev, idx, pending, pos)
            atoms[prev].order.append(idx)
            draft.order.append(prev)
            draft.has_prev = True
        elif pending is not None:
            raise SmilesSyntaxError("bond without preceding atom", text, pending_pos)
        pending = None
        prev = idx

    while i < n:
        ch = text[i]
        if ch == "(":
            if prev is None:
                raise SmilesSyntaxError("branch without preceding atom", text, i)
            branch_stack.append(prev)
            i += 1
        elif ch == ")":
            if not branch_stack:
                raise SmilesSyntaxError("unbalanced ')'", text, i)
            if pending is not None:
                raise SmilesSyntaxError("dangling bond before ')'", text, i)
            prev = branch_stack.pop()
            i += 1
        elif ch == ".":
            if pending is not None or prev is None:
                raise SmilesSyntaxError("misplaced '.'", text, i)
            if branch_stack:
                raise SmilesSyntaxError("'.' inside branch", text, i)
            prev = None
            i += 1
        elif ch in _BOND_SYMBOLS:
            if pending is not None:
                raise SmilesSyntaxError("two consecutive bond symbols", text, i)
            if prev is None:
                raise SmilesSyntaxError("bond without preceding atom", text, i)
            pending, pending_pos = _BOND_SYMBOLS[ch], i
            i += 1
        elif ch == "$":
            raise UnsupportedFeatureError("quadruple bonds are not supported", text, i)
        elif ch.isdigit() or ch == "%":
            if prev is None:
                raise SmilesSyntaxError("ring closure without atom", text, i)
            if ch == "%":
                if i + 2 >= n or not text[i + 1 : i + 3].isdigit():
                    raise SmilesSyntaxError("malformed %nn ring closure", text, i)
                num, width = int(text[i + 1 : i + 3]), 3
            else:
                num, width = int(ch), 1
            if num in open_rings:
                partner, order0, pos0, serial = open_rings.pop(num)
                if pending is not None and order0 is not None and pending != order0:
                    raise SmilesSyntaxError(f"conflicting bond orders on ring {num}", text, i)
                order = pending if pending is not None else order0
                if partner == prev:
                    raise SmilesSyntaxError(f"ring {num} closes on itself", text, i)
                add_bond(partner, prev, order, i)
                slot = atoms[partner].order.index(("ring", serial))
                atoms[partner].order[slot] = prev
                atoms[prev].order.append(partner)
            else:
                ring_serial += 1
                open_rings[num] = (prev, pending, i, ring_serial)
                atoms[prev].order.append(("ring", ring_serial))
            pending = None
            i += width
        elif ch == "[":
            end = text.find("]", i)
            if end < 0:
                raise SmilesSyntaxError("unterminated bracket atom", text, i)
            draft = _parse_bracket(text, i + 1, end, allow_wildcard)
            new_atom(draft, i)
            i = end + 1
        elif ch == "*":
            if not allow_wildcard:
                raise UnsupportedFeatureError("wildcard atom outside fragment context", text, i)
            new_atom(_AtomDraft(WILDCARD, False, False), i)
            i += 1
        else:
            sym = text[i : i + 2] if text[i : i + 2] in ("Cl", "Br") else ch
            if sym in ORGANIC_SUBSET:
                new_atom(_AtomDraft(sym, False, False), i)
            elif sym in AROMATIC_ORGANIC:
                new_atom(_AtomDraft(sym.upper(), True, False), i)
            else:
                raise SmilesSyntaxError(f"unexpected character {ch!r}", text, i)
            i += len(sym)

    if open_rings:
        num, (_, _, pos, _) = next(iter(open_rings.items()))
        raise UnclosedRingError(f"unclosed ring bond {num}", text, pos)
    if branch_stack:
        raise SmilesSyntaxError("unclosed branch", text, n)
    if pending is not None:
        raise SmilesSyntaxError("dangling bond at end", text, pending_pos)
    return _finish(text, atoms, bonds)


def _parse_bracket(text: str, start: int, end: int, allow_wildcard: bool) -> _AtomDraft:
    body = text[start:end]
    j = 0
    while j < len(body) and body[j].isdigit():
        j += 1  # isotope: dropped
    if j >= len(body):
        raise SmilesSyntaxError("bracket atom without element", text, start)
    rest = body[j:]
    if rest[0] == "*":
        if not allow_wildcard:
            raise UnsupportedFeatureError("wildcard atom outside fragment context", text, start + j)
        element, aromatic, width = WILDCARD, False, 1
    elif rest[:2] in AROMATIC_BRACKET:
        element, aromatic, width = rest[:2].capitalize(), True, 2
    elif rest[0] in AROMATIC_BRACKET:
        element, aromatic, width = rest[0].upper(), True, 1
    elif rest[0].isupper():
        if len(rest) > 1 and rest[1].islower() and rest[:2] in ATOMIC_MASS:
            element, width = rest[:2], 2
        elif rest[0] in ATOMIC_MASS:
            element, width = rest[0], 1
        else:
            raise UnsupportedFeatureError(f"unknown element in [{body}]", text, start)
        aromatic = False
    else:
        raise SmilesSyntaxError(f"bad bracket atom [{body}]", text, start)
    j += width
    draft = _AtomDraft(element, aromatic, True)
    if j < len(body) and body[j] == "@":
        if body[j : j + 2] == "@@":
            draft.parity, j = Parity.CW, j + 2
        elif body[j : j + 4] in ("@TH1", "@TH2"):
            draft.parity = Parity.CCW if body[j + 3] == "1" else Parity.CW
            j += 4
        elif j + 1 < len(body) and body[j + 1].isupper() and body[j + 1] != "H":
            raise UnsupportedFeatureError("non-tetrahedral chirality class", text, start + j)
        else:
            draft.parity, j = Parity.CCW, j + 1
    if j < len(body) and body[j] == "H":
        j += 1
        k = j
        while k < len(body) and body[k].isdigit():
            k += 1
        draft.hcount = int(body[j:k]) if k > j else 1
        j = k
    if j < len(body) and body[j] in "+-":
        sign = 1 if body[j] == "+" else -1
        k = j + 1
        while k < len(body) and body[k] == body[j]:
            k += 1
        if k > j + 1:
            draft.charge = sign * (k - j)
            j = k
        else:
            m = k
            while m < len(body) and body[m].isdigit():
                m += 1
            draft.charge = sign * (int(body[k:m]) if m > k else 1)
            j = m
    if j < len(body) and body[j] == ":":
        k = j + 1
        while k < len(body) and body[k].isdigit():
            k += 1
        if k == j + 1:
            raise SmilesSyntaxError("empty atom class", text, start + j)
        j = k  # atom class: dropped
    if j != len(body):
        raise SmilesSyntaxError(f"trailing characters in [{body}]", text, start + j)
    return draft


def _default_h(element: str, aromatic: bool, orders: list[BondOrder], text: str) -> int:
    vals = DEFAULT_VALENCES[element]
    if aromatic:
        s = sum(1 if o is BondOrder.AROMATIC else int(o) for o in orders)
        if s > vals[-1]:
            raise ValenceError(f"valence {s} exceeds allowed for aromatic {element}", text)
        # one valence unit goes to the aromatic system unless already saturated
        return 0 if s >= vals[0] else max(0, vals[0] - s - 1)
    s = sum(int(o) for o in orders)
    for v in vals:
        if v >= s:
            return v - s
    raise ValenceError(f"valence {s} exceeds allowed for {element}", text)


def _finish(text: str, drafts: list[_AtomDraft], bonds: list[_BondDraft]) -> Molecule:
    orders_of: list[list[BondOrder]] = [[] for _ in drafts]
    for b in bonds:
        orders_of[b.a].append(b.order)
        orders_of[b.b].append(b.order)

    atoms: list[Atom] = []
    for idx, d in enumerate(drafts):
        if d.bracket or d.element == WILDCARD:
            h = d.hcount
            allowed = allowed_valences(d.element, d.charge)
            if allowed is not None and d.element != WILDCARD:
                if d.aromatic:
                    total = sum(1 if o is BondOrder.AROMATIC else int(o) for o in orders_of[idx]) + h
                else:
                    total = sum(int(o) for o in orders_of[idx]) + h
                if not allowed or total > max(allowed):
                    raise ValenceError(f"valence {total} not allowed for {d.element}{d.charge:+d}", text)
        else:
            h = _default_h(d.element, d.aromatic, orders_of[idx], text)
        ref: tuple[int, ...] = ()
        if d.parity is not Parity.NONE:
            ref_list = list(d.order)
            if any(isinstance(r, tuple) for r in ref_list):
                raise SmilesSyntaxError("internal: unresolved ring neighbor", text)
            if h == 1:
                ref_list.insert(1 if d.has_prev else 0, IMPLICIT_H)
            ref = tuple(ref_list)
        atoms.append(Atom(d.element, d.charge, d.aromatic, h, d.parity, ref))

    bond_objs = [Bond(b.a, b.b, b.order) for b in bonds]
    mol = Molecule.build(atoms, bond_objs)
    # An unmarked bond between aromatic atoms outside any ring is a plain single bond.
    fixed = [replace(b, order=BondOrder.SINGLE) if (d.implicit and b.order is BondOrder.AROMATIC and not b.in_ring) else b
             for b, d in zip(mol.bonds, bonds)]
    if fixed != list(mol.bonds):
        mol = Molecule.build(mol.atoms, [Bond(b.begin, b.end, b.order) for b in fixed])
    mol = _fold_explicit_hydrogens(mol)
    for b in mol.bonds:
        if b.order is BondOrder.AROMATIC and not (mol.atoms[b.begin].aromatic and mol.atoms[b.end].aromatic):
            raise SmilesSyntaxError("aromatic bond between non-aromatic atoms", text)
    for idx, a in enumerate(mol.atoms):
        if a.aromatic and not a.in_ring:
            raise SmilesSyntaxError(f"aromatic atom {idx} outside a ring", text)
    from acbench.chem.canon import clean_stereo

    return clean_stereo(mol)


def _fold_explicit_hydrogens(mol: Molecule) -> Molecule:
    """Remove neutral single-neighbor ``[H]`` atoms, adding them to the neighbor's H count."""
    drop = {}
    for i, a in enumerate(mol.atoms):
        if a.element == "H" and a.formal_charge == 0 and a.implicit_h == 0 and mol.degree(i) == 1:
            (j, bi), = mol.adjacency[i]
            if mol.atoms[j].element != "H" and mol.bonds[bi].order is BondOrder.SINGLE:
                drop[i] = j
    if not drop:
        return mol
    extra = {}
    for h, j in drop.items():
        extra[j] = extra.get(j, 0) + 1
    atoms = []
    for i, a in enumerate(mol.atoms):
        if i in drop:
            atoms.append(a)
            continue
        if a.parity is not Parity.NONE:
            ref = tuple(IMPLICIT_H if r in drop else r for r in a.stereo_ref)
            a = replace(a, stereo_ref=ref)
        atoms.append(replace(a, implicit_h=a.implicit_h + extra.get(i, 0)))
    tmp = Molecule.build(atoms, [Bond(b.begin, b.end, b.order) for b in mol.bonds])
    keep = [i for i in range(len(atoms)) if i not in drop]
    return tmp.subgraph(keep)
