"""Matched molecular pairs from single exocyclic-bond cuts."""

from __future__ import annotations

import csv
import logging
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from acbench.chem.canon import clean_stereo, smiles_digest, write_canonical_smiles
from acbench.chem.elements import WILDCARD
from acbench.chem.molecule import Atom, Bond, BondOrder, Molecule, _remap_atom
from acbench.chem.smiles import parse_smiles

log = logging.getLogger(__name__)

AC, HALF_AC, NON_AC = "AC", "HALF_AC", "NON_AC"
FIRST_MORE_ACTIVE, SECOND_MORE_ACTIVE, PD_TIE = "first_more_active", "second_more_active", "tie"

MAX_VARIABLE_HEAVY = 13
MAX_VARIABLE_DIFF = 8
CORE_TO_VARIABLE_RATIO = 2
AC_DELTA = 2.0
NON_AC_DELTA = 1.0
# absorbs rounding in log10 so that exact factors of 10 / 100 land on the inclusive side
BOUNDARY_EPS = 1e-9

MMP_COLUMNS = ("mmp_id", "id_1", "id_2", "smiles_1", "smiles_2", "core_smiles",
               "var_1", "var_2", "ac_class", "pd", "delta_log")


@dataclass(frozen=True)
class Fragmentation:
    parent: str
    core: Molecule
    variable: Molecule
    core_smiles: str
    variable_smiles: str
    core_key: str
    core_heavy: int
    variable_heavy: int


@dataclass(frozen=True)
class MmpRecord:
    mmp_id: str
    id_1: str
    id_2: str
    smiles_1: str
    smiles_2: str
    core_smiles: str
    var_1: str
    var_2: str
    ac_class: str
    pd: str
    delta_log: float

    @property
    def core_key(self) -> str:
        return core_digest(self.core_smiles)

    @property
    def is_labeled(self) -> bool:
        """True for ACs and non-ACs, the two classes used in classification."""
        return self.ac_class != HALF_AC


def core_digest(core_smiles: str) -> str:
    """Identity digest of an already canonical core SMILES."""
    return smiles_digest(core_smiles)


def _piece(mol: Molecule, side: list[int], cut_atom: int, other: int) -> Molecule:
    remap = {old: new for new, old in enumerate(side)}
    star = len(side)
    remap_with_star = dict(remap)
    remap_with_star[other] = star  # keeps stereo defined through the marker
    atoms = [_remap_atom(mol.atoms[i], remap_with_star) for i in side]
    atoms.append(Atom(WILDCARD))
    bonds = [Bond(remap[b.begin], remap[b.end], b.order)
             for b in mol.bonds if b.begin in remap and b.end in remap]
    bonds.append(Bond(remap[cut_atom], star, BondOrder.SINGLE))
    return clean_stereo(Molecule.build(atoms, bonds))


def _side(mol: Molecule, start: int, banned_bond: int) -> list[int]:
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w, bi in mol.adjacency[v]:
            if bi != banned_bond and w not in seen:
                seen.add(w)
                stack.append(w)
    return sorted(seen)


def cuttable_bonds(mol: Molecule) -> list[int]:
    return [
        bi for bi, b in enumerate(mol.bonds)
        if b.order is BondOrder.SINGLE and not b.in_ring
        and mol.atoms[b.begin].is_heavy and mol.atoms[b.end].is_heavy
    ]


def fragment_single_cuts(mol: Molecule, parent: str = "") -> list[Fragmentation]:
    """All (core, variable) splits at acyclic single bonds, both orientations per bond."""
    out = []
    for bi in cuttable_bonds(mol):
        b = mol.bonds[bi]
        left = _side(mol, b.begin, bi)
        right = _side(mol, b.end, bi)
        pieces = (
            (_piece(mol, left, b.begin, b.end), len(left)),
            (_piece(mol, right, b.end, b.begin), len(right)),
        )
        smiles = [write_canonical_smiles(p) for p, _ in pieces]
        for core_i, var_i in ((0, 1), (1, 0)):
            core, core_n = pieces[core_i]
            var, var_n = pieces[var_i]
            out.append(Fragmentation(
                parent=parent, core=core, variable=var,
                core_smiles=smiles[core_i], variable_smiles=smiles[var_i],
                core_key=smiles_digest(smiles[core_i]), core_heavy=core_n, variable_heavy=var_n,
            ))
    return out


def passes_constraints(core_heavy: int, var1_heavy: int, var2_heavy: int) -> bool:
    return (
        core_heavy >= CORE_TO_VARIABLE_RATIO * max(var1_heavy, var2_heavy)
        and var1_heavy <= MAX_VARIABLE_HEAVY
        and var2_heavy <= MAX_VARIABLE_HEAVY
        and abs(var1_heavy - var2_heavy) <= MAX_VARIABLE_DIFF
    )


def label_mmp(a1: float, a2: float) -> tuple[str, str, float]:
    """(ac_class, pd, delta_log) for two log-activity labels."""
    delta = abs(a1 - a2)
    if delta >= AC_DELTA - BOUNDARY_EPS:
        cls = AC
    elif delta <= NON_AC_DELTA + BOUNDARY_EPS:
        cls = NON_AC
    else:
        cls = HALF_AC
    if a1 > a2:
        pd = FIRST_MORE_ACTIVE
    elif a2 > a1:
        pd = SECOND_MORE_ACTIVE
    else:
        pd = PD_TIE
    return cls, pd, delta


def _fragment_summary(smiles: str) -> list[tuple[str, str, int, int]]:
    mol = parse_smiles(smiles)
    return [(f.core_smiles, f.variable_smiles, f.core_heavy, f.variable_heavy)
            for f in fragment_single_cuts(mol)]


def build_mmps(compounds: Sequence, jobs: int = 1) -> list[MmpRecord]:
    """Single-cut MMPs with the largest shared core per compound pair.

    ``compounds`` need ``id``, ``canonical_smiles`` and ``a`` attributes.
    Records are ordered by (smiles_1, smiles_2), so the output does not
    depend on input order.
    """
    comps = sorted(compounds, key=lambda c: c.canonical_smiles)
    smiles = [c.canonical_smiles for c in comps]
    if jobs > 1 and len(comps) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            summaries = list(ex.map(_fragment_summary, smiles, chunksize=16))
    else:
        summaries = [_fragment_summary(s) for s in smiles]

    # core -> compound index -> {(variable smiles, variable heavy)}, core heavy count
    index: dict[str, dict[int, set[tuple[str, int]]]] = defaultdict(lambda: defaultdict(set))
    core_size: dict[str, int] = {}
    for ci, frags in enumerate(summaries):
        for core_smi, var_smi, core_n, var_n in frags:
            index[core_smi][ci].add((var_smi, var_n))
            core_size[core_smi] = core_n

    best: dict[tuple[int, int], tuple] = {}
    multiplicity: dict[tuple[int, int], int] = defaultdict(int)
    for core_smi, members in index.items():
        if len(members) < 2:
            continue
        core_n = core_size[core_smi]
        ids = sorted(members)
        for x in range(len(ids)):
            for y in range(x + 1, len(ids)):
                i, j = ids[x], ids[y]
                for v1, n1 in sorted(members[i]):
                    for v2, n2 in sorted(members[j]):
                        if not passes_constraints(core_n, n1, n2):
                            continue
                        key = (-core_n, core_smi, v1, v2)
                        cur = best.get((i, j))
                        if cur is None or key < cur:
                            best[(i, j)] = key
                        multiplicity[(i, j)] += 1

    records = []
    for n, (i, j) in enumerate(sorted(best)):
        _, core_smi, v1, v2 = best[(i, j)]
        c1, c2 = comps[i], comps[j]
        cls, pd, delta = label_mmp(c1.a, c2.a)
        records.append(MmpRecord(
            mmp_id=f"M{n + 1:06d}", id_1=c1.id, id_2=c2.id,
            smiles_1=c1.canonical_smiles, smiles_2=c2.canonical_smiles,
            core_smiles=core_smi, var_1=v1, var_2=v2,
            ac_class=cls, pd=pd, delta_log=delta,
        ))
    multi = sum(1 for v in multiplicity.values() if v > 1)
    log.info("built %d MMPs from %d compounds (%d pairs with several valid cut combinations)",
             len(records), len(comps), multi)
    return records


def summarize(mmps: Iterable[MmpRecord]) -> dict:
    mmps = list(mmps)
    n_ac = sum(1 for m in mmps if m.ac_class == AC)
    n_half = sum(1 for m in mmps if m.ac_class == HALF_AC)
    n_non = sum(1 for m in mmps if m.ac_class == NON_AC)
    ratio = f"1 : {round(n_non / n_ac)}" if n_ac else "n/a"
    return {"mmps": len(mmps), "acs": n_ac, "half_acs": n_half, "non_acs": n_non, "ac_to_non_ac": ratio}


def write_mmp_csv(path: str | Path, mmps: Iterable[MmpRecord], header_comment: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MMP_COLUMNS)
        for m in mmps:
            w.writerow([m.mmp_id, m.id_1, m.id_2, m.smiles_1, m.smiles_2, m.core_smiles,
                        m.var_1, m.var_2, m.ac_class, m.pd, repr(float(m.delta_log))])


def read_mmp_csv(path: str | Path) -> list[MmpRecord]:
    with open(path, newline="") as fh:
        rows = csv.DictReader(line for line in fh if not line.startswith("#"))
        missing = set(MMP_COLUMNS) - set(rows.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing MMP columns {sorted(missing)}")
        return [MmpRecord(**{**{k: r[k] for k in MMP_COLUMNS}, "delta_log": float(r["delta_log"])})
                for r in rows]
