"""Synthetic structure-activity corpora with planted activity cliffs.

Molecules are two-site scaffolds decorated with substituents. The label is
additive in scaffold and substituent contributions plus noise, and a few
(scaffold, substituent) combinations get a large jump, so single-site
exchanges produce both cliffs and smooth pairs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SCAFFOLDS = (
    "O=C(N({R2})C)c1ccc({R1})cc1",
    "c1cc({R1})ccc1-c1ccc({R2})cn1",
    "O=C(c1ccc({R1})cc1)N1CCC({R2})CC1",
    "Cc1nc({R1})c2cc({R2})ccc2n1",
    "O=S(=O)(c1ccc({R1})cc1)N1CCN({R2})CC1",
    "c1ccc2[nH]c({R1})c({R2})c2c1",
    "O=C(O)C({R2})Cc1ccc({R1})cc1",
    "COc1cc({R1})c(OC)cc1C(=O)N({R2})",
)
SUBSTITUENTS = (
    "C", "CC", "O", "N", "F", "Cl", "Br", "OC", "C(F)(F)F", "C#N",
    "CC(C)C", "C(=O)N", "S(C)(=O)=O", "c1ccccc1", "C1CC1",
)


@dataclass(frozen=True)
class SyntheticCompound:
    id: str
    smiles: str
    a: float

    @property
    def activity_value(self) -> float:
        return 10.0 ** (-self.a)


def toy_corpus(n: int = 200, seed: int = 7, cliff_rate: float = 0.12, noise: float = 0.15) -> list[SyntheticCompound]:
    rng = np.random.default_rng(seed)
    n_s, n_r = len(SCAFFOLDS), len(SUBSTITUENTS)
    if n > n_s * n_r * n_r:
        raise ValueError("requested more compounds than distinct decorations")
    base = rng.normal(-1.5, 0.6, n_s)
    beta = rng.normal(0.0, 0.35, n_r)
    gamma = rng.normal(0.0, 0.35, n_r)
    cliff1 = rng.random((n_s, n_r)) < cliff_rate
    cliff2 = rng.random((n_s, n_r)) < cliff_rate
    chosen: set[tuple[int, int, int]] = set()
    out = []
    while len(out) < n:
        s = len(out) % n_s
        r1, r2 = int(rng.integers(n_r)), int(rng.integers(n_r))
        if (s, r1, r2) in chosen:
            continue
        chosen.add((s, r1, r2))
        a = base[s] + beta[r1] + gamma[r2] + rng.normal(0.0, noise)
        a += 2.4 * cliff1[s, r1] - 2.4 * cliff2[s, r2]
        smiles = SCAFFOLDS[s].format(R1=SUBSTITUENTS[r1], R2=SUBSTITUENTS[r2])
        out.append(SyntheticCompound(f"T{len(out) + 1:04d}", smiles, round(float(a), 4)))
    return out


def write_activity_csv(path: str | Path, rows: list[tuple[str, str, float, str]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("id", "smiles", "activity_value", "activity_unit"))
        for rid, smi, value, unit in rows:
            w.writerow((rid, smi, repr(float(value)), unit))


def toy_activity_rows(n: int = 200, seed: int = 7) -> list[tuple[str, str, float, str]]:
    """Corpus rows plus curation cases: salts, close and far duplicates, an unparseable entry."""
    comps = toy_corpus(n, seed)
    rows = [(c.id, c.smiles, float(f"{c.activity_value:.6g}"), "nM") for c in comps]
    extra = [
        (f"{comps[0].id}_salt", comps[0].smiles + ".Cl", rows[0][2] * 2.0, "nM"),
        (f"{comps[1].id}_dup", comps[1].smiles, rows[1][2] * 3.0, "nM"),
        (f"{comps[2].id}_dup", comps[2].smiles, rows[2][2] * 50.0, "nM"),
        (f"{comps[3].id}_na", "[Na+]." + comps[3].smiles, rows[3][2] * 0.5, "nM"),
        ("BAD0001", "C1CC(", 10.0, "nM"),
    ]
    return rows + extra


def synthetic_mmp_graph(n_compounds: int, n_mmps: int, n_cores: int, seed: int) -> list:
    """Random MMP-like records over compound ids C0..C{n-1} (no chemistry, for split statistics)."""
    from acbench.mmp import AC, NON_AC, MmpRecord

    rng = np.random.default_rng(seed)
    seen: set[tuple[int, int]] = set()
    out = []
    while len(out) < n_mmps:
        i, j = sorted(int(x) for x in rng.choice(n_compounds, 2, replace=False))
        if (i, j) in seen:
            continue
        seen.add((i, j))
        core = f"core{int(rng.integers(n_cores))}"
        cls = AC if rng.random() < 0.1 else NON_AC
        out.append(MmpRecord(f"M{len(out) + 1:06d}", f"C{i}", f"C{j}", "", "", core, "", "", cls,
                             "first_more_active", 0.0))
    return out
