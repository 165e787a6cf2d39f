"""Molecule-level repeated k-fold splits and the derived MMP evaluation sets."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class SplitPlan:
    i: int
    j: int
    d_train: frozenset[str]
    d_test: frozenset[str]
    m_train: frozenset[str] = frozenset()
    m_inter: frozenset[str] = frozenset()
    m_test: frozenset[str] = frozenset()
    m_cores: frozenset[str] = frozenset()
    c_train: frozenset[str] = frozenset()

    def to_json(self) -> dict:
        return {
            "i": self.i, "j": self.j,
            "d_train": sorted(self.d_train), "d_test": sorted(self.d_test),
            "m_train": sorted(self.m_train), "m_inter": sorted(self.m_inter),
            "m_test": sorted(self.m_test), "m_cores": sorted(self.m_cores),
        }

    @classmethod
    def from_json(cls, obj: Mapping, cores: Mapping[str, str] | None = None) -> "SplitPlan":
        m_train, m_inter = frozenset(obj["m_train"]), frozenset(obj["m_inter"])
        c_train = frozenset(cores[m] for m in m_train | m_inter) if cores else frozenset()
        return cls(int(obj["i"]), int(obj["j"]), frozenset(obj["d_train"]), frozenset(obj["d_test"]),
                   m_train, m_inter, frozenset(obj["m_test"]), frozenset(obj["m_cores"]), c_train)


def split_molecules(ids: Iterable[str], k: int, m: int, master_seed: int) -> list[tuple[int, int, frozenset[str], frozenset[str]]]:
    """Trials (i, j, d_train, d_test) for i in 1..m seeds and j in 1..k folds.

    Each seed permutes the sorted ids with a generator keyed on
    (master_seed, i) and cuts the permutation into k near-equal folds.
    """
    ids = sorted(set(ids))
    if k < 2 or m < 1:
        raise ValueError("need k >= 2 and m >= 1")
    if len(ids) < k:
        raise ValueError(f"cannot split {len(ids)} molecules into {k} folds")
    out = []
    for i in range(1, m + 1):
        rng = np.random.default_rng([master_seed, i])
        perm = rng.permutation(len(ids))
        folds = np.array_split(perm, k)
        for j, fold in enumerate(folds, start=1):
            test = frozenset(ids[p] for p in fold)
            train = frozenset(ids) - test
            out.append((i, j, train, test))
    return out


def derive_mmp_sets(i: int, j: int, d_train: frozenset[str], d_test: frozenset[str],
                    mmps: Sequence, cores: Mapping[str, str] | None = None) -> SplitPlan:
    """Assign labeled MMPs to train/inter/test by compound membership.

    ``mmps`` need ``mmp_id``, ``id_1``, ``id_2`` (and ``core_key`` unless
    ``cores`` maps mmp_id to core digest). Half-ACs must already be removed
    or carry ``is_labeled == False``.
    """
    m_train, m_inter, m_test = set(), set(), set()
    core_of = {}
    for p in mmps:
        if not getattr(p, "is_labeled", True):
            continue
        core_of[p.mmp_id] = cores[p.mmp_id] if cores is not None else p.core_key
        n_in = (p.id_1 in d_train) + (p.id_2 in d_train)
        for cid in (p.id_1, p.id_2):
            if cid not in d_train and cid not in d_test:
                raise ValueError(f"MMP {p.mmp_id}: compound {cid} not in the data set")
        (m_test, m_inter, m_train)[n_in].add(p.mmp_id)
    c_train = frozenset(core_of[x] for x in m_train | m_inter)
    m_cores = frozenset(x for x in m_test if core_of[x] not in c_train)
    plan = SplitPlan(i, j, frozenset(d_train), frozenset(d_test), frozenset(m_train), frozenset(m_inter),
                     frozenset(m_test), m_cores, c_train)
    check_plan(plan, mmps, core_of)
    return plan


def check_plan(plan: SplitPlan, mmps: Sequence, core_of: Mapping[str, str]) -> None:
    """Raise AssertionError if any SplitPlan invariant is violated."""
    by_id = {p.mmp_id: p for p in mmps}
    assert not (plan.d_train & plan.d_test), "d_train and d_test overlap"
    assert not (plan.m_train & plan.m_inter) and not (plan.m_train & plan.m_test) and not (plan.m_inter & plan.m_test)
    labeled = {p.mmp_id for p in mmps if getattr(p, "is_labeled", True)}
    assert plan.m_train | plan.m_inter | plan.m_test == labeled, "MMP sets do not cover all labeled MMPs"
    for name, expected in (("m_train", 2), ("m_inter", 1), ("m_test", 0)):
        for x in getattr(plan, name):
            p = by_id[x]
            got = (p.id_1 in plan.d_train) + (p.id_2 in plan.d_train)
            assert got == expected, f"{x} in {name} has {got} training compounds"
    assert plan.m_cores <= plan.m_test
    assert all(core_of[x] not in plan.c_train for x in plan.m_cores)


def make_plans(ids: Iterable[str], mmps: Sequence, k: int, m: int, master_seed: int) -> list[SplitPlan]:
    cores = {p.mmp_id: p.core_key for p in mmps}
    return [derive_mmp_sets(i, j, tr, te, mmps, cores) for i, j, tr, te in split_molecules(ids, k, m, master_seed)]


def write_manifest(path: str | Path, plan: SplitPlan, extra: Mapping | None = None) -> None:
    obj = plan.to_json()
    if extra:
        obj = {**extra, **obj}
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def read_manifest(path: str | Path, cores: Mapping[str, str] | None = None) -> SplitPlan:
    return SplitPlan.from_json(json.loads(Path(path).read_text()), cores)
