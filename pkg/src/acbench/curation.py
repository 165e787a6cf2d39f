"""Activity data curation: CSV ingestion, desalting, duplicate unification."""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from acbench.chem.canon import write_canonical_smiles
from acbench.chem.molecule import Molecule
from acbench.chem.smiles import SmilesError, parse_smiles

INPUT_COLUMNS = ("id", "smiles", "activity_value", "activity_unit")
CURATED_COLUMNS = INPUT_COLUMNS + ("canonical_smiles", "a")
UNIT_ALIASES = {"nm": "nM", "um": "uM", "µm": "uM", "μm": "uM"}
# duplicate measurements within this max/min ratio are unified
DUPLICATE_RATIO = 10.0


class SchemaError(ValueError):
    """Input file does not follow the documented CSV schema."""


@dataclass(frozen=True)
class RawRecord:
    id: str
    smiles: str
    activity_value: float
    activity_unit: str


@dataclass(frozen=True)
class CompoundRecord:
    id: str
    smiles: str
    canonical_smiles: str
    mol: Molecule = field(repr=False, compare=False)
    activity_value: float
    activity_unit: str

    @property
    def a(self) -> float:
        return activity_label(self.activity_value, self.activity_unit)


@dataclass(frozen=True)
class Rejection:
    id: str
    reason: str


@dataclass
class CurationResult:
    curated: list[CompoundRecord]
    log: list[dict]
    load_errors: list[dict]

    def counts(self) -> dict[str, int]:
        c = Counter(e["action"] for e in self.log)
        return {"input": len(self.log) + len(self.load_errors), "curated": len(self.curated),
                "load_errors": len(self.load_errors), **dict(sorted(c.items()))}


def activity_label(value: float, unit: str | None = None) -> float:
    """Negative decadic log of the activity in its native unit (no conversion)."""
    if not value > 0 or not math.isfinite(value):
        raise ValueError(f"activity must be positive and finite, got {value!r}")
    return -math.log10(value)


def _normalize_unit(unit: str) -> str | None:
    return UNIT_ALIASES.get(unit.strip().lower())


def _data_lines(fh) -> Iterable[str]:
    return (line for line in fh if not line.startswith("#"))


def load_activity_csv(path: str | Path) -> tuple[list[RawRecord], list[dict]]:
    """Parse rows; malformed rows are returned as error dicts, not dropped silently."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(_data_lines(fh))
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file")
        missing = [c for c in INPUT_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        records, errors = [], []
        for rowno, row in enumerate(reader, start=1):
            rid = (row.get("id") or "").strip()
            try:
                if not rid:
                    raise ValueError("empty id")
                smiles = (row["smiles"] or "").strip()
                if not smiles:
                    raise ValueError("empty smiles")
                value = float(row["activity_value"])
                if not (value > 0 and math.isfinite(value)):
                    raise ValueError(f"non-positive activity {row['activity_value']!r}")
                unit = _normalize_unit(row["activity_unit"] or "")
                if unit is None:
                    raise ValueError(f"unknown unit {row['activity_unit']!r}")
            except (TypeError, ValueError) as exc:
                errors.append({"row": rowno, "input_id": rid, "action": "rejected", "reason": str(exc)})
                continue
            records.append(RawRecord(rid, smiles, value, unit))
    return records, errors


def standardize(raw: RawRecord) -> CompoundRecord | Rejection:
    """Parse, keep the largest component, drop isotopes; reject unparseable input."""
    try:
        mol = parse_smiles(raw.smiles)
    except SmilesError as exc:
        return Rejection(raw.id, f"parse_error:{exc.kind}: {exc}")
    comps = mol.components()
    if len(comps) > 1:
        options = []
        for comp in comps:
            sub = mol.subgraph(comp)
            options.append((-sub.heavy_atom_count, write_canonical_smiles(sub), sub))
        options.sort(key=lambda t: (t[0], t[1]))
        _, smi, mol = options[0]
    else:
        smi = write_canonical_smiles(mol)
    if mol.heavy_atom_count == 0:
        return Rejection(raw.id, "no heavy atoms")
    return CompoundRecord(raw.id, raw.smiles, smi, mol, raw.activity_value, raw.activity_unit)


def _flags(mol: Molecule) -> list[str]:
    flags = []
    if any(a.aromatic and a.formal_charge for a in mol.atoms):
        flags.append("charged_aromatic_atom")
    return flags


def deduplicate(records: Sequence[CompoundRecord]) -> tuple[list[CompoundRecord], list[dict]]:
    """Unify duplicate structures by geometric mean or drop inconsistent groups.

    Groups whose max/min activity ratio is at most 10 are merged into one
    record (id of the first occurrence); other groups are removed entirely.
    """
    groups: dict[str, list[CompoundRecord]] = {}
    for r in records:
        groups.setdefault(r.canonical_smiles, []).append(r)
    curated, log = [], []
    for smi, grp in groups.items():
        if len(grp) == 1:
            curated.append(grp[0])
            log.append({"input_id": grp[0].id, "action": "kept", "reason": ""})
            continue
        ids = [g.id for g in grp]
        units = {g.activity_unit for g in grp}
        values = [g.activity_value for g in grp]
        if len(units) > 1:
            reason = f"duplicate group with mixed units {sorted(units)}"
            log.extend({"input_id": i, "action": "removed", "reason": reason} for i in ids)
            continue
        ratio = max(values) / min(values)
        if ratio > DUPLICATE_RATIO * (1 + 1e-12):
            reason = f"duplicate group {ids} spans ratio {ratio:.4g} > {DUPLICATE_RATIO:g}"
            log.extend({"input_id": i, "action": "removed", "reason": reason} for i in ids)
            continue
        gm = 10 ** (sum(math.log10(v) for v in values) / len(values))
        first = grp[0]
        curated.append(CompoundRecord(first.id, first.smiles, smi, first.mol, gm, first.activity_unit))
        reason = f"geometric mean of {len(grp)} measurements {ids}"
        log.extend({"input_id": i, "action": "merged", "reason": reason} for i in ids)
    return curated, log


def curate(raw: Sequence[RawRecord], load_errors: Sequence[dict] = ()) -> CurationResult:
    standardized, log = [], []
    for r in raw:
        out = standardize(r)
        if isinstance(out, Rejection):
            log.append({"input_id": out.id, "action": "rejected", "reason": out.reason})
        else:
            standardized.append(out)
    curated, dedup_log = deduplicate(standardized)
    flagged = {r.id: _flags(r.mol) for r in curated}
    for entry in dedup_log:
        f = flagged.get(entry["input_id"])
        if f and entry["action"] in ("kept", "merged"):
            entry["reason"] = ";".join(filter(None, [entry["reason"], *f]))
    return CurationResult(curated, log + dedup_log, list(load_errors))


def write_curated_csv(path: str | Path, records: Iterable[CompoundRecord], header_comment: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURATED_COLUMNS)
        for r in records:
            w.writerow([r.id, r.smiles, repr(float(r.activity_value)), r.activity_unit,
                        r.canonical_smiles, repr(r.a)])


def load_curated_csv(path: str | Path) -> list[CompoundRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(_data_lines(fh))
        missing = [c for c in CURATED_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        out = []
        for row in reader:
            mol = parse_smiles(row["canonical_smiles"])
            out.append(CompoundRecord(row["id"], row["smiles"], row["canonical_smiles"], mol,
                                      float(row["activity_value"]), row["activity_unit"]))
    return out


def write_log_jsonl(path: str | Path, entries: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            record = {"input_id": e["input_id"], "action": e["action"], "reason": e["reason"]}
            record.update((k, e[k]) for k in sorted(e) if k not in record)
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
