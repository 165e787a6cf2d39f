import csv
import json
import math

import pytest

from acbench.chem import canonicalize
from acbench.curation import (
    CompoundRecord, RawRecord, Rejection, SchemaError, activity_label, curate, deduplicate,
    load_activity_csv, load_curated_csv, standardize, write_curated_csv, write_log_jsonl,
)


def write_rows(path, rows, header=("id", "smiles", "activity_value", "activity_unit")):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def std(rid, smiles, value, unit="nM") -> CompoundRecord:
    out = standardize(RawRecord(rid, smiles, value, unit))
    assert isinstance(out, CompoundRecord)
    return out


# -- loading ------------------------------------------------------------------

def test_load_examples(tmp_path):
    path = write_rows(tmp_path / "in.csv", [
        ("m1", "CCO", "100", "nM"), ("m2", "CCN", "0", "nM"), ("m3", "CCC", "5", "pM"),
        ("m4", "CCCl", "-3", "uM"), ("m5", "CO", "abc", "nM"), ("m6", "C", "2", "µM"),
    ])
    records, errors = load_activity_csv(path)
    assert records[0] == RawRecord("m1", "CCO", 100.0, "nM")
    assert [r.id for r in records] == ["m1", "m6"] and records[1].activity_unit == "uM"
    assert {e["input_id"] for e in errors} == {"m2", "m3", "m4", "m5"}
    assert all(e["reason"] for e in errors)
    assert "unit" in next(e for e in errors if e["input_id"] == "m3")["reason"]


def test_missing_columns_and_empty_file(tmp_path):
    with pytest.raises(SchemaError):
        load_activity_csv(write_rows(tmp_path / "a.csv", [("m1", "CCO")], header=("id", "smiles")))
    (tmp_path / "e.csv").write_text("")
    with pytest.raises(SchemaError):
        load_activity_csv(tmp_path / "e.csv")


# -- standardization ---------------------------------------------------------------

def test_desalting_keeps_largest_component():
    assert std("x", "CCO.[Na+]", 1.0).canonical_smiles == canonicalize("CCO")
    assert std("y", "[Cl-].c1ccccc1CN", 1.0).canonical_smiles == canonicalize("NCc1ccccc1")


def test_desalting_tie_breaks_on_smallest_canonical_smiles():
    out = std("t", "CCN.CCO", 1.0)
    assert out.canonical_smiles == min(canonicalize("CCN"), canonicalize("CCO"))


def test_isotope_dropped():
    assert std("i", "[13CH3]CO", 1.0).canonical_smiles == canonicalize("CCO")


def test_unparseable_rejected():
    out = standardize(RawRecord("bad", "C1CC(", 1.0, "nM"))
    assert isinstance(out, Rejection) and out.reason.startswith("parse_error")


def test_charges_retained():
    assert "+" in std("q", "C[N+](C)(C)C", 1.0).canonical_smiles


def test_standardize_idempotent():
    for smi in ("CCO.[Na+]", "OC(=O)c1ccccc1.N", "[13CH3]c1ccccc1"):
        once = std("a", smi, 1.0)
        twice = std("a", once.canonical_smiles, 1.0)
        assert once.canonical_smiles == twice.canonical_smiles


# -- labels and deduplication ----------------------------------------------------------

@pytest.mark.parametrize("value,unit,expected", [(1, "nM", 0.0), (100, "nM", -2.0), (0.5, "uM", 0.30103)])
def test_activity_label_examples(value, unit, expected):
    assert activity_label(value, unit) == pytest.approx(expected, abs=1e-5)


@pytest.mark.parametrize("value", [0.0, -1.0, math.inf, math.nan])
def test_activity_label_rejects_bad_values(value):
    with pytest.raises(ValueError):
        activity_label(value)


def test_geometric_mean_unification():
    curated, log = deduplicate([std("a", "CCO", 10.0), std("b", "OCC", 100.0)])
    assert len(curated) == 1
    assert curated[0].activity_value == pytest.approx(math.sqrt(10 * 100), abs=1e-9)
    assert curated[0].activity_value == pytest.approx(31.62, abs=0.01)
    assert curated[0].id == "a"
    assert {e["action"] for e in log} == {"merged"}


def test_inconsistent_group_removed():
    curated, log = deduplicate([std("a", "CCO", 10.0), std("b", "CCO", 200.0), std("c", "CCC", 5.0)])
    assert [r.id for r in curated] == ["c"]
    assert sorted(e["input_id"] for e in log if e["action"] == "removed") == ["a", "b"]


def test_dedup_boundary():
    assert len(deduplicate([std("a", "CCO", 10.0), std("b", "CCO", 100.0)])[0]) == 1
    assert len(deduplicate([std("a", "CCO", 10.0), std("b", "CCO", 100.0 * (1 + 1e-6))])[0]) == 0


def test_dedup_idempotent():
    recs = [std("a", "CCO", 10.0), std("b", "CCO", 30.0), std("c", "CCN", 1.0), std("d", "CCN", 50.0),
            std("e", "CCC", 3.0)]
    once, _ = deduplicate(recs)
    twice, log = deduplicate(once)
    assert [(r.id, r.canonical_smiles, r.activity_value) for r in twice] == \
        [(r.id, r.canonical_smiles, r.activity_value) for r in once]
    assert {e["action"] for e in log} == {"kept"}


def test_mean_of_log_labels_equals_log_of_geometric_mean():
    curated, _ = deduplicate([std("a", "CCO", 2.0), std("b", "CCO", 8.0), std("c", "CCO", 16.0)])
    assert curated[0].a == pytest.approx(-(math.log10(2) + math.log10(8) + math.log10(16)) / 3)


# -- corpus-level ---------------------------------------------------------------------

def test_conservation_on_toy_corpus(toy_csv):
    raw, errors = load_activity_csv(toy_csv)
    result = curate(raw, errors)
    with open(toy_csv) as fh:
        n_rows = sum(1 for line in fh if line.strip() and not line.startswith("#")) - 1
    counts = result.counts()
    assert counts["input"] == n_rows
    merged_groups = len({e["reason"] for e in result.log if e["action"] == "merged"})
    assert counts["curated"] == counts.get("kept", 0) + merged_groups
    assert n_rows == (counts.get("kept", 0) + counts.get("merged", 0) + counts.get("removed", 0)
                      + counts.get("rejected", 0) + counts["load_errors"])
    assert len({r.canonical_smiles for r in result.curated}) == len(result.curated)


def test_toy_corpus_curation_effects(toy_csv):
    result = curate(*load_activity_csv(toy_csv))
    actions = {e["input_id"]: e["action"] for e in result.log}
    assert actions["BAD0001"] == "rejected"
    assert actions["T0002_dup"] == "merged"
    assert actions["T0003_dup"] == "removed" and actions["T0003"] == "removed"
    assert actions["T0001_salt"] == "merged"  # desalted form duplicates T0001 within a factor 2


def test_curated_csv_and_log_round_trip(tmp_path, toy_csv):
    result = curate(*load_activity_csv(toy_csv))
    path = tmp_path / "curated.csv"
    write_curated_csv(path, result.curated, header_comment="config_digest=x")
    back = load_curated_csv(path)
    assert [(r.id, r.canonical_smiles, r.a) for r in back] == [(r.id, r.canonical_smiles, r.a) for r in result.curated]
    log_path = tmp_path / "log.jsonl"
    write_log_jsonl(log_path, [{**e, "config_digest": "x"} for e in result.log])
    lines = [json.loads(x) for x in log_path.read_text().splitlines()]
    assert list(lines[0])[:3] == ["input_id", "action", "reason"]
    assert all(x["config_digest"] == "x" for x in lines)
