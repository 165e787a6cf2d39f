from importlib import resources

import pytest

from acbench.curation import curate, load_activity_csv
from acbench.mmp import build_mmps


def toy_csv_path() -> str:
    return str(resources.files("acbench.data").joinpath("toy_corpus.csv"))


@pytest.fixture(scope="session")
def toy_csv() -> str:
    return toy_csv_path()


@pytest.fixture(scope="session")
def toy_compounds():
    raw, errors = load_activity_csv(toy_csv_path())
    return curate(raw, errors).curated


@pytest.fixture(scope="session")
def toy_mmps(toy_compounds):
    return build_mmps(toy_compounds)
