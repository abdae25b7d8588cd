import pytest

from atomiclo import assets
from atomiclo.corpus import load_corpus
from atomiclo.taxonomy import load_taxonomy


@pytest.fixture(scope="session")
def taxonomy():
    return load_taxonomy(assets.data_path(assets.TAXONOMY_MECHANICS))


@pytest.fixture(scope="session")
def energy_corpus(taxonomy):
    return load_corpus(assets.data_path(assets.QUESTIONS_ENERGY), taxonomy)


@pytest.fixture(scope="session")
def sample_corpus(taxonomy):
    return load_corpus(assets.data_path(assets.QUESTIONS_SAMPLE), taxonomy)
