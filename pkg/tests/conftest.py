from pathlib import Path

import pytest

from tmkit import Attribute, ClassSpec, dsl, from_class

HERE = Path(__file__).parent
CORPUS = sorted((HERE / "corpus").glob("*.tm"))

AUTHOR = ClassSpec(
    "Author",
    [Attribute("name", "String"), Attribute("email", "String"), Attribute("gender", "char")],
)


def load(name: str):
    return dsl.parse((HERE / "corpus" / name).read_text()).model


@pytest.fixture
def author():
    return from_class(AUTHOR)


@pytest.fixture
def corpus_model():
    return load
