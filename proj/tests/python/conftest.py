import os
import pathlib

import pytest

FIXTURES = pathlib.Path(os.environ.get("FACEALIGN_FIXTURES", pathlib.Path(__file__).parents[1] / "fixtures"))


@pytest.fixture
def corpus():
    return FIXTURES / "corpus"


@pytest.fixture
def portrait(corpus):
    return corpus / "portrait_01_astronaut.png"
