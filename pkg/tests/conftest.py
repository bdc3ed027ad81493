import random
from pathlib import Path

import pytest

import lclang
from lclang.parser import Program, parse_program


def bundled_prelude_path() -> Path:
    return Path(lclang.__file__).with_name("prelude.lc")


@pytest.fixture(scope="session")
def prelude() -> Program:
    path = bundled_prelude_path()
    return parse_program(path.read_text(), str(path))


@pytest.fixture()
def rng() -> random.Random:
    return random.Random(0xC0FFEE)
