from pathlib import Path

import pytest

from disclosure.model import MappingSet, atom, mapping_rule
from disclosure.problem import parse

HOSPITAL = Path(__file__).with_name("hospital.disc")


@pytest.fixture
def hospital():
    return parse(HOSPITAL.read_text()).setting()


@pytest.fixture
def hospital_path():
    return str(HOSPITAL)


@pytest.fixture
def proj_rxy():
    """T(x) := R(x, y)"""
    return MappingSet([mapping_rule(atom("T", "x"), [atom("R", "x", "y")])])
