import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from miblp.instance import parse_instance

DATA = Path(__file__).parent / "data"
MOORE_BARD = (DATA / "moore_bard.miblp").read_text()
THREE_D = (DATA / "three_d.miblp").read_text()


@pytest.fixture(scope="session")
def moore_bard():
    return parse_instance(MOORE_BARD, name="moore_bard")


@pytest.fixture(scope="session")
def three_d():
    return parse_instance(THREE_D, name="three_d")
