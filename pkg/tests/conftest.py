import numpy as np
import pytest

from aosabc import parse_instance

WORKED_TEXT = """\
3 3 1
9
10 6 4
3 4 5
1 1 0
0 1 1
0 0 1
"""


@pytest.fixture
def worked_instance():
    """Three items over three weighted elements, capacity 9: item 1 covers
    {e1, e2}, item 2 covers {e2, e3}, item 3 covers {e3}."""
    return parse_instance(WORKED_TEXT)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
