import pytest

from mwn import parse_rule
from mwn.graph import build

COLLATZ_LIKE = "n -> {2n+1, 3n+1}"


@pytest.fixture(scope="session")
def affine_rule():
    return parse_rule(COLLATZ_LIKE)


@pytest.fixture(scope="session")
def graph17(affine_rule):
    return build(affine_rule, [1], 17)
