import pytest

from baxxz.acceptance import CRITERIA

LINES: dict[int, str] = {}


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    result = CRITERIA[number]()
    LINES[number] = result.line()
    print(result.line())
    assert result.passed, result.line()
