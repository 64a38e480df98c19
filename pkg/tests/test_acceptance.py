"""Every numerical acceptance criterion at its stated tolerance and time limit.

Each test prints one ``[PASS]``/``[FAIL]`` line with the measured values; the
lines are repeated in the pytest terminal summary.
"""

from __future__ import annotations

import pytest

from sphmean import acceptance

from .conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number):
    result = acceptance.CRITERIA[number]()
    line = result.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert result.passed, line
