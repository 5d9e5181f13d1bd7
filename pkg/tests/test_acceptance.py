"""The ten acceptance criteria at their stated tolerances.

One pass/fail line per criterion is printed in the terminal summary.
Criterion 8 asks for a constant-density degree-1 map T^2 -> S^2; such a
map would be a covering of S^2 by T^2, so it cannot exist and the check
is expected to fail.
"""

import pytest

from conftest import ACCEPTANCE_LINES
from sdl.acceptance import CHECKS, timed

UNATTAINABLE = {8: "no degree-1 map T^2 -> S^2 has constant pullback density"}


def _param(i, fn):
    n = i + 1
    marks = [pytest.mark.xfail(strict=True, reason=UNATTAINABLE[n])] if n in UNATTAINABLE else []
    return pytest.param(fn, id=f"{n:02d}-{fn.__name__}", marks=marks)


@pytest.mark.parametrize("check", [_param(i, fn) for i, fn in enumerate(CHECKS)])
def test_criterion(check):
    r = timed(check)
    ACCEPTANCE_LINES.append(r.line())
    print(r.line())
    print(r.details)
    assert r.passed, r.details
