import os
from itertools import permutations

import numpy as np
import pytest

from ptolemaic.spaces import StripSpec, strip_sample

MAX_WORKERS = os.cpu_count() or 1


def brute_margins(D):
    """Margins of a 4x4 matrix from the raw inequalities over all 24 labellings.

    Independent of the pairing reduction used by the library.
    """
    D = np.asarray(D, dtype=float)
    pt = qi = cosq = np.inf
    prods = []
    for x, y, z, w in permutations(range(4)):
        xy, zw, xz, yw, xw, yz = D[x, y], D[z, w], D[x, z], D[y, w], D[x, w], D[y, z]
        pt = min(pt, xz * yw + xw * yz - xy * zw)
        qi = min(qi, xz ** 2 + yw ** 2 + xw ** 2 + yz ** 2 - xy ** 2 - zw ** 2)
        cosq = min(cosq, xz ** 2 + yw ** 2 + 2 * xw * yz - xy ** 2 - zw ** 2)
        prods.append(xy * zw)
    m2 = D.max() ** 2
    pmax = max(prods)
    return (pt / pmax if pmax > 0 else 0.0, qi / m2 if m2 > 0 else 0.0, cosq / m2 if m2 > 0 else 0.0)


def matrix_from_six(d):
    d12, d13, d14, d23, d24, d34 = d
    return np.array([[0, d12, d13, d14], [d12, 0, d23, d24], [d13, d23, 0, d34], [d14, d24, d34, 0]], dtype=float)


@pytest.fixture(scope="session")
def euclid_chart():
    return strip_sample(StripSpec(1.0, 5.0, 21, 5))


@pytest.fixture(scope="session")
def lp4_chart():
    from ptolemaic.spaces import Family

    return strip_sample(StripSpec(1.0, 5.0, 21, 5, Family("lp", p=4.0)))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
