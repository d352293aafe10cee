from fractions import Fraction

import numpy as np
import pytest

from critlift import Architecture, ParamVec


def rref_rank(rows):
    """Exact rank of an integer matrix by Gauss-Jordan elimination over Fractions."""
    m = [[Fraction(int(v)) for v in r] for r in rows]
    n_rows = len(m)
    n_cols = len(m[0]) if m else 0
    r = 0
    for c in range(n_cols):
        piv = next((i for i in range(r, n_rows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][c]
        m[r] = [v / p for v in m[r]]
        for i in range(n_rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        r += 1
        if r == n_rows:
            break
    return r


def random_low_rank_int(rng, rows, cols, rank, lo=-3, hi=4):
    """Integer matrix that is a product of two integer factors (rank <= ``rank``)."""
    if rank == 0:
        return np.zeros((rows, cols), dtype=np.int64)
    return rng.integers(lo, hi, (rows, rank)) @ rng.integers(lo, hi, (rank, cols))


def random_net(rng, d, D, widths, act="tanh", scale=1.0):
    arch = Architecture(d, D, tuple(widths), act)
    return arch, ParamVec.random(arch, rng, scale)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# lines collected by test_acceptance.py and printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
