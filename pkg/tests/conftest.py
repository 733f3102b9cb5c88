import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from dualerg.core import StateSpace  # noqa: E402
from dualerg.kernels import KernelOperator  # noqa: E402

# filled by test_acceptance.py: criterion number -> (passed, detail)
ACCEPTANCE = {}


def random_stochastic(rng, n, sparsity=0.0):
    m = rng.random((n, n))
    if sparsity:
        m[rng.random((n, n)) < sparsity] = 0.0
        m[np.arange(n), rng.integers(0, n, n)] += 0.1
    return m / m.sum(axis=1, keepdims=True)


def random_operator(rng, n):
    space = StateSpace.discrete([f"s{i}" for i in range(n)])
    return KernelOperator(space, random_stochastic(rng, n))


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
