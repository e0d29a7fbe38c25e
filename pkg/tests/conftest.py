import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def naive_step(X, kind):
    """Scalar triple-loop reference for the homophily and influence maps."""
    n = len(X)
    out = [[0.0] * n for _ in range(n)]
    for i in range(n):
        norm = sum(abs(X[i][k]) for k in range(n))
        for j in range(n):
            acc = 0.0
            for k in range(n):
                acc += X[i][k] * (X[j][k] if kind == "hbm" else X[k][j])
            out[i][j] = acc / norm
    return np.array(out)


def pytest_terminal_summary(terminalreporter):
    import sys

    lines = []
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance") and hasattr(mod, "REPORT"):
            lines = mod.REPORT
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
