import numpy as np
import pytest

from mfrnn.model import NetConfig, WeightSet


def random_net(rng, n, d=1, L=0, R=10.0, scale_hh=1.0):
    cfg = NetConfig(n=n, d=d, L=L, R=R)
    return WeightSet(rng.normal(size=(n, d)), scale_hh * rng.normal(size=(n, n)),
                     rng.normal(size=n), cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


# acceptance verdict lines, filled by tests/test_acceptance.py
VERDICTS = {}


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(VERDICTS):
        ok, detail = VERDICTS[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
