from pathlib import Path

import numpy as np
import pytest

from evofeat.dataset import Dataset, Task

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def xor_data():
    """Two classes separated by the sign of x1*x2; two noise columns."""
    r = np.random.default_rng(7)
    X = r.normal(size=(160, 4))
    y = (X[:, 0] * X[:, 1] > 0).astype(np.int64)
    return Dataset(X, y, Task.CLASSIFICATION)


@pytest.fixture
def linear_data():
    r = np.random.default_rng(8)
    X = r.uniform(-2, 2, size=(120, 3))
    y = 3.0 * X[:, 0] - X[:, 2] + 0.5
    return Dataset(X, y, Task.REGRESSION)


def write_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(str(c) for c in r) for r in rows]
    Path(path).write_text("\n".join(lines) + "\n")
    return path


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
