import itertools

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def loop_unfold(t, n):
    """Reference unfolding built entry by entry from the column index map."""
    dims = t.shape
    other = [k for k in range(t.ndim) if k != n]
    cols = int(np.prod([dims[k] for k in other]))
    out = np.zeros((dims[n], cols))
    for idx in itertools.product(*[range(d) for d in dims]):
        j, stride = 0, 1
        for k in other:
            j += idx[k] * stride
            stride *= dims[k]
        out[idx[n], j] = t[idx]
    return out


def random_orthonormal(rng, rows, cols):
    q, _ = np.linalg.qr(rng.standard_normal((rows, cols)))
    return q


def exact_rank_tensor(rng, dims, ranks):
    core = rng.standard_normal(ranks)
    t = core
    for n, (d, r) in enumerate(zip(dims, ranks)):
        t = np.moveaxis(np.tensordot(rng.standard_normal((d, r)), t, axes=(1, n)), 0, n)
    return t


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
