import numpy as np
import pytest

from lpalab.graph import GnpParams, sample_gnp


@pytest.fixture(scope="session")
def dense_graph():
    # n = 2000, np = n^0.7: the regime the coupling statements are about
    n = 2000
    return sample_gnp(GnpParams(n, n**0.7 / n, 11))


def random_small_graph(n, p, seed):
    return sample_gnp(GnpParams(n, p, seed))


@pytest.fixture
def rng():
    return np.random.default_rng(0)


_CRITERIA = pytest.StashKey[dict]()


@pytest.fixture
def record_criterion(request):
    """Register the outcome of an acceptance criterion for the end-of-run summary."""
    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        request.config.stash.setdefault(_CRITERIA, {})[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
