import numpy as np
import pytest


@pytest.fixture(autouse=True, scope="session")
def _null_table_cache(tmp_path_factory):
    # keep simulated null tables out of the user's cache directory
    mp = pytest.MonkeyPatch()
    mp.setenv("ELLSYM_CACHE", str(tmp_path_factory.mktemp("ellsym-cache")))
    yield
    mp.undo()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_spd(rng, d, cond=10.0):
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    w = np.exp(rng.uniform(0, np.log(cond), size=d))
    return (q * w) @ q.T


def random_invertible(rng, d):
    while True:
        A = rng.standard_normal((d, d))
        if abs(np.linalg.det(A)) > 0.2:
            return A


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
