import numpy as np
import pytest

from levyhunt.specfile import fixture_path, load_fixture

ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    """Log one acceptance line; it is echoed now and in the terminal summary."""
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fixture_file():
    return lambda name: str(fixture_path(name))


@pytest.fixture
def triplet_fixture():
    return lambda name: load_fixture(name).source


def random_psd(rng, n, rank=None, lam_min=0.0):
    """``G^T G`` of the requested rank, optionally shifted to lift the spectrum."""
    rank = n if rank is None else rank
    g = rng.normal(size=(rank, n))
    return g.T @ g + lam_min * np.eye(n)


def finite_offrange_triplet(rng, solvable):
    """Random degenerate triplet with finite off-range atomic mass and prescribed (S).

    ``b'`` is drawn in ``range(sqrt(A))`` and, for unsolvable cases, pushed
    off it along the null space; ``a`` is then chosen to produce that ``b'``.
    """
    from levyhunt.triplet import Atomic, LevyTriplet

    n = int(rng.integers(2, 5))
    r = int(rng.integers(0, n))
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    lam = np.zeros(n)
    lam[:r] = rng.uniform(0.2, 3.0, r)
    A = Q @ np.diag(lam) @ Q.T
    A = 0.5 * (A + A.T)
    range_basis, null_basis = Q[:, :r].T, Q[:, r:].T
    atoms, masses = [], []
    for _ in range(int(rng.integers(1, 4))):
        atoms.append(rng.normal(size=n) * rng.uniform(0.2, 2.0))
        masses.append(rng.uniform(0.2, 2.0))
    for _ in range(int(rng.integers(0, 3)) if r else 0):
        atoms.append(rng.normal(size=r) @ range_basis * rng.uniform(0.2, 2.0))
        masses.append(rng.uniform(0.2, 2.0))
    mu = Atomic(atoms, masses)
    bprime = rng.normal(size=r) @ range_basis if r else np.zeros(n)
    if not solvable:
        w = rng.normal(size=n - r) @ null_basis
        bprime = bprime + w / np.linalg.norm(w) * rng.uniform(0.2, 3.0)
    # atoms off the range with |x| < 1 enter b'; in-range ones do not matter for (S)
    x = mu.locations
    off = np.linalg.norm(x @ null_basis.T, axis=1) > 1e-9 * (1 + np.linalg.norm(x, axis=1))
    small = off & (np.linalg.norm(x, axis=1) < 1)
    comp = (mu.masses[small, None] * x[small]).sum(axis=0)
    return LevyTriplet(-(bprime + comp), A, mu)
