import numpy as np
import pytest

from irmz.states import classical_state, custom_state, squeezed_vacuum, twin_fock


def random_mixed_state(n_max: int, seed: int):
    rng = np.random.default_rng(seed)
    k = n_max + 1
    g = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    rho = g @ g.conj().T
    return custom_state(rho / np.trace(rho).real)


def random_pure_state(n_max: int, seed: int):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=n_max + 1) + 1j * rng.normal(size=n_max + 1)
    c /= np.linalg.norm(c)
    return custom_state(np.outer(c, c.conj()))


def random_diagonal_state(n_max: int, seed: int):
    rng = np.random.default_rng(seed)
    return classical_state(rng.dirichlet(np.ones(n_max + 1)))


def small_donors(n_max: int = 4) -> list:
    """One member of each donor family with per-mode occupation at most ``n_max``."""
    return [
        twin_fock(2 * n_max),
        twin_fock(2),
        squeezed_vacuum(0.4, tail_tol=0.02, hard_cap=n_max),
        random_diagonal_state(n_max, 3),
        random_pure_state(n_max, 4),
        random_mixed_state(n_max, 5),
    ]


@pytest.fixture
def donors():
    return small_donors()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
