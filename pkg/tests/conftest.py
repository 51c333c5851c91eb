import numpy as np
import pytest

from obslae import cases, solver
from obslae.problems import RANK_CLASSES, random_problem, random_sizes
from obslae.rng import Lcg

_acceptance_lines: list[str] = []


def random_instance(seed: int, rank_class: str | None = None, max_dim: int = 30, solvable=None):
    """Seeded (problem, m, rng) with the rank class cycling through all three."""
    rng = Lcg(seed)
    rank_class = rank_class or RANK_CLASSES[seed % 3]
    p, q = random_sizes(rng, rank_class, max_dim)
    g, y, m = random_problem(rng, p, q, rank_class, solvable)
    return solver.LaeProblem(g, y), m, rng


def stable_plant(rng, n_s, n_i, n_o, horizon, relative_two=False, disturbed=True):
    from obslae.ilc import LtiPlant

    a = rng.uniform(-1.0, 1.0, (n_s, n_s))
    a *= 0.9 / np.abs(a).sum(axis=1).max()
    b = rng.uniform(-1.0, 1.0, (n_s, n_i))
    c = rng.uniform(-1.0, 1.0, (n_o, n_s))
    if relative_two and n_s >= 2:
        # Put every input direction along one vector and make C blind to it.
        direction = rng.uniform(-1.0, 1.0, n_s)
        b = np.outer(direction, rng.uniform(0.5, 1.0, n_i))
        c = c - np.outer(c @ direction, direction) / (direction @ direction)
    x0 = rng.uniform(-1.0, 1.0, n_s)
    w = rng.uniform(-0.1, 0.1, (horizon + n_s, n_s)) if disturbed else None
    v = rng.uniform(-0.1, 0.1, (horizon + n_s + 1, n_o)) if disturbed else None
    return LtiPlant(a, b, c, x0, horizon, w=w, v=v)


@pytest.fixture(scope="session")
def demo_problems():
    return (
        solver.LaeProblem(cases.DEMO_G, cases.DEMO_Y_SOLVABLE),
        solver.LaeProblem(cases.DEMO_G, cases.DEMO_Y_UNSOLVABLE),
    )


@pytest.fixture(scope="session")
def report():
    def record(label: str, passed: bool, detail: str) -> None:
        _acceptance_lines.append(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
