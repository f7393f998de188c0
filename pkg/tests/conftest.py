import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from deaselect.data import Dataset

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

THIRD = 1.0 / 3.0


def nonconcave_dataset() -> Dataset:
    """5 DMUs, one unit input, four outputs; v(p) is not concave in p."""
    y = [
        [0.6, THIRD, THIRD, THIRD],
        [0.7, THIRD, THIRD, THIRD],
        [0.8, 1.0, 0.0, 0.0],
        [0.9, 0.0, 1.0, 0.0],
        [1.0, 0.0, 0.0, 1.0],
    ]
    return Dataset.from_arrays(np.ones((5, 1)), y)


def nested_dataset() -> Dataset:
    """4 DMUs, one unit input, three outputs; the nested greedy misses the optimum."""
    y = [[0.85, 0.2, 0.8], [0.95, 0.4, 0.6], [0.9, 0.6, 0.4], [1.0, 0.8, 0.2]]
    return Dataset.from_arrays(np.ones((4, 1)), y)


def random_instance(rng: np.random.Generator, K=(3, 8), I=(1, 2), O=(3, 6)) -> Dataset:  # noqa: E741
    """Uniform positive data in the oracle-corpus size range."""
    k = int(rng.integers(K[0], K[1] + 1))
    i = int(rng.integers(I[0], I[1] + 1))
    o = int(rng.integers(O[0], O[1] + 1))
    return Dataset.from_arrays(rng.uniform(0.1, 1.0, (k, i)), rng.uniform(0.1, 1.0, (k, o)))


def corpus(n: int, seed: int = 2024) -> list[Dataset]:
    rng = np.random.default_rng(seed)
    return [random_instance(rng) for _ in range(n)]


@pytest.fixture
def ce1() -> Dataset:
    return nonconcave_dataset()


@pytest.fixture
def ce2() -> Dataset:
    return nested_dataset()


# acceptance results, one line per criterion, printed after the run
ACCEPTANCE: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
