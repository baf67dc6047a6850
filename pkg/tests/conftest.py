import pytest

from popdisp.analysis import run_sweep
from popdisp.scenario import builtin_example

# (criterion number, PASS/FAIL line) collected by the acceptance suite
ACCEPTANCE_LINES: list[tuple[int, str]] = []


@pytest.fixture(scope="session")
def sweep_cache():
    """Default-grid sweeps shared across the session: (id, lambda, n_cells) -> (table, results, fields)."""
    cache = {}

    def get(example_id, lam=None, n_cells=None):
        key = (example_id, lam, n_cells)
        if key not in cache:
            sc = builtin_example(example_id, lam=lam)
            if n_cells is not None:
                sc = sc.with_grid(n_cells)
            cache[key] = run_sweep(sc)
        return cache[key]
    return get


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
