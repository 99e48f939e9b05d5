import pytest

from schwinger_qse.model import ModelParams, build_gauged_hamiltonian, neel_reference


@pytest.fixture(scope="session")
def sector():
    """Factory for (operator, Neel state) in the balanced sector, cached per parameter set."""
    cache = {}

    def get(N, mu=1.5, x=0.5):
        key = (N, mu, x)
        if key not in cache:
            op = build_gauged_hamiltonian(ModelParams(N, mu, x), "balanced")
            cache[key] = (op, neel_reference(N, op.basis))
        return cache[key]

    return get


_ACCEPTANCE: dict = {}


@pytest.fixture
def report():
    """Record and print one pass/fail line for an acceptance criterion."""

    def emit(n, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
        _ACCEPTANCE[n] = line
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
